//! The plain CSV layout shared by every exported curve: an optional
//! `# key=value,...` line, a fixed header, then numeric rows.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::str::FromStr;

use crate::error::{Error, Result};

fn bad(line: usize, message: impl Into<String>) -> Error {
    Error::Config { line, message: message.into() }
}

pub(crate) fn meta_line(fields: &[(&str, &dyn Display)]) -> String {
    let body: Vec<String> = fields.iter().map(|(k, v)| format!("{k}={v}")).collect();
    format!("# {}\n", body.join(","))
}

pub(crate) struct Table<'a> {
    meta: BTreeMap<&'a str, &'a str>,
    meta_at: usize,
    /// `(line number, columns)`
    pub rows: Vec<(usize, Vec<&'a str>)>,
}

impl<'a> Table<'a> {
    pub fn parse(text: &'a str, header: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(k, l)| (k + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty())
            .peekable();
        let mut meta = BTreeMap::new();
        let mut meta_at = 0;
        if let Some(&(k, l)) = lines.peek() {
            if let Some(body) = l.strip_prefix('#') {
                meta_at = k;
                for field in body.split(',') {
                    let (key, value) = field.trim().split_once('=').ok_or_else(|| bad(k, "bad metadata field"))?;
                    if meta.insert(key, value).is_some() {
                        return Err(bad(k, format!("duplicate metadata key {key}")));
                    }
                }
                lines.next();
            }
        }
        match lines.next() {
            Some((_, h)) if h == header => {}
            Some((k, _)) => return Err(bad(k, format!("expected header `{header}`"))),
            None => return Err(bad(1, "missing header")),
        }
        let width = header.split(',').count();
        let mut rows = Vec::new();
        for (k, line) in lines {
            let cols: Vec<&str> = line.split(',').map(str::trim).collect();
            if cols.len() != width {
                return Err(bad(k, format!("expected {width} columns, found {}", cols.len())));
            }
            rows.push((k, cols));
        }
        Ok(Self { meta, meta_at, rows })
    }

    pub fn meta<T: FromStr>(&self, key: &str) -> Result<T> {
        let line = self.meta_at.max(1);
        let v = self.meta.get(key).ok_or_else(|| bad(line, format!("missing metadata key {key}")))?;
        v.parse().map_err(|_| bad(line, format!("bad value for {key}")))
    }
}

pub(crate) fn cell<T: FromStr>(line: usize, s: &str) -> Result<T> {
    s.parse().map_err(|_| bad(line, format!("bad number `{s}`")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn meta_and_rows() {
        let text = format!("{}a,b\n1,2\n\n3.5,4\n", meta_line(&[("n", &7), ("x", &0.25)]));
        let t = Table::parse(&text, "a,b").unwrap();
        assert_eq!(t.meta::<usize>("n").unwrap(), 7);
        assert_eq!(t.meta::<f64>("x").unwrap(), 0.25);
        assert!(t.meta::<f64>("y").is_err());
        assert_eq!(t.rows.len(), 2);
        assert_eq!(t.rows[1].0, 5);
        assert_eq!(cell::<f64>(5, t.rows[1].1[0]).unwrap(), 3.5);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let e = Table::parse("a,b\n1\n", "a,b").err().unwrap();
        assert!(e.to_string().contains("line 2"), "{e}");
        assert!(Table::parse("x,y\n", "a,b").is_err());
        assert!(Table::parse("# k=1,k=2\na,b\n", "a,b").is_err());
    }
}
