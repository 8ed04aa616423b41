//! Plain-text experiment configuration.
//!
//! One `key = value` pair per line; `#` starts a comment. Unknown or
//! repeated keys are errors. Exponents accept the token `inf`.
//!
//! ```text
//! n_traders = 1024
//! alpha = 1
//! beta = inf
//! stop_rule = mean_degree 1
//! sizes = 256, 1024, 4096
//! ```

use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::ensemble::{ExperimentConfig, SavingMode, StopRule};
use crate::error::{Error, Result};
use crate::exchange::QssConfig;
use crate::params::{Exponent, InitialWealth, ModelParams};

/// A parsed configuration file. Settings whose defaults scale with the
/// number of traders stay unset until an [`ExperimentConfig`] is built for a
/// particular size, so one file can drive runs at several sizes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub n_traders: usize,
    pub alpha: Exponent,
    pub beta: Exponent,
    pub initial_wealth: InitialWealth,
    pub mean_wealth: f64,
    pub savings: SavingMode,
    pub qss_window: usize,
    pub qss_rel_tol: f64,
    pub qss_sample_stride: Option<u64>,
    pub qss_max_trades: Option<u64>,
    pub n_lambda_sets: usize,
    pub networks_per_set: usize,
    pub stop_rule: StopRule,
    pub checkpoints: Vec<f64>,
    pub master_seed: u64,
    pub bins_per_decade: usize,
    pub inter_network_gap: u64,
    pub max_growth_trades: Option<u64>,
    pub lambda_bins: usize,
    pub export_graphs: usize,
    /// System sizes for multi-size experiments.
    pub sizes: Vec<usize>,
    /// Exponents for sweeps, applied as alpha = beta.
    pub sweep_alphas: Vec<Exponent>,
}

const REQUIRED: [&str; 3] = ["n_traders", "alpha", "beta"];

impl RunConfig {
    fn with_defaults() -> Self {
        Self {
            n_traders: 0,
            alpha: Exponent::Finite(0.0),
            beta: Exponent::Finite(0.0),
            initial_wealth: InitialWealth::Equal,
            mean_wealth: 1.0,
            savings: SavingMode::Quenched,
            qss_window: QssConfig::DEFAULT_WINDOW,
            qss_rel_tol: QssConfig::DEFAULT_REL_TOL,
            qss_sample_stride: None,
            qss_max_trades: None,
            n_lambda_sets: 1,
            networks_per_set: 1,
            stop_rule: StopRule::MeanDegree(1.0),
            checkpoints: Vec::new(),
            master_seed: 0,
            bins_per_decade: ExperimentConfig::DEFAULT_BINS_PER_DECADE,
            inter_network_gap: 0,
            max_growth_trades: None,
            lambda_bins: ExperimentConfig::DEFAULT_LAMBDA_BINS,
            export_graphs: 0,
            sizes: Vec::new(),
            sweep_alphas: Vec::new(),
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        Self::parse_with_overrides(text, &[])
    }

    /// Parses `text`, then applies `key=value` overrides in order. Overrides
    /// may replace keys set in the file.
    pub fn parse_with_overrides(text: &str, overrides: &[String]) -> Result<Self> {
        let mut cfg = Self::with_defaults();
        let mut seen: Vec<String> = Vec::new();
        for (k, raw) in text.lines().enumerate() {
            let line = k + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content.split_once('=').ok_or_else(|| Error::Config {
                line,
                message: format!("expected `key = value`, found `{content}`"),
            })?;
            let key = key.trim();
            if seen.iter().any(|s| s == key) {
                return Err(Error::Config { line, message: format!("duplicate key `{key}`") });
            }
            cfg.apply(key, value.trim()).map_err(|message| Error::Config { line, message })?;
            seen.push(key.to_string());
        }
        for o in overrides {
            let (key, value) = o.split_once('=').ok_or_else(|| Error::Config {
                line: 0,
                message: format!("override `{o}` is not `key=value`"),
            })?;
            let key = key.trim();
            cfg.apply(key, value.trim())
                .map_err(|message| Error::Config { line: 0, message: format!("override `{o}`: {message}") })?;
            if !seen.iter().any(|s| s == key) {
                seen.push(key.to_string());
            }
        }
        for key in REQUIRED {
            if !seen.iter().any(|s| s == key) {
                return Err(Error::Config { line: 0, message: format!("missing required key `{key}`") });
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn apply(&mut self, key: &str, value: &str) -> std::result::Result<(), String> {
        match key {
            "n_traders" => self.n_traders = at_least(num(value)?, 2)?,
            "alpha" => self.alpha = num(value)?,
            "beta" => self.beta = num(value)?,
            "initial_wealth" => self.initial_wealth = num(value)?,
            "mean_wealth" => self.mean_wealth = positive(num(value)?)?,
            "savings" => {
                self.savings = if value == "quenched" {
                    SavingMode::Quenched
                } else {
                    let l: f64 = num(value).map_err(|_| format!("expected `quenched` or a number, found `{value}`"))?;
                    if !(0.0..1.0).contains(&l) {
                        return Err(format!("saving propensity must lie in [0, 1), got {l}"));
                    }
                    SavingMode::Fixed(l)
                }
            }
            "qss_window" => self.qss_window = at_least(num(value)?, 2)?,
            "qss_rel_tol" => self.qss_rel_tol = positive(num(value)?)?,
            "qss_sample_stride" => self.qss_sample_stride = Some(at_least(num(value)?, 1)?),
            "qss_max_trades" => self.qss_max_trades = Some(num(value)?),
            "n_lambda_sets" => self.n_lambda_sets = at_least(num(value)?, 1)?,
            "networks_per_set" => self.networks_per_set = at_least(num(value)?, 1)?,
            "stop_rule" => self.stop_rule = parse_stop_rule(value)?,
            "checkpoints" => self.checkpoints = list(value)?,
            "master_seed" => self.master_seed = num(value)?,
            "bins_per_decade" => self.bins_per_decade = at_least(num(value)?, 1)?,
            "inter_network_gap" => self.inter_network_gap = num(value)?,
            "max_growth_trades" => self.max_growth_trades = Some(at_least(num(value)?, 1)?),
            "lambda_bins" => self.lambda_bins = at_least(num(value)?, 1)?,
            "export_graphs" => self.export_graphs = num(value)?,
            "sizes" => {
                self.sizes = list(value)?;
                for &n in &self.sizes {
                    at_least(n, 2)?;
                }
            }
            "sweep_alphas" => self.sweep_alphas = list(value)?,
            _ => return Err(format!("unknown key `{key}`")),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.experiment()?;
        for &n in &self.sizes {
            self.experiment_for(n, self.alpha, self.beta)?;
        }
        Ok(())
    }

    /// The experiment at the configured size and exponents.
    pub fn experiment(&self) -> Result<ExperimentConfig> {
        self.experiment_for(self.n_traders, self.alpha, self.beta)
    }

    /// This configuration narrowed to one size and exponent pair, with the
    /// multi-point lists dropped. Its text reproduces that single ensemble.
    pub fn point(&self, n: usize, alpha: Exponent, beta: Exponent) -> Self {
        Self { n_traders: n, alpha, beta, sizes: Vec::new(), sweep_alphas: Vec::new(), ..self.clone() }
    }

    pub fn experiment_for(&self, n: usize, alpha: Exponent, beta: Exponent) -> Result<ExperimentConfig> {
        let mut model = ModelParams::new(n, alpha, beta).with_initial_wealth(self.initial_wealth);
        model.mean_wealth = self.mean_wealth;
        model.validate()?;
        let mut cfg = ExperimentConfig::new(model);
        cfg.savings = self.savings;
        cfg.qss.window = self.qss_window;
        cfg.qss.rel_tol = self.qss_rel_tol;
        if let Some(s) = self.qss_sample_stride {
            cfg.qss.sample_stride = s;
        }
        if let Some(m) = self.qss_max_trades {
            cfg.qss.max_trades = m;
        }
        cfg.n_lambda_sets = self.n_lambda_sets;
        cfg.networks_per_set = self.networks_per_set;
        cfg.stop_rule = self.stop_rule;
        cfg.checkpoints = self.checkpoints.clone();
        cfg.master_seed = self.master_seed;
        cfg.bins_per_decade = self.bins_per_decade;
        cfg.inter_network_gap = self.inter_network_gap;
        if let Some(m) = self.max_growth_trades {
            cfg.max_growth_trades = m;
        }
        cfg.lambda_bins = self.lambda_bins;
        cfg.export_graphs = self.export_graphs;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Canonical text: every key in a fixed order, optional keys only when
    /// set. Parsing it gives back an equal configuration.
    pub fn to_config_text(&self) -> String {
        let mut s = String::new();
        let mut put = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        put("n_traders", self.n_traders.to_string());
        put("alpha", self.alpha.to_string());
        put("beta", self.beta.to_string());
        put("initial_wealth", self.initial_wealth.to_string());
        put("mean_wealth", self.mean_wealth.to_string());
        put(
            "savings",
            match self.savings {
                SavingMode::Quenched => "quenched".to_string(),
                SavingMode::Fixed(l) => l.to_string(),
            },
        );
        put("qss_window", self.qss_window.to_string());
        put("qss_rel_tol", self.qss_rel_tol.to_string());
        if let Some(v) = self.qss_sample_stride {
            put("qss_sample_stride", v.to_string());
        }
        if let Some(v) = self.qss_max_trades {
            put("qss_max_trades", v.to_string());
        }
        put("n_lambda_sets", self.n_lambda_sets.to_string());
        put("networks_per_set", self.networks_per_set.to_string());
        put(
            "stop_rule",
            match self.stop_rule {
                StopRule::MeanDegree(k) => format!("mean_degree {k}"),
                StopRule::SingleComponent => "single_component".to_string(),
                StopRule::Clique => "clique".to_string(),
            },
        );
        if !self.checkpoints.is_empty() {
            put("checkpoints", join(&self.checkpoints));
        }
        put("master_seed", self.master_seed.to_string());
        put("bins_per_decade", self.bins_per_decade.to_string());
        put("inter_network_gap", self.inter_network_gap.to_string());
        if let Some(v) = self.max_growth_trades {
            put("max_growth_trades", v.to_string());
        }
        put("lambda_bins", self.lambda_bins.to_string());
        put("export_graphs", self.export_graphs.to_string());
        if !self.sizes.is_empty() {
            put("sizes", join(&self.sizes));
        }
        if !self.sweep_alphas.is_empty() {
            put("sweep_alphas", join(&self.sweep_alphas));
        }
        s
    }
}

/// Parses a configuration file straight into the experiment it describes.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    RunConfig::parse(text)?.experiment()
}

fn num<T: FromStr>(value: &str) -> std::result::Result<T, String>
where
    T::Err: std::fmt::Display,
{
    value.parse::<T>().map_err(|e| format!("bad value `{value}`: {e}"))
}

fn list<T: FromStr>(value: &str) -> std::result::Result<Vec<T>, String>
where
    T::Err: std::fmt::Display,
{
    value.split(',').map(|v| num(v.trim())).collect()
}

fn at_least<T: PartialOrd + std::fmt::Display + Copy>(v: T, min: T) -> std::result::Result<T, String> {
    if v < min {
        return Err(format!("value {v} out of range, must be at least {min}"));
    }
    Ok(v)
}

fn positive(v: f64) -> std::result::Result<f64, String> {
    if !(v > 0.0 && v.is_finite()) {
        return Err(format!("value {v} out of range, must be positive"));
    }
    Ok(v)
}

fn join<T: ToString>(values: &[T]) -> String {
    values.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(", ")
}

fn parse_stop_rule(value: &str) -> std::result::Result<StopRule, String> {
    let mut words = value.split_whitespace();
    match (words.next(), words.next(), words.next()) {
        (Some("mean_degree"), Some(k), None) => Ok(StopRule::MeanDegree(positive(num(k)?)?)),
        (Some("single_component"), None, None) => Ok(StopRule::SingleComponent),
        (Some("clique"), None, None) => Ok(StopRule::Clique),
        _ => Err(format!(
            "expected `mean_degree <k>`, `single_component` or `clique`, found `{value}`"
        )),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const FULL: &str = "\
n_traders = 1024
alpha = 1.5
beta = inf
initial_wealth = uniform
mean_wealth = 2
savings = quenched
qss_window = 50
qss_rel_tol = 0.02
qss_sample_stride = 4096
qss_max_trades = 100000000
n_lambda_sets = 8
networks_per_set = 4
stop_rule = mean_degree 2.5
checkpoints = 0.5, 1, 2
master_seed = 12345678901234567890
bins_per_decade = 12
inter_network_gap = 1000
max_growth_trades = 99999999
lambda_bins = 40
export_graphs = 2
sizes = 256, 1024
sweep_alphas = 0.5, 1, inf
";

    #[test]
    fn infinity_token() {
        let c = parse_config("n_traders = 8\nalpha = inf\nbeta = 0\n").unwrap();
        assert_eq!(c.model.alpha, Exponent::Infinite);
        assert_eq!(c.model.beta, Exponent::Finite(0.0));
    }

    #[test]
    fn single_trader_is_out_of_range() {
        match parse_config("alpha = 0\nn_traders = 1\nbeta = 0\n") {
            Err(Error::Config { line: 2, message }) => assert!(message.contains("out of range"), "{message}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn canonical_text_round_trips_byte_identically() {
        let c = RunConfig::parse(FULL).unwrap();
        assert_eq!(c.to_config_text(), FULL);
        assert_eq!(RunConfig::parse(&c.to_config_text()).unwrap(), c);
        let e = c.experiment().unwrap();
        assert_eq!(e.stop_rule, StopRule::MeanDegree(2.5));
        assert_eq!(e.qss.sample_stride, 4096);
        assert_eq!(e.master_seed, 12345678901234567890);
    }

    #[test]
    fn comments_and_blank_lines() {
        let text = "# header\n\nn_traders = 16 # inline\nalpha=0\n  beta =  1  \n";
        let c = RunConfig::parse(text).unwrap();
        assert_eq!((c.n_traders, c.beta), (16, Exponent::Finite(1.0)));
    }

    #[test]
    fn errors_carry_line_numbers() {
        let line_of = |text: &str| match RunConfig::parse(text) {
            Err(Error::Config { line, .. }) => line,
            other => panic!("{other:?}"),
        };
        assert_eq!(line_of("n_traders = 16\nalpha = 0\nbogus = 3\nbeta = 0\n"), 3);
        assert_eq!(line_of("n_traders = 16\nalpha = -1\n"), 2);
        assert_eq!(line_of("n_traders = 16\nalpha = 0\nalpha = 1\nbeta = 0\n"), 3);
        assert_eq!(line_of("n_traders = 16\nno equals sign\n"), 2);
        assert_eq!(line_of("n_traders = 16\nalpha = 0\n"), 0);
    }

    #[test]
    fn overrides_replace_file_values() {
        let c = RunConfig::parse_with_overrides(
            "n_traders = 16\nalpha = 0\nbeta = 0\n",
            &["alpha=inf".to_string(), "sizes=8,16".to_string()],
        )
        .unwrap();
        assert_eq!(c.alpha, Exponent::Infinite);
        assert_eq!(c.sizes, vec![8, 16]);
        assert!(RunConfig::parse_with_overrides("n_traders = 16\nalpha = 0\nbeta = 0\n", &["nope=1".into()]).is_err());
    }

    #[test]
    fn qss_defaults_follow_size() {
        let c = RunConfig::parse("n_traders = 64\nalpha = 0\nbeta = 0\n").unwrap();
        let e = c.experiment_for(256, Exponent::Finite(1.0), Exponent::Finite(1.0)).unwrap();
        assert_eq!(e.qss, QssConfig::for_traders(256));
    }

    #[test]
    fn point_drops_lists_and_keeps_the_rest() {
        let c = RunConfig::parse(FULL).unwrap();
        let p = c.point(256, Exponent::Finite(0.5), Exponent::Finite(0.5));
        assert!(p.sizes.is_empty() && p.sweep_alphas.is_empty());
        assert_eq!((p.n_traders, p.master_seed, p.stop_rule), (256, c.master_seed, c.stop_rule));
        assert_eq!(
            p.experiment().unwrap(),
            c.experiment_for(256, Exponent::Finite(0.5), Exponent::Finite(0.5)).unwrap()
        );
        assert_eq!(RunConfig::parse(&p.to_config_text()).unwrap(), p);
    }
}
