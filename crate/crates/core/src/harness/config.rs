//! Experiment configuration: a flat `key = value` text file plus CLI
//! overrides.
//!
//! Grammar: one `key = value` pair per line; `#` starts a comment; blank
//! lines are ignored. Unknown keys are rejected. Keys:
//!
//! ```text
//! m, n            system size (generated systems)
//! system_file     path to a saved system (alternative to m/n)
//! seed            master seed (default 0)
//! beta            corruption fraction (default 0)
//! model           random-gaussian | constant-offset | sign-flip | aligned-cluster
//! scale           gaussian corruption scale (default 10 * ||b_true||_inf)
//! value           constant-offset value (default 10)
//! strategies      comma list: uniform | quantile | sampled-quantile | motzkin | powered
//! q, t, p         shared strategy parameters (defaults 0.85, m, 2)
//! trials          number of trials (default 1)
//! max_iters       iteration budget per run (default 10000)
//! stop_tol        oracle-mode stop on ||x_k - x_true|| (default 0 = budget mode)
//! out             output directory
//! lemma1, lemma2, lemma3, assembled    true | false   (default true)
//! theorem_step    true | false | auto                 (default auto)
//! sv_rate         true | false                        (default false)
//! verify_iters    iterate budget for verification runs (default max_iters)
//! ```

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::corruption::CorruptionModel;
use crate::error::{Error, Result};
use crate::solvers::SelectionStrategy;

/// Where the system comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum SystemSource {
    Generate { m: usize, n: usize },
    File(PathBuf),
}

/// Tri-state for the theorem-step check.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TheoremStepFlag {
    /// Run it; error out if the exact certificate is infeasible.
    On,
    Off,
    /// Run it exactly when exact enumeration is feasible.
    Auto,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyFlags {
    pub lemma1: bool,
    pub lemma2: bool,
    pub lemma3: bool,
    pub assembled: bool,
    pub theorem_step: TheoremStepFlag,
    pub sv_rate: bool,
}

impl Default for VerifyFlags {
    fn default() -> Self {
        VerifyFlags {
            lemma1: true,
            lemma2: true,
            lemma3: true,
            assembled: true,
            theorem_step: TheoremStepFlag::Auto,
            sv_rate: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub source: SystemSource,
    pub master_seed: u64,
    pub beta: f64,
    pub model: CorruptionModel,
    pub strategies: Vec<SelectionStrategy>,
    pub q: f64,
    pub t: Option<usize>,
    pub p: f64,
    pub trials: usize,
    pub max_iters: usize,
    pub stop_tol: f64,
    pub out_dir: Option<PathBuf>,
    pub flags: VerifyFlags,
    pub verify_iters: Option<usize>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            source: SystemSource::Generate { m: 100, n: 10 },
            master_seed: 0,
            beta: 0.0,
            model: CorruptionModel::RandomGaussian { scale: None },
            strategies: vec![SelectionStrategy::Quantile { q: 0.85 }],
            q: 0.85,
            t: None,
            p: 2.0,
            trials: 1,
            max_iters: 10_000,
            stop_tol: 0.0,
            out_dir: None,
            flags: VerifyFlags::default(),
            verify_iters: None,
        }
    }
}

fn parse_bool(key: &str, v: &str) -> Result<bool> {
    match v {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(Error::InvalidConfig(format!("{key} must be true or false, got '{v}'"))),
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse().map_err(|_| Error::InvalidConfig(format!("bad value '{v}' for {key}")))
}

/// Parse a strategy name using the shared (q, t, p) parameters.
pub fn strategy_from_name(
    name: &str,
    q: f64,
    t: Option<usize>,
    p: f64,
    m_hint: Option<usize>,
) -> Result<SelectionStrategy> {
    match name.trim() {
        "uniform" => Ok(SelectionStrategy::Uniform),
        "quantile" => Ok(SelectionStrategy::Quantile { q }),
        "sampled-quantile" | "sampled_quantile" => {
            let t = t.or(m_hint).ok_or_else(|| {
                Error::InvalidConfig("sampled-quantile needs t (or a generated m)".into())
            })?;
            Ok(SelectionStrategy::SampledQuantile { q, t })
        }
        "motzkin" => Ok(SelectionStrategy::Motzkin),
        "powered" => Ok(SelectionStrategy::Powered { p }),
        other => Err(Error::InvalidConfig(format!("unknown strategy '{other}'"))),
    }
}

pub fn model_from_name(name: &str, scale: Option<f64>, value: f64) -> Result<CorruptionModel> {
    match name.trim() {
        "random-gaussian" | "random_gaussian" => Ok(CorruptionModel::RandomGaussian { scale }),
        "constant-offset" | "constant_offset" => Ok(CorruptionModel::ConstantOffset { value }),
        "sign-flip" | "sign_flip" => Ok(CorruptionModel::SignFlip),
        "aligned-cluster" | "aligned_cluster" => Ok(CorruptionModel::AlignedCluster),
        other => Err(Error::InvalidConfig(format!("unknown corruption model '{other}'"))),
    }
}

impl ExperimentConfig {
    /// Parse the flat key-value grammar above.
    pub fn parse_str(text: &str) -> Result<Self> {
        let mut kv: BTreeMap<String, String> = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return Err(Error::ParseError {
                    line: lineno + 1,
                    msg: format!("expected 'key = value', got '{line}'"),
                });
            };
            let key = k.trim().to_string();
            if kv.insert(key.clone(), v.trim().to_string()).is_some() {
                return Err(Error::ParseError {
                    line: lineno + 1,
                    msg: format!("duplicate key '{key}'"),
                });
            }
        }
        Self::from_pairs(&kv)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse_str(&text)
    }

    fn from_pairs(kv: &BTreeMap<String, String>) -> Result<Self> {
        let mut cfg = ExperimentConfig::default();
        let mut m: Option<usize> = None;
        let mut n: Option<usize> = None;
        let mut system_file: Option<PathBuf> = None;
        let mut strategies_raw: Option<String> = None;
        let mut scale: Option<f64> = None;
        let mut value: f64 = 10.0;
        let mut model_name = "random-gaussian".to_string();

        for (key, v) in kv {
            match key.as_str() {
                "m" => m = Some(parse_num(key, v)?),
                "n" => n = Some(parse_num(key, v)?),
                "system_file" => system_file = Some(PathBuf::from(v)),
                "seed" => cfg.master_seed = parse_num(key, v)?,
                "beta" => cfg.beta = parse_num(key, v)?,
                "model" => model_name = v.clone(),
                "scale" => scale = Some(parse_num(key, v)?),
                "value" => value = parse_num(key, v)?,
                "strategies" => strategies_raw = Some(v.clone()),
                "q" => cfg.q = parse_num(key, v)?,
                "t" => cfg.t = Some(parse_num(key, v)?),
                "p" => cfg.p = parse_num(key, v)?,
                "trials" => cfg.trials = parse_num(key, v)?,
                "max_iters" => cfg.max_iters = parse_num(key, v)?,
                "stop_tol" => cfg.stop_tol = parse_num(key, v)?,
                "out" => cfg.out_dir = Some(PathBuf::from(v)),
                "lemma1" => cfg.flags.lemma1 = parse_bool(key, v)?,
                "lemma2" => cfg.flags.lemma2 = parse_bool(key, v)?,
                "lemma3" => cfg.flags.lemma3 = parse_bool(key, v)?,
                "assembled" => cfg.flags.assembled = parse_bool(key, v)?,
                "theorem_step" => {
                    cfg.flags.theorem_step = match v.as_str() {
                        "auto" => TheoremStepFlag::Auto,
                        _ => {
                            if parse_bool(key, v)? {
                                TheoremStepFlag::On
                            } else {
                                TheoremStepFlag::Off
                            }
                        }
                    }
                }
                "sv_rate" => cfg.flags.sv_rate = parse_bool(key, v)?,
                "verify_iters" => cfg.verify_iters = Some(parse_num(key, v)?),
                other => {
                    return Err(Error::InvalidConfig(format!("unknown config key '{other}'")));
                }
            }
        }

        cfg.source = match (system_file, m, n) {
            (Some(path), None, None) => SystemSource::File(path),
            (None, Some(m), Some(n)) => SystemSource::Generate { m, n },
            (None, None, None) => cfg.source,
            _ => {
                return Err(Error::InvalidConfig(
                    "give either system_file or both m and n".into(),
                ))
            }
        };
        cfg.model = model_from_name(&model_name, scale, value)?;
        let m_hint = match cfg.source {
            SystemSource::Generate { m, .. } => Some(m),
            SystemSource::File(_) => None,
        };
        if let Some(raw) = strategies_raw {
            cfg.strategies = raw
                .split(',')
                .map(|s| strategy_from_name(s, cfg.q, cfg.t, cfg.p, m_hint))
                .collect::<Result<_>>()?;
        } else {
            cfg.strategies = vec![SelectionStrategy::Quantile { q: cfg.q }];
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::InvalidConfig("trials must be >= 1".into()));
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidConfig("max_iters must be >= 1".into()));
        }
        if !(0.0..1.0).contains(&self.beta) {
            return Err(Error::BetaOutOfRange(self.beta));
        }
        if !(self.q > 0.0 && self.q < 1.0) {
            return Err(Error::InvalidConfig(format!("q = {} outside (0, 1)", self.q)));
        }
        if self.strategies.is_empty() {
            return Err(Error::InvalidConfig("at least one strategy required".into()));
        }
        if self.flags.sv_rate && self.beta > 0.0 {
            return Err(Error::InvalidConfig(
                "sv_rate checks the uncorrupted rate bound; it needs beta = 0".into(),
            ));
        }
        if self.flags.sv_rate && self.trials < 2 {
            return Err(Error::InvalidConfig(
                "sv_rate is a Monte Carlo band check; it needs trials >= 2".into(),
            ));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_full_config() {
        let text = "\
# comment
m = 200
n = 10
seed = 7
beta = 0.05
model = sign-flip
strategies = uniform, quantile, motzkin
q = 0.8
trials = 3
max_iters = 500
theorem_step = auto
sv_rate = false
";
        let cfg = ExperimentConfig::parse_str(text).unwrap();
        assert_eq!(cfg.source, SystemSource::Generate { m: 200, n: 10 });
        assert_eq!(cfg.master_seed, 7);
        assert_eq!(cfg.beta, 0.05);
        assert_eq!(cfg.model, CorruptionModel::SignFlip);
        assert_eq!(cfg.strategies.len(), 3);
        assert_eq!(cfg.strategies[1], SelectionStrategy::Quantile { q: 0.8 });
        assert_eq!(cfg.trials, 3);
    }

    #[test]
    fn rejects_unknown_keys_and_bad_lines() {
        assert!(matches!(
            ExperimentConfig::parse_str("bogus_key = 3\n"),
            Err(Error::InvalidConfig(_))
        ));
        assert!(matches!(
            ExperimentConfig::parse_str("just words\n"),
            Err(Error::ParseError { line: 1, .. })
        ));
        assert!(matches!(
            ExperimentConfig::parse_str("m = 10\nm = 11\n"),
            Err(Error::ParseError { line: 2, .. })
        ));
    }

    #[test]
    fn sv_rate_requires_beta_zero() {
        let text = "m = 10\nn = 2\nbeta = 0.1\nsv_rate = true\n";
        assert!(ExperimentConfig::parse_str(text).is_err());
    }

    #[test]
    fn sampled_quantile_defaults_t_to_m() {
        let cfg =
            ExperimentConfig::parse_str("m = 50\nn = 5\nstrategies = sampled-quantile\n").unwrap();
        assert_eq!(cfg.strategies[0], SelectionStrategy::SampledQuantile { q: 0.85, t: 50 });
    }
}
