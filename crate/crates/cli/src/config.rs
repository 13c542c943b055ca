use std::path::{Path, PathBuf};

use bsqec::{
    log_grid, BoundMode, LogicalState, Method, NoiseParams, Pauli1, ProtocolSpec, SamplerSettings,
};
use clap::Args;
use serde::{Deserialize, Serialize};

use crate::Failure;

/// Settings accepted both as flags and as keys of the config file.
#[derive(Args, Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Options {
    /// TOML file with any of these settings; flags take precedence
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// Code distance (odd, at least 3)
    #[arg(long, short = 'd')]
    pub distance: Option<usize>,
    #[arg(long, value_parser = ["steane", "shor-weak", "shor-strong"])]
    pub method: Option<String>,
    /// Verification checks per GHZ state (Steane only)
    #[arg(long, short = 'v')]
    pub verifications: Option<usize>,
    /// Logical input state
    #[arg(long, value_parser = ["zero", "plus"])]
    pub init: Option<String>,
    #[arg(long)]
    pub p_min: Option<f64>,
    #[arg(long)]
    pub p_max: Option<f64>,
    /// Points of the logarithmic p grid
    #[arg(long)]
    pub p_points: Option<usize>,
    /// Explicit p values, overriding the grid
    #[arg(long, value_delimiter = ',')]
    pub p_list: Option<Vec<f64>>,
    /// Measurement error rates; every p is paired with every q
    #[arg(long, value_delimiter = ',')]
    pub q_list: Option<Vec<f64>>,
    /// Largest total fault weight sampled
    #[arg(long)]
    pub max_weight: Option<usize>,
    /// Monte Carlo samples per subset
    #[arg(long)]
    pub samples: Option<u64>,
    /// Subsets with at most this many configurations are enumerated
    #[arg(long)]
    pub exhaustive_cap: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads; never changes the output
    #[arg(long)]
    pub workers: Option<usize>,
    /// Output file; standard output when absent
    #[arg(long, short = 'o')]
    pub out: Option<PathBuf>,
    /// How subset estimates are combined
    #[arg(long, value_parser = ["global", "raw"])]
    pub bound_mode: Option<String>,
    /// Highest power of p in the coefficient table
    #[arg(long)]
    pub max_order: Option<usize>,
    /// Largest number of faults the search considers
    #[arg(long)]
    pub s_max: Option<usize>,
    /// Pauli type of the dumped corrections
    #[arg(long, value_parser = ["x", "z"])]
    pub correction: Option<String>,
}

impl Options {
    /// Fills unset flags from the config file named by `--config`.
    pub fn merged(self) -> Result<Options, Failure> {
        let Some(path) = &self.config else {
            return Ok(self);
        };
        let file = load(path)?;
        Ok(Options {
            config: self.config,
            distance: self.distance.or(file.distance),
            method: self.method.or(file.method),
            verifications: self.verifications.or(file.verifications),
            init: self.init.or(file.init),
            p_min: self.p_min.or(file.p_min),
            p_max: self.p_max.or(file.p_max),
            p_points: self.p_points.or(file.p_points),
            p_list: self.p_list.or(file.p_list),
            q_list: self.q_list.or(file.q_list),
            max_weight: self.max_weight.or(file.max_weight),
            samples: self.samples.or(file.samples),
            exhaustive_cap: self.exhaustive_cap.or(file.exhaustive_cap),
            seed: self.seed.or(file.seed),
            workers: self.workers.or(file.workers),
            out: self.out.or(file.out),
            bound_mode: self.bound_mode.or(file.bound_mode),
            max_order: self.max_order.or(file.max_order),
            s_max: self.s_max.or(file.s_max),
            correction: self.correction.or(file.correction),
        })
    }
}

fn load(path: &Path) -> Result<Options, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::io(path, e))?;
    toml::from_str(&text)
        .map_err(|e| Failure::config(format!("{}: {}", path.display(), e.message())))
}

/// Fully resolved settings; recorded in every output manifest.
#[derive(Clone, Debug, Serialize)]
pub struct Config {
    pub distance: usize,
    pub method: Method,
    pub verifications: usize,
    pub init: LogicalState,
    pub p: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q: Option<Vec<f64>>,
    pub max_weight: usize,
    pub samples: u64,
    pub exhaustive_cap: u64,
    pub seed: u64,
    pub bound_mode: BoundMode,
    pub max_order: usize,
    pub s_max: usize,
    pub correction: char,
    #[serde(skip)]
    pub workers: Option<usize>,
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

impl Config {
    pub fn resolve(o: Options) -> Result<Config, Failure> {
        let o = o.merged()?;
        let distance = o.distance.unwrap_or(3);
        let method: Method = o.method.as_deref().unwrap_or("steane").parse()?;
        let verifications = match (method, o.verifications) {
            (Method::Steane, Some(v)) => v,
            (Method::Steane, None) => default_checks(distance),
            (_, _) => 0,
        };
        let init: LogicalState = o.init.as_deref().unwrap_or("plus").parse()?;
        let p = match o.p_list {
            Some(list) => list,
            None => {
                let (min, max) = (o.p_min.unwrap_or(1e-4), o.p_max.unwrap_or(1e-2));
                if !(min > 0.0 && max >= min) {
                    return Err(Failure::config(format!(
                        "need 0 < p-min <= p-max, got {min} and {max}"
                    )));
                }
                log_grid(min, max, o.p_points.unwrap_or(9))
            }
        };
        if p.is_empty() || o.q_list.as_ref().is_some_and(|q| q.is_empty()) {
            return Err(Failure::config("noise grids must not be empty".into()));
        }
        let max_weight = o.max_weight.unwrap_or(10);
        if max_weight == 0 {
            return Err(Failure::config("max-weight must be at least 1".into()));
        }
        let bound_mode = match o.bound_mode.as_deref().unwrap_or("global") {
            "global" => BoundMode::Global,
            "raw" => BoundMode::Raw,
            other => return Err(Failure::config(format!("unknown bound mode {other:?}"))),
        };
        let correction = match o.correction.as_deref().unwrap_or("z") {
            "x" => 'x',
            "z" => 'z',
            other => {
                return Err(Failure::config(format!(
                    "unknown correction type {other:?}"
                )))
            }
        };
        let defaults = SamplerSettings::default();
        Ok(Config {
            distance,
            method,
            verifications,
            init,
            p,
            q: o.q_list,
            max_weight,
            samples: o.samples.unwrap_or(defaults.samples),
            exhaustive_cap: o.exhaustive_cap.unwrap_or(defaults.exhaustive_cap as u64),
            seed: o.seed.unwrap_or(0),
            bound_mode,
            max_order: o.max_order.unwrap_or((distance + 3) / 2),
            s_max: o.s_max.unwrap_or((distance.saturating_sub(3) / 2).max(1)),
            correction,
            workers: o.workers,
            out: o.out,
        })
    }

    pub fn spec(&self) -> ProtocolSpec {
        let mut spec = ProtocolSpec::steane(self.distance, self.verifications, self.init);
        spec.method = self.method;
        spec
    }

    pub fn sampler(&self) -> SamplerSettings {
        SamplerSettings {
            samples: self.samples,
            exhaustive_cap: self.exhaustive_cap as u128,
            ..Default::default()
        }
    }

    pub fn noise(&self) -> Result<Vec<NoiseParams>, Failure> {
        let mut out = Vec::new();
        for &p in &self.p {
            match &self.q {
                None => out.push(NoiseParams::coupled(p)?),
                Some(qs) => {
                    for &q in qs {
                        out.push(NoiseParams::independent(p, q)?);
                    }
                }
            }
        }
        Ok(out)
    }

    pub fn correction_type(&self) -> Pauli1 {
        if self.correction == 'x' {
            Pauli1::X
        } else {
            Pauli1::Z
        }
    }
}

/// Smallest number of checks that keeps the GHZ preparation fault tolerant.
fn default_checks(d: usize) -> usize {
    match d {
        3 => 0,
        5 => 1,
        7 => 3,
        _ => 4,
    }
}
