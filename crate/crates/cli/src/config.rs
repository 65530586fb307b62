//! Run configuration: command-line flags layered over an optional
//! `key = value` file.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, ValueEnum};
use phylonet::network::NetworkMethod;
use phylonet::ModelParams;
use serde::Serialize;

use crate::error::{CliError, Result};

/// Relative `--out` paths are resolved against this directory when set.
pub const OUT_DIR_ENV: &str = "PHYLONET_OUT_DIR";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
    /// Extended Newick; `simulate` only.
    Newick,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Tilted,
    Direct,
}

impl From<Method> for NetworkMethod {
    fn from(m: Method) -> Self {
        match m {
            Method::Tilted => NetworkMethod::Tilted,
            Method::Direct => NetworkMethod::Direct,
        }
    }
}

/// Every setting as an optional override. Filled from flags and from the
/// config file, then merged with flags taking precedence.
#[derive(Debug, Clone, Default, Args)]
pub struct Overrides {
    /// Per-lineage death rate.
    #[arg(long, global = true)]
    pub alpha: Option<f64>,
    /// Coalescence rate.
    #[arg(long, global = true)]
    pub beta: Option<f64>,
    /// Per-lineage mutation rate.
    #[arg(long, global = true)]
    pub mu: Option<f64>,
    /// Number of colors for network commands.
    #[arg(long, global = true)]
    pub n: Option<usize>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Monte Carlo sample size per estimate.
    #[arg(long, global = true)]
    pub samples: Option<usize>,
    /// Target width of certified enclosures.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Replicate networks for scaling checks.
    #[arg(long, global = true)]
    pub replicates: Option<usize>,
    /// Radius of local balls.
    #[arg(long, global = true)]
    pub radius: Option<usize>,
    /// Grid size of contour processes.
    #[arg(long, global = true)]
    pub grid: Option<usize>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads; defaults to all cores. Does not change results.
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    #[arg(long, global = true, value_enum)]
    pub method: Option<Method>,
    /// Retry budget of the rejection samplers.
    #[arg(long, global = true)]
    pub max_retries: Option<u64>,
    /// Plain `key = value` file; flags override it.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
}

macro_rules! merge_fields {
    ($a:ident, $b:ident; $($f:ident),*) => {
        Overrides { $($f: $a.$f.or($b.$f),)* config: None }
    };
}

impl Overrides {
    /// Fields set in `self` win over `base`.
    pub fn over(self, base: Overrides) -> Overrides {
        merge_fields!(self, base; alpha, beta, mu, n, seed, samples, tol, replicates, radius, grid, format, out, workers, method, max_retries)
    }
}

fn parse<T: FromStr>(path: &Path, line: usize, key: &str, v: &str) -> Result<T> {
    v.parse().map_err(|_| CliError::Config {
        path: path.to_path_buf(),
        line,
        msg: format!("bad value {v:?} for {key}"),
    })
}

fn parse_enum<T: ValueEnum>(path: &Path, line: usize, key: &str, v: &str) -> Result<T> {
    T::from_str(v, true).map_err(|_| CliError::Config {
        path: path.to_path_buf(),
        line,
        msg: format!("bad value {v:?} for {key}"),
    })
}

/// Parses a config file. Blank lines and `#` comments are ignored.
pub fn parse_config(path: &Path, text: &str) -> Result<Overrides> {
    let mut o = Overrides::default();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let s = raw.split('#').next().unwrap_or("").trim();
        if s.is_empty() {
            continue;
        }
        let Some((k, v)) = s.split_once('=') else {
            return Err(CliError::Config {
                path: path.to_path_buf(),
                line,
                msg: "expected key = value".into(),
            });
        };
        let (k, v) = (k.trim(), v.trim());
        match k {
            "alpha" => o.alpha = Some(parse(path, line, k, v)?),
            "beta" => o.beta = Some(parse(path, line, k, v)?),
            "mu" => o.mu = Some(parse(path, line, k, v)?),
            "n" => o.n = Some(parse(path, line, k, v)?),
            "seed" => o.seed = Some(parse(path, line, k, v)?),
            "samples" => o.samples = Some(parse(path, line, k, v)?),
            "tol" => o.tol = Some(parse(path, line, k, v)?),
            "replicates" => o.replicates = Some(parse(path, line, k, v)?),
            "radius" => o.radius = Some(parse(path, line, k, v)?),
            "grid" => o.grid = Some(parse(path, line, k, v)?),
            "workers" => o.workers = Some(parse(path, line, k, v)?),
            "max_retries" => o.max_retries = Some(parse(path, line, k, v)?),
            "out" => o.out = Some(PathBuf::from(v)),
            "format" => o.format = Some(parse_enum(path, line, k, v)?),
            "method" => o.method = Some(parse_enum(path, line, k, v)?),
            _ => {
                return Err(CliError::Config {
                    path: path.to_path_buf(),
                    line,
                    msg: format!("unknown key {k:?}"),
                })
            }
        }
    }
    Ok(o)
}

/// Everything that determines a run's output. `out` and `workers` are
/// excluded from serialization: neither changes the result.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    #[serde(flatten)]
    pub params: ModelParams,
    pub seed: u64,
    pub samples: usize,
    pub tol: f64,
    pub n: usize,
    pub replicates: usize,
    pub radius: usize,
    pub grid: usize,
    pub method: Method,
    pub max_retries: u64,
    pub format: Format,
    #[serde(skip)]
    pub out: Option<PathBuf>,
    #[serde(skip)]
    pub workers: Option<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            params: ModelParams {
                alpha: 0.2,
                beta: 0.2,
                mu: 0.2,
            },
            seed: 42,
            samples: 100_000,
            tol: 1e-12,
            n: 500,
            replicates: 1000,
            radius: 2,
            grid: 4096,
            method: Method::Tilted,
            max_retries: 100_000_000,
            format: Format::Json,
            out: None,
            workers: None,
        }
    }
}

impl RunConfig {
    /// Reads the config file named in `flags`, if any, and applies the flags
    /// over it and the defaults.
    pub fn from_overrides(flags: Overrides) -> Result<Self> {
        let file = match &flags.config {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
                    path: path.clone(),
                    source,
                })?;
                parse_config(path, &text)?
            }
            None => Overrides::default(),
        };
        Self::resolve(flags.over(file))
    }

    pub fn resolve(o: Overrides) -> Result<Self> {
        let d = RunConfig::default();
        let params = ModelParams::new(
            o.alpha.unwrap_or(d.params.alpha),
            o.beta.unwrap_or(d.params.beta),
            o.mu.unwrap_or(d.params.mu),
        )?;
        let out = o.out.map(|p| match std::env::var_os(OUT_DIR_ENV) {
            Some(dir) if p.is_relative() => Path::new(&dir).join(p),
            _ => p,
        });
        let cfg = RunConfig {
            params,
            seed: o.seed.unwrap_or(d.seed),
            samples: o.samples.unwrap_or(d.samples),
            tol: o.tol.unwrap_or(d.tol),
            n: o.n.unwrap_or(d.n),
            replicates: o.replicates.unwrap_or(d.replicates),
            radius: o.radius.unwrap_or(d.radius),
            grid: o.grid.unwrap_or(d.grid),
            method: o.method.unwrap_or(d.method),
            max_retries: o.max_retries.unwrap_or(d.max_retries),
            format: o.format.unwrap_or(d.format),
            out,
            workers: o.workers,
        };
        if !(cfg.tol > 0.0 && cfg.tol < 1.0) {
            return Err(CliError::Usage(format!("--tol must lie in (0, 1), got {}", cfg.tol)));
        }
        for (name, v) in [("samples", cfg.samples), ("n", cfg.n), ("replicates", cfg.replicates)] {
            if v == 0 {
                return Err(CliError::Usage(format!("--{name} must be positive")));
            }
        }
        if cfg.max_retries == 0 {
            return Err(CliError::Usage("--max-retries must be positive".into()));
        }
        if cfg.workers == Some(0) {
            return Err(CliError::Usage("--workers must be positive".into()));
        }
        Ok(cfg)
    }

    pub fn with_params(&self, params: ModelParams) -> Self {
        Self {
            params,
            ..self.clone()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_file() {
        let file = parse_config(Path::new("x.conf"), "alpha = 1.5 # death\n\nmu=0.3\nformat = CSV\n").unwrap();
        let flags = Overrides {
            alpha: Some(0.7),
            ..Default::default()
        };
        let cfg = RunConfig::resolve(flags.over(file)).unwrap();
        assert_eq!(cfg.params.alpha, 0.7);
        assert_eq!(cfg.params.mu, 0.3);
        assert_eq!(cfg.params.beta, 0.2);
        assert_eq!(cfg.format, Format::Csv);
    }

    #[test]
    fn bad_lines_are_reported() {
        let e = parse_config(Path::new("x.conf"), "alpha = 1\nbogus = 2\n").unwrap_err();
        assert!(e.to_string().contains("line 2"), "{e}");
        assert!(parse_config(Path::new("x.conf"), "seed = -1").is_err());
        assert!(parse_config(Path::new("x.conf"), "just words").is_err());
    }

    #[test]
    fn invalid_values_are_usage_errors() {
        let o = Overrides {
            mu: Some(-1.0),
            ..Default::default()
        };
        assert_eq!(RunConfig::resolve(o).unwrap_err().exit_code(), 2);
        let o = Overrides {
            samples: Some(0),
            ..Default::default()
        };
        assert_eq!(RunConfig::resolve(o).unwrap_err().exit_code(), 2);
    }
}
