//! Command-line arguments and the TOML run configuration they mirror.
//!
//! Every flag has a key of the same (kebab-case) name in the config file:
//!
//! ```toml
//! [run]
//! seed = 7
//! workers = 1
//!
//! [model]
//! model = "rank1gauss"
//! d = 2
//! b = 8
//! eta = 0.3
//!
//! [alpha]
//! samples = 1000000
//! ```
//!
//! Matrices inside inline law tables (`[model.laws.h_law]`) are bracketed
//! row lists, as in law files. Flags given on the command line win over the
//! file.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{de::DeserializeOwned, Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::LawFile;

#[derive(Clone, Debug, Parser)]
#[command(name = "heavytail", version, about = "Heavy-tail diagnostics for SGD on quadratic losses")]
pub struct Cli {
    #[command(flatten)]
    pub run: RunArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    /// Read defaults from this TOML file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Write the effective configuration to this file.
    #[arg(long, global = true)]
    pub save_config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Option<Command>,
}

#[derive(Clone, Debug, Default, PartialEq, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct RunArgs {
    /// Master seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (default: HEAVYTAIL_WORKERS or the core count).
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// CSV output path (default: stdout).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelName {
    /// Gaussian regressors and responses.
    #[value(name = "rank1gauss")]
    #[serde(rename = "rank1gauss")]
    Rank1Gauss,
    /// Rank-one summands with laws from a law file.
    Rank1,
    /// Symmetric summands with laws from a law file.
    Symm,
    /// `H_i = I`, `B = e_1`.
    SymmDetIdentity,
    /// `d = 1`, `H in {0.5, 2.5}` with equal weights, `B = 1`.
    TwoPoint,
}

#[derive(Clone, Debug, Default, PartialEq, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct ModelArgs {
    #[arg(long, global = true, value_enum)]
    pub model: Option<ModelName>,
    /// Dimension.
    #[arg(long, global = true)]
    pub d: Option<usize>,
    /// Batch size.
    #[arg(long, global = true)]
    pub b: Option<usize>,
    /// Step size.
    #[arg(long, global = true)]
    pub eta: Option<f64>,
    /// TOML file with the laws for `rank1` and `symm`.
    #[arg(long, global = true)]
    pub law_file: Option<PathBuf>,
    /// Inline laws (config file only).
    #[arg(skip)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub laws: Option<LawFile>,
}

#[derive(Clone, Debug, PartialEq, Subcommand, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Truncated draws of the stationary solution R.
    Simulate(SimulateArgs),
    /// The curve s -> k(s).
    Kcurve(KcurveArgs),
    /// Top Lyapunov exponent.
    Lyapunov(LyapunovArgs),
    /// Tail index solving h(xi, alpha) = 1.
    Alpha(AlphaArgs),
    /// Tail index over a step-size grid, with xi_1.
    Alphacurve(AlphacurveArgs),
    /// Grid of h over (b or eta, s) with its level-1 contour.
    Contour(ContourArgs),
    /// Discretized transfer operator on the circle (d = 2).
    Operator(OperatorArgs),
    /// Hill estimate of the tail index.
    Tailfit(TailfitArgs),
    /// Uniformity of large-draw directions (d = 2).
    Angular(AngularArgs),
    /// Truncated-mean ladder for a negative moment.
    Integrability(IntegrabilityArgs),
    /// Chi-square diagonals and inner-product density checks.
    Gausscheck(GausscheckArgs),
    /// Growth of E|R_n|^alpha.
    Moments(MomentsArgs),
    /// Exceedance curve of |R_n| at a fixed n.
    Tailbound(TailboundArgs),
    /// Contour of h over (b, s) for d = 2, eta = 0.75.
    #[command(name = "reproduce-fig1")]
    #[serde(rename = "reproduce-fig1")]
    ReproduceFig1(FigureArgs),
    /// Contour of h over (eta, s) for d = 2, b = 5.
    #[command(name = "reproduce-fig2")]
    #[serde(rename = "reproduce-fig2")]
    ReproduceFig2(FigureArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Simulate(_) => "simulate",
            Command::Kcurve(_) => "kcurve",
            Command::Lyapunov(_) => "lyapunov",
            Command::Alpha(_) => "alpha",
            Command::Alphacurve(_) => "alphacurve",
            Command::Contour(_) => "contour",
            Command::Operator(_) => "operator",
            Command::Tailfit(_) => "tailfit",
            Command::Angular(_) => "angular",
            Command::Integrability(_) => "integrability",
            Command::Gausscheck(_) => "gausscheck",
            Command::Moments(_) => "moments",
            Command::Tailbound(_) => "tailbound",
            Command::ReproduceFig1(_) => "reproduce-fig1",
            Command::ReproduceFig2(_) => "reproduce-fig2",
        }
    }
}

macro_rules! command_args {
    ($(#[$m:meta])* $name:ident { $($(#[$fm:meta])* $field:ident : $ty:ty),* $(,)? }) => {
        $(#[$m])*
        #[derive(Clone, Debug, Default, PartialEq, Args, Serialize, Deserialize)]
        #[serde(rename_all = "kebab-case", deny_unknown_fields)]
        pub struct $name {
            $($(#[$fm])* #[arg(long)] pub $field: Option<$ty>,)*
        }
    };
}

command_args!(SimulateArgs {
    /// Number of draws.
    samples: u64,
    /// Stop once ||Pi_n|| falls below this.
    tol_prod: f64,
    /// Iteration cap per draw.
    n_max: u64,
});

command_args!(KcurveArgs {
    /// Grid as start:step:end or a comma list.
    s_grid: String,
    #[arg(value_enum)]
    method: CurveMethodName,
    /// Product length for the product method.
    n: u64,
    samples: u64,
    s_max: f64,
});

command_args!(LyapunovArgs {
    #[arg(value_enum)]
    method: LyapunovMethodName,
    /// Product length for the subadditive estimate.
    n: u64,
    samples: u64,
    /// Step of the finite-difference slope.
    ds: f64,
});

command_args!(AlphaArgs {
    samples: u64,
    /// Tolerance on |h(xi, alpha) - 1|.
    tol: f64,
    s_max: f64,
    /// Exit 0 even when no root is found.
    #[arg(num_args = 0..=1, default_missing_value = "true")]
    allow_no_root: bool,
});

command_args!(AlphacurveArgs {
    /// Step sizes, start:step:end or a comma list.
    eta_grid: String,
    samples: u64,
    tol: f64,
    s_max: f64,
});

command_args!(ContourArgs {
    #[arg(value_enum)]
    param: ContourParamName,
    /// Parameter values, start:step:end or a comma list.
    values: String,
    s_grid: String,
    samples: u64,
    /// SVG path (default: next to --out).
    svg: PathBuf,
    /// Level at which h is clipped in the SVG.
    clip: f64,
    /// CSV of the level-1 polylines.
    contour_out: PathBuf,
});

command_args!(OperatorArgs {
    s: f64,
    bins: usize,
    /// Draws per column.
    samples: u64,
    tol: f64,
    max_iter: usize,
});

command_args!(TailfitArgs {
    /// Draws of R; ignored with --input.
    samples: u64,
    /// Share of the sample used as upper order statistics.
    k_fraction: f64,
    /// Explicit number of upper order statistics.
    k: usize,
    /// CSV of samples (column `norm`, or the first column).
    input: PathBuf,
});

command_args!(AngularArgs {
    samples: u64,
    threshold_quantile: f64,
    level: f64,
});

command_args!(IntegrabilityArgs {
    #[arg(value_enum)]
    target: TargetName,
    delta: f64,
    /// Caps, comma list.
    caps: String,
    samples: u64,
});

command_args!(GausscheckArgs {
    samples: u64,
    /// Dimensions for the inner-product check, comma list.
    stam_b: String,
    level: f64,
});

command_args!(MomentsArgs {
    /// Moment exponent (default: the solved tail index).
    alpha: f64,
    /// Iteration counts, comma list.
    n_grid: String,
    samples: u64,
});

command_args!(TailboundArgs {
    /// Tail exponent (default: the solved tail index).
    alpha: f64,
    eps: f64,
    n: u64,
    samples: u64,
});

command_args!(FigureArgs {
    samples: u64,
    svg: PathBuf,
    clip: f64,
    contour_out: PathBuf,
});

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CurveMethodName {
    Closed,
    Product,
    Quadrature,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LyapunovMethodName {
    All,
    Closed,
    Subadditive,
    Fd,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ContourParamName {
    B,
    Eta,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TargetName {
    DetA,
    InvNormA,
    OffDiagonal,
}

/// A complete run: what `--save-config` writes and `--config` reads.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct RunConfig {
    #[serde(default)]
    pub run: RunArgs,
    #[serde(default)]
    pub model: ModelArgs,
    #[serde(flatten, skip_serializing_if = "Option::is_none")]
    pub command: Option<Command>,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let err = |e: toml::de::Error| Error::Config(format!("config file: {e}"));
        let mut table: toml::Table = toml::from_str(text).map_err(err)?;
        let take = |table: &mut toml::Table, key: &str| table.remove(key).unwrap_or_else(|| toml::Table::new().into());
        let run = take(&mut table, "run").try_into().map_err(err)?;
        let model = take(&mut table, "model").try_into().map_err(err)?;
        // whatever is left must be exactly one subcommand section
        let command = match table.len() {
            0 => None,
            1 => Some(toml::Value::Table(table).try_into().map_err(err)?),
            _ => {
                let keys: Vec<&String> = table.keys().collect();
                return Err(Error::Config(format!("config file: more than one subcommand section: {keys:?}")));
            }
        };
        Ok(RunConfig { run, model, command })
    }

    pub fn read(path: &std::path::Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("run config serializes")
    }

    /// `self` with every value set in `top` replacing the file value.
    /// A subcommand in `top` replaces the file's unless both name the same
    /// one, in which case their keys are merged.
    pub fn overlaid(&self, top: &RunConfig) -> Result<RunConfig> {
        let command = match (&self.command, &top.command) {
            (Some(base), Some(over)) if base.name() == over.name() => Some(overlay(base, over)?),
            (base, None) => base.clone(),
            (_, Some(over)) => Some(over.clone()),
        };
        Ok(RunConfig { run: overlay(&self.run, &top.run)?, model: overlay(&self.model, &top.model)?, command })
    }
}

fn overlay<T: Serialize + DeserializeOwned>(base: &T, top: &T) -> Result<T> {
    let to_value = |v: &T| toml::Value::try_from(v).map_err(|e| Error::Config(e.to_string()));
    let mut merged = to_value(base)?;
    merge(&mut merged, to_value(top)?);
    merged.try_into().map_err(|e: toml::de::Error| Error::Config(e.to_string()))
}

fn merge(base: &mut toml::Value, top: toml::Value) {
    match (base, top) {
        (toml::Value::Table(b), toml::Value::Table(t)) => {
            for (k, v) in t {
                match b.get_mut(&k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

impl From<Cli> for RunConfig {
    fn from(cli: Cli) -> Self {
        RunConfig { run: cli.run, model: cli.model, command: cli.command }
    }
}

/// Grid from `start:step:end` (inclusive) or a comma-separated list.
pub fn parse_grid(text: &str) -> Result<Vec<f64>> {
    let bad = || Error::Config(format!("cannot parse grid '{text}'"));
    let num = |s: &str| s.trim().parse::<f64>().map_err(|_| bad());
    let parts: Vec<&str> = text.split(':').collect();
    let grid = match parts.as_slice() {
        [start, step, end] => {
            let (a, h, b) = (num(start)?, num(step)?, num(end)?);
            if !(h > 0.0 && b >= a && a.is_finite() && b.is_finite()) {
                return Err(bad());
            }
            let count = ((b - a) / h + 1e-9).floor() as usize + 1;
            // round away the drift of repeated addition
            (0..count).map(|i| round12(a + i as f64 * h)).collect()
        }
        [list] => list.split(',').map(num).collect::<Result<Vec<_>>>()?,
        _ => return Err(bad()),
    };
    if grid.is_empty() {
        return Err(bad());
    }
    Ok(grid)
}

fn round12(x: f64) -> f64 {
    (x * 1e12).round() / 1e12
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grids() {
        assert_eq!(parse_grid("0:1:4").unwrap(), vec![0.0, 1.0, 2.0, 3.0, 4.0]);
        let g = parse_grid("0.1:0.1:10").unwrap();
        assert_eq!(g.len(), 100);
        assert_eq!(g[2], 0.3);
        assert_eq!(g[99], 10.0);
        assert_eq!(parse_grid("0.5, 1,2").unwrap(), vec![0.5, 1.0, 2.0]);
        assert!(parse_grid("1:0:2").is_err());
        assert!(parse_grid("a,b").is_err());
    }

    #[test]
    fn config_round_trip() {
        let cfg = RunConfig {
            run: RunArgs { seed: Some(7), workers: Some(2), out: Some("x.csv".into()) },
            model: ModelArgs { model: Some(ModelName::Rank1Gauss), d: Some(2), b: Some(8), eta: Some(0.3), ..Default::default() },
            command: Some(Command::Alpha(AlphaArgs { samples: Some(1000), tol: Some(1e-4), ..Default::default() })),
        };
        let text = cfg.to_toml();
        assert_eq!(RunConfig::parse(&text).unwrap(), cfg);
    }

    #[test]
    fn inline_laws_round_trip() {
        let text = r#"
[model]
model = "symm"
d = 1
eta = 1.0

[model.laws.h_law]
kind = "mixture"
matrices = [[[0.5]], [[2.5]]]
probs = [0.5, 0.5]

[kcurve]
s-grid = "0:1:3"
"#;
        let cfg = RunConfig::parse(text).unwrap();
        assert!(cfg.model.laws.is_some());
        assert_eq!(RunConfig::parse(&cfg.to_toml()).unwrap(), cfg);
    }

    #[test]
    fn flags_override_file() {
        let file = RunConfig::parse("[run]\nseed = 1\nworkers = 3\n[model]\neta = 0.5\nb = 4\n[alpha]\nsamples = 10\ntol = 0.01\n").unwrap();
        let top = RunConfig {
            run: RunArgs { seed: Some(9), ..Default::default() },
            model: ModelArgs { b: Some(2), ..Default::default() },
            command: Some(Command::Alpha(AlphaArgs { samples: Some(99), ..Default::default() })),
        };
        let m = file.overlaid(&top).unwrap();
        assert_eq!((m.run.seed, m.run.workers), (Some(9), Some(3)));
        assert_eq!((m.model.eta, m.model.b), (Some(0.5), Some(2)));
        match m.command {
            Some(Command::Alpha(a)) => assert_eq!((a.samples, a.tol), (Some(99), Some(0.01))),
            other => panic!("{other:?}"),
        }
        let other = file.overlaid(&RunConfig { command: Some(Command::Kcurve(Default::default())), ..Default::default() }).unwrap();
        assert_eq!(other.command.unwrap().name(), "kcurve");
        assert!(RunConfig::parse("[bogus]\nx = 1").is_err());
        assert!(RunConfig::parse("[alpha]\nsamples = 1\n[kcurve]\n").is_err());
        assert!(RunConfig::parse("[alpha]\nsamplez = 1").is_err());
    }
}
