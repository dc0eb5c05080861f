//! Experiment spec files.
//!
//! A spec is a TOML document with run-level settings at the top and one
//! `[experiment]` table selected by its `kind`:
//!
//! ```toml
//! seed = 7
//! trials = 200
//! out = "results/privauc"
//! format = "csv"
//!
//! [experiment]
//! kind = "privauc-welfare"
//! clients = 400
//! supply = 40
//! ```
//!
//! Every experiment field is optional and defaults to the settings used by
//! the acceptance suite. Unknown fields are rejected.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::error::HarnessError;
use crate::table::Format;

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub seed: u64,
    /// Falls back to the experiment's own default.
    pub trials: Option<usize>,
    /// Output directory. Without one, only the summary is printed.
    pub out: Option<PathBuf>,
    pub format: Format,
    pub experiment: Experiment,
}

/// The document as written. The experiment table is decoded in a second
/// step so that errors inside it can name the offending field.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpec {
    #[serde(default)]
    seed: u64,
    trials: Option<usize>,
    out: Option<PathBuf>,
    #[serde(default)]
    format: Format,
    experiment: toml::Table,
}

impl ExperimentSpec {
    pub fn new(experiment: Experiment, seed: u64) -> Self {
        ExperimentSpec {
            seed,
            trials: None,
            out: None,
            format: Format::Csv,
            experiment,
        }
    }

    pub fn parse(text: &str) -> Result<Self, HarnessError> {
        let raw: RawSpec = toml::from_str(text).map_err(|e| HarnessError::Spec(e.to_string()))?;
        Ok(ExperimentSpec {
            seed: raw.seed,
            trials: raw.trials,
            out: raw.out,
            format: raw.format,
            experiment: Experiment::from_table(raw.experiment)?,
        })
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = fs::read_to_string(path)
            .map_err(|e| HarnessError::Spec(format!("{}: {e}", path.display())))?;
        ExperimentSpec::parse(&text).map_err(|e| match e {
            HarnessError::Spec(msg) => HarnessError::Spec(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn trials(&self) -> usize {
        self.trials
            .unwrap_or_else(|| self.experiment.default_trials())
    }
}

/// Every experiment kind, as written in the `kind` field.
pub const KINDS: &[&str] = &[
    "oracle-equivalence",
    "tail-identity",
    "truthfulness",
    "auction-welfare",
    "counter-usefulness",
    "privauc-welfare",
    "example1",
    "multiround",
];

#[derive(Debug, Clone, PartialEq)]
pub enum Experiment {
    OracleEquivalence(OracleParams),
    TailIdentity(TailParams),
    Truthfulness(TruthfulnessParams),
    AuctionWelfare(AuctionParams),
    CounterUsefulness(CounterParams),
    PrivaucWelfare(PrivAucWelfareParams),
    Example1(Example1Params),
    Multiround(MultiroundParams),
}

fn params<T: serde::de::DeserializeOwned>(
    kind: &str,
    table: toml::Table,
) -> Result<T, HarnessError> {
    T::deserialize(toml::Value::Table(table)).map_err(|e| {
        HarnessError::Spec(format!(
            "[experiment] ({kind}): {}",
            e.to_string().trim_end()
        ))
    })
}

impl Experiment {
    pub fn from_table(mut table: toml::Table) -> Result<Self, HarnessError> {
        let kind = match table.remove("kind") {
            Some(toml::Value::String(k)) => k,
            Some(other) => {
                return Err(HarnessError::Spec(format!(
                    "[experiment] kind must be a string, got {other}"
                )))
            }
            None => return Err(HarnessError::Spec("[experiment] is missing `kind`".into())),
        };
        Ok(match kind.as_str() {
            "oracle-equivalence" => Experiment::OracleEquivalence(params(&kind, table)?),
            "tail-identity" => Experiment::TailIdentity(params(&kind, table)?),
            "truthfulness" => Experiment::Truthfulness(params(&kind, table)?),
            "auction-welfare" => Experiment::AuctionWelfare(params(&kind, table)?),
            "counter-usefulness" => Experiment::CounterUsefulness(params(&kind, table)?),
            "privauc-welfare" => Experiment::PrivaucWelfare(params(&kind, table)?),
            "example1" => Experiment::Example1(params(&kind, table)?),
            "multiround" => Experiment::Multiround(params(&kind, table)?),
            _ => {
                return Err(HarnessError::Spec(format!(
                    "[experiment] unknown kind `{kind}`, expected one of {}",
                    KINDS.join(", ")
                )))
            }
        })
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Experiment::OracleEquivalence(_) => "oracle-equivalence",
            Experiment::TailIdentity(_) => "tail-identity",
            Experiment::Truthfulness(_) => "truthfulness",
            Experiment::AuctionWelfare(_) => "auction-welfare",
            Experiment::CounterUsefulness(_) => "counter-usefulness",
            Experiment::PrivaucWelfare(_) => "privauc-welfare",
            Experiment::Example1(_) => "example1",
            Experiment::Multiround(_) => "multiround",
        }
    }

    pub fn default_trials(&self) -> usize {
        match self {
            Experiment::OracleEquivalence(_) => 500,
            Experiment::TailIdentity(_) => 10_000,
            Experiment::Truthfulness(_) => 200,
            Experiment::AuctionWelfare(_) => 200,
            Experiment::CounterUsefulness(_) => 1000,
            Experiment::PrivaucWelfare(_) => 200,
            Experiment::Example1(_) => 1000,
            Experiment::Multiround(_) => 200,
        }
    }
}

/// Random small instances: greedy against exhaustive search.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OracleParams {
    pub max_clients: usize,
    pub max_supply: u32,
    pub max_demand: u32,
}

impl Default for OracleParams {
    fn default() -> Self {
        OracleParams {
            max_clients: 3,
            max_supply: 5,
            max_demand: 4,
        }
    }
}

/// Random `(pmf, s)` pairs: direct `E[min(s, u)]` against the tail sum.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TailParams {
    pub max_demand: u32,
}

impl Default for TailParams {
    fn default() -> Self {
        TailParams { max_demand: 8 }
    }
}

/// Random instances, every deterministic misreport map for every client.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TruthfulnessParams {
    pub max_clients: usize,
    pub max_supply: u32,
    pub max_demand: u32,
}

impl Default for TruthfulnessParams {
    fn default() -> Self {
        TruthfulnessParams {
            max_clients: 3,
            max_supply: 5,
            max_demand: 4,
        }
    }
}

/// Random diminishing-returns instances for the ascending auction.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AuctionParams {
    pub max_clients: usize,
    pub max_supply: u32,
    pub max_demand: u32,
    /// Price increments are drawn uniformly from this range.
    pub alpha_range: (f64, f64),
}

impl Default for AuctionParams {
    fn default() -> Self {
        AuctionParams {
            max_clients: 5,
            max_supply: 8,
            max_demand: 4,
            alpha_range: (0.02, 0.5),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CounterParams {
    pub horizon: usize,
    pub epsilon: f64,
    pub beta: f64,
    /// Probability that each streamed bit is 1.
    pub density: f64,
    pub monotone: bool,
}

impl Default for CounterParams {
    fn default() -> Self {
        CounterParams {
            horizon: 1024,
            epsilon: 1.0,
            beta: 0.05,
            density: 0.5,
            monotone: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Noise {
    #[default]
    Laplace,
    Disabled,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PrivAucWelfareParams {
    pub clients: usize,
    pub supply: u32,
    pub max_demand: u32,
    pub alpha: f64,
    pub rho: f64,
    pub beta: f64,
    /// Without a value, the first admissible power of two is used.
    pub epsilon: Option<f64>,
    pub noise: Noise,
    pub monotone: bool,
}

impl Default for PrivAucWelfareParams {
    fn default() -> Self {
        PrivAucWelfareParams {
            clients: 400,
            supply: 40,
            max_demand: 4,
            alpha: 0.05,
            rho: 0.25,
            beta: 0.05,
            epsilon: None,
            noise: Noise::Laplace,
            monotone: false,
        }
    }
}

/// Two clients, one share per round, both demands fixed at one share.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Example1Params {
    pub rounds: usize,
}

impl Default for Example1Params {
    fn default() -> Self {
        Example1Params { rounds: 100 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Order {
    Index,
    #[default]
    Shuffled,
}

/// The two-client withdrawal scenario embedded in a market of truthful
/// clients, run under the private auction for several market sizes.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MultiroundParams {
    pub clients: Vec<usize>,
    pub supply: u32,
    pub max_demand: u32,
    pub alpha: f64,
    pub rho: f64,
    pub beta: f64,
    /// Failure probability used by the per-round budget schedule.
    pub beta_prime: f64,
    pub rounds: usize,
    /// Total budget across rounds. Without a value, the per-round budget is
    /// the first power of two admissible at every market size.
    pub epsilon: Option<f64>,
    pub order: Order,
}

impl Default for MultiroundParams {
    fn default() -> Self {
        MultiroundParams {
            clients: vec![100, 200, 400],
            supply: 10,
            max_demand: 4,
            alpha: 0.05,
            rho: 0.25,
            beta: 0.05,
            beta_prime: 0.05,
            rounds: 100,
            epsilon: None,
            order: Order::Shuffled,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_spec_uses_defaults() {
        let spec = ExperimentSpec::parse("[experiment]\nkind = \"oracle-equivalence\"\n").unwrap();
        assert_eq!(spec.seed, 0);
        assert_eq!(spec.trials(), 500);
        assert_eq!(
            spec.experiment,
            Experiment::OracleEquivalence(OracleParams::default())
        );
    }

    #[test]
    fn full_spec() {
        let text = r#"
            seed = 9
            trials = 20
            out = "results"
            format = "jsonl"

            [experiment]
            kind = "multiround"
            clients = [10, 20]
            order = "index"
            epsilon = 4.0
        "#;
        let spec = ExperimentSpec::parse(text).unwrap();
        assert_eq!(spec.trials(), 20);
        assert_eq!(spec.format, Format::Jsonl);
        let Experiment::Multiround(p) = spec.experiment else {
            panic!("wrong kind");
        };
        assert_eq!(p.clients, vec![10, 20]);
        assert_eq!(p.order, Order::Index);
        assert_eq!(p.epsilon, Some(4.0));
        assert_eq!(p.rounds, 100);
    }

    #[test]
    fn errors_name_the_field() {
        let bad = "[experiment]\nkind = \"privauc-welfare\"\nclient = 3\n";
        let err = ExperimentSpec::parse(bad).unwrap_err().to_string();
        assert!(err.contains("client"), "{err}");

        let bad = "[experiment]\nkind = \"auction-welfare\"\nmax_supply = \"lots\"\n";
        let err = ExperimentSpec::parse(bad).unwrap_err().to_string();
        assert!(err.contains("max_supply"), "{err}");

        let err = ExperimentSpec::parse("[experiment]\nkind = \"nope\"\n")
            .unwrap_err()
            .to_string();
        assert!(err.contains("nope"), "{err}");

        let err = ExperimentSpec::parse("seed = -1\n[experiment]\nkind = \"example1\"\n")
            .unwrap_err()
            .to_string();
        assert!(err.contains("seed"), "{err}");

        let err = ExperimentSpec::parse("[experiment]\nrounds = 3\n")
            .unwrap_err()
            .to_string();
        assert!(err.contains("kind"), "{err}");
    }

    #[test]
    fn kinds_round_trip() {
        for &kind in KINDS {
            let spec =
                ExperimentSpec::parse(&format!("[experiment]\nkind = \"{kind}\"\n")).unwrap();
            assert_eq!(spec.experiment.kind(), kind);
        }
    }
}
