use serde::Deserialize;

use lehmer_visible::numtheory::{is_prime, primes_between};
use lehmer_visible::{BoxRegion, VarietySpec};

use crate::error::CliError;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub variety: Option<VarietyConfig>,
    pub primes: PrimeSpec,
    /// Endpoint pairs `["num/den", "num/den"]`, one per coordinate.
    #[serde(default)]
    pub region: Option<Vec<[String; 2]>>,
    pub task: Task,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VarietyConfig {
    pub label: String,
    pub r: usize,
    pub polynomials: Vec<String>,
    pub dim: u32,
    pub deg: u32,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum PrimeSpec {
    List(Vec<u64>),
    Range(PrimeRange),
}

/// Every prime in `[from, to]`.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PrimeRange {
    pub from: u64,
    pub to: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LadderQuantity {
    LehmerClassical,
    LangWeil,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundChoice {
    Bombieri,
    Katz,
    WeilKloosterman,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub enum Sweep {
    /// Every `u ∈ F_p^r`.
    All,
    List(Vec<Vec<u64>>),
    /// Uniformly sampled nonzero frequencies, seeded by `--seed`.
    Sample(usize),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Task {
    Points {
        #[serde(default)]
        dump: bool,
    },
    Lehmer {
        moduli: Vec<u64>,
        residues: Vec<i64>,
    },
    Visible {
        #[serde(default)]
        delta_assert: Option<i32>,
        #[serde(default)]
        constant: Option<f64>,
    },
    VisibleLehmer {
        a: u64,
        residues: Vec<i64>,
        #[serde(default)]
        delta_assert: Option<i32>,
        #[serde(default)]
        constant: Option<f64>,
    },
    Expsum {
        u: Sweep,
        #[serde(default = "default_bound")]
        bound: BoundChoice,
        #[serde(default)]
        delta_assert: Option<i32>,
    },
    Lemma1 {
        a: u64,
        b: u64,
    },
    Family {
        #[serde(default)]
        sieve_k: Option<u64>,
    },
    Ladder {
        quantity: LadderQuantity,
    },
}

fn default_bound() -> BoundChoice {
    BoundChoice::Bombieri
}

impl Task {
    pub fn needs_variety(&self) -> bool {
        !matches!(
            self,
            Task::Lemma1 { .. }
                | Task::Ladder {
                    quantity: LadderQuantity::LehmerClassical
                }
        )
    }
}

/// A config after every field has been checked.
#[derive(Debug, Clone)]
pub struct Validated {
    pub variety: Option<VarietySpec>,
    pub primes: Vec<u64>,
    pub region: Option<BoxRegion>,
    pub task: Task,
}

impl Validated {
    pub fn variety(&self) -> &VarietySpec {
        self.variety.as_ref().expect("validated task has a variety")
    }

    /// Only the points dump writes side files, and those need an output path.
    pub fn side_files_allowed(&self, have_out: bool) -> bool {
        have_out || !matches!(self.task, Task::Points { dump: true })
    }

    /// The configured box, or `[0,1)^r`.
    pub fn region_or_unit(&self, r: usize) -> BoxRegion {
        self.region.clone().unwrap_or_else(|| BoxRegion::unit(r))
    }
}

pub fn parse(text: &str) -> Result<ExperimentConfig, CliError> {
    serde_json::from_str(text).map_err(|e| CliError::Validation(format!("config: {e}")))
}

pub fn validate(config: ExperimentConfig) -> Result<Validated, CliError> {
    let variety = match &config.variety {
        Some(v) => Some(
            VarietySpec::parse(v.label.clone(), v.r, &v.polynomials, v.dim, v.deg)
                .map_err(|e| CliError::Validation(format!("variety: {e}")))?,
        ),
        None if config.task.needs_variety() => {
            return Err(CliError::Validation("this task needs a variety".into()))
        }
        None => None,
    };

    let primes = match &config.primes {
        PrimeSpec::List(list) => {
            if let Some(p) = list.iter().find(|&&p| !is_prime(p)) {
                return Err(CliError::Validation(format!("primes: {p} is not prime")));
            }
            list.clone()
        }
        PrimeSpec::Range(PrimeRange { from, to }) => {
            if from > to {
                return Err(CliError::Validation(format!("primes: empty range {from}..{to}")));
            }
            primes_between(*from, *to)
        }
    };
    if primes.is_empty() {
        return Err(CliError::Validation("primes: no primes given".into()));
    }

    let region = match &config.region {
        Some(pairs) => {
            let b = BoxRegion::parse(pairs).map_err(|e| CliError::Validation(format!("region: {e}")))?;
            let want = match (&config.task, &variety) {
                (Task::Lemma1 { .. }, _) => Some(1),
                (_, Some(v)) => Some(v.ambient_dim()),
                _ => None,
            };
            if let Some(want) = want {
                if b.dim() != want {
                    return Err(CliError::Validation(format!(
                        "region: {} intervals, expected {want}",
                        b.dim()
                    )));
                }
            }
            Some(b)
        }
        None => None,
    };

    match &config.task {
        Task::Lehmer { moduli, residues } => {
            let r = variety.as_ref().map_or(0, VarietySpec::ambient_dim);
            if moduli.len() != r || residues.len() != r {
                return Err(CliError::Validation(format!(
                    "lehmer: need {r} moduli and residues"
                )));
            }
        }
        Task::VisibleLehmer { residues, .. } => {
            let r = variety.as_ref().map_or(0, VarietySpec::ambient_dim);
            if residues.len() != r {
                return Err(CliError::Validation(format!("visible-lehmer: need {r} residues")));
            }
        }
        Task::Expsum {
            u: Sweep::List(list),
            ..
        } => {
            let r = variety.as_ref().map_or(0, VarietySpec::ambient_dim);
            if let Some(u) = list.iter().find(|u| u.len() != r) {
                return Err(CliError::Validation(format!(
                    "expsum: frequency {u:?} has {} entries, expected {r}",
                    u.len()
                )));
            }
        }
        _ => {}
    }
    if let Task::Expsum {
        bound: BoundChoice::Katz,
        delta_assert: None,
        ..
    } = &config.task
    {
        return Err(CliError::Validation("expsum: the Katz bound needs delta_assert".into()));
    }

    Ok(Validated {
        variety,
        primes,
        region,
        task: config.task,
    })
}
