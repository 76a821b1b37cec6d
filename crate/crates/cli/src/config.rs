use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use recbound::expsum::TailMajorant;
use recbound::phasefn::{parse_phase, PhaseExpr, SequenceSource};
use serde::Deserialize;

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    Expsum,
    Scalar,
    JordanCell,
    JordanSystem,
}

impl Kind {
    pub fn name(self) -> &'static str {
        match self {
            Kind::Expsum => "expsum",
            Kind::Scalar => "scalar",
            Kind::JordanCell => "jordan-cell",
            Kind::JordanSystem => "jordan-system",
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: Kind,
    pub horizon: u64,
    pub tol: Option<f64>,
    #[serde(default)]
    pub output: OutputConfig,
    pub phase: Option<PhaseConfig>,
    pub declarations: Option<Declarations>,
    pub scalar: Option<ScalarConfig>,
    pub cell: Option<CellConfig>,
    pub probe: Option<ProbeConfig>,
    #[serde(default)]
    pub blocks: Vec<BlockConfig>,
    pub transform: Option<TransformConfig>,
    /// Parameter grid for `sweep`; ignored by `analyze`.
    pub sweep: Option<BTreeMap<String, Vec<f64>>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_report")]
    pub report: String,
    /// Samples CSV file name; no samples are written when absent.
    pub samples: Option<String>,
    #[serde(default = "default_aggregate")]
    pub aggregate: String,
}

fn default_report() -> String {
    "report.toml".into()
}

fn default_aggregate() -> String {
    "sweep.csv".into()
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            report: default_report(),
            samples: None,
            aggregate: default_aggregate(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Units {
    #[default]
    Cycles,
    Radians,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhaseConfig {
    pub expr: String,
    #[serde(default)]
    pub units: Units,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Declarations {
    /// Pointwise bound `b(n) >= |Δ²f(n)|` for `n > horizon`.
    pub tail_majorant: Option<String>,
    /// Whether `b` is declared nonincreasing; required for `tail_majorant`.
    #[serde(default)]
    pub tail_majorant_monotone: bool,
    /// Declared value of `sum_{n > horizon} |Δ²f(n)|`.
    pub tail_value: Option<f64>,
    /// Declared `lim Δf(n)`.
    pub psi: Option<f64>,
}

/// A complex number written as `[re, im]`.
pub type ComplexPair = [f64; 2];

fn complex(p: &ComplexPair) -> Complex64 {
    Complex64::new(p[0], p[1])
}

#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub enum SourceConfig {
    Zero,
    Phase(String),
    PhaseRadians(String),
    Values(Vec<ComplexPair>),
    File(PathBuf),
    Scaled {
        inner: Box<SourceConfig>,
        power: u32,
    },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScalarConfig {
    pub rho: f64,
    pub phi: f64,
    #[serde(default)]
    pub x1: ComplexPair,
    pub y: SourceConfig,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CellConfig {
    #[serde(default = "one")]
    pub rho: f64,
    pub phi: f64,
    /// Raw inputs `y_1..y_M`.
    pub y: Option<Vec<SourceConfig>>,
    /// Unscaled inputs `ỹ_1..ỹ_M` of a critical cell; row `m` is divided
    /// by `n^{m-1}`.
    pub ytilde: Option<Vec<SourceConfig>>,
    pub x1: Option<Vec<ComplexPair>>,
    pub alpha: Option<Vec<ComplexPair>>,
    pub probe_horizon: Option<u64>,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeConfig {
    pub row: usize,
    pub delta: ComplexPair,
    pub horizon: u64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlockConfig {
    pub rho: f64,
    pub phi: f64,
    pub y: Vec<SourceConfig>,
    pub x1: Option<Vec<ComplexPair>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransformConfig {
    /// Rows of `T`, each entry `[re, im]`.
    pub t: Vec<Vec<ComplexPair>>,
}

pub fn parse_expr(text: &str) -> Result<PhaseExpr, CliError> {
    parse_phase(text).map_err(|e| CliError::Config(format!("expression {text:?}: {e}")))
}

impl SourceConfig {
    /// Builds the source; relative file paths are resolved against `base`.
    pub fn build(&self, base: &Path) -> Result<SequenceSource, CliError> {
        Ok(match self {
            SourceConfig::Zero => SequenceSource::Zero,
            SourceConfig::Phase(s) => SequenceSource::phase(parse_expr(s)?),
            SourceConfig::PhaseRadians(s) => SequenceSource::phase_radians(&parse_expr(s)?),
            SourceConfig::Values(v) => SequenceSource::Explicit(v.iter().map(complex).collect()),
            SourceConfig::File(p) => SequenceSource::from_csv(base.join(p))?,
            SourceConfig::Scaled { inner, power } => {
                SequenceSource::scaled(inner.build(base)?, *power)
            }
        })
    }
}

pub fn build_sources(list: &[SourceConfig], base: &Path) -> Result<Vec<SequenceSource>, CliError> {
    list.iter().map(|s| s.build(base)).collect()
}

pub fn complex_list(list: &[ComplexPair]) -> Vec<Complex64> {
    list.iter().map(complex).collect()
}

pub fn complex_value(p: &ComplexPair) -> Complex64 {
    complex(p)
}

impl PhaseConfig {
    pub fn build(&self) -> Result<PhaseExpr, CliError> {
        let f = parse_expr(&self.expr)?;
        Ok(match self.units {
            Units::Cycles => f,
            Units::Radians => f.radians_to_cycles(),
        })
    }
}

impl Declarations {
    pub fn majorant(&self) -> Result<Option<TailMajorant>, CliError> {
        match (&self.tail_majorant, self.tail_value) {
            (Some(_), Some(_)) => Err(CliError::Config(
                "declare either tail_majorant or tail_value, not both".into(),
            )),
            (Some(b), None) => Ok(Some(TailMajorant::Expr {
                bound: parse_expr(b)?,
                monotone: self.tail_majorant_monotone,
            })),
            (None, Some(v)) => Ok(Some(TailMajorant::Value(v))),
            (None, None) => Ok(None),
        }
    }
}

impl ExperimentConfig {
    pub fn from_value(value: toml::Value) -> Result<Self, CliError> {
        let cfg: ExperimentConfig = value
            .try_into()
            .map_err(|e: toml::de::Error| CliError::Config(e.message().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Checks that the sections match the kind; runs before any computation.
    pub fn validate(&self) -> Result<(), CliError> {
        let need = |present: bool, section: &str| {
            if present {
                Ok(())
            } else {
                Err(CliError::Config(format!(
                    "kind {} needs a [{section}] section",
                    self.kind.name()
                )))
            }
        };
        let forbid = |present: bool, section: &str| {
            if present {
                Err(CliError::Config(format!(
                    "[{section}] is not used by kind {}",
                    self.kind.name()
                )))
            } else {
                Ok(())
            }
        };
        if self.horizon == 0 {
            return Err(CliError::Config("horizon must be positive".into()));
        }
        if let Some(t) = self.tol {
            if !(t > 0.0 && t.is_finite()) {
                return Err(CliError::Config(format!("tol must be positive, got {t}")));
            }
        }
        match self.kind {
            Kind::Expsum => {
                need(self.phase.is_some(), "phase")?;
                forbid(self.scalar.is_some(), "scalar")?;
                forbid(self.cell.is_some(), "cell")?;
                forbid(!self.blocks.is_empty(), "blocks")?;
            }
            Kind::Scalar => {
                need(self.scalar.is_some(), "scalar")?;
                forbid(self.phase.is_some(), "phase")?;
                forbid(self.cell.is_some(), "cell")?;
                forbid(!self.blocks.is_empty(), "blocks")?;
            }
            Kind::JordanCell => {
                need(self.cell.is_some(), "cell")?;
                forbid(self.phase.is_some(), "phase")?;
                forbid(self.declarations.is_some(), "declarations")?;
                forbid(!self.blocks.is_empty(), "blocks")?;
                let cell = self.cell.as_ref().expect("checked above");
                if cell.y.is_some() == cell.ytilde.is_some() {
                    return Err(CliError::Config(
                        "[cell] needs exactly one of y and ytilde".into(),
                    ));
                }
            }
            Kind::JordanSystem => {
                need(!self.blocks.is_empty(), "[blocks]")?;
                forbid(self.phase.is_some(), "phase")?;
                forbid(self.cell.is_some(), "cell")?;
                forbid(self.declarations.is_some(), "declarations")?;
            }
        }
        if self.kind != Kind::JordanCell {
            forbid(self.probe.is_some(), "probe")?;
        }
        if self.kind != Kind::JordanSystem {
            forbid(self.transform.is_some(), "transform")?;
        }
        Ok(())
    }
}

/// Reads and parses a config file without validating its shape.
pub fn read_value(path: &Path) -> Result<toml::Value, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    text.parse::<toml::Table>()
        .map(toml::Value::Table)
        .map_err(|e| CliError::Config(format!("{}: {}", path.display(), e.message())))
}
