use std::path::PathBuf;

use num_complex::Complex64;
use recbound::exec::{map_ordered, Execution};
use recbound::expsum::{
    certify_bounded, certify_unbounded, partial_sums, Certificate, SumAnalysis, Verdict,
};
use recbound::jordan::{
    apply_transform, classify_spectrum, main_theorem_init, perturbation_probe,
    required_init_expanding, simulate_block, BlockInit, BlockRegime, BlockTrajectory,
    CriticalCellProblem, Direction, JordanBlock, JordanSystem, MainTheoremInit,
    PerturbationReport, Transform,
};
use recbound::numeric::GrowthFit;
use recbound::scalar::{
    classify_scalar_with, simulate_scalar, Regime, ScalarClassification, ScalarEquation,
    Trajectory, WphiDeclarations, DEFAULT_TOL,
};
use serde::Serialize;

use crate::config::{
    build_sources, complex_list, complex_value, ComplexPair, ExperimentConfig, Kind,
};
use crate::error::CliError;

/// Growth exponent at or below which a trajectory counts as bounded evidence.
pub const BOUNDED_EXPONENT: f64 = 0.05;

/// Default probe horizon for the partial sums of `ỹ_m λ^{-n}`.
pub const DEFAULT_PROBE: u64 = 1_000_000;

#[derive(Debug, Clone)]
pub struct Settings {
    pub horizon: Option<u64>,
    pub tol: Option<f64>,
    pub exec: Execution,
    /// Directory that relative source paths are resolved against.
    pub base: PathBuf,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub kind: &'static str,
    pub horizon: u64,
    pub verdict: String,
    /// `certificate`, `evidence`, `classification` or `inconclusive`.
    pub verdict_class: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sup_abs: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub growth_exponent: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bound_value: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub expsum: Option<ExpsumSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scalar: Option<ScalarSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cell: Option<CellSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub system: Option<SystemSection>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExpsumSection {
    pub phase: String,
    pub sums: SumAnalysis,
    pub certificate: Certificate,
}

#[derive(Debug, Clone, Serialize)]
pub struct ScalarSection {
    pub rho: f64,
    pub phi: f64,
    pub classification: ScalarClassification,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trajectory: Option<Trajectory>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CellSection {
    pub rho: f64,
    pub phi: f64,
    pub order: usize,
    /// Initial values the trajectory was started from.
    pub x1: Vec<ComplexPair>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub partial_sum_constants: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub partial_sum_trends: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub probe_horizon: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness_sup: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub main_theorem: Option<MainTheoremInit>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub expanding_init: Option<BlockInit>,
    pub trajectory: BlockTrajectory,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub probe: Option<PerturbationReport>,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct BlockSection {
    pub rho: f64,
    pub phi: f64,
    pub order: usize,
    pub regime: BlockRegime,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub expanding_init: Option<BlockInit>,
    pub x1: Vec<ComplexPair>,
    pub state: Trajectory,
}

#[derive(Debug, Clone, Serialize)]
pub struct SystemSection {
    pub dimension: usize,
    /// `sqrt(sum_b sup_n |x_b(n)|^2)`, an upper bound for `sup_n |x(n)|`.
    pub state_sup_bound: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub transform_condition_hs: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub transform_distortion: Option<f64>,
    /// Final state `T x'(N)` in the original coordinates.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub final_state_original: Option<Vec<ComplexPair>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub transform_note: Option<String>,
    pub blocks: Vec<BlockSection>,
}

/// A finished analysis: the report and the plot samples `(n, value)`.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub report: Report,
    pub samples: Vec<(u64, Complex64)>,
}

fn pair(z: Complex64) -> ComplexPair {
    [z.re, z.im]
}

fn verdict_class(v: Verdict) -> &'static str {
    match v {
        Verdict::BoundedCertified | Verdict::UnboundedCertified => "certificate",
        Verdict::BoundedEvidence | Verdict::UnboundedEvidence => "evidence",
        Verdict::Inconclusive => "inconclusive",
    }
}

fn verdict_name(v: Verdict) -> String {
    format!("{v:?}")
}

fn trajectory_verdict(fit: &GrowthFit) -> String {
    if fit.exponent <= BOUNDED_EXPONENT {
        "BoundedEvidence".into()
    } else {
        "UnboundedEvidence".into()
    }
}

pub fn run(cfg: &ExperimentConfig, settings: &Settings) -> Result<Outcome, CliError> {
    let horizon = settings.horizon.unwrap_or(cfg.horizon);
    if horizon == 0 {
        return Err(CliError::Config("horizon must be positive".into()));
    }
    let tol = settings.tol.or(cfg.tol).unwrap_or(DEFAULT_TOL);
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(CliError::Config(format!("tol must be positive, got {tol}")));
    }
    match cfg.kind {
        Kind::Expsum => run_expsum(cfg, horizon),
        Kind::Scalar => run_scalar(cfg, horizon, tol, settings),
        Kind::JordanCell => run_cell(cfg, horizon, tol, settings),
        Kind::JordanSystem => run_system(cfg, horizon, tol, settings),
    }
}

fn declarations(cfg: &ExperimentConfig) -> Result<WphiDeclarations, CliError> {
    let d = cfg.declarations.clone().unwrap_or_default();
    Ok(WphiDeclarations {
        tail_majorant: d.majorant()?,
        psi: d.psi,
    })
}

fn run_expsum(cfg: &ExperimentConfig, horizon: u64) -> Result<Outcome, CliError> {
    let f = cfg.phase.as_ref().expect("validated").build()?;
    let decl = declarations(cfg)?;
    let sums = partial_sums(&f, horizon)?;
    let integer_psi = decl.psi.is_some_and(|p| (p - p.round()).abs() <= 1e-12);
    let certificate = if integer_psi {
        certify_unbounded(&f, horizon, decl.psi)?
    } else {
        let bounded = certify_bounded(&f, horizon, decl.tail_majorant.as_ref())?;
        if bounded.verdict == Verdict::Inconclusive {
            let unbounded = certify_unbounded(&f, horizon, decl.psi)?;
            if unbounded.verdict.is_unbounded() {
                unbounded
            } else {
                bounded
            }
        } else {
            bounded
        }
    };
    let samples = sums.samples.clone();
    Ok(Outcome {
        report: Report {
            kind: Kind::Expsum.name(),
            horizon,
            verdict: verdict_name(certificate.verdict),
            verdict_class: verdict_class(certificate.verdict),
            sup_abs: Some(sums.sup_abs),
            growth_exponent: Some(sums.growth_fit.exponent),
            bound_value: certificate.bound_value,
            expsum: Some(ExpsumSection {
                phase: f.to_string(),
                sums,
                certificate,
            }),
            scalar: None,
            cell: None,
            system: None,
        },
        samples,
    })
}

fn run_scalar(
    cfg: &ExperimentConfig,
    horizon: u64,
    tol: f64,
    settings: &Settings,
) -> Result<Outcome, CliError> {
    let sc = cfg.scalar.as_ref().expect("validated");
    let y = sc.y.build(&settings.base)?;
    let eq = ScalarEquation::new(sc.rho, sc.phi, complex_value(&sc.x1), y)?;
    let decl = declarations(cfg)?;
    let classification = classify_scalar_with(&eq, horizon, &decl, tol)?;
    let trajectory = if eq.rho > 1.0 && !eq.is_critical() {
        None
    } else {
        Some(simulate_scalar(&eq, horizon)?)
    };
    let (verdict, class, bound_value) = match (&classification.regime, &classification.certificate) {
        (Regime::Critical, Some(c)) => (verdict_name(c.verdict), verdict_class(c.verdict), c.bound_value),
        (Regime::Critical, None) => (
            trajectory_verdict(&trajectory.as_ref().expect("critical is simulated").growth_fit),
            "evidence",
            None,
        ),
        (r, _) => (format!("{r:?}"), "classification", None),
    };
    let samples = trajectory.as_ref().map(|t| t.values.clone()).unwrap_or_default();
    Ok(Outcome {
        report: Report {
            kind: Kind::Scalar.name(),
            horizon,
            verdict,
            verdict_class: class,
            sup_abs: trajectory.as_ref().map(|t| t.sup_abs),
            growth_exponent: trajectory.as_ref().map(|t| t.growth_fit.exponent),
            bound_value,
            expsum: None,
            scalar: Some(ScalarSection {
                rho: eq.rho,
                phi: eq.phi,
                classification,
                trajectory,
            }),
            cell: None,
            system: None,
        },
        samples,
    })
}

fn run_cell(
    cfg: &ExperimentConfig,
    horizon: u64,
    tol: f64,
    settings: &Settings,
) -> Result<Outcome, CliError> {
    let cell = cfg.cell.as_ref().expect("validated");
    let mut notes = Vec::new();
    let mut critical: Option<(CriticalCellProblem, MainTheoremInit)> = None;
    let mut probe = None;
    let mut expanding_init = None;
    let block = if let Some(ytilde) = &cell.ytilde {
        if cell.rho != 1.0 {
            return Err(CliError::Config("ytilde needs rho = 1".into()));
        }
        let ytilde = build_sources(ytilde, &settings.base)?;
        let order = ytilde.len();
        let x_first = match &cell.x1 {
            None => Complex64::new(0.0, 0.0),
            Some(v) if v.len() == 1 => complex_value(&v[0]),
            Some(_) => {
                return Err(CliError::Config(
                    "with ytilde, x1 gives only the free first row: one entry".into(),
                ))
            }
        };
        let alpha = match &cell.alpha {
            Some(a) if a.len() != order => {
                return Err(CliError::Config(format!(
                    "alpha has {} entries, the cell has order {order}",
                    a.len()
                )))
            }
            a => a.as_ref().map(|a| complex_list(a)),
        };
        let probe_horizon = cell.probe_horizon.unwrap_or(DEFAULT_PROBE);
        let p = CriticalCellProblem::new(cell.phi, ytilde, probe_horizon, alpha, settings.exec)?;
        let init = main_theorem_init(&p, tol, settings.exec)?;
        let x1 = init.initial_vector(x_first);
        if let Some(pc) = &cfg.probe {
            probe = Some(perturbation_probe(
                &p,
                &x1,
                complex_value(&pc.delta),
                pc.row,
                pc.horizon,
            )?);
        }
        let block = p.block(x1)?;
        critical = Some((p, init));
        block
    } else {
        if cfg.probe.is_some() {
            return Err(CliError::Config("[probe] needs a critical cell given by ytilde".into()));
        }
        let y = build_sources(cell.y.as_ref().expect("validated"), &settings.base)?;
        let order = y.len();
        let given = cell.x1.as_ref().map(|v| complex_list(v));
        if given.as_ref().is_some_and(|v| v.len() != order) {
            return Err(CliError::Config(format!("x1 needs {order} entries")));
        }
        let zero = vec![Complex64::new(0.0, 0.0); order];
        let block = JordanBlock::new(cell.rho, cell.phi, y, given.clone().unwrap_or(zero))?;
        if !block.lambda.is_critical() && block.lambda.rho > 1.0 {
            let init = required_init_expanding(&block, tol)?;
            let start = match given {
                Some(x) => {
                    notes.push("trajectory starts from the configured x1".into());
                    x
                }
                None => {
                    notes.push("trajectory starts from the bounded-solution initial value".into());
                    init.x1.clone()
                }
            };
            expanding_init = Some(init);
            block.with_x1(start)
        } else {
            block
        }
    };
    let trajectory = simulate_block(&block, horizon)?;
    let samples = trajectory.rows[0].values.clone();
    let state = &trajectory.state;
    let (verdict, sup_abs, exponent) = (
        trajectory_verdict(&state.growth_fit),
        state.sup_abs,
        state.growth_fit.exponent,
    );
    let (p, init) = match critical {
        Some((p, init)) => (Some(p), Some(init)),
        None => (None, None),
    };
    let section = CellSection {
        rho: cell.rho,
        phi: cell.phi,
        order: block.order(),
        x1: block.x1.iter().map(|&z| pair(z)).collect(),
        partial_sum_constants: p.as_ref().map(|p| p.c.clone()),
        partial_sum_trends: p.as_ref().map(|p| p.trend.clone()),
        probe_horizon: p.as_ref().map(|p| p.probe_horizon),
        witness_sup: p.as_ref().and_then(|p| p.alpha_sup.clone()),
        main_theorem: init,
        expanding_init,
        trajectory,
        probe,
        notes,
    };
    Ok(Outcome {
        report: Report {
            kind: Kind::JordanCell.name(),
            horizon,
            verdict,
            verdict_class: "evidence",
            sup_abs: Some(sup_abs),
            growth_exponent: Some(exponent),
            bound_value: None,
            expsum: None,
            scalar: None,
            cell: Some(section),
            system: None,
        },
        samples,
    })
}

fn run_system(
    cfg: &ExperimentConfig,
    horizon: u64,
    tol: f64,
    settings: &Settings,
) -> Result<Outcome, CliError> {
    let mut blocks = Vec::new();
    for (i, b) in cfg.blocks.iter().enumerate() {
        let y = build_sources(&b.y, &settings.base)?;
        let order = y.len();
        let x1 = match &b.x1 {
            Some(v) if v.len() != order => {
                return Err(CliError::Config(format!("block {}: x1 needs {order} entries", i + 1)))
            }
            Some(v) => complex_list(v),
            None => vec![Complex64::new(0.0, 0.0); order],
        };
        blocks.push((JordanBlock::new(b.rho, b.phi, y, x1)?, b.x1.is_some()));
    }
    let transform = match &cfg.transform {
        Some(t) => Some(Transform::new(
            t.t.iter().map(|row| complex_list(row)).collect(),
        )?),
        None => None,
    };
    let sys = JordanSystem::new(blocks.iter().map(|(b, _)| b.clone()).collect(), transform)?;
    let spectrum = classify_spectrum(&sys);
    let per_block = map_ordered(settings.exec, &blocks, |(b, given)| {
        let mut init = None;
        let start = if b.lambda.rho > 1.0 && !b.lambda.is_critical() {
            let i = required_init_expanding(b, tol)?;
            let x = if *given { b.x1.clone() } else { i.x1.clone() };
            init = Some(i);
            x
        } else {
            b.x1.clone()
        };
        let block = b.with_x1(start);
        let t = simulate_block(&block, horizon)?;
        Ok::<_, CliError>((block, init, t))
    });
    let mut sections = Vec::new();
    let mut finals = Vec::new();
    let mut sup2 = 0.0;
    let mut combined: Vec<(u64, f64)> = Vec::new();
    for (result, regime) in per_block.into_iter().zip(&spectrum.blocks) {
        let (block, init, t) = result?;
        sup2 += t.state.sup_abs * t.state.sup_abs;
        finals.extend(t.rows.iter().map(Trajectory::final_value));
        if combined.is_empty() {
            combined = t.state.values.iter().map(|&(n, _)| (n, 0.0)).collect();
        }
        for (acc, &(n, x)) in combined.iter_mut().zip(&t.state.values) {
            debug_assert_eq!(acc.0, n);
            acc.1 += x.norm_sqr();
        }
        sections.push(BlockSection {
            rho: block.lambda.rho,
            phi: block.lambda.phi,
            order: block.order(),
            regime: *regime,
            expanding_init: init,
            x1: block.x1.iter().map(|&z| pair(z)).collect(),
            state: t.state,
        });
    }
    let mut section = SystemSection {
        dimension: sys.dimension(),
        state_sup_bound: f64::sqrt(sup2),
        transform_condition_hs: None,
        transform_distortion: None,
        final_state_original: None,
        transform_note: None,
        blocks: sections,
    };
    if let Some(t) = &sys.transform {
        let mapped = apply_transform(&sys, &[finals], Direction::ToOriginal)?;
        section.transform_condition_hs = Some(t.condition_hs);
        section.transform_distortion = Some(mapped.distortion);
        section.final_state_original = Some(mapped.values[0].iter().map(|&z| pair(z)).collect());
        section.transform_note = Some(mapped.note);
    }
    let samples = combined
        .into_iter()
        .map(|(n, s)| (n, Complex64::new(s.sqrt(), 0.0)))
        .collect();
    Ok(Outcome {
        report: Report {
            kind: Kind::JordanSystem.name(),
            horizon,
            verdict: format!("{:?}", spectrum.verdict),
            verdict_class: "classification",
            sup_abs: None,
            growth_exponent: None,
            bound_value: None,
            expsum: None,
            scalar: None,
            cell: None,
            system: Some(section),
        },
        samples,
    })
}
