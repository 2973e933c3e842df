//! Self-checks run by the command-line `validate` mode.
//!
//! Checks come in two kinds. Invariant checks test structural identities at
//! the configured resolution; convergence checks compare against a run with
//! doubled node counts and flag an under-resolved grid.

use std::fmt;

use nalgebra::Matrix4;
use num_complex::Complex64;
use serde::Serialize;

use crate::berry::{
    berry_phase_closed_variant, berry_phase_loop_connection, berry_phase_overlap_extrapolated,
    relative_difference, ClosedFormVariant, LoopParams, DEFAULT_STEPS,
};
use crate::error::Result;
use crate::perturbation::{Channel, Model};
use crate::reference::PUBLISHED_PAIRS;
use crate::rms::{PhysicalConstants, QuadConfig, RmsPoint, StateIndex};

pub const ORTHONORMALITY_TOL: f64 = 1e-8;
pub const HERMITICITY_TOL: f64 = 1e-12;
pub const SUM_RULE_TOL: f64 = 1e-10;
pub const JACOBIAN_TOL: f64 = 1e-8;
pub const CONNECTION_TOL: f64 = 1e-6;
pub const OVERLAP_TOL: f64 = 1e-5;
pub const PAIR_TOL: f64 = 1e-3;
pub const CONVERGENCE_TOL: f64 = 1e-8;

const JACOBIAN_POINTS: usize = 100;
const JACOBIAN_STEP: f64 = 1e-5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckKind {
    Invariant,
    Convergence,
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub kind: CheckKind,
    pub passed: bool,
    pub value: f64,
    pub tolerance: f64,
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let status = match (self.passed, self.kind) {
            (true, _) => "PASS",
            (false, CheckKind::Invariant) => "FAIL",
            (false, CheckKind::Convergence) => "WARN",
        };
        write!(f, "{status} {:<40} {:.3e} (tol {:.0e})", self.name, self.value, self.tolerance)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValidationOptions {
    pub config: QuadConfig,
    pub steps: usize,
    pub variant: ClosedFormVariant,
    /// Also run the doubled-resolution comparison.
    pub convergence: bool,
}

impl Default for ValidationOptions {
    fn default() -> Self {
        Self {
            config: QuadConfig::default(),
            steps: DEFAULT_STEPS,
            variant: ClosedFormVariant::Standard,
            convergence: true,
        }
    }
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct ValidationReport {
    pub checks: Vec<Check>,
}

impl ValidationReport {
    fn push(&mut self, name: impl Into<String>, kind: CheckKind, value: f64, tolerance: f64) {
        self.checks.push(Check {
            name: name.into(),
            kind,
            passed: value <= tolerance,
            value,
            tolerance,
        });
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }

    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn invariants_passed(&self) -> bool {
        self.checks.iter().filter(|c| c.kind == CheckKind::Invariant).all(|c| c.passed)
    }

    pub fn converged(&self) -> bool {
        self.checks.iter().filter(|c| c.kind == CheckKind::Convergence).all(|c| c.passed)
    }
}

pub fn nonzero_states() -> impl Iterator<Item = StateIndex> {
    StateIndex::all().filter(|j| j.record().is_nonzero())
}

/// Largest deviation of the Gram matrix of the nonzero states from identity.
pub fn orthonormality_defect(model: &Model) -> f64 {
    let g = model.gram();
    let mut worst = 0.0f64;
    for i in nonzero_states() {
        for j in nonzero_states() {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((g[(i.slot(), j.slot())] - Complex64::new(target, 0.0)).norm());
        }
    }
    worst
}

/// `max |M_ij − M_ji*| / max |M|` for one channel.
pub fn hermiticity_defect(model: &Model, channel: Channel) -> f64 {
    let m = model.channel_matrix(channel);
    let scale = m.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let worst = (0..16)
        .flat_map(|i| (0..16).map(move |j| (i, j)))
        .map(|(i, j)| (m[(i, j)] - m[(j, i)].conj()).norm())
        .fold(0.0, f64::max);
    worst / scale
}

/// `max |M′ + M″ − W| / max |W|` where `W` is the φ-independent envelope.
pub fn sum_rule_defect(model: &Model) -> f64 {
    let w = model.envelope_matrix();
    let sum = model.channel_matrix(Channel::VPrime) + model.channel_matrix(Channel::VDoublePrime);
    let scale = w.iter().map(|z| z.norm()).fold(0.0, f64::max);
    (sum - w).iter().map(|z| z.norm()).fold(0.0, f64::max) / scale
}

/// Deterministic low-discrepancy sample of interior RMS points.
pub fn sample_points(count: usize) -> Vec<RmsPoint> {
    const G: [f64; 4] = [0.8566748838545029, 0.733891856627126, 0.6287067210378086, 0.5386621764878652];
    (1..=count)
        .map(|k| {
            let u = G.map(|g| (0.5 + g * k as f64).fract());
            RmsPoint::new(
                0.1 + 3.0 * u[0],
                0.05 + (std::f64::consts::PI - 0.1) * u[1],
                2.0 * std::f64::consts::PI * u[2],
                -2.5 + 5.0 * u[3],
            )
        })
        .collect()
}

/// `|det J| / (ρ³ sin²θ cosh β) − 1` from central differences of the embedding.
pub fn jacobian_defect(p: &RmsPoint, h: f64) -> f64 {
    let coords = [p.rho, p.theta, p.phi, p.beta];
    let mut jac = Matrix4::zeros();
    for (col, _) in coords.iter().enumerate() {
        let shifted = |s: f64| {
            let mut c = coords;
            c[col] += s;
            RmsPoint::new(c[0], c[1], c[2], c[3]).embed()
        };
        let (fwd, back) = (shifted(h), shifted(-h));
        for row in 0..4 {
            jac[(row, col)] = (fwd[row] - back[row]) / (2.0 * h);
        }
    }
    (jac.determinant().abs() / p.measure_weight() - 1.0).abs()
}

/// Largest change of any `a_i`, `b_i` between two resolutions, relative to
/// the largest coefficient.
pub fn coefficient_drift(coarse: &Model, fine: &Model, j: StateIndex) -> Result<f64> {
    let a = coarse.correction_coefficients(j)?;
    let b = fine.correction_coefficients(j)?;
    let scale = a.max_magnitude().max(b.max_magnitude());
    let worst = a
        .entries
        .iter()
        .map(|e| (e.a - b.a(e.index)).norm().max((e.b - b.b(e.index)).norm()))
        .fold(0.0, f64::max);
    Ok(if worst == 0.0 { 0.0 } else { worst / scale })
}

pub fn validate(opts: &ValidationOptions) -> Result<ValidationReport> {
    let model = Model::new(opts.config)?;
    let mut report = ValidationReport::default();
    let inv = CheckKind::Invariant;

    report.push("orthonormality", inv, orthonormality_defect(&model), ORTHONORMALITY_TOL);
    for ch in Channel::BOTH {
        report.push(format!("hermiticity {ch}"), inv, hermiticity_defect(&model, ch), HERMITICITY_TOL);
    }
    report.push("channel sum rule", inv, sum_rule_defect(&model), SUM_RULE_TOL);
    let jac = sample_points(JACOBIAN_POINTS)
        .iter()
        .map(|p| jacobian_defect(p, JACOBIAN_STEP))
        .fold(0.0, f64::max);
    report.push("measure jacobian", inv, jac, JACOBIAN_TOL);

    let c = PhysicalConstants::dimensionless();
    for j in StateIndex::all() {
        let closed = berry_phase_closed_variant(&model, j, &c, opts.variant)?;
        if let Some(class) = closed.zero_class {
            let name = format!("zero class j={} ({class:?})", j.get());
            report.push(name, inv, closed.dimensionless.abs(), 0.0);
            continue;
        }
        let coeffs = model.correction_coefficients(j)?;
        let lp = LoopParams::perturbative(&coeffs, opts.steps)?;
        let conn = berry_phase_loop_connection(&model, j, &lp, &c)?;
        let over = berry_phase_overlap_extrapolated(&model, j, &lp, &c)?;
        report.push(
            format!("closed vs connection j={}", j.get()),
            inv,
            closed.relative_difference(&conn),
            CONNECTION_TOL,
        );
        report.push(
            format!("closed vs overlap j={}", j.get()),
            inv,
            closed.relative_difference(&over),
            OVERLAP_TOL,
        );
    }

    for (p, q) in PUBLISHED_PAIRS {
        let (p, q) = (StateIndex::new(p)?, StateIndex::new(q)?);
        let gp = berry_phase_closed_variant(&model, p, &c, opts.variant)?;
        let gq = berry_phase_closed_variant(&model, q, &c, opts.variant)?;
        let scale = gp.term_scale.max(gq.term_scale);
        let d = relative_difference(gp.dimensionless, gq.dimensionless, scale);
        report.push(format!("pair j={} j={}", p.get(), q.get()), inv, d, PAIR_TOL);
    }

    if opts.convergence {
        let fine = Model::new(opts.config.doubled())?;
        let conv = CheckKind::Convergence;
        report.push(
            "orthonormality at doubled nodes",
            conv,
            orthonormality_defect(&model).max(orthonormality_defect(&fine)),
            ORTHONORMALITY_TOL,
        );
        for j in nonzero_states() {
            let drift = coefficient_drift(&model, &fine, j)?;
            report.push(format!("coefficients j={} under doubling", j.get()), conv, drift, CONVERGENCE_TOL);
        }
    }
    Ok(report)
}
