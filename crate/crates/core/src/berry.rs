//! Berry phases of the first-order perturbed states around a circle
//! `ε₁ = r cos α, ε₂ = r sin α` in coupling space.
//!
//! Three routes are provided:
//!
//! * the closed form `γ_j / r² = −2π Im Σ a_i* b_i`;
//! * trapezoidal quadrature of `i∮⟨Ψ|∇Ψ⟩·dR` using the expanded connection;
//! * the gauge-invariant overlap product `−Im ln Π⟨Ψ̂_k|Ψ̂_{k+1}⟩` on
//!   per-sample normalized states, with inner products taken through the
//!   numerically integrated Gram matrix of the basis.
//!
//! Every result carries `term_scale = 2π Σ|a_i||b_i|`, the magnitude of the
//! individual contributions to the phase. Agreement between routes is
//! measured relative to the larger of the phases and that scale, which keeps
//! the comparison meaningful when the contributions cancel.

use std::f64::consts::PI;
use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::perturbation::{CorrectionCoefficients, Model};
use crate::quad::RELATIVE_FLOOR;
use crate::rms::{PhysicalConstants, QuadConfig, StateIndex};

/// Default number of α samples for the loop oracles.
pub const DEFAULT_STEPS: usize = 720;

/// Target for `r · max(|a_i|, |b_i|)` when picking a default radius.
pub const PERTURBATIVE_SIZE: f64 = 1e-2;

/// Overlaps between adjacent samples below this magnitude abort the loop.
const MIN_ADJACENT_OVERLAP: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LoopParams {
    /// Radius in units of `Mω²`.
    pub radius: f64,
    pub steps: usize,
    /// Traverse the circle clockwise.
    pub reversed: bool,
}

impl LoopParams {
    pub fn new(radius: f64, steps: usize) -> Result<Self> {
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::Parameter(format!("loop radius must be positive, got {radius}")));
        }
        if steps < 8 {
            return Err(Error::Parameter(format!("a loop needs at least 8 steps, got {steps}")));
        }
        Ok(Self {
            radius,
            steps,
            reversed: false,
        })
    }

    /// `steps` samples at a radius small enough for the first-order states.
    pub fn perturbative(coeffs: &CorrectionCoefficients, steps: usize) -> Result<Self> {
        let max = coeffs.max_magnitude();
        let radius = if max > 0.0 {
            PERTURBATIVE_SIZE / max
        } else {
            PERTURBATIVE_SIZE
        };
        Self::new(radius, steps)
    }

    pub fn reversed(mut self, reversed: bool) -> Self {
        self.reversed = reversed;
        self
    }

    pub fn with_radius(mut self, radius: f64) -> Self {
        self.radius = radius;
        self
    }

    fn angle(&self, k: usize) -> f64 {
        let a = 2.0 * PI * k as f64 / self.steps as f64;
        if self.reversed {
            -a
        } else {
            a
        }
    }

    fn couplings(&self, k: usize) -> (f64, f64) {
        let (s, c) = self.angle(k).sin_cos();
        (self.radius * c, self.radius * s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Closed,
    LoopConnection,
    LoopOverlap,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Closed => "closed",
            Method::LoopConnection => "loop-connection",
            Method::LoopOverlap => "loop-overlap",
        })
    }
}

/// Why a state's phase is zero without computation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ZeroClass {
    /// `l < n`: the hyperangular factor vanishes.
    Hyperangular,
    /// `m < n`: the rapidity factor vanishes.
    Rapidity,
}

impl ZeroClass {
    pub fn of(j: StateIndex) -> Option<Self> {
        let qn = j.qn();
        if qn.hyperangular_vanishes() {
            Some(Self::Hyperangular)
        } else if qn.rapidity_vanishes() {
            Some(Self::Rapidity)
        } else {
            None
        }
    }

    pub fn note(&self) -> &'static str {
        match self {
            Self::Hyperangular => "state identically zero (l < n)",
            Self::Rapidity => "state identically zero (m < n), no first-order correction",
        }
    }
}

/// Hook for mutation checks on the closed form.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ClosedFormVariant {
    #[default]
    Standard,
    /// `+2π Im Σ a_i* b_i`.
    SignFlipped,
    /// `−2π Im Σ a_i b_i`.
    Unconjugated,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhaseMeta {
    pub nodes: QuadConfig,
    pub steps: Option<usize>,
    pub radius: Option<f64>,
    pub reversed: bool,
    pub extrapolated: bool,
    /// Real part of `∮⟨Ψ|∇Ψ⟩·dR` divided by r², discarded from the phase.
    pub imaginary_residue: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhaseResult {
    pub state: StateIndex,
    pub method: Method,
    /// `γ_j / r²` in the units of `constants`.
    pub gamma_over_r2: f64,
    /// `γ_j / r²` with couplings in units of `Mω²`.
    pub dimensionless: f64,
    /// `2π Σ |a_i||b_i|` in the same units as `dimensionless`.
    pub term_scale: f64,
    /// `1/(Mω²)²`, the factor turning `dimensionless` into `gamma_over_r2`.
    pub prefactor: f64,
    pub constants: PhysicalConstants,
    pub zero_class: Option<ZeroClass>,
    pub meta: PhaseMeta,
}

impl PhaseResult {
    fn new(
        state: StateIndex,
        method: Method,
        dimensionless: f64,
        term_scale: f64,
        c: &PhysicalConstants,
        meta: PhaseMeta,
    ) -> Self {
        let prefactor = coupling_prefactor(c);
        Self {
            state,
            method,
            gamma_over_r2: dimensionless * prefactor,
            dimensionless,
            term_scale,
            prefactor,
            constants: *c,
            zero_class: None,
            meta,
        }
    }

    fn zero(state: StateIndex, method: Method, class: ZeroClass, c: &PhysicalConstants, meta: PhaseMeta) -> Self {
        Self {
            zero_class: Some(class),
            ..Self::new(state, method, 0.0, 0.0, c, meta)
        }
    }

    /// `|γ − γ'| / max(|γ|, |γ'|, term_scale)` on the dimensionless values.
    pub fn relative_difference(&self, other: &PhaseResult) -> f64 {
        relative_difference(self.dimensionless, other.dimensionless, self.term_scale.max(other.term_scale))
    }

    /// True when `|γ|` is below `tol` times the term scale.
    pub fn cancels_within(&self, tol: f64) -> bool {
        self.dimensionless.abs() <= tol * self.term_scale
    }
}

/// `|x − y| / max(|x|, |y|, scale)`; exact agreement gives zero.
pub fn relative_difference(x: f64, y: f64, scale: f64) -> f64 {
    let diff = (x - y).abs();
    if diff == 0.0 {
        return 0.0;
    }
    diff / x.abs().max(y.abs()).max(scale).max(RELATIVE_FLOOR)
}

/// `1/(Mω²)²`.
pub fn coupling_prefactor(c: &PhysicalConstants) -> f64 {
    c.coupling_scale().powi(-2)
}

/// Symbolic form of [`coupling_prefactor`].
pub const PREFACTOR_SYMBOL: &str = "1/(M ω²)²";

fn term_scale(coeffs: &CorrectionCoefficients) -> f64 {
    2.0 * PI * coeffs.cross_magnitude()
}

fn meta(model: &Model) -> PhaseMeta {
    PhaseMeta {
        nodes: *model.config(),
        steps: None,
        radius: None,
        reversed: false,
        extrapolated: false,
        imaginary_residue: None,
    }
}

/// `⟨Ψ_j|∇_R Ψ_j⟩` at `(ε₁, ε₂)`:
/// `(ε₁Σ|a|² + ε₂Σ a b*, ε₁Σ a* b + ε₂Σ|b|²)`.
pub fn berry_connection(coeffs: &CorrectionCoefficients, eps1: f64, eps2: f64) -> (Complex64, Complex64) {
    let cross = coeffs.cross();
    let first = coeffs.sum_abs2_a() * eps1 + cross.conj() * eps2;
    let second = cross * eps1 + coeffs.sum_abs2_b() * eps2;
    (first, second)
}

/// Closed-form phase `γ_j/r² = −2π Im Σ a_i* b_i`.
pub fn berry_phase_closed(model: &Model, j: StateIndex, c: &PhysicalConstants) -> Result<PhaseResult> {
    berry_phase_closed_variant(model, j, c, ClosedFormVariant::Standard)
}

pub fn berry_phase_closed_variant(
    model: &Model,
    j: StateIndex,
    c: &PhysicalConstants,
    variant: ClosedFormVariant,
) -> Result<PhaseResult> {
    if let Some(class) = ZeroClass::of(j) {
        return Ok(PhaseResult::zero(j, Method::Closed, class, c, meta(model)));
    }
    let coeffs = model.correction_coefficients(j)?;
    let value = match variant {
        ClosedFormVariant::Standard => -2.0 * PI * coeffs.cross().im,
        ClosedFormVariant::SignFlipped => 2.0 * PI * coeffs.cross().im,
        ClosedFormVariant::Unconjugated => {
            let plain: Complex64 = coeffs.entries.iter().map(|e| e.a * e.b).sum();
            -2.0 * PI * plain.im
        }
    };
    Ok(PhaseResult::new(j, Method::Closed, value, term_scale(&coeffs), c, meta(model)))
}

/// Trapezoidal `i∮⟨Ψ|∇Ψ⟩·dR` over the loop, divided by r².
pub fn berry_phase_loop_connection(
    model: &Model,
    j: StateIndex,
    lp: &LoopParams,
    c: &PhysicalConstants,
) -> Result<PhaseResult> {
    let mut m = meta(model);
    m.steps = Some(lp.steps);
    m.radius = Some(lp.radius);
    m.reversed = lp.reversed;
    if let Some(class) = ZeroClass::of(j) {
        return Ok(PhaseResult::zero(j, Method::LoopConnection, class, c, m));
    }
    let coeffs = model.correction_coefficients(j)?;
    let d_alpha = if lp.reversed { -1.0 } else { 1.0 } * 2.0 * PI / lp.steps as f64;
    let mut circulation = Complex64::new(0.0, 0.0);
    for k in 0..lp.steps {
        let (e1, e2) = lp.couplings(k);
        let (a1, a2) = berry_connection(&coeffs, e1, e2);
        // dR/dα = (−ε₂, ε₁)
        circulation += (a1 * -e2 + a2 * e1) * d_alpha;
    }
    let r2 = lp.radius * lp.radius;
    // i·S = −Im S + i Re S
    m.imaginary_residue = Some(circulation.re / r2);
    Ok(PhaseResult::new(
        j,
        Method::LoopConnection,
        -circulation.im / r2,
        term_scale(&coeffs),
        c,
        m,
    ))
}

/// Coefficient vectors of `Ψ_j(α_k)` around the loop.
pub fn loop_samples(coeffs: &CorrectionCoefficients, lp: &LoopParams) -> Vec<[Complex64; 16]> {
    (0..lp.steps)
        .map(|k| {
            let (e1, e2) = lp.couplings(k);
            coeffs.state_vector(e1, e2)
        })
        .collect()
}

fn gram_product(gram: &DMatrix<Complex64>, u: &[Complex64; 16], v: &[Complex64; 16]) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for r in 0..16 {
        if u[r] == Complex64::new(0.0, 0.0) {
            continue;
        }
        let mut row = Complex64::new(0.0, 0.0);
        for c in 0..16 {
            row += gram[(r, c)] * v[c];
        }
        acc += u[r].conj() * row;
    }
    acc
}

/// `−Im ln Π_k ⟨Ψ̂_k|Ψ̂_{k+1}⟩` over the closed chain of samples.
pub fn overlap_phase(gram: &DMatrix<Complex64>, samples: &[[Complex64; 16]]) -> Result<f64> {
    let n = samples.len();
    let norms: Vec<f64> = samples.iter().map(|s| gram_product(gram, s, s).re.sqrt()).collect();
    let mut product = Complex64::new(1.0, 0.0);
    for k in 0..n {
        let next = (k + 1) % n;
        let o = gram_product(gram, &samples[k], &samples[next]) / (norms[k] * norms[next]);
        if !(o.norm() >= MIN_ADJACENT_OVERLAP) {
            return Err(Error::StepResolution {
                sample: k,
                next,
                magnitude: o.norm(),
            });
        }
        product *= o;
        product /= product.norm();
    }
    Ok(-product.arg())
}

/// Overlap-product phase at the loop's radius, divided by r².
pub fn berry_phase_loop_overlap(
    model: &Model,
    j: StateIndex,
    lp: &LoopParams,
    c: &PhysicalConstants,
) -> Result<PhaseResult> {
    let mut m = meta(model);
    m.steps = Some(lp.steps);
    m.radius = Some(lp.radius);
    m.reversed = lp.reversed;
    if let Some(class) = ZeroClass::of(j) {
        return Ok(PhaseResult::zero(j, Method::LoopOverlap, class, c, m));
    }
    let coeffs = model.correction_coefficients(j)?;
    let phase = overlap_phase(model.gram(), &loop_samples(&coeffs, lp))?;
    Ok(PhaseResult::new(
        j,
        Method::LoopOverlap,
        phase / (lp.radius * lp.radius),
        term_scale(&coeffs),
        c,
        m,
    ))
}

/// Overlap phase at `r` and `r/2`, extrapolated to `r → 0` assuming an
/// `O(r²)` error: `(4 f(r/2) − f(r)) / 3`.
pub fn berry_phase_overlap_extrapolated(
    model: &Model,
    j: StateIndex,
    lp: &LoopParams,
    c: &PhysicalConstants,
) -> Result<PhaseResult> {
    let coarse = berry_phase_loop_overlap(model, j, lp, c)?;
    if coarse.zero_class.is_some() {
        return Ok(coarse);
    }
    let fine = berry_phase_loop_overlap(model, j, &lp.with_radius(0.5 * lp.radius), c)?;
    let value = (4.0 * fine.dimensionless - coarse.dimensionless) / 3.0;
    let mut m = coarse.meta;
    m.extrapolated = true;
    Ok(PhaseResult::new(j, Method::LoopOverlap, value, coarse.term_scale, c, m))
}

/// All three routes side by side.
#[derive(Debug, Clone, Serialize)]
pub struct OracleComparison {
    pub closed: PhaseResult,
    pub connection: PhaseResult,
    pub overlap_at_radius: PhaseResult,
    pub overlap_at_half_radius: PhaseResult,
    pub overlap_extrapolated: PhaseResult,
    pub closed_vs_connection: f64,
    pub closed_vs_overlap: f64,
    pub connection_vs_overlap: f64,
}

pub fn compare_oracles(model: &Model, j: StateIndex, lp: &LoopParams, c: &PhysicalConstants) -> Result<OracleComparison> {
    let closed = berry_phase_closed(model, j, c)?;
    let connection = berry_phase_loop_connection(model, j, lp, c)?;
    let overlap_at_radius = berry_phase_loop_overlap(model, j, lp, c)?;
    let overlap_at_half_radius = berry_phase_loop_overlap(model, j, &lp.with_radius(0.5 * lp.radius), c)?;
    let overlap_extrapolated = berry_phase_overlap_extrapolated(model, j, lp, c)?;
    // the closed form is orientation-independent; compare it against the traversal direction
    let oriented = if lp.reversed {
        PhaseResult {
            dimensionless: -closed.dimensionless,
            gamma_over_r2: -closed.gamma_over_r2,
            ..closed.clone()
        }
    } else {
        closed.clone()
    };
    Ok(OracleComparison {
        closed_vs_connection: oriented.relative_difference(&connection),
        closed_vs_overlap: oriented.relative_difference(&overlap_extrapolated),
        connection_vs_overlap: connection.relative_difference(&overlap_extrapolated),
        closed: oriented,
        connection,
        overlap_at_radius,
        overlap_at_half_radius,
        overlap_extrapolated,
    })
}
