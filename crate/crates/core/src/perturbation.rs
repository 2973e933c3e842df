//! Matrix elements of the fractional-azimuth perturbations and the
//! first-order correction coefficients.
//!
//! Both channels share the envelope `ρ² sin²θ cosh²β`; they differ only in
//! the azimuthal weight, `cos²(2φ/3)` for V′ and `sin²(2φ/3)` for V″. Every
//! element is therefore the product of three real axis integrals and one
//! complex azimuthal integral. Elements are dimensionless: multiply by
//! `ħ/(Mω)` for SI, and coefficients by `1/(Mω²)`.

use std::f64::consts::PI;
use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::rms::{AxisPowers, Basis, QuadConfig, RmsPoint, StateIndex, Subspace};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Channel {
    /// `ρ² sin²θ cos²(2φ/3) cosh²β`, coupled to ε₁.
    VPrime,
    /// `ρ² sin²θ sin²(2φ/3) cosh²β`, coupled to ε₂.
    VDoublePrime,
}

impl Channel {
    pub const BOTH: [Channel; 2] = [Channel::VPrime, Channel::VDoublePrime];

    /// Azimuthal weight of the channel.
    pub fn azimuthal_weight(self, phi: f64) -> f64 {
        let c = (2.0 * phi / 3.0).cos();
        match self {
            Channel::VPrime => c * c,
            Channel::VDoublePrime => 1.0 - c * c,
        }
    }
}

impl fmt::Display for Channel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Channel::VPrime => "V'",
            Channel::VDoublePrime => "V''",
        })
    }
}

/// Couplings of the perturbed Hamiltonian; only ε₁ and ε₂ may be nonzero.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct PerturbationParams {
    pub eps0: f64,
    pub eps1: f64,
    pub eps2: f64,
    pub eps3: f64,
}

impl PerturbationParams {
    pub fn new(eps0: f64, eps1: f64, eps2: f64, eps3: f64) -> Result<Self> {
        if eps0 != 0.0 || eps3 != 0.0 {
            return Err(Error::Parameter(
                "only the eps1/eps2 couplings are supported; eps0 and eps3 must be zero".into(),
            ));
        }
        Ok(Self {
            eps0,
            eps1,
            eps2,
            eps3,
        })
    }

    pub fn planar(eps1: f64, eps2: f64) -> Self {
        Self {
            eps1,
            eps2,
            ..Self::default()
        }
    }
}

/// `∫_0^{2π} e^{ikφ} dφ` for real `k`.
fn exp_integral(k: f64) -> Complex64 {
    if k == 0.0 {
        Complex64::new(2.0 * PI, 0.0)
    } else {
        // (e^{2πik} - 1) / (ik)
        let (s, c) = (2.0 * PI * k).sin_cos();
        Complex64::new(s / k, (1.0 - c) / k)
    }
}

/// `∫_0^{2π} e^{−i(m_bra+½)φ} g(φ) e^{i(m_ket+½)φ} dφ` in closed form.
///
/// Uses `cos²(2φ/3) = (1 + cos(4φ/3))/2`, so with `Δ = m_ket − m_bra` the
/// V′ integral is `E(Δ)/2 + (E(Δ+4/3) + E(Δ−4/3))/4` and V″ flips the sign
/// of the second term.
pub fn phi_integral(m_bra: u32, m_ket: u32, channel: Channel) -> Complex64 {
    let delta = f64::from(m_ket) - f64::from(m_bra);
    let flat = exp_integral(delta) * 0.5;
    let beat = (exp_integral(delta + 4.0 / 3.0) + exp_integral(delta - 4.0 / 3.0)) * 0.25;
    match channel {
        Channel::VPrime => flat + beat,
        Channel::VDoublePrime => flat - beat,
    }
}

/// Matrix elements of V′, V″ and of their φ-independent sum on a fixed basis.
#[derive(Debug)]
pub struct Model {
    basis: Basis,
    v_prime: DMatrix<Complex64>,
    v_double_prime: DMatrix<Complex64>,
    envelope: DMatrix<Complex64>,
    gram: DMatrix<Complex64>,
}

impl Model {
    pub fn new(config: QuadConfig) -> Result<Self> {
        Self::from_basis(Basis::new(config)?)
    }

    pub fn from_basis(basis: Basis) -> Result<Self> {
        let n = StateIndex::COUNT;
        let pairs: Vec<(StateIndex, StateIndex)> = StateIndex::all()
            .flat_map(|i| StateIndex::all().map(move |j| (i, j)))
            .collect();
        let rows: Vec<[Complex64; 4]> = pairs
            .par_iter()
            .map(|&(i, j)| {
                Ok([
                    element_closed(&basis, i, j, Channel::VPrime)?,
                    element_closed(&basis, i, j, Channel::VDoublePrime)?,
                    envelope_element(&basis, i, j)?,
                    basis.inner_product(i, j)?,
                ])
            })
            .collect::<Result<_>>()?;
        let column = |k: usize| DMatrix::from_row_iterator(n, n, rows.iter().map(|r| r[k]));
        Ok(Self {
            v_prime: column(0),
            v_double_prime: column(1),
            envelope: column(2),
            gram: column(3),
            basis,
        })
    }

    pub fn basis(&self) -> &Basis {
        &self.basis
    }

    pub fn config(&self) -> &QuadConfig {
        self.basis.config()
    }

    /// `⟨ψ_i|V|ψ_j⟩`, dimensionless.
    pub fn matrix_element(&self, i: StateIndex, j: StateIndex, channel: Channel) -> Complex64 {
        self.channel_matrix(channel)[(i.slot(), j.slot())]
    }

    pub fn channel_matrix(&self, channel: Channel) -> &DMatrix<Complex64> {
        match channel {
            Channel::VPrime => &self.v_prime,
            Channel::VDoublePrime => &self.v_double_prime,
        }
    }

    /// `⟨ψ_i|ρ² sin²θ cosh²β|ψ_j⟩` with the azimuthal integral done by quadrature.
    pub fn envelope_matrix(&self) -> &DMatrix<Complex64> {
        &self.envelope
    }

    /// Gram matrix of the basis on the model's quadrature.
    pub fn gram(&self) -> &DMatrix<Complex64> {
        &self.gram
    }

    /// First-order coefficients of state `j`.
    pub fn correction_coefficients(&self, j: StateIndex) -> Result<CorrectionCoefficients> {
        let rec = j.record();
        if !rec.is_nonzero() {
            return Err(Error::UndefinedCorrection(format!("{j} {}", rec.qn)));
        }
        let entries = StateIndex::all()
            .filter(|i| i.record().eigenvalue != rec.eigenvalue)
            .map(|i| {
                let gap = rec.eigenvalue.gap_to(i.record().eigenvalue);
                CoefficientEntry {
                    index: i,
                    gap,
                    a: self.matrix_element(i, j, Channel::VPrime) / gap,
                    b: self.matrix_element(i, j, Channel::VDoublePrime) / gap,
                }
            })
            .collect();
        Ok(CorrectionCoefficients { state: j, entries })
    }

    /// The 4×4 block of a channel inside one degenerate subspace.
    pub fn degeneracy_report(&self, subspace: Subspace, channel: Channel) -> DegeneracyBlock {
        let members: Vec<StateIndex> = subspace.members().collect();
        let block = DMatrix::from_fn(4, 4, |r, c| self.matrix_element(members[r], members[c], channel));
        let max_off_diagonal = (0..4)
            .flat_map(|r| (0..4).filter(move |&c| c != r).map(move |c| (r, c)))
            .map(|(r, c)| block[(r, c)].norm())
            .fold(0.0, f64::max);
        DegeneracyBlock {
            subspace,
            channel,
            members,
            block,
            max_off_diagonal,
        }
    }
}

fn element_closed(basis: &Basis, i: StateIndex, j: StateIndex, channel: Channel) -> Result<Complex64> {
    let pre = basis.pair_prefactor(i, j)?;
    if pre == Complex64::new(0.0, 0.0) {
        return Ok(pre);
    }
    let axes = basis.axis_integrals(i, j, AxisPowers::ENVELOPE)?;
    Ok(pre * axes.product() * phi_integral(i.qn().m, j.qn().m, channel))
}

fn envelope_element(basis: &Basis, i: StateIndex, j: StateIndex) -> Result<Complex64> {
    let pre = basis.pair_prefactor(i, j)?;
    if pre == Complex64::new(0.0, 0.0) {
        return Ok(pre);
    }
    let axes = basis.axis_integrals(i, j, AxisPowers::ENVELOPE)?;
    let phi = basis.azimuthal_integral(i.qn().m, j.qn().m, |_| 1.0)?;
    Ok(pre * axes.product() * phi)
}

/// `⟨ψ_i|V|ψ_j⟩` with every axis, azimuth included, done by quadrature.
pub fn matrix_element_by_quadrature(
    basis: &Basis,
    i: StateIndex,
    j: StateIndex,
    channel: Channel,
) -> Result<Complex64> {
    let pre = basis.pair_prefactor(i, j)?;
    if pre == Complex64::new(0.0, 0.0) {
        return Ok(pre);
    }
    let axes = basis.axis_integrals(i, j, AxisPowers::ENVELOPE)?;
    let phi = basis.azimuthal_integral(i.qn().m, j.qn().m, |p| channel.azimuthal_weight(p))?;
    Ok(pre * axes.product() * phi)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CoefficientEntry {
    pub index: StateIndex,
    /// `(K_j − K_i)/(ħω)`.
    pub gap: f64,
    pub a: Complex64,
    pub b: Complex64,
}

/// `{a_i}, {b_i}` of one state, for every `i` outside its degenerate subspace.
///
/// Values are in units of `1/(Mω²)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrectionCoefficients {
    pub state: StateIndex,
    pub entries: Vec<CoefficientEntry>,
}

impl CorrectionCoefficients {
    pub fn a(&self, i: StateIndex) -> Complex64 {
        self.entry(i).map_or(Complex64::new(0.0, 0.0), |e| e.a)
    }

    pub fn b(&self, i: StateIndex) -> Complex64 {
        self.entry(i).map_or(Complex64::new(0.0, 0.0), |e| e.b)
    }

    pub fn entry(&self, i: StateIndex) -> Option<&CoefficientEntry> {
        self.entries.iter().find(|e| e.index == i)
    }

    pub fn indices(&self) -> impl Iterator<Item = StateIndex> + '_ {
        self.entries.iter().map(|e| e.index)
    }

    /// `⟨ψ′|ψ′⟩ = Σ|a_i|²`.
    pub fn sum_abs2_a(&self) -> f64 {
        self.entries.iter().map(|e| e.a.norm_sqr()).sum()
    }

    /// `⟨ψ″|ψ″⟩ = Σ|b_i|²`.
    pub fn sum_abs2_b(&self) -> f64 {
        self.entries.iter().map(|e| e.b.norm_sqr()).sum()
    }

    /// `⟨ψ′|ψ″⟩ = Σ a_i* b_i`.
    pub fn cross(&self) -> Complex64 {
        self.entries.iter().map(|e| e.a.conj() * e.b).sum()
    }

    /// `Σ |a_i| |b_i|`, the size of the individual terms of [`Self::cross`].
    pub fn cross_magnitude(&self) -> f64 {
        self.entries.iter().map(|e| e.a.norm() * e.b.norm()).sum()
    }

    /// `max_i max(|a_i|, |b_i|)`.
    pub fn max_magnitude(&self) -> f64 {
        self.entries.iter().map(|e| e.a.norm().max(e.b.norm())).fold(0.0, f64::max)
    }

    /// Coefficient vector of `ψ_j + ε₁ψ′ + ε₂ψ″` in the catalogue basis.
    pub fn state_vector(&self, eps1: f64, eps2: f64) -> [Complex64; 16] {
        let mut v = [Complex64::new(0.0, 0.0); 16];
        v[self.state.slot()] = Complex64::new(1.0, 0.0);
        for e in &self.entries {
            v[e.index.slot()] += e.a * eps1 + e.b * eps2;
        }
        v
    }
}

/// `Ψ_j = ψ_j + ε₁ Σ a_i ψ_i + ε₂ Σ b_i ψ_i`, evaluable pointwise.
#[derive(Debug, Clone)]
pub struct FirstOrderState<'a> {
    basis: &'a Basis,
    coefficients: [Complex64; 16],
}

impl<'a> FirstOrderState<'a> {
    pub fn new(model: &'a Model, coeffs: &CorrectionCoefficients, params: PerturbationParams) -> Self {
        Self {
            basis: model.basis(),
            coefficients: coeffs.state_vector(params.eps1, params.eps2),
        }
    }

    pub fn coefficients(&self) -> &[Complex64; 16] {
        &self.coefficients
    }

    /// Value at `p` in oscillator units.
    pub fn eval(&self, p: &RmsPoint) -> Result<Complex64> {
        let mut acc = Complex64::new(0.0, 0.0);
        for i in StateIndex::all() {
            let c = self.coefficients[i.slot()];
            if c != Complex64::new(0.0, 0.0) {
                acc += c * self.basis.eval_state(i, p)?;
            }
        }
        Ok(acc)
    }
}

/// Convenience constructor mirroring the coefficient call.
pub fn first_order_state<'a>(
    model: &'a Model,
    j: StateIndex,
    eps1: f64,
    eps2: f64,
) -> Result<FirstOrderState<'a>> {
    let coeffs = model.correction_coefficients(j)?;
    Ok(FirstOrderState::new(model, &coeffs, PerturbationParams::planar(eps1, eps2)))
}

#[derive(Debug, Clone)]
pub struct DegeneracyBlock {
    pub subspace: Subspace,
    pub channel: Channel,
    pub members: Vec<StateIndex>,
    pub block: DMatrix<Complex64>,
    /// Largest `|⟨ψ_i|V|ψ_i'⟩|` with `i ≠ i'` inside the subspace.
    pub max_off_diagonal: f64,
}
