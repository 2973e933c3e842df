//! Reduced Minkowski Space geometry, the sixteen-state oscillator catalogue
//! and numerically normalized eigenfunctions.
//!
//! Internally every length is measured in units of `sqrt(ħ/(Mω))` and every
//! energy in units of `ħω`. [`PhysicalConstants`] converts at the boundary;
//! [`PhysicalConstants::dimensionless`] makes the conversion the identity.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;
use std::sync::{Arc, Mutex, OnceLock};

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{domain, Error, Result};
use crate::quad::{self, QuadratureRule, DEFAULT_NODES};
use crate::specfun::{assoc_legendre_trig, laguerre_unchecked, LegendreOrder};

/// Planck constant as printed alongside the table of phases, in J·s.
pub const PRINTED_PLANCK: f64 = 6.626e-34;
/// Electron mass in kg.
pub const ELECTRON_MASS: f64 = 9.109e-31;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum OmegaConvention {
    /// The quoted MHz figure is ω itself, in 10^6 rad/s.
    #[default]
    Angular,
    /// The quoted MHz figure is a cyclic frequency f, and ω = 2πf.
    Cyclic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum HbarConvention {
    /// The printed 6.626e-34 J·s is taken as ħ.
    #[default]
    Hbar,
    /// The printed 6.626e-34 J·s is h, and ħ = h/2π.
    H,
}

impl FromStr for OmegaConvention {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "angular" => Ok(Self::Angular),
            "cyclic" => Ok(Self::Cyclic),
            other => Err(Error::Parameter(format!("unknown omega convention `{other}`"))),
        }
    }
}

impl FromStr for HbarConvention {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "hbar" => Ok(Self::Hbar),
            "h" => Ok(Self::H),
            other => Err(Error::Parameter(format!("unknown hbar convention `{other}`"))),
        }
    }
}

impl fmt::Display for OmegaConvention {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Angular => "angular",
            Self::Cyclic => "cyclic",
        })
    }
}

impl fmt::Display for HbarConvention {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Hbar => "hbar",
            Self::H => "h",
        })
    }
}

/// ħ, particle mass and oscillator angular frequency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhysicalConstants {
    pub hbar: f64,
    pub mass: f64,
    pub omega: f64,
}

impl PhysicalConstants {
    pub fn new(hbar: f64, mass: f64, omega: f64) -> Result<Self> {
        for (name, v) in [("hbar", hbar), ("mass", mass), ("omega", omega)] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Parameter(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(Self { hbar, mass, omega })
    }

    /// Unit constants: all results come out in oscillator units.
    pub fn dimensionless() -> Self {
        Self {
            hbar: 1.0,
            mass: 1.0,
            omega: 1.0,
        }
    }

    /// Electron mass, printed Planck constant and a frequency quoted in MHz.
    pub fn electron(omega_mhz: f64, omega: OmegaConvention, hbar: HbarConvention) -> Result<Self> {
        let omega = match omega {
            OmegaConvention::Angular => omega_mhz * 1e6,
            OmegaConvention::Cyclic => 2.0 * PI * omega_mhz * 1e6,
        };
        let hbar = match hbar {
            HbarConvention::Hbar => PRINTED_PLANCK,
            HbarConvention::H => PRINTED_PLANCK / (2.0 * PI),
        };
        Self::new(hbar, ELECTRON_MASS, omega)
    }

    pub fn is_dimensionless(&self) -> bool {
        *self == Self::dimensionless()
    }

    /// `ħ/(Mω)`, the square of the oscillator length.
    pub fn length_squared(&self) -> f64 {
        self.hbar / (self.mass * self.omega)
    }

    /// `ħω`.
    pub fn energy_scale(&self) -> f64 {
        self.hbar * self.omega
    }

    /// `Mω²`, the natural unit of the couplings ε₁, ε₂.
    pub fn coupling_scale(&self) -> f64 {
        self.mass * self.omega * self.omega
    }
}

/// Eigenvalue of the unperturbed oscillator, stored exactly as `2K/(ħω)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct Eigenvalue {
    twice: u32,
}

impl Eigenvalue {
    pub fn from_twice(twice: u32) -> Self {
        Self { twice }
    }

    /// `2K/(ħω)`, an odd integer.
    pub fn twice_in_hbar_omega(&self) -> u32 {
        self.twice
    }

    pub fn in_hbar_omega(&self) -> f64 {
        f64::from(self.twice) / 2.0
    }

    /// `(K_self - K_other)/(ħω)`, exact.
    pub fn gap_to(&self, other: Eigenvalue) -> f64 {
        (f64::from(self.twice) - f64::from(other.twice)) / 2.0
    }
}

impl fmt::Display for Eigenvalue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}", self.twice / 2, if self.twice % 2 == 1 { 5 } else { 0 })
    }
}

/// `(n_a, l, n, m)` labelling `ψ_{n_a l n m}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct QuantumNumbers {
    pub n_a: u32,
    pub l: u32,
    pub n: u32,
    pub m: u32,
}

impl QuantumNumbers {
    pub const fn new(n_a: u32, l: u32, n: u32, m: u32) -> Self {
        Self { n_a, l, n, m }
    }

    pub fn eigenvalue(&self) -> Eigenvalue {
        Eigenvalue::from_twice(2 * self.l + 4 * self.n_a + 3)
    }

    /// `l < n`: `P^n_l(cos θ) ≡ 0`.
    pub fn hyperangular_vanishes(&self) -> bool {
        self.l < self.n
    }

    /// `m < n`: `P^{-n}_m(tanh β) ≡ 0` under the fixed Legendre convention.
    pub fn rapidity_vanishes(&self) -> bool {
        self.m < self.n
    }

    /// The eigenfunction is zero everywhere.
    pub fn vanishes(&self) -> bool {
        self.hyperangular_vanishes() || self.rapidity_vanishes()
    }
}

impl fmt::Display for QuantumNumbers {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{},{},{})", self.n_a, self.l, self.n, self.m)
    }
}

/// `K = ħω(l + 2n_a + 3/2)` in joules (or ħω units for dimensionless constants).
pub fn eigenvalue(qn: &QuantumNumbers, c: &PhysicalConstants) -> f64 {
    qn.eigenvalue().in_hbar_omega() * c.energy_scale()
}

/// Catalogue index `i ∈ 1..=16`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(transparent)]
pub struct StateIndex(u8);

impl StateIndex {
    pub const COUNT: usize = 16;

    pub fn new(i: usize) -> Result<Self> {
        if (1..=Self::COUNT).contains(&i) {
            Ok(Self(i as u8))
        } else {
            Err(Error::Parameter(format!("state index {i} outside 1..=16")))
        }
    }

    pub fn get(self) -> usize {
        usize::from(self.0)
    }

    /// Zero-based position in catalogue-sized arrays.
    pub fn slot(self) -> usize {
        usize::from(self.0) - 1
    }

    pub fn all() -> impl Iterator<Item = StateIndex> {
        (1..=Self::COUNT as u8).map(StateIndex)
    }

    pub fn record(self) -> StateRecord {
        state_table()[self.slot()]
    }

    pub fn qn(self) -> QuantumNumbers {
        self.record().qn
    }
}

impl fmt::Display for StateIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl FromStr for StateIndex {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let i: usize = s
            .trim()
            .parse()
            .map_err(|_| Error::Parameter(format!("`{s}` is not a state index")))?;
        Self::new(i)
    }
}

/// One of the four degenerate eigenspaces `D_1..D_4`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Subspace {
    D1,
    D2,
    D3,
    D4,
}

impl Subspace {
    pub const ALL: [Subspace; 4] = [Subspace::D1, Subspace::D2, Subspace::D3, Subspace::D4];

    pub fn members(self) -> impl Iterator<Item = StateIndex> {
        let first = 4 * (self as usize);
        (first + 1..=first + 4).map(|i| StateIndex(i as u8))
    }
}

impl fmt::Display for Subspace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "D{}", *self as usize + 1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct StateRecord {
    pub index: StateIndex,
    pub qn: QuantumNumbers,
    pub eigenvalue: Eigenvalue,
    pub subspace: Subspace,
    /// `l < n`, the states the index table marks as vanishing.
    pub identically_zero: bool,
}

impl StateRecord {
    /// False for every state whose eigenfunction is zero, including `m < n`.
    pub fn is_nonzero(&self) -> bool {
        !self.qn.vanishes()
    }
}

/// The sixteen states with every index in {2, 3}, in `(n_a, l, n, m)`
/// lexicographic order.
pub fn state_table() -> &'static [StateRecord; 16] {
    static TABLE: OnceLock<[StateRecord; 16]> = OnceLock::new();
    TABLE.get_or_init(|| {
        std::array::from_fn(|k| {
            let bit = |shift: usize| 2 + ((k >> shift) & 1) as u32;
            let qn = QuantumNumbers::new(bit(3), bit(2), bit(1), bit(0));
            StateRecord {
                index: StateIndex(k as u8 + 1),
                qn,
                eigenvalue: qn.eigenvalue(),
                subspace: Subspace::ALL[k / 4],
                identically_zero: qn.hyperangular_vanishes(),
            }
        })
    })
}

/// A point `(ρ, θ, φ, β)` of the Reduced Minkowski Space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RmsPoint {
    pub rho: f64,
    pub theta: f64,
    pub phi: f64,
    pub beta: f64,
}

impl RmsPoint {
    pub fn new(rho: f64, theta: f64, phi: f64, beta: f64) -> Self {
        Self {
            rho,
            theta,
            phi,
            beta,
        }
    }

    /// Spacelike four-vector `(x⁰, x¹, x², x³)`.
    ///
    /// `x²` carries `cosh β`; with `sinh β` the point would not satisfy
    /// `x·x = ρ²` and the measure would depend on `φ`.
    pub fn embed(&self) -> [f64; 4] {
        let (st, ct) = self.theta.sin_cos();
        let (sp, cp) = self.phi.sin_cos();
        let (sh, ch) = (self.beta.sinh(), self.beta.cosh());
        [
            self.rho * st * sh,
            self.rho * st * cp * ch,
            self.rho * st * sp * ch,
            self.rho * ct,
        ]
    }

    /// `|∂(x⁰..x³)/∂(ρ, θ, φ, β)| = ρ³ sin²θ cosh β`.
    pub fn measure_weight(&self) -> f64 {
        let s = self.theta.sin();
        self.rho.powi(3) * s * s * self.beta.cosh()
    }
}

/// Minkowski square with signature (−, +, +, +).
pub fn minkowski_square(x: &[f64; 4]) -> f64 {
    -x[0] * x[0] + x[1] * x[1] + x[2] * x[2] + x[3] * x[3]
}

/// `e^{i(m+1/2)φ}`.
pub fn azimuthal_factor(m: u32, phi: f64) -> Complex64 {
    Complex64::from_polar(1.0, (f64::from(m) + 0.5) * phi)
}

/// `(1 − tanh²β)^{1/4} P^{−n}_m(tanh β)`.
pub fn rapidity_factor(n: u32, m: u32, beta: f64) -> f64 {
    let sech = beta.cosh().recip();
    let ord = LegendreOrder::new(m, -(n as i32));
    sech.sqrt() * assoc_legendre_trig(ord, beta.tanh(), sech)
}

/// `(1 − cos²θ)^{−1/4} P^n_l(cos θ)`; singular on the polar axis.
pub fn polar_factor(l: u32, n: u32, theta: f64) -> Result<f64> {
    let s = theta.sin();
    if !(theta > 0.0 && theta < PI && s > 0.0) {
        return Err(domain(
            "polar_factor",
            format!("θ = {theta} lies on the polar axis where (sin θ)^(-1/2) diverges"),
        ));
    }
    let ord = LegendreOrder::new(l, n as i32);
    Ok(assoc_legendre_trig(ord, theta.cos(), s) / s.sqrt())
}

/// `x^{−1/2} (x²)^{l/2} e^{−x²/2} L^{l+1/2}_{n_a}(x²)` with `x = ρ / sqrt(ħ/(Mω))`.
pub fn radial_factor(n_a: u32, l: u32, x: f64) -> f64 {
    let s = x * x;
    x.powf(f64::from(l) - 0.5) * (-0.5 * s).exp() * laguerre_unchecked(n_a, f64::from(l) + 0.5, s)
}

/// The product form of the eigenfunction with all constant prefactors dropped.
///
/// `p.rho` is in metres (or oscillator units for dimensionless constants);
/// the radial factor is evaluated at `ρ / sqrt(ħ/(Mω))`.
pub fn eval_unnormalized(qn: &QuantumNumbers, p: &RmsPoint, c: &PhysicalConstants) -> Result<Complex64> {
    if qn.vanishes() {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let polar = polar_factor(qn.l, qn.n, p.theta)?;
    let x = p.rho / c.length_squared().sqrt();
    let real = rapidity_factor(qn.n, qn.m, p.beta) * polar * radial_factor(qn.n_a, qn.l, x);
    Ok(azimuthal_factor(qn.m, p.phi) * real)
}

/// Node counts for the four axes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct QuadConfig {
    pub radial: usize,
    pub polar: usize,
    pub azimuthal: usize,
    pub rapidity: usize,
}

impl QuadConfig {
    pub fn uniform(n: usize) -> Self {
        Self {
            radial: n,
            polar: n,
            azimuthal: n,
            rapidity: n,
        }
    }

    pub fn doubled(&self) -> Self {
        Self {
            radial: 2 * self.radial,
            polar: 2 * self.polar,
            azimuthal: 2 * self.azimuthal,
            rapidity: 2 * self.rapidity,
        }
    }
}

impl Default for QuadConfig {
    fn default() -> Self {
        Self::uniform(DEFAULT_NODES)
    }
}

/// The four one-dimensional rules in oscillator units.
#[derive(Debug, Clone)]
pub struct AxisRules {
    pub radial: QuadratureRule,
    pub polar: QuadratureRule,
    pub azimuthal: QuadratureRule,
    pub rapidity: QuadratureRule,
}

impl AxisRules {
    pub fn new(cfg: &QuadConfig) -> Result<Self> {
        Ok(Self {
            radial: quad::radial_rule(cfg.radial, 1.0)?,
            polar: quad::polar_rule(cfg.polar)?,
            azimuthal: quad::azimuthal_rule(cfg.azimuthal)?,
            rapidity: quad::rapidity_rule(cfg.rapidity)?,
        })
    }
}

/// Separable factors of one state tabulated on the rule nodes.
#[derive(Debug, Clone)]
struct Samples {
    radial: Vec<f64>,
    polar: Vec<f64>,
    rapidity: Vec<f64>,
}

impl Samples {
    fn tabulate(qn: &QuantumNumbers, rules: &AxisRules) -> Result<Self> {
        let radial = rules.radial.nodes().iter().map(|&x| radial_factor(qn.n_a, qn.l, x)).collect();
        let polar = rules
            .polar
            .nodes()
            .iter()
            .map(|&t| polar_factor(qn.l, qn.n, t))
            .collect::<Result<_>>()?;
        let rapidity = rules.rapidity.nodes().iter().map(|&b| rapidity_factor(qn.n, qn.m, b)).collect();
        Ok(Self {
            radial,
            polar,
            rapidity,
        })
    }
}

/// Extra powers multiplying the measure on each real axis.
///
/// The measure itself (`x³`, `sin²θ`, `cosh β`) is always included.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct AxisPowers {
    pub radial: i32,
    pub polar_sin: i32,
    pub rapidity_cosh: i32,
}

impl AxisPowers {
    /// The `ρ² sin²θ cosh²β` envelope shared by both perturbation channels.
    pub const ENVELOPE: AxisPowers = AxisPowers {
        radial: 2,
        polar_sin: 2,
        rapidity_cosh: 2,
    };
}

/// Real parts of a separable matrix element, one integral per axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxisIntegrals {
    pub radial: f64,
    pub polar: f64,
    pub rapidity: f64,
}

impl AxisIntegrals {
    pub fn product(&self) -> f64 {
        self.radial * self.polar * self.rapidity
    }
}

type NormCell = Arc<OnceLock<Result<f64>>>;

/// The oscillator eigenbasis on a fixed set of quadrature rules.
///
/// Normalization constants are computed once per quantum-number key and
/// shared across threads. An optional per-state phase `e^{iχ_i}` can be
/// attached to the catalogue states.
#[derive(Debug)]
pub struct Basis {
    config: QuadConfig,
    rules: AxisRules,
    samples: Vec<Samples>,
    phases: [f64; 16],
    norms: Mutex<HashMap<QuantumNumbers, NormCell>>,
}

impl Basis {
    pub fn new(config: QuadConfig) -> Result<Self> {
        Self::with_phases(config, [0.0; 16])
    }

    /// Catalogue state `i` is replaced by `e^{iχ_i} ψ_i`.
    pub fn with_phases(config: QuadConfig, phases: [f64; 16]) -> Result<Self> {
        let rules = AxisRules::new(&config)?;
        let samples = state_table()
            .iter()
            .map(|r| Samples::tabulate(&r.qn, &rules))
            .collect::<Result<_>>()?;
        Ok(Self {
            config,
            rules,
            samples,
            phases,
            norms: Mutex::new(HashMap::new()),
        })
    }

    pub fn config(&self) -> &QuadConfig {
        &self.config
    }

    pub fn rules(&self) -> &AxisRules {
        &self.rules
    }

    pub fn phase(&self, i: StateIndex) -> f64 {
        self.phases[i.slot()]
    }

    fn catalogue_slot(qn: &QuantumNumbers) -> Option<usize> {
        state_table().iter().position(|r| r.qn == *qn)
    }

    fn norm_integrals(&self, qn: &QuantumNumbers) -> Result<f64> {
        let owned;
        let samples = match Self::catalogue_slot(qn) {
            Some(k) => &self.samples[k],
            None => {
                owned = Samples::tabulate(qn, &self.rules)?;
                &owned
            }
        };
        let a = self.axis_integrals_of(samples, samples, AxisPowers::default())?;
        let phi = quad::integrate_real(&self.rules.azimuthal, |_| 1.0)?;
        Ok(a.product() * phi)
    }

    /// Dimensionless normalization constant, memoized per key.
    pub fn normalization_dimensionless(&self, qn: &QuantumNumbers) -> Result<f64> {
        if qn.vanishes() {
            return Err(Error::UndefinedNormalization(qn.to_string()));
        }
        let cell = {
            let mut map = self.norms.lock().expect("normalization memo poisoned");
            Arc::clone(map.entry(*qn).or_default())
        };
        cell.get_or_init(|| {
            let norm2 = self.norm_integrals(qn)?;
            if !(norm2 > 0.0) {
                return Err(Error::UndefinedNormalization(qn.to_string()));
            }
            Ok(norm2.sqrt().recip())
        })
        .clone()
    }

    /// `N > 0` with `∫ |N ψ_unnorm|² ρ³ sin²θ cosh β = 1` in the units of `c`.
    pub fn normalization_constant(&self, qn: &QuantumNumbers, c: &PhysicalConstants) -> Result<f64> {
        Ok(self.normalization_dimensionless(qn)? / c.length_squared())
    }

    /// The normalized eigenfunction.
    pub fn eval(&self, qn: &QuantumNumbers, p: &RmsPoint, c: &PhysicalConstants) -> Result<Complex64> {
        if qn.vanishes() {
            return Ok(Complex64::new(0.0, 0.0));
        }
        let n = self.normalization_constant(qn, c)?;
        let phase = Self::catalogue_slot(qn).map_or(0.0, |k| self.phases[k]);
        Ok(eval_unnormalized(qn, p, c)? * Complex64::from_polar(n, phase))
    }

    /// Catalogue-state convenience for [`Basis::eval`] in oscillator units.
    pub fn eval_state(&self, i: StateIndex, p: &RmsPoint) -> Result<Complex64> {
        self.eval(&i.qn(), p, &PhysicalConstants::dimensionless())
    }

    fn axis_integrals_of(&self, a: &Samples, b: &Samples, powers: AxisPowers) -> Result<AxisIntegrals> {
        let r = &self.rules;
        let radial = weighted_sum(&r.radial, &a.radial, &b.radial, |x| x.powi(3 + powers.radial))?;
        let polar = weighted_sum(&r.polar, &a.polar, &b.polar, |t| t.sin().powi(2 + powers.polar_sin))?;
        let rapidity = weighted_sum(&r.rapidity, &a.rapidity, &b.rapidity, |b| {
            b.cosh().powi(1 + powers.rapidity_cosh)
        })?;
        Ok(AxisIntegrals {
            radial,
            polar,
            rapidity,
        })
    }

    /// Unnormalized radial, polar and rapidity integrals between two
    /// catalogue states, each against its measure factor times `powers`.
    pub fn axis_integrals(&self, i: StateIndex, j: StateIndex, powers: AxisPowers) -> Result<AxisIntegrals> {
        self.axis_integrals_of(&self.samples[i.slot()], &self.samples[j.slot()], powers)
    }

    /// `∫ e^{−i(m_bra+½)φ} g(φ) e^{i(m_ket+½)φ} dφ` by quadrature.
    pub fn azimuthal_integral<G>(&self, m_bra: u32, m_ket: u32, g: G) -> Result<Complex64>
    where
        G: Fn(f64) -> f64,
    {
        quad::integrate(&self.rules.azimuthal, |p| {
            azimuthal_factor(m_bra, p).conj() * azimuthal_factor(m_ket, p) * g(p)
        })
    }

    /// `N_i N_j e^{i(χ_j − χ_i)}`, or zero when either state vanishes.
    pub fn pair_prefactor(&self, i: StateIndex, j: StateIndex) -> Result<Complex64> {
        let (qi, qj) = (i.qn(), j.qn());
        if qi.vanishes() || qj.vanishes() {
            return Ok(Complex64::new(0.0, 0.0));
        }
        let n = self.normalization_dimensionless(&qi)? * self.normalization_dimensionless(&qj)?;
        Ok(Complex64::from_polar(n, self.phase(j) - self.phase(i)))
    }

    /// `⟨ψ_i|ψ_j⟩` over the full separable quadrature.
    pub fn inner_product(&self, i: StateIndex, j: StateIndex) -> Result<Complex64> {
        let pre = self.pair_prefactor(i, j)?;
        if pre == Complex64::new(0.0, 0.0) {
            return Ok(pre);
        }
        let a = self.axis_integrals(i, j, AxisPowers::default())?;
        let phi = self.azimuthal_integral(i.qn().m, j.qn().m, |_| 1.0)?;
        Ok(pre * phi * a.product())
    }

    /// The 16×16 Gram matrix; rows and columns of vanishing states are zero.
    pub fn gram(&self) -> Result<DMatrix<Complex64>> {
        let entries: Vec<Complex64> = (0..StateIndex::COUNT * StateIndex::COUNT)
            .into_par_iter()
            .map(|k| {
                let (r, c) = (k / StateIndex::COUNT, k % StateIndex::COUNT);
                self.inner_product(StateIndex(r as u8 + 1), StateIndex(c as u8 + 1))
            })
            .collect::<Result<_>>()?;
        Ok(DMatrix::from_row_slice(StateIndex::COUNT, StateIndex::COUNT, &entries))
    }
}

fn weighted_sum<M>(rule: &QuadratureRule, a: &[f64], b: &[f64], measure: M) -> Result<f64>
where
    M: Fn(f64) -> f64,
{
    let mut acc = 0.0;
    for (k, (x, w)) in rule.iter().enumerate() {
        let v = a[k] * b[k] * measure(x);
        if !v.is_finite() {
            return Err(Error::Evaluation {
                axis: rule.axis(),
                node: k,
                abscissa: x,
            });
        }
        acc += w * v;
    }
    Ok(acc)
}

/// Full four-dimensional tensor-product grid in oscillator units.
///
/// Used for direct pointwise inner products of arbitrary evaluable
/// wavefunctions, independently of the per-axis factorization.
#[derive(Debug, Clone)]
pub struct RmsGrid {
    rules: AxisRules,
}

impl RmsGrid {
    pub fn new(config: &QuadConfig) -> Result<Self> {
        Ok(Self {
            rules: AxisRules::new(config)?,
        })
    }

    /// `∫ f(p) ρ³ sin²θ cosh β dρ dθ dφ dβ`.
    pub fn integrate<F>(&self, f: F) -> Result<Complex64>
    where
        F: Fn(&RmsPoint) -> Result<Complex64> + Sync,
    {
        let r = &self.rules;
        let partials: Vec<Complex64> = r
            .radial
            .iter()
            .collect::<Vec<_>>()
            .into_par_iter()
            .map(|(rho, wr)| {
                let mut acc = Complex64::new(0.0, 0.0);
                for (theta, wt) in r.polar.iter() {
                    for (phi, wp) in r.azimuthal.iter() {
                        for (beta, wb) in r.rapidity.iter() {
                            let p = RmsPoint::new(rho, theta, phi, beta);
                            acc += f(&p)? * (wr * wt * wp * wb * p.measure_weight());
                        }
                    }
                }
                Ok(acc)
            })
            .collect::<Result<_>>()?;
        Ok(partials.into_iter().sum())
    }

    /// `⟨f|g⟩` with pointwise evaluation.
    pub fn inner_product<F, G>(&self, f: F, g: G) -> Result<Complex64>
    where
        F: Fn(&RmsPoint) -> Result<Complex64> + Sync,
        G: Fn(&RmsPoint) -> Result<Complex64> + Sync,
    {
        self.integrate(|p| Ok(f(p)?.conj() * g(p)?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_point(rng: &mut ChaCha8Rng) -> RmsPoint {
        RmsPoint::new(
            rng.gen_range(0.1..4.0),
            rng.gen_range(0.01..PI - 0.01),
            rng.gen_range(0.0..2.0 * PI),
            rng.gen_range(-3.0..3.0),
        )
    }

    #[test]
    fn embedding_axis_points() {
        let e = RmsPoint::new(1.0, PI / 2.0, 0.0, 0.0).embed();
        let expected = [0.0, 1.0, 0.0, 0.0];
        for (a, b) in e.iter().zip(expected) {
            assert!((a - b).abs() < 1e-15);
        }
        let e = RmsPoint::new(2.0, 0.0, 1.3, -0.7).embed();
        assert_eq!(e, [0.0, 0.0, 0.0, 2.0]);
    }

    #[test]
    fn embedding_is_spacelike_with_square_rho2() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..1000 {
            let p = random_point(&mut rng);
            let x2 = minkowski_square(&p.embed());
            assert!((x2 - p.rho * p.rho).abs() < 1e-12, "{p:?}");
        }
    }

    /// Central-difference Jacobian of the embedding.
    fn fd_jacobian_det(p: &RmsPoint) -> f64 {
        let h = 1e-5;
        let coords = [p.rho, p.theta, p.phi, p.beta];
        let mut jac = nalgebra::Matrix4::<f64>::zeros();
        for k in 0..4 {
            let (mut up, mut down) = (coords, coords);
            up[k] += h;
            down[k] -= h;
            let eu = RmsPoint::new(up[0], up[1], up[2], up[3]).embed();
            let ed = RmsPoint::new(down[0], down[1], down[2], down[3]).embed();
            for r in 0..4 {
                jac[(r, k)] = (eu[r] - ed[r]) / (2.0 * h);
            }
        }
        jac.determinant().abs()
    }

    #[test]
    fn measure_matches_finite_difference_jacobian() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let p = random_point(&mut rng);
            let fd = fd_jacobian_det(&p);
            let analytic = p.measure_weight();
            assert!((fd - analytic).abs() <= 1e-8 * analytic, "{p:?}: {fd} vs {analytic}");
        }
    }

    #[test]
    fn measure_special_values() {
        assert!((RmsPoint::new(1.0, PI / 2.0, 0.4, 0.0).measure_weight() - 1.0).abs() < 1e-15);
        assert_eq!(RmsPoint::new(1.3, 0.0, 0.4, 0.2).measure_weight(), 0.0);
    }

    #[test]
    fn eigenvalues_match_index_table() {
        let c = PhysicalConstants::dimensionless();
        assert_eq!(eigenvalue(&QuantumNumbers::new(2, 2, 2, 2), &c), 7.5);
        assert_eq!(eigenvalue(&QuantumNumbers::new(2, 3, 2, 2), &c), 8.5);
        assert_eq!(eigenvalue(&QuantumNumbers::new(3, 3, 2, 2), &c), 10.5);
        assert_eq!(QuantumNumbers::new(3, 2, 2, 2).eigenvalue().to_string(), "9.5");
    }

    #[test]
    fn state_table_rows() {
        let t = state_table();
        assert_eq!(t[0].qn, QuantumNumbers::new(2, 2, 2, 2));
        assert_eq!(t[0].subspace, Subspace::D1);
        assert_eq!(t[7].qn, QuantumNumbers::new(2, 3, 3, 3));
        assert_eq!(t[7].eigenvalue.to_string(), "8.5");
        assert_eq!(t[7].subspace, Subspace::D2);
        assert_eq!(t[11].qn, QuantumNumbers::new(3, 2, 3, 3));
        assert!(t[11].identically_zero);
        let flagged: Vec<usize> = t.iter().filter(|r| r.identically_zero).map(|r| r.index.get()).collect();
        assert_eq!(flagged, vec![3, 4, 11, 12]);
        let nonzero: Vec<usize> = t.iter().filter(|r| r.is_nonzero()).map(|r| r.index.get()).collect();
        assert_eq!(nonzero, vec![1, 2, 5, 6, 8, 9, 10, 13, 14, 16]);
        for d in Subspace::ALL {
            let ks: Vec<_> = d.members().map(|i| i.record().eigenvalue).collect();
            assert!(ks.iter().all(|k| *k == ks[0]));
        }
    }

    #[test]
    fn vanishing_state_evaluates_to_zero() {
        let c = PhysicalConstants::dimensionless();
        let p = RmsPoint::new(1.0, 1.0, 1.0, 0.3);
        let v = eval_unnormalized(&QuantumNumbers::new(2, 2, 3, 3), &p, &c).unwrap();
        assert_eq!(v, Complex64::new(0.0, 0.0));
    }

    #[test]
    fn azimuthal_phase_shift() {
        let c = PhysicalConstants::dimensionless();
        let qn = QuantumNumbers::new(2, 3, 2, 3);
        let p = RmsPoint::new(1.1, 0.8, 0.3, -0.4);
        let delta = 0.77;
        let q = RmsPoint { phi: p.phi + delta, ..p };
        let ratio = eval_unnormalized(&qn, &q, &c).unwrap() / eval_unnormalized(&qn, &p, &c).unwrap();
        let expected = Complex64::from_polar(1.0, 3.5 * delta);
        assert!((ratio - expected).norm() < 1e-12);
    }

    #[test]
    fn polar_axis_is_a_domain_error() {
        let c = PhysicalConstants::dimensionless();
        let qn = QuantumNumbers::new(2, 2, 2, 2);
        assert!(eval_unnormalized(&qn, &RmsPoint::new(1.0, 0.0, 0.0, 0.0), &c).is_err());
        assert!(eval_unnormalized(&qn, &RmsPoint::new(1.0, PI, 0.0, 0.0), &c).is_err());
    }

    #[test]
    fn rapidity_factor_decays() {
        let beta = (1.0f64 - 1e-6).atanh();
        for r in state_table().iter().filter(|r| r.is_nonzero()) {
            let v = rapidity_factor(r.qn.n, r.qn.m, beta);
            let peak = rapidity_factor(r.qn.n, r.qn.m, 0.3).abs().max(1e-3);
            assert!(v.abs() < 1e-4 * peak, "state {}", r.index);
        }
    }

    #[test]
    fn normalization_is_phi_resolution_independent() {
        let base = Basis::new(QuadConfig { azimuthal: 8, ..QuadConfig::uniform(64) }).unwrap();
        let fine = Basis::new(QuadConfig { azimuthal: 128, ..QuadConfig::uniform(64) }).unwrap();
        let qn = QuantumNumbers::new(2, 3, 2, 3);
        let a = base.normalization_dimensionless(&qn).unwrap();
        let b = fine.normalization_dimensionless(&qn).unwrap();
        assert!((a - b).abs() < 1e-14 * b);
    }

    #[test]
    fn vanishing_state_has_no_normalization() {
        let basis = Basis::new(QuadConfig::uniform(16)).unwrap();
        let err = basis.normalization_dimensionless(&QuantumNumbers::new(3, 2, 3, 3)).unwrap_err();
        assert!(matches!(err, Error::UndefinedNormalization(_)));
        let err = basis.normalization_dimensionless(&QuantumNumbers::new(2, 3, 3, 2)).unwrap_err();
        assert!(matches!(err, Error::UndefinedNormalization(_)));
    }

    #[test]
    fn si_normalization_scales_with_length() {
        let basis = Basis::new(QuadConfig::uniform(64)).unwrap();
        let c = PhysicalConstants::electron(240.4, OmegaConvention::Angular, HbarConvention::Hbar).unwrap();
        let qn = QuantumNumbers::new(2, 2, 2, 2);
        let dimless = basis.normalization_dimensionless(&qn).unwrap();
        let si = basis.normalization_constant(&qn, &c).unwrap();
        assert!((si * c.length_squared() / dimless - 1.0).abs() < 1e-14);
    }

    #[test]
    fn memo_is_shared_across_threads() {
        let basis = Basis::new(QuadConfig::uniform(32)).unwrap();
        let qn = QuantumNumbers::new(3, 3, 2, 3);
        let values: Vec<f64> = (0..32)
            .into_par_iter()
            .map(|_| basis.normalization_dimensionless(&qn).unwrap())
            .collect();
        assert!(values.iter().all(|v| v.to_bits() == values[0].to_bits()));
        // non-catalogue keys are accepted as well
        assert!(basis.normalization_dimensionless(&QuantumNumbers::new(1, 2, 1, 2)).is_ok());
    }

    #[test]
    fn cross_state_orthogonality_by_phi() {
        let basis = Basis::new(QuadConfig::uniform(32)).unwrap();
        let v = basis.inner_product(StateIndex::new(1).unwrap(), StateIndex::new(2).unwrap()).unwrap();
        assert!(v.norm() < 1e-14);
    }

    #[test]
    fn conventions_parse() {
        assert_eq!("Cyclic".parse::<OmegaConvention>().unwrap(), OmegaConvention::Cyclic);
        assert_eq!("h".parse::<HbarConvention>().unwrap(), HbarConvention::H);
        assert!("degrees".parse::<OmegaConvention>().is_err());
        let c = PhysicalConstants::electron(1.0, OmegaConvention::Cyclic, HbarConvention::H).unwrap();
        assert!((c.omega - 2.0 * PI * 1e6).abs() < 1e-6);
        assert!((c.hbar - PRINTED_PLANCK / (2.0 * PI)).abs() < 1e-48);
        assert!(PhysicalConstants::new(1.0, -1.0, 1.0).is_err());
    }
}
