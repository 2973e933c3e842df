//! One-dimensional Gaussian rules for the four separable axes.
//!
//! Every rule integrates `∫ f(x) dx` over its axis; any measure or weight
//! function is the caller's business. The radial and rapidity rules are
//! Gauss–Legendre rules pulled back through a change of variables, so the
//! integrands seen by the underlying Legendre rule are smooth on a bounded
//! interval.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::specfun::ln_gamma;

/// Production node count per axis.
pub const DEFAULT_NODES: usize = 128;

/// Truncation point of the radial axis in units of `sqrt(ħ/(Mω))`.
///
/// Radial integrands carry `e^{-x^2}` times a polynomial of degree at most
/// about 24 in `x`, so everything beyond `x = 14` is below `1e-60`.
pub const RADIAL_EXTENT: f64 = 14.0;

const GAUSS_LAGUERRE_MAX_NODES: usize = 150;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    Radial,
    Polar,
    Azimuthal,
    Rapidity,
    GenericFinite,
    SemiInfinite,
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Axis::Radial => "radial",
            Axis::Polar => "polar",
            Axis::Azimuthal => "azimuthal",
            Axis::Rapidity => "rapidity",
            Axis::GenericFinite => "generic-finite",
            Axis::SemiInfinite => "semi-infinite",
        };
        f.write_str(name)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    axis: Axis,
}

impl QuadratureRule {
    /// Builds a rule, checking that nodes increase strictly and weights are positive.
    pub fn new(nodes: Vec<f64>, weights: Vec<f64>, axis: Axis) -> Result<Self> {
        if nodes.len() != weights.len() {
            return Err(Error::Parameter(format!(
                "{} nodes but {} weights",
                nodes.len(),
                weights.len()
            )));
        }
        if nodes.len() < 2 {
            return Err(Error::Parameter("a rule needs at least two nodes".into()));
        }
        if nodes.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::Parameter("nodes must be strictly increasing".into()));
        }
        if weights.iter().any(|w| !(*w > 0.0) || !w.is_finite()) {
            return Err(Error::Parameter("weights must be positive and finite".into()));
        }
        Ok(Self {
            nodes,
            weights,
            axis,
        })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn axis(&self) -> Axis {
        self.axis
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.nodes.iter().copied().zip(self.weights.iter().copied())
    }

    fn with_axis(mut self, axis: Axis) -> Self {
        self.axis = axis;
        self
    }
}

/// Legendre polynomial `P_n(x)` and its derivative.
fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p_prev = 1.0;
    let mut p = x;
    for k in 1..n {
        let kf = k as f64;
        let next = ((2.0 * kf + 1.0) * x * p - kf * p_prev) / (kf + 1.0);
        p_prev = p;
        p = next;
    }
    let nf = n as f64;
    let dp = nf * (x * p - p_prev) / (x * x - 1.0);
    (p, dp)
}

/// Gauss–Legendre rule with `n` nodes on `[a, b]`.
pub fn gauss_legendre(n: usize, a: f64, b: f64) -> Result<QuadratureRule> {
    if n < 2 {
        return Err(Error::Parameter(format!("Gauss-Legendre needs n >= 2, got {n}")));
    }
    if !(a < b) || !a.is_finite() || !b.is_finite() {
        return Err(Error::Parameter(format!("invalid interval [{a}, {b}]")));
    }
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre_with_derivative(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, dp) = legendre_with_derivative(n, x);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        // x runs from near +1 downwards
        nodes[i] = mid - half * x;
        nodes[n - 1 - i] = mid + half * x;
        weights[i] = half * w;
        weights[n - 1 - i] = half * w;
    }
    QuadratureRule::new(nodes, weights, Axis::GenericFinite)
}

/// Generalized Gauss–Laguerre rule for `∫_0^∞ s^alpha e^{-s} f(s) ds`.
///
/// The returned weights already contain `s^alpha e^{-s}`, so the rule is used
/// as `Σ w_k f(s_k)`. Nodes come from the Jacobi matrix eigenvalues and are
/// polished by Newton steps on `L^alpha_n`.
pub fn gauss_laguerre(n: usize, alpha: f64) -> Result<QuadratureRule> {
    if !(2..=GAUSS_LAGUERRE_MAX_NODES).contains(&n) {
        return Err(Error::Parameter(format!(
            "Gauss-Laguerre node count must lie in 2..={GAUSS_LAGUERRE_MAX_NODES}, got {n}"
        )));
    }
    if !(alpha > -1.0) {
        return Err(Error::Parameter(format!("alpha must exceed -1, got {alpha}")));
    }
    let jacobi = DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            2.0 * i as f64 + 1.0 + alpha
        } else if i.abs_diff(j) == 1 {
            let k = i.max(j) as f64;
            (k * (k + alpha)).sqrt()
        } else {
            0.0
        }
    });
    let mut nodes: Vec<f64> = jacobi.symmetric_eigenvalues().iter().copied().collect();
    nodes.sort_by(f64::total_cmp);

    let ln_norm = ln_gamma(n as f64 + alpha + 1.0)? - ln_gamma(n as f64 + 1.0)?;
    let mut weights = Vec::with_capacity(n);
    for x in nodes.iter_mut() {
        let mut dl = 0.0;
        for _ in 0..20 {
            let (l, d) = laguerre_with_derivative(n, alpha, *x);
            dl = d;
            let dx = l / d;
            *x -= dx;
            if dx.abs() <= 1e-15 * x.abs() {
                break;
            }
        }
        let (_, d) = laguerre_with_derivative(n, alpha, *x);
        if d.is_finite() {
            dl = d;
        }
        weights.push((ln_norm - x.ln() - 2.0 * dl.abs().ln()).exp());
    }
    QuadratureRule::new(nodes, weights, Axis::SemiInfinite)
}

fn laguerre_with_derivative(n: usize, alpha: f64, x: f64) -> (f64, f64) {
    let mut prev = 1.0;
    let mut cur = 1.0 + alpha - x;
    for k in 1..n {
        let kf = k as f64;
        let next = ((2.0 * kf + 1.0 + alpha - x) * cur - (kf + alpha) * prev) / (kf + 1.0);
        prev = cur;
        cur = next;
    }
    let nf = n as f64;
    (cur, (nf * cur - (nf + alpha) * prev) / x)
}

/// Rule on `ρ ∈ [0, ∞)` for integrands decaying like `e^{-scale ρ^2}`.
///
/// With `s = scale·ρ^2` the radial factors become polynomials in `x = sqrt(s)`
/// times `e^{-s}`; the rule is Gauss–Legendre in `x` on `[0, RADIAL_EXTENT]`
/// mapped back to `ρ = x / sqrt(scale)`.
pub fn radial_rule(n: usize, scale: f64) -> Result<QuadratureRule> {
    if !(scale > 0.0) || !scale.is_finite() {
        return Err(Error::Parameter(format!("radial scale must be positive, got {scale}")));
    }
    let base = gauss_legendre(n, 0.0, RADIAL_EXTENT)?;
    let stretch = scale.sqrt().recip();
    let nodes = base.nodes().iter().map(|x| x * stretch).collect();
    let weights = base.weights().iter().map(|w| w * stretch).collect();
    QuadratureRule::new(nodes, weights, Axis::Radial)
}

/// Rule on `β ∈ (-∞, ∞)`.
///
/// `u = tanh β` compactifies the line to `(-1, 1)`, and `u = sin t` then
/// absorbs the half-integer powers of `1 - u^2` carried by the rapidity
/// factors, leaving a smooth periodic-type integrand in `t ∈ (-π/2, π/2)`.
/// Net Jacobian: `dβ = dt / cos t`.
pub fn rapidity_rule(n: usize) -> Result<QuadratureRule> {
    let base = gauss_legendre(n, -FRAC_PI_2, FRAC_PI_2)?;
    let nodes = base.nodes().iter().map(|t| t.sin().atanh()).collect();
    let weights = base
        .iter()
        .map(|(t, w)| w / t.cos())
        .collect();
    QuadratureRule::new(nodes, weights, Axis::Rapidity)
}

/// Gauss–Legendre on `θ ∈ [0, π]`.
pub fn polar_rule(n: usize) -> Result<QuadratureRule> {
    Ok(gauss_legendre(n, 0.0, PI)?.with_axis(Axis::Polar))
}

/// Gauss–Legendre on `φ ∈ [0, 2π]`.
pub fn azimuthal_rule(n: usize) -> Result<QuadratureRule> {
    Ok(gauss_legendre(n, 0.0, 2.0 * PI)?.with_axis(Axis::Azimuthal))
}

/// `Σ w_k f(x_k)`, failing on the first non-finite sample.
pub fn integrate<F>(rule: &QuadratureRule, f: F) -> Result<Complex64>
where
    F: Fn(f64) -> Complex64,
{
    let mut acc = Complex64::new(0.0, 0.0);
    for (k, (x, w)) in rule.iter().enumerate() {
        let v = f(x);
        if !v.re.is_finite() || !v.im.is_finite() {
            return Err(Error::Evaluation {
                axis: rule.axis(),
                node: k,
                abscissa: x,
            });
        }
        acc += v * w;
    }
    Ok(acc)
}

/// Real-valued counterpart of [`integrate`].
pub fn integrate_real<F>(rule: &QuadratureRule, f: F) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    let mut acc = 0.0;
    for (k, (x, w)) in rule.iter().enumerate() {
        let v = f(x);
        if !v.is_finite() {
            return Err(Error::Evaluation {
                axis: rule.axis(),
                node: k,
                abscissa: x,
            });
        }
        acc += v * w;
    }
    Ok(acc)
}

/// Floor for relative comparisons against exact zeros.
pub const RELATIVE_FLOOR: f64 = 1e-300;

/// `|fine - coarse| / max(|fine|, floor)`.
pub fn relative_change(coarse: f64, fine: f64) -> f64 {
    (fine - coarse).abs() / fine.abs().max(RELATIVE_FLOOR)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_point_rule() {
        let r = gauss_legendre(2, -1.0, 1.0).unwrap();
        let x = 1.0 / 3.0f64.sqrt();
        assert!((r.nodes()[0] + x).abs() < 1e-15);
        assert!((r.nodes()[1] - x).abs() < 1e-15);
        assert!((r.weights()[0] - 1.0).abs() < 1e-15);
        assert!((r.weights()[1] - 1.0).abs() < 1e-15);
        let v = integrate_real(&r, |x| x * x).unwrap();
        assert!((v - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(gauss_legendre(1, 0.0, 1.0).is_err());
        assert!(gauss_legendre(4, 1.0, 1.0).is_err());
        assert!(radial_rule(16, 0.0).is_err());
        assert!(radial_rule(16, -2.0).is_err());
        assert!(rapidity_rule(1).is_err());
        assert!(gauss_laguerre(1, 0.5).is_err());
        assert!(gauss_laguerre(8, -1.0).is_err());
    }

    #[test]
    fn polynomial_exactness() {
        for n in [2usize, 3, 5, 8, 17, 64] {
            let r = gauss_legendre(n, -0.5, 2.0).unwrap();
            for deg in 0..(2 * n) as i32 {
                let exact = (2.0f64.powi(deg + 1) - (-0.5f64).powi(deg + 1)) / f64::from(deg + 1);
                let v = integrate_real(&r, |x| x.powi(deg)).unwrap();
                assert!((v - exact).abs() <= 1e-13 * exact.abs().max(1.0), "n={n} deg={deg}");
            }
        }
    }

    #[test]
    fn weights_positive_and_nodes_sorted() {
        for r in [
            gauss_legendre(128, 0.0, 1.0).unwrap(),
            radial_rule(128, 3.0).unwrap(),
            rapidity_rule(128).unwrap(),
            gauss_laguerre(100, 2.5).unwrap(),
        ] {
            assert!(r.weights().iter().all(|w| *w > 0.0));
            assert!(r.nodes().windows(2).all(|w| w[0] < w[1]));
        }
    }

    #[test]
    fn fractional_cosine_square() {
        // antiderivative φ/2 + (3/8) sin(4φ/3)
        let exact = PI + 3.0 * 3.0f64.sqrt() / 16.0;
        let r = azimuthal_rule(64).unwrap();
        let v = integrate_real(&r, |p| (2.0 * p / 3.0).cos().powi(2)).unwrap();
        assert!((v - exact).abs() < 1e-13);
        assert!((exact - 3.466_352_2).abs() < 1e-7);
    }

    #[test]
    fn complex_integrals() {
        let r = gauss_legendre(16, 0.0, 1.0).unwrap();
        let v = integrate(&r, |_| Complex64::new(1.0, 0.0)).unwrap();
        assert!((v - 1.0).norm() < 1e-15);

        let r = azimuthal_rule(32).unwrap();
        let v = integrate(&r, |p| Complex64::from_polar(1.0, p)).unwrap();
        assert!(v.norm() < 1e-14);

        // ∫ e^{iφ} cos(4φ/3) dφ = ½ Σ_± (e^{2πi(1±4/3)} - 1) / (i(1±4/3))
        let r = azimuthal_rule(64).unwrap();
        let v = integrate(&r, |p| Complex64::from_polar((4.0 * p / 3.0).cos(), p)).unwrap();
        let i = Complex64::i();
        let exact: Complex64 = [7.0 / 3.0, -1.0 / 3.0]
            .iter()
            .map(|k| ((i * 2.0 * PI * k).exp() - 1.0) / (i * k) * 0.5)
            .sum();
        assert!((v - exact).norm() < 1e-12);
    }

    #[test]
    fn non_finite_integrand_reports_node() {
        let r = polar_rule(8).unwrap();
        let err = integrate_real(&r, |x| if x > 3.0 { f64::NAN } else { 1.0 }).unwrap_err();
        match err {
            Error::Evaluation { axis, node, .. } => {
                assert_eq!(axis, Axis::Polar);
                assert_eq!(node, 7);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn radial_moments() {
        let scale = 2.7;
        let r = radial_rule(128, scale).unwrap();
        // ds = 2 scale ρ dρ
        let moment = |p: i32| {
            integrate_real(&r, |rho| {
                let s = scale * rho * rho;
                s.powi(p) * (-s).exp() * 2.0 * scale * rho
            })
            .unwrap()
        };
        assert!((moment(0) - 1.0).abs() < 1e-13);
        assert!((moment(3) - 6.0).abs() < 1e-12);
    }

    #[test]
    fn rapidity_sech_powers() {
        let r = rapidity_rule(64).unwrap();
        let sech = |b: f64| 1.0 / b.cosh();
        let v2 = integrate_real(&r, |b| sech(b).powi(2)).unwrap();
        let v4 = integrate_real(&r, |b| sech(b).powi(4)).unwrap();
        assert!((v2 - 2.0).abs() < 1e-13);
        assert!((v4 - 4.0 / 3.0).abs() < 1e-13);
    }

    #[test]
    fn laguerre_rule_moments() {
        // ∫ s^{a+k} e^{-s} ds = Γ(a+k+1)
        let alpha = 2.5;
        let r = gauss_laguerre(24, alpha).unwrap();
        for k in 0..20 {
            let v = integrate_real(&r, |s| s.powi(k)).unwrap();
            let exact = ln_gamma(alpha + f64::from(k) + 1.0).unwrap().exp();
            assert!((v - exact).abs() <= 1e-11 * exact, "k={k}");
        }
    }
}
