//! Special functions used by the oscillator eigenfunctions.
//!
//! Associated Legendre functions follow the Ferrers convention on `[-1, 1]`
//! with the Condon–Shortley phase. Negative orders are reached through
//! `P^{-n}_l = (-1)^n (l-n)!/(l+n)! P^n_l`, and any order with `|order| > degree`
//! evaluates to exactly zero.

use std::f64::consts::PI;

use crate::error::{domain, Result};

/// Degree and (signed) order of an associated Legendre function.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct LegendreOrder {
    pub degree: u32,
    pub order: i32,
}

impl LegendreOrder {
    pub fn new(degree: u32, order: i32) -> Self {
        Self { degree, order }
    }

    /// True when the function is identically zero (`|order| > degree`).
    pub fn vanishes(&self) -> bool {
        self.order.unsigned_abs() > self.degree
    }
}

/// Degree and upper index `alpha` of a generalized Laguerre polynomial.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LaguerreIndex {
    pub degree: u32,
    pub upper: f64,
}

impl LaguerreIndex {
    pub fn new(degree: u32, upper: f64) -> Self {
        Self { degree, upper }
    }

    /// The index `(n_a, l + 1/2)` used by the radial factor.
    pub fn half_integer(degree: u32, l: u32) -> Self {
        Self::new(degree, f64::from(l) + 0.5)
    }
}

const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEFFS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

fn lanczos_sum(z: f64) -> f64 {
    let mut acc = LANCZOS_COEFFS[0];
    for (k, c) in LANCZOS_COEFFS.iter().enumerate().skip(1) {
        acc += c / (z + k as f64);
    }
    acc
}

/// The Gamma function for real arguments.
///
/// Positive integers up to 171 are returned as exact factorial products;
/// everything else goes through a g = 7 Lanczos approximation with
/// reflection below 1/2.
pub fn gamma_fn(x: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(domain("gamma_fn", format!("non-finite argument {x}")));
    }
    if x <= 0.0 && x == x.floor() {
        return Err(domain("gamma_fn", format!("pole at {x}")));
    }
    if (1.0..=171.0).contains(&x) && x == x.floor() {
        let n = x as u32 - 1;
        return Ok((1..=n).fold(1.0, |acc, k| acc * f64::from(k)));
    }
    Ok(gamma_unchecked(x))
}

fn gamma_unchecked(x: f64) -> f64 {
    if x < 0.5 {
        PI / ((PI * x).sin() * gamma_unchecked(1.0 - x))
    } else {
        let z = x - 1.0;
        let t = z + LANCZOS_G + 0.5;
        (2.0 * PI).sqrt() * t.powf(z + 0.5) * (-t).exp() * lanczos_sum(z)
    }
}

/// Natural log of `|Γ(x)|` for `x > 0`.
pub fn ln_gamma(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(domain("ln_gamma", format!("argument {x} must be positive")));
    }
    if x < 0.5 {
        return Ok((PI / (PI * x).sin()).ln() - ln_gamma(1.0 - x)?);
    }
    let z = x - 1.0;
    let t = z + LANCZOS_G + 0.5;
    Ok(0.5 * (2.0 * PI).ln() + (z + 0.5) * t.ln() - t + lanczos_sum(z).ln())
}

/// Associated Legendre function `P^order_degree(x)` on `[-1, 1]`.
pub fn assoc_legendre(ord: LegendreOrder, x: f64) -> Result<f64> {
    if !(-1.0..=1.0).contains(&x) {
        return Err(domain("assoc_legendre", format!("argument {x} outside [-1, 1]")));
    }
    let sine = ((1.0 - x) * (1.0 + x)).sqrt();
    Ok(assoc_legendre_trig(ord, x, sine))
}

/// Same as [`assoc_legendre`] but takes `sqrt(1 - x^2)` precomputed.
///
/// Callers that know the sine directly (`sin θ`, `sech β`) avoid the
/// cancellation in `1 - x^2` near the endpoints.
pub(crate) fn assoc_legendre_trig(ord: LegendreOrder, x: f64, sine: f64) -> f64 {
    if ord.vanishes() {
        return 0.0;
    }
    let l = ord.degree;
    let m = ord.order.unsigned_abs();
    let positive = legendre_nonneg_order(l, m, x, sine);
    if ord.order >= 0 {
        positive
    } else {
        // (l-m)!/(l+m)! as a product over (l-m, l+m]
        let ratio = ((l - m + 1)..=(l + m)).fold(1.0, |acc, k| acc / f64::from(k));
        let sign = if m.is_multiple_of(2) { 1.0 } else { -1.0 };
        sign * ratio * positive
    }
}

fn legendre_nonneg_order(l: u32, m: u32, x: f64, sine: f64) -> f64 {
    debug_assert!(m <= l);
    // P^m_m = (-1)^m (2m-1)!! sin^m
    let mut pmm = 1.0;
    for k in 0..m {
        pmm *= -(2.0 * f64::from(k) + 1.0) * sine;
    }
    if l == m {
        return pmm;
    }
    let mut prev = pmm;
    let mut cur = x * (2.0 * f64::from(m) + 1.0) * pmm;
    for k in (m + 1)..l {
        let kf = f64::from(k);
        let mf = f64::from(m);
        let next = ((2.0 * kf + 1.0) * x * cur - (kf + mf) * prev) / (kf - mf + 1.0);
        prev = cur;
        cur = next;
    }
    cur
}

/// Generalized Laguerre polynomial `L^alpha_n(x)` by upward recurrence.
pub fn gen_laguerre(idx: LaguerreIndex, x: f64) -> Result<f64> {
    if !(x >= 0.0) {
        return Err(domain("gen_laguerre", format!("argument {x} must be non-negative")));
    }
    if !(idx.upper > -1.0) {
        return Err(domain(
            "gen_laguerre",
            format!("upper index {} must exceed -1", idx.upper),
        ));
    }
    Ok(laguerre_unchecked(idx.degree, idx.upper, x))
}

pub(crate) fn laguerre_unchecked(n: u32, alpha: f64, x: f64) -> f64 {
    let mut prev = 1.0;
    if n == 0 {
        return prev;
    }
    let mut cur = 1.0 + alpha - x;
    for k in 1..n {
        let kf = f64::from(k);
        let next = ((2.0 * kf + 1.0 + alpha - x) * cur - (kf + alpha) * prev) / (kf + 1.0);
        prev = cur;
        cur = next;
    }
    cur
}
