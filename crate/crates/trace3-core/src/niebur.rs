//! Analytic series for the twisted traces.
//!
//! * [`cnms`]: truncated Fourier coefficients `c_n(m, s)` of the Niebur
//!   Poincare series on the modular group (I-Bessel series for `m > 0`,
//!   a `c^{1-2s} H_c` series for `m = 0`, J-Bessel for `m < 0`), with
//!   [`cn0_closed`] the closed form of the `m = 0` coefficient.
//! * [`trace_niebur_closed`]: the exact twisted trace
//!   `m sum_{d | nu} (D/d) d c_{|D||nu|^2/d^2}(m)`, an integer divisible
//!   by `m`.
//! * [`trace_niebur_series`]: the same trace as a `c`-series
//!   `2 pi |nu| sqrt(|D|m) sum_c (1/c) G~_c(|D|m, nu) I_s(4 pi |nu| sqrt(|D|m)/c)`.
//!   The factor `G~_c / c` is evaluated through the exponential-sum
//!   identity (a sum of Kloosterman sums over divisors), which the `sums`
//!   module verifies against the literal enumeration; this keeps the
//!   many-`c` truncations tractable.
//! * [`trace_eisenstein_series`] / [`trace_eisenstein_closed`] /
//!   [`trace_eisenstein_at_one`]: both routes to the Eisenstein trace and
//!   its value at `s = 1`.
//! * [`eval_l_series`] / [`eval_f_ell`]: the generating functions over
//!   frequencies `nu`, a harmonic function and the components of its
//!   weight-2 raising-operator image.
//!
//! Conditionally convergent series are summed in increasing `c` with
//! compensated summation; the recorded tail estimate is the largest term
//! magnitude over the last ten summands. Parallel inner computation is
//! gathered and folded in a fixed order, so results do not depend on the
//! thread count.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_traits::{ToPrimitive, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::cache::CoeffCache;
use crate::ring::{self, kronecker, Discriminant, DualLatticeElement};
use crate::special;
use crate::sums;
use crate::{Error, Result};

const PI: f64 = std::f64::consts::PI;
const TAU: f64 = std::f64::consts::TAU;

/// A point `z + r j` of hyperbolic 3-space, `z = zx + i zy`, `r > 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point3 {
    pub zx: f64,
    pub zy: f64,
    pub r: f64,
}

impl Point3 {
    pub fn new(zx: f64, zy: f64, r: f64) -> Result<Self> {
        if !(r > 0.0) {
            return Err(Error::Validation(format!("point must have r > 0, got {r}")));
        }
        Ok(Self { zx, zy, r })
    }

    /// The axis point `r j`.
    pub fn on_axis(r: f64) -> Result<Self> {
        Self::new(0.0, 0.0, r)
    }
}

/// Value of a truncated series together with its truncation data.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SeriesEval {
    pub value: f64,
    /// Largest |term| over the last ten summands; a heuristic tail size
    /// for conditionally convergent series.
    pub tail_estimate: f64,
    pub terms: u64,
}

/// How a trace value was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TraceMethod {
    Closed,
    Series,
    Direct,
}

/// A computed trace with its provenance and truncation parameters.
#[derive(Debug, Clone, Serialize)]
pub struct TraceReport {
    pub method: TraceMethod,
    /// Exact integer value (closed method only), as a decimal string.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exact: Option<String>,
    pub value: f64,
    pub s: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cmax: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub numax: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tail_estimate: Option<f64>,
}

/// Tracks the largest term magnitude over a trailing window of ten.
struct TailWindow {
    window: std::collections::VecDeque<f64>,
}

impl TailWindow {
    fn new() -> Self {
        Self { window: std::collections::VecDeque::with_capacity(10) }
    }

    fn push(&mut self, term: f64) {
        if self.window.len() == 10 {
            self.window.pop_front();
        }
        self.window.push_back(term.abs());
    }

    fn estimate(&self) -> f64 {
        self.window.iter().copied().fold(0.0, f64::max)
    }
}

/// Truncated Fourier coefficient `c_n(m, s)` of the Niebur Poincare series
/// for the modular group, summed over `c <= cmax`.
///
/// The `m < 0` branch is an oscillatory J-Bessel series that converges
/// slowly; treat its output as a consistency check with loose tolerances,
/// not a precision value.
pub fn cnms(n: u32, m: i64, s: f64, cmax: u64) -> Result<SeriesEval> {
    if !(s > 0.5 && s <= 3.0) {
        return Err(Error::Range(format!("cnms requires s in (1/2, 3], got {s}")));
    }
    if n < 1 || cmax < 1 {
        return Err(Error::Validation("cnms requires n >= 1 and cmax >= 1".into()));
    }
    let nf = n as f64;
    let (scale, shift, terms) = match m.cmp(&0) {
        std::cmp::Ordering::Greater => {
            let arg0 = 4.0 * PI * ((n as i64 * m) as f64).sqrt();
            if arg0 > 700.0 {
                return Err(Error::Range(format!(
                    "cnms: I-Bessel argument {arg0:.3} outside the supported range"
                )));
            }
            let order = 2.0 * s - 1.0;
            let terms: Vec<f64> = (1..=cmax)
                .into_par_iter()
                .map(|c| {
                    sums::kloosterman_h(c, m, n as i64)
                        * special::bessel_i(order, arg0 / c as f64).expect("argument in range")
                })
                .collect();
            (2.0 * PI * (nf / m as f64).sqrt(), 0.0, terms)
        }
        std::cmp::Ordering::Equal => {
            let scale = 4.0 * PI.powf(1.0 + s) * nf.powf(s)
                / ((2.0 * s - 1.0) * special::gamma_real(s)?);
            let terms: Vec<f64> = (1..=cmax)
                .into_par_iter()
                .map(|c| (c as f64).powf(1.0 - 2.0 * s) * sums::kloosterman_h(c, n as i64, 0))
                .collect();
            (scale, 0.0, terms)
        }
        std::cmp::Ordering::Less => {
            let arg0 = 4.0 * PI * ((n as i64 * -m) as f64).sqrt();
            if arg0 > 700.0 {
                return Err(Error::Range(format!(
                    "cnms: J-Bessel argument {arg0:.3} outside the supported range"
                )));
            }
            let order = 2.0 * s - 1.0;
            let terms: Vec<f64> = (1..=cmax)
                .into_par_iter()
                .map(|c| {
                    sums::kloosterman_h(c, m, n as i64)
                        * special::bessel_j(order, arg0 / c as f64).expect("argument in range")
                })
                .collect();
            let delta = if m == -(n as i64) { -1.0 } else { 0.0 };
            (2.0 * PI * (nf / (-m) as f64).sqrt(), delta, terms)
        }
    };
    let mut acc = sums::Kahan::default();
    let mut tail = TailWindow::new();
    for &t in &terms {
        acc.add(t);
        tail.push(scale * t);
    }
    Ok(SeriesEval { value: shift + scale * acc.value(), tail_estimate: tail.estimate(), terms: cmax })
}

/// Closed form of the zeroth coefficient,
/// `c_n(0, s) = (4 pi / (2s-1)) n^{1-s} sigma_{2s-1}(n) / (pi^{-s} Gamma(s) zeta(2s))`.
///
/// At `s = 1` this is `24 sigma_1(n)`.
pub fn cn0_closed(n: u32, s: f64) -> Result<f64> {
    if !(s > 0.5) {
        return Err(Error::Range(format!("cn0_closed requires s > 1/2, got {s}")));
    }
    let nf = n as f64;
    let num = 4.0 * PI / (2.0 * s - 1.0) * nf.powf(1.0 - s) * ring::sigma(n as u64, 2.0 * s - 1.0);
    let den = PI.powf(-s) * special::gamma_real(s)? * ring::zeta(2.0 * s, 1e-13)?;
    Ok(num / den)
}

/// Exact twisted trace of the harmonic function `J_nu`:
/// `m sum_{d | nu} (D/d) d c_{|D||nu|^2 / d^2}(m)`.
///
/// An integer divisible by `m`, through the coefficient cache.
pub fn trace_niebur_closed(
    cache: &CoeffCache,
    disc: &Discriminant,
    nu: &DualLatticeElement,
    m: u64,
) -> BigInt {
    assert!(m >= 1);
    let n_total = nu.scaled_norm();
    let mut acc = BigInt::zero();
    for d in nu.divisors() {
        let chi = kronecker(disc.value(), d);
        if chi == 0 {
            continue;
        }
        let index = (n_total / (d * d)) as u32;
        acc += BigInt::from(chi as i64 * d as i64) * crate::qexp::coeff(cache, index, m as i64);
    }
    let result = BigInt::from(m) * acc;
    debug_assert!((&result % BigInt::from(m)).is_zero());
    result
}

/// Truncated series for the twisted trace of `F_nu(., s)`:
/// `2 pi |nu| sqrt(|D|m) sum_{c <= cmax} (1/c) G~_c(|D|m, nu) I_s(4 pi |nu| sqrt(|D|m) / c)`.
///
/// At `s = 1` the series estimates the trace of `J_nu`; convergence there
/// is conditional, so the report carries the trailing-term estimate rather
/// than a bound.
pub fn trace_niebur_series(
    disc: &Discriminant,
    nu: &DualLatticeElement,
    m: u64,
    s: f64,
    cmax: u64,
) -> Result<SeriesEval> {
    if !(1.0..=3.0).contains(&s) {
        return Err(Error::Range(format!("trace series requires s in [1, 3], got {s}")));
    }
    if m < 1 || cmax < 1 {
        return Err(Error::Validation("trace series requires m >= 1 and cmax >= 1".into()));
    }
    let abs_nu = nu.abs_nu();
    let dm = (disc.abs() * m) as f64;
    let arg0 = 4.0 * PI * abs_nu * dm.sqrt();
    let scale = 2.0 * PI * abs_nu * dm.sqrt();
    if arg0 > 700.0 {
        return Err(Error::Range(format!(
            "I-Bessel argument {arg0:.3} outside the supported range"
        )));
    }

    // G~_c / c via the divisor identity; per-c values are independent and
    // computed in parallel, then folded in increasing c.
    let divisor_data: Vec<(u64, i32, i64)> = nu
        .divisors()
        .into_iter()
        .filter_map(|d| {
            let chi = kronecker(disc.value(), d);
            if chi == 0 {
                None
            } else {
                Some((d, chi, (nu.scaled_norm() / (d * d)) as i64))
            }
        })
        .collect();
    let terms: Vec<f64> = (1..=cmax)
        .into_par_iter()
        .map(|c| {
            let mut g_over_c = 0.0;
            for &(d, chi, target) in &divisor_data {
                if c % d == 0 {
                    g_over_c += chi as f64 * sums::kloosterman_h(c / d, m as i64, target);
                }
            }
            g_over_c * special::bessel_i(s, arg0 / c as f64).expect("argument within range")
        })
        .collect();
    let mut acc = sums::Kahan::default();
    let mut tail = TailWindow::new();
    for &t in &terms {
        acc.add(t);
        tail.push(scale * t);
    }
    Ok(SeriesEval { value: scale * acc.value(), tail_estimate: tail.estimate(), terms: cmax })
}

/// Truncated series for the twisted Eisenstein trace, `s > 1`:
/// `(sqrt(|D|m))^{s+1} sum_{c <= cmax} c^{-s-1} G~_c(|D|m, 0)`.
pub fn trace_eisenstein_series(
    disc: &Discriminant,
    m: u64,
    s: f64,
    cmax: u64,
) -> Result<SeriesEval> {
    if !(s > 1.0) {
        return Err(Error::Range(format!("eisenstein series requires s > 1, got {s}")));
    }
    if m < 1 || cmax < 1 {
        return Err(Error::Validation("eisenstein series requires m >= 1 and cmax >= 1".into()));
    }
    let scale = ((disc.abs() * m) as f64).sqrt().powf(s + 1.0);
    // H_t(m, 0) for all t up to cmax, computed once in parallel.
    let h0: Vec<f64> = (1..=cmax)
        .into_par_iter()
        .map(|t| sums::kloosterman_h(t, m as i64, 0))
        .collect();
    let terms: Vec<f64> = (1..=cmax)
        .into_par_iter()
        .map(|c| {
            // G~_c / c = sum_{d | c} (D/d) H_{c/d}(m, 0)
            let mut g_over_c = 0.0;
            for d in ring::divisors(c) {
                let chi = kronecker(disc.value(), d);
                if chi != 0 {
                    g_over_c += chi as f64 * h0[(c / d - 1) as usize];
                }
            }
            (c as f64).powf(-s) * g_over_c
        })
        .collect();
    let mut acc = sums::Kahan::default();
    let mut tail = TailWindow::new();
    for &t in &terms {
        acc.add(t);
        tail.push(scale * t);
    }
    Ok(SeriesEval { value: scale * acc.value(), tail_estimate: tail.estimate(), terms: cmax })
}

/// Closed form of the Eisenstein trace for real `s > 1`:
/// `|D|^{(s+1)/2} L_D(s) / zeta(s+1) * m^{(1-s)/2} sigma_s(m)`.
pub fn trace_eisenstein_closed(disc: &Discriminant, m: u64, s: f64) -> Result<f64> {
    if !(s > 1.0) {
        return Err(Error::Range(format!("eisenstein closed form requires s > 1, got {s}")));
    }
    let l = ring::dirichlet_l(disc, s, 1e-12)?;
    let z = ring::zeta(s + 1.0, 1e-13)?;
    let mf = m as f64;
    Ok((disc.abs() as f64).powf((s + 1.0) / 2.0) * l / z
        * mf.powf((1.0 - s) / 2.0)
        * ring::sigma(m, s))
}

/// Value of the Eisenstein trace at `s = 1`:
/// `(12/pi) sqrt(|D|) h(D) / w(D) * sigma_1(m)` with `w(D)` the number of
/// units of the ring of integers (twice [`ring::half_unit_count`]).
pub fn trace_eisenstein_at_one(disc: &Discriminant, m: u64) -> f64 {
    let h = ring::class_number(disc) as f64;
    let w = 2.0 * ring::half_unit_count(disc) as f64;
    12.0 / PI * (disc.abs() as f64).sqrt() * h / w * ring::sigma(m, 1.0)
}

pub use crate::ring::elements_by_norm;

/// Memoized closed traces keyed by `(norm, content)`; the trace depends on
/// `mu` only through these two invariants.
struct TraceMemo<'a> {
    cache: &'a CoeffCache,
    disc: &'a Discriminant,
    m: u64,
    memo: BTreeMap<(u64, u64), f64>,
}

impl<'a> TraceMemo<'a> {
    fn new(cache: &'a CoeffCache, disc: &'a Discriminant, m: u64) -> Self {
        Self { cache, disc, m, memo: BTreeMap::new() }
    }

    fn get(&mut self, nu: &DualLatticeElement) -> f64 {
        let key = (nu.scaled_norm(), nu.content());
        if let Some(&v) = self.memo.get(&key) {
            return v;
        }
        let v = trace_niebur_closed(self.cache, self.disc, nu, self.m)
            .to_f64()
            .expect("trace fits in f64");
        self.memo.insert(key, v);
        v
    }
}

fn check_region(disc: &Discriminant, m: u64, p: &Point3) -> Result<()> {
    let boundary = ((m * disc.abs()) as f64).sqrt();
    if p.r <= boundary {
        return Err(Error::Range(format!(
            "point with r = {} outside the convergence region r > sqrt(m |D|) = {boundary}",
            p.r
        )));
    }
    Ok(())
}

/// The harmonic generating function over frequencies,
/// `L_{m,D}(z + rj) = sum_nu tr_{m,D}(J_nu) |nu|^{-1} r K_1(4 pi |nu| r) e(tr(nu z))`,
/// truncated to `norm(mu) <= numax`. Requires `r > sqrt(m |D|)`.
pub fn eval_l_series(
    cache: &CoeffCache,
    disc: &Discriminant,
    m: u64,
    p: &Point3,
    numax: u64,
) -> Result<f64> {
    let mut memo = TraceMemo::new(cache, disc, m);
    eval_l_series_with(disc, m, p, numax, &mut |nu| memo.get(nu))
}

/// As [`eval_l_series`] with an arbitrary coefficient source in place of
/// the closed traces.
fn eval_l_series_with(
    disc: &Discriminant,
    m: u64,
    p: &Point3,
    numax: u64,
    coefficient: &mut dyn FnMut(&DualLatticeElement) -> f64,
) -> Result<f64> {
    check_region(disc, m, p)?;
    let mut re = sums::Kahan::default();
    let mut im = sums::Kahan::default();
    for mu in elements_by_norm(disc, numax) {
        let nu = DualLatticeElement::new(mu).expect("nonzero by construction");
        let abs_nu = nu.abs_nu();
        let arg = 4.0 * PI * abs_nu * p.r;
        if arg > 700.0 {
            // K_1 underflows; such terms are far below double precision.
            continue;
        }
        let t = coefficient(&nu);
        if t == 0.0 {
            continue;
        }
        let k1 = special::bessel_k(1.0, arg)?;
        let weight = t / abs_nu * p.r * k1;
        let phase = TAU * trace_of_nu_z(&nu, p);
        re.add(weight * phase.cos());
        im.add(weight * phase.sin());
    }
    debug_assert!(
        im.value().abs() <= 1e-12 * re.value().abs().max(1.0),
        "L series imaginary part {} did not cancel",
        im.value()
    );
    Ok(re.value())
}

/// `tr(nu z)` for `z = zx + i zy`: with `mu = x + y w`,
/// `tr(nu z) = y zx + (2x + yD) zy / sqrt(|D|)`.
fn trace_of_nu_z(nu: &DualLatticeElement, p: &Point3) -> f64 {
    let mu = nu.mu();
    let d = mu.discriminant_value();
    mu.y() as f64 * p.zx
        + (2 * mu.x() + mu.y() * d) as f64 * p.zy / (d.unsigned_abs() as f64).sqrt()
}

/// One component of the weight-2 generating function,
/// `F^(ell)_{m,D}(z + rj) = sum_nu tr_{m,D}(J_nu) xi(nu)^{ell-1} r K~_ell(4 pi |nu| r) e(tr(nu z))`
/// with `xi(nu) = nu/|nu|` and `K~_2 = -K_1`, `K~_1 = 2i K_0`, `K~_0 = K_1`.
///
/// Returns the complex value `(re, im)`.
pub fn eval_f_ell(
    cache: &CoeffCache,
    disc: &Discriminant,
    m: u64,
    ell: u8,
    p: &Point3,
    numax: u64,
) -> Result<(f64, f64)> {
    if ell > 2 {
        return Err(Error::Validation(format!("ell must be 0, 1 or 2, got {ell}")));
    }
    check_region(disc, m, p)?;
    let mut memo = TraceMemo::new(cache, disc, m);
    let mut re = sums::Kahan::default();
    let mut im = sums::Kahan::default();
    for mu in elements_by_norm(disc, numax) {
        let nu = DualLatticeElement::new(mu).expect("nonzero by construction");
        let abs_nu = nu.abs_nu();
        let arg = 4.0 * PI * abs_nu * p.r;
        if arg > 700.0 {
            continue;
        }
        let t = memo.get(&nu);
        if t == 0.0 {
            continue;
        }
        // xi(nu)^(ell-1); for ell = 0 this is conj(xi) since |xi| = 1
        let (nre, nim) = nu.to_complex();
        let (xre, xim) = (nre / abs_nu, nim / abs_nu);
        let (fre, fim) = match ell {
            2 => (xre, xim),
            1 => (1.0, 0.0),
            _ => (xre, -xim),
        };
        let (kre, kim) = match ell {
            2 => (-special::bessel_k(1.0, arg)?, 0.0),
            1 => (0.0, 2.0 * special::bessel_k(0.0, arg)?),
            _ => (special::bessel_k(1.0, arg)?, 0.0),
        };
        let phase = TAU * trace_of_nu_z(&nu, p);
        let (pre, pim) = (phase.cos(), phase.sin());
        let (a, b) = complex_mul(fre, fim, kre, kim);
        let (a, b) = complex_mul(a, b, pre, pim);
        re.add(t * p.r * a);
        im.add(t * p.r * b);
    }
    Ok((re.value(), im.value()))
}

#[inline]
fn complex_mul(ar: f64, ai: f64, br: f64, bi: f64) -> (f64, f64) {
    (ar * br - ai * bi, ar * bi + ai * br)
}

/// Discrete hyperbolic Laplacian of the harmonic generating function by
/// central differences with step `h`:
/// `-r^2 (d^2/dzx^2 + d^2/dzy^2 + d^2/dr^2) + r d/dr`, which should vanish.
///
/// Returns `(laplacian, value at the point)`.
pub fn laplacian_fd(
    cache: &CoeffCache,
    disc: &Discriminant,
    m: u64,
    p: &Point3,
    numax: u64,
    h: f64,
) -> Result<(f64, f64)> {
    let eval = |zx: f64, zy: f64, r: f64| -> Result<f64> {
        eval_l_series(cache, disc, m, &Point3 { zx, zy, r }, numax)
    };
    let center = eval(p.zx, p.zy, p.r)?;
    let dxx = (eval(p.zx + h, p.zy, p.r)? - 2.0 * center + eval(p.zx - h, p.zy, p.r)?) / (h * h);
    let dyy = (eval(p.zx, p.zy + h, p.r)? - 2.0 * center + eval(p.zx, p.zy - h, p.r)?) / (h * h);
    let drr = (eval(p.zx, p.zy, p.r + h)? - 2.0 * center + eval(p.zx, p.zy, p.r - h)?) / (h * h);
    let dr = (eval(p.zx, p.zy, p.r + h)? - eval(p.zx, p.zy, p.r - h)?) / (2.0 * h);
    Ok((-p.r * p.r * (dxx + dyy + drr) + p.r * dr, center))
}

/// Relative gap between the raising operator applied to the harmonic
/// generating function by central differences,
/// `(1/2 pi i) (-d/dz, d/dr, d/dconj(z))`, and the directly evaluated
/// weight-2 components `(F^(2), F^(1), F^(0))`.
///
/// The gap is measured against the norm of the full three-component
/// vector: on the axis `z = 0` two of the components vanish by the unit
/// symmetry of the frequency lattice, so a per-component relative error
/// would compare numerical zeros.
pub fn raising_operator_gap(
    cache: &CoeffCache,
    disc: &Discriminant,
    m: u64,
    p: &Point3,
    numax: u64,
    h: f64,
) -> Result<f64> {
    let eval = |zx: f64, zy: f64, r: f64| -> Result<f64> {
        eval_l_series(cache, disc, m, &Point3 { zx, zy, r }, numax)
    };
    let dx = (eval(p.zx + h, p.zy, p.r)? - eval(p.zx - h, p.zy, p.r)?) / (2.0 * h);
    let dy = (eval(p.zx, p.zy + h, p.r)? - eval(p.zx, p.zy - h, p.r)?) / (2.0 * h);
    let dr = (eval(p.zx, p.zy, p.r + h)? - eval(p.zx, p.zy, p.r - h)?) / (2.0 * h);
    // Wirtinger derivatives: d/dz = (dx - i dy)/2, d/dconj(z) = (dx + i dy)/2.
    // Division by 2 pi i maps (re, im) to (im, -re) / (2 pi).
    let minus_dz = (-dx / 2.0, dy / 2.0);
    let dzbar = (dx / 2.0, dy / 2.0);
    let expected = [
        (minus_dz.1 / TAU, -minus_dz.0 / TAU), // F^(2)
        (0.0, -dr / TAU),                      // F^(1): dr is real
        (dzbar.1 / TAU, -dzbar.0 / TAU),       // F^(0)
    ];
    let mut got = [(0.0f64, 0.0f64); 3];
    for (slot, ell) in [2u8, 1, 0].into_iter().enumerate() {
        got[slot] = eval_f_ell(cache, disc, m, ell, p, numax)?;
    }
    let scale = expected
        .iter()
        .chain(got.iter())
        .map(|v| v.0.hypot(v.1))
        .fold(0.0f64, f64::max)
        .max(1e-300);
    let mut worst: f64 = 0.0;
    for (e, g) in expected.iter().zip(got.iter()) {
        worst = worst.max((g.0 - e.0).hypot(g.1 - e.1) / scale);
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cache::CoeffCache;

    fn disc(d: i64) -> Discriminant {
        Discriminant::new(d).unwrap()
    }

    fn gaussian_i() -> (Discriminant, DualLatticeElement) {
        let d = disc(-4);
        let nu = DualLatticeElement::new(d.element_from_standard(0, 1)).unwrap();
        (d, nu)
    }

    #[test]
    fn closed_trace_gaussian_unit() {
        let cache = CoeffCache::in_memory();
        let (d, nu) = gaussian_i();
        assert_eq!(trace_niebur_closed(&cache, &d, &nu, 1), BigInt::from(196884u64));
        assert_eq!(
            trace_niebur_closed(&cache, &d, &nu, 2),
            BigInt::from(2u64 * 21493760)
        );
        // mu = 2i: content 2, (D/2) = 0 kills d = 2; only c_4(m) survives
        let mu2 = d.element_from_standard(0, 2);
        let nu2 = DualLatticeElement::new(mu2).unwrap();
        let expect = crate::qexp::jn(4, 2).coeff(1);
        assert_eq!(trace_niebur_closed(&cache, &d, &nu2, 1), expect);
    }

    #[test]
    fn closed_trace_divisible_by_m() {
        let cache = CoeffCache::in_memory();
        for dval in [-3i64, -4, -7, -8] {
            let d = disc(dval);
            for (x, y) in [(1i64, 0i64), (0, 1), (1, 1), (2, 0), (2, 2)] {
                let mu = d.element(x, y);
                if mu.norm() > 20 || mu.is_zero() {
                    continue;
                }
                let nu = DualLatticeElement::new(mu).unwrap();
                for m in 1..=25u64 {
                    let t = trace_niebur_closed(&cache, &d, &nu, m);
                    assert!(
                        (&t % BigInt::from(m)).is_zero(),
                        "D={dval}, mu=({x},{y}), m={m}: {t}"
                    );
                }
            }
        }
    }

    #[test]
    fn closed_trace_unit_invariance() {
        let cache = CoeffCache::in_memory();
        for dval in [-4i64, -3] {
            let d = disc(dval);
            for (x, y) in [(1i64, 0i64), (1, 1), (0, 2)] {
                let mu = d.element(x, y);
                for m in 1..=10u64 {
                    let base =
                        trace_niebur_closed(&cache, &d, &DualLatticeElement::new(mu).unwrap(), m);
                    for u in ring::units(&d) {
                        let twisted = mu.mul(&u);
                        let t = trace_niebur_closed(
                            &cache,
                            &d,
                            &DualLatticeElement::new(twisted).unwrap(),
                            m,
                        );
                        assert_eq!(t, base, "D={dval}, mu=({x},{y}), m={m}, unit {u:?}");
                    }
                }
            }
        }
    }

    #[test]
    fn zagier_duality_rewrite() {
        // tr = -m sum_d (D/d) d b_m(|D||nu|^2/d^2)
        let cache = CoeffCache::in_memory();
        for dval in [-4i64, -3] {
            let d = disc(dval);
            for (x, y) in [(0i64, 1i64), (1, 1), (0, 2)] {
                let mu = d.element_from_standard(x, y);
                let nu = DualLatticeElement::new(mu).unwrap();
                for m in 1..=20u64 {
                    let closed = trace_niebur_closed(&cache, &d, &nu, m);
                    let sm = crate::qexp::sn_expansion(m as u32, 24).unwrap();
                    let mut alt = BigInt::zero();
                    for dd in nu.divisors() {
                        let chi = kronecker(d.value(), dd);
                        if chi == 0 {
                            continue;
                        }
                        let idx = (nu.scaled_norm() / (dd * dd)) as i64;
                        alt += BigInt::from(chi as i64 * dd as i64) * sm.coeff(idx);
                    }
                    alt *= BigInt::from(-(m as i64));
                    assert_eq!(closed, alt, "D={dval}, mu=({x},{y}), m={m}");
                }
            }
        }
    }

    #[test]
    fn cnms_matches_j_coefficient() {
        // c_1(1, 1) ~ 196884 within 1%
        let v = cnms(1, 1, 1.0, 10_000).unwrap();
        let rel = (v.value - 196884.0).abs() / 196884.0;
        assert!(rel < 0.01, "c_1(1,1) = {} (rel {rel})", v.value);
    }

    #[test]
    fn cnms_zero_mode() {
        // c_1(0, 1) ~ 24 sigma_1(1) = 24 within 1%
        let v = cnms(1, 0, 1.0, 10_000).unwrap();
        assert!((v.value - 24.0).abs() / 24.0 < 0.01, "c_1(0,1) = {}", v.value);
        // closed form at s = 1.5 vs series
        let series = cnms(1, 0, 1.5, 10_000).unwrap();
        let closed = cn0_closed(1, 1.5).unwrap();
        assert!(
            (series.value - closed).abs() / closed.abs() < 1e-3,
            "{} vs {closed}",
            series.value
        );
    }

    #[test]
    fn cnms_negative_mode_vanishes_at_one() {
        // c_1(-1, 1) -> 0; slow J-series, loose absolute tolerance
        let v = cnms(1, -1, 1.0, 10_000).unwrap();
        assert!(v.value.abs() < 0.05 * 196884.0, "c_1(-1,1) = {}", v.value);
    }

    #[test]
    fn cn0_closed_values() {
        assert!((cn0_closed(1, 1.0).unwrap() - 24.0).abs() < 1e-9);
        assert!((cn0_closed(2, 1.0).unwrap() - 72.0).abs() < 1e-9);
        assert!((cn0_closed(4, 1.0).unwrap() - 24.0 * 7.0).abs() < 1e-8);
    }

    #[test]
    fn trace_series_single_term() {
        // cmax = 1: G~_1 = 1, so the value is
        // 2 pi |nu| sqrt(|D|m) I_s(4 pi |nu| sqrt(|D|m))
        let (d, nu) = gaussian_i();
        let v = trace_niebur_series(&d, &nu, 1, 1.0, 1).unwrap();
        let arg = 4.0 * PI * 0.5 * 2.0;
        let expect = 2.0 * PI * 0.5 * 2.0 * special::bessel_i(1.0, arg).unwrap();
        assert!((v.value - expect).abs() < 1e-9 * expect);
    }

    #[test]
    fn trace_series_converges_to_closed() {
        let (d, nu) = gaussian_i();
        let v = trace_niebur_series(&d, &nu, 1, 1.0, 2000).unwrap();
        let rel = (v.value - 196884.0).abs() / 196884.0;
        assert!(rel < 0.02, "series {} (rel {rel})", v.value);
    }

    #[test]
    fn trace_series_matches_cnms_above_one() {
        // both sides of the unfolding at s = 1.5: the trace of F_nu(., 1.5)
        // equals m sum_d (D/d) d c_{n/d^2}(m, 1.25)
        let (d, nu) = gaussian_i();
        let lhs = trace_niebur_series(&d, &nu, 1, 1.5, 4000).unwrap();
        let rhs = cnms(1, 1, 1.25, 4000).unwrap();
        let rel = (lhs.value - rhs.value).abs() / rhs.value.abs();
        assert!(rel < 1e-3, "{} vs {} (rel {rel})", lhs.value, rhs.value);
    }

    #[test]
    fn eisenstein_series_single_term() {
        let d = disc(-4);
        let v = trace_eisenstein_series(&d, 1, 3.0, 1).unwrap();
        let expect = 4.0f64.sqrt().powf(4.0);
        assert!((v.value - expect).abs() < 1e-12);
    }

    #[test]
    fn eisenstein_series_vs_closed() {
        let d4 = disc(-4);
        let series = trace_eisenstein_series(&d4, 1, 3.0, 5000).unwrap();
        let closed = trace_eisenstein_closed(&d4, 1, 3.0).unwrap();
        let rel = (series.value - closed).abs() / closed.abs();
        assert!(rel < 1e-3, "D=-4: {} vs {closed} (rel {rel})", series.value);

        let d3 = disc(-3);
        let series = trace_eisenstein_series(&d3, 2, 2.0, 5000).unwrap();
        let closed = trace_eisenstein_closed(&d3, 2, 2.0).unwrap();
        let rel = (series.value - closed).abs() / closed.abs();
        assert!(rel < 1e-2, "D=-3: {} vs {closed} (rel {rel})", series.value);
    }

    #[test]
    fn eisenstein_closed_value_example() {
        // D=-4, m=1, s=3: 16 L_{-4}(3) / zeta(4)
        let d = disc(-4);
        let v = trace_eisenstein_closed(&d, 1, 3.0).unwrap();
        let expect = 16.0 * (PI.powi(3) / 32.0) / (PI.powi(4) / 90.0);
        assert!((v - expect).abs() < 1e-9, "{v} vs {expect}");
        // m-dependence: value(m)/value(1) = m^{(1-s)/2} sigma_s(m)
        let v2 = trace_eisenstein_closed(&d, 2, 3.0).unwrap();
        assert!((v2 / v - 0.5 * 9.0).abs() < 1e-10);
    }

    #[test]
    fn eisenstein_at_one_matches_closed_limit() {
        for dval in [-4i64, -3] {
            let d = disc(dval);
            for m in 1..=3u64 {
                let at_one = trace_eisenstein_at_one(&d, m);
                let near = trace_eisenstein_closed(&d, m, 1.0 + 1e-6).unwrap();
                assert!(
                    (near - at_one).abs() / at_one < 1e-4,
                    "D={dval}, m={m}: {near} vs {at_one}"
                );
                // sigma_1 structure
                let base = trace_eisenstein_at_one(&d, 1);
                assert!((at_one - base * ring::sigma(m, 1.0)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn element_enumeration_by_norm() {
        let d = disc(-4);
        let els = elements_by_norm(&d, 4);
        // Z[i]: norms 1 (4 units), 2 (4 elements), 4 (4 elements): 12 total
        assert_eq!(els.len(), 12);
        assert!(els
            .windows(2)
            .all(|w| (w[0].norm(), w[0].x(), w[0].y()) < (w[1].norm(), w[1].x(), w[1].y())));
        for el in &els {
            assert!(el.norm() >= 1 && el.norm() <= 4);
        }
        let d3 = disc(-3);
        // hexagonal lattice: 6 units
        assert_eq!(elements_by_norm(&d3, 1).len(), 6);
    }

    #[test]
    fn l_series_region_check() {
        let cache = CoeffCache::in_memory();
        let d = disc(-4);
        let p = Point3::on_axis(1.5).unwrap();
        assert!(eval_l_series(&cache, &d, 1, &p, 10).is_err());
        let p = Point3::on_axis(2.5).unwrap();
        assert!(eval_l_series(&cache, &d, 1, &p, 10).is_ok());
    }

    #[test]
    fn l_series_zero_coefficients_give_zero() {
        let d = disc(-4);
        let p = Point3::on_axis(3.0).unwrap();
        let v = eval_l_series_with(&d, 1, &p, 25, &mut |_| 0.0).unwrap();
        assert_eq!(v, 0.0);
        // a one-frequency stub isolates a single Fourier mode
        let v = eval_l_series_with(&d, 1, &p, 25, &mut |nu| {
            if nu.scaled_norm() == 1 { 1.0 } else { 0.0 }
        })
        .unwrap();
        let expect = 4.0 * 2.0 * 3.0 * special::bessel_k(1.0, 4.0 * PI * 0.5 * 3.0).unwrap();
        assert!((v - expect).abs() < 1e-12 * expect, "{v} vs {expect}");
    }

    #[test]
    fn l_series_converges_in_numax() {
        let cache = CoeffCache::in_memory();
        let d = disc(-4);
        let p = Point3::on_axis(3.0).unwrap();
        let v10 = eval_l_series(&cache, &d, 1, &p, 10).unwrap();
        let v20 = eval_l_series(&cache, &d, 1, &p, 20).unwrap();
        let v30 = eval_l_series(&cache, &d, 1, &p, 30).unwrap();
        assert!((v20 - v10).abs() < 1e-6, "{v10} vs {v20}");
        assert!((v30 - v20).abs() < 1e-8, "{v20} vs {v30}");
        assert!(v30.is_finite() && v30 != 0.0);
    }

    #[test]
    fn f_ell_zero_and_two_pair_on_axis() {
        // on the axis z = 0 the terms pair under nu -> -conj(nu):
        // F^(2) = -conj(F^(0))
        let cache = CoeffCache::in_memory();
        let d = disc(-4);
        let p = Point3::on_axis(3.0).unwrap();
        let f0 = eval_f_ell(&cache, &d, 1, 0, &p, 30).unwrap();
        let f2 = eval_f_ell(&cache, &d, 1, 2, &p, 30).unwrap();
        assert!((f2.0 + f0.0).abs() < 1e-10, "{f2:?} vs {f0:?}");
        assert!((f2.1 - f0.1).abs() < 1e-10, "{f2:?} vs {f0:?}");
    }
}
