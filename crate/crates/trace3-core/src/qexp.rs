//! Exact integer Laurent q-series and the weakly holomorphic bases.
//!
//! A [`QSeries`] stores arbitrary-precision integer coefficients on an
//! explicit window `[valuation, precision)`; all arithmetic propagates the
//! window conservatively so a truncation bug cannot silently produce wrong
//! coefficients.
//!
//! On top of the series type the module builds
//!
//! * `j = E4^3 / Delta`, with `Delta = q prod (1-q^n)^24` and
//!   `E4 = 1 + 240 sum sigma_3(n) q^n`,
//! * the Faber basis `j_n = q^{-n} + O(q)` by integer Gaussian elimination
//!   on powers of `j_1 = j - 744` (all pivots are 1),
//! * the weight-2 dual basis `S_n = -j_n'/n = q^{-n} + sum b_n(m) q^m`,
//! * the generating function `sum_d (D/d) d j'_{N/d^2}` over the divisors
//!   `d` of a dual lattice element, whose `q^m` coefficients are the
//!   twisted traces.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Zero};

use crate::cache::CoeffCache;
use crate::ring::{kronecker, Discriminant, DualLatticeElement};
use crate::{Error, Result};

/// Laurent series with exact integer coefficients on `[valuation, precision)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QSeries {
    valuation: i64,
    coeffs: Vec<BigInt>,
    precision: i64,
}

impl QSeries {
    /// The zero series on the window `[0, precision)`.
    pub fn zero(precision: i64) -> Self {
        Self { valuation: 0, coeffs: vec![], precision }
    }

    pub fn one(precision: i64) -> Self {
        Self::monomial(0, BigInt::one(), precision)
    }

    /// `c * q^n` on the window `[n, precision)`.
    pub fn monomial(n: i64, c: BigInt, precision: i64) -> Self {
        assert!(n < precision, "monomial outside window");
        let mut s = Self { valuation: n, coeffs: vec![c], precision };
        s.normalize();
        s
    }

    /// Builds a series from coefficients starting at `valuation`.
    pub fn from_coeffs(valuation: i64, coeffs: Vec<BigInt>, precision: i64) -> Self {
        assert!(valuation + coeffs.len() as i64 <= precision);
        let mut s = Self { valuation, coeffs, precision };
        s.pad();
        s.normalize();
        s
    }

    fn pad(&mut self) {
        let want = (self.precision - self.valuation).max(0) as usize;
        self.coeffs.resize(want, BigInt::zero());
    }

    fn normalize(&mut self) {
        self.pad();
        while !self.coeffs.is_empty() && self.coeffs[0].is_zero() {
            self.coeffs.remove(0);
            self.valuation += 1;
        }
        if self.coeffs.is_empty() {
            self.valuation = 0;
        }
    }

    pub fn valuation(&self) -> i64 {
        self.valuation
    }

    /// Exponent bound below which coefficients are known.
    pub fn precision(&self) -> i64 {
        self.precision
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_zero())
    }

    /// Coefficient of `q^n`; panics when `n` is at or beyond the window end.
    pub fn coeff(&self, n: i64) -> BigInt {
        assert!(n < self.precision, "coefficient q^{n} beyond precision {}", self.precision);
        if n < self.valuation {
            return BigInt::zero();
        }
        self.coeffs
            .get((n - self.valuation) as usize)
            .cloned()
            .unwrap_or_else(BigInt::zero)
    }

    /// Restricts the window to `[valuation, new_precision)`.
    pub fn truncate(&self, new_precision: i64) -> Self {
        assert!(new_precision <= self.precision);
        let keep = ((new_precision - self.valuation).max(0)) as usize;
        let mut s = Self {
            valuation: self.valuation,
            coeffs: self.coeffs[..keep.min(self.coeffs.len())].to_vec(),
            precision: new_precision,
        };
        s.normalize();
        s
    }

    pub fn add(&self, other: &Self) -> Self {
        let precision = self.precision.min(other.precision);
        let valuation = self.valuation.min(other.valuation).min(precision);
        let len = (precision - valuation).max(0) as usize;
        let mut coeffs = vec![BigInt::zero(); len];
        for (i, c) in self.coeffs.iter().enumerate() {
            let e = self.valuation + i as i64;
            if e < precision {
                coeffs[(e - valuation) as usize] += c;
            }
        }
        for (i, c) in other.coeffs.iter().enumerate() {
            let e = other.valuation + i as i64;
            if e < precision {
                coeffs[(e - valuation) as usize] += c;
            }
        }
        let mut s = Self { valuation, coeffs, precision };
        s.normalize();
        s
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(&BigInt::from(-1)))
    }

    pub fn scale(&self, k: &BigInt) -> Self {
        let mut s = Self {
            valuation: self.valuation,
            coeffs: self.coeffs.iter().map(|c| c * k).collect(),
            precision: self.precision,
        };
        s.normalize();
        s
    }

    /// Product with window `[v1 + v2, min(v1 + p2, v2 + p1))`.
    pub fn mul(&self, other: &Self) -> Self {
        let precision = (self.valuation + other.precision).min(other.valuation + self.precision);
        let valuation = self.valuation + other.valuation;
        if self.is_zero() || other.is_zero() {
            return Self { valuation: 0, coeffs: vec![], precision };
        }
        let len = (precision - valuation).max(0) as usize;
        let mut coeffs = vec![BigInt::zero(); len];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in other.coeffs.iter().enumerate() {
                if i + j < len {
                    coeffs[i + j] += a * b;
                } else {
                    break;
                }
            }
        }
        let mut s = Self { valuation, coeffs, precision };
        s.normalize();
        s
    }

    /// Quotient by a series with unit (+-1) leading coefficient.
    #[allow(clippy::needless_range_loop)]
    pub fn div(&self, other: &Self) -> Self {
        assert!(!other.is_zero(), "division by zero series");
        let lead = &other.coeffs[0];
        assert!(
            lead.is_one() || (-lead).is_one(),
            "division requires a unit leading coefficient"
        );
        let valuation = self.valuation - other.valuation;
        let precision =
            (self.precision - other.valuation).min(other.precision - 2 * other.valuation + self.valuation);
        let len = (precision - valuation).max(0) as usize;
        let mut q = vec![BigInt::zero(); len];
        // a[k] = sum_{i+j=k} q[i] b[j], solved forward for q.
        for k in 0..len {
            let e = valuation + k as i64 + other.valuation;
            let mut acc = if e < self.valuation {
                BigInt::zero()
            } else {
                self.coeff(e)
            };
            for i in 0..k {
                let j = k - i;
                if j < other.coeffs.len() {
                    acc -= &q[i] * &other.coeffs[j];
                }
            }
            q[k] = if lead.is_one() { acc } else { -acc };
        }
        let mut s = Self { valuation, coeffs: q, precision };
        s.normalize();
        s
    }

    /// `q d/dq`, scaled: the coefficient of `q^n` becomes `n * c_n`.
    ///
    /// This is `(2 pi i)^{-1} d/dtau` on Fourier expansions.
    pub fn derivative(&self) -> Self {
        let mut s = Self {
            valuation: self.valuation,
            coeffs: self
                .coeffs
                .iter()
                .enumerate()
                .map(|(i, c)| c * BigInt::from(self.valuation + i as i64))
                .collect(),
            precision: self.precision,
        };
        s.normalize();
        s
    }
}

/// `Delta = q prod_{n>=1} (1 - q^n)^24` on `[1, prec)`.
pub fn delta(prec: i64) -> QSeries {
    assert!(prec >= 2);
    let p = prec - 1; // window of the entire eta-product factor
    let mut prod = QSeries::one(p);
    for n in 1..p {
        let mut v = vec![BigInt::zero(); n as usize + 1];
        v[0] = BigInt::one();
        v[n as usize] = BigInt::from(-1);
        let factor = QSeries::from_coeffs(0, v, p);
        let f2 = factor.mul(&factor);
        let f4 = f2.mul(&f2);
        let f8 = f4.mul(&f4);
        let f24 = f8.mul(&f8).mul(&f8);
        prod = prod.mul(&f24);
    }
    QSeries::monomial(1, BigInt::one(), prec).mul(&prod)
}

/// Eisenstein series `E_4 = 1 + 240 sum sigma_3(n) q^n` on `[0, prec)`.
pub fn e4(prec: i64) -> QSeries {
    eisenstein(prec, 3, 240)
}

/// Eisenstein series `E_6 = 1 - 504 sum sigma_5(n) q^n` on `[0, prec)`.
pub fn e6(prec: i64) -> QSeries {
    eisenstein(prec, 5, -504)
}

fn eisenstein(prec: i64, power: u32, scale: i64) -> QSeries {
    let mut coeffs = vec![BigInt::zero(); prec.max(1) as usize];
    coeffs[0] = BigInt::one();
    for n in 1..prec {
        coeffs[n as usize] = crate::ring::sigma_exact(n as u64, power) * BigInt::from(scale);
    }
    QSeries::from_coeffs(0, coeffs, prec)
}

/// q-expansion of the modular j-invariant, `j = E4^3 / Delta`, on `[-1, prec)`.
pub fn j_expansion(prec: i64) -> QSeries {
    assert!(prec >= 2);
    // Numerator and denominator are computed with one extra coefficient so
    // the quotient window reaches prec.
    let p = prec + 2;
    let e4 = e4(p);
    let num = e4.mul(&e4).mul(&e4);
    let den = delta(p);
    j_window_check(num.div(&den).truncate(prec))
}

fn j_window_check(j: QSeries) -> QSeries {
    debug_assert_eq!(j.valuation(), -1);
    debug_assert!(j.coeff(-1).is_one());
    j
}

/// The Faber basis element `j_n = q^{-n} + O(q)` on `[-n, prec)`.
///
/// Computed by eliminating the principal and constant coefficients of
/// `j_1^n` against lower powers of `j_1 = j - 744`; every pivot is 1, so
/// the elimination is exact over the integers.
pub fn jn(n: u32, prec: i64) -> QSeries {
    assert!(n >= 1);
    let prec = prec.max(1);
    // j1^k has window [-k, p0 - k + 1) when j1 has window [-1, p0);
    // the floor keeps the base expansion well-formed for tiny windows.
    let p0 = (prec + n as i64 - 1).max(2);
    let j1 = j_expansion(p0).sub(&QSeries::monomial(0, BigInt::from(744), p0));
    let mut powers: Vec<QSeries> = Vec::with_capacity(n as usize);
    powers.push(j1.clone());
    for _ in 1..n {
        let last = powers.last().unwrap();
        powers.push(last.mul(&j1));
    }
    let mut s = powers[n as usize - 1].clone();
    for k in (1..n).rev() {
        let c = s.coeff(-(k as i64));
        if !c.is_zero() {
            s = s.sub(&powers[k as usize - 1].scale(&c));
        }
    }
    let c0 = s.coeff(0);
    if !c0.is_zero() {
        s = s.sub(&QSeries::monomial(0, c0, s.precision()));
    }
    let s = s.truncate(prec);
    debug_assert!(s.coeff(-(n as i64)).is_one());
    debug_assert!((-(n as i64) + 1..=0).all(|e| s.coeff(e).is_zero()));
    s
}

/// Fourier coefficient `c_n(m)` of `j_n`, through the cache.
///
/// `c_n(-n) = 1`, `c_n(m) = 0` for `-n < m <= 0`.
pub fn coeff(cache: &CoeffCache, n: u32, m: i64) -> BigInt {
    assert!(n >= 1);
    if m <= 0 {
        return if m == -(n as i64) { BigInt::one() } else { BigInt::zero() };
    }
    cache.coefficient(n, m as u64)
}

/// The weight-2 dual basis element `S_n = -j_n'/n = q^{-n} + sum b_n(m) q^m`,
/// with `b_n(m) = -(m/n) c_n(m)`.
///
/// Integrality of the coefficients is asserted; a failure would indicate a
/// bug in the series arithmetic, not bad input.
pub fn sn_expansion(n: u32, prec: i64) -> Result<QSeries> {
    let jn = jn(n, prec);
    let deriv = jn.derivative();
    let minus_n = BigInt::from(-(n as i64));
    let mut coeffs = Vec::with_capacity(deriv.coeffs.len());
    for (i, c) in deriv.coeffs.iter().enumerate() {
        let (q, r) = c.div_rem(&minus_n);
        if !r.is_zero() {
            let e = deriv.valuation + i as i64;
            return Err(Error::Validation(format!(
                "S_{n}: coefficient of q^{e} not divisible by {n} (internal error)"
            )));
        }
        coeffs.push(q);
    }
    Ok(QSeries::from_coeffs(deriv.valuation, coeffs, deriv.precision))
}

/// The generating function `sum_{d | nu} (D/d) d j'_{N/d^2}` with
/// `N = |D| |nu|^2`; its `q^m` coefficients are the twisted traces of
/// `J_nu` and its principal part is `-sum_d (D/d) (N/d) q^{-N/d^2}`.
pub fn z_series(disc: &Discriminant, nu: &DualLatticeElement, prec: i64) -> QSeries {
    let n_total = nu.scaled_norm();
    let mut acc = QSeries::zero(prec);
    for d in nu.divisors() {
        let chi = kronecker(disc.value(), d);
        if chi == 0 {
            continue;
        }
        let index = n_total / (d * d);
        let series = jn(index as u32, prec).derivative();
        acc = acc.add(&series.scale(&BigInt::from(chi as i64 * d as i64)));
    }
    acc
}
