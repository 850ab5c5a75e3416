//! Exact arithmetic in imaginary quadratic orders.
//!
//! For a negative fundamental discriminant `D` the ring of integers of
//! `Q(sqrt(D))` is `Z + Z*w` with `w = (D + sqrt(D))/2`, where we fix the
//! embedding `sqrt(D) = i*sqrt(|D|)` once and for all. In the basis `(1, w)`
//! the norm form is
//!
//! ```text
//! norm(x + y*w) = x^2 + D*x*y + y^2*(D^2 - D)/4
//! ```
//!
//! and conjugation sends `x + y*w` to `(x + y*D) - y*w`.
//!
//! Elements of the inverse different are represented exactly as `nu = mu /
//! sqrt(D)` with `mu` integral; then `|D| * |nu|^2 = norm(mu)` and the trace
//! pairing `tr(nu * beta)` is the `w`-coordinate of `mu * beta`.
//!
//! The module also provides the quadratic character `(D/.)`, prime
//! discriminant factorizations, class numbers by reduced-form counting,
//! Dirichlet L-values, the Riemann zeta function and divisor sums: the
//! scalar ingredients of the closed trace formulas.

use num_bigint::BigInt;
use num_traits::Zero;

use crate::{Error, Result};

/// Discriminants for which the ring of integers is norm-Euclidean.
///
/// Direct Poincare series evaluation and orbit reduction rely on the
/// Euclidean algorithm and are restricted to this list.
pub const EUCLIDEAN_DISCRIMINANTS: [i64; 5] = [-3, -4, -7, -8, -11];

/// A negative fundamental discriminant together with its factorization
/// into prime discriminants.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Discriminant {
    d: i64,
    prime_discs: Vec<i64>,
}

impl Discriminant {
    /// Validates that `d` is a negative fundamental discriminant and
    /// factors it into prime discriminants.
    pub fn new(d: i64) -> Result<Self> {
        if d >= 0 {
            return Err(Error::Validation(format!("discriminant {d} must be negative")));
        }
        if !is_fundamental(d) {
            return Err(Error::Validation(format!("{d} is not a fundamental discriminant")));
        }
        let prime_discs = prime_disc_factor_unchecked(d);
        debug_assert_eq!(prime_discs.iter().product::<i64>(), d);
        Ok(Self { d, prime_discs })
    }

    pub fn value(&self) -> i64 {
        self.d
    }

    /// `|D|` as an unsigned integer.
    pub fn abs(&self) -> u64 {
        self.d.unsigned_abs()
    }

    /// The unique multiset of prime discriminants with product `D`.
    pub fn prime_discs(&self) -> &[i64] {
        &self.prime_discs
    }

    pub fn is_euclidean(&self) -> bool {
        EUCLIDEAN_DISCRIMINANTS.contains(&self.d)
    }

    /// The element `x + y*w` in the internal basis `(1, w)`, `w = (D + sqrt(D))/2`.
    pub fn element(&self, x: i64, y: i64) -> RingElement {
        RingElement { x, y, d: self.d }
    }

    /// The element `x + y*g` in the presentation basis, where `g = sqrt(D)/2`
    /// for even `D` and `g = (1 + sqrt(D))/2` for odd `D`.
    ///
    /// This is the basis used on the command line: for `D = -4` the element
    /// `(0, 1)` is `i`.
    pub fn element_from_standard(&self, x: i64, y: i64) -> RingElement {
        let shift = standard_basis_shift(self.d);
        RingElement { x: x - y * shift, y, d: self.d }
    }

    /// Kronecker symbol `(D/n)`.
    pub fn chi(&self, n: u64) -> i32 {
        kronecker(self.d, n)
    }

    /// The fundamental discriminant `D_c`: the product of the prime
    /// discriminants `p*` over primes `p` dividing `gcd(c, D)`.
    ///
    /// Returns `1` for the empty product.
    pub fn dc_part(&self, c: u64) -> i64 {
        let mut out = 1i64;
        for &pstar in &self.prime_discs {
            let p = prime_of_disc(pstar);
            if c % p == 0 {
                out *= pstar;
            }
        }
        out
    }
}

/// `w - g` where `g` is the presentation-basis generator.
fn standard_basis_shift(d: i64) -> i64 {
    if d % 2 == 0 {
        d / 2
    } else {
        (d - 1) / 2
    }
}

/// The rational prime underlying a prime discriminant.
fn prime_of_disc(pstar: i64) -> u64 {
    match pstar {
        -4 | 8 | -8 => 2,
        _ => pstar.unsigned_abs(),
    }
}

fn is_fundamental(d: i64) -> bool {
    if d == 1 {
        return true;
    }
    let m4 = d.rem_euclid(4);
    if m4 == 1 {
        is_squarefree(d.unsigned_abs())
    } else if m4 == 0 {
        let k = d / 4;
        let km4 = k.rem_euclid(4);
        (km4 == 2 || km4 == 3) && is_squarefree(k.unsigned_abs())
    } else {
        false
    }
}

fn is_squarefree(mut n: u64) -> bool {
    if n == 0 {
        return false;
    }
    let mut p = 2u64;
    while p * p <= n {
        if n % p == 0 {
            n /= p;
            if n % p == 0 {
                return false;
            }
        }
        p += 1;
    }
    true
}

fn prime_disc_factor_unchecked(d: i64) -> Vec<i64> {
    let mut n = d.unsigned_abs();
    let mut odd = Vec::new();
    let mut p = 3u64;
    while n % 2 == 0 {
        n /= 2;
    }
    while p * p <= n {
        if n % p == 0 {
            odd.push(p as i64);
            while n % p == 0 {
                n /= p;
            }
        }
        p += 2;
    }
    if n > 1 {
        odd.push(n as i64);
    }
    let mut discs: Vec<i64> = odd
        .into_iter()
        .map(|p| if p % 4 == 1 { p } else { -p })
        .collect();
    let odd_product: i64 = discs.iter().product();
    let two_part = d / odd_product;
    debug_assert!([1, -4, 8, -8].contains(&two_part));
    if two_part != 1 {
        discs.push(two_part);
    }
    discs.sort_unstable();
    discs
}

/// Extended Kronecker symbol `(d/n)` for a fundamental discriminant `d`
/// (or `d = 1`) and `n >= 0`.
///
/// Completely multiplicative in `n`; zero iff `gcd(d, n) > 1` (for `n >= 1`).
pub fn kronecker(d: i64, n: u64) -> i32 {
    debug_assert!(d == 1 || is_fundamental(d), "kronecker: {d} not fundamental");
    if n == 0 {
        return if d == 1 || d == -1 { 1 } else { 0 };
    }
    let mut n = n;
    let mut result = 1i32;
    // (d/2) per the supplementary law, applied once per factor of two.
    let chi2 = match d.rem_euclid(8) {
        1 | 7 => 1,
        3 | 5 => -1,
        _ => 0,
    };
    while n % 2 == 0 {
        n /= 2;
        if chi2 == 0 {
            return 0;
        }
        result *= chi2;
    }
    result * jacobi(d, n)
}

/// Jacobi symbol `(a/n)` for odd `n > 0`, any integer `a`.
fn jacobi(a: i64, n: u64) -> i32 {
    debug_assert!(n % 2 == 1);
    let mut a = a.rem_euclid(n as i64) as u64;
    let mut n = n;
    let mut result = 1i32;
    while a != 0 {
        while a % 2 == 0 {
            a /= 2;
            let r = n % 8;
            if r == 3 || r == 5 {
                result = -result;
            }
        }
        std::mem::swap(&mut a, &mut n);
        if a % 4 == 3 && n % 4 == 3 {
            result = -result;
        }
        a %= n;
    }
    if n == 1 {
        result
    } else {
        0
    }
}

/// An element `x + y*w` of the ring of integers, `w = (D + sqrt(D))/2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RingElement {
    x: i64,
    y: i64,
    d: i64,
}

impl RingElement {
    pub fn x(&self) -> i64 {
        self.x
    }

    pub fn y(&self) -> i64 {
        self.y
    }

    pub fn discriminant_value(&self) -> i64 {
        self.d
    }

    pub fn is_zero(&self) -> bool {
        self.x == 0 && self.y == 0
    }

    /// Coordinates in the presentation basis `(1, g)`,
    /// `g = sqrt(D)/2` resp. `(1 + sqrt(D))/2`.
    pub fn standard_coords(&self) -> (i64, i64) {
        (self.x + self.y * standard_basis_shift(self.d), self.y)
    }

    /// `norm(x + y*w) = x^2 + D*x*y + y^2*(D^2 - D)/4`, always nonnegative.
    pub fn norm(&self) -> u64 {
        let x = self.x as i128;
        let y = self.y as i128;
        let d = self.d as i128;
        let n = x * x + d * x * y + y * y * (d * d - d) / 4;
        debug_assert!(n >= 0);
        n as u64
    }

    /// `conjugate(x + y*w) = (x + y*D) - y*w`.
    pub fn conj(&self) -> Self {
        Self { x: self.x + self.y * self.d, y: -self.y, d: self.d }
    }

    pub fn add(&self, other: &Self) -> Self {
        debug_assert_eq!(self.d, other.d);
        Self { x: self.x + other.x, y: self.y + other.y, d: self.d }
    }

    pub fn sub(&self, other: &Self) -> Self {
        debug_assert_eq!(self.d, other.d);
        Self { x: self.x - other.x, y: self.y - other.y, d: self.d }
    }

    pub fn neg(&self) -> Self {
        Self { x: -self.x, y: -self.y, d: self.d }
    }

    /// Product using `w^2 = D*w - (D^2 - D)/4`.
    pub fn mul(&self, other: &Self) -> Self {
        debug_assert_eq!(self.d, other.d);
        let (x1, y1, x2, y2) = (self.x as i128, self.y as i128, other.x as i128, other.y as i128);
        let d = self.d as i128;
        let c = (d * d - d) / 4;
        let x = x1 * x2 - y1 * y2 * c;
        let y = x1 * y2 + x2 * y1 + y1 * y2 * d;
        Self {
            x: i64::try_from(x).expect("ring element coordinate overflow"),
            y: i64::try_from(y).expect("ring element coordinate overflow"),
            d: self.d,
        }
    }

    pub fn scale(&self, k: i64) -> Self {
        Self { x: self.x * k, y: self.y * k, d: self.d }
    }

    /// The content `gcd(x, y)`; zero only for the zero element.
    pub fn content(&self) -> u64 {
        gcd_u64(self.x.unsigned_abs(), self.y.unsigned_abs())
    }

    /// Complex embedding under `sqrt(D) = i*sqrt(|D|)`.
    pub fn to_complex(&self) -> (f64, f64) {
        let re = self.x as f64 + self.y as f64 * self.d as f64 / 2.0;
        let im = self.y as f64 * (self.d.unsigned_abs() as f64).sqrt() / 2.0;
        (re, im)
    }
}

pub(crate) fn gcd_u64(a: u64, b: u64) -> u64 {
    let (mut a, mut b) = (a, b);
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

/// An element `nu = mu / sqrt(D)` of the inverse different, `mu` nonzero.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DualLatticeElement {
    mu: RingElement,
}

impl DualLatticeElement {
    pub fn new(mu: RingElement) -> Result<Self> {
        if mu.is_zero() {
            return Err(Error::Validation("dual lattice element must be nonzero".into()));
        }
        Ok(Self { mu })
    }

    pub fn mu(&self) -> RingElement {
        self.mu
    }

    /// `|D| * |nu|^2 = norm(mu)`, a positive integer.
    pub fn scaled_norm(&self) -> u64 {
        self.mu.norm()
    }

    /// `|nu| = sqrt(norm(mu) / |D|)`.
    pub fn abs_nu(&self) -> f64 {
        (self.mu.norm() as f64 / self.mu.d.unsigned_abs() as f64).sqrt()
    }

    /// Content of `mu`; `nu/d` stays in the inverse different exactly for
    /// the divisors `d` of this value.
    pub fn content(&self) -> u64 {
        self.mu.content()
    }

    /// The positive divisors of `content(mu)` in increasing order.
    pub fn divisors(&self) -> Vec<u64> {
        divisors(self.content())
    }

    /// Complex value of `nu` in the fixed embedding.
    pub fn to_complex(&self) -> (f64, f64) {
        let abs_d = (self.mu.d.unsigned_abs() as f64).sqrt();
        let re = self.mu.y as f64 / 2.0;
        let im = -(self.mu.x as f64 + self.mu.y as f64 * self.mu.d as f64 / 2.0) / abs_d;
        (re, im)
    }
}

/// Exact trace pairing `tr(nu * beta) = nu*beta + conj(nu*beta)`.
///
/// In coordinates this is the `w`-component of `mu * beta`.
pub fn trace_pair(nu: &DualLatticeElement, beta: &RingElement) -> i64 {
    nu.mu.mul(beta).y
}

/// Sorted enumeration of nonzero ring elements with `norm <= bound`,
/// ordered by `(norm, x, y)`.
pub fn elements_by_norm(disc: &Discriminant, bound: u64) -> Vec<RingElement> {
    let d = disc.value();
    // Q(x, y) = x^2 + D x y + y^2 (D^2 - D)/4 >= |D| y^2 / 4
    let ymax = (4.0 * bound as f64 / disc.abs() as f64).sqrt().ceil() as i64 + 1;
    let mut out = Vec::new();
    for y in -ymax..=ymax {
        // x^2 + (D y) x + (y^2 (D^2-D)/4 - bound) <= 0
        let c0 = (d * d - d) / 4 * y * y;
        let half_b = d as f64 * y as f64 / 2.0;
        let disc_q = half_b * half_b - (c0 as f64 - bound as f64);
        if disc_q < 0.0 {
            continue;
        }
        let lo = (-half_b - disc_q.sqrt()).floor() as i64 - 1;
        let hi = (-half_b + disc_q.sqrt()).ceil() as i64 + 1;
        for x in lo..=hi {
            let el = disc.element(x, y);
            let n = el.norm();
            if n >= 1 && n <= bound {
                out.push(el);
            }
        }
    }
    out.sort_by_key(|el| (el.norm(), el.x(), el.y()));
    out
}

/// Positive divisors of `n` in increasing order (empty for `n = 0`).
pub fn divisors(n: u64) -> Vec<u64> {
    let mut small = Vec::new();
    let mut large = Vec::new();
    let mut d = 1;
    while d * d <= n {
        if n % d == 0 {
            small.push(d);
            if d * d != n {
                large.push(n / d);
            }
        }
        d += 1;
    }
    large.reverse();
    small.extend(large);
    small
}

/// Class number of `Q(sqrt(D))` by counting reduced primitive binary
/// quadratic forms `(a, b, c)` of discriminant `D` with `|b| <= a <= c`
/// (and `b >= 0` on the boundary).
pub fn class_number(disc: &Discriminant) -> u64 {
    let d = disc.d;
    let mut count = 0u64;
    let mut a = 1i64;
    while 3 * a * a <= -d {
        // -a < b <= a with b == D (mod 2); c = (b^2 - D)/(4a) integral, >= a;
        // on the boundary a == c only b >= 0 is counted.
        let mut b = -a + 1;
        if (b - d).rem_euclid(2) != 0 {
            b += 1;
        }
        while b <= a {
            let num = b * b - d;
            if num % (4 * a) == 0 {
                let c = num / (4 * a);
                let boundary_ok = c > a || b >= 0;
                let primitive = gcd_u64(
                    gcd_u64(a.unsigned_abs(), b.unsigned_abs()),
                    c.unsigned_abs(),
                ) == 1;
                if c >= a && boundary_ok && primitive {
                    count += 1;
                }
            }
            b += 2;
        }
        a += 1;
    }
    count
}

/// Half the number of units of the ring of integers: 3 for `D = -3`,
/// 2 for `D = -4`, 1 otherwise.
pub fn half_unit_count(disc: &Discriminant) -> u64 {
    match disc.d {
        -3 => 3,
        -4 => 2,
        _ => 1,
    }
}

/// The units of the ring of integers (all of them, not modulo sign).
pub fn units(disc: &Discriminant) -> Vec<RingElement> {
    match disc.d {
        -4 => vec![
            disc.element(1, 0),
            disc.element(-1, 0),
            // i = 2 + w for w = -2 + i
            disc.element_from_standard(0, 1),
            disc.element_from_standard(0, -1),
        ],
        -3 => {
            // sixth roots of unity: powers of zeta = (1 + sqrt(-3))/2
            let zeta = disc.element_from_standard(0, 1);
            let mut u = disc.element(1, 0);
            let mut out = Vec::with_capacity(6);
            for _ in 0..6 {
                out.push(u);
                u = u.mul(&zeta);
            }
            out
        }
        _ => vec![disc.element(1, 0), disc.element(-1, 0)],
    }
}

/// Riemann zeta for real `s > 1` within `tol`, by direct summation with an
/// Euler-Maclaurin tail.
pub fn zeta(s: f64, tol: f64) -> Result<f64> {
    if !(s > 1.0) {
        return Err(Error::Range(format!("zeta requires s > 1, got {s}")));
    }
    let mut n_cut = 24u64;
    loop {
        let (value, err) = zeta_em(s, n_cut);
        if err < tol || n_cut > 1 << 22 {
            if err >= tol {
                return Err(Error::Convergence(format!(
                    "zeta({s}) tail bound {err:.3e} above tolerance {tol:.3e}"
                )));
            }
            return Ok(value);
        }
        n_cut *= 2;
    }
}

/// Euler-Maclaurin evaluation of `sum_{n >= n_cut} n^{-s}` plus the partial
/// sum below the cut; returns `(value, error bound)`.
fn zeta_em(s: f64, n_cut: u64) -> (f64, f64) {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for n in 1..n_cut {
        kahan_add(&mut sum, &mut comp, (n as f64).powf(-s));
    }
    let (tail, err) = power_tail(s, n_cut as f64);
    (sum + tail, err)
}

/// `sum_{n >= n0} n^{-s}` by Euler-Maclaurin; returns `(value, error bound)`.
/// Requires `s > 1` and `n0 >= 8` for the stated bound to be tight.
fn power_tail(s: f64, n0: f64) -> (f64, f64) {
    // Bernoulli numbers B_2, B_4, ..., B_12.
    const B: [f64; 6] = [
        1.0 / 6.0,
        -1.0 / 30.0,
        1.0 / 42.0,
        -1.0 / 30.0,
        5.0 / 66.0,
        -691.0 / 2730.0,
    ];
    let mut tail = n0.powf(1.0 - s) / (s - 1.0) + 0.5 * n0.powf(-s);
    // falling product s*(s+1)*...*(s+2k-2) and factorial (2k)!
    let mut poch = s;
    let mut fact = 2.0f64;
    let mut last = 0.0f64;
    for (k, b) in B.iter().enumerate() {
        let term = b / fact * poch * n0.powf(-s - (2 * k + 1) as f64);
        tail += term;
        last = term.abs();
        poch *= (s + (2 * k + 1) as f64) * (s + (2 * k + 2) as f64);
        fact *= ((2 * k + 3) as f64) * ((2 * k + 4) as f64);
    }
    // The EM error is bounded by the magnitude of the first omitted term;
    // use the last included term with a safety factor.
    (tail, 2.0 * last)
}

#[inline]
fn kahan_add(sum: &mut f64, comp: &mut f64, term: f64) {
    let y = term - *comp;
    let t = *sum + y;
    *comp = (t - *sum) - y;
    *sum = t;
}

/// Dirichlet L-value `L_D(s) = sum (D/n) n^{-s}` for real `s > 1/2`,
/// within `tol`.
///
/// The series is summed over full periods of length `|D|` (the character
/// sums to zero over each period), with a two-term Taylor tail whose error
/// is bounded explicitly. Deterministic for fixed inputs.
pub fn dirichlet_l(disc: &Discriminant, s: f64, tol: f64) -> Result<f64> {
    if !(s > 0.5) {
        return Err(Error::Range(format!("dirichlet_l requires s > 1/2, got {s}")));
    }
    let period = disc.abs();
    let chi: Vec<i32> = (1..=period).map(|j| disc.chi(j)).collect();
    // First moments of the character over one period, for the tail.
    let a1: f64 = chi.iter().enumerate().map(|(i, &c)| c as f64 * (i + 1) as f64).sum();
    let a2: f64 = chi
        .iter()
        .enumerate()
        .map(|(i, &c)| c as f64 * ((i + 1) as f64).powi(2))
        .sum();

    let mut blocks = 64u64;
    loop {
        // Error of the two-term tail: third-order Taylor remainder,
        // |R_3| <= j^3/6 * s(s+1)(s+2) * (k*p)^{-s-3}, summed over j and k.
        let p = period as f64;
        let (t3, _) = power_tail(s + 3.0, blocks as f64);
        let err = s * (s + 1.0) * (s + 2.0) / 24.0 * p.powf(1.0 - s) * t3;
        if err < tol / 2.0 {
            let mut sum = 0.0f64;
            let mut comp = 0.0f64;
            for k in 0..blocks {
                let base = k * period;
                for (j, &c) in chi.iter().enumerate() {
                    if c != 0 {
                        let n = (base + j as u64 + 1) as f64;
                        kahan_add(&mut sum, &mut comp, c as f64 * n.powf(-s));
                    }
                }
            }
            // Tail: sum_{k >= blocks} [A1 * f'(k*p) + A2/2 * f''(k*p)] with
            // f(t) = t^{-s}.
            let (t1, _) = power_tail(s + 1.0, blocks as f64);
            let (t2, _) = power_tail(s + 2.0, blocks as f64);
            let tail = -s * a1 * p.powf(-(s + 1.0)) * t1
                + s * (s + 1.0) / 2.0 * a2 * p.powf(-(s + 2.0)) * t2;
            return Ok(sum + tail);
        }
        blocks *= 2;
        if blocks.saturating_mul(period) > 10_000_000 {
            return Err(Error::Convergence(format!(
                "dirichlet_l(D={}, s={s}) cannot reach tol {tol:.3e} within term budget",
                disc.d
            )));
        }
    }
}

/// Divisor sum `sigma_s(m) = sum_{d | m} d^s` for real `s`.
pub fn sigma(m: u64, s: f64) -> f64 {
    divisors(m).iter().map(|&d| (d as f64).powf(s)).sum()
}

/// Exact divisor sum for a nonnegative integer exponent.
pub fn sigma_exact(m: u64, k: u32) -> BigInt {
    debug_assert!(m >= 1);
    let mut out = BigInt::zero();
    for d in divisors(m) {
        out += BigInt::from(d).pow(k);
    }
    out
}
