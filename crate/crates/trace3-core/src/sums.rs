//! Finite exponential sums.
//!
//! Two families appear in the trace formulas:
//!
//! * the rational Kloosterman sum
//!   `H_c(m, n) = (1/c) sum_{d mod c, gcd(d,c)=1} e((n d - m d')/c)`
//!   with `d'` the inverse of `d` mod `c`, and
//! * the twisted hermitian sum over `O_D / c O_D`
//!   `G~_c(|D|m, nu) = ((D/D_c)/c) sum_{|b|^2 = -|D|m (c)}
//!   (D_c / ((|D|m + |b|^2)/c)) e(tr(nu b)/c)`.
//!
//! Both sums are real (the summands pair under negation resp. conjugation);
//! accumulation asserts the imaginary cancellation. Terms are added in a
//! fixed lexicographic order with compensated summation so results are
//! bit-reproducible.
//!
//! `lemma_residual` measures the identity
//! `G~_c / c = sum_{d | content(mu), d | c} (D/d) H_{c/d}(m, |D||nu|^2/d^2)`
//! connecting the two families; it is reported as a residual rather than
//! assumed.

use crate::ring::{gcd_u64, kronecker, Discriminant, DualLatticeElement};

const TAU: f64 = std::f64::consts::TAU;

/// Compensated (Kahan) accumulator.
#[derive(Default, Clone, Copy)]
pub(crate) struct Kahan {
    sum: f64,
    comp: f64,
}

impl Kahan {
    pub(crate) fn add(&mut self, term: f64) {
        let y = term - self.comp;
        let t = self.sum + y;
        self.comp = (t - self.sum) - y;
        self.sum = t;
    }

    pub(crate) fn value(&self) -> f64 {
        self.sum
    }
}

/// Modular inverse of `a` mod `n` via the extended Euclidean algorithm.
/// Returns `None` when `gcd(a, n) != 1`.
pub fn mod_inverse(a: u64, n: u64) -> Option<u64> {
    if n == 1 {
        return Some(0);
    }
    let (mut old_r, mut r) = (a as i128 % n as i128, n as i128);
    let (mut old_s, mut s) = (1i128, 0i128);
    while r != 0 {
        let q = old_r.div_euclid(r);
        (old_r, r) = (r, old_r - q * r);
        (old_s, s) = (s, old_s - q * s);
    }
    if old_r.abs() != 1 {
        return None;
    }
    let inv = (old_s * old_r.signum()).rem_euclid(n as i128);
    Some(inv as u64)
}

/// Kloosterman sum `H_c(m, n)`, a real number.
///
/// `H_1 = 1`; `|H_c| <= phi(c)/c`. The sine part cancels under `d -> -d`
/// and is asserted to vanish numerically.
pub fn kloosterman_h(c: u64, m: i64, n: i64) -> f64 {
    assert!(c >= 1);
    if c == 1 {
        return 1.0;
    }
    let m = m.rem_euclid(c as i64) as u64;
    let n = n.rem_euclid(c as i64) as u64;
    let mut re = Kahan::default();
    let mut im = Kahan::default();
    let mut unit_count = 0u64;
    for d in 1..c {
        if gcd_u64(d, c) != 1 {
            continue;
        }
        unit_count += 1;
        let dinv = mod_inverse(d, c).expect("unit has an inverse");
        // (n*d - m*d') / c, reduced mod 1
        let num = (n as u128 * d as u128 + (c as u128 - m as u128 % c as u128) * dinv as u128)
            % c as u128;
        let angle = TAU * num as f64 / c as f64;
        re.add(angle.cos());
        im.add(angle.sin());
    }
    debug_assert!(
        im.value().abs() <= 1e-12 * unit_count.max(1) as f64,
        "H_{c}({m},{n}): imaginary part {} did not cancel",
        im.value()
    );
    re.value() / c as f64
}

/// Result of a finite exponential sum with its term count.
#[derive(Debug, Clone, Copy)]
pub struct SumValue {
    pub re: f64,
    pub im: f64,
    pub term_count: u64,
}

/// The twisted sum `G~_c(|D|m, nu)`, enumerated literally over residues
/// `b = b1 + b2 w` with `0 <= b1, b2 < c`.
///
/// `nu = None` is the zero frequency (the exponential factor is 1), as
/// needed for the Eisenstein trace.
pub fn g_tilde(disc: &Discriminant, m: u64, nu: Option<&DualLatticeElement>, c: u64) -> f64 {
    g_tilde_full(disc, m, nu, c).re
}

/// As [`g_tilde`], returning the imaginary part and term count as well.
pub fn g_tilde_full(
    disc: &Discriminant,
    m: u64,
    nu: Option<&DualLatticeElement>,
    c: u64,
) -> SumValue {
    assert!(c >= 1);
    assert!(m >= 1);
    let d = disc.value();
    let dm = disc.abs() * m; // |D| m
    let dc = disc.dc_part(c);
    let d_over_dc = d / dc;
    let prefactor = kronecker(d_over_dc, c);

    let mut re = Kahan::default();
    let mut im = Kahan::default();
    let mut terms = 0u64;
    if prefactor != 0 {
        // norm(b1 + b2 w) = b1^2 + D b1 b2 + b2^2 (D^2 - D)/4
        let quarter = ((d as i128) * (d as i128) - d as i128) / 4;
        let c_i = c as i128;
        for b2 in 0..c as i128 {
            let lin = d as i128 * b2; // coefficient of b1
            let cst = b2 * b2 * quarter + dm as i128;
            // phase contribution of b2: tr(nu * (b2 w)) etc. handled via mu*b below
            for b1 in 0..c_i {
                let val = b1 * b1 + lin * b1 + cst;
                if val % c_i != 0 {
                    continue;
                }
                let a = val / c_i; // (|D|m + |b|^2)/c, a positive integer
                debug_assert!(a > 0);
                let chi = kronecker(dc, a as u64);
                if chi == 0 {
                    terms += 1;
                    continue;
                }
                let phase = match nu {
                    None => 0i64,
                    Some(nu) => {
                        // tr(nu b) is the w-coordinate of mu * b, an integer
                        let b = disc.element(b1 as i64, b2 as i64);
                        crate::ring::trace_pair(nu, &b).rem_euclid(c as i64)
                    }
                };
                let angle = TAU * phase as f64 / c as f64;
                re.add(chi as f64 * angle.cos());
                im.add(chi as f64 * angle.sin());
                terms += 1;
            }
        }
    }
    let scale = prefactor as f64;
    let value = SumValue { re: scale * re.value(), im: scale * im.value(), term_count: terms };
    debug_assert!(
        value.im.abs() <= 1e-12 * terms.max(1) as f64,
        "G~_{c}: imaginary part {} did not cancel",
        value.im
    );
    value
}

/// Absolute residual of the exponential-sum identity
/// `(1/c) G~_c(|D|m, nu) - sum_{d | nu, d | c} (D/d) H_{c/d}(m, |D||nu|^2/d^2)`.
///
/// With `nu = None` (zero frequency) the divisor condition degenerates to
/// all divisors of `c`.
pub fn lemma_residual(
    disc: &Discriminant,
    m: u64,
    nu: Option<&DualLatticeElement>,
    c: u64,
) -> f64 {
    let lhs = g_tilde(disc, m, nu, c) / c as f64;
    let rhs = h_side(disc, m, nu, c);
    (lhs - rhs).abs()
}

/// The Kloosterman side of the identity, `sum_{d | nu, d | c} (D/d)
/// H_{c/d}(m, |D||nu|^2/d^2)`; this is the cheap route to `G~_c / c`.
pub fn h_side(disc: &Discriminant, m: u64, nu: Option<&DualLatticeElement>, c: u64) -> f64 {
    let mut acc = Kahan::default();
    match nu {
        Some(nu) => {
            let n_total = nu.scaled_norm();
            for d in nu.divisors() {
                if c % d != 0 {
                    continue;
                }
                let chi = kronecker(disc.value(), d);
                if chi == 0 {
                    continue;
                }
                let target = (n_total / (d * d)) as i64;
                acc.add(chi as f64 * kloosterman_h(c / d, m as i64, target));
            }
        }
        None => {
            for d in crate::ring::divisors(c) {
                let chi = kronecker(disc.value(), d);
                if chi == 0 {
                    continue;
                }
                acc.add(chi as f64 * kloosterman_h(c / d, m as i64, 0));
            }
        }
    }
    acc.value()
}
