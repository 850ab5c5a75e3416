//! Binary hermitian forms, their special points, and orbit classes.
//!
//! A positive definite integral binary hermitian form `X = (a, b; conj(b), c)`
//! of determinant `a c - norm(b) = |D| m` has the special point
//! `P_X = b/c + (sqrt(|D|m)/c) j` in hyperbolic 3-space. The Bianchi group
//! acts with finitely many orbits; this module
//!
//! * enumerates translation-orbit representatives (`c` up to a bound, `b`
//!   over residues mod `c` with `norm(b) = -|D|m (mod c)`),
//! * evaluates the twisting character `chi_D` as a product of Kronecker
//!   symbols over the prime discriminants dividing `D`,
//! * reduces special points into a fundamental domain by exact rational
//!   arithmetic (nearest-lattice-point translations and inversions),
//! * classifies orbits with stabilizer orders and character values, and
//! * evaluates the defining Poincare series of `J_nu` at special points by
//!   summing over cosets parametrized by coprime rows `(c, d)`.
//!
//! Everything except the final Poincare summation is exact. Stabilizer
//! orders count matrices of determinant one (both signs), matching the
//! weights `1/|Gamma_X|` of the twisted trace; a point with no extra
//! symmetry has stabilizer order 2.
//!
//! Reduction and the coset parametrization need Bezout completions, so
//! these operations are restricted to the norm-Euclidean discriminants
//! `D in {-3, -4, -7, -8, -11}`.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;

use crate::niebur::{Point3, SeriesEval};
use crate::ring::{self, kronecker, Discriminant, DualLatticeElement, RingElement};
use crate::special;
use crate::sums::Kahan;
use crate::{Error, Result};

const PI: f64 = std::f64::consts::PI;
const TAU: f64 = std::f64::consts::TAU;

/// An element `a + b w` of the imaginary quadratic field with rational
/// coordinates, `w = (D + sqrt(D))/2`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FieldElement {
    a: BigRational,
    b: BigRational,
    d: i64,
}

impl FieldElement {
    pub fn zero(d: i64) -> Self {
        Self { a: BigRational::zero(), b: BigRational::zero(), d }
    }

    pub fn from_ring(el: &RingElement) -> Self {
        Self {
            a: BigRational::from(BigInt::from(el.x())),
            b: BigRational::from(BigInt::from(el.y())),
            d: el.discriminant_value(),
        }
    }

    pub fn from_coords(d: i64, a: BigRational, b: BigRational) -> Self {
        Self { a, b, d }
    }

    pub fn coords(&self) -> (&BigRational, &BigRational) {
        (&self.a, &self.b)
    }

    fn quarter(&self) -> BigRational {
        let d = BigInt::from(self.d);
        BigRational::from((&d * &d - &d) / BigInt::from(4))
    }

    pub fn add(&self, other: &Self) -> Self {
        Self { a: &self.a + &other.a, b: &self.b + &other.b, d: self.d }
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self { a: &self.a - &other.a, b: &self.b - &other.b, d: self.d }
    }

    pub fn neg(&self) -> Self {
        Self { a: -self.a.clone(), b: -self.b.clone(), d: self.d }
    }

    /// Product using `w^2 = D w - (D^2 - D)/4`.
    pub fn mul(&self, other: &Self) -> Self {
        debug_assert_eq!(self.d, other.d);
        let q = self.quarter();
        let dd = BigRational::from(BigInt::from(self.d));
        let bb = &self.b * &other.b;
        let a = &self.a * &other.a - &bb * &q;
        let b = &self.a * &other.b + &self.b * &other.a + &bb * &dd;
        Self { a, b, d: self.d }
    }

    /// `conj(a + b w) = (a + b D) - b w`.
    pub fn conj(&self) -> Self {
        let dd = BigRational::from(BigInt::from(self.d));
        Self { a: &self.a + &(&self.b * &dd), b: -self.b.clone(), d: self.d }
    }

    /// `norm = a^2 + D a b + b^2 (D^2 - D)/4 >= 0`, exact.
    pub fn norm(&self) -> BigRational {
        let dd = BigRational::from(BigInt::from(self.d));
        &self.a * &self.a + &(&dd * &self.a) * &self.b + &(&self.b * &self.b) * &self.quarter()
    }

    pub fn is_zero(&self) -> bool {
        self.a.is_zero() && self.b.is_zero()
    }

    /// The ring element with the same coordinates, when integral.
    pub fn to_ring(&self, disc: &Discriminant) -> Option<RingElement> {
        if self.a.is_integer() && self.b.is_integer() {
            Some(disc.element(self.a.to_integer().to_i64()?, self.b.to_integer().to_i64()?))
        } else {
            None
        }
    }

    /// Complex embedding under `sqrt(D) = i sqrt(|D|)`.
    pub fn to_complex(&self) -> (f64, f64) {
        let a = ratio_to_f64(&self.a);
        let b = ratio_to_f64(&self.b);
        (a + b * self.d as f64 / 2.0, b * (self.d.unsigned_abs() as f64).sqrt() / 2.0)
    }
}

pub(crate) fn ratio_to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or_else(|| {
        r.numer().to_f64().unwrap_or(f64::NAN) / r.denom().to_f64().unwrap_or(f64::NAN)
    })
}

/// A point `z + r j` with exact coordinates: `z` in the field, `r^2` a
/// positive rational.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpecialPoint {
    pub z: FieldElement,
    pub r_squared: BigRational,
}

impl SpecialPoint {
    pub fn new(z: FieldElement, r_squared: BigRational) -> Result<Self> {
        if !r_squared.is_positive() {
            return Err(Error::Validation("special point requires r^2 > 0".into()));
        }
        Ok(Self { z, r_squared })
    }

    /// Floating-point view for numeric series evaluation.
    pub fn to_point3(&self) -> Point3 {
        let (zx, zy) = self.z.to_complex();
        Point3 { zx, zy, r: ratio_to_f64(&self.r_squared).sqrt() }
    }
}

/// A determinant-one matrix over the ring of integers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroupElement {
    pub a: RingElement,
    pub b: RingElement,
    pub c: RingElement,
    pub d: RingElement,
}

impl GroupElement {
    pub fn identity(disc: &Discriminant) -> Self {
        Self {
            a: disc.element(1, 0),
            b: disc.element(0, 0),
            c: disc.element(0, 0),
            d: disc.element(1, 0),
        }
    }

    pub fn new(a: RingElement, b: RingElement, c: RingElement, d: RingElement) -> Result<Self> {
        let det = a.mul(&d).sub(&b.mul(&c));
        if det.x() != 1 || det.y() != 0 {
            return Err(Error::Validation("matrix determinant must be 1".into()));
        }
        Ok(Self { a, b, c, d })
    }

    /// Translation `(1, t; 0, 1)`.
    pub fn translation(disc: &Discriminant, t: &RingElement) -> Self {
        Self { a: disc.element(1, 0), b: *t, c: disc.element(0, 0), d: disc.element(1, 0) }
    }

    /// Inversion `(0, -1; 1, 0)`.
    pub fn inversion(disc: &Discriminant) -> Self {
        Self {
            a: disc.element(0, 0),
            b: disc.element(-1, 0),
            c: disc.element(1, 0),
            d: disc.element(0, 0),
        }
    }

    pub fn mul(&self, other: &Self) -> Self {
        Self {
            a: self.a.mul(&other.a).add(&self.b.mul(&other.c)),
            b: self.a.mul(&other.b).add(&self.b.mul(&other.d)),
            c: self.c.mul(&other.a).add(&self.d.mul(&other.c)),
            d: self.c.mul(&other.b).add(&self.d.mul(&other.d)),
        }
    }

    /// Inverse `(d, -b; -c, a)` (determinant one).
    pub fn inverse(&self) -> Self {
        Self { a: self.d, b: self.b.neg(), c: self.c.neg(), d: self.a }
    }

    /// Representative with a canonical sign: the first nonzero coordinate
    /// of the entries, scanned in the order `(c, d, a, b)`, is positive.
    pub fn canonical_sign(self) -> Self {
        for el in [self.c, self.d, self.a, self.b] {
            for coord in [el.x(), el.y()] {
                if coord > 0 {
                    return self;
                }
                if coord < 0 {
                    return Self {
                        a: self.a.neg(),
                        b: self.b.neg(),
                        c: self.c.neg(),
                        d: self.d.neg(),
                    };
                }
            }
        }
        self
    }

    /// Action on a point: with `den = norm(c z + d) + norm(c) r^2`,
    /// `z' = ((a z + b) conj(c z + d) + a conj(c) r^2)/den`, `r' = r/den`.
    pub fn apply(&self, p: &SpecialPoint) -> SpecialPoint {
        let a = FieldElement::from_ring(&self.a);
        let b = FieldElement::from_ring(&self.b);
        let c = FieldElement::from_ring(&self.c);
        let d = FieldElement::from_ring(&self.d);
        let cz_d = c.mul(&p.z).add(&d);
        let den = &cz_d.norm() + &(&c.norm() * &p.r_squared);
        debug_assert!(den.is_positive());
        let num = a
            .mul(&p.z)
            .add(&b)
            .mul(&cz_d.conj())
            .add(&scale_field(&a.mul(&c.conj()), &p.r_squared));
        let z = FieldElement { a: &num.a / &den, b: &num.b / &den, d: num.d };
        let r_squared = &p.r_squared / &(&den * &den);
        SpecialPoint { z, r_squared }
    }
}

fn scale_field(el: &FieldElement, k: &BigRational) -> FieldElement {
    FieldElement { a: &el.a * k, b: &el.b * k, d: el.d }
}

/// A positive definite integral binary hermitian form of determinant `|D| m`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct HermitianForm {
    pub a: i64,
    /// Off-diagonal entry, coordinates in the internal `(1, w)` basis.
    pub b_x: i64,
    pub b_y: i64,
    pub c: i64,
    pub m: u64,
}

impl HermitianForm {
    pub fn new(disc: &Discriminant, a: i64, b: RingElement, c: i64, m: u64) -> Result<Self> {
        if a <= 0 || c <= 0 {
            return Err(Error::Validation("hermitian form requires a, c > 0".into()));
        }
        let det = a as i128 * c as i128 - b.norm() as i128;
        if det != (disc.abs() * m) as i128 {
            return Err(Error::Validation(format!(
                "form determinant {det} does not equal |D| m = {}",
                disc.abs() * m
            )));
        }
        Ok(Self { a, b_x: b.x(), b_y: b.y(), c, m })
    }

    pub fn b(&self, disc: &Discriminant) -> RingElement {
        disc.element(self.b_x, self.b_y)
    }

    /// The special point `b/c + (sqrt(|D|m)/c) j`: `r^2 = |D| m / c^2`.
    pub fn special_point(&self, disc: &Discriminant) -> SpecialPoint {
        let c = BigRational::from(BigInt::from(self.c));
        let z = FieldElement {
            a: BigRational::from(BigInt::from(self.b_x)) / &c,
            b: BigRational::from(BigInt::from(self.b_y)) / &c,
            d: disc.value(),
        };
        let r_squared = BigRational::from(BigInt::from((disc.abs() * self.m) as i64)) / (&c * &c);
        SpecialPoint { z, r_squared }
    }
}

/// Representatives of the translation orbits with `c <= cmax`: for each `c`
/// the residues `b mod c O_D` with `norm(b) = -|D| m (mod c)` and
/// `a = (|D| m + norm(b)) / c`.
pub fn enumerate_infty_reps(disc: &Discriminant, m: u64, cmax: u64) -> Vec<HermitianForm> {
    assert!(m >= 1 && cmax >= 1);
    let dm = disc.abs() * m;
    let mut out = Vec::new();
    for c in 1..=cmax as i64 {
        for b2 in 0..c {
            for b1 in 0..c {
                let b = disc.element(b1, b2);
                let n = b.norm() as i128 + dm as i128;
                if n % c as i128 == 0 {
                    let a = (n / c as i128) as i64;
                    out.push(HermitianForm { a, b_x: b1, b_y: b2, c, m });
                }
            }
        }
    }
    out
}

/// The twisting character `chi_D(X)`: a product over prime discriminants
/// `p* | D` of `(p*/a)` if `p` does not divide `a`, else `(p*/c)` if `p`
/// does not divide `c`, else `0`.
pub fn chi(disc: &Discriminant, form: &HermitianForm) -> i32 {
    let mut out = 1i32;
    for &pstar in disc.prime_discs() {
        let p = match pstar {
            -4 | 8 | -8 => 2u64,
            _ => pstar.unsigned_abs(),
        };
        let factor = if form.a.unsigned_abs() % p != 0 {
            kronecker(pstar, form.a.unsigned_abs())
        } else if form.c.unsigned_abs() % p != 0 {
            kronecker(pstar, form.c.unsigned_abs())
        } else {
            0
        };
        if factor == 0 {
            return 0;
        }
        out *= factor;
    }
    out
}

fn require_euclidean(disc: &Discriminant, what: &str) -> Result<()> {
    if !disc.is_euclidean() {
        return Err(Error::UnsupportedDiscriminant(format!(
            "{what} requires a norm-Euclidean discriminant (-3, -4, -7, -8, -11), got {}",
            disc.value()
        )));
    }
    Ok(())
}

/// Squared covering radius of the integer lattice; reduced points satisfy
/// `norm(z) <= B_D`, hence `r^2 >= 1 - B_D`.
fn covering_radius_squared(d: i64) -> BigRational {
    let (num, den) = match d {
        -3 => (1, 3),
        -4 => (1, 2),
        -7 => (4, 7),
        -8 => (3, 4),
        -11 => (9, 11),
        _ => unreachable!("covering radius only needed for Euclidean D"),
    };
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

/// Nearest lattice point, with deterministic tie-breaking: smallest
/// remainder norm, then the lexicographically largest remainder (so the
/// nonnegative side of the boundary wins).
///
/// Candidates are scanned around the coordinate floor in the short basis
/// `(1, g)` (`g = sqrt(D)/2` or `(1+sqrt(D))/2`), where a window of two
/// units always contains the minimizer; the internal `(1, w)` coordinates
/// are far too skewed for that.
fn nearest_lattice_point(disc: &Discriminant, z: &FieldElement) -> RingElement {
    let d = disc.value();
    let shift = if d % 2 == 0 { d / 2 } else { (d - 1) / 2 };
    // standard coordinates: (a + b*shift, b)
    let sa = &z.a + &(&z.b * &BigRational::from(BigInt::from(shift)));
    let fa = floor_ratio(&sa);
    let fb = floor_ratio(&z.b);
    let mut best: Option<((BigRational, BigRational, BigRational), RingElement)> = None;
    for db in -1..=2i64 {
        for da in -1..=2i64 {
            let t = disc.element_from_standard(fa + da, fb + db);
            let rem = z.sub(&FieldElement::from_ring(&t));
            let key = (rem.norm(), -rem.a, -rem.b);
            match &best {
                Some((k, _)) if *k <= key => {}
                _ => best = Some((key, t)),
            }
        }
    }
    best.expect("candidate set nonempty").1
}

fn floor_ratio(r: &BigRational) -> i64 {
    r.floor().to_integer().to_i64().expect("coordinate fits in i64")
}

/// Reduces a point into the fundamental domain: `z` a nearest-lattice-point
/// representative and `norm(z) + r^2 >= 1`. Returns the reduced point and
/// the matrix `g` with `g P = P'` exactly.
pub fn reduce_point(disc: &Discriminant, p: &SpecialPoint) -> Result<(SpecialPoint, GroupElement)> {
    require_euclidean(disc, "point reduction")?;
    let mut current = p.clone();
    let mut gamma = GroupElement::identity(disc);
    let one = BigRational::one();
    for _ in 0..100_000 {
        let t = nearest_lattice_point(disc, &current.z);
        if !t.is_zero() {
            let shift = GroupElement::translation(disc, &t.neg());
            current = shift.apply(&current);
            gamma = shift.mul(&gamma);
        }
        if &current.z.norm() + &current.r_squared < one {
            let inv = GroupElement::inversion(disc);
            current = inv.apply(&current);
            gamma = inv.mul(&gamma);
        } else {
            debug_assert_eq!(gamma.apply(p), current);
            return Ok((current, gamma));
        }
    }
    Err(Error::Validation("point reduction did not terminate".into()))
}

/// Quotient with a remainder of smaller norm (norm-Euclidean rings only).
/// Integer arithmetic throughout: candidates are scanned around the
/// floor of `a conj(b)/norm(b)` in the short basis.
fn div_nearest(a: &RingElement, b: &RingElement, disc: &Discriminant) -> RingElement {
    debug_assert!(!b.is_zero());
    let d = disc.value();
    let shift = if d % 2 == 0 { d / 2 } else { (d - 1) / 2 };
    let nb = b.norm() as i128;
    let prod = a.mul(&b.conj());
    // standard coordinates of the exact quotient, floor-divided
    let sx = prod.x() as i128 + prod.y() as i128 * shift as i128;
    let sy = prod.y() as i128;
    let fa = sx.div_euclid(nb) as i64;
    let fb = sy.div_euclid(nb) as i64;
    let mut best: Option<(u64, RingElement)> = None;
    for db in -1..=2i64 {
        for da in -1..=2i64 {
            let q = disc.element_from_standard(fa + da, fb + db);
            let rem_norm = a.sub(&q.mul(b)).norm();
            match &best {
                Some((n, _)) if *n <= rem_norm => {}
                _ => best = Some((rem_norm, q)),
            }
        }
    }
    best.expect("candidate set nonempty").1
}

/// Extended gcd: `(g, u, v)` with `u a + v b = g`.
pub fn extended_gcd(
    a: &RingElement,
    b: &RingElement,
    disc: &Discriminant,
) -> (RingElement, RingElement, RingElement) {
    let one = disc.element(1, 0);
    let zero = disc.element(0, 0);
    let (mut r0, mut r1) = (*a, *b);
    let (mut s0, mut s1) = (one, zero);
    let (mut t0, mut t1) = (zero, one);
    while !r1.is_zero() {
        let q = div_nearest(&r0, &r1, disc);
        let r2 = r0.sub(&q.mul(&r1));
        debug_assert!(r2.norm() < r1.norm());
        (r0, r1) = (r1, r2);
        let s2 = s0.sub(&q.mul(&s1));
        (s0, s1) = (s1, s2);
        let t2 = t0.sub(&q.mul(&t1));
        (t0, t1) = (t1, t2);
    }
    (r0, s0, t0)
}

/// Completes a coprime row `(c, d)` to a determinant-one matrix
/// `(a, b; c, d)`; `None` when `(c, d)` generates a proper ideal.
fn complete_row(c: &RingElement, d: &RingElement, disc: &Discriminant) -> Option<GroupElement> {
    let (g, u, v) = extended_gcd(d, c, disc);
    if g.norm() != 1 {
        return None;
    }
    let ginv = g.conj(); // inverse of a norm-one unit
    let a = u.mul(&ginv);
    let b = v.mul(&ginv).neg();
    debug_assert_eq!(a.mul(d).sub(&b.mul(c)), disc.element(1, 0));
    Some(GroupElement { a, b, c: *c, d: *d })
}

/// Rows `(c, d)` with `norm(c z + d) + norm(c) r^2 = target`, exactly.
fn rows_with_denominator(
    disc: &Discriminant,
    p: &SpecialPoint,
    target: &BigRational,
) -> Vec<(RingElement, RingElement)> {
    let mut rows = Vec::new();
    let nc_bound = (target / &p.r_squared).floor().to_integer().to_i64().unwrap_or(0);
    let mut cs = vec![disc.element(0, 0)];
    if nc_bound >= 1 {
        cs.extend(ring::elements_by_norm(disc, nc_bound as u64));
    }
    for c in cs {
        let cf = FieldElement::from_ring(&c);
        let cz = cf.mul(&p.z);
        let budget = target - &(&cf.norm() * &p.r_squared);
        if budget.is_negative() {
            continue;
        }
        // d runs over lattice points with norm(cz + d) = budget; enumerate
        // a float box around -cz with margin and keep exact solutions.
        let (ca, cb) = (ratio_to_f64(&cz.a), ratio_to_f64(&cz.b));
        let bud = ratio_to_f64(&budget).max(0.0);
        let span_b = 2.0 * (bud / disc.abs() as f64).sqrt() + 2.0;
        let span_a = bud.sqrt() + disc.abs() as f64 * span_b / 2.0 + 2.0;
        for db in ((-cb - span_b).floor() as i64)..=((-cb + span_b).ceil() as i64) {
            for da in ((-ca - span_a).floor() as i64)..=((-ca + span_a).ceil() as i64) {
                let d = disc.element(da, db);
                if cz.add(&FieldElement::from_ring(&d)).norm() == budget {
                    rows.push((c, d));
                }
            }
        }
    }
    rows
}

/// Stabilizer order of a point, counting determinant-one matrices (both
/// signs); a point with trivial symmetry yields 2.
pub fn stabilizer_order(disc: &Discriminant, p: &SpecialPoint) -> Result<u64> {
    require_euclidean(disc, "stabilizer search")?;
    Ok(connecting_elements(disc, p, p)?.len() as u64)
}

/// All determinant-one matrices with `g P = Q` exactly; empty when the
/// points are inequivalent.
pub fn connecting_elements(
    disc: &Discriminant,
    p: &SpecialPoint,
    q: &SpecialPoint,
) -> Result<Vec<GroupElement>> {
    require_euclidean(disc, "orbit equivalence search")?;
    // r(gP) = r_Q forces den = r_P / r_Q, which must be rational.
    let ratio = &p.r_squared / &q.r_squared;
    let Some(den) = rational_sqrt(&ratio) else {
        return Ok(Vec::new());
    };
    let mut out = Vec::new();
    for (c, d) in rows_with_denominator(disc, p, &den) {
        let Some(base) = complete_row(&c, &d, disc) else { continue };
        let moved = base.apply(p);
        debug_assert_eq!(moved.r_squared, q.r_squared);
        // left translation freedom: T^t shifts z(gP) by t
        let shift = q.z.sub(&moved.z);
        if let Some(t) = shift.to_ring(disc) {
            let gamma = GroupElement::translation(disc, &t).mul(&base);
            debug_assert_eq!(gamma.apply(p), *q);
            out.push(gamma);
        }
    }
    Ok(out)
}

/// `sqrt` of a rational when it is a perfect square.
fn rational_sqrt(r: &BigRational) -> Option<BigRational> {
    if r.is_negative() {
        return None;
    }
    let num = r.numer().sqrt();
    let den = r.denom().sqrt();
    if &(&num * &num) == r.numer() && &(&den * &den) == r.denom() {
        Some(BigRational::new(num, den))
    } else {
        None
    }
}

/// One orbit class: a representative form, its reduced special point, the
/// stabilizer order and the character value.
#[derive(Debug, Clone)]
pub struct OrbitClass {
    pub form: HermitianForm,
    pub point: SpecialPoint,
    pub stabilizer: u64,
    pub chi: i32,
}

/// Enumeration bound on `c` guaranteeing that every orbit appears: a
/// reduced point has `r^2 >= 1 - B_D`, so `c <= sqrt(|D|m/(1 - B_D))`.
/// The uniform bound `sqrt(2|D|m)` is kept as a floor (it is the larger of
/// the two for `D = -3, -4`).
pub fn orbit_enumeration_bound(disc: &Discriminant, m: u64) -> u64 {
    let dm = (disc.abs() * m) as f64;
    let uniform = (2.0 * dm).sqrt() as u64 + 1;
    let b = ratio_to_f64(&covering_radius_squared(disc.value()));
    let sound = (dm / (1.0 - b)).sqrt() as u64 + 1;
    uniform.max(sound)
}

/// Classifies the forms of determinant `|D| m` into orbits.
pub fn orbit_classes(disc: &Discriminant, m: u64) -> Result<Vec<OrbitClass>> {
    require_euclidean(disc, "orbit classification")?;
    orbit_classes_with_bound(disc, m, orbit_enumeration_bound(disc, m))
}

/// As [`orbit_classes`] with an explicit enumeration bound (used by the
/// saturation tests).
pub fn orbit_classes_with_bound(
    disc: &Discriminant,
    m: u64,
    cmax: u64,
) -> Result<Vec<OrbitClass>> {
    require_euclidean(disc, "orbit classification")?;
    let reps = enumerate_infty_reps(disc, m, cmax);
    let mut classes: Vec<(SpecialPoint, HermitianForm)> = Vec::new();
    for form in reps {
        let (reduced, _) = reduce_point(disc, &form.special_point(disc))?;
        if classes.iter().any(|(p, _)| *p == reduced) {
            continue;
        }
        // distinct reduced points on the domain boundary can still be
        // equivalent; a bounded connecting search settles it
        let mut duplicate = false;
        for (p, _) in &classes {
            if !connecting_elements(disc, p, &reduced)?.is_empty() {
                duplicate = true;
                break;
            }
        }
        if !duplicate {
            let rep_form = form_of_point(disc, m, &reduced)?;
            classes.push((reduced, rep_form));
        }
    }
    let mut out = Vec::new();
    for (point, form) in classes {
        let stabilizer = stabilizer_order(disc, &point)?;
        let chi_val = chi(disc, &form);
        out.push(OrbitClass { form, point, stabilizer, chi: chi_val });
    }
    // deterministic presentation: decreasing height, then larger diagonal
    out.sort_by(|x, y| {
        y.point
            .r_squared
            .cmp(&x.point.r_squared)
            .then(y.form.a.cmp(&x.form.a))
            .then((x.form.b_x, x.form.b_y).cmp(&(y.form.b_x, y.form.b_y)))
    });
    Ok(out)
}

/// Recovers the form of a reduced special point: `c = sqrt(|D|m/r^2)`,
/// `b = z c`, `a = (|D|m + norm(b))/c`; all exact.
fn form_of_point(disc: &Discriminant, m: u64, p: &SpecialPoint) -> Result<HermitianForm> {
    let dm = BigRational::from(BigInt::from((disc.abs() * m) as i64));
    let c_sq = &dm / &p.r_squared;
    let c = rational_sqrt(&c_sq)
        .filter(|c| c.is_integer())
        .ok_or_else(|| Error::Validation("reduced point has non-integral level".into()))?;
    let c_int = c.to_integer().to_i64().expect("level fits in i64");
    let b = scale_field(&p.z, &c)
        .to_ring(disc)
        .ok_or_else(|| Error::Validation("reduced point has non-integral off-diagonal".into()))?;
    let a = ((disc.abs() * m) as i128 + b.norm() as i128) / c_int as i128;
    HermitianForm::new(disc, a as i64, b, c_int, m)
}

/// Twisted trace of the constant function 1: the exact rational
/// `sum over classes of chi / stabilizer`.
pub fn trace_one(disc: &Discriminant, m: u64) -> Result<BigRational> {
    let mut acc = BigRational::zero();
    for class in orbit_classes(disc, m)? {
        acc += BigRational::new(BigInt::from(class.chi), BigInt::from(class.stabilizer as i64));
    }
    Ok(acc)
}

/// Evaluates the defining series of `J_nu` at a point by direct coset
/// summation at `s = 1`:
/// `2 pi |nu| sum_{(c,d)} r(gP) I_1(4 pi |nu| r(gP)) e(tr(nu z(gP)))`.
///
/// Cosets of the translation subgroup are parametrized by coprime rows
/// `(c, d)`: `c = 0` contributes one coset per unit, and rows with
/// `c != 0` are completed by the extended Euclidean algorithm. A row
/// enters the truncated sum when `norm(c) <= cmax` and
/// `norm(c z + d) + norm(c) r^2 <= cmax * max(1, r^2)`; terms are added in
/// increasing `(norm(c), c, denominator, d)` order. Convergence at `s = 1`
/// is conditional, so this ordering is part of the contract.
pub fn eval_j_direct(
    disc: &Discriminant,
    nu: &DualLatticeElement,
    p: &Point3,
    cmax: u64,
) -> Result<SeriesEval> {
    require_euclidean(disc, "direct Poincare evaluation")?;
    if cmax < 1 {
        return Err(Error::Validation("eval_j_direct requires cmax >= 1".into()));
    }
    let abs_nu = nu.abs_nu();
    let (nu_re, nu_im) = nu.to_complex();
    let r = p.r;
    let cutoff = cmax as f64 * r.max(1.0).powi(2);

    let mut re = Kahan::default();
    let mut im = Kahan::default();
    let mut last_blocks: Vec<f64> = Vec::new();
    let mut terms = 0u64;

    // c = 0: one coset per unit u = d, acting by z -> conj(u)^2 z + O_D.
    for d in ring::units(disc) {
        let dconj = d.conj();
        let u2 = dconj.mul(&dconj);
        let (ur, ui) = u2.to_complex();
        let (zx, zy) = (ur * p.zx - ui * p.zy, ur * p.zy + ui * p.zx);
        let phase = TAU * 2.0 * (nu_re * zx - nu_im * zy);
        let weight = r * special::bessel_i(1.0, 4.0 * PI * abs_nu * r)?;
        re.add(weight * phase.cos());
        im.add(weight * phase.sin());
        terms += 1;
    }

    // c != 0 cosets in increasing (norm(c), c) order.
    for c in ring::elements_by_norm(disc, cmax) {
        let (c_re, c_im) = c.to_complex();
        let base = c.norm() as f64 * r * r;
        if base > cutoff {
            continue;
        }
        let budget = cutoff - base;
        let czx = c_re * p.zx - c_im * p.zy;
        let czy = c_re * p.zy + c_im * p.zx;
        let (ca, cb) = complex_to_coords(disc, czx, czy);
        let span_b = 2.0 * (budget / disc.abs() as f64).sqrt() + 2.0;
        let span_a = budget.sqrt() + disc.abs() as f64 * span_b / 2.0 + 2.0;
        let mut block: Vec<(u64, i64, i64)> = Vec::new();
        for db in ((-cb - span_b).floor() as i64)..=((-cb + span_b).ceil() as i64) {
            for da in ((-ca - span_a).floor() as i64)..=((-ca + span_a).ceil() as i64) {
                let d = disc.element(da, db);
                let (d_re, d_im) = d.to_complex();
                let nx = czx + d_re;
                let ny = czy + d_im;
                let den = nx * nx + ny * ny + base;
                if den <= cutoff {
                    // fixed-point key keeps the in-block order stable
                    block.push(((den * 4294967296.0) as u64, da, db));
                }
            }
        }
        block.sort_unstable();
        let mut block_max = 0.0f64;
        for (_, da, db) in block {
            let d = disc.element(da, db);
            let Some(gamma) = complete_row(&c, &d, disc) else { continue };
            let (term_re, term_im) = coset_term(&gamma, p, abs_nu, nu_re, nu_im)?;
            re.add(term_re);
            im.add(term_im);
            terms += 1;
            block_max = block_max.max(term_re.hypot(term_im));
        }
        last_blocks.push(block_max);
        if last_blocks.len() > 10 {
            last_blocks.remove(0);
        }
    }
    let value = 2.0 * PI * abs_nu * re.value();
    let tail_estimate = 2.0 * PI * abs_nu * last_blocks.iter().copied().fold(0.0, f64::max);
    Ok(SeriesEval { value, tail_estimate, terms })
}

/// Complex value to fractional coordinates in the `(1, w)` basis.
fn complex_to_coords(disc: &Discriminant, re: f64, im: f64) -> (f64, f64) {
    let d = disc.value() as f64;
    let b = 2.0 * im / (disc.abs() as f64).sqrt();
    let a = re - b * d / 2.0;
    (a, b)
}

fn coset_term(
    gamma: &GroupElement,
    p: &Point3,
    abs_nu: f64,
    nu_re: f64,
    nu_im: f64,
) -> Result<(f64, f64)> {
    let (a_re, a_im) = gamma.a.to_complex();
    let (b_re, b_im) = gamma.b.to_complex();
    let (c_re, c_im) = gamma.c.to_complex();
    let (d_re, d_im) = gamma.d.to_complex();
    // cz + d
    let px = c_re * p.zx - c_im * p.zy + d_re;
    let py = c_re * p.zy + c_im * p.zx + d_im;
    let den = px * px + py * py + (c_re * c_re + c_im * c_im) * p.r * p.r;
    // (az + b) conj(cz + d) + a conj(c) r^2
    let qx = a_re * p.zx - a_im * p.zy + b_re;
    let qy = a_re * p.zy + a_im * p.zx + b_im;
    let mut zx = qx * px + qy * py;
    let mut zy = qy * px - qx * py;
    zx += (a_re * c_re + a_im * c_im) * p.r * p.r;
    zy += (a_im * c_re - a_re * c_im) * p.r * p.r;
    zx /= den;
    zy /= den;
    let r_new = p.r / den;
    let arg = 4.0 * PI * abs_nu * r_new;
    let weight = r_new * special::bessel_i(1.0, arg)?;
    let phase = TAU * 2.0 * (nu_re * zx - nu_im * zy);
    Ok((weight * phase.cos(), weight * phase.sin()))
}

/// The twisted trace evaluated directly:
/// `sum over classes of chi/|Gamma_X| J_nu(P_X)` with the Poincare series
/// truncated at `cmax`. Classes with vanishing character are skipped
/// without evaluating the series.
pub fn trace_niebur_direct(
    disc: &Discriminant,
    nu: &DualLatticeElement,
    m: u64,
    cmax: u64,
) -> Result<SeriesEval> {
    let classes = orbit_classes(disc, m)?;
    let mut acc = 0.0;
    let mut tail = 0.0f64;
    let mut terms = 0;
    for class in classes {
        if class.chi == 0 {
            continue;
        }
        let eval = eval_j_direct(disc, nu, &class.point.to_point3(), cmax)?;
        acc += class.chi as f64 / class.stabilizer as f64 * eval.value;
        tail = tail.max(eval.tail_estimate);
        terms += eval.terms;
    }
    Ok(SeriesEval { value: acc, tail_estimate: tail, terms })
}
