//! Exact arithmetic over a real quadratic field Q(sqrt(d)) and over the
//! plane with coordinates in that field.
//!
//! Every comparison downstream (signs of determinants, lattice bounds,
//! interval membership) reduces to [`QuadElem::qsign`], which is computed by
//! exact case analysis on big rationals, never by floating approximation.
//! Elements carry their own `d`; rationals are stored with `d = 1` so they
//! combine freely with any context, while mixing two genuinely irrational
//! contexts is a programming error and panics.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::str::FromStr;

use thiserror::Error;

/// Largest accepted radicand. Keeps squarefreeness checkable by trial
/// division and intermediate products small.
pub const MAX_D: u64 = 1 << 32;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum FieldError {
    #[error("invalid radicand {0}: must be 1 or a squarefree integer in 2..2^32")]
    InvalidRadicand(u64),
    #[error("cannot parse {0:?} as a field element")]
    BadLiteral(String),
    #[error("cannot parse {0:?} as a plane point")]
    BadPointLiteral(String),
    #[error("matrix determinant must be positive")]
    NonPositiveDet,
}

/// Checks that `d` is 1 or a squarefree non-square in `2..MAX_D`.
pub fn validate_d(d: u64) -> Result<(), FieldError> {
    if d == 1 {
        return Ok(());
    }
    if d < 2 || d >= MAX_D {
        return Err(FieldError::InvalidRadicand(d));
    }
    let mut f = 2u64;
    while f * f <= d {
        if d % (f * f) == 0 {
            return Err(FieldError::InvalidRadicand(d));
        }
        f += 1;
    }
    Ok(())
}

/// A fixed choice of real quadratic field Q(sqrt(d)).
///
/// `d = 1` means the pure rationals. A single context is fixed per
/// computation; elements from different contexts must not be combined.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FieldContext {
    d: u64,
}

impl FieldContext {
    pub fn new(d: u64) -> Result<Self, FieldError> {
        validate_d(d)?;
        Ok(FieldContext { d })
    }

    pub fn rationals() -> Self {
        FieldContext { d: 1 }
    }

    pub fn d(&self) -> u64 {
        self.d
    }

    /// The generator sqrt(d) as an element (1 if d = 1).
    pub fn sqrt_gen(&self) -> QuadElem {
        if self.d == 1 {
            QuadElem::one()
        } else {
            QuadElem::new(BigRational::zero(), BigRational::one(), self.d)
        }
    }

    pub fn elem(&self, p: BigRational, q: BigRational) -> QuadElem {
        QuadElem::new(p, q, self.d)
    }
}

/// An element p + q*sqrt(d) of a real quadratic field, exact.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct QuadElem {
    p: BigRational,
    q: BigRational,
    d: u64,
}

impl QuadElem {
    /// Builds p + q*sqrt(d), normalizing so that rational values carry d = 1.
    ///
    /// Panics if `d` is invalid; parsed input goes through [`validate_d`]
    /// first, so this is a programming-error check only.
    pub fn new(p: BigRational, q: BigRational, d: u64) -> Self {
        assert!(validate_d(d).is_ok(), "invalid radicand {d}");
        if d == 1 {
            // sqrt(1) = 1: fold the coefficient into the rational part.
            return QuadElem { p: p + q, q: BigRational::zero(), d: 1 };
        }
        if q.is_zero() {
            QuadElem { p, q, d: 1 }
        } else {
            QuadElem { p, q, d }
        }
    }

    pub fn from_rational(p: BigRational) -> Self {
        QuadElem { p, q: BigRational::zero(), d: 1 }
    }

    pub fn from_int(n: i64) -> Self {
        Self::from_rational(BigRational::from_integer(BigInt::from(n)))
    }

    /// n/m as an element. Panics if m = 0.
    pub fn ratio(n: i64, m: i64) -> Self {
        Self::from_rational(BigRational::new(BigInt::from(n), BigInt::from(m)))
    }

    /// (p + q*sqrt(d)) from small integers, for terse construction.
    pub fn quad(p: i64, q: i64, d: u64) -> Self {
        Self::new(
            BigRational::from_integer(BigInt::from(p)),
            BigRational::from_integer(BigInt::from(q)),
            d,
        )
    }

    pub fn zero() -> Self {
        Self::from_int(0)
    }

    pub fn one() -> Self {
        Self::from_int(1)
    }

    pub fn is_zero(&self) -> bool {
        self.p.is_zero() && self.q.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.q.is_zero() && self.p.is_one()
    }

    /// True when the value lies in Q (no surd part).
    pub fn is_rational(&self) -> bool {
        self.q.is_zero()
    }

    pub fn rational_part(&self) -> &BigRational {
        &self.p
    }

    pub fn surd_part(&self) -> &BigRational {
        &self.q
    }

    /// The radicand this element is expressed over (1 for rationals).
    pub fn radicand(&self) -> u64 {
        self.d
    }

    /// As a rational, if the value is one.
    pub fn to_rational(&self) -> Option<BigRational> {
        if self.q.is_zero() {
            Some(self.p.clone())
        } else {
            None
        }
    }

    /// Galois conjugate p - q*sqrt(d).
    pub fn conj(&self) -> Self {
        QuadElem { p: self.p.clone(), q: -self.q.clone(), d: self.d }
    }

    fn join_d(&self, other: &Self) -> u64 {
        match (self.q.is_zero(), other.q.is_zero()) {
            (true, true) => 1,
            (true, false) => other.d,
            (false, true) => self.d,
            (false, false) => {
                assert_eq!(
                    self.d, other.d,
                    "mixed quadratic contexts: sqrt({}) vs sqrt({})",
                    self.d, other.d
                );
                self.d
            }
        }
    }

    /// Exact sign of the value: -1, 0 or +1.
    ///
    /// Case analysis: when p and q do not disagree in sign the answer is
    /// immediate; otherwise it reduces to comparing p^2 with q^2 d.
    pub fn qsign(&self) -> i32 {
        let sp = rat_sign(&self.p);
        let sq = rat_sign(&self.q);
        if sq == 0 {
            return sp;
        }
        if sp == 0 || sp == sq {
            return sq;
        }
        // Opposite strict signs: |p| vs |q| sqrt(d).
        let p2 = &self.p * &self.p;
        let q2d = &self.q * &self.q * BigRational::from_integer(BigInt::from(self.d));
        match p2.cmp(&q2d) {
            Ordering::Greater => sp,
            Ordering::Less => sq,
            Ordering::Equal => 0,
        }
    }

    pub fn abs(&self) -> Self {
        if self.qsign() < 0 {
            -self.clone()
        } else {
            self.clone()
        }
    }

    /// Writes the value as (a + b*sqrt(d)) / n with integer a, b and n > 0.
    fn integer_form(&self) -> (BigInt, BigInt, BigInt) {
        let dp = self.p.denom();
        let dq = self.q.denom();
        let n = dp.lcm(dq);
        let a = self.p.numer() * (&n / dp);
        let b = self.q.numer() * (&n / dq);
        (a, b, n)
    }

    /// Exact floor, via integer square roots.
    ///
    /// With x = (a + b sqrt(d)) / n, floor(b sqrt(d)) = isqrt(b^2 d) for
    /// b >= 0 and -isqrt(b^2 d) - 1 for b < 0 (b^2 d is never a perfect
    /// square when b != 0 and d is a non-square), and floor(x / n) =
    /// floor(floor(x) / n) for integer n > 0.
    pub fn floor(&self) -> BigInt {
        let (a, b, n) = self.integer_form();
        let fl_surd = if b.is_zero() {
            BigInt::zero()
        } else {
            let t = (&b * &b) * BigInt::from(self.d);
            let s = t.sqrt();
            if b.is_positive() {
                s
            } else {
                -s - 1
            }
        };
        (a + fl_surd).div_floor(&n)
    }

    /// Nearest integer, halves rounding up: floor(x + 1/2).
    pub fn round_nearest(&self) -> BigInt {
        let half = QuadElem::ratio(1, 2);
        (self + &half).floor()
    }

    /// f64 approximation; for scoring and rendering only, never decisions.
    pub fn approx_f64(&self) -> f64 {
        let p = self.p.to_f64().unwrap_or(f64::NAN);
        let q = self.q.to_f64().unwrap_or(f64::NAN);
        p + q * (self.d as f64).sqrt()
    }

    /// Multiplicative inverse. Panics on zero.
    pub fn inv(&self) -> Self {
        assert!(!self.is_zero(), "division by zero field element");
        // (p + q sqrt(d))^-1 = (p - q sqrt(d)) / (p^2 - q^2 d)
        let norm = &self.p * &self.p
            - &self.q * &self.q * BigRational::from_integer(BigInt::from(self.d));
        debug_assert!(!norm.is_zero(), "nonzero element with zero norm: non-square d violated");
        QuadElem::new(&self.p / &norm, -(&self.q) / &norm, self.d)
    }
}

fn rat_sign(r: &BigRational) -> i32 {
    if r.is_zero() {
        0
    } else if r.is_positive() {
        1
    } else {
        -1
    }
}

fn add_impl(a: &QuadElem, b: &QuadElem) -> QuadElem {
    let d = a.join_d(b);
    QuadElem::new(&a.p + &b.p, &a.q + &b.q, d)
}

fn mul_impl(a: &QuadElem, b: &QuadElem) -> QuadElem {
    let d = a.join_d(b);
    let dd = BigRational::from_integer(BigInt::from(d));
    let p = &a.p * &b.p + (&a.q * &b.q) * dd;
    let q = &a.p * &b.q + &a.q * &b.p;
    QuadElem::new(p, q, d)
}

macro_rules! forward_binop {
    ($trait:ident, $method:ident, $func:ident) => {
        impl $trait for QuadElem {
            type Output = QuadElem;
            fn $method(self, rhs: QuadElem) -> QuadElem {
                $func(&self, &rhs)
            }
        }
        impl<'a> $trait<&'a QuadElem> for QuadElem {
            type Output = QuadElem;
            fn $method(self, rhs: &'a QuadElem) -> QuadElem {
                $func(&self, rhs)
            }
        }
        impl<'a> $trait<QuadElem> for &'a QuadElem {
            type Output = QuadElem;
            fn $method(self, rhs: QuadElem) -> QuadElem {
                $func(self, &rhs)
            }
        }
        impl<'a, 'b> $trait<&'b QuadElem> for &'a QuadElem {
            type Output = QuadElem;
            fn $method(self, rhs: &'b QuadElem) -> QuadElem {
                $func(self, rhs)
            }
        }
    };
}

fn sub_impl(a: &QuadElem, b: &QuadElem) -> QuadElem {
    let d = a.join_d(b);
    QuadElem::new(&a.p - &b.p, &a.q - &b.q, d)
}

fn div_impl(a: &QuadElem, b: &QuadElem) -> QuadElem {
    mul_impl(a, &b.inv())
}

forward_binop!(Add, add, add_impl);
forward_binop!(Sub, sub, sub_impl);
forward_binop!(Mul, mul, mul_impl);
forward_binop!(Div, div, div_impl);

impl Neg for QuadElem {
    type Output = QuadElem;
    fn neg(self) -> QuadElem {
        QuadElem { p: -self.p, q: -self.q, d: self.d }
    }
}

impl<'a> Neg for &'a QuadElem {
    type Output = QuadElem;
    fn neg(self) -> QuadElem {
        QuadElem { p: -&self.p, q: -&self.q, d: self.d }
    }
}

impl PartialOrd for QuadElem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for QuadElem {
    fn cmp(&self, other: &Self) -> Ordering {
        match sub_impl(self, other).qsign() {
            -1 => Ordering::Less,
            0 => Ordering::Equal,
            _ => Ordering::Greater,
        }
    }
}

fn fmt_rational(r: &BigRational, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    if r.denom().is_one() {
        write!(f, "{}", r.numer())
    } else {
        write!(f, "{}/{}", r.numer(), r.denom())
    }
}

impl fmt::Display for QuadElem {
    /// Canonical literal: `p`, or `p+q*sqrt(d)` / `p-q*sqrt(d)`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.q.is_zero() {
            return fmt_rational(&self.p, f);
        }
        fmt_rational(&self.p, f)?;
        if self.q.is_negative() {
            write!(f, "-")?;
            fmt_rational(&-&self.q, f)?;
        } else {
            write!(f, "+")?;
            fmt_rational(&self.q, f)?;
        }
        write!(f, "*sqrt({})", self.d)
    }
}

fn parse_rational(s: &str) -> Result<BigRational, FieldError> {
    let t = s.trim();
    let t = t.strip_prefix('+').unwrap_or(t);
    BigRational::from_str(t).map_err(|_| FieldError::BadLiteral(s.to_string()))
}

impl FromStr for QuadElem {
    type Err = FieldError;

    /// Parses `p/q` or `p/q+r/s*sqrt(d)` (signs and omitted `1*` tolerated).
    fn from_str(s: &str) -> Result<Self, FieldError> {
        let compact: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        let bad = || FieldError::BadLiteral(s.to_string());
        if compact.is_empty() {
            return Err(bad());
        }
        let Some(idx) = compact.find("sqrt(") else {
            return Ok(QuadElem::from_rational(parse_rational(&compact)?));
        };
        if !compact.ends_with(')') {
            return Err(bad());
        }
        let d: u64 = compact[idx + 5..compact.len() - 1].parse().map_err(|_| bad())?;
        validate_d(d).map_err(|_| bad())?;
        let mut prefix = &compact[..idx];
        if let Some(stripped) = prefix.strip_suffix('*') {
            prefix = stripped;
        }
        // Split "p<sign>q" at the last sign that is not a leading sign.
        let split = prefix
            .char_indices()
            .rev()
            .find(|&(i, c)| i > 0 && (c == '+' || c == '-'))
            .map(|(i, _)| i);
        let (p_str, q_str) = match split {
            Some(i) => (&prefix[..i], &prefix[i..]),
            None => ("0", prefix),
        };
        let p = parse_rational(p_str)?;
        let q = match q_str {
            "" | "+" => BigRational::one(),
            "-" => -BigRational::one(),
            other => parse_rational(other)?,
        };
        Ok(QuadElem::new(p, q, d))
    }
}

/// Joint radicand of two elements, or None when they genuinely conflict.
pub fn join_context(a: &QuadElem, b: &QuadElem) -> Option<u64> {
    match (a.is_rational(), b.is_rational()) {
        (true, true) => Some(1),
        (true, false) => Some(b.radicand()),
        (false, true) => Some(a.radicand()),
        (false, false) => (a.radicand() == b.radicand()).then(|| a.radicand()),
    }
}

/// Joint radicand of two context labels, where 1 denotes the rationals.
pub fn join_radicands(a: u64, b: u64) -> Option<u64> {
    if a == 1 {
        Some(b)
    } else if b == 1 || a == b {
        Some(a)
    } else {
        None
    }
}

/// A point of the plane C = R^2 with quadratic-field coordinates.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PlanePoint {
    pub re: QuadElem,
    pub im: QuadElem,
}

impl PlanePoint {
    pub fn new(re: QuadElem, im: QuadElem) -> Self {
        PlanePoint { re, im }
    }

    pub fn zero() -> Self {
        PlanePoint { re: QuadElem::zero(), im: QuadElem::zero() }
    }

    /// (re, im) from small integers.
    pub fn from_ints(re: i64, im: i64) -> Self {
        PlanePoint { re: QuadElem::from_int(re), im: QuadElem::from_int(im) }
    }

    pub fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }

    pub fn scale(&self, c: &QuadElem) -> Self {
        PlanePoint { re: &self.re * c, im: &self.im * c }
    }

    /// Rotation by a quarter turn: multiplication by i.
    pub fn mul_i(&self) -> Self {
        PlanePoint { re: -&self.im, im: self.re.clone() }
    }

    pub fn approx(&self) -> (f64, f64) {
        (self.re.approx_f64(), self.im.approx_f64())
    }
}

impl Add for &PlanePoint {
    type Output = PlanePoint;
    fn add(self, rhs: &PlanePoint) -> PlanePoint {
        PlanePoint { re: &self.re + &rhs.re, im: &self.im + &rhs.im }
    }
}

impl Sub for &PlanePoint {
    type Output = PlanePoint;
    fn sub(self, rhs: &PlanePoint) -> PlanePoint {
        PlanePoint { re: &self.re - &rhs.re, im: &self.im - &rhs.im }
    }
}

impl Neg for &PlanePoint {
    type Output = PlanePoint;
    fn neg(self) -> PlanePoint {
        PlanePoint { re: -&self.re, im: -&self.im }
    }
}

impl Add for PlanePoint {
    type Output = PlanePoint;
    fn add(self, rhs: PlanePoint) -> PlanePoint {
        &self + &rhs
    }
}

impl Sub for PlanePoint {
    type Output = PlanePoint;
    fn sub(self, rhs: PlanePoint) -> PlanePoint {
        &self - &rhs
    }
}

impl Neg for PlanePoint {
    type Output = PlanePoint;
    fn neg(self) -> PlanePoint {
        -&self
    }
}

/// Oriented area of the parallelogram spanned by u and v; equals Im(conj(u) v).
pub fn det2(u: &PlanePoint, v: &PlanePoint) -> QuadElem {
    &u.re * &v.im - &u.im * &v.re
}

/// Squared Euclidean norm, exact in the field.
pub fn norm_sq(u: &PlanePoint) -> QuadElem {
    &u.re * &u.re + &u.im * &u.im
}

/// Euclidean inner product, exact in the field.
pub fn dot(u: &PlanePoint, v: &PlanePoint) -> QuadElem {
    &u.re * &v.re + &u.im * &v.im
}

impl fmt::Display for PlanePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.re, self.im)
    }
}

impl FromStr for PlanePoint {
    type Err = FieldError;

    /// Parses `(re, im)` with quadratic-element literals inside.
    fn from_str(s: &str) -> Result<Self, FieldError> {
        let bad = || FieldError::BadPointLiteral(s.to_string());
        let t = s.trim();
        let inner = t
            .strip_prefix('(')
            .and_then(|u| u.strip_suffix(')'))
            .ok_or_else(bad)?;
        // Split at the single comma at parenthesis depth zero.
        let mut depth = 0usize;
        let mut split = None;
        for (i, c) in inner.char_indices() {
            match c {
                '(' => depth += 1,
                ')' => depth = depth.checked_sub(1).ok_or_else(bad)?,
                ',' if depth == 0 => {
                    if split.is_some() {
                        return Err(bad());
                    }
                    split = Some(i);
                }
                _ => {}
            }
        }
        let i = split.ok_or_else(bad)?;
        let re: QuadElem = inner[..i].parse().map_err(|_| bad())?;
        let im: QuadElem = inner[i + 1..].parse().map_err(|_| bad())?;
        Ok(PlanePoint { re, im })
    }
}

/// An exact 2x2 matrix with positive determinant, acting on plane points.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GlPlus {
    // Row-major: [[a, b], [c, d]].
    m: [QuadElem; 4],
}

impl GlPlus {
    pub fn new(a: QuadElem, b: QuadElem, c: QuadElem, d: QuadElem) -> Result<Self, FieldError> {
        let g = GlPlus { m: [a, b, c, d] };
        if g.det().qsign() != 1 {
            return Err(FieldError::NonPositiveDet);
        }
        Ok(g)
    }

    pub fn identity() -> Self {
        GlPlus {
            m: [QuadElem::one(), QuadElem::zero(), QuadElem::zero(), QuadElem::one()],
        }
    }

    /// The map sending u -> e1 = (1,0) and v -> e2 = (0,1); requires
    /// det2(u, v) > 0.
    pub fn basis_to_standard(u: &PlanePoint, v: &PlanePoint) -> Result<Self, FieldError> {
        // Inverse of the column matrix (u | v).
        let det = det2(u, v);
        if det.qsign() != 1 {
            return Err(FieldError::NonPositiveDet);
        }
        GlPlus::new(
            &v.im / &det,
            -(&v.re) / &det,
            -(&u.im) / &det,
            &u.re / &det,
        )
    }

    pub fn entries(&self) -> &[QuadElem; 4] {
        &self.m
    }

    pub fn det(&self) -> QuadElem {
        &self.m[0] * &self.m[3] - &self.m[1] * &self.m[2]
    }

    pub fn apply(&self, p: &PlanePoint) -> PlanePoint {
        PlanePoint {
            re: &self.m[0] * &p.re + &self.m[1] * &p.im,
            im: &self.m[2] * &p.re + &self.m[3] * &p.im,
        }
    }

    /// Matrix product; (self o other)(p) = self(other(p)).
    pub fn compose(&self, other: &GlPlus) -> GlPlus {
        let a = &other.m;
        let b = &self.m;
        GlPlus {
            m: [
                &b[0] * &a[0] + &b[1] * &a[2],
                &b[0] * &a[1] + &b[1] * &a[3],
                &b[2] * &a[0] + &b[3] * &a[2],
                &b[2] * &a[1] + &b[3] * &a[3],
            ],
        }
    }

    pub fn inverse(&self) -> GlPlus {
        let det = self.det();
        GlPlus {
            m: [
                &self.m[3] / &det,
                -(&self.m[1]) / &det,
                -(&self.m[2]) / &det,
                &self.m[0] / &det,
            ],
        }
    }
}

impl fmt::Display for GlPlus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[[{}, {}], [{}, {}]]", self.m[0], self.m[1], self.m[2], self.m[3])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sqrt2() -> QuadElem {
        QuadElem::quad(0, 1, 2)
    }

    #[test]
    fn qsign_case_table() {
        assert_eq!(QuadElem::zero().qsign(), 0);
        // sqrt(2) > 1
        assert_eq!(QuadElem::quad(-1, 1, 2).qsign(), 1);
        // 3 - 2 sqrt(2): 9 > 8
        assert_eq!(QuadElem::quad(3, -2, 2).qsign(), 1);
        assert_eq!(QuadElem::quad(-3, 2, 2).qsign(), -1);
        // 2 - sqrt(2): 4 > 2
        assert_eq!(QuadElem::quad(2, -1, 2).qsign(), 1);
        // 1 - sqrt(2): 1 < 2
        assert_eq!(QuadElem::quad(1, -1, 2).qsign(), -1);
        assert_eq!(QuadElem::quad(0, 1, 2).qsign(), 1);
        assert_eq!(QuadElem::quad(0, -1, 2).qsign(), -1);
        assert_eq!(QuadElem::from_int(7).qsign(), 1);
        assert_eq!(QuadElem::ratio(-1, 9).qsign(), -1);
    }

    #[test]
    fn norm_and_inverse_identities() {
        let one_plus = QuadElem::quad(1, 1, 2);
        let one_minus = QuadElem::quad(1, -1, 2);
        assert_eq!(&one_plus * &one_minus, QuadElem::from_int(-1));
        assert_eq!(&one_plus / &one_plus, QuadElem::one());
        assert_eq!(&sqrt2() * &sqrt2(), QuadElem::from_int(2));
        // 1/(1+sqrt(2)) = sqrt(2) - 1
        assert_eq!(one_plus.inv(), QuadElem::quad(-1, 1, 2));
        // Golden ratio satisfies x^2 = x + 1.
        let phi = QuadElem::new(
            BigRational::new(BigInt::from(1), BigInt::from(2)),
            BigRational::new(BigInt::from(1), BigInt::from(2)),
            5,
        );
        assert_eq!(&phi * &phi, &phi + &QuadElem::one());
    }

    #[test]
    fn rationals_join_any_context() {
        let x = QuadElem::quad(1, 2, 2);
        let y = QuadElem::quad(0, 1, 3);
        let r = QuadElem::ratio(5, 3);
        assert_eq!((&x + &r) - &r, x);
        assert_eq!((&y * &r) / &r, y);
    }

    #[test]
    #[should_panic(expected = "mixed quadratic contexts")]
    fn mixing_surds_panics() {
        let _ = QuadElem::quad(0, 1, 2) + QuadElem::quad(0, 1, 3);
    }

    #[test]
    fn floor_oracle_cases() {
        // floor(sqrt(2)) = 1, floor(-sqrt(2)) = -2
        assert_eq!(sqrt2().floor(), BigInt::from(1));
        assert_eq!((-sqrt2()).floor(), BigInt::from(-2));
        // Golden ratio = 1.618..., floor 1
        let phi = QuadElem::new(
            BigRational::new(BigInt::from(1), BigInt::from(2)),
            BigRational::new(BigInt::from(1), BigInt::from(2)),
            5,
        );
        assert_eq!(phi.floor(), BigInt::from(1));
        assert_eq!(QuadElem::ratio(3, 2).floor(), BigInt::from(1));
        assert_eq!(QuadElem::ratio(-3, 2).floor(), BigInt::from(-2));
        assert_eq!(QuadElem::from_int(5).floor(), BigInt::from(5));
        // (3 + 2 sqrt(2)) / 7 = 0.832...
        let x = QuadElem::new(
            BigRational::new(BigInt::from(3), BigInt::from(7)),
            BigRational::new(BigInt::from(2), BigInt::from(7)),
            2,
        );
        assert_eq!(x.floor(), BigInt::from(0));
    }

    #[test]
    fn round_nearest_oracle_cases() {
        assert_eq!(sqrt2().round_nearest(), BigInt::from(1));
        assert_eq!((-sqrt2()).round_nearest(), BigInt::from(-1));
        let phi = QuadElem::new(
            BigRational::new(BigInt::from(1), BigInt::from(2)),
            BigRational::new(BigInt::from(1), BigInt::from(2)),
            5,
        );
        assert_eq!(phi.round_nearest(), BigInt::from(2));
        // Halves round up.
        assert_eq!(QuadElem::ratio(1, 2).round_nearest(), BigInt::from(1));
        assert_eq!(QuadElem::ratio(-1, 2).round_nearest(), BigInt::from(0));
    }

    #[test]
    fn literal_round_trips() {
        for s in [
            "0",
            "-1",
            "3/2",
            "3/2+1/2*sqrt(2)",
            "-1/2-3*sqrt(5)",
            "0+1*sqrt(2)",
            "7-2/9*sqrt(10)",
        ] {
            let x: QuadElem = s.parse().unwrap();
            let printed = x.to_string();
            let y: QuadElem = printed.parse().unwrap();
            assert_eq!(x, y, "round trip through {printed}");
        }
        // Tolerated input forms normalize to the canonical print.
        let a: QuadElem = "sqrt(2)".parse().unwrap();
        assert_eq!(a.to_string(), "0+1*sqrt(2)");
        let b: QuadElem = "-sqrt(2)".parse().unwrap();
        assert_eq!(b, -sqrt2());
        let c: QuadElem = "1 + 1/2 * sqrt(3)".parse().unwrap();
        assert_eq!(c.to_string(), "1+1/2*sqrt(3)");
        // 0*sqrt(2) collapses to a rational.
        let e: QuadElem = "3+0*sqrt(2)".parse().unwrap();
        assert!(e.is_rational());
        assert_eq!(e.to_string(), "3");
    }

    #[test]
    fn literal_rejects_garbage() {
        assert!("".parse::<QuadElem>().is_err());
        assert!("xyz".parse::<QuadElem>().is_err());
        assert!("1+1*sqrt(4)".parse::<QuadElem>().is_err());
        assert!("1+1*sqrt(0)".parse::<QuadElem>().is_err());
        assert!("1+1*sqrt(12)".parse::<QuadElem>().is_err());
        assert!("1/0".parse::<QuadElem>().is_err());
        assert!("1+2*sqrt(2".parse::<QuadElem>().is_err());
    }

    #[test]
    fn plane_point_basics() {
        let one = PlanePoint::from_ints(1, 0);
        let i = PlanePoint::from_ints(0, 1);
        assert_eq!(det2(&one, &i), QuadElem::one());
        assert_eq!(det2(&i, &one), QuadElem::from_int(-1));
        let u = PlanePoint::from_ints(1, 1);
        let v = PlanePoint::from_ints(2, 2);
        assert_eq!(det2(&u, &v), QuadElem::zero());
        assert_eq!(norm_sq(&PlanePoint::zero()), QuadElem::zero());
        assert_eq!(norm_sq(&u), QuadElem::from_int(2));
        let s = PlanePoint::new(sqrt2(), QuadElem::zero());
        assert_eq!(norm_sq(&s), QuadElem::from_int(2));
        assert_eq!(one.mul_i(), i);
        assert_eq!(i.mul_i(), -&one);
    }

    #[test]
    fn plane_point_round_trip() {
        for s in ["(1, 0)", "(3/2+1/2*sqrt(2), -1)", "(0, -2/7*sqrt(5))"] {
            let p: PlanePoint = s.parse().unwrap();
            let q: PlanePoint = p.to_string().parse().unwrap();
            assert_eq!(p, q);
        }
        assert!("(1, 2, 3)".parse::<PlanePoint>().is_err());
        assert!("1, 2".parse::<PlanePoint>().is_err());
    }

    #[test]
    fn gl_plus_contract() {
        assert!(GlPlus::new(
            QuadElem::one(),
            QuadElem::zero(),
            QuadElem::zero(),
            QuadElem::from_int(-1),
        )
        .is_err());
        let a = GlPlus::new(
            QuadElem::from_int(2),
            QuadElem::zero(),
            QuadElem::zero(),
            QuadElem::one(),
        )
        .unwrap();
        let p = PlanePoint::new(QuadElem::ratio(1, 2), QuadElem::one());
        assert_eq!(a.apply(&p), PlanePoint::from_ints(1, 1));
        let id = a.compose(&a.inverse());
        assert_eq!(id, GlPlus::identity());
    }

    #[test]
    fn basis_to_standard_maps_lattice_basis() {
        let u = PlanePoint::new(QuadElem::ratio(1, 2), QuadElem::zero());
        let v = PlanePoint::from_ints(0, 1);
        let a = GlPlus::basis_to_standard(&u, &v).unwrap();
        assert_eq!(a.apply(&u), PlanePoint::from_ints(1, 0));
        assert_eq!(a.apply(&v), PlanePoint::from_ints(0, 1));
        // Degenerate and negatively oriented bases are refused.
        assert!(GlPlus::basis_to_standard(&v, &u).is_err());
        assert!(GlPlus::basis_to_standard(&u, &u).is_err());
    }

    /// Sign oracle by high-precision interval evaluation: brackets
    /// sqrt(d) * 2^bits between consecutive integers and checks whether both
    /// interval ends of the scaled value agree in sign.
    fn interval_sign(x: &QuadElem, bits: usize) -> Option<i32> {
        let (a, b, _n) = x.integer_form();
        let s = (BigInt::from(x.radicand()) << (2 * bits)).sqrt();
        let lo_s = s.clone();
        let hi_s = s + 1;
        let scaled_a = a << bits;
        let (lo, hi) = if b.is_negative() {
            (&scaled_a + &b * &hi_s, &scaled_a + &b * &lo_s)
        } else {
            (&scaled_a + &b * &lo_s, &scaled_a + &b * &hi_s)
        };
        let sgn = |v: &BigInt| -> i32 {
            if v.is_zero() {
                0
            } else if v.is_positive() {
                1
            } else {
                -1
            }
        };
        let (sl, sh) = (sgn(&lo), sgn(&hi));
        if sl == sh {
            Some(sl)
        } else if sl <= 0 && sh >= 0 && b.is_zero() {
            Some(0)
        } else {
            None
        }
    }

    fn small_rational() -> impl Strategy<Value = BigRational> {
        (-50i64..=50, 1i64..=20).prop_map(|(n, m)| BigRational::new(BigInt::from(n), BigInt::from(m)))
    }

    fn quad_elem(d: u64) -> impl Strategy<Value = QuadElem> {
        (small_rational(), small_rational()).prop_map(move |(p, q)| QuadElem::new(p, q, d))
    }

    fn any_d() -> impl Strategy<Value = u64> {
        prop::sample::select(vec![1u64, 2, 3, 5, 7, 10])
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(2000))]

        #[test]
        fn field_axioms((d, xs) in any_d().prop_flat_map(|d| (Just(d), (quad_elem(d), quad_elem(d), quad_elem(d))))) {
            let _ = d;
            let (x, y, z) = xs;
            prop_assert_eq!((&x + &y) + &z, &x + &(&y + &z));
            prop_assert_eq!((&x * &y) * &z, &x * &(&y * &z));
            prop_assert_eq!(&x * &(&y + &z), &x * &y + &x * &z);
            prop_assert_eq!(&x + &y, &y + &x);
            prop_assert_eq!(&x * &y, &y * &x);
            if !x.is_zero() {
                prop_assert_eq!(&x * &x.inv(), QuadElem::one());
            }
        }

        #[test]
        fn qsign_symmetry((d, x) in any_d().prop_flat_map(|d| (Just(d), quad_elem(d)))) {
            let _ = d;
            let s = x.qsign() * (-x.clone()).qsign();
            prop_assert!(s == 0 || s == -1);
            let sq = (&x * &x).qsign();
            prop_assert!(sq == 0 || sq == 1);
        }

        #[test]
        fn floor_brackets_value((d, x) in any_d().prop_flat_map(|d| (Just(d), quad_elem(d)))) {
            let _ = d;
            let fl = QuadElem::from_rational(BigRational::from_integer(x.floor()));
            prop_assert!((&x - &fl).qsign() >= 0);
            let next = &fl + &QuadElem::one();
            prop_assert!((&next - &x).qsign() > 0);
        }

        #[test]
        fn print_parse_lossless((d, x) in any_d().prop_flat_map(|d| (Just(d), quad_elem(d)))) {
            let _ = d;
            let s = x.to_string();
            let y: QuadElem = s.parse().unwrap();
            prop_assert_eq!(x, y);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(10000))]

        #[test]
        fn qsign_matches_interval_evaluation((d, x) in any_d().prop_flat_map(|d| (Just(d), quad_elem(d)))) {
            let _ = d;
            // 192 fractional bits is far beyond what bounded-height inputs need.
            match interval_sign(&x, 192) {
                Some(s) => prop_assert_eq!(x.qsign(), s),
                None => prop_assert_eq!(x.qsign(), 0),
            }
        }
    }
}
