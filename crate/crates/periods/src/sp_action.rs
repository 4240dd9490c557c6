//! Constructive machinery for the integer symplectic group Sp(2g, Z) acting
//! on period characters: elementary moves, primitive-vector transitivity,
//! two-dimensional lattice reduction, exact normal forms.
//!
//! Throughout, characters are column vectors indexed (a1, b1, ..., ag, bg)
//! and matrices act on the left; "symplectic" always means m^T J m = J for
//! the standard form J with blocks [[0, 1], [-1, 0]] per handle.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::chi::{apply_gl, apply_sp, image_group, volume, ImageClass, PeriodVector};
use crate::field::{det2, dot, norm_sq, GlPlus, PlanePoint, QuadElem};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SpError {
    #[error("matrix is not symplectic")]
    NotSymplectic,
    #[error("dimension mismatch")]
    Dimension,
    #[error("vector must be nonzero")]
    ZeroVector,
    #[error("vector is not primitive (entry gcd is not 1)")]
    NotPrimitive,
    #[error("plane vectors are collinear")]
    CollinearInput,
    #[error("euclidean reduction did not terminate: values do not generate a discrete group")]
    EuclidStalled,
    #[error("empty target interval (lo >= hi)")]
    IntervalEmpty,
    #[error("values generate a discrete group, dense stepping impossible")]
    NotDense,
    #[error("cannot parse symplectic matrix")]
    BadLiteral,
    #[error("precondition violated: {0}")]
    Precondition(&'static str),
}

/// An element of Sp(2g, Z), stored row-major in dimension 2g.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpMatrix {
    g: usize,
    m: Vec<BigInt>,
}

impl SpMatrix {
    pub fn new(g: usize, entries: Vec<BigInt>) -> Result<Self, SpError> {
        let n = 2 * g;
        if g == 0 || entries.len() != n * n {
            return Err(SpError::Dimension);
        }
        let m = SpMatrix { g, m: entries };
        if !m.is_symplectic() {
            return Err(SpError::NotSymplectic);
        }
        Ok(m)
    }

    pub fn identity(g: usize) -> Self {
        let n = 2 * g;
        let mut m = vec![BigInt::zero(); n * n];
        for i in 0..n {
            m[i * n + i] = BigInt::one();
        }
        SpMatrix { g, m }
    }

    pub fn genus(&self) -> usize {
        self.g
    }

    pub fn dim(&self) -> usize {
        2 * self.g
    }

    pub fn entry(&self, r: usize, c: usize) -> &BigInt {
        &self.m[r * self.dim() + c]
    }

    fn entry_mut(&mut self, r: usize, c: usize) -> &mut BigInt {
        let n = self.dim();
        &mut self.m[r * n + c]
    }

    /// Checks m^T J m = J exactly.
    pub fn is_symplectic(&self) -> bool {
        let n = self.dim();
        // (m^T J m)[r][c] = sum_k m[k][r] * (J m)[k][c]
        // (J m)[2t][c] = m[2t+1][c], (J m)[2t+1][c] = -m[2t][c].
        for r in 0..n {
            for c in 0..n {
                let mut s = BigInt::zero();
                for t in 0..self.g {
                    s += self.entry(2 * t, r) * self.entry(2 * t + 1, c);
                    s -= self.entry(2 * t + 1, r) * self.entry(2 * t, c);
                }
                let expect = if r / 2 == c / 2 {
                    if r % 2 == 0 && c % 2 == 1 {
                        BigInt::one()
                    } else if r % 2 == 1 && c % 2 == 0 {
                        -BigInt::one()
                    } else {
                        BigInt::zero()
                    }
                } else {
                    BigInt::zero()
                };
                if s != expect {
                    return false;
                }
            }
        }
        true
    }

    /// Matrix product self * rhs (apply rhs first, then self).
    pub fn mul(&self, rhs: &SpMatrix) -> SpMatrix {
        assert_eq!(self.g, rhs.g, "genus mismatch in matrix product");
        let n = self.dim();
        let mut out = vec![BigInt::zero(); n * n];
        for r in 0..n {
            for k in 0..n {
                let a = self.entry(r, k);
                if a.is_zero() {
                    continue;
                }
                for c in 0..n {
                    let b = rhs.entry(k, c);
                    if !b.is_zero() {
                        out[r * n + c] += a * b;
                    }
                }
            }
        }
        SpMatrix { g: self.g, m: out }
    }

    /// Inverse via the symplectic identity: m^-1 = -J m^T J.
    pub fn inverse(&self) -> SpMatrix {
        let n = self.dim();
        let mut out = vec![BigInt::zero(); n * n];
        // (-J m^T J)[r][c]: J flips (a,b) within a handle with signs.
        // (m^T J)[r][c] = sum_k m[k][r] J[k][c]; J[2t][2t+1]=1, J[2t+1][2t]=-1.
        // column c = 2u -> -m[2u+1][r]; c = 2u+1 -> m[2u][r].
        // then -J on the left: row r = 2t -> -(row 2t+1 of m^T J); r = 2t+1 -> row 2t.
        for t in 0..self.g {
            for c in 0..n {
                let (u, odd) = (c / 2, c % 2 == 1);
                let val = |row: usize| -> BigInt {
                    if odd {
                        self.entry(2 * u, row).clone()
                    } else {
                        -self.entry(2 * u + 1, row)
                    }
                };
                out[(2 * t) * n + c] = -val(2 * t + 1);
                out[(2 * t + 1) * n + c] = val(2 * t);
            }
        }
        let inv = SpMatrix { g: self.g, m: out };
        debug_assert!(inv.is_symplectic());
        inv
    }

    /// Applies the matrix to an integer column vector.
    pub fn apply_int(&self, v: &[BigInt]) -> Result<Vec<BigInt>, SpError> {
        let n = self.dim();
        if v.len() != n {
            return Err(SpError::Dimension);
        }
        let mut out = vec![BigInt::zero(); n];
        for r in 0..n {
            for c in 0..n {
                let a = self.entry(r, c);
                if !a.is_zero() {
                    out[r] += a * &v[c];
                }
            }
        }
        Ok(out)
    }

    /// A reproducible pseudo-random symplectic matrix: `steps` random
    /// elementary moves composed together. Intended for tests and fixtures.
    pub fn random(g: usize, steps: usize, seed: u64) -> SpMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut m = SpMatrix::identity(g);
        for _ in 0..steps {
            let coin = rng.gen_range(0..5);
            let i = rng.gen_range(1..=g);
            let mv = match coin {
                0 => {
                    let k = BigInt::from(if rng.gen::<bool>() { 1 } else { -1 });
                    sl2_block(g, i, [[BigInt::one(), BigInt::zero()], [k, BigInt::one()]])
                }
                1 => {
                    let k = BigInt::from(if rng.gen::<bool>() { 1 } else { -1 });
                    sl2_block(g, i, [[BigInt::one(), k], [BigInt::zero(), BigInt::one()]])
                }
                2 => sl2_block(
                    g,
                    i,
                    [
                        [BigInt::zero(), -BigInt::one()],
                        [BigInt::one(), BigInt::zero()],
                    ],
                ),
                3 => {
                    if g < 2 {
                        continue;
                    }
                    let mut j = rng.gen_range(1..=g);
                    if j == i {
                        j = if i == g { 1 } else { i + 1 };
                    }
                    swap_handles(g, i, j)
                }
                _ => {
                    if g < 2 {
                        continue;
                    }
                    let mut j = rng.gen_range(1..=g);
                    if j == i {
                        j = if i == g { 1 } else { i + 1 };
                    }
                    let k = BigInt::from(if rng.gen::<bool>() { 1 } else { -1 });
                    if rng.gen::<bool>() {
                        mix_b(g, i, j, &k)
                    } else {
                        mix_a(g, i, j, &k)
                    }
                }
            };
            m = mv.mul(&m);
        }
        m
    }
}

impl fmt::Display for SpMatrix {
    /// Text format: genus on the first line, then 2g rows of 2g integers.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{}", self.g)?;
        let n = self.dim();
        for r in 0..n {
            for c in 0..n {
                if c > 0 {
                    write!(f, " ")?;
                }
                write!(f, "{}", self.entry(r, c))?;
            }
            if r + 1 < n {
                writeln!(f)?;
            }
        }
        Ok(())
    }
}

impl FromStr for SpMatrix {
    type Err = SpError;

    fn from_str(s: &str) -> Result<Self, SpError> {
        let mut tok = s.split_whitespace();
        let g: usize = tok
            .next()
            .ok_or(SpError::BadLiteral)?
            .parse()
            .map_err(|_| SpError::BadLiteral)?;
        let n = 2 * g;
        let mut entries = Vec::with_capacity(n * n);
        for _ in 0..n * n {
            let t = tok.next().ok_or(SpError::BadLiteral)?;
            entries.push(BigInt::from_str(t).map_err(|_| SpError::BadLiteral)?);
        }
        if tok.next().is_some() {
            return Err(SpError::BadLiteral);
        }
        SpMatrix::new(g, entries)
    }
}

fn slot_a(i: usize) -> usize {
    2 * (i - 1)
}

fn slot_b(i: usize) -> usize {
    2 * (i - 1) + 1
}

/// The block matrix acting on handle i (1-indexed) as the given SL2 matrix:
/// a_i -> t[0][0] a_i + t[0][1] b_i, b_i -> t[1][0] a_i + t[1][1] b_i.
pub fn sl2_block(g: usize, i: usize, t: [[BigInt; 2]; 2]) -> SpMatrix {
    assert!(1 <= i && i <= g, "handle index out of range");
    assert!(
        (&t[0][0] * &t[1][1] - &t[0][1] * &t[1][0]).is_one(),
        "block must have determinant 1"
    );
    let mut m = SpMatrix::identity(g);
    let (a, b) = (slot_a(i), slot_b(i));
    *m.entry_mut(a, a) = t[0][0].clone();
    *m.entry_mut(a, b) = t[0][1].clone();
    *m.entry_mut(b, a) = t[1][0].clone();
    *m.entry_mut(b, b) = t[1][1].clone();
    debug_assert!(m.is_symplectic());
    m
}

/// Exchanges handles i and j (both a and b slots).
pub fn swap_handles(g: usize, i: usize, j: usize) -> SpMatrix {
    assert!(1 <= i && i <= g && 1 <= j && j <= g && i != j);
    let mut m = SpMatrix::identity(g);
    for (x, y) in [(slot_a(i), slot_a(j)), (slot_b(i), slot_b(j))] {
        *m.entry_mut(x, x) = BigInt::zero();
        *m.entry_mut(y, y) = BigInt::zero();
        *m.entry_mut(x, y) = BigInt::one();
        *m.entry_mut(y, x) = BigInt::one();
    }
    debug_assert!(m.is_symplectic());
    m
}

/// The cross-handle move b_i += mu * b_j, a_j -= mu * a_i (i != j).
pub fn mix_b(g: usize, i: usize, j: usize, mu: &BigInt) -> SpMatrix {
    assert!(1 <= i && i <= g && 1 <= j && j <= g && i != j);
    let mut m = SpMatrix::identity(g);
    *m.entry_mut(slot_b(i), slot_b(j)) = mu.clone();
    *m.entry_mut(slot_a(j), slot_a(i)) = -mu;
    debug_assert!(m.is_symplectic());
    m
}

/// The cross-handle move a_i += k * a_j, b_j -= k * b_i (i != j).
pub fn mix_a(g: usize, i: usize, j: usize, k: &BigInt) -> SpMatrix {
    assert!(1 <= i && i <= g && 1 <= j && j <= g && i != j);
    let mut m = SpMatrix::identity(g);
    *m.entry_mut(slot_a(i), slot_a(j)) = k.clone();
    *m.entry_mut(slot_b(j), slot_b(i)) = -k;
    debug_assert!(m.is_symplectic());
    m
}

/// Extended gcd as a determinant-1 matrix: t * (a, b)^T = (gcd, 0)^T.
fn ext_gcd_matrix(a: &BigInt, b: &BigInt) -> ([[BigInt; 2]; 2], BigInt) {
    if a.is_zero() && b.is_zero() {
        return (
            [
                [BigInt::one(), BigInt::zero()],
                [BigInt::zero(), BigInt::one()],
            ],
            BigInt::zero(),
        );
    }
    let e = a.extended_gcd(b);
    let g = e.gcd;
    let row2 = [-(b / &g), a / &g];
    let t = [[e.x, e.y], row2];
    debug_assert!((&t[0][0] * &t[1][1] - &t[0][1] * &t[1][0]).is_one());
    debug_assert_eq!(&t[0][0] * a + &t[0][1] * b, g);
    debug_assert!((&t[1][0] * a + &t[1][1] * b).is_zero());
    (t, g)
}

/// Reduces an integer vector in handle coordinates to (gcd, 0, ..., 0) by
/// symplectic moves, returning the accumulated matrix and the gcd (>= 0).
///
/// Only a-slots ever hold nonzero values in the output, and the moves used
/// never disturb b-slots that are zero, which phase 1 arranges.
fn concentrate_gcd(g: usize, u: &[BigInt]) -> (SpMatrix, BigInt) {
    assert_eq!(u.len(), 2 * g);
    fn push(m: SpMatrix, mv: SpMatrix, v: &mut Vec<BigInt>) -> SpMatrix {
        *v = mv.apply_int(v).unwrap();
        mv.mul(&m)
    }
    let mut m = SpMatrix::identity(g);
    let mut v = u.to_vec();
    // Phase 1: within each handle, (a_i, b_i) -> (gcd_i, 0).
    for i in 1..=g {
        let (t, _) = ext_gcd_matrix(&v[slot_a(i)], &v[slot_b(i)]);
        m = push(m, sl2_block(g, i, t), &mut v);
        debug_assert!(v[slot_b(i)].is_zero());
    }
    // Phase 2: euclid across a-slots into a_1; b-slots stay zero throughout.
    for i in 2..=g {
        loop {
            if v[slot_a(i)].is_zero() {
                break;
            }
            // a_1 -= q * a_i
            let q = v[slot_a(1)].div_floor(&v[slot_a(i)]);
            if !q.is_zero() {
                m = push(m, mix_b(g, i, 1, &q), &mut v);
            }
            if v[slot_a(1)].is_zero() {
                // Move the pending value into a_1: a_1 += a_i.
                m = push(m, mix_b(g, i, 1, &-BigInt::one()), &mut v);
            }
            // a_i -= q * a_1
            let q = v[slot_a(i)].div_floor(&v[slot_a(1)]);
            if !q.is_zero() {
                m = push(m, mix_b(g, 1, i, &q), &mut v);
            }
        }
    }
    // Sign fix so the concentrated value is nonnegative.
    if v[slot_a(1)].is_negative() {
        let neg = sl2_block(
            g,
            1,
            [
                [-BigInt::one(), BigInt::zero()],
                [BigInt::zero(), -BigInt::one()],
            ],
        );
        m = push(m, neg, &mut v);
    }
    for (idx, x) in v.iter().enumerate() {
        debug_assert!(idx == 0 || x.is_zero(), "concentration left residue");
    }
    (m, v[0].clone())
}

/// Symplectic matrix sending a primitive integer vector to e1.
pub fn primitive_to_basis(u: &[BigInt]) -> Result<SpMatrix, SpError> {
    if u.len() % 2 != 0 || u.is_empty() {
        return Err(SpError::Dimension);
    }
    let g = u.len() / 2;
    if u.iter().all(|x| x.is_zero()) {
        return Err(SpError::ZeroVector);
    }
    let (m, gcd) = concentrate_gcd(g, u);
    if !gcd.is_one() {
        return Err(SpError::NotPrimitive);
    }
    debug_assert!({
        let image = m.apply_int(u).unwrap();
        image[0].is_one() && image[1..].iter().all(|x| x.is_zero())
    });
    Ok(m)
}

/// Symplectic matrix with M u = v, existing exactly when gcd(u) = gcd(v).
pub fn orbit_map(u: &[BigInt], v: &[BigInt]) -> Result<Option<SpMatrix>, SpError> {
    if u.len() != v.len() {
        return Err(SpError::Dimension);
    }
    let gcd_of = |w: &[BigInt]| -> BigInt {
        w.iter().fold(BigInt::zero(), |acc, x| acc.gcd(x))
    };
    let gu = gcd_of(u);
    let gv = gcd_of(v);
    if gu.is_zero() || gv.is_zero() {
        return Err(SpError::ZeroVector);
    }
    if gu != gv {
        return Ok(None);
    }
    let scale_down = |w: &[BigInt], g: &BigInt| -> Vec<BigInt> {
        w.iter().map(|x| x / g).collect()
    };
    let mu = primitive_to_basis(&scale_down(u, &gu))?;
    let mv = primitive_to_basis(&scale_down(v, &gv))?;
    let m = mv.inverse().mul(&mu);
    debug_assert_eq!(m.apply_int(u).unwrap(), v);
    Ok(Some(m))
}

/// Lagrange-Gauss lattice reduction of a plane basis, with determinant-1
/// integer bookkeeping: returns (t, v1', v2') with (v1', v2') = t (v1, v2),
/// norm(v1') <= norm(v2'), and 3 * norm_sq(v1')^2 <= 4 * det2(v1', v2')^2.
pub fn gauss_reduce(
    v1: &PlanePoint,
    v2: &PlanePoint,
) -> Result<([[BigInt; 2]; 2], PlanePoint, PlanePoint), SpError> {
    if det2(v1, v2).qsign() == 0 {
        return Err(SpError::CollinearInput);
    }
    let mut a = v1.clone();
    let mut b = v2.clone();
    let mut t = [
        [BigInt::one(), BigInt::zero()],
        [BigInt::zero(), BigInt::one()],
    ];
    let swap_rot = |t: &mut [[BigInt; 2]; 2], a: &mut PlanePoint, b: &mut PlanePoint| {
        // (v1, v2) -> (v2, -v1), determinant +1.
        std::mem::swap(a, b);
        *b = -&*b;
        t.swap(0, 1);
        t[1][0] = -t[1][0].clone();
        t[1][1] = -t[1][1].clone();
    };
    if (norm_sq(&a) - norm_sq(&b)).qsign() > 0 {
        swap_rot(&mut t, &mut a, &mut b);
    }
    for _ in 0..10_000 {
        let mu = (dot(&a, &b) / norm_sq(&a)).round_nearest();
        if !mu.is_zero() {
            let muq = QuadElem::from_rational(num_rational::BigRational::from(mu.clone()));
            b = &b - &a.scale(&muq);
            t[1][0] = &t[1][0] - &mu * &t[0][0];
            t[1][1] = &t[1][1] - &mu * &t[0][1];
        }
        if (norm_sq(&b) - norm_sq(&a)).qsign() >= 0 {
            let n1 = norm_sq(&a);
            let d = det2(&a, &b);
            assert!(
                (&n1 * &n1 * &QuadElem::from_int(3) - &d * &d * &QuadElem::from_int(4)).qsign()
                    <= 0,
                "reduction bound violated"
            );
            return Ok((t, a, b));
        }
        swap_rot(&mut t, &mut a, &mut b);
    }
    Err(SpError::EuclidStalled)
}

/// Which coordinate a euclidean handle reduction drives to zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EuclidCoord {
    Re,
    Im,
    Plane,
}

/// Runs a euclidean reduction inside handle i until the designated coordinate
/// of chi(a_i) or chi(b_i) is zero, always reducing the larger value by an
/// integer multiple of the smaller. Terminates exactly when the two values
/// generate a discrete subgroup; otherwise reports EuclidStalled.
pub fn handle_euclid(
    chi: &PeriodVector,
    i: usize,
    coord: EuclidCoord,
) -> Result<(SpMatrix, PeriodVector), SpError> {
    let g = chi.genus();
    if i < 1 || i > g {
        return Err(SpError::Precondition("handle index out of range"));
    }
    let mut cur = chi.clone();
    let mut m = SpMatrix::identity(g);
    for _ in 0..1_000 {
        let (va, vb) = (cur.a(i), cur.b(i));
        let (za, zb) = match coord {
            EuclidCoord::Re => (va.re.is_zero(), vb.re.is_zero()),
            EuclidCoord::Im => (va.im.is_zero(), vb.im.is_zero()),
            EuclidCoord::Plane => (va.is_zero(), vb.is_zero()),
        };
        if za || zb {
            return Ok((m, cur));
        }
        // Reduce the larger of the pair by a rounded multiple of the smaller.
        let (reduce_a, q) = match coord {
            EuclidCoord::Re | EuclidCoord::Im => {
                let pick = |p: &PlanePoint| match coord {
                    EuclidCoord::Re => p.re.clone(),
                    _ => p.im.clone(),
                };
                let (xa, xb) = (pick(va), pick(vb));
                if (xa.abs() - xb.abs()).qsign() >= 0 {
                    (true, (&xa / &xb).round_nearest())
                } else {
                    (false, (&xb / &xa).round_nearest())
                }
            }
            EuclidCoord::Plane => {
                if (norm_sq(va) - norm_sq(vb)).qsign() >= 0 {
                    (true, (dot(va, vb) / norm_sq(vb)).round_nearest())
                } else {
                    (false, (dot(vb, va) / norm_sq(va)).round_nearest())
                }
            }
        };
        if q.is_zero() {
            // No integer multiple reduces the pair: not a discrete situation.
            return Err(SpError::EuclidStalled);
        }
        let mv = if reduce_a {
            sl2_block(
                g,
                i,
                [
                    [BigInt::one(), -&q],
                    [BigInt::zero(), BigInt::one()],
                ],
            )
        } else {
            sl2_block(
                g,
                i,
                [
                    [BigInt::one(), BigInt::zero()],
                    [-&q, BigInt::one()],
                ],
            )
        };
        cur = crate::chi::apply_sp(&mv, &cur).expect("dimensions agree");
        m = mv.mul(&m);
    }
    Err(SpError::EuclidStalled)
}

/// True when x and y are linearly independent over the rationals.
fn q_rank_two(x: &QuadElem, y: &QuadElem) -> bool {
    let lhs = x.rational_part() * y.surd_part();
    let rhs = y.rational_part() * x.surd_part();
    lhs != rhs
}

/// Finds integers (n, m) with n x0 + m x1 strictly inside (lo, hi), assuming
/// the group Z x0 + Z x1 is dense in the reals (x0, x1 rationally
/// independent). Exact in every comparison.
pub fn dense_interval_hit(
    x0: &QuadElem,
    x1: &QuadElem,
    lo: &QuadElem,
    hi: &QuadElem,
) -> Result<(BigInt, BigInt), SpError> {
    if (hi - lo).qsign() <= 0 {
        return Err(SpError::IntervalEmpty);
    }
    if !q_rank_two(x0, x1) {
        return Err(SpError::NotDense);
    }
    if hi.qsign() <= 0 {
        // Mirror: solve in (-hi, -lo) and negate the coefficients.
        let (n, m) = dense_interval_hit(x0, x1, &-hi, &-lo)?;
        return Ok((-n, -m));
    }
    // Positive combinations below this width admit a multiple inside (lo, hi).
    let width = if lo.qsign() >= 0 { hi - lo } else { hi.clone() };
    let finish = |gap: QuadElem, n: BigInt, m: BigInt| -> Result<(BigInt, BigInt), SpError> {
        let mut k = (lo / &gap).floor() + 1;
        if k < BigInt::one() {
            k = BigInt::one();
        }
        let kq = QuadElem::from_rational(num_rational::BigRational::from(k.clone()));
        let val = &kq * &gap;
        assert!(
            (&val - lo).qsign() > 0 && (hi - &val).qsign() > 0,
            "dense step missed the target interval"
        );
        Ok((&k * n, &k * m))
    };
    let try_value = |v: &QuadElem, n: &BigInt, m: &BigInt| -> Option<(QuadElem, BigInt, BigInt)> {
        if v.qsign() > 0 && (&width - v).qsign() > 0 {
            Some((v.clone(), n.clone(), m.clone()))
        } else if v.qsign() < 0 && (&width + v).qsign() > 0 {
            Some((-v, -n, -m))
        } else {
            None
        }
    };
    let mut prev = (x0.clone(), BigInt::one(), BigInt::zero());
    let mut cur = (x1.clone(), BigInt::zero(), BigInt::one());
    if let Some((gap, n, m)) = try_value(&prev.0, &prev.1, &prev.2) {
        return finish(gap, n, m);
    }
    if let Some((gap, n, m)) = try_value(&cur.0, &cur.1, &cur.2) {
        return finish(gap, n, m);
    }
    for _ in 0..1_000 {
        let q = (&prev.0 / &cur.0).round_nearest();
        let qq = QuadElem::from_rational(num_rational::BigRational::from(q.clone()));
        let next = (
            &prev.0 - &(&qq * &cur.0),
            &prev.1 - &(&q * &cur.1),
            &prev.2 - &(&q * &cur.2),
        );
        prev = cur;
        cur = next;
        assert!(
            !cur.0.is_zero(),
            "rationally independent values cannot reach zero"
        );
        if let Some((gap, n, m)) = try_value(&cur.0, &cur.1, &cur.2) {
            return finish(gap, n, m);
        }
    }
    Err(SpError::EuclidStalled)
}

/// Which normal form a character was brought to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FormTag {
    Lattice,
    Genus2,
    Generic,
}

impl FormTag {
    pub fn label(self) -> &'static str {
        match self {
            FormTag::Lattice => "lattice",
            FormTag::Genus2 => "genus2",
            FormTag::Generic => "generic",
        }
    }
}

/// A change of basis bringing a character to normal form:
/// chi_prime = a (gamma chi), with gamma symplectic and a in GL2+.
#[derive(Debug, Clone)]
pub struct NormalForm {
    pub a: GlPlus,
    pub gamma: SpMatrix,
    pub chi_prime: PeriodVector,
    pub tag: FormTag,
}

impl NormalForm {
    /// Serializes the change of basis as a single text document: the
    /// rescaling, the symplectic matrix, the normalized character, and the
    /// form tag. Round-trips through [`NormalForm::from_text`].
    pub fn to_text(&self) -> String {
        let e = self.a.entries();
        let mut s = String::new();
        s.push_str("NF 1\n");
        s.push_str(&format!("tag {}\n", self.tag.label()));
        s.push_str(&format!("a {} {} {} {}\n", e[0], e[1], e[2], e[3]));
        s.push_str(&format!("gamma\n{}\n", self.gamma));
        s.push_str(&format!("chi-prime\n{}\nend\n", self.chi_prime));
        s
    }

    /// Parses the output of [`NormalForm::to_text`].
    pub fn from_text(text: &str) -> Result<Self, SpError> {
        let mut lines = text.lines();
        if lines.next().map(str::trim) != Some("NF 1") {
            return Err(SpError::BadLiteral);
        }
        let mut tag: Option<FormTag> = None;
        let mut a: Option<GlPlus> = None;
        let mut gamma: Option<SpMatrix> = None;
        let mut chi_prime: Option<PeriodVector> = None;
        while let Some(line) = lines.next() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix("tag ") {
                tag = Some(match rest.trim() {
                    "lattice" => FormTag::Lattice,
                    "genus2" => FormTag::Genus2,
                    "generic" => FormTag::Generic,
                    _ => return Err(SpError::BadLiteral),
                });
            } else if let Some(rest) = line.strip_prefix("a ") {
                let q: Result<Vec<QuadElem>, _> = rest
                    .split_whitespace()
                    .map(QuadElem::from_str)
                    .collect();
                let q = q.map_err(|_| SpError::BadLiteral)?;
                if q.len() != 4 {
                    return Err(SpError::BadLiteral);
                }
                a = Some(
                    GlPlus::new(q[0].clone(), q[1].clone(), q[2].clone(), q[3].clone())
                        .map_err(|_| SpError::BadLiteral)?,
                );
            } else if line == "gamma" {
                let g_line = lines.next().ok_or(SpError::BadLiteral)?;
                let gv: usize = g_line.trim().parse().map_err(|_| SpError::BadLiteral)?;
                let mut body = format!("{}\n", g_line);
                for _ in 0..2 * gv {
                    body.push_str(lines.next().ok_or(SpError::BadLiteral)?);
                    body.push('\n');
                }
                gamma = Some(body.parse()?);
            } else if line == "chi-prime" {
                let mut body = String::new();
                loop {
                    let l = lines.next().ok_or(SpError::BadLiteral)?;
                    if l.trim() == "end" {
                        break;
                    }
                    body.push_str(l);
                    body.push('\n');
                }
                chi_prime = Some(body.parse().map_err(|_| SpError::BadLiteral)?);
            } else {
                return Err(SpError::BadLiteral);
            }
        }
        match (tag, a, gamma, chi_prime) {
            (Some(tag), Some(a), Some(gamma), Some(chi_prime)) => Ok(NormalForm {
                a,
                gamma,
                chi_prime,
                tag,
            }),
            _ => Err(SpError::BadLiteral),
        }
    }
}

fn finish_form(
    tag: FormTag,
    a: GlPlus,
    gamma: SpMatrix,
    chi_original: &PeriodVector,
    chi_prime: PeriodVector,
) -> NormalForm {
    let recomputed = apply_gl(&a, &apply_sp(&gamma, chi_original).expect("dimensions agree"))
        .expect("context is joint");
    assert_eq!(
        recomputed, chi_prime,
        "normal form bookkeeping must recompute the output"
    );
    NormalForm {
        a,
        gamma,
        chi_prime,
        tag,
    }
}

/// Embeds a symplectic matrix on the trailing handles, identity on the rest.
fn embed_tail(g: usize, small: &SpMatrix) -> SpMatrix {
    let off = 2 * (g - small.genus());
    let mut m = SpMatrix::identity(g);
    for r in 0..small.dim() {
        for c in 0..small.dim() {
            *m.entry_mut(off + r, off + c) = small.entry(r, c).clone();
        }
    }
    debug_assert!(m.is_symplectic());
    m
}

fn int_of(x: &QuadElem) -> BigInt {
    let r = x
        .to_rational()
        .expect("value must be rational at this stage");
    assert!(r.is_integer(), "value must be an integer at this stage");
    r.to_integer()
}

fn rot_handle(g: usize, i: usize) -> SpMatrix {
    sl2_block(
        g,
        i,
        [
            [BigInt::zero(), -BigInt::one()],
            [BigInt::one(), BigInt::zero()],
        ],
    )
}

fn neg_handle(g: usize, i: usize) -> SpMatrix {
    sl2_block(
        g,
        i,
        [
            [-BigInt::one(), BigInt::zero()],
            [BigInt::zero(), -BigInt::one()],
        ],
    )
}

/// Normal form for characters whose image is a plane lattice: brings chi to
/// (p, i, 1, 0, m_3, 0, ..., m_g, 0) after rescaling the lattice to Z + iZ,
/// where p = vol / covol. The vector m prescribes the trailing a-periods and
/// may be given for handles 3..g, or with an additional leading 1.
pub fn lattice_normal_form(chi: &PeriodVector, m: &[u32]) -> Result<NormalForm, SpError> {
    let g = chi.genus();
    let tail: Vec<u32> = if m.len() == g - 2 {
        m.to_vec()
    } else if m.len() == g - 1 && m[0] == 1 {
        m[1..].to_vec()
    } else {
        return Err(SpError::Precondition(
            "m vector must cover handles 3..g, optionally with a leading 1",
        ));
    };
    if tail.iter().any(|&x| x != 1 && x != 2) {
        return Err(SpError::Precondition("m entries must be 1 or 2"));
    }
    if volume(chi).qsign() <= 0 {
        return Err(SpError::Precondition("volume must be positive"));
    }
    let report = image_group(chi);
    if report.class != ImageClass::Lattice {
        return Err(SpError::Precondition("image group is not a lattice"));
    }

    // Step A: rescale so the image lattice becomes exactly Z + iZ.
    let (w1, w2) = report.lattice_basis.expect("lattice class has a basis");
    let a = GlPlus::basis_to_standard(&w1, &w2).expect("reduced basis is oriented");
    let mut cur = apply_gl(&a, chi).expect("context is joint");
    let mut gamma = SpMatrix::identity(g);
    let p = int_of(&volume(&cur));
    if p < BigInt::from(2) {
        return Err(SpError::Precondition(
            "volume must be at least twice the covolume",
        ));
    }
    let step = |gamma: SpMatrix, cur: &mut PeriodVector, mv: SpMatrix| -> SpMatrix {
        *cur = apply_sp(&mv, cur).expect("dimensions agree");
        mv.mul(&gamma)
    };

    // Step B: concentrate the imaginary parts, landing i at b_1.
    let u_im: Vec<BigInt> = cur.entries().iter().map(|z| int_of(&z.im)).collect();
    let m1 = primitive_to_basis(&u_im).expect("the image contains i, so the gcd is 1");
    gamma = step(gamma, &mut cur, m1);
    gamma = step(gamma, &mut cur, rot_handle(g, 1));
    assert!(cur.a(1).im.is_zero() && cur.b(1).im.is_one());
    assert_eq!(int_of(&cur.a(1).re), p);

    // Step C: concentrate the real parts of handles 2..g into a_2.
    let u_re: Vec<BigInt> = cur.entries()[2..].iter().map(|z| int_of(&z.re)).collect();
    let (msmall, l) = concentrate_gcd(g - 1, &u_re);
    gamma = step(gamma, &mut cur, embed_tail(g, &msmall));
    assert!(!l.is_zero(), "a volume-p >= 2 lattice character needs a second generator");
    assert!(p.gcd(&l).is_one(), "1 lies in the image, forcing gcd(p, l) = 1");

    // Step D: clear the real part of b_1 using p and l.
    let q = int_of(&cur.b(1).re);
    gamma = step(gamma, &mut cur, rot_handle(g, 2));
    let e = p.extended_gcd(&l);
    let (lambda, mu) = (-&q * &e.x, -&q * &e.y);
    if !mu.is_zero() {
        gamma = step(gamma, &mut cur, mix_b(g, 1, 2, &mu));
    }
    if !lambda.is_zero() {
        let shear = sl2_block(
            g,
            1,
            [
                [BigInt::one(), BigInt::zero()],
                [lambda.clone(), BigInt::one()],
            ],
        );
        gamma = step(gamma, &mut cur, shear);
    }
    assert!(cur.b(1).re.is_zero() && cur.b(1).im.is_one());

    // Step E: drive handle 2 to (1, 0).
    let (m2, next) = handle_euclid(&cur, 2, EuclidCoord::Re)?;
    cur = next;
    gamma = m2.mul(&gamma);
    if cur.a(2).re.is_zero() {
        gamma = step(gamma, &mut cur, rot_handle(g, 2));
    }
    if cur.a(2).re.qsign() < 0 {
        gamma = step(gamma, &mut cur, neg_handle(g, 2));
    }
    let lp = int_of(&cur.a(2).re);
    assert!(lp.is_positive() && p.gcd(&lp).is_one());
    gamma = step(gamma, &mut cur, rot_handle(g, 2));
    gamma = step(gamma, &mut cur, mix_b(g, 1, 2, &-BigInt::one()));
    let (m3, next) = handle_euclid(&cur, 2, EuclidCoord::Re)?;
    cur = next;
    gamma = m3.mul(&gamma);
    if cur.b(2).re.is_zero() {
        gamma = step(gamma, &mut cur, rot_handle(g, 2));
    }
    if cur.b(2).re.qsign() < 0 {
        gamma = step(gamma, &mut cur, neg_handle(g, 2));
    }
    assert!(cur.a(2).re.is_zero() && cur.b(2).re.is_one());
    gamma = step(gamma, &mut cur, mix_b(g, 1, 2, &lp));
    assert!(cur.b(1).re.is_zero() && cur.b(1).im.is_one());
    let minus_lp_p = int_of(&cur.a(2).re);
    let fix = sl2_block(
        g,
        2,
        [
            [BigInt::zero(), BigInt::one()],
            [-BigInt::one(), minus_lp_p.clone()],
        ],
    );
    gamma = step(gamma, &mut cur, fix);
    assert!(cur.a(2).re.is_one() && cur.b(2).is_zero());

    // Step F: stamp the prescribed trailing a-periods.
    for (idx, &mi) in tail.iter().enumerate() {
        let i = idx + 3;
        gamma = step(gamma, &mut cur, mix_b(g, 2, i, &-BigInt::from(i64::from(mi))));
    }

    // The exact target, rebuilt independently.
    let mut target = vec![
        PlanePoint::new(
            QuadElem::from_rational(num_rational::BigRational::from(p.clone())),
            QuadElem::zero(),
        ),
        PlanePoint::from_ints(0, 1),
        PlanePoint::from_ints(1, 0),
        PlanePoint::zero(),
    ];
    for &mi in &tail {
        target.push(PlanePoint::from_ints(i64::from(mi), 0));
        target.push(PlanePoint::zero());
    }
    let target = PeriodVector::new(target).expect("target is well formed");
    assert_eq!(cur, target, "lattice pipeline must land on the exact target");
    Ok(finish_form(FormTag::Lattice, a, gamma, chi, cur))
}

/// Core of the handle-halving move. Requires genus 2, chi(a_1) = 1,
/// chi(b_1) = i, Re(chi(b_2)) = 0, and det2 of handle 2 nonzero with
/// min(|Re a_2|, |Im b_2|) <= 1. Produces a new first-handle determinant
/// in [0, 1/2] while preserving the volume.
fn halve_core(chi: &PeriodVector) -> Result<(SpMatrix, PeriodVector), SpError> {
    let g = chi.genus();
    let x = chi.a(2).re.clone();
    let yp = chi.b(2).im.clone();
    let half = QuadElem::ratio(1, 2);
    let two = QuadElem::from_int(2);
    let feasible = |v: &QuadElem| -> Option<(u32, QuadElem)> {
        if v.is_zero() || (QuadElem::one() - &v.abs()).qsign() < 0 {
            return None;
        }
        let mut j = 0u32;
        let mut scaled = v.abs();
        while (&scaled - &half).qsign() < 0 {
            scaled = &scaled * &two;
            j += 1;
        }
        Some((j, QuadElem::one() - &scaled))
    };
    let ca = feasible(&yp);
    let cb = feasible(&x);
    let strict = |c: &Option<(u32, QuadElem)>| c.as_ref().is_some_and(|(_, v)| v.qsign() > 0);
    let (use_b_side, (j, newdet)) = if strict(&ca) {
        (false, ca.unwrap())
    } else if strict(&cb) {
        (true, cb.unwrap())
    } else if let Some(c) = ca {
        (false, c)
    } else if let Some(c) = cb {
        (true, c)
    } else {
        return Err(SpError::Precondition(
            "second handle determinant too large to halve",
        ));
    };
    let coeff = |v: &QuadElem, j: u32| -> BigInt {
        let mag = BigInt::one() << j;
        if v.qsign() > 0 {
            -mag
        } else {
            mag
        }
    };
    let mv = if use_b_side {
        mix_a(g, 1, 2, &coeff(&x, j))
    } else {
        mix_b(g, 1, 2, &coeff(&yp, j))
    };
    let out = apply_sp(&mv, chi).expect("dimensions agree");
    let d1 = det2(out.a(1), out.b(1));
    assert_eq!(d1, newdet);
    assert!(d1.qsign() >= 0 && (&half - &d1).qsign() >= 0);
    assert_eq!(volume(&out), volume(chi));
    Ok((mv, out))
}

/// Halves the first-handle determinant of a genus-2 character in the
/// standard position chi = (1, i, x + iy, i y'): one cross-handle shear
/// drops det(a_1, b_1) = 1 into [0, 1/2] without changing the volume.
pub fn halve_handle(chi: &PeriodVector) -> Result<(SpMatrix, PeriodVector), SpError> {
    if chi.genus() != 2 {
        return Err(SpError::Precondition("halving requires genus 2"));
    }
    if chi.a(1) != &PlanePoint::from_ints(1, 0) || chi.b(1) != &PlanePoint::from_ints(0, 1) {
        return Err(SpError::Precondition(
            "first handle must be the unit pair (1, i)",
        ));
    }
    if !chi.b(2).re.is_zero() {
        return Err(SpError::Precondition(
            "second handle must have Re(chi(b_2)) = 0",
        ));
    }
    let d2 = det2(chi.a(2), chi.b(2));
    if d2.qsign() <= 0 {
        return Err(SpError::Precondition(
            "second handle determinant must be positive",
        ));
    }
    if (QuadElem::one() - &d2).qsign() < 0 {
        return Err(SpError::Precondition(
            "second handle determinant must not exceed the first",
        ));
    }
    halve_core(chi)
}

/// Repairs a genus-2 character in standard position (1, i, *, *) whose
/// second handle is degenerate (det = 0) but not trivial: a short sequence
/// of symplectic moves makes both handle determinants strictly positive.
/// Fails exactly when the character actually generates a lattice.
pub fn resolve_zero_det(chi: &PeriodVector) -> Result<(SpMatrix, PeriodVector), SpError> {
    let g = chi.genus();
    if g != 2 {
        return Err(SpError::Precondition("resolution requires genus 2"));
    }
    if chi.a(1) != &PlanePoint::from_ints(1, 0) || chi.b(1) != &PlanePoint::from_ints(0, 1) {
        return Err(SpError::Precondition(
            "first handle must be the unit pair (1, i)",
        ));
    }
    if det2(chi.a(2), chi.b(2)).qsign() != 0 {
        return Err(SpError::Precondition(
            "second handle determinant must be zero",
        ));
    }
    let mut cur = chi.clone();
    let mut m = SpMatrix::identity(g);
    let step = |m: SpMatrix, cur: &mut PeriodVector, mv: SpMatrix| -> SpMatrix {
        *cur = apply_sp(&mv, cur).expect("dimensions agree");
        mv.mul(&m)
    };
    if cur.a(2).is_zero() && cur.b(2).is_zero() {
        return Err(SpError::Precondition("image group is a lattice"));
    }
    if cur.a(2).is_zero() {
        m = step(m, &mut cur, rot_handle(g, 2));
    }
    // Collinear pair: euclid in the plane leaves a single generator.
    let (me, next) = handle_euclid(&cur, 2, EuclidCoord::Plane)?;
    cur = next;
    m = me.mul(&m);
    if cur.a(2).is_zero() {
        m = step(m, &mut cur, rot_handle(g, 2));
    }
    assert!(cur.b(2).is_zero());
    let z = cur.a(2).clone();
    let (x, y) = (z.re.clone(), z.im.clone());
    if x.is_rational() && y.is_rational() {
        return Err(SpError::Precondition("image group is a lattice"));
    }
    if !x.is_rational() {
        let mu = x.floor();
        if !mu.is_zero() {
            m = step(m, &mut cur, mix_b(g, 1, 2, &mu));
        }
        m = step(m, &mut cur, mix_a(g, 1, 2, &-BigInt::one()));
    } else {
        m = step(m, &mut cur, sl2_block(
            g,
            1,
            [
                [BigInt::zero(), BigInt::one()],
                [-BigInt::one(), BigInt::zero()],
            ],
        ));
        let mu = y.floor();
        if !mu.is_zero() {
            m = step(m, &mut cur, mix_b(g, 1, 2, &mu));
        }
        m = step(m, &mut cur, mix_a(g, 1, 2, &-BigInt::one()));
    }
    let d1 = det2(cur.a(1), cur.b(1));
    let d2 = det2(cur.a(2), cur.b(2));
    assert!(d1.qsign() > 0 && d2.qsign() > 0, "resolution must leave both determinants positive");
    assert_eq!(&d1 + &d2, volume(chi));
    Ok((m, cur))
}

/// Brings a genus-2 character with positive volume and non-lattice image to
/// the normal position chi' = (1, i, x + iy, i y') with
/// 0 < det(a_2, b_2) <= 1/2 and norm(chi'(a_2)) < 1.
pub fn genus2_normalize(chi: &PeriodVector) -> Result<NormalForm, SpError> {
    let g = chi.genus();
    if g != 2 {
        return Err(SpError::Precondition("normalization requires genus 2"));
    }
    if volume(chi).qsign() <= 0 {
        return Err(SpError::Precondition("volume must be positive"));
    }
    if image_group(chi).class == ImageClass::Lattice {
        return Err(SpError::Precondition("image group is a lattice"));
    }
    let mut cur = chi.clone();
    let mut gamma = SpMatrix::identity(g);
    let mut a_total = GlPlus::identity();
    let sp = |gamma: SpMatrix, cur: &mut PeriodVector, mv: SpMatrix| -> SpMatrix {
        *cur = apply_sp(&mv, cur).expect("dimensions agree");
        mv.mul(&gamma)
    };
    for _ in 0..500 {
        // Order the handles and pin the first to the unit pair (1, i).
        let d1 = det2(cur.a(1), cur.b(1));
        let d2 = det2(cur.a(2), cur.b(2));
        if (&d1 - &d2).qsign() < 0 {
            gamma = sp(gamma, &mut cur, swap_handles(g, 1, 2));
        }
        let t = GlPlus::basis_to_standard(cur.a(1), cur.b(1))
            .expect("leading handle determinant is positive");
        cur = apply_gl(&t, &cur).expect("context is joint");
        a_total = t.compose(&a_total);
        let d2 = det2(cur.a(2), cur.b(2));

        // Exit zone: positive second determinant at most half the first.
        if d2.qsign() > 0 && (QuadElem::one() - &(&QuadElem::from_int(2) * &d2)).qsign() >= 0 {
            let (u, v1, v2) = gauss_reduce(cur.a(2), cur.b(2))?;
            let mv = sl2_block(g, 2, u);
            gamma = sp(gamma, &mut cur, mv);
            assert_eq!(cur.a(2), &v1);
            assert_eq!(cur.b(2), &v2);
            assert!(cur.a(1) == &PlanePoint::from_ints(1, 0));
            assert!(cur.b(1) == &PlanePoint::from_ints(0, 1));
            let d2 = det2(cur.a(2), cur.b(2));
            assert!(d2.qsign() > 0);
            assert!((QuadElem::one() - &(&QuadElem::from_int(2) * &d2)).qsign() >= 0);
            assert!((QuadElem::one() - &norm_sq(cur.a(2))).qsign() > 0);
            return Ok(finish_form(FormTag::Genus2, a_total, gamma, chi, cur));
        }

        let re_dense = q_rank_two(&cur.a(2).re, &cur.b(2).re);
        let im_dense = q_rank_two(&cur.a(2).im, &cur.b(2).im);
        if !re_dense && im_dense {
            // Quarter-turn the plane, then restore (1, i) in handle 1: the
            // second handle's troublesome imaginary pair becomes a real pair.
            let r = GlPlus::new(
                QuadElem::zero(),
                QuadElem::one(),
                -QuadElem::one(),
                QuadElem::zero(),
            )
            .expect("rotation has determinant 1");
            cur = apply_gl(&r, &cur).expect("context is joint");
            a_total = r.compose(&a_total);
            gamma = sp(gamma, &mut cur, sl2_block(
                g,
                1,
                [
                    [BigInt::zero(), BigInt::one()],
                    [-BigInt::one(), BigInt::zero()],
                ],
            ));
            assert!(cur.a(1) == &PlanePoint::from_ints(1, 0));
            assert!(cur.b(1) == &PlanePoint::from_ints(0, 1));
            continue;
        }
        if re_dense {
            // One dense step lands det(a_1, b_1) in (2 vol / 3, vol); after
            // renormalization the exit zone test succeeds.
            let vol = volume(&cur);
            let third = QuadElem::ratio(1, 3);
            let lo = &(&(&QuadElem::from_int(2) * &third) * &vol) - &QuadElem::one();
            let hi = &vol - &QuadElem::one();
            let (n, mcoef) = dense_interval_hit(&cur.a(2).re, &cur.b(2).re, &lo, &hi)?;
            let k = n.gcd(&mcoef);
            let (r, s) = (&n / &k, &mcoef / &k);
            let e = r.extended_gcd(&s);
            let b = sl2_block(g, 2, [[r.clone(), s.clone()], [-e.y, e.x]]);
            gamma = sp(gamma, &mut cur, b);
            gamma = sp(gamma, &mut cur, mix_a(g, 1, 2, &k));
            let nd1 = det2(cur.a(1), cur.b(1));
            assert!((&nd1 - &(&(&QuadElem::from_int(2) * &third) * &vol)).qsign() > 0);
            assert!((&vol - &nd1).qsign() > 0);
            continue;
        }

        // Discrete directions: zero out Re(b_2), then either repair a
        // degenerate handle or halve the leading determinant.
        let (me, next) = handle_euclid(&cur, 2, EuclidCoord::Re)?;
        cur = next;
        gamma = me.mul(&gamma);
        if cur.a(2).re.is_zero() && !cur.b(2).re.is_zero() {
            gamma = sp(gamma, &mut cur, rot_handle(g, 2));
        }
        let d2 = det2(cur.a(2), cur.b(2));
        if d2.qsign() == 0 {
            let (mr, next) = resolve_zero_det(&cur)?;
            cur = next;
            gamma = mr.mul(&gamma);
            continue;
        }
        let (mh, next) = halve_core(&cur)?;
        cur = next;
        gamma = mh.mul(&gamma);
    }
    Err(SpError::EuclidStalled)
}

/// The three exact conditions of the generic normal form, reported
/// separately: positive handle determinants; corner spreads of the dual
/// coordinates below 1 for the scaled trailing a-periods; no positively
/// parallel pair among the trailing a-periods.
pub fn generic_form_report(
    chi: &PeriodVector,
    m_scale: &QuadElem,
) -> Result<[bool; 3], SpError> {
    if m_scale.qsign() <= 0 {
        return Err(SpError::Precondition("scale must be positive"));
    }
    let g = chi.genus();
    let mut dets_positive = true;
    for i in 1..=g {
        if det2(chi.a(i), chi.b(i)).qsign() <= 0 {
            dets_positive = false;
        }
    }
    let spreads_ok = if !dets_positive {
        // Dual coordinates are undefined without an honest leading handle.
        true
    } else {
        let d1 = det2(chi.a(1), chi.b(1));
        let xs: Vec<QuadElem> = (2..=g).map(|i| &chi.a(i).re * m_scale).collect();
        let ys: Vec<QuadElem> = (2..=g).map(|i| &chi.a(i).im * m_scale).collect();
        let xmin = xs.iter().cloned().min().unwrap();
        let xmax = xs.iter().cloned().max().unwrap();
        let ymin = ys.iter().cloned().min().unwrap();
        let ymax = ys.iter().cloned().max().unwrap();
        let corners = [
            PlanePoint::new(xmin.clone(), ymin.clone()),
            PlanePoint::new(xmin, ymax.clone()),
            PlanePoint::new(xmax.clone(), ymin),
            PlanePoint::new(xmax, ymax),
        ];
        let mut ok = true;
        for dual in [true, false] {
            let vals: Vec<QuadElem> = corners
                .iter()
                .map(|c| {
                    if dual {
                        &det2(c, chi.b(1)) / &d1
                    } else {
                        &det2(chi.a(1), c) / &d1
                    }
                })
                .collect();
            let spread = &vals.iter().cloned().max().unwrap() - &vals.iter().cloned().min().unwrap();
            if (QuadElem::one() - &spread).qsign() <= 0 {
                ok = false;
            }
        }
        ok
    };
    let mut no_parallel = true;
    for i in 2..=g {
        for j in i + 1..=g {
            let (u, v) = (chi.a(i), chi.a(j));
            if det2(u, v).qsign() == 0 && dot(u, v).qsign() > 0 {
                no_parallel = false;
            }
        }
    }
    Ok([dets_positive, spreads_ok, no_parallel])
}

/// True when all three generic-form conditions hold at scale `m_scale`.
pub fn generic_form_check(chi: &PeriodVector, m_scale: &QuadElem) -> Result<bool, SpError> {
    Ok(generic_form_report(chi, m_scale)?.iter().all(|&b| b))
}

fn generic_score(chi: &PeriodVector, m_scale: &QuadElem) -> f64 {
    let g = chi.genus();
    let mut s = 0.0;
    let mut d1_ok = false;
    for i in 1..=g {
        let d = det2(chi.a(i), chi.b(i));
        if d.qsign() <= 0 {
            s += 10.0 + (-d.approx_f64()).max(0.0);
        } else if i == 1 {
            d1_ok = true;
        }
    }
    if d1_ok {
        let d1 = det2(chi.a(1), chi.b(1)).approx_f64();
        let pts: Vec<(f64, f64)> = (2..=g)
            .map(|i| {
                let p = chi.a(i);
                (
                    p.re.approx_f64() * m_scale.approx_f64(),
                    p.im.approx_f64() * m_scale.approx_f64(),
                )
            })
            .collect();
        let fold = |f: &dyn Fn(&(f64, f64)) -> f64| -> (f64, f64) {
            let vals: Vec<f64> = pts.iter().map(f).collect();
            (
                vals.iter().cloned().fold(f64::INFINITY, f64::min),
                vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
            )
        };
        let (xmin, xmax) = fold(&|p| p.0);
        let (ymin, ymax) = fold(&|p| p.1);
        let b1 = (chi.b(1).re.approx_f64(), chi.b(1).im.approx_f64());
        let a1 = (chi.a(1).re.approx_f64(), chi.a(1).im.approx_f64());
        let mut spread = |f: &dyn Fn(f64, f64) -> f64| {
            let mut lo = f64::INFINITY;
            let mut hi = f64::NEG_INFINITY;
            for x in [xmin, xmax] {
                for y in [ymin, ymax] {
                    let v = f(x, y);
                    lo = lo.min(v);
                    hi = hi.max(v);
                }
            }
            let sp = hi - lo;
            if sp >= 1.0 {
                s += sp;
            }
        };
        spread(&|x, y| (x * b1.1 - y * b1.0) / d1);
        spread(&|x, y| (a1.0 * y - a1.1 * x) / d1);
    }
    for i in 2..=g {
        for j in i + 1..=g {
            let (u, v) = (chi.a(i), chi.a(j));
            if det2(u, v).qsign() == 0 && dot(u, v).qsign() > 0 {
                s += 3.0;
            }
        }
    }
    for p in chi.entries() {
        s += 1e-4 * (p.re.approx_f64().abs() + p.im.approx_f64().abs());
    }
    s
}

fn random_move(rng: &mut ChaCha8Rng, g: usize) -> SpMatrix {
    loop {
        let coin = rng.gen_range(0..6);
        let i = rng.gen_range(1..=g);
        match coin {
            0 => {
                let k = BigInt::from(if rng.gen::<bool>() { 1 } else { -1 });
                return sl2_block(g, i, [[BigInt::one(), k], [BigInt::zero(), BigInt::one()]]);
            }
            1 => {
                let k = BigInt::from(if rng.gen::<bool>() { 1 } else { -1 });
                return sl2_block(g, i, [[BigInt::one(), BigInt::zero()], [k, BigInt::one()]]);
            }
            2 => return rot_handle(g, i),
            _ => {
                if g < 2 {
                    continue;
                }
                let mut j = rng.gen_range(1..=g);
                if j == i {
                    j = if i == g { 1 } else { i + 1 };
                }
                let k = BigInt::from(if rng.gen::<bool>() { 1 } else { -1 });
                return match coin {
                    3 => swap_handles(g, i, j),
                    4 => mix_a(g, i, j, &k),
                    _ => mix_b(g, i, j, &k),
                };
            }
        }
    }
}

/// Searches for a symplectic change of basis bringing chi to generic form at
/// scale `m_scale`, by seeded greedy descent over elementary moves. Soundness
/// rests entirely on the exact form check; the search itself is heuristic and
/// returns None when `max_steps` candidates are exhausted.
pub fn generic_normalize_heuristic(
    chi: &PeriodVector,
    m_scale: &QuadElem,
    max_steps: usize,
    seed: u64,
) -> Result<Option<NormalForm>, SpError> {
    if volume(chi).qsign() <= 0 {
        return Err(SpError::Precondition("volume must be positive"));
    }
    let g = chi.genus();
    if generic_form_check(chi, m_scale)? {
        return Ok(Some(finish_form(
            FormTag::Generic,
            GlPlus::identity(),
            SpMatrix::identity(g),
            chi,
            chi.clone(),
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best = chi.clone();
    let mut best_gamma = SpMatrix::identity(g);
    let mut best_score = generic_score(&best, m_scale);
    for _ in 0..max_steps {
        let mv = random_move(&mut rng, g);
        let cand = apply_sp(&mv, &best).expect("dimensions agree");
        if generic_form_check(&cand, m_scale)? {
            let gamma = mv.mul(&best_gamma);
            return Ok(Some(finish_form(
                FormTag::Generic,
                GlPlus::identity(),
                gamma,
                chi,
                cand,
            )));
        }
        let sc = generic_score(&cand, m_scale);
        if sc < best_score {
            best = cand;
            best_gamma = mv.mul(&best_gamma);
            best_score = sc;
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::QuadElem;

    fn big(v: &[i64]) -> Vec<BigInt> {
        v.iter().map(|&x| BigInt::from(x)).collect()
    }

    #[test]
    fn moves_are_symplectic() {
        for g in 1..=4 {
            for i in 1..=g {
                assert!(sl2_block(
                    g,
                    i,
                    [
                        [BigInt::from(2), BigInt::from(1)],
                        [BigInt::from(1), BigInt::from(1)]
                    ]
                )
                .is_symplectic());
                for j in 1..=g {
                    if i == j {
                        continue;
                    }
                    assert!(swap_handles(g, i, j).is_symplectic());
                    assert!(mix_b(g, i, j, &BigInt::from(-3)).is_symplectic());
                    assert!(mix_a(g, i, j, &BigInt::from(5)).is_symplectic());
                }
            }
        }
    }

    #[test]
    fn inverse_and_product() {
        let m = SpMatrix::random(3, 25, 7);
        assert!(m.is_symplectic());
        let id = m.mul(&m.inverse());
        assert_eq!(id, SpMatrix::identity(3));
        let id2 = m.inverse().mul(&m);
        assert_eq!(id2, SpMatrix::identity(3));
    }

    #[test]
    fn rejects_non_symplectic() {
        let mut entries = SpMatrix::identity(2).m;
        entries[0] = BigInt::from(2);
        assert_eq!(SpMatrix::new(2, entries).err(), Some(SpError::NotSymplectic));
    }

    #[test]
    fn matrix_text_round_trip() {
        let m = SpMatrix::random(2, 12, 3);
        let s = m.to_string();
        let back: SpMatrix = s.parse().unwrap();
        assert_eq!(m, back);
        assert!("2\n1 0 0".parse::<SpMatrix>().is_err());
    }

    #[test]
    fn normal_form_text_round_trip() {
        let chi =
            PeriodVector::from_ints(&[(7, 0), (0, 1), (1, 0), (0, 0), (2, 0), (0, 0)]).unwrap();
        let nf = lattice_normal_form(&chi, &[2]).unwrap();
        let text = nf.to_text();
        let back = NormalForm::from_text(&text).unwrap();
        assert_eq!(back.a, nf.a);
        assert_eq!(back.gamma, nf.gamma);
        assert_eq!(back.chi_prime, nf.chi_prime);
        assert_eq!(back.tag, nf.tag);
        assert_eq!(back.to_text(), text);
        assert!(NormalForm::from_text("NF 1\ntag lattice\n").is_err());
        assert!(NormalForm::from_text("NF 2\n").is_err());
    }

    #[test]
    fn primitive_to_basis_examples() {
        // e1 stays fixed (the matrix need not be the identity, only correct).
        let e1 = big(&[1, 0, 0, 0]);
        let m = primitive_to_basis(&e1).unwrap();
        assert_eq!(m.apply_int(&e1).unwrap(), e1);

        let u = big(&[0, 1, 0, 0]);
        let m = primitive_to_basis(&u).unwrap();
        assert!(m.is_symplectic());
        assert_eq!(m.apply_int(&u).unwrap(), e1);

        let u = big(&[2, 3, 0, 5]);
        let m = primitive_to_basis(&u).unwrap();
        assert!(m.is_symplectic());
        assert_eq!(m.apply_int(&u).unwrap(), e1);
    }

    #[test]
    fn primitive_to_basis_rejects() {
        assert_eq!(
            primitive_to_basis(&big(&[0, 0, 0, 0])).err(),
            Some(SpError::ZeroVector)
        );
        assert_eq!(
            primitive_to_basis(&big(&[2, 4, 0, 6])).err(),
            Some(SpError::NotPrimitive)
        );
    }

    #[test]
    fn orbit_map_examples() {
        let u = big(&[2, 0, 0, 0]);
        let v = big(&[0, 2, 0, 0]);
        let m = orbit_map(&u, &v).unwrap().unwrap();
        assert!(m.is_symplectic());
        assert_eq!(m.apply_int(&u).unwrap(), v);

        let w = big(&[3, 0, 0, 0]);
        assert_eq!(orbit_map(&u, &w).unwrap(), None);

        let m = orbit_map(&u, &u).unwrap().unwrap();
        assert_eq!(m.apply_int(&u).unwrap(), u);
    }

    #[test]
    fn gauss_reduce_examples() {
        let v1 = PlanePoint::from_ints(1, 0);
        let v2 = PlanePoint::from_ints(0, 1);
        let (_, a, b) = gauss_reduce(&v1, &v2).unwrap();
        assert_eq!((a, b), (v1.clone(), v2.clone()));

        let v2 = PlanePoint::from_ints(10, 1);
        let (t, a, b) = gauss_reduce(&v1, &v2).unwrap();
        assert_eq!(a, v1);
        assert_eq!(b, PlanePoint::from_ints(0, 1));
        assert!((&t[0][0] * &t[1][1] - &t[0][1] * &t[1][0]).is_one());

        let v1 = PlanePoint::from_ints(5, 0);
        let v2 = PlanePoint::new(QuadElem::zero(), QuadElem::ratio(1, 5));
        let (_, a, _) = gauss_reduce(&v1, &v2).unwrap();
        let n1 = norm_sq(&a);
        let d = det2(&v1, &v2);
        assert!(
            (&n1 * &n1 * &QuadElem::from_int(3) - &d * &d * &QuadElem::from_int(4)).qsign() <= 0
        );

        let collinear = PlanePoint::from_ints(2, 2);
        let other = PlanePoint::from_ints(1, 1);
        assert_eq!(
            gauss_reduce(&collinear, &other).err(),
            Some(SpError::CollinearInput)
        );
    }

    #[test]
    fn gauss_reduce_bookkeeping_is_exact() {
        // (v1', v2') = t (v1, v2) entrywise for a nontrivial case.
        let v1 = PlanePoint::from_ints(7, 3);
        let v2 = PlanePoint::from_ints(5, 2);
        let (t, a, b) = gauss_reduce(&v1, &v2).unwrap();
        let lin = |r: &[BigInt; 2]| -> PlanePoint {
            let c0 = QuadElem::from_rational(num_rational::BigRational::from(r[0].clone()));
            let c1 = QuadElem::from_rational(num_rational::BigRational::from(r[1].clone()));
            &v1.scale(&c0) + &v2.scale(&c1)
        };
        assert_eq!(lin(&t[0]), a);
        assert_eq!(lin(&t[1]), b);
    }

    fn pv(entries: Vec<PlanePoint>) -> PeriodVector {
        PeriodVector::new(entries).unwrap()
    }

    fn pt(x: i64, y: i64) -> PlanePoint {
        PlanePoint::from_ints(x, y)
    }

    fn surd(p: i64, q: i64, den: i64, d: u64) -> QuadElem {
        use num_rational::BigRational;
        QuadElem::new(
            BigRational::new(p.into(), den.into()),
            BigRational::new(q.into(), den.into()),
            d,
        )
    }

    #[test]
    fn handle_euclid_integer_pair() {
        let chi = pv(vec![pt(1, 0), pt(0, 1), pt(3, 0), pt(5, 0)]);
        let (m, out) = handle_euclid(&chi, 2, EuclidCoord::Re).unwrap();
        assert!(m.is_symplectic());
        assert_eq!(out, crate::chi::apply_sp(&m, &chi).unwrap());
        let (x, y) = (out.a(2).re.clone(), out.b(2).re.clone());
        assert!(x.is_zero() || y.is_zero());
        let survivor = if x.is_zero() { y } else { x };
        assert_eq!(survivor.abs(), QuadElem::one());
    }

    #[test]
    fn handle_euclid_stops_immediately_on_zero() {
        let chi = pv(vec![pt(1, 0), pt(0, 1), pt(0, 3), pt(7, 0)]);
        let (m, out) = handle_euclid(&chi, 2, EuclidCoord::Re).unwrap();
        assert_eq!(m, SpMatrix::identity(2));
        assert_eq!(out, chi);
    }

    #[test]
    fn handle_euclid_respects_denominators() {
        let half = PlanePoint::new(QuadElem::ratio(1, 2), QuadElem::zero());
        let three_halves = PlanePoint::new(QuadElem::ratio(3, 2), QuadElem::zero());
        let chi = pv(vec![pt(1, 0), pt(0, 1), half, three_halves]);
        let (_, out) = handle_euclid(&chi, 2, EuclidCoord::Re).unwrap();
        let (x, y) = (out.a(2).re.clone(), out.b(2).re.clone());
        let survivor = if x.is_zero() { y } else { x };
        assert_eq!(survivor.abs(), QuadElem::ratio(1, 2));
    }

    #[test]
    fn handle_euclid_plane_mode_collinear() {
        let chi = pv(vec![pt(1, 0), pt(0, 1), pt(2, 2), pt(3, 3)]);
        let (_, out) = handle_euclid(&chi, 2, EuclidCoord::Plane).unwrap();
        let survivor = if out.a(2).is_zero() {
            out.b(2).clone()
        } else {
            assert!(out.b(2).is_zero());
            out.a(2).clone()
        };
        assert_eq!(norm_sq(&survivor), QuadElem::from_int(2));
    }

    #[test]
    fn handle_euclid_detects_dense_pairs() {
        let chi = pv(vec![
            pt(1, 0),
            pt(0, 1),
            pt(1, 0),
            PlanePoint::new(surd(0, 1, 1, 2), QuadElem::zero()),
        ]);
        assert_eq!(
            handle_euclid(&chi, 2, EuclidCoord::Re).err(),
            Some(SpError::EuclidStalled)
        );
    }

    #[test]
    fn dense_hit_matches_worked_example() {
        let one = QuadElem::one();
        let rt2 = surd(0, 1, 1, 2);
        let (n, m) = dense_interval_hit(&one, &rt2, &QuadElem::zero(), &QuadElem::one()).unwrap();
        assert_eq!((n, m), (BigInt::from(-1), BigInt::from(1)));
    }

    #[test]
    fn dense_hit_membership_and_errors() {
        let one = QuadElem::one();
        let rt2 = surd(0, 1, 1, 2);
        let lo = QuadElem::from_int(2);
        let hi = QuadElem::ratio(5, 2);
        let (n, m) = dense_interval_hit(&one, &rt2, &lo, &hi).unwrap();
        let nq = QuadElem::from_rational(num_rational::BigRational::from(n));
        let mq = QuadElem::from_rational(num_rational::BigRational::from(m));
        let val = &nq + &(&mq * &rt2);
        assert!((&val - &lo).qsign() > 0 && (&hi - &val).qsign() > 0);

        assert_eq!(
            dense_interval_hit(&one, &rt2, &hi, &lo).err(),
            Some(SpError::IntervalEmpty)
        );
        assert_eq!(
            dense_interval_hit(&one, &QuadElem::ratio(1, 2), &lo, &hi).err(),
            Some(SpError::NotDense)
        );

        // Negative target intervals work through the mirrored branch.
        let (n, m) =
            dense_interval_hit(&one, &rt2, &-QuadElem::one(), &-QuadElem::ratio(1, 2)).unwrap();
        let nq = QuadElem::from_rational(num_rational::BigRational::from(n));
        let mq = QuadElem::from_rational(num_rational::BigRational::from(m));
        let val = &nq + &(&mq * &rt2);
        assert!(val.qsign() < 0);
        assert!((&val + &QuadElem::one()).qsign() > 0);
        assert!((&-QuadElem::ratio(1, 2) - &val).qsign() > 0);
    }

    #[test]
    fn lattice_form_fixed_point() {
        let chi = pv(vec![pt(3, 0), pt(0, 1), pt(1, 0), pt(0, 0)]);
        let nf = lattice_normal_form(&chi, &[]).unwrap();
        assert_eq!(nf.chi_prime, chi);
        assert_eq!(nf.a, GlPlus::identity());
        assert_eq!(nf.tag, FormTag::Lattice);
        // The g-1 spelling with a leading 1 is accepted too.
        let nf2 = lattice_normal_form(&chi, &[1]).unwrap();
        assert_eq!(nf2.chi_prime, chi);
    }

    #[test]
    fn lattice_form_recovers_scrambles() {
        let target = pv(vec![
            pt(4, 0),
            pt(0, 1),
            pt(1, 0),
            pt(0, 0),
            pt(1, 0),
            pt(0, 0),
        ]);
        for seed in 0..10 {
            let m = SpMatrix::random(3, 12, seed);
            let scrambled = crate::chi::apply_sp(&m, &target).unwrap();
            let nf = lattice_normal_form(&scrambled, &[1]).unwrap();
            assert_eq!(nf.chi_prime, target, "seed {seed}");
            assert_eq!(nf.a, GlPlus::identity(), "seed {seed}");
        }
    }

    #[test]
    fn lattice_form_rescales_the_lattice() {
        // Lattice (1/2)Z + iZ with volume 2 covolumes: chi = (1, i, 1/2, 0).
        let chi = pv(vec![
            pt(1, 0),
            pt(0, 1),
            PlanePoint::new(QuadElem::ratio(1, 2), QuadElem::zero()),
            pt(0, 0),
        ]);
        let nf = lattice_normal_form(&chi, &[]).unwrap();
        // vol = 1, covol = 1/2, so p = 2.
        assert_eq!(nf.chi_prime, pv(vec![pt(2, 0), pt(0, 1), pt(1, 0), pt(0, 0)]));
    }

    #[test]
    fn lattice_form_preconditions() {
        // Volume 1 over the unit lattice: below the p >= 2 threshold.
        let chi = pv(vec![pt(1, 0), pt(1, 1), pt(0, 0), pt(0, 1)]);
        assert!(matches!(
            lattice_normal_form(&chi, &[]),
            Err(SpError::Precondition(_))
        ));
        // Dense image.
        let chi = pv(vec![
            pt(1, 0),
            pt(0, 1),
            PlanePoint::new(surd(0, 1, 1, 2), QuadElem::zero()),
            pt(0, 0),
        ]);
        assert!(matches!(
            lattice_normal_form(&chi, &[]),
            Err(SpError::Precondition(_))
        ));
        // Bad m vectors.
        let chi = pv(vec![pt(3, 0), pt(0, 1), pt(1, 0), pt(0, 0)]);
        assert!(lattice_normal_form(&chi, &[3]).is_err());
        assert!(lattice_normal_form(&chi, &[1, 1]).is_err());
    }

    #[test]
    fn halve_drops_first_determinant() {
        use num_rational::BigRational;
        let third = |n: i64| QuadElem::from_rational(BigRational::new(n.into(), 3.into()));
        // chi = (1, i, 1/2 + i/3, 2i/3): det2 = 1/3.
        let chi = pv(vec![
            pt(1, 0),
            pt(0, 1),
            PlanePoint::new(QuadElem::ratio(1, 2), third(1)),
            PlanePoint::new(QuadElem::zero(), third(2)),
        ]);
        let (m, out) = halve_handle(&chi).unwrap();
        assert!(m.is_symplectic());
        let d1 = det2(out.a(1), out.b(1));
        assert_eq!(d1, third(1));
        assert_eq!(crate::chi::volume(&out), crate::chi::volume(&chi));
    }

    #[test]
    fn halve_prefers_strictly_positive_outcomes() {
        // y' = 1 gives outcome 0; x = 1/2 gives outcome 1/2. Pick the latter.
        let chi = pv(vec![
            pt(1, 0),
            pt(0, 1),
            PlanePoint::new(QuadElem::ratio(1, 2), QuadElem::ratio(1, 3)),
            pt(0, 1),
        ]);
        let (_, out) = halve_handle(&chi).unwrap();
        assert_eq!(det2(out.a(1), out.b(1)), QuadElem::ratio(1, 2));
    }

    #[test]
    fn halve_accepts_the_degenerate_outcome() {
        // x = 1 and y' = 1: both candidates give exactly zero.
        let chi = pv(vec![
            pt(1, 0),
            pt(0, 1),
            PlanePoint::new(QuadElem::one(), QuadElem::ratio(1, 3)),
            pt(0, 1),
        ]);
        let (_, out) = halve_handle(&chi).unwrap();
        assert!(det2(out.a(1), out.b(1)).is_zero());
        assert_eq!(crate::chi::volume(&out), QuadElem::from_int(2));
    }

    #[test]
    fn halve_preconditions() {
        // Wrong first handle.
        let chi = pv(vec![pt(2, 0), pt(0, 1), pt(1, 0), pt(0, 1)]);
        assert!(halve_handle(&chi).is_err());
        // Nonzero Re(b_2).
        let chi = pv(vec![pt(1, 0), pt(0, 1), pt(1, 0), pt(1, 1)]);
        assert!(halve_handle(&chi).is_err());
        // Negative determinant.
        let chi = pv(vec![pt(1, 0), pt(0, 1), pt(-1, 0), pt(0, 1)]);
        assert!(halve_handle(&chi).is_err());
    }

    #[test]
    fn resolve_zero_det_real_slit() {
        // chi = (1, i, sqrt2 / 2, 0).
        let chi = pv(vec![
            pt(1, 0),
            pt(0, 1),
            PlanePoint::new(surd(0, 1, 2, 2), QuadElem::zero()),
            pt(0, 0),
        ]);
        let (m, out) = resolve_zero_det(&chi).unwrap();
        assert_eq!(out, crate::chi::apply_sp(&m, &chi).unwrap());
        let d1 = det2(out.a(1), out.b(1));
        let d2 = det2(out.a(2), out.b(2));
        assert_eq!(d1, &QuadElem::one() - &surd(0, 1, 2, 2));
        assert_eq!(d2, surd(0, 1, 2, 2));
    }

    #[test]
    fn resolve_zero_det_imaginary_slit() {
        // chi = (1, i, i sqrt2 / 2, 0): handled through the rotated branch.
        let chi = pv(vec![
            pt(1, 0),
            pt(0, 1),
            PlanePoint::new(QuadElem::zero(), surd(0, 1, 2, 2)),
            pt(0, 0),
        ]);
        let (_, out) = resolve_zero_det(&chi).unwrap();
        let d1 = det2(out.a(1), out.b(1));
        let d2 = det2(out.a(2), out.b(2));
        assert_eq!(d1, &QuadElem::one() - &surd(0, 1, 2, 2));
        assert_eq!(d2, surd(0, 1, 2, 2));
    }

    #[test]
    fn resolve_zero_det_rejects_lattices() {
        let chi = pv(vec![pt(1, 0), pt(0, 1), pt(0, 0), pt(0, 0)]);
        assert!(matches!(
            resolve_zero_det(&chi),
            Err(SpError::Precondition(_))
        ));
    }

    fn assert_genus2_form(nf: &NormalForm, original: &PeriodVector) {
        assert_eq!(nf.tag, FormTag::Genus2);
        let out = &nf.chi_prime;
        assert_eq!(out.a(1), &pt(1, 0));
        assert_eq!(out.b(1), &pt(0, 1));
        let d2 = det2(out.a(2), out.b(2));
        assert!(d2.qsign() > 0);
        assert!((&QuadElem::one() - &(&QuadElem::from_int(2) * &d2)).qsign() >= 0);
        assert!((&QuadElem::one() - &norm_sq(out.a(2))).qsign() > 0);
        let recomputed = crate::chi::apply_gl(
            &nf.a,
            &crate::chi::apply_sp(&nf.gamma, original).unwrap(),
        )
        .unwrap();
        assert_eq!(&recomputed, out);
    }

    #[test]
    fn genus2_normalize_generic_input() {
        let chi = pv(vec![
            pt(1, 0),
            pt(0, 1),
            PlanePoint::new(surd(1, 1, 4, 2), QuadElem::ratio(1, 4)),
            PlanePoint::new(QuadElem::zero(), QuadElem::ratio(1, 4)),
        ]);
        let nf = genus2_normalize(&chi).unwrap();
        assert_genus2_form(&nf, &chi);
    }

    #[test]
    fn genus2_normalize_zero_det_path() {
        let chi = pv(vec![
            pt(1, 0),
            pt(0, 1),
            PlanePoint::new(surd(0, 1, 2, 2), QuadElem::zero()),
            pt(0, 0),
        ]);
        let nf = genus2_normalize(&chi).unwrap();
        assert_genus2_form(&nf, &chi);
    }

    #[test]
    fn genus2_normalize_dense_path() {
        let chi = pv(vec![
            pt(1, 0),
            pt(0, 1),
            PlanePoint::new(surd(0, 1, 1, 2), QuadElem::zero()),
            pt(1, 1),
        ]);
        let nf = genus2_normalize(&chi).unwrap();
        assert_genus2_form(&nf, &chi);
    }

    #[test]
    fn genus2_normalize_imaginary_dense_path() {
        let chi = pv(vec![
            pt(1, 0),
            pt(0, 1),
            PlanePoint::new(QuadElem::zero(), surd(0, 1, 1, 2)),
            pt(-1, 1),
        ]);
        let nf = genus2_normalize(&chi).unwrap();
        assert_genus2_form(&nf, &chi);
    }

    #[test]
    fn genus2_normalize_big_handle_imbalance() {
        let chi = pv(vec![
            pt(1, 0),
            pt(0, 1),
            PlanePoint::new(surd(0, 1, 1, 2), QuadElem::zero()),
            PlanePoint::new(QuadElem::zero(), surd(0, 3, 1, 2)),
        ]);
        let nf = genus2_normalize(&chi).unwrap();
        assert_genus2_form(&nf, &chi);
    }

    #[test]
    fn genus2_normalize_preconditions() {
        // Lattice image.
        let chi = pv(vec![
            pt(1, 0),
            pt(0, 1),
            PlanePoint::new(QuadElem::ratio(1, 2), QuadElem::zero()),
            pt(0, 0),
        ]);
        assert!(matches!(
            genus2_normalize(&chi),
            Err(SpError::Precondition("image group is a lattice"))
        ));
        // Nonpositive volume.
        let chi = pv(vec![pt(0, 1), pt(1, 0), pt(0, 0), pt(0, 0)]);
        assert!(matches!(
            genus2_normalize(&chi),
            Err(SpError::Precondition("volume must be positive"))
        ));
    }

    #[test]
    fn generic_form_worked_example() {
        let chi = pv(vec![
            pt(10, 0),
            pt(0, 10),
            pt(1, 0),
            pt(0, 1),
            PlanePoint::new(surd(1, 1, 1, 2), QuadElem::zero()),
            pt(0, 1),
        ]);
        let report = generic_form_report(&chi, &QuadElem::one()).unwrap();
        assert_eq!(report, [true, true, false]);
        assert!(!generic_form_check(&chi, &QuadElem::one()).unwrap());

        // One shear on handle 3 repairs the parallel pair.
        let fix = sl2_block(
            3,
            3,
            [
                [BigInt::one(), BigInt::one()],
                [BigInt::zero(), BigInt::one()],
            ],
        );
        let fixed = crate::chi::apply_sp(&fix, &chi).unwrap();
        assert!(generic_form_check(&fixed, &QuadElem::one()).unwrap());

        assert!(generic_form_check(&chi, &QuadElem::zero()).is_err());
    }

    #[test]
    fn generic_heuristic_immediate_and_search() {
        let chi = pv(vec![
            pt(10, 0),
            pt(0, 10),
            pt(1, 0),
            pt(0, 1),
            PlanePoint::new(surd(1, 1, 1, 2), QuadElem::zero()),
            pt(0, 1),
        ]);
        // Exhaustion is reported as None, not an error.
        assert!(generic_normalize_heuristic(&chi, &QuadElem::one(), 0, 7)
            .unwrap()
            .is_none());
        let nf = generic_normalize_heuristic(&chi, &QuadElem::one(), 2000, 7)
            .unwrap()
            .expect("the search should repair one parallel pair");
        assert_eq!(nf.tag, FormTag::Generic);
        assert!(generic_form_check(&nf.chi_prime, &QuadElem::one()).unwrap());
        assert_eq!(nf.a, GlPlus::identity());

        // Already-generic input returns the identity immediately.
        let fixed = nf.chi_prime.clone();
        let nf2 = generic_normalize_heuristic(&fixed, &QuadElem::one(), 5, 1)
            .unwrap()
            .unwrap();
        assert_eq!(nf2.gamma, SpMatrix::identity(3));
        assert_eq!(nf2.chi_prime, fixed);
    }
}
