//! Period characters: vectors of complex periods over a symplectic basis,
//! the subgroup of the plane they generate, and the realizability decision
//! for a prescribed singularity partition.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::field::{det2, join_radicands, FieldError, GlPlus, PlanePoint, QuadElem};
use crate::sp_action::{gauss_reduce, SpMatrix};

#[derive(Debug, Error, PartialEq)]
pub enum ChiError {
    #[error("genus must be at least 2")]
    GenusTooSmall,
    #[error("expected 2g period entries")]
    Length,
    #[error("periods live in different quadratic contexts")]
    MixedContexts,
    #[error("genus of character and partition disagree")]
    GenusMismatch,
    #[error("matrix dimension does not match character")]
    Dimension,
    #[error("cannot parse period character: {0}")]
    BadLiteral(String),
    #[error("cover data requires a lattice image group")]
    NotLattice,
    #[error("volume is not an integer multiple of the covolume")]
    RaggedCover,
    #[error("cover degree is below the stratum bound")]
    CoverDegreeLow,
    #[error(transparent)]
    Field(#[from] FieldError),
}

/// A period character chi on a genus-g surface group, recorded by its values
/// on a symplectic basis, interleaved (chi(a1), chi(b1), ..., chi(ag), chi(bg)).
/// Real and imaginary parts of every value lie in a single quadratic field.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodVector {
    genus: usize,
    d: u64,
    entries: Vec<PlanePoint>,
}

impl PeriodVector {
    pub fn new(entries: Vec<PlanePoint>) -> Result<Self, ChiError> {
        if entries.len() % 2 != 0 {
            return Err(ChiError::Length);
        }
        let genus = entries.len() / 2;
        if genus < 2 {
            return Err(ChiError::GenusTooSmall);
        }
        let mut d = 1u64;
        for p in &entries {
            for part in [&p.re, &p.im] {
                d = join_radicands(d, part.radicand()).ok_or(ChiError::MixedContexts)?;
            }
        }
        Ok(PeriodVector { genus, d, entries })
    }

    pub fn genus(&self) -> usize {
        self.genus
    }

    /// Radicand of the joint quadratic context (1 when all periods are rational).
    pub fn radicand(&self) -> u64 {
        self.d
    }

    pub fn entries(&self) -> &[PlanePoint] {
        &self.entries
    }

    /// chi(a_i) for the 1-indexed handle i.
    pub fn a(&self, i: usize) -> &PlanePoint {
        &self.entries[2 * (i - 1)]
    }

    /// chi(b_i) for the 1-indexed handle i.
    pub fn b(&self, i: usize) -> &PlanePoint {
        &self.entries[2 * (i - 1) + 1]
    }

    pub fn from_ints(pairs: &[(i64, i64)]) -> Result<Self, ChiError> {
        PeriodVector::new(
            pairs
                .iter()
                .map(|&(x, y)| PlanePoint::from_ints(x, y))
                .collect(),
        )
    }
}

impl fmt::Display for PeriodVector {
    /// Text format: a header `genus <g> d <d>`, then one period per line.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "genus {} d {}", self.genus, self.d)?;
        for (i, p) in self.entries.iter().enumerate() {
            write!(f, "{}", p)?;
            if i + 1 < self.entries.len() {
                writeln!(f)?;
            }
        }
        Ok(())
    }
}

impl FromStr for PeriodVector {
    type Err = ChiError;

    fn from_str(s: &str) -> Result<Self, ChiError> {
        let mut lines = s.lines().filter(|l| !l.trim().is_empty());
        let header = lines
            .next()
            .ok_or_else(|| ChiError::BadLiteral("empty input".into()))?;
        let tok: Vec<&str> = header.split_whitespace().collect();
        let bad = |msg: &str| ChiError::BadLiteral(msg.into());
        if tok.len() < 2 || tok[0] != "genus" {
            return Err(bad("header must start with `genus <g>`"));
        }
        let genus: usize = tok[1].parse().map_err(|_| bad("bad genus"))?;
        let claimed_d: u64 = match tok.len() {
            2 => 1,
            4 if tok[2] == "d" => tok[3].parse().map_err(|_| bad("bad radicand"))?,
            _ => return Err(bad("header must be `genus <g>` or `genus <g> d <d>`")),
        };
        let mut entries = Vec::with_capacity(2 * genus);
        for line in lines {
            entries.push(
                line.trim()
                    .parse::<PlanePoint>()
                    .map_err(|e| ChiError::BadLiteral(e.to_string()))?,
            );
        }
        if entries.len() != 2 * genus {
            return Err(ChiError::Length);
        }
        let v = PeriodVector::new(entries)?;
        if join_radicands(claimed_d, v.d).is_none() {
            return Err(ChiError::MixedContexts);
        }
        Ok(v)
    }
}

/// A singularity partition: cone angle orders n_1 <= ... <= n_k with
/// sum 2g - 2, prescribing zeros of order n_j (cone angle 2 pi (n_j + 1)).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    parts: Vec<u32>,
}

impl Partition {
    pub fn new(mut parts: Vec<u32>) -> Result<Self, ChiError> {
        if parts.is_empty() || parts.iter().any(|&n| n == 0) {
            return Err(ChiError::BadLiteral(
                "partition parts must be positive".into(),
            ));
        }
        parts.sort_unstable();
        let total: u32 = parts.iter().sum();
        if total % 2 != 0 || total < 2 {
            return Err(ChiError::BadLiteral(
                "partition must sum to 2g - 2 for some genus g >= 2".into(),
            ));
        }
        Ok(Partition { parts })
    }

    pub fn parts(&self) -> &[u32] {
        &self.parts
    }

    pub fn genus(&self) -> usize {
        (self.parts.iter().sum::<u32>() as usize + 2) / 2
    }

    /// The largest part n_k.
    pub fn top(&self) -> u32 {
        *self.parts.last().unwrap()
    }

    /// Every partition of 2g - 2 with all parts positive, sorted ascending.
    pub fn enumerate(genus: usize) -> Vec<Partition> {
        fn rec(remaining: u32, min: u32, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
            if remaining == 0 {
                out.push(cur.clone());
                return;
            }
            for next in min..=remaining {
                cur.push(next);
                rec(remaining - next, next, cur, out);
                cur.pop();
            }
        }
        let mut raw = Vec::new();
        rec(2 * genus as u32 - 2, 1, &mut Vec::new(), &mut raw);
        raw.into_iter()
            .map(|parts| Partition { parts })
            .collect()
    }
}

impl fmt::Display for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, p) in self.parts.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{}", p)?;
        }
        Ok(())
    }
}

impl FromStr for Partition {
    type Err = ChiError;

    fn from_str(s: &str) -> Result<Self, ChiError> {
        let parts: Result<Vec<u32>, _> = s
            .split(',')
            .map(|t| t.trim().parse::<u32>())
            .collect();
        Partition::new(parts.map_err(|_| ChiError::BadLiteral("bad partition".into()))?)
    }
}

/// The translation-invariant volume vol(chi) = sum_i Im(chi(a_i) conj(chi(b_i))),
/// i.e. the sum of the handle determinants.
pub fn volume(chi: &PeriodVector) -> QuadElem {
    let mut v = QuadElem::zero();
    for i in 1..=chi.genus() {
        v = &v + &det2(chi.a(i), chi.b(i));
    }
    v
}

/// How the image subgroup chi(Gamma) sits inside the plane.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ImageClass {
    /// The zero subgroup.
    Trivial,
    /// Infinite cyclic inside a real line.
    LineDiscrete,
    /// Rank two inside a real line, hence dense in it.
    LineDense,
    /// A rank-two lattice spanning the plane.
    Lattice,
    /// Rank at least three spanning the plane, hence dense in it.
    PlaneDense,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImageGroupReport {
    /// Rank of chi(Gamma) as an abstract finitely generated abelian group.
    pub rank: usize,
    pub class: ImageClass,
    /// For the lattice class: a reduced, positively oriented basis.
    pub lattice_basis: Option<(PlanePoint, PlanePoint)>,
    /// For the lattice class: the covolume det2 of the basis.
    pub covolume: Option<QuadElem>,
}

/// Rational coordinates of a plane point over the basis {1, sqrt d} x {1, i}.
fn coords4(p: &PlanePoint) -> [BigRational; 4] {
    [
        p.re.rational_part().clone(),
        p.re.surd_part().clone(),
        p.im.rational_part().clone(),
        p.im.surd_part().clone(),
    ]
}

/// Row Hermite normal form over the integers: returns a canonical basis of
/// the row span (pivots positive, entries above pivots reduced).
fn integer_row_basis(mut rows: Vec<Vec<BigInt>>, width: usize) -> Vec<Vec<BigInt>> {
    rows.retain(|r| r.iter().any(|x| !x.is_zero()));
    let mut pivot = 0usize;
    for col in 0..width {
        if pivot == rows.len() {
            break;
        }
        loop {
            let mut best: Option<usize> = None;
            for (i, row) in rows.iter().enumerate().skip(pivot) {
                if row[col].is_zero() {
                    continue;
                }
                if best.is_none_or(|b| row[col].abs() < rows[b][col].abs()) {
                    best = Some(i);
                }
            }
            let Some(best) = best else { break };
            rows.swap(pivot, best);
            let mut remaining = false;
            for i in pivot + 1..rows.len() {
                if rows[i][col].is_zero() {
                    continue;
                }
                let q = rows[i][col].div_floor(&rows[pivot][col]);
                if !q.is_zero() {
                    for c in 0..width {
                        let s = &rows[i][c] - &q * &rows[pivot][c];
                        rows[i][c] = s;
                    }
                }
                if !rows[i][col].is_zero() {
                    remaining = true;
                }
            }
            if !remaining {
                break;
            }
        }
        if !rows[pivot][col].is_zero() {
            if rows[pivot][col].is_negative() {
                for c in 0..width {
                    rows[pivot][c] = -rows[pivot][c].clone();
                }
            }
            for i in 0..pivot {
                let q = rows[i][col].div_floor(&rows[pivot][col]);
                if !q.is_zero() {
                    for c in 0..width {
                        let s = &rows[i][c] - &q * &rows[pivot][c];
                        rows[i][c] = s;
                    }
                }
            }
            pivot += 1;
        }
    }
    rows.truncate(pivot);
    rows
}

/// Computes the rank of chi(Gamma) and classifies its closure in the plane.
pub fn image_group(chi: &PeriodVector) -> ImageGroupReport {
    let d = chi.radicand();
    let nonzero: Vec<&PlanePoint> = chi.entries().iter().filter(|p| !p.is_zero()).collect();
    if nonzero.is_empty() {
        return ImageGroupReport {
            rank: 0,
            class: ImageClass::Trivial,
            lattice_basis: None,
            covolume: None,
        };
    }

    // Integerize the rational coordinates over {1, sqrt d} x {1, i}.
    let coords: Vec<[BigRational; 4]> = chi.entries().iter().map(coords4).collect();
    let mut denom = BigInt::one();
    for row in &coords {
        for x in row {
            denom = denom.lcm(x.denom());
        }
    }
    let int_rows: Vec<Vec<BigInt>> = coords
        .iter()
        .map(|row| {
            row.iter()
                .map(|x| x.numer() * (&denom / x.denom()))
                .collect()
        })
        .collect();
    let basis = integer_row_basis(int_rows, 4);
    let rank = basis.len();

    let collinear = {
        let mut yes = true;
        'outer: for i in 0..nonzero.len() {
            for j in i + 1..nonzero.len() {
                if det2(nonzero[i], nonzero[j]).qsign() != 0 {
                    yes = false;
                    break 'outer;
                }
            }
        }
        yes
    };

    if collinear {
        let class = if rank == 1 {
            ImageClass::LineDiscrete
        } else {
            ImageClass::LineDense
        };
        return ImageGroupReport {
            rank,
            class,
            lattice_basis: None,
            covolume: None,
        };
    }

    if rank >= 3 {
        return ImageGroupReport {
            rank,
            class: ImageClass::PlaneDense,
            lattice_basis: None,
            covolume: None,
        };
    }

    // Rank two, not collinear: an honest lattice. Recover a plane basis from
    // the integer row basis and reduce it.
    debug_assert_eq!(rank, 2);
    let denom_q = BigRational::from(denom.clone());
    let to_point = |row: &Vec<BigInt>| -> PlanePoint {
        let part = |p: &BigInt, q: &BigInt| {
            QuadElem::new(
                BigRational::from(p.clone()) / &denom_q,
                BigRational::from(q.clone()) / &denom_q,
                d,
            )
        };
        PlanePoint::new(part(&row[0], &row[1]), part(&row[2], &row[3]))
    };
    let mut b1 = to_point(&basis[0]);
    let mut b2 = to_point(&basis[1]);
    if det2(&b1, &b2).qsign() < 0 {
        b2 = -&b2;
    }
    let (_, r1, r2) = gauss_reduce(&b1, &b2).expect("rank-two image has a plane basis");
    b1 = r1;
    b2 = r2;
    let covol = det2(&b1, &b2);
    debug_assert!(covol.qsign() > 0);
    ImageGroupReport {
        rank: 2,
        class: ImageClass::Lattice,
        lattice_basis: Some((b1, b2)),
        covolume: Some(covol),
    }
}

/// Applies a symplectic base change: chi' = m chi (column convention).
pub fn apply_sp(m: &SpMatrix, chi: &PeriodVector) -> Result<PeriodVector, ChiError> {
    if m.dim() != 2 * chi.genus() {
        return Err(ChiError::Dimension);
    }
    let n = m.dim();
    let mut out = Vec::with_capacity(n);
    for r in 0..n {
        let mut acc = PlanePoint::zero();
        for c in 0..n {
            let k = m.entry(r, c);
            if k.is_zero() {
                continue;
            }
            let kq = QuadElem::from_rational(BigRational::from(k.clone()));
            acc = &acc + &chi.entries()[c].scale(&kq);
        }
        out.push(acc);
    }
    PeriodVector::new(out)
}

/// Applies an orientation-preserving linear rescaling to every period.
pub fn apply_gl(a: &GlPlus, chi: &PeriodVector) -> Result<PeriodVector, ChiError> {
    PeriodVector::new(chi.entries().iter().map(|p| a.apply(p)).collect())
}

/// Outcome of the realizability decision.
#[derive(Debug, Clone, PartialEq)]
pub enum Verdict {
    Realizable,
    NotRealizable(Reason),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Reason {
    /// vol(chi) <= 0; no translation surface can have this signed area.
    NonpositiveVolume { volume: QuadElem },
    /// The image is a lattice and the volume is below (n_k + 1) covolume.
    LatticeDeficit {
        required: QuadElem,
        volume: QuadElem,
        covolume: QuadElem,
    },
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::Realizable => write!(f, "realizable"),
            Verdict::NotRealizable(r) => write!(f, "not realizable: {}", r),
        }
    }
}

impl fmt::Display for Reason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Reason::NonpositiveVolume { volume } => {
                write!(f, "volume {} is not positive", volume)
            }
            Reason::LatticeDeficit {
                required,
                volume,
                covolume,
            } => write!(
                f,
                "lattice image with covolume {}: volume {} is below the required {}",
                covolume, volume, required
            ),
        }
    }
}

/// Decides whether chi arises from an abelian differential with singularity
/// data `partition`. Exact in all branches.
pub fn decide(chi: &PeriodVector, partition: &Partition) -> Result<Verdict, ChiError> {
    if partition.genus() != chi.genus() {
        return Err(ChiError::GenusMismatch);
    }
    let vol = volume(chi);
    if vol.qsign() <= 0 {
        return Ok(Verdict::NotRealizable(Reason::NonpositiveVolume {
            volume: vol,
        }));
    }
    let report = image_group(chi);
    if report.class == ImageClass::Lattice {
        let covol = report.covolume.unwrap();
        let required = &covol * &QuadElem::from_int(i64::from(partition.top()) + 1);
        if (&vol - &required).qsign() < 0 {
            return Ok(Verdict::NotRealizable(Reason::LatticeDeficit {
                required,
                volume: vol,
                covolume: covol,
            }));
        }
    }
    Ok(Verdict::Realizable)
}

/// Decides realizability with singularity data left free: the binding case
/// is the partition (1, ..., 1), whose threshold is twice the covolume.
pub fn haupt_decide(chi: &PeriodVector) -> Verdict {
    let ones = Partition::new(vec![1; 2 * chi.genus() - 2]).unwrap();
    decide(chi, &ones).expect("genus always matches")
}

/// The branched torus cover encoded by a lattice-image certificate: the
/// surface covers the quotient torus of the image lattice, branched over
/// one point with the certificate's singularity orders.
#[derive(Debug, Clone)]
pub struct CoverData {
    /// Number of sheets: volume divided by the lattice covolume.
    pub degree: BigInt,
    /// Branching orders over the single branch point.
    pub branch_orders: Partition,
    /// The image lattice the surface covers.
    pub sublattice: ImageGroupReport,
}

/// Extracts the branched-cover data from a certificate whose original
/// character has lattice image: degree = volume / covolume, which must be
/// an exact integer of size at least one more than the top order.
pub fn cover_data(
    cert: &crate::builder::RealizationCertificate,
) -> Result<CoverData, ChiError> {
    let report = image_group(&cert.chi_original);
    if report.class != ImageClass::Lattice {
        return Err(ChiError::NotLattice);
    }
    let covol = report.covolume.clone().expect("lattice image has a covolume");
    let vol = volume(&cert.chi_original);
    let ratio = (&vol / &covol)
        .to_rational()
        .ok_or(ChiError::RaggedCover)?;
    if !ratio.is_integer() {
        return Err(ChiError::RaggedCover);
    }
    let degree = ratio.to_integer();
    if degree < BigInt::from(cert.partition.top()) + 1 {
        return Err(ChiError::CoverDegreeLow);
    }
    Ok(CoverData {
        degree,
        branch_orders: cert.partition.clone(),
        sublattice: report,
    })
}
