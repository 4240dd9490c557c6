//! Builders for characters whose image group is a plane lattice.
//!
//! After rescaling the lattice to Z + iZ the normal form reads
//! `(p, i, m_2, 0, ..., m_g, 0)` with integer volume `p`. The surface lives
//! in the torus `[0, p] x [0, 1]`: each singularity group contributes a row
//! of horizontal slits at its own height, re-glued cyclically chain by
//! chain, and the strips between consecutive rows compile directly to
//! rectangles. Within a chain, consecutive slits realize one handle each;
//! their left endpoints sit `m_j` apart, which is where the trailing
//! entries of the normal form come from.

use std::collections::BTreeMap;

use num_bigint::BigInt;

use crate::chi::{Partition, PeriodVector};
use crate::field::{PlanePoint, QuadElem};
use crate::surface::{EdgeRef, MarkedCurve, TranslationSurface};

use super::diagram::{Slit, SlitDiagram, SlitGluing};
use super::{assemble_certificate, BuildError, RealizationCertificate};

/// One singularity group of the lattice construction.
///
/// Two zeros of equal order are produced together by a single chain of
/// disjoint half-length slits; a leftover even order gets its own chain of
/// unit slits; leftover odd orders pair up, the larger one adjusted by a
/// second chain touching the first.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum LatticeGroup {
    EqualPair(u32),
    EvenSingle(u32),
    OddPair(u32, u32),
}

/// Decomposes a partition into lattice construction groups: equal pairs
/// first (ascending), then leftover even orders (ascending), then leftover
/// odd orders paired up (ascending). The total order sum being even makes
/// the leftover odd count even.
pub(crate) fn split_groups(part: &Partition) -> Vec<LatticeGroup> {
    let mut groups = Vec::new();
    let mut leftover_even = Vec::new();
    let mut leftover_odd = Vec::new();
    let parts = part.parts();
    let mut i = 0;
    while i < parts.len() {
        let v = parts[i];
        let mut count = 1;
        while i + count < parts.len() && parts[i + count] == v {
            count += 1;
        }
        for _ in 0..count / 2 {
            groups.push(LatticeGroup::EqualPair(v));
        }
        if count % 2 == 1 {
            if v % 2 == 0 {
                leftover_even.push(v);
            } else {
                leftover_odd.push(v);
            }
        }
        i += count;
    }
    groups.extend(leftover_even.into_iter().map(LatticeGroup::EvenSingle));
    assert!(
        leftover_odd.len() % 2 == 0,
        "an even order sum leaves an even number of unpaired odd parts"
    );
    for pair in leftover_odd.chunks(2) {
        groups.push(LatticeGroup::OddPair(pair[0], pair[1]));
    }
    groups
}

fn group_m_entries(group: &LatticeGroup) -> Vec<u32> {
    match *group {
        LatticeGroup::EqualPair(n) => vec![1; n as usize],
        LatticeGroup::EvenSingle(n) => {
            let c = n / 2 + 1;
            let mut m = vec![1];
            m.extend(vec![2; (c - 2) as usize]);
            m
        }
        LatticeGroup::OddPair(a, b) => {
            let c = (b - a) / 2 + 1;
            let mut m = vec![1; a as usize];
            m.push(1);
            m.extend(vec![2; (c - 2) as usize]);
            m
        }
    }
}

/// The trailing a-periods `(m_2, ..., m_g)` of the lattice normal form for
/// this partition: the left-endpoint gaps of consecutive slits, group by
/// group. The leading entry is always 1.
pub fn lattice_m_vector(part: &Partition) -> Vec<u32> {
    let m: Vec<u32> = split_groups(part)
        .iter()
        .flat_map(group_m_entries)
        .collect();
    debug_assert_eq!(m.len() + 1, part.genus());
    m
}

/// A row of equal-length slits glued cyclically: upper bank of slit `i` to
/// the lower bank of slit `i+1`.
#[derive(Debug, Clone)]
struct ChainLayout {
    lefts: Vec<QuadElem>,
    len: QuadElem,
}

impl ChainLayout {
    fn rights(&self) -> Vec<QuadElem> {
        self.lefts.iter().map(|l| l + &self.len).collect()
    }
}

/// All chains sharing one horizontal cut circle.
#[derive(Debug, Clone)]
struct Circle {
    chains: Vec<ChainLayout>,
}

fn q(n: i64) -> QuadElem {
    QuadElem::from_int(n)
}

/// Unit-slit offsets 0, 1, 3, 5, ..., 2c-3: the first two touch, the rest
/// leave gaps of one.
fn adjusted_offsets(c: u32) -> Vec<u32> {
    let mut offs = vec![0];
    let mut o = 1;
    while offs.len() < c as usize {
        offs.push(o);
        o += 2;
    }
    offs
}

fn group_circle(group: &LatticeGroup) -> Circle {
    let x0 = QuadElem::ratio(1, 4);
    let half = QuadElem::ratio(1, 2);
    match *group {
        LatticeGroup::EqualPair(n) => Circle {
            chains: vec![ChainLayout {
                lefts: (0..=n as i64).map(|j| &x0 + &q(j)).collect(),
                len: half,
            }],
        },
        LatticeGroup::EvenSingle(n) => {
            let c = n / 2 + 1;
            Circle {
                chains: vec![ChainLayout {
                    lefts: adjusted_offsets(c)
                        .iter()
                        .map(|&o| &x0 + &q(o as i64))
                        .collect(),
                    len: QuadElem::one(),
                }],
            }
        }
        LatticeGroup::OddPair(a, b) => {
            let c = (b - a) / 2 + 1;
            let base = &(&x0 + &q(a as i64)) + &half;
            Circle {
                chains: vec![
                    ChainLayout {
                        lefts: (0..=a as i64).map(|j| &x0 + &q(j)).collect(),
                        len: half,
                    },
                    ChainLayout {
                        lefts: adjusted_offsets(c)
                            .iter()
                            .map(|&o| &base + &q(o as i64))
                            .collect(),
                        len: QuadElem::one(),
                    },
                ],
            }
        }
    }
}

/// The slit rows as a diagram, for the exact non-overlap validation.
fn layout_diagram(p: &QuadElem, circles: &[Circle]) -> Result<SlitDiagram, BuildError> {
    let g1 = circles.len() as i64 + 1;
    let mut diagram = SlitDiagram::new(
        PlanePoint::new(p.clone(), QuadElem::zero()),
        PlanePoint::new(QuadElem::zero(), QuadElem::one()),
    )?;
    for (t, circle) in circles.iter().enumerate() {
        let h = QuadElem::ratio(t as i64 + 1, g1);
        for chain in &circle.chains {
            let members: Vec<usize> =
                (0..chain.lefts.len()).map(|i| diagram.slits.len() + i).collect();
            let role = SlitGluing::Chain { members };
            for l in &chain.lefts {
                let anchor = PlanePoint::new(l.clone(), h.clone());
                let vector = PlanePoint::new(chain.len.clone(), QuadElem::zero());
                diagram.push_slit(Slit { anchor, vector }, role.clone())?;
            }
        }
    }
    Ok(diagram)
}

/// Compiles the slit rows to rectangles with exact pairings and reads off
/// the marked basis.
///
/// Cutting along the rows and the horizontal circle y = 0 leaves one
/// rectangular strip per level. Bottom and top edges are subdivided at every
/// slit endpoint of the adjacent circle; a gap piece is re-glued to the
/// matching piece across the circle, a slit piece to the lower bank of the
/// next slit in its chain.
fn build_strip_surface(
    p: &QuadElem,
    circles: &[Circle],
) -> Result<(TranslationSurface, Vec<MarkedCurve>), BuildError> {
    let g_count = circles.len();
    let denom = g_count as i64 + 1;
    let heights: Vec<QuadElem> = (0..=denom).map(|t| QuadElem::ratio(t, denom)).collect();

    // Stations and intervals per circle (1-indexed circles 1..=G).
    struct CircleData {
        intervals: Vec<(QuadElem, QuadElem)>,
        // (chain, slit) -> interval index
        slit_interval: Vec<Vec<usize>>,
        // interval index -> (chain, slit) when a slit occupies it
        occupant: Vec<Option<(usize, usize)>>,
    }
    let mut data = Vec::with_capacity(g_count);
    for circle in circles {
        let mut stations: Vec<QuadElem> = Vec::new();
        for chain in &circle.chains {
            stations.extend(chain.lefts.iter().cloned());
            stations.extend(chain.rights());
        }
        stations.sort();
        stations.dedup();
        for s in &stations {
            if s.qsign() <= 0 || (p - s).qsign() <= 0 {
                return Err(BuildError::Internal(format!(
                    "slit endpoint {} leaves the open interval (0, {})",
                    s, p
                )));
            }
        }
        let mut cuts = vec![QuadElem::zero()];
        cuts.extend(stations);
        cuts.push(p.clone());
        let intervals: Vec<(QuadElem, QuadElem)> = cuts
            .windows(2)
            .map(|w| (w[0].clone(), w[1].clone()))
            .collect();
        let index_of: BTreeMap<QuadElem, usize> = intervals
            .iter()
            .enumerate()
            .map(|(i, (l, _))| (l.clone(), i))
            .collect();
        let mut occupant = vec![None; intervals.len()];
        let mut slit_interval = Vec::new();
        for (ci, chain) in circle.chains.iter().enumerate() {
            let mut ids = Vec::new();
            for (si, l) in chain.lefts.iter().enumerate() {
                let idx = *index_of.get(l).ok_or_else(|| {
                    BuildError::Internal("slit endpoint missing from stations".into())
                })?;
                let (il, ir) = &intervals[idx];
                if il != l || ir != &(l + &chain.len) {
                    return Err(BuildError::Internal(
                        "a station falls strictly inside a slit".into(),
                    ));
                }
                if occupant[idx].is_some() {
                    return Err(BuildError::Internal("two slits share an interval".into()));
                }
                occupant[idx] = Some((ci, si));
                ids.push(idx);
            }
            slit_interval.push(ids);
        }
        data.push(CircleData {
            intervals,
            slit_interval,
            occupant,
        });
    }

    // Strip polygons. Strip s runs from heights[s] to heights[s+1]; its
    // bottom is circle s (whole for s = 0) and its top circle s+1 (whole
    // for s = G).
    let whole = vec![(QuadElem::zero(), p.clone())];
    let bottom_of = |s: usize| -> &[(QuadElem, QuadElem)] {
        if s == 0 {
            &whole
        } else {
            &data[s - 1].intervals
        }
    };
    let top_of = |s: usize| -> &[(QuadElem, QuadElem)] {
        if s == g_count {
            &whole
        } else {
            &data[s].intervals
        }
    };
    let mut polygons = Vec::with_capacity(g_count + 1);
    let mut nb = Vec::with_capacity(g_count + 1);
    let mut nt = Vec::with_capacity(g_count + 1);
    for s in 0..=g_count {
        let dy = &heights[s + 1] - &heights[s];
        let bot = bottom_of(s);
        let top = top_of(s);
        let mut edges: Vec<PlanePoint> = Vec::new();
        for (l, r) in bot {
            edges.push(PlanePoint::new(r - l, QuadElem::zero()));
        }
        edges.push(PlanePoint::new(QuadElem::zero(), dy.clone()));
        for (l, r) in top.iter().rev() {
            edges.push(PlanePoint::new(-&(r - l), QuadElem::zero()));
        }
        edges.push(PlanePoint::new(QuadElem::zero(), -&dy));
        nb.push(bot.len());
        nt.push(top.len());
        polygons.push(edges);
    }
    // Directed edge references. Circle t separates strip t-1 (below) from
    // strip t (above); its interval i appears as bottom piece i of the strip
    // above and as a reversed top piece of the strip below.
    let bot_ref = |t: usize, i: usize| EdgeRef::new(t, i);
    let top_ref = |t: usize, i: usize| {
        let s = t - 1;
        EdgeRef::new(s, nb[s] + 1 + (nt[s] - 1 - i))
    };
    let right_ref = |s: usize| EdgeRef::new(s, nb[s]);
    let left_ref = |s: usize| EdgeRef::new(s, nb[s] + nt[s] + 1);

    let mut pairs: Vec<(EdgeRef, EdgeRef)> = Vec::new();
    for s in 0..=g_count {
        pairs.push((right_ref(s), left_ref(s)));
    }
    // The seam y = 0 ~ y = 1.
    pairs.push((EdgeRef::new(0, 0), EdgeRef::new(g_count, nb[g_count] + 1)));
    for (ti, cd) in data.iter().enumerate() {
        let t = ti + 1;
        for i in 0..cd.intervals.len() {
            match cd.occupant[i] {
                None => pairs.push((bot_ref(t, i), top_ref(t, i))),
                Some((ci, si)) => {
                    let chain = &cd.slit_interval[ci];
                    let succ = chain[(si + 1) % chain.len()];
                    pairs.push((bot_ref(t, i), top_ref(t, succ)));
                }
            }
        }
    }

    let surface = TranslationSurface::new(polygons, &pairs)?;

    // Marked basis: the seam circle and the right-edge column for the first
    // handle; per chain handle, the upper-bank run between consecutive left
    // endpoints, and for its partner the spliced suffix of neck loops. A
    // single neck loop, descending through one cut and ascending through the
    // next, crosses the runs of both adjacent handles, so the partner of
    // handle q must aggregate all neck loops from q to the chain's end: the
    // crossings telescope away and only the pairing with a_q survives.
    let mut marked = Vec::new();
    marked.push(MarkedCurve::new(vec![EdgeRef::new(0, 0)]));
    marked.push(MarkedCurve::new((0..=g_count).map(right_ref).collect()));
    let tails = surface.tail_ids();
    for (ti, cd) in data.iter().enumerate() {
        let t = ti + 1;
        for chain in &cd.slit_interval {
            let m = chain.len();
            let necks: Vec<Vec<EdgeRef>> = (0..m - 1)
                .map(|qi| {
                    vec![
                        bot_ref(t, chain[qi]),
                        top_ref(t, chain[(qi + 2) % m]),
                    ]
                })
                .collect();
            for qi in 0..m - 1 {
                let from = chain[qi];
                let to = chain[qi + 1];
                marked.push(MarkedCurve::new((from..to).map(|i| bot_ref(t, i)).collect()));
                let spliced = splice_walks(&surface, &tails, &necks[qi..]).ok_or_else(|| {
                    BuildError::Internal("neck loops of one chain do not connect".into())
                })?;
                marked.push(MarkedCurve::new(spliced));
            }
        }
    }

    Ok((surface, marked))
}

/// Merges closed edge walks into one closed walk through all of them, by
/// repeatedly splicing a rotated walk in at a shared vertex.
fn splice_walks(
    surface: &TranslationSurface,
    tails: &[usize],
    walks: &[Vec<EdgeRef>],
) -> Option<Vec<EdgeRef>> {
    let tail = |e: EdgeRef| surface.edge_tail_id(tails, e);
    let mut merged = walks[0].clone();
    let mut rest: Vec<&Vec<EdgeRef>> = walks[1..].iter().collect();
    while !rest.is_empty() {
        let mut spliced_at = None;
        'search: for (wi, w) in rest.iter().enumerate() {
            for pos in 0..merged.len() {
                let v = tail(merged[pos]);
                for rot in 0..w.len() {
                    if tail(w[rot]) == v {
                        spliced_at = Some((wi, pos, rot));
                        break 'search;
                    }
                }
            }
        }
        let (wi, pos, rot) = spliced_at?;
        let w = rest.remove(wi);
        let mut out = merged[..pos].to_vec();
        out.extend(w[rot..].iter().chain(&w[..rot]).cloned());
        out.extend_from_slice(&merged[pos..]);
        merged = out;
    }
    Some(merged)
}

/// Checks the exact lattice normal form `(p, i, m_2, 0, ..., m_g, 0)` with
/// integer `p >= min_p`, returning `p`.
fn check_lattice_form(
    chi_prime: &PeriodVector,
    m: &[u32],
    min_p: u32,
) -> Result<QuadElem, BuildError> {
    let g = chi_prime.genus();
    if g != m.len() + 1 {
        return Err(BuildError::Precondition(
            "normal form length does not match the partition",
        ));
    }
    if chi_prime.b(1) != &PlanePoint::from_ints(0, 1) {
        return Err(BuildError::Precondition("b_1 period must be i"));
    }
    let a1 = chi_prime.a(1);
    if !a1.im.is_zero() {
        return Err(BuildError::Precondition("a_1 period must be real"));
    }
    let p_rat = a1
        .re
        .to_rational()
        .ok_or(BuildError::Precondition("a_1 period must be rational"))?;
    if !p_rat.is_integer() {
        return Err(BuildError::Precondition("a_1 period must be an integer"));
    }
    let p_int: BigInt = p_rat.to_integer();
    if p_int < BigInt::from(min_p) {
        return Err(BuildError::Precondition(
            "volume is below the lattice construction bound",
        ));
    }
    for (j, &mj) in m.iter().enumerate() {
        let handle = j + 2;
        if chi_prime.a(handle) != &PlanePoint::from_ints(mj as i64, 0) {
            return Err(BuildError::Precondition(
                "trailing a-period does not match the construction",
            ));
        }
        if !chi_prime.b(handle).is_zero() {
            return Err(BuildError::Precondition("trailing b-period must vanish"));
        }
    }
    Ok(a1.re.clone())
}

fn build_from_groups(
    chi_prime: &PeriodVector,
    part: &Partition,
    groups: &[LatticeGroup],
    p: &QuadElem,
) -> Result<RealizationCertificate, BuildError> {
    let circles: Vec<Circle> = groups.iter().map(group_circle).collect();
    layout_diagram(p, &circles)?;
    let (surface, marked) = build_strip_surface(p, &circles)?;
    assemble_certificate(chi_prime, part, surface, marked)
}

/// Builds a surface in the minimal stratum `(2g-2)` for a lattice normal
/// form `(p, i, 1, 0, 2, 0, ..., 2, 0)` with integer `p >= 2g-1`: one row of
/// g unit slits at offsets 0, 1, 3, ..., 2g-3, glued cyclically, producing
/// a single cone point of angle `2π(2g-1)`.
pub fn build_lattice_minimal(
    chi_prime: &PeriodVector,
    g: usize,
) -> Result<RealizationCertificate, BuildError> {
    if g < 2 {
        return Err(BuildError::Precondition("genus must be at least 2"));
    }
    if chi_prime.genus() != g {
        return Err(BuildError::Precondition(
            "normal form genus does not match the request",
        ));
    }
    let n = 2 * (g as u32) - 2;
    let part = Partition::new(vec![n]).map_err(BuildError::Chi)?;
    let m = lattice_m_vector(&part);
    let p = check_lattice_form(chi_prime, &m, n + 1)?;
    build_from_groups(chi_prime, &part, &[LatticeGroup::EvenSingle(n)], &p)
}

/// Builds a surface in a stratum with at least two zeros for a lattice
/// normal form `(p, i, m_2, 0, ..., m_g, 0)` with `m = lattice_m_vector(part)`
/// and integer `p >= n_k + 1`.
pub fn build_lattice_multi(
    chi_prime: &PeriodVector,
    part: &Partition,
) -> Result<RealizationCertificate, BuildError> {
    if part.parts().len() < 2 {
        return Err(BuildError::Precondition(
            "the multi-zero builder needs at least two zeros",
        ));
    }
    if chi_prime.genus() != part.genus() {
        return Err(BuildError::Precondition(
            "normal form genus does not match the partition",
        ));
    }
    let m = lattice_m_vector(part);
    let p = check_lattice_form(chi_prime, &m, part.top() + 1)?;
    let groups = split_groups(part);
    build_from_groups(chi_prime, part, &groups, &p)
}
