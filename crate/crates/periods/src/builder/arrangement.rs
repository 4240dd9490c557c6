//! Exact planar arrangements on the unit square.
//!
//! The generic builders work in the coordinates of the base parallelogram,
//! where the base is the unit square and every slit is a segment strictly
//! inside it. Cutting the square along the slits alone would leave faces
//! with zero-width spikes, so from every slit endpoint an auxiliary segment
//! is drawn to the boundary; the auxiliary cuts are resealed by the edge
//! pairing afterwards and leave no trace on the surface. The arrangement of
//! boundary, slits and auxiliary segments is computed exactly: vertices are
//! segment endpoints and pairwise intersections, faces are traced through
//! sorted half-edge fans, and every kept face is a simple counterclockwise
//! polygon.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use crate::field::{det2, dot, norm_sq, PlanePoint, QuadElem};

use super::BuildError;

/// One slit to cut into the square, in unit-square coordinates.
///
/// `breaks` lists extra interior parameters in (0, 1) that must become
/// subdivision stations of the slit even when nothing crosses there; the
/// torus sheet glued across a slit uses them to keep both sides of the
/// gluing subdivided identically.
#[derive(Debug, Clone)]
pub(crate) struct SlitSpec {
    pub from: PlanePoint,
    pub to: PlanePoint,
    pub breaks: Vec<QuadElem>,
}

/// Where one directed face edge lives: `(face index, edge index)`.
pub(crate) type FaceRef = (usize, usize);

/// One directed edge of a traced face, as positions in the unit square.
#[derive(Debug, Clone)]
pub(crate) struct FaceEdge {
    pub from: PlanePoint,
    pub to: PlanePoint,
}

/// The two banks of one slit, subdivided at the same stations.
///
/// Piece `i` of either bank covers the parameter interval from
/// `stations[i]` to `stations[i + 1]`; left pieces are directed along the
/// slit vector, right pieces against it.
#[derive(Debug, Clone)]
pub(crate) struct SlitBanks {
    pub stations: Vec<QuadElem>,
    pub left: Vec<FaceRef>,
    pub right: Vec<FaceRef>,
}

/// A square cut into simple faces, with every edge located and classified.
///
/// Boundary pieces are listed station-aligned: `bottom[i]` and `top[i]`
/// cover the same x interval (mirror stations are inserted on the opposite
/// side for every boundary vertex), `left_col[i]` and `right_col[i]` the
/// same y interval. Bottom and right pieces are directed in the positive
/// coordinate direction, top and left pieces in the negative one.
#[derive(Debug, Clone)]
pub(crate) struct SheetComplex {
    pub faces: Vec<Vec<FaceEdge>>,
    pub aux_pairs: Vec<(FaceRef, FaceRef)>,
    pub bottom: Vec<FaceRef>,
    pub top: Vec<FaceRef>,
    pub left_col: Vec<FaceRef>,
    pub right_col: Vec<FaceRef>,
    pub slits: Vec<SlitBanks>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    Boundary,
    Slit(usize),
    Aux,
}

#[derive(Debug, Clone)]
struct Seg {
    a: PlanePoint,
    b: PlanePoint,
    kind: Kind,
}

fn q1() -> QuadElem {
    QuadElem::one()
}

fn in_unit_interval(x: &QuadElem) -> bool {
    x.qsign() >= 0 && (&q1() - x).qsign() >= 0
}

fn strictly_inside(p: &PlanePoint) -> bool {
    p.re.qsign() > 0
        && p.im.qsign() > 0
        && (&q1() - &p.re).qsign() > 0
        && (&q1() - &p.im).qsign() > 0
}

fn point_key(p: &PlanePoint) -> (QuadElem, QuadElem) {
    (p.re.clone(), p.im.clone())
}

/// Whether `x` lies on the closed segment `[a, b]`.
fn on_segment(a: &PlanePoint, b: &PlanePoint, x: &PlanePoint) -> bool {
    det2(&(x - a), &(b - a)).is_zero() && dot(&(x - a), &(x - b)).qsign() <= 0
}

/// The interior crossing point of two segments when they meet transversally
/// (shared endpoints included; parallel segments give nothing).
fn transversal_hit(
    a: &PlanePoint,
    b: &PlanePoint,
    c: &PlanePoint,
    d: &PlanePoint,
) -> Option<PlanePoint> {
    let r = b - a;
    let s = d - c;
    let denom = det2(&r, &s);
    if denom.is_zero() {
        return None;
    }
    let ca = c - a;
    let sp = &det2(&ca, &s) / &denom;
    let tp = &det2(&ca, &r) / &denom;
    if in_unit_interval(&sp) && in_unit_interval(&tp) {
        Some(a + &r.scale(&sp))
    } else {
        None
    }
}

/// Candidate directions for auxiliary segments, in preference order. The
/// list is long enough that some direction always avoids being positively
/// parallel to the few slits meeting any one endpoint.
fn aux_candidates() -> Vec<PlanePoint> {
    let mut v: Vec<(i64, i64)> = vec![(0, -1), (0, 1)];
    for &m in &[8, 4, 2, 1] {
        v.extend([(1, -m), (-1, m), (1, m), (-1, -m)]);
    }
    v.extend([(1, 0), (-1, 0)]);
    for p in 3..=64 {
        v.extend([(p, -1), (-p, 1), (p, 1), (-p, -1)]);
    }
    v.into_iter()
        .map(|(x, y)| PlanePoint::from_ints(x, y))
        .collect()
}

fn positively_parallel(u: &PlanePoint, v: &PlanePoint) -> bool {
    det2(u, v).is_zero() && dot(u, v).qsign() > 0
}

/// First boundary point of the square hit by the ray `p + t d`, `t > 0`.
fn ray_to_boundary(p: &PlanePoint, d: &PlanePoint) -> PlanePoint {
    let mut best: Option<QuadElem> = None;
    let mut consider = |t: QuadElem, hit_ok: bool| {
        if t.qsign() > 0 && hit_ok {
            let better = match &best {
                Some(b) => (&t - b).qsign() < 0,
                None => true,
            };
            if better {
                best = Some(t);
            }
        }
    };
    if d.re.qsign() != 0 {
        for target in [QuadElem::zero(), q1()] {
            let t = &(&target - &p.re) / &d.re;
            let y = &p.im + &(&t * &d.im);
            consider(t, in_unit_interval(&y));
        }
    }
    if d.im.qsign() != 0 {
        for target in [QuadElem::zero(), q1()] {
            let t = &(&target - &p.im) / &d.im;
            let x = &p.re + &(&t * &d.re);
            consider(t, in_unit_interval(&x));
        }
    }
    let t = best.expect("a ray from an interior point reaches the boundary");
    p + &d.scale(&t)
}

/// Counterclockwise angular order of nonzero directions, starting at the
/// positive x axis.
fn angle_cmp(a: &PlanePoint, b: &PlanePoint) -> Ordering {
    fn band(d: &PlanePoint) -> u8 {
        match (d.re.qsign(), d.im.qsign()) {
            (1, 0) => 0,
            (_, 1) => 1,
            (-1, 0) => 2,
            (_, -1) => 3,
            _ => unreachable!("direction must be nonzero"),
        }
    }
    let (ba, bb) = (band(a), band(b));
    if ba != bb {
        return ba.cmp(&bb);
    }
    match det2(a, b).qsign() {
        1 => Ordering::Less,
        -1 => Ordering::Greater,
        _ => Ordering::Equal,
    }
}

/// Cuts the unit square along the given slits (plus auxiliary segments) and
/// returns the traced face complex with every edge indexed.
pub(crate) fn build_sheet(slit_specs: &[SlitSpec]) -> Result<SheetComplex, BuildError> {
    for s in slit_specs {
        if (&s.to - &s.from).is_zero() {
            return Err(BuildError::Internal("zero-length slit".into()));
        }
        if !strictly_inside(&s.from) || !strictly_inside(&s.to) {
            return Err(BuildError::Internal(
                "slit endpoint on or outside the square".into(),
            ));
        }
    }

    // Segment soup: boundary, slits, one auxiliary ray per slit endpoint.
    let corners = [
        PlanePoint::from_ints(0, 0),
        PlanePoint::from_ints(1, 0),
        PlanePoint::from_ints(1, 1),
        PlanePoint::from_ints(0, 1),
    ];
    let mut segs: Vec<Seg> = vec![
        Seg {
            a: corners[0].clone(),
            b: corners[1].clone(),
            kind: Kind::Boundary,
        },
        Seg {
            a: corners[1].clone(),
            b: corners[2].clone(),
            kind: Kind::Boundary,
        },
        Seg {
            a: corners[3].clone(),
            b: corners[2].clone(),
            kind: Kind::Boundary,
        },
        Seg {
            a: corners[0].clone(),
            b: corners[3].clone(),
            kind: Kind::Boundary,
        },
    ];
    for (i, s) in slit_specs.iter().enumerate() {
        segs.push(Seg {
            a: s.from.clone(),
            b: s.to.clone(),
            kind: Kind::Slit(i),
        });
    }
    let mut incident: BTreeMap<(QuadElem, QuadElem), Vec<PlanePoint>> = BTreeMap::new();
    for s in slit_specs {
        let d = &s.to - &s.from;
        incident
            .entry(point_key(&s.from))
            .or_default()
            .push(d.clone());
        incident.entry(point_key(&s.to)).or_default().push(-&d);
    }
    let candidates = aux_candidates();
    for (key, dirs) in &incident {
        let origin = PlanePoint::new(key.0.clone(), key.1.clone());
        let dir = candidates
            .iter()
            .find(|c| !dirs.iter().any(|d| positively_parallel(c, d)))
            .ok_or_else(|| {
                BuildError::Internal("no auxiliary direction left at a slit endpoint".into())
            })?;
        let hit = ray_to_boundary(&origin, dir);
        segs.push(Seg {
            a: origin,
            b: hit,
            kind: Kind::Aux,
        });
    }

    // Vertices: endpoints, forced breaks, pairwise intersections, and the
    // mirror of every boundary vertex on the opposite side.
    let mut vertex_ids: BTreeMap<(QuadElem, QuadElem), usize> = BTreeMap::new();
    let mut vertices: Vec<PlanePoint> = Vec::new();
    let add_vertex = |p: PlanePoint,
                          vertex_ids: &mut BTreeMap<(QuadElem, QuadElem), usize>,
                          vertices: &mut Vec<PlanePoint>| {
        let key = point_key(&p);
        *vertex_ids.entry(key).or_insert_with(|| {
            vertices.push(p);
            vertices.len() - 1
        })
    };
    for s in &segs {
        add_vertex(s.a.clone(), &mut vertex_ids, &mut vertices);
        add_vertex(s.b.clone(), &mut vertex_ids, &mut vertices);
    }
    for s in slit_specs {
        let d = &s.to - &s.from;
        for t in &s.breaks {
            if t.qsign() <= 0 || (&q1() - t).qsign() <= 0 {
                return Err(BuildError::Internal(
                    "slit break parameter outside (0, 1)".into(),
                ));
            }
            add_vertex(&s.from + &d.scale(t), &mut vertex_ids, &mut vertices);
        }
    }
    for i in 0..segs.len() {
        for j in i + 1..segs.len() {
            let (si, sj) = (&segs[i], &segs[j]);
            if let Some(p) = transversal_hit(&si.a, &si.b, &sj.a, &sj.b) {
                add_vertex(p, &mut vertex_ids, &mut vertices);
            } else if det2(&(&si.b - &si.a), &(&sj.b - &sj.a)).is_zero()
                && det2(&(&sj.a - &si.a), &(&si.b - &si.a)).is_zero()
            {
                // Collinear on one line: vertices at every endpoint lying
                // inside the other segment, so overlaps split into identical
                // subsegments and get merged or rejected below.
                for p in [&sj.a, &sj.b] {
                    if on_segment(&si.a, &si.b, p) {
                        add_vertex((*p).clone(), &mut vertex_ids, &mut vertices);
                    }
                }
                for p in [&si.a, &si.b] {
                    if on_segment(&sj.a, &sj.b, p) {
                        add_vertex((*p).clone(), &mut vertex_ids, &mut vertices);
                    }
                }
            }
        }
    }
    let snapshot: Vec<PlanePoint> = vertices.clone();
    for p in snapshot {
        if p.im.qsign() == 0 {
            add_vertex(
                PlanePoint::new(p.re.clone(), q1()),
                &mut vertex_ids,
                &mut vertices,
            );
        }
        if (&p.im - &q1()).qsign() == 0 {
            add_vertex(
                PlanePoint::new(p.re.clone(), QuadElem::zero()),
                &mut vertex_ids,
                &mut vertices,
            );
        }
        if p.re.qsign() == 0 {
            add_vertex(
                PlanePoint::new(q1(), p.im.clone()),
                &mut vertex_ids,
                &mut vertices,
            );
        }
        if (&p.re - &q1()).qsign() == 0 {
            add_vertex(
                PlanePoint::new(QuadElem::zero(), p.im.clone()),
                &mut vertex_ids,
                &mut vertices,
            );
        }
    }

    // Split every segment at every vertex on it and merge duplicates.
    let mut sub: BTreeMap<(usize, usize), Kind> = BTreeMap::new();
    for s in &segs {
        let d = &s.b - &s.a;
        let mut stations: Vec<(QuadElem, usize)> = vertices
            .iter()
            .enumerate()
            .filter(|(_, v)| on_segment(&s.a, &s.b, v))
            .map(|(id, v)| (dot(&(v - &s.a), &d), id))
            .collect();
        stations.sort_by(|x, y| x.0.cmp(&y.0));
        for w in stations.windows(2) {
            let (u, v) = (w[0].1, w[1].1);
            if u == v {
                continue;
            }
            let key = if u < v { (u, v) } else { (v, u) };
            match sub.get(&key) {
                None => {
                    sub.insert(key, s.kind);
                }
                Some(Kind::Aux) if s.kind == Kind::Aux => {}
                Some(_) => {
                    return Err(BuildError::Placement(
                        "two cuts of different roles coincide".into(),
                    ));
                }
            }
        }
    }

    // Half-edge fans. Half-edge 2s goes from sub[s].0 to sub[s].1, 2s + 1
    // back; faces keep their interior on the left, so the next edge after h
    // is the clockwise successor of its twin around the head vertex.
    let subs: Vec<((usize, usize), Kind)> = sub.into_iter().collect();
    let half_tail = |h: usize| -> usize {
        let (pair, _) = &subs[h / 2];
        if h % 2 == 0 {
            pair.0
        } else {
            pair.1
        }
    };
    let half_head = |h: usize| -> usize {
        let (pair, _) = &subs[h / 2];
        if h % 2 == 0 {
            pair.1
        } else {
            pair.0
        }
    };
    let mut fans: Vec<Vec<usize>> = vec![Vec::new(); vertices.len()];
    for h in 0..2 * subs.len() {
        fans[half_tail(h)].push(h);
    }
    for fan in &mut fans {
        let mut err = None;
        fan.sort_by(|&x, &y| {
            let dx = &vertices[half_head(x)] - &vertices[half_tail(x)];
            let dy = &vertices[half_head(y)] - &vertices[half_tail(y)];
            let o = angle_cmp(&dx, &dy);
            if o == Ordering::Equal {
                err = Some(());
            }
            o
        });
        if err.is_some() {
            return Err(BuildError::Internal(
                "two distinct edges leave a vertex in the same direction".into(),
            ));
        }
    }
    let mut fan_pos: Vec<usize> = vec![0; 2 * subs.len()];
    for fan in &fans {
        for (i, &h) in fan.iter().enumerate() {
            fan_pos[h] = i;
        }
    }
    let next_half = |h: usize| -> usize {
        let twin = h ^ 1;
        let fan = &fans[half_tail(twin)];
        fan[(fan_pos[twin] + fan.len() - 1) % fan.len()]
    };

    // Trace faces; exactly one, the outer walk, is clockwise and dropped.
    let mut face_of: Vec<Option<usize>> = vec![None; 2 * subs.len()];
    let mut faces_halfedges: Vec<Vec<usize>> = Vec::new();
    let mut outer_seen = false;
    for start in 0..2 * subs.len() {
        if face_of[start].is_some() {
            continue;
        }
        let mut walk = Vec::new();
        let mut h = start;
        loop {
            walk.push(h);
            h = next_half(h);
            if h == start {
                break;
            }
        }
        let mut doubled_area = QuadElem::zero();
        for &e in &walk {
            doubled_area =
                &doubled_area + &det2(&vertices[half_tail(e)], &vertices[half_head(e)]);
        }
        match doubled_area.qsign() {
            1 => {
                let id = faces_halfedges.len();
                for &e in &walk {
                    face_of[e] = Some(id);
                }
                faces_halfedges.push(walk);
            }
            -1 => {
                if outer_seen {
                    return Err(BuildError::Internal("two clockwise face walks".into()));
                }
                outer_seen = true;
                for &e in &walk {
                    face_of[e] = Some(usize::MAX);
                }
            }
            _ => {
                return Err(BuildError::Placement("a traced face has zero area".into()));
            }
        }
    }
    if !outer_seen {
        return Err(BuildError::Internal("no outer face walk found".into()));
    }

    // Every kept face must be a simple polygon: non-adjacent edges disjoint,
    // adjacent edges meeting only at their shared vertex.
    for walk in &faces_halfedges {
        let n = walk.len();
        if n < 3 {
            return Err(BuildError::Placement("a traced face is degenerate".into()));
        }
        for i in 0..n {
            let (ai, bi) = (walk[i], walk[(i + 1) % n]);
            let prev_to_next = &vertices[half_head(bi)] - &vertices[half_tail(bi)];
            let d_i = &vertices[half_head(ai)] - &vertices[half_tail(ai)];
            if det2(&d_i, &prev_to_next).is_zero() && dot(&d_i, &prev_to_next).qsign() < 0 {
                return Err(BuildError::Placement(
                    "a traced face folds back on itself".into(),
                ));
            }
            for j in i + 2..n {
                if i == 0 && j == n - 1 {
                    continue;
                }
                let (x, y) = (walk[i], walk[j]);
                let (a, b) = (&vertices[half_tail(x)], &vertices[half_head(x)]);
                let (c, d) = (&vertices[half_tail(y)], &vertices[half_head(y)]);
                let crossing = transversal_hit(a, b, c, d).is_some()
                    || on_segment(a, b, c)
                    || on_segment(a, b, d)
                    || on_segment(c, d, a)
                    || on_segment(c, d, b);
                if crossing {
                    return Err(BuildError::Placement(
                        "a traced face touches itself".into(),
                    ));
                }
            }
        }
    }

    // Locate and classify every kept directed edge.
    let mut faces: Vec<Vec<FaceEdge>> = Vec::new();
    for walk in &faces_halfedges {
        faces.push(
            walk.iter()
                .map(|&e| FaceEdge {
                    from: vertices[half_tail(e)].clone(),
                    to: vertices[half_head(e)].clone(),
                })
                .collect(),
        );
    }
    let mut aux_sides: BTreeMap<usize, Vec<FaceRef>> = BTreeMap::new();
    let mut bottom: Vec<(QuadElem, FaceRef)> = Vec::new();
    let mut top: Vec<(QuadElem, FaceRef)> = Vec::new();
    let mut left_col: Vec<(QuadElem, FaceRef)> = Vec::new();
    let mut right_col: Vec<(QuadElem, FaceRef)> = Vec::new();
    struct BankPiece {
        lo: QuadElem,
        hi: QuadElem,
        at: FaceRef,
    }
    let mut bank_left: Vec<Vec<BankPiece>> =
        (0..slit_specs.len()).map(|_| Vec::new()).collect();
    let mut bank_right: Vec<Vec<BankPiece>> =
        (0..slit_specs.len()).map(|_| Vec::new()).collect();

    for (fi, walk) in faces_halfedges.iter().enumerate() {
        for (ei, &h) in walk.iter().enumerate() {
            let at: FaceRef = (fi, ei);
            let kind = subs[h / 2].1;
            let from = &vertices[half_tail(h)];
            let to = &vertices[half_head(h)];
            match kind {
                Kind::Aux => aux_sides.entry(h / 2).or_default().push(at),
                Kind::Boundary => {
                    let d = to - from;
                    if from.im.qsign() == 0 && to.im.qsign() == 0 {
                        if d.re.qsign() != 1 {
                            return Err(BuildError::Internal(
                                "bottom edge of a kept face runs backwards".into(),
                            ));
                        }
                        bottom.push((from.re.clone(), at));
                    } else if (&from.im - &q1()).qsign() == 0 && (&to.im - &q1()).qsign() == 0 {
                        if d.re.qsign() != -1 {
                            return Err(BuildError::Internal(
                                "top edge of a kept face runs forwards".into(),
                            ));
                        }
                        top.push((to.re.clone(), at));
                    } else if from.re.qsign() == 0 && to.re.qsign() == 0 {
                        if d.im.qsign() != -1 {
                            return Err(BuildError::Internal(
                                "left edge of a kept face runs upwards".into(),
                            ));
                        }
                        left_col.push((to.im.clone(), at));
                    } else if (&from.re - &q1()).qsign() == 0 && (&to.re - &q1()).qsign() == 0 {
                        if d.im.qsign() != 1 {
                            return Err(BuildError::Internal(
                                "right edge of a kept face runs downwards".into(),
                            ));
                        }
                        right_col.push((from.im.clone(), at));
                    } else {
                        return Err(BuildError::Internal(
                            "boundary edge on no side of the square".into(),
                        ));
                    }
                }
                Kind::Slit(id) => {
                    let spec = &slit_specs[id];
                    let d = &spec.to - &spec.from;
                    let n2 = norm_sq(&d);
                    let param =
                        |p: &PlanePoint| -> QuadElem { &dot(&(p - &spec.from), &d) / &n2 };
                    let (tf, tt) = (param(from), param(to));
                    if (&tt - &tf).qsign() > 0 {
                        bank_left[id].push(BankPiece {
                            lo: tf,
                            hi: tt,
                            at,
                        });
                    } else {
                        bank_right[id].push(BankPiece {
                            lo: tt,
                            hi: tf,
                            at,
                        });
                    }
                }
            }
        }
    }

    let mut aux_pairs = Vec::new();
    for (_, sides) in aux_sides {
        if sides.len() != 2 {
            return Err(BuildError::Internal(
                "an auxiliary cut does not border exactly two kept edges".into(),
            ));
        }
        aux_pairs.push((sides[0], sides[1]));
    }

    bottom.sort_by(|x, y| x.0.cmp(&y.0));
    top.sort_by(|x, y| x.0.cmp(&y.0));
    left_col.sort_by(|x, y| x.0.cmp(&y.0));
    right_col.sort_by(|x, y| x.0.cmp(&y.0));
    if bottom.len() != top.len() || left_col.len() != right_col.len() {
        return Err(BuildError::Internal(
            "opposite boundary sides subdivide differently".into(),
        ));
    }
    for (b, t) in bottom.iter().zip(&top) {
        if b.0 != t.0 {
            return Err(BuildError::Internal(
                "bottom and top stations disagree".into(),
            ));
        }
    }
    for (l, r) in left_col.iter().zip(&right_col) {
        if l.0 != r.0 {
            return Err(BuildError::Internal(
                "left and right stations disagree".into(),
            ));
        }
    }

    let mut slits = Vec::with_capacity(slit_specs.len());
    for (id, _) in slit_specs.iter().enumerate() {
        let mut l = std::mem::take(&mut bank_left[id]);
        let mut r = std::mem::take(&mut bank_right[id]);
        l.sort_by(|x, y| x.lo.cmp(&y.lo));
        r.sort_by(|x, y| x.lo.cmp(&y.lo));
        if l.len() != r.len() || l.is_empty() {
            return Err(BuildError::Internal(
                "slit banks subdivide differently".into(),
            ));
        }
        let mut stations = vec![QuadElem::zero()];
        for (i, (lp, rp)) in l.iter().zip(&r).enumerate() {
            if lp.lo != rp.lo || lp.hi != rp.hi {
                return Err(BuildError::Internal(
                    "slit bank stations disagree".into(),
                ));
            }
            let want = &stations[i];
            if &lp.lo != want {
                return Err(BuildError::Internal("slit pieces do not tile".into()));
            }
            stations.push(lp.hi.clone());
        }
        if stations.last() != Some(&q1()) {
            return Err(BuildError::Internal(
                "slit pieces do not reach the far end".into(),
            ));
        }
        slits.push(SlitBanks {
            stations,
            left: l.into_iter().map(|p| p.at).collect(),
            right: r.into_iter().map(|p| p.at).collect(),
        });
    }

    Ok(SheetComplex {
        faces,
        aux_pairs,
        bottom: bottom.into_iter().map(|x| x.1).collect(),
        top: top.into_iter().map(|x| x.1).collect(),
        left_col: left_col.into_iter().map(|x| x.1).collect(),
        right_col: right_col.into_iter().map(|x| x.1).collect(),
        slits,
    })
}
