//! Translation surfaces as polygon complexes: cyclic lists of edge vectors
//! glued in opposite pairs by translation. All geometry is exact; cone
//! angles, genus, periods and intersection numbers never touch floating
//! point.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

use crate::field::{det2, dot, join_radicands, PlanePoint};

#[derive(Debug, Error, PartialEq)]
pub enum SurfaceError {
    #[error("bad polygon: {0}")]
    BadPolygon(String),
    #[error("bad pairing: {0}")]
    BadPairing(String),
    #[error("surface is not connected")]
    Disconnected,
    #[error("edge vectors live in different quadratic contexts")]
    MixedContexts,
    #[error("euler characteristic is not that of a closed orientable surface")]
    BadEuler,
    #[error("cone angle is not a positive multiple of 2 pi")]
    BadAngle,
    #[error("total angle defect does not match the genus")]
    GaussBonnet,
    #[error("marked curve is not a closed edge path")]
    CurveNotClosed,
    #[error("marked curve is empty or out of range")]
    BadCurve,
    #[error("intersection form is not unimodular")]
    BadIntersectionForm,
    #[error("cannot parse surface: {0}")]
    BadLiteral(String),
}

/// A directed boundary edge: edge `edge` of polygon `poly`, traversed in the
/// polygon's counterclockwise boundary direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EdgeRef {
    pub poly: usize,
    pub edge: usize,
}

impl EdgeRef {
    pub fn new(poly: usize, edge: usize) -> Self {
        EdgeRef { poly, edge }
    }
}

impl fmt::Display for EdgeRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}.{})", self.poly, self.edge)
    }
}

/// A closed directed edge path on the surface.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MarkedCurve {
    pub edges: Vec<EdgeRef>,
}

impl MarkedCurve {
    pub fn new(edges: Vec<EdgeRef>) -> Self {
        MarkedCurve { edges }
    }
}

/// One vertex of the surface: the cycle of polygon corners glued around it,
/// each corner named by the directed edge starting there. The cone angle is
/// 2 pi times `turns`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VertexCycle {
    pub corners: Vec<EdgeRef>,
    pub turns: u32,
}

/// A translation surface: counterclockwise polygons with a fixed-point-free
/// pairing of boundary edges, paired edges carrying opposite vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct TranslationSurface {
    polygons: Vec<Vec<PlanePoint>>,
    pairing: Vec<Vec<EdgeRef>>,
    d: u64,
}

impl TranslationSurface {
    pub fn new(
        polygons: Vec<Vec<PlanePoint>>,
        pairs: &[(EdgeRef, EdgeRef)],
    ) -> Result<Self, SurfaceError> {
        if polygons.is_empty() {
            return Err(SurfaceError::BadPolygon("no polygons".into()));
        }
        let mut d = 1u64;
        for (pi, poly) in polygons.iter().enumerate() {
            if poly.len() < 3 {
                return Err(SurfaceError::BadPolygon(format!(
                    "polygon {} has fewer than 3 edges",
                    pi
                )));
            }
            let mut sum = PlanePoint::zero();
            for v in poly {
                if v.is_zero() {
                    return Err(SurfaceError::BadPolygon(format!(
                        "polygon {} has a zero edge vector",
                        pi
                    )));
                }
                for part in [&v.re, &v.im] {
                    d = join_radicands(d, part.radicand()).ok_or(SurfaceError::MixedContexts)?;
                }
                sum = &sum + v;
            }
            if !sum.is_zero() {
                return Err(SurfaceError::BadPolygon(format!(
                    "polygon {} does not close up",
                    pi
                )));
            }
            // Shoelace: positions p_k, twice the signed area must be positive.
            let mut pos = PlanePoint::zero();
            let mut twice_area = crate::field::QuadElem::zero();
            for v in poly {
                let next = &pos + v;
                twice_area = &twice_area + &det2(&pos, &next);
                pos = next;
            }
            if twice_area.qsign() <= 0 {
                return Err(SurfaceError::BadPolygon(format!(
                    "polygon {} is not counterclockwise with positive area",
                    pi
                )));
            }
        }
        // Build the pairing involution.
        let mut pairing: Vec<Vec<Option<EdgeRef>>> = polygons
            .iter()
            .map(|p| vec![None; p.len()])
            .collect();
        let in_range = |e: &EdgeRef| e.poly < polygons.len() && e.edge < polygons[e.poly].len();
        for (x, y) in pairs {
            if !in_range(x) || !in_range(y) {
                return Err(SurfaceError::BadPairing(format!(
                    "edge reference out of range: {} or {}",
                    x, y
                )));
            }
            if x == y {
                return Err(SurfaceError::BadPairing(format!(
                    "edge {} glued to itself",
                    x
                )));
            }
            for (from, to) in [(x, y), (y, x)] {
                let slot = &mut pairing[from.poly][from.edge];
                if slot.is_some() {
                    return Err(SurfaceError::BadPairing(format!(
                        "edge {} appears in more than one pair",
                        from
                    )));
                }
                *slot = Some(*to);
            }
            let vx = &polygons[x.poly][x.edge];
            let vy = &polygons[y.poly][y.edge];
            if !(vx + vy).is_zero() {
                return Err(SurfaceError::BadPairing(format!(
                    "paired edges {} and {} do not carry opposite vectors",
                    x, y
                )));
            }
        }
        let pairing: Result<Vec<Vec<EdgeRef>>, SurfaceError> = pairing
            .into_iter()
            .enumerate()
            .map(|(pi, row)| {
                row.into_iter()
                    .enumerate()
                    .map(|(ei, slot)| {
                        slot.ok_or_else(|| {
                            SurfaceError::BadPairing(format!(
                                "edge ({}.{}) is unpaired",
                                pi, ei
                            ))
                        })
                    })
                    .collect()
            })
            .collect();
        let surface = TranslationSurface {
            polygons,
            pairing: pairing?,
            d,
        };
        // Connectivity across gluings.
        let n = surface.polygons.len();
        let mut seen = vec![false; n];
        let mut stack = vec![0usize];
        seen[0] = true;
        while let Some(p) = stack.pop() {
            for e in 0..surface.polygons[p].len() {
                let q = surface.pairing[p][e].poly;
                if !seen[q] {
                    seen[q] = true;
                    stack.push(q);
                }
            }
        }
        if seen.iter().any(|&s| !s) {
            return Err(SurfaceError::Disconnected);
        }
        Ok(surface)
    }

    pub fn polygons(&self) -> &[Vec<PlanePoint>] {
        &self.polygons
    }

    pub fn radicand(&self) -> u64 {
        self.d
    }

    pub fn vector(&self, e: EdgeRef) -> &PlanePoint {
        &self.polygons[e.poly][e.edge]
    }

    pub fn pair(&self, e: EdgeRef) -> EdgeRef {
        self.pairing[e.poly][e.edge]
    }

    /// The edge after e in its polygon's cyclic boundary.
    pub fn next(&self, e: EdgeRef) -> EdgeRef {
        EdgeRef::new(e.poly, (e.edge + 1) % self.polygons[e.poly].len())
    }

    /// The edge before e in its polygon's cyclic boundary.
    pub fn prev(&self, e: EdgeRef) -> EdgeRef {
        let n = self.polygons[e.poly].len();
        EdgeRef::new(e.poly, (e.edge + n - 1) % n)
    }

    fn edge_count(&self) -> usize {
        self.polygons.iter().map(|p| p.len()).sum()
    }

    fn edge_index(&self, e: EdgeRef) -> usize {
        self.polygons[..e.poly].iter().map(|p| p.len()).sum::<usize>() + e.edge
    }

    fn edge_at(&self, mut idx: usize) -> EdgeRef {
        for (pi, p) in self.polygons.iter().enumerate() {
            if idx < p.len() {
                return EdgeRef::new(pi, idx);
            }
            idx -= p.len();
        }
        unreachable!("edge index out of range")
    }

    /// Rotating counterclockwise around the vertex at the start of e, the
    /// next directed edge out of that vertex.
    fn ccw_next_at_vertex(&self, e: EdgeRef) -> EdgeRef {
        self.pair(self.prev(e))
    }

    /// Rotating clockwise: inverse of ccw_next_at_vertex.
    fn cw_next_at_vertex(&self, e: EdgeRef) -> EdgeRef {
        self.next(self.pair(e))
    }

    /// Groups the directed edges by the vertex they start at, and counts the
    /// exact cone angle 2 pi k of each vertex.
    pub fn vertex_cycles(&self) -> Result<Vec<VertexCycle>, SurfaceError> {
        let m = self.edge_count();
        let mut visited = vec![false; m];
        let mut out = Vec::new();
        for start_idx in 0..m {
            if visited[start_idx] {
                continue;
            }
            let start = self.edge_at(start_idx);
            let mut corners = Vec::new();
            let mut turns = 0u32;
            let mut e = start;
            loop {
                visited[self.edge_index(e)] = true;
                corners.push(e);
                let nxt = self.ccw_next_at_vertex(e);
                // The corner sector sweeps counterclockwise from the
                // direction of e to the direction of nxt; count crossings
                // of the positive x direction to total the full turns.
                if arc_crosses_positive_x(self.vector(e), self.vector(nxt)) {
                    turns += 1;
                }
                e = nxt;
                if e == start {
                    break;
                }
            }
            if turns == 0 {
                return Err(SurfaceError::BadAngle);
            }
            out.push(VertexCycle { corners, turns });
        }
        Ok(out)
    }

    /// Genus from the euler characteristic of the polygon complex.
    pub fn euler_genus(&self) -> Result<usize, SurfaceError> {
        let v = self.vertex_cycles()?.len() as i64;
        let e = (self.edge_count() / 2) as i64;
        let f = self.polygons.len() as i64;
        let chi = v - e + f;
        if chi % 2 != 0 || chi > 2 {
            return Err(SurfaceError::BadEuler);
        }
        Ok(((2 - chi) / 2) as usize)
    }

    /// The singularity data: sorted positive cone angle excesses k - 1 over
    /// vertices with angle 2 pi k > 2 pi. Checks the Gauss-Bonnet identity.
    pub fn stratum(&self) -> Result<Vec<u32>, SurfaceError> {
        let g = self.euler_genus()?;
        let cycles = self.vertex_cycles()?;
        let mut parts: Vec<u32> = cycles
            .iter()
            .filter(|c| c.turns > 1)
            .map(|c| c.turns - 1)
            .collect();
        parts.sort_unstable();
        let total: u32 = parts.iter().sum();
        if g < 2 || total as usize != 2 * g - 2 {
            return Err(SurfaceError::GaussBonnet);
        }
        Ok(parts)
    }

    fn vertex_ids(&self) -> (Vec<usize>, usize) {
        // vertex id for the start vertex of each directed edge, by flat index.
        let m = self.edge_count();
        let mut ids = vec![usize::MAX; m];
        let mut count = 0usize;
        for idx in 0..m {
            if ids[idx] != usize::MAX {
                continue;
            }
            let start = self.edge_at(idx);
            let mut e = start;
            loop {
                ids[self.edge_index(e)] = count;
                e = self.ccw_next_at_vertex(e);
                if e == start {
                    break;
                }
            }
            count += 1;
        }
        (ids, count)
    }

    fn start_vertex(&self, ids: &[usize], e: EdgeRef) -> usize {
        ids[self.edge_index(e)]
    }

    fn end_vertex(&self, ids: &[usize], e: EdgeRef) -> usize {
        ids[self.edge_index(self.next(e))]
    }

    /// Vertex ids at the tail of every directed edge, indexed like
    /// [`TranslationSurface::edge_tail_id`], for callers that stitch edge
    /// walks together.
    pub(crate) fn tail_ids(&self) -> Vec<usize> {
        self.vertex_ids().0
    }

    /// The tail vertex id of one directed edge under a map from
    /// [`TranslationSurface::tail_ids`].
    pub(crate) fn edge_tail_id(&self, ids: &[usize], e: EdgeRef) -> usize {
        self.start_vertex(ids, e)
    }

    fn check_curve(&self, c: &MarkedCurve) -> Result<(), SurfaceError> {
        if c.edges.is_empty() {
            return Err(SurfaceError::BadCurve);
        }
        for e in &c.edges {
            if e.poly >= self.polygons.len() || e.edge >= self.polygons[e.poly].len() {
                return Err(SurfaceError::BadCurve);
            }
        }
        let (ids, _) = self.vertex_ids();
        for k in 0..c.edges.len() {
            let e = c.edges[k];
            let f = c.edges[(k + 1) % c.edges.len()];
            if self.end_vertex(&ids, e) != self.start_vertex(&ids, f) {
                return Err(SurfaceError::CurveNotClosed);
            }
        }
        Ok(())
    }

    /// The period of a closed curve: the sum of its edge vectors.
    pub fn period(&self, c: &MarkedCurve) -> Result<PlanePoint, SurfaceError> {
        self.check_curve(c)?;
        let mut sum = PlanePoint::zero();
        for e in &c.edges {
            sum = &sum + self.vector(*e);
        }
        Ok(sum)
    }

    /// The algebraic intersection number of two closed curves on the
    /// 1-skeleton, computed by pushing the first curve off to its left and
    /// counting signed crossings at the vertices.
    pub fn intersection_number(
        &self,
        c1: &MarkedCurve,
        c2: &MarkedCurve,
    ) -> Result<BigInt, SurfaceError> {
        self.check_curve(c1)?;
        self.check_curve(c2)?;
        // Uses of each directed edge by c2.
        let mut use_count: HashMap<EdgeRef, i64> = HashMap::new();
        for e in &c2.edges {
            *use_count.entry(*e).or_insert(0) += 1;
        }
        let mut total = BigInt::zero();
        let n = c1.edges.len();
        for k in 0..n {
            let arrive = c1.edges[k];
            let depart = c1.edges[(k + 1) % n];
            // The pushed copy swings clockwise around the vertex, from the
            // sector left of the end of `arrive` to the sector left of the
            // start of `depart`. Walking clockwise from the sector of
            // corner(s) crosses the outgoing ray s itself.
            let mut s = self.next(arrive);
            let mut guard = 0usize;
            while s != depart {
                // Crossing the outgoing ray s while moving clockwise: +1 for
                // every use of s by c2, -1 for every use of its reverse.
                if let Some(&cnt) = use_count.get(&s) {
                    total += cnt;
                }
                if let Some(&cnt) = use_count.get(&self.pair(s)) {
                    total -= cnt;
                }
                s = self.cw_next_at_vertex(s);
                guard += 1;
                if guard > self.edge_count() + 1 {
                    return Err(SurfaceError::CurveNotClosed);
                }
            }
        }
        Ok(total)
    }

    /// A symplectic basis of marked curves (a_1, b_1, ..., a_g, b_g):
    /// intersection matrix exactly the standard form J.
    pub fn symplectic_homology_basis(&self) -> Result<Vec<MarkedCurve>, SurfaceError> {
        let g = self.euler_genus()?;
        let (ids, nverts) = self.vertex_ids();

        // Geometric edges: the lower-indexed directed edge of each pair.
        let m = self.edge_count();
        let mut class_of = vec![usize::MAX; m];
        let mut reps: Vec<EdgeRef> = Vec::new();
        for idx in 0..m {
            if class_of[idx] != usize::MAX {
                continue;
            }
            let e = self.edge_at(idx);
            let p = self.pair(e);
            let c = reps.len();
            class_of[idx] = c;
            class_of[self.edge_index(p)] = c;
            reps.push(e);
        }

        // Spanning tree over the vertices.
        let mut parent_edge: Vec<Option<EdgeRef>> = vec![None; nverts];
        let mut order = Vec::with_capacity(nverts);
        let mut seen = vec![false; nverts];
        let root = 0usize;
        seen[root] = true;
        order.push(root);
        let mut queue = std::collections::VecDeque::from([root]);
        let mut tree_class = vec![false; reps.len()];
        while let Some(v) = queue.pop_front() {
            for idx in 0..m {
                let e = self.edge_at(idx);
                if self.start_vertex(&ids, e) != v {
                    continue;
                }
                let w = self.end_vertex(&ids, e);
                if !seen[w] {
                    seen[w] = true;
                    parent_edge[w] = Some(e);
                    tree_class[class_of[idx]] = true;
                    order.push(w);
                    queue.push_back(w);
                }
            }
        }
        if order.len() != nverts {
            return Err(SurfaceError::Disconnected);
        }
        // Directed walk from a vertex up to the root along parents.
        let walk_to_root = |mut v: usize| -> Vec<EdgeRef> {
            let mut path = Vec::new();
            while let Some(e) = parent_edge[v] {
                // e runs parent -> v, so the reverse runs v -> parent.
                path.push(self.pair(e));
                v = self.start_vertex(&ids, e);
            }
            path
        };
        // Directed walk from u to w through the tree.
        let tree_path = |u: usize, w: usize| -> Vec<EdgeRef> {
            let up = walk_to_root(u);
            let down = walk_to_root(w);
            // Cancel the common tail (shared ancestors).
            let mut iu = up.len();
            let mut iw = down.len();
            while iu > 0 && iw > 0 && up[iu - 1] == down[iw - 1] {
                iu -= 1;
                iw -= 1;
            }
            let mut path: Vec<EdgeRef> = up[..iu].to_vec();
            path.extend(down[..iw].iter().rev().map(|e| self.pair(*e)));
            path
        };

        // Fundamental cycles: one per non-tree geometric edge.
        let mut cycles: Vec<MarkedCurve> = Vec::new();
        for (ci, &rep) in reps.iter().enumerate() {
            if tree_class[ci] {
                continue;
            }
            let u = self.start_vertex(&ids, rep);
            let w = self.end_vertex(&ids, rep);
            let mut edges = vec![rep];
            edges.extend(tree_path(w, u));
            let c = MarkedCurve::new(edges);
            self.check_curve(&c)?;
            cycles.push(c);
        }
        let ncyc = cycles.len();

        // Chains over geometric edge classes, and the Gram matrix of the
        // intersection form on the fundamental cycles.
        let chain_of_curve = |c: &MarkedCurve| -> Vec<BigInt> {
            let mut z = vec![BigInt::zero(); reps.len()];
            for e in &c.edges {
                let idx = self.edge_index(*e);
                let cls = class_of[idx];
                if reps[cls] == *e {
                    z[cls] += 1;
                } else {
                    z[cls] -= 1;
                }
            }
            z
        };
        let mut chains: Vec<Vec<BigInt>> = cycles.iter().map(&chain_of_curve).collect();
        let mut gram = vec![vec![BigInt::zero(); ncyc]; ncyc];
        for i in 0..ncyc {
            for j in i + 1..ncyc {
                let v = self.intersection_number(&cycles[i], &cycles[j])?;
                gram[i][j] = v.clone();
                gram[j][i] = -v;
            }
        }

        // Integer symplectic reduction: peel off pairing-one pairs.
        let mut active: Vec<usize> = (0..ncyc).collect();
        let mut pairs: Vec<(usize, usize)> = Vec::new();
        loop {
            let mut best: Option<(usize, usize)> = None;
            for &i in &active {
                for &j in &active {
                    if gram[i][j].is_positive()
                        && best.is_none_or(|(bi, bj)| gram[i][j] < gram[bi][bj])
                    {
                        best = Some((i, j));
                    }
                }
            }
            let Some((pi, pj)) = best else { break };
            let p = gram[pi][pj].clone();
            // Clear the other pairings against c_pi and c_pj as far as
            // divisibility allows.
            let mut clean = true;
            for &k in &active {
                if k == pi || k == pj {
                    continue;
                }
                let q = rounded_quotient(&gram[pi][k], &p);
                if !q.is_zero() {
                    // c_k -= q c_pj
                    for t in 0..reps.len() {
                        let delta = &q * &chains[pj][t];
                        chains[k][t] -= delta;
                    }
                    for t in 0..ncyc {
                        let delta = &q * &gram[pj][t];
                        gram[k][t] -= delta.clone();
                        gram[t][k] += delta;
                    }
                }
                let q = rounded_quotient(&gram[pj][k], &p);
                if !q.is_zero() {
                    // c_k += q c_pi
                    for t in 0..reps.len() {
                        let delta = &q * &chains[pi][t];
                        chains[k][t] += delta;
                    }
                    for t in 0..ncyc {
                        let delta = &q * &gram[pi][t];
                        gram[k][t] += delta.clone();
                        gram[t][k] -= delta;
                    }
                }
                if !gram[pi][k].is_zero() || !gram[pj][k].is_zero() {
                    clean = false;
                }
            }
            if !clean {
                // Smaller entries now exist; re-select the pivot.
                continue;
            }
            if !p.is_one() {
                return Err(SurfaceError::BadIntersectionForm);
            }
            pairs.push((pi, pj));
            active.retain(|&k| k != pi && k != pj);
        }
        if pairs.len() != g {
            return Err(SurfaceError::BadIntersectionForm);
        }

        // Realize each chain as a closed edge path.
        let mut out = Vec::with_capacity(2 * g);
        for &(i, j) in &pairs {
            for &idx in &[i, j] {
                out.push(self.chain_to_curve(&chains[idx], &ids, nverts, &reps, &tree_path)?);
            }
        }
        // The basis must reproduce the standard symplectic matrix exactly.
        for (r, cr) in out.iter().enumerate() {
            for (c, cc) in out.iter().enumerate() {
                let expect: i64 = if r / 2 == c / 2 {
                    if r % 2 == 0 && c % 2 == 1 {
                        1
                    } else if r % 2 == 1 && c % 2 == 0 {
                        -1
                    } else {
                        0
                    }
                } else {
                    0
                };
                if self.intersection_number(cr, cc)? != BigInt::from(expect) {
                    return Err(SurfaceError::BadIntersectionForm);
                }
            }
        }
        Ok(out)
    }

    /// Turns a 1-cycle chain (coefficients over geometric edge classes) into
    /// a closed directed edge path, splicing components together through
    /// mutually cancelling tree detours when needed.
    fn chain_to_curve(
        &self,
        chain: &[BigInt],
        ids: &[usize],
        nverts: usize,
        reps: &[EdgeRef],
        tree_path: &dyn Fn(usize, usize) -> Vec<EdgeRef>,
    ) -> Result<MarkedCurve, SurfaceError> {
        // Multiset of directed edges to traverse.
        let mut multi: HashMap<EdgeRef, u64> = HashMap::new();
        for (cls, coef) in chain.iter().enumerate() {
            if coef.is_zero() {
                continue;
            }
            let e = if coef.is_positive() {
                reps[cls]
            } else {
                self.pair(reps[cls])
            };
            let n = coef.abs().to_u64().ok_or(SurfaceError::BadCurve)?;
            *multi.entry(e).or_insert(0) += n;
        }
        if multi.is_empty() {
            return Err(SurfaceError::BadCurve);
        }
        // Components among the touched vertices (union-find).
        let mut uf: Vec<usize> = (0..nverts).collect();
        fn find(uf: &mut Vec<usize>, x: usize) -> usize {
            let mut r = x;
            while uf[r] != r {
                r = uf[r];
            }
            let mut c = x;
            while uf[c] != c {
                let n = uf[c];
                uf[c] = r;
                c = n;
            }
            r
        }
        let mut touched: Vec<usize> = Vec::new();
        for e in multi.keys() {
            let u = self.start_vertex(ids, *e);
            let w = self.end_vertex(ids, *e);
            touched.push(u);
            touched.push(w);
            let (ru, rw) = (find(&mut uf, u), find(&mut uf, w));
            if ru != rw {
                uf[ru] = rw;
            }
        }
        touched.sort_unstable();
        touched.dedup();
        let base = touched[0];
        let mut splices: Vec<EdgeRef> = Vec::new();
        for &v in &touched[1..] {
            let (rv, rb) = (find(&mut uf, v), find(&mut uf, base));
            if rv == rb {
                continue;
            }
            // Out-and-back tree detour: homologically trivial, but it makes
            // the multigraph connected. Unify every vertex the detour visits.
            let path = tree_path(base, v);
            let mut at = base;
            for e in &path {
                splices.push(*e);
                splices.push(self.pair(*e));
                let w = self.end_vertex(ids, *e);
                let (ra, rw) = (find(&mut uf, at), find(&mut uf, w));
                if ra != rw {
                    uf[ra] = rw;
                }
                at = w;
            }
        }
        for e in splices {
            *multi.entry(e).or_insert(0) += 1;
        }

        // Hierholzer walk over the directed multigraph, deterministic by
        // always taking the smallest available edge.
        let mut out_edges: HashMap<usize, Vec<(EdgeRef, u64)>> = HashMap::new();
        let mut total: u64 = 0;
        for (e, n) in &multi {
            out_edges
                .entry(self.start_vertex(ids, *e))
                .or_default()
                .push((*e, *n));
            total += n;
        }
        for lst in out_edges.values_mut() {
            lst.sort_unstable();
        }
        let start = self.start_vertex(ids, *multi.keys().min().unwrap());
        let mut stack_v = vec![start];
        let mut stack_e: Vec<Option<EdgeRef>> = vec![None];
        let mut walk: Vec<EdgeRef> = Vec::new();
        while let Some(&v) = stack_v.last() {
            let next = out_edges.get_mut(&v).and_then(|lst| {
                lst.iter_mut().find(|(_, n)| *n > 0).map(|slot| {
                    slot.1 -= 1;
                    slot.0
                })
            });
            match next {
                Some(e) => {
                    stack_v.push(self.end_vertex(ids, e));
                    stack_e.push(Some(e));
                }
                None => {
                    stack_v.pop();
                    if let Some(Some(e)) = stack_e.pop() {
                        walk.push(e);
                    }
                }
            }
        }
        if walk.len() as u64 != total {
            // Some edges were unreachable: the chain was not connectable.
            return Err(SurfaceError::CurveNotClosed);
        }
        walk.reverse();
        let curve = MarkedCurve::new(walk);
        self.check_curve(&curve)?;
        Ok(curve)
    }

    /// Canonical text form. Curves are optional named attachments.
    pub fn to_text(&self, curves: &[(String, MarkedCurve)]) -> String {
        let mut s = String::new();
        s.push_str(&format!("TSURF 1 d={}\n", self.d));
        for (pi, poly) in self.polygons.iter().enumerate() {
            let body: Vec<String> = poly.iter().map(|v| v.to_string()).collect();
            s.push_str(&format!("polygon {}: {}\n", pi, body.join("; ")));
        }
        let mut seen: Vec<(EdgeRef, EdgeRef)> = Vec::new();
        for pi in 0..self.polygons.len() {
            for ei in 0..self.polygons[pi].len() {
                let a = EdgeRef::new(pi, ei);
                let b = self.pairing[pi][ei];
                if a < b {
                    seen.push((a, b));
                }
            }
        }
        let body: Vec<String> = seen
            .iter()
            .map(|(a, b)| format!("{}-{}", a, b))
            .collect();
        s.push_str(&format!("pairing: {}\n", body.join(" ")));
        for (name, c) in curves {
            let body: Vec<String> = c.edges.iter().map(|e| e.to_string()).collect();
            s.push_str(&format!("curve {}: {}\n", name, body.join(" ")));
        }
        s
    }

    pub fn from_text(s: &str) -> Result<(Self, Vec<(String, MarkedCurve)>), SurfaceError> {
        let bad = |m: &str| SurfaceError::BadLiteral(m.into());
        let mut lines = s.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or_else(|| bad("empty input"))?.trim();
        let rest = header
            .strip_prefix("TSURF 1 d=")
            .ok_or_else(|| bad("header must be `TSURF 1 d=<d>`"))?;
        let _d: u64 = rest.parse().map_err(|_| bad("bad radicand"))?;
        let mut polygons: Vec<Vec<PlanePoint>> = Vec::new();
        let mut pairs: Vec<(EdgeRef, EdgeRef)> = Vec::new();
        let mut curves: Vec<(String, MarkedCurve)> = Vec::new();
        let parse_ref = |t: &str| -> Result<EdgeRef, SurfaceError> {
            let inner = t
                .trim()
                .strip_prefix('(')
                .and_then(|x| x.strip_suffix(')'))
                .ok_or_else(|| bad("edge reference must look like (p.e)"))?;
            let (p, e) = inner
                .split_once('.')
                .ok_or_else(|| bad("edge reference must look like (p.e)"))?;
            Ok(EdgeRef::new(
                p.trim().parse().map_err(|_| bad("bad polygon index"))?,
                e.trim().parse().map_err(|_| bad("bad edge index"))?,
            ))
        };
        for line in lines {
            let line = line.trim();
            if let Some(rest) = line.strip_prefix("polygon ") {
                let (idx, body) = rest
                    .split_once(':')
                    .ok_or_else(|| bad("polygon line needs a colon"))?;
                let idx: usize = idx.trim().parse().map_err(|_| bad("bad polygon index"))?;
                if idx != polygons.len() {
                    return Err(bad("polygon indices must be consecutive from 0"));
                }
                let verts: Result<Vec<PlanePoint>, _> = body
                    .split(';')
                    .map(|t| t.trim().parse::<PlanePoint>())
                    .collect();
                polygons.push(verts.map_err(|e| bad(&e.to_string()))?);
            } else if let Some(rest) = line.strip_prefix("pairing:") {
                for tok in rest.split_whitespace() {
                    let (a, b) = tok
                        .split_once(")-(")
                        .ok_or_else(|| bad("pairing entries look like (p.e)-(p.e)"))?;
                    let a = parse_ref(&format!("{})", a))?;
                    let b = parse_ref(&format!("({}", b))?;
                    pairs.push((a, b));
                }
            } else if let Some(rest) = line.strip_prefix("curve ") {
                let (name, body) = rest
                    .split_once(':')
                    .ok_or_else(|| bad("curve line needs a colon"))?;
                let refs: Result<Vec<EdgeRef>, _> =
                    body.split_whitespace().map(parse_ref).collect();
                curves.push((name.trim().to_string(), MarkedCurve::new(refs?)));
            } else {
                return Err(bad("unrecognized line"));
            }
        }
        let surface = TranslationSurface::new(polygons, &pairs)?;
        Ok((surface, curves))
    }
}

/// Nearest-integer quotient of two integers (ties toward even magnitudes do
/// not matter here, only |a - q b| <= |b| / 2).
fn rounded_quotient(a: &BigInt, b: &BigInt) -> BigInt {
    let two_a: BigInt = a * 2;
    let floor = two_a.div_floor(b);
    // q = round(a / b) = floor((2a + b) / (2b)) for positive b; handle signs
    // by the symmetric formula below.
    let q: BigInt = &floor + 1;
    let q = q.div_floor(&BigInt::from(2));
    debug_assert!((a - &q * b).abs() * 2 <= b.abs());
    q
}

/// Angular band of x relative to a: 0 when positively parallel, 1 in the
/// open counterclockwise half, 2 when antiparallel, 3 in the clockwise half.
fn band(a: &PlanePoint, x: &PlanePoint) -> u8 {
    let d = det2(a, x).qsign();
    if d > 0 {
        1
    } else if d < 0 {
        3
    } else if dot(a, x).qsign() > 0 {
        0
    } else {
        2
    }
}

/// Whether the counterclockwise sweep from direction `a` to direction `b`
/// (angle in (0, 2 pi], where positively parallel means a full turn) passes
/// through the positive x direction.
fn arc_crosses_positive_x(a: &PlanePoint, b: &PlanePoint) -> bool {
    let t = PlanePoint::from_ints(1, 0);
    let bt = band(a, &t);
    let bb = band(a, b);
    if bt == 0 {
        // The target ray coincides with the start: only a full turn reaches it.
        return bb == 0;
    }
    if bb == 0 {
        return true;
    }
    if bt != bb {
        return bt < bb;
    }
    match bt {
        2 => true,
        _ => det2(&t, b).qsign() >= 0,
    }
}

/// Outcome of one certificate check.
#[derive(Debug, Clone)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

/// The full pass/fail record of a certificate verification.
#[derive(Debug, Clone)]
pub struct VerificationReport {
    pub checks: Vec<CheckResult>,
}

impl VerificationReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

impl fmt::Display for VerificationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            let status = if c.passed { "pass" } else { "FAIL" };
            writeln!(f, "{} {}: {}", status, c.name, c.detail)?;
        }
        write!(
            f,
            "verdict: {}",
            if self.all_passed() { "valid" } else { "invalid" }
        )
    }
}

/// Re-derives every claim a realization certificate makes, reporting each
/// check separately: the change of basis is legitimate, the stated normal
/// form is the stated transform of the original character, the surface is
/// a valid translation surface of the right genus and stratum, the marked
/// curves form a symplectic homology basis with exactly the normal form's
/// periods, the volume identities hold, and in the lattice case the cover
/// degree is a valid integer.
pub fn verify_certificate(cert: &crate::builder::RealizationCertificate) -> VerificationReport {
    use crate::chi::{apply_gl, apply_sp, cover_data, image_group, volume, ImageClass};

    let mut checks = Vec::new();
    let mut push = |name: &'static str, passed: bool, detail: String| {
        checks.push(CheckResult {
            name,
            passed,
            detail,
        });
    };

    let gamma_ok = cert.gamma.is_symplectic();
    let det_a = cert.a.det();
    let a_ok = det_a.qsign() > 0;
    push(
        "change-of-basis",
        gamma_ok && a_ok,
        format!(
            "gamma {}symplectic, det A = {}",
            if gamma_ok { "" } else { "NOT " },
            det_a
        ),
    );

    match apply_sp(&cert.gamma, &cert.chi_original).and_then(|m| apply_gl(&cert.a, &m)) {
        Ok(recomputed) => {
            let same = recomputed == cert.chi_prime;
            push(
                "normal-form-identity",
                same,
                if same {
                    "A (gamma chi) reproduces the stated normal form".into()
                } else {
                    "stated normal form differs from A (gamma chi)".into()
                },
            );
        }
        Err(e) => push("normal-form-identity", false, e.to_string()),
    }

    let cycles = cert.surface.vertex_cycles();
    match &cycles {
        Ok(v) => push(
            "surface-valid",
            true,
            format!("{} polygons, {} vertices", cert.surface.polygons().len(), v.len()),
        ),
        Err(e) => push("surface-valid", false, e.to_string()),
    }

    let g = cert.chi_prime.genus();
    match cert.surface.euler_genus() {
        Ok(sg) => push(
            "genus",
            sg == g && cert.partition.genus() == g,
            format!("surface genus {}, character genus {}", sg, g),
        ),
        Err(e) => push("genus", false, e.to_string()),
    }

    match cert.surface.stratum() {
        Ok(orders) => {
            let same = orders == cert.partition.parts();
            push(
                "stratum",
                same,
                format!(
                    "cone orders {:?}, partition {:?}",
                    orders,
                    cert.partition.parts()
                ),
            );
        }
        Err(e) => push("stratum", false, e.to_string()),
    }

    let basis = &cert.marked_basis;
    if basis.len() != 2 * g {
        push(
            "marked-basis-symplectic",
            false,
            format!("expected {} marked curves, found {}", 2 * g, basis.len()),
        );
    } else {
        let mut sym_ok = true;
        let mut detail = String::from("intersection matrix is the standard form");
        'outer: for i in 0..2 * g {
            for j in 0..2 * g {
                let expected: i64 = if i / 2 == j / 2 {
                    if i + 1 == j {
                        1
                    } else if j + 1 == i {
                        -1
                    } else {
                        0
                    }
                } else {
                    0
                };
                match cert.surface.intersection_number(&basis[i], &basis[j]) {
                    Ok(n) => {
                        if n != BigInt::from(expected) {
                            sym_ok = false;
                            detail = format!(
                                "pairing of curves {} and {} is {}, expected {}",
                                i, j, n, expected
                            );
                            break 'outer;
                        }
                    }
                    Err(e) => {
                        sym_ok = false;
                        detail = e.to_string();
                        break 'outer;
                    }
                }
            }
        }
        push("marked-basis-symplectic", sym_ok, detail);
    }

    if basis.len() == 2 * g {
        let mut per_ok = true;
        let mut detail = String::from("all marked periods match the normal form");
        for (slot, curve) in basis.iter().enumerate() {
            let want = &cert.chi_prime.entries()[slot];
            match cert.surface.period(curve) {
                Ok(got) => {
                    if &got != want {
                        per_ok = false;
                        detail =
                            format!("curve {} has period {}, normal form says {}", slot, got, want);
                        break;
                    }
                }
                Err(e) => {
                    per_ok = false;
                    detail = e.to_string();
                    break;
                }
            }
        }
        push("marked-periods", per_ok, detail);
    } else {
        push(
            "marked-periods",
            false,
            "marked basis has the wrong length".into(),
        );
    }

    let vol_prime = volume(&cert.chi_prime);
    let vol_orig = volume(&cert.chi_original);
    let scaled = &det_a * &vol_orig;
    let mut vol_ok = vol_prime == scaled;
    let mut vol_detail = format!("volume {} = det(A) x {}", vol_prime, vol_orig);
    if !vol_ok {
        vol_detail = format!(
            "volume {} but det(A) x volume(original) = {}",
            vol_prime, scaled
        );
    } else if basis.len() == 2 * g {
        let mut surface_vol = crate::field::QuadElem::zero();
        let mut period_err = None;
        for h in 0..g {
            match (
                cert.surface.period(&basis[2 * h]),
                cert.surface.period(&basis[2 * h + 1]),
            ) {
                (Ok(pa), Ok(pb)) => surface_vol = &surface_vol + &det2(&pa, &pb),
                (Err(e), _) | (_, Err(e)) => {
                    period_err = Some(e);
                    break;
                }
            }
        }
        if let Some(e) = period_err {
            vol_ok = false;
            vol_detail = e.to_string();
        } else if surface_vol != vol_prime {
            vol_ok = false;
            vol_detail = format!(
                "marked-basis volume {} differs from character volume {}",
                surface_vol, vol_prime
            );
        }
    }
    push("volume-identity", vol_ok, vol_detail);

    if image_group(&cert.chi_original).class == ImageClass::Lattice {
        match cover_data(cert) {
            Ok(data) => push(
                "cover-degree",
                true,
                format!("lattice cover of degree {}", data.degree),
            ),
            Err(e) => push("cover-degree", false, e.to_string()),
        }
    } else {
        push(
            "cover-degree",
            true,
            "image group is not a lattice; nothing to check".into(),
        );
    }

    VerificationReport { checks }
}
