//! Builders for characters whose image is dense in the plane.
//!
//! Both builders cut slits into a base torus and glue a sheet over each
//! slit: a parallelogram for an even cone order, a slit torus glued
//! crosswise for a pair of odd orders. The genus-two builder places one
//! slit in the unit base guaranteed by the genus-two normal form; the
//! general builder packs one slit cluster per cone-point group into
//! disjoint horizontal bands of the base parallelogram and fails with a
//! placement error, never a verdict, when the packing does not fit.

use crate::chi::{Partition, PeriodVector};
use crate::field::{det2, PlanePoint, QuadElem};
use crate::sp_action::generic_form_check;
use crate::surface::{EdgeRef, MarkedCurve, TranslationSurface};

use super::arrangement::{build_sheet, FaceRef, SheetComplex, SlitBanks, SlitSpec};
use super::diagram::{attach_cross_slit, glue_handle_slit, segments_conflict, Slit, SlitDiagram, SlitGluing};
use super::{assemble_certificate, BuildError, RealizationCertificate};

/// The scale at which the general builder requires the generic normal form:
/// dual-coordinate spreads below `1 / (8 (k + 1))` for a partition with `k`
/// parts, comfortably inside bands of halfwidth `1 / (4 (k + 1))`.
pub fn required_scale(part: &Partition) -> QuadElem {
    QuadElem::from_int(8 * (part.parts().len() as i64 + 1))
}

/// Affine chart of the base parallelogram: `(x, y)` in the unit square
/// stands for the plane point `x a + y b`.
struct Frame {
    a: PlanePoint,
    b: PlanePoint,
    d: QuadElem,
}

impl Frame {
    fn new(a: &PlanePoint, b: &PlanePoint) -> Result<Self, BuildError> {
        let d = det2(a, b);
        if d.qsign() <= 0 {
            return Err(BuildError::Precondition(
                "base handle must be positively oriented",
            ));
        }
        Ok(Frame {
            a: a.clone(),
            b: b.clone(),
            d,
        })
    }

    fn to_square(&self, z: &PlanePoint) -> PlanePoint {
        PlanePoint::new(&det2(z, &self.b) / &self.d, &det2(&self.a, z) / &self.d)
    }

    fn to_plane(&self, q: &PlanePoint) -> PlanePoint {
        &self.a.scale(&q.re) + &self.b.scale(&q.im)
    }
}

/// Polygons and gluings accumulated on the way to a translation surface.
struct Assembly {
    polygons: Vec<Vec<PlanePoint>>,
    pairs: Vec<(EdgeRef, EdgeRef)>,
}

fn refs(offset: usize, v: &[FaceRef]) -> Vec<EdgeRef> {
    v.iter().map(|r| EdgeRef::new(offset + r.0, r.1)).collect()
}

impl Assembly {
    fn new() -> Self {
        Assembly {
            polygons: Vec::new(),
            pairs: Vec::new(),
        }
    }

    /// Adds every face of an arranged square, mapped into the plane by
    /// `frame`, reseals its auxiliary cuts and identifies opposite boundary
    /// sides. Returns the polygon index offset of the sheet.
    fn push_torus_sheet(&mut self, c: &SheetComplex, frame: &Frame) -> usize {
        let offset = self.polygons.len();
        for face in &c.faces {
            self.polygons.push(
                face.iter()
                    .map(|e| frame.to_plane(&(&e.to - &e.from)))
                    .collect(),
            );
        }
        let at = |r: &FaceRef| EdgeRef::new(offset + r.0, r.1);
        for (x, y) in &c.aux_pairs {
            self.pairs.push((at(x), at(y)));
        }
        for (b, t) in c.bottom.iter().zip(&c.top) {
            self.pairs.push((at(b), at(t)));
        }
        for (r, l) in c.right_col.iter().zip(&c.left_col) {
            self.pairs.push((at(r), at(l)));
        }
        offset
    }

    /// Adds the parallelogram sheet of one handle slit, subdivided like the
    /// slit banks, and glues it in: sheet bottom along the right bank, sheet
    /// top along the left bank, short sides to each other. Returns the sheet
    /// polygon index and its piece count.
    fn push_handle_sheet(
        &mut self,
        base_offset: usize,
        banks: &SlitBanks,
        alpha: &PlanePoint,
        beta: &PlanePoint,
    ) -> (usize, usize) {
        let pid = self.polygons.len();
        let m = banks.left.len();
        let deltas: Vec<QuadElem> = (0..m)
            .map(|i| &banks.stations[i + 1] - &banks.stations[i])
            .collect();
        let mut poly = Vec::with_capacity(2 * m + 2);
        for dt in &deltas {
            poly.push(alpha.scale(dt));
        }
        poly.push(beta.clone());
        for dt in deltas.iter().rev() {
            poly.push(-&alpha.scale(dt));
        }
        poly.push(-beta);
        self.polygons.push(poly);
        for i in 0..m {
            let (bf, be) = banks.right[i];
            self.pairs
                .push((EdgeRef::new(base_offset + bf, be), EdgeRef::new(pid, i)));
            let (lf, le) = banks.left[i];
            self.pairs.push((
                EdgeRef::new(base_offset + lf, le),
                EdgeRef::new(pid, m + 1 + (m - 1 - i)),
            ));
        }
        self.pairs
            .push((EdgeRef::new(pid, m), EdgeRef::new(pid, 2 * m + 1)));
        (pid, m)
    }

    /// Glues the banks of a base slit crosswise to the banks of the inner
    /// slit of a torus sheet: base left bank to inner right bank and base
    /// right bank to inner left bank, piece by piece.
    fn cross_glue(
        &mut self,
        base_offset: usize,
        base: &SlitBanks,
        t_offset: usize,
        inner: &SlitBanks,
    ) -> Result<(), BuildError> {
        if base.stations != inner.stations {
            return Err(BuildError::Internal(
                "cross-glued banks subdivide differently".into(),
            ));
        }
        for i in 0..base.left.len() {
            let (a, b) = (base.left[i], inner.right[i]);
            self.pairs
                .push((EdgeRef::new(base_offset + a.0, a.1), EdgeRef::new(t_offset + b.0, b.1)));
            let (a, b) = (base.right[i], inner.left[i]);
            self.pairs
                .push((EdgeRef::new(base_offset + a.0, a.1), EdgeRef::new(t_offset + b.0, b.1)));
        }
        Ok(())
    }
}

/// The inner slit of a cross-glued torus sheet: the middle `1/n` stretch of
/// the square's diagonal, reversed when the base slit runs against the
/// diagonal.
fn inner_slit_spec(n: i64, flipped: bool, breaks: Vec<QuadElem>) -> SlitSpec {
    let lo = QuadElem::ratio(n - 1, 2 * n);
    let hi = QuadElem::ratio(n + 1, 2 * n);
    let a = PlanePoint::new(lo.clone(), lo);
    let b = PlanePoint::new(hi.clone(), hi);
    if flipped {
        SlitSpec {
            from: b,
            to: a,
            breaks,
        }
    } else {
        SlitSpec {
            from: a,
            to: b,
            breaks,
        }
    }
}

fn interior_stations(banks: &SlitBanks) -> Vec<QuadElem> {
    banks.stations[1..banks.stations.len() - 1].to_vec()
}

/// Builds a genus-two certificate from the normal form `(1, i, a2, b2)`
/// with `det(a2, b2) > 0` and `|a2| < 1`.
///
/// Stratum `(2)`: one slit of vector `a2`, centered, glued to the
/// parallelogram `(a2, b2)`; its ends merge into a single cone point of
/// angle six pi. Stratum `(1, 1)`: one centered slit along `(a2 + b2) / n`
/// for the smallest power of two keeping it inside the middle half of the
/// square, glued crosswise to a matching cut in the torus `(a2, b2)`; each
/// end becomes a cone point of angle four pi.
pub fn build_genus2(
    chi_prime: &PeriodVector,
    part: &Partition,
) -> Result<RealizationCertificate, BuildError> {
    if chi_prime.genus() != 2 || part.genus() != 2 {
        return Err(BuildError::Precondition(
            "genus-two builder needs a genus-two character",
        ));
    }
    if chi_prime.a(1) != &PlanePoint::from_ints(1, 0)
        || chi_prime.b(1) != &PlanePoint::from_ints(0, 1)
    {
        return Err(BuildError::Precondition(
            "leading handle must be the unit pair",
        ));
    }
    let alpha = chi_prime.a(2).clone();
    let beta = chi_prime.b(2).clone();
    if det2(&alpha, &beta).qsign() <= 0 {
        return Err(BuildError::Precondition(
            "second handle must be positively oriented",
        ));
    }
    let n2 = crate::field::norm_sq(&alpha);
    if (QuadElem::one() - &n2).qsign() <= 0 {
        return Err(BuildError::Precondition(
            "second a-period must be shorter than the base",
        ));
    }
    let frame = Frame::new(chi_prime.a(1), chi_prime.b(1))?;
    let diagram = SlitDiagram::new(chi_prime.a(1).clone(), chi_prime.b(1).clone())?;
    let half = QuadElem::ratio(1, 2);

    match part.parts() {
        [2] => {
            let p = PlanePoint::new(
                &half * &(QuadElem::one() - &alpha.re),
                &half * &(QuadElem::one() - &alpha.im),
            );
            glue_handle_slit(&diagram, &p, (&alpha, &beta))?;
            let complex = build_sheet(&[SlitSpec {
                from: p.clone(),
                to: &p + &alpha,
                breaks: vec![],
            }])?;
            let mut asm = Assembly::new();
            let base = asm.push_torus_sheet(&complex, &frame);
            let (pid, m) = asm.push_handle_sheet(base, &complex.slits[0], &alpha, &beta);
            let marked = vec![
                MarkedCurve::new(refs(base, &complex.bottom)),
                MarkedCurve::new(refs(base, &complex.right_col)),
                MarkedCurve::new(refs(base, &complex.slits[0].left)),
                MarkedCurve::new(vec![EdgeRef::new(pid, m)]),
            ];
            let surface = TranslationSurface::new(asm.polygons, &asm.pairs)?;
            assemble_certificate(chi_prime, part, surface, marked)
        }
        [1, 1] => {
            let diagonal = &alpha + &beta;
            let mut n: i64 = 2;
            let w = loop {
                if n > 1 << 40 {
                    return Err(BuildError::Placement(
                        "no scale fits the cross slit in the base".into(),
                    ));
                }
                let w = diagonal.scale(&QuadElem::ratio(1, n));
                let fits = (&half - &w.re).qsign() > 0
                    && (&half + &w.re).qsign() > 0
                    && (&half - &w.im).qsign() > 0
                    && (&half + &w.im).qsign() > 0;
                if fits {
                    break w;
                }
                n *= 2;
            };
            let p = PlanePoint::new(
                &half * &(QuadElem::one() - &w.re),
                &half * &(QuadElem::one() - &w.im),
            );
            let mut diagram = diagram;
            attach_cross_slit(&mut diagram, &p, (&alpha, &beta), w.clone())?;
            let complex = build_sheet(&[SlitSpec {
                from: p.clone(),
                to: &p + &w,
                breaks: vec![],
            }])?;
            let inner = inner_slit_spec(n, false, interior_stations(&complex.slits[0]));
            let t_complex = build_sheet(&[inner])?;
            let t_frame = Frame::new(&alpha, &beta)?;
            let mut asm = Assembly::new();
            let base = asm.push_torus_sheet(&complex, &frame);
            let t_offset = asm.push_torus_sheet(&t_complex, &t_frame);
            asm.cross_glue(base, &complex.slits[0], t_offset, &t_complex.slits[0])?;
            let marked = vec![
                MarkedCurve::new(refs(base, &complex.bottom)),
                MarkedCurve::new(refs(base, &complex.right_col)),
                MarkedCurve::new(refs(t_offset, &t_complex.bottom)),
                MarkedCurve::new(refs(t_offset, &t_complex.right_col)),
            ];
            let surface = TranslationSurface::new(asm.polygons, &asm.pairs)?;
            assemble_certificate(chi_prime, part, surface, marked)
        }
        _ => unreachable!("genus-two partitions are (2) and (1, 1)"),
    }
}

/// One cone-point group: a star of slits for an even order, or two stars
/// joined by a cross slit for a pair of odd orders.
enum Cluster {
    Star { handles: Vec<usize> },
    Pair {
        a_handles: Vec<usize>,
        b_handles: Vec<usize>,
        cross: usize,
    },
}

/// Groups the parts into clusters and assigns handle indices `2..=g` in
/// ascending part order: an even part `n` takes `n / 2` star handles; odd
/// parts pair up consecutively, the first taking `(n - 1) / 2` star
/// handles, the second the same plus one final handle for the cross torus.
fn clusters_of(part: &Partition) -> Vec<Cluster> {
    let mut out = Vec::new();
    let mut next = 2usize;
    let mut pending: Option<Vec<usize>> = None;
    for &n in part.parts() {
        let l = (n as usize) / 2;
        let handles: Vec<usize> = (next..next + l).collect();
        next += l;
        if n % 2 == 0 {
            out.push(Cluster::Star { handles });
        } else if let Some(a_handles) = pending.take() {
            out.push(Cluster::Pair {
                a_handles,
                b_handles: handles,
                cross: next,
            });
            next += 1;
        } else {
            pending = Some(handles);
        }
    }
    debug_assert!(pending.is_none(), "odd parts pair up");
    debug_assert_eq!(next, part.genus() + 1);
    out
}

/// Checks one cluster of slits given relative to its anchor: pairwise
/// disjoint apart from shared endpoints, and small enough to center in the
/// band around height `yc`. Returns the anchor placing its bounding box
/// center at `(1/2, yc)`.
fn fit_cluster(
    rel: &[(PlanePoint, PlanePoint)],
    yc: &QuadElem,
    halfwidth: &QuadElem,
) -> Option<PlanePoint> {
    for i in 0..rel.len() {
        for j in i + 1..rel.len() {
            if segments_conflict(&rel[i].0, &rel[i].1, &rel[j].0, &rel[j].1) {
                return None;
            }
        }
    }
    let mut points = Vec::with_capacity(2 * rel.len());
    for (a, b) in rel {
        points.push(a.clone());
        points.push(b.clone());
    }
    let xmin = points.iter().map(|p| p.re.clone()).min().unwrap();
    let xmax = points.iter().map(|p| p.re.clone()).max().unwrap();
    let ymin = points.iter().map(|p| p.im.clone()).min().unwrap();
    let ymax = points.iter().map(|p| p.im.clone()).max().unwrap();
    let half = QuadElem::ratio(1, 2);
    let anchor = PlanePoint::new(
        &half - &(&half * &(&xmin + &xmax)),
        yc - &(&half * &(&ymin + &ymax)),
    );
    for p in &points {
        let x = &anchor.re + &p.re;
        let y = &anchor.im + &p.im;
        if x.qsign() <= 0 || (QuadElem::one() - &x).qsign() <= 0 {
            return None;
        }
        if (&y - &(yc - halfwidth)).qsign() <= 0 || (&(yc + halfwidth) - &y).qsign() <= 0 {
            return None;
        }
    }
    Some(anchor)
}

/// What one base slit carries.
enum SlitRole {
    /// A star slit of vector `a_j`, glued to the parallelogram `(a_j, b_j)`.
    Handle { j: usize },
    /// A cross slit glued to the torus `(a_j, b_j)`, cut along `1/scale` of
    /// its diagonal, traversed backwards when `flipped`.
    Cross { j: usize, scale: i64, flipped: bool },
}

/// Builds a certificate for any genus from a character in generic normal
/// form at scale [`required_scale`]: positive handle determinants, trailing
/// a-periods clustered tightly in base coordinates, no positively parallel
/// pair among them.
///
/// Each part of the partition contributes one star of slits; odd parts pair
/// up and their stars are joined by a cross slit carrying a torus sheet.
/// Cluster `c` of `q` is centered at height `(c + 1) / (q + 1)` in a band
/// of halfwidth `1 / (4 (k + 1))`. Packing failures are placement errors:
/// the caller retries with a fresh normal form, since they say nothing
/// about realizability.
pub fn build_generic(
    chi_prime: &PeriodVector,
    part: &Partition,
) -> Result<RealizationCertificate, BuildError> {
    let g = chi_prime.genus();
    if part.genus() != g {
        return Err(BuildError::Precondition(
            "partition genus must match the character",
        ));
    }
    let scale = required_scale(part);
    if !generic_form_check(chi_prime, &scale)? {
        return Err(BuildError::Precondition(
            "character must be in generic normal form at the required scale",
        ));
    }
    let frame = Frame::new(chi_prime.a(1), chi_prime.b(1))?;
    let clusters = clusters_of(part);
    let q = clusters.len() as i64;
    let halfwidth = QuadElem::ratio(1, 4 * (part.parts().len() as i64 + 1));
    let mut diagram = SlitDiagram::new(chi_prime.a(1).clone(), chi_prime.b(1).clone())?;
    let mut specs: Vec<SlitSpec> = Vec::new();
    let mut roles: Vec<SlitRole> = Vec::new();

    for (c, cluster) in clusters.iter().enumerate() {
        let yc = QuadElem::ratio(c as i64 + 1, q + 1);
        match cluster {
            Cluster::Star { handles } => {
                let rel: Vec<(PlanePoint, PlanePoint)> = handles
                    .iter()
                    .map(|&j| (PlanePoint::zero(), frame.to_square(chi_prime.a(j))))
                    .collect();
                let anchor = fit_cluster(&rel, &yc, &halfwidth).ok_or_else(|| {
                    BuildError::Placement(format!("star cluster {} does not fit its band", c))
                })?;
                for (k, &j) in handles.iter().enumerate() {
                    let from = anchor.clone();
                    let to = &anchor + &rel[k].1;
                    let idx = diagram.slits.len();
                    diagram.push_slit(
                        Slit {
                            anchor: frame.to_plane(&from),
                            vector: chi_prime.a(j).clone(),
                        },
                        SlitGluing::Handle {
                            slit: idx,
                            side_a: chi_prime.a(j).clone(),
                            side_b: chi_prime.b(j).clone(),
                        },
                    )?;
                    specs.push(SlitSpec {
                        from,
                        to,
                        breaks: vec![],
                    });
                    roles.push(SlitRole::Handle { j });
                }
            }
            Cluster::Pair {
                a_handles,
                b_handles,
                cross,
            } => {
                let t_dir = frame.to_square(&(chi_prime.a(*cross) + chi_prime.b(*cross)));
                let mut found = None;
                let mut n: i64 = 2;
                'search: while n <= 1 << 40 {
                    for flipped in [false, true] {
                        let w = if flipped {
                            -&t_dir.scale(&QuadElem::ratio(1, n))
                        } else {
                            t_dir.scale(&QuadElem::ratio(1, n))
                        };
                        let mut rel: Vec<(PlanePoint, PlanePoint)> = a_handles
                            .iter()
                            .map(|&j| (PlanePoint::zero(), frame.to_square(chi_prime.a(j))))
                            .collect();
                        rel.push((PlanePoint::zero(), w.clone()));
                        for &j in b_handles {
                            rel.push((w.clone(), &w + &frame.to_square(chi_prime.a(j))));
                        }
                        if let Some(anchor) = fit_cluster(&rel, &yc, &halfwidth) {
                            found = Some((n, flipped, w, anchor));
                            break 'search;
                        }
                    }
                    n *= 2;
                }
                let (n, flipped, w, anchor) = found.ok_or_else(|| {
                    BuildError::Placement(format!("pair cluster {} does not fit its band", c))
                })?;
                for &j in a_handles {
                    let to = &anchor + &frame.to_square(chi_prime.a(j));
                    let idx = diagram.slits.len();
                    diagram.push_slit(
                        Slit {
                            anchor: frame.to_plane(&anchor),
                            vector: chi_prime.a(j).clone(),
                        },
                        SlitGluing::Handle {
                            slit: idx,
                            side_a: chi_prime.a(j).clone(),
                            side_b: chi_prime.b(j).clone(),
                        },
                    )?;
                    specs.push(SlitSpec {
                        from: anchor.clone(),
                        to,
                        breaks: vec![],
                    });
                    roles.push(SlitRole::Handle { j });
                }
                attach_cross_slit(
                    &mut diagram,
                    &frame.to_plane(&anchor),
                    (chi_prime.a(*cross), chi_prime.b(*cross)),
                    frame.to_plane(&w),
                )?;
                specs.push(SlitSpec {
                    from: anchor.clone(),
                    to: &anchor + &w,
                    breaks: vec![],
                });
                roles.push(SlitRole::Cross {
                    j: *cross,
                    scale: n,
                    flipped,
                });
                let far = &anchor + &w;
                for &j in b_handles {
                    let to = &far + &frame.to_square(chi_prime.a(j));
                    let idx = diagram.slits.len();
                    diagram.push_slit(
                        Slit {
                            anchor: frame.to_plane(&far),
                            vector: chi_prime.a(j).clone(),
                        },
                        SlitGluing::Handle {
                            slit: idx,
                            side_a: chi_prime.a(j).clone(),
                            side_b: chi_prime.b(j).clone(),
                        },
                    )?;
                    specs.push(SlitSpec {
                        from: far.clone(),
                        to,
                        breaks: vec![],
                    });
                    roles.push(SlitRole::Handle { j });
                }
            }
        }
    }

    let complex = build_sheet(&specs)?;
    let mut asm = Assembly::new();
    let base = asm.push_torus_sheet(&complex, &frame);
    let mut marked: Vec<Option<MarkedCurve>> = vec![None; 2 * g];
    marked[0] = Some(MarkedCurve::new(refs(base, &complex.bottom)));
    marked[1] = Some(MarkedCurve::new(refs(base, &complex.right_col)));
    for (s, role) in roles.iter().enumerate() {
        let banks = &complex.slits[s];
        match role {
            SlitRole::Handle { j } => {
                let (pid, m) =
                    asm.push_handle_sheet(base, banks, chi_prime.a(*j), chi_prime.b(*j));
                marked[2 * (j - 1)] = Some(MarkedCurve::new(refs(base, &banks.left)));
                marked[2 * (j - 1) + 1] = Some(MarkedCurve::new(vec![EdgeRef::new(pid, m)]));
            }
            SlitRole::Cross { j, scale, flipped } => {
                let inner = inner_slit_spec(*scale, *flipped, interior_stations(banks));
                let t_complex = build_sheet(&[inner])?;
                let t_frame = Frame::new(chi_prime.a(*j), chi_prime.b(*j))?;
                let t_offset = asm.push_torus_sheet(&t_complex, &t_frame);
                asm.cross_glue(base, banks, t_offset, &t_complex.slits[0])?;
                marked[2 * (j - 1)] = Some(MarkedCurve::new(refs(t_offset, &t_complex.bottom)));
                marked[2 * (j - 1) + 1] =
                    Some(MarkedCurve::new(refs(t_offset, &t_complex.right_col)));
            }
        }
    }
    let marked: Vec<MarkedCurve> = marked
        .into_iter()
        .map(|o| o.ok_or_else(|| BuildError::Internal("a handle was never assigned".into())))
        .collect::<Result<_, _>>()?;
    let surface = TranslationSurface::new(asm.polygons, &asm.pairs)?;
    assemble_certificate(chi_prime, part, surface, marked)
}
