//! Slit diagrams: the combinatorial recipe for a surface before compilation.
//!
//! A diagram is a base parallelogram with straight cuts (slits) inside it
//! and a gluing role for each cut: members of a chain are re-glued to each
//! other cyclically, a handle slit opens onto an attached parallelogram, and
//! a cross slit opens crosswise onto a matching cut inside a fresh torus.
//! All geometry is exact; two slits may meet only at declared shared
//! endpoints.

use crate::field::{det2, dot, norm_sq, PlanePoint, QuadElem};

use super::BuildError;

/// A straight cut: the segment from `anchor` to `anchor + vector`.
#[derive(Debug, Clone, PartialEq)]
pub struct Slit {
    pub anchor: PlanePoint,
    pub vector: PlanePoint,
}

impl Slit {
    pub fn end(&self) -> PlanePoint {
        &self.anchor + &self.vector
    }
}

/// How the banks of one or more slits are identified.
#[derive(Debug, Clone, PartialEq)]
pub enum SlitGluing {
    /// Upper bank of member i glued to the lower bank of member i+1,
    /// cyclically. Members share one direction and length.
    Chain { members: Vec<usize> },
    /// Both banks glued to the long sides of an attached parallelogram with
    /// sides `(side_a, side_b)`, whose short sides are identified with each
    /// other; `side_a` equals the slit vector.
    Handle {
        slit: usize,
        side_a: PlanePoint,
        side_b: PlanePoint,
    },
    /// Banks glued crosswise to the banks of a parallel cut placed inside a
    /// fresh torus with sides `(side_a, side_b)`.
    Cross {
        slit: usize,
        side_a: PlanePoint,
        side_b: PlanePoint,
    },
}

/// Base parallelogram, slits, and their gluing roles.
#[derive(Debug, Clone, PartialEq)]
pub struct SlitDiagram {
    pub base_a: PlanePoint,
    pub base_b: PlanePoint,
    pub slits: Vec<Slit>,
    pub gluings: Vec<SlitGluing>,
}

impl SlitDiagram {
    pub fn new(base_a: PlanePoint, base_b: PlanePoint) -> Result<Self, BuildError> {
        if det2(&base_a, &base_b).qsign() <= 0 {
            return Err(BuildError::Precondition(
                "base parallelogram must be positively oriented",
            ));
        }
        Ok(SlitDiagram {
            base_a,
            base_b,
            slits: Vec::new(),
            gluings: Vec::new(),
        })
    }

    /// Coordinates of `z` in the basis `(base_a, base_b)`.
    pub fn base_coords(&self, z: &PlanePoint) -> (QuadElem, QuadElem) {
        let d = det2(&self.base_a, &self.base_b);
        (
            &det2(z, &self.base_b) / &d,
            &det2(&self.base_a, z) / &d,
        )
    }

    fn point_strictly_inside(&self, z: &PlanePoint) -> bool {
        let (x, y) = self.base_coords(z);
        x.qsign() > 0
            && y.qsign() > 0
            && (QuadElem::one() - &x).qsign() > 0
            && (QuadElem::one() - &y).qsign() > 0
    }

    /// Exact validity of one more slit: nonzero, strictly inside the base,
    /// and meeting existing slits only at shared endpoints.
    pub(crate) fn check_new_slit(&self, s: &Slit) -> Result<(), BuildError> {
        if s.vector.is_zero() {
            return Err(BuildError::Precondition("slit vector must be nonzero"));
        }
        let end = s.end();
        // The base is convex, so interior endpoints confine the segment.
        if !self.point_strictly_inside(&s.anchor) || !self.point_strictly_inside(&end) {
            return Err(BuildError::Placement(format!(
                "slit [{}, {}] leaves the base parallelogram",
                s.anchor, end
            )));
        }
        for old in &self.slits {
            if segments_conflict(&s.anchor, &end, &old.anchor, &old.end()) {
                return Err(BuildError::Placement(format!(
                    "slit [{}, {}] collides with slit [{}, {}]",
                    s.anchor,
                    end,
                    old.anchor,
                    old.end()
                )));
            }
        }
        Ok(())
    }

    pub(crate) fn push_slit(&mut self, s: Slit, role: SlitGluing) -> Result<usize, BuildError> {
        self.check_new_slit(&s)?;
        self.slits.push(s);
        self.gluings.push(role);
        Ok(self.slits.len() - 1)
    }
}

/// Sign of the turn a -> b -> c.
fn orient(a: &PlanePoint, b: &PlanePoint, c: &PlanePoint) -> i32 {
    det2(&(b - a), &(c - a)).qsign()
}

/// Whether `x` lies on the closed segment `[a, b]`, assuming collinearity.
fn on_collinear_segment(a: &PlanePoint, b: &PlanePoint, x: &PlanePoint) -> bool {
    // x on the line through a, b: inside iff (x-a).(x-b) <= 0.
    dot(&(x - a), &(x - b)).qsign() <= 0
}

/// Whether two positive-length segments touch anywhere other than at a
/// shared endpoint (interior crossings, endpoint-in-interior contacts, and
/// collinear overlaps of positive length all conflict).
pub(crate) fn segments_conflict(
    a1: &PlanePoint,
    b1: &PlanePoint,
    a2: &PlanePoint,
    b2: &PlanePoint,
) -> bool {
    let o1 = orient(a1, b1, a2);
    let o2 = orient(a1, b1, b2);
    let o3 = orient(a2, b2, a1);
    let o4 = orient(a2, b2, b1);
    if o1 * o2 < 0 && o3 * o4 < 0 {
        return true;
    }
    if o1 == 0 && o2 == 0 {
        // Same line. A positive-length common piece conflicts; touching at
        // one point means touching endpoints, which is legal.
        let mut interior_hits = 0;
        for (u, v, x) in [
            (a1, b1, a2),
            (a1, b1, b2),
            (a2, b2, a1),
            (a2, b2, b1),
        ] {
            if on_collinear_segment(u, v, x) && x != u && x != v {
                interior_hits += 1;
            }
        }
        if interior_hits > 0 {
            return true;
        }
        // Identical segments (possibly reversed) share both endpoints.
        return (a1 == a2 && b1 == b2) || (a1 == b2 && b1 == a2);
    }
    // Point contacts: an endpoint of one lying on the other must be an
    // endpoint of both.
    for (x, u, v, o) in [(a2, a1, b1, o1), (b2, a1, b1, o2), (a1, a2, b2, o3), (b1, a2, b2, o4)] {
        if o == 0 && on_collinear_segment(u, v, x) && x != u && x != v {
            return true;
        }
    }
    false
}

/// Adds a handle slit `[p, p + a]` and attaches the parallelogram with
/// sides `(a, b)` along it. The two ends of the slit merge into one cone
/// point, gaining 4π over the angle already there.
pub fn glue_handle_slit(
    diagram: &SlitDiagram,
    p: &PlanePoint,
    handle: (&PlanePoint, &PlanePoint),
) -> Result<SlitDiagram, BuildError> {
    let (a, b) = handle;
    if det2(a, b).qsign() <= 0 {
        return Err(BuildError::Precondition(
            "handle parallelogram must be positively oriented",
        ));
    }
    let mut next = diagram.clone();
    let idx = next.slits.len();
    next.push_slit(
        Slit {
            anchor: p.clone(),
            vector: a.clone(),
        },
        SlitGluing::Handle {
            slit: idx,
            side_a: a.clone(),
            side_b: b.clone(),
        },
    )?;
    Ok(next)
}

/// Adds a cross slit starting at `p` and glues it crosswise to a matching
/// cut inside a fresh torus with sides `handle`. This adds 2π of cone angle
/// at each end of the slit. The slit runs along the torus diagonal, scaled
/// down by the smallest power of two that places it legally; fails when no
/// scale up to 2^40 fits.
pub fn glue_odd_slit(
    diagram: &SlitDiagram,
    p: &PlanePoint,
    handle: (&PlanePoint, &PlanePoint),
) -> Result<SlitDiagram, BuildError> {
    let (a, b) = handle;
    if det2(a, b).qsign() <= 0 {
        return Err(BuildError::Precondition(
            "torus parallelogram must be positively oriented",
        ));
    }
    let diag = a + b;
    let mut n: i64 = 2;
    while n <= (1i64 << 40) {
        let w = diag.scale(&QuadElem::ratio(1, n));
        let cand = Slit {
            anchor: p.clone(),
            vector: w,
        };
        if diagram.check_new_slit(&cand).is_ok() {
            let mut next = diagram.clone();
            let idx = next.slits.len();
            next.push_slit(
                cand,
                SlitGluing::Cross {
                    slit: idx,
                    side_a: a.clone(),
                    side_b: b.clone(),
                },
            )?;
            return Ok(next);
        }
        n *= 2;
    }
    Err(BuildError::Placement(format!(
        "no legal cross slit at {} for torus ({}, {})",
        p, a, b
    )))
}

/// Adds a cross slit with an explicitly chosen vector `w` (computed by a
/// builder that already checked the far end lands where it wants it).
pub(crate) fn attach_cross_slit(
    diagram: &mut SlitDiagram,
    p: &PlanePoint,
    handle: (&PlanePoint, &PlanePoint),
    w: PlanePoint,
) -> Result<usize, BuildError> {
    let (a, b) = handle;
    if det2(a, b).qsign() <= 0 {
        return Err(BuildError::Precondition(
            "torus parallelogram must be positively oriented",
        ));
    }
    let idx = diagram.slits.len();
    diagram.push_slit(
        Slit {
            anchor: p.clone(),
            vector: w,
        },
        SlitGluing::Cross {
            slit: idx,
            side_a: a.clone(),
            side_b: b.clone(),
        },
    )
}

#[allow(unused)]
pub(crate) fn norm_below(v: &PlanePoint, bound: &QuadElem) -> bool {
    (&norm_sq(v) - &(bound * bound)).qsign() < 0
}
