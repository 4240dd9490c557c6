//! Surface builders: turn a normalized character into an explicit
//! translation surface together with a machine-checkable certificate.
//!
//! The entry point is [`realize`], which decides realizability and then
//! dispatches on the image group of the character: plane lattices go through
//! the strip-based builders ([`build_lattice_minimal`], [`build_lattice_multi`]),
//! genus two goes through [`build_genus2`], and everything else through the
//! slit-packing builder [`build_generic`]. Every certificate that leaves
//! this module carries the change of basis that produced the normal form,
//! the compiled polygon surface, and a marked homology basis whose periods
//! reproduce the character entry by entry.

mod arrangement;
mod diagram;
mod generic;
mod lattice;

pub use diagram::{glue_handle_slit, glue_odd_slit, Slit, SlitDiagram, SlitGluing};
pub use generic::{build_generic, build_genus2, required_scale};
pub use lattice::{build_lattice_minimal, build_lattice_multi, lattice_m_vector};

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_traits::{One, Zero};
use thiserror::Error;

use crate::chi::{
    decide, image_group, ChiError, ImageClass, PeriodVector, Partition, Reason, Verdict,
};
use crate::field::{GlPlus, QuadElem};
use crate::sp_action::{
    generic_normalize_heuristic, genus2_normalize, lattice_normal_form, NormalForm, SpError,
    SpMatrix,
};
use crate::surface::{MarkedCurve, SurfaceError, TranslationSurface};

#[derive(Debug, Error)]
pub enum BuildError {
    #[error("precondition violated: {0}")]
    Precondition(&'static str),
    #[error("placement failed: {0}")]
    Placement(String),
    #[error("surface assembly failed: {0}")]
    Surface(#[from] SurfaceError),
    #[error("change of basis failed: {0}")]
    Normalize(#[from] SpError),
    #[error("character arithmetic failed: {0}")]
    Chi(#[from] ChiError),
    #[error("bad certificate text: {0}")]
    BadLiteral(String),
    #[error("internal consistency check failed: {0}")]
    Internal(String),
}

/// A complete, self-contained witness of realizability.
///
/// The fields satisfy `chi_prime = a (gamma chi_original)`, the marked basis
/// has the standard symplectic intersection matrix on `surface`, and the
/// period of the j-th marked curve equals the j-th entry of `chi_prime`.
#[derive(Debug, Clone)]
pub struct RealizationCertificate {
    pub chi_original: PeriodVector,
    pub a: GlPlus,
    pub gamma: SpMatrix,
    pub chi_prime: PeriodVector,
    pub partition: Partition,
    pub surface: TranslationSurface,
    pub marked_basis: Vec<MarkedCurve>,
}

/// Outcome of [`realize`]: all three answers are values, not errors.
#[derive(Debug, Clone)]
pub enum Realization {
    Certificate(Box<RealizationCertificate>),
    NotRealizable(Reason),
    HeuristicExhausted,
}

/// Tuning knobs for [`realize`].
#[derive(Debug, Clone)]
pub struct RealizeOptions {
    /// Slit-packing scale passed to the generic form check; the builder
    /// raises it to its own minimum when too small. `None` lets the builder
    /// pick.
    pub m_scale: Option<QuadElem>,
    /// Step budget for each run of the normalization heuristic.
    pub max_steps: usize,
    /// Seed for the normalization heuristic; retries derive fresh seeds.
    pub seed: u64,
}

impl Default for RealizeOptions {
    fn default() -> Self {
        RealizeOptions {
            m_scale: None,
            max_steps: 4000,
            seed: 1,
        }
    }
}

/// Number of reseeded heuristic runs before giving up.
const HEURISTIC_ATTEMPTS: u64 = 8;

/// Decides realizability and, in the positive case, builds a certificate.
///
/// Dispatch: lattice image goes to the strip builders in normal form
/// `(p, i, 1, 0, m_3, 0, ...)`; a dense plane image in genus 2 goes through
/// `genus2_normalize` and `build_genus2`; higher genus runs the
/// normalization heuristic and `build_generic`, retrying with fresh seeds
/// and reporting `HeuristicExhausted` when the budget runs out (a packing
/// failure is not evidence of non-realizability).
pub fn realize(
    chi: &PeriodVector,
    part: &Partition,
    options: &RealizeOptions,
) -> Result<Realization, BuildError> {
    let g = chi.genus();
    if part.genus() != g {
        return Err(BuildError::Precondition(
            "partition genus must match the character",
        ));
    }
    match decide(chi, part)? {
        Verdict::NotRealizable(reason) => return Ok(Realization::NotRealizable(reason)),
        Verdict::Realizable => {}
    }
    let report = image_group(chi);
    match report.class {
        ImageClass::Lattice => {
            let m = lattice_m_vector(part);
            let nf = lattice_normal_form(chi, &m)?;
            let cert = if part.parts().len() == 1 {
                build_lattice_minimal(&nf.chi_prime, g)?
            } else {
                build_lattice_multi(&nf.chi_prime, part)?
            };
            Ok(Realization::Certificate(Box::new(finish(chi, nf, cert)?)))
        }
        ImageClass::PlaneDense if g == 2 => {
            let nf = genus2_normalize(chi)?;
            let cert = build_genus2(&nf.chi_prime, part)?;
            Ok(Realization::Certificate(Box::new(finish(chi, nf, cert)?)))
        }
        ImageClass::PlaneDense => {
            let floor = required_scale(part);
            let m_scale = match &options.m_scale {
                Some(m) if (m - &floor).qsign() > 0 => m.clone(),
                _ => floor,
            };
            for attempt in 0..HEURISTIC_ATTEMPTS {
                let seed = options.seed.wrapping_add(attempt);
                let nf = match generic_normalize_heuristic(chi, &m_scale, options.max_steps, seed)?
                {
                    Some(nf) => nf,
                    None => continue,
                };
                match build_generic(&nf.chi_prime, part) {
                    Ok(cert) => {
                        return Ok(Realization::Certificate(Box::new(finish(chi, nf, cert)?)))
                    }
                    Err(BuildError::Placement(_)) => continue,
                    Err(e) => return Err(e),
                }
            }
            Ok(Realization::HeuristicExhausted)
        }
        _ => Err(BuildError::Internal(
            "positive volume with a degenerate image group".into(),
        )),
    }
}

/// Stamps the original character and its change of basis onto a certificate
/// built in normal-form coordinates, then re-runs the full verification.
fn finish(
    chi: &PeriodVector,
    nf: NormalForm,
    mut cert: RealizationCertificate,
) -> Result<RealizationCertificate, BuildError> {
    if cert.chi_prime != nf.chi_prime {
        return Err(BuildError::Internal(
            "builder output does not match the normal form".into(),
        ));
    }
    cert.chi_original = chi.clone();
    cert.a = nf.a;
    cert.gamma = nf.gamma;
    let report = crate::surface::verify_certificate(&cert);
    if !report.all_passed() {
        return Err(BuildError::Internal(format!(
            "certificate failed verification:\n{}",
            report
        )));
    }
    Ok(cert)
}

/// Validates a freshly built surface against the normal form it realizes and
/// packages the certificate (with identity change of basis).
///
/// The marked curves arrive in the order `a_1, b_1, ..., a_g, b_g`. Curves
/// of period zero may be recorded with either orientation by the engines;
/// this repairs their signs before requiring the intersection matrix to be
/// exactly the standard symplectic form.
pub(crate) fn assemble_certificate(
    chi_prime: &PeriodVector,
    part: &Partition,
    surface: TranslationSurface,
    mut marked: Vec<MarkedCurve>,
) -> Result<RealizationCertificate, BuildError> {
    let g = chi_prime.genus();
    if part.genus() != g {
        return Err(BuildError::Precondition(
            "partition genus must match the character",
        ));
    }
    if marked.len() != 2 * g {
        return Err(BuildError::Internal(format!(
            "expected {} marked curves, engine produced {}",
            2 * g,
            marked.len()
        )));
    }
    let sg = surface.euler_genus()?;
    if sg != g {
        return Err(BuildError::Internal(format!(
            "surface has genus {}, expected {}",
            sg, g
        )));
    }
    let orders = surface.stratum()?;
    if orders != part.parts() {
        return Err(BuildError::Internal(format!(
            "surface lies in stratum {:?}, expected {:?}",
            orders,
            part.parts()
        )));
    }
    for (j, want) in chi_prime.entries().iter().enumerate() {
        let got = surface.period(&marked[j])?;
        if &got != want {
            return Err(BuildError::Internal(format!(
                "marked curve {} has period {}, expected {}",
                j, got, want
            )));
        }
    }
    // Sign repair: a period-zero curve represents the same homology class up
    // to orientation, so flip it when its partner pairing comes out at -1.
    for j in 0..g {
        let x = surface.intersection_number(&marked[2 * j], &marked[2 * j + 1])?;
        if x == BigInt::from(-1) && surface.period(&marked[2 * j + 1])?.is_zero() {
            marked[2 * j + 1] = reverse_curve(&surface, &marked[2 * j + 1]);
        }
    }
    let gram = intersection_matrix(&surface, &marked)?;
    let expected = standard_form(g);
    if gram != expected {
        return Err(BuildError::Internal(format!(
            "marked basis has intersection matrix {:?}, expected the standard form",
            gram
        )));
    }
    Ok(RealizationCertificate {
        chi_original: chi_prime.clone(),
        a: GlPlus::identity(),
        gamma: SpMatrix::identity(g),
        chi_prime: chi_prime.clone(),
        partition: part.clone(),
        surface,
        marked_basis: marked,
    })
}

/// The same path traversed backwards: each directed edge is replaced by its
/// glued partner, in reverse order.
fn reverse_curve(surface: &TranslationSurface, c: &MarkedCurve) -> MarkedCurve {
    MarkedCurve::new(c.edges.iter().rev().map(|e| surface.pair(*e)).collect())
}

pub(crate) fn intersection_matrix(
    surface: &TranslationSurface,
    curves: &[MarkedCurve],
) -> Result<Vec<Vec<BigInt>>, SurfaceError> {
    let n = curves.len();
    let mut m = vec![vec![BigInt::zero(); n]; n];
    for i in 0..n {
        for j in 0..n {
            if i != j {
                m[i][j] = surface.intersection_number(&curves[i], &curves[j])?;
            }
        }
    }
    Ok(m)
}

pub(crate) fn standard_form(g: usize) -> Vec<Vec<BigInt>> {
    let n = 2 * g;
    let mut m = vec![vec![BigInt::zero(); n]; n];
    for i in 0..g {
        m[2 * i][2 * i + 1] = BigInt::one();
        m[2 * i + 1][2 * i] = -BigInt::one();
    }
    m
}

impl RealizationCertificate {
    /// Serializes the certificate as a single text document: partition,
    /// change of basis, both characters, and the surface with its marked
    /// curves in TSURF form.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        s.push_str("CERT 1\n");
        s.push_str(&format!("partition {}\n", self.partition));
        let e = self.a.entries();
        s.push_str(&format!("a {} {} {} {}\n", e[0], e[1], e[2], e[3]));
        s.push_str("gamma\n");
        s.push_str(&format!("{}\n", self.gamma));
        s.push_str("chi\n");
        s.push_str(&format!("{}\nend\n", self.chi_original));
        s.push_str("chi-prime\n");
        s.push_str(&format!("{}\nend\n", self.chi_prime));
        let named: Vec<(String, MarkedCurve)> = self
            .marked_basis
            .iter()
            .enumerate()
            .map(|(j, c)| (curve_name(j), c.clone()))
            .collect();
        s.push_str("surface\n");
        s.push_str(&self.surface.to_text(&named));
        s.push_str("end\n");
        s
    }

    /// Parses the output of [`RealizationCertificate::to_text`]. The result
    /// satisfies the structural certificate invariants but is not
    /// re-verified here; run the surface verifier for that.
    pub fn from_text(text: &str) -> Result<Self, BuildError> {
        let bad = |m: &str| BuildError::BadLiteral(m.into());
        let mut lines = text.lines().peekable();
        let header = lines.next().ok_or_else(|| bad("empty input"))?;
        if header.trim() != "CERT 1" {
            return Err(bad("header must be `CERT 1`"));
        }
        let mut partition: Option<Partition> = None;
        let mut a: Option<GlPlus> = None;
        let mut gamma: Option<SpMatrix> = None;
        let mut chi: Option<PeriodVector> = None;
        let mut chi_prime: Option<PeriodVector> = None;
        let mut surface_text: Option<String> = None;
        let collect_block = |lines: &mut std::iter::Peekable<std::str::Lines>| -> Result<String, BuildError> {
            let mut body = String::new();
            for line in lines.by_ref() {
                if line.trim() == "end" {
                    return Ok(body);
                }
                body.push_str(line);
                body.push('\n');
            }
            Err(bad("unterminated block"))
        };
        while let Some(line) = lines.next() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix("partition ") {
                partition = Some(rest.parse().map_err(|e: ChiError| bad(&e.to_string()))?);
            } else if let Some(rest) = line.strip_prefix("a ") {
                let toks: Vec<&str> = rest.split_whitespace().collect();
                if toks.len() != 4 {
                    return Err(bad("the `a` line needs four entries"));
                }
                let q: Result<Vec<QuadElem>, _> =
                    toks.iter().map(|t| QuadElem::from_str(t)).collect();
                let q = q.map_err(|e| bad(&e.to_string()))?;
                a = Some(
                    GlPlus::new(q[0].clone(), q[1].clone(), q[2].clone(), q[3].clone())
                        .map_err(|e| bad(&e.to_string()))?,
                );
            } else if line == "gamma" {
                let mut body = String::new();
                let g_line = lines.next().ok_or_else(|| bad("missing gamma body"))?;
                let gv: usize = g_line
                    .trim()
                    .parse()
                    .map_err(|_| bad("bad genus in gamma block"))?;
                body.push_str(g_line);
                body.push('\n');
                for _ in 0..2 * gv {
                    let row = lines.next().ok_or_else(|| bad("short gamma block"))?;
                    body.push_str(row);
                    body.push('\n');
                }
                gamma = Some(body.parse().map_err(|e: SpError| bad(&e.to_string()))?);
            } else if line == "chi" {
                let body = collect_block(&mut lines)?;
                chi = Some(body.parse().map_err(|e: ChiError| bad(&e.to_string()))?);
            } else if line == "chi-prime" {
                let body = collect_block(&mut lines)?;
                chi_prime = Some(body.parse().map_err(|e: ChiError| bad(&e.to_string()))?);
            } else if line == "surface" {
                surface_text = Some(collect_block(&mut lines)?);
            } else {
                return Err(bad(&format!("unrecognized line: {}", line)));
            }
        }
        let (surface, named) = TranslationSurface::from_text(
            &surface_text.ok_or_else(|| bad("missing surface block"))?,
        )?;
        let chi_prime = chi_prime.ok_or_else(|| bad("missing chi-prime block"))?;
        let g = chi_prime.genus();
        let mut marked = vec![None; 2 * g];
        for (name, c) in named {
            let slot = curve_slot(&name, g).ok_or_else(|| bad(&format!("bad curve name {}", name)))?;
            marked[slot] = Some(c);
        }
        let marked: Option<Vec<MarkedCurve>> = marked.into_iter().collect();
        Ok(RealizationCertificate {
            chi_original: chi.ok_or_else(|| bad("missing chi block"))?,
            a: a.ok_or_else(|| bad("missing a line"))?,
            gamma: gamma.ok_or_else(|| bad("missing gamma block"))?,
            chi_prime,
            partition: partition.ok_or_else(|| bad("missing partition line"))?,
            surface,
            marked_basis: marked.ok_or_else(|| bad("incomplete marked basis"))?,
        })
    }
}

/// `a1, b1, a2, b2, ...` for slots `0, 1, 2, 3, ...`.
fn curve_name(slot: usize) -> String {
    let handle = slot / 2 + 1;
    if slot % 2 == 0 {
        format!("a{}", handle)
    } else {
        format!("b{}", handle)
    }
}

fn curve_slot(name: &str, g: usize) -> Option<usize> {
    let (kind, idx) = name.split_at(1);
    let handle: usize = idx.parse().ok()?;
    if handle == 0 || handle > g {
        return None;
    }
    match kind {
        "a" => Some(2 * (handle - 1)),
        "b" => Some(2 * (handle - 1) + 1),
        _ => None,
    }
}

impl fmt::Display for Realization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Realization::Certificate(_) => write!(f, "certificate"),
            Realization::NotRealizable(r) => write!(f, "not realizable: {}", r),
            Realization::HeuristicExhausted => write!(f, "heuristic exhausted"),
        }
    }
}

#[cfg(test)]
mod tests;
