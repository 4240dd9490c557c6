use super::lattice::{split_groups, LatticeGroup};
use super::*;
use crate::chi::{cover_data, PeriodVector};
use crate::field::{PlanePoint, QuadElem};
use crate::surface::verify_certificate;

fn chi_ints(pairs: &[(i64, i64)]) -> PeriodVector {
    PeriodVector::from_ints(pairs).unwrap()
}

fn part(parts: &[u32]) -> Partition {
    Partition::new(parts.to_vec()).unwrap()
}

fn pt(re: i64, im: i64) -> PlanePoint {
    PlanePoint::from_ints(re, im)
}

/// Sorted list of cone angles as multiples of 2 pi, regular points skipped.
fn cone_turns(cert: &RealizationCertificate) -> Vec<u32> {
    let mut turns: Vec<u32> = cert
        .surface
        .vertex_cycles()
        .unwrap()
        .iter()
        .map(|c| c.turns)
        .filter(|&t| t > 1)
        .collect();
    turns.sort();
    turns
}

fn assert_verified(cert: &RealizationCertificate) {
    let report = verify_certificate(cert);
    assert!(report.all_passed(), "{}", report);
}

#[test]
fn groups_pair_equal_orders_first() {
    assert_eq!(split_groups(&part(&[2, 2])), vec![LatticeGroup::EqualPair(2)]);
    assert_eq!(split_groups(&part(&[6])), vec![LatticeGroup::EvenSingle(6)]);
    assert_eq!(
        split_groups(&part(&[3, 5, 5, 5])),
        vec![LatticeGroup::EqualPair(5), LatticeGroup::OddPair(3, 5)]
    );
    assert_eq!(
        split_groups(&part(&[4, 6])),
        vec![LatticeGroup::EvenSingle(4), LatticeGroup::EvenSingle(6)]
    );
    assert_eq!(
        split_groups(&part(&[1, 3])),
        vec![LatticeGroup::OddPair(1, 3)]
    );
}

#[test]
fn m_vector_concatenates_group_gaps() {
    assert_eq!(lattice_m_vector(&part(&[1, 1])), vec![1]);
    assert_eq!(lattice_m_vector(&part(&[2, 2])), vec![1, 1]);
    assert_eq!(lattice_m_vector(&part(&[6])), vec![1, 2, 2]);
    assert_eq!(lattice_m_vector(&part(&[1, 3])), vec![1, 1]);
    assert_eq!(lattice_m_vector(&part(&[4, 6])), vec![1, 2, 1, 2, 2]);
    // Nine unit gaps: two odd groups of five slits and four slits.
    assert_eq!(lattice_m_vector(&part(&[3, 5, 5, 5])), vec![1; 9]);
}

#[test]
fn minimal_stratum_h2() {
    let chi = chi_ints(&[(3, 0), (0, 1), (1, 0), (0, 0)]);
    let cert = build_lattice_minimal(&chi, 2).unwrap();
    assert_eq!(cert.surface.stratum().unwrap(), vec![2]);
    assert_eq!(cone_turns(&cert), vec![3]);
    assert_verified(&cert);
}

#[test]
fn minimal_stratum_h6() {
    let chi = chi_ints(&[
        (7, 0),
        (0, 1),
        (1, 0),
        (0, 0),
        (2, 0),
        (0, 0),
        (2, 0),
        (0, 0),
    ]);
    let cert = build_lattice_minimal(&chi, 4).unwrap();
    assert_eq!(cert.surface.stratum().unwrap(), vec![6]);
    assert_eq!(cone_turns(&cert), vec![7]);
    assert_verified(&cert);
}

#[test]
fn minimal_volume_bound_is_sharp() {
    let low = chi_ints(&[(2, 0), (0, 1), (1, 0), (0, 0)]);
    assert!(matches!(
        build_lattice_minimal(&low, 2),
        Err(BuildError::Precondition(_))
    ));
    let ok = chi_ints(&[(3, 0), (0, 1), (1, 0), (0, 0)]);
    assert!(build_lattice_minimal(&ok, 2).is_ok());
}

#[test]
fn multi_equal_pair_h11() {
    let chi = chi_ints(&[(2, 0), (0, 1), (1, 0), (0, 0)]);
    let cert = build_lattice_multi(&chi, &part(&[1, 1])).unwrap();
    assert_eq!(cert.surface.stratum().unwrap(), vec![1, 1]);
    assert_eq!(cone_turns(&cert), vec![2, 2]);
    assert_verified(&cert);
}

#[test]
fn multi_equal_pair_h22() {
    let chi = chi_ints(&[(3, 0), (0, 1), (1, 0), (0, 0), (1, 0), (0, 0)]);
    let cert = build_lattice_multi(&chi, &part(&[2, 2])).unwrap();
    assert_eq!(cert.surface.stratum().unwrap(), vec![2, 2]);
    assert_eq!(cone_turns(&cert), vec![3, 3]);
    assert_verified(&cert);
}

#[test]
fn multi_odd_pair_h13() {
    let chi = chi_ints(&[(4, 0), (0, 1), (1, 0), (0, 0), (1, 0), (0, 0)]);
    let cert = build_lattice_multi(&chi, &part(&[1, 3])).unwrap();
    assert_eq!(cert.surface.stratum().unwrap(), vec![1, 3]);
    assert_eq!(cone_turns(&cert), vec![2, 4]);
    assert_verified(&cert);
}

#[test]
fn multi_two_even_groups_h46() {
    let chi = chi_ints(&[
        (7, 0),
        (0, 1),
        (1, 0),
        (0, 0),
        (2, 0),
        (0, 0),
        (1, 0),
        (0, 0),
        (2, 0),
        (0, 0),
        (2, 0),
        (0, 0),
    ]);
    let cert = build_lattice_multi(&chi, &part(&[4, 6])).unwrap();
    assert_eq!(cert.surface.stratum().unwrap(), vec![4, 6]);
    assert_eq!(cone_turns(&cert), vec![5, 7]);
    assert_verified(&cert);
}

#[test]
fn multi_mixed_groups_h355() {
    // Partition (3, 5, 5, 5): an equal pair of fives and an odd pair (3, 5),
    // nine unit gaps, sharp volume bound p = 6.
    let mut entries = vec![(6, 0), (0, 1)];
    for _ in 0..9 {
        entries.push((1, 0));
        entries.push((0, 0));
    }
    let chi = chi_ints(&entries);
    let cert = build_lattice_multi(&chi, &part(&[3, 5, 5, 5])).unwrap();
    assert_eq!(cert.surface.stratum().unwrap(), vec![3, 5, 5, 5]);
    assert_eq!(cone_turns(&cert), vec![4, 6, 6, 6]);
    assert_verified(&cert);
}

#[test]
fn multi_volume_bound_is_sharp() {
    let chi = chi_ints(&[(2, 0), (0, 1), (1, 0), (0, 0), (1, 0), (0, 0)]);
    assert!(matches!(
        build_lattice_multi(&chi, &part(&[2, 2])),
        Err(BuildError::Precondition(_))
    ));
}

#[test]
fn multi_rejects_wrong_gaps() {
    let chi = chi_ints(&[(4, 0), (0, 1), (2, 0), (0, 0)]);
    assert!(matches!(
        build_lattice_multi(&chi, &part(&[1, 1])),
        Err(BuildError::Precondition(_))
    ));
}

#[test]
fn handle_slit_inside_base_is_accepted() {
    let d = SlitDiagram::new(pt(10, 0), pt(0, 10)).unwrap();
    let d = glue_handle_slit(&d, &pt(2, 2), (&pt(1, 0), &pt(0, 1))).unwrap();
    assert_eq!(d.slits.len(), 1);
    assert_eq!(d.slits[0].anchor, pt(2, 2));
    assert_eq!(d.slits[0].vector, pt(1, 0));
}

#[test]
fn handle_slit_leaving_base_is_rejected() {
    let d = SlitDiagram::new(pt(10, 0), pt(0, 10)).unwrap();
    assert!(matches!(
        glue_handle_slit(&d, &pt(2, 2), (&pt(20, 0), &pt(0, 1))),
        Err(BuildError::Placement(_))
    ));
}

#[test]
fn handle_slit_needs_positive_determinant() {
    let d = SlitDiagram::new(pt(10, 0), pt(0, 10)).unwrap();
    assert!(matches!(
        glue_handle_slit(&d, &pt(2, 2), (&pt(1, 0), &pt(0, -1))),
        Err(BuildError::Precondition(_))
    ));
}

#[test]
fn odd_slit_shrinks_until_it_fits() {
    let d = SlitDiagram::new(pt(10, 0), pt(0, 10)).unwrap();
    let d = glue_odd_slit(&d, &pt(5, 5), (&pt(1, 0), &pt(0, 1))).unwrap();
    assert_eq!(d.slits.len(), 1);
    // (1 + i) / 2 fits on the first try.
    assert_eq!(d.slits[0].vector, PlanePoint::new(
        crate::field::QuadElem::ratio(1, 2),
        crate::field::QuadElem::ratio(1, 2),
    ));
}

#[test]
fn odd_slit_crossing_existing_slit_is_rejected() {
    let d = SlitDiagram::new(pt(10, 0), pt(0, 10)).unwrap();
    // An existing slit leaving the same anchor in the same direction blocks
    // every shrinking of the new one: a + b points along (1, 1).
    let d = glue_handle_slit(&d, &pt(5, 5), (&pt(2, 2), &pt(0, 1))).unwrap();
    assert!(matches!(
        glue_odd_slit(&d, &pt(5, 5), (&pt(1, 0), &pt(0, 1))),
        Err(BuildError::Placement(_))
    ));
}

#[test]
fn realize_builds_lattice_certificates() {
    let chi = chi_ints(&[(3, 0), (0, 1), (1, 0), (0, 0)]);
    let out = realize(&chi, &part(&[2]), &RealizeOptions::default()).unwrap();
    match out {
        Realization::Certificate(cert) => {
            assert_eq!(cert.chi_original, chi);
            assert!(cert.gamma.is_symplectic());
            assert_verified(&cert);
        }
        other => panic!("expected a certificate, got {}", other),
    }
}

#[test]
fn realize_reports_negative_verdicts_as_values() {
    let chi = chi_ints(&[(1, 0), (0, 1), (0, 0), (0, 0)]);
    let out = realize(&chi, &part(&[1, 1]), &RealizeOptions::default()).unwrap();
    assert!(matches!(out, Realization::NotRealizable(_)));
}

#[test]
fn realize_exhausts_honestly_without_steps() {
    // Dense plane image in genus 3; a zero step budget can never reach the
    // generic normal form, and that must surface as exhaustion, not as a
    // non-realizability claim.
    let q = crate::field::QuadElem::quad(0, 1, 2);
    let chi = PeriodVector::new(vec![
        PlanePoint::new(crate::field::QuadElem::from_int(5), crate::field::QuadElem::zero()),
        PlanePoint::new(crate::field::QuadElem::zero(), crate::field::QuadElem::from_int(5)),
        PlanePoint::new(q.clone(), crate::field::QuadElem::zero()),
        PlanePoint::new(crate::field::QuadElem::zero(), q.clone()),
        PlanePoint::new(crate::field::QuadElem::one(), q.clone()),
        PlanePoint::new(q, crate::field::QuadElem::one()),
    ])
    .unwrap();
    let options = RealizeOptions {
        max_steps: 0,
        ..RealizeOptions::default()
    };
    let out = realize(&chi, &part(&[1, 1, 1, 1]), &options).unwrap();
    assert!(matches!(out, Realization::HeuristicExhausted));
}

#[test]
fn cover_degree_counts_sheets() {
    let chi = chi_ints(&[(3, 0), (0, 1), (1, 0), (0, 0)]);
    let cert = build_lattice_minimal(&chi, 2).unwrap();
    let data = cover_data(&cert).unwrap();
    assert_eq!(data.degree, 3.into());
    assert_eq!(data.branch_orders.parts(), &[2]);

    let chi = chi_ints(&[(4, 0), (0, 1), (1, 0), (0, 0)]);
    let cert = build_lattice_multi(&chi, &part(&[1, 1])).unwrap();
    let data = cover_data(&cert).unwrap();
    assert_eq!(data.degree, 4.into());
}

#[test]
fn certificate_text_roundtrip() {
    let chi = chi_ints(&[(4, 0), (0, 1), (1, 0), (0, 0), (1, 0), (0, 0)]);
    let cert = build_lattice_multi(&chi, &part(&[1, 3])).unwrap();
    let text = cert.to_text();
    let parsed = RealizationCertificate::from_text(&text).unwrap();
    assert_eq!(parsed.chi_prime, cert.chi_prime);
    assert_eq!(parsed.chi_original, cert.chi_original);
    assert_eq!(parsed.partition, cert.partition);
    assert_eq!(parsed.surface, cert.surface);
    assert_eq!(parsed.marked_basis.len(), cert.marked_basis.len());
    for (p, c) in parsed.marked_basis.iter().zip(&cert.marked_basis) {
        assert_eq!(p.edges, c.edges);
    }
    assert_verified(&parsed);
    assert_eq!(parsed.to_text(), text);
}

fn rp(re: (i64, i64), im: (i64, i64)) -> PlanePoint {
    PlanePoint::new(QuadElem::ratio(re.0, re.1), QuadElem::ratio(im.0, im.1))
}

fn chi_points(entries: Vec<PlanePoint>) -> PeriodVector {
    PeriodVector::new(entries).unwrap()
}

#[test]
fn genus2_even_slit_h2() {
    let chi = chi_points(vec![pt(1, 0), pt(0, 1), rp((1, 4), (0, 1)), rp((0, 1), (1, 4))]);
    let cert = build_genus2(&chi, &part(&[2])).unwrap();
    assert_eq!(cert.surface.stratum().unwrap(), vec![2]);
    assert_eq!(cone_turns(&cert), vec![3]);
    assert_verified(&cert);
}

#[test]
fn genus2_odd_slit_h11() {
    let chi = chi_points(vec![pt(1, 0), pt(0, 1), rp((1, 4), (0, 1)), rp((0, 1), (1, 4))]);
    let cert = build_genus2(&chi, &part(&[1, 1])).unwrap();
    assert_eq!(cert.surface.stratum().unwrap(), vec![1, 1]);
    assert_eq!(cone_turns(&cert), vec![2, 2]);
    assert_verified(&cert);
}

#[test]
fn genus2_irrational_both_strata() {
    let r8 = || &QuadElem::quad(0, 1, 2) / &QuadElem::from_int(8);
    let alpha = PlanePoint::new(&r8() * &QuadElem::from_int(2), QuadElem::ratio(1, 8));
    let beta = PlanePoint::new(QuadElem::ratio(-1, 8), r8());
    let chi = chi_points(vec![pt(1, 0), pt(0, 1), alpha, beta]);
    let even = build_genus2(&chi, &part(&[2])).unwrap();
    assert_eq!(even.surface.stratum().unwrap(), vec![2]);
    assert_verified(&even);
    let odd = build_genus2(&chi, &part(&[1, 1])).unwrap();
    assert_eq!(odd.surface.stratum().unwrap(), vec![1, 1]);
    assert_verified(&odd);
}

#[test]
fn genus2_rejects_bad_normal_forms() {
    let wide = chi_points(vec![pt(1, 0), pt(0, 1), pt(2, 0), pt(0, 2)]);
    assert!(matches!(
        build_genus2(&wide, &part(&[2])),
        Err(BuildError::Precondition(_))
    ));
    let skew = chi_points(vec![pt(1, 1), pt(0, 1), rp((1, 4), (0, 1)), rp((0, 1), (1, 4))]);
    assert!(matches!(
        build_genus2(&skew, &part(&[2])),
        Err(BuildError::Precondition(_))
    ));
    let negative = chi_points(vec![pt(1, 0), pt(0, 1), rp((0, 1), (1, 4)), rp((1, 4), (0, 1))]);
    assert!(matches!(
        build_genus2(&negative, &part(&[1, 1])),
        Err(BuildError::Precondition(_))
    ));
}

#[test]
fn generic_single_star_h2() {
    let chi = chi_ints(&[(10, 0), (0, 10), (1, 0), (0, 1)]);
    let cert = build_generic(&chi, &part(&[2])).unwrap();
    assert_eq!(cert.surface.stratum().unwrap(), vec![2]);
    assert_eq!(cone_turns(&cert), vec![3]);
    assert_verified(&cert);
}

#[test]
fn generic_bare_cross_h11() {
    let chi = chi_ints(&[(10, 0), (0, 10), (1, 0), (0, 1)]);
    let cert = build_generic(&chi, &part(&[1, 1])).unwrap();
    assert_eq!(cert.surface.stratum().unwrap(), vec![1, 1]);
    assert_eq!(cone_turns(&cert), vec![2, 2]);
    assert_verified(&cert);
}

#[test]
fn generic_two_slit_star_h4() {
    let chi = chi_points(vec![
        pt(1, 0),
        pt(0, 1),
        rp((1, 100), (0, 1)),
        rp((0, 1), (1, 100)),
        rp((0, 1), (1, 100)),
        rp((-1, 100), (0, 1)),
    ]);
    let cert = build_generic(&chi, &part(&[4])).unwrap();
    assert_eq!(cert.surface.stratum().unwrap(), vec![4]);
    assert_eq!(cone_turns(&cert), vec![5]);
    assert_verified(&cert);
}

#[test]
fn generic_star_pair_h13() {
    let chi = chi_points(vec![
        pt(1, 0),
        pt(0, 1),
        rp((1, 100), (0, 1)),
        rp((0, 1), (1, 100)),
        rp((0, 1), (1, 100)),
        rp((-1, 100), (0, 1)),
    ]);
    let cert = build_generic(&chi, &part(&[1, 3])).unwrap();
    assert_eq!(cert.surface.stratum().unwrap(), vec![1, 3]);
    assert_eq!(cone_turns(&cert), vec![2, 4]);
    assert_verified(&cert);
}

#[test]
fn generic_two_star_clusters_h22() {
    let chi = chi_points(vec![
        pt(1, 0),
        pt(0, 1),
        rp((1, 100), (0, 1)),
        rp((0, 1), (1, 100)),
        rp((0, 1), (1, 100)),
        rp((-1, 100), (0, 1)),
    ]);
    let cert = build_generic(&chi, &part(&[2, 2])).unwrap();
    assert_eq!(cert.surface.stratum().unwrap(), vec![2, 2]);
    assert_eq!(cone_turns(&cert), vec![3, 3]);
    assert_verified(&cert);
}

#[test]
fn generic_form_violation_is_a_precondition() {
    let chi = chi_ints(&[(1, 0), (0, 1), (1, 0), (0, 1), (2, 0), (0, 1)]);
    assert!(matches!(
        build_generic(&chi, &part(&[4])),
        Err(BuildError::Precondition(_))
    ));
}

#[test]
fn generic_reports_impossible_packings_as_placement() {
    let chi = chi_points(vec![
        pt(1, 0),
        pt(0, 1),
        rp((1, 100), (0, 1)),
        rp((0, 1), (1, 100)),
        rp((-1, 100), (0, 1)),
        rp((0, 1), (-1, 100)),
        rp((1, 200), (-1, 200)),
        rp((1, 200), (1, 200)),
    ]);
    assert!(matches!(
        build_generic(&chi, &part(&[1, 5])),
        Err(BuildError::Placement(_))
    ));
}

#[test]
fn realize_covers_every_partition_of_four() {
    let s = || &QuadElem::quad(0, 1, 2) / &QuadElem::from_int(100);
    let chi = chi_points(vec![
        pt(1, 0),
        pt(0, 1),
        PlanePoint::new(s(), QuadElem::zero()),
        PlanePoint::new(QuadElem::zero(), s()),
        PlanePoint::new(QuadElem::zero(), s()),
        PlanePoint::new(-&s(), QuadElem::zero()),
    ]);
    for parts in [
        vec![4u32],
        vec![1, 3],
        vec![2, 2],
        vec![1, 1, 2],
        vec![1, 1, 1, 1],
    ] {
        let p = part(&parts);
        match realize(&chi, &p, &RealizeOptions::default()).unwrap() {
            Realization::Certificate(cert) => {
                assert_eq!(cert.surface.stratum().unwrap(), parts);
                assert_verified(&cert);
            }
            other => panic!("expected a certificate for {:?}, got {}", parts, other),
        }
    }
}

#[test]
fn realize_normalizes_dense_genus2() {
    let r = QuadElem::quad(0, 1, 2);
    let chi = chi_points(vec![
        pt(2, 1),
        pt(1, 1),
        PlanePoint::new(r.clone(), QuadElem::zero()),
        PlanePoint::new(QuadElem::zero(), r),
    ]);
    for parts in [vec![2u32], vec![1, 1]] {
        let p = part(&parts);
        match realize(&chi, &p, &RealizeOptions::default()).unwrap() {
            Realization::Certificate(cert) => {
                assert_eq!(cert.surface.stratum().unwrap(), parts);
                assert_eq!(cert.chi_original, chi);
                assert_verified(&cert);
            }
            other => panic!("expected a certificate for {:?}, got {}", parts, other),
        }
    }
}
