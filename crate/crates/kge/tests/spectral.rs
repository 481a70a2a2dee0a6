use analogy_core::rng::stream_rng;
use analogy_core::{ParamTable, Triple};
use kge::spectral::{
    check_commuting_normal, format_matrix_family, parse_matrix_family, planted_family, simul_block_diagonalize,
    verify_corollary_equivalence, Block,
};
use kge::KgeError;
use nalgebra::DMatrix;
use rand::Rng;

#[test]
fn planted_families_recover_layout_and_blocks() {
    for (m, n) in [(8, 4), (6, 0), (5, 5), (9, 3)] {
        let mut rng = stream_rng(40 + m as u64, n as u64);
        let (family, _, _) = planted_family(m, n, 4, &mut rng).unwrap();
        let d = simul_block_diagonalize(&family, 1e-8, 3).unwrap();
        assert_eq!(d.layout.dim(), m);
        assert_eq!(d.layout.scalars(), n, "m={m} n={n}");
        assert!(d.basis.orthogonality_residual() <= 1e-10);
        assert!(d.max_reconstruction_residual() <= 1e-8);
        for (i, a) in family.iter().enumerate() {
            let q = d.basis.matrix();
            assert!((q * d.expanded(i) * q.transpose() - a).norm() <= 1e-8);
        }
        assert!(d.layout.blocks.iter().filter(|b| matches!(b, Block::Pair)).count() == (m - n) / 2);
    }
}

#[test]
fn conjugate_pairs_satisfy_norm_facts() {
    let mut rng = stream_rng(77, 0);
    let (family, _, _) = planted_family(10, 2, 3, &mut rng).unwrap();
    let d = simul_block_diagonalize(&family, 1e-8, 0).unwrap();
    assert_eq!(d.conjugate_pairs.len(), 4);
    for p in &d.conjugate_pairs {
        assert!((p.a_norm_sq - 0.5).abs() <= 1e-8);
        assert!((p.b_norm_sq - 0.5).abs() <= 1e-8);
        assert!(p.a_dot_b.abs() <= 1e-8);
    }
}

#[test]
fn identity_relations_reduce_to_inner_products() {
    let m = 6;
    let mut rng = stream_rng(5, 5);
    let entities = ParamTable::from_values(10, m, (0..10 * m).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap();
    let triples: Vec<Triple> = (0..50).map(|i| Triple::new(i % 10, i % 2, (i * 7) % 10)).collect();
    let family = vec![DMatrix::identity(m, m), DMatrix::identity(m, m)];
    let report = verify_corollary_equivalence(&entities, &family, &triples, 1e-8, 1).unwrap();
    assert!(report.passed);
    assert!(report.max_deviation <= 1e-12);
    assert_eq!(report.decomposition.layout.scalars(), m);
}

#[test]
fn perturbed_family_is_rejected() {
    let mut rng = stream_rng(9, 0);
    let (mut family, _, _) = planted_family(8, 4, 5, &mut rng).unwrap();
    family[2][(0, 1)] += 1e-3;
    assert!(check_commuting_normal(&family, 1e-8).is_err());
    match simul_block_diagonalize(&family, 1e-8, 0) {
        Err(KgeError::Precondition { residual, .. }) => assert!(residual > 1e-8),
        other => panic!("expected a precondition error, got {other:?}"),
    }
}

#[test]
fn family_text_round_trips() {
    let mut rng = stream_rng(1, 1);
    let (family, _, _) = planted_family(4, 2, 3, &mut rng).unwrap();
    let text = format_matrix_family(&family);
    let back = parse_matrix_family(&text, std::path::Path::new("f.txt")).unwrap();
    assert_eq!(back, family);
    assert!(parse_matrix_family("2 1\n1 0\n", std::path::Path::new("short.txt")).is_err());
}
