mod common;

use common::{rel_diff, rng};
use rand::Rng;
use tuckreg_core::model::{column_supports, degrees_of_freedom, direct_sum, gen_model, gen_separated_model};
use tuckreg_core::tensor::{frob_norm, l1_norm, matricize};
use tuckreg_core::{NormalizedTuckerFactors, TuckerFactors};

#[test]
fn direct_sum_composes_to_weighted_sum() {
    let mut r = rng(31);
    for pair in 0..100 {
        let dims = [r.random_range(4..8), r.random_range(4..8), r.random_range(4..7)];
        let rank: Vec<usize> = dims.iter().map(|&n| r.random_range(1..=n / 2)).collect();
        let sparsity: Vec<usize> = dims.iter().map(|&n| r.random_range(1..=n)).collect();
        let za = gen_model(&dims, &rank, &sparsity, 0.5, 2 * pair).unwrap();
        let zb = gen_model(&dims, &rank, &sparsity, 0.5, 2 * pair + 1).unwrap();
        let (ga, gb) = (r.random_range(-2.0..2.0), r.random_range(-2.0..2.0));
        let sum = direct_sum(&za, &zb, ga, gb).unwrap();
        let mut want = za.compose().scaled(ga);
        want.axpy(gb, &zb.compose()).unwrap();
        assert!(rel_diff(&want, &sum.compose()) <= 1e-12);
        let doubled: Vec<usize> = rank.iter().map(|x| 2 * x).collect();
        assert_eq!(sum.rank(), doubled.as_slice());
        assert_eq!(sum.sparsity(), sparsity.as_slice());
    }
}

#[test]
fn direct_sum_rejects_mismatched_structure() {
    let a = gen_model(&[6, 6], &[1, 1], &[2, 2], 0.5, 0).unwrap();
    let b = gen_model(&[6, 6], &[1, 1], &[3, 2], 0.5, 1).unwrap();
    assert!(direct_sum(&a, &b, 1.0, 1.0).is_err());
}

#[test]
fn generated_models_satisfy_the_protocol() {
    let dims = [50, 50, 30];
    let m = gen_model(&dims, &[3, 3, 3], &[6, 6, 4], 0.5, 9).unwrap();
    assert_eq!(column_supports(&m), vec![vec![6; 3], vec![6; 3], vec![4; 3]]);
    for u in m.factors() {
        assert!(u.data().iter().all(|&x| x == 0.0 || x.abs() >= 0.5));
    }
    assert!(m.core().data().iter().all(|&x| (0.0..1.0).contains(&x)));
    let dense = gen_model(&[4, 3], &[2, 2], &[4, 3], 0.5, 1).unwrap();
    assert_eq!(column_supports(&dense), vec![vec![4, 4], vec![3, 3]]);
    assert_eq!(
        gen_model(&[4, 4, 4], &[2, 2, 2], &[2, 2, 2], 0.5, 42).unwrap(),
        gen_model(&[4, 4, 4], &[2, 2, 2], &[2, 2, 2], 0.5, 42).unwrap()
    );
    assert!(gen_model(&[4, 4], &[5, 1], &[1, 1], 0.5, 0).is_err());
}

#[test]
fn separated_models_have_tenfold_gaps() {
    let m = gen_separated_model(&[9, 9, 9], &[3, 3, 3], &[3, 3, 3], 4).unwrap();
    let t = m.compose();
    for k in 0..3 {
        let g = matricize(&t, k).unwrap().gram();
        let ev = tuckreg_core::sym_eigen(&g).values;
        for j in 0..2 {
            assert!(ev[j].sqrt() >= 10.0 * ev[j + 1].sqrt() * (1.0 - 1e-9));
        }
    }
}

#[test]
fn normalization_bounds_the_norm() {
    let m = gen_model(&[6, 5, 4], &[2, 2, 2], &[3, 2, 2], 0.5, 3).unwrap();
    let n = m.normalize();
    assert!(rel_diff(&m.compose(), &n.compose()) < 1e-12);
    assert!((n.tau() - l1_norm(n.factors().core())).abs() < 1e-12);
    assert!(frob_norm(&n.compose()) <= n.tau() * (1.0 + 1e-12));
    assert!(NormalizedTuckerFactors::new(m.clone(), 1e-3).is_err());
}

#[test]
fn sparsity_certificate_is_enforced() {
    let core = tuckreg_core::DenseTensor::new(vec![1], vec![1.0]).unwrap();
    let u = tuckreg_core::Matrix::new(3, 1, vec![1.0, 1.0, 0.0]).unwrap();
    assert!(TuckerFactors::new(core.clone(), vec![u.clone()], vec![1]).is_err());
    assert!(TuckerFactors::new(core, vec![u], vec![2]).is_ok());
}

#[test]
fn dof_is_monotone() {
    let base = degrees_of_freedom(&[2, 2, 2], &[3, 3, 3], &[10, 10, 10]).unwrap();
    assert!(degrees_of_freedom(&[3, 2, 2], &[3, 3, 3], &[10, 10, 10]).unwrap() >= base);
    assert!(degrees_of_freedom(&[2, 2, 2], &[4, 3, 3], &[10, 10, 10]).unwrap() >= base);
    assert!(degrees_of_freedom(&[2, 2, 2], &[3, 3, 3], &[11, 10, 10]).unwrap() >= base);
    let e = degrees_of_freedom(&[1, 1], &[1, 1], &[3, 3]).unwrap();
    assert!((e - (1.0 + 2.0 * 3f64.ln())).abs() < 1e-12);
}
