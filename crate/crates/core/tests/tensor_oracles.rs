mod common;

use common::{indices, random_matrix, random_tensor, rel_diff, rng};
use proptest::prelude::*;
use tuckreg_core::tensor::{frob_norm, inner, l1_norm, matricize, mode_product, tensorize, tucker_compose};
use tuckreg_core::{DenseTensor, Matrix};

#[test]
fn matricize_matches_column_formula() {
    // T(i, j, k) = 100 i + 10 j + k with 1-based labels, mode 2 unfolding:
    // column 1 + (i-1) J_1 + (k-1) J_3 with J_1 = 1, J_3 = n_1 = 2.
    let dims = [2, 3, 2];
    let t = DenseTensor::from_fn(&dims, |ix| (100 * (ix[0] + 1) + 10 * (ix[1] + 1) + ix[2] + 1) as f64).unwrap();
    let m = matricize(&t, 1).unwrap();
    assert_eq!((m.rows(), m.cols()), (3, 4));
    for i in 1..=2 {
        for j in 1..=3 {
            for k in 1..=2 {
                let col = (i - 1) + (k - 1) * 2;
                assert_eq!(m.get(j - 1, col), (100 * i + 10 * j + k) as f64);
            }
        }
    }
    assert_eq!(tensorize(&m, 1, &dims).unwrap(), t);
}

#[test]
fn order_two_unfoldings() {
    let t = DenseTensor::new(vec![2, 2], vec![1.0, 2.0, 3.0, 4.0]).unwrap();
    assert_eq!(matricize(&t, 0).unwrap().data(), &[1.0, 2.0, 3.0, 4.0]);
    assert_eq!(matricize(&t, 1).unwrap().data(), &[1.0, 3.0, 2.0, 4.0]);
    assert!(matricize(&t, 2).is_err());
}

/// `(T x_n U)(i..) = sum_j U(i_n, j) T(.., j, ..)` evaluated index by index.
fn mode_product_oracle(t: &DenseTensor, u: &Matrix, mode: usize) -> DenseTensor {
    let mut dims = t.dims().to_vec();
    dims[mode] = u.rows();
    DenseTensor::from_fn(&dims, |ix| {
        (0..u.cols())
            .map(|j| {
                let mut src = ix.to_vec();
                src[mode] = j;
                u.get(ix[mode], j) * t.get(&src).unwrap()
            })
            .sum()
    })
    .unwrap()
}

#[test]
fn mode_product_matches_direct_sum() {
    let mut r = rng(11);
    let t = random_tensor(&mut r, &[2, 3, 2]);
    let u = random_matrix(&mut r, 4, 3);
    let got = mode_product(&t, &u, 1).unwrap();
    assert_eq!(got.dims(), &[2, 4, 2]);
    assert!(rel_diff(&mode_product_oracle(&t, &u, 1), &got) < 1e-14);
    let via_unfolding = tensorize(&u.matmul(&matricize(&t, 1).unwrap()).unwrap(), 1, &[2, 4, 2]).unwrap();
    assert!(rel_diff(&via_unfolding, &got) < 1e-14);
    assert!(mode_product(&t, &random_matrix(&mut r, 4, 2), 1).is_err());
}

#[test]
fn unit_vector_chain() {
    let one = DenseTensor::new(vec![1, 1, 1], vec![1.0]).unwrap();
    let e = |n: usize| Matrix::from_fn(n, 1, |i, _| if i == 0 { 1.0 } else { 0.0 }).unwrap();
    let t = tucker_compose(&one, &[e(3), e(2), e(4)]).unwrap();
    assert_eq!(t.dims(), &[3, 2, 4]);
    assert_eq!(t.get(&[0, 0, 0]).unwrap(), 1.0);
    assert_eq!(l1_norm(&t), 1.0);
}

/// `sum_{j} S(j_1..j_d) prod_k U_k(i_k, j_k)`.
fn tucker_oracle(core: &DenseTensor, factors: &[Matrix]) -> DenseTensor {
    let dims: Vec<usize> = factors.iter().map(|u| u.rows()).collect();
    let cidx = indices(core.dims());
    DenseTensor::from_fn(&dims, |ix| {
        cidx.iter()
            .map(|j| {
                core.get(j).unwrap() * (0..ix.len()).map(|k| factors[k].get(ix[k], j[k])).product::<f64>()
            })
            .sum()
    })
    .unwrap()
}

#[test]
fn tucker_compose_matches_outer_product_sum() {
    let mut r = rng(5);
    for trial in 0..5 {
        let rank = [1 + trial % 3, 2, 3];
        let dims = [4, 5, 3];
        let core = random_tensor(&mut r, &rank);
        let factors: Vec<Matrix> = (0..3).map(|k| random_matrix(&mut r, dims[k], rank[k])).collect();
        let got = tucker_compose(&core, &factors).unwrap();
        assert!(rel_diff(&tucker_oracle(&core, &factors), &got) < 1e-12);
    }
}

#[test]
fn scalar_core_is_outer_product() {
    let core = DenseTensor::new(vec![1, 1, 1], vec![2.5]).unwrap();
    let u = Matrix::new(2, 1, vec![1.0, -2.0]).unwrap();
    let v = Matrix::new(3, 1, vec![0.5, 1.0, 3.0]).unwrap();
    let w = Matrix::new(2, 1, vec![4.0, -1.0]).unwrap();
    let t = tucker_compose(&core, &[u.clone(), v.clone(), w.clone()]).unwrap();
    for ix in indices(&[2, 3, 2]) {
        let want = 2.5 * u.get(ix[0], 0) * v.get(ix[1], 0) * w.get(ix[2], 0);
        assert_eq!(t.get(&ix).unwrap(), want);
    }
}

#[test]
fn identity_factors_return_core() {
    let mut r = rng(2);
    let core = random_tensor(&mut r, &[3, 2, 4]);
    let ids: Vec<Matrix> = core.dims().iter().map(|&n| Matrix::identity(n).unwrap()).collect();
    assert_eq!(tucker_compose(&core, &ids).unwrap(), core);
    assert!(tucker_compose(&core, &ids[..2]).is_err());
}

#[test]
fn norms_match_entrywise_oracle() {
    let mut r = rng(3);
    let t = random_tensor(&mut r, &[3, 4, 5]);
    let s = random_tensor(&mut r, &[3, 4, 5]);
    let f: f64 = t.data().iter().map(|x| x * x).sum::<f64>().sqrt();
    let l: f64 = t.data().iter().map(|x| x.abs()).sum();
    let ip: f64 = t.data().iter().zip(s.data()).map(|(a, b)| a * b).sum();
    assert!((frob_norm(&t) - f).abs() <= 1e-14 * f);
    assert!((l1_norm(&t) - l).abs() <= 1e-14 * l);
    assert!((inner(&t, &s).unwrap() - ip).abs() <= 1e-14 * ip.abs().max(1.0));
    assert!((inner(&t, &t).unwrap() - f * f).abs() <= 1e-13 * f * f);
    let z = DenseTensor::zeros(&[3, 4, 5]).unwrap();
    assert_eq!(inner(&t, &z).unwrap(), 0.0);
    assert_eq!((frob_norm(&z), l1_norm(&z)), (0.0, 0.0));
    assert!(inner(&t, &DenseTensor::zeros(&[3, 4]).unwrap()).is_err());
    let mut one_hot = vec![0.0; 8];
    one_hot[5] = -3.0;
    let h = DenseTensor::new(vec![2, 2, 2], one_hot).unwrap();
    assert_eq!((frob_norm(&h), l1_norm(&h)), (3.0, 3.0));
}

#[test]
fn constructors_reject_bad_input() {
    assert!(DenseTensor::new(vec![2, 2], vec![0.0; 3]).is_err());
    assert!(DenseTensor::new(vec![2, 0], vec![]).is_err());
    assert!(DenseTensor::new(vec![], vec![1.0]).is_err());
    assert!(DenseTensor::new(vec![2], vec![1.0, f64::NAN]).is_err());
    assert!(Matrix::new(2, 2, vec![1.0, 2.0, 3.0, f64::INFINITY]).is_err());
}

fn dims_strategy() -> impl Strategy<Value = Vec<usize>> {
    prop::collection::vec(1usize..5, 1..5)
}

fn tensor_strategy() -> impl Strategy<Value = DenseTensor> {
    dims_strategy().prop_flat_map(|dims| {
        let len: usize = dims.iter().product();
        prop::collection::vec(-10.0f64..10.0, len).prop_map(move |data| DenseTensor::new(dims.clone(), data).unwrap())
    })
}

proptest! {
    #[test]
    fn unfolding_round_trips_and_preserves_norm(t in tensor_strategy()) {
        for mode in 0..t.order() {
            let m = matricize(&t, mode).unwrap();
            prop_assert_eq!(m.rows(), t.dims()[mode]);
            prop_assert_eq!(tensorize(&m, mode, t.dims()).unwrap(), t.clone());
            let fm = m.frob_norm();
            let ft = frob_norm(&t);
            prop_assert!((fm - ft).abs() <= 1e-12 * ft.max(1.0));
        }
    }

    #[test]
    fn mode_products_commute(t in tensor_strategy(), seed in any::<u64>()) {
        prop_assume!(t.order() >= 2);
        let mut r = rng(seed);
        let u = random_matrix(&mut r, 3, t.dims()[0]);
        let v = random_matrix(&mut r, 2, t.dims()[1]);
        let a = mode_product(&mode_product(&t, &u, 0).unwrap(), &v, 1).unwrap();
        let b = mode_product(&mode_product(&t, &v, 1).unwrap(), &u, 0).unwrap();
        prop_assert!(rel_diff(&a, &b) < 1e-12 || frob_norm(&a) < 1e-12);
    }

    #[test]
    fn mode_product_is_linear(t in tensor_strategy(), seed in any::<u64>(), alpha in -3.0f64..3.0) {
        let mut r = rng(seed);
        let s = random_tensor(&mut r, t.dims());
        let u = random_matrix(&mut r, 2, t.dims()[0]);
        let mut sum = t.clone();
        sum.axpy(alpha, &s).unwrap();
        let lhs = mode_product(&sum, &u, 0).unwrap();
        let mut rhs = mode_product(&t, &u, 0).unwrap();
        rhs.axpy(alpha, &mode_product(&s, &u, 0).unwrap()).unwrap();
        let scale = frob_norm(&lhs).max(1.0);
        prop_assert!(frob_norm(&lhs.sub(&rhs).unwrap()) <= 1e-12 * scale);
    }

    #[test]
    fn compose_is_order_invariant(seed in any::<u64>()) {
        let mut r = rng(seed);
        let core = random_tensor(&mut r, &[2, 3, 2]);
        let f: Vec<Matrix> = [4, 3, 5].iter().zip([2, 3, 2]).map(|(&n, k)| random_matrix(&mut r, n, k)).collect();
        let fwd = tucker_compose(&core, &f).unwrap();
        let mut rev = core.clone();
        for k in (0..3).rev() {
            rev = mode_product(&rev, &f[k], k).unwrap();
        }
        prop_assert!(rel_diff(&fwd, &rev) < 1e-12);
    }
}
