use logcov::linalg::{
    half_vec, half_vec_inverse, spd_exp, spd_log, sym_eig, triangular_len, Matrix, SpdMatrix, SymmetricMatrix,
    ISOMETRIC_SCALE,
};
use logcov::Error;
use proptest::prelude::*;

fn arb_symmetric(max_dim: usize, range: f64) -> impl Strategy<Value = SymmetricMatrix> {
    (1..=max_dim).prop_flat_map(move |d| {
        prop::collection::vec(-range..range, triangular_len(d))
            .prop_map(move |p| SymmetricMatrix::from_packed(d, p).unwrap())
    })
}

/// `A Aᵀ + 0.1 I` for a random square `A`.
fn arb_spd(max_dim: usize) -> impl Strategy<Value = SpdMatrix> {
    (1..=max_dim).prop_flat_map(|d| {
        prop::collection::vec(-1.0f64..1.0, d * d).prop_map(move |v| {
            let a = Matrix::from_vec(d, d, v).unwrap();
            let mut g = a.matmul(&a.transpose()).unwrap();
            for i in 0..d {
                g[(i, i)] += 0.1;
            }
            SpdMatrix::new(SymmetricMatrix::from_matrix_symmetrized(&g).unwrap()).unwrap()
        })
    })
}

fn rel_err(a: &Matrix, b: &Matrix) -> f64 {
    a.sub(b).frobenius_norm() / b.frobenius_norm().max(f64::MIN_POSITIVE)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn eigendecomposition_reconstructs_and_is_orthonormal(s in arb_symmetric(12, 5.0)) {
        let e = sym_eig(&s).unwrap();
        let u = e.eigenvectors();
        let recon = e.reconstruct().to_matrix();
        prop_assert!(recon.sub(&s.to_matrix()).frobenius_norm() <= 1e-10 * s.frobenius_norm().max(1.0));
        let utu = u.transpose().matmul(u).unwrap();
        prop_assert!(utu.sub(&Matrix::identity(s.dim())).frobenius_norm() <= 1e-10);
        let ev = e.eigenvalues();
        prop_assert!(ev.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn exp_of_log_is_identity_on_spd(x in arb_spd(16)) {
        let back = spd_exp(&spd_log(&x).unwrap()).unwrap();
        let x = x.as_symmetric().to_matrix();
        prop_assert!(rel_err(&back.as_symmetric().to_matrix(), &x) <= 1e-8);
    }

    #[test]
    fn log_of_exp_is_identity_on_symmetric(s in arb_symmetric(10, 2.0)) {
        let back = spd_log(&spd_exp(&s).unwrap()).unwrap();
        prop_assert!(back.to_matrix().sub(&s.to_matrix()).frobenius_norm() <= 1e-9 * s.frobenius_norm().max(1.0));
    }

    #[test]
    fn log_is_symmetric_and_shifts_under_scaling(x in arb_spd(8), alpha in 0.1f64..10.0) {
        // log(αX) = log(α) I + log(X)
        let mut scaled = x.as_symmetric().to_matrix();
        scaled.scale(alpha);
        let scaled = SpdMatrix::new(SymmetricMatrix::from_matrix_symmetrized(&scaled).unwrap()).unwrap();
        let mut expected = spd_log(&x).unwrap().to_matrix();
        for i in 0..x.dim() {
            expected[(i, i)] += alpha.ln();
        }
        let got = spd_log(&scaled).unwrap().to_matrix();
        prop_assert!(got.sub(&expected).frobenius_norm() <= 1e-9 * expected.frobenius_norm().max(1.0));
        prop_assert_eq!(got.sub(&got.transpose()).frobenius_norm(), 0.0);
    }

    #[test]
    fn half_vec_is_an_isometry(a in arb_symmetric(12, 10.0), b in arb_symmetric(12, 10.0)) {
        prop_assume!(a.dim() == b.dim());
        let va = half_vec(&a, ISOMETRIC_SCALE).unwrap();
        let vb = half_vec(&b, ISOMETRIC_SCALE).unwrap();
        let dv: f64 = va.values().iter().zip(vb.values()).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
        let dm = a.to_matrix().sub(&b.to_matrix()).frobenius_norm();
        prop_assert!((dv - dm).abs() <= 1e-12 * dm.max(1.0));
    }

    #[test]
    fn half_vec_inverse_roundtrip_is_exact(s in arb_symmetric(12, 100.0), unit in any::<bool>()) {
        let scale = if unit { 1.0 } else { ISOMETRIC_SCALE };
        let v = half_vec(&s, scale).unwrap();
        prop_assert_eq!(v.len(), triangular_len(s.dim()));
        let again = half_vec(&half_vec_inverse(&v).unwrap(), scale).unwrap();
        prop_assert_eq!(again, v);
    }

    #[test]
    fn unit_scale_inverse_is_exact_both_ways(s in arb_symmetric(10, 100.0)) {
        let v = half_vec(&s, 1.0).unwrap();
        prop_assert_eq!(half_vec_inverse(&v).unwrap(), s);
    }
}

#[test]
fn spd_constructor_rejects_indefinite() {
    let s = SymmetricMatrix::from_packed(2, vec![1.0, 2.0, 1.0]).unwrap();
    assert!(matches!(SpdMatrix::new(s), Err(Error::NonPositiveEigenvalue { .. })));
}

#[test]
fn two_by_two_log_matches_hand_solution() {
    let x = SpdMatrix::new(SymmetricMatrix::from_packed(2, vec![2.0, 1.0, 2.0]).unwrap()).unwrap();
    let l = spd_log(&x).unwrap();
    let expect = 3f64.ln() / 2.0;
    for (i, j) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
        assert!((l.get(i, j) - expect).abs() < 1e-12);
    }
}
