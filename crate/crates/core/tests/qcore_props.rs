use proptest::prelude::*;
use weaklab::qcore::{
    c, commutator_norm, hermitian_eig, max_norm, simultaneous_eig, CMatrix, Observable, QuantumState, Tensor, C64,
};

fn hermitian_from(n: usize, raw: &[f64]) -> Observable {
    let m = CMatrix::from_fn(n, n, |r, k| c(raw[2 * (r * n + k)], raw[2 * (r * n + k) + 1]));
    Observable::new((&m + m.adjoint()).unscale(2.0)).unwrap()
}

fn hermitian(max_dim: usize) -> impl Strategy<Value = Observable> {
    (1..=max_dim).prop_flat_map(|n| {
        prop::collection::vec(-1.0f64..1.0, 2 * n * n).prop_map(move |raw| hermitian_from(n, &raw))
    })
}

fn symmetrize(m: CMatrix) -> Observable {
    Observable::new((&m + m.adjoint()).unscale(2.0)).unwrap()
}

proptest! {
    #[test]
    fn tensor_matches_kronecker_formula(raw_a in prop::collection::vec(-1.0f64..1.0, 8), raw_b in prop::collection::vec(-1.0f64..1.0, 8)) {
        let (a, b) = (hermitian_from(2, &raw_a), hermitian_from(2, &raw_b));
        let t = a.tensor(&b);
        prop_assert_eq!(t.dim(), 4);
        for r in 0..4 {
            for k in 0..4 {
                let want = a.matrix()[(r / 2, k / 2)] * b.matrix()[(r % 2, k % 2)];
                prop_assert!((t.matrix()[(r, k)] - want).norm() <= 1e-15);
            }
        }
    }

    #[test]
    fn tensor_dims_multiply(n in 1usize..5, m in 1usize..5, p in 1usize..4) {
        let (a, b, cc) = (Observable::identity(n), Observable::identity(m), Observable::identity(p));
        let left = a.tensor(&b).tensor(&cc);
        let right = a.tensor(&b.tensor(&cc));
        prop_assert_eq!(left.dim(), n * m * p);
        prop_assert_eq!(left.matrix(), right.matrix());
    }

    #[test]
    fn eig_reconstructs(a in hermitian(16)) {
        let e = hermitian_eig(&a);
        let scale = max_norm(a.matrix()).max(f64::MIN_POSITIVE);
        prop_assert!(max_norm(&(e.reconstruct() - a.matrix())) <= 1e-10 * scale);
        let n = a.dim();
        let gram = e.eigenvectors.adjoint() * &e.eigenvectors;
        prop_assert!(max_norm(&(gram - CMatrix::identity(n, n))) <= 1e-12);
        prop_assert!(e.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn simultaneous_eig_diagonalizes_both(
        u in hermitian(8),
        a_levels in prop::collection::vec(-2i32..3, 8),
        b_vals in prop::collection::vec(-1.0f64..1.0, 8),
    ) {
        // Integer levels force degenerate eigenspaces of A.
        let n = u.dim();
        let v = hermitian_eig(&u).eigenvectors;
        let build = |vals: &[f64]| {
            let mut d = CMatrix::zeros(n, n);
            for k in 0..n {
                d[(k, k)] = c(vals[k], 0.0);
            }
            symmetrize(&v * d * v.adjoint())
        };
        let a_vals: Vec<f64> = a_levels.iter().take(n).map(|&x| x as f64).collect();
        let a = build(&a_vals);
        let b = build(&b_vals[..n]);
        let joint = simultaneous_eig(&a, &b, 1e-10).unwrap();
        let w = &joint.eigenvectors;
        for (op, scale) in [(&a, max_norm(a.matrix())), (&b, max_norm(b.matrix()))] {
            let d = w.adjoint() * op.matrix() * w;
            for r in 0..n {
                for k in 0..n {
                    if r != k {
                        prop_assert!(d[(r, k)].norm() <= 1e-9 * scale.max(1.0), "offdiag {:e}", d[(r, k)].norm());
                    }
                }
            }
        }
        let gram = w.adjoint() * w;
        prop_assert!(max_norm(&(gram - CMatrix::identity(n, n))) <= 1e-12);
    }

    #[test]
    fn disjoint_subsystems_commute(a in hermitian(4), b in hermitian(4)) {
        let left = a.tensor(&Observable::identity(b.dim()));
        let right = Observable::identity(a.dim()).tensor(&b);
        prop_assert!(commutator_norm(&left, &right).unwrap() <= 1e-14);
    }

    #[test]
    fn states_are_normalized(raw in prop::collection::vec(-5.0f64..5.0, 2..32)) {
        prop_assume!(raw.iter().any(|x| x.abs() > 1e-6));
        let amps: Vec<C64> = raw.chunks(2).map(|p| c(p[0], *p.get(1).unwrap_or(&0.0))).collect();
        prop_assume!(amps.iter().any(|z| z.norm() > 1e-6));
        let s = QuantumState::new(amps).unwrap();
        prop_assert!((s.amplitudes().norm() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn non_hermitian_rejected(a in hermitian(6), r in 0usize..6, k in 0usize..6, bump in 0.01f64..1.0) {
        let n = a.dim();
        prop_assume!(r < n && k < n);
        let mut m = a.matrix().clone();
        m[(r, k)] += c(bump, bump);
        prop_assert!(Observable::new(m).is_err());
    }
}
