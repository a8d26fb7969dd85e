use lkqn::algebra::{arnoldi2, build_algebra_eigvec, build_algebra_krylov2, build_algebra_qt, SpectralAlgebra};
use lkqn::linalg::{dot, norm, HouseholderStack, Reflector};
use lkqn::model::HessianModel;
use lkqn::oracle::{dense_from_model, dense_from_stack, dense_projection, polynomial_preservation_check, DenseMatrix};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn rvec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

fn rel(a: &[f64], b: &[f64]) -> f64 {
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    norm(&d) / norm(b).max(1e-300)
}

/// Structured pd B: an algebra plus a Broyden correction.
fn model(seed: u64, n: usize, phi: f64) -> HessianModel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let refl = (0..rng.gen_range(0..=3)).map(|_| Reflector::from_direction(rvec(&mut rng, n))).collect();
    let stack = HouseholderStack::from_reflectors(n, refl).unwrap();
    let z = (0..n).map(|_| rng.gen_range(0.1..10.0)).collect();
    let base = SpectralAlgebra::new(stack, z).unwrap();
    let s = rvec(&mut rng, n);
    let y: Vec<f64> = s.iter().map(|v| v * rng.gen_range(0.5..4.0) + 0.05 * rng.gen_range(-1.0..1.0)).collect();
    HessianModel::broyden_update(base, &s, &y, phi).unwrap()
}

/// One of the three adaptive algebras for direction s.
fn adaptive(m: &HessianModel, s: &[f64], kind: u8, rng: &mut ChaCha8Rng) -> HouseholderStack {
    let Ok(kp) = arnoldi2(|x| m.matvec(x).unwrap(), s, 1e-12) else {
        return build_algebra_eigvec(s, None).unwrap();
    };
    match kind % 3 {
        0 => build_algebra_krylov2(&kp).unwrap(),
        1 => {
            let mut g = rvec(rng, s.len());
            for v in [&kp.v1, &kp.v2, &kp.v1, &kp.v2] {
                let c = dot(&g, v);
                g.iter_mut().zip(v.iter()).for_each(|(a, b)| *a -= c * b);
            }
            build_algebra_qt(&kp, &g).unwrap()
        }
        _ => build_algebra_eigvec(s, None).unwrap(),
    }
}

fn sizes() -> impl Strategy<Value = usize> {
    prop::sample::select(vec![4usize, 8, 16, 50])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn fast_projection_matches_dense(seed in any::<u64>(), n in sizes(), kind in 0u8..3, phi in prop::sample::select(vec![0.0, 0.4])) {
        let m = model(seed, n, phi);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
        let s = rvec(&mut rng, n);
        let u = adaptive(&m, &s, kind, &mut rng);
        let fast = m.project_onto(&u).unwrap();
        let b = dense_from_model(&m).unwrap();
        let dense = dense_projection(&b, &dense_from_stack(&u)).unwrap();
        prop_assert!(rel(fast.eigenvalues(), &dense) <= 1e-10);

        // Trace kept, log-det not decreased, eigenvalues interlaced.
        prop_assert!((fast.trace() - b.trace()).abs() <= 1e-9 * b.trace().abs());
        prop_assert!(fast.logdet() >= b.logdet_pd().unwrap() - 1e-10);
        let eig = b.symmetric_eigenvalues().unwrap();
        let (lo, hi) = (eig[0], eig[n - 1]);
        for z in fast.eigenvalues() {
            prop_assert!(*z >= lo - 1e-10 * hi && *z <= hi * (1.0 + 1e-10));
        }
    }

    #[test]
    fn krylov_algebras_preserve_direction(seed in any::<u64>(), n in sizes(), kind in 0u8..2) {
        let m = model(seed, n, 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(1));
        let s = rvec(&mut rng, n);
        let u = adaptive(&m, &s, kind, &mut rng);
        let l = m.project_onto(&u).unwrap();
        let bs = m.matvec(&s).unwrap();
        prop_assert!(rel(&l.matvec(&s).unwrap(), &bs) <= 1e-10);
    }

    #[test]
    fn qt_algebra_has_gbar_as_eigenvector(seed in any::<u64>(), n in 5usize..30) {
        let m = model(seed, n, 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(2));
        let s = rvec(&mut rng, n);
        let kp = arnoldi2(|x| m.matvec(x).unwrap(), &s, 1e-12).unwrap();
        let mut g = rvec(&mut rng, n);
        for v in [&kp.v1, &kp.v2, &kp.v1, &kp.v2] {
            let c = dot(&g, v);
            g.iter_mut().zip(v.iter()).for_each(|(a, b)| *a -= c * b);
        }
        let l = m.project_onto(&build_algebra_qt(&kp, &g).unwrap()).unwrap();
        let alpha = dot(&g, &m.matvec(&g).unwrap()) / dot(&g, &g);
        let ag: Vec<f64> = g.iter().map(|v| alpha * v).collect();
        prop_assert!(rel(&l.matvec(&g).unwrap(), &ag) <= 1e-10);
        prop_assert!(rel(&l.matvec(&s).unwrap(), &m.matvec(&s).unwrap()) <= 1e-10);
    }

    #[test]
    fn algebra_solve_inverts_matvec(seed in any::<u64>(), n in 2usize..40) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let refl = (0..3).map(|_| Reflector::from_direction(rvec(&mut rng, n))).collect();
        let z = (0..n).map(|_| rng.gen_range(0.01..100.0)).collect();
        let l = SpectralAlgebra::new(HouseholderStack::from_reflectors(n, refl).unwrap(), z).unwrap();
        let x = rvec(&mut rng, n);
        prop_assert!(rel(&l.solve(&l.matvec(&x).unwrap()).unwrap(), &x) <= 1e-10);
        let dense = dense_projection(&DenseMatrix::identity(n), &dense_from_stack(l.stack())).unwrap();
        prop_assert!(dense.iter().all(|v| (v - 1.0).abs() < 1e-12));
    }
}

#[test]
fn polynomial_preservation_order_three() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for i in 0..20 {
        let a = dense_from_model(&model(i, 10, 0.0)).unwrap();
        let s = rvec(&mut rng, 10);
        let check = polynomial_preservation_check(&a, &s, 3).unwrap();
        assert_eq!(check.effective_m, 3);
        assert!(check.max_residual <= 1e-9, "{}", check.max_residual);
    }
}

#[test]
fn diag_three_krylov_entries() {
    let b = DenseMatrix::diagonal(&[1.0, 2.0, 3.0]);
    let s = [1.0, 0.0, 1.0];
    let kp = arnoldi2(|x| b.matvec(x), &s, 1e-12).unwrap();
    let bv1 = b.matvec(&kp.v1);
    let bv2 = b.matvec(&kp.v2);
    assert!((kp.h11 - dot(&kp.v1, &bv1)).abs() < 1e-14);
    assert!((kp.h21 - dot(&kp.v2, &bv1)).abs() < 1e-14);
    assert!((kp.h22 - dot(&kp.v2, &bv2)).abs() < 1e-14);
    assert!(dot(&kp.v1, &kp.v2).abs() < 1e-12);
}
