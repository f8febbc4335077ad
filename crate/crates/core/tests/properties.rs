use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

use gorbit::algebra::{build_classical, Family, LieAlgebra};
use gorbit::geodesic::{equivalence_audit, go_decision, locus_y, MetricContext, MetricSpec};
use gorbit::isotropy::{generic_stabilizer, move_along, stabilizer_at};
use gorbit::representations::{tensor_rep, RepTree};
use gorbit::spaces::{ReductiveSpace, SpaceSpec};
use gorbit::weyl::{weyl_dimension, RootFamily, WeightVector};

fn algebra_strategy() -> impl Strategy<Value = (Family, usize)> {
    prop_oneof![
        (2usize..=4).prop_map(|n| (Family::Su, n)),
        (3usize..=6).prop_map(|n| (Family::So, n)),
        (2usize..=3).prop_map(|n| (Family::Sp, n)),
    ]
}

fn build(f: Family, n: usize) -> Arc<LieAlgebra<f64>> {
    Arc::new(build_classical(f, n).unwrap())
}

fn coords(seed: &[f64], dim: usize) -> DVector<f64> {
    DVector::from_fn(dim, |i, _| seed[i % seed.len()] * (1.0 + 0.37 * i as f64).sin())
}

fn matrix_of(alg: &LieAlgebra<f64>, x: &DVector<f64>) -> DMatrix<f64> {
    let s = alg.mat_size();
    alg.basis_mats.iter().zip(x.iter()).fold(DMatrix::zeros(s, s), |m, (b, &c)| m + b * c)
}

fn b3() -> ReductiveSpace<f64> {
    SpaceSpec::from_json(r#"{"k":{"family":"so","n":3},"g1":{"family":"so","n":4},"g2":{"family":"su","n":3}}"#)
        .unwrap()
        .build()
        .unwrap()
}

fn seeds() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0f64..1.0, 3..7)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn jacobi_identity((f, n) in algebra_strategy(), a in seeds(), b in seeds(), c in seeds()) {
        let alg = build(f, n);
        let (x, y, z) = (coords(&a, alg.dim), coords(&b, alg.dim), coords(&c, alg.dim));
        let br = |u: &DVector<f64>, v: &DVector<f64>| alg.bracket_coords(u, v);
        let j = br(&x, &br(&y, &z)) + br(&y, &br(&z, &x)) + br(&z, &br(&x, &y));
        let scale = x.norm() * y.norm() * z.norm();
        prop_assert!(j.norm() <= 1e-10 * scale.max(1.0));
    }

    #[test]
    fn bracket_matches_commutator((f, n) in algebra_strategy(), a in seeds(), b in seeds()) {
        let alg = build(f, n);
        let (x, y) = (coords(&a, alg.dim), coords(&b, alg.dim));
        let (mx, my) = (matrix_of(&alg, &x), matrix_of(&alg, &y));
        let lhs = &mx * &my - &my * &mx;
        let rhs = matrix_of(&alg, &alg.bracket_coords(&x, &y));
        prop_assert!((lhs - rhs).abs().max() <= 1e-11 * (1.0 + x.norm() * y.norm()));
    }

    #[test]
    fn killing_form_is_invariant((f, n) in algebra_strategy(), a in seeds(), b in seeds(), c in seeds()) {
        let alg = build(f, n);
        let (x, y, z) = (coords(&a, alg.dim), coords(&b, alg.dim), coords(&c, alg.dim));
        let k = &alg.killing;
        let lhs = (k * alg.bracket_coords(&x, &y)).dot(&z) + (k * &y).dot(&alg.bracket_coords(&x, &z));
        prop_assert!(lhs.abs() <= 1e-9 * (1.0 + x.norm() * y.norm() * z.norm()));
    }

    #[test]
    fn representations_are_skew_homomorphisms(
        (f, n) in algebra_strategy(),
        tree in prop::sample::select(vec!["defining", "adjoint", "sym2(defining)", "alt2(defining)", "traceless(sym2(defining))", "dual(defining)"]),
    ) {
        let alg = build(f, n);
        let rep = tree.parse::<RepTree>().unwrap().build(&alg).unwrap();
        prop_assert!(rep.homomorphism_residual() < 1e-10);
        prop_assert!(rep.skew_residual() < 1e-10);
    }

    #[test]
    fn tensor_dimension_multiplies((f, n) in algebra_strategy(), i in 0usize..3, j in 0usize..3) {
        let alg = build(f, n);
        let trees = ["defining", "adjoint", "dual(defining)"];
        let a = trees[i].parse::<RepTree>().unwrap().build(&alg).unwrap();
        let b = trees[j].parse::<RepTree>().unwrap().build(&alg).unwrap();
        let t = tensor_rep(&a, &b).unwrap();
        prop_assert_eq!(t.module_dim, a.module_dim * b.module_dim);
        prop_assert!(t.homomorphism_residual() < 1e-9);
    }

    #[test]
    fn least_squares_witness_matches_normal_equations(seed in 0u64..1000, x in 0.3f64..3.0, y in 0.3f64..3.0, v in seeds()) {
        let space = b3();
        let ctx = MetricContext::new(&space, &MetricSpec::diagonal(1.0, x, y)).unwrap();
        let x_m = coords(&v, space.dim_m()) * (1.0 + seed as f64 * 1e-3);
        let fe = ctx.feasibility(&x_m);
        // the bracket is affine in Z: columns are images of basis vectors
        let kd = space.k.dim;
        let r0 = ctx.go_bracket(&x_m, &DVector::zeros(kd));
        let mut m = DMatrix::zeros(r0.len(), kd);
        for i in 0..kd {
            let e = DVector::from_fn(kd, |j, _| if i == j { 1.0 } else { 0.0 });
            m.set_column(i, &(ctx.go_bracket(&x_m, &e) - &r0));
        }
        let mtm = m.transpose() * &m;
        let z = mtm.pseudo_inverse(1e-12).unwrap() * (m.transpose() * -&r0);
        let oracle = ctx.residual_for(&x_m, &z);
        prop_assert!((ctx.residual_for(&x_m, &fe.z_k) - oracle).abs() < 1e-9);
        prop_assert!((fe.residual - oracle).abs() < 1e-9);
    }

    #[test]
    fn homothety_preserves_decision(x in 0.3f64..3.0, on_locus in any::<bool>(), lambda in 0.2f64..5.0) {
        let space = b3();
        let y = if on_locus { locus_y(&space, x).unwrap_or(1.7) } else { 1.7 };
        let spec = MetricSpec::diagonal(1.0, x, y);
        let r1 = go_decision(&space, &spec, 20, 7, 1e-8).unwrap();
        let r2 = go_decision(&space, &spec.scaled(lambda), 20, 7, 1e-8).unwrap();
        prop_assert_eq!(r1.decision, r2.decision);
        prop_assert!((r1.max_residual - r2.max_residual).abs() <= 1e-9 + 1e-6 * r1.max_residual);
    }

    #[test]
    fn witnesses_satisfy_all_conditions_on_locus(x in 0.3f64..3.0, v in seeds()) {
        let space = b3();
        prop_assume!(locus_y(&space, x).is_some());
        let spec = MetricSpec::diagonal(1.0, x, locus_y(&space, x).unwrap());
        let ctx = MetricContext::new(&space, &spec).unwrap();
        let x_m = coords(&v, space.dim_m());
        for z in [ctx.feasibility(&x_m).z_k, ctx.ratio_witness(&x_m).unwrap()] {
            let audit = equivalence_audit(&space, &spec, &x_m, &z, 1e-8).unwrap();
            prop_assert!(audit.flags().iter().all(|&b| b), "{:?}", audit);
        }
    }

    #[test]
    fn stabilizer_dimension_is_conjugation_invariant(
        (f, n) in algebra_strategy(),
        v in seeds(),
        z in seeds(),
        t in -1.0f64..1.0,
    ) {
        let alg = build(f, n);
        let rep = "adjoint".parse::<RepTree>().unwrap().build(&alg).unwrap();
        let v0 = coords(&v, rep.module_dim);
        let v1 = move_along(&rep, &v0, &coords(&z, alg.dim), t);
        let d0 = stabilizer_at(&rep, &v0).unwrap().ncols();
        let d1 = stabilizer_at(&rep, &v1).unwrap().ncols();
        prop_assert_eq!(d0, d1);
    }
}

#[test]
fn weyl_dimension_matches_built_representations() {
    let w = |r: usize, pairs: &[(usize, u32)]| {
        let mut c = vec![0u32; r];
        for &(i, k) in pairs {
            c[i] = k;
        }
        WeightVector::new(c)
    };
    for n in 3..=6 {
        let alg = build(Family::Su, n);
        let r = n - 1;
        let cases = [
            ("cx_alt2(defining)", w(r, &[(1, 1)]), 2),
            ("cx_sym2(defining)", w(r, &[(0, 2)]), 2),
            ("adjoint", w(r, &[(0, 1), (r - 1, 1)]), 1),
        ];
        for (tree, weight, factor) in cases {
            let rep = tree.parse::<RepTree>().unwrap().build(&alg).unwrap();
            assert_eq!(rep.module_dim as u128, factor * weyl_dimension(RootFamily::A, r, &weight).unwrap(), "su({n}) {tree}");
        }
    }
    for n in 5..=9 {
        let alg = build(Family::So, n);
        let (root, r) = RootFamily::of_algebra(Family::So, n);
        let rep = "traceless(sym2(defining))".parse::<RepTree>().unwrap().build(&alg).unwrap();
        assert_eq!(rep.module_dim as u128, weyl_dimension(root, r, &w(r, &[(0, 2)])).unwrap(), "so({n})");
        let rep = "defining".parse::<RepTree>().unwrap().build(&alg).unwrap();
        assert_eq!(rep.module_dim as u128, weyl_dimension(root, r, &w(r, &[(0, 1)])).unwrap());
    }
    for n in 2..=4 {
        let alg = build(Family::Sp, n);
        let rep = "cx_sym2(defining)".parse::<RepTree>().unwrap().build(&alg).unwrap();
        assert_eq!(rep.module_dim as u128, 2 * weyl_dimension(RootFamily::C, n, &w(n, &[(0, 2)])).unwrap(), "sp({n})");
        {
            let rep = "cx_alt2(defining)".parse::<RepTree>().unwrap().build(&alg).unwrap();
            // Λ² of the defining rep splits off a trivial summand
            assert_eq!(rep.module_dim as u128, 2 * (weyl_dimension(RootFamily::C, n, &w(n, &[(1, 1)])).unwrap() + 1));
        }
    }
}

#[test]
fn stabilizers_are_closed_subalgebras() {
    for (f, n, tree) in [(Family::So, 5, "defining"), (Family::Su, 3, "adjoint"), (Family::So, 7, "alt2(defining)")] {
        let alg = build(f, n);
        let rep = tree.parse::<RepTree>().unwrap().build(&alg).unwrap();
        let report = generic_stabilizer(&rep, 5, 3).unwrap();
        assert!(report.closure_residual < 1e-9, "{tree}: {}", report.closure_residual);
    }
}
