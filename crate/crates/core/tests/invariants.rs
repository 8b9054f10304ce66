use num_complex::Complex64;
use proptest::prelude::*;

use ncosc::config::parse_complex;
use ncosc::model::{DerivedConstants, ModelParams, TruncationSpec};
use ncosc::operators::{build_d, build_theta, build_v, commutator, FockOperator, System};
use ncosc::states::{gram, gram_defect, ladder_family, positivity_samples, FamilyKind, IndexSet};
use ncosc::symmetry::{pt_defect, AntilinearSymmetry};

fn small() -> TruncationSpec {
    TruncationSpec::new(14, 14, 4).unwrap()
}

fn real_alpha() -> impl Strategy<Value = [f64; 4]> {
    prop::array::uniform4(-0.2f64..0.2)
}

fn complex_alpha() -> impl Strategy<Value = [Complex64; 4]> {
    prop::array::uniform4((-0.15f64..0.15, -0.15f64..0.15).prop_map(|(re, im)| Complex64::new(re, im)))
}

fn units() -> impl Strategy<Value = (f64, f64, f64)> {
    (0.5f64..2.0, 0.5f64..2.0, 0.5f64..2.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn level_spacing_relations((m, w, hb) in units(), theta in -1.0f64..1.0, alpha in complex_alpha()) {
        let p = ModelParams { m, omega: w, hbar: hb, theta, alpha };
        let d = DerivedConstants::derive(&p).unwrap();
        let big = (4.0 * hb * hb + theta * theta * m * m * w * w).sqrt();
        prop_assert!((d.gamma1 + d.gamma2 - w * big).abs() < 1e-12 * w * big);
        prop_assert!((d.gamma1 - d.gamma2 - theta * m * w * w).abs() < 1e-12 * (1.0 + w * big));
    }

    #[test]
    fn hamiltonian_forms_agree(theta in -0.6f64..0.6, alpha in complex_alpha()) {
        let p = ModelParams::atomic(theta, alpha);
        let d = DerivedConstants::derive(&p).unwrap();
        let sys = System::new(&p, &d, &small()).unwrap();
        let r = sys.h_canonical.interior_distance(&sys.h_pseudo).unwrap();
        prop_assert!(r <= 1e-8, "residual {r}");
    }

    #[test]
    fn hamiltonian_forms_agree_in_general_units((m, w, hb) in units(), theta in -0.6f64..0.6, alpha in real_alpha()) {
        let p = ModelParams { m, omega: w, hbar: hb, theta, alpha: alpha.map(|a| Complex64::new(a, 0.0)) };
        let d = DerivedConstants::derive(&p).unwrap();
        prop_assume!(d.within_envelope());
        let sys = System::new(&p, &d, &small()).unwrap();
        let r = sys.h_canonical.interior_distance(&sys.h_pseudo).unwrap();
        prop_assert!(r <= 1e-8, "residual {r}");
    }

    #[test]
    fn pseudo_boson_commutators(theta in -0.6f64..0.6, alpha in complex_alpha()) {
        let p = ModelParams::atomic(theta, alpha);
        let d = DerivedConstants::derive(&p).unwrap();
        let t = small();
        let sys = System::new(&p, &d, &t).unwrap();
        let id = FockOperator::identity(t);
        for j in 0..2 {
            for k in 0..2 {
                let c = commutator(&sys.pseudo.a[j], &sys.pseudo.b[k]).unwrap();
                let r = if j == k { c.interior_distance(&id) } else { c.interior_norm() }.unwrap();
                prop_assert!(r <= 1e-10);
            }
        }
    }

    #[test]
    fn real_alpha_gives_real_energies(theta in -1.0f64..1.0, alpha in real_alpha(), n1 in 0usize..10, n2 in 0usize..10) {
        let d = DerivedConstants::derive(&ModelParams::atomic_real(theta, alpha)).unwrap();
        prop_assert!(d.energy(n1, n2).im.abs() <= 1e-12);
    }

    #[test]
    fn bosonic_whenever_alpha1_alpha4_vanish(theta in -1.0f64..1.0, a2 in -0.5f64..0.5, a3 in -0.5f64..0.5) {
        let p = ModelParams::atomic_real(theta, [0.0, a2, a3, 0.0]);
        let d = DerivedConstants::derive(&p).unwrap();
        prop_assert!(d.is_bosonic());
        let sys = System::new(&p, &d, &small()).unwrap();
        for i in 0..2 {
            let diff = sys.pseudo.b[i].matrix().max_abs_diff(&sys.pseudo.a[i].adjoint().matrix());
            prop_assert!(diff <= 1e-14, "{diff}");
        }
    }

    #[test]
    fn real_alpha_hamiltonian_is_symmetric(theta in -0.6f64..0.6, alpha in real_alpha()) {
        let p = ModelParams::atomic_real(theta, alpha);
        let d = DerivedConstants::derive(&p).unwrap();
        let t = small();
        let sys = System::new(&p, &d, &t).unwrap();
        prop_assert!(pt_defect(&sys.h_canonical, &AntilinearSymmetry::new(&t)).unwrap() <= 1e-12);
    }

    #[test]
    fn biorthonormal_families(theta in -0.5f64..0.5, alpha in real_alpha()) {
        let d = DerivedConstants::derive(&ModelParams::atomic_real(theta, alpha)).unwrap();
        let t = TruncationSpec::new(20, 20, 5).unwrap();
        let set = IndexSet::Square(4);
        let phi = ladder_family(FamilyKind::Phi, &d, &t, &set).unwrap();
        let psi = ladder_family(FamilyKind::Psi, &d, &t, &set).unwrap();
        let (_, g) = gram(&phi, &psi).unwrap();
        prop_assert!(gram_defect(&g) <= 1e-8);
    }

    #[test]
    fn metric_is_positive(theta in -0.5f64..0.5, alpha in real_alpha(), seed in any::<u64>()) {
        let d = DerivedConstants::derive(&ModelParams::atomic_real(theta, alpha)).unwrap();
        let theta_op = build_theta(d.nu, d.mu, &small()).unwrap();
        let (min_re, _) = positivity_samples(&theta_op, seed, 8).unwrap();
        prop_assert!(min_re > 0.0);
    }

    #[test]
    fn unitary_displacements(z in prop::array::uniform2((-0.7f64..0.7, -0.7f64..0.7))) {
        let nu = z.map(|(re, im)| Complex64::new(re, im));
        let t = TruncationSpec::new(12, 12, 3).unwrap();
        let v = build_v(nu, nu, &t).unwrap();
        let vv = v.compose(&v.adjoint()).unwrap().matrix();
        prop_assert!(vv.max_abs_diff(&FockOperator::identity(t).matrix()) <= 1e-10);
        prop_assert!(v.matrix().max_abs_diff(&build_d(nu, &t).unwrap().matrix()) <= 1e-10);
    }

    #[test]
    fn complex_literal_round_trip(re in -1e6f64..1e6, im in -1e6f64..1e6) {
        let text = format!("{re}{im:+}i");
        prop_assert_eq!(parse_complex(&text).unwrap(), Complex64::new(re, im));
        prop_assert_eq!(parse_complex(&format!("{re:e}")).unwrap(), Complex64::new(re, 0.0));
    }
}
