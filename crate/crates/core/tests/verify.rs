use sdoc::system::Scheme;
use sdoc::verify::acceptance::{run_criterion, Setup, Thresholds};
use sdoc::verify::study::eoc;
use sdoc::verify::*;

#[test]
fn eoc_of_halving() {
    assert!((eoc(1.0, 0.25) - 2.0).abs() < 1e-15);
    assert!(eoc(1e-12, 1e-13).is_nan());
}

#[test]
fn manufactured_data_has_zero_weak_residual() {
    let spaces = MeshSpec::default().spaces(0).unwrap();
    for name in OCTETS {
        let e = octet(name).unwrap();
        let r = weak_residuals(&spaces, &e, &e.derive_data().unwrap(), 20).unwrap();
        assert!(r.max() < 1e-10, "{name}: {r:?}");
    }
}

#[test]
fn errors_decrease_under_refinement() {
    let rep = convergence_study(&octet("smooth").unwrap(), &MeshSpec::default(), 3, Scheme::Robust).unwrap();
    assert_eq!(rep.rows.len(), 3);
    for w in rep.rows.windows(2) {
        assert!(w[1].u.total < w[0].u.total && w[1].z.total < w[0].z.total);
        assert!((w[1].h - w[0].h / 2.0).abs() < 1e-14);
    }
    assert!(convergence_study(&octet("smooth").unwrap(), &MeshSpec::default(), 2, Scheme::Robust).is_err());
}

#[test]
fn robust_velocity_ignores_gradient_forces() {
    let spaces = MeshSpec::default().spaces(1).unwrap();
    let rep = robustness_experiment(&octet("smooth").unwrap(), &stokes_bubble(), &[1.0, 1e3], &spaces).unwrap();
    assert!(rep.robust_spread() < 1e-6);
    assert!(rep.rows[1].classical_u > rep.rows[0].classical_u);
}

#[test]
fn criteria_report_their_ids() {
    let th = Thresholds::default();
    let setup = Setup::default();
    for id in [2, 3, 8] {
        let o = run_criterion(id, &setup, &th).unwrap();
        assert_eq!(o.id, id);
        assert!(o.passed, "{o}");
        assert!(o.to_string().starts_with(&format!("criterion {id} [PASS]")));
    }
    assert!(run_criterion(9, &setup, &th).is_err());
}

#[test]
fn thresholds_deserialize_partially() {
    let th: Thresholds = serde_json::from_str(r#"{ "kkt": 1e-3 }"#).unwrap();
    assert_eq!(th.kkt, 1e-3);
    assert_eq!(th.moment, Thresholds::default().moment);
}
