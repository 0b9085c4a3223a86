use std::sync::Arc;

use sdoc::assembly::{Permeability, ProblemData};
use sdoc::fields::vector_fn;
use sdoc::mesh::{build_two_domain_mesh, Rect};
use sdoc::reconstruction::build_reconstruction;
use sdoc::spaces::Spaces;
use sdoc::system::*;
use sdoc::verify::octet;

fn spaces(n0: usize) -> Spaces {
    Spaces::new(Arc::new(build_two_domain_mesh(Rect::new(0.0, 1.0, 1.0, 2.0), Rect::new(0.0, 1.0, 0.0, 1.0), n0).unwrap()))
}

fn data() -> ProblemData {
    let mut d = ProblemData::zero(1.0, 0.1, 1.0, Permeability::constant([[1.0, 0.25], [0.25, 0.5]]).unwrap()).unwrap();
    d.f_s = vector_fn(|x| [x[1], -x[0]]);
    d.f_d = vector_fn(|x| [1.0, x[0]]);
    d.target_s = vector_fn(|x| [(3.0 * x[0]).sin(), 0.2]);
    d
}

#[test]
fn layout_is_contiguous() {
    let s = spaces(2);
    let l = Layout::new(&s);
    assert_eq!(l.len(), 2 * s.nvel() + 2 * s.npres() + 2 * s.ntrace() + 2);
    let names: Vec<&str> = [l.u(), l.z(), l.p(), l.r(), l.lu(), l.lz(), l.mp(), l.mr()].iter().map(|&i| l.block_name(i)).collect();
    assert_eq!(names, ["u", "z", "p", "r", "lambda_u", "lambda_z", "mean_p", "mean_r"]);
}

#[test]
fn solutions_satisfy_the_discrete_system() {
    let s = spaces(2);
    let d = data();
    let r = build_reconstruction(&s);
    for scheme in [Scheme::Classical, Scheme::Robust] {
        let sys = build_system(&s, &d, scheme, Some(&r)).unwrap();
        assert!(sys.matrix.asymmetry() < 1e-12);
        let sol = solve(&sys).unwrap();
        assert!(sol.residual < RESIDUAL_TOL);
        // constraint rows hold exactly up to round-off
        let k = &sys.blocks;
        let bu = k.b.matvec(&sol.u.coeffs);
        assert!(bu.iter().zip(&k.g).zip(&k.mean).all(|((a, g), m)| (a + sol.m_p * m - g).abs() < 1e-10));
        let cu = k.c.matvec(&sol.u.coeffs);
        assert!(cu.iter().zip(&k.j0).all(|(a, j)| (a - j).abs() < 1e-10));
        assert!(evaluate_cost(&sol, &d, Some(&r)).unwrap() > 0.0);
    }
}

#[test]
fn optimal_control_beats_zero_control() {
    let s = spaces(2);
    let d = data();
    let r = build_reconstruction(&s);
    for scheme in [Scheme::Classical, Scheme::Robust] {
        let sol = solve(&build_system(&s, &d, scheme, Some(&r)).unwrap()).unwrap();
        let eta = sol.control(Some(&r)).unwrap();
        let state = StateSolver::new(&s, &d, scheme, Some(&r)).unwrap();
        assert_eq!(state.control_len(), eta.coeffs.len());
        let j_opt = state.reduced_cost(&eta.coeffs).unwrap();
        let j_zero = state.reduced_cost(&vec![0.0; eta.coeffs.len()]).unwrap();
        assert!(j_opt < j_zero, "{}: {j_opt} vs {j_zero}", scheme.name());
        let j_kkt = evaluate_cost(&sol, &d, Some(&r)).unwrap();
        assert!((j_opt - j_kkt).abs() < 1e-10 * j_kkt.max(1.0));
        // the state solve with the optimal control reproduces u_h
        let u = state.state(&eta.coeffs).unwrap();
        assert!(u.coeffs.iter().zip(&sol.u.coeffs).all(|(a, b)| (a - b).abs() < 1e-9));
    }
}

#[test]
fn quadratic_solution_is_exact_for_classical_scheme() {
    let s = spaces(1);
    let e = octet("quadratic").unwrap();
    let sol = solve(&build_system(&s, &e.derive_data().unwrap(), Scheme::Classical, None).unwrap()).unwrap();
    let row = sdoc::verify::error_norms(&sol, &e).unwrap();
    assert!(row.u.total < 1e-9 && row.z.total < 1e-9, "{row:?}");
}

#[test]
fn robust_scheme_requires_reconstruction() {
    let s = spaces(1);
    assert!(build_system(&s, &data(), Scheme::Robust, None).is_err());
}

#[test]
fn vtk_output() {
    let s = spaces(1);
    let sol = solve(&build_system(&s, &data(), Scheme::Classical, None).unwrap()).unwrap();
    let mut buf = Vec::new();
    sol.write_vtk(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert!(text.starts_with("# vtk DataFile"));
    assert!(text.contains("POINT_DATA"));
}
