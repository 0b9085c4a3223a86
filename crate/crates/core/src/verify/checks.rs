//! Property checks on the discrete operators and on the optimality system.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::assembly::{self, ProblemData};
use crate::error::{Error, Result};
use crate::reconstruction::{max_divergence, max_interface_jump, max_outer_normal, moment_defect, Reconstruction};
use crate::sparse::{max_abs, SparseOperator, Triplets};
use crate::spaces::{FeFunction, FieldKind, Spaces};
use crate::system::{build_system, solve, BlockSystem, EliminatedSolver, Scheme, StateSolver};

/// Random members of `V_h(0)`: velocities with homogeneous essential
/// values, `b(v, q) = 0` for all discrete `q` and `⟨[v·n], λ⟩ = 0` for all
/// discrete `λ`. Each is the Euclidean projection of a uniform random vector.
pub fn admissible_fields(spaces: &Spaces, count: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    let (nv, np, nt) = (spaces.nvel(), spaces.npres(), spaces.ntrace());
    let n = nv + np + nt + 1;
    let b = assembly::assemble_b(spaces);
    let c = assembly::assemble_interface_constraint(spaces);
    let mean = assembly::pressure_mean_vector(spaces);
    let mut t = Triplets::new(n, n);
    t.push_block(0, 0, &SparseOperator::identity(nv), 1.0);
    t.push_block(0, nv, &b.transpose(), 1.0);
    t.push_block(0, nv + np, &c.transpose(), 1.0);
    t.push_block(nv, 0, &b, 1.0);
    t.push_block(nv + np, 0, &c, 1.0);
    for (i, &m) in mean.iter().enumerate() {
        t.push(nv + i, n - 1, m);
        t.push(n - 1, nv + i, m);
    }
    let fixed: Vec<(usize, f64)> = spaces.essential_velocity_dofs().into_iter().map(|d| (d, 0.0)).collect();
    let solver = EliminatedSolver::new(&t.build(), &fixed, &|i| if i < nv { "v" } else { "constraint" })?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let mut rhs = vec![0.0; n];
            for r in rhs.iter_mut().take(nv) {
                *r = rng.random_range(-1.0..1.0);
            }
            let (x, res) = solver.solve(&rhs);
            if !(res < 1e-10) {
                return Err(Error::Solver { block: "projection".into(), detail: format!("relative residual {res:e}") });
            }
            Ok(x[..nv].to_vec())
        })
        .collect()
}

#[derive(Clone, Copy, Debug, Default, PartialEq, serde::Serialize)]
pub struct OperatorCheck {
    pub fields: usize,
    /// Largest `|∇·Πv|` over all fields and quadrature points.
    pub max_divergence: f64,
    /// Largest `|[Πv·n]|` on Γ.
    pub max_interface_jump: f64,
    /// Largest `|Πv·n|` on the outer boundary.
    pub max_outer_normal: f64,
    /// Largest constraint residual `|Bv|`, `|Cv|` of the inputs.
    pub max_constraint: f64,
    /// Largest moment defect of `Πψ - ψ` over the velocity basis.
    pub moment_defect: f64,
}

/// Applies `Π` to `count` random admissible fields and records the worst
/// divergence, interface jump and boundary flux.
pub fn operator_check(spaces: &Spaces, recon: &Reconstruction, count: usize, seed: u64) -> Result<OperatorCheck> {
    let fields = admissible_fields(spaces, count, seed)?;
    let b = assembly::assemble_b(spaces);
    let c = assembly::assemble_interface_constraint(spaces);
    let mut out = OperatorCheck { fields: count, moment_defect: moment_defect(spaces, recon), ..Default::default() };
    for v in fields {
        out.max_constraint = out.max_constraint.max(max_abs(&b.matvec(&v))).max(max_abs(&c.matvec(&v)));
        let w = recon.apply_function(&FeFunction::new(spaces, FieldKind::Velocity, v)?)?;
        out.max_divergence = out.max_divergence.max(max_divergence(&w));
        out.max_interface_jump = out.max_interface_jump.max(max_interface_jump(&w));
        out.max_outer_normal = out.max_outer_normal.max(max_outer_normal(&w));
    }
    Ok(out)
}

/// Singular values of the eliminated monolithic matrix without the two
/// mean rows and columns, smallest first, and the right singular vectors
/// (full length, zero on eliminated unknowns) of those below
/// `tol · σ_max`. Dense; meant for the coarsest meshes only.
pub fn kernel(system: &BlockSystem, tol: f64) -> (Vec<f64>, Vec<Vec<f64>>) {
    let l = system.layout;
    let mut fixed = vec![false; l.len()];
    for &(i, _) in &system.essential {
        fixed[i] = true;
    }
    fixed[l.mp()] = true;
    fixed[l.mr()] = true;
    let free: Vec<usize> = (0..l.len()).filter(|&i| !fixed[i]).collect();
    let k = system.matrix.submatrix(&free, &free);
    let mut m = DMatrix::<f64>::zeros(free.len(), free.len());
    for (i, j, v) in k.iter() {
        m[(i, j)] += v;
    }
    let svd = m.svd(false, true);
    let vt = svd.v_t.expect("requested");
    let smax = svd.singular_values.max();
    let mut order: Vec<usize> = (0..free.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[a].total_cmp(&svd.singular_values[b]));
    let values: Vec<f64> = order.iter().map(|&i| svd.singular_values[i]).collect();
    let vectors = order
        .iter()
        .filter(|&&i| svd.singular_values[i] < tol * smax)
        .map(|&i| {
            let mut v = vec![0.0; l.len()];
            for (k, &f) in free.iter().enumerate() {
                v[f] = vt[(i, k)];
            }
            v
        })
        .collect();
    (values, vectors)
}

#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct FdRow {
    /// `(J(η+εδ) - J(η-εδ)) / 2ε` with `‖δ‖ = 1`.
    pub derivative: f64,
    pub cost: f64,
    pub cost_plus: f64,
    pub cost_minus: f64,
}

/// Central finite differences of the reduced cost at the discrete optimum
/// along `directions` random unit directions of the control space.
///
/// The adjoint-side inhomogeneities are removed first, since the reduced
/// cost only sees the state equation.
pub fn kkt_fd_check(spaces: &Spaces, data: &ProblemData, scheme: Scheme, recon: Option<&Reconstruction>, directions: usize, eps: f64, seed: u64) -> Result<Vec<FdRow>> {
    let data = data.with_homogeneous_adjoint();
    let sol = solve(&build_system(spaces, &data, scheme, recon)?)?;
    let eta = sol.control(recon)?.coeffs;
    let state = StateSolver::new(spaces, &data, scheme, recon)?;
    let j0 = state.reduced_cost(&eta)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..directions)
        .map(|_| {
            let mut d: Vec<f64> = (0..state.control_len()).map(|_| rng.random_range(-1.0..1.0)).collect();
            let md = state.control_mass.matvec(&d);
            let len = d.iter().zip(&md).map(|(a, b)| a * b).sum::<f64>().sqrt();
            d.iter_mut().for_each(|x| *x /= len);
            let shifted = |s: f64| -> Vec<f64> { eta.iter().zip(&d).map(|(e, x)| e + s * x).collect() };
            let (jp, jm) = (state.reduced_cost(&shifted(eps))?, state.reduced_cost(&shifted(-eps))?);
            Ok(FdRow { derivative: (jp - jm) / (2.0 * eps), cost: j0, cost_plus: jp, cost_minus: jm })
        })
        .collect()
}

#[derive(Clone, Copy, Debug, Default, PartialEq, serde::Serialize)]
pub struct Hygiene {
    pub asymmetry: f64,
    pub residual: f64,
    pub divergence_u: f64,
    pub divergence_z: f64,
    pub interface_u: f64,
    pub interface_z: f64,
}

/// Symmetry of the matrix and constraint residuals of the solution.
pub fn hygiene(system: &BlockSystem) -> Result<Hygiene> {
    let sol = solve(system)?;
    let k = &system.blocks;
    let res = |op: &SparseOperator, x: &[f64], rhs: &[f64], m: Option<f64>, mean: &[f64]| {
        let r = op.matvec(x);
        r.iter().enumerate().map(|(i, v)| (v + m.map_or(0.0, |s| s * mean[i]) - rhs[i]).abs()).fold(0.0, f64::max)
    };
    Ok(Hygiene {
        asymmetry: system.matrix.asymmetry(),
        residual: sol.residual,
        divergence_u: res(&k.b, &sol.u.coeffs, &k.g, Some(sol.m_p), &k.mean),
        divergence_z: res(&k.b, &sol.z.coeffs, &k.g_z, Some(sol.m_r), &k.mean),
        interface_u: res(&k.c, &sol.u.coeffs, &k.j0, None, &[]),
        interface_z: res(&k.c, &sol.z.coeffs, &k.j0_z, None, &[]),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reconstruction::build_reconstruction;
    use crate::verify::exact::smooth_octet;
    use crate::verify::study::MeshSpec;

    #[test]
    fn reconstruction_of_admissible_fields_is_exactly_constrained() {
        let s = MeshSpec { n0: 1, ..MeshSpec::default() }.spaces(1).unwrap();
        let r = build_reconstruction(&s);
        let c = operator_check(&s, &r, 5, 1).unwrap();
        assert!(c.max_constraint < 1e-12, "{c:?}");
        assert!(c.max_divergence < 1e-10 && c.max_interface_jump < 1e-10 && c.max_outer_normal < 1e-10, "{c:?}");
    }

    #[test]
    fn plain_admissible_fields_are_not_divergence_free() {
        let s = MeshSpec { n0: 1, ..MeshSpec::default() }.spaces(1).unwrap();
        let v = admissible_fields(&s, 1, 2).unwrap().pop().unwrap();
        let w = FeFunction::new(&s, FieldKind::Velocity, v).unwrap();
        assert!(max_divergence(&w) > 1e-3);
    }

    #[test]
    fn kernel_without_mean_rows_is_two_constants() {
        let s = MeshSpec { n0: 1, ..MeshSpec::default() }.spaces(0).unwrap();
        let data = smooth_octet().derive_data().unwrap();
        let sys = build_system(&s, &data, Scheme::Classical, None).unwrap();
        let (sv, vecs) = kernel(&sys, 1e-10);
        assert_eq!(vecs.len(), 2, "smallest singular values {:?}", &sv[..4]);
        let l = sys.layout;
        // each kernel vector is a combination of (p, λ_u) = (1, 1) and (r, λ_z) = (1, 1)
        for v in &vecs {
            assert!(v[..l.p()].iter().all(|x| x.abs() < 1e-8));
            let (cp, cr) = (v[l.p()], v[l.r()]);
            for i in 0..l.npres {
                assert!((v[l.p() + i] - cp).abs() < 1e-8 && (v[l.r() + i] - cr).abs() < 1e-8);
            }
            for i in 0..l.ntrace {
                assert!((v[l.lu() + i] - cp).abs() < 1e-8 && (v[l.lz() + i] - cr).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn optimum_is_stationary() {
        let s = MeshSpec { n0: 1, ..MeshSpec::default() }.spaces(0).unwrap();
        let data = smooth_octet().derive_data().unwrap();
        let r = build_reconstruction(&s);
        for (scheme, recon) in [(Scheme::Classical, None), (Scheme::Robust, Some(&r))] {
            for row in kkt_fd_check(&s, &data, scheme, recon, 3, 1e-2, 5).unwrap() {
                assert!(row.derivative.abs() < 1e-6, "{scheme:?} {row:?}");
                assert!(row.cost_plus > row.cost && row.cost_minus > row.cost);
            }
        }
    }
}
