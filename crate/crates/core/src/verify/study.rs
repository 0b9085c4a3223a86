//! Convergence, pressure-robustness and interpolation experiments.

use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fields::Scalar;
use crate::mesh::{build_two_domain_mesh, Mesh, Rect};
use crate::reconstruction::{build_reconstruction, rt_interpolate, Reconstruction};
use crate::sparse::norm;
use crate::spaces::Spaces;
use crate::system::{build_system, evaluate_cost, solve, Scheme, Solution};

use super::exact::ExactFields;
use super::norms::{error_norms, l2_vector_error, ErrorRow};

/// Coarsest mesh of every study.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct MeshSpec {
    pub stokes: Rect,
    pub darcy: Rect,
    /// Cells per unit length on level 0.
    pub n0: usize,
}

impl Default for MeshSpec {
    fn default() -> Self {
        MeshSpec { stokes: Rect::new(0.0, 1.0, 1.0, 2.0), darcy: Rect::new(0.0, 1.0, 0.0, 1.0), n0: 2 }
    }
}

impl MeshSpec {
    /// Meshes of levels `0..levels`, each a uniform refinement of the last.
    pub fn hierarchy(&self, levels: usize) -> Result<Vec<Arc<Mesh>>> {
        let mut out = vec![Arc::new(build_two_domain_mesh(self.stokes, self.darcy, self.n0)?)];
        for _ in 1..levels {
            let next = out.last().expect("nonempty").refine_uniform()?;
            out.push(Arc::new(next));
        }
        Ok(out)
    }

    pub fn spaces(&self, level: usize) -> Result<Spaces> {
        let mesh = self.hierarchy(level + 1)?.pop().expect("nonempty");
        Ok(Spaces::new(mesh))
    }
}

/// Errors below this are treated as exact and give a NaN EOC.
pub const EXACT_FLOOR: f64 = 1e-9;

/// `log₂(e_ℓ / e_{ℓ+1})`, or NaN when either error is at round-off level.
pub fn eoc(coarse: f64, fine: f64) -> f64 {
    if coarse < EXACT_FLOOR || fine < EXACT_FLOOR {
        f64::NAN
    } else {
        (coarse / fine).log2()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct EocRow {
    pub u_x: f64,
    pub z_x: f64,
    pub p_l2: f64,
    pub r_l2: f64,
}

#[derive(Clone, Debug, serde::Serialize)]
pub struct ConvergenceReport {
    pub octet: String,
    pub scheme: Scheme,
    pub rows: Vec<ErrorRow>,
    /// `eoc[i]` compares levels `i` and `i + 1`.
    pub eoc: Vec<EocRow>,
    /// The Stokes divergence data is nonzero somewhere.
    pub stokes_source: bool,
}

impl ConvergenceReport {
    pub fn last_eoc(&self) -> Option<EocRow> {
        self.eoc.last().copied()
    }
}

/// Discrete solution of a manufactured problem together with its errors.
pub struct LevelResult {
    pub solution: Solution,
    pub row: ErrorRow,
    pub recon: Option<Reconstruction>,
}

/// Derives data from `exact`, solves with `scheme` and measures the errors.
pub fn solve_manufactured(spaces: &Spaces, exact: &ExactFields, scheme: Scheme) -> Result<LevelResult> {
    let data = exact.derive_data()?;
    let recon = (scheme == Scheme::Robust).then(|| build_reconstruction(spaces));
    let system = build_system(spaces, &data, scheme, recon.as_ref())?;
    let solution = solve(&system)?;
    let mut row = error_norms(&solution, exact)?;
    row.cost = evaluate_cost(&solution, &data, recon.as_ref())?;
    Ok(LevelResult { solution, row, recon })
}

fn has_stokes_source(exact: &ExactFields, mesh: &MeshSpec) -> bool {
    let r = mesh.stokes;
    (0..=10).flat_map(|i| (0..=10).map(move |j| (i, j))).any(|(i, j)| {
        let x = [r.x0 + r.width() * i as f64 / 10.0, r.y0 + r.height() * j as f64 / 10.0];
        exact.u_s.div(x).abs() > 1e-12 || exact.z_s.div(x).abs() > 1e-12
    })
}

/// Solves on levels `0..levels` and reports errors and EOCs.
pub fn convergence_study(exact: &ExactFields, mesh: &MeshSpec, levels: usize, scheme: Scheme) -> Result<ConvergenceReport> {
    if levels < 3 {
        return Err(Error::Argument(format!("a convergence study needs at least 3 levels, got {levels}")));
    }
    let meshes = mesh.hierarchy(levels)?;
    let rows: Vec<ErrorRow> = meshes
        .par_iter()
        .enumerate()
        .map(|(level, m)| {
            let spaces = Spaces::new(m.clone());
            let mut r = solve_manufactured(&spaces, exact, scheme).map_err(|e| Error::Level { level, source: Box::new(e) })?.row;
            r.level = level;
            Ok(r)
        })
        .collect::<Result<_>>()?;
    let eoc = rows
        .windows(2)
        .map(|w| EocRow {
            u_x: eoc(w[0].u.total, w[1].u.total),
            z_x: eoc(w[0].z.total, w[1].z.total),
            p_l2: eoc(w[0].p_l2, w[1].p_l2),
            r_l2: eoc(w[0].r_l2, w[1].r_l2),
        })
        .collect();
    Ok(ConvergenceReport { octet: exact.name.clone(), scheme, rows, eoc, stokes_source: has_stokes_source(exact, mesh) })
}

#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct RobustnessRow {
    pub lambda: f64,
    pub classical_u: f64,
    pub robust_u: f64,
    /// `‖u_h(λ) - u_h(0)‖₂ / λ` of the robust velocity coefficients.
    pub robust_shift: f64,
}

#[derive(Clone, Debug, serde::Serialize)]
pub struct RobustnessReport {
    pub baseline_classical_u: f64,
    pub baseline_robust_u: f64,
    pub rows: Vec<RobustnessRow>,
}

impl RobustnessReport {
    /// `(max - min) / min` of the robust velocity errors over all scales.
    pub fn robust_spread(&self) -> f64 {
        let e: Vec<f64> = self.rows.iter().map(|r| r.robust_u).collect();
        let (lo, hi) = e.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &x| (a.min(x), b.max(x)));
        (hi - lo) / lo
    }

    /// Classical error at the largest scale over the error at the smallest.
    pub fn classical_growth(&self) -> f64 {
        let lo = self.rows.iter().min_by(|a, b| a.lambda.total_cmp(&b.lambda));
        let hi = self.rows.iter().max_by(|a, b| a.lambda.total_cmp(&b.lambda));
        match (lo, hi) {
            (Some(a), Some(b)) => b.classical_u / a.classical_u,
            _ => f64::NAN,
        }
    }
}

/// Checks that `φ` vanishes on the boundary of the Stokes region.
pub fn check_compact_support(phi: &Scalar, stokes: Rect) -> Result<()> {
    for i in 0..=100 {
        let t = i as f64 / 100.0;
        let (x, y) = (stokes.x0 + t * stokes.width(), stokes.y0 + t * stokes.height());
        for p in [[x, stokes.y0], [x, stokes.y1], [stokes.x0, y], [stokes.x1, y]] {
            let v = phi.value(p);
            if v.abs() > 1e-12 {
                return Err(Error::Argument(format!("perturbation is {v:e} at ({}, {}) on the Stokes boundary", p[0], p[1])));
            }
        }
    }
    Ok(())
}

/// Adds `λ∇φ` to the Stokes source (exact Stokes pressure `p^s + λφ`) and
/// reports the velocity errors of both schemes for every `λ`.
pub fn robustness_experiment(exact: &ExactFields, phi: &Scalar, scales: &[f64], spaces: &Spaces) -> Result<RobustnessReport> {
    check_compact_support(phi, spaces.mesh.geometry.stokes)?;
    let run = |lambda: f64, scheme: Scheme| -> Result<(f64, Vec<f64>)> {
        let e = exact.with_pressure_perturbation(lambda, phi.clone());
        let r = solve_manufactured(spaces, &e, scheme)?;
        Ok((r.row.u.total, r.solution.u.coeffs))
    };
    let (c0, _) = run(0.0, Scheme::Classical)?;
    let (r0, base) = run(0.0, Scheme::Robust)?;
    let rows = scales
        .par_iter()
        .map(|&lambda| {
            let (classical_u, _) = run(lambda, Scheme::Classical)?;
            let (robust_u, coeffs) = run(lambda, Scheme::Robust)?;
            let diff: Vec<f64> = coeffs.iter().zip(&base).map(|(a, b)| a - b).collect();
            let robust_shift = if lambda == 0.0 { norm(&diff) } else { norm(&diff) / lambda.abs() };
            Ok(RobustnessRow { lambda, classical_u, robust_u, robust_shift })
        })
        .collect::<Result<_>>()?;
    Ok(RobustnessReport { baseline_classical_u: c0, baseline_robust_u: r0, rows })
}

/// `(h, ‖v - I_RT v‖)` for the RT1 interpolant of the smooth octet velocity.
pub fn rt_interpolation_study(exact: &ExactFields, mesh: &MeshSpec, levels: usize) -> Result<Vec<(f64, f64)>> {
    let meshes = mesh.hierarchy(levels)?;
    meshes
        .par_iter()
        .map(|m| {
            let spaces = Spaces::new(m.clone());
            let (a, b) = (exact.u_s.clone(), exact.u_d.clone());
            let fs = crate::fields::vector_fn(move |x| a.value(x));
            let fd = crate::fields::vector_fn(move |x| b.value(x));
            let w = rt_interpolate(&spaces, &fs, &fd);
            Ok((m.h, l2_vector_error(&w, &*fs, &*fd)?))
        })
        .collect()
}
