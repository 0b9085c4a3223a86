//! Moment-preserving reconstruction of discrete velocities into RT1.
//!
//! On each Stokes triangle the reconstruction of a velocity is the RT1
//! function with the same normal moments against P1 on every edge and the
//! same interior moments against constant vectors. Darcy velocities are
//! already RT1 and are copied.

use rayon::prelude::*;

use crate::element::{rt_moments, Affine, RT1_LOCAL};
use crate::error::{Error, Result};
use crate::fields::{PointFn, PointVecFn};
use crate::mesh::{EdgeTag, Point, Subdomain};
use crate::quadrature::{make_quadrature, Domain};
use crate::sparse::SparseOperator;
use crate::spaces::{FeFunction, FieldKind, Spaces};

/// `Π`: combined velocity dofs → reconstruction target dofs.
#[derive(Clone, Debug)]
pub struct Reconstruction {
    pub pi: SparseOperator,
}

impl Reconstruction {
    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        self.pi.matvec(v)
    }

    pub fn apply_function(&self, v: &FeFunction) -> Result<FeFunction> {
        if v.kind != FieldKind::Velocity {
            return Err(Error::Argument(format!("cannot reconstruct a {:?} function", v.kind)));
        }
        FeFunction::new(&v.spaces, FieldKind::Reconstructed, self.apply(&v.coeffs))
    }
}

pub fn build_reconstruction(spaces: &Spaces) -> Reconstruction {
    let mesh = &spaces.mesh;
    let stokes = &spaces.stokes;
    let rt = &spaces.stokes_rt;
    let parts: Vec<Vec<(usize, usize, f64)>> = stokes
        .cells()
        .par_iter()
        .map(|&t| {
            let points = mesh.triangle_points(t);
            let aff = Affine::new(points);
            let (sd, _) = stokes.dof_map(t);
            let (rd, rs) = rt.dof_map(t);
            let mut out = Vec::new();
            for (k, &col) in sd.iter().enumerate() {
                let m = rt_moments(points, |x| stokes.eval_basis_affine(&aff, aff.bary(x)).values[k]);
                for l in 0..RT1_LOCAL {
                    let v = rs[l] * m[l];
                    if v.abs() > 1e-15 {
                        out.push((rd[l], col, v));
                    }
                }
            }
            out
        })
        .collect();
    // edge moments of a continuous function are computed from both sides;
    // keep one copy per entry
    let mut entries: Vec<(usize, usize, f64)> = parts.into_iter().flatten().collect();
    entries.sort_by_key(|&(i, j, _)| (i, j));
    entries.dedup_by_key(|e| (e.0, e.1));
    let (r0, c0) = (rt.ndofs(), spaces.darcy_offset());
    entries.extend((0..spaces.darcy.ndofs()).map(|i| (r0 + i, c0 + i, 1.0)));
    Reconstruction { pi: SparseOperator::from_triplets(spaces.nrt(), spaces.nvel(), entries) }
}

/// RT1 interpolant of a piecewise smooth field over the whole domain.
pub fn rt_interpolate(spaces: &Spaces, fs: &PointVecFn, fd: &PointVecFn) -> FeFunction {
    FeFunction::new(spaces, FieldKind::Reconstructed, spaces.interpolate_rt(&**fs, &**fd)).expect("length matches")
}

/// Largest defect of the RT1 moments of `Πψ - ψ` over every velocity basis
/// function `ψ` and every triangle of its support.
pub fn moment_defect(spaces: &Spaces, recon: &Reconstruction) -> f64 {
    let mesh = &spaces.mesh;
    (0..mesh.num_triangles())
        .into_par_iter()
        .map(|t| {
            let points = mesh.triangle_points(t);
            let aff = Affine::new(points);
            let (vs, voff) = spaces.velocity_space(t);
            let (rsp, roff) = spaces.rt_space(t);
            let (vd, vsg) = vs.dof_map(t);
            let (rd, rsg) = rsp.dof_map(t);
            let mut worst: f64 = 0.0;
            for k in 0..vd.len() {
                let col = voff + vd[k];
                let coeff: Vec<f64> = (0..RT1_LOCAL).map(|l| rsg[l] * recon.pi.get(roff + rd[l], col)).collect();
                let m = rt_moments(points, |x| {
                    let b = aff.bary(x);
                    let psi = vs.eval_basis_affine(&aff, b).values[k];
                    let rb = rsp.eval_basis_affine(&aff, b).values;
                    let mut d = [-vsg[k] * psi[0], -vsg[k] * psi[1]];
                    for l in 0..RT1_LOCAL {
                        d[0] += coeff[l] * rb[l][0];
                        d[1] += coeff[l] * rb[l][1];
                    }
                    d
                });
                worst = m.iter().fold(worst, |w, v| w.max(v.abs()));
            }
            worst
        })
        .reduce(|| 0.0, f64::max)
}

/// Largest `|∇·w|` at the quadrature points of every triangle.
pub fn max_divergence(w: &FeFunction) -> f64 {
    let rule = make_quadrature(Domain::Triangle, 6).expect("degree 6");
    let mesh = &w.spaces.mesh;
    (0..mesh.num_triangles())
        .into_par_iter()
        .map(|t| rule.iter().map(|(b, _)| w.div_in(t, b).abs()).fold(0.0, f64::max))
        .reduce(|| 0.0, f64::max)
}

/// Largest `|w^s·n^s + w^d·n^d|` at quadrature points on Γ.
pub fn max_interface_jump(w: &FeFunction) -> f64 {
    let mesh = &w.spaces.mesh;
    let rule = make_quadrature(Domain::Edge, 5).expect("degree 5");
    let mut worst: f64 = 0.0;
    for &e in w.spaces.trace.cells() {
        let edge = &mesh.edges[e];
        let (ts, td) = (edge.triangles[0].unwrap(), edge.triangles[1].unwrap());
        for (q, _) in rule.iter() {
            let us = w.eval_in(ts, crate::assembly::edge_point_bary(mesh, ts, e, q[1]));
            let ud = w.eval_in(td, crate::assembly::edge_point_bary(mesh, td, e, q[1]));
            let n = edge.normal;
            worst = worst.max(((us[0] - ud[0]) * n[0] + (us[1] - ud[1]) * n[1]).abs());
        }
    }
    worst
}

/// Largest `|w·n|` at quadrature points on Γ^s ∪ Γ^d.
pub fn max_outer_normal(w: &FeFunction) -> f64 {
    let mesh = &w.spaces.mesh;
    let rule = make_quadrature(Domain::Edge, 5).expect("degree 5");
    let mut worst: f64 = 0.0;
    for (e, edge) in mesh.edges.iter().enumerate() {
        if !matches!(edge.tag, EdgeTag::StokesBoundary | EdgeTag::DarcyBoundary) {
            continue;
        }
        let t = edge.triangles[0].unwrap();
        for (q, _) in rule.iter() {
            let u = w.eval_in(t, crate::assembly::edge_point_bary(mesh, t, e, q[1]));
            worst = worst.max((u[0] * edge.normal[0] + u[1] * edge.normal[1]).abs());
        }
    }
    worst
}

/// `ϑ_φ(ψ) = b(ψ, φ) + ⟨ψ^s·n^s + ψ^d·n^d, φ^d⟩_Γ` for a velocity or
/// reconstructed function `ψ`. With this sign the functional is the
/// defect of the discrete momentum equation tested by the exact pressure,
/// and it vanishes on constants.
pub fn consistency_functional(phi_s: &PointFn, phi_d: &PointFn, psi: &FeFunction, degree: usize) -> Result<f64> {
    if !matches!(psi.kind, FieldKind::Velocity | FieldKind::Reconstructed) {
        return Err(Error::Argument(format!("consistency functional needs a velocity, got {:?}", psi.kind)));
    }
    let mesh = &psi.spaces.mesh;
    let rule = make_quadrature(Domain::Triangle, degree)?;
    let mut b = 0.0;
    for t in 0..mesh.num_triangles() {
        let aff = Affine::new(mesh.triangle_points(t));
        let phi = match mesh.triangles[t].subdomain {
            Subdomain::Stokes => phi_s,
            Subdomain::Darcy => phi_d,
        };
        for (q, w) in rule.iter() {
            b -= w * aff.det * psi.div_in(t, q) * phi(aff.map(q));
        }
    }
    let erule = make_quadrature(Domain::Edge, degree)?;
    let mut jump = 0.0;
    for &e in psi.spaces.trace.cells() {
        let edge = &mesh.edges[e];
        let (ts, td) = (edge.triangles[0].unwrap(), edge.triangles[1].unwrap());
        let [a, c] = edge.vertices.map(|v| mesh.vertices[v]);
        for (q, w) in erule.iter() {
            let s = q[1];
            let x: Point = [a[0] + s * (c[0] - a[0]), a[1] + s * (c[1] - a[1])];
            let us = psi.eval_in(ts, crate::assembly::edge_point_bary(mesh, ts, e, s));
            let ud = psi.eval_in(td, crate::assembly::edge_point_bary(mesh, td, e, s));
            let n = edge.normal;
            jump += w * edge.length * ((us[0] - ud[0]) * n[0] + (us[1] - ud[1]) * n[1]) * phi_d(x);
        }
    }
    Ok(b + jump)
}
