//! Bilinear forms, load vectors and problem data.
//!
//! Velocity operators act on the combined vector `[Stokes dofs | Darcy dofs]`;
//! reconstructed quantities act on `[Stokes RT1 dofs | Darcy RT1 dofs]`.

use std::sync::Arc;

use rayon::prelude::*;

use crate::element::{edge_bary, Affine};
use crate::error::{Error, Result};
use crate::fields::{scalar_fn, vector_fn, PointFn, PointVecFn};
use crate::mesh::{Mesh, Point, Subdomain};
use crate::quadrature::{make_quadrature, Domain, QuadratureRule};
use crate::reconstruction::Reconstruction;
use crate::sparse::{SparseOperator, Triplets};
use crate::spaces::{Space, Spaces};

pub const TRIANGLE_DEGREE: usize = 6;
pub const EDGE_DEGREE: usize = 5;
/// Default quadrature degree for source and target loads.
pub const LOAD_DEGREE: usize = 12;

pub type TensorFn = Arc<dyn Fn(Point) -> [[f64; 2]; 2] + Send + Sync>;

#[derive(Clone)]
pub struct Permeability {
    pub k: TensorFn,
    /// Bounds with `lower |ξ|² ≤ ξᵀKξ ≤ upper |ξ|²`.
    pub lower: f64,
    pub upper: f64,
}

impl Permeability {
    /// Constant tensor; bounds are its eigenvalues.
    pub fn constant(k: [[f64; 2]; 2]) -> Result<Self> {
        let (lo, hi) = sym_eigenvalues(k)?;
        if lo <= 0.0 {
            return Err(Error::Data(format!("permeability {k:?} is not positive definite")));
        }
        Ok(Permeability { k: Arc::new(move |_| k), lower: lo, upper: hi })
    }

    pub fn at(&self, x: Point) -> Result<[[f64; 2]; 2]> {
        let k = (self.k)(x);
        let (lo, hi) = sym_eigenvalues(k)?;
        let tol = 1e-12 * self.upper.abs().max(1.0);
        if lo < self.lower - tol || hi > self.upper + tol || lo <= 0.0 {
            return Err(Error::Data(format!(
                "permeability at {x:?} has eigenvalues ({lo}, {hi}) outside [{}, {}]",
                self.lower, self.upper
            )));
        }
        Ok(k)
    }

    pub fn inverse_at(&self, x: Point) -> Result<[[f64; 2]; 2]> {
        let k = self.at(x)?;
        let det = k[0][0] * k[1][1] - k[0][1] * k[1][0];
        Ok([[k[1][1] / det, -k[0][1] / det], [-k[1][0] / det, k[0][0] / det]])
    }
}

/// Eigenvalues of a symmetric 2×2 matrix, ascending.
pub fn sym_eigenvalues(k: [[f64; 2]; 2]) -> Result<(f64, f64)> {
    if (k[0][1] - k[1][0]).abs() > 1e-12 * (k[0][1].abs() + k[1][0].abs()).max(1.0) || k.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::Data(format!("permeability {k:?} is not symmetric")));
    }
    let m = 0.5 * (k[0][0] + k[1][1]);
    let d = (0.25 * (k[0][0] - k[1][1]).powi(2) + k[0][1] * k[0][1]).sqrt();
    Ok((m - d, m + d))
}

/// Interface residual data: mass jump, normal-stress residual, slip residual.
#[derive(Clone)]
pub struct InterfaceResiduals {
    pub j0: PointFn,
    pub j2: PointFn,
    pub j3: PointFn,
}

impl InterfaceResiduals {
    pub fn zero() -> Self {
        let z = scalar_fn(|_| 0.0);
        InterfaceResiduals { j0: z.clone(), j2: z.clone(), j3: z }
    }
}

/// Data of one equation block (state or adjoint).
#[derive(Clone)]
pub struct BlockData {
    /// Divergence data on Ω^s and Ω^d.
    pub g_s: PointFn,
    pub g_d: PointFn,
    pub interface: InterfaceResiduals,
    /// Velocity values used for the essential conditions on Γ^s and Γ^d.
    pub boundary_s: PointVecFn,
    pub boundary_d: PointVecFn,
}

impl BlockData {
    pub fn zero() -> Self {
        let z = scalar_fn(|_| 0.0);
        let v = vector_fn(|_| [0.0; 2]);
        BlockData { g_s: z.clone(), g_d: z, interface: InterfaceResiduals::zero(), boundary_s: v.clone(), boundary_d: v }
    }
}

#[derive(Clone)]
pub struct ProblemData {
    pub mu: f64,
    pub alpha: f64,
    pub alpha1: f64,
    pub permeability: Permeability,
    pub f_s: PointVecFn,
    pub f_d: PointVecFn,
    /// Target velocity `u*`.
    pub target_s: PointVecFn,
    pub target_d: PointVecFn,
    pub state: BlockData,
    pub adjoint: BlockData,
    pub load_degree: usize,
}

impl ProblemData {
    /// All sources, targets and residuals zero.
    pub fn zero(mu: f64, alpha: f64, alpha1: f64, permeability: Permeability) -> Result<Self> {
        let v = vector_fn(|_| [0.0; 2]);
        let d = ProblemData {
            mu,
            alpha,
            alpha1,
            permeability,
            f_s: v.clone(),
            f_d: v.clone(),
            target_s: v.clone(),
            target_d: v,
            state: BlockData::zero(),
            adjoint: BlockData::zero(),
            load_degree: LOAD_DEGREE,
        };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("mu", self.mu), ("alpha", self.alpha), ("alpha1", self.alpha1)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Data(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.permeability.lower > 0.0 && self.permeability.lower <= self.permeability.upper) {
            return Err(Error::Data("permeability bounds must satisfy 0 < lower <= upper".into()));
        }
        Ok(())
    }

    /// `α^{-1/2}`.
    pub fn coupling(&self) -> f64 {
        1.0 / self.alpha.sqrt()
    }

    /// BJS coefficient `α₁μ/√κ` with `κ = τ·Kτ`.
    pub fn bjs(&self, x: Point, tau: Point) -> Result<f64> {
        let k = self.permeability.at(x)?;
        let kappa = tau[0] * (k[0][0] * tau[0] + k[0][1] * tau[1]) + tau[1] * (k[1][0] * tau[0] + k[1][1] * tau[1]);
        Ok(self.alpha1 * self.mu / kappa.sqrt())
    }

    /// Same data with every adjoint-side inhomogeneity removed (adjoint
    /// divergence, interface residuals and boundary values).
    pub fn with_homogeneous_adjoint(&self) -> Self {
        ProblemData { adjoint: BlockData::zero(), ..self.clone() }
    }

    pub fn block(&self, which: Which) -> &BlockData {
        match which {
            Which::State => &self.state,
            Which::Adjoint => &self.adjoint,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Which {
    State,
    Adjoint,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TestMode {
    Plain,
    Reconstructed,
}

fn tri_rule(degree: usize) -> QuadratureRule {
    make_quadrature(Domain::Triangle, degree).expect("supported degree")
}

fn edge_rule(degree: usize) -> QuadratureRule {
    make_quadrature(Domain::Edge, degree).expect("supported degree")
}

/// Barycentric coordinates in triangle `t` of the point at parameter `s`
/// along mesh edge `e`, measured from its lower-numbered endpoint.
pub fn edge_point_bary(mesh: &Mesh, t: usize, e: usize, s: f64) -> [f64; 3] {
    let tri = &mesh.triangles[t];
    let i = tri.edges.iter().position(|&x| x == e).expect("edge belongs to triangle");
    if tri.vertices[(i + 1) % 3] == mesh.edges[e].vertices[0] {
        edge_bary(i, s)
    } else {
        edge_bary(i, 1.0 - s)
    }
}

/// Runs `local` on every cell in parallel and concatenates the triplets in
/// cell order.
fn assemble_cells<F>(cells: &[usize], nrows: usize, ncols: usize, local: F) -> Result<SparseOperator>
where
    F: Fn(usize) -> Result<Vec<(usize, usize, f64)>> + Sync,
{
    let parts: Vec<Result<Vec<_>>> = cells.par_iter().map(|&c| local(c)).collect();
    let mut t = Triplets::new(nrows, ncols);
    for p in parts {
        t.entries.extend(p?);
    }
    Ok(t.build())
}

fn sym_grad(j: &[[f64; 2]; 2]) -> [[f64; 2]; 2] {
    [[j[0][0], 0.5 * (j[0][1] + j[1][0])], [0.5 * (j[0][1] + j[1][0]), j[1][1]]]
}

/// `2μ(D(u), D(v))` on the Stokes region (Stokes dof numbering).
pub fn assemble_stokes_viscous(spaces: &Spaces, mu: f64) -> Result<SparseOperator> {
    let sp = &spaces.stokes;
    let rule = tri_rule(TRIANGLE_DEGREE);
    assemble_cells(sp.cells(), sp.ndofs(), sp.ndofs(), |t| {
        let aff = Affine::new(spaces.mesh.triangle_points(t));
        let (dofs, _) = sp.dof_map(t);
        let n = dofs.len();
        let mut local = vec![0.0; n * n];
        for (b, w) in rule.iter() {
            let basis = sp.eval_basis_affine(&aff, b);
            let d: Vec<_> = basis.grads.iter().map(sym_grad).collect();
            let wq = 2.0 * mu * w * aff.det;
            for i in 0..n {
                for j in 0..n {
                    let mut s = 0.0;
                    for a in 0..2 {
                        for c in 0..2 {
                            s += d[i][a][c] * d[j][a][c];
                        }
                    }
                    local[i * n + j] += wq * s;
                }
            }
        }
        Ok(scatter(dofs, None, dofs, None, &local))
    })
}

fn scatter(rows: &[usize], rs: Option<&[f64]>, cols: &[usize], cs: Option<&[f64]>, local: &[f64]) -> Vec<(usize, usize, f64)> {
    let mut out = Vec::with_capacity(local.len());
    for (i, &r) in rows.iter().enumerate() {
        let si = rs.map_or(1.0, |s| s[i]);
        for (j, &c) in cols.iter().enumerate() {
            let sj = cs.map_or(1.0, |s| s[j]);
            out.push((r, c, si * sj * local[i * cols.len() + j]));
        }
    }
    out
}

/// Weighted L² mass `∫ (W v_i)·v_j` over the cells of an RT or Stokes space.
fn weighted_mass(space: &Space, weight: &(dyn Fn(Point) -> Result<[[f64; 2]; 2]> + Sync)) -> Result<SparseOperator> {
    let rule = tri_rule(TRIANGLE_DEGREE);
    let mesh = &space.mesh;
    assemble_cells(space.cells(), space.ndofs(), space.ndofs(), |t| {
        let aff = Affine::new(mesh.triangle_points(t));
        let (dofs, signs) = space.dof_map(t);
        let n = dofs.len();
        let mut local = vec![0.0; n * n];
        for (b, w) in rule.iter() {
            let basis = space.eval_basis_affine(&aff, b);
            let m = weight(aff.map(b))?;
            let wq = w * aff.det;
            for i in 0..n {
                let vi = basis.values[i];
                let mvi = [m[0][0] * vi[0] + m[0][1] * vi[1], m[1][0] * vi[0] + m[1][1] * vi[1]];
                for j in 0..n {
                    let vj = basis.values[j];
                    local[i * n + j] += wq * (mvi[0] * vj[0] + mvi[1] * vj[1]);
                }
            }
        }
        Ok(scatter(dofs, Some(signs), dofs, Some(signs), &local))
    })
}

fn identity_weight(_: Point) -> Result<[[f64; 2]; 2]> {
    Ok([[1.0, 0.0], [0.0, 1.0]])
}

/// `μ(K⁻¹u, v)` on the Darcy region (Darcy dof numbering).
pub fn assemble_darcy_friction(spaces: &Spaces, data: &ProblemData) -> Result<SparseOperator> {
    let mu = data.mu;
    weighted_mass(&spaces.darcy, &|x| {
        let k = data.permeability.inverse_at(x)?;
        Ok([[mu * k[0][0], mu * k[0][1]], [mu * k[1][0], mu * k[1][1]]])
    })
}

/// BJS term `(α₁μ/√κ) ⟨u^s·τ, v^s·τ⟩_Γ` (Stokes dof numbering).
pub fn assemble_bjs(spaces: &Spaces, data: &ProblemData) -> Result<SparseOperator> {
    let mesh = &spaces.mesh;
    let sp = &spaces.stokes;
    let rule = edge_rule(EDGE_DEGREE);
    let tau = mesh.geometry.tangent();
    let cells: Vec<usize> = spaces.trace.cells().to_vec();
    assemble_cells(&cells, sp.ndofs(), sp.ndofs(), |e| {
        let t = mesh.edges[e].triangles[0].expect("interface edge has a Stokes triangle");
        let aff = Affine::new(mesh.triangle_points(t));
        let (dofs, _) = sp.dof_map(t);
        let n = dofs.len();
        let mut local = vec![0.0; n * n];
        for (q, w) in rule.iter() {
            let b = edge_point_bary(mesh, t, e, q[1]);
            let x = aff.map(b);
            let c = data.bjs(x, tau)?;
            let basis = sp.eval_basis_affine(&aff, b);
            let vt: Vec<f64> = basis.values.iter().map(|v| v[0] * tau[0] + v[1] * tau[1]).collect();
            for i in 0..n {
                for j in 0..n {
                    local[i * n + j] += c * w * mesh.edges[e].length * vt[i] * vt[j];
                }
            }
        }
        Ok(scatter(dofs, None, dofs, None, &local))
    })
}

/// Places a Stokes-numbered and a Darcy-numbered square block on the
/// diagonal of a combined velocity operator.
fn block_diag(spaces: &Spaces, s: &SparseOperator, d: &SparseOperator) -> SparseOperator {
    let n = spaces.nvel();
    let mut t = Triplets::new(n, n);
    t.push_block(0, 0, s, 1.0);
    t.push_block(spaces.darcy_offset(), spaces.darcy_offset(), d, 1.0);
    t.build()
}

/// `a(u, v) = a_s + a_d + a_I` on the combined velocity space.
pub fn assemble_a(spaces: &Spaces, data: &ProblemData) -> Result<SparseOperator> {
    data.validate()?;
    let s = assemble_stokes_viscous(spaces, data.mu)?.add(1.0, &assemble_bjs(spaces, data)?, 1.0);
    let d = assemble_darcy_friction(spaces, data)?;
    Ok(block_diag(spaces, &s, &d))
}

/// `b(v, q) = -(∇·v, q)` with rows over pressure dofs.
pub fn assemble_b(spaces: &Spaces) -> SparseOperator {
    let rule = tri_rule(TRIANGLE_DEGREE);
    let mesh = &spaces.mesh;
    let cells: Vec<usize> = (0..mesh.num_triangles()).collect();
    assemble_cells(&cells, spaces.npres(), spaces.nvel(), |t| {
        let aff = Affine::new(mesh.triangle_points(t));
        let (vs, off) = spaces.velocity_space(t);
        let (vd, signs) = vs.dof_map(t);
        let cols: Vec<usize> = vd.iter().map(|d| d + off).collect();
        let (pd, _) = spaces.pressure.dof_map(t);
        let n = cols.len();
        let mut local = vec![0.0; 3 * n];
        for (b, w) in rule.iter() {
            let basis = vs.eval_basis_affine(&aff, b);
            for i in 0..3 {
                for j in 0..n {
                    local[i * n + j] -= w * aff.det * b[i] * basis.divs[j];
                }
            }
        }
        Ok(scatter(pd, None, &cols, Some(signs), &local))
    })
    .expect("divergence assembly has no failure modes")
}

/// Rows `⟨v^s·n^s + v^d·n^d, λ_i⟩_Γ` over trace dofs.
pub fn assemble_interface_constraint(spaces: &Spaces) -> SparseOperator {
    let mesh = &spaces.mesh;
    let rule = edge_rule(EDGE_DEGREE);
    let cells = spaces.trace.cells().to_vec();
    assemble_cells(&cells, spaces.ntrace(), spaces.nvel(), |e| {
        let edge = &mesh.edges[e];
        let (ld, _) = spaces.trace.dof_map(e);
        let mut out = Vec::new();
        for (slot, side_sign) in [(0, 1.0), (1, -1.0)] {
            let t = edge.triangles[slot].expect("interface edge has two neighbours");
            let (vs, off) = spaces.velocity_space(t);
            let aff = Affine::new(mesh.triangle_points(t));
            let (vd, signs) = vs.dof_map(t);
            let cols: Vec<usize> = vd.iter().map(|d| d + off).collect();
            let n = cols.len();
            let mut local = vec![0.0; 2 * n];
            for (q, w) in rule.iter() {
                let s = q[1];
                let b = edge_point_bary(mesh, t, e, s);
                let basis = vs.eval_basis_affine(&aff, b);
                let lam = spaces.trace.eval_trace(s);
                for j in 0..n {
                    let vn = side_sign * (basis.values[j][0] * edge.normal[0] + basis.values[j][1] * edge.normal[1]);
                    for i in 0..2 {
                        local[i * n + j] += w * edge.length * lam[i] * vn;
                    }
                }
            }
            out.extend(scatter(ld, None, &cols, Some(signs), &local));
        }
        Ok(out)
    })
    .expect("constraint assembly has no failure modes")
}

/// Plain velocity mass (block diagonal over the two regions).
pub fn assemble_plain_mass(spaces: &Spaces) -> SparseOperator {
    let s = weighted_mass(&spaces.stokes, &identity_weight).expect("identity weight");
    let d = weighted_mass(&spaces.darcy, &identity_weight).expect("identity weight");
    block_diag(spaces, &s, &d)
}

/// RT1 mass on the reconstruction target.
pub fn assemble_rt_mass(spaces: &Spaces) -> SparseOperator {
    let s = weighted_mass(&spaces.stokes_rt, &identity_weight).expect("identity weight");
    let d = weighted_mass(&spaces.darcy, &identity_weight).expect("identity weight");
    let n = spaces.nrt();
    let mut t = Triplets::new(n, n);
    t.push_block(0, 0, &s, 1.0);
    t.push_block(spaces.stokes_rt.ndofs(), spaces.stokes_rt.ndofs(), &d, 1.0);
    t.build()
}

/// Plain mass or `ΠᵀM_RTΠ`.
pub fn assemble_velocity_mass(spaces: &Spaces, mode: TestMode, recon: Option<&Reconstruction>) -> Result<SparseOperator> {
    match mode {
        TestMode::Plain => Ok(assemble_plain_mass(spaces)),
        TestMode::Reconstructed => {
            let pi = &recon.ok_or_else(|| Error::Argument("reconstructed mass needs the reconstruction operator".into()))?.pi;
            let m = assemble_rt_mass(spaces);
            Ok(pi.transpose().matmul(&m.matmul(pi)))
        }
    }
}

/// `(f, v_i)` for a piecewise vector field over the velocity space
/// (`rt = false`) or the reconstruction target (`rt = true`).
pub fn vector_load(spaces: &Spaces, fs: &PointVecFn, fd: &PointVecFn, rt: bool, degree: usize) -> Result<Vec<f64>> {
    let rule = make_quadrature(Domain::Triangle, degree)?;
    let mesh = &spaces.mesh;
    let n = if rt { spaces.nrt() } else { spaces.nvel() };
    let parts: Vec<Vec<(usize, f64)>> = (0..mesh.num_triangles())
        .into_par_iter()
        .map(|t| {
            let (sp, off) = if rt { spaces.rt_space(t) } else { spaces.velocity_space(t) };
            let f = match mesh.triangles[t].subdomain {
                Subdomain::Stokes => fs,
                Subdomain::Darcy => fd,
            };
            let aff = Affine::new(mesh.triangle_points(t));
            let (dofs, signs) = sp.dof_map(t);
            let mut local = vec![0.0; dofs.len()];
            for (b, w) in rule.iter() {
                let basis = sp.eval_basis_affine(&aff, b);
                let v = f(aff.map(b));
                for k in 0..dofs.len() {
                    local[k] += w * aff.det * (v[0] * basis.values[k][0] + v[1] * basis.values[k][1]);
                }
            }
            dofs.iter().zip(signs).zip(local).map(|((&d, &s), l)| (d + off, s * l)).collect()
        })
        .collect();
    let mut out = vec![0.0; n];
    for p in parts {
        for (i, v) in p {
            out[i] += v;
        }
    }
    Ok(out)
}

/// Interface residual loads `-⟨j₂, v^s·n^s⟩_Γ + (α₁μ/√κ)⟨j₃, v^s·τ⟩_Γ`.
pub fn interface_residual_load(spaces: &Spaces, data: &ProblemData, r: &InterfaceResiduals) -> Result<Vec<f64>> {
    let mesh = &spaces.mesh;
    let sp = &spaces.stokes;
    let rule = edge_rule(data.load_degree.min(crate::quadrature::MAX_DEGREE));
    let tau = mesh.geometry.tangent();
    let mut out = vec![0.0; spaces.nvel()];
    for &e in spaces.trace.cells() {
        let edge = &mesh.edges[e];
        let t = edge.triangles[0].expect("interface edge has a Stokes triangle");
        let aff = Affine::new(mesh.triangle_points(t));
        let (dofs, _) = sp.dof_map(t);
        for (q, w) in rule.iter() {
            let b = edge_point_bary(mesh, t, e, q[1]);
            let x = aff.map(b);
            let c = data.bjs(x, tau)?;
            let (j2, j3) = ((r.j2)(x), (r.j3)(x));
            let basis = sp.eval_basis_affine(&aff, b);
            for k in 0..dofs.len() {
                let v = basis.values[k];
                let vn = v[0] * edge.normal[0] + v[1] * edge.normal[1];
                let vt = v[0] * tau[0] + v[1] * tau[1];
                out[dofs[k]] += w * edge.length * (-j2 * vn + c * j3 * vt);
            }
        }
    }
    Ok(out)
}

/// Momentum right-hand side of the state or adjoint equation (before the
/// adjoint sign flip of the monolithic system).
///
/// State: `(f, v)`; adjoint: `-α^{-1/2}(u*, v)`. In reconstructed mode the
/// volume term tests against `Πv`. Interface residual loads are always plain.
pub fn assemble_rhs(spaces: &Spaces, data: &ProblemData, which: Which, mode: TestMode, recon: Option<&Reconstruction>) -> Result<Vec<f64>> {
    let (fs, fd, scale) = match which {
        Which::State => (&data.f_s, &data.f_d, 1.0),
        Which::Adjoint => (&data.target_s, &data.target_d, -data.coupling()),
    };
    let mut rhs = match mode {
        TestMode::Plain => vector_load(spaces, fs, fd, false, data.load_degree)?,
        TestMode::Reconstructed => {
            let pi = &recon.ok_or_else(|| Error::Argument("reconstructed load needs the reconstruction operator".into()))?.pi;
            pi.matvec_t(&vector_load(spaces, fs, fd, true, data.load_degree)?)
        }
    };
    for v in rhs.iter_mut() {
        *v *= scale;
    }
    let iface = interface_residual_load(spaces, data, &data.block(which).interface)?;
    for (a, b) in rhs.iter_mut().zip(iface) {
        *a += b;
    }
    Ok(rhs)
}

/// `-(g, q_i)` over pressure dofs, matching `b(u, q) = -(∇·u, q)`.
pub fn divergence_load(spaces: &Spaces, g_s: &PointFn, g_d: &PointFn, degree: usize) -> Result<Vec<f64>> {
    let rule = make_quadrature(Domain::Triangle, degree)?;
    let mesh = &spaces.mesh;
    let mut out = vec![0.0; spaces.npres()];
    for t in 0..mesh.num_triangles() {
        let g = match mesh.triangles[t].subdomain {
            Subdomain::Stokes => g_s,
            Subdomain::Darcy => g_d,
        };
        let aff = Affine::new(mesh.triangle_points(t));
        let (dofs, _) = spaces.pressure.dof_map(t);
        for (b, w) in rule.iter() {
            let v = g(aff.map(b));
            for i in 0..3 {
                out[dofs[i]] -= w * aff.det * v * b[i];
            }
        }
    }
    Ok(out)
}

/// `⟨j₀, λ_i⟩_Γ` over trace dofs.
pub fn interface_jump_load(spaces: &Spaces, j0: &PointFn, degree: usize) -> Result<Vec<f64>> {
    let rule = make_quadrature(Domain::Edge, degree)?;
    let mesh = &spaces.mesh;
    let mut out = vec![0.0; spaces.ntrace()];
    for &e in spaces.trace.cells() {
        let edge = &mesh.edges[e];
        let [a, b] = edge.vertices.map(|v| mesh.vertices[v]);
        let (dofs, _) = spaces.trace.dof_map(e);
        for (q, w) in rule.iter() {
            let s = q[1];
            let x = [a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])];
            let v = j0(x);
            let lam = spaces.trace.eval_trace(s);
            for i in 0..2 {
                out[dofs[i]] += w * edge.length * v * lam[i];
            }
        }
    }
    Ok(out)
}

/// `∫_Ω q_i` over pressure dofs.
pub fn pressure_mean_vector(spaces: &Spaces) -> Vec<f64> {
    let mesh = &spaces.mesh;
    let mut out = vec![0.0; spaces.npres()];
    for t in 0..mesh.num_triangles() {
        let (dofs, _) = spaces.pressure.dof_map(t);
        for &d in dofs {
            out[d] = mesh.area(t) / 3.0;
        }
    }
    out
}

/// Essential velocity dofs with their prescribed values, interpolated from
/// the boundary data of the given block.
pub fn essential_values(spaces: &Spaces, data: &ProblemData, which: Which) -> Vec<(usize, f64)> {
    let block = data.block(which);
    let v = spaces.interpolate_velocity(&*block.boundary_s, &*block.boundary_d);
    spaces.essential_velocity_dofs().into_iter().map(|d| (d, v[d])).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_two_domain_mesh, Rect};
    use crate::sparse::dot;
    use crate::spaces::{FeFunction, FieldKind};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn spaces(n0: usize) -> Spaces {
        let mesh = build_two_domain_mesh(Rect::new(0.0, 1.0, 1.0, 2.0), Rect::new(0.0, 1.0, 0.0, 1.0), n0).unwrap();
        Spaces::new(Arc::new(mesh))
    }

    fn data(mu: f64) -> ProblemData {
        ProblemData::zero(mu, 0.5, 1.0, Permeability::constant([[1.0, 0.25], [0.25, 0.5]]).unwrap()).unwrap()
    }

    #[test]
    fn a_is_symmetric_psd_and_linear_in_mu() {
        let s = spaces(2);
        let a1 = assemble_a(&s, &data(1.0)).unwrap();
        let a2 = assemble_a(&s, &data(2.0)).unwrap();
        assert!(a1.asymmetry() < 1e-12 * a1.max_abs());
        assert!(a2.add(1.0, &a1, -2.0).max_abs() < 1e-12 * a2.max_abs());
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..20 {
            let v: Vec<f64> = (0..s.nvel()).map(|_| rng.random_range(-1.0..1.0)).collect();
            assert!(dot(&v, &a1.matvec(&v)) >= -1e-12 * dot(&v, &v));
        }
    }

    #[test]
    fn rigid_translation_has_no_viscous_energy() {
        let s = spaces(2);
        let a = assemble_stokes_viscous(&s, 1.0).unwrap();
        let v = s.stokes.interpolate_vector(&|_| [1.0, -2.0]);
        assert!(a.matvec(&v).iter().all(|x| x.abs() < 1e-12));
        // rotation is rigid as well
        let v = s.stokes.interpolate_vector(&|x| [-x[1], x[0]]);
        assert!(a.matvec(&v).iter().all(|x| x.abs() < 1e-12));
    }

    #[test]
    fn non_spd_permeability_is_rejected() {
        assert!(Permeability::constant([[1.0, 2.0], [2.0, 1.0]]).is_err());
        assert!(Permeability::constant([[1.0, 0.5], [0.0, 1.0]]).is_err());
        let s = spaces(1);
        let mut d = data(1.0);
        d.permeability = Permeability { k: Arc::new(|x| [[x[0] - 0.5, 0.0], [0.0, 1.0]]), lower: 0.1, upper: 1.0 };
        assert!(matches!(assemble_a(&s, &d), Err(Error::Data(_))));
    }

    #[test]
    fn divergence_of_rt_interpolant() {
        let s = spaces(2);
        let b = assemble_b(&s);
        let mut v = vec![0.0; s.nvel()];
        let rt = s.darcy.interpolate_vector(&|x| [x[0], x[1]]);
        v[s.darcy_offset()..].copy_from_slice(&rt);
        let bv = b.matvec(&v);
        let t = s.darcy.cells()[3];
        let q = s.pressure.dof_map(t).0;
        let sum: f64 = q.iter().map(|&i| bv[i]).sum();
        // q ≡ 1 on one triangle is the sum of its three nodal functions
        assert!((sum + 2.0 * s.mesh.area(t)).abs() < 1e-14);
    }

    #[test]
    fn divergence_is_local() {
        let s = spaces(2);
        let b = assemble_b(&s);
        let t0 = s.darcy.cells()[0];
        let interior = s.darcy.dof_map(t0).0[6] + s.darcy_offset();
        for t in 0..s.mesh.num_triangles() {
            if t == t0 {
                continue;
            }
            for &q in s.pressure.dof_map(t).0 {
                assert_eq!(b.get(q, interior), 0.0);
            }
        }
    }

    #[test]
    fn constraint_rows() {
        let s = spaces(2);
        let c = assemble_interface_constraint(&s);
        // unit Darcy dof on a Γ edge: the row holds the P1 moments of the
        // normal trace, here (-1, 0) since n^d = -n^s and the dof is a moment
        let e = s.trace.cells()[0];
        let len = s.mesh.edges[e].length;
        let [d0, _] = s.darcy.edge_dofs(e).unwrap();
        let mut v = vec![0.0; s.nvel()];
        v[s.darcy_offset() + d0] = 1.0;
        let cv = c.matvec(&v);
        let l = s.trace.dof_map(e).0;
        assert!((cv[l[0]] + 1.0).abs() < 1e-13 && cv[l[1]].abs() < 1e-13);
        // 1-D oracle: nodal values of the normal trace times the P1 trace mass
        let t = s.mesh.edges[e].triangles[1].unwrap();
        let nd = [0.0, 1.0];
        let fd = FeFunction::new(&s, FieldKind::Velocity, v.clone()).unwrap();
        let [a, b] = s.mesh.edges[e].vertices.map(|i| s.mesh.vertices[i]);
        let trace = |p: Point| {
            let aff = Affine::new(s.mesh.triangle_points(t));
            let u = fd.eval_in(t, aff.bary(p));
            u[0] * nd[0] + u[1] * nd[1]
        };
        let (ta, tb) = (trace(a), trace(b));
        assert!((len * (ta / 3.0 + tb / 6.0) - cv[l[0]]).abs() < 1e-12);
        assert!((len * (ta / 6.0 + tb / 3.0) - cv[l[1]]).abs() < 1e-12);

        // tangential Stokes field: zero
        let mut v = s.interpolate_velocity(&|x| [x[1] * x[1], 0.0], &|_| [0.0; 2]);
        assert!(c.matvec(&v).iter().all(|x| x.abs() < 1e-14));
        // matching normal traces: zero jump
        v = s.interpolate_velocity(&|_| [0.3, -1.0], &|_| [0.7, -1.0]);
        assert!(c.matvec(&v).iter().all(|x| x.abs() < 1e-14));
    }

    #[test]
    fn mass_of_constant_field_is_area() {
        let s = spaces(2);
        let m = assemble_plain_mass(&s);
        assert!(m.asymmetry() < 1e-14);
        let v = s.interpolate_velocity(&|_| [1.0, 0.0], &|_| [1.0, 0.0]);
        assert!((dot(&v, &m.matvec(&v)) - 2.0).abs() < 1e-12);
        let r = s.interpolate_rt(&|_| [0.0, 1.0], &|_| [0.0, 1.0]);
        assert!((dot(&r, &assemble_rt_mass(&s).matvec(&r)) - 2.0).abs() < 1e-12);
        assert!(assemble_velocity_mass(&s, TestMode::Reconstructed, None).is_err());
    }

    #[test]
    fn darcy_friction_matches_high_degree_oracle() {
        // single triangle of the coarsest mesh, K = I, μ = 1: RT mass
        let s = spaces(1);
        let mut d = data(1.0);
        d.permeability = Permeability::constant([[1.0, 0.0], [0.0, 1.0]]).unwrap();
        let a = assemble_darcy_friction(&s, &d).unwrap();
        let t = s.darcy.cells()[0];
        let aff = Affine::new(s.mesh.triangle_points(t));
        let (dofs, signs) = s.darcy.dof_map(t);
        let rule = tri_rule(14);
        for i in 0..8 {
            for j in 0..8 {
                let mut exact = 0.0;
                for (b, w) in rule.iter() {
                    let (v, _) = crate::element::rt_physical(&aff, b);
                    exact += w * aff.det * (v[i][0] * v[j][0] + v[i][1] * v[j][1]);
                }
                exact *= signs[i] * signs[j];
                // interior dofs are owned by a single triangle
                if i >= 6 && j >= 6 {
                    assert!((a.get(dofs[i], dofs[j]) - exact).abs() < 1e-13);
                }
            }
        }
        let m = weighted_mass(&s.darcy, &identity_weight).unwrap();
        assert!(a.add(1.0, &m, -1.0).max_abs() < 1e-14);
    }

    #[test]
    fn quadrature_saturation() {
        let s = spaces(2);
        let a = assemble_stokes_viscous(&s, 1.0).unwrap();
        let m = assemble_plain_mass(&s);
        let b = assemble_b(&s);
        let rule8 = tri_rule(TRIANGLE_DEGREE + 2);
        // recompute one Stokes element matrix with the richer rule
        let t = s.stokes.cells()[1];
        let aff = Affine::new(s.mesh.triangle_points(t));
        let (dofs, _) = s.stokes.dof_map(t);
        let bub = dofs[6];
        let mut aa = 0.0;
        let mut mm = 0.0;
        for (q, w) in rule8.iter() {
            let basis = s.stokes.eval_basis_affine(&aff, q);
            let g = sym_grad(&basis.grads[6]);
            aa += 2.0 * w * aff.det * (g[0][0] * g[0][0] + 2.0 * g[0][1] * g[0][1] + g[1][1] * g[1][1]);
            mm += w * aff.det * basis.values[6][0] * basis.values[6][0];
        }
        assert!((a.get(bub, bub) - aa).abs() < 1e-12 * aa);
        assert!((m.get(bub, bub) - mm).abs() < 1e-12 * mm);
        let pd = s.pressure.dof_map(t).0[0];
        let mut bb = 0.0;
        for (q, w) in rule8.iter() {
            let basis = s.stokes.eval_basis_affine(&aff, q);
            bb -= w * aff.det * q[0] * basis.divs[6];
        }
        assert!((b.get(pd, bub) - bb).abs() < 1e-13);
    }

    #[test]
    fn zero_data_gives_zero_loads() {
        let s = spaces(1);
        let d = data(1.0);
        for which in [Which::State, Which::Adjoint] {
            let r = assemble_rhs(&s, &d, which, TestMode::Plain, None).unwrap();
            assert!(r.iter().all(|&x| x == 0.0));
        }
        assert!(assemble_rhs(&s, &d, Which::State, TestMode::Reconstructed, None).is_err());
    }
}
