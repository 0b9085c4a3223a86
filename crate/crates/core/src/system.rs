//! Monolithic optimality system and its direct solution.
//!
//! Unknowns `[u, z, p, r, λ_u, λ_z, m_p, m_r]`. With `s = α^{-1/2}` and `M`
//! the plain mass (classical) or `ΠᵀM_RTΠ` (robust):
//!
//! ```text
//! [ A    sM   Bᵀ   0    Cᵀ   0    0    0  ] u     F
//! [ sM  -A    0   -Bᵀ   0   -Cᵀ   0    0  ] z    -F_adj
//! [ B    0    0    0    0    0    m    0  ] p     G
//! [ 0   -B    0    0    0    0    0   -m  ] r    -G_z
//! [ C    0    0    0    0    0    0    0  ] λ_u   J0
//! [ 0   -C    0    0    0    0    0    0  ] λ_z  -J0_z
//! [ 0    0    mᵀ   0    0    0    0    0  ] m_p   0
//! [ 0    0    0   -mᵀ   0    0    0    0  ] m_r   0
//! ```

use std::io::Write;

use faer::prelude::*;
use faer::sparse::{SparseColMat, Triplet};
use faer::Col;

use crate::assembly::{self, ProblemData, TestMode, Which};
use crate::element::Affine;
use crate::error::{Error, Result};
use crate::mesh::Subdomain;
use crate::quadrature::{make_quadrature, Domain};
use crate::reconstruction::Reconstruction;
use crate::sparse::{norm, SparseOperator, Triplets};
use crate::spaces::{FeFunction, FieldKind, Spaces};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Classical,
    Robust,
}

impl Scheme {
    pub fn test_mode(self) -> TestMode {
        match self {
            Scheme::Classical => TestMode::Plain,
            Scheme::Robust => TestMode::Reconstructed,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Scheme::Classical => "classical",
            Scheme::Robust => "robust",
        }
    }
}

/// Offsets of the unknown blocks in the monolithic vector.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Layout {
    pub nvel: usize,
    pub npres: usize,
    pub ntrace: usize,
}

impl Layout {
    pub fn new(spaces: &Spaces) -> Self {
        Layout { nvel: spaces.nvel(), npres: spaces.npres(), ntrace: spaces.ntrace() }
    }
    pub fn u(&self) -> usize {
        0
    }
    pub fn z(&self) -> usize {
        self.nvel
    }
    pub fn p(&self) -> usize {
        2 * self.nvel
    }
    pub fn r(&self) -> usize {
        2 * self.nvel + self.npres
    }
    pub fn lu(&self) -> usize {
        2 * (self.nvel + self.npres)
    }
    pub fn lz(&self) -> usize {
        self.lu() + self.ntrace
    }
    pub fn mp(&self) -> usize {
        self.lz() + self.ntrace
    }
    pub fn mr(&self) -> usize {
        self.mp() + 1
    }
    pub fn len(&self) -> usize {
        self.mr() + 1
    }
    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn block_name(&self, i: usize) -> &'static str {
        match i {
            _ if i < self.z() => "u",
            _ if i < self.p() => "z",
            _ if i < self.r() => "p",
            _ if i < self.lu() => "r",
            _ if i < self.lz() => "lambda_u",
            _ if i < self.mp() => "lambda_z",
            _ if i == self.mp() => "mean_p",
            _ => "mean_r",
        }
    }
}

/// Individual operators and loads the monolithic matrix is made of.
#[derive(Clone, Debug)]
pub struct Blocks {
    pub a: SparseOperator,
    pub b: SparseOperator,
    pub c: SparseOperator,
    /// Velocity coupling mass of the scheme.
    pub mass: SparseOperator,
    pub mean: Vec<f64>,
    pub f: Vec<f64>,
    pub f_adj: Vec<f64>,
    pub g: Vec<f64>,
    pub g_z: Vec<f64>,
    pub j0: Vec<f64>,
    pub j0_z: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct BlockSystem {
    pub scheme: Scheme,
    pub spaces: Spaces,
    pub layout: Layout,
    pub alpha: f64,
    pub blocks: Blocks,
    pub matrix: SparseOperator,
    pub rhs: Vec<f64>,
    /// Eliminated unknowns with their prescribed values.
    pub essential: Vec<(usize, f64)>,
}

pub fn build_system(spaces: &Spaces, data: &ProblemData, scheme: Scheme, recon: Option<&Reconstruction>) -> Result<BlockSystem> {
    data.validate()?;
    if scheme == Scheme::Robust && recon.is_none() {
        return Err(Error::Argument("robust scheme needs the reconstruction operator".into()));
    }
    let mode = scheme.test_mode();
    let deg = data.load_degree;
    let blocks = Blocks {
        a: assembly::assemble_a(spaces, data)?,
        b: assembly::assemble_b(spaces),
        c: assembly::assemble_interface_constraint(spaces),
        mass: assembly::assemble_velocity_mass(spaces, mode, recon)?,
        mean: assembly::pressure_mean_vector(spaces),
        f: assembly::assemble_rhs(spaces, data, Which::State, mode, recon)?,
        f_adj: assembly::assemble_rhs(spaces, data, Which::Adjoint, mode, recon)?,
        g: assembly::divergence_load(spaces, &data.state.g_s, &data.state.g_d, deg)?,
        g_z: assembly::divergence_load(spaces, &data.adjoint.g_s, &data.adjoint.g_d, deg)?,
        j0: assembly::interface_jump_load(spaces, &data.state.interface.j0, deg)?,
        j0_z: assembly::interface_jump_load(spaces, &data.adjoint.interface.j0, deg)?,
    };
    let layout = Layout::new(spaces);
    let matrix = monolithic(&layout, &blocks, data.coupling());
    let mut rhs = vec![0.0; layout.len()];
    let put = |rhs: &mut Vec<f64>, off: usize, v: &[f64], s: f64| {
        for (i, x) in v.iter().enumerate() {
            rhs[off + i] = s * x;
        }
    };
    put(&mut rhs, layout.u(), &blocks.f, 1.0);
    put(&mut rhs, layout.z(), &blocks.f_adj, -1.0);
    put(&mut rhs, layout.p(), &blocks.g, 1.0);
    put(&mut rhs, layout.r(), &blocks.g_z, -1.0);
    put(&mut rhs, layout.lu(), &blocks.j0, 1.0);
    put(&mut rhs, layout.lz(), &blocks.j0_z, -1.0);
    let mut essential: Vec<(usize, f64)> = assembly::essential_values(spaces, data, Which::State);
    essential.extend(assembly::essential_values(spaces, data, Which::Adjoint).into_iter().map(|(i, v)| (layout.z() + i, v)));
    Ok(BlockSystem { scheme, spaces: spaces.clone(), layout, alpha: data.alpha, blocks, matrix, rhs, essential })
}

fn monolithic(l: &Layout, k: &Blocks, s: f64) -> SparseOperator {
    let n = l.len();
    let mut t = Triplets::new(n, n);
    let bt = k.b.transpose();
    let ct = k.c.transpose();
    t.push_block(l.u(), l.u(), &k.a, 1.0);
    t.push_block(l.u(), l.z(), &k.mass, s);
    t.push_block(l.u(), l.p(), &bt, 1.0);
    t.push_block(l.u(), l.lu(), &ct, 1.0);
    t.push_block(l.z(), l.u(), &k.mass, s);
    t.push_block(l.z(), l.z(), &k.a, -1.0);
    t.push_block(l.z(), l.r(), &bt, -1.0);
    t.push_block(l.z(), l.lz(), &ct, -1.0);
    t.push_block(l.p(), l.u(), &k.b, 1.0);
    t.push_block(l.r(), l.z(), &k.b, -1.0);
    t.push_block(l.lu(), l.u(), &k.c, 1.0);
    t.push_block(l.lz(), l.z(), &k.c, -1.0);
    for (i, &m) in k.mean.iter().enumerate() {
        t.push(l.p() + i, l.mp(), m);
        t.push(l.mp(), l.p() + i, m);
        t.push(l.r() + i, l.mr(), -m);
        t.push(l.mr(), l.r() + i, -m);
    }
    t.build()
}

/// Direct solver for a square system with some unknowns prescribed.
pub struct EliminatedSolver {
    n: usize,
    free: Vec<usize>,
    fixed: Vec<(usize, f64)>,
    k_ff: SparseOperator,
    k_fd: SparseOperator,
    lu: faer::sparse::linalg::solvers::Lu<usize, f64>,
}

impl EliminatedSolver {
    pub fn new(matrix: &SparseOperator, fixed: &[(usize, f64)], name: &dyn Fn(usize) -> &'static str) -> Result<Self> {
        let n = matrix.nrows;
        let mut is_fixed = vec![false; n];
        for &(i, _) in fixed {
            is_fixed[i] = true;
        }
        let free: Vec<usize> = (0..n).filter(|&i| !is_fixed[i]).collect();
        let fixed_idx: Vec<usize> = fixed.iter().map(|f| f.0).collect();
        let k_ff = matrix.submatrix(&free, &free);
        let k_fd = matrix.submatrix(&free, &fixed_idx);
        // an empty row or column is a certain rank deficiency; name its block
        let mut col_nnz = vec![0usize; k_ff.ncols];
        for (_, j, v) in k_ff.iter() {
            if v != 0.0 {
                col_nnz[j] += 1;
            }
        }
        if let Some(j) = col_nnz.iter().position(|&c| c == 0) {
            return Err(Error::Solver { block: name(free[j]).into(), detail: format!("unknown {} has an empty column", free[j]) });
        }
        let trip: Vec<Triplet<usize, usize, f64>> = k_ff.iter().map(|(i, j, v)| Triplet::new(i, j, v)).collect();
        let mat = SparseColMat::<usize, f64>::try_new_from_triplets(free.len(), free.len(), &trip)
            .map_err(|e| Error::Solver { block: "all".into(), detail: format!("{e:?}") })?;
        let lu = mat.sp_lu().map_err(|e| Error::Solver { block: "all".into(), detail: format!("factorization failed: {e:?}") })?;
        Ok(EliminatedSolver { n, free, fixed: fixed.to_vec(), k_ff, k_fd, lu })
    }

    /// Solves `K x = rhs` on the free unknowns with iterative refinement;
    /// returns the full vector and the relative residual on the free rows.
    pub fn solve(&self, rhs: &[f64]) -> (Vec<f64>, f64) {
        let xd: Vec<f64> = self.fixed.iter().map(|f| f.1).collect();
        let kd = self.k_fd.matvec(&xd);
        let bf: Vec<f64> = self.free.iter().zip(&kd).map(|(&i, k)| rhs[i] - k).collect();
        let bnorm = norm(&bf);
        let mut xf = vec![0.0; bf.len()];
        let mut res = bf.clone();
        let mut rel = f64::INFINITY;
        for _ in 0..4 {
            let col = Col::from_fn(res.len(), |i| res[i]);
            let dx = self.lu.solve(&col);
            for (i, x) in xf.iter_mut().enumerate() {
                *x += dx[i];
            }
            let kx = self.k_ff.matvec(&xf);
            res = bf.iter().zip(&kx).map(|(b, k)| b - k).collect();
            let new_rel = if bnorm > 0.0 { norm(&res) / bnorm } else { norm(&res) };
            let stalled = new_rel >= 0.5 * rel;
            rel = new_rel;
            if rel < 1e-14 || stalled || !rel.is_finite() {
                break;
            }
        }
        let mut x = vec![0.0; self.n];
        for (k, &i) in self.free.iter().enumerate() {
            x[i] = xf[k];
        }
        for &(i, v) in &self.fixed {
            x[i] = v;
        }
        (x, rel)
    }

    /// Row of the largest residual entry for a full-length vector.
    pub fn worst_row(&self, x: &[f64], rhs: &[f64]) -> usize {
        let xf: Vec<f64> = self.free.iter().map(|&i| x[i]).collect();
        let xd: Vec<f64> = self.fixed.iter().map(|f| f.1).collect();
        let kx = self.k_ff.matvec(&xf);
        let kd = self.k_fd.matvec(&xd);
        let mut best = (0, -1.0);
        for (k, &i) in self.free.iter().enumerate() {
            let r = (rhs[i] - kx[k] - kd[k]).abs();
            if !(r <= best.1) {
                best = (i, if r.is_nan() { f64::INFINITY } else { r });
            }
        }
        best.0
    }
}

pub const RESIDUAL_TOL: f64 = 1e-10;

#[derive(Clone, Debug)]
pub struct Solution {
    pub scheme: Scheme,
    pub alpha: f64,
    pub u: FeFunction,
    pub z: FeFunction,
    pub p: FeFunction,
    pub r: FeFunction,
    pub lambda_u: FeFunction,
    pub lambda_z: FeFunction,
    pub m_p: f64,
    pub m_r: f64,
    /// Relative residual of the eliminated system.
    pub residual: f64,
    pub x: Vec<f64>,
}

impl Solution {
    /// `η_h = -α^{-1/2} z_h` (classical) or `-α^{-1/2} Π z_h` (robust).
    pub fn control(&self, recon: Option<&Reconstruction>) -> Result<FeFunction> {
        let s = -1.0 / self.alpha.sqrt();
        let z = match self.scheme {
            Scheme::Classical => self.z.clone(),
            Scheme::Robust => recon.ok_or_else(|| Error::Argument("robust control needs the reconstruction".into()))?.apply_function(&self.z)?,
        };
        Ok(FeFunction { coeffs: z.coeffs.iter().map(|c| s * c).collect(), ..z })
    }

    /// Legacy VTK dump with point-sampled velocity and pressure per triangle
    /// vertex (vertices are duplicated so both subdomains keep their traces).
    pub fn write_vtk<W: Write>(&self, mut out: W) -> Result<()> {
        let mesh = &self.u.spaces.mesh;
        let nt = mesh.num_triangles();
        writeln!(out, "# vtk DataFile Version 3.0\noptimality system solution\nASCII\nDATASET UNSTRUCTURED_GRID")?;
        writeln!(out, "POINTS {} double", 3 * nt)?;
        for t in 0..nt {
            for p in mesh.triangle_points(t) {
                writeln!(out, "{} {} 0", p[0], p[1])?;
            }
        }
        writeln!(out, "CELLS {} {}", nt, 4 * nt)?;
        for t in 0..nt {
            writeln!(out, "3 {} {} {}", 3 * t, 3 * t + 1, 3 * t + 2)?;
        }
        writeln!(out, "CELL_TYPES {nt}")?;
        for _ in 0..nt {
            writeln!(out, "5")?;
        }
        writeln!(out, "CELL_DATA {nt}\nSCALARS subdomain int 1\nLOOKUP_TABLE default")?;
        for t in &mesh.triangles {
            writeln!(out, "{}", if t.subdomain == Subdomain::Stokes { 0 } else { 1 })?;
        }
        writeln!(out, "POINT_DATA {}", 3 * nt)?;
        let corners = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
        for (name, f) in [("u", &self.u), ("z", &self.z)] {
            writeln!(out, "VECTORS {name} double")?;
            for t in 0..nt {
                for b in corners {
                    let v = f.eval_in(t, b);
                    writeln!(out, "{} {} 0", v[0], v[1])?;
                }
            }
        }
        for (name, f) in [("p", &self.p), ("r", &self.r)] {
            writeln!(out, "SCALARS {name} double 1\nLOOKUP_TABLE default")?;
            for t in 0..nt {
                for b in corners {
                    writeln!(out, "{}", f.eval_in(t, b)[0])?;
                }
            }
        }
        Ok(())
    }
}

fn split(spaces: &Spaces, x: &[f64], kind: FieldKind, off: usize, len: usize) -> FeFunction {
    FeFunction::new(spaces, kind, x[off..off + len].to_vec()).expect("block length matches layout")
}

pub fn solve(system: &BlockSystem) -> Result<Solution> {
    let l = system.layout;
    let solver = EliminatedSolver::new(&system.matrix, &system.essential, &|i| l.block_name(i))?;
    let (x, residual) = solver.solve(&system.rhs);
    if !(residual < RESIDUAL_TOL) {
        let row = solver.worst_row(&x, &system.rhs);
        return Err(Error::Solver {
            block: l.block_name(row).into(),
            detail: format!("relative residual {residual:e}; largest residual in row {row}"),
        });
    }
    let s = &system.spaces;
    Ok(Solution {
        scheme: system.scheme,
        alpha: system.alpha,
        u: split(s, &x, FieldKind::Velocity, l.u(), l.nvel),
        z: split(s, &x, FieldKind::Velocity, l.z(), l.nvel),
        p: split(s, &x, FieldKind::Pressure, l.p(), l.npres),
        r: split(s, &x, FieldKind::Pressure, l.r(), l.npres),
        lambda_u: split(s, &x, FieldKind::Trace, l.lu(), l.ntrace),
        lambda_z: split(s, &x, FieldKind::Trace, l.lz(), l.ntrace),
        m_p: x[l.mp()],
        m_r: x[l.mr()],
        residual,
        x,
    })
}

/// `½‖w - u*‖²` for a velocity or reconstructed function, with the load
/// quadrature so that it is consistent with the assembled target loads.
fn target_misfit(w: &FeFunction, data: &ProblemData) -> Result<f64> {
    let mesh = &w.spaces.mesh;
    let rule = make_quadrature(Domain::Triangle, data.load_degree)?;
    let mut s = 0.0;
    for t in 0..mesh.num_triangles() {
        let aff = Affine::new(mesh.triangle_points(t));
        let target = match mesh.triangles[t].subdomain {
            Subdomain::Stokes => &data.target_s,
            Subdomain::Darcy => &data.target_d,
        };
        for (b, wq) in rule.iter() {
            let v = w.eval_in(t, b);
            let e = target(aff.map(b));
            s += wq * aff.det * ((v[0] - e[0]).powi(2) + (v[1] - e[1]).powi(2));
        }
    }
    Ok(0.5 * s)
}

fn l2_squared(w: &FeFunction) -> f64 {
    let mesh = &w.spaces.mesh;
    let rule = make_quadrature(Domain::Triangle, 6).expect("degree 6");
    let mut s = 0.0;
    for t in 0..mesh.num_triangles() {
        let aff = Affine::new(mesh.triangle_points(t));
        for (b, wq) in rule.iter() {
            let v = w.eval_in(t, b);
            s += wq * aff.det * (v[0] * v[0] + v[1] * v[1]);
        }
    }
    s
}

/// Cost `½‖u_h - u*‖² + (α/2)‖η_h‖²` of the scheme (`Π u_h` and `Π z_h`
/// for the robust scheme), with `η_h` recovered from the adjoint.
pub fn evaluate_cost(sol: &Solution, data: &ProblemData, recon: Option<&Reconstruction>) -> Result<f64> {
    let eta = sol.control(recon)?;
    let u = match sol.scheme {
        Scheme::Classical => sol.u.clone(),
        Scheme::Robust => recon.ok_or_else(|| Error::Argument("robust cost needs the reconstruction".into()))?.apply_function(&sol.u)?,
    };
    Ok(target_misfit(&u, data)? + 0.5 * data.alpha * l2_squared(&eta))
}

/// State equation alone with an explicit control, used to evaluate the
/// reduced cost `η ↦ J(u(η), η)`.
pub struct StateSolver {
    scheme: Scheme,
    spaces: Spaces,
    recon: Option<Reconstruction>,
    data: ProblemData,
    solver: EliminatedSolver,
    rhs: Vec<f64>,
    nvel: usize,
    /// Mass matrix of the control space.
    pub control_mass: SparseOperator,
    /// Maps control coefficients to momentum loads.
    control_load: SparseOperator,
}

impl StateSolver {
    pub fn new(spaces: &Spaces, data: &ProblemData, scheme: Scheme, recon: Option<&Reconstruction>) -> Result<Self> {
        let sys = build_system(spaces, data, scheme, recon)?;
        let (nv, np, nt) = (spaces.nvel(), spaces.npres(), spaces.ntrace());
        let n = nv + np + nt + 1;
        let k = &sys.blocks;
        let mut t = Triplets::new(n, n);
        t.push_block(0, 0, &k.a, 1.0);
        t.push_block(0, nv, &k.b.transpose(), 1.0);
        t.push_block(0, nv + np, &k.c.transpose(), 1.0);
        t.push_block(nv, 0, &k.b, 1.0);
        t.push_block(nv + np, 0, &k.c, 1.0);
        for (i, &m) in k.mean.iter().enumerate() {
            t.push(nv + i, n - 1, m);
            t.push(n - 1, nv + i, m);
        }
        let matrix = t.build();
        let fixed = assembly::essential_values(spaces, data, Which::State);
        let name = move |i: usize| match i {
            _ if i < nv => "u",
            _ if i < nv + np => "p",
            _ if i < nv + np + nt => "lambda_u",
            _ => "mean_p",
        };
        let solver = EliminatedSolver::new(&matrix, &fixed, &name)?;
        let mut rhs = k.f.clone();
        rhs.extend(&k.g);
        rhs.extend(&k.j0);
        rhs.push(0.0);
        let (control_mass, control_load) = match scheme {
            Scheme::Classical => {
                let m = assembly::assemble_plain_mass(spaces);
                (m.clone(), m)
            }
            Scheme::Robust => {
                let m = assembly::assemble_rt_mass(spaces);
                let pi = &recon.expect("checked by build_system").pi;
                (m.clone(), pi.transpose().matmul(&m))
            }
        };
        Ok(StateSolver {
            scheme,
            spaces: spaces.clone(),
            recon: recon.cloned(),
            data: data.clone(),
            solver,
            rhs,
            nvel: nv,
            control_mass,
            control_load,
        })
    }

    /// Dimension of the control space (velocity or reconstruction target).
    pub fn control_len(&self) -> usize {
        self.control_mass.nrows
    }

    /// State velocity for the control with coefficients `eta`.
    pub fn state(&self, eta: &[f64]) -> Result<FeFunction> {
        let load = self.control_load.matvec(eta);
        let mut rhs = self.rhs.clone();
        for (r, l) in rhs.iter_mut().zip(load) {
            *r += l;
        }
        let (x, res) = self.solver.solve(&rhs);
        if !(res < RESIDUAL_TOL) {
            return Err(Error::Solver { block: "state".into(), detail: format!("relative residual {res:e}") });
        }
        FeFunction::new(&self.spaces, FieldKind::Velocity, x[..self.nvel].to_vec())
    }

    /// Reduced cost `J(u(η), η)`.
    pub fn reduced_cost(&self, eta: &[f64]) -> Result<f64> {
        let u = self.state(eta)?;
        let u = match self.scheme {
            Scheme::Classical => u,
            Scheme::Robust => self.recon.as_ref().expect("robust").apply_function(&u)?,
        };
        let m_eta = self.control_mass.matvec(eta);
        let reg: f64 = eta.iter().zip(&m_eta).map(|(a, b)| a * b).sum();
        Ok(target_misfit(&u, &self.data)? + 0.5 * self.data.alpha * reg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::Permeability;
    use crate::fields::vector_fn;
    use crate::mesh::{build_two_domain_mesh, Rect};
    use crate::reconstruction::build_reconstruction;
    use std::sync::Arc;

    fn setup() -> (Spaces, ProblemData, Reconstruction) {
        let mesh = build_two_domain_mesh(Rect::new(0.0, 1.0, 1.0, 2.0), Rect::new(0.0, 1.0, 0.0, 1.0), 2).unwrap();
        let s = Spaces::new(Arc::new(mesh));
        let d = ProblemData::zero(1.0, 0.1, 1.0, Permeability::constant([[1.0, 0.25], [0.25, 0.5]]).unwrap()).unwrap();
        let r = build_reconstruction(&s);
        (s, d, r)
    }

    #[test]
    fn zero_data_zero_solution_and_symmetry() {
        let (s, d, r) = setup();
        for scheme in [Scheme::Classical, Scheme::Robust] {
            let sys = build_system(&s, &d, scheme, Some(&r)).unwrap();
            assert!(sys.matrix.asymmetry() < 1e-12);
            let sol = solve(&sys).unwrap();
            assert!(sol.x.iter().all(|&v| v == 0.0));
            assert_eq!(evaluate_cost(&sol, &d, Some(&r)).unwrap(), 0.0);
        }
        assert!(build_system(&s, &d, Scheme::Robust, None).is_err());
    }

    #[test]
    fn schemes_differ_only_in_coupling_and_loads() {
        let (s, mut d, r) = setup();
        d.f_s = vector_fn(|x| [x[1].sin(), x[0]]);
        d.target_d = vector_fn(|x| [1.0, x[0] * x[1]]);
        let c = build_system(&s, &d, Scheme::Classical, Some(&r)).unwrap();
        let rb = build_system(&s, &d, Scheme::Robust, Some(&r)).unwrap();
        let diff = c.matrix.add(1.0, &rb.matrix, -1.0);
        let l = c.layout;
        for (i, j, v) in diff.iter() {
            if v.abs() > 1e-14 {
                let uz = (i < l.z() && (l.z()..l.p()).contains(&j)) || ((l.z()..l.p()).contains(&i) && j < l.z());
                assert!(uz, "difference outside the coupling blocks at ({i}, {j})");
            }
        }
        assert!(c.rhs[l.p()..].iter().zip(&rb.rhs[l.p()..]).all(|(a, b)| a == b));
        assert!(c.rhs[..l.p()] != rb.rhs[..l.p()]);
    }

    #[test]
    fn linearity_in_the_data() {
        let (s, mut d, _) = setup();
        d.f_s = vector_fn(|x| [x[1], x[0] * x[0]]);
        d.target_s = vector_fn(|x| [x[0], 1.0]);
        let sys = build_system(&s, &d, Scheme::Classical, None).unwrap();
        let sol = solve(&sys).unwrap();
        let mut sys10 = sys.clone();
        sys10.rhs.iter_mut().for_each(|v| *v *= 10.0);
        let sol10 = solve(&sys10).unwrap();
        for (a, b) in sol.x.iter().zip(&sol10.x) {
            assert!((10.0 * a - b).abs() < 1e-9 * (1.0 + b.abs()));
        }
        assert!(sol.residual < RESIDUAL_TOL);
    }

    #[test]
    fn vtk_dump_has_all_sections() {
        let (s, mut d, _) = setup();
        d.f_d = vector_fn(|_| [0.0, 1.0]);
        let sol = solve(&build_system(&s, &d, Scheme::Classical, None).unwrap()).unwrap();
        let mut buf = Vec::new();
        sol.write_vtk(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        for key in ["POINTS", "CELLS", "VECTORS u", "VECTORS z", "SCALARS p", "SCALARS r"] {
            assert!(text.contains(key));
        }
    }
}
