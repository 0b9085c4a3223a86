//! Discrete spaces, global dof maps and finite element functions.

use std::sync::Arc;

use crate::element::{self, Affine, P2B_LOCAL, RT1_LOCAL};
use crate::error::{Error, Result};
use crate::fields::Jac;
use crate::mesh::{EdgeTag, Mesh, Point, Subdomain};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SpaceKind {
    /// `[P2 ⊕ cubic bubble]²` on the Stokes triangles.
    StokesVelocity,
    /// Discontinuous P1 on every triangle.
    Pressure,
    /// RT1 on the Darcy triangles.
    DarcyVelocity,
    /// Discontinuous P1 on the interface edges.
    InterfaceTrace,
    /// RT1 on the Stokes triangles; target of the reconstruction.
    StokesRt,
}

impl SpaceKind {
    fn stride(self) -> usize {
        match self {
            SpaceKind::StokesVelocity => 2 * P2B_LOCAL,
            SpaceKind::Pressure => 3,
            SpaceKind::DarcyVelocity | SpaceKind::StokesRt => RT1_LOCAL,
            SpaceKind::InterfaceTrace => 2,
        }
    }

    pub fn is_rt(self) -> bool {
        matches!(self, SpaceKind::DarcyVelocity | SpaceKind::StokesRt)
    }
}

/// Shape function values on one triangle. Scalar spaces store the value in
/// component 0 and the gradient in row 0.
#[derive(Clone, Debug, Default)]
pub struct LocalBasis {
    pub values: Vec<[f64; 2]>,
    /// `grads[k][i][j] = ∂φ_k,i / ∂x_j`; empty for RT spaces.
    pub grads: Vec<Jac>,
    pub divs: Vec<f64>,
}

#[derive(Debug)]
pub struct Space {
    pub kind: SpaceKind,
    pub mesh: Arc<Mesh>,
    ndofs: usize,
    /// Mesh triangles (or interface edges for the trace space) carrying dofs.
    cells: Vec<usize>,
    cell_index: Vec<usize>,
    dofs: Vec<usize>,
    signs: Vec<f64>,
    essential: Vec<bool>,
    /// RT spaces: first global dof of each mesh edge.
    edge_base: Vec<usize>,
}

const NONE: usize = usize::MAX;

impl Space {
    pub fn new(kind: SpaceKind, mesh: Arc<Mesh>) -> Space {
        let stride = kind.stride();
        let sub = match kind {
            SpaceKind::StokesVelocity | SpaceKind::StokesRt => Some(Subdomain::Stokes),
            SpaceKind::DarcyVelocity => Some(Subdomain::Darcy),
            _ => None,
        };
        let cells: Vec<usize> = match kind {
            SpaceKind::InterfaceTrace => mesh.interface_edges().iter().map(|e| e.edge).collect(),
            _ => (0..mesh.num_triangles()).filter(|&t| sub.is_none_or(|s| mesh.triangles[t].subdomain == s)).collect(),
        };
        let entity_count = if kind == SpaceKind::InterfaceTrace { mesh.num_edges() } else { mesh.num_triangles() };
        let mut cell_index = vec![NONE; entity_count];
        for (i, &c) in cells.iter().enumerate() {
            cell_index[c] = i;
        }
        let mut dofs = vec![0; cells.len() * stride];
        let mut signs = vec![1.0; cells.len() * stride];
        let mut edge_base = Vec::new();
        let ndofs;
        let mut essential;
        match kind {
            SpaceKind::Pressure | SpaceKind::InterfaceTrace => {
                for (i, d) in dofs.iter_mut().enumerate() {
                    *d = i;
                }
                ndofs = dofs.len();
                essential = vec![false; ndofs];
            }
            SpaceKind::StokesVelocity => {
                let mut vnum = vec![NONE; mesh.num_vertices()];
                let mut enum_ = vec![NONE; mesh.num_edges()];
                let mut n = 0;
                for &t in &cells {
                    for &v in &mesh.triangles[t].vertices {
                        if vnum[v] == NONE {
                            vnum[v] = n;
                            n += 1;
                        }
                    }
                }
                for &t in &cells {
                    for &e in &mesh.triangles[t].edges {
                        if enum_[e] == NONE {
                            enum_[e] = n;
                            n += 1;
                        }
                    }
                }
                let bubble0 = n;
                let nscalar = n + cells.len();
                let mut scalar_essential = vec![false; nscalar];
                for e in 0..mesh.num_edges() {
                    if mesh.edges[e].tag == EdgeTag::StokesBoundary {
                        scalar_essential[enum_[e]] = true;
                        for &v in &mesh.edges[e].vertices {
                            scalar_essential[vnum[v]] = true;
                        }
                    }
                }
                for (ci, &t) in cells.iter().enumerate() {
                    let tri = &mesh.triangles[t];
                    let mut local = [0; P2B_LOCAL];
                    for i in 0..3 {
                        local[i] = vnum[tri.vertices[i]];
                        local[3 + i] = enum_[tri.edges[i]];
                    }
                    local[6] = bubble0 + ci;
                    for c in 0..2 {
                        for s in 0..P2B_LOCAL {
                            dofs[ci * stride + c * P2B_LOCAL + s] = c * nscalar + local[s];
                        }
                    }
                }
                ndofs = 2 * nscalar;
                essential = scalar_essential.clone();
                essential.extend_from_slice(&scalar_essential);
            }
            SpaceKind::DarcyVelocity | SpaceKind::StokesRt => {
                edge_base = vec![NONE; mesh.num_edges()];
                let mut n = 0;
                for &t in &cells {
                    for &e in &mesh.triangles[t].edges {
                        if edge_base[e] == NONE {
                            edge_base[e] = n;
                            n += 2;
                        }
                    }
                }
                let interior0 = n;
                ndofs = n + 2 * cells.len();
                essential = vec![false; ndofs];
                if kind == SpaceKind::DarcyVelocity {
                    for (e, edge) in mesh.edges.iter().enumerate() {
                        if edge.tag == EdgeTag::DarcyBoundary {
                            essential[edge_base[e]] = true;
                            essential[edge_base[e] + 1] = true;
                        }
                    }
                }
                for (ci, &t) in cells.iter().enumerate() {
                    let tri = &mesh.triangles[t];
                    for i in 0..3 {
                        let e = tri.edges[i];
                        for j in 0..2 {
                            let lv = tri.vertices[(i + 1 + j) % 3];
                            let slot = if lv == mesh.edges[e].vertices[0] { 0 } else { 1 };
                            dofs[ci * stride + 2 * i + j] = edge_base[e] + slot;
                            signs[ci * stride + 2 * i + j] = tri.edge_signs[i];
                        }
                    }
                    dofs[ci * stride + 6] = interior0 + 2 * ci;
                    dofs[ci * stride + 7] = interior0 + 2 * ci + 1;
                }
            }
        }
        Space { kind, mesh, ndofs, cells, cell_index, dofs, signs, essential, edge_base }
    }

    pub fn ndofs(&self) -> usize {
        self.ndofs
    }

    pub fn local_dofs(&self) -> usize {
        self.kind.stride()
    }

    /// Mesh triangles carrying this space (mesh edges for the trace space).
    pub fn cells(&self) -> &[usize] {
        &self.cells
    }

    pub fn contains_cell(&self, cell: usize) -> bool {
        self.cell_index.get(cell).is_some_and(|&i| i != NONE)
    }

    /// Global dofs and orientation signs of one cell. Global basis function
    /// restricted to the cell equals `sign * local basis function`.
    pub fn dof_map(&self, cell: usize) -> (&[usize], &[f64]) {
        let i = self.cell_index[cell];
        assert!(i != NONE, "cell {cell} not in {:?} space", self.kind);
        let s = self.kind.stride();
        (&self.dofs[i * s..(i + 1) * s], &self.signs[i * s..(i + 1) * s])
    }

    pub fn is_essential(&self, dof: usize) -> bool {
        self.essential[dof]
    }

    pub fn essential_dofs(&self) -> Vec<usize> {
        (0..self.ndofs).filter(|&d| self.essential[d]).collect()
    }

    /// First of the two global dofs on a mesh edge (RT spaces only).
    pub fn edge_dofs(&self, edge: usize) -> Option<[usize; 2]> {
        self.edge_base.get(edge).filter(|&&b| b != NONE).map(|&b| [b, b + 1])
    }

    /// Number of scalar dofs per component of the Stokes velocity.
    pub fn scalar_dofs(&self) -> usize {
        debug_assert_eq!(self.kind, SpaceKind::StokesVelocity);
        self.ndofs / 2
    }

    /// Local shape functions on triangle `t` at barycentric point `b`.
    pub fn eval_basis(&self, t: usize, b: [f64; 3]) -> LocalBasis {
        let aff = Affine::new(self.mesh.triangle_points(t));
        self.eval_basis_affine(&aff, b)
    }

    pub fn eval_basis_affine(&self, aff: &Affine, b: [f64; 3]) -> LocalBasis {
        match self.kind {
            SpaceKind::StokesVelocity => {
                let v = element::p2b_values(b);
                let g = element::p2b_grads(b, &aff.grad_bary);
                let mut out = LocalBasis {
                    values: Vec::with_capacity(2 * P2B_LOCAL),
                    grads: Vec::with_capacity(2 * P2B_LOCAL),
                    divs: Vec::with_capacity(2 * P2B_LOCAL),
                };
                for c in 0..2 {
                    for s in 0..P2B_LOCAL {
                        let mut val = [0.0; 2];
                        val[c] = v[s];
                        let mut jac = [[0.0; 2]; 2];
                        jac[c] = g[s];
                        out.values.push(val);
                        out.grads.push(jac);
                        out.divs.push(g[s][c]);
                    }
                }
                out
            }
            SpaceKind::Pressure => LocalBasis {
                values: b.iter().map(|&l| [l, 0.0]).collect(),
                grads: aff.grad_bary.iter().map(|&g| [g, [0.0; 2]]).collect(),
                divs: vec![0.0; 3],
            },
            SpaceKind::DarcyVelocity | SpaceKind::StokesRt => {
                let (v, d) = element::rt_physical(aff, b);
                LocalBasis { values: v.to_vec(), grads: Vec::new(), divs: d.to_vec() }
            }
            SpaceKind::InterfaceTrace => panic!("trace space is evaluated with eval_trace"),
        }
    }

    /// Trace basis on interface edge `edge` at parameter `t` measured from
    /// the lower-numbered endpoint.
    pub fn eval_trace(&self, t: f64) -> [f64; 2] {
        debug_assert_eq!(self.kind, SpaceKind::InterfaceTrace);
        [1.0 - t, t]
    }

    /// Interpolates a vector field into a velocity space (Lagrange/bubble
    /// functionals for the Stokes space, RT moments for RT spaces).
    pub fn interpolate_vector(&self, f: &dyn Fn(Point) -> [f64; 2]) -> Vec<f64> {
        let mut out = vec![0.0; self.ndofs];
        let mesh = &self.mesh;
        match self.kind {
            SpaceKind::StokesVelocity => {
                for &t in &self.cells {
                    let p = mesh.triangle_points(t);
                    let mut nodal = [[0.0; 2]; P2B_LOCAL];
                    for i in 0..3 {
                        nodal[i] = f(p[i]);
                        let (a, b) = (p[(i + 1) % 3], p[(i + 2) % 3]);
                        nodal[3 + i] = f([0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])]);
                    }
                    let c = f([(p[0][0] + p[1][0] + p[2][0]) / 3.0, (p[0][1] + p[1][1] + p[2][1]) / 3.0]);
                    for comp in 0..2 {
                        let p2 = -(nodal[0][comp] + nodal[1][comp] + nodal[2][comp]) / 9.0
                            + 4.0 * (nodal[3][comp] + nodal[4][comp] + nodal[5][comp]) / 9.0;
                        nodal[6][comp] = c[comp] - p2;
                    }
                    let (dofs, _) = self.dof_map(t);
                    for comp in 0..2 {
                        for s in 0..P2B_LOCAL {
                            out[dofs[comp * P2B_LOCAL + s]] = nodal[s][comp];
                        }
                    }
                }
            }
            SpaceKind::DarcyVelocity | SpaceKind::StokesRt => {
                for &t in &self.cells {
                    let m = element::rt_moments(mesh.triangle_points(t), f);
                    let (dofs, signs) = self.dof_map(t);
                    for k in 0..RT1_LOCAL {
                        out[dofs[k]] = signs[k] * m[k];
                    }
                }
            }
            _ => panic!("{:?} is not a velocity space", self.kind),
        }
        out
    }

    /// Nodal interpolation into the pressure space (values at triangle
    /// vertices) or the trace space (values at edge endpoints).
    pub fn interpolate_scalar(&self, f: &dyn Fn(Point, Subdomain) -> f64) -> Vec<f64> {
        let mesh = &self.mesh;
        let mut out = vec![0.0; self.ndofs];
        match self.kind {
            SpaceKind::Pressure => {
                for &t in &self.cells {
                    let sub = mesh.triangles[t].subdomain;
                    for (i, p) in mesh.triangle_points(t).iter().enumerate() {
                        out[self.dof_map(t).0[i]] = f(*p, sub);
                    }
                }
            }
            SpaceKind::InterfaceTrace => {
                for &e in &self.cells {
                    let ends = mesh.edges[e].vertices;
                    for j in 0..2 {
                        out[self.dof_map(e).0[j]] = f(mesh.vertices[ends[j]], Subdomain::Darcy);
                    }
                }
            }
            _ => panic!("{:?} is not a scalar space", self.kind),
        }
        out
    }

    /// Point value of the function with coefficients `coeffs` restricted to
    /// triangle `t` (or interface edge `t` for the trace space, with `b[1]`
    /// the edge parameter).
    pub fn eval_local(&self, coeffs: &[f64], t: usize, b: [f64; 3]) -> [f64; 2] {
        if self.kind == SpaceKind::InterfaceTrace {
            let (dofs, _) = self.dof_map(t);
            let w = self.eval_trace(b[1]);
            return [w[0] * coeffs[dofs[0]] + w[1] * coeffs[dofs[1]], 0.0];
        }
        let basis = self.eval_basis(t, b);
        let (dofs, signs) = self.dof_map(t);
        let mut v = [0.0; 2];
        for k in 0..dofs.len() {
            let c = signs[k] * coeffs[dofs[k]];
            v[0] += c * basis.values[k][0];
            v[1] += c * basis.values[k][1];
        }
        v
    }
}

/// The four discrete spaces of the coupled problem plus the RT1 space on
/// the Stokes region used as reconstruction target.
#[derive(Debug, Clone)]
pub struct Spaces {
    pub mesh: Arc<Mesh>,
    pub stokes: Arc<Space>,
    pub pressure: Arc<Space>,
    pub darcy: Arc<Space>,
    pub trace: Arc<Space>,
    pub stokes_rt: Arc<Space>,
}

impl Spaces {
    pub fn new(mesh: Arc<Mesh>) -> Spaces {
        let mk = |k| Arc::new(Space::new(k, mesh.clone()));
        Spaces {
            stokes: mk(SpaceKind::StokesVelocity),
            pressure: mk(SpaceKind::Pressure),
            darcy: mk(SpaceKind::DarcyVelocity),
            trace: mk(SpaceKind::InterfaceTrace),
            stokes_rt: mk(SpaceKind::StokesRt),
            mesh,
        }
    }

    /// Combined velocity dofs: Stokes first, then Darcy.
    pub fn nvel(&self) -> usize {
        self.stokes.ndofs() + self.darcy.ndofs()
    }

    pub fn darcy_offset(&self) -> usize {
        self.stokes.ndofs()
    }

    /// Reconstruction target dofs: Stokes RT first, then Darcy RT.
    pub fn nrt(&self) -> usize {
        self.stokes_rt.ndofs() + self.darcy.ndofs()
    }

    pub fn npres(&self) -> usize {
        self.pressure.ndofs()
    }

    pub fn ntrace(&self) -> usize {
        self.trace.ndofs()
    }

    /// Velocity space and offset into the combined vector for triangle `t`.
    pub fn velocity_space(&self, t: usize) -> (&Arc<Space>, usize) {
        match self.mesh.triangles[t].subdomain {
            Subdomain::Stokes => (&self.stokes, 0),
            Subdomain::Darcy => (&self.darcy, self.darcy_offset()),
        }
    }

    /// RT space and offset into the reconstruction target for triangle `t`.
    pub fn rt_space(&self, t: usize) -> (&Arc<Space>, usize) {
        match self.mesh.triangles[t].subdomain {
            Subdomain::Stokes => (&self.stokes_rt, 0),
            Subdomain::Darcy => (&self.darcy, self.stokes_rt.ndofs()),
        }
    }

    /// Interpolates a piecewise vector field into the combined velocity space.
    pub fn interpolate_velocity(&self, fs: &dyn Fn(Point) -> [f64; 2], fd: &dyn Fn(Point) -> [f64; 2]) -> Vec<f64> {
        let mut v = self.stokes.interpolate_vector(fs);
        v.extend(self.darcy.interpolate_vector(fd));
        v
    }

    /// Interpolates a piecewise vector field into the reconstruction target.
    pub fn interpolate_rt(&self, fs: &dyn Fn(Point) -> [f64; 2], fd: &dyn Fn(Point) -> [f64; 2]) -> Vec<f64> {
        let mut v = self.stokes_rt.interpolate_vector(fs);
        v.extend(self.darcy.interpolate_vector(fd));
        v
    }

    /// Essential dofs of the combined velocity vector.
    pub fn essential_velocity_dofs(&self) -> Vec<usize> {
        let off = self.darcy_offset();
        let mut d = self.stokes.essential_dofs();
        d.extend(self.darcy.essential_dofs().into_iter().map(|i| i + off));
        d
    }
}

/// Which block of a combined vector an [`FeFunction`] refers to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FieldKind {
    /// Combined Stokes + Darcy velocity.
    Velocity,
    /// Stokes RT1 + Darcy RT1 (reconstructed velocity).
    Reconstructed,
    Pressure,
    Trace,
}

/// Coefficient vector bound to a space (or to the combined velocity space).
#[derive(Clone, Debug)]
pub struct FeFunction {
    pub spaces: Spaces,
    pub kind: FieldKind,
    pub coeffs: Vec<f64>,
}

impl FeFunction {
    pub fn new(spaces: &Spaces, kind: FieldKind, coeffs: Vec<f64>) -> Result<FeFunction> {
        let n = match kind {
            FieldKind::Velocity => spaces.nvel(),
            FieldKind::Reconstructed => spaces.nrt(),
            FieldKind::Pressure => spaces.npres(),
            FieldKind::Trace => spaces.ntrace(),
        };
        if coeffs.len() != n {
            return Err(Error::Argument(format!("{kind:?} function needs {n} coefficients, got {}", coeffs.len())));
        }
        Ok(FeFunction { spaces: spaces.clone(), kind, coeffs })
    }

    pub fn zeros(spaces: &Spaces, kind: FieldKind) -> FeFunction {
        let n = match kind {
            FieldKind::Velocity => spaces.nvel(),
            FieldKind::Reconstructed => spaces.nrt(),
            FieldKind::Pressure => spaces.npres(),
            FieldKind::Trace => spaces.ntrace(),
        };
        FeFunction { spaces: spaces.clone(), kind, coeffs: vec![0.0; n] }
    }

    /// Value on triangle `t` at barycentric `b` (vector; scalars in component 0).
    pub fn eval_in(&self, t: usize, b: [f64; 3]) -> [f64; 2] {
        let s = &self.spaces;
        match self.kind {
            FieldKind::Velocity => {
                let (sp, off) = s.velocity_space(t);
                sp.eval_local(&self.coeffs[off..off + sp.ndofs()], t, b)
            }
            FieldKind::Reconstructed => {
                let (sp, off) = s.rt_space(t);
                sp.eval_local(&self.coeffs[off..off + sp.ndofs()], t, b)
            }
            FieldKind::Pressure => s.pressure.eval_local(&self.coeffs, t, b),
            FieldKind::Trace => s.trace.eval_local(&self.coeffs, t, b),
        }
    }

    /// Divergence on triangle `t` (velocity-like kinds only).
    pub fn div_in(&self, t: usize, b: [f64; 3]) -> f64 {
        let (sp, off) = self.velocity_like(t);
        let basis = sp.eval_basis(t, b);
        let (dofs, signs) = sp.dof_map(t);
        (0..dofs.len()).map(|k| signs[k] * self.coeffs[off + dofs[k]] * basis.divs[k]).sum()
    }

    /// Jacobian on a Stokes triangle of a [`FieldKind::Velocity`] function.
    pub fn jac_in(&self, t: usize, b: [f64; 3]) -> Jac {
        assert_eq!(self.kind, FieldKind::Velocity);
        assert_eq!(self.spaces.mesh.triangles[t].subdomain, Subdomain::Stokes, "gradients are only used on the Stokes region");
        let sp = &self.spaces.stokes;
        let basis = sp.eval_basis(t, b);
        let (dofs, _) = sp.dof_map(t);
        let mut j = [[0.0; 2]; 2];
        for k in 0..dofs.len() {
            let c = self.coeffs[dofs[k]];
            for a in 0..2 {
                for d in 0..2 {
                    j[a][d] += c * basis.grads[k][a][d];
                }
            }
        }
        j
    }

    fn velocity_like(&self, t: usize) -> (&Arc<Space>, usize) {
        match self.kind {
            FieldKind::Velocity => self.spaces.velocity_space(t),
            FieldKind::Reconstructed => self.spaces.rt_space(t),
            _ => panic!("{:?} function has no divergence", self.kind),
        }
    }

    /// Value at a physical point, taken from the first triangle containing it.
    /// Trace functions are evaluated at the nearest interface point.
    pub fn eval(&self, x: Point) -> Result<[f64; 2]> {
        let mesh = &self.spaces.mesh;
        if self.kind == FieldKind::Trace {
            for &e in self.spaces.trace.cells() {
                let [a, b] = mesh.edges[e].vertices.map(|v| mesh.vertices[v]);
                let d = [b[0] - a[0], b[1] - a[1]];
                let len2 = d[0] * d[0] + d[1] * d[1];
                let t = ((x[0] - a[0]) * d[0] + (x[1] - a[1]) * d[1]) / len2;
                let q = [a[0] + t * d[0], a[1] + t * d[1]];
                if (-1e-12..=1.0 + 1e-12).contains(&t) && crate::mesh::dist(q, x) < 1e-10 {
                    return Ok(self.eval_in(e, [1.0 - t, t, 0.0]));
                }
            }
            return Err(Error::Argument(format!("point {x:?} is not on the interface")));
        }
        for t in 0..mesh.num_triangles() {
            let aff = Affine::new(mesh.triangle_points(t));
            let b = aff.bary(x);
            if b.iter().all(|&l| l >= -1e-12) {
                return Ok(self.eval_in(t, b));
            }
        }
        Err(Error::Argument(format!("point {x:?} is outside the mesh")))
    }
}
