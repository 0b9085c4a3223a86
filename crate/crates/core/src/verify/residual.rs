//! Weak residuals of exact fields, evaluated by direct quadrature against
//! every discrete test function (no assembled operator is involved).

use crate::assembly::{edge_point_bary, ProblemData};
use crate::element::Affine;
use crate::error::Result;
use crate::fields::{Jac, Scalar, Vector};
use crate::mesh::Subdomain;
use crate::quadrature::{make_quadrature, Domain, MAX_DEGREE};
use crate::spaces::Spaces;

use super::exact::ExactFields;

/// Largest absolute weak residual per equation, over test functions that
/// satisfy the homogeneous essential conditions.
#[derive(Clone, Copy, Debug, Default, PartialEq, serde::Serialize)]
pub struct WeakResiduals {
    pub momentum_u: f64,
    pub momentum_z: f64,
    pub divergence_u: f64,
    pub divergence_z: f64,
    pub interface_u: f64,
    pub interface_z: f64,
}

impl WeakResiduals {
    pub fn max(&self) -> f64 {
        [self.momentum_u, self.momentum_z, self.divergence_u, self.divergence_z, self.interface_u, self.interface_z]
            .into_iter()
            .fold(0.0, f64::max)
    }
}

struct Pair<'a> {
    vs: &'a Vector,
    vd: &'a Vector,
    qs: &'a Scalar,
    qd: &'a Scalar,
    /// Coupled velocity entering with `+s` (state) or `-s` (adjoint).
    other_s: &'a Vector,
    other_d: &'a Vector,
    other_sign: f64,
}

fn sym_contract(a: Jac, b: Jac) -> f64 {
    let mut s = 0.0;
    for i in 0..2 {
        for j in 0..2 {
            s += 0.5 * (a[i][j] + a[j][i]) * 0.5 * (b[i][j] + b[j][i]);
        }
    }
    s
}

fn dot(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

/// Evaluates all weak residuals of `exact` with the data `data`
/// (normally `exact.derive_data()`), using quadrature of degree `degree`.
pub fn weak_residuals(spaces: &Spaces, exact: &ExactFields, data: &ProblemData, degree: usize) -> Result<WeakResiduals> {
    let degree = degree.min(MAX_DEGREE);
    let mesh = &spaces.mesh;
    let rule = make_quadrature(Domain::Triangle, degree)?;
    let erule = make_quadrature(Domain::Edge, degree)?;
    let s = data.coupling();
    let kinv = data.permeability.inverse_at([0.0, 0.0])?;
    let tau = mesh.geometry.tangent();
    let nvel = spaces.nvel();

    let state = Pair { vs: &exact.u_s, vd: &exact.u_d, qs: &exact.p_s, qd: &exact.p_d, other_s: &exact.z_s, other_d: &exact.z_d, other_sign: 1.0 };
    let adjoint = Pair { vs: &exact.z_s, vd: &exact.z_d, qs: &exact.r_s, qd: &exact.r_d, other_s: &exact.u_s, other_d: &exact.u_d, other_sign: -1.0 };

    let mut out = WeakResiduals::default();
    for (which, pair) in [(0, &state), (1, &adjoint)] {
        let block = if which == 0 { &data.state } else { &data.adjoint };
        let mut mom = vec![0.0; nvel];
        let mut div = vec![0.0; spaces.npres()];
        for t in 0..mesh.num_triangles() {
            let aff = Affine::new(mesh.triangle_points(t));
            let sub = mesh.triangles[t].subdomain;
            let (sp, off) = spaces.velocity_space(t);
            let (dofs, signs) = sp.dof_map(t);
            let (pd, _) = spaces.pressure.dof_map(t);
            for (b, w) in rule.iter() {
                let x = aff.map(b);
                let wd = w * aff.det;
                let basis = sp.eval_basis_affine(&aff, b);
                let (v, q, other, div_v) = match sub {
                    Subdomain::Stokes => (pair.vs, pair.qs, pair.other_s, pair.vs.div(x)),
                    Subdomain::Darcy => (pair.vd, pair.qd, pair.other_d, pair.vd.div(x)),
                };
                let (uv, qv, ov) = (v.value(x), q.value(x), other.value(x));
                let load = match (which, sub) {
                    (0, Subdomain::Stokes) => (data.f_s)(x),
                    (0, Subdomain::Darcy) => (data.f_d)(x),
                    (_, Subdomain::Stokes) => {
                        let t = (data.target_s)(x);
                        [-s * t[0], -s * t[1]]
                    }
                    (_, Subdomain::Darcy) => {
                        let t = (data.target_d)(x);
                        [-s * t[0], -s * t[1]]
                    }
                };
                let jac = if sub == Subdomain::Stokes { Some(v.jac(x)) } else { None };
                for k in 0..dofs.len() {
                    let psi = basis.values[k];
                    let visc = match jac {
                        Some(j) => 2.0 * data.mu * sym_contract(j, basis.grads[k]),
                        None => {
                            let ku = [kinv[0][0] * uv[0] + kinv[0][1] * uv[1], kinv[1][0] * uv[0] + kinv[1][1] * uv[1]];
                            data.mu * dot(ku, psi)
                        }
                    };
                    let r = visc - qv * basis.divs[k] + pair.other_sign * s * dot(ov, psi) - dot(load, psi);
                    mom[off + dofs[k]] += signs[k] * wd * r;
                }
                let g = match sub {
                    Subdomain::Stokes => (block.g_s)(x),
                    Subdomain::Darcy => (block.g_d)(x),
                };
                for i in 0..3 {
                    div[pd[i]] -= wd * (div_v - g) * b[i];
                }
            }
        }
        let mut iface = vec![0.0; spaces.ntrace()];
        for &e in spaces.trace.cells() {
            let edge = &mesh.edges[e];
            let n = edge.normal;
            let (ts, td) = (edge.triangles[0].expect("Stokes side"), edge.triangles[1].expect("Darcy side"));
            let [a, c] = edge.vertices.map(|v| mesh.vertices[v]);
            let (ld, _) = spaces.trace.dof_map(e);
            for (q, w) in erule.iter() {
                let p = q[1];
                let x = [a[0] + p * (c[0] - a[0]), a[1] + p * (c[1] - a[1])];
                let wl = w * edge.length;
                let (us, ud) = (pair.vs.value(x), pair.vd.value(x));
                let qd = pair.qd.value(x);
                let bjs = data.bjs(x, tau)?;
                let (j0, j2, j3) = ((block.interface.j0)(x), (block.interface.j2)(x), (block.interface.j3)(x));
                let lam = spaces.trace.eval_trace(p);
                let jump = dot(us, n) - dot(ud, n) - j0;
                for i in 0..2 {
                    iface[ld[i]] += wl * jump * lam[i];
                }
                for (t, side) in [(ts, 1.0), (td, -1.0)] {
                    let aff = Affine::new(mesh.triangle_points(t));
                    let (sp, off) = spaces.velocity_space(t);
                    let (dofs, signs) = sp.dof_map(t);
                    let basis = sp.eval_basis_affine(&aff, edge_point_bary(mesh, t, e, p));
                    for k in 0..dofs.len() {
                        let psi = basis.values[k];
                        let pn = side * dot(psi, n);
                        let mut r = qd * pn;
                        if side > 0.0 {
                            let pt = dot(psi, tau);
                            r += bjs * dot(us, tau) * pt + j2 * pn - bjs * j3 * pt;
                        }
                        mom[off + dofs[k]] += signs[k] * wl * r;
                    }
                }
            }
        }
        let essential = spaces.essential_velocity_dofs();
        for d in essential {
            mom[d] = 0.0;
        }
        let m = |v: &[f64]| v.iter().fold(0.0f64, |a, b| a.max(b.abs()));
        if which == 0 {
            out.momentum_u = m(&mom);
            out.divergence_u = m(&div);
            out.interface_u = m(&iface);
        } else {
            out.momentum_z = m(&mom);
            out.divergence_z = m(&div);
            out.interface_z = m(&iface);
        }
    }
    Ok(out)
}
