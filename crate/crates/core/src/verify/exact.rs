//! Manufactured solutions and the problem data they induce.

use std::sync::Arc;

use crate::assembly::{BlockData, InterfaceResiduals, Permeability, ProblemData, LOAD_DEGREE};
use crate::error::Result;
use crate::fields::{scalar_fn, vector_fn, Components, Curl, Curve, Jac, Scalar, ScalarSum, Separable, Vector, VectorField, VectorSum};
use crate::mesh::Point;

/// Exact state `(u, p)` and rescaled adjoint `(z, r)` on both regions,
/// together with the physical parameters.
#[derive(Clone)]
pub struct ExactFields {
    pub name: String,
    pub u_s: Vector,
    pub u_d: Vector,
    pub p_s: Scalar,
    pub p_d: Scalar,
    pub z_s: Vector,
    pub z_d: Vector,
    pub r_s: Scalar,
    pub r_d: Scalar,
    pub mu: f64,
    pub alpha: f64,
    pub alpha1: f64,
    /// Constant permeability tensor.
    pub k: [[f64; 2]; 2],
    /// Normal `n^s` and tangent `τ` of the interface.
    pub normal: Point,
    pub tangent: Point,
}

/// `∇·D(v)` with `D(v) = (∇v + ∇vᵀ)/2`.
pub fn div_sym_grad(v: &dyn VectorField, x: Point) -> [f64; 2] {
    let h = v.hess(x);
    let mut out = [0.0; 2];
    for (i, o) in out.iter_mut().enumerate() {
        let lap = h[i][0][0] + h[i][1][1];
        let grad_div = h[0][0][i] + h[1][1][i];
        *o = 0.5 * (lap + grad_div);
    }
    out
}

fn sym(j: Jac) -> Jac {
    let off = 0.5 * (j[0][1] + j[1][0]);
    [[j[0][0], off], [off, j[1][1]]]
}

fn bilinear(m: Jac, a: Point, b: Point) -> f64 {
    a[0] * (m[0][0] * b[0] + m[0][1] * b[1]) + a[1] * (m[1][0] * b[0] + m[1][1] * b[1])
}

fn apply(m: [[f64; 2]; 2], v: [f64; 2]) -> [f64; 2] {
    [m[0][0] * v[0] + m[0][1] * v[1], m[1][0] * v[0] + m[1][1] * v[1]]
}

fn inverse(k: [[f64; 2]; 2]) -> [[f64; 2]; 2] {
    let det = k[0][0] * k[1][1] - k[0][1] * k[1][0];
    [[k[1][1] / det, -k[0][1] / det], [-k[1][0] / det, k[0][0] / det]]
}

impl ExactFields {
    pub fn kappa(&self) -> f64 {
        bilinear(self.k, self.tangent, self.tangent)
    }

    /// `-2μ∇·D(v) + ∇q` on the Stokes region.
    fn stokes_operator(&self, v: &Vector, q: &Scalar, x: Point) -> [f64; 2] {
        let d = div_sym_grad(&**v, x);
        let g = q.grad(x);
        [-2.0 * self.mu * d[0] + g[0], -2.0 * self.mu * d[1] + g[1]]
    }

    /// `μK⁻¹v + ∇q` on the Darcy region.
    fn darcy_operator(&self, v: &Vector, q: &Scalar, x: Point) -> [f64; 2] {
        let kv = apply(inverse(self.k), v.value(x));
        let g = q.grad(x);
        [self.mu * kv[0] + g[0], self.mu * kv[1] + g[1]]
    }

    fn residuals(&self, vs: &Vector, vd: &Vector, qs: &Scalar, qd: &Scalar) -> InterfaceResiduals {
        let (n, tau) = (self.normal, self.tangent);
        let coef = 2.0 * self.kappa().sqrt() / self.alpha1;
        let mu = self.mu;
        let (a, b) = (vs.clone(), vd.clone());
        let j0 = scalar_fn(move |x| {
            let (us, ud) = (a.value(x), b.value(x));
            (us[0] - ud[0]) * n[0] + (us[1] - ud[1]) * n[1]
        });
        let (a, qs2, qd2) = (vs.clone(), qs.clone(), qd.clone());
        let j2 = scalar_fn(move |x| qs2.value(x) - 2.0 * mu * bilinear(sym(a.jac(x)), n, n) - qd2.value(x));
        let a = vs.clone();
        let j3 = scalar_fn(move |x| {
            let u = a.value(x);
            u[0] * tau[0] + u[1] * tau[1] + coef * bilinear(sym(a.jac(x)), tau, n)
        });
        InterfaceResiduals { j0, j2, j3 }
    }

    fn block(&self, vs: &Vector, vd: &Vector, qs: &Scalar, qd: &Scalar) -> BlockData {
        let (a, b) = (vs.clone(), vd.clone());
        let (c, d) = (vs.clone(), vd.clone());
        BlockData {
            g_s: scalar_fn(move |x| a.div(x)),
            g_d: scalar_fn(move |x| b.div(x)),
            interface: self.residuals(vs, vd, qs, qd),
            boundary_s: vector_fn(move |x| c.value(x)),
            boundary_d: vector_fn(move |x| d.value(x)),
        }
    }

    /// Sources, target, divergence data, interface residuals and boundary
    /// values for which these fields solve the optimality system.
    pub fn derive_data(&self) -> Result<ProblemData> {
        let s = 1.0 / self.alpha.sqrt();
        let sa = self.alpha.sqrt();
        let me = Arc::new(self.clone());
        let e = me.clone();
        let f_s = vector_fn(move |x| {
            let o = e.stokes_operator(&e.u_s, &e.p_s, x);
            let z = e.z_s.value(x);
            [o[0] + s * z[0], o[1] + s * z[1]]
        });
        let e = me.clone();
        let f_d = vector_fn(move |x| {
            let o = e.darcy_operator(&e.u_d, &e.p_d, x);
            let z = e.z_d.value(x);
            [o[0] + s * z[0], o[1] + s * z[1]]
        });
        let e = me.clone();
        let target_s = vector_fn(move |x| {
            let o = e.stokes_operator(&e.z_s, &e.r_s, x);
            let u = e.u_s.value(x);
            [u[0] - sa * o[0], u[1] - sa * o[1]]
        });
        let e = me.clone();
        let target_d = vector_fn(move |x| {
            let o = e.darcy_operator(&e.z_d, &e.r_d, x);
            let u = e.u_d.value(x);
            [u[0] - sa * o[0], u[1] - sa * o[1]]
        });
        let data = ProblemData {
            mu: self.mu,
            alpha: self.alpha,
            alpha1: self.alpha1,
            permeability: Permeability::constant(self.k)?,
            f_s,
            f_d,
            target_s,
            target_d,
            state: self.block(&self.u_s, &self.u_d, &self.p_s, &self.p_d),
            adjoint: self.block(&self.z_s, &self.z_d, &self.r_s, &self.r_d),
            load_degree: LOAD_DEGREE,
        };
        data.validate()?;
        Ok(data)
    }

    /// Same fields with the interface normal and tangent of `geometry`.
    pub fn on_geometry(self, geometry: &crate::mesh::Geometry) -> Self {
        ExactFields { normal: geometry.normal, tangent: geometry.tangent(), ..self }
    }

    /// Same fields with the Stokes pressure replaced by `p^s + λφ`.
    pub fn with_pressure_perturbation(&self, lambda: f64, phi: Scalar) -> ExactFields {
        let scaled: Scalar = Arc::new(crate::fields::ScalarScaled(lambda, phi));
        ExactFields { p_s: Arc::new(ScalarSum(vec![self.p_s.clone(), scaled])), ..self.clone() }
    }
}

fn sep(x: Curve, y: Curve) -> Separable {
    Separable { x, y }
}

fn scalar(x: Curve, y: Curve) -> Scalar {
    Arc::new(sep(x, y))
}

/// Polynomial `Σ c[i][j] x^i y^j` as a scalar field.
pub fn polynomial(c: &[&[f64]]) -> Scalar {
    let mut terms: Vec<Scalar> = Vec::new();
    for (i, row) in c.iter().enumerate() {
        for (j, &a) in row.iter().enumerate() {
            if a != 0.0 {
                let mut px = vec![0.0; i + 1];
                px[i] = a;
                let mut py = vec![0.0; j + 1];
                py[j] = 1.0;
                terms.push(scalar(Curve::poly(&px), Curve::poly(&py)));
            }
        }
    }
    Arc::new(ScalarSum(terms))
}

fn vector(a: Scalar, b: Scalar) -> Vector {
    Arc::new(Components(a, b))
}

/// `x²(1-x)²`, vanishing to second order at `x = 0, 1`.
fn clamp_x() -> Curve {
    Curve::poly(&[0.0, 0.0, 1.0, -2.0, 1.0])
}

/// Pressure perturbation `x²(1-x)²(y-1)²(2-y)²` supported on the Stokes square.
pub fn stokes_bubble() -> Scalar {
    // (y-1)²(2-y)² = (y² - 3y + 2)²
    scalar(clamp_x(), Curve::poly(&[4.0, -12.0, 13.0, -6.0, 1.0]))
}

const K_DEFAULT: [[f64; 2]; 2] = [[1.0, 0.25], [0.25, 0.5]];

fn base(name: &str) -> ExactFields {
    let z = crate::fields::zero_vector();
    let q = crate::fields::zero_scalar();
    ExactFields {
        name: name.into(),
        u_s: z.clone(),
        u_d: z.clone(),
        p_s: q.clone(),
        p_d: q.clone(),
        z_s: z.clone(),
        z_d: z,
        r_s: q.clone(),
        r_d: q,
        mu: 1.0,
        alpha: 0.1,
        alpha1: 1.0,
        k: K_DEFAULT,
        normal: [0.0, -1.0],
        tangent: [1.0, 0.0],
    }
}

/// Smooth non-polynomial octet on `Ω^s = (0,1)×(1,2)`, `Ω^d = (0,1)×(0,1)`.
///
/// Velocities vanish on `Γ^s` (Stokes) and have zero normal component on
/// `Γ^d` (Darcy); divergences and interface traces of the normal velocity
/// are polynomial, so the discrete constraints are compatible exactly.
pub fn smooth_octet() -> ExactFields {
    let two_minus_y_sq = Curve::poly(&[4.0, -4.0, 1.0]);
    let bump_x = Curve::poly(&[0.0, 1.0, -1.0]);
    let u_s: Vector = Arc::new(Curl(sep(clamp_x(), Curve::product(two_minus_y_sq.clone(), Curve::exp(1.0, 0.5)))));
    let z_s: Vector = Arc::new(Curl(sep(clamp_x(), Curve::product(two_minus_y_sq, Curve::sin(1.0, 1.0, 0.3)))));
    let u_d: Vector = Arc::new(VectorSum(vec![
        Arc::new(Curl(sep(clamp_x(), Curve::product(Curve::poly(&[0.0, 1.0]), Curve::sin(1.0, 1.0, 1.0))))),
        vector(crate::fields::zero_scalar(), scalar(bump_x.clone(), Curve::poly(&[0.0, 1.0]))),
    ]));
    let z_d: Vector = Arc::new(VectorSum(vec![
        Arc::new(Curl(sep(clamp_x(), Curve::product(Curve::poly(&[0.0, 1.0]), Curve::exp(0.5, 1.0 / 3.0))))),
        vector(crate::fields::zero_scalar(), scalar(bump_x, Curve::poly(&[0.0, -0.5]))),
    ]));
    ExactFields {
        u_s,
        u_d,
        z_s,
        z_d,
        p_s: scalar(Curve::sin(1.0, std::f64::consts::PI, 0.0), Curve::sin(1.0, 1.0, std::f64::consts::FRAC_PI_2)),
        p_d: scalar(Curve::exp(1.0, 1.0), Curve::poly(&[0.5, 1.0])),
        r_s: Arc::new(ScalarSum(vec![scalar(Curve::sin(1.0, 2.0, 0.0), Curve::constant(1.0)), scalar(Curve::constant(1.0), Curve::exp(0.25, 1.0))])),
        r_d: scalar(Curve::sin(1.0, 1.5, 0.2), Curve::sin(1.0, 2.0, 0.0)),
        ..base("smooth")
    }
}

/// Octet inside the discrete spaces of both schemes: linear Stokes
/// velocities, RT1 Darcy velocities, linear pressures.
pub fn linear_octet() -> ExactFields {
    ExactFields {
        u_s: vector(polynomial(&[&[0.2, -0.5], &[1.0]]), polynomial(&[&[-0.3, 0.7], &[0.4]])),
        z_s: vector(polynomial(&[&[0.1, 0.3], &[-0.6]]), polynomial(&[&[0.5], &[0.2]])),
        // RT1: (a + bx + cy + x(dx + ey), f + gx + hy + y(dx + ey))
        u_d: vector(polynomial(&[&[0.5, 0.2], &[1.0, 0.6], &[0.3]]), polynomial(&[&[-0.4, 0.8, 0.6], &[0.1, 0.3]])),
        z_d: vector(polynomial(&[&[-0.2, 0.1], &[0.4, -0.5], &[0.2]]), polynomial(&[&[0.3, -0.6, -0.5], &[0.7, 0.2]])),
        p_s: polynomial(&[&[1.0, 0.5], &[-2.0]]),
        p_d: polynomial(&[&[0.3, 1.5], &[0.8]]),
        r_s: polynomial(&[&[-0.5, 0.25], &[1.0]]),
        r_d: polynomial(&[&[0.2, -1.0], &[0.6]]),
        ..base("linear")
    }
}

/// Octet inside the discrete spaces of the classical scheme: quadratic
/// Stokes velocities, RT1 Darcy velocities, linear pressures.
pub fn quadratic_octet() -> ExactFields {
    ExactFields {
        u_s: vector(polynomial(&[&[0.2, -0.5, 0.3], &[1.0, 0.4], &[-0.7]]), polynomial(&[&[-0.3, 0.7, -0.2], &[0.4, 0.5], &[0.25]])),
        z_s: vector(polynomial(&[&[0.1, 0.3, 0.1], &[-0.6, -0.2], &[0.3]]), polynomial(&[&[0.5, 0.0, -0.4], &[0.2, 0.6], &[0.1]])),
        ..linear_octet()
    }
    .renamed("quadratic")
}

impl ExactFields {
    fn renamed(self, name: &str) -> Self {
        ExactFields { name: name.into(), ..self }
    }

    /// The fields with every component replaced by zero.
    pub fn zero() -> ExactFields {
        base("zero")
    }
}

/// Looks up a shipped octet by name.
pub fn octet(name: &str) -> Option<ExactFields> {
    match name {
        "smooth" => Some(smooth_octet()),
        "linear" => Some(linear_octet()),
        "quadratic" => Some(quadratic_octet()),
        "zero" => Some(ExactFields::zero()),
        _ => None,
    }
}

pub const OCTETS: [&str; 4] = ["smooth", "linear", "quadratic", "zero"];

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::ScalarField;
    use crate::fields::fd;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn all_fields(e: &ExactFields) -> (Vec<Vector>, Vec<Scalar>) {
        (vec![e.u_s.clone(), e.u_d.clone(), e.z_s.clone(), e.z_d.clone()], vec![e.p_s.clone(), e.p_d.clone(), e.r_s.clone(), e.r_d.clone()])
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for e in [smooth_octet(), linear_octet(), quadratic_octet()] {
            let (vs, ss) = all_fields(&e);
            for _ in 0..10 {
                let x = [rng.random_range(0.0..1.0), rng.random_range(0.0..2.0)];
                for v in &vs {
                    let (j, h) = (v.jac(x), v.hess(x));
                    let (jf, hf) = (fd::vector_jac(&**v, x), fd::vector_hess(&**v, x));
                    for a in 0..2 {
                        for b in 0..2 {
                            assert!(fd::close(j[a][b], jf[a][b]));
                            for c in 0..2 {
                                assert!(fd::close(h[a][b][c], hf[a][b][c]));
                            }
                        }
                    }
                }
                for s in &ss {
                    let (g, h) = (s.grad(x), s.hess(x));
                    let (gf, hf) = (fd::scalar_grad(&**s, x), fd::scalar_hess(&**s, x));
                    for a in 0..2 {
                        assert!(fd::close(g[a], gf[a]));
                        for b in 0..2 {
                            assert!(fd::close(h[a][b], hf[a][b]));
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn smooth_octet_boundary_behaviour() {
        let e = smooth_octet();
        for t in [0.0, 0.13, 0.5, 0.77, 1.0] {
            for p in [[t, 2.0], [0.0, 1.0 + t], [1.0, 1.0 + t]] {
                let (u, z) = (e.u_s.value(p), e.z_s.value(p));
                assert!(u[0].abs() < 1e-14 && u[1].abs() < 1e-14 && z[0].abs() < 1e-14 && z[1].abs() < 1e-14);
            }
            assert!(e.u_d.value([t, 0.0])[1].abs() < 1e-14 && e.z_d.value([t, 0.0])[1].abs() < 1e-14);
            assert!(e.u_d.value([0.0, t])[0].abs() < 1e-14 && e.u_d.value([1.0, t])[0].abs() < 1e-14);
            assert!(e.z_d.value([0.0, t])[0].abs() < 1e-14 && e.z_d.value([1.0, t])[0].abs() < 1e-14);
            assert!(e.u_s.div([t, 1.0 + t]).abs() < 1e-14);
            let x = [t, 0.5 * t];
            assert!((e.u_d.div(x) - t * (1.0 - t)).abs() < 1e-14);
            assert!((e.z_d.div(x) + 0.5 * t * (1.0 - t)).abs() < 1e-14);
        }
    }

    #[test]
    fn zero_fields_give_zero_data() {
        let d = ExactFields::zero().derive_data().unwrap();
        let x = [0.3, 0.8];
        assert_eq!((d.f_s)(x), [0.0; 2]);
        assert_eq!((d.target_d)(x), [0.0; 2]);
        assert_eq!((d.state.interface.j2)(x), 0.0);
        assert_eq!((d.adjoint.g_d)(x), 0.0);
    }

    #[test]
    fn stream_function_velocity_gives_pure_viscous_source() {
        // stream function x²(1-x)²(y-1)³(2-y)²: the flat third-order zero at Γ
        // also kills the stress terms of j₂ and j₃
        let y_part = Curve::product(Curve::poly(&[-1.0, 3.0, -3.0, 1.0]), Curve::poly(&[4.0, -4.0, 1.0]));
        let u_s: Vector = Arc::new(Curl(sep(clamp_x(), y_part)));
        let e = ExactFields { u_s: u_s.clone(), ..ExactFields::zero() };
        let d = e.derive_data().unwrap();
        for x in [[0.2, 1.3], [0.7, 1.9]] {
            let f = (d.f_s)(x);
            let v = div_sym_grad(&*u_s, x);
            assert!((f[0] + 2.0 * v[0]).abs() < 1e-13 && (f[1] + 2.0 * v[1]).abs() < 1e-13);
            assert_eq!((d.target_s)(x), u_s.value(x));
            assert!((d.state.g_s)(x).abs() < 1e-14);
        }
        for t in [0.0, 0.4, 1.0] {
            let x = [t, 2.0 - 1.0];
            assert!((d.state.interface.j0)(x).abs() < 1e-14);
            assert!((d.state.interface.j2)(x).abs() < 1e-14);
            assert!((d.state.interface.j3)(x).abs() < 1e-14);
        }
    }

    #[test]
    fn perturbation_is_supported_in_the_stokes_square() {
        let phi = stokes_bubble();
        for t in [0.0, 0.3, 1.0] {
            for p in [[t, 1.0], [t, 2.0], [0.0, 1.0 + t], [1.0, 1.0 + t]] {
                assert_eq!(phi.value(p), 0.0);
                assert!(phi.grad(p)[0].abs() < 1e-15 && phi.grad(p)[1].abs() < 1e-15);
            }
        }
        assert!((phi.value([0.5, 1.5]) - 1.0 / 256.0).abs() < 1e-15);
    }
}
