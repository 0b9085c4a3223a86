//! Discretization errors in the X-norm and in L² for the pressures.

use crate::element::Affine;
use crate::error::{Error, Result};
use crate::fields::{Scalar, Vector};
use crate::mesh::Subdomain;
use crate::quadrature::{make_quadrature, Domain};
use crate::spaces::{FeFunction, FieldKind};
use crate::system::Solution;

use super::exact::ExactFields;

/// Quadrature degree of all error integrals.
pub const NORM_DEGREE: usize = 10;

/// Parts of `‖v‖_X² = |v^s|²_{1,s} + ‖v^d‖²_d + ‖∇·v^d‖²_d`.
#[derive(Clone, Copy, Debug, Default, PartialEq, serde::Serialize)]
pub struct XError {
    pub h1_s: f64,
    pub l2_d: f64,
    pub div_d: f64,
    pub total: f64,
}

impl XError {
    fn from_squares(h1: f64, l2: f64, div: f64) -> Self {
        XError { h1_s: h1.sqrt(), l2_d: l2.sqrt(), div_d: div.sqrt(), total: (h1 + l2 + div).sqrt() }
    }
}

/// One row of a convergence report.
#[derive(Clone, Copy, Debug, Default, PartialEq, serde::Serialize)]
pub struct ErrorRow {
    pub level: usize,
    pub h: f64,
    pub u: XError,
    pub z: XError,
    pub p_l2: f64,
    pub r_l2: f64,
    pub cost: f64,
}

/// `X`-norm of `v_h - v` for a velocity function.
pub fn x_error(vh: &FeFunction, vs: &Vector, vd: &Vector) -> Result<XError> {
    if vh.kind != FieldKind::Velocity {
        return Err(Error::Argument(format!("X-norm needs a velocity, got {:?}", vh.kind)));
    }
    let mesh = &vh.spaces.mesh;
    let rule = make_quadrature(Domain::Triangle, NORM_DEGREE)?;
    let (mut h1, mut l2, mut div) = (0.0, 0.0, 0.0);
    for t in 0..mesh.num_triangles() {
        let aff = Affine::new(mesh.triangle_points(t));
        for (b, w) in rule.iter() {
            let x = aff.map(b);
            let wd = w * aff.det;
            match mesh.triangles[t].subdomain {
                Subdomain::Stokes => {
                    let (jh, j) = (vh.jac_in(t, b), vs.jac(x));
                    for i in 0..2 {
                        for k in 0..2 {
                            h1 += wd * (jh[i][k] - j[i][k]).powi(2);
                        }
                    }
                }
                Subdomain::Darcy => {
                    let (v, e) = (vh.eval_in(t, b), vd.value(x));
                    l2 += wd * ((v[0] - e[0]).powi(2) + (v[1] - e[1]).powi(2));
                    div += wd * (vh.div_in(t, b) - vd.div(x)).powi(2);
                }
            }
        }
    }
    Ok(XError::from_squares(h1, l2, div))
}

/// `‖(q_h - m_h) - (q - m)‖` with `m`, `m_h` the means over `Ω`.
pub fn pressure_error(qh: &FeFunction, qs: &Scalar, qd: &Scalar) -> Result<f64> {
    if qh.kind != FieldKind::Pressure {
        return Err(Error::Argument(format!("pressure error needs a pressure, got {:?}", qh.kind)));
    }
    let mesh = &qh.spaces.mesh;
    let rule = make_quadrature(Domain::Triangle, NORM_DEGREE)?;
    let mut samples = Vec::new();
    let (mut mean_h, mut mean, mut area) = (0.0, 0.0, 0.0);
    for t in 0..mesh.num_triangles() {
        let aff = Affine::new(mesh.triangle_points(t));
        let q = match mesh.triangles[t].subdomain {
            Subdomain::Stokes => qs,
            Subdomain::Darcy => qd,
        };
        for (b, w) in rule.iter() {
            let wd = w * aff.det;
            let (vh, v) = (qh.eval_in(t, b)[0], q.value(aff.map(b)));
            mean_h += wd * vh;
            mean += wd * v;
            area += wd;
            samples.push((wd, vh - v));
        }
    }
    let shift = (mean_h - mean) / area;
    Ok(samples.iter().map(|(w, d)| w * (d - shift).powi(2)).sum::<f64>().sqrt())
}

/// Errors of a solution against the exact fields. The cost is left at zero.
pub fn error_norms(sol: &Solution, exact: &ExactFields) -> Result<ErrorRow> {
    Ok(ErrorRow {
        level: 0,
        h: sol.u.spaces.mesh.h,
        u: x_error(&sol.u, &exact.u_s, &exact.u_d)?,
        z: x_error(&sol.z, &exact.z_s, &exact.z_d)?,
        p_l2: pressure_error(&sol.p, &exact.p_s, &exact.p_d)?,
        r_l2: pressure_error(&sol.r, &exact.r_s, &exact.r_d)?,
        cost: 0.0,
    })
}

/// `L²` error of a velocity or reconstructed function.
pub fn l2_vector_error(vh: &FeFunction, vs: &dyn Fn([f64; 2]) -> [f64; 2], vd: &dyn Fn([f64; 2]) -> [f64; 2]) -> Result<f64> {
    if !matches!(vh.kind, FieldKind::Velocity | FieldKind::Reconstructed) {
        return Err(Error::Argument(format!("vector error needs a velocity, got {:?}", vh.kind)));
    }
    let mesh = &vh.spaces.mesh;
    let rule = make_quadrature(Domain::Triangle, NORM_DEGREE)?;
    let mut s = 0.0;
    for t in 0..mesh.num_triangles() {
        let aff = Affine::new(mesh.triangle_points(t));
        let f = match mesh.triangles[t].subdomain {
            Subdomain::Stokes => vs,
            Subdomain::Darcy => vd,
        };
        for (b, w) in rule.iter() {
            let (v, e) = (vh.eval_in(t, b), f(aff.map(b)));
            s += w * aff.det * ((v[0] - e[0]).powi(2) + (v[1] - e[1]).powi(2));
        }
    }
    Ok(s.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_two_domain_mesh, Rect};
    use crate::spaces::Spaces;
    use crate::verify::exact::{quadratic_octet, smooth_octet};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::sync::Arc;

    fn spaces(n0: usize) -> Spaces {
        let mesh = build_two_domain_mesh(Rect::new(0.0, 1.0, 1.0, 2.0), Rect::new(0.0, 1.0, 0.0, 1.0), n0).unwrap();
        Spaces::new(Arc::new(mesh))
    }

    fn interpolants(s: &Spaces, e: &ExactFields) -> (FeFunction, FeFunction) {
        let (us, ud) = (e.u_s.clone(), e.u_d.clone());
        let u = FeFunction::new(s, FieldKind::Velocity, s.interpolate_velocity(&|x| us.value(x), &|x| ud.value(x))).unwrap();
        let (ps, pd) = (e.p_s.clone(), e.p_d.clone());
        let p = s.pressure.interpolate_scalar(&|x, sub| if sub == Subdomain::Stokes { ps.value(x) } else { pd.value(x) });
        (u, FeFunction::new(s, FieldKind::Pressure, p).unwrap())
    }

    #[test]
    fn interpolants_of_members_have_zero_error() {
        let s = spaces(2);
        let e = quadratic_octet();
        let (u, p) = interpolants(&s, &e);
        assert!(x_error(&u, &e.u_s, &e.u_d).unwrap().total < 1e-12);
        assert!(pressure_error(&p, &e.p_s, &e.p_d).unwrap() < 1e-12);
    }

    #[test]
    fn zero_against_zero() {
        let s = spaces(1);
        let e = ExactFields::zero();
        let u = FeFunction::zeros(&s, FieldKind::Velocity);
        assert_eq!(x_error(&u, &e.u_s, &e.u_d).unwrap(), XError::default());
        let p = FeFunction::zeros(&s, FieldKind::Pressure);
        assert_eq!(pressure_error(&p, &e.p_s, &e.p_d).unwrap(), 0.0);
    }

    #[test]
    fn constant_shift_is_invisible_to_the_pressure_error() {
        let s = spaces(2);
        let e = quadratic_octet();
        let (_, mut p) = interpolants(&s, &e);
        p.coeffs.iter_mut().for_each(|c| *c += 3.7);
        assert!(pressure_error(&p, &e.p_s, &e.p_d).unwrap() < 1e-12);
    }

    #[test]
    fn triangle_inequality_on_random_pairs() {
        let s = spaces(2);
        let zero = ExactFields::zero();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..5 {
            let a: Vec<f64> = (0..s.nvel()).map(|_| rng.random_range(-1.0..1.0)).collect();
            let b: Vec<f64> = (0..s.nvel()).map(|_| rng.random_range(-1.0..1.0)).collect();
            let sum: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x + y).collect();
            let n = |c: Vec<f64>| x_error(&FeFunction::new(&s, FieldKind::Velocity, c).unwrap(), &zero.u_s, &zero.u_d).unwrap().total;
            assert!(n(sum) <= n(a) + n(b) + 1e-12);
        }
    }

    #[test]
    fn interpolation_error_of_smooth_fields_decreases() {
        let e = smooth_octet();
        let err = |n0| {
            let s = spaces(n0);
            let (u, _) = interpolants(&s, &e);
            x_error(&u, &e.u_s, &e.u_d).unwrap().total
        };
        let (a, b) = (err(2), err(4));
        assert!(a > 0.0 && b < a / 3.0, "{a} {b}");
    }
}
