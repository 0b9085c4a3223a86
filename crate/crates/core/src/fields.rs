//! Closed-form scalar and vector fields with analytic first and second
//! derivatives, used for manufactured solutions and problem data.

use std::sync::Arc;

use crate::mesh::Point;

pub type Grad = [f64; 2];
pub type Hess = [[f64; 2]; 2];
/// `jac[i][j] = ∂v_i/∂x_j`.
pub type Jac = [[f64; 2]; 2];
/// `hess[i][j][k] = ∂²v_i/∂x_j∂x_k`.
pub type VecHess = [[[f64; 2]; 2]; 2];

pub trait ScalarField: Send + Sync {
    fn value(&self, x: Point) -> f64;
    fn grad(&self, x: Point) -> Grad;
    fn hess(&self, x: Point) -> Hess;
}

pub trait VectorField: Send + Sync {
    fn value(&self, x: Point) -> [f64; 2];
    fn jac(&self, x: Point) -> Jac;
    fn hess(&self, x: Point) -> VecHess;

    fn div(&self, x: Point) -> f64 {
        let j = self.jac(x);
        j[0][0] + j[1][1]
    }
}

pub type Scalar = Arc<dyn ScalarField>;
pub type Vector = Arc<dyn VectorField>;

/// A univariate function with its first three derivatives.
#[derive(Clone)]
pub struct Curve(Arc<dyn Fn(f64) -> [f64; 4] + Send + Sync>);

impl Curve {
    pub fn new(f: impl Fn(f64) -> [f64; 4] + Send + Sync + 'static) -> Self {
        Curve(Arc::new(f))
    }

    pub fn eval(&self, t: f64) -> [f64; 4] {
        (self.0)(t)
    }

    pub fn constant(c: f64) -> Self {
        Curve::new(move |_| [c, 0.0, 0.0, 0.0])
    }

    /// Polynomial with coefficients in increasing degree.
    pub fn poly(coeffs: &[f64]) -> Self {
        let c = coeffs.to_vec();
        Curve::new(move |t| {
            let mut out = [0.0; 4];
            for (k, &a) in c.iter().enumerate() {
                let mut fall = 1.0;
                for (d, o) in out.iter_mut().enumerate() {
                    if d > k {
                        break;
                    }
                    *o += a * fall * t.powi((k - d) as i32);
                    fall *= (k - d) as f64;
                }
            }
            out
        })
    }

    /// `a · sin(ω t + φ)`.
    pub fn sin(a: f64, omega: f64, phase: f64) -> Self {
        Curve::new(move |t| {
            let (s, c) = (omega * t + phase).sin_cos();
            [a * s, a * omega * c, -a * omega * omega * s, -a * omega.powi(3) * c]
        })
    }

    /// `a · exp(k t)`.
    pub fn exp(a: f64, k: f64) -> Self {
        Curve::new(move |t| {
            let e = a * (k * t).exp();
            [e, k * e, k * k * e, k * k * k * e]
        })
    }

    pub fn product(f: Curve, g: Curve) -> Self {
        Curve::new(move |t| {
            let a = f.eval(t);
            let b = g.eval(t);
            [
                a[0] * b[0],
                a[1] * b[0] + a[0] * b[1],
                a[2] * b[0] + 2.0 * a[1] * b[1] + a[0] * b[2],
                a[3] * b[0] + 3.0 * a[2] * b[1] + 3.0 * a[1] * b[2] + a[0] * b[3],
            ]
        })
    }
}

/// `X(x) · Y(y)`.
#[derive(Clone)]
pub struct Separable {
    pub x: Curve,
    pub y: Curve,
}

impl ScalarField for Separable {
    fn value(&self, p: Point) -> f64 {
        self.x.eval(p[0])[0] * self.y.eval(p[1])[0]
    }
    fn grad(&self, p: Point) -> Grad {
        let (a, b) = (self.x.eval(p[0]), self.y.eval(p[1]));
        [a[1] * b[0], a[0] * b[1]]
    }
    fn hess(&self, p: Point) -> Hess {
        let (a, b) = (self.x.eval(p[0]), self.y.eval(p[1]));
        [[a[2] * b[0], a[1] * b[1]], [a[1] * b[1], a[0] * b[2]]]
    }
}

/// Sum of scalar fields.
pub struct ScalarSum(pub Vec<Scalar>);

impl ScalarField for ScalarSum {
    fn value(&self, p: Point) -> f64 {
        self.0.iter().map(|f| f.value(p)).sum()
    }
    fn grad(&self, p: Point) -> Grad {
        self.0.iter().fold([0.0; 2], |acc, f| {
            let g = f.grad(p);
            [acc[0] + g[0], acc[1] + g[1]]
        })
    }
    fn hess(&self, p: Point) -> Hess {
        self.0.iter().fold([[0.0; 2]; 2], |mut acc, f| {
            let h = f.hess(p);
            for i in 0..2 {
                for j in 0..2 {
                    acc[i][j] += h[i][j];
                }
            }
            acc
        })
    }
}

/// `c · f`.
pub struct ScalarScaled(pub f64, pub Scalar);

impl ScalarField for ScalarScaled {
    fn value(&self, p: Point) -> f64 {
        self.0 * self.1.value(p)
    }
    fn grad(&self, p: Point) -> Grad {
        let g = self.1.grad(p);
        [self.0 * g[0], self.0 * g[1]]
    }
    fn hess(&self, p: Point) -> Hess {
        let h = self.1.hess(p);
        [[self.0 * h[0][0], self.0 * h[0][1]], [self.0 * h[1][0], self.0 * h[1][1]]]
    }
}

/// Vector field from two scalar components.
pub struct Components(pub Scalar, pub Scalar);

impl VectorField for Components {
    fn value(&self, p: Point) -> [f64; 2] {
        [self.0.value(p), self.1.value(p)]
    }
    fn jac(&self, p: Point) -> Jac {
        [self.0.grad(p), self.1.grad(p)]
    }
    fn hess(&self, p: Point) -> VecHess {
        [self.0.hess(p), self.1.hess(p)]
    }
}

/// Divergence-free field `curl ψ = (∂ψ/∂y, -∂ψ/∂x)` of the stream function
/// `ψ = X(x) Y(y)`.
#[derive(Clone)]
pub struct Curl(pub Separable);

impl VectorField for Curl {
    fn value(&self, p: Point) -> [f64; 2] {
        let (a, b) = (self.0.x.eval(p[0]), self.0.y.eval(p[1]));
        [a[0] * b[1], -a[1] * b[0]]
    }
    fn jac(&self, p: Point) -> Jac {
        let (a, b) = (self.0.x.eval(p[0]), self.0.y.eval(p[1]));
        [[a[1] * b[1], a[0] * b[2]], [-a[2] * b[0], -a[1] * b[1]]]
    }
    fn hess(&self, p: Point) -> VecHess {
        let (a, b) = (self.0.x.eval(p[0]), self.0.y.eval(p[1]));
        [
            [[a[2] * b[1], a[1] * b[2]], [a[1] * b[2], a[0] * b[3]]],
            [[-a[3] * b[0], -a[2] * b[1]], [-a[2] * b[1], -a[1] * b[2]]],
        ]
    }
}

/// Sum of vector fields.
pub struct VectorSum(pub Vec<Vector>);

impl VectorField for VectorSum {
    fn value(&self, p: Point) -> [f64; 2] {
        self.0.iter().fold([0.0; 2], |acc, f| {
            let v = f.value(p);
            [acc[0] + v[0], acc[1] + v[1]]
        })
    }
    fn jac(&self, p: Point) -> Jac {
        let mut out = [[0.0; 2]; 2];
        for f in &self.0 {
            let j = f.jac(p);
            for i in 0..2 {
                for k in 0..2 {
                    out[i][k] += j[i][k];
                }
            }
        }
        out
    }
    fn hess(&self, p: Point) -> VecHess {
        let mut out = [[[0.0; 2]; 2]; 2];
        for f in &self.0 {
            let h = f.hess(p);
            for i in 0..2 {
                for j in 0..2 {
                    for k in 0..2 {
                        out[i][j][k] += h[i][j][k];
                    }
                }
            }
        }
        out
    }
}

pub struct Zero;

impl ScalarField for Zero {
    fn value(&self, _: Point) -> f64 {
        0.0
    }
    fn grad(&self, _: Point) -> Grad {
        [0.0; 2]
    }
    fn hess(&self, _: Point) -> Hess {
        [[0.0; 2]; 2]
    }
}

impl VectorField for Zero {
    fn value(&self, _: Point) -> [f64; 2] {
        [0.0; 2]
    }
    fn jac(&self, _: Point) -> Jac {
        [[0.0; 2]; 2]
    }
    fn hess(&self, _: Point) -> VecHess {
        [[[0.0; 2]; 2]; 2]
    }
}

pub fn zero_scalar() -> Scalar {
    Arc::new(Zero)
}

pub fn zero_vector() -> Vector {
    Arc::new(Zero)
}

/// Affine scalar field `c0 + c1 x + c2 y`.
pub fn affine(c0: f64, c1: f64, c2: f64) -> Scalar {
    Arc::new(ScalarSum(vec![
        Arc::new(Separable { x: Curve::constant(c0), y: Curve::constant(1.0) }),
        Arc::new(Separable { x: Curve::poly(&[0.0, c1]), y: Curve::constant(1.0) }),
        Arc::new(Separable { x: Curve::constant(1.0), y: Curve::poly(&[0.0, c2]) }),
    ]))
}

/// Plain function of position, for data that needs no derivatives.
pub type PointFn = Arc<dyn Fn(Point) -> f64 + Send + Sync>;
pub type PointVecFn = Arc<dyn Fn(Point) -> [f64; 2] + Send + Sync>;

pub fn scalar_fn(f: impl Fn(Point) -> f64 + Send + Sync + 'static) -> PointFn {
    Arc::new(f)
}

pub fn vector_fn(f: impl Fn(Point) -> [f64; 2] + Send + Sync + 'static) -> PointVecFn {
    Arc::new(f)
}

#[cfg(test)]
pub(crate) mod fd {
    //! Central finite differences used to check analytic derivatives.
    use super::*;

    const STEP: f64 = 1e-5;

    pub fn scalar_grad(f: &dyn ScalarField, p: Point) -> Grad {
        let d = |k: usize| {
            let (mut a, mut b) = (p, p);
            a[k] += STEP;
            b[k] -= STEP;
            (f.value(a) - f.value(b)) / (2.0 * STEP)
        };
        [d(0), d(1)]
    }

    pub fn scalar_hess(f: &dyn ScalarField, p: Point) -> Hess {
        let d = |k: usize| {
            let (mut a, mut b) = (p, p);
            a[k] += STEP;
            b[k] -= STEP;
            let (ga, gb) = (f.grad(a), f.grad(b));
            [(ga[0] - gb[0]) / (2.0 * STEP), (ga[1] - gb[1]) / (2.0 * STEP)]
        };
        let (c0, c1) = (d(0), d(1));
        [[c0[0], c1[0]], [c0[1], c1[1]]]
    }

    pub fn vector_jac(f: &dyn VectorField, p: Point) -> Jac {
        let d = |k: usize| {
            let (mut a, mut b) = (p, p);
            a[k] += STEP;
            b[k] -= STEP;
            let (va, vb) = (f.value(a), f.value(b));
            [(va[0] - vb[0]) / (2.0 * STEP), (va[1] - vb[1]) / (2.0 * STEP)]
        };
        let (c0, c1) = (d(0), d(1));
        [[c0[0], c1[0]], [c0[1], c1[1]]]
    }

    pub fn vector_hess(f: &dyn VectorField, p: Point) -> VecHess {
        let mut out = [[[0.0; 2]; 2]; 2];
        for k in 0..2 {
            let (mut a, mut b) = (p, p);
            a[k] += STEP;
            b[k] -= STEP;
            let (ja, jb) = (f.jac(a), f.jac(b));
            for i in 0..2 {
                for j in 0..2 {
                    out[i][j][k] = (ja[i][j] - jb[i][j]) / (2.0 * STEP);
                }
            }
        }
        out
    }

    pub fn close(a: f64, b: f64) -> bool {
        (a - b).abs() <= 1e-6 * (1.0 + a.abs().max(b.abs()))
    }
}

#[cfg(test)]
mod tests {
    use super::fd::*;
    use super::*;

    #[test]
    fn curve_derivatives() {
        let c = Curve::product(Curve::poly(&[1.0, -2.0, 0.5, 3.0]), Curve::sin(1.5, 2.0, 0.3));
        let h = 1e-4;
        for &t in &[0.1, 0.7, 1.3] {
            let v = c.eval(t);
            for d in 0..3 {
                let fd = (c.eval(t + h)[d] - c.eval(t - h)[d]) / (2.0 * h);
                assert!(close(fd, v[d + 1]), "derivative {d} at {t}");
            }
        }
    }

    #[test]
    fn curl_is_divergence_free_and_consistent() {
        let f = Curl(Separable { x: Curve::sin(1.0, 3.0, 0.0), y: Curve::exp(2.0, 0.7) });
        for p in [[0.2, 0.3], [0.8, 1.4], [0.5, 1.9]] {
            assert!(f.div(p).abs() < 1e-12);
            let (j, jf) = (f.jac(p), vector_jac(&f, p));
            let (h, hf) = (f.hess(p), vector_hess(&f, p));
            for i in 0..2 {
                for k in 0..2 {
                    assert!(close(j[i][k], jf[i][k]));
                    for l in 0..2 {
                        assert!(close(h[i][k][l], hf[i][k][l]));
                    }
                }
            }
        }
    }

    #[test]
    fn affine_field() {
        let f = affine(1.0, 2.0, -3.0);
        assert_eq!(f.value([0.5, 0.25]), 1.0 + 1.0 - 0.75);
        assert_eq!(f.grad([0.1, 0.2]), [2.0, -3.0]);
        let g = scalar_grad(f.as_ref(), [0.3, 0.3]);
        assert!(close(g[0], 2.0) && close(g[1], -3.0));
        let h = scalar_hess(f.as_ref(), [0.3, 0.3]);
        assert!(h.iter().flatten().all(|v| v.abs() < 1e-6));
    }
}
