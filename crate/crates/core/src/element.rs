//! Reference-element shape functions and their affine/Piola push-forwards.
//!
//! Local numbering: vertex `i` is opposite local edge `i`, and local edge `i`
//! runs from vertex `i+1` to vertex `i+2` (mod 3).

use std::sync::OnceLock;

use nalgebra::SMatrix;

use crate::fields::Jac;
use crate::mesh::Point;
use crate::quadrature::{make_quadrature, Domain};

/// Polynomial degree of the velocity space. Only `k = 2` is shipped.
pub const K: usize = 2;
/// Scalar shape functions per triangle of the enriched P2 space.
pub const P2B_LOCAL: usize = 7;
pub const RT1_LOCAL: usize = 8;

/// Affine map `x = p0 + J ξ` from the reference triangle.
#[derive(Clone, Copy, Debug)]
pub struct Affine {
    pub points: [Point; 3],
    /// `jac[i][j] = ∂x_i/∂ξ_j`.
    pub jac: Jac,
    pub det: f64,
    pub inv: Jac,
    /// Physical gradients of the barycentric coordinates.
    pub grad_bary: [[f64; 2]; 3],
}

impl Affine {
    pub fn new(points: [Point; 3]) -> Self {
        let [p0, p1, p2] = points;
        let jac = [[p1[0] - p0[0], p2[0] - p0[0]], [p1[1] - p0[1], p2[1] - p0[1]]];
        let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
        let inv = [[jac[1][1] / det, -jac[0][1] / det], [-jac[1][0] / det, jac[0][0] / det]];
        let g1 = inv[0];
        let g2 = inv[1];
        let g0 = [-g1[0] - g2[0], -g1[1] - g2[1]];
        Affine { points, jac, det, inv, grad_bary: [g0, g1, g2] }
    }

    pub fn area(&self) -> f64 {
        0.5 * self.det
    }

    pub fn map(&self, b: [f64; 3]) -> Point {
        let [p0, p1, p2] = self.points;
        [b[0] * p0[0] + b[1] * p1[0] + b[2] * p2[0], b[0] * p0[1] + b[1] * p1[1] + b[2] * p2[1]]
    }

    /// Barycentric coordinates of a physical point.
    pub fn bary(&self, x: Point) -> [f64; 3] {
        let d = [x[0] - self.points[0][0], x[1] - self.points[0][1]];
        let xi = self.inv[0][0] * d[0] + self.inv[0][1] * d[1];
        let eta = self.inv[1][0] * d[0] + self.inv[1][1] * d[1];
        [1.0 - xi - eta, xi, eta]
    }
}

/// Barycentric coordinates of the point at parameter `t` along local edge `i`.
pub fn edge_bary(i: usize, t: f64) -> [f64; 3] {
    let mut b = [0.0; 3];
    b[(i + 1) % 3] = 1.0 - t;
    b[(i + 2) % 3] = t;
    b
}

/// Values of the enriched P2 basis: vertices, edge midpoints, cubic bubble.
pub fn p2b_values(b: [f64; 3]) -> [f64; P2B_LOCAL] {
    [
        b[0] * (2.0 * b[0] - 1.0),
        b[1] * (2.0 * b[1] - 1.0),
        b[2] * (2.0 * b[2] - 1.0),
        4.0 * b[1] * b[2],
        4.0 * b[2] * b[0],
        4.0 * b[0] * b[1],
        27.0 * b[0] * b[1] * b[2],
    ]
}

pub fn p2b_grads(b: [f64; 3], g: &[[f64; 2]; 3]) -> [[f64; 2]; P2B_LOCAL] {
    let lin = |c: [f64; 3]| [c[0] * g[0][0] + c[1] * g[1][0] + c[2] * g[2][0], c[0] * g[0][1] + c[1] * g[1][1] + c[2] * g[2][1]];
    [
        lin([4.0 * b[0] - 1.0, 0.0, 0.0]),
        lin([0.0, 4.0 * b[1] - 1.0, 0.0]),
        lin([0.0, 0.0, 4.0 * b[2] - 1.0]),
        lin([0.0, 4.0 * b[2], 4.0 * b[1]]),
        lin([4.0 * b[2], 0.0, 4.0 * b[0]]),
        lin([4.0 * b[1], 4.0 * b[0], 0.0]),
        lin([27.0 * b[1] * b[2], 27.0 * b[0] * b[2], 27.0 * b[0] * b[1]]),
    ]
}

/// Spanning set of RT1 on the reference triangle: `[P1]² + x·P̃1`.
fn rt_span(xi: f64, eta: f64) -> ([[f64; 2]; RT1_LOCAL], [f64; RT1_LOCAL]) {
    (
        [
            [1.0, 0.0],
            [0.0, 1.0],
            [xi, 0.0],
            [eta, 0.0],
            [0.0, xi],
            [0.0, eta],
            [xi * xi, xi * eta],
            [xi * eta, eta * eta],
        ],
        [0.0, 0.0, 1.0, 0.0, 0.0, 1.0, 3.0 * xi, 3.0 * eta],
    )
}

const REF_VERTICES: [Point; 3] = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];

/// Outward unit normal and length of local edge `i` of the reference triangle.
fn ref_edge(i: usize) -> (Point, f64) {
    let a = REF_VERTICES[(i + 1) % 3];
    let b = REF_VERTICES[(i + 2) % 3];
    let len = ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt();
    ([(b[1] - a[1]) / len, -(b[0] - a[0]) / len], len)
}

/// Applies the RT1 degrees of freedom on a triangle to a vector field given in
/// physical coordinates: for each local edge the outward normal moments
/// against the Lagrange functions of its two endpoints, then the two interior
/// moments against constant vectors.
pub fn rt_moments(points: [Point; 3], f: impl Fn(Point) -> [f64; 2]) -> [f64; RT1_LOCAL] {
    let mut out = [0.0; RT1_LOCAL];
    let edge_rule = make_quadrature(Domain::Edge, 8).expect("edge rule");
    for i in 0..3 {
        let a = points[(i + 1) % 3];
        let b = points[(i + 2) % 3];
        let len = ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt();
        let mut n = [(b[1] - a[1]) / len, -(b[0] - a[0]) / len];
        let c = points[i];
        if n[0] * (c[0] - a[0]) + n[1] * (c[1] - a[1]) > 0.0 {
            n = [-n[0], -n[1]];
        }
        for (q, w) in edge_rule.iter() {
            let t = q[1];
            let x = [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])];
            let v = f(x);
            let vn = v[0] * n[0] + v[1] * n[1];
            out[2 * i] += w * len * vn * (1.0 - t);
            out[2 * i + 1] += w * len * vn * t;
        }
    }
    let tri_rule = make_quadrature(Domain::Triangle, 8).expect("triangle rule");
    let aff = Affine::new(points);
    for (q, w) in tri_rule.iter() {
        let v = f(aff.map(q));
        out[6] += w * aff.det * v[0];
        out[7] += w * aff.det * v[1];
    }
    out
}

/// Coefficients of the reference RT1 basis in the spanning set; column `k`
/// holds shape function `k`.
fn rt_reference_coefficients() -> &'static SMatrix<f64, RT1_LOCAL, RT1_LOCAL> {
    static COEFFS: OnceLock<SMatrix<f64, RT1_LOCAL, RT1_LOCAL>> = OnceLock::new();
    COEFFS.get_or_init(|| {
        let mut vandermonde = SMatrix::<f64, RT1_LOCAL, RT1_LOCAL>::zeros();
        for j in 0..RT1_LOCAL {
            let m = rt_moments(REF_VERTICES, |x| rt_span(x[0], x[1]).0[j]);
            for i in 0..RT1_LOCAL {
                vandermonde[(i, j)] = m[i];
            }
        }
        debug_assert!(ref_edge(0).1 > 0.0);
        vandermonde.try_inverse().expect("RT1 degrees of freedom are unisolvent")
    })
}

/// Reference RT1 shape functions and their divergences at `(ξ, η)`.
pub fn rt_reference(xi: f64, eta: f64) -> ([[f64; 2]; RT1_LOCAL], [f64; RT1_LOCAL]) {
    let c = rt_reference_coefficients();
    let (span, span_div) = rt_span(xi, eta);
    let mut vals = [[0.0; 2]; RT1_LOCAL];
    let mut divs = [0.0; RT1_LOCAL];
    for k in 0..RT1_LOCAL {
        for j in 0..RT1_LOCAL {
            let a = c[(j, k)];
            vals[k][0] += a * span[j][0];
            vals[k][1] += a * span[j][1];
            divs[k] += a * span_div[j];
        }
    }
    (vals, divs)
}

/// Physical RT1 shape functions on `aff`, dual to [`rt_moments`] on that triangle.
///
/// Edge functions are contravariant Piola images of the reference ones; the
/// interior pair is recombined with `J^{-1}` because interior moments against
/// constant vectors transform with `J^T`.
pub fn rt_physical(aff: &Affine, b: [f64; 3]) -> ([[f64; 2]; RT1_LOCAL], [f64; RT1_LOCAL]) {
    let (rv, rd) = rt_reference(b[1], b[2]);
    let j = aff.jac;
    let piola = |v: [f64; 2]| [(j[0][0] * v[0] + j[0][1] * v[1]) / aff.det, (j[1][0] * v[0] + j[1][1] * v[1]) / aff.det];
    let mut vals = [[0.0; 2]; RT1_LOCAL];
    let mut divs = [0.0; RT1_LOCAL];
    for k in 0..6 {
        vals[k] = piola(rv[k]);
        divs[k] = rd[k] / aff.det;
    }
    let (i0, i1) = (piola(rv[6]), piola(rv[7]));
    let (d0, d1) = (rd[6] / aff.det, rd[7] / aff.det);
    for c in 0..2 {
        let (a0, a1) = (aff.inv[0][c], aff.inv[1][c]);
        vals[6 + c] = [a0 * i0[0] + a1 * i1[0], a0 * i0[1] + a1 * i1[1]];
        divs[6 + c] = a0 * d0 + a1 * d1;
    }
    (vals, divs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_triangle(rng: &mut ChaCha8Rng) -> [Point; 3] {
        loop {
            let p: [Point; 3] = std::array::from_fn(|_| [rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)]);
            let a = Affine::new(p);
            if a.det > 0.2 {
                return p;
            }
        }
    }

    #[test]
    fn p2_partition_of_unity_and_lagrange_property() {
        for b in [[0.2, 0.3, 0.5], [1.0 / 3.0; 3], [0.7, 0.1, 0.2]] {
            let v = p2b_values(b);
            let s: f64 = v[..6].iter().sum();
            assert!((s - 1.0).abs() < 1e-14);
        }
        let nodes = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [0.0, 0.5, 0.5], [0.5, 0.0, 0.5], [0.5, 0.5, 0.0]];
        for (i, n) in nodes.iter().enumerate() {
            let v = p2b_values(*n);
            for k in 0..P2B_LOCAL {
                let expected = if k == i { 1.0 } else { 0.0 };
                assert!((v[k] - expected).abs() < 1e-14);
            }
        }
        assert!((p2b_values([1.0 / 3.0; 3])[6] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn p2_gradients_match_finite_differences() {
        let aff = Affine::new([[0.1, 0.2], [1.3, 0.4], [0.5, 1.1]]);
        let x = aff.map([0.2, 0.3, 0.5]);
        let g = p2b_grads(aff.bary(x), &aff.grad_bary);
        let h = 1e-6;
        for d in 0..2 {
            let (mut xp, mut xm) = (x, x);
            xp[d] += h;
            xm[d] -= h;
            let (vp, vm) = (p2b_values(aff.bary(xp)), p2b_values(aff.bary(xm)));
            for k in 0..P2B_LOCAL {
                assert!(((vp[k] - vm[k]) / (2.0 * h) - g[k][d]).abs() < 1e-7);
            }
        }
    }

    /// Independent construction: invert the moment matrix of the spanning set
    /// directly on the physical triangle.
    fn rt_physical_direct(points: [Point; 3], x: Point) -> [[f64; 2]; RT1_LOCAL] {
        let c = [(points[0][0] + points[1][0] + points[2][0]) / 3.0, (points[0][1] + points[1][1] + points[2][1]) / 3.0];
        let span = |x: Point| rt_span(x[0] - c[0], x[1] - c[1]).0;
        let mut v = DMatrix::<f64>::zeros(RT1_LOCAL, RT1_LOCAL);
        for j in 0..RT1_LOCAL {
            let m = rt_moments(points, |x| span(x)[j]);
            for i in 0..RT1_LOCAL {
                v[(i, j)] = m[i];
            }
        }
        let coeffs = v.try_inverse().unwrap();
        let s = span(x);
        std::array::from_fn(|k| {
            let mut out = [0.0; 2];
            for j in 0..RT1_LOCAL {
                out[0] += coeffs[(j, k)] * s[j][0];
                out[1] += coeffs[(j, k)] * s[j][1];
            }
            out
        })
    }

    #[test]
    fn piola_basis_is_dual_to_physical_moments() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let pts = random_triangle(&mut rng);
            let aff = Affine::new(pts);
            for k in 0..RT1_LOCAL {
                let m = rt_moments(pts, |x| rt_physical(&aff, aff.bary(x)).0[k]);
                for i in 0..RT1_LOCAL {
                    let expected = if i == k { 1.0 } else { 0.0 };
                    assert!((m[i] - expected).abs() < 1e-12, "moment {i} of basis {k}: {}", m[i]);
                }
            }
            let x = aff.map([0.2, 0.5, 0.3]);
            let direct = rt_physical_direct(pts, x);
            let piola = rt_physical(&aff, aff.bary(x)).0;
            for k in 0..RT1_LOCAL {
                assert!((direct[k][0] - piola[k][0]).abs() < 1e-10 && (direct[k][1] - piola[k][1]).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn piola_preserves_edge_moments() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let pts = random_triangle(&mut rng);
        let aff = Affine::new(pts);
        for k in 0..6 {
            let reference = rt_moments(REF_VERTICES, |x| rt_reference(x[0], x[1]).0[k]);
            let mapped = rt_moments(pts, |x| {
                let (rv, _) = rt_reference(aff.bary(x)[1], aff.bary(x)[2]);
                let j = aff.jac;
                [(j[0][0] * rv[k][0] + j[0][1] * rv[k][1]) / aff.det, (j[1][0] * rv[k][0] + j[1][1] * rv[k][1]) / aff.det]
            });
            for i in 0..6 {
                assert!((reference[i] - mapped[i]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn rt_divergence_matches_finite_differences() {
        let aff = Affine::new([[0.0, 0.0], [0.8, 0.1], [0.3, 0.9]]);
        let x = aff.map([0.3, 0.3, 0.4]);
        let (_, d) = rt_physical(&aff, aff.bary(x));
        let h = 1e-6;
        for k in 0..RT1_LOCAL {
            let mut div = 0.0;
            for c in 0..2 {
                let (mut xp, mut xm) = (x, x);
                xp[c] += h;
                xm[c] -= h;
                div += (rt_physical(&aff, aff.bary(xp)).0[k][c] - rt_physical(&aff, aff.bary(xm)).0[k][c]) / (2.0 * h);
            }
            assert!((div - d[k]).abs() < 1e-6 * (1.0 + d[k].abs()));
        }
    }

    #[test]
    fn normal_trace_is_linear_on_each_edge() {
        let aff = Affine::new([[0.0, 0.0], [1.0, 0.2], [0.1, 0.7]]);
        for k in 0..RT1_LOCAL {
            for i in 0..3 {
                let a = aff.points[(i + 1) % 3];
                let b = aff.points[(i + 2) % 3];
                let n = [b[1] - a[1], -(b[0] - a[0])];
                let vn = |t: f64| {
                    let v = rt_physical(&aff, edge_bary(i, t)).0[k];
                    v[0] * n[0] + v[1] * n[1]
                };
                // second difference of a linear function vanishes
                let r = vn(0.0) - 2.0 * vn(0.5) + vn(1.0);
                assert!(r.abs() < 1e-12 * (1.0 + vn(0.0).abs()));
            }
        }
    }
}
