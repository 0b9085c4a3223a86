//! Two-subdomain triangulations of a pair of axis-aligned rectangles.
//!
//! Triangles carry a [`Subdomain`] tag and every edge stores one globally
//! oriented unit normal. On the interface that normal is `n^s`, pointing out
//! of the Stokes region into the Darcy region. Local edge `i` of a triangle is
//! the edge opposite local vertex `i`; `edge_signs[i]` is `+1` when the stored
//! normal is the outward normal of that triangle.

use std::collections::HashMap;
use std::io::Write;

use crate::error::{Error, Result};

pub type Point = [f64; 2];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Subdomain {
    Stokes,
    Darcy,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EdgeTag {
    /// Shared by two triangles of the same subdomain.
    Interior,
    /// Outer boundary of the Stokes region (`Γ^s`).
    StokesBoundary,
    /// Outer boundary of the Darcy region (`Γ^d`).
    DarcyBoundary,
    /// Shared by a Stokes and a Darcy triangle (`Γ`).
    Interface,
}

/// Axis-aligned rectangle `(x0, x1) × (y0, y1)`.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Rect {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

impl Rect {
    pub fn new(x0: f64, x1: f64, y0: f64, y1: f64) -> Self {
        Rect { x0, x1, y0, y1 }
    }

    pub fn width(&self) -> f64 {
        self.x1 - self.x0
    }

    pub fn height(&self) -> f64 {
        self.y1 - self.y0
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn contains(&self, p: Point, tol: f64) -> bool {
        p[0] >= self.x0 - tol && p[0] <= self.x1 + tol && p[1] >= self.y0 - tol && p[1] <= self.y1 + tol
    }
}

/// The two rectangles and the straight interface between them.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Geometry {
    pub stokes: Rect,
    pub darcy: Rect,
    /// Unit normal on the interface pointing from the Stokes into the Darcy region.
    pub normal: Point,
    /// Endpoints of the interface segment.
    pub interface: [Point; 2],
}

impl Geometry {
    /// Validates that the rectangles are non-degenerate and share one full edge.
    pub fn new(stokes: Rect, darcy: Rect) -> Result<Self> {
        for (name, r) in [("stokes", &stokes), ("darcy", &darcy)] {
            if !(r.width() > 0.0 && r.height() > 0.0) || !r.width().is_finite() || !r.height().is_finite() {
                return Err(Error::Geometry(format!("{name} rectangle {r:?} is degenerate")));
            }
        }
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-12 * (1.0 + a.abs().max(b.abs()));
        let same_x = close(stokes.x0, darcy.x0) && close(stokes.x1, darcy.x1);
        let same_y = close(stokes.y0, darcy.y0) && close(stokes.y1, darcy.y1);
        let (normal, interface) = if same_x && close(stokes.y0, darcy.y1) {
            ([0.0, -1.0], [[stokes.x0, stokes.y0], [stokes.x1, stokes.y0]])
        } else if same_x && close(stokes.y1, darcy.y0) {
            ([0.0, 1.0], [[stokes.x0, stokes.y1], [stokes.x1, stokes.y1]])
        } else if same_y && close(stokes.x0, darcy.x1) {
            ([-1.0, 0.0], [[stokes.x0, stokes.y0], [stokes.x0, stokes.y1]])
        } else if same_y && close(stokes.x1, darcy.x0) {
            ([1.0, 0.0], [[stokes.x1, stokes.y0], [stokes.x1, stokes.y1]])
        } else {
            return Err(Error::Geometry(format!(
                "rectangles {stokes:?} and {darcy:?} do not share a full edge"
            )));
        };
        Ok(Geometry { stokes, darcy, normal, interface })
    }

    /// Unit tangent on the interface: `n^s` rotated by +90 degrees.
    pub fn tangent(&self) -> Point {
        [-self.normal[1], self.normal[0]]
    }

    pub fn interface_length(&self) -> f64 {
        dist(self.interface[0], self.interface[1])
    }

    pub fn rect(&self, sub: Subdomain) -> &Rect {
        match sub {
            Subdomain::Stokes => &self.stokes,
            Subdomain::Darcy => &self.darcy,
        }
    }

    /// `true` when `p` lies on the interface segment.
    pub fn on_interface(&self, p: Point, tol: f64) -> bool {
        let [a, b] = self.interface;
        let t = [b[0] - a[0], b[1] - a[1]];
        let len2 = t[0] * t[0] + t[1] * t[1];
        let s = ((p[0] - a[0]) * t[0] + (p[1] - a[1]) * t[1]) / len2;
        let q = [a[0] + s * t[0], a[1] + s * t[1]];
        s >= -tol && s <= 1.0 + tol && dist(p, q) <= tol
    }
}

#[derive(Clone, Debug)]
pub struct Triangle {
    /// Counter-clockwise vertex indices.
    pub vertices: [usize; 3],
    pub subdomain: Subdomain,
    /// Local edge `i` is opposite local vertex `i`.
    pub edges: [usize; 3],
    /// `+1` if the stored edge normal is outward for this triangle, `-1` otherwise.
    pub edge_signs: [f64; 3],
}

#[derive(Clone, Debug)]
pub struct Edge {
    /// Endpoints with `vertices[0] < vertices[1]`.
    pub vertices: [usize; 2],
    pub tag: EdgeTag,
    pub normal: Point,
    pub length: f64,
    /// Incident triangles. On the interface, slot 0 is the Stokes triangle and
    /// slot 1 the Darcy triangle.
    pub triangles: [Option<usize>; 2],
}

/// One interface edge with its two neighbours.
#[derive(Clone, Copy, Debug)]
pub struct InterfaceEdge {
    pub edge: usize,
    pub stokes_triangle: usize,
    pub darcy_triangle: usize,
    pub normal: Point,
}

#[derive(Clone, Debug)]
pub struct Mesh {
    pub geometry: Geometry,
    pub vertices: Vec<Point>,
    pub triangles: Vec<Triangle>,
    pub edges: Vec<Edge>,
    /// Largest triangle diameter.
    pub h: f64,
}

pub(crate) fn dist(a: Point, b: Point) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

fn signed_area(a: Point, b: Point, c: Point) -> f64 {
    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
}

/// Builds the structured two-rectangle mesh with `n0` cells per unit length.
pub fn build_two_domain_mesh(stokes: Rect, darcy: Rect, n0: usize) -> Result<Mesh> {
    if n0 == 0 {
        return Err(Error::Argument("n0 must be at least 1".into()));
    }
    let geometry = Geometry::new(stokes, darcy)?;
    let mut vertices: Vec<Point> = Vec::new();
    let mut lookup: HashMap<(i64, i64), usize> = HashMap::new();
    let mut vertex_id = |p: Point, vertices: &mut Vec<Point>| -> usize {
        let key = ((p[0] * 1e9).round() as i64, (p[1] * 1e9).round() as i64);
        *lookup.entry(key).or_insert_with(|| {
            vertices.push(p);
            vertices.len() - 1
        })
    };
    let mut tris: Vec<([usize; 3], Subdomain)> = Vec::new();
    for (sub, r) in [(Subdomain::Stokes, stokes), (Subdomain::Darcy, darcy)] {
        let nx = ((r.width() * n0 as f64).round() as usize).max(1);
        let ny = ((r.height() * n0 as f64).round() as usize).max(1);
        let node = |i: usize, j: usize| -> Point {
            // exact endpoints so that interface vertices coincide bit-for-bit
            let x = if i == nx { r.x1 } else { r.x0 + r.width() * i as f64 / nx as f64 };
            let y = if j == ny { r.y1 } else { r.y0 + r.height() * j as f64 / ny as f64 };
            [x, y]
        };
        for j in 0..ny {
            for i in 0..nx {
                let v00 = vertex_id(node(i, j), &mut vertices);
                let v10 = vertex_id(node(i + 1, j), &mut vertices);
                let v01 = vertex_id(node(i, j + 1), &mut vertices);
                let v11 = vertex_id(node(i + 1, j + 1), &mut vertices);
                // checkerboard diagonals, keyed on absolute cell position
                let gi = (node(i, j)[0] * n0 as f64).round() as i64;
                let gj = (node(i, j)[1] * n0 as f64).round() as i64;
                if (gi + gj).rem_euclid(2) == 0 {
                    tris.push(([v00, v10, v11], sub));
                    tris.push(([v00, v11, v01], sub));
                } else {
                    tris.push(([v00, v10, v01], sub));
                    tris.push(([v10, v11, v01], sub));
                }
            }
        }
    }
    Mesh::from_triangles(geometry, vertices, tris)
}

impl Mesh {
    /// Builds edges, tags, normals and incidence from a triangle list.
    pub fn from_triangles(geometry: Geometry, vertices: Vec<Point>, tris: Vec<([usize; 3], Subdomain)>) -> Result<Mesh> {
        let mut edge_index: HashMap<(usize, usize), usize> = HashMap::new();
        let mut edges: Vec<Edge> = Vec::new();
        let mut triangles = Vec::with_capacity(tris.len());
        let mut h: f64 = 0.0;
        for (t, (vs, sub)) in tris.iter().enumerate() {
            let area = signed_area(vertices[vs[0]], vertices[vs[1]], vertices[vs[2]]);
            if area <= 0.0 {
                return Err(Error::Geometry(format!("triangle {t} is not counter-clockwise (area {area})")));
            }
            let mut tri_edges = [0; 3];
            for i in 0..3 {
                let a = vs[(i + 1) % 3];
                let b = vs[(i + 2) % 3];
                let key = (a.min(b), a.max(b));
                let id = *edge_index.entry(key).or_insert_with(|| {
                    let (pa, pb) = (vertices[key.0], vertices[key.1]);
                    edges.push(Edge {
                        vertices: [key.0, key.1],
                        tag: EdgeTag::Interior,
                        normal: [0.0, 0.0],
                        length: dist(pa, pb),
                        triangles: [None, None],
                    });
                    edges.len() - 1
                });
                let e = &mut edges[id];
                h = h.max(e.length);
                if e.triangles[0].is_none() {
                    e.triangles[0] = Some(t);
                } else if e.triangles[1].is_none() {
                    e.triangles[1] = Some(t);
                } else {
                    return Err(Error::Geometry(format!("edge {key:?} shared by more than two triangles")));
                }
                tri_edges[i] = id;
            }
            triangles.push(Triangle { vertices: *vs, subdomain: *sub, edges: tri_edges, edge_signs: [0.0; 3] });
        }
        for e in edges.iter_mut() {
            let (pa, pb) = (vertices[e.vertices[0]], vertices[e.vertices[1]]);
            e.normal = [(pb[1] - pa[1]) / e.length, -(pb[0] - pa[0]) / e.length];
            match e.triangles {
                [Some(t0), Some(t1)] => {
                    let (s0, s1) = (triangles[t0].subdomain, triangles[t1].subdomain);
                    if s0 != s1 {
                        e.tag = EdgeTag::Interface;
                        if s0 == Subdomain::Darcy {
                            e.triangles = [Some(t1), Some(t0)];
                        }
                    }
                }
                [Some(t0), None] => {
                    e.tag = match triangles[t0].subdomain {
                        Subdomain::Stokes => EdgeTag::StokesBoundary,
                        Subdomain::Darcy => EdgeTag::DarcyBoundary,
                    };
                }
                _ => unreachable!(),
            }
        }
        // orient interface normals as n^s; outward normals on the outer boundary
        for e in edges.iter_mut() {
            let t = e.triangles[0].unwrap();
            let outward = outward_normal(&vertices, &triangles[t], e);
            match e.tag {
                EdgeTag::Interface | EdgeTag::StokesBoundary | EdgeTag::DarcyBoundary => e.normal = outward,
                EdgeTag::Interior => {}
            }
        }
        for tri in triangles.iter_mut() {
            for i in 0..3 {
                let e = &edges[tri.edges[i]];
                let outward = outward_normal(&vertices, tri, e);
                let dot = outward[0] * e.normal[0] + outward[1] * e.normal[1];
                tri.edge_signs[i] = if dot > 0.0 { 1.0 } else { -1.0 };
            }
        }
        Ok(Mesh { geometry, vertices, triangles, edges, h })
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn triangle_points(&self, t: usize) -> [Point; 3] {
        let v = self.triangles[t].vertices;
        [self.vertices[v[0]], self.vertices[v[1]], self.vertices[v[2]]]
    }

    pub fn area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangle_points(t);
        signed_area(a, b, c)
    }

    pub fn diameter(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangle_points(t);
        dist(a, b).max(dist(b, c)).max(dist(c, a))
    }

    pub fn inradius(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangle_points(t);
        2.0 * signed_area(a, b, c) / (dist(a, b) + dist(b, c) + dist(c, a))
    }

    pub fn triangles_in(&self, sub: Subdomain) -> impl Iterator<Item = usize> + '_ {
        self.triangles.iter().enumerate().filter(move |(_, t)| t.subdomain == sub).map(|(i, _)| i)
    }

    /// Interface edges ordered as stored, with the Stokes and Darcy neighbours
    /// and the normal `n^s`.
    pub fn interface_edges(&self) -> Vec<InterfaceEdge> {
        self.edges
            .iter()
            .enumerate()
            .filter(|(_, e)| e.tag == EdgeTag::Interface)
            .map(|(i, e)| InterfaceEdge {
                edge: i,
                stokes_triangle: e.triangles[0].unwrap(),
                darcy_triangle: e.triangles[1].unwrap(),
                normal: e.normal,
            })
            .collect()
    }

    /// Red refinement: every triangle is split into four by its edge midpoints.
    pub fn refine_uniform(&self) -> Result<Mesh> {
        let mut vertices = self.vertices.clone();
        let mids: Vec<usize> = self
            .edges
            .iter()
            .map(|e| {
                let (a, b) = (self.vertices[e.vertices[0]], self.vertices[e.vertices[1]]);
                vertices.push([0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])]);
                vertices.len() - 1
            })
            .collect();
        let mut tris = Vec::with_capacity(4 * self.triangles.len());
        for t in &self.triangles {
            let [v0, v1, v2] = t.vertices;
            let [m0, m1, m2] = [mids[t.edges[0]], mids[t.edges[1]], mids[t.edges[2]]];
            tris.push(([v0, m2, m1], t.subdomain));
            tris.push(([m2, v1, m0], t.subdomain));
            tris.push(([m1, m0, v2], t.subdomain));
            tris.push(([m0, m1, m2], t.subdomain));
        }
        Mesh::from_triangles(self.geometry, vertices, tris)
    }

    /// Checks every structural invariant; returns a description of the first violation.
    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Geometry(m));
        for t in 0..self.num_triangles() {
            if self.area(t) <= 0.0 {
                return fail(format!("triangle {t} has non-positive area"));
            }
        }
        for (i, e) in self.edges.iter().enumerate() {
            let count = e.triangles.iter().flatten().count();
            let expected = match e.tag {
                EdgeTag::Interior | EdgeTag::Interface => 2,
                EdgeTag::StokesBoundary | EdgeTag::DarcyBoundary => 1,
            };
            if count != expected {
                return fail(format!("edge {i} ({:?}) has {count} neighbours", e.tag));
            }
            let n = (e.normal[0].powi(2) + e.normal[1].powi(2)).sqrt();
            if (n - 1.0).abs() > 1e-12 {
                return fail(format!("edge {i} normal is not unit"));
            }
            if e.tag == EdgeTag::Interface {
                let [ts, td] = [e.triangles[0].unwrap(), e.triangles[1].unwrap()];
                if self.triangles[ts].subdomain != Subdomain::Stokes || self.triangles[td].subdomain != Subdomain::Darcy {
                    return fail(format!("interface edge {i} neighbours are misordered"));
                }
                let g = self.geometry.normal;
                if (e.normal[0] - g[0]).abs() > 1e-12 || (e.normal[1] - g[1]).abs() > 1e-12 {
                    return fail(format!("interface edge {i} normal is not n^s"));
                }
            }
        }
        let euler = self.num_vertices() as i64 - self.num_edges() as i64 + self.num_triangles() as i64;
        if euler != 1 {
            return fail(format!("Euler characteristic {euler} != 1"));
        }
        Ok(())
    }

    /// Legacy VTK ASCII dump of the triangulation with the subdomain as cell data.
    pub fn write_vtk<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "# vtk DataFile Version 3.0")?;
        writeln!(out, "stokes-darcy mesh")?;
        writeln!(out, "ASCII")?;
        writeln!(out, "DATASET UNSTRUCTURED_GRID")?;
        writeln!(out, "POINTS {} double", self.num_vertices())?;
        for p in &self.vertices {
            writeln!(out, "{} {} 0", p[0], p[1])?;
        }
        let nt = self.num_triangles();
        writeln!(out, "CELLS {} {}", nt, 4 * nt)?;
        for t in &self.triangles {
            writeln!(out, "3 {} {} {}", t.vertices[0], t.vertices[1], t.vertices[2])?;
        }
        writeln!(out, "CELL_TYPES {nt}")?;
        for _ in 0..nt {
            writeln!(out, "5")?;
        }
        writeln!(out, "CELL_DATA {nt}")?;
        writeln!(out, "SCALARS subdomain int 1")?;
        writeln!(out, "LOOKUP_TABLE default")?;
        for t in &self.triangles {
            writeln!(out, "{}", if t.subdomain == Subdomain::Stokes { 0 } else { 1 })?;
        }
        Ok(())
    }
}

fn outward_normal(vertices: &[Point], tri: &Triangle, e: &Edge) -> Point {
    let (pa, pb) = (vertices[e.vertices[0]], vertices[e.vertices[1]]);
    let opposite = tri.vertices.iter().copied().find(|v| !e.vertices.contains(v)).unwrap();
    let po = vertices[opposite];
    let n = [(pb[1] - pa[1]) / e.length, -(pb[0] - pa[0]) / e.length];
    let to_opposite = [po[0] - pa[0], po[1] - pa[1]];
    if n[0] * to_opposite[0] + n[1] * to_opposite[1] > 0.0 {
        [-n[0], -n[1]]
    } else {
        n
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn squares(n0: usize) -> Mesh {
        build_two_domain_mesh(Rect::new(0.0, 1.0, 1.0, 2.0), Rect::new(0.0, 1.0, 0.0, 1.0), n0).unwrap()
    }

    #[test]
    fn counts_on_two_unit_squares() {
        let m = squares(1);
        assert_eq!(m.num_triangles(), 4);
        assert_eq!(m.interface_edges().len(), 1);
        m.validate().unwrap();
        let m = squares(2);
        assert_eq!(m.num_triangles(), 16);
        assert_eq!(m.interface_edges().len(), 2);
        m.validate().unwrap();
    }

    #[test]
    fn rejects_bad_geometry() {
        let bad = build_two_domain_mesh(Rect::new(0.0, 0.0, 1.0, 2.0), Rect::new(0.0, 1.0, 0.0, 1.0), 1);
        assert!(matches!(bad, Err(Error::Geometry(_))));
        let apart = build_two_domain_mesh(Rect::new(0.0, 1.0, 1.5, 2.0), Rect::new(0.0, 1.0, 0.0, 1.0), 1);
        assert!(matches!(apart, Err(Error::Geometry(_))));
        let zero = build_two_domain_mesh(Rect::new(0.0, 1.0, 1.0, 2.0), Rect::new(0.0, 1.0, 0.0, 1.0), 0);
        assert!(matches!(zero, Err(Error::Argument(_))));
    }

    #[test]
    fn refinement_quadruples_and_halves_h() {
        let m = squares(1);
        let r = m.refine_uniform().unwrap();
        assert_eq!(r.num_triangles(), 16);
        assert!((r.h - m.h / 2.0).abs() < 1e-15);
        let rr = r.refine_uniform().unwrap();
        assert_eq!(rr.num_triangles(), 64);
        rr.validate().unwrap();
        assert_eq!(r.interface_edges().len(), 2 * m.interface_edges().len());
    }

    #[test]
    fn interface_normals_point_into_darcy() {
        let m = squares(2).refine_uniform().unwrap();
        let mut total = 0.0;
        for ie in m.interface_edges() {
            assert_eq!(ie.normal, [0.0, -1.0]);
            let ps = m.triangle_points(ie.stokes_triangle);
            let pd = m.triangle_points(ie.darcy_triangle);
            let cs = (ps[0][1] + ps[1][1] + ps[2][1]) / 3.0;
            let cd = (pd[0][1] + pd[1][1] + pd[2][1]) / 3.0;
            assert!((cd - cs) * ie.normal[1] > 0.0);
            total += m.edges[ie.edge].length;
        }
        assert!((total - 1.0).abs() < 1e-14);
    }

    #[test]
    fn shape_regularity_is_preserved() {
        let m = squares(2);
        let ratio = |m: &Mesh| (0..m.num_triangles()).map(|t| m.diameter(t) / m.inradius(t)).fold(0.0, f64::max);
        let r0 = ratio(&m);
        let m1 = m.refine_uniform().unwrap();
        let m2 = m1.refine_uniform().unwrap();
        assert!((ratio(&m1) - r0).abs() < 1e-10);
        assert!((ratio(&m2) - r0).abs() < 1e-10);
    }

    #[test]
    fn side_by_side_rectangles() {
        let m = build_two_domain_mesh(Rect::new(0.0, 1.0, 0.0, 1.0), Rect::new(1.0, 2.0, 0.0, 1.0), 3).unwrap();
        m.validate().unwrap();
        assert_eq!(m.geometry.normal, [1.0, 0.0]);
        assert_eq!(m.interface_edges().len(), 3);
    }

    #[test]
    fn vtk_dump_has_all_cells() {
        let m = squares(1);
        let mut buf = Vec::new();
        m.write_vtk(&mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert!(s.contains("CELLS 4 16"));
        assert!(s.contains("POINTS 6 double"));
    }
}
