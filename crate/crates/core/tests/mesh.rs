use std::collections::HashSet;

use sdoc::mesh::{build_two_domain_mesh, EdgeTag, Geometry, Rect, Subdomain};

fn unit_pair(n0: usize) -> sdoc::mesh::Mesh {
    build_two_domain_mesh(Rect::new(0.0, 1.0, 1.0, 2.0), Rect::new(0.0, 1.0, 0.0, 1.0), n0).unwrap()
}

#[test]
fn counts_match_structured_grid() {
    for n in [1, 2, 5] {
        let m = unit_pair(n);
        assert_eq!(m.num_triangles(), 4 * n * n);
        assert_eq!(m.num_vertices(), (n + 1) * (2 * n + 1));
        // Euler: V - E + F = 1 for a simply connected triangulation
        assert_eq!(m.num_vertices() + m.num_triangles(), m.num_edges() + 1);
        assert_eq!(m.interface_edges().len(), n);
        m.validate().unwrap();
    }
}

#[test]
fn areas_sum_per_subdomain() {
    let m = unit_pair(3);
    for sub in [Subdomain::Stokes, Subdomain::Darcy] {
        let a: f64 = m.triangles_in(sub).map(|t| m.area(t)).sum();
        assert!((a - 1.0).abs() < 1e-14);
    }
    assert!((m.h - 2f64.sqrt() / 3.0).abs() < 1e-14);
}

#[test]
fn interface_normal_points_into_darcy() {
    let m = unit_pair(4);
    for ie in m.interface_edges() {
        assert_eq!(ie.normal, [0.0, -1.0]);
        assert_eq!(m.triangles[ie.stokes_triangle].subdomain, Subdomain::Stokes);
        assert_eq!(m.triangles[ie.darcy_triangle].subdomain, Subdomain::Darcy);
        let e = &m.edges[ie.edge];
        assert_eq!(e.tag, EdgeTag::Interface);
        for v in e.vertices {
            assert_eq!(m.vertices[v][1], 1.0);
        }
    }
    assert_eq!(m.geometry.tangent(), [1.0, 0.0]);
}

#[test]
fn boundary_tags_follow_subdomain() {
    let m = unit_pair(2);
    let mut boundary_length = [0.0; 2];
    for e in &m.edges {
        match e.tag {
            EdgeTag::StokesBoundary => boundary_length[0] += e.length,
            EdgeTag::DarcyBoundary => boundary_length[1] += e.length,
            _ => {}
        }
    }
    assert!((boundary_length[0] - 3.0).abs() < 1e-14);
    assert!((boundary_length[1] - 3.0).abs() < 1e-14);
}

#[test]
fn edge_signs_are_opposite_on_shared_edges() {
    let m = unit_pair(3);
    for (i, e) in m.edges.iter().enumerate() {
        if let [Some(a), Some(b)] = e.triangles {
            let sign = |t: usize| {
                let k = m.triangles[t].edges.iter().position(|&x| x == i).unwrap();
                m.triangles[t].edge_signs[k]
            };
            assert_eq!(sign(a) * sign(b), -1.0);
        }
    }
}

#[test]
fn refinement_quarters_triangles_and_keeps_interface_conforming() {
    let m = unit_pair(2);
    let r = m.refine_uniform().unwrap();
    assert_eq!(r.num_triangles(), 4 * m.num_triangles());
    assert!((r.h - m.h / 2.0).abs() < 1e-14);
    assert_eq!(r.interface_edges().len(), 2 * m.interface_edges().len());
    r.validate().unwrap();
    let coarse: HashSet<_> = m.vertices.iter().map(|p| (p[0].to_bits(), p[1].to_bits())).collect();
    let fine: HashSet<_> = r.vertices.iter().map(|p| (p[0].to_bits(), p[1].to_bits())).collect();
    assert!(coarse.is_subset(&fine));
}

#[test]
fn other_arrangements_are_accepted() {
    let g = Geometry::new(Rect::new(1.0, 3.0, 0.0, 1.0), Rect::new(0.0, 1.0, 0.0, 1.0)).unwrap();
    assert_eq!(g.normal, [-1.0, 0.0]);
    assert_eq!(g.tangent(), [0.0, -1.0]);
    let m = build_two_domain_mesh(g.stokes, g.darcy, 2).unwrap();
    assert_eq!(m.interface_edges().len(), 2);
    let a: f64 = m.triangles_in(Subdomain::Stokes).map(|t| m.area(t)).sum();
    assert!((a - 2.0).abs() < 1e-14);
}

#[test]
fn rejects_bad_input() {
    assert!(Geometry::new(Rect::new(0.0, 1.0, 1.0, 2.0), Rect::new(0.0, 2.0, 0.0, 1.0)).is_err());
    assert!(Geometry::new(Rect::new(0.0, 0.0, 1.0, 2.0), Rect::new(0.0, 0.0, 0.0, 1.0)).is_err());
    assert!(build_two_domain_mesh(Rect::new(0.0, 1.0, 1.0, 2.0), Rect::new(0.0, 1.0, 0.0, 1.0), 0).is_err());
}

#[test]
fn vtk_lists_every_cell() {
    let m = unit_pair(1);
    let mut buf = Vec::new();
    m.write_vtk(&mut buf).unwrap();
    let s = String::from_utf8(buf).unwrap();
    assert!(s.contains(&format!("CELLS {} ", m.num_triangles())));
    assert!(s.contains(&format!("POINTS {} double", m.num_vertices())));
}
