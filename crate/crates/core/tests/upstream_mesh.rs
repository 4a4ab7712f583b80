use std::f64::consts::TAU;

use elweno::geometry::polygon_area;
use elweno::velocity::{modified_velocity_at, trace_offset, trace_to, Label, NodeVelocity, UpstreamMesh};
use elweno::{Boundary, GridSpec, Point};
use proptest::prelude::*;

fn grid(n: usize, m: usize, bc: Boundary) -> GridSpec {
    GridSpec::new([-1.0, 2.0, 0.0, 1.5], n, m, (bc, bc)).unwrap()
}

fn nodes_of(g: &GridSpec, f: impl Fn(f64, f64) -> [f64; 2]) -> Vec<[f64; 2]> {
    let mut v = Vec::new();
    for j in 0..=g.ny {
        for i in 0..=g.nx {
            v.push(f(g.node_x(i as isize), g.node_y(j as isize)));
        }
    }
    v
}

/// Traced boundary nodes in counter-clockwise order.
fn outline(mesh: &UpstreamMesh) -> Vec<Point> {
    let g = mesh.grid();
    let mut p = Vec::new();
    p.extend((0..g.nx).map(|i| mesh.node(i, 0)));
    p.extend((0..g.ny).map(|j| mesh.node(g.nx, j)));
    p.extend((1..=g.nx).rev().map(|i| mesh.node(i, g.ny)));
    p.extend((1..=g.ny).rev().map(|j| mesh.node(0, j)));
    p
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn cells_tile_the_traced_outline(
        amp in prop::array::uniform4(-1.0f64..1.0),
        n in 5usize..24,
        m in 5usize..24,
        offset in -0.05f64..0.05,
    ) {
        let g = grid(n, m, Boundary::ZeroGhost);
        let nv = NodeVelocity::from_values(&g, 0.3, nodes_of(&g, |x, y| [
            amp[0] * (TAU * y).sin() + amp[1] * x * y,
            amp[2] * (TAU * x).cos() + amp[3] * y * y,
        ]));
        let Ok(mesh) = trace_offset(&nv, offset) else { return Ok(()) };
        let mut total = 0.0;
        for j in 0..m {
            for i in 0..n {
                total += mesh.quad(i, j).area();
            }
        }
        let want = polygon_area(&outline(&mesh));
        prop_assert!((total - want).abs() <= 1e-12 * want.abs());
    }

    #[test]
    fn affine_velocity_is_exact(
        c in prop::array::uniform6(-1.0f64..1.0),
        offset in -0.1f64..0.1,
        s in 0.0f64..1.0,
        r in 0.0f64..1.0,
    ) {
        let g = grid(12, 9, Boundary::ZeroGhost);
        let f = |x: f64, y: f64| [c[0] + c[1] * x + c[2] * y, c[3] + c[4] * x + c[5] * y];
        let nv = NodeVelocity::from_values(&g, 0.0, nodes_of(&g, f));
        let Ok(mesh) = trace_offset(&nv, offset) else { return Ok(()) };
        for j in 0..=g.ny {
            for i in 0..=g.nx {
                let (x, y) = (g.node_x(i as isize), g.node_y(j as isize));
                let v = f(x, y);
                let p = mesh.node(i, j);
                prop_assert!((p[0] - (x + offset * v[0])).abs() < 1e-13);
                prop_assert!((p[1] - (y + offset * v[1])).abs() < 1e-13);
            }
        }
        // the bilinear interpolant reproduces the affine field inside a cell
        let label = Label { cell: (4, 3), s, r };
        let (x, y) = (g.node_x(4) + s * g.dx, g.node_y(3) + r * g.dy);
        let got = modified_velocity_at(&nv, label);
        let want = f(x, y);
        prop_assert!((got[0] - want[0]).abs() < 1e-13 && (got[1] - want[1]).abs() < 1e-13);
    }
}

#[test]
fn anchor_slice_is_the_eulerian_mesh() {
    let g = grid(10, 8, Boundary::Periodic);
    let nv = NodeVelocity::from_values(&g, 0.7, nodes_of(&g, |x, y| [y.sin(), x.cos()]));
    let mesh = trace_to(&nv, 0.7).unwrap();
    assert_eq!(mesh.nodes(), UpstreamMesh::eulerian(&g).nodes());
    assert!(mesh.is_eulerian());
}

#[test]
fn label_velocity_is_slice_independent() {
    let g = grid(10, 8, Boundary::Periodic);
    let nv = NodeVelocity::from_values(&g, 0.0, nodes_of(&g, |x, y| [y.sin(), x.cos()]));
    let label = Label { cell: (3, 5), s: 0.25, r: 0.8 };
    let at_anchor = modified_velocity_at(&nv, label);
    let start = UpstreamMesh::eulerian(&g).point_at(label);
    for offset in [-0.3, -0.1, -0.01] {
        let mesh = trace_offset(&nv, offset).unwrap();
        assert_eq!(modified_velocity_at(&nv, label), at_anchor);
        // the labelled point moves on a straight line at that velocity
        let p = mesh.point_at(label);
        for k in 0..2 {
            assert!((p[k] - (start[k] + offset * at_anchor[k])).abs() < 1e-14);
        }
    }
}
