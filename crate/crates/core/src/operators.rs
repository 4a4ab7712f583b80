//! Semi-discrete right-hand sides on a slice of the upstream family: the
//! upwind edge-flux convection term and the diffusion term built from a
//! fourth-order Laplacian of the cell averages.

use crate::error::Result;
use crate::field::CellField;
use crate::geometry::{Boundary, GridSpec, Point};
use crate::par;
use crate::remap::{remap_on, Overlay, RemappedField};
use crate::velocity::{NodeVelocity, SpatialFn, StageVelocity, UpstreamMesh};
use crate::weno::{reconstruct_field, reconstruct_q0_field, WenoParams};

/// Gauss-Legendre rule on `[0, 1]` used along every edge.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeQuadrature {
    pub points: Vec<f64>,
    pub weights: Vec<f64>,
}

impl EdgeQuadrature {
    pub fn gauss(n: usize) -> Self {
        let (points, weights) = crate::geometry::gauss_legendre_unit(n);
        Self { points, weights }
    }
}

impl Default for EdgeQuadrature {
    fn default() -> Self {
        Self::gauss(3)
    }
}

/// Which cells an edge separates, as unwrapped indices. `first` is the cell
/// whose counter-clockwise boundary runs from `from` to `to`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgeId {
    /// Between cells `(i-1, j)` and `(i, j)`, from node `(i, j)` to `(i, j+1)`.
    Vertical { i: usize, j: usize },
    /// Between cells `(i, j-1)` and `(i, j)`, from node `(i+1, j)` to `(i, j)`.
    Horizontal { i: usize, j: usize },
}

struct Side {
    /// Storage cell and the translation taking slice coordinates into its chart.
    cell: Option<(usize, usize)>,
    shift: Point,
}

fn side(g: &GridSpec, i: isize, j: isize) -> Side {
    let wrap = |k: isize, n: usize, bc: Boundary| -> Option<(usize, isize)> {
        match bc {
            Boundary::Periodic if k >= 0 && k < n as isize => Some((k as usize, 0)),
            Boundary::Periodic => {
                let w = k.rem_euclid(n as isize);
                Some((w as usize, (k - w) / n as isize))
            }
            Boundary::ZeroGhost => (k >= 0 && k < n as isize).then_some((k as usize, 0)),
        }
    };
    match (wrap(i, g.nx, g.bc_x), wrap(j, g.ny, g.bc_y)) {
        (Some((wi, pi)), Some((wj, pj))) => Side {
            cell: Some((wi, wj)),
            shift: [-(pi as f64) * g.nx as f64 * g.dx, -(pj as f64) * g.ny as f64 * g.dy],
        },
        _ => Side {
            cell: None,
            shift: [0.0, 0.0],
        },
    }
}

#[inline]
fn trace_value(rf: &RemappedField, s: &Side, p: Point) -> f64 {
    match s.cell {
        Some((i, j)) => rf.eval(i, j, [p[0] + s.shift[0], p[1] + s.shift[1]]),
        None => 0.0,
    }
}

/// Outward flux of the first cell through one edge of the slice:
/// `int (a - alpha, b - beta) . n u_up ds` with the upwind trace chosen per
/// quadrature point.
pub fn edge_flux(
    mesh: &UpstreamMesh,
    rf: &RemappedField,
    nv: &NodeVelocity,
    vel: &StageVelocity,
    edge: EdgeId,
    quad: &EdgeQuadrature,
) -> f64 {
    edge_flux_with(mesh, rf, nv, edge, quad, |_, p| vel.eval(p))
}

fn edge_nodes(edge: EdgeId) -> ((usize, usize), (usize, usize)) {
    match edge {
        EdgeId::Vertical { i, j } => ((i, j), (i, j + 1)),
        EdgeId::Horizontal { i, j } => ((i + 1, j), (i, j)),
    }
}

fn gauss_point(p0: Point, p1: Point, s: f64) -> Point {
    [p0[0] + s * (p1[0] - p0[0]), p0[1] + s * (p1[1] - p0[1])]
}

/// `vel_at(q, p)` gives the velocity at quadrature point `q` of the edge.
fn edge_flux_with(
    mesh: &UpstreamMesh,
    rf: &RemappedField,
    nv: &NodeVelocity,
    edge: EdgeId,
    quad: &EdgeQuadrature,
    vel_at: impl Fn(usize, Point) -> Point,
) -> f64 {
    let g = mesh.grid();
    let (first, second) = match edge {
        EdgeId::Vertical { i, j } => ((i as isize - 1, j as isize), (i as isize, j as isize)),
        EdgeId::Horizontal { i, j } => ((i as isize, j as isize - 1), (i as isize, j as isize)),
    };
    let (n0, n1) = edge_nodes(edge);
    let (p0, p1) = (mesh.node(n0.0, n0.1), mesh.node(n1.0, n1.1));
    let (v0, v1) = (nv.at(n0.0, n0.1), nv.at(n1.0, n1.1));
    // unnormalised outward normal of the first cell; |n| = edge length
    let normal = [p1[1] - p0[1], p0[0] - p1[0]];
    let inner = side(g, first.0, first.1);
    let outer = side(g, second.0, second.1);
    let mut acc = 0.0;
    for (q, (s, w)) in quad.points.iter().zip(&quad.weights).enumerate() {
        let p = gauss_point(p0, p1, *s);
        let alpha = [v0[0] + s * (v1[0] - v0[0]), v0[1] + s * (v1[1] - v0[1])];
        let a = vel_at(q, p);
        let wn = (a[0] - alpha[0]) * normal[0] + (a[1] - alpha[1]) * normal[1];
        if wn == 0.0 {
            continue;
        }
        let u = if wn > 0.0 { trace_value(rf, &inner, p) } else { trace_value(rf, &outer, p) };
        acc += w * wn * u;
    }
    acc
}

/// Edge layout shared by the flux sweep and [`sample_edges`]: vertical edges
/// row by row, then horizontal edges. Periodic axes use edges `1..=n` so that
/// edge `n` is the seam.
struct EdgeLayout {
    vx_count: usize,
    hy_count: usize,
    vx_lo: usize,
    hy_lo: usize,
}

impl EdgeLayout {
    fn of(g: &GridSpec) -> Self {
        let periodic_x = g.bc_x == Boundary::Periodic;
        let periodic_y = g.bc_y == Boundary::Periodic;
        Self {
            vx_count: if periodic_x { g.nx } else { g.nx + 1 },
            hy_count: if periodic_y { g.ny } else { g.ny + 1 },
            vx_lo: usize::from(periodic_x),
            hy_lo: usize::from(periodic_y),
        }
    }

    fn vertical_slot(&self, k: usize, j: usize) -> usize {
        j * self.vx_count + k
    }

    fn horizontal_slot(&self, g: &GridSpec, i: usize, k: usize) -> usize {
        g.ny * self.vx_count + k * g.nx + i
    }

    fn len(&self, g: &GridSpec) -> usize {
        g.ny * self.vx_count + self.hy_count * g.nx
    }

    fn edge(&self, g: &GridSpec, slot: usize) -> EdgeId {
        let nv = g.ny * self.vx_count;
        if slot < nv {
            EdgeId::Vertical {
                i: slot % self.vx_count + self.vx_lo,
                j: slot / self.vx_count,
            }
        } else {
            let r = slot - nv;
            EdgeId::Horizontal {
                i: r % g.nx,
                j: r / g.nx + self.hy_lo,
            }
        }
    }
}

/// Values of a purely spatial velocity at every edge quadrature point of the
/// slice, in the order [`flux_divergence_sampled`] expects.
pub fn sample_edges(mesh: &UpstreamMesh, quad: &EdgeQuadrature, f: &SpatialFn) -> Vec<Point> {
    let g = mesh.grid();
    let layout = EdgeLayout::of(g);
    let npts = quad.points.len();
    // one task per row of edges: vertical rows first, then horizontal
    let ranges: Vec<(usize, usize)> = (0..g.ny)
        .map(|j| (layout.vertical_slot(0, j), layout.vx_count))
        .chain((0..layout.hy_count).map(|k| (layout.horizontal_slot(g, 0, k), g.nx)))
        .collect();
    let rows = par::map_range(ranges.len(), |r| {
        let (first, count) = ranges[r];
        let mut row = Vec::with_capacity(count * npts);
        for slot in first..first + count {
            let (n0, n1) = edge_nodes(layout.edge(g, slot));
            let (p0, p1) = (mesh.node(n0.0, n0.1), mesh.node(n1.0, n1.1));
            row.extend(quad.points.iter().map(|&s| {
                let p = gauss_point(p0, p1, s);
                f(p[0], p[1])
            }));
        }
        row
    });
    let mut out = Vec::with_capacity(layout.len(g) * npts);
    rows.into_iter().for_each(|r| out.extend(r));
    out
}

/// `F_ij = -(sum of outward edge fluxes)` for every upstream cell. Each edge is
/// evaluated once and applied with opposite signs to its two cells.
pub fn flux_divergence(
    mesh: &UpstreamMesh,
    rf: &RemappedField,
    nv: &NodeVelocity,
    vel: &StageVelocity,
    quad: &EdgeQuadrature,
) -> Vec<f64> {
    flux_divergence_with(mesh, rf, nv, quad, |_, p| vel.eval(p))
}

/// [`flux_divergence`] for a velocity `scale * f` where `samples` holds `f` at
/// the quadrature points (see [`sample_edges`]).
pub fn flux_divergence_sampled(
    mesh: &UpstreamMesh,
    rf: &RemappedField,
    nv: &NodeVelocity,
    quad: &EdgeQuadrature,
    samples: &[Point],
    scale: f64,
) -> Vec<f64> {
    let npts = quad.points.len();
    assert_eq!(samples.len(), EdgeLayout::of(mesh.grid()).len(mesh.grid()) * npts);
    flux_divergence_with(mesh, rf, nv, quad, |k, _| {
        let v = samples[k];
        [scale * v[0], scale * v[1]]
    })
}

/// `vel_at(k, p)` receives the global quadrature slot `k` and the point.
fn flux_divergence_with(
    mesh: &UpstreamMesh,
    rf: &RemappedField,
    nv: &NodeVelocity,
    quad: &EdgeQuadrature,
    vel_at: impl Fn(usize, Point) -> Point + Sync,
) -> Vec<f64> {
    let g = mesh.grid();
    let (nx, ny) = (g.nx, g.ny);
    let layout = EdgeLayout::of(g);
    let npts = quad.points.len();
    let flux = |slot: usize| {
        let base = slot * npts;
        edge_flux_with(mesh, rf, nv, layout.edge(g, slot), quad, |q, p| vel_at(base + q, p))
    };

    let vertical: Vec<Vec<f64>> =
        par::map_range(ny, |j| (0..layout.vx_count).map(|k| flux(layout.vertical_slot(k, j))).collect());
    let horizontal: Vec<Vec<f64>> =
        par::map_range(layout.hy_count, |k| (0..nx).map(|i| flux(layout.horizontal_slot(g, i, k))).collect());

    let mut out = vec![0.0; nx * ny];
    let mut add = |i: isize, j: isize, v: f64| {
        if let Some(k) = g.wrap_cell(i, j) {
            out[k] += v;
        }
    };
    for (j, row) in vertical.iter().enumerate() {
        for (k, &phi) in row.iter().enumerate() {
            let i = (k + layout.vx_lo) as isize;
            add(i - 1, j as isize, -phi);
            add(i, j as isize, phi);
        }
    }
    for (k, row) in horizontal.iter().enumerate() {
        let j = (k + layout.hy_lo) as isize;
        for (i, &phi) in row.iter().enumerate() {
            add(i as isize, j - 1, -phi);
            add(i as isize, j, phi);
        }
    }
    out
}

/// Full convection evaluation of `u` on `mesh`: WENO reconstruction, remap,
/// edge fluxes.
pub fn convection_operator(
    u: &CellField,
    mesh: &UpstreamMesh,
    nv: &NodeVelocity,
    vel: &StageVelocity,
    weno: &WenoParams,
) -> Result<Vec<f64>> {
    let g = mesh.grid();
    let src = reconstruct_field(u, g, weno);
    let overlay = Overlay::build(mesh)?;
    let rf = remap_on(&overlay, &src);
    Ok(flux_divergence(mesh, &rf, nv, vel, &EdgeQuadrature::default()))
}

const LAP: [f64; 5] = [-1.0 / 12.0, 4.0 / 3.0, -5.0 / 2.0, 4.0 / 3.0, -1.0 / 12.0];

/// Fourth-order cell averages of the Laplacian, `D u`.
pub fn laplacian_averages(u: &CellField, g: &GridSpec) -> CellField {
    let (nx, ny) = (g.nx, g.ny);
    let data = u.as_slice();
    let (cx, cy) = (1.0 / (g.dx * g.dx), 1.0 / (g.dy * g.dy));
    let mut out = vec![0.0; nx * ny];
    par::for_each_row(&mut out, nx, |j, row| {
        for (i, o) in row.iter_mut().enumerate() {
            let mut sx = 0.0;
            let mut sy = 0.0;
            for (k, w) in LAP.iter().enumerate() {
                let d = k as isize - 2;
                let at = |ii: isize, jj: isize| g.wrap_cell(ii, jj).map_or(0.0, |q| data[q]);
                sx += w * at(i as isize + d, j as isize);
                sy += w * at(i as isize, j as isize + d);
            }
            *o = sx * cx + sy * cy;
        }
    });
    CellField::from_vec(nx, ny, out)
}

/// Symbol of `D` for angular grid frequencies `(theta_x, theta_y)`.
pub fn laplacian_symbol(theta_x: f64, theta_y: f64, g: &GridSpec) -> f64 {
    let s = |t: f64| {
        let c = t.cos();
        -(c - 1.0) * (c - 7.0) / 3.0
    };
    s(theta_x) / (g.dx * g.dx) + s(theta_y) / (g.dy * g.dy)
}

/// `eps * int over each upstream cell of q0(D u)`.
pub fn diffusion_operator(u: &CellField, mesh: &UpstreamMesh, eps: f64) -> Result<Vec<f64>> {
    let g = mesh.grid();
    if eps == 0.0 {
        return Ok(vec![0.0; g.num_cells()]);
    }
    let lap = reconstruct_q0_field(&laplacian_averages(u, g), g);
    let overlay = Overlay::build(mesh)?;
    Ok(overlay.masses(&lap).into_iter().map(|m| eps * m).collect())
}
