//! Uniform grid bookkeeping, clipping of convex upstream quadrilaterals
//! against the Eulerian grid, and exact integration of cell-local quadratics
//! over polygons.

use arrayvec::ArrayVec;

use crate::error::{Error, Result};
use crate::weno::LocalPoly;

pub type Point = [f64; 2];

/// Cross products of consecutive quad edges must exceed this times the
/// squared length of the longest edge.
pub const TAU_GEO: f64 = 1e-12;

/// Relative (to `max(dx, dy)`) distance below which clipped vertices merge.
pub const DEDUP_TOL: f64 = 1e-14;

/// Relative (to `dx * dy`) area below which a clipped piece does not make its
/// cell a donor candidate.
pub const CANDIDATE_AREA_TOL: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Boundary {
    Periodic,
    /// Ghost cells outside the domain carry zero averages.
    ZeroGhost,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub x_lo: f64,
    pub x_hi: f64,
    pub y_lo: f64,
    pub y_hi: f64,
    pub nx: usize,
    pub ny: usize,
    pub dx: f64,
    pub dy: f64,
    pub bc_x: Boundary,
    pub bc_y: Boundary,
}

/// Minimum cells per axis: the WENO and Laplacian stencils reach two cells out.
pub const MIN_CELLS: usize = 5;

impl GridSpec {
    /// `bounds` is `[x_lo, x_hi, y_lo, y_hi]`.
    pub fn new(bounds: [f64; 4], nx: usize, ny: usize, bcs: (Boundary, Boundary)) -> Result<Self> {
        let [x_lo, x_hi, y_lo, y_hi] = bounds;
        if nx < MIN_CELLS || ny < MIN_CELLS {
            return Err(Error::InvalidGrid(format!(
                "need at least {MIN_CELLS} cells per axis, got {nx}x{ny}"
            )));
        }
        if !(x_hi > x_lo) || !(y_hi > y_lo) || bounds.iter().any(|b| !b.is_finite()) {
            return Err(Error::InvalidGrid(format!("inverted or non-finite bounds {bounds:?}")));
        }
        Ok(Self {
            x_lo,
            x_hi,
            y_lo,
            y_hi,
            nx,
            ny,
            dx: (x_hi - x_lo) / nx as f64,
            dy: (y_hi - y_lo) / ny as f64,
            bc_x: bcs.0,
            bc_y: bcs.1,
        })
    }

    pub fn periodic(bounds: [f64; 4], nx: usize, ny: usize) -> Result<Self> {
        Self::new(bounds, nx, ny, (Boundary::Periodic, Boundary::Periodic))
    }

    pub fn is_periodic(&self) -> bool {
        self.bc_x == Boundary::Periodic && self.bc_y == Boundary::Periodic
    }

    pub fn lx(&self) -> f64 {
        self.x_hi - self.x_lo
    }

    pub fn ly(&self) -> f64 {
        self.y_hi - self.y_lo
    }

    pub fn cell_area(&self) -> f64 {
        self.dx * self.dy
    }

    pub fn num_cells(&self) -> usize {
        self.nx * self.ny
    }

    /// Node coordinate `x_{i-1/2}` for a possibly out-of-range index.
    #[inline]
    pub fn node_x(&self, i: isize) -> f64 {
        self.x_lo + i as f64 * self.dx
    }

    #[inline]
    pub fn node_y(&self, j: isize) -> f64 {
        self.y_lo + j as f64 * self.dy
    }

    #[inline]
    pub fn center(&self, i: isize, j: isize) -> Point {
        [
            self.x_lo + (i as f64 + 0.5) * self.dx,
            self.y_lo + (j as f64 + 0.5) * self.dy,
        ]
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    /// Maps an unwrapped cell index to storage. Periodic axes wrap; zero-ghost
    /// axes return `None` outside the domain.
    #[inline]
    pub fn wrap_cell(&self, i: isize, j: isize) -> Option<usize> {
        let i = wrap_axis(i, self.nx, self.bc_x)?;
        let j = wrap_axis(j, self.ny, self.bc_y)?;
        Some(j * self.nx + i)
    }

    /// Index pair used for ordering candidates: periodic axes are wrapped,
    /// zero-ghost axes keep their unwrapped value.
    #[inline]
    pub fn canonical_cell(&self, i: isize, j: isize) -> (isize, isize) {
        let ci = match self.bc_x {
            Boundary::Periodic => i.rem_euclid(self.nx as isize),
            Boundary::ZeroGhost => i,
        };
        let cj = match self.bc_y {
            Boundary::Periodic => j.rem_euclid(self.ny as isize),
            Boundary::ZeroGhost => j,
        };
        (ci, cj)
    }

    /// Unwrapped index of the cell containing `(x, y)`.
    #[inline]
    pub fn locate(&self, x: f64, y: f64) -> (isize, isize) {
        (
            ((x - self.x_lo) / self.dx).floor() as isize,
            ((y - self.y_lo) / self.dy).floor() as isize,
        )
    }
}

#[inline]
fn wrap_axis(i: isize, n: usize, bc: Boundary) -> Option<usize> {
    match bc {
        Boundary::Periodic if i >= 0 && (i as usize) < n => Some(i as usize),
        Boundary::Periodic => Some(i.rem_euclid(n as isize) as usize),
        Boundary::ZeroGhost => (i >= 0 && (i as usize) < n).then_some(i as usize),
    }
}

/// Free-function spelling of [`GridSpec::new`].
pub fn make_grid(bounds: [f64; 4], nx: usize, ny: usize, bcs: (Boundary, Boundary)) -> Result<GridSpec> {
    GridSpec::new(bounds, nx, ny, bcs)
}

/// Counter-clockwise simple polygon.
#[derive(Debug, Clone, PartialEq)]
pub struct Polygon {
    pub vertices: Vec<Point>,
}

impl Polygon {
    pub fn new(vertices: Vec<Point>) -> Self {
        Self { vertices }
    }

    pub fn area(&self) -> f64 {
        polygon_area(&self.vertices)
    }
}

/// Corners in node order LB, RB, RT, LT.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quad(pub [Point; 4]);

impl Quad {
    pub fn area(&self) -> f64 {
        polygon_area(&self.0)
    }

    pub fn is_convex(&self) -> bool {
        check_convex(self)
    }

    pub fn translate(&self, d: Point) -> Quad {
        Quad(self.0.map(|p| [p[0] + d[0], p[1] + d[1]]))
    }
}

/// Signed shoelace area, positive for counter-clockwise input. Coordinates
/// are taken relative to the first vertex so small polygons far from the
/// origin keep their relative accuracy.
pub fn polygon_area(p: &[Point]) -> f64 {
    let n = p.len();
    if n < 3 {
        return 0.0;
    }
    let o = p[0];
    let mut acc = 0.0;
    for k in 1..n - 1 {
        let a = [p[k][0] - o[0], p[k][1] - o[1]];
        let b = [p[k + 1][0] - o[0], p[k + 1][1] - o[1]];
        acc += a[0] * b[1] - b[0] * a[1];
    }
    0.5 * acc
}

/// True iff every pair of consecutive edges turns strictly left, i.e. the
/// quad is convex, counter-clockwise and has no three collinear corners.
pub fn check_convex(q: &Quad) -> bool {
    let v = &q.0;
    let edges: [Point; 4] = std::array::from_fn(|k| {
        let a = v[k];
        let b = v[(k + 1) % 4];
        [b[0] - a[0], b[1] - a[1]]
    });
    let lmax2 = edges
        .iter()
        .map(|e| e[0] * e[0] + e[1] * e[1])
        .fold(0.0, f64::max);
    if !(lmax2 > 0.0) {
        return false;
    }
    let tol = TAU_GEO * lmax2;
    (0..4).all(|k| {
        let a = edges[k];
        let b = edges[(k + 1) % 4];
        a[0] * b[1] - a[1] * b[0] > tol
    })
}

pub(crate) type Verts = ArrayVec<Point, 16>;

/// One half-plane pass of Sutherland-Hodgman. Keeps points with
/// `sign * (p[axis] - bound) >= 0`; crossing points are snapped onto the line.
fn clip_axis(input: &[Point], axis: usize, bound: f64, sign: f64, out: &mut Verts) {
    out.clear();
    let n = input.len();
    if n == 0 {
        return;
    }
    let mut prev = input[n - 1];
    let mut dprev = sign * (prev[axis] - bound);
    for &cur in input {
        let dcur = sign * (cur[axis] - bound);
        if dcur >= 0.0 {
            if dprev < 0.0 {
                out.push(intersect(prev, cur, dprev, dcur, axis, bound));
            }
            out.push(cur);
        } else if dprev >= 0.0 {
            out.push(intersect(prev, cur, dprev, dcur, axis, bound));
        }
        prev = cur;
        dprev = dcur;
    }
}

#[inline]
fn intersect(a: Point, b: Point, da: f64, db: f64, axis: usize, bound: f64) -> Point {
    let t = da / (da - db);
    let mut p = [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])];
    p[axis] = bound;
    p
}

fn dedup(v: &mut Verts, tol: f64) {
    let mut k = 0;
    while v.len() > 1 && k < v.len() {
        let a = v[k];
        let b = v[(k + 1) % v.len()];
        if (a[0] - b[0]).abs() <= tol && (a[1] - b[1]).abs() <= tol {
            v.remove((k + 1) % v.len());
        } else {
            k += 1;
        }
    }
}

fn bbox(p: &[Point]) -> [f64; 4] {
    let mut b = [f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY];
    for q in p {
        b[0] = b[0].min(q[0]);
        b[1] = b[1].max(q[0]);
        b[2] = b[2].min(q[1]);
        b[3] = b[3].max(q[1]);
    }
    b
}

/// Visits every non-degenerate intersection of a convex polygon with the
/// (unbounded, unwrapped) grid: strips between vertical grid lines first, then
/// rows within each strip. `f` receives the unwrapped cell index, the
/// piece's vertices (counter-clockwise) and the origin they are relative to.
///
/// Clipping runs in a frame anchored at the grid node below and left of the
/// polygon. Crossing points then round at the scale of the cell rather than
/// of the domain, which keeps thin pieces accurate far from the origin.
pub(crate) fn for_each_piece(poly: &[Point], g: &GridSpec, mut f: impl FnMut((isize, isize), &[Point], Point)) {
    let b = bbox(poly);
    let (i0, j0) = g.locate(b[0], b[2]);
    let i1 = (((b[1] - g.x_lo) / g.dx).ceil() as isize - 1).max(i0);
    let j1 = (((b[3] - g.y_lo) / g.dy).ceil() as isize - 1).max(j0);
    let tol = DEDUP_TOL * g.dx.max(g.dy);
    let o = [g.node_x(i0), g.node_y(j0)];

    let mut local = Verts::new();
    local
        .try_extend_from_slice(poly)
        .expect("polygon too large");
    for v in local.iter_mut() {
        *v = [v[0] - o[0], v[1] - o[1]];
    }
    let poly = &local[..];
    let b = [b[0] - o[0], b[1] - o[0], b[2] - o[1], b[3] - o[1]];

    if i0 == i1 && j0 == j1 {
        f((i0, j0), poly, o);
        return;
    }

    let mut tmp = Verts::new();
    let mut strip = Verts::new();
    let mut piece = Verts::new();
    let mut piece_tmp = Verts::new();
    for i in i0..=i1 {
        let xl = g.node_x(i) - o[0];
        let xr = g.node_x(i + 1) - o[0];
        strip.clear();
        strip.try_extend_from_slice(poly).expect("polygon too large");
        if b[0] < xl {
            clip_axis(&strip, 0, xl, 1.0, &mut tmp);
            std::mem::swap(&mut strip, &mut tmp);
        }
        if b[1] > xr {
            clip_axis(&strip, 0, xr, -1.0, &mut tmp);
            std::mem::swap(&mut strip, &mut tmp);
        }
        dedup(&mut strip, tol);
        if strip.len() < 3 {
            continue;
        }
        let sb = bbox(&strip);
        let (_, sj0) = g.locate(sb[0] + o[0], sb[2] + o[1]);
        let sj1 = (((sb[3] + o[1] - g.y_lo) / g.dy).ceil() as isize - 1).max(sj0);
        for j in sj0..=sj1 {
            let yb = g.node_y(j) - o[1];
            let yt = g.node_y(j + 1) - o[1];
            piece.clear();
            piece.try_extend_from_slice(&strip).expect("polygon too large");
            if sb[2] < yb {
                clip_axis(&piece, 1, yb, 1.0, &mut piece_tmp);
                std::mem::swap(&mut piece, &mut piece_tmp);
            }
            if sb[3] > yt {
                clip_axis(&piece, 1, yt, -1.0, &mut piece_tmp);
                std::mem::swap(&mut piece, &mut piece_tmp);
            }
            dedup(&mut piece, tol);
            if piece.len() >= 3 {
                f((i, j), &piece, o);
            }
        }
    }
}

/// One intersection of an upstream quad with an Eulerian cell. `cell` is the
/// unwrapped index; resolve it with [`GridSpec::wrap_cell`]. The polygon is
/// stored relative to `origin`, a grid node next to the quad.
#[derive(Debug, Clone, PartialEq)]
pub struct ClipPiece {
    pub cell: (isize, isize),
    pub origin: Point,
    pub polygon: Polygon,
}

impl ClipPiece {
    pub fn area(&self) -> f64 {
        self.polygon.area()
    }

    /// Vertices in absolute coordinates.
    pub fn vertices(&self) -> Vec<Point> {
        let o = self.origin;
        self.polygon.vertices.iter().map(|v| [v[0] + o[0], v[1] + o[1]]).collect()
    }
}

/// Splits a convex quad into its intersections with the Eulerian cells.
/// Pieces whose area is not positive are dropped.
pub fn clip_quad_to_grid(q: &Quad, g: &GridSpec) -> Result<Vec<ClipPiece>> {
    if !check_convex(q) {
        return Err(Error::InvalidGrid("clipping requires a convex counter-clockwise quad".into()));
    }
    let mut out = Vec::new();
    for_each_piece(&q.0, g, |cell, verts, origin| {
        if polygon_area(verts) > 0.0 {
            out.push(ClipPiece {
                cell,
                origin,
                polygon: Polygon::new(verts.to_vec()),
            });
        }
    });
    Ok(out)
}

/// Raw moments `\iint mu^a nu^b dmu dnu` (a + b <= 2) of a polygon expressed
/// in scaled coordinates `mu = (x - cx)/dx`, `nu = (y - cy)/dy`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Moments {
    pub m00: f64,
    pub m10: f64,
    pub m01: f64,
    pub m20: f64,
    pub m11: f64,
    pub m02: f64,
}

impl Moments {
    /// Closed-form edge sums from Green's theorem.
    pub fn of(verts: &[Point], center: Point, dx: f64, dy: f64) -> Self {
        let n = verts.len();
        let (idx, idy) = (1.0 / dx, 1.0 / dy);
        let scaled = |p: Point| [(p[0] - center[0]) * idx, (p[1] - center[1]) * idy];
        let mut m = [0.0f64; 6];
        let mut a = scaled(verts[n - 1]);
        for &v in verts {
            let b = scaled(v);
            let c = a[0] * b[1] - b[0] * a[1];
            m[0] += c;
            m[1] += (a[0] + b[0]) * c;
            m[2] += (a[1] + b[1]) * c;
            m[3] += (a[0] * a[0] + a[0] * b[0] + b[0] * b[0]) * c;
            m[4] += (a[0] * b[1] + 2.0 * a[0] * a[1] + 2.0 * b[0] * b[1] + b[0] * a[1]) * c;
            m[5] += (a[1] * a[1] + a[1] * b[1] + b[1] * b[1]) * c;
            a = b;
        }
        Self {
            m00: m[0] / 2.0,
            m10: m[1] / 6.0,
            m01: m[2] / 6.0,
            m20: m[3] / 12.0,
            m11: m[4] / 24.0,
            m02: m[5] / 12.0,
        }
    }

    /// Moments about a center displaced by `(sx, sy)` scaled units.
    pub fn shifted(&self, sx: f64, sy: f64) -> Self {
        Self {
            m00: self.m00,
            m10: self.m10 - sx * self.m00,
            m01: self.m01 - sy * self.m00,
            m20: self.m20 - 2.0 * sx * self.m10 + sx * sx * self.m00,
            m11: self.m11 - sx * self.m01 - sy * self.m10 + sx * sy * self.m00,
            m02: self.m02 - 2.0 * sy * self.m01 + sy * sy * self.m00,
        }
    }

    /// Integrals of the six local basis functions in scaled units
    /// (multiply by `dx * dy` for physical integrals).
    pub fn basis(&self) -> [f64; 6] {
        let c = self.m00 / 12.0;
        [self.m00, self.m10, self.m01, self.m20 - c, self.m11, self.m02 - c]
    }
}

/// Gauss-Legendre nodes and weights on `[0, 1]`, `n` in `1..=5`.
pub fn gauss_legendre_unit(n: usize) -> (Vec<f64>, Vec<f64>) {
    let (x, w): (&[f64], &[f64]) = match n {
        1 => (&[0.0], &[2.0]),
        2 => (&[-0.577_350_269_189_625_8, 0.577_350_269_189_625_8], &[1.0, 1.0]),
        3 => (
            &[-0.774_596_669_241_483_4, 0.0, 0.774_596_669_241_483_4],
            &[5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0],
        ),
        4 => (
            &[-0.861_136_311_594_052_6, -0.339_981_043_584_856_3, 0.339_981_043_584_856_3, 0.861_136_311_594_052_6],
            &[0.347_854_845_137_453_8, 0.652_145_154_862_546_1, 0.652_145_154_862_546_1, 0.347_854_845_137_453_8],
        ),
        5 => (
            &[-0.906_179_845_938_664, -0.538_469_310_105_683_1, 0.0, 0.538_469_310_105_683_1, 0.906_179_845_938_664],
            &[
                0.236_926_885_056_189_1,
                0.478_628_670_499_366_5,
                128.0 / 225.0,
                0.478_628_670_499_366_5,
                0.236_926_885_056_189_1,
            ],
        ),
        _ => panic!("gauss_legendre_unit supports 1..=5 points, got {n}"),
    };
    (
        x.iter().map(|v| 0.5 * (v + 1.0)).collect(),
        w.iter().map(|v| 0.5 * v).collect(),
    )
}

/// Exact integral of `poly` (expressed in the basis of the unwrapped `host`
/// cell) over `p`. Uses Green's theorem with the x-antiderivative of the
/// integrand and 3-point Gauss-Legendre on every edge, which is exact for the
/// cubic edge integrands of a quadratic.
pub fn integrate_poly_over_polygon(poly: &LocalPoly, host: (isize, isize), p: &[Point], g: &GridSpec) -> f64 {
    integrate_relative(poly, host, p, [0.0, 0.0], g)
}

/// As [`integrate_poly_over_polygon`] for vertices given relative to `origin`.
pub(crate) fn integrate_relative(poly: &LocalPoly, host: (isize, isize), p: &[Point], origin: Point, g: &GridSpec) -> f64 {
    if p.len() < 3 || polygon_area(p) == 0.0 {
        return 0.0;
    }
    let c = g.center(host.0, host.1);
    let c = [c[0] - origin[0], c[1] - origin[1]];
    let [a1, a2, a3, a4, a5, a6] = poly.coeffs;
    let lin = a1 - a4 / 12.0 - a6 / 12.0;
    // x-antiderivative of the integrand in scaled coordinates
    let anti = |mu: f64, nu: f64| {
        mu * (lin + a3 * nu + a6 * nu * nu) + mu * mu * (0.5 * a2 + 0.5 * a5 * nu) + a4 * mu * mu * mu / 3.0
    };
    const S: [f64; 3] = [0.112_701_665_379_258_31, 0.5, 0.887_298_334_620_741_7];
    const W: [f64; 3] = [5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0];
    let n = p.len();
    let mut acc = 0.0;
    for k in 0..n {
        let a = p[k];
        let b = p[(k + 1) % n];
        let (ma, na) = ((a[0] - c[0]) / g.dx, (a[1] - c[1]) / g.dy);
        let (mb, nb) = ((b[0] - c[0]) / g.dx, (b[1] - c[1]) / g.dy);
        let dn = nb - na;
        if dn == 0.0 {
            continue;
        }
        let mut e = 0.0;
        for q in 0..3 {
            e += W[q] * anti(ma + S[q] * (mb - ma), na + S[q] * dn);
        }
        acc += e * dn;
    }
    acc * g.dx * g.dy
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn unit_grid(n: usize) -> GridSpec {
        GridSpec::periodic([0.0, 1.0, 0.0, 1.0], n, n).unwrap()
    }

    #[test]
    fn grid_spacing() {
        let g = GridSpec::periodic([-PI, PI, -PI, PI], 20, 20).unwrap();
        assert!((g.dx - PI / 10.0).abs() < 1e-15 && (g.dy - PI / 10.0).abs() < 1e-15);
        let g = unit_grid(5);
        assert!((g.dx - 0.2).abs() < 1e-16);
        let g = GridSpec::periodic([0.0, 4.0 * PI, 0.0, 2.0 * PI], 16, 16).unwrap();
        assert!((g.dx - PI / 4.0).abs() < 1e-15 && (g.dy - PI / 8.0).abs() < 1e-15);
        assert_eq!(g.center(0, 0), [PI / 8.0, PI / 16.0]);
    }

    #[test]
    fn grid_rejects_bad_input() {
        assert!(GridSpec::periodic([0.0, 1.0, 0.0, 1.0], 4, 10).is_err());
        assert!(GridSpec::periodic([1.0, 0.0, 0.0, 1.0], 10, 10).is_err());
        assert!(GridSpec::periodic([0.0, 1.0, 1.0, 1.0], 10, 10).is_err());
    }

    #[test]
    fn wrap_cell_modes() {
        let g = GridSpec::new([0.0, 1.0, 0.0, 1.0], 5, 6, (Boundary::Periodic, Boundary::ZeroGhost)).unwrap();
        assert_eq!(g.wrap_cell(-1, 0), Some(4));
        assert_eq!(g.wrap_cell(5, 1), Some(5));
        assert_eq!(g.wrap_cell(0, -1), None);
        assert_eq!(g.wrap_cell(0, 6), None);
    }

    #[test]
    fn areas() {
        assert_eq!(polygon_area(&[[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]), 0.5);
        assert_eq!(polygon_area(&[[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]), 1.0);
        assert_eq!(polygon_area(&[[0.0, 0.0], [0.0, 1.0], [1.0, 1.0], [1.0, 0.0]]), -1.0);
        let g = unit_grid(10);
        let cell = Quad([[0.3, 0.4], [0.4, 0.4], [0.4, 0.5], [0.3, 0.5]]);
        let moved = cell.translate([-0.037, 0.0123]);
        assert!((moved.area() - g.dx * g.dy).abs() < 1e-15);
    }

    #[test]
    fn convexity() {
        let sq = Quad([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]);
        assert!(check_convex(&sq));
        let collinear = Quad([[0.0, 0.0], [1.0, 0.0], [2.0, 0.0], [0.0, 1.0]]);
        assert!(!check_convex(&collinear));
        let bowtie = Quad([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]]);
        assert!(!check_convex(&bowtie));
        let cw = Quad([[0.0, 0.0], [0.0, 1.0], [1.0, 1.0], [1.0, 0.0]]);
        assert!(!check_convex(&cw));
        let dart = Quad([[0.0, 0.0], [1.0, 0.0], [0.2, 0.2], [0.0, 1.0]]);
        assert!(!check_convex(&dart));
    }

    #[test]
    fn clip_exact_cell() {
        let g = unit_grid(10);
        let q = Quad([[0.3, 0.4], [0.4, 0.4], [0.4, 0.5], [0.3, 0.5]]);
        let pieces = clip_quad_to_grid(&q, &g).unwrap();
        let real: Vec<_> = pieces.iter().filter(|p| p.area() > 1e-14 * g.cell_area()).collect();
        assert_eq!(real.len(), 1);
        assert_eq!(real[0].cell, (3, 4));
        assert!((real[0].area() - 0.01).abs() < 1e-16);
    }

    #[test]
    fn clip_half_shift() {
        let g = unit_grid(10);
        let q = Quad([[0.35, 0.4], [0.45, 0.4], [0.45, 0.5], [0.35, 0.5]]);
        let pieces = clip_quad_to_grid(&q, &g).unwrap();
        let real: Vec<_> = pieces.iter().filter(|p| p.area() > 1e-14 * g.cell_area()).collect();
        assert_eq!(real.len(), 2);
        for p in &real {
            assert!((p.area() - 0.005).abs() < 1e-15);
        }
        let cells: Vec<_> = real.iter().map(|p| p.cell).collect();
        assert_eq!(cells, vec![(3, 4), (4, 4)]);
    }

    #[test]
    fn thin_quad_pieces_sum_to_its_area() {
        // 170:1 sliver crossing two grid lines, from a traced mesh
        let g = GridSpec::new([0.0, 1.0, 0.0, 1.0], 32, 32, (Boundary::ZeroGhost, Boundary::ZeroGhost)).unwrap();
        let q = Quad([
            [0.88849807749645116, 0.26637264710968706],
            [0.905627159859716, 0.24924451894536098],
            [0.8916010639882791, 0.2634814059231509],
            [0.874377159859716, 0.280494518945361],
        ]);
        let pieces = clip_quad_to_grid(&q, &g).unwrap();
        assert_eq!(pieces.len(), 3);
        let sum: f64 = pieces.iter().map(|p| p.area()).sum();
        assert!((sum - q.area()).abs() <= 1e-13 * q.area());
    }

    #[test]
    fn clip_rejects_nonconvex() {
        let g = unit_grid(10);
        let bowtie = Quad([[0.0, 0.0], [0.1, 0.0], [0.0, 0.1], [0.1, 0.1]]);
        assert!(clip_quad_to_grid(&bowtie, &g).is_err());
    }

    #[test]
    fn clip_outside_domain_keeps_unwrapped_index() {
        let g = unit_grid(10);
        let q = Quad([[-0.05, 0.0], [0.05, 0.0], [0.05, 0.1], [-0.05, 0.1]]);
        let pieces = clip_quad_to_grid(&q, &g).unwrap();
        let cells: Vec<_> = pieces.iter().map(|p| p.cell).collect();
        assert_eq!(cells, vec![(-1, 0), (0, 0)]);
        assert_eq!(g.wrap_cell(-1, 0), Some(9));
    }

    #[test]
    fn moments_match_basis_definition() {
        // unit cell centered at origin: P2..P6 integrate to zero
        let sq = [[-0.5, -0.5], [0.5, -0.5], [0.5, 0.5], [-0.5, 0.5]];
        let b = Moments::of(&sq, [0.0, 0.0], 1.0, 1.0).basis();
        for (k, v) in b.iter().enumerate() {
            let expect = if k == 0 { 1.0 } else { 0.0 };
            assert!((v - expect).abs() < 1e-15, "basis {k}: {v}");
        }
        // shifting the reference center equals recomputing about the new one
        let tri = [[0.1, 0.2], [1.3, -0.4], [0.7, 0.9]];
        let direct = Moments::of(&tri, [2.0, -1.0], 0.5, 0.25);
        let via = Moments::of(&tri, [0.0, 0.0], 0.5, 0.25).shifted(4.0, -4.0);
        for (a, b) in direct.basis().iter().zip(via.basis()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn green_integration_examples() {
        let g = unit_grid(10);
        let tri = [[0.31, 0.42], [0.47, 0.45], [0.35, 0.58]];
        let c = LocalPoly::constant(2.5);
        let v = integrate_poly_over_polygon(&c, (3, 4), &tri, &g);
        assert!((v - 2.5 * polygon_area(&tri)).abs() < 1e-15);

        let cell = [[0.3, 0.4], [0.4, 0.4], [0.4, 0.5], [0.3, 0.5]];
        let p4 = LocalPoly { coeffs: [0.0, 0.0, 0.0, 1.0, 0.0, 0.0] };
        assert!(integrate_poly_over_polygon(&p4, (3, 4), &cell, &g).abs() < 1e-17);

        // mu * nu over the left half of its cell vanishes by odd symmetry in nu
        let left = [[0.3, 0.4], [0.35, 0.4], [0.35, 0.5], [0.3, 0.5]];
        let p5 = LocalPoly { coeffs: [0.0, 0.0, 0.0, 0.0, 1.0, 0.0] };
        assert!(integrate_poly_over_polygon(&p5, (3, 4), &left, &g).abs() < 1e-17);

        let degenerate = [[0.0, 0.0], [0.1, 0.1], [0.2, 0.2]];
        assert_eq!(integrate_poly_over_polygon(&c, (0, 0), &degenerate, &g), 0.0);
    }
}
