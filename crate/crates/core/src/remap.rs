//! Conservative transfer of the Eulerian piecewise polynomial onto an
//! upstream mesh.
//!
//! An [`Overlay`] caches, for every upstream cell, its intersections with the
//! Eulerian cells as basis-function integrals. Masses of any piecewise
//! polynomial over the upstream cells are then dot products, so one overlay
//! serves every remap on the same mesh.

use crate::error::{Error, Result};
use crate::geometry::{
    check_convex, for_each_piece, polygon_area, GridSpec, Moments, Point, Quad, CANDIDATE_AREA_TOL,
};
use crate::par;
use crate::velocity::UpstreamMesh;
use crate::weno::{LocalPoly, PiecewisePoly};

#[derive(Debug, Clone, Copy, PartialEq)]
struct Piece {
    /// Unwrapped index of the Eulerian cell.
    cell: (isize, isize),
    /// Storage index, `None` for zero-ghost cells outside the domain.
    idx: Option<usize>,
    /// Basis integrals of the piece about its cell center (scaled units).
    piece: [f64; 6],
    /// Whether the piece is large enough to nominate a donor.
    candidate: bool,
}

/// Upstream mesh intersected with the Eulerian grid.
#[derive(Debug, Clone)]
pub struct Overlay {
    grid: GridSpec,
    eulerian: bool,
    start: Vec<usize>,
    pieces: Vec<Piece>,
    /// Physical shoelace area of every upstream cell.
    areas: Vec<f64>,
    /// Moments of every upstream cell about the center of `anchors[k]`.
    quads: Vec<Moments>,
    anchors: Vec<(isize, isize)>,
}

#[derive(Default)]
struct RowPieces {
    pieces: Vec<Piece>,
    counts: Vec<usize>,
    areas: Vec<f64>,
    quads: Vec<Moments>,
    anchors: Vec<(isize, isize)>,
}

impl RowPieces {
    fn push_cell(&mut self, q: &Quad, g: &GridSpec) {
        let before = self.pieces.len();
        // quad moments about the cell holding the first corner; candidates
        // shift them exactly by integer cell offsets
        let r = g.locate(q.0[0][0], q.0[0][1]);
        self.quads.push(Moments::of(&q.0, g.center(r.0, r.1), g.dx, g.dy));
        self.anchors.push(r);
        self.areas.push(q.area());
        let tol = CANDIDATE_AREA_TOL;
        let pieces = &mut self.pieces;
        for_each_piece(&q.0, g, |cell, verts: &[Point], o: Point| {
            let c = g.center(cell.0, cell.1);
            let m = Moments::of(verts, [c[0] - o[0], c[1] - o[1]], g.dx, g.dy);
            pieces.push(Piece {
                cell,
                idx: g.wrap_cell(cell.0, cell.1),
                piece: m.basis(),
                candidate: m.m00 > tol,
            });
        });
        self.counts.push(self.pieces.len() - before);
    }
}

impl Overlay {
    pub fn build(mesh: &UpstreamMesh) -> Result<Self> {
        let g = mesh.grid().clone();
        let n = g.num_cells();
        if mesh.is_eulerian() {
            let mut unit = [0.0; 6];
            unit[0] = 1.0;
            let cells: Vec<(isize, isize)> = (0..n).map(|k| ((k % g.nx) as isize, (k / g.nx) as isize)).collect();
            let pieces = cells
                .iter()
                .enumerate()
                .map(|(k, &cell)| Piece {
                    cell,
                    idx: Some(k),
                    piece: unit,
                    candidate: true,
                })
                .collect();
            let unit_moments = Moments::of(&UpstreamMesh::eulerian(&g).quad(0, 0).0, g.center(0, 0), g.dx, g.dy);
            return Ok(Self {
                areas: vec![g.dx * g.dy; n],
                quads: vec![unit_moments; n],
                anchors: cells,
                grid: g,
                eulerian: true,
                start: (0..=n).collect(),
                pieces,
            });
        }
        if let Some((i, j)) = mesh.first_nonconvex() {
            return Err(Error::NonConvexUpstreamCell { i, j });
        }
        let rows = par::map_range(g.ny, |j| {
            let mut row = RowPieces::default();
            row.pieces.reserve(5 * g.nx);
            for i in 0..g.nx {
                row.push_cell(&mesh.quad(i, j), &g);
            }
            row
        });
        let total: usize = rows.iter().map(|r| r.pieces.len()).sum();
        let mut out = Self {
            grid: g,
            eulerian: false,
            start: Vec::with_capacity(n + 1),
            pieces: Vec::with_capacity(total),
            areas: Vec::with_capacity(n),
            quads: Vec::with_capacity(n),
            anchors: Vec::with_capacity(n),
        };
        out.start.push(0);
        for row in rows {
            for c in row.counts {
                let last = *out.start.last().unwrap();
                out.start.push(last + c);
            }
            out.pieces.extend(row.pieces);
            out.areas.extend(row.areas);
            out.quads.extend(row.quads);
            out.anchors.extend(row.anchors);
        }
        Ok(out)
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn is_eulerian(&self) -> bool {
        self.eulerian
    }

    pub fn area(&self, k: usize) -> f64 {
        self.areas[k]
    }

    /// Number of clipped pieces of upstream cell `k`.
    pub fn num_pieces(&self, k: usize) -> usize {
        self.start[k + 1] - self.start[k]
    }

    fn pieces_of(&self, k: usize) -> &[Piece] {
        &self.pieces[self.start[k]..self.start[k + 1]]
    }

    #[inline]
    fn poly_of<'a>(src: &'a PiecewisePoly, p: &Piece) -> Option<&'a LocalPoly> {
        p.idx.map(|k| &src.polys()[k])
    }

    /// Exact mass of `src` over upstream cell `k`.
    #[inline]
    pub fn mass(&self, src: &PiecewisePoly, k: usize) -> f64 {
        self.scaled_mass(src, k) * self.grid.dx * self.grid.dy
    }

    /// Mass divided by the Eulerian cell area. On the Eulerian mesh this is
    /// the cell average itself, bit for bit.
    #[inline]
    pub fn scaled_mass(&self, src: &PiecewisePoly, k: usize) -> f64 {
        let mut acc = 0.0;
        for p in self.pieces_of(k) {
            if let Some(poly) = Self::poly_of(src, p) {
                acc += poly.dot(&p.piece);
            }
        }
        acc
    }

    pub fn scaled_masses(&self, src: &PiecewisePoly) -> Vec<f64> {
        let g = &self.grid;
        let mut out = vec![0.0; g.num_cells()];
        par::for_each_row(&mut out, g.nx, |j, row| {
            for (i, m) in row.iter_mut().enumerate() {
                *m = self.scaled_mass(src, j * g.nx + i);
            }
        });
        out
    }

    /// Masses of `src` over every upstream cell.
    pub fn masses(&self, src: &PiecewisePoly) -> Vec<f64> {
        let g = &self.grid;
        let mut out = vec![0.0; g.num_cells()];
        par::for_each_row(&mut out, g.nx, |j, row| {
            for (i, m) in row.iter_mut().enumerate() {
                *m = self.mass(src, j * g.nx + i);
            }
        });
        out
    }

    /// Donor and mass-fixed polynomial for upstream cell `k`.
    fn remap_cell(&self, src: &PiecewisePoly, k: usize) -> RemappedCell {
        let g = &self.grid;
        if self.eulerian {
            let poly = src.polys()[k];
            let cell = ((k % g.nx) as isize, (k / g.nx) as isize);
            return RemappedCell {
                donor: cell,
                poly,
                mass: poly.coeffs[0] * g.dx * g.dy,
            };
        }
        let mass = self.mass(src, k);
        let scale = g.dx * g.dy;
        let mut best: Option<(f64, (isize, isize), (isize, isize), f64)> = None;
        let (r, qm) = (self.anchors[k], &self.quads[k]);
        for p in self.pieces_of(k) {
            if !p.candidate {
                continue;
            }
            let qb = qm.shifted((p.cell.0 - r.0) as f64, (p.cell.1 - r.1) as f64).basis();
            let cand = Self::poly_of(src, p).map_or(0.0, |poly| poly.dot(&qb)) * scale;
            let err = (cand - mass).abs();
            let key = g.canonical_cell(p.cell.0, p.cell.1);
            let better = match &best {
                None => true,
                Some((e, _, bk, _)) => err < *e || (err == *e && key < *bk),
            };
            if better {
                best = Some((err, p.cell, key, cand));
            }
        }
        let Some((_, donor, _, donor_mass)) = best else {
            // no piece is large enough to donate: fall back to the mean value
            let donor = self.pieces_of(k).first().map_or((0, 0), |p| p.cell);
            let mut poly = LocalPoly::ZERO;
            poly.coeffs[0] = mass / self.areas[k];
            return RemappedCell { donor, poly, mass };
        };
        let mut poly = src.poly_unwrapped(donor.0, donor.1);
        poly.coeffs[0] += (mass - donor_mass) / self.areas[k];
        RemappedCell { donor, poly, mass }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RemappedCell {
    /// Unwrapped donor index in the chart of the upstream cell.
    pub donor: (isize, isize),
    /// Donor polynomial with the shift folded into its constant term.
    pub poly: LocalPoly,
    /// Upstream mass.
    pub mass: f64,
}

/// Per-upstream-cell donor polynomials reproducing the upstream masses.
#[derive(Debug, Clone)]
pub struct RemappedField {
    grid: GridSpec,
    cells: Vec<RemappedCell>,
}

impl RemappedField {
    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn cell(&self, i: usize, j: usize) -> &RemappedCell {
        &self.cells[j * self.grid.nx + i]
    }

    pub fn cells(&self) -> &[RemappedCell] {
        &self.cells
    }

    pub fn masses(&self) -> Vec<f64> {
        self.cells.iter().map(|c| c.mass).collect()
    }

    /// Value of the remapped polynomial of upstream cell `(i, j)` at `p`.
    #[inline]
    pub fn eval(&self, i: usize, j: usize, p: Point) -> f64 {
        let c = self.cell(i, j);
        c.poly.eval_at(&self.grid, c.donor, p)
    }
}

/// Remaps `src` onto the overlay's upstream cells.
pub fn remap_on(overlay: &Overlay, src: &PiecewisePoly) -> RemappedField {
    let g = overlay.grid();
    let mut cells = vec![
        RemappedCell {
            donor: (0, 0),
            poly: LocalPoly::ZERO,
            mass: 0.0,
        };
        g.num_cells()
    ];
    par::for_each_row(&mut cells, g.nx, |j, row| {
        for (i, c) in row.iter_mut().enumerate() {
            *c = overlay.remap_cell(src, j * g.nx + i);
        }
    });
    RemappedField { grid: g.clone(), cells }
}

/// Builds the overlay and remaps in one go.
pub fn remap_field(src: &PiecewisePoly, mesh: &UpstreamMesh) -> Result<RemappedField> {
    Ok(remap_on(&Overlay::build(mesh)?, src))
}

/// Evaluates the remapped polynomial of upstream cell `cell` at `p`.
pub fn eval_remapped(rf: &RemappedField, cell: (usize, usize), p: Point) -> f64 {
    rf.eval(cell.0, cell.1, p)
}

/// Exact mass of `src` over a convex quad, clipping on the fly.
pub fn upstream_mass(src: &PiecewisePoly, q: &Quad) -> Result<f64> {
    if !check_convex(q) {
        return Err(Error::InvalidGrid("upstream cell must be a convex counter-clockwise quad".into()));
    }
    let g = src.grid();
    let mut acc = 0.0;
    for_each_piece(&q.0, g, |cell, verts, o| {
        if polygon_area(verts) > 0.0 {
            let poly = src.poly_unwrapped(cell.0, cell.1);
            acc += crate::geometry::integrate_relative(&poly, cell, verts, o, g);
        }
    });
    Ok(acc)
}

/// Index of the candidate whose mass is closest to `target`; ties go to the
/// lexicographically smallest cell.
pub fn select_donor(candidates: &[((isize, isize), f64)], target: f64) -> Option<(isize, isize)> {
    candidates
        .iter()
        .min_by(|a, b| {
            let (ea, eb) = ((a.1 - target).abs(), (b.1 - target).abs());
            ea.total_cmp(&eb).then(a.0.cmp(&b.0))
        })
        .map(|c| c.0)
}
