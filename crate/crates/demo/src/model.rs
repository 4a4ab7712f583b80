//! Demo state in plain Rust, so it can be tested off the browser.

use elweno::geometry::clip_quad_to_grid;
use elweno::problems::{ProblemDef, ProblemKind};
use elweno::timestepping::Stepper;
use elweno::velocity::{compute_dt, trace_offset, UpstreamMesh, VelocitySampler, MAX_HALVINGS};
use elweno::{CellField, Error, GridSpec, Result, WenoParams};

pub struct Model {
    problem: ProblemDef,
    grid: GridSpec,
    sampler: VelocitySampler,
    u: CellField,
    t: f64,
    cfl: f64,
    steps: usize,
}

impl Model {
    pub fn new(problem: &str, n: usize, cfl: f64) -> Result<Self> {
        if !(4..=256).contains(&n) {
            return Err(Error::Config(format!("mesh size {n} outside 4..=256")));
        }
        if !(cfl > 0.0 && cfl <= 40.0) {
            return Err(Error::Config(format!("cfl {cfl} outside (0, 40]")));
        }
        let problem = problem.parse::<ProblemKind>()?.def();
        let grid = problem.grid(n, n)?;
        let sampler = problem.sampler(&grid, WenoParams::default())?;
        let u = problem.initial(&grid);
        Ok(Self { problem, grid, sampler, u, t: 0.0, cfl, steps: 0 })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn field(&self) -> &CellField {
        &self.u
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn set_cfl(&mut self, cfl: f64) {
        if cfl > 0.0 && cfl <= 40.0 {
            self.cfl = cfl;
        }
    }

    /// One step at the current CFL number, halved while upstream cells
    /// fail the convexity check. Returns the new time.
    pub fn step(&mut self) -> Result<f64> {
        let stepper = Stepper::new(&self.sampler, self.problem.scheme, self.problem.eps, WenoParams::default());
        let mut dt = compute_dt(&self.sampler, &self.u, self.t, self.cfl)?;
        let mut tries = 0;
        let next = loop {
            match stepper.step(&self.u, self.t, dt) {
                Ok(v) => break v,
                Err(Error::NonConvexUpstreamCell { .. }) if tries < MAX_HALVINGS => {
                    dt *= 0.5;
                    tries += 1;
                }
                Err(e) => return Err(e),
            }
        };
        self.steps += 1;
        if !next.all_finite() {
            return Err(Error::NonFinite { step: self.steps });
        }
        self.u = next;
        self.t += dt;
        Ok(self.t)
    }

    /// Upstream mesh of one step of size `cfl`-scaled `dt` ending at the
    /// current time.
    pub fn upstream(&self, cfl: f64) -> Result<UpstreamMesh> {
        let dt = compute_dt(&self.sampler, &self.u, self.t, cfl)?;
        let nv = self.sampler.at(&self.u, self.t).nodes(&self.grid, self.t);
        trace_offset(&nv, -dt)
    }

    /// Pieces of upstream cell `(i, j)`, flattened as
    /// `[cell_i, cell_j, vertex count, x0, y0, x1, y1, ...]` per piece.
    pub fn clip_pieces(&self, cfl: f64, i: usize, j: usize) -> Result<Vec<f64>> {
        if i >= self.grid.nx || j >= self.grid.ny {
            return Err(Error::Config(format!("cell ({i}, {j}) outside the mesh")));
        }
        let mesh = self.upstream(cfl)?;
        let mut out = Vec::new();
        for piece in clip_quad_to_grid(&mesh.quad(i, j), &self.grid)? {
            let verts = piece.vertices();
            out.extend([piece.cell.0 as f64, piece.cell.1 as f64, verts.len() as f64]);
            out.extend(verts.iter().flat_map(|v| [v[0], v[1]]));
        }
        Ok(out)
    }
}
