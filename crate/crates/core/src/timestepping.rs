//! Eulerian-Lagrangian Runge-Kutta integrators.
//!
//! Every stage `l` ending at `t + c_l dt` evolves masses over a time-shifted
//! copy of the upstream family whose last slice is the Eulerian mesh. Its
//! slice at stage time `t + c_m dt` is the canonical family traced by
//! `(c_m - c_l) dt` from the anchor; a positive offset traces forward. Stage
//! values are stored as Eulerian cell averages, so implicit diffusion is a
//! constant-coefficient solve on the Eulerian grid.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rustfft::num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::CellField;
use crate::fieldsolve::SpectralWorkspace;
use crate::geometry::{GridSpec, Point};
use crate::operators::{
    flux_divergence, flux_divergence_sampled, laplacian_averages, laplacian_symbol, sample_edges, EdgeQuadrature,
};
use crate::remap::{remap_on, Overlay};
use crate::velocity::{compute_dt, trace_offset, SpatialFn, StageVelocity, UpstreamMesh, VelocitySampler};
use crate::weno::{reconstruct_field, reconstruct_q0_field, PiecewisePoly, WenoParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scheme {
    ExplicitRK3,
    Imex111,
    Imex122,
    Imex233,
}

impl Scheme {
    pub const ALL: [Scheme; 4] = [Scheme::ExplicitRK3, Scheme::Imex111, Scheme::Imex122, Scheme::Imex233];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::ExplicitRK3 => "rk3",
            Scheme::Imex111 => "imex111",
            Scheme::Imex122 => "imex122",
            Scheme::Imex233 => "imex233",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.to_ascii_lowercase().replace(['(', ')', ',', '-', '_'], "");
        Scheme::ALL
            .into_iter()
            .find(|sc| sc.name() == key || (key == "explicitrk3" && *sc == Scheme::ExplicitRK3))
            .ok_or_else(|| Error::Config(format!("unknown scheme '{s}'")))
    }
}

/// Explicit and (optional) implicit tableaux sharing abscissae. Row and
/// column 0 belong to the initial value; stages are `1..=stages`.
#[derive(Debug, Clone, PartialEq)]
pub struct ButcherPair {
    pub scheme: Scheme,
    /// `(s, sigma, p)`.
    pub label: (usize, usize, usize),
    pub c: Vec<f64>,
    pub a_hat: Vec<Vec<f64>>,
    pub b_hat: Vec<f64>,
    pub a: Option<Vec<Vec<f64>>>,
    pub b: Option<Vec<f64>>,
}

impl ButcherPair {
    pub fn stages(&self) -> usize {
        self.c.len() - 1
    }

    fn check(self) -> Self {
        let n = self.c.len();
        let close = |x: f64, y: f64| (x - y).abs() < 1e-14;
        for k in 0..n {
            assert!(close(self.a_hat[k].iter().sum(), self.c[k]), "explicit row {k} sum");
            assert!(self.a_hat[k][k..].iter().all(|v| *v == 0.0), "explicit tableau must be strictly lower");
        }
        assert!(close(self.b_hat.iter().sum(), 1.0));
        if let (Some(a), Some(b)) = (&self.a, &self.b) {
            for k in 0..n {
                assert!(close(a[k].iter().sum(), self.c[k]), "implicit row {k} sum");
                assert_eq!(a[k][0], 0.0, "implicit first column must vanish");
                assert!(a[k][k + 1..].iter().all(|v| *v == 0.0));
            }
            assert!(close(b.iter().sum(), 1.0));
            assert_eq!(b[0], 0.0);
        }
        self
    }
}

/// IMEX(2,3,3) parameter.
pub fn imex233_gamma() -> f64 {
    (3.0 + 3f64.sqrt()) / 6.0
}

pub fn tableau(scheme: Scheme) -> ButcherPair {
    let pair = match scheme {
        Scheme::ExplicitRK3 => ButcherPair {
            scheme,
            label: (0, 3, 3),
            c: vec![0.0, 0.5, 1.0],
            a_hat: vec![vec![0.0; 3], vec![0.5, 0.0, 0.0], vec![-1.0, 2.0, 0.0]],
            b_hat: vec![1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0],
            a: None,
            b: None,
        },
        Scheme::Imex111 => ButcherPair {
            scheme,
            label: (1, 1, 1),
            c: vec![0.0, 1.0],
            a_hat: vec![vec![0.0, 0.0], vec![1.0, 0.0]],
            b_hat: vec![1.0, 0.0],
            a: Some(vec![vec![0.0, 0.0], vec![0.0, 1.0]]),
            b: Some(vec![0.0, 1.0]),
        },
        Scheme::Imex122 => ButcherPair {
            scheme,
            label: (1, 2, 2),
            c: vec![0.0, 0.5],
            a_hat: vec![vec![0.0, 0.0], vec![0.5, 0.0]],
            b_hat: vec![0.0, 1.0],
            a: Some(vec![vec![0.0, 0.0], vec![0.0, 0.5]]),
            b: Some(vec![0.0, 1.0]),
        },
        Scheme::Imex233 => {
            let g = imex233_gamma();
            ButcherPair {
                scheme,
                label: (2, 3, 3),
                c: vec![0.0, g, 1.0 - g],
                a_hat: vec![vec![0.0; 3], vec![g, 0.0, 0.0], vec![g - 1.0, 2.0 * (1.0 - g), 0.0]],
                b_hat: vec![0.0, 0.5, 0.5],
                a: Some(vec![vec![0.0; 3], vec![0.0, g, 0.0], vec![0.0, 1.0 - 2.0 * g, g]]),
                b: Some(vec![0.0, 0.5, 0.5]),
            }
        }
    };
    pair.check()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverMode {
    Spectral,
    ConjugateGradient,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImplicitSolver {
    pub mode: SolverMode,
    pub tol: f64,
    pub max_iter: usize,
}

impl ImplicitSolver {
    /// Spectral on fully periodic grids, conjugate gradients otherwise.
    pub fn for_grid(g: &GridSpec) -> Self {
        Self {
            mode: if g.is_periodic() { SolverMode::Spectral } else { SolverMode::ConjugateGradient },
            tol: 1e-12,
            max_iter: 2000,
        }
    }
}

/// Solves `(I - coeff D) x = rhs`.
pub fn implicit_solve(rhs: &CellField, coeff: f64, solver: &ImplicitSolver, g: &GridSpec) -> Result<CellField> {
    let mut cache = None;
    implicit_solve_with(rhs, coeff, solver, g, &mut cache)
}

fn implicit_solve_with(
    rhs: &CellField,
    coeff: f64,
    solver: &ImplicitSolver,
    g: &GridSpec,
    ws: &mut Option<Arc<SpectralWorkspace>>,
) -> Result<CellField> {
    if coeff == 0.0 {
        return Ok(rhs.clone());
    }
    match solver.mode {
        SolverMode::Spectral => {
            if ws.is_none() {
                *ws = Some(Arc::new(SpectralWorkspace::new(g)?));
            }
            let ws = ws.as_ref().unwrap();
            let mut spec: Vec<Complex64> = ws.forward(rhs.as_slice());
            let tau = 2.0 * std::f64::consts::PI;
            for q in 0..g.ny {
                let ty = tau * q as f64 / g.ny as f64;
                for p in 0..g.nx {
                    let tx = tau * p as f64 / g.nx as f64;
                    spec[q * g.nx + p] /= 1.0 - coeff * laplacian_symbol(tx, ty, g);
                }
            }
            Ok(CellField::from_vec(g.nx, g.ny, ws.inverse(spec)))
        }
        SolverMode::ConjugateGradient => conjugate_gradient(rhs, coeff, solver, g),
    }
}

fn conjugate_gradient(rhs: &CellField, coeff: f64, solver: &ImplicitSolver, g: &GridSpec) -> Result<CellField> {
    let apply = |x: &CellField| -> Vec<f64> {
        let d = laplacian_averages(x, g);
        x.as_slice().iter().zip(d.as_slice()).map(|(a, b)| a - coeff * b).collect()
    };
    let diag = 1.0 + coeff * 2.5 * (1.0 / (g.dx * g.dx) + 1.0 / (g.dy * g.dy));
    let b = rhs.as_slice();
    let bnorm = b.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if bnorm == 0.0 {
        return Ok(CellField::zeros(g.nx, g.ny));
    }
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let mut x = CellField::from_vec(g.nx, g.ny, b.iter().map(|v| v / diag).collect());
    let ax = apply(&x);
    let mut r: Vec<f64> = b.iter().zip(&ax).map(|(a, c)| a - c).collect();
    let mut z: Vec<f64> = r.iter().map(|v| v / diag).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    for it in 0..solver.max_iter {
        let res = r.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if res <= solver.tol * bnorm {
            return Ok(x);
        }
        let pf = CellField::from_vec(g.nx, g.ny, p.clone());
        let ap = apply(&pf);
        let alpha = rz / dot(&p, &ap);
        for (xi, pi) in x.as_mut_slice().iter_mut().zip(&p) {
            *xi += alpha * pi;
        }
        for (ri, api) in r.iter_mut().zip(&ap) {
            *ri -= alpha * api;
        }
        if it % 50 == 49 {
            // refresh the residual to avoid drift
            let ax = apply(&x);
            for ((ri, bi), axi) in r.iter_mut().zip(b).zip(&ax) {
                *ri = bi - axi;
            }
        }
        for (zi, ri) in z.iter_mut().zip(&r) {
            *zi = ri / diag;
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for (pi, zi) in p.iter_mut().zip(&z) {
            *pi = zi + beta * *pi;
        }
    }
    let res = r.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if res <= solver.tol * bnorm {
        return Ok(x);
    }
    Err(Error::SolverNonConvergence {
        iterations: solver.max_iter,
        residual: res / bnorm,
    })
}

/// Data attached to one stage value.
struct StageData {
    weno: PiecewisePoly,
    lap: Option<PiecewisePoly>,
    vel: StageVelocity,
}

struct Slice {
    frac: f64,
    mesh: UpstreamMesh,
    overlay: Overlay,
}

/// One integrator configured for a problem on a grid.
pub struct Stepper<'a> {
    pub pair: ButcherPair,
    pub eps: f64,
    pub solver: ImplicitSolver,
    pub weno: WenoParams,
    pub quad: EdgeQuadrature,
    sampler: &'a VelocitySampler,
    spectral: std::cell::RefCell<Option<Arc<SpectralWorkspace>>>,
    /// Separable-field samples on the Eulerian slice, which never moves.
    eulerian_samples: std::cell::RefCell<Option<Arc<Vec<Point>>>>,
}

impl<'a> Stepper<'a> {
    pub fn new(sampler: &'a VelocitySampler, scheme: Scheme, eps: f64, weno: WenoParams) -> Self {
        Self {
            pair: tableau(scheme),
            eps,
            solver: ImplicitSolver::for_grid(sampler.grid()),
            weno,
            quad: EdgeQuadrature::default(),
            sampler,
            spectral: std::cell::RefCell::new(None),
            eulerian_samples: std::cell::RefCell::new(None),
        }
    }

    pub fn sampler(&self) -> &VelocitySampler {
        self.sampler
    }

    fn stage_data(&self, u: &CellField, t: f64, vel: Option<StageVelocity>) -> StageData {
        let g = self.sampler.grid();
        StageData {
            weno: reconstruct_field(u, g, &self.weno),
            lap: (self.eps != 0.0).then(|| reconstruct_q0_field(&laplacian_averages(u, g), g)),
            vel: vel.unwrap_or_else(|| self.sampler.at(u, t)),
        }
    }

    fn edge_samples(&self, mesh: &UpstreamMesh, shape: &SpatialFn) -> Arc<Vec<Point>> {
        if !mesh.is_eulerian() {
            return Arc::new(sample_edges(mesh, &self.quad, shape));
        }
        self.eulerian_samples
            .borrow_mut()
            .get_or_insert_with(|| Arc::new(sample_edges(mesh, &self.quad, shape)))
            .clone()
    }

    /// Advances `u` from `t` to `t + dt`.
    pub fn step(&self, u: &CellField, t: f64, dt: f64) -> Result<CellField> {
        let g = self.sampler.grid().clone();
        let pair = &self.pair;
        let s = pair.stages();
        let cell_area = g.dx * g.dy;

        let nonlinear = self.sampler.provider().is_nonlinear();
        let vel0 = self.sampler.at(u, t);
        let nv = self.sampler.anchor(u, t, dt, nonlinear.then_some(&vel0));

        let mut slices: Vec<Slice> = Vec::new();
        let slice_index = |slices: &mut Vec<Slice>, frac: f64| -> Result<usize> {
            if let Some(k) = slices.iter().position(|s| (s.frac - frac).abs() < 1e-12) {
                return Ok(k);
            }
            let mesh = trace_offset(&nv, frac * dt)?;
            let overlay = Overlay::build(&mesh)?;
            slices.push(Slice { frac, mesh, overlay });
            Ok(slices.len() - 1)
        };

        let mut data: Vec<StageData> = vec![self.stage_data(u, t, Some(vel0))];

        // the last stage and the final update share slices; memoize the
        // per-(stage, slice) evaluations, already scaled to cell averages
        let mut flux_memo: HashMap<(usize, usize), Vec<f64>> = HashMap::new();
        let mut diff_memo: HashMap<(usize, usize), Vec<f64>> = HashMap::new();
        let mut mass_memo: HashMap<usize, Vec<f64>> = HashMap::new();
        let mut sample_memo: HashMap<usize, Arc<Vec<Point>>> = HashMap::new();

        // stage l accumulates on the family ending at c_l; the final update
        // uses the canonical family ending at 1
        for l in 1..=s + 1 {
            let (cl, a_hat_row, a_row, a_ll) = if l <= s {
                let a_row = pair.a.as_ref().map(|a| a[l].clone());
                let a_ll = a_row.as_ref().map_or(0.0, |r| r[l]);
                (pair.c[l], pair.a_hat[l].clone(), a_row, a_ll)
            } else {
                (1.0, pair.b_hat.clone(), pair.b.clone(), 0.0)
            };
            let k0 = slice_index(&mut slices, -cl)?;
            let mut rhs = mass_memo
                .entry(k0)
                .or_insert_with(|| slices[k0].overlay.scaled_masses(&data[0].weno))
                .clone();
            for (m, d) in data.iter().enumerate() {
                let ah = a_hat_row[m];
                if ah != 0.0 {
                    let k = slice_index(&mut slices, pair.c[m] - cl)?;
                    let f = flux_memo.entry((m, k)).or_insert_with(|| {
                        let rf = remap_on(&slices[k].overlay, &d.weno);
                        let slice = &slices[k];
                        let mut f = match d.vel.separable() {
                            Some((shape, scale)) => {
                                let samples = sample_memo
                                    .entry(k)
                                    .or_insert_with(|| self.edge_samples(&slice.mesh, shape))
                                    .clone();
                                flux_divergence_sampled(&slice.mesh, &rf, &nv, &self.quad, &samples, scale)
                            }
                            None => flux_divergence(&slice.mesh, &rf, &nv, &d.vel, &self.quad),
                        };
                        f.iter_mut().for_each(|v| *v /= cell_area);
                        f
                    });
                    for (r, f) in rhs.iter_mut().zip(f.iter()) {
                        *r += dt * ah * f;
                    }
                }
                let ai = a_row.as_ref().map_or(0.0, |r| r[m]);
                if ai != 0.0 && m != l && self.eps != 0.0 {
                    let k = slice_index(&mut slices, pair.c[m] - cl)?;
                    let f = diff_memo.entry((m, k)).or_insert_with(|| match &d.lap {
                        Some(lp) => slices[k].overlay.scaled_masses(lp).into_iter().map(|v| self.eps * v).collect(),
                        None => vec![0.0; g.num_cells()],
                    });
                    for (r, f) in rhs.iter_mut().zip(f.iter()) {
                        *r += dt * ai * f;
                    }
                }
            }
            let avg = CellField::from_vec(g.nx, g.ny, rhs);
            let next = if a_ll != 0.0 && self.eps != 0.0 {
                let mut ws = self.spectral.borrow_mut();
                implicit_solve_with(&avg, a_ll * dt * self.eps, &self.solver, &g, &mut ws)?
            } else {
                avg
            };
            if l > s {
                return Ok(next);
            }
            data.push(self.stage_data(&next, t + pair.c[l] * dt, None));
        }
        unreachable!("final update returns inside the loop")
    }
}

/// Per-step record of a run.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DiagnosticsSeries {
    pub names: Vec<String>,
    pub times: Vec<f64>,
    pub rows: Vec<Vec<f64>>,
}

impl DiagnosticsSeries {
    pub fn new(names: Vec<String>) -> Self {
        Self {
            names,
            ..Self::default()
        }
    }

    pub fn push(&mut self, t: f64, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.names.len());
        self.times.push(t);
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let k = self.names.iter().position(|n| n == name)?;
        Some(self.rows.iter().map(|r| r[k]).collect())
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// Knobs of the time loop.
pub struct RunOptions<'a> {
    pub cfl: f64,
    pub t_end: f64,
    /// Extra times the loop must land on exactly (snapshots).
    pub stop_times: Vec<f64>,
    /// Called after every accepted step with the step index, time and field.
    pub on_step: Option<&'a mut dyn FnMut(usize, f64, &CellField)>,
    /// Upper bound on the number of steps.
    pub max_steps: usize,
}

impl<'a> RunOptions<'a> {
    pub fn new(cfl: f64, t_end: f64) -> Self {
        Self {
            cfl,
            t_end,
            stop_times: Vec::new(),
            on_step: None,
            max_steps: 1_000_000,
        }
    }
}

/// Integrates from `(t0, u0)` to `t_end`. `diag` maps `(t, u)` to one row of
/// diagnostics; it is also applied to the initial state.
pub fn run(
    stepper: &Stepper<'_>,
    u0: &CellField,
    t0: f64,
    mut opts: RunOptions<'_>,
    names: Vec<String>,
    diag: &dyn Fn(f64, &CellField) -> Result<Vec<f64>>,
) -> Result<(CellField, DiagnosticsSeries)> {
    let mut series = DiagnosticsSeries::new(names);
    series.push(t0, diag(t0, u0)?);
    let mut u = u0.clone();
    let mut t = t0;
    let mut stops: Vec<f64> = opts.stop_times.iter().copied().filter(|s| *s > t0 && *s < opts.t_end).collect();
    stops.push(opts.t_end);
    stops.sort_by(f64::total_cmp);
    let mut step_no = 0;
    let eps_t = 1e-12 * opts.t_end.abs().max(1.0);
    while t < opts.t_end - eps_t {
        if step_no >= opts.max_steps {
            return Err(Error::Config(format!("step limit {} reached at t = {t}", opts.max_steps)));
        }
        let mut dt = compute_dt(stepper.sampler(), &u, t, opts.cfl)?;
        let next_stop = stops.iter().copied().find(|s| *s > t + eps_t).unwrap_or(opts.t_end);
        // land exactly on the next stop; avoid a sliver step right after it
        if t + dt >= next_stop - eps_t {
            dt = next_stop - t;
        }
        let mut tries = 0;
        let new = loop {
            match stepper.step(&u, t, dt) {
                Ok(v) => break v,
                Err(Error::NonConvexUpstreamCell { .. }) if tries < crate::velocity::MAX_HALVINGS => {
                    dt *= 0.5;
                    tries += 1;
                }
                Err(e) => return Err(e),
            }
        };
        step_no += 1;
        if !new.all_finite() {
            return Err(Error::NonFinite { step: step_no });
        }
        t = if (t + dt - next_stop).abs() <= eps_t { next_stop } else { t + dt };
        u = new;
        series.push(t, diag(t, &u)?);
        if let Some(cb) = opts.on_step.as_mut() {
            cb(step_no, t, &u);
        }
    }
    Ok((u, series))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::velocity::VelocityProvider;
    use std::f64::consts::PI;

    fn periodic(n: usize) -> GridSpec {
        GridSpec::periodic([0.0, 2.0 * PI, 0.0, 2.0 * PI], n, n).unwrap()
    }

    #[test]
    fn tableau_values() {
        let t = tableau(Scheme::Imex111);
        assert_eq!(t.b_hat, vec![1.0, 0.0]);
        let t = tableau(Scheme::Imex122);
        assert_eq!(t.a.as_ref().unwrap()[1][1], 0.5);
        assert_eq!(t.b.as_ref().unwrap(), &vec![0.0, 1.0]);
        assert!((imex233_gamma() - 0.788_675_134_594_812_9).abs() < 1e-15);
        let t = tableau(Scheme::ExplicitRK3);
        assert_eq!(t.a_hat[2], vec![-1.0, 2.0, 0.0]);
        assert!(t.a.is_none());
    }

    #[test]
    fn scheme_names_parse() {
        assert_eq!("IMEX(2,3,3)".parse::<Scheme>().unwrap(), Scheme::Imex233);
        assert_eq!("rk3".parse::<Scheme>().unwrap(), Scheme::ExplicitRK3);
        assert!("rk4".parse::<Scheme>().is_err());
    }

    #[test]
    fn solve_trivial_cases() {
        let g = periodic(8);
        let s = ImplicitSolver::for_grid(&g);
        let rhs = CellField::from_fn(&g, |x, y| x.sin() + y);
        assert_eq!(implicit_solve(&rhs, 0.0, &s, &g).unwrap(), rhs);
        let c = CellField::from_vec(8, 8, vec![3.0; 64]);
        let x = implicit_solve(&c, 0.7, &s, &g).unwrap();
        assert!(x.as_slice().iter().all(|v| (v - 3.0).abs() < 1e-13));
    }

    #[test]
    fn spectral_mode_division() {
        let g = periodic(16);
        let s = ImplicitSolver::for_grid(&g);
        let rhs = CellField::from_fn(&g, |x, y| (2.0 * x + y).cos());
        let coeff = 0.01;
        let x = implicit_solve(&rhs, coeff, &s, &g).unwrap();
        let lam = laplacian_symbol(2.0 * g.dx, g.dy, &g);
        for (a, b) in x.as_slice().iter().zip(rhs.as_slice()) {
            assert!((a - b / (1.0 - coeff * lam)).abs() < 1e-13);
        }
    }

    #[test]
    fn cg_matches_operator() {
        let g = GridSpec::new(
            [0.0, 1.0, 0.0, 1.0],
            12,
            10,
            (crate::Boundary::ZeroGhost, crate::Boundary::ZeroGhost),
        )
        .unwrap();
        let s = ImplicitSolver::for_grid(&g);
        assert_eq!(s.mode, SolverMode::ConjugateGradient);
        let rhs = CellField::from_fn(&g, |x, y| (x * 7.0).sin() * y);
        let coeff = 0.002;
        let x = implicit_solve(&rhs, coeff, &s, &g).unwrap();
        let d = laplacian_averages(&x, &g);
        for ((xi, di), bi) in x.as_slice().iter().zip(d.as_slice()).zip(rhs.as_slice()) {
            assert!((xi - coeff * di - bi).abs() <= 1e-11);
        }
        let tight = ImplicitSolver { max_iter: 1, ..s };
        assert!(matches!(
            implicit_solve(&rhs, coeff, &tight, &g),
            Err(Error::SolverNonConvergence { .. })
        ));
    }

    #[test]
    fn zero_velocity_is_identity() {
        let g = periodic(10);
        let sampler = VelocitySampler::new(VelocityProvider::analytic(|_, _, _| [0.0, 0.0]), &g, WenoParams::default()).unwrap();
        let u = CellField::from_fn(&g, |x, y| (x.sin() * y.cos()).exp());
        for scheme in [Scheme::ExplicitRK3, Scheme::Imex233] {
            let st = Stepper::new(&sampler, scheme, 0.0, WenoParams::default());
            let v = st.step(&u, 0.0, 0.1).unwrap();
            assert_eq!(v, u, "{scheme}");
        }
    }

    #[test]
    fn constant_translation_conserves_mass() {
        let g = periodic(16);
        let sampler = VelocitySampler::new(VelocityProvider::analytic(|_, _, _| [1.0, 0.0]), &g, WenoParams::default()).unwrap();
        let u = CellField::from_fn(&g, |x, y| (x.sin() * y.cos()).exp());
        for scheme in [Scheme::ExplicitRK3, Scheme::Imex122] {
            let st = Stepper::new(&sampler, scheme, 0.0, WenoParams::default());
            let v = st.step(&u, 0.0, 0.3).unwrap();
            assert!((v.mass(&g) - u.mass(&g)).abs() <= 1e-13 * u.abs_mass(&g));
        }
    }

    #[test]
    fn pure_diffusion_amplification() {
        let g = periodic(16);
        let sampler = VelocitySampler::new(VelocityProvider::analytic(|_, _, _| [0.0, 0.0]), &g, WenoParams::default()).unwrap();
        let eps = 0.3;
        let dt = 0.05;
        let st = Stepper::new(&sampler, Scheme::Imex233, eps, WenoParams::default());
        let u = CellField::from_fn(&g, |x, y| (3.0 * x - 2.0 * y).sin());
        let v = st.step(&u, 0.0, dt).unwrap();
        let z = dt * eps * laplacian_symbol(3.0 * g.dx, -2.0 * g.dy, &g);
        // scalar recurrence of the implicit tableau for y' = lambda y
        let gm = imex233_gamma();
        let y1 = 1.0 / (1.0 - gm * z);
        let y2 = (1.0 + (1.0 - 2.0 * gm) * z * y1) / (1.0 - gm * z);
        let r = 1.0 + 0.5 * z * y1 + 0.5 * z * y2;
        for (a, b) in v.as_slice().iter().zip(u.as_slice()) {
            assert!((a - r * b).abs() < 1e-12);
        }
    }
}
