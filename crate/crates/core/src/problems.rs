//! Benchmark problems, error norms and physics diagnostics.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::field::CellField;
use crate::fieldsolve::{solve_guiding_center, SpectralWorkspace};
use crate::geometry::{Boundary, GridSpec};
use crate::timestepping::{run, DiagnosticsSeries, RunOptions, Scheme, Stepper};
use crate::velocity::{FieldCoupling, VelocityProvider, VelocitySampler};
use crate::weno::WenoParams;

/// `(x, y) -> u`.
pub type ScalarFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;
/// `(x, y, t) -> u`.
pub type ExactFn = Arc<dyn Fn(f64, f64, f64) -> f64 + Send + Sync>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SdfIc {
    SmoothBell,
    Discontinuous,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LbfpIc {
    Maxwellian,
    TwoMaxwellians,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InsIc {
    SmoothExact,
    VortexPatch,
}

/// Which benchmark a definition belongs to; selects the diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProblemKind {
    SwirlingDeformation(SdfIc),
    FokkerPlanck(LbfpIc),
    KelvinHelmholtz,
    NavierStokes(InsIc),
}

impl ProblemKind {
    pub const ALL: [ProblemKind; 7] = [
        ProblemKind::SwirlingDeformation(SdfIc::SmoothBell),
        ProblemKind::SwirlingDeformation(SdfIc::Discontinuous),
        ProblemKind::FokkerPlanck(LbfpIc::Maxwellian),
        ProblemKind::FokkerPlanck(LbfpIc::TwoMaxwellians),
        ProblemKind::KelvinHelmholtz,
        ProblemKind::NavierStokes(InsIc::SmoothExact),
        ProblemKind::NavierStokes(InsIc::VortexPatch),
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::SwirlingDeformation(SdfIc::SmoothBell) => "sdf",
            Self::SwirlingDeformation(SdfIc::Discontinuous) => "sdf-disc",
            Self::FokkerPlanck(LbfpIc::Maxwellian) => "lbfp",
            Self::FokkerPlanck(LbfpIc::TwoMaxwellians) => "lbfp-relax",
            Self::KelvinHelmholtz => "kh",
            Self::NavierStokes(InsIc::SmoothExact) => "ins",
            Self::NavierStokes(InsIc::VortexPatch) => "vortex-patch",
        }
    }

    pub fn def(self) -> ProblemDef {
        match self {
            Self::SwirlingDeformation(ic) => swirling_deformation(ic),
            Self::FokkerPlanck(ic) => lbfp_problem(ic),
            Self::KelvinHelmholtz => guiding_center_kh(),
            Self::NavierStokes(ic) => ins_problem(ic),
        }
    }
}

impl fmt::Display for ProblemKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ProblemKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase().replace('_', "-");
        Self::ALL.into_iter().find(|k| k.name() == key).ok_or_else(|| {
            let names: Vec<_> = Self::ALL.iter().map(|k| k.name()).collect();
            Error::Config(format!("unknown problem '{s}' (expected one of {})", names.join(", ")))
        })
    }
}

/// A benchmark: domain, velocity, diffusion, initial data and exact solution.
#[derive(Clone)]
pub struct ProblemDef {
    pub kind: ProblemKind,
    pub bounds: [f64; 4],
    pub bcs: (Boundary, Boundary),
    pub velocity: VelocityProvider,
    pub eps: f64,
    pub scheme: Scheme,
    pub ic: ScalarFn,
    pub exact: Option<ExactFn>,
    /// When set, `exact` is only valid at integer multiples of this period.
    pub exact_period: Option<f64>,
}

impl fmt::Debug for ProblemDef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProblemDef")
            .field("kind", &self.kind)
            .field("bounds", &self.bounds)
            .field("bcs", &self.bcs)
            .field("velocity", &self.velocity)
            .field("eps", &self.eps)
            .field("scheme", &self.scheme)
            .field("exact", &self.exact.is_some())
            .finish()
    }
}

impl ProblemDef {
    pub fn name(&self) -> &'static str {
        self.kind.name()
    }

    pub fn grid(&self, nx: usize, ny: usize) -> Result<GridSpec> {
        GridSpec::new(self.bounds, nx, ny, self.bcs)
    }

    /// Initial cell averages.
    pub fn initial(&self, g: &GridSpec) -> CellField {
        let ic = self.ic.clone();
        CellField::from_fn(g, move |x, y| ic(x, y))
    }

    /// The exact solution at time `t`, when known.
    pub fn exact_at(&self, t: f64) -> Option<impl Fn(f64, f64) -> f64 + '_> {
        if let Some(p) = self.exact_period {
            let k = (t / p).round();
            if (t - k * p).abs() > 1e-12 * p.max(t.abs()) {
                return None;
            }
        }
        self.exact.as_ref().map(|e| move |x: f64, y: f64| e(x, y, t))
    }

    pub fn sampler(&self, g: &GridSpec, weno: WenoParams) -> Result<VelocitySampler> {
        VelocitySampler::new(self.velocity.clone(), g, weno)
    }

    pub fn diagnostic_names(&self) -> Vec<String> {
        let mut v = vec!["mass", "min", "max"];
        v.extend_from_slice(match self.kind {
            ProblemKind::FokkerPlanck(_) => &["density", "vx", "vy", "temperature"][..],
            ProblemKind::KelvinHelmholtz => &["energy", "entropy"][..],
            ProblemKind::NavierStokes(_) => &["enstrophy"][..],
            ProblemKind::SwirlingDeformation(_) => &[][..],
        });
        v.into_iter().map(String::from).collect()
    }
}

/// Swirl at unit amplitude; `2 cos^2(x/2) = 1 + cos x`.
fn swirl_shape(x: f64, y: f64) -> [f64; 2] {
    let (sx, cx) = x.sin_cos();
    let (sy, cy) = y.sin_cos();
    [-PI * (1.0 + cx) * sy, PI * sx * (1.0 + cy)]
}

/// Time factor of the swirl, period 1.5.
fn swirl_modulation(t: f64) -> f64 {
    (PI * t / 1.5).cos()
}

#[cfg(test)]
fn swirl(x: f64, y: f64, t: f64) -> [f64; 2] {
    let v = swirl_shape(x, y);
    let g = swirl_modulation(t);
    [g * v[0], g * v[1]]
}

pub const BELL_RADIUS: f64 = 0.3 * PI;

/// Cosine bell of radius `0.3 pi` centred at `(0.3 pi, 0)`.
pub fn cosine_bell(x: f64, y: f64) -> f64 {
    let r = (x - 0.3 * PI).hypot(y);
    if r < BELL_RADIUS {
        BELL_RADIUS * (r * PI / (2.0 * BELL_RADIUS)).cos().powi(6)
    } else {
        0.0
    }
}

/// Slotted cylinder, cone and smooth bell.
pub fn three_bodies(x: f64, y: f64) -> f64 {
    let r0 = BELL_RADIUS;
    let (cx, cy) = (0.0, 0.5 * PI);
    if (x - cx).hypot(y - cy) <= r0 {
        let in_slot = (x - cx).abs() <= 0.05 * PI && y <= cy + 0.1 * PI;
        return if in_slot { 0.0 } else { 1.0 };
    }
    let rc = (x + 0.45 * PI).hypot(y + 0.25 * PI);
    if rc <= r0 {
        return 1.0 - rc / r0;
    }
    let rb = (x - 0.45 * PI).hypot(y + 0.25 * PI);
    if rb <= r0 {
        return 0.25 * (1.0 + (PI * rb / r0).cos());
    }
    0.0
}

pub fn swirling_deformation(ic: SdfIc) -> ProblemDef {
    let (icf, exact): (ScalarFn, Option<ExactFn>) = match ic {
        // the flow reverses at t = 0.75 and restores the data at t = 1.5
        SdfIc::SmoothBell => (
            Arc::new(cosine_bell),
            Some(Arc::new(|x, y, _t| cosine_bell(x, y))),
        ),
        SdfIc::Discontinuous => (Arc::new(three_bodies), None),
    };
    ProblemDef {
        kind: ProblemKind::SwirlingDeformation(ic),
        bounds: [-PI, PI, -PI, PI],
        bcs: (Boundary::Periodic, Boundary::Periodic),
        velocity: VelocityProvider::separable(swirl_shape, swirl_modulation, 1.0),
        eps: 0.0,
        scheme: Scheme::ExplicitRK3,
        ic: icf,
        exact,
        exact_period: Some(1.5),
    }
}

/// Gas constant of the Fokker-Planck example.
pub const GAS_CONSTANT: f64 = 1.0 / 6.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Maxwellian {
    pub n: f64,
    pub vx: f64,
    pub vy: f64,
    pub temperature: f64,
}

impl Maxwellian {
    pub fn eval(&self, x: f64, y: f64) -> f64 {
        let rt = GAS_CONSTANT * self.temperature;
        let d2 = (x - self.vx).powi(2) + (y - self.vy).powi(2);
        self.n / (2.0 * PI * rt) * (-d2 / (2.0 * rt)).exp()
    }
}

pub const EQUILIBRIUM: Maxwellian = Maxwellian {
    n: PI,
    vx: 1.0,
    vy: 1.0,
    temperature: 3.0,
};

pub const RELAXATION_PAIR: [Maxwellian; 2] = [
    Maxwellian {
        n: 1.990964530353041,
        vx: 0.4979792385268875,
        vy: 0.0,
        temperature: 2.46518981703837,
    },
    Maxwellian {
        n: 1.150628123236752,
        vx: -0.8616676237412346,
        vy: 0.0,
        temperature: 0.4107062104302872,
    },
];

pub fn lbfp_problem(ic: LbfpIc) -> ProblemDef {
    let eps_c = 1.0;
    let diffusion = GAS_CONSTANT * EQUILIBRIUM.temperature;
    let (icf, exact, bulk): (ScalarFn, Option<ExactFn>, [f64; 2]) = match ic {
        LbfpIc::Maxwellian => (
            Arc::new(|x, y| EQUILIBRIUM.eval(x, y)),
            Some(Arc::new(|x, y, _t| EQUILIBRIUM.eval(x, y))),
            [EQUILIBRIUM.vx, EQUILIBRIUM.vy],
        ),
        // the pair carries zero net momentum, so it relaxes towards v = 0
        LbfpIc::TwoMaxwellians => (
            Arc::new(|x, y| RELAXATION_PAIR[0].eval(x, y) + RELAXATION_PAIR[1].eval(x, y)),
            None,
            [0.0, 0.0],
        ),
    };
    ProblemDef {
        kind: ProblemKind::FokkerPlanck(ic),
        bounds: [-2.0 * PI, 2.0 * PI, -2.0 * PI, 2.0 * PI],
        bcs: (Boundary::ZeroGhost, Boundary::ZeroGhost),
        velocity: VelocityProvider::analytic(move |x, y, _t| [-(x - bulk[0]) / eps_c, -(y - bulk[1]) / eps_c]),
        eps: diffusion / eps_c,
        scheme: Scheme::Imex233,
        ic: icf,
        exact,
        exact_period: None,
    }
}

pub fn guiding_center_kh() -> ProblemDef {
    ProblemDef {
        kind: ProblemKind::KelvinHelmholtz,
        bounds: [0.0, 4.0 * PI, 0.0, 2.0 * PI],
        bcs: (Boundary::Periodic, Boundary::Periodic),
        velocity: VelocityProvider::SolvedField(FieldCoupling::GuidingCenter),
        eps: 0.0,
        scheme: Scheme::ExplicitRK3,
        ic: Arc::new(|x: f64, y: f64| y.sin() + 0.015 * (0.5 * x).cos()),
        exact: None,
        exact_period: None,
    }
}

pub const VISCOSITY: f64 = 0.01;

fn vortex_patch(x: f64, y: f64) -> f64 {
    let in_x = (0.5 * PI..=1.5 * PI).contains(&x);
    if in_x && (0.25 * PI..=0.75 * PI).contains(&y) {
        -1.0
    } else if in_x && (1.25 * PI..=1.75 * PI).contains(&y) {
        1.0
    } else {
        0.0
    }
}

pub fn ins_problem(ic: InsIc) -> ProblemDef {
    let (icf, exact): (ScalarFn, Option<ExactFn>) = match ic {
        InsIc::SmoothExact => (
            Arc::new(|x: f64, y: f64| -2.0 * x.sin() * y.sin()),
            Some(Arc::new(|x: f64, y: f64, t: f64| {
                -2.0 * x.sin() * y.sin() * (-2.0 * VISCOSITY * t).exp()
            })),
        ),
        InsIc::VortexPatch => (Arc::new(vortex_patch), None),
    };
    ProblemDef {
        kind: ProblemKind::NavierStokes(ic),
        bounds: [0.0, 2.0 * PI, 0.0, 2.0 * PI],
        bcs: (Boundary::Periodic, Boundary::Periodic),
        velocity: VelocityProvider::SolvedField(FieldCoupling::Streamfunction),
        eps: VISCOSITY,
        scheme: Scheme::Imex233,
        ic: icf,
        exact,
        exact_period: None,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorNorms {
    pub l1: f64,
    pub l2: f64,
    pub linf: f64,
}

impl ErrorNorms {
    pub fn as_array(&self) -> [f64; 3] {
        [self.l1, self.l2, self.linf]
    }

    /// Norms of the domain mean: `L1 / |Omega|` and `L2 / |Omega|^(1/2)`.
    pub fn per_unit_area(self, domain_area: f64) -> Self {
        Self {
            l1: self.l1 / domain_area,
            l2: self.l2 / domain_area.sqrt(),
            linf: self.linf,
        }
    }
}

/// How error norms are weighted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NormScale {
    /// `sum dx dy |e|`.
    Integrated,
    /// The integrated norms divided by the domain measure.
    #[default]
    DomainMean,
}

impl FromStr for NormScale {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "integrated" | "integral" => Ok(Self::Integrated),
            "mean" | "domain-mean" => Ok(Self::DomainMean),
            _ => Err(Error::Config(format!("unknown norm scale '{s}' (expected integrated or mean)"))),
        }
    }
}

impl NormScale {
    pub fn apply(self, n: ErrorNorms, g: &GridSpec) -> ErrorNorms {
        match self {
            Self::Integrated => n,
            Self::DomainMean => n.per_unit_area(g.lx() * g.ly()),
        }
    }
}

/// Norms of `u - reference` where both are cell averages on `g`.
pub fn error_norms_vs(u: &CellField, reference: &CellField, g: &GridSpec) -> ErrorNorms {
    let area = g.cell_area();
    let mut n = ErrorNorms { l1: 0.0, l2: 0.0, linf: 0.0 };
    for (a, b) in u.as_slice().iter().zip(reference.as_slice()) {
        let e = (a - b).abs();
        n.l1 += area * e;
        n.l2 += area * e * e;
        n.linf = n.linf.max(e);
    }
    n.l2 = n.l2.sqrt();
    n
}

/// Norms of `u` against the cell averages of `exact`.
pub fn error_norms(u: &CellField, exact: impl Fn(f64, f64) -> f64, g: &GridSpec) -> ErrorNorms {
    error_norms_vs(u, &CellField::from_fn(g, exact), g)
}

/// Observed order between two levels with refinement ratio `ratio`.
pub fn observed_order(coarse: f64, fine: f64, ratio: f64) -> f64 {
    (coarse / fine).ln() / ratio.ln()
}

/// `(Q(t) - Q(0)) / |Q(0)|`.
pub fn relative_deviation(series: &[f64]) -> Vec<f64> {
    let q0 = series.first().copied().unwrap_or(0.0);
    series.iter().map(|q| (q - q0) / q0.abs()).collect()
}

/// Reusable state for [`diagnostics`].
pub struct DiagnosticsContext<'a> {
    problem: &'a ProblemDef,
    grid: GridSpec,
    spectral: Option<SpectralWorkspace>,
}

impl<'a> DiagnosticsContext<'a> {
    pub fn new(problem: &'a ProblemDef, g: &GridSpec) -> Result<Self> {
        let spectral = match problem.kind {
            ProblemKind::KelvinHelmholtz => Some(SpectralWorkspace::new(g)?),
            _ => None,
        };
        Ok(Self {
            problem,
            grid: g.clone(),
            spectral,
        })
    }

    pub fn names(&self) -> Vec<String> {
        self.problem.diagnostic_names()
    }

    pub fn eval(&self, u: &CellField) -> Result<Vec<f64>> {
        diagnostics(u, self.problem, &self.grid, self.spectral.as_ref())
    }
}

/// Mass, extrema and the problem's physics scalars, ordered as
/// [`ProblemDef::diagnostic_names`].
pub fn diagnostics(u: &CellField, p: &ProblemDef, g: &GridSpec, ws: Option<&SpectralWorkspace>) -> Result<Vec<f64>> {
    let area = g.cell_area();
    let mass = u.mass(g);
    let mut out = vec![mass, u.min(), u.max()];
    match p.kind {
        ProblemKind::FokkerPlanck(_) => {
            if !(mass > 0.0) {
                return Err(Error::Moments(format!("number density {mass} is not positive")));
            }
            let mut m = [0.0; 2];
            for j in 0..g.ny {
                for i in 0..g.nx {
                    let [x, y] = g.center(i as isize, j as isize);
                    let w = area * u.get(i, j);
                    m[0] += w * x;
                    m[1] += w * y;
                }
            }
            let (vx, vy) = (m[0] / mass, m[1] / mass);
            let mut e = 0.0;
            for j in 0..g.ny {
                for i in 0..g.nx {
                    let [x, y] = g.center(i as isize, j as isize);
                    e += area * ((x - vx).powi(2) + (y - vy).powi(2)) * u.get(i, j);
                }
            }
            out.extend([mass, vx, vy, e / (2.0 * mass * GAS_CONSTANT)]);
        }
        ProblemKind::KelvinHelmholtz => {
            let owned;
            let ws = match ws {
                Some(w) => w,
                None => {
                    owned = SpectralWorkspace::new(g)?;
                    &owned
                }
            };
            let e = solve_guiding_center(ws, u);
            let mut energy = 0.0;
            for j in 0..g.ny {
                for i in 0..g.nx {
                    let [a, b] = e.at_center(i, j);
                    energy += area * (a * a + b * b);
                }
            }
            let entropy = u.as_slice().iter().map(|v| area * v * v).sum::<f64>();
            out.extend([energy, entropy]);
        }
        ProblemKind::NavierStokes(_) => {
            out.push(u.as_slice().iter().map(|v| area * v * v).sum::<f64>());
        }
        ProblemKind::SwirlingDeformation(_) => {}
    }
    Ok(out)
}

/// Settings of one simulation.
#[derive(Debug, Clone)]
pub struct SimConfig {
    pub nx: usize,
    pub ny: usize,
    pub cfl: f64,
    pub t_end: f64,
    pub scheme: Option<Scheme>,
    pub weno: WenoParams,
    pub cg_tol: f64,
    pub cg_max_iter: usize,
}

impl SimConfig {
    pub fn new(n: usize, cfl: f64, t_end: f64) -> Self {
        Self {
            nx: n,
            ny: n,
            cfl,
            t_end,
            scheme: None,
            weno: WenoParams::default(),
            cg_tol: 1e-12,
            cg_max_iter: 2000,
        }
    }
}

/// Runs `problem` from its initial data. `on_step` sees every accepted step.
pub fn simulate(
    problem: &ProblemDef,
    cfg: &SimConfig,
    stop_times: Vec<f64>,
    on_step: Option<&mut dyn FnMut(usize, f64, &CellField)>,
) -> Result<(CellField, DiagnosticsSeries)> {
    let g = problem.grid(cfg.nx, cfg.ny)?;
    let sampler = problem.sampler(&g, cfg.weno)?;
    let mut stepper = Stepper::new(&sampler, cfg.scheme.unwrap_or(problem.scheme), problem.eps, cfg.weno);
    stepper.solver.tol = cfg.cg_tol;
    stepper.solver.max_iter = cfg.cg_max_iter;
    let ctx = DiagnosticsContext::new(problem, &g)?;
    let u0 = problem.initial(&g);
    let mut opts = RunOptions::new(cfg.cfl, cfg.t_end);
    opts.stop_times = stop_times;
    opts.on_step = on_step;
    run(&stepper, &u0, 0.0, opts, ctx.names(), &|_, u| ctx.eval(u))
}
