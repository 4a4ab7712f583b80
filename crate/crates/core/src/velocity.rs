//! Velocity providers, the modified (node-interpolated, characteristic-frozen)
//! velocity field, upstream meshes and time-step selection.

use std::fmt;
use std::sync::{Arc, OnceLock};

use crate::error::{Error, Result};
use crate::field::CellField;
use crate::fieldsolve::{self, SampledVelocity, SpectralWorkspace};
use crate::geometry::{check_convex, Boundary, GridSpec, Point, Quad};
use crate::par;
use crate::weno::{reconstruct_field, PiecewisePoly, WenoParams};

/// `(x, y, t) -> (a, b)`.
pub type VelocityFn = Arc<dyn Fn(f64, f64, f64) -> [f64; 2] + Send + Sync>;
/// `(x, y) -> (a, b)`.
pub type SpatialFn = Arc<dyn Fn(f64, f64) -> [f64; 2] + Send + Sync>;
/// `t -> g(t)`.
pub type ModulationFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
/// `u -> (f1'(u), f2'(u))`.
pub type FluxDerivativeFn = Arc<dyn Fn(f64) -> [f64; 2] + Send + Sync>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldCoupling {
    /// `-Lap(phi) = rho`, velocity `(-phi_y, phi_x)`.
    GuidingCenter,
    /// `Lap(psi) = omega`, velocity `(psi_y, -psi_x)`.
    Streamfunction,
}

#[derive(Clone)]
pub enum VelocityProvider {
    Analytic(VelocityFn),
    /// `g(t) * v(x, y)`; the time factor is evaluated once per stage.
    /// `bound` is `sup |g|`, which fixes the step size for the whole run.
    Separable { spatial: SpatialFn, modulation: ModulationFn, bound: f64 },
    FluxDerivative(FluxDerivativeFn),
    SolvedField(FieldCoupling),
}

impl fmt::Debug for VelocityProvider {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Analytic(_) => f.write_str("Analytic"),
            Self::Separable { .. } => f.write_str("Separable"),
            Self::FluxDerivative(_) => f.write_str("FluxDerivative"),
            Self::SolvedField(c) => write!(f, "SolvedField({c:?})"),
        }
    }
}

impl VelocityProvider {
    pub fn analytic(f: impl Fn(f64, f64, f64) -> [f64; 2] + Send + Sync + 'static) -> Self {
        Self::Analytic(Arc::new(f))
    }

    pub fn separable(
        spatial: impl Fn(f64, f64) -> [f64; 2] + Send + Sync + 'static,
        modulation: impl Fn(f64) -> f64 + Send + Sync + 'static,
        bound: f64,
    ) -> Self {
        Self::Separable {
            spatial: Arc::new(spatial),
            modulation: Arc::new(modulation),
            bound,
        }
    }

    pub fn flux_derivative(f: impl Fn(f64) -> [f64; 2] + Send + Sync + 'static) -> Self {
        Self::FluxDerivative(Arc::new(f))
    }

    /// Whether the velocity depends on the solution.
    pub fn is_nonlinear(&self) -> bool {
        !matches!(self, Self::Analytic(_) | Self::Separable { .. })
    }
}

/// The velocity at one time level, evaluable anywhere in the domain.
#[derive(Clone)]
pub enum StageVelocity {
    Analytic { f: VelocityFn, t: f64 },
    /// `scale * f`; `peak` holds the lattice maxima of `|f|`, shared by
    /// every stage of one sampler.
    Scaled { f: SpatialFn, scale: f64, peak: Arc<OnceLock<(f64, f64)>> },
    Reconstructed { poly: Arc<PiecewisePoly>, fprime: FluxDerivativeFn },
    Sampled(Arc<SampledVelocity>),
}

impl StageVelocity {
    #[inline]
    pub fn eval(&self, p: Point) -> [f64; 2] {
        match self {
            Self::Analytic { f, t } => f(p[0], p[1], *t),
            Self::Scaled { f, scale, .. } => {
                let v = f(p[0], p[1]);
                [scale * v[0], scale * v[1]]
            }
            Self::Reconstructed { poly, fprime } => fprime(poly.eval(p)),
            Self::Sampled(s) => s.eval(p),
        }
    }

    /// `(f, scale)` when the velocity is a scaled copy of a fixed field.
    pub fn separable(&self) -> Option<(&SpatialFn, f64)> {
        match self {
            Self::Scaled { f, scale, .. } => Some((f, *scale)),
            _ => None,
        }
    }

    /// Velocity at node `(i, j)`, `0 <= i <= nx`, `0 <= j <= ny`.
    fn node(&self, g: &GridSpec, i: usize, j: usize) -> [f64; 2] {
        match self {
            Self::Analytic { .. } | Self::Scaled { .. } => self.eval([g.node_x(i as isize), g.node_y(j as isize)]),
            Self::Reconstructed { poly, fprime } => {
                // owner is the cell to the lower left of the node
                let host = (i as isize - 1, j as isize - 1);
                let p = [g.node_x(i as isize), g.node_y(j as isize)];
                fprime(poly.poly_unwrapped(host.0, host.1).eval_at(g, host, p))
            }
            Self::Sampled(s) => s.lattice_value(2 * i, 2 * j),
        }
    }

    /// Samples the modified velocity at every node, tagged with `t_anchor`.
    pub fn nodes(&self, g: &GridSpec, t_anchor: f64) -> NodeVelocity {
        let (n1, m1) = (g.nx + 1, g.ny + 1);
        let mut values = vec![[0.0; 2]; n1 * m1];
        par::for_each_row(&mut values, n1, |j, row| {
            for (i, v) in row.iter_mut().enumerate() {
                *v = self.node(g, i, j);
            }
        });
        // periodic seams carry a single value
        if g.bc_x == Boundary::Periodic {
            for j in 0..m1 {
                values[j * n1 + g.nx] = values[j * n1];
            }
        }
        if g.bc_y == Boundary::Periodic {
            for i in 0..n1 {
                values[g.ny * n1 + i] = values[i];
            }
        }
        NodeVelocity {
            grid: g.clone(),
            t_anchor,
            values,
        }
    }

    /// `(max |a|, max |b|)` over the half-spacing lattice of nodes, edge
    /// midpoints and centers.
    pub fn max_speeds(&self, g: &GridSpec) -> (f64, f64) {
        match self {
            Self::Sampled(s) => return s.max_speeds(),
            Self::Scaled { f, scale, peak } => {
                let unit = Self::Scaled {
                    f: f.clone(),
                    scale: 1.0,
                    peak: Arc::new(OnceLock::new()),
                };
                let p = *peak.get_or_init(|| unit.lattice_max(g));
                return (scale.abs() * p.0, scale.abs() * p.1);
            }
            _ => {}
        }
        self.lattice_max(g)
    }

    fn lattice_max(&self, g: &GridSpec) -> (f64, f64) {
        let (n, m) = (2 * g.nx + 1, 2 * g.ny + 1);
        let rows = par::map_range(m, |q| {
            let y = g.y_lo + q as f64 * 0.5 * g.dy;
            let mut acc = (0.0f64, 0.0f64);
            for p in 0..n {
                let x = g.x_lo + p as f64 * 0.5 * g.dx;
                let v = self.eval([x, y]);
                acc.0 = acc.0.max(v[0].abs());
                acc.1 = acc.1.max(v[1].abs());
            }
            acc
        });
        rows.into_iter().fold((0.0, 0.0), |a, r| (a.0.max(r.0), a.1.max(r.1)))
    }
}

/// Builds stage velocities for one problem on one grid.
pub struct VelocitySampler {
    provider: VelocityProvider,
    grid: GridSpec,
    weno: WenoParams,
    spectral: Option<SpectralWorkspace>,
    peak: Arc<OnceLock<(f64, f64)>>,
}

impl VelocitySampler {
    pub fn new(provider: VelocityProvider, g: &GridSpec, weno: WenoParams) -> Result<Self> {
        let spectral = match provider {
            VelocityProvider::SolvedField(_) => Some(SpectralWorkspace::new(g)?),
            _ => None,
        };
        Ok(Self {
            provider,
            grid: g.clone(),
            weno,
            spectral,
            peak: Arc::new(OnceLock::new()),
        })
    }

    pub fn provider(&self) -> &VelocityProvider {
        &self.provider
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    /// Velocity at time `t` for solution `u` (ignored by analytic providers).
    pub fn at(&self, u: &CellField, t: f64) -> StageVelocity {
        match &self.provider {
            VelocityProvider::Analytic(f) => StageVelocity::Analytic { f: f.clone(), t },
            VelocityProvider::Separable { spatial, modulation, .. } => StageVelocity::Scaled {
                f: spatial.clone(),
                scale: modulation(t),
                peak: self.peak.clone(),
            },
            VelocityProvider::FluxDerivative(fp) => StageVelocity::Reconstructed {
                poly: Arc::new(reconstruct_field(u, &self.grid, &self.weno)),
                fprime: fp.clone(),
            },
            VelocityProvider::SolvedField(c) => {
                let ws = self.spectral.as_ref().expect("workspace built for solved fields");
                StageVelocity::Sampled(Arc::new(match c {
                    FieldCoupling::GuidingCenter => fieldsolve::solve_guiding_center(ws, u),
                    FieldCoupling::Streamfunction => fieldsolve::solve_streamfunction(ws, u),
                }))
            }
        }
    }

    /// `(max |a|, max |b|)` over the whole run when the provider bounds it.
    fn run_speed_bound(&self) -> Option<(f64, f64)> {
        match &self.provider {
            VelocityProvider::Separable { spatial, bound, .. } => {
                let unit = StageVelocity::Scaled {
                    f: spatial.clone(),
                    scale: *bound,
                    peak: self.peak.clone(),
                };
                Some(unit.max_speeds(&self.grid))
            }
            _ => None,
        }
    }

    /// Anchor velocity for a step `t -> t + dt`. Analytic fields are sampled
    /// at the new time level; nonlinear ones use the current solution, whose
    /// stage velocity `current` may be passed to avoid recomputing it.
    pub fn anchor(&self, u: &CellField, t: f64, dt: f64, current: Option<&StageVelocity>) -> NodeVelocity {
        let t1 = t + dt;
        match (&self.provider, current) {
            (VelocityProvider::Analytic(_) | VelocityProvider::Separable { .. }, _) => {
                self.at(u, t1).nodes(&self.grid, t1)
            }
            (_, Some(v)) => v.nodes(&self.grid, t1),
            (_, None) => self.at(u, t).nodes(&self.grid, t1),
        }
    }
}

/// Free-function spelling of [`StageVelocity::nodes`].
pub fn nodal_velocity(v: &StageVelocity, t_anchor: f64, g: &GridSpec) -> NodeVelocity {
    v.nodes(g, t_anchor)
}

/// Modified velocity samples at the `(nx+1) x (ny+1)` grid nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeVelocity {
    grid: GridSpec,
    t_anchor: f64,
    values: Vec<[f64; 2]>,
}

impl NodeVelocity {
    pub fn from_values(g: &GridSpec, t_anchor: f64, values: Vec<[f64; 2]>) -> Self {
        assert_eq!(values.len(), (g.nx + 1) * (g.ny + 1));
        Self {
            grid: g.clone(),
            t_anchor,
            values,
        }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn t_anchor(&self) -> f64 {
        self.t_anchor
    }

    pub fn values(&self) -> &[[f64; 2]] {
        &self.values
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> [f64; 2] {
        self.values[j * (self.grid.nx + 1) + i]
    }

    pub fn max_abs(&self) -> (f64, f64) {
        self.values
            .iter()
            .fold((0.0, 0.0), |a, v| (f64::max(a.0, v[0].abs()), f64::max(a.1, v[1].abs())))
    }
}

/// A point fixed by its Lagrangian label: cell `(i, j)` and bilinear
/// parameters `(s, r)` in `[0, 1]^2` of the anchor-time cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Label {
    pub cell: (usize, usize),
    pub s: f64,
    pub r: f64,
}

#[inline]
fn bilinear(c: [[f64; 2]; 4], s: f64, r: f64) -> [f64; 2] {
    let w = [(1.0 - s) * (1.0 - r), s * (1.0 - r), s * r, (1.0 - s) * r];
    [
        w[0] * c[0][0] + w[1] * c[1][0] + w[2] * c[2][0] + w[3] * c[3][0],
        w[0] * c[0][1] + w[1] * c[1][1] + w[2] * c[2][1] + w[3] * c[3][1],
    ]
}

/// Q1 value of the modified velocity at a labelled point. Independent of the
/// time slice because the field is constant along the straight characteristics.
pub fn modified_velocity_at(nv: &NodeVelocity, label: Label) -> [f64; 2] {
    let (i, j) = label.cell;
    let c = [nv.at(i, j), nv.at(i + 1, j), nv.at(i + 1, j + 1), nv.at(i, j + 1)];
    bilinear(c, label.s, label.r)
}

/// Traced node positions of the modified characteristics at
/// `t_anchor + offset`. Cells are the quads spanned by neighbouring nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct UpstreamMesh {
    grid: GridSpec,
    offset: f64,
    eulerian: bool,
    nodes: Vec<Point>,
}

impl UpstreamMesh {
    /// The Eulerian mesh itself.
    pub fn eulerian(g: &GridSpec) -> Self {
        let n1 = g.nx + 1;
        let mut nodes = Vec::with_capacity(n1 * (g.ny + 1));
        for j in 0..=g.ny {
            for i in 0..n1 {
                nodes.push([g.node_x(i as isize), g.node_y(j as isize)]);
            }
        }
        Self {
            grid: g.clone(),
            offset: 0.0,
            eulerian: true,
            nodes,
        }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    /// Time offset from the anchor, negative for upstream slices.
    pub fn offset(&self) -> f64 {
        self.offset
    }

    /// True when the mesh is the untouched Eulerian mesh.
    pub fn is_eulerian(&self) -> bool {
        self.eulerian
    }

    pub fn nodes(&self) -> &[Point] {
        &self.nodes
    }

    #[inline]
    pub fn node(&self, i: usize, j: usize) -> Point {
        self.nodes[j * (self.grid.nx + 1) + i]
    }

    #[inline]
    pub fn quad(&self, i: usize, j: usize) -> Quad {
        Quad([self.node(i, j), self.node(i + 1, j), self.node(i + 1, j + 1), self.node(i, j + 1)])
    }

    /// Traced position of a labelled point.
    pub fn point_at(&self, label: Label) -> Point {
        let (i, j) = label.cell;
        let q = self.quad(i, j).0;
        bilinear(q, label.s, label.r)
    }

    /// First non-convex cell in row-major order, if any.
    pub fn first_nonconvex(&self) -> Option<(usize, usize)> {
        if self.eulerian {
            return None;
        }
        let g = &self.grid;
        let bad = par::map_range(g.ny, |j| (0..g.nx).find(|&i| !check_convex(&self.quad(i, j))));
        bad.into_iter().enumerate().find_map(|(j, i)| i.map(|i| (i, j)))
    }
}

/// Traces every node along its modified characteristic by `offset` (time
/// relative to the anchor) and checks that every cell stays convex.
pub fn trace_offset(nv: &NodeVelocity, offset: f64) -> Result<UpstreamMesh> {
    let g = &nv.grid;
    if offset == 0.0 || nv.values.iter().all(|v| offset * v[0] == 0.0 && offset * v[1] == 0.0) {
        return Ok(UpstreamMesh {
            offset,
            ..UpstreamMesh::eulerian(g)
        });
    }
    let n1 = g.nx + 1;
    let mut nodes = vec![[0.0; 2]; n1 * (g.ny + 1)];
    par::for_each_row(&mut nodes, n1, |j, row| {
        let y = g.node_y(j as isize);
        for (i, p) in row.iter_mut().enumerate() {
            let v = nv.values[j * n1 + i];
            *p = [g.node_x(i as isize) + offset * v[0], y + offset * v[1]];
        }
    });
    let mesh = UpstreamMesh {
        grid: g.clone(),
        offset,
        eulerian: false,
        nodes,
    };
    match mesh.first_nonconvex() {
        Some((i, j)) => Err(Error::NonConvexUpstreamCell { i, j }),
        None => Ok(mesh),
    }
}

/// Upstream mesh at absolute time `t`.
pub fn trace_to(nv: &NodeVelocity, t: f64) -> Result<UpstreamMesh> {
    trace_offset(nv, t - nv.t_anchor)
}

/// Maximum number of step halvings used to restore convexity.
pub const MAX_HALVINGS: usize = 10;

fn speed_sum(v: (f64, f64), g: &GridSpec) -> f64 {
    v.0 / g.dx + v.1 / g.dy
}

/// CFL-based step from time `t`: `cfl / (max|a|/dx + max|b|/dy)`.
/// Separable fields use their bound over the whole run, giving a fixed step.
/// Other analytic fields take the larger speed of both ends of the candidate
/// step. The step is halved until the upstream mesh at `t` is convex.
pub fn compute_dt(sampler: &VelocitySampler, u: &CellField, t: f64, cfl: f64) -> Result<f64> {
    if !(cfl > 0.0) {
        return Err(Error::Config(format!("cfl must be positive, got {cfl}")));
    }
    let g = sampler.grid();
    let here = sampler.at(u, t);
    let fixed = sampler.run_speed_bound();
    let s0 = speed_sum(fixed.unwrap_or_else(|| here.max_speeds(g)), g);
    let fallback = cfl * g.dx.min(g.dy);
    let mut dt = if s0 > 0.0 { cfl / s0 } else { fallback };
    if fixed.is_none() && !sampler.provider().is_nonlinear() {
        let s1 = speed_sum(sampler.at(u, t + dt).max_speeds(g), g);
        let s = s0.max(s1);
        dt = if s > 0.0 { cfl / s } else { fallback };
    }
    let current = sampler.provider().is_nonlinear().then_some(&here);
    for _ in 0..=MAX_HALVINGS {
        let nv = sampler.anchor(u, t, dt, current);
        match trace_offset(&nv, -dt) {
            Ok(_) => return Ok(dt),
            Err(Error::NonConvexUpstreamCell { .. }) => dt *= 0.5,
            Err(e) => return Err(e),
        }
    }
    let nv = sampler.anchor(u, t, dt, current);
    trace_offset(&nv, -dt).map(|_| dt)
}
