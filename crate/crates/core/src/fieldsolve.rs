//! Spectral Poisson solves on periodic grids and the velocity fields derived
//! from them.
//!
//! Cell averages are converted to point values at cell centers by dividing
//! each Fourier mode by its averaging factor `sinc(kx dx/2) sinc(ky dy/2)`.
//! Velocities are evaluated on the half-spacing lattice (nodes, edge midpoints
//! and centers) by zero-padded inverse transforms and interpolated
//! biquadratically in between.

use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::field::CellField;
use crate::geometry::{GridSpec, Point};

/// Transform plans and wavenumbers for one periodic grid.
pub struct SpectralWorkspace {
    grid: GridSpec,
    fx: Arc<dyn Fft<f64>>,
    fy: Arc<dyn Fft<f64>>,
    ix: Arc<dyn Fft<f64>>,
    iy: Arc<dyn Fft<f64>>,
    ix2: Arc<dyn Fft<f64>>,
    iy2: Arc<dyn Fft<f64>>,
    kx: Vec<f64>,
    ky: Vec<f64>,
}

/// Signed frequency of DFT bin `p` of an `n`-point transform; `None` for the
/// Nyquist bin of even `n`.
fn signed_freq(p: usize, n: usize) -> Option<isize> {
    match (2 * p).cmp(&n) {
        std::cmp::Ordering::Less => Some(p as isize),
        std::cmp::Ordering::Greater => Some(p as isize - n as isize),
        std::cmp::Ordering::Equal => None,
    }
}

fn sinc(z: f64) -> f64 {
    if z == 0.0 {
        1.0
    } else {
        z.sin() / z
    }
}

impl SpectralWorkspace {
    pub fn new(g: &GridSpec) -> Result<Self> {
        if !g.is_periodic() {
            return Err(Error::NonPeriodicGrid);
        }
        let mut planner = FftPlanner::new();
        let wavenumbers = |n: usize, l: f64| {
            (0..n)
                .map(|p| signed_freq(p, n).map_or(0.0, |k| 2.0 * std::f64::consts::PI * k as f64 / l))
                .collect::<Vec<_>>()
        };
        Ok(Self {
            grid: g.clone(),
            fx: planner.plan_fft_forward(g.nx),
            fy: planner.plan_fft_forward(g.ny),
            ix: planner.plan_fft_inverse(g.nx),
            iy: planner.plan_fft_inverse(g.ny),
            ix2: planner.plan_fft_inverse(2 * g.nx),
            iy2: planner.plan_fft_inverse(2 * g.ny),
            kx: wavenumbers(g.nx, g.lx()),
            ky: wavenumbers(g.ny, g.ly()),
        })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    /// Angular wavenumbers per bin (zero for Nyquist bins).
    pub fn kx(&self) -> &[f64] {
        &self.kx
    }

    pub fn ky(&self) -> &[f64] {
        &self.ky
    }

    /// Unnormalised 2D forward transform of row-major real data.
    pub fn forward(&self, data: &[f64]) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = data.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        transform_2d(&mut buf, self.grid.nx, self.grid.ny, &*self.fx, &*self.fy);
        buf
    }

    /// Normalised inverse of [`forward`](Self::forward), real part only.
    pub fn inverse(&self, mut spec: Vec<Complex64>) -> Vec<f64> {
        transform_2d(&mut spec, self.grid.nx, self.grid.ny, &*self.ix, &*self.iy);
        let s = 1.0 / (self.grid.nx * self.grid.ny) as f64;
        spec.into_iter().map(|c| c.re * s).collect()
    }

    /// Spectrum of the point values at cell centers given cell averages.
    fn point_spectrum(&self, u: &CellField) -> Vec<Complex64> {
        let g = &self.grid;
        let mut spec = self.forward(u.as_slice());
        for q in 0..g.ny {
            let fy = sinc(0.5 * self.ky[q] * g.dy);
            for p in 0..g.nx {
                let f = sinc(0.5 * self.kx[p] * g.dx) * fy;
                spec[q * g.nx + p] /= f;
            }
        }
        spec
    }

    /// Evaluates a center-phased spectrum on the `2nx x 2ny` lattice with
    /// spacing `(dx/2, dy/2)` starting at the lower-left domain corner.
    fn to_lattice(&self, spec: &[Complex64]) -> Vec<f64> {
        let g = &self.grid;
        let (n2, m2) = (2 * g.nx, 2 * g.ny);
        let mut buf = vec![Complex64::new(0.0, 0.0); n2 * m2];
        let norm = 1.0 / (g.nx * g.ny) as f64;
        let tau = 2.0 * std::f64::consts::PI;
        for q in 0..g.ny {
            let Some(ky) = signed_freq(q, g.ny) else { continue };
            let qq = ky.rem_euclid(m2 as isize) as usize;
            let phy = Complex64::from_polar(1.0, -tau * ky as f64 / m2 as f64);
            for p in 0..g.nx {
                let Some(kx) = signed_freq(p, g.nx) else { continue };
                let pp = kx.rem_euclid(n2 as isize) as usize;
                let phx = Complex64::from_polar(norm, -tau * kx as f64 / n2 as f64);
                buf[qq * n2 + pp] = spec[q * g.nx + p] * phx * phy;
            }
        }
        transform_2d(&mut buf, n2, m2, &*self.ix2, &*self.iy2);
        buf.into_iter().map(|c| c.re).collect()
    }

    /// Mean-free potential spectrum solving `-Lap(phi) = src - mean(src)`.
    fn inverse_laplacian(&self, u: &CellField) -> Vec<Complex64> {
        let g = &self.grid;
        let mut spec = self.point_spectrum(u);
        for q in 0..g.ny {
            for p in 0..g.nx {
                let k2 = self.kx[p] * self.kx[p] + self.ky[q] * self.ky[q];
                let idx = q * g.nx + p;
                spec[idx] = if k2 == 0.0 { Complex64::new(0.0, 0.0) } else { spec[idx] / k2 };
            }
        }
        spec
    }

    /// Lattice velocity `(cx * d/dy, cy * d/dx)` of a potential spectrum.
    fn rotated_gradient(&self, phi: &[Complex64], cx: f64, cy: f64) -> SampledVelocity {
        let g = &self.grid;
        let mut a = vec![Complex64::new(0.0, 0.0); phi.len()];
        let mut b = a.clone();
        for q in 0..g.ny {
            for p in 0..g.nx {
                let idx = q * g.nx + p;
                a[idx] = phi[idx] * Complex64::new(0.0, cx * self.ky[q]);
                b[idx] = phi[idx] * Complex64::new(0.0, cy * self.kx[p]);
            }
        }
        SampledVelocity::new(g, self.to_lattice(&a), self.to_lattice(&b))
    }
}

/// In-place 2D transform of a row-major `nx x ny` buffer.
fn transform_2d(buf: &mut [Complex64], nx: usize, ny: usize, fx: &dyn Fft<f64>, fy: &dyn Fft<f64>) {
    fx.process(buf);
    let mut t = vec![Complex64::new(0.0, 0.0); buf.len()];
    for j in 0..ny {
        for i in 0..nx {
            t[i * ny + j] = buf[j * nx + i];
        }
    }
    fy.process(&mut t);
    for i in 0..nx {
        for j in 0..ny {
            buf[j * nx + i] = t[i * ny + j];
        }
    }
}

/// Periodic velocity sampled on the half-spacing lattice.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledVelocity {
    grid: GridSpec,
    a: Vec<f64>,
    b: Vec<f64>,
}

impl SampledVelocity {
    pub fn new(g: &GridSpec, a: Vec<f64>, b: Vec<f64>) -> Self {
        assert_eq!(a.len(), 4 * g.nx * g.ny);
        assert_eq!(b.len(), a.len());
        Self { grid: g.clone(), a, b }
    }

    /// Lattice value at `(x_lo + p dx/2, y_lo + q dy/2)`, indices wrapped.
    #[inline]
    pub fn lattice_value(&self, p: usize, q: usize) -> [f64; 2] {
        let (n2, m2) = (2 * self.grid.nx, 2 * self.grid.ny);
        let k = (q % m2) * n2 + p % n2;
        [self.a[k], self.b[k]]
    }

    /// Velocity at a cell center.
    pub fn at_center(&self, i: usize, j: usize) -> [f64; 2] {
        self.lattice_value(2 * i + 1, 2 * j + 1)
    }

    pub fn max_speeds(&self) -> (f64, f64) {
        let m = |v: &[f64]| v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        (m(&self.a), m(&self.b))
    }

    /// Biquadratic interpolation from the three nearest lattice lines per axis.
    pub fn eval(&self, p: Point) -> [f64; 2] {
        let g = &self.grid;
        let (n2, m2) = (2 * g.nx as isize, 2 * g.ny as isize);
        let sx = (p[0] - g.x_lo) / (0.5 * g.dx);
        let sy = (p[1] - g.y_lo) / (0.5 * g.dy);
        let (cx, cy) = (sx.round(), sy.round());
        let weights = |f: f64| [0.5 * f * (f - 1.0), 1.0 - f * f, 0.5 * f * (f + 1.0)];
        let wx = weights(sx - cx);
        let wy = weights(sy - cy);
        let (cx, cy) = (cx as isize, cy as isize);
        let mut out = [0.0; 2];
        for (dj, wyj) in wy.iter().enumerate() {
            let q = (cy + dj as isize - 1).rem_euclid(m2) as usize;
            let mut row = [0.0; 2];
            for (di, wxi) in wx.iter().enumerate() {
                let k = q * n2 as usize + (cx + di as isize - 1).rem_euclid(n2) as usize;
                row[0] += wxi * self.a[k];
                row[1] += wxi * self.b[k];
            }
            out[0] += wyj * row[0];
            out[1] += wyj * row[1];
        }
        out
    }
}

/// `E_perp = (-phi_y, phi_x)` with `-Lap(phi) = rho - mean(rho)`.
pub fn solve_guiding_center(ws: &SpectralWorkspace, rho: &CellField) -> SampledVelocity {
    let phi = ws.inverse_laplacian(rho);
    ws.rotated_gradient(&phi, -1.0, 1.0)
}

/// `(u, v) = (psi_y, -psi_x)` with `Lap(psi) = omega - mean(omega)`.
pub fn solve_streamfunction(ws: &SpectralWorkspace, omega: &CellField) -> SampledVelocity {
    // psi = -phi where -Lap(phi) = omega
    let phi = ws.inverse_laplacian(omega);
    ws.rotated_gradient(&phi, -1.0, 1.0)
}

/// Point values at cell centers of the potential `phi` with
/// `-Lap(phi) = src - mean(src)` and zero mean.
pub fn poisson_potential(ws: &SpectralWorkspace, src: &CellField) -> CellField {
    let g = ws.grid();
    CellField::from_vec(g.nx, g.ny, ws.inverse(ws.inverse_laplacian(src)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn kh_grid(n: usize) -> GridSpec {
        GridSpec::periodic([0.0, 4.0 * PI, 0.0, 2.0 * PI], n, n).unwrap()
    }

    #[test]
    fn rejects_non_periodic() {
        let g = GridSpec::new(
            [0.0, 1.0, 0.0, 1.0],
            8,
            8,
            (crate::Boundary::ZeroGhost, crate::Boundary::Periodic),
        )
        .unwrap();
        assert!(matches!(SpectralWorkspace::new(&g), Err(Error::NonPeriodicGrid)));
    }

    #[test]
    fn round_trip() {
        let g = kh_grid(12);
        let ws = SpectralWorkspace::new(&g).unwrap();
        let data: Vec<f64> = (0..144).map(|k| ((k * 37) % 11) as f64 - 3.0).collect();
        let back = ws.inverse(ws.forward(&data));
        for (a, b) in data.iter().zip(&back) {
            assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn zero_density_zero_velocity() {
        let g = kh_grid(16);
        let ws = SpectralWorkspace::new(&g).unwrap();
        let v = solve_guiding_center(&ws, &CellField::zeros(16, 16));
        assert_eq!(v.max_speeds(), (0.0, 0.0));
        let v = solve_streamfunction(&ws, &CellField::zeros(16, 16));
        assert_eq!(v.max_speeds(), (0.0, 0.0));
    }

    #[test]
    fn single_mode_guiding_center() {
        let g = kh_grid(16);
        let ws = SpectralWorkspace::new(&g).unwrap();
        let rho = CellField::from_fn(&g, |_, y| y.sin());
        let v = solve_guiding_center(&ws, &rho);
        for q in 0..32 {
            for p in 0..32 {
                let y = q as f64 * 0.5 * g.dy;
                let [a, b] = v.lattice_value(p, q);
                assert!((a + y.cos()).abs() < 1e-12, "{a} vs {}", -y.cos());
                assert!(b.abs() < 1e-12);
            }
        }
    }

    #[test]
    fn guiding_center_superposition() {
        let g = kh_grid(16);
        let ws = SpectralWorkspace::new(&g).unwrap();
        let rho = CellField::from_fn(&g, |x, y| y.sin() + 0.015 * (0.5 * x).cos());
        let v = solve_guiding_center(&ws, &rho);
        // phi = sin y + 0.06 cos(x/2)
        for q in 0..32 {
            for p in 0..32 {
                let (x, y) = (p as f64 * 0.5 * g.dx, q as f64 * 0.5 * g.dy);
                let [a, b] = v.lattice_value(p, q);
                assert!((a + y.cos()).abs() < 1e-12);
                assert!((b + 0.03 * (0.5 * x).sin()).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn streamfunction_mode() {
        let g = GridSpec::periodic([0.0, 2.0 * PI, 0.0, 2.0 * PI], 16, 16).unwrap();
        let ws = SpectralWorkspace::new(&g).unwrap();
        let w = CellField::from_fn(&g, |x, y| -2.0 * x.sin() * y.sin());
        let v = solve_streamfunction(&ws, &w);
        for q in 0..32 {
            for p in 0..32 {
                let (x, y) = (p as f64 * 0.5 * g.dx, q as f64 * 0.5 * g.dy);
                let [a, b] = v.lattice_value(p, q);
                assert!((a - x.sin() * y.cos()).abs() < 1e-12);
                assert!((b + x.cos() * y.sin()).abs() < 1e-12);
            }
        }
        // interpolation between lattice points is third order accurate
        let p = [1.234, 4.321];
        let [a, b] = v.eval(p);
        assert!((a - p[0].sin() * p[1].cos()).abs() < 2e-3);
        assert!((b + p[0].cos() * p[1].sin()).abs() < 2e-3);
    }

    #[test]
    fn potential_residual() {
        let g = GridSpec::periodic([0.0, 2.0 * PI, 0.0, 2.0 * PI], 32, 32).unwrap();
        let ws = SpectralWorkspace::new(&g).unwrap();
        let rho = CellField::from_fn(&g, |x, y| (x + 2.0 * y).cos() + 0.3);
        let phi = poisson_potential(&ws, &rho);
        // phi = cos(x + 2y)/5 at centers
        for j in 0..32 {
            for i in 0..32 {
                let c = g.center(i as isize, j as isize);
                assert!((phi.get(i, j) - (c[0] + 2.0 * c[1]).cos() / 5.0).abs() < 1e-12);
            }
        }
    }
}
