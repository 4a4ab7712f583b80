use crate::geometry::GridSpec;

/// Per-cell averages on the Eulerian mesh, row-major (`j * nx + i`).
#[derive(Debug, Clone, PartialEq)]
pub struct CellField {
    nx: usize,
    ny: usize,
    data: Vec<f64>,
}

impl CellField {
    pub fn zeros(nx: usize, ny: usize) -> Self {
        Self {
            nx,
            ny,
            data: vec![0.0; nx * ny],
        }
    }

    pub fn from_vec(nx: usize, ny: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), nx * ny, "cell field size mismatch");
        Self { nx, ny, data }
    }

    /// Cell averages of `f` using a 4x4 tensor Gauss-Legendre rule per cell.
    pub fn from_fn(g: &GridSpec, f: impl Fn(f64, f64) -> f64) -> Self {
        let (pts, wts) = crate::geometry::gauss_legendre_unit(4);
        let mut data = Vec::with_capacity(g.nx * g.ny);
        for j in 0..g.ny {
            let y0 = g.y_lo + j as f64 * g.dy;
            for i in 0..g.nx {
                let x0 = g.x_lo + i as f64 * g.dx;
                let mut acc = 0.0;
                for (py, wy) in pts.iter().zip(&wts) {
                    let y = y0 + py * g.dy;
                    for (px, wx) in pts.iter().zip(&wts) {
                        acc += wx * wy * f(x0 + px * g.dx, y);
                    }
                }
                data.push(acc);
            }
        }
        Self {
            nx: g.nx,
            ny: g.ny,
            data,
        }
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[j * self.nx + i]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[j * self.nx + i] = v;
    }

    /// Total mass `sum(dx * dy * u)`, summed in a fixed row-major order.
    pub fn mass(&self, g: &GridSpec) -> f64 {
        self.data.iter().sum::<f64>() * g.dx * g.dy
    }

    /// `sum(dx * dy * |u|)`.
    pub fn abs_mass(&self, g: &GridSpec) -> f64 {
        self.data.iter().map(|v| v.abs()).sum::<f64>() * g.dx * g.dy
    }

    pub fn min(&self) -> f64 {
        self.data.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.data.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Averages this field onto a grid coarser by an integer factor in each axis.
    pub fn restrict(&self, factor_x: usize, factor_y: usize) -> CellField {
        assert!(self.nx % factor_x == 0 && self.ny % factor_y == 0);
        let (cx, cy) = (self.nx / factor_x, self.ny / factor_y);
        let mut out = vec![0.0; cx * cy];
        let w = 1.0 / (factor_x * factor_y) as f64;
        for jc in 0..cy {
            for ic in 0..cx {
                let mut acc = 0.0;
                for fj in 0..factor_y {
                    for fi in 0..factor_x {
                        acc += self.get(ic * factor_x + fi, jc * factor_y + fj);
                    }
                }
                out[jc * cx + ic] = acc * w;
            }
        }
        CellField::from_vec(cx, cy, out)
    }
}
