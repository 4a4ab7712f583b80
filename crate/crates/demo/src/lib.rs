//! WebAssembly bindings for the browser demo in `www/`.

pub mod model;

use wasm_bindgen::prelude::*;

use model::Model;

fn js(e: elweno::Error) -> JsError {
    JsError::new(&e.to_string())
}

#[wasm_bindgen]
pub struct Simulation {
    inner: Model,
}

#[wasm_bindgen]
impl Simulation {
    /// `problem` is one of sdf, sdf-disc, lbfp, lbfp-relax, kh, ins, vortex-patch.
    #[wasm_bindgen(constructor)]
    pub fn new(problem: &str, n: usize, cfl: f64) -> Result<Simulation, JsError> {
        Ok(Self { inner: Model::new(problem, n, cfl).map_err(js)? })
    }

    pub fn step(&mut self) -> Result<f64, JsError> {
        self.inner.step().map_err(js)
    }

    #[wasm_bindgen(js_name = setCfl)]
    pub fn set_cfl(&mut self, cfl: f64) {
        self.inner.set_cfl(cfl);
    }

    pub fn time(&self) -> f64 {
        self.inner.time()
    }

    pub fn steps(&self) -> usize {
        self.inner.steps()
    }

    pub fn n(&self) -> usize {
        self.inner.grid().nx
    }

    /// `[x_lo, x_hi, y_lo, y_hi]`.
    pub fn bounds(&self) -> Vec<f64> {
        let g = self.inner.grid();
        vec![g.x_lo, g.x_hi, g.y_lo, g.y_hi]
    }

    /// Cell averages, row-major from the bottom row.
    pub fn values(&self) -> Vec<f64> {
        self.inner.field().as_slice().to_vec()
    }

    pub fn mass(&self) -> f64 {
        self.inner.field().mass(self.inner.grid())
    }

    /// Upstream node coordinates `[x, y, ...]`, `(n + 1)^2` nodes row by row.
    #[wasm_bindgen(js_name = upstreamNodes)]
    pub fn upstream_nodes(&self, cfl: f64) -> Result<Vec<f64>, JsError> {
        let mesh = self.inner.upstream(cfl).map_err(js)?;
        Ok(mesh.nodes().iter().flat_map(|p| [p[0], p[1]]).collect())
    }

    #[wasm_bindgen(js_name = clipPieces)]
    pub fn clip_pieces(&self, cfl: f64, i: usize, j: usize) -> Result<Vec<f64>, JsError> {
        self.inner.clip_pieces(cfl, i, j).map_err(js)
    }
}
