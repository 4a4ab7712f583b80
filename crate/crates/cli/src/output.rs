//! CSV tables and plain-text snapshots. Floats are written with 17
//! significant digits so files round-trip exactly.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use elweno::problems::{observed_order, ErrorNorms};
use elweno::timestepping::DiagnosticsSeries;
use elweno::{CellField, GridSpec};

use crate::error::CliError;

pub fn sci(v: f64) -> String {
    format!("{v:.16e}")
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path).map(BufWriter::new).map_err(|e| CliError::io(path, e))
}

/// One row of a convergence table.
#[derive(Debug, Clone, Copy)]
pub struct Level {
    pub nx: usize,
    pub ny: usize,
    pub norms: ErrorNorms,
}

/// Observed orders between consecutive levels, `None` on the first row.
pub fn orders(levels: &[Level]) -> Vec<Option<[f64; 3]>> {
    let mut out = vec![None];
    for w in levels.windows(2) {
        let ratio = w[1].nx as f64 / w[0].nx as f64;
        let (c, f) = (w[0].norms.as_array(), w[1].norms.as_array());
        out.push(Some([0, 1, 2].map(|k| observed_order(c[k], f[k], ratio))));
    }
    out
}

pub fn format_order(o: Option<f64>) -> String {
    o.map_or_else(|| "---".to_string(), |v| format!("{v:.6}"))
}

pub fn write_errors(path: &Path, levels: &[Level]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record(["mesh", "L1", "order", "L2", "order", "Linf", "order"])?;
    for (lv, o) in levels.iter().zip(orders(levels)) {
        let e = lv.norms.as_array();
        let mut rec = vec![format!("{}x{}", lv.nx, lv.ny)];
        for k in 0..3 {
            rec.push(sci(e[k]));
            rec.push(format_order(o.map(|a| a[k])));
        }
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

pub fn write_diagnostics(path: &Path, series: &DiagnosticsSeries) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(create(path)?);
    let header: Vec<&str> = std::iter::once("t").chain(series.names.iter().map(String::as_str)).collect();
    w.write_record(&header)?;
    for (t, row) in series.times.iter().zip(&series.rows) {
        w.write_record(std::iter::once(sci(*t)).chain(row.iter().map(|v| sci(*v))))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

pub struct SweepRow {
    pub cfl: f64,
    pub l2: f64,
    pub stable: bool,
}

pub fn write_sweep(path: &Path, rows: &[SweepRow]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record(["cfl", "L2", "stable"])?;
    for r in rows {
        w.write_record([sci(r.cfl), sci(r.l2), r.stable.to_string()])?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

pub fn snapshot_path(dir: &Path, t: f64) -> PathBuf {
    dir.join(format!("snapshot_t{t:.6}.dat"))
}

/// Header `nx`, `ny`, bounds, time; then one line per grid row, bottom up.
pub fn write_snapshot(path: &Path, u: &CellField, g: &GridSpec, t: f64) -> Result<(), CliError> {
    let mut w = create(path)?;
    let io = |e| CliError::io(path, e);
    writeln!(w, "nx {}", g.nx).map_err(io)?;
    writeln!(w, "ny {}", g.ny).map_err(io)?;
    writeln!(w, "bounds {} {} {} {}", sci(g.x_lo), sci(g.x_hi), sci(g.y_lo), sci(g.y_hi)).map_err(io)?;
    writeln!(w, "time {}", sci(t)).map_err(io)?;
    for row in u.as_slice().chunks(g.nx) {
        let line: Vec<String> = row.iter().map(|v| sci(*v)).collect();
        writeln!(w, "{}", line.join(" ")).map_err(io)?;
    }
    w.flush().map_err(io)
}

/// Parses a snapshot back into `(nx, ny, bounds, time, values)`.
pub fn read_snapshot(text: &str) -> Option<(usize, usize, [f64; 4], f64, Vec<f64>)> {
    let mut lines = text.lines();
    let mut field = |name: &str| -> Option<Vec<String>> {
        let l = lines.next()?;
        let mut it = l.split_whitespace();
        (it.next()? == name).then(|| it.map(String::from).collect())
    };
    let nx = field("nx")?.first()?.parse().ok()?;
    let ny = field("ny")?.first()?.parse().ok()?;
    let b: Vec<f64> = field("bounds")?.iter().map(|s| s.parse().ok()).collect::<Option<_>>()?;
    let t = field("time")?.first()?.parse().ok()?;
    let values: Vec<f64> = lines.flat_map(str::split_whitespace).map(|s| s.parse().ok()).collect::<Option<_>>()?;
    (b.len() == 4 && values.len() == nx * ny).then(|| (nx, ny, [b[0], b[1], b[2], b[3]], t, values))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits_round_trip() {
        for v in [std::f64::consts::PI, 1.0 / 3.0, -2.5e-300, 0.1 + 0.2] {
            assert_eq!(sci(v).parse::<f64>().unwrap(), v);
        }
    }

    #[test]
    fn first_row_has_no_order() {
        let n = ErrorNorms { l1: 1.0, l2: 1.0, linf: 1.0 };
        let half = ErrorNorms { l1: 0.125, l2: 0.25, linf: 0.5 };
        let o = orders(&[Level { nx: 8, ny: 8, norms: n }, Level { nx: 16, ny: 16, norms: half }]);
        assert!(o[0].is_none());
        let o1 = o[1].unwrap();
        assert!((o1[0] - 3.0).abs() < 1e-14 && (o1[1] - 2.0).abs() < 1e-14 && (o1[2] - 1.0).abs() < 1e-14);
        assert_eq!(format_order(None), "---");
    }
}
