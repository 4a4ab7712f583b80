use std::f64::consts::TAU;
use std::path::Path;

use elweno::geometry::{clip_quad_to_grid, integrate_poly_over_polygon};
use elweno::operators::laplacian_averages;
use elweno::problems::{error_norms, error_norms_vs, simulate, ErrorNorms, ProblemDef};
use elweno::remap::{remap_on, upstream_mass, Overlay};
use elweno::timestepping::{implicit_solve, ImplicitSolver, Scheme, Stepper};
use elweno::velocity::{compute_dt, trace_offset, NodeVelocity};
use elweno::weno::{reconstruct_field, reconstruct_stencil};
use elweno::{Boundary, CellField, GridSpec, WenoParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::RunConfig;
use crate::error::CliError;
use crate::output::{self, Level, SweepRow};

fn prepare_out(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

fn norms_vs_exact(p: &ProblemDef, cfg: &RunConfig, u: &CellField, g: &GridSpec) -> Option<ErrorNorms> {
    p.exact_at(cfg.t_end).map(|exact| cfg.norms.apply(error_norms(u, exact, g), g))
}

/// Single simulation: diagnostics, snapshots and, when an exact solution
/// exists at the final time, a one-row error table.
pub fn cmd_run(cfg: &RunConfig) -> Result<(), CliError> {
    prepare_out(&cfg.out)?;
    let p = cfg.problem.def();
    let g = p.grid(cfg.nx, cfg.ny)?;
    let mut snaps: Vec<f64> = cfg.snapshots.clone();
    snaps.push(cfg.t_end);
    snaps.sort_by(f64::total_cmp);
    snaps.dedup();

    let u0 = p.initial(&g);
    if snaps[0] == 0.0 {
        output::write_snapshot(&output::snapshot_path(&cfg.out, 0.0), &u0, &g, 0.0)?;
    }
    let mut pending: Vec<(f64, CellField)> = Vec::new();
    let mut on_step = |_: usize, t: f64, u: &CellField| {
        if snaps.iter().any(|&s| s == t && s > 0.0) {
            pending.push((t, u.clone()));
        }
    };
    let (u, series) = simulate(&p, &cfg.sim(cfg.nx, cfg.ny, cfg.cfl), cfg.snapshots.clone(), Some(&mut on_step))?;
    for (t, v) in &pending {
        output::write_snapshot(&output::snapshot_path(&cfg.out, *t), v, &g, *t)?;
    }
    if cfg.t_end == 0.0 {
        output::write_snapshot(&output::snapshot_path(&cfg.out, 0.0), &u, &g, 0.0)?;
    }
    output::write_diagnostics(&cfg.out.join("diagnostics.csv"), &series)?;
    if let Some(norms) = norms_vs_exact(&p, cfg, &u, &g) {
        output::write_errors(&cfg.out.join("errors.csv"), &[Level { nx: cfg.nx, ny: cfg.ny, norms }])?;
        println!("{}: L1 {:.6e} L2 {:.6e} Linf {:.6e}", p.name(), norms.l1, norms.l2, norms.linf);
    }
    println!("{} steps to t = {}; output in {}", series.len() - 1, cfg.t_end, cfg.out.display());
    Ok(())
}

/// Error table over `cfg.levels`, against the exact solution when there is
/// one and otherwise against a finer run averaged down to each level.
pub fn cmd_converge(cfg: &RunConfig) -> Result<Vec<Level>, CliError> {
    prepare_out(&cfg.out)?;
    let p = cfg.problem.def();
    let has_exact = p.exact_at(cfg.t_end).is_some();
    let reference = if has_exact {
        None
    } else {
        let finest = *cfg.levels.last().unwrap();
        let (rx, ry) = cfg.reference.unwrap_or((2 * finest.0, 2 * finest.1));
        for &(nx, ny) in &cfg.levels {
            if rx % nx != 0 || ry % ny != 0 {
                return Err(CliError::Config(format!("reference {rx}x{ry} is not a refinement of level {nx}x{ny}")));
            }
        }
        let (u, _) = simulate(&p, &cfg.sim(rx, ry, cfg.cfl), vec![], None)?;
        Some((rx, ry, u))
    };
    let mut levels = Vec::new();
    for &(nx, ny) in &cfg.levels {
        let g = p.grid(nx, ny)?;
        let (u, _) = simulate(&p, &cfg.sim(nx, ny, cfg.cfl), vec![], None)?;
        let norms = match &reference {
            None => norms_vs_exact(&p, cfg, &u, &g).expect("exact solution checked above"),
            Some((rx, ry, r)) => cfg.norms.apply(error_norms_vs(&u, &r.restrict(rx / nx, ry / ny), &g), &g),
        };
        levels.push(Level { nx, ny, norms });
    }
    output::write_errors(&cfg.out.join("errors.csv"), &levels)?;
    println!("{:>10} {:>12} {:>8} {:>12} {:>8} {:>12} {:>8}", "mesh", "L1", "order", "L2", "order", "Linf", "order");
    for (lv, o) in levels.iter().zip(output::orders(&levels)) {
        let e = lv.norms.as_array();
        let ord = |k: usize| o.map_or("---".to_string(), |a| format!("{:.2}", a[k]));
        println!(
            "{:>10} {:>12.4e} {:>8} {:>12.4e} {:>8} {:>12.4e} {:>8}",
            format!("{}x{}", lv.nx, lv.ny),
            e[0],
            ord(0),
            e[1],
            ord(1),
            e[2],
            ord(2)
        );
    }
    Ok(levels)
}

/// One run per CFL number on the configured mesh. Runs that blow up or lose
/// convexity are reported as unstable rather than aborting the sweep.
pub fn cmd_cflsweep(cfg: &RunConfig) -> Result<Vec<SweepRow>, CliError> {
    prepare_out(&cfg.out)?;
    let p = cfg.problem.def();
    let Some(exact) = p.exact_at(cfg.t_end) else {
        return Err(CliError::Config(format!("{} has no exact solution at t = {}", p.name(), cfg.t_end)));
    };
    let g = p.grid(cfg.nx, cfg.ny)?;
    let u0 = p.initial(&g);
    let range = u0.max() - u0.min();
    let mut rows = Vec::new();
    for &cfl in &cfg.cfls {
        let row = match simulate(&p, &cfg.sim(cfg.nx, cfg.ny, cfl), vec![], None) {
            Ok((u, _)) => {
                let n = cfg.norms.apply(error_norms(&u, &exact, &g), &g);
                SweepRow { cfl, l2: n.l2, stable: u.all_finite() && n.linf < 10.0 * range }
            }
            Err(e @ elweno::Error::Config(_)) => return Err(e.into()),
            Err(_) => SweepRow { cfl, l2: f64::NAN, stable: false },
        };
        println!("cfl {:>8.3}  L2 {:>12.4e}  stable {}", row.cfl, row.l2, row.stable);
        rows.push(row);
    }
    output::write_sweep(&cfg.out.join("cflsweep.csv"), &rows)?;
    Ok(rows)
}

type Check = (&'static str, fn() -> Result<String, String>);

const CHECKS: &[Check] = &[
    ("reconstruction reproduces affine data", check_affine),
    ("clipped areas tile upstream cells", check_clip_areas),
    ("remap conserves cell mass", check_remap_mass),
    ("every scheme conserves mass", check_step_mass),
    ("implicit solve inverts a Fourier mode", check_implicit_mode),
];

/// Runs the quick invariant checks; fails with the number of failures.
pub fn cmd_selftest() -> Result<(), CliError> {
    let mut failed = 0;
    for (name, check) in CHECKS {
        match check() {
            Ok(detail) => println!("PASS {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL {name}: {detail}");
            }
        }
    }
    if failed > 0 {
        return Err(CliError::SelfTest(failed));
    }
    Ok(())
}

fn verdict(worst: f64, tol: f64) -> Result<String, String> {
    let msg = format!("worst {worst:.2e}, tolerance {tol:.0e}");
    if worst <= tol {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn check_affine() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let c: [f64; 3] = std::array::from_fn(|_| rng.gen_range(-5.0..5.0));
        let s: [f64; 9] = std::array::from_fn(|k| c[0] + c[1] * ((k % 3) as f64 - 1.0) + c[2] * ((k / 3) as f64 - 1.0));
        let q = reconstruct_stencil(&s, &WenoParams::default());
        let (m, n) = (rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5));
        worst = worst.max((q.eval_local(m, n) - (c[0] + c[1] * m + c[2] * n)).abs());
    }
    verdict(worst, 1e-13)
}

fn sample_mesh(g: &GridSpec, rng: &mut ChaCha8Rng) -> Result<elweno::velocity::UpstreamMesh, String> {
    let (kx, ky, ph) = (rng.gen_range(1..3) as f64, rng.gen_range(1..3) as f64, rng.gen_range(0.0..TAU));
    let mut values = Vec::new();
    for j in 0..=g.ny {
        for i in 0..=g.nx {
            let (x, y) = (g.node_x(i as isize), g.node_y(j as isize));
            values.push([(TAU * ky * y + ph).sin(), (TAU * kx * x).cos()]);
        }
    }
    let nv = NodeVelocity::from_values(g, 0.0, values);
    trace_offset(&nv, -0.7 * g.dx).map_err(|e| e.to_string())
}

fn check_clip_areas() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let g = GridSpec::periodic([0.0, 1.0, 0.0, 1.0], 24, 24).map_err(|e| e.to_string())?;
    let mut worst = 0.0f64;
    for _ in 0..5 {
        let mesh = sample_mesh(&g, &mut rng)?;
        for j in 0..g.ny {
            for i in 0..g.nx {
                let q = mesh.quad(i, j);
                let pieces = clip_quad_to_grid(&q, &g).map_err(|e| e.to_string())?;
                let a: f64 = pieces.iter().map(|p| p.area()).sum();
                worst = worst.max((a - q.area()).abs() / q.area());
            }
        }
    }
    verdict(worst, 1e-13)
}

fn check_remap_mass() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let g = GridSpec::new([0.0, 1.0, 0.0, 1.0], 24, 24, (Boundary::Periodic, Boundary::Periodic)).map_err(|e| e.to_string())?;
    let u = CellField::from_fn(&g, |x, y| 2.0 + (TAU * x).sin() * (TAU * y).cos());
    let src = reconstruct_field(&u, &g, &WenoParams::default());
    let mut worst = 0.0f64;
    for _ in 0..5 {
        let mesh = sample_mesh(&g, &mut rng)?;
        let rf = remap_on(&Overlay::build(&mesh).map_err(|e| e.to_string())?, &src);
        for j in 0..g.ny {
            for i in 0..g.nx {
                let (q, c) = (mesh.quad(i, j), rf.cell(i, j));
                let exact = upstream_mass(&src, &q).map_err(|e| e.to_string())?;
                let again = integrate_poly_over_polygon(&c.poly, c.donor, &q.0, &g);
                worst = worst.max((c.mass - exact).abs() / exact.abs()).max((again - c.mass).abs() / c.mass.abs());
            }
        }
    }
    verdict(worst, 1e-13)
}

fn check_step_mass() -> Result<String, String> {
    let p = elweno::problems::ProblemKind::SwirlingDeformation(elweno::problems::SdfIc::SmoothBell).def();
    let g = p.grid(32, 32).map_err(|e| e.to_string())?;
    let sampler = p.sampler(&g, WenoParams::default()).map_err(|e| e.to_string())?;
    let u0 = p.initial(&g);
    let dt = compute_dt(&sampler, &u0, 0.2, 3.0).map_err(|e| e.to_string())?;
    let mut worst = 0.0f64;
    for scheme in Scheme::ALL {
        let stepper = Stepper::new(&sampler, scheme, 0.01, WenoParams::default());
        let u1 = stepper.step(&u0, 0.2, dt).map_err(|e| e.to_string())?;
        worst = worst.max((u1.mass(&g) - u0.mass(&g)).abs() / u0.abs_mass(&g));
    }
    verdict(worst, 1e-12)
}

fn check_implicit_mode() -> Result<String, String> {
    let g = GridSpec::periodic([0.0, TAU, 0.0, TAU], 32, 32).map_err(|e| e.to_string())?;
    let rhs = CellField::from_fn(&g, |x, y| (3.0 * x - 2.0 * y).cos());
    let d = laplacian_averages(&rhs, &g);
    let lambda = d.as_slice().iter().zip(rhs.as_slice()).map(|(a, b)| a * b).sum::<f64>()
        / rhs.as_slice().iter().map(|b| b * b).sum::<f64>();
    let coeff = 0.05;
    let x = implicit_solve(&rhs, coeff, &ImplicitSolver::for_grid(&g), &g).map_err(|e| e.to_string())?;
    let worst = x
        .as_slice()
        .iter()
        .zip(rhs.as_slice())
        .map(|(a, b)| (a - b / (1.0 - coeff * lambda)).abs())
        .fold(0.0, f64::max);
    verdict(worst, 1e-12)
}
