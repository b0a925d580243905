use std::path::{Path, PathBuf};

use ipm_core::control::{fbsm, objective, ControlSchedule};
use ipm_core::hopf::{hopf_scan, track, HopfScan};
use ipm_core::integrate::{bounds_certificate, integrate_forward, TimeGrid, Trajectory};
use ipm_core::stability::classify_estar;
use ipm_core::{ControlTriple, ModelParams, State};
use rayon::prelude::*;
use thiserror::Error;

use crate::config::{ConfigError, ScanSpec, ScenarioConfig, CONTROL_HORIZON, SIMULATION_HORIZON};
use crate::output::{fmt17, fmt_opt, write_file, Table};
use crate::report::{build_report, render_text};

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("numerical failure: {0}")]
    Numeric(#[from] ipm_core::Error),
    #[error("i/o failure: {0}")]
    Io(#[from] std::io::Error),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) => 2,
            Self::Numeric(_) => 3,
            Self::Io(_) => 1,
        }
    }
}

#[derive(Debug, Default)]
pub struct Outcome {
    pub files: Vec<PathBuf>,
    /// `false` when an iterative solve stopped at its cap or a cross-check failed.
    pub converged: bool,
    pub numeric_failure: Option<String>,
}

fn grid(cfg: &ScenarioConfig, default_tf: f64) -> Result<TimeGrid, RunError> {
    Ok(TimeGrid::with_step(cfg.t0, cfg.horizon(default_tf), cfg.h)?)
}

fn trajectory_table(traj: &Trajectory, names: [&str; 4]) -> Table {
    let mut t = Table::new(&["t", names[0], names[1], names[2], names[3]]);
    for (k, v) in traj.values.iter().enumerate() {
        t.push_numbers([traj.grid.time(k), v[0], v[1], v[2], v[3]]);
    }
    t
}

fn variant_label(param: &str, v: f64) -> String {
    format!("{param}_{v}")
}

fn config_echo(cfg: &ScenarioConfig, out: &Path, files: &mut Vec<PathBuf>) -> Result<(), RunError> {
    files.push(write_file(out, "config_echo.txt", &cfg.echo())?);
    Ok(())
}

/// Time series of the uncontrolled system, one file per scan value.
pub fn run_simulate(cfg: &ScenarioConfig) -> Result<Outcome, RunError> {
    let out = &cfg.output_dir;
    let g = grid(cfg, SIMULATION_HORIZON)?;
    let variants: Vec<(Option<String>, ModelParams)> = match &cfg.scan {
        None => vec![(None, cfg.params)],
        Some(scan) => scan
            .values()
            .into_iter()
            .map(|v| {
                let mut p = cfg.params;
                p.set(scan.param(), v);
                (Some(variant_label(scan.param(), v)), p)
            })
            .collect(),
    };
    let runs: Vec<Result<(Option<String>, Table), RunError>> = variants
        .par_iter()
        .map(|(label, p)| {
            let traj = integrate_forward(p, &cfg.initial_state, &g, None)?;
            let c = bounds_certificate(p, &traj);
            let mut t = trajectory_table(&traj, ["X", "S", "I", "A"]);
            if let Some(l) = label {
                t.comment(format!("variant {l}"));
            }
            t.comment(format!(
                "bounds L={} bound_XSI={} bound_A={} sup_XSI={} sup_A={} tail_only={} satisfied={}",
                fmt17(c.l),
                fmt17(c.bound_xsi),
                fmt17(c.bound_a),
                fmt17(c.sup_xsi),
                fmt17(c.sup_a),
                c.tail_only,
                c.satisfied
            ));
            Ok((label.clone(), t))
        })
        .collect();
    let mut files = Vec::new();
    config_echo(cfg, out, &mut files)?;
    let mut names = Vec::new();
    for r in runs {
        let (label, t) = r?;
        let name = match label {
            Some(l) => format!("simulate_{l}.csv"),
            None => "simulate.csv".to_string(),
        };
        files.push(write_file(out, &name, &t.render())?);
        names.push(name);
    }
    files.push(write_file(out, "simulate.gp", &simulate_script(&names))?);
    Ok(Outcome { files, converged: true, numeric_failure: None })
}

fn simulate_script(files: &[String]) -> String {
    let mut s = String::from(
        "set datafile separator ','\nset datafile commentschars '#'\nset key autotitle columnhead\n\
         set terminal pngcairo size 1200,900\nset output 'simulate.png'\nset multiplot layout 2,2\nset xlabel 'time (days)'\n",
    );
    for (col, name) in [(2, "crop X"), (3, "susceptible S"), (4, "infected I"), (5, "awareness A")] {
        let plots: Vec<String> =
            files.iter().map(|f| format!("'{f}' using 1:{col} with lines title '{}'", f.trim_end_matches(".csv"))).collect();
        s.push_str(&format!("set title '{name}'\nplot {}\n", plots.join(", \\\n     ")));
    }
    s.push_str("unset multiplot\n");
    s
}

fn run_report(cfg: &ScenarioConfig, stability: bool, stem: &str) -> Result<Outcome, RunError> {
    let report = build_report(&cfg.params, stability)?;
    let mut files = Vec::new();
    config_echo(cfg, &cfg.output_dir, &mut files)?;
    files.push(write_file(&cfg.output_dir, &format!("{stem}.txt"), &render_text(&report))?);
    let json = serde_json::to_string_pretty(&report).map_err(std::io::Error::other)?;
    files.push(write_file(&cfg.output_dir, &format!("{stem}.json"), &json)?);
    let failure = report.has_failures().then(|| {
        report.consistency.iter().filter(|c| c.starts_with("FAILED")).cloned().collect::<Vec<_>>().join("; ")
    });
    Ok(Outcome { files, converged: true, numeric_failure: failure })
}

pub fn run_equilibria(cfg: &ScenarioConfig) -> Result<Outcome, RunError> {
    run_report(cfg, false, "equilibria")
}

pub fn run_stability(cfg: &ScenarioConfig) -> Result<Outcome, RunError> {
    run_report(cfg, true, "stability")
}

fn alpha_range(cfg: &ScenarioConfig) -> Result<(f64, f64, usize), RunError> {
    match &cfg.scan {
        Some(ScanSpec::Range { param, lo, hi, n }) if param == "alpha" => Ok((*lo, *hi, *n)),
        _ => Err(ConfigError::Invariant(
            "this scenario needs `scan = alpha` with scan_lo, scan_hi and scan_n".into(),
        )
        .into()),
    }
}

fn hopf_tables(scan: &HopfScan) -> (Table, Table) {
    let mut grid = Table::new(&["alpha", "X", "S", "I", "A", "psi", "psi_scale"]);
    for s in &scan.samples {
        let st = s.equilibrium.map(State::to_array);
        let mut row = vec![fmt17(s.alpha)];
        row.extend((0..4).map(|k| fmt_opt(st.map(|v| v[k]))));
        row.push(fmt_opt(s.psi));
        row.push(fmt_opt(s.psi_scale));
        grid.rows.push(row);
    }
    for (a, b) in &scan.skipped {
        grid.comment(format!("no coexistence state on [{}, {}]", fmt17(*a), fmt17(*b)));
    }
    let mut pts = Table::new(&[
        "alpha_star",
        "psi",
        "psi_scale",
        "re",
        "omega0",
        "y3_over_y1",
        "A",
        "B",
        "C",
        "D",
        "transversality",
        "predicted_speed",
        "observed_speed",
        "crossing_verified",
    ]);
    for h in &scan.points {
        let mut row: Vec<String> = [
            h.alpha_star,
            h.psi_at_star,
            h.psi_scale,
            h.real_part,
            h.imag_part_omega0,
            h.omega0_sq_ratio,
            h.a,
            h.b,
            h.c,
            h.d,
            h.transversality_value,
            h.predicted_speed,
            h.observed_speed,
        ]
        .into_iter()
        .map(fmt17)
        .collect();
        row.push(h.eigen_crossing_verified.to_string());
        pts.rows.push(row);
    }
    (grid, pts)
}

pub fn run_hopf_scan(cfg: &ScenarioConfig) -> Result<Outcome, RunError> {
    let (lo, hi, n) = alpha_range(cfg)?;
    let scan = hopf_scan(&cfg.params, lo, hi, n)?;
    let (grid, pts) = hopf_tables(&scan);
    let mut files = Vec::new();
    config_echo(cfg, &cfg.output_dir, &mut files)?;
    files.push(write_file(&cfg.output_dir, "hopf_scan.csv", &grid.render())?);
    files.push(write_file(&cfg.output_dir, "hopf_points.csv", &pts.render())?);
    let script = "set datafile separator ','\nset datafile commentschars '#'\nset terminal pngcairo size 900,600\n\
                  set output 'hopf_scan.png'\nset xlabel 'alpha'\nset ylabel 'Psi / scale'\nset xzeroaxis\n\
                  plot 'hopf_scan.csv' using 1:($6/$7) with linespoints title 'Psi', \\\n     \
                  'hopf_points.csv' using 1:(0) with points pt 7 ps 1.5 title 'crossings'\n";
    files.push(write_file(&cfg.output_dir, "hopf_scan.gp", script)?);
    Ok(Outcome { files, converged: true, numeric_failure: None })
}

pub fn run_bifurcation(cfg: &ScenarioConfig) -> Result<Outcome, RunError> {
    let (lo, hi, n) = alpha_range(cfg)?;
    let alphas = ipm_core::hopf::alpha_grid(lo, hi, n);
    let mut branch: Vec<Option<State>> = Vec::with_capacity(n);
    let mut prev: Option<State> = None;
    for &a in &alphas {
        let eq = track(&cfg.params, a, prev.as_ref()).map(|e| e.state);
        prev = eq;
        branch.push(eq);
    }
    let g = grid(cfg, SIMULATION_HORIZON)?;
    let start = ((g.n_steps as f64) * cfg.transient_fraction).floor() as usize;
    let rows: Vec<Result<Vec<String>, RunError>> = alphas
        .par_iter()
        .zip(branch.par_iter())
        .map(|(&a, eq)| {
            let p = cfg.params.with_alpha(a);
            let verdict = match eq {
                Some(st) => {
                    let e = ipm_core::equilibria::coexistence_from_state(&p, *st)
                        .ok_or(ipm_core::Error::NoCoexistence { alpha: a })?;
                    classify_estar(&p, &e)?.verdict.label().to_string()
                }
                None => String::new(),
            };
            let traj = integrate_forward(&p, &cfg.initial_state, &g, None)?;
            let mut lo = [f64::INFINITY; 4];
            let mut hi = [f64::NEG_INFINITY; 4];
            for v in &traj.values[start..] {
                for k in 0..4 {
                    lo[k] = lo[k].min(v[k]);
                    hi[k] = hi[k].max(v[k]);
                }
            }
            let mut row = vec![fmt17(a)];
            row.extend((0..4).map(|k| fmt_opt(eq.map(|s| s.to_array()[k]))));
            row.push(verdict);
            for k in 0..4 {
                row.push(fmt17(lo[k]));
                row.push(fmt17(hi[k]));
            }
            Ok(row)
        })
        .collect();
    let mut t = Table::new(&[
        "alpha", "X_eq", "S_eq", "I_eq", "A_eq", "verdict", "X_min", "X_max", "S_min", "S_max", "I_min", "I_max", "A_min",
        "A_max",
    ]);
    t.comment(format!(
        "attractor extremes over t in [{}, {}]",
        fmt17(g.time(start)),
        fmt17(g.tf)
    ));
    for r in rows {
        t.rows.push(r?);
    }
    let scan = hopf_scan(&cfg.params, lo, hi, n)?;
    let mut body = t.render();
    for h in &scan.points {
        body.push_str(&format!(
            "# hopf alpha_star={} omega0={} transversality={} predicted_speed={} crossing_verified={}\n",
            fmt17(h.alpha_star),
            fmt17(h.imag_part_omega0),
            fmt17(h.transversality_value),
            fmt17(h.predicted_speed),
            h.eigen_crossing_verified
        ));
    }
    let mut files = Vec::new();
    config_echo(cfg, &cfg.output_dir, &mut files)?;
    files.push(write_file(&cfg.output_dir, "bifurcation.csv", &body)?);
    let mut script = String::from(
        "set datafile separator ','\nset datafile commentschars '#'\nset terminal pngcairo size 1200,900\n\
         set output 'bifurcation.png'\nset multiplot layout 2,2\nset xlabel 'alpha'\n",
    );
    for (k, name) in ["X", "S", "I", "A"].iter().enumerate() {
        script.push_str(&format!(
            "set title '{name}'\nplot 'bifurcation.csv' using 1:{} with points pt 7 ps 0.5 title 'min', \\\n     \
             '' using 1:{} with points pt 7 ps 0.5 title 'max', \\\n     '' using 1:{} with lines title 'E*'\n",
            7 + 2 * k,
            8 + 2 * k,
            2 + k
        ));
    }
    script.push_str("unset multiplot\n");
    files.push(write_file(&cfg.output_dir, "bifurcation.gp", &script)?);
    Ok(Outcome { files, converged: true, numeric_failure: None })
}

pub fn run_optimal_control(cfg: &ScenarioConfig) -> Result<Outcome, RunError> {
    let g = grid(cfg, CONTROL_HORIZON)?;
    let p = &cfg.params;
    let res = fbsm(p, &cfg.weights, &cfg.initial_state, &g, &cfg.fbsm)?;
    let zero = ControlSchedule::constant(g, ControlTriple::ZERO);
    let baseline = integrate_forward(p, &cfg.initial_state, &g, Some(&zero))?;
    let baseline_j = objective(&cfg.weights, &baseline, &zero)?;
    let header = format!(
        "objective={} converged={} iterations={} baseline_objective={} hessian_positive_definite={}",
        fmt17(res.objective),
        res.converged,
        res.iterations,
        fmt17(baseline_j),
        res.hessian_positive_definite
    );
    let mut state = trajectory_table(&res.state, ["X", "S", "I", "A"]);
    state.comment(header.clone());
    let mut adjoint = trajectory_table(&res.adjoint, ["lambda1", "lambda2", "lambda3", "lambda4"]);
    adjoint.comment(header.clone());
    let mut control = Table::new(&["t", "u1", "u2", "u3"]);
    control.comment(header.clone());
    for (k, u) in res.control.values.iter().enumerate() {
        control.push_numbers([g.time(k), u.u1, u.u2, u.u3]);
    }
    let mut iters = Table::new(&["iteration", "change_u1", "change_u2", "change_u3", "objective"]);
    iters.comment(header.clone());
    for h in &res.history {
        iters.push_numbers([
            h.iteration as f64,
            h.relative_change[0],
            h.relative_change[1],
            h.relative_change[2],
            h.objective,
        ]);
    }
    let mut base = trajectory_table(&baseline, ["X", "S", "I", "A"]);
    base.comment(format!("uncontrolled baseline, u = 0, objective={}", fmt17(baseline_j)));
    let out = &cfg.output_dir;
    let mut files = Vec::new();
    config_echo(cfg, out, &mut files)?;
    files.push(write_file(out, "oc_state.csv", &state.render())?);
    files.push(write_file(out, "oc_control.csv", &control.render())?);
    files.push(write_file(out, "oc_adjoint.csv", &adjoint.render())?);
    files.push(write_file(out, "oc_iterations.csv", &iters.render())?);
    files.push(write_file(out, "oc_baseline.csv", &base.render())?);
    files.push(write_file(out, "oc_summary.txt", &format!("{}\n", header.replace(' ', "\n")))?);
    let mut script = String::from(
        "set datafile separator ','\nset datafile commentschars '#'\nset key autotitle columnhead\n\
         set terminal pngcairo size 1200,900\nset output 'optimal_control.png'\nset multiplot layout 2,3\nset xlabel 'time (days)'\n",
    );
    for (col, name) in [(2, "X"), (3, "S"), (4, "I"), (5, "A")] {
        script.push_str(&format!(
            "set title '{name}'\nplot 'oc_state.csv' using 1:{col} with lines title 'controlled', \\\n     \
             'oc_baseline.csv' using 1:{col} with lines title 'uncontrolled'\n"
        ));
    }
    script.push_str(
        "set title 'controls'\nset yrange [0:1]\nplot 'oc_control.csv' using 1:2 with lines, '' using 1:3 with lines, '' using 1:4 with lines\n\
         set autoscale y\nset title 'sweep'\nset xlabel 'iteration'\nplot 'oc_iterations.csv' using 1:5 with linespoints title 'objective'\nunset multiplot\n",
    );
    files.push(write_file(out, "optimal_control.gp", &script)?);
    Ok(Outcome { files, converged: res.converged, numeric_failure: None })
}
