use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use monodsm::continuation::{run_continuation_with, DiagnosticOptions, SolveReport};
use monodsm::experiment::ExperimentConfig;
use monodsm::flow::{
    integrate_flow, verify_decay, verify_tail_bound, verify_vdot_bound, FlowTrace, DEFAULT_DECAY_TOL_FACTOR,
    DEFAULT_TAIL_SLACK, DEFAULT_VDOT_SLACK,
};
use monodsm::gallery::GALLERY;
use monodsm::oracle::solve_reference;
use monodsm::validate::{check_coercive, check_jacobian_psd, check_monotone};
use monodsm::{HVector, OperatorSpec, ValidatorReport};

const MONOTONE_PAIRS: usize = 1000;
const MONOTONE_RADIUS: f64 = 10.0;
const MONOTONE_TOL: f64 = 1e-10;
const COERCIVE_RADII: [f64; 3] = [1.0, 10.0, 100.0];
const COERCIVE_DIRS: usize = 200;
const PSD_POINTS: usize = 20;
const PSD_RADIUS: f64 = 5.0;
const PSD_TOL: f64 = 1e-8;

fn status(passed: bool) -> &'static str {
    if passed {
        "PASS"
    } else {
        "FAIL"
    }
}

fn print_report(name: &str, r: &ValidatorReport) {
    println!("{name:<22} {}  worst={:.6e}  samples={}", status(r.passed), r.worst_value, r.samples_checked);
    if !r.note.is_empty() {
        println!("    {}", r.note);
    }
    if let Some((x, y)) = &r.witness {
        println!("    witness: {:?} {:?}", x.as_slice(), y.as_slice());
    }
}

pub fn gallery() {
    println!("{:<20} {:<10} {:<9} {:<18} {:<9} summary", "name", "dims", "monotone", "strictly_monotone", "coercive");
    for e in GALLERY {
        println!(
            "{:<20} {:<10} {:<9} {:<18} {:<9} {}",
            e.name,
            e.dims.to_string(),
            e.flags.monotone,
            e.flags.strictly_monotone,
            e.flags.coercive,
            e.summary
        );
    }
}

pub fn verify(cfg: &ExperimentConfig) -> Result<bool> {
    let op = cfg.operator_spec()?;
    println!("operator {} (n={})", op.name(), op.dim());
    let mono = check_monotone(&op, cfg.sub_seed("monotone"), MONOTONE_PAIRS, MONOTONE_RADIUS, MONOTONE_TOL)?;
    let coer = check_coercive(&op, &COERCIVE_RADII, cfg.sub_seed("coercive"), COERCIVE_DIRS)?;
    let psd = check_jacobian_psd(&op, cfg.sub_seed("jacobian_psd"), PSD_POINTS, PSD_RADIUS, PSD_TOL)?;
    print_report("monotone", &mono);
    print_report("coercive", &coer);
    print_report("jacobian_psd", &psd);
    let flags = op.flags();
    for (name, declared, r) in [
        ("monotone", flags.monotone, &mono),
        ("coercive", flags.coercive, &coer),
        ("jacobian_psd", flags.monotone, &psd),
    ] {
        if declared != r.passed {
            println!("declared {name}={declared} but the check says {}", r.passed);
        }
    }
    Ok(mono.passed && coer.passed && psd.passed)
}

/// `G(u) = F(u) + a u`, for handing the regularized equation to the oracle.
fn regularized(op: &OperatorSpec, a: f64) -> OperatorSpec {
    let inner = op.clone();
    OperatorSpec::new(format!("{}+{a}I", op.name()), op.dim(), move |u| {
        let fu = inner.evaluate(&HVector::new(u.to_vec()).expect("nonempty")).expect("dimension checked");
        fu.iter().zip(u).map(|(f, x)| f + a * x).collect()
    })
}

fn write_trace(trace: &FlowTrace, path: &Path) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    trace.write_csv(BufWriter::new(f))?;
    Ok(())
}

pub fn flow(cfg: &ExperimentConfig) -> Result<bool> {
    let Some(a) = cfg.a else { bail!("flow needs a fixed regularization; pass --a") };
    let op = cfg.operator_spec()?;
    let h = cfg.target_vector()?;
    let sol = integrate_flow(&op, a, &h, &HVector::zeros(op.dim()), &cfg.flow)?;
    let path = cfg.outputs.trace_dir.join(format!("flow_{}_n{}_a{a:e}.csv", op.name(), op.dim()));
    write_trace(&sol.trace, &path)?;

    println!("operator {} (n={}) a={a} h={:?}", op.name(), op.dim(), h.as_slice());
    println!("u_a = {:?}", sol.u_a.as_slice());
    println!(
        "residual = {:.6e}  t_end = {:.6}  steps = {}  terminated_by = {}",
        sol.residual,
        sol.trace.t_end(),
        sol.trace.steps(),
        sol.trace.terminated_by.as_str()
    );
    if let Some(t) = sol.trace.crossing_time(0.5) {
        println!("residual half-life = {t:.6} (ln 2 = {:.6})", std::f64::consts::LN_2);
    }
    if let Some(e) = &sol.failure {
        println!("failure: {e}");
    }
    println!("trace: {}", path.display());

    let mut ok = sol.converged();
    if !ok {
        println!("convergence            FAIL");
    }
    let reports = [
        ("verify_decay", verify_decay(&sol.trace, DEFAULT_DECAY_TOL_FACTOR)),
        ("verify_vdot_bound", verify_vdot_bound(&sol.trace, DEFAULT_VDOT_SLACK)),
        ("verify_tail_bound", verify_tail_bound(&sol.trace, &sol.u_a, DEFAULT_TAIL_SLACK)?),
    ];
    for (name, r) in &reports {
        print_report(name, r);
        ok &= r.passed;
    }
    if cfg.oracle {
        let reference = solve_reference(&regularized(&op, a), &h)?;
        let d = reference.u.distance(&sol.u_a);
        let passed = d <= cfg.tol;
        println!("oracle ({})          {}  distance={d:.6e}", reference.method, status(passed));
        ok &= passed;
    }
    Ok(ok)
}

/// Re-checks a trace CSV written by `flow` or `solve`.
pub fn replay(path: &Path, ode_rel_tol: f64) -> Result<bool> {
    let f = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let trace = match FlowTrace::read_csv(f, ode_rel_tol) {
        Ok(t) => t,
        Err(e) => {
            println!("trace rejected: {e}");
            return Ok(false);
        }
    };
    println!("replaying {} (a={}, g0={:.6e}, {} records)", path.display(), trace.a, trace.g0, trace.records.len());
    let decay = verify_decay(&trace, DEFAULT_DECAY_TOL_FACTOR);
    let vdot = verify_vdot_bound(&trace, DEFAULT_VDOT_SLACK);
    print_report("verify_decay", &decay);
    print_report("verify_vdot_bound", &vdot);
    println!("verify_tail_bound      SKIP  (CSV carries no states)");
    Ok(decay.passed && vdot.passed)
}

fn relative_to(path: &Path, base: &Path) -> PathBuf {
    let abs = |p: &Path| std::path::absolute(p).unwrap_or_else(|_| p.to_path_buf());
    pathdiff::diff_paths(abs(path), abs(base)).unwrap_or_else(|| path.to_path_buf())
}

pub fn solve(cfg: &ExperimentConfig) -> Result<bool> {
    let op = cfg.operator_spec()?;
    let h = cfg.target_vector()?;
    let diag = DiagnosticOptions { minty_seed: cfg.sub_seed("minty"), ..DiagnosticOptions::default() };
    let mut report: SolveReport = run_continuation_with(&op, &h, &cfg.schedule, &cfg.flow, &diag)?;

    let report_path = &cfg.outputs.report_path;
    let report_dir = report_path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    for (k, stage) in report.stages.iter_mut().enumerate() {
        let path = cfg.outputs.trace_dir.join(format!("stage_{k:02}_a{:e}.csv", stage.a));
        if let Some(trace) = &stage.trace {
            write_trace(trace, &path)?;
        }
        stage.trace_path = Some(relative_to(&path, report_dir).to_string_lossy().replace('\\', "/"));
    }
    fs::create_dir_all(report_dir)?;
    let json = serde_json::to_string_pretty(&report)?;
    fs::write(report_path, json + "\n").with_context(|| format!("writing {}", report_path.display()))?;

    println!("operator {} (n={}) h={:?}", op.name(), op.dim(), h.as_slice());
    println!("{:>12} {:>14} {:>12} {:>10} {:>6}  terminated_by", "a", "|u_a|", "residual", "t_end", "steps");
    for s in &report.stages {
        println!(
            "{:>12.3e} {:>14.6e} {:>12.3e} {:>10.4} {:>6}  {}",
            s.a,
            s.norm_u,
            s.residual_eq6,
            s.flow_summary.t_end,
            s.flow_summary.steps,
            s.flow_summary.terminated_by.as_str()
        );
    }
    println!("final_u = {:?}", report.final_u.as_slice());
    println!("final |F(u) - h| = {:.6e} (tol {:e})", report.final_residual_eq5, cfg.tol);
    print_report("bound_report", &report.bound_report);
    print_report("minty_report", &report.minty_report);
    print_report("cauchy_report", &report.cauchy_report);
    println!("report: {}", report_path.display());

    let mut ok = true;
    if let Some(name) = report.first_failure(cfg.tol) {
        println!("first failed certificate: {name}");
        ok = false;
    }
    if cfg.oracle {
        if op.flags().strictly_monotone {
            let reference = solve_reference(&op, &h)?;
            let d = reference.u.distance(&report.final_u);
            let passed = d <= cfg.tol;
            println!("oracle ({})          {}  distance={d:.6e}", reference.method, status(passed));
            ok &= passed;
        } else {
            println!("oracle                 SKIP  (solution need not be unique)");
        }
    }
    Ok(ok)
}
