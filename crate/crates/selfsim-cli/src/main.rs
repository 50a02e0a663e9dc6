use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;
use rayon::prelude::*;
use serde_json::{json, Value};

use selfsim::config::{parse_form, SolverConfig};
use selfsim::interface::{reconstruct_from_state, InterfaceSolution};
use selfsim::io;
use selfsim::nonlinear::{IterateState, Ops, Outcome};
use selfsim::pipeline::{self, Run};
use selfsim::verify::{self, CheckResult};
use selfsim::Error;

const EXIT_OK: u8 = 0;
const EXIT_CHECKS: u8 = 1;
const EXIT_NO_CONVERGENCE: u8 = 2;
const EXIT_CONFIG: u8 = 3;

#[derive(Parser)]
#[command(name = "selfsim", version, about = "Self-similar Hele-Shaw profiles with surface tension")]
struct Cli {
    #[command(flatten)]
    o: Overrides,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Clone, Default)]
struct Overrides {
    /// Key-value config file; flags override its entries.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    epsilon: Option<f64>,
    #[arg(long = "n", alias = "n-points", global = true)]
    n_points: Option<usize>,
    #[arg(long, global = true)]
    half_width: Option<f64>,
    #[arg(long, global = true)]
    pad_factor: Option<usize>,
    #[arg(long, global = true)]
    delta: Option<f64>,
    #[arg(long, global = true)]
    tol: Option<f64>,
    #[arg(long, global = true)]
    max_iter: Option<usize>,
    #[arg(long, global = true)]
    relaxation: Option<f64>,
    #[arg(long, global = true)]
    taper_fraction: Option<f64>,
    /// `corrected` or `as_printed`.
    #[arg(long, global = true)]
    form: Option<String>,
    #[arg(long, global = true)]
    output_dir: Option<PathBuf>,
    /// Comma-separated snapshot times for the interface plot.
    #[arg(long, global = true, allow_hyphen_values = true)]
    times: Option<String>,
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Build G, iHG, V and the weight; write CSV and a JSON summary.
    Gprofile,
    /// Full solve: G, Picard iteration, interface.
    Solve,
    /// Independent solves over a list of epsilons.
    Sweep {
        /// Comma-separated epsilons.
        #[arg(long, allow_hyphen_values = true)]
        epsilons: Option<String>,
    },
    /// Interface from a stored run (`--from`) or a fresh solve.
    Reconstruct {
        #[arg(long)]
        from: Option<PathBuf>,
    },
    /// Run the check suite; exit 0 iff every check passes.
    Verify {
        /// Existing run directory whose run.json supplies the configuration.
        #[arg(long)]
        from: Option<PathBuf>,
        /// Skip the refined partner run (constants are then only checked for finiteness).
        #[arg(long)]
        no_refine: bool,
    },
}

fn fail(code: u8, msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(code)
}

fn error_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) | Error::InvalidParams(_) => EXIT_CONFIG,
        Error::NoConvergence { .. } | Error::ContractionFailure { .. } => EXIT_NO_CONVERGENCE,
        _ => EXIT_CHECKS,
    }
}

fn parse_list(s: &str) -> Result<Vec<f64>, Error> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| t.parse().map_err(|_| Error::Config(format!("cannot parse {t:?} as a number"))))
        .collect()
}

/// Defaults, then the config file, then `SELFSIM_OUTPUT_DIR`, then flags.
fn load_config(o: &Overrides, base: Option<SolverConfig>) -> Result<SolverConfig, Error> {
    let mut c = match (&o.config, base) {
        (Some(p), _) => SolverConfig::from_file(p)?,
        (None, Some(b)) => b,
        (None, None) => SolverConfig::default(),
    };
    if let Ok(d) = std::env::var("SELFSIM_OUTPUT_DIR") {
        if !d.is_empty() {
            c.output_dir = PathBuf::from(d);
        }
    }
    macro_rules! take {
        ($($f:ident),*) => { $(if let Some(v) = o.$f.clone() { c.$f = v; })* };
    }
    take!(epsilon, n_points, half_width, pad_factor, delta, tol, max_iter, relaxation, taper_fraction, output_dir, seed);
    if let Some(f) = &o.form {
        c.form = parse_form(f)?;
    }
    if let Some(t) = &o.times {
        c.times = parse_list(t)?;
    }
    c.validate()?;
    Ok(c)
}

fn write_json(path: &Path, v: &Value) -> Result<(), Error> {
    io::write_json(path, v)
}

fn config_json(c: &SolverConfig) -> Value {
    serde_json::to_value(c).unwrap_or(Value::Null)
}

fn run_json(run: &Run) -> Value {
    let mut report = serde_json::to_value(&run.sol.report).unwrap_or(Value::Null);
    if let Value::Object(m) = &mut report {
        // wall time lives in timings.json so run.json is reproducible
        m.remove("wall_time_s");
    }
    let status = match run.sol.report.outcome {
        Outcome::Converged => "converged",
        Outcome::NoConvergence => "no_convergence",
        Outcome::ContractionFailure => "contraction_failure",
    };
    let error = run.sol.check_outcome().err().map(|e| e.to_string());
    json!({
        "status": status,
        "error": error,
        "warnings": run.warnings,
        "config": config_json(&run.config),
        "gprofile": run.gp.report,
        "solver": run.solver_report,
        "iteration": report,
        "norms": run.sol.norms,
        "xnorm_over_epsilon": if run.gp.eps() != 0.0 { Some(run.sol.norms.xnorm / run.gp.eps().abs()) } else { None },
        "residuals": run.sol.residuals,
        "holomorphy": run.holomorphy,
        "tails": run.tails,
        "interface": run.iface.as_ref().map(diagnostics_json),
    })
}

fn diagnostics_json(ifs: &InterfaceSolution) -> Value {
    let d = &ifs.diagnostics;
    json!({
        "angle_plus": d.angle_plus,
        "angle_minus": d.angle_minus,
        "power_fit": d.power_fit,
        "exponent": ifs.exponent,
        "xfx_limit": d.xfx_limit,
        "antiderivative_error": d.antiderivative_error,
        "modulus_error": d.modulus_error,
        "U_residuals": ifs.u,
        "spectral_tail": ifs.spectral_tail(),
    })
}

fn error_json(cfg: Option<&SolverConfig>, e: &Error) -> Value {
    json!({
        "status": "error",
        "error": e.to_string(),
        "exit_code": error_code(e),
        "config": cfg.map(config_json),
    })
}

fn interface_svg(path: &Path, ifs: &InterfaceSolution, times: &[f64]) -> Result<(), Error> {
    let ev = ifs.evaluator();
    let mut series = Vec::new();
    for &t in times {
        let pts: Vec<(f64, f64)> = (0..=400)
            .map(|k| {
                let al = -5.0 + 10.0 * k as f64 / 400.0;
                ev.evaluate_z(al, t).map(|z| (z.re, z.im)).unwrap_or((f64::NAN, f64::NAN))
            })
            .collect();
        series.push((format!("t = {t}"), pts));
    }
    io::write_svg(path, &format!("Z(alpha, t), epsilon = {}", ifs.epsilon), &series)
}

fn write_interface(dir: &Path, ifs: &InterfaceSolution, times: &[f64]) -> Result<(), Error> {
    io::write_eta_csv(&dir.join("eta.csv"), ifs)?;
    io::write_field_csv(&dir.join("eta_x.csv"), &ifs.grid, &ifs.eta_x)?;
    write_json(&dir.join("diagnostics.json"), &diagnostics_json(ifs))?;
    interface_svg(&dir.join("interface.svg"), ifs, times)
}

fn write_run(dir: &Path, run: &Run) -> Result<(), Error> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join("config.txt"), run.config.to_kv_string())?;
    write_json(&dir.join("run.json"), &run_json(run))?;
    write_json(&dir.join("timings.json"), &serde_json::to_value(run.timings).unwrap_or(Value::Null))?;
    let grid = run.grid();
    let st = &run.sol.state;
    let v: Vec<Complex64> = st.v.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    io::write_field_csv(&dir.join("v.csv"), grid, &v)?;
    let fg: Vec<Complex64> = (0..grid.n).map(|j| Complex64::new(st.f[j], st.g[j])).collect();
    io::write_field_csv(&dir.join("f_plus_ig.csv"), grid, &fg)?;
    io::write_rlf1(&dir.join("v.rlf1"), grid, &[&st.v])?;
    if let Some(ifs) = &run.iface {
        write_interface(dir, ifs, &run.config.times)?;
    }
    Ok(())
}

fn outcome_code(run: &Run) -> u8 {
    match run.sol.report.outcome {
        Outcome::Converged => EXIT_OK,
        _ => EXIT_NO_CONVERGENCE,
    }
}

fn cmd_gprofile(cfg: &SolverConfig) -> Result<u8, Error> {
    let (sp, gp) = pipeline::build_profile(cfg)?;
    let dir = &cfg.output_dir;
    std::fs::create_dir_all(dir)?;
    let f = &gp.family;
    io::write_columns_csv(
        &dir.join("gprofile.csv"),
        sp.grid(),
        &[
            ("G", &f.g.values),
            ("G_x", &f.g_x.values),
            ("iHG", &gp.ih_g.values),
            ("V", &gp.v_big.values),
            ("w", &gp.w.values),
        ],
    )?;
    io::write_rlf1(
        &dir.join("gprofile.rlf1"),
        sp.grid(),
        &[&f.g.values, &f.g_x.values, &gp.ih_g.values, &gp.v_big.values, &gp.w.values],
    )?;
    write_json(
        &dir.join("gprofile.json"),
        &json!({
            "config": config_json(cfg),
            "integral_g_x": gp.report.integral_g_x,
            "c_growth": gp.c_growth,
            "sup_x_ihg_x": gp.report.sup_x_ihg_x,
            "linear_residual": gp.report.linear_residual,
            "report": gp.report,
        }),
    )?;
    println!("integral G_x      {:.12}", gp.report.integral_g_x);
    println!("C_growth          {:.6e}", gp.c_growth);
    println!("sup |x iHG_x|     {:.6e}", gp.report.sup_x_ihg_x);
    println!("linear residual   {:.3e}", gp.report.linear_residual);
    Ok(EXIT_OK)
}

fn print_run(run: &Run) {
    for w in &run.warnings {
        eprintln!("warning: {w}");
    }
    for s in &run.sol.report.steps {
        let r = s.ratio.map(|r| format!("{r:.4e}")).unwrap_or_else(|| "-".into());
        println!("step {:3}  |v|_X {:.6e}  delta {:.3e}  ratio {r}  residual {:.3e}", s.n, s.xnorm, s.delta, s.residual);
    }
    println!("outcome {:?}, |v|_X = {:.6e}", run.sol.report.outcome, run.sol.norms.xnorm);
    if let Some(ifs) = &run.iface {
        let d = &ifs.diagnostics;
        println!(
            "angle+ {:.9}  angle- {:.9}  power fit {:.9}  x f_x {:.6e}  sup|Im U| {:.3e}",
            d.angle_plus, d.angle_minus, d.power_fit, d.xfx_limit, ifs.u.im_sup
        );
    }
}

fn cmd_solve(cfg: &SolverConfig) -> Result<u8, Error> {
    let run = pipeline::solve(cfg)?;
    write_run(&cfg.output_dir, &run)?;
    print_run(&run);
    Ok(outcome_code(&run))
}

fn eps_label(e: f64) -> String {
    format!("eps_{e}")
}

fn cmd_sweep(cfg: &SolverConfig, list: Option<&str>) -> Result<u8, Error> {
    let eps = match list {
        Some(s) => parse_list(s)?,
        None => cfg.epsilons.clone(),
    };
    if eps.is_empty() {
        return Err(Error::Config("empty epsilon list".into()));
    }
    let mut unique: Vec<f64> = Vec::new();
    for e in eps {
        if unique.iter().any(|u| u.to_bits() == e.to_bits()) {
            eprintln!("warning: duplicate epsilon {e} ignored");
        } else {
            unique.push(e);
        }
    }
    let mut base = cfg.clone();
    base.epsilons = unique.clone();
    base.validate()?;
    std::fs::create_dir_all(&cfg.output_dir)?;
    let rows: Vec<(f64, u8, Value)> = unique
        .par_iter()
        .map(|&e| {
            let mut c = base.clone();
            c.epsilon = e;
            c.output_dir = base.output_dir.join(eps_label(e));
            match pipeline::solve(&c).and_then(|run| write_run(&c.output_dir, &run).map(|_| run)) {
                Ok(run) => {
                    let ifs = run.iface.as_ref();
                    let ratios: Vec<f64> = run.sol.report.ratios();
                    let row = json!({
                        "epsilon": e,
                        "status": format!("{:?}", run.sol.report.outcome),
                        "run_dir": c.output_dir,
                        "steps": run.sol.report.steps.len(),
                        "max_ratio": ratios.iter().cloned().fold(0.0, f64::max),
                        "xnorm": run.sol.norms.xnorm,
                        "xnorm_over_epsilon": if e != 0.0 { Some(run.sol.norms.xnorm / e.abs()) } else { None },
                        "exponent": run.gp.a(),
                        "power_fit": ifs.map(|i| i.diagnostics.power_fit),
                        "angle_plus": ifs.map(|i| i.diagnostics.angle_plus),
                        "angle_minus": ifs.map(|i| i.diagnostics.angle_minus),
                        "selfsimilar_residual": run.sol.residuals.selfsimilar,
                    });
                    (e, outcome_code(&run), row)
                }
                Err(err) => (e, error_code(&err), json!({"epsilon": e, "status": "error", "error": err.to_string()})),
            }
        })
        .collect();
    let mut code = EXIT_OK;
    for (e, c, row) in &rows {
        println!("epsilon {e:<8} exit {c}  |v|_X/eps {}", row["xnorm_over_epsilon"]);
        code = code.max(*c);
    }
    let ratios: Vec<f64> = rows.iter().filter_map(|r| r.2["xnorm_over_epsilon"].as_f64()).collect();
    let spread = if ratios.len() > 1 {
        let lo = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = ratios.iter().cloned().fold(0.0, f64::max);
        Some((hi - lo) / lo)
    } else {
        None
    };
    write_json(
        &cfg.output_dir.join("sweep.json"),
        &json!({
            "config": config_json(&base),
            "runs": rows.iter().map(|r| r.2.clone()).collect::<Vec<_>>(),
            "xnorm_over_epsilon_spread": spread,
        }),
    )?;
    Ok(code)
}

fn cmd_reconstruct(cfg: &SolverConfig, from: Option<&Path>) -> Result<u8, Error> {
    let Some(dir) = from else {
        let run = pipeline::solve(cfg)?;
        let Some(ifs) = &run.iface else {
            return Err(run.sol.check_outcome().unwrap_err());
        };
        std::fs::create_dir_all(&cfg.output_dir)?;
        write_interface(&cfg.output_dir, ifs, &cfg.times)?;
        print_run(&run);
        return Ok(EXIT_OK);
    };
    let stored = SolverConfig::from_file(&dir.join("config.txt"))?;
    let (grid, cols) = io::read_rlf1(&dir.join("v.rlf1"))?;
    if grid.n != stored.n_points || grid.half_width != stored.half_width || cols.len() != 1 {
        return Err(Error::Config("v.rlf1 does not match config.txt".into()));
    }
    let (sp, gp) = pipeline::build_profile(&stored)?;
    let ops = Ops::new(&sp, stored.taper_fraction);
    let st = IterateState::new(&cols[0], &gp, &ops);
    let ifs = reconstruct_from_state(&st, &gp, &ops)?;
    std::fs::create_dir_all(&cfg.output_dir)?;
    write_interface(&cfg.output_dir, &ifs, &cfg.times)?;
    let d = &ifs.diagnostics;
    println!(
        "angle+ {:.9}  angle- {:.9}  power fit {:.9}  sup|Im U| {:.3e}",
        d.angle_plus, d.angle_minus, d.power_fit, ifs.u.im_sup
    );
    Ok(EXIT_OK)
}

/// Configuration stored in an existing run directory.
fn config_from_run_dir(dir: &Path) -> Result<SolverConfig, Error> {
    let path = dir.join("run.json");
    let text = std::fs::read_to_string(&path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    let v: Value = serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    if v.get("schema").and_then(Value::as_u64) != Some(io::SCHEMA) {
        return Err(Error::Config(format!("{}: missing or unknown schema", path.display())));
    }
    let cfg: SolverConfig = serde_json::from_value(v.get("config").cloned().unwrap_or(Value::Null))
        .map_err(|e| Error::Config(format!("{}: bad config: {e}", path.display())))?;
    cfg.validate()?;
    Ok(cfg)
}

fn print_checks(checks: &[CheckResult]) {
    println!("{:<4}  {:<26} {:>12}    {:>10}  property", "pass", "check", "measured", "threshold");
    for c in checks {
        println!(
            "{:<4}  {:<26} {:>12.4e} {:>2} {:>10.3e}  {}",
            if c.pass { "ok" } else { "FAIL" },
            c.name,
            c.measured,
            c.relation,
            c.threshold,
            c.claim_ref
        );
    }
    let passed = checks.iter().filter(|c| c.pass).count();
    println!("{passed}/{} checks passed", checks.len());
}

fn cmd_verify(cfg: &SolverConfig, no_refine: bool) -> Result<u8, Error> {
    let run = pipeline::solve(cfg)?;
    let fine = if no_refine {
        None
    } else {
        Some(pipeline::solve(&cfg.refinement_partner())?)
    };
    let checks = verify::run_all(&run, fine.as_ref());
    print_checks(&checks);
    std::fs::create_dir_all(&cfg.output_dir)?;
    let passed = checks.iter().filter(|c| c.pass).count();
    let summary: BTreeMap<&str, usize> = [("passed", passed), ("failed", checks.len() - passed)].into();
    write_json(
        &cfg.output_dir.join("checks.json"),
        &json!({
            "config": config_json(cfg),
            "refined_n_points": fine.as_ref().map(|f| f.config.n_points),
            "summary": summary,
            "checks": checks,
        }),
    )?;
    Ok(if passed == checks.len() { EXIT_OK } else { EXIT_CHECKS })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let o = cli.o.clone();
    let base = match &cli.cmd {
        Cmd::Verify { from: Some(d), .. } => match config_from_run_dir(d) {
            Ok(c) => Some(c),
            Err(e) => return fail(EXIT_CONFIG, e),
        },
        _ => None,
    };
    let cfg = match load_config(&o, base) {
        Ok(c) => c,
        Err(e) => return fail(EXIT_CONFIG, e),
    };
    let result = match &cli.cmd {
        Cmd::Gprofile => cmd_gprofile(&cfg),
        Cmd::Solve => cmd_solve(&cfg),
        Cmd::Sweep { epsilons } => cmd_sweep(&cfg, epsilons.as_deref()),
        Cmd::Reconstruct { from } => cmd_reconstruct(&cfg, from.as_deref()),
        Cmd::Verify { no_refine, .. } => cmd_verify(&cfg, *no_refine),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            let code = error_code(&e);
            if matches!(cli.cmd, Cmd::Solve) {
                let _ = std::fs::create_dir_all(&cfg.output_dir);
                let _ = write_json(&cfg.output_dir.join("run.json"), &error_json(Some(&cfg), &e));
            }
            fail(code, e)
        }
    }
}
