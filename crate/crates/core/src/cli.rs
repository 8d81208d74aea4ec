//! Command-line front end.
//!
//! Exit codes: 0 success, 1 a check failed, 2 usage or config error.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use crate::calculus::{compatibility_residual, comparability_constants, ConservationLaw, State};
use crate::error::{Error, Result};
use crate::hugoniot::{
    check_hypotheses, classify_discontinuity, growth_rate, h1b_isentropic_analytic, liu_scan, shock_curve,
    uniform_grid, verify_cornerstone, verify_lemma_decreasing, Family, Tolerances,
};
use crate::lab::{conserved_base, experiment_block_of, parse_experiment_config, report_json, run_experiment, write_outputs};
use crate::systems::{parse_system_config, build_system, read_config_text, SystemSpec};

#[derive(Debug, Parser)]
#[command(name = "shocklab", version, about = "Relative-entropy stability laboratory for extremal shocks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Config file, or the name of a builtin preset.
    #[arg(long)]
    pub config: String,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Seed for random samples and perturbation phases.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum FamilyArg {
    One,
    N,
}

impl From<FamilyArg> for Family {
    fn from(f: FamilyArg) -> Self {
        match f {
            FamilyArg::One => Family::One,
            FamilyArg::N => Family::N,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Entropy-pair compatibility and convexity audit.
    CheckSystem {
        #[command(flatten)]
        common: Common,
        /// Number of random interior states.
        #[arg(long, default_value_t = 100)]
        samples: usize,
    },
    /// Sample a shock curve and classify its jumps.
    ShockCurve {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        family: Option<FamilyArg>,
        /// Base state in primitive variables, comma separated.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        base: Option<Vec<f64>>,
        /// Largest curve parameter; defaults to 90% of the admissible range.
        #[arg(long)]
        s_end: Option<f64>,
        #[arg(long, default_value_t = 41)]
        points: usize,
    },
    /// Hypothesis checks, entropy identities along shock curves, and the
    /// Liu/convexity scan for isentropic pressure laws.
    VerifyLemmas {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        base: Option<Vec<f64>>,
    },
    /// Run an experiment and write ledger, path, snapshots and report.
    Simulate {
        #[command(flatten)]
        common: Common,
    },
    /// Run an experiment and print its stability report.
    StabilityReport {
        #[command(flatten)]
        common: Common,
    },
}

enum Outcome {
    Pass(Value),
    Fail(Value),
}

/// Parse `args` (including the program name) and run; returns the exit code.
pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(&cli.command) {
        Ok(Outcome::Pass(v)) => {
            println!("{}", serde_json::to_string_pretty(&v).expect("json"));
            0
        }
        Ok(Outcome::Fail(v)) => {
            println!("{}", serde_json::to_string_pretty(&v).expect("json"));
            1
        }
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Config { .. } | Error::Io(_) => 2,
                _ => 1,
            }
        }
    }
}

fn dispatch(cmd: &Command) -> Result<Outcome> {
    match cmd {
        Command::CheckSystem { common, samples } => check_system(common, *samples),
        Command::ShockCurve {
            common,
            family,
            base,
            s_end,
            points,
        } => curve_cmd(common, *family, base.as_deref(), *s_end, *points),
        Command::VerifyLemmas { common, base } => verify_lemmas(common, base.as_deref()),
        Command::Simulate { common } => simulate(common, false),
        Command::StabilityReport { common } => simulate(common, true),
    }
}

fn load_system(common: &Common) -> Result<(String, SystemSpec)> {
    let text = read_config_text(&common.config)?;
    let cfg = parse_system_config(&text)?;
    let sys = build_system(&cfg)?;
    Ok((text, sys))
}

fn save(out: Option<&Path>, name: &str, v: &Value) -> Result<()> {
    if let Some(dir) = out {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join(name), serde_json::to_string_pretty(v).expect("json") + "\n")?;
    }
    Ok(())
}

fn finish(ok: bool, v: Value, out: Option<&Path>, name: &str) -> Result<Outcome> {
    save(out, name, &v)?;
    Ok(if ok { Outcome::Pass(v) } else { Outcome::Fail(v) })
}

fn check_system(common: &Common, samples: usize) -> Result<Outcome> {
    let (_, sys) = load_system(common)?;
    let states = sys.sample_states(samples, common.seed.unwrap_or(0));
    let mut max_compat = 0.0f64;
    let mut min_eig = f64::INFINITY;
    for u in &states {
        max_compat = max_compat.max(compatibility_residual(&sys, u)?);
        let h = sys.entropy_hessian(u)?;
        let sym = (&h + h.transpose()) * 0.5;
        min_eig = min_eig.min(sym.symmetric_eigenvalues().min());
    }
    let omega: Vec<State> = states.iter().take(10).cloned().collect();
    let comp = comparability_constants(&sys, &omega, &states)?;
    let compat_ok = max_compat <= 1e-6;
    let convex_ok = min_eig > 0.0 && comp.c1 > 0.0;
    let v = json!({
        "system": sys.name(),
        "samples": states.len(),
        "max_compatibility_residual": max_compat,
        "compatibility_ok": compat_ok,
        "min_hessian_eigenvalue": min_eig,
        "comparability": comp,
        "convexity_ok": convex_ok,
        "ok": compat_ok && convex_ok,
    });
    finish(compat_ok && convex_ok, v, common.out.as_deref(), "check_system.json")
}

fn default_base(sys: &SystemSpec) -> Vec<f64> {
    match sys.base() {
        SystemSpec::Scalar(_) => vec![1.0],
        SystemSpec::FullEuler(_) => vec![1.0, 0.0, 1.0],
        _ => vec![1.0, 0.0],
    }
}

fn resolve_base(text: &str, sys: &SystemSpec, base: Option<&[f64]>) -> Result<(Vec<f64>, Option<Family>)> {
    let block = experiment_block_of(text)?;
    let fam = block.as_ref().map(|b| b.family);
    let prim = match (base, block) {
        (Some(b), _) => b.to_vec(),
        (None, Some(b)) => b.base,
        (None, None) => default_base(sys),
    };
    Ok((prim, fam))
}

/// Curve range used by default: 90% of the admissible range, at most the
/// base density (or 1 for scalar laws).
fn default_s_end(sys: &SystemSpec, base: &State, s_max: f64) -> f64 {
    let span = match sys.base() {
        SystemSpec::Scalar(_) => 1.0,
        _ => base[0],
    };
    0.9 * s_max.min(span)
}

fn curve_cmd(common: &Common, family: Option<FamilyArg>, base: Option<&[f64]>, s_end: Option<f64>, points: usize) -> Result<Outcome> {
    let (text, sys) = load_system(common)?;
    let (prim, fam) = resolve_base(&text, &sys, base)?;
    let family = family.map(Family::from).or(fam).unwrap_or(Family::One);
    let base = conserved_base(&sys, &prim)?;
    let curve = shock_curve(&sys, &base, family)?;
    let s_end = s_end.unwrap_or_else(|| default_s_end(&sys, &base, curve.s_max()));
    let grid = uniform_grid(s_end, points.max(2) - 1);
    let tol = Tolerances::default();
    let mut rows = Vec::new();
    let mut ok = true;
    for &s in &grid {
        let (st, sigma) = curve.eval(s)?;
        let (l, r) = family.ordered(&base, &st);
        let res = crate::hugoniot::rh_residual(&sys, l, r, sigma);
        let class = if s > 0.0 {
            let c = classify_discontinuity(&sys, l, r)?.classification;
            ok &= c.matches(family);
            Some(c)
        } else {
            None
        };
        ok &= res <= tol.rh;
        rows.push(json!({"s": s, "state": st.as_slice(), "sigma": sigma, "rh_residual": res, "classification": class}));
    }
    let v = json!({
        "system": sys.name(),
        "family": family,
        "base": base.as_slice(),
        "s_max": curve.s_max(),
        "samples": rows,
        "ok": ok,
    });
    finish(ok, v, common.out.as_deref(), "shock_curve.json")
}

fn verify_lemmas(common: &Common, base: Option<&[f64]>) -> Result<Outcome> {
    let (text, sys) = load_system(common)?;
    let (prim, _) = resolve_base(&text, &sys, base)?;
    let base = conserved_base(&sys, &prim)?;
    let tol = Tolerances::default();
    let mut ok = true;
    let mut families = Vec::new();
    let probes = sys.sample_states(5, common.seed.unwrap_or(0));
    for family in [Family::One, Family::N] {
        let curve = shock_curve(&sys, &base, family)?;
        let s_end = default_s_end(&sys, &base, curve.s_max());
        let grid = uniform_grid(s_end, 20);
        let hyp = check_hypotheses(&sys, curve.as_ref(), &grid, &tol)?;
        let mut lemma_residual = 0.0f64;
        let mut lemma_ineq = true;
        for v in &probes {
            for &s in grid.iter().step_by(4) {
                let c = verify_lemma_decreasing(&sys, curve.as_ref(), v, s, &tol)?;
                lemma_residual = lemma_residual.max(c.residual);
                lemma_ineq &= c.inequality_ok;
            }
        }
        let mut corner_residual = 0.0f64;
        let mut corner_sign = true;
        for &s in grid.iter().step_by(2) {
            for &s0 in grid.iter().step_by(2) {
                let c = verify_cornerstone(&sys, curve.as_ref(), s, s0, &tol)?;
                corner_residual = corner_residual.max(c.residual);
                corner_sign &= c.sign_ok;
            }
        }
        let mut min_growth = f64::INFINITY;
        for &s in &grid[1..] {
            min_growth = min_growth.min(growth_rate(&sys, curve.as_ref(), s)?);
        }
        let fam_ok = hyp.all_ok && lemma_residual <= 1e-7 && lemma_ineq && corner_residual <= 1e-7 && corner_sign;
        ok &= fam_ok;
        families.push(json!({
            "family": family,
            "hypotheses": hyp,
            "identity_max_residual": lemma_residual,
            "identity_inequality_ok": lemma_ineq,
            "cornerstone_max_residual": corner_residual,
            "cornerstone_sign_ok": corner_sign,
            "min_growth_rate": min_growth,
            "ok": fam_ok,
        }));
    }
    let mut liu = Value::Null;
    if let SystemSpec::Isentropic(ise) = sys.base() {
        let (lo, hi) = ise.law.range();
        let rho_lo = lo.max(0.05);
        let rho_hi = hi.min(3.0);
        let rho_grid: Vec<f64> = (0..=40).map(|k| rho_lo + (rho_hi - rho_lo) * k as f64 / 40.0).collect();
        let s_grid = uniform_grid(0.5 * (rho_hi - rho_lo), 10);
        let scan = liu_scan(&ise.law, &rho_grid, &s_grid, tol.mono)?;
        let mut h1b_err = 0.0f64;
        let curve = shock_curve(&sys, &base, Family::One)?;
        for &s in &uniform_grid(default_s_end(&sys, &base, curve.s_max()), 10)[1..] {
            let fd = growth_rate(&sys, curve.as_ref(), s)?;
            let exact = h1b_isentropic_analytic(&ise.law, base[0], s)?;
            h1b_err = h1b_err.max((fd - exact).abs() / (1.0 + exact.abs()));
        }
        ok &= scan.liu_ok;
        liu = json!({
            "law": ise.law.label(),
            "liu_ok": scan.liu_ok,
            "failure_intervals": scan.failure_intervals,
            "nonconvex_intervals": scan.nonconvex_intervals,
            "failures": scan.failures.len(),
            "min_rho_p_dd": scan.min_rho_p_dd,
            "growth_vs_closed_form": h1b_err,
        });
    }
    let v = json!({
        "system": sys.name(),
        "base": base.as_slice(),
        "families": families,
        "liu_scan": liu,
        "ok": ok,
    });
    finish(ok, v, common.out.as_deref(), "verify_lemmas.json")
}

fn simulate(common: &Common, report_only: bool) -> Result<Outcome> {
    let text = read_config_text(&common.config)?;
    let mut cfg = parse_experiment_config(&text)?;
    if let Some(seed) = common.seed {
        cfg.experiment.seed = seed;
    }
    let res = run_experiment(&cfg)?;
    if report_only {
        let v = serde_json::to_value(&res.report).expect("report serializes");
        save(common.out.as_deref(), "stability_report.json", &v)?;
        return Ok(if res.report.all_ok { Outcome::Pass(v) } else { Outcome::Fail(v) });
    }
    let out = common.out.clone().unwrap_or_else(|| PathBuf::from("out"));
    write_outputs(&res, &out)?;
    Ok(Outcome::Pass(report_json(&res)))
}
