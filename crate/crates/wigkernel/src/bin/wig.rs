use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use wigkernel::checks::{run_suite, write_rows, SUITES};
use wigkernel::fio::{fio_membership_kernel, two_path_discrepancy, type1_fio, wigner_kernel_type1, QuadraticPhase, FIO_KERNEL_CAP};
use wigkernel::io::{load_wkt, read_csv, read_matrix_csv, save_field_pgm, save_wkt, HamConfig, RunConfig, Tensor};
use wigkernel::kernel::{inverse_kernel, wigner_kernel_capped, OperatorKernel, DEFAULT_KERNEL_CAP};
use wigkernel::propagator::{propagator_kernel, split_step};
use wigkernel::signal::{gaussian, Grid, Signal, C64};
use wigkernel::symplectic::{SymplecticMat, OMEGA};
use wigkernel::transforms::{stft, wigner};
use wigkernel::Error;

/// Wigner kernels of discrete operators, FIO diagnostics and propagators.
///
/// Exit codes: 0 all requested checks pass, 1 a check failed, 2 usage or
/// format error.
#[derive(Parser)]
#[command(name = "wig", version)]
struct Cli {
    /// Worker threads (0 = one per core).
    #[arg(long, global = true, env = "WIG_THREADS", default_value_t = 0)]
    threads: usize,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Wigner distribution or STFT of a signal, with an optional heatmap.
    Wigner(WignerArgs),
    /// Wigner kernel of an operator and the kernel-level checks.
    Kernel(KernelArgs),
    /// Type-I FIO from a symbol and a quadratic phase.
    Fio(FioArgs),
    /// Propagate a state, or build the propagator kernel.
    Propagate(PropagateArgs),
    /// Run a check suite and print a CSV summary.
    Checks(ChecksArgs),
    /// Build information, thread count and kernel memory estimates.
    Info,
}

#[derive(Clone, Copy, ValueEnum)]
enum Transform {
    Wigner,
    Stft,
}

#[derive(Args)]
struct WignerArgs {
    /// Signal as WKT, or CSV with columns `re[,im]`.
    #[arg(long)]
    input: PathBuf,
    /// Second signal for the cross distribution, or the STFT window
    /// (default: the input itself for Wigner, the Gaussian for STFT).
    #[arg(long)]
    window: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "wigner")]
    transform: Transform,
    #[arg(long)]
    out: PathBuf,
    /// 16-bit PGM heatmap of |value|, frequency upward.
    #[arg(long)]
    pgm: Option<PathBuf>,
    /// Linear heatmap instead of the 8-decade log scale.
    #[arg(long)]
    linear: bool,
}

#[derive(Args)]
struct KernelArgs {
    /// Operator as WKT, or CSV with n columns (real) or 2n columns (re, im interleaved).
    #[arg(long)]
    op: PathBuf,
    /// Write the Wigner kernel here.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Check K_T K_U = K_{TU} for this second operator.
    #[arg(long)]
    compose: Option<PathBuf>,
    /// Check that the kernel of T^* is the kernel adjoint.
    #[arg(long)]
    adjoint: bool,
    /// Check that the kernel of T^{-1} inverts the kernel.
    #[arg(long)]
    invert: bool,
    /// Membership of T in the class of this symplectic matrix (CSV).
    #[arg(long)]
    membership: Option<PathBuf>,
    /// Largest n for which a kernel is built.
    #[arg(long, default_value_t = DEFAULT_KERNEL_CAP)]
    cap: usize,
    /// Run configuration (tolerances, membership thresholds).
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct FioArgs {
    /// Symbol as a WKT phase-space field.
    #[arg(long)]
    symbol: PathBuf,
    /// Phase blocks as CSV: one row `P,Q,R` for d = 1, or P, Q, R stacked.
    #[arg(long)]
    phase: PathBuf,
    /// Write the operator kernel here.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Compare the direct kernel with the closed form.
    #[arg(long)]
    two_path: bool,
    /// Run the membership diagnostic.
    #[arg(long)]
    check_membership: bool,
    /// Symplectic matrix for the diagnostic (default: the one of the phase).
    #[arg(long = "S")]
    s: Option<PathBuf>,
    /// Outer exponent q of the symbol class (inf allowed).
    #[arg(long, default_value_t = f64::INFINITY)]
    q: f64,
    /// Weight exponent s of the symbol class.
    #[arg(long = "s-weight", default_value_t = 0.0)]
    s_weight: f64,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct PropagateArgs {
    /// Hamiltonian config (key = value).
    #[arg(long)]
    ham: PathBuf,
    #[arg(long, default_value_t = 1.0)]
    t: f64,
    /// Strang steps.
    #[arg(long, default_value_t = 256)]
    steps: usize,
    #[arg(long)]
    out: PathBuf,
    /// Initial state (default: the standard Gaussian).
    #[arg(long)]
    input: Option<PathBuf>,
    /// Write the propagator matrix to `out` and its Wigner kernel next to it,
    /// and run the membership diagnostic against the classical flow.
    #[arg(long)]
    kernel: bool,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct ChecksArgs {
    /// One of moyal, symplectic, intertwine, fio, propagator, normequiv, perf, all.
    suite: String,
    #[arg(long)]
    config: Option<PathBuf>,
    /// Also write the CSV summary to this file.
    #[arg(long)]
    out: Option<PathBuf>,
}

enum Fail {
    Check,
    Usage(Error),
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail::Usage(e)
    }
}

type CmdResult = std::result::Result<(), Fail>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    if cli.threads > 0 {
        // only fails if a pool exists already
        let _ = rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build_global();
    }
    let res = match cli.cmd {
        Cmd::Wigner(a) => cmd_wigner(a),
        Cmd::Kernel(a) => cmd_kernel(a),
        Cmd::Fio(a) => cmd_fio(a),
        Cmd::Propagate(a) => cmd_propagate(a),
        Cmd::Checks(a) => cmd_checks(a),
        Cmd::Info => cmd_info(),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(Fail::Check) => ExitCode::from(1),
        Err(Fail::Usage(e)) => {
            eprintln!("wig: {e}");
            ExitCode::from(2)
        }
    }
}

fn config(path: &Option<PathBuf>) -> Result<RunConfig, Error> {
    path.as_ref().map(RunConfig::load).transpose().map(Option::unwrap_or_default)
}

fn is_csv(p: &Path) -> bool {
    p.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"))
}

fn load_signal(p: &Path) -> Result<Signal, Error> {
    if !is_csv(p) {
        return load_wkt(p)?.to_signal();
    }
    let rows = read_csv(p)?;
    let values: Vec<C64> = rows
        .iter()
        .map(|r| match r.as_slice() {
            [re] => Ok(C64::new(*re, 0.0)),
            [re, im] => Ok(C64::new(*re, *im)),
            _ => Err(Error::Format(format!("signal rows need 1 or 2 columns, got {}", r.len()))),
        })
        .collect::<Result<_, _>>()?;
    Signal::new(Grid::new(1, values.len())?, values)
}

fn load_operator(p: &Path) -> Result<OperatorKernel, Error> {
    if !is_csv(p) {
        return load_wkt(p)?.to_operator();
    }
    let rows = read_csv(p)?;
    let n = rows.len();
    let mut m = Vec::with_capacity(n * n);
    for r in &rows {
        if r.len() == n {
            m.extend(r.iter().map(|&v| C64::new(v, 0.0)));
        } else if r.len() == 2 * n {
            m.extend(r.chunks(2).map(|c| C64::new(c[0], c[1])));
        } else {
            return Err(Error::Format(format!("operator CSV with {n} rows needs {n} or {} columns", 2 * n)));
        }
    }
    OperatorKernel::new(Grid::new(1, n)?, m)
}

fn load_phase(p: &Path) -> Result<QuadraticPhase, Error> {
    let rows = read_csv(p)?;
    if rows.len() == 1 && rows[0].len() == 3 {
        return QuadraticPhase::scalar(rows[0][0], rows[0][1], rows[0][2]);
    }
    let d = rows.first().map_or(0, Vec::len);
    if d == 0 || rows.len() != 3 * d || rows.iter().any(|r| r.len() != d) {
        return Err(Error::Format("phase CSV must be one row P,Q,R or three stacked d x d blocks".into()));
    }
    let block = |k: usize| wigkernel::symplectic::RMat::from_fn(d, d, |i, j| rows[k * d + i][j]);
    QuadraticPhase::new(block(0), block(1), block(2))
}

fn load_s(p: &Path) -> Result<SymplecticMat, Error> {
    SymplecticMat::new(read_matrix_csv(p)?)
}

fn report(pass: bool, line: serde_json::Value) -> bool {
    println!("{line}");
    pass
}

fn cmd_wigner(a: WignerArgs) -> CmdResult {
    let f = load_signal(&a.input)?;
    let field = match a.transform {
        Transform::Wigner => {
            let g = a.window.as_deref().map(load_signal).transpose()?.unwrap_or_else(|| f.clone());
            wigner(&f, &g)?
        }
        Transform::Stft => {
            let g = a.window.as_deref().map(load_signal).transpose()?.unwrap_or_else(|| gaussian(f.grid));
            stft(&f, &g)?
        }
    };
    save_wkt(&a.out, &Tensor::from_field(&field))?;
    if let Some(p) = &a.pgm {
        save_field_pgm(p, &field, !a.linear)?;
    }
    println!(
        "{}",
        json!({
            "transform": match a.transform { Transform::Wigner => "wigner", Transform::Stft => "stft" },
            "n": f.grid.n,
            "x_step": field.x_axes[0].step,
            "freq_step": field.xi_axes[0].step,
            "points": field.values.len(),
        })
    );
    Ok(())
}

fn cmd_kernel(a: KernelArgs) -> CmdResult {
    let cfg = config(&a.config)?;
    let tol = cfg.tol_intertwine;
    let t = load_operator(&a.op)?;
    let k = wigner_kernel_capped(&t, a.cap)?;
    if let Some(p) = &a.out {
        save_wkt(p, &Tensor::from_wigner_kernel(&k))?;
    }
    let mut ok = true;
    if let Some(p) = &a.compose {
        let u = load_operator(p)?;
        let ku = wigner_kernel_capped(&u, a.cap)?;
        let lhs = k.compose(&ku)?;
        let d = lhs.rel_diff(&wigner_kernel_capped(&t.compose(&u)?, a.cap)?)?;
        ok &= report(d <= tol, json!({"check": "compose", "value": d, "threshold": tol, "pass": d <= tol}));
    }
    if a.adjoint {
        let d = k.adjoint().rel_diff(&wigner_kernel_capped(&t.adjoint(), a.cap)?)?;
        ok &= report(d <= tol, json!({"check": "adjoint", "value": d, "threshold": tol, "pass": d <= tol}));
    }
    if a.invert {
        let ki = inverse_kernel(&t)?;
        let id = wigner_kernel_capped(&OperatorKernel::identity(t.grid), a.cap)?;
        let d = ki.compose(&k)?.rel_diff(&id)?;
        ok &= report(d <= tol, json!({"check": "invert", "value": d, "threshold": tol, "pass": d <= tol}));
    }
    if let Some(p) = &a.membership {
        let s = load_s(p)?;
        let rep = fio_membership_kernel(&k, &s, f64::INFINITY, 0.0, &cfg.membership())?;
        ok &= report(rep.pass, membership_json(&rep));
    }
    if ok { Ok(()) } else { Err(Fail::Check) }
}

fn membership_json(rep: &wigkernel::fio::MembershipReport) -> serde_json::Value {
    json!({
        "check": "membership",
        "decay_profile": rep.decay_profile,
        "symbol_norm": rep.symbol_norm,
        "exponent": rep.exponent,
        "tube_radius": rep.tube_radius,
        "tube_mass": rep.tube_mass,
        "mass_beyond_4": rep.mass_beyond_4,
        "pass": rep.pass,
    })
}

fn cmd_fio(a: FioArgs) -> CmdResult {
    let cfg = config(&a.config)?;
    let sigma = load_wkt(&a.symbol)?.to_symbol()?;
    let phase = load_phase(&a.phase)?;
    let t = type1_fio(&sigma, &phase)?;
    if let Some(p) = &a.out {
        save_wkt(p, &Tensor::from_operator(&t))?;
    }
    let mut ok = true;
    if a.two_path {
        let rep = two_path_discrepancy(&sigma, &phase)?;
        let tol = cfg.tol_two_path;
        ok &= report(
            rep.raw <= tol,
            json!({"check": "two_path", "value": rep.raw, "galerkin": rep.galerkin, "action": rep.action, "threshold": tol, "pass": rep.raw <= tol}),
        );
    }
    if a.check_membership {
        let s = match &a.s {
            Some(p) => load_s(p)?,
            None => phase.symplectic()?,
        };
        let k = if phase.lattice_compatible() {
            wigner_kernel_type1(&sigma, &phase)?
        } else {
            wigner_kernel_capped(&t, FIO_KERNEL_CAP)?
        };
        let rep = fio_membership_kernel(&k, &s, a.q, a.s_weight, &cfg.membership())?;
        ok &= report(rep.pass, membership_json(&rep));
    }
    if ok { Ok(()) } else { Err(Fail::Check) }
}

fn cmd_propagate(a: PropagateArgs) -> CmdResult {
    let cfg = config(&a.config)?;
    let ham = HamConfig::load(&a.ham)?;
    if a.steps == 0 {
        return Err(Fail::Usage(Error::Config("--steps must be positive".into())));
    }
    if a.kernel {
        let (u, k, st) = propagator_kernel(&ham.hamiltonian, ham.grid, a.t, a.steps)?;
        save_wkt(&a.out, &Tensor::from_operator(&u))?;
        save_wkt(a.out.with_extension("kernel.wkt"), &Tensor::from_wigner_kernel(&k))?;
        let rep = fio_membership_kernel(&k, &st, f64::INFINITY, 0.0, &cfg.membership())?;
        let mut line = membership_json(&rep);
        line["t"] = json!(a.t);
        line["flow"] = json!(st.matrix().iter().collect::<Vec<_>>());
        line["op_norm"] = json!(u.op_norm());
        return if report(rep.pass, line) { Ok(()) } else { Err(Fail::Check) };
    }
    let u0 = match &a.input {
        Some(p) => load_signal(p)?,
        None => gaussian(ham.grid),
    };
    ham.grid.ensure_same(&u0.grid)?;
    let u = split_step(&ham.hamiltonian, a.t, a.steps, &u0)?;
    save_wkt(&a.out, &Tensor::from_signal(&u))?;
    println!("{}", json!({"t": a.t, "steps": a.steps, "norm_in": u0.norm(), "norm_out": u.norm()}));
    Ok(())
}

fn cmd_checks(a: ChecksArgs) -> CmdResult {
    let cfg = config(&a.config)?;
    let names: Vec<&str> = if a.suite == "all" { SUITES.to_vec() } else { vec![a.suite.as_str()] };
    let mut rows = Vec::new();
    for name in names {
        rows.extend(run_suite(name, &cfg)?);
    }
    write_rows(&mut std::io::stdout().lock(), &rows)?;
    if let Some(p) = &a.out {
        write_rows(&mut std::fs::File::create(p).map_err(Error::from)?, &rows)?;
    }
    if rows.iter().all(|r| r.pass) { Ok(()) } else { Err(Fail::Check) }
}

fn cmd_info() -> CmdResult {
    let cap = |n: usize| (n as f64).powi(4) * 16.0 / (1u64 << 20) as f64;
    println!("wig {}", env!("CARGO_PKG_VERSION"));
    println!("threads: {}", rayon::current_num_threads());
    println!("omega (default): {OMEGA}");
    println!("suites: {}", SUITES.join(", "));
    println!("kernel cap: n <= {DEFAULT_KERNEL_CAP} (FIO/propagator diagnostics n <= {FIO_KERNEL_CAP})");
    for n in [16, 32, 48, 64] {
        println!("n = {n:>2}: kernel {:>6.1} MiB, streamed peak ~{:>6.1} MiB", cap(n), 2.0 * cap(n));
    }
    Ok(())
}
