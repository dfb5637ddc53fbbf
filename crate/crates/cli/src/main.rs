//! `fht`: generate, factorize, verify and scan fermionic two-body Hamiltonians.
//!
//! Exit codes: 0 ok, 2 usage, 3 I/O or file format, 4 symmetry validation,
//! 5 decomposition, 6 verification failure.

mod report;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use fht::assemble::{relative_error, truncation_scan, DEFAULT_SPECTRUM_K};
use fht::factorize::Parity;
use fht::fock::{self, build_from_factored, build_from_tensor};
use fht::generators::{random_valid, real_basis_instance, ring_planewave, RingModelParams};
use fht::io::{factor_file, TensorFile};
use fht::tensor::{validate_symmetries, HamiltonianInstance};
use fht::trotter::{self, trotter_scan_against};
use fht::{factorize_hamiltonian, reconstruct_tensor, Error, FactorizationOptions};
use serde_json::json;

use report::{emit, finite_or_null, weight_summary, SymmetryRecord};

const EXIT_USAGE: u8 = 2;
const EXIT_IO: u8 = 3;
const EXIT_SYMMETRY: u8 = 4;
const EXIT_DECOMPOSITION: u8 = 5;
const EXIT_VERIFY: u8 = 6;

#[derive(Parser)]
#[command(name = "fht", version, about = "Pairwise factorization of fermionic two-body Hamiltonians")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a test Hamiltonian to a tensor file.
    Generate(GenerateArgs),
    /// Factorize a tensor file into a factor file.
    Factorize(FactorizeArgs),
    /// Check a factor file against its tensor file.
    Verify(VerifyArgs),
    /// Reconstruction error as a function of the weight threshold.
    TruncationScan(TruncationArgs),
    /// Single-step product-formula error over a list of time steps.
    TrotterScan(TrotterArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Model {
    Random,
    RealBasis,
    Ring,
}

#[derive(Args)]
struct GenerateArgs {
    model: Model,
    #[arg(long)]
    modes: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Number of rank-one terms (real-basis).
    #[arg(long, default_value_t = 3)]
    rank: usize,
    /// Ring circumference (ring).
    #[arg(long, default_value_t = 10.0)]
    length: f64,
    /// Potential strength (ring).
    #[arg(long, default_value_t = 1.0)]
    v0: f64,
    /// Potential width (ring).
    #[arg(long, default_value_t = 1.0)]
    sigma: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct LoadArgs {
    /// Skip the index-symmetry check on load.
    #[arg(long)]
    no_validate: bool,
}

#[derive(Args)]
struct FactorizeArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Drop slices with |weight| at or below this value.
    #[arg(long, default_value_t = 0.0)]
    cutoff: f64,
    #[arg(long, default_value_t = 1e-9)]
    degeneracy_tol: f64,
    #[arg(long, default_value_t = 1e-9)]
    parity_tol: f64,
    #[command(flatten)]
    load: LoadArgs,
}

#[derive(Args)]
struct VerifyArgs {
    tensor: PathBuf,
    factors: PathBuf,
    /// Skip the Fock-space checks above this many modes.
    #[arg(long, default_value_t = 10)]
    max_modes_fock: usize,
    /// Number of low eigenvalues compared.
    #[arg(long, default_value_t = DEFAULT_SPECTRUM_K)]
    k: usize,
    #[arg(long, default_value_t = 1e-9)]
    tol_recon: f64,
    /// Applied to the Fock discrepancy divided by max(1, |H|max).
    #[arg(long, default_value_t = 1e-9)]
    tol_fock: f64,
    #[arg(long, default_value_t = 1e-9)]
    tol_spectrum: f64,
    #[command(flatten)]
    load: LoadArgs,
}

#[derive(Args)]
struct TruncationArgs {
    #[arg(long = "in")]
    input: PathBuf,
    /// Ascending, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    thresholds: Vec<f64>,
    /// Add the low-spectrum error column.
    #[arg(long)]
    spectrum: bool,
    #[arg(long, default_value_t = DEFAULT_SPECTRUM_K)]
    k: usize,
    #[command(flatten)]
    load: LoadArgs,
}

#[derive(Args)]
struct TrotterArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long, value_delimiter = ',', default_value = "0.2,0.1,0.05,0.025")]
    dts: Vec<f64>,
    #[command(flatten)]
    load: LoadArgs,
}

struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::Io(_) | Error::Format(_) | Error::Json(_) => EXIT_IO,
            Error::Symmetry { .. } | Error::Realness { .. } => EXIT_SYMMETRY,
            Error::Decomposition(_) => EXIT_DECOMPOSITION,
            Error::Shape(_) | Error::InvalidParameter(_) | Error::SizeGuard { .. } => EXIT_USAGE,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

/// Prefixes I/O and format errors with the file they came from.
fn at_path(path: &Path) -> impl Fn(Error) -> Failure + '_ {
    move |e| {
        let mut f = Failure::from(e);
        f.message = format!("{}: {}", path.display(), f.message);
        f
    }
}

fn usage(message: impl Into<String>) -> Failure {
    Failure {
        code: EXIT_USAGE,
        message: message.into(),
    }
}

type CmdResult = std::result::Result<(), Failure>;

/// Loads a tensor file. A validated tensor is re-symmetrized so that
/// round-off level defects do not reach the factorization.
fn load_instance(path: &Path, load: &LoadArgs) -> Result<HamiltonianInstance, Failure> {
    let file = TensorFile::load(path, !load.no_validate).map_err(at_path(path))?;
    let mut inst = file.instance(path.display().to_string())?;
    if !load.no_validate {
        inst.two_body = inst.two_body.symmetrized();
    }
    Ok(inst)
}

fn generate(args: &GenerateArgs) -> CmdResult {
    let (file, label) = match args.model {
        Model::Random => (TensorFile::interaction_only(random_valid(args.modes, args.seed)), "random"),
        Model::RealBasis => (
            TensorFile::interaction_only(real_basis_instance(args.modes, args.rank, args.seed)),
            "real-basis",
        ),
        Model::Ring => {
            let params = RingModelParams {
                n_modes: args.modes,
                ring_length: args.length,
                potential_strength: args.v0,
                potential_width: args.sigma,
            };
            (TensorFile::from_instance(&ring_planewave(&params)?, true), "ring")
        }
    };
    let bytes = file.to_bytes()?;
    std::fs::write(&args.out, &bytes)
        .map_err(|e| at_path(&args.out)(Error::from(e)))?;
    emit(&json!({
        "command": "generate",
        "model": label,
        "n_modes": file.n_modes(),
        "out": args.out.display().to_string(),
        "bytes": bytes.len(),
        "symmetry": SymmetryRecord::from(&validate_symmetries(&file.two_body)),
    }));
    Ok(())
}

fn factorize(args: &FactorizeArgs) -> CmdResult {
    let opts = FactorizationOptions {
        degeneracy_tol: args.degeneracy_tol,
        parity_tol: args.parity_tol,
        weight_cutoff: args.cutoff,
    };
    opts.validate()?;
    let inst = load_instance(&args.input, &args.load)?;
    let fh = factorize_hamiltonian(&inst, &opts)?;
    factor_file::save(&fh, &args.out).map_err(at_path(&args.out))?;
    emit(&json!({
        "command": "factorize",
        "n_modes": fh.n_modes,
        "slices": fh.slices.len(),
        "n_symmetric": fh.count(Parity::Symmetric),
        "n_antisymmetric": fh.count(Parity::Antisymmetric),
        "weights": weight_summary(&fh.weights()),
        "recon_error": relative_error(&inst.two_body, &reconstruct_tensor(&fh)),
    }));
    Ok(())
}

fn verify(args: &VerifyArgs) -> CmdResult {
    let inst = load_instance(&args.tensor, &args.load)?;
    let fh = factor_file::load(&args.factors).map_err(at_path(&args.factors))?;
    if fh.n_modes != inst.n_modes() {
        return Err(usage(format!(
            "tensor has {} modes, factors have {}",
            inst.n_modes(),
            fh.n_modes
        )));
    }
    let mut checks = Vec::new();
    let recon = relative_error(&inst.two_body, &reconstruct_tensor(&fh));
    checks.push(("reconstruction", recon, args.tol_recon));
    let fock_checked = inst.n_modes() <= args.max_modes_fock.min(fock::MAX_MODES);
    let mut fock_abs = None;
    if fock_checked {
        let exact = build_from_tensor(&inst)?;
        let factored = build_from_factored(&fh)?;
        let diff = exact.max_abs_diff(&factored);
        fock_abs = Some(diff);
        checks.push(("fock", diff / exact.max_abs().max(1.0), args.tol_fock));
        let k = args.k.min(exact.dim());
        checks.push(("spectrum", fock::compare_spectra(&exact, &factored, k)?, args.tol_spectrum));
    }
    let failed: Vec<&str> = checks
        .iter()
        .filter(|(_, value, tol)| value.is_nan() || value > tol)
        .map(|(name, _, _)| *name)
        .collect();
    emit(&json!({
        "command": "verify",
        "n_modes": inst.n_modes(),
        "checks": checks
            .iter()
            .map(|(name, value, tol)| json!({
                "name": name,
                "value": finite_or_null(*value),
                "threshold": tol,
                "pass": value <= tol,
            }))
            .collect::<Vec<_>>(),
        "fock_max_abs_diff": fock_abs,
        "fock_skipped": !fock_checked,
        "failed": failed,
        "ok": failed.is_empty(),
    }));
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure {
            code: EXIT_VERIFY,
            message: format!("verification failed: {}", failed.join(", ")),
        })
    }
}

fn truncation(args: &TruncationArgs) -> CmdResult {
    let inst = load_instance(&args.input, &args.load)?;
    let spectrum_k = args.spectrum.then_some(args.k);
    let report = truncation_scan(&inst, &args.thresholds, &FactorizationOptions::default(), spectrum_k)?;
    for (i, t) in report.thresholds.iter().enumerate() {
        let mut row = json!({
            "threshold": t,
            "kept": report.kept_slices[i],
            "recon_error": report.recon_error_frobenius[i],
            "dropped_weight_fraction": report.dropped_weight_fraction[i],
        });
        if let Some(spec) = &report.spectrum_error {
            row["spectrum_error"] = json!(spec[i]);
        }
        emit(&row);
    }
    Ok(())
}

fn trotter_cmd(args: &TrotterArgs) -> CmdResult {
    if args.dts.is_empty() {
        return Err(usage("no time steps given"));
    }
    let inst = load_instance(&args.input, &args.load)?;
    if inst.n_modes() > trotter::MAX_MODES {
        return Err(usage(format!(
            "{} modes exceed the Trotter scan limit of {}",
            inst.n_modes(),
            trotter::MAX_MODES
        )));
    }
    let fh = factorize_hamiltonian(&inst, &FactorizationOptions::default())?;
    let exact = build_from_tensor(&inst)?;
    let res = trotter_scan_against(&exact, &fh, &args.dts)?;
    for (dt, err) in res.dts.iter().zip(&res.errors) {
        emit(&json!({ "dt": dt, "error": err }));
    }
    let slope = if res.fitted_slope.is_nan() {
        json!("nan")
    } else {
        json!(res.fitted_slope)
    };
    emit(&json!({
        "command": "trotter-scan",
        "n_modes": inst.n_modes(),
        "dts": res.dts,
        "errors": res.errors,
        "fitted_slope": slope,
    }));
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { 0 });
        }
    };
    fht::parallel::init_from_env();
    let result = match &cli.command {
        Command::Generate(a) => generate(a),
        Command::Factorize(a) => factorize(a),
        Command::Verify(a) => verify(a),
        Command::TruncationScan(a) => truncation(a),
        Command::TrotterScan(a) => trotter_cmd(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("fht: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
