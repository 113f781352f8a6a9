//! `qtransport` command-line tool.
//!
//! Exit codes: 0 ok, 1 I/O, 2 invalid input, 3 mismatch, 4 support
//! violation, 5 not invariant, 6 no convergence, 7 dimension hypothesis
//! violated.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use qtransport::acceptance::{run_all_with, DEFAULT_SEED};
use qtransport::evolution::{
    default_t_max, limit_state, limit_state_numeric, occupations, Propagator, CONVERGENCE_TOL,
};
use qtransport::invariants::{
    bright_population, decompose_invariant, detailed_balance_check, extremal_invariant_from_vector,
    build_invariant_from_tau, numeric_steady_state, Structure,
};
use qtransport::io::{
    operator_dump, read_model, read_state, read_text, read_vector, spectrum_csv, subspace_report_to_json, write_state,
    write_text, NumericCheck,
};
use qtransport::lindblad::{effective_hamiltonian, kraus_operators, DensityMatrix, Generator};
use qtransport::model::ModelSpec;
use qtransport::numerics::{subspace_equal, trace_norm};
use qtransport::presets::by_name;
use qtransport::spectrum::invariant_spectrum_from_tau;
use qtransport::transport::TransportOps;
use qtransport::Error;

const SUBSPACE_ANGLE_TOL: f64 = 1e-7;
const LIMIT_AGREEMENT_TOL: f64 = 1e-8;
const INVARIANCE_TOL: f64 = 1e-10;

#[derive(Parser)]
#[command(name = "qtransport", version, about = "Invariant states and long-time limits of chain transport semigroups")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate a model or show its structure.
    #[command(subcommand)]
    Model(ModelCommand),
    /// Write the bases of W, V, V_1 and R_L.
    Subspaces(SubspacesArgs),
    /// Build, check or decompose invariant states.
    #[command(subcommand)]
    Invariant(InvariantCommand),
    /// Closed-form spectrum of the invariant state built from tau.
    Spectrum(SpectrumArgs),
    /// Propagate a state and write its trajectory as CSV.
    Evolve(EvolveArgs),
    /// Write the model operators as JSON.
    Dump(DumpArgs),
    /// Run the acceptance suite.
    Verify(VerifyArgs),
}

#[derive(Args, Clone)]
struct ModelArg {
    /// Model file.
    #[arg(value_name = "MODEL", required_unless_present = "preset", conflicts_with = "preset")]
    model: Option<PathBuf>,
    #[command(flatten)]
    preset: PresetArgs,
}

#[derive(Args, Clone)]
struct ModelOpt {
    /// Model file.
    #[arg(long, value_name = "FILE", required_unless_present = "preset", conflicts_with = "preset")]
    model: Option<PathBuf>,
    #[command(flatten)]
    preset: PresetArgs,
}

#[derive(Args, Clone)]
struct PresetArgs {
    /// Named preset: m1, n3, kv, avk.
    #[arg(long)]
    preset: Option<String>,
    #[arg(long)]
    n1: Option<usize>,
    #[arg(long)]
    n2: Option<usize>,
}

impl PresetArgs {
    fn load(&self, file: Option<&Path>) -> Result<ModelSpec, Error> {
        match (file, &self.preset) {
            (Some(path), _) => read_model(path),
            (None, Some(name)) => by_name(name, self.n1, self.n2),
            (None, None) => Err(Error::InvalidArgument("a model file or --preset is required".into())),
        }
    }
}

impl ModelArg {
    fn load(&self) -> Result<ModelSpec, Error> {
        self.preset.load(self.model.as_deref())
    }
}

impl ModelOpt {
    fn load(&self) -> Result<ModelSpec, Error> {
        self.preset.load(self.model.as_deref())
    }
}

#[derive(Subcommand)]
enum ModelCommand {
    /// Print derived constants.
    Validate(ModelArg),
    /// Print derived constants, the dimension table and DH status.
    Info(ModelArg),
}

#[derive(Args)]
struct SubspacesArgs {
    #[command(flatten)]
    model: ModelArg,
    /// Compare R_L with the numeric steady-state support.
    #[arg(long)]
    check_numeric: bool,
    /// Write the bases to this file.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum InvariantCommand {
    /// Invariant state transported from a state tau on V_1 ⊖ W.
    Build {
        #[command(flatten)]
        model: ModelOpt,
        #[arg(long)]
        tau: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Extremal invariant state generated by a vector u in V_1 ⊖ W.
    Extremal {
        #[command(flatten)]
        model: ModelOpt,
        #[arg(long)]
        u: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Generator residual, detailed balance and darkness of a state.
    Check {
        #[command(flatten)]
        model: ModelOpt,
        state: PathBuf,
        #[arg(long, default_value_t = INVARIANCE_TOL)]
        tol: f64,
    },
    /// Split an invariant state into its transported, W and sink parts.
    Decompose {
        #[command(flatten)]
        model: ModelOpt,
        state: PathBuf,
        #[arg(long)]
        tau_out: Option<PathBuf>,
        #[arg(long)]
        eta_out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct SpectrumArgs {
    #[command(flatten)]
    model: ModelOpt,
    #[arg(long)]
    tau: PathBuf,
    /// Write `value,level,tau_index` rows here.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum LimitMode {
    Analytic,
    Numeric,
    Both,
}

#[derive(Args)]
struct EvolveArgs {
    #[command(flatten)]
    model: ModelArg,
    #[arg(long)]
    state: PathBuf,
    #[arg(long)]
    tmax: f64,
    /// Number of time steps; the CSV has grid + 1 rows.
    #[arg(long, default_value_t = 100)]
    grid: usize,
    #[arg(long, value_enum)]
    limit: Option<LimitMode>,
    #[arg(long)]
    out: PathBuf,
    /// Also write the limit state (analytic if available).
    #[arg(long)]
    limit_out: Option<PathBuf>,
}

#[derive(Args)]
struct DumpArgs {
    #[command(flatten)]
    model: ModelArg,
    #[arg(long)]
    out: PathBuf,
    /// Include the Liouvillian and its dual.
    #[arg(long)]
    liouvillian: bool,
}

#[derive(Args)]
struct VerifyArgs {
    /// `default`, or a directory of extra model files for the R_L check.
    #[arg(long, default_value = "default")]
    models: String,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
}

/// Failure with a fixed exit code.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure { code: exit_code(&e), message: e.to_string() }
    }
}

fn mismatch(message: impl Into<String>) -> Failure {
    Failure { code: 3, message: message.into() }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Io(_) => 1,
        Error::SupportViolation(_) | Error::NotInSubalgebra(_) => 4,
        Error::NotInvariant(_) => 5,
        Error::NoConvergence(_) => 6,
        Error::DHViolated(_) => 7,
        Error::InvalidArgument(_)
        | Error::Format(_)
        | Error::ShapeMismatch { .. }
        | Error::IndexOutOfRange(_)
        | Error::NotAState(_)
        | Error::NotHermitian(_)
        | Error::AmbientMismatch(..)
        | Error::ZeroVector
        | Error::NormViolation { .. } => 2,
        e if e.is_validation() => 2,
        _ => 3,
    }
}

type CmdResult = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Model(cmd) => cmd_model(cmd),
        Command::Subspaces(args) => cmd_subspaces(args),
        Command::Invariant(cmd) => cmd_invariant(cmd),
        Command::Spectrum(args) => cmd_spectrum(args),
        Command::Evolve(args) => cmd_evolve(args),
        Command::Dump(args) => cmd_dump(args),
        Command::Verify(args) => cmd_verify(args),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn print_constants(spec: &ModelSpec) {
    println!("N = {}", spec.n);
    println!("d = {}", spec.d);
    for (k, w) in spec.bohr.iter().enumerate() {
        println!("omega_{k} = {w}");
    }
    for (k, b) in spec.beta.iter().enumerate() {
        println!("beta_{k} = {b}");
    }
}

fn cmd_model(cmd: ModelCommand) -> CmdResult {
    match cmd {
        ModelCommand::Validate(m) => {
            let spec = m.load()?;
            print_constants(&spec);
        }
        ModelCommand::Info(m) => {
            let spec = m.load()?;
            print_constants(&spec);
            println!();
            println!("level  dim  offset  energy");
            for k in 0..spec.levels() {
                println!("{k:>5}  {:>3}  {:>6}  {}", spec.dims[k], spec.offsets[k], spec.energies[k]);
            }
            let dh = if spec.satisfies_dh() { "satisfied" } else { "violated" };
            println!("dimension hypothesis: {dh}");
        }
    }
    Ok(())
}

fn cmd_subspaces(args: SubspacesArgs) -> CmdResult {
    let spec = args.model.load()?;
    let s = Structure::new(&spec);
    let v1 = &s.v_levels[0];
    println!("dim W = {}", s.w.dim());
    println!("dim V = {}", s.v.dim());
    println!("dim V_1 = {}", v1.dim());
    println!("dim R_L = {}", s.fast_recurrent.dim());

    let check = if args.check_numeric {
        let numeric = numeric_steady_state(&spec)?.support;
        let (passed, max_angle) = subspace_equal(&s.fast_recurrent, &numeric, SUBSPACE_ANGLE_TOL)?;
        println!("numeric dim R_L = {}", numeric.dim());
        println!("max principal angle = {max_angle:.3e}");
        Some(NumericCheck { numeric_dim: numeric.dim(), max_angle, tolerance: SUBSPACE_ANGLE_TOL, passed })
    } else {
        None
    };
    let failed = check.as_ref().is_some_and(|c| !c.passed);
    if let Some(path) = &args.out {
        let named = [("W", &s.w), ("V", &s.v), ("V_1", v1), ("R_L", &s.fast_recurrent)];
        write_text(path, &subspace_report_to_json(&spec, &named, check))?;
    }
    if failed {
        return Err(mismatch("analytic and numeric R_L differ"));
    }
    Ok(())
}

fn print_eigenvalues(rho: &DensityMatrix) {
    let mut values = rho.eigenvalues();
    values.reverse();
    let shown: Vec<String> = values.iter().filter(|x| x.abs() > 1e-12).map(|x| format!("{x:.12}")).collect();
    println!("nonzero eigenvalues: {}", shown.join(", "));
}

/// Rounds to 12 decimals and drops trailing zeros.
fn short(x: f64) -> String {
    let s = format!("{:.12}", x);
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" { "0".into() } else { s.into() }
}

fn cmd_invariant(cmd: InvariantCommand) -> CmdResult {
    match cmd {
        InvariantCommand::Build { model, tau, out } => {
            let spec = model.load()?;
            let tau = read_state(&tau)?;
            let rho = build_invariant_from_tau(&spec, &tau)?;
            write_state(&out, &rho)?;
            print_eigenvalues(&rho);
        }
        InvariantCommand::Extremal { model, u, out } => {
            let spec = model.load()?;
            let u = read_vector(&u)?;
            let rho = extremal_invariant_from_vector(&spec, &u)?;
            write_state(&out, &rho)?;
            print_eigenvalues(&rho);
        }
        InvariantCommand::Check { model, state, tol } => {
            let spec = model.load()?;
            let rho = read_state(&state)?;
            let residual = Generator::new(&spec).residual(rho.matrix())?;
            println!("generator residual = {residual:.3e}");
            for (k, r) in detailed_balance_check(&spec, rho.matrix()).iter().enumerate() {
                println!("detailed balance residual k={} = {r:.3e}", k + 1);
            }
            let bright = bright_population(&spec, rho.matrix());
            println!("bright population = {bright:.3e}");
            println!("dark: {}", if bright <= 1e-12 { "yes" } else { "no" });
            if residual > tol {
                println!("not invariant");
                return Err(Error::NotInvariant(residual).into());
            }
            println!("invariant");
        }
        InvariantCommand::Decompose { model, state, tau_out, eta_out } => {
            let spec = model.load()?;
            let rho = read_state(&state)?;
            let dec = decompose_invariant(&spec, &rho)?;
            println!("(alpha, beta, lambda) = ({}, {}, {})", short(dec.alpha), short(dec.beta), short(dec.lambda));
            println!("reconstruction residual = {:.3e}", dec.residual);
            for (path, part, name) in [(tau_out, &dec.tau, "tau"), (eta_out, &dec.eta, "eta")] {
                let Some(path) = path else { continue };
                match part {
                    Some(p) => write_state(&path, p)?,
                    None => println!("{name}: no component, {} not written", path.display()),
                }
            }
        }
    }
    Ok(())
}

fn cmd_spectrum(args: SpectrumArgs) -> CmdResult {
    let spec = args.model.load()?;
    let tau = read_state(&args.tau)?;
    let pairs = invariant_spectrum_from_tau(&spec, &tau)?;
    let csv = spectrum_csv(&pairs);
    match &args.out {
        Some(path) => write_text(path, &csv)?,
        None => print!("{csv}"),
    }
    Ok(())
}

fn cmd_evolve(args: EvolveArgs) -> CmdResult {
    let spec = args.model.load()?;
    let rho0 = read_state(&args.state)?;
    if !(args.tmax > 0.0 && args.tmax.is_finite()) {
        return Err(Error::InvalidArgument(format!("--tmax must be positive, got {}", args.tmax)).into());
    }
    if args.grid == 0 {
        return Err(Error::InvalidArgument("--grid must be at least 1".into()).into());
    }
    let mode = args.limit;
    let analytic = match mode {
        Some(LimitMode::Analytic | LimitMode::Both) => {
            let s = Structure::new(&spec);
            Some(limit_state(&spec, &rho0, &s.v1_minus_w)?)
        }
        _ => None,
    };
    let numeric = match mode {
        Some(LimitMode::Numeric | LimitMode::Both) => {
            let (rho, t) = limit_state_numeric(&spec, &rho0, default_t_max(&spec), CONVERGENCE_TOL)?;
            eprintln!("numeric limit converged by t = {t}");
            Some(rho)
        }
        _ => None,
    };
    let limit = analytic.as_ref().or(numeric.as_ref());
    let trace = Propagator::new(&spec).trajectory(&rho0, args.tmax, args.grid, limit)?;
    let mut csv = trace.to_csv();

    let mut agreement = None;
    if let (Some(a), Some(n)) = (&analytic, &numeric) {
        let dist = trace_norm(&(a.matrix() - n.matrix()));
        csv.push_str(&format!("# analytic vs numeric limit, trace norm = {dist:.3e} (tol {LIMIT_AGREEMENT_TOL:.0e})\n"));
        agreement = Some(dist);
    }
    write_text(&args.out, &csv)?;
    if let (Some(path), Some(lim)) = (&args.limit_out, limit) {
        write_state(path, lim)?;
    }

    let last = trace.rows.last().expect("at least one row");
    let occ: Vec<String> = last.occupations.iter().map(|x| format!("{x:.12}")).collect();
    println!("final occupations at t = {}: {}", last.t, occ.join(", "));
    if let Some(lim) = limit {
        let occ: Vec<String> = occupations(&spec, lim.matrix()).iter().map(|x| format!("{x:.12}")).collect();
        println!("limit occupations: {}", occ.join(", "));
    }
    if let Some(dist) = agreement {
        println!("analytic vs numeric limit: {dist:.3e}");
        if dist > LIMIT_AGREEMENT_TOL {
            return Err(mismatch(format!("analytic and numeric limits differ by {dist:.3e}")));
        }
    }
    Ok(())
}

fn cmd_dump(args: DumpArgs) -> CmdResult {
    let spec = args.model.load()?;
    let ops = TransportOps::new(&spec);
    let gen = Generator::new(&spec);
    let mut named = Vec::new();
    for k in 0..=spec.n {
        named.push((format!("Z_{k}"), ops.zs[k].clone()));
    }
    named.push(("Z".to_string(), ops.z.clone()));
    for (name, j) in kraus_operators(&spec) {
        named.push((format!("J_{name}"), j));
    }
    named.push(("G".to_string(), gen.g.clone()));
    named.push(("H_eff".to_string(), effective_hamiltonian(&spec)));
    if args.liouvillian {
        named.push(("L".to_string(), gen.liouvillian().matrix));
        named.push(("L_dual".to_string(), gen.dual_liouvillian().matrix));
    }
    write_text(&args.out, &operator_dump(&spec, &named))?;
    println!("wrote {} operators to {}", named.len(), args.out.display());
    Ok(())
}

fn load_model_dir(dir: &Path) -> Result<Vec<(String, ModelSpec)>, Error> {
    let entries = std::fs::read_dir(dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))?;
    let mut paths: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    paths.sort();
    paths
        .iter()
        .map(|p| {
            let name = p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
            read_text(p).and_then(|t| qtransport::io::model_from_json(&t)).map(|m| (name, m))
        })
        .collect()
}

fn cmd_verify(args: VerifyArgs) -> CmdResult {
    let extra = if args.models == "default" { Vec::new() } else { load_model_dir(Path::new(&args.models))? };
    let report = run_all_with(args.seed, &extra);
    print!("{}", report.render());
    if let Some(f) = report.first_failure() {
        return Err(mismatch(format!("criterion {} ({}) failed", f.id, f.name)));
    }
    Ok(())
}
