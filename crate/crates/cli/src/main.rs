mod inputs;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use emeter_core::interferometer::{
    default_phase_grid, fit_fringe, run_exact, run_sampled, FringeFit,
};
use emeter_core::numfmt::sig17;
use emeter_core::protocols::mutual_predictability::{
    mp_unitary, mutual_predictability_protocol, Pairing,
};
use emeter_core::protocols::negativity::{
    default_theta, joint_negativity_unitary, negativity_protocol_cna_at,
    negativity_protocol_pure_at,
};
use emeter_core::protocols::witness::{
    witness_small_theta_protocol, witness_swap_protocol, DEFAULT_SMALL_THETA,
};
use emeter_core::protocols::{
    convex_roof_bound_protocol, linear_entropy_protocol, max_mubs, mub_set, oracle_unitary, Mode,
    ProtocolReport, RunSettings,
};
use emeter_core::qmat::{
    eigh, partial_trace, BipartiteShape, DensityMatrix, Subsystem, UnitaryOperator,
};
use emeter_core::states::{PreparedState, PURITY_TOL};
use emeter_core::{rng, selftest, Error};

/// Smallest shot count accepted in sampled mode.
const MIN_SHOTS: u64 = 100;

#[derive(Debug)]
pub enum CliError {
    Core(Error),
    Usage(String),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(e) if e.is_precondition_refusal() => 3,
            _ => 2,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Core(e) => e.fmt(f),
            CliError::Usage(m) => f.write_str(m),
        }
    }
}

#[derive(Parser)]
#[command(
    name = "emeter",
    version,
    about = "Interferometric entanglement estimation and detection"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Emit the interference pattern for one controlled unitary
    Fringe(FringeArgs),
    /// Run an estimation or detection protocol and print its report
    Protocol {
        #[command(subcommand)]
        which: ProtocolCommand,
    },
    /// Run the built-in check suite; exits 1 on any failure
    Selftest,
    /// Work with state specifications
    State {
        #[command(subcommand)]
        which: StateCommand,
    },
}

#[derive(Subcommand)]
enum StateCommand {
    /// Check a state spec against the density-matrix invariants
    Validate {
        #[arg(long)]
        state: String,
    },
}

#[derive(Subcommand)]
enum ProtocolCommand {
    LinearEntropy(CommonArgs),
    Negativity {
        #[command(flatten)]
        common: CommonArgs,
        /// Local rotation angle (default pi/d)
        #[arg(long)]
        theta: Option<f64>,
    },
    MutualPredictability {
        #[command(flatten)]
        common: CommonArgs,
        /// Number of bases (default: as many as are available)
        #[arg(long)]
        m: Option<usize>,
        #[arg(long, value_enum, default_value_t = PairingArg::Same)]
        pairing: PairingArg,
    },
    WitnessSwap(CommonArgs),
    WitnessSmallTheta {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, default_value_t = DEFAULT_SMALL_THETA)]
        theta: f64,
        /// `swap` or a JSON {"re": [[...]], "im": [[...]]} literal or file
        #[arg(long, default_value = "swap")]
        witness: String,
    },
}

#[derive(Args, Clone)]
struct CommonArgs {
    /// JSON spec, file path, or one of bell, phi_plus, singlet, product
    #[arg(long)]
    state: String,
    #[arg(long, value_enum, default_value_t = ModeArg::Exact)]
    mode: ModeArg,
    #[arg(long, default_value_t = 100_000)]
    shots: u64,
    #[arg(long, default_value_t = 16)]
    phases: usize,
    #[arg(long, env = "EM_SEED", default_value_t = 42)]
    seed: u64,
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Args)]
struct FringeArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long, value_enum, default_value_t = UnitaryArg::Identity)]
    unitary: UnitaryArg,
    /// Rotation angle for `--unitary negativity` (default pi/d)
    #[arg(long)]
    theta: Option<f64>,
    /// Basis index for `--unitary mp`
    #[arg(long, default_value_t = 0)]
    basis: usize,
    #[arg(long, value_enum, default_value_t = PairingArg::Same)]
    pairing: PairingArg,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Exact,
    Sampled,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum PairingArg {
    Same,
    Conjugate,
}

impl From<PairingArg> for Pairing {
    fn from(p: PairingArg) -> Self {
        match p {
            PairingArg::Same => Pairing::Same,
            PairingArg::Conjugate => Pairing::Conjugate,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum UnitaryArg {
    Identity,
    Oracle,
    Negativity,
    Mp,
    Swap,
}

impl CommonArgs {
    fn settings(&self) -> Result<RunSettings, CliError> {
        if self.phases < 3 {
            return Err(CliError::Usage(format!(
                "phases must be >= 3 (got {})",
                self.phases
            )));
        }
        let settings = match self.mode {
            ModeArg::Exact => RunSettings::exact(),
            ModeArg::Sampled => {
                if self.shots < MIN_SHOTS {
                    return Err(CliError::Usage(format!(
                        "invalid run config: sampled mode requires shots >= {MIN_SHOTS} (got {})",
                        self.shots
                    )));
                }
                RunSettings::sampled(self.shots, self.seed)
            }
        };
        Ok(settings.with_phase_points(self.phases))
    }
}

fn square_d(shape: BipartiteShape, what: &'static str) -> Result<usize, CliError> {
    shape.local_dim().ok_or_else(|| {
        Error::mismatch(what, "dA = dB", format!("{}x{}", shape.da(), shape.db())).into()
    })
}

fn run_protocol(which: ProtocolCommand) -> Result<(ProtocolReport, CommonArgs), CliError> {
    let (report, spec, common) = match which {
        ProtocolCommand::LinearEntropy(common) => {
            let (spec, st) = inputs::resolve_state(&common.state)?;
            let settings = common.settings()?;
            let r = if st.rho.is_pure(PURITY_TOL) {
                linear_entropy_protocol(&st.rho, st.shape, &settings)?
            } else {
                convex_roof_bound_protocol(&st.rho, st.shape, &settings)?
            };
            (r, spec, common)
        }
        ProtocolCommand::Negativity { common, theta } => {
            let (spec, st) = inputs::resolve_state(&common.state)?;
            let settings = common.settings()?;
            let d = square_d(st.shape, "negativity protocol")?;
            let theta = theta.unwrap_or_else(|| default_theta(d));
            let r = if st.rho.is_pure(PURITY_TOL) {
                negativity_protocol_pure_at(&st.rho, st.shape, theta, &settings)?
            } else {
                negativity_protocol_cna_at(&st.rho, d, theta, &settings)?
            };
            (r, spec, common)
        }
        ProtocolCommand::MutualPredictability { common, m, pairing } => {
            let (spec, st) = inputs::resolve_state(&common.state)?;
            let settings = common.settings()?;
            let d = square_d(st.shape, "mutual predictability protocol")?;
            let m = m.unwrap_or_else(|| max_mubs(d));
            let out = mutual_predictability_protocol(&st.rho, d, m, pairing.into(), &settings)?;
            (out.report, spec, common)
        }
        ProtocolCommand::WitnessSwap(common) => {
            let (spec, st) = inputs::resolve_state(&common.state)?;
            let settings = common.settings()?;
            let d = square_d(st.shape, "swap witness")?;
            (witness_swap_protocol(&st.rho, d, &settings)?, spec, common)
        }
        ProtocolCommand::WitnessSmallTheta {
            common,
            theta,
            witness,
        } => {
            let (spec, st) = inputs::resolve_state(&common.state)?;
            let settings = common.settings()?;
            let w = inputs::resolve_witness(&witness, st.shape.local_dim())?;
            (
                witness_small_theta_protocol(&st.rho, &w, theta, &settings)?,
                spec,
                common,
            )
        }
    };
    Ok((report.with_state(spec), common))
}

fn report_csv(r: &ProtocolReport) -> String {
    let join = |xs: Vec<f64>| xs.into_iter().map(sig17).collect::<Vec<_>>().join(";");
    let opt = |x: Option<f64>| x.map(sig17).unwrap_or_default();
    let mut out = String::from(
        "protocol,mode,shots,seed,visibility,phase,estimate,verdict,oracle,discrepancy,flags\n",
    );
    out.push_str(&format!(
        "{},{},{},{},{},{},{},{},{},{},{}\n",
        serde_name(&r.protocol),
        serde_name(&r.mode),
        r.shots.map(|s| s.to_string()).unwrap_or_default(),
        r.seed.map(|s| s.to_string()).unwrap_or_default(),
        join(r.visibility.values()),
        join(r.phase.values()),
        sig17(r.estimate),
        serde_name(&r.verdict),
        opt(r.oracle),
        opt(r.discrepancy),
        r.flags.join(";"),
    ));
    out
}

/// The serde name of a unit enum variant.
fn serde_name<T: Serialize>(v: &T) -> String {
    match serde_json::to_value(v) {
        Ok(serde_json::Value::String(s)) => s,
        other => format!("{other:?}"),
    }
}

fn fringe_unitary(
    args: &FringeArgs,
    st: &PreparedState,
) -> Result<(DensityMatrix, UnitaryOperator), CliError> {
    let rho = st.rho.clone();
    Ok(match args.unitary {
        UnitaryArg::Identity => (rho, UnitaryOperator::identity(st.shape.dim())),
        UnitaryArg::Oracle => {
            let u = oracle_unitary(&st.rho)?;
            let rho_a = partial_trace(&st.rho, st.shape, Subsystem::A)?;
            (
                rho_a.tensor(&DensityMatrix::maximally_mixed(st.shape.db())),
                u,
            )
        }
        UnitaryArg::Negativity => {
            let d = square_d(st.shape, "negativity unitary")?;
            (
                rho,
                joint_negativity_unitary(d, args.theta.unwrap_or_else(|| default_theta(d)))?,
            )
        }
        UnitaryArg::Mp => {
            let d = square_d(st.shape, "mutual predictability unitary")?;
            let mubs = mub_set(d, args.basis + 1)?;
            let basis = &mubs.bases()[args.basis];
            let partner = Pairing::from(args.pairing).partner(basis);
            (rho, mp_unitary(basis, &partner)?)
        }
        UnitaryArg::Swap => {
            let d = square_d(st.shape, "swap unitary")?;
            (rho, emeter_core::states::swap_operator(d))
        }
    })
}

#[derive(Serialize)]
struct FitSummary {
    visibility: f64,
    phase: f64,
    mean_level: f64,
    residual: f64,
    phase_undefined: bool,
}

impl From<FringeFit> for FitSummary {
    fn from(f: FringeFit) -> Self {
        Self {
            visibility: f.visibility,
            phase: f.phase,
            mean_level: f.mean_level,
            residual: f.residual,
            phase_undefined: f.phase_undefined,
        }
    }
}

#[derive(Serialize)]
struct FringeJson {
    phases: Vec<f64>,
    intensities: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    counts: Option<Vec<u64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    shots: Option<u64>,
    fit: FitSummary,
}

fn cmd_fringe(args: FringeArgs) -> Result<(), CliError> {
    let (_, st) = inputs::resolve_state(&args.common.state)?;
    let settings = args.common.settings()?;
    let (rho, u) = fringe_unitary(&args, &st)?;
    let grid = default_phase_grid(settings.phase_points);
    let pattern = match settings.mode {
        Mode::Exact => run_exact(&rho, &u, &grid)?,
        Mode::Sampled { shots, seed } => {
            run_sampled(&rho, &u, &grid, shots, rng::derive_seed(seed, 0))?
        }
    };
    let fit = fit_fringe(&pattern)?;
    let text = match args.common.format.unwrap_or(Format::Csv) {
        Format::Csv => {
            eprintln!("V={} alpha={}", sig17(fit.visibility), sig17(fit.phase));
            pattern.to_csv()
        }
        Format::Json => output::to_json(&FringeJson {
            phases: pattern.phases().to_vec(),
            intensities: pattern.intensities().to_vec(),
            counts: pattern.counts().map(<[u64]>::to_vec),
            shots: pattern.shots(),
            fit: fit.into(),
        }),
    };
    output::emit(&text, args.common.output.as_deref()).map_err(|e| CliError::Usage(e.to_string()))
}

#[derive(Serialize)]
struct Validation {
    valid: bool,
    kind: String,
    #[serde(rename = "dA")]
    da: usize,
    #[serde(rename = "dB")]
    db: usize,
    trace: f64,
    purity: f64,
    min_eigenvalue: f64,
    pure: bool,
}

fn cmd_validate(state: &str) -> Result<(), CliError> {
    let (spec, st) = inputs::resolve_state(state)?;
    let kind = serde_json::to_value(&spec)
        .ok()
        .and_then(|v| v.get("kind").and_then(|k| k.as_str().map(String::from)))
        .unwrap_or_default();
    let v = Validation {
        valid: true,
        kind,
        da: st.shape.da(),
        db: st.shape.db(),
        trace: st.rho.matrix().trace().re,
        purity: st.rho.purity(),
        min_eigenvalue: eigh(st.rho.matrix())?.values[0],
        pure: st.rho.is_pure(PURITY_TOL),
    };
    output::emit(&output::to_json(&v), None).map_err(|e| CliError::Usage(e.to_string()))
}

fn cmd_selftest() -> ExitCode {
    let report = selftest::run_all();
    for c in &report.checks {
        println!(
            "{} [{}] {}: {} ({:.1} ms)",
            if c.passed { "PASS" } else { "FAIL" },
            c.id,
            c.name,
            c.detail,
            c.elapsed.as_secs_f64() * 1e3
        );
    }
    let failed = report.failures().count();
    println!(
        "{} passed, {failed} failed in {:.2} s",
        report.checks.len() - failed,
        report.elapsed().as_secs_f64()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

fn run(cli: Cli) -> Result<ExitCode, CliError> {
    match cli.command {
        Command::Fringe(args) => cmd_fringe(args)?,
        Command::Protocol { which } => {
            let (report, common) = run_protocol(which)?;
            let text = match common.format.unwrap_or(Format::Json) {
                Format::Json => output::to_json(&report),
                Format::Csv => report_csv(&report),
            };
            output::emit(&text, common.output.as_deref())
                .map_err(|e| CliError::Usage(e.to_string()))?;
        }
        Command::Selftest => return Ok(cmd_selftest()),
        Command::State {
            which: StateCommand::Validate { state },
        } => cmd_validate(&state)?,
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
