//! Command-line surface. Every leaf argument struct serializes to the `args` object of a run
//! file, with keys equal to the long flag names, so a manifest can be fed back via `--config`.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use radial_sle::nullvec::FdOrder;
use radial_sle::params::ClassicalDimension;
use radial_sle::{FiniteDiffScheme, PatternKind, RhoConvention};

#[derive(Debug, Parser)]
#[command(name = "radial-sle", version, about = "Numerical laboratory for multiple radial SLE and its partition functions")]
#[command(args_override_self = true)]
pub struct Cli {
    /// Run file `{schema_id, version, command, args}`; flags on the command line win.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Write report, manifest and traces into this directory instead of stdout.
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Worker threads for sample batches and ensembles (results do not depend on it).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// κ-derived constants and charge dimensions.
    Params(ParamsArgs),
    /// List link patterns in canonical text form.
    Patterns(PatternsArgs),
    /// Meander matrix of a pattern space.
    Meander(MeanderArgs),
    /// Evaluate a partition function at one configuration.
    EvalPsi(EvalPsiArgs),
    /// Numerical verification of the operator identities.
    #[command(subcommand)]
    Verify(VerifyCommand),
    /// Simulate the driving process and reconstruct the curves.
    Simulate(SimulateArgs),
    /// Calibration runs for the numerical kernels.
    #[command(subcommand)]
    Calibrate(CalibrateCommand),
}

#[derive(Debug, Subcommand)]
pub enum VerifyCommand {
    /// Second-order null-vector equations.
    Nullvec(VerifyPsiArgs),
    /// Rotation constant ω = Σ∂ψ/ψ.
    Rotation(VerifyPsiArgs),
    /// Global Ward identities of the half-plane ground function.
    Ward(WardArgs),
    /// Calogero–Sutherland eigenvalue and conjugation identity.
    Cs(VerifyPsiArgs),
    /// Commutation relations of the null-vector operators and the SLE generators.
    Commutators(CommutatorArgs),
}

#[derive(Debug, Subcommand)]
pub enum CalibrateCommand {
    /// Pochhammer contour against interval reduction for the Beta integrand.
    Pochhammer(PochhammerArgs),
    /// Observed convergence order of the finite-difference stencils.
    FdOrder(FdOrderArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum KindArg {
    Radial,
    Chordal,
}

impl From<KindArg> for PatternKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Radial => PatternKind::Radial,
            KindArg::Chordal => PatternKind::Chordal,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FamilyArg {
    /// Closed form Π sin^{2/κ} (m = 0).
    Fermionic,
    Ground,
    Excited,
    Spin,
    Chordal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum OrderArg {
    Second,
    Fourth,
}

impl From<OrderArg> for FdOrder {
    fn from(o: OrderArg) -> Self {
        match o {
            OrderArg::Second => FdOrder::Second,
            OrderArg::Fourth => FdOrder::Fourth,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ClassicalArg {
    /// σ² + 2σ
    Full,
    /// σ²/2 + 2σ
    Halved,
}

impl From<ClassicalArg> for ClassicalDimension {
    fn from(c: ClassicalArg) -> Self {
        match c {
            ClassicalArg::Full => ClassicalDimension::Full,
            ClassicalArg::Halved => ClassicalDimension::Halved,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RhoArg {
    /// ρ = κaσ/2
    Resolved,
    /// ρ = κaσ
    AsPrinted,
}

impl From<RhoArg> for RhoConvention {
    fn from(r: RhoArg) -> Self {
        match r {
            RhoArg::Resolved => RhoConvention::Resolved,
            RhoArg::AsPrinted => RhoConvention::AsPrinted,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DriftArg {
    Fermionic,
    /// Finite-difference gradient of a screening integral (see --family).
    Numeric,
    /// Coulomb gas with marked charges.
    Rational,
    /// SLE(κ,ρ) with weights at the marked angles.
    Rho,
    /// Deterministic κ = 0 limit.
    KappaZero,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FormatArg {
    Text,
    Json,
}

#[derive(Debug, Clone, Args, Serialize)]
#[serde(rename_all = "kebab-case")]
#[command(args_override_self = true, allow_negative_numbers = true)]
pub struct ParamsArgs {
    /// κ ≥ 0; at κ = 0 only classical dimensions are reported.
    #[arg(long)]
    pub kappa: f64,
    /// Charges whose dimensions to report.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub sigma: Vec<f64>,
    /// Normalization of the κ = 0 dimension.
    #[arg(long, value_enum, default_value_t = ClassicalArg::Full)]
    pub classical: ClassicalArg,
}

#[derive(Debug, Clone, Args, Serialize)]
#[serde(rename_all = "kebab-case")]
#[command(args_override_self = true, allow_negative_numbers = true)]
pub struct PatternsArgs {
    #[arg(long, value_enum, default_value_t = KindArg::Radial)]
    pub kind: KindArg,
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub m: usize,
    #[arg(long, value_enum, default_value_t = FormatArg::Text)]
    pub format: FormatArg,
}

#[derive(Debug, Clone, Args, Serialize)]
#[serde(rename_all = "kebab-case")]
#[command(args_override_self = true, allow_negative_numbers = true)]
pub struct MeanderArgs {
    #[arg(long, value_enum, default_value_t = KindArg::Radial)]
    pub kind: KindArg,
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub m: usize,
    #[arg(long)]
    pub kappa: f64,
    /// Fail (exit 3) unless the matrix is numerically invertible.
    #[arg(long)]
    pub check_invertible: bool,
    /// Largest 2-norm condition number accepted as invertible.
    #[arg(long, default_value_t = 1e12)]
    pub max_condition: f64,
}

/// Which partition function, and how to integrate it.
#[derive(Debug, Clone, Args, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct PsiArgs {
    #[arg(long, value_enum)]
    pub family: FamilyArg,
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub m: usize,
    #[arg(long)]
    pub kappa: f64,
    /// Spin parameter of the spin family.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub eta: f64,
    /// Link pattern in canonical text form; the standard pattern when absent.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pattern: Option<String>,
    /// Radius of the origin circle (excited family); automatic when absent.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub w_radius: Option<f64>,
    /// Quadrature tolerance between successive refinements.
    #[arg(long, default_value_t = 1e-9)]
    pub quad_tol: f64,
    #[arg(long, default_value_t = 6)]
    pub max_level: usize,
}

#[derive(Debug, Clone, Args, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct FdArgs {
    /// Base finite-difference step.
    #[arg(long, default_value_t = 1e-3)]
    pub fd_step: f64,
    #[arg(long, value_enum, default_value_t = OrderArg::Fourth)]
    pub fd_order: OrderArg,
    /// Number of halved steps combined by Richardson extrapolation (1 = none).
    #[arg(long, default_value_t = 2)]
    pub richardson: usize,
}

impl FdArgs {
    pub fn scheme(&self) -> FiniteDiffScheme {
        FiniteDiffScheme { step: self.fd_step, order: self.fd_order.into(), richardson_levels: self.richardson }
    }
}

/// Where the identities are sampled.
#[derive(Debug, Clone, Args, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct SampleArgs {
    /// Number of random configurations.
    #[arg(long, default_value_t = 6)]
    pub samples: usize,
    /// Smallest gap between neighbouring angles in a sample.
    #[arg(long, default_value_t = 0.4)]
    pub min_gap: f64,
    #[arg(long, env = "RADIAL_SLE_SEED", default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Args, Serialize)]
#[serde(rename_all = "kebab-case")]
#[command(args_override_self = true, allow_negative_numbers = true)]
pub struct EvalPsiArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub psi: PsiArgs,
    /// Angles θ_1 < … < θ_n.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
    pub theta: Vec<f64>,
}

#[derive(Debug, Clone, Args, Serialize)]
#[serde(rename_all = "kebab-case")]
#[command(args_override_self = true, allow_negative_numbers = true)]
pub struct VerifyPsiArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub psi: PsiArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub sample: SampleArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub fd: FdArgs,
    /// Absolute tolerance on the checked constant.
    #[arg(long, default_value_t = 1e-4)]
    pub tol: f64,
}

#[derive(Debug, Clone, Args, Serialize)]
#[serde(rename_all = "kebab-case")]
#[command(args_override_self = true, allow_negative_numbers = true)]
pub struct WardArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub m: usize,
    #[arg(long)]
    pub kappa: f64,
    /// Real boundary points z_1 < … < z_n; spread over [−1, 1.1] when absent.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub z: Vec<f64>,
    /// Interior point u as `re,im` (its conjugate is added).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_values_t = [0.2, 1.3])]
    pub u: Vec<f64>,
    /// Shift λ_u by this amount (a control that must fail).
    #[arg(long, allow_hyphen_values = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub falsify: Option<f64>,
    #[command(flatten)]
    #[serde(flatten)]
    pub fd: FdArgs,
    #[arg(long, default_value_t = 1e-5)]
    pub tol: f64,
}

#[derive(Debug, Clone, Args, Serialize)]
#[serde(rename_all = "kebab-case")]
#[command(args_override_self = true, allow_negative_numbers = true)]
pub struct CommutatorArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub psi: PsiArgs,
    /// Configuration; equally spaced from 0.3 when absent.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub theta: Vec<f64>,
    /// Pair of (0-based) indices.
    #[arg(long, value_delimiter = ',', default_values_t = [0, 1])]
    pub pair: Vec<usize>,
    /// Inner and outer steps of the nested differences.
    #[arg(long, default_value_t = 1e-2)]
    pub inner_step: f64,
    #[arg(long, default_value_t = 3e-2)]
    pub outer_step: f64,
    /// Tolerance of the null-vector commutator.
    #[arg(long, default_value_t = 1e-4)]
    pub tol: f64,
    /// Tolerance of the generator commutator.
    #[arg(long, default_value_t = 1e-3)]
    pub generator_tol: f64,
}

#[derive(Debug, Clone, Args, Serialize)]
#[serde(rename_all = "kebab-case")]
#[command(args_override_self = true, allow_negative_numbers = true)]
pub struct SimulateArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub kappa: f64,
    /// Time horizon.
    #[arg(long = "T")]
    #[serde(rename = "T")]
    pub horizon: f64,
    #[arg(long, default_value_t = 1e-3)]
    pub dt: f64,
    #[arg(long, env = "RADIAL_SLE_SEED", default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = DriftArg::Fermionic)]
    pub drift: DriftArg,
    /// Partition function for `--drift numeric`.
    #[arg(long, value_enum, default_value_t = FamilyArg::Ground)]
    pub family: FamilyArg,
    #[arg(long, default_value_t = 0)]
    pub m: usize,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub eta: f64,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pattern: Option<String>,
    /// Marked boundary angles.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub marked: Vec<f64>,
    /// Charges at the marked angles (rational and κ = 0 modes, and ρ when --rho is absent).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub charge: Vec<f64>,
    /// Explicit ρ weights at the marked angles.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub rho: Vec<f64>,
    #[arg(long, value_enum, default_value_t = RhoArg::Resolved)]
    pub rho_convention: RhoArg,
    /// Per-curve rates ν_j; all 1 when absent.
    #[arg(long, value_delimiter = ',')]
    pub nu: Vec<f64>,
    /// Starting angles; equally spaced from 0 when absent.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub initial: Vec<f64>,
    #[arg(long, default_value_t = 1e-3)]
    pub collision_eps: f64,
    #[arg(long, default_value_t = 1e-4)]
    pub tip_offset: f64,
    /// Steps between reconstructed tips (0 = about 200 samples).
    #[arg(long, default_value_t = 0)]
    pub tip_stride: usize,
    /// Skip tip reconstruction.
    #[arg(long)]
    pub no_tips: bool,
    /// Independent members, one trace file each (requires --out).
    #[arg(long, default_value_t = 1)]
    pub ensemble: usize,
    #[command(flatten)]
    #[serde(flatten)]
    pub fd: FdArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
#[serde(rename_all = "kebab-case")]
#[command(args_override_self = true, allow_negative_numbers = true)]
pub struct PochhammerArgs {
    /// Exponent at 0.
    #[arg(long, default_value_t = -0.5, allow_hyphen_values = true)]
    pub alpha: f64,
    /// Exponent at 1.
    #[arg(long, default_value_t = -0.5, allow_hyphen_values = true)]
    pub beta: f64,
    #[arg(long, default_value_t = 0.1)]
    pub clearance: f64,
    #[arg(long, default_value_t = 0.15)]
    pub height: f64,
    #[arg(long, default_value_t = 1e-12)]
    pub quad_tol: f64,
    #[arg(long, default_value_t = 12)]
    pub max_level: usize,
}

#[derive(Debug, Clone, Args, Serialize)]
#[serde(rename_all = "kebab-case")]
#[command(args_override_self = true, allow_negative_numbers = true)]
pub struct FdOrderArgs {
    #[arg(long, default_value_t = 3.0)]
    pub kappa: f64,
    #[arg(long, default_value_t = 3)]
    pub n: usize,
    /// Step sizes, largest first.
    #[arg(long, value_delimiter = ',', default_values_t = [0.2, 0.1, 0.05, 0.025])]
    pub steps: Vec<f64>,
    #[arg(long, default_value_t = 4)]
    pub samples: usize,
    /// Must exceed twice the reach of the widest stencil.
    #[arg(long, default_value_t = 1.0)]
    pub min_gap: f64,
    #[arg(long, env = "RADIAL_SLE_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Accepted shortfall of the observed order below the nominal one.
    #[arg(long, default_value_t = 0.3)]
    pub tol: f64,
}

impl Command {
    /// Subcommand words and the resolved arguments.
    pub fn resolved(&self) -> (Vec<&'static str>, serde_json::Value) {
        match self {
            Command::Params(a) => (vec!["params"], v(a)),
            Command::Patterns(a) => (vec!["patterns"], v(a)),
            Command::Meander(a) => (vec!["meander"], v(a)),
            Command::EvalPsi(a) => (vec!["eval-psi"], v(a)),
            Command::Verify(VerifyCommand::Nullvec(a)) => (vec!["verify", "nullvec"], v(a)),
            Command::Verify(VerifyCommand::Rotation(a)) => (vec!["verify", "rotation"], v(a)),
            Command::Verify(VerifyCommand::Ward(a)) => (vec!["verify", "ward"], v(a)),
            Command::Verify(VerifyCommand::Cs(a)) => (vec!["verify", "cs"], v(a)),
            Command::Verify(VerifyCommand::Commutators(a)) => (vec!["verify", "commutators"], v(a)),
            Command::Simulate(a) => (vec!["simulate"], v(a)),
            Command::Calibrate(CalibrateCommand::Pochhammer(a)) => (vec!["calibrate", "pochhammer"], v(a)),
            Command::Calibrate(CalibrateCommand::FdOrder(a)) => (vec!["calibrate", "fd-order"], v(a)),
        }
    }
}

fn v<T: Serialize>(x: &T) -> serde_json::Value {
    serde_json::to_value(x).expect("argument structs serialize")
}
