use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(
    name = "rg",
    version,
    about = "Richardson-Gaudin spectra, inner products and identity checks"
)]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// Model document; the built-in default model when omitted.
    #[arg(long, global = true)]
    pub model: Option<PathBuf>,
    /// Output file; standard output when omitted.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Newton tolerance for the solvers.
    #[arg(long, global = true, default_value_t = 1e-12)]
    pub tol: f64,
    /// Seed for randomized fixtures.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Solve every eigenstate with N excitations.
    Solve(SolveArgs),
    /// Inner product of a solved bra with a ket.
    Overlap(OverlapArgs),
    /// Run a verification suite.
    Verify(VerifyArgs),
    /// Evaluate the Cauchy matrix identities on one node set.
    Identities(IdentitiesArgs),
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolveMethod {
    Evb,
    Bethe,
}

#[derive(Args, Debug)]
pub struct SolveArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long, value_enum, default_value_t = SolveMethod::Evb)]
    pub method: SolveMethod,
    /// Also extract the rapidities of every state.
    #[arg(long)]
    pub with_rapidities: bool,
    /// Also compute the dual rapidities (implies --with-rapidities).
    #[arg(long)]
    pub duals: bool,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum MethodChoice {
    All,
    Slavnov,
    Detj,
    Detk,
    Oracle,
}

#[derive(Args, Debug)]
pub struct OverlapArgs {
    /// Bra as FILE#INDEX into a state document.
    #[arg(long)]
    pub bra: String,
    /// Ket as FILE#INDEX into a state document.
    #[arg(long, group = "ket_source")]
    pub ket: Option<String>,
    /// Ket rapidities as a comma-separated list of RE or RE:IM.
    #[arg(long, group = "ket_source", allow_hyphen_values = true)]
    pub ket_rapidities: Option<String>,
    /// Product-state ket as a bitstring of occupied levels.
    #[arg(long, group = "ket_source")]
    pub ket_occ: Option<String>,
    #[arg(long, value_enum, default_value_t = MethodChoice::All)]
    pub method: MethodChoice,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Suite {
    Cauchy,
    Duality,
    Orthogonality,
    Charges,
    All,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    #[arg(long, value_enum, default_value_t = Suite::All)]
    pub suite: Suite,
    /// Largest number of levels used by the operator-level suites.
    #[arg(long, default_value_t = 6)]
    pub lmax: usize,
}

#[derive(Args, Debug)]
pub struct IdentitiesArgs {
    /// Levels as a comma-separated list of RE or RE:IM; random when omitted.
    #[arg(long, allow_hyphen_values = true)]
    pub eps: Option<String>,
    /// Parameters as a comma-separated list of RE or RE:IM; random when omitted.
    #[arg(long, allow_hyphen_values = true)]
    pub xs: Option<String>,
    /// Sizes of the random node sets.
    #[arg(long, default_value_t = 5)]
    pub m: usize,
    #[arg(long, default_value_t = 3)]
    pub n: usize,
    /// Coupling-like constant of the matrix-determinant-lemma identity.
    #[arg(long, default_value_t = 0.37, allow_hyphen_values = true)]
    pub big_g: f64,
}
