//! `unitmf` command-line tool: ingest raw logs, train models, cross-validate
//! and run the monotone-mapping experiment.

mod spec;

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use unitmf::emf::emf_fit_multistart;
use unitmf::eval::{cross_validate, split_kfold, split_monte_carlo};
use unitmf::ingest::{
    apply_filters, build_ctr_matrix, build_efficiency_matrix, build_rate_matrix, monotonic_experiment, read_claims,
    read_ctr_events, read_views, FilterConfig, MatrixSummary, MonotonicConfig, MonotonicRow,
};
use unitmf::{FactorModel, Hyperparams, ModelKind, ObservedMatrix, TrainReport};

use spec::{parse_grid, SpecError, SplitSpec};

#[derive(Parser)]
#[command(name = "unitmf", version, about = "Matrix completion for sparse matrices with entries in [0, 1]")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a matrix from a claims, views or click log and apply the
    /// cold-start filters.
    Ingest(IngestArgs),
    /// Fit one model and write it with its objective trajectory.
    Train(TrainArgs),
    /// Grid search with Monte-Carlo or k-fold cross-validation.
    Cv(CvArgs),
    /// Monotone-mapping experiment on random uniform matrices.
    Fig2(Fig2Args),
}

#[derive(Clone, Copy, ValueEnum)]
enum LogKind {
    Claims,
    Views,
    Ctr,
}

#[derive(Clone, Copy, ValueEnum)]
enum Algo {
    Mf,
    Nmf,
    Bmf,
    Pmf,
    Lmf,
    Emf,
    Smf,
}

impl From<Algo> for ModelKind {
    fn from(a: Algo) -> Self {
        match a {
            Algo::Mf => ModelKind::Mf,
            Algo::Nmf => ModelKind::Nmf,
            Algo::Bmf => ModelKind::Bmf,
            Algo::Pmf => ModelKind::Pmf,
            Algo::Lmf => ModelKind::Lmf,
            Algo::Emf => ModelKind::Emf,
            Algo::Smf => ModelKind::Smf,
        }
    }
}

#[derive(Args)]
struct IngestArgs {
    #[arg(long, value_enum)]
    kind: LogKind,
    #[arg(long)]
    input: PathBuf,
    /// Matrix CSV (`row,col,value,support`).
    #[arg(long)]
    output: PathBuf,
    /// Index-to-id CSV; defaults to the output path with extension `ids.csv`.
    #[arg(long)]
    mapping: Option<PathBuf>,
    #[arg(long, default_value_t = FilterConfig::default().min_support)]
    min_support: u64,
    #[arg(long, default_value_t = FilterConfig::default().min_users_per_item)]
    min_users_per_item: usize,
    #[arg(long, default_value_t = FilterConfig::default().min_entries_per_user)]
    min_entries_per_user: usize,
    /// Make one column pass and one row pass instead of iterating until
    /// every threshold holds.
    #[arg(long)]
    single_pass: bool,
}

/// Flags mirroring `Hyperparams`.
#[derive(Args, Clone)]
struct HyperparamArgs {
    #[arg(long, default_value_t = Hyperparams::default().k)]
    k: usize,
    #[arg(long, default_value_t = 0.0)]
    lambda_u: f64,
    #[arg(long, default_value_t = 0.0)]
    lambda_i: f64,
    /// Defaults to the algorithm's tuned step size.
    #[arg(long)]
    learning_rate: Option<f64>,
    /// Defaults to 8 below 5000 observed entries, 128 otherwise.
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long, default_value_t = Hyperparams::default().max_epochs)]
    max_epochs: usize,
    #[arg(long, default_value_t = Hyperparams::default().rel_tolerance)]
    rel_tolerance: f64,
}

impl HyperparamArgs {
    fn resolve(&self, kind: ModelKind, observed: &ObservedMatrix, seed: u64) -> Hyperparams {
        Hyperparams {
            k: self.k,
            lambda_u: self.lambda_u,
            lambda_i: self.lambda_i,
            learning_rate: self.learning_rate.unwrap_or_else(|| unitmf::default_learning_rate(kind)),
            batch_size: self.batch_size.unwrap_or_else(|| Hyperparams::default_batch_size(observed.len())),
            max_epochs: self.max_epochs,
            rel_tolerance: self.rel_tolerance,
            seed,
        }
    }
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long, value_enum)]
    algo: Algo,
    #[arg(long)]
    matrix: PathBuf,
    #[arg(long)]
    model: PathBuf,
    /// Objective trajectory CSV (`epoch,objective` plus `sigma` for SMF).
    #[arg(long)]
    report: PathBuf,
    #[command(flatten)]
    hp: HyperparamArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Lower bound for BMF predictions.
    #[arg(long, default_value_t = 0.0)]
    x_min: f64,
    /// Upper bound for BMF predictions.
    #[arg(long, default_value_t = 1.0)]
    x_max: f64,
    /// Random starts for EMF; the lowest objective wins.
    #[arg(long, default_value_t = 1)]
    restarts: usize,
}

#[derive(Args)]
struct CvArgs {
    #[arg(long, value_enum)]
    algo: Algo,
    #[arg(long)]
    matrix: PathBuf,
    /// `name=v1,v2;name=v3`, applied on top of the hyperparameter flags.
    #[arg(long, default_value = "")]
    grid: String,
    /// `mc:ROUNDS:FRACTION` or `kfold:K`.
    #[arg(long, default_value = "mc:3:0.2")]
    split: String,
    /// Metric summary CSV (`metric,N,mean,stderr`) of the selected point.
    #[arg(long)]
    report: PathBuf,
    /// Selected hyperparameters as TOML.
    #[arg(long)]
    best: PathBuf,
    #[command(flatten)]
    hp: HyperparamArgs,
    #[arg(long)]
    seed: u64,
    /// Worker threads; 0 uses every core. Results do not depend on it.
    #[arg(long, default_value_t = 0)]
    jobs: usize,
}

#[derive(Args)]
struct Fig2Args {
    #[arg(long)]
    output: PathBuf,
    #[arg(long)]
    seed: u64,
}

/// Failure carrying its exit status: 2 for invalid input, 1 otherwise.
struct Failure {
    code: u8,
    error: anyhow::Error,
}

impl From<anyhow::Error> for Failure {
    fn from(error: anyhow::Error) -> Self {
        let invalid = error.chain().any(|cause| {
            cause.is::<SpecError>()
                || matches!(
                    cause.downcast_ref::<unitmf::Error>(),
                    Some(
                        unitmf::Error::Parse { .. }
                            | unitmf::Error::InvalidArgument(_)
                            | unitmf::Error::InvalidHyperparams(_)
                            | unitmf::Error::ValueOutOfRange { .. }
                            | unitmf::Error::DuplicateEntry { .. }
                            | unitmf::Error::IndexOutOfBounds { .. }
                            | unitmf::Error::ZeroSupport { .. }
                            | unitmf::Error::EmptyDimensions { .. }
                    )
                )
        });
        Failure { code: if invalid { 2 } else { 1 }, error }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Ingest(args) => ingest(args),
        Command::Train(args) => train(args),
        Command::Cv(args) => cv(args),
        Command::Fig2(args) => fig2(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let failure = Failure::from(e);
            eprintln!("error: {:#}", failure.error);
            ExitCode::from(failure.code)
        }
    }
}

fn open(path: &Path) -> Result<File> {
    File::open(path).with_context(|| format!("cannot open {}", path.display()))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).with_context(|| format!("cannot create {}", path.display()))?))
}

fn load_matrix(path: &Path) -> Result<ObservedMatrix> {
    ObservedMatrix::load(path).with_context(|| format!("reading matrix {}", path.display()))
}

fn ingest(args: IngestArgs) -> Result<()> {
    let input = open(&args.input)?;
    let context = || format!("reading {}", args.input.display());
    let (matrix, ids) = match args.kind {
        LogKind::Claims => build_efficiency_matrix(&read_claims(input).with_context(context)?)?,
        LogKind::Views => build_rate_matrix(&read_views(input).with_context(context)?)?,
        LogKind::Ctr => build_ctr_matrix(&read_ctr_events(input).with_context(context)?)?,
    };
    let cfg = FilterConfig {
        min_support: args.min_support,
        min_users_per_item: args.min_users_per_item,
        min_entries_per_user: args.min_entries_per_user,
        fixpoint: !args.single_pass,
    };
    let filtered = apply_filters(&matrix, &cfg)?;
    let ids = ids.restrict(&filtered.rows, &filtered.cols);

    filtered.matrix.write_csv(create(&args.output)?)?;
    let mapping = args.mapping.unwrap_or_else(|| args.output.with_extension("ids.csv"));
    ids.write_csv(create(&mapping)?)?;
    println!("{}", MatrixSummary::of(&filtered.matrix));
    Ok(())
}

fn train(args: TrainArgs) -> Result<()> {
    let kind = ModelKind::from(args.algo);
    let observed = load_matrix(&args.matrix)?;
    let hp = args.hp.resolve(kind, &observed, args.seed);
    let (model, report) = match kind {
        ModelKind::Bmf => unitmf::baselines::bmf_fit(&observed, &hp, args.x_min, args.x_max)?,
        ModelKind::Emf => emf_fit_multistart(&observed, &hp, args.restarts)?,
        _ => unitmf::fit(kind, &observed, &hp)?,
    };
    model.save(&args.model).with_context(|| format!("writing model {}", args.model.display()))?;
    write_trajectory(&report, &model, create(&args.report)?)?;
    println!(
        "{kind}: {} epochs, objective {:.6e} -> {:.6e} ({:?})",
        report.epochs_run,
        report.initial_objective,
        report.final_objective(),
        report.stop_reason
    );
    Ok(())
}

/// `epoch,objective[,sigma]` with the starting point as epoch 0.
fn write_trajectory(report: &TrainReport, model: &FactorModel, mut out: impl Write) -> Result<()> {
    let with_sigma = model.kind() == ModelKind::Smf;
    writeln!(out, "{}", if with_sigma { "epoch,objective,sigma" } else { "epoch,objective" })?;
    let initial_sigma = 1.0;
    for (epoch, obj) in std::iter::once(report.initial_objective).chain(report.objective_trajectory.iter().copied()).enumerate() {
        if with_sigma {
            let sigma = if epoch == 0 { initial_sigma } else { report.sigma_trajectory[epoch - 1] };
            writeln!(out, "{epoch},{obj:?},{sigma:?}")?;
        } else {
            writeln!(out, "{epoch},{obj:?}")?;
        }
    }
    out.flush()?;
    Ok(())
}

fn cv(args: CvArgs) -> Result<()> {
    let kind = ModelKind::from(args.algo);
    let split: SplitSpec = args.split.parse()?;
    let observed = load_matrix(&args.matrix)?;
    let base = args.hp.resolve(kind, &observed, args.seed);
    let grid = parse_grid(&args.grid, &base)?;
    let plans = match split {
        SplitSpec::MonteCarlo { rounds, test_fraction } => split_monte_carlo(&observed, rounds, test_fraction, args.seed)?,
        SplitSpec::KFold { k } => split_kfold(&observed, k, args.seed)?,
    };
    let pool = rayon::ThreadPoolBuilder::new().num_threads(args.jobs).build()?;
    let (best, report) = pool.install(|| cross_validate(kind, &observed, &grid, &plans))?;

    report.write_csv(create(&args.report)?)?;
    let mut out = create(&args.best)?;
    out.write_all(toml::to_string(&best)?.as_bytes())?;
    out.flush()?;
    println!("{kind} best of {} grid points over {} splits: {}", grid.len(), plans.len(), best.describe());
    print!("{report}");
    Ok(())
}

fn fig2(args: Fig2Args) -> Result<()> {
    let rows = monotonic_experiment(&MonotonicConfig::new(args.seed))?;
    MonotonicRow::write_csv(&rows, create(&args.output)?)?;
    for r in &rows {
        println!("{:<14} {:.1} {:.4} ({:.4})", r.mapping, r.train_fraction, r.mean_rmse, r.stderr);
    }
    Ok(())
}
