//! Command-line front end: corpus augmentation, n-gram training, bias
//! evaluation, and embedded-data inspection.
//!
//! Exit codes are a stable contract: 0 success, 1 I/O failure, 2
//! validation/usage error, 3 scorer failure.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Parser, Subcommand, ValueEnum};

use cfbias::bias::{occupation_bias_report, BiasError, Scorer, TableScorer};
use cfbias::bridge::{BridgeConfig, BridgeScorer};
use cfbias::corpus::{self, CorpusError};
use cfbias::intervention::{cda_augment, Intervention, InterventionError};
use cfbias::lexicon::{self, default_lexicon, LexiconError};
use cfbias::ngramlm::{NgramError, NgramModel};
use cfbias::templates::{
    default_coref_templates, default_lm_templates, parse_coref_templates, parse_lm_templates,
    Template, TemplateError,
};

#[derive(Parser)]
#[command(
    name = "cfbias",
    version,
    about = "Gender bias measurement and counterfactual data augmentation for token corpora"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Counterfactually augment a corpus: originals plus intervened copies.
    Augment(AugmentArgs),
    /// Evaluate per-occupation gender bias of a scorer.
    Bias(BiasArgs),
    /// Train the add-k smoothed n-gram language model.
    LmTrain(LmTrainArgs),
    /// Print embedded default data, one item per line.
    Show(ShowArgs),
}

#[derive(clap::Args)]
struct AugmentArgs {
    /// Input corpus file.
    #[arg(long)]
    input: PathBuf,
    /// Input format.
    #[arg(long, value_enum)]
    format: Format,
    /// Which intervention to apply.
    #[arg(long, value_enum)]
    mode: Mode,
    /// Let the grammar intervention fall back to the naive one on items
    /// without cluster annotations.
    #[arg(long)]
    allow_unannotated: bool,
    /// Output file; plain input writes plain, docs and conll write JSON lines.
    #[arg(long)]
    output: PathBuf,
    /// Worker threads for per-item application (default: rayon's choice).
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    jobs: Option<u64>,
}

#[derive(clap::Args)]
struct BiasArgs {
    /// Template kind to evaluate.
    #[arg(long, value_enum)]
    task: Task,
    /// Scorer: `ngram:PATH`, `table:PATH`, or `bridge:CMD`.
    #[arg(long)]
    scorer: String,
    /// Occupation list file (default: embedded list).
    #[arg(long)]
    occupations: Option<PathBuf>,
    /// Template file (default: embedded templates for the task).
    #[arg(long)]
    templates: Option<PathBuf>,
    /// Where to write the report.
    #[arg(long)]
    report: PathBuf,
    /// Report rendering.
    #[arg(long, value_enum, default_value_t = ReportFormat::Json)]
    format: ReportFormat,
}

#[derive(clap::Args)]
struct LmTrainArgs {
    /// Plain-mode training corpus.
    #[arg(long)]
    corpus: PathBuf,
    /// Model order (1-5).
    #[arg(long)]
    order: usize,
    /// Add-k smoothing constant.
    #[arg(long)]
    k: f64,
    /// Where to write the model.
    #[arg(long)]
    out: PathBuf,
}

#[derive(clap::Args)]
struct ShowArgs {
    #[arg(long, value_enum)]
    what: What,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Plain,
    Docs,
    Conll,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Naive,
    Grammar,
}

#[derive(Clone, Copy, ValueEnum)]
enum Task {
    Coref,
    Lm,
}

#[derive(Clone, Copy, ValueEnum)]
enum ReportFormat {
    Json,
    Text,
}

#[derive(Clone, Copy, ValueEnum)]
enum What {
    Pairs,
    Occupations,
    TemplatesCoref,
    TemplatesLm,
}

/// An error with its contractual exit code.
struct CliError {
    code: u8,
    message: String,
}

impl CliError {
    fn io(message: impl Into<String>) -> Self {
        CliError {
            code: 1,
            message: message.into(),
        }
    }

    fn validation(message: impl Into<String>) -> Self {
        CliError {
            code: 2,
            message: message.into(),
        }
    }

    fn scorer(message: impl Into<String>) -> Self {
        CliError {
            code: 3,
            message: message.into(),
        }
    }
}

impl From<CorpusError> for CliError {
    fn from(err: CorpusError) -> Self {
        match err {
            CorpusError::Io(_) => CliError::io(err.to_string()),
            _ => CliError::validation(err.to_string()),
        }
    }
}

impl From<LexiconError> for CliError {
    fn from(err: LexiconError) -> Self {
        match err {
            LexiconError::Io(_) => CliError::io(err.to_string()),
            _ => CliError::validation(err.to_string()),
        }
    }
}

impl From<TemplateError> for CliError {
    fn from(err: TemplateError) -> Self {
        match err {
            TemplateError::Io(_) => CliError::io(err.to_string()),
            _ => CliError::validation(err.to_string()),
        }
    }
}

impl From<NgramError> for CliError {
    fn from(err: NgramError) -> Self {
        match err {
            NgramError::Io(_) => CliError::io(err.to_string()),
            _ => CliError::validation(err.to_string()),
        }
    }
}

impl From<InterventionError> for CliError {
    fn from(err: InterventionError) -> Self {
        match err {
            InterventionError::Corpus(inner) => inner.into(),
            _ => CliError::validation(err.to_string()),
        }
    }
}

impl From<BiasError> for CliError {
    fn from(err: BiasError) -> Self {
        match err {
            BiasError::Io(_) => CliError::io(err.to_string()),
            BiasError::Scorer(inner) => CliError::scorer(inner.to_string()),
            BiasError::Template(inner) => inner.into(),
            _ => CliError::validation(err.to_string()),
        }
    }
}

fn main() -> ExitCode {
    // Die quietly on closed pipes (e.g. `cfbias show ... | head`).
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {}", err.message);
            ExitCode::from(err.code)
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Augment(args) => cmd_augment(args),
        Command::Bias(args) => cmd_bias(args),
        Command::LmTrain(args) => cmd_lm_train(args),
        Command::Show(args) => cmd_show(args),
    }
}

fn cmd_augment(args: AugmentArgs) -> Result<(), CliError> {
    let corpus = match args.format {
        Format::Plain => corpus::read_plain(&args.input)?,
        Format::Docs => corpus::read_documents(&args.input)?,
        Format::Conll => corpus::import_conll_lite(&args.input)?,
    };
    let lexicon = default_lexicon();
    let intervention = match args.mode {
        Mode::Naive => Intervention::naive(lexicon),
        Mode::Grammar => Intervention::grammar(lexicon).allow_unannotated(args.allow_unannotated),
    };
    let augmented = with_jobs(args.jobs, || cda_augment(&corpus, &intervention))?;
    match args.format {
        Format::Plain => corpus::write_plain(&augmented, &args.output)?,
        Format::Docs | Format::Conll => corpus::write_documents(&augmented, &args.output)?,
    }
    println!("in {}", corpus.len());
    println!("out {}", augmented.len());
    Ok(())
}

#[cfg(feature = "parallel")]
fn with_jobs<T: Send>(jobs: Option<u64>, f: impl FnOnce() -> T + Send) -> T {
    match jobs {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n as usize)
            .build()
            .expect("thread pool construction")
            .install(f),
        None => f(),
    }
}

#[cfg(not(feature = "parallel"))]
fn with_jobs<T: Send>(jobs: Option<u64>, f: impl FnOnce() -> T + Send) -> T {
    if jobs.is_some() {
        eprintln!("note: built without the `parallel` feature; --jobs is ignored");
    }
    f()
}

fn cmd_bias(args: BiasArgs) -> Result<(), CliError> {
    let (kind, spec) = args.scorer.split_once(':').ok_or_else(|| {
        CliError::validation("--scorer must be ngram:PATH, table:PATH, or bridge:CMD")
    })?;
    let scorer: Box<dyn Scorer> = match kind {
        "ngram" => {
            if matches!(args.task, Task::Coref) {
                return Err(CliError::validation(
                    "the ngram scorer supports only the lm task",
                ));
            }
            Box::new(NgramModel::load(Path::new(spec))?)
        }
        "table" => Box::new(TableScorer::load(Path::new(spec))?),
        "bridge" => {
            let command: Vec<String> = spec.split_whitespace().map(str::to_string).collect();
            if command.is_empty() {
                return Err(CliError::validation("bridge command is empty"));
            }
            Box::new(BridgeScorer::new(
                BridgeConfig::new(command).with_timeout(Duration::from_secs(30)),
            ))
        }
        other => {
            return Err(CliError::validation(format!(
                "unknown scorer kind `{other}`; expected ngram, table, or bridge"
            )))
        }
    };

    let templates: Vec<Template> = match (&args.templates, args.task) {
        (Some(path), Task::Coref) => parse_coref_templates(&read_file(path)?)?,
        (Some(path), Task::Lm) => parse_lm_templates(&read_file(path)?)?,
        (None, Task::Coref) => default_coref_templates(),
        (None, Task::Lm) => default_lm_templates(),
    };
    let lexicon = default_lexicon();
    let occupations: Vec<String> = match &args.occupations {
        Some(path) => lexicon::load_occupations_file(path)?,
        None => lexicon.occupations().to_vec(),
    };

    let report = occupation_bias_report(&templates, &occupations, lexicon, scorer.as_ref())?;
    let rendered = match args.format {
        ReportFormat::Json => format!(
            "{}\n",
            serde_json::to_string_pretty(&report).expect("report serialization is infallible")
        ),
        ReportFormat::Text => report.render_text(),
    };
    std::fs::write(&args.report, rendered).map_err(|e| CliError::io(e.to_string()))?;
    println!("AOB {:.9}", report.aob);
    println!("signed AOB {:.9}", report.signed_aob);
    Ok(())
}

fn cmd_lm_train(args: LmTrainArgs) -> Result<(), CliError> {
    let corpus = corpus::read_plain(&args.corpus)?;
    let model = NgramModel::train(&corpus, args.order, args.k)?;
    model.save(&args.out)?;
    println!(
        "trained order-{} model with k={} over {} vocabulary entries",
        model.order(),
        model.k(),
        model.vocab_size()
    );
    Ok(())
}

fn cmd_show(args: ShowArgs) -> Result<(), CliError> {
    match args.what {
        What::Pairs => {
            for pair in default_lexicon().pairs() {
                println!("{}\t{}", pair.left, pair.right);
            }
        }
        What::Occupations => {
            for occupation in default_lexicon().occupations() {
                println!("{occupation}");
            }
        }
        What::TemplatesCoref => {
            for template in default_coref_templates() {
                println!("{template}");
            }
        }
        What::TemplatesLm => {
            for template in default_lm_templates() {
                println!("{template}");
            }
        }
    }
    Ok(())
}

fn read_file(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::io(format!("{}: {e}", path.display())))
}
