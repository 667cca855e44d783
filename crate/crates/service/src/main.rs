use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use phraselette::api::{self, AppState};
use phraselette::backend::{build_services, load_presets};
use phraselette::cli::{self, CliError, ConstraintArg, RunSpec, SetArg, WellArg, EXIT_BACKEND};
use phraselette::config::{BackendKind, Config};
use phraselette_core::orchestrator::Orchestrator;
use phraselette_core::phonology::{render_plain, Phonology};
use phraselette_core::pos::{bundled_lexicon, load_tagged_corpus, tagger_from_path, default_tagger, PerceptronTagger, Tagger};
use phraselette_core::wells::WellRegistry;
use phraselette_core::Execution;

#[derive(Parser)]
#[command(name = "phraselette", version, about = "Constraint-driven phrase search")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run wells on one inlet of a text and print the pooled rephrasings.
    Run(RunArgs),
    /// Serve the HTTP API.
    Serve(ServeArgs),
    /// Train POS perceptron weights from a tagged corpus.
    PosTrain(PosTrainArgs),
    /// Tag the words of a phrase.
    Tag(TagArgs),
    /// Print the pronunciation of a phrase.
    Pronounce(PronounceArgs),
}

#[derive(Args)]
struct BackendArgs {
    /// TOML or JSON config file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum)]
    backend: Option<BackendKind>,
    #[arg(long)]
    logit_fixture: Option<PathBuf>,
    #[arg(long)]
    instruct_fixture: Option<PathBuf>,
    /// Evaluate wells and beam expansions on one thread.
    #[arg(long)]
    sequential: bool,
}

impl BackendArgs {
    fn config(&self) -> Result<Config, CliError> {
        let mut cfg = match &self.config {
            Some(p) => Config::load(p).map_err(|e| CliError::Usage(e.to_string()))?,
            None => Config::default(),
        };
        if let Some(b) = self.backend {
            cfg.backend = b;
        }
        if self.logit_fixture.is_some() {
            cfg.logit_fixture = self.logit_fixture.clone();
        }
        if self.instruct_fixture.is_some() {
            cfg.instruct_fixture = self.instruct_fixture.clone();
        }
        Ok(cfg)
    }

    fn exec(&self) -> Execution {
        if self.sequential {
            Execution::Sequential
        } else {
            Execution::default()
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Table,
}

#[derive(Args)]
struct RunArgs {
    /// File holding the working text; `-` reads standard input.
    #[arg(long)]
    text: PathBuf,
    /// Inlet as START:END character offsets.
    #[arg(long)]
    inlet: String,
    /// KIND or KIND:DESCRIPTION; repeatable.
    #[arg(long = "well")]
    wells: Vec<String>,
    /// words:MIN-MAX, syllables:MIN-MAX, pos:TAGS[:MODE],
    /// sound:[PHONEMES][:MODE] or band:[MIN]:[MAX]; repeatable.
    #[arg(long = "constraint")]
    constraints: Vec<String>,
    /// WELL.PARAM=VALUE well parameter; repeatable.
    #[arg(long = "set")]
    sets: Vec<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
    /// Seconds to wait for all wells.
    #[arg(long, default_value_t = 120)]
    timeout: u64,
    #[command(flatten)]
    backend: BackendArgs,
}

#[derive(Args)]
struct ServeArgs {
    /// Listen address; overrides the config file.
    #[arg(long)]
    bind: Option<String>,
    /// Session directory; overrides the config file.
    #[arg(long)]
    sessions_dir: Option<PathBuf>,
    #[command(flatten)]
    backend: BackendArgs,
}

#[derive(Args)]
struct PosTrainArgs {
    /// Tagged corpus, one phrase per line as word/TAG pairs.
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 8)]
    iterations: usize,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Held-out tagged phrases to report token accuracy on.
    #[arg(long)]
    eval: Option<PathBuf>,
}

#[derive(Args)]
struct TagArgs {
    /// Weights file; defaults to the bundled model.
    #[arg(long)]
    pos_model: Option<PathBuf>,
    #[arg(required = true)]
    phrase: Vec<String>,
}

#[derive(Args)]
struct PronounceArgs {
    /// CMU-format dictionary; defaults to the bundled subset.
    #[arg(long)]
    lexicon: Option<PathBuf>,
    /// One line of phonemes without stress marks.
    #[arg(long)]
    plain: bool,
    #[arg(required = true)]
    phrase: Vec<String>,
}

fn read_text(path: &Path) -> Result<String, CliError> {
    if path.as_os_str() == "-" {
        let mut s = String::new();
        std::io::stdin()
            .read_to_string(&mut s)
            .map_err(|e| CliError::Usage(format!("reading standard input: {e}")))?;
        return Ok(s);
    }
    std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("reading {}: {e}", path.display())))
}

fn parse_all<T: std::str::FromStr<Err = CliError>>(items: &[String]) -> Result<Vec<T>, CliError> {
    items.iter().map(|s| s.parse()).collect()
}

fn run(args: RunArgs) -> Result<ExitCode, CliError> {
    let inlet = cli::parse_inlet(&args.inlet)?;
    let wells: Vec<WellArg> = parse_all(&args.wells)?;
    let constraints: Vec<ConstraintArg> = parse_all(&args.constraints)?;
    let sets: Vec<SetArg> = parse_all(&args.sets)?;
    let configs = cli::build_configs(&wells, &constraints, &sets, &WellRegistry::builtin())?;
    let text = read_text(&args.text)?;
    let cfg = args.backend.config()?;
    let services = build_services(&cfg, args.backend.exec())?;
    let spec = RunSpec {
        text,
        inlet,
        configs,
        seed: args.seed,
        timeout: Duration::from_secs(args.timeout),
    };
    let out = cli::run(&spec, services)?;
    let rendered = match args.format {
        Format::Json => cli::render_json(&out),
        Format::Table => cli::render_table(&out),
    };
    std::io::stdout()
        .write_all(rendered.as_bytes())
        .map_err(|e| CliError::Io(e.to_string()))?;
    let failures = out.backend_failures();
    if failures.is_empty() {
        return Ok(ExitCode::SUCCESS);
    }
    for (id, reason) in failures {
        eprintln!("well {id}: {reason}");
    }
    Ok(ExitCode::from(EXIT_BACKEND as u8))
}

fn serve(args: ServeArgs) -> Result<ExitCode, CliError> {
    let mut cfg = args.backend.config()?;
    if args.sessions_dir.is_some() {
        cfg.sessions_dir = args.sessions_dir.clone();
    }
    let bind = args.bind.or(cfg.bind.clone()).unwrap_or_else(|| "127.0.0.1:7878".to_owned());
    let services = build_services(&cfg, args.backend.exec())?;
    let presets = load_presets(&cfg)?;
    let orch = Orchestrator::new(Arc::new(WellRegistry::builtin()), services);
    let state = AppState::new(orch, presets, cfg.sessions_dir.clone()).map_err(|e| CliError::Usage(e.to_string()))?;
    let rt = tokio::runtime::Runtime::new().map_err(|e| CliError::Io(e.to_string()))?;
    rt.block_on(api::serve(Arc::new(state), &bind))
        .map_err(|e| CliError::Io(format!("serving on {bind}: {e}")))?;
    Ok(ExitCode::SUCCESS)
}

fn pos_train(args: PosTrainArgs) -> Result<ExitCode, CliError> {
    let corpus = load_tagged_corpus(&read_text(&args.corpus)?).map_err(|e| CliError::Usage(e.to_string()))?;
    let model = PerceptronTagger::train(&corpus, bundled_lexicon(), args.iterations, args.seed);
    std::fs::write(&args.out, model.to_model_string())
        .map_err(|e| CliError::Io(format!("writing {}: {e}", args.out.display())))?;
    eprintln!("trained on {} phrases", corpus.len());
    if let Some(eval) = &args.eval {
        let held = load_tagged_corpus(&read_text(eval)?).map_err(|e| CliError::Usage(e.to_string()))?;
        let (mut right, mut total) = (0usize, 0usize);
        for phrase in &held {
            let words: Vec<&str> = phrase.iter().map(|(w, _)| w.as_str()).collect();
            for (guess, (_, truth)) in model.tag_words(&words).iter().zip(phrase) {
                right += usize::from(guess == truth);
                total += 1;
            }
        }
        println!("accuracy {:.4} ({right}/{total})", right as f64 / total.max(1) as f64);
    }
    Ok(ExitCode::SUCCESS)
}

fn tag(args: TagArgs) -> Result<ExitCode, CliError> {
    let tagger: Arc<dyn Tagger> = match &args.pos_model {
        Some(p) => tagger_from_path(Some(p)).map_err(|e| CliError::Usage(e.to_string()))?,
        None => default_tagger(),
    };
    let line: Vec<String> = tagger
        .tag_phrase(&args.phrase.join(" "))
        .into_iter()
        .map(|(w, t)| format!("{w}/{}", t.as_str()))
        .collect();
    println!("{}", line.join(" "));
    Ok(ExitCode::SUCCESS)
}

fn pronounce(args: PronounceArgs) -> Result<ExitCode, CliError> {
    let phonology = match &args.lexicon {
        Some(p) => Phonology::from_path(p).map_err(|e| CliError::Usage(e.to_string()))?,
        None => Phonology::bundled(),
    };
    let phrase = args.phrase.join(" ");
    if args.plain {
        let all = phonology
            .pronounce_phrase(&phrase)
            .map_err(|e| CliError::Usage(e.to_string()))?;
        println!("{}", render_plain(&all));
        return Ok(ExitCode::SUCCESS);
    }
    for p in phonology.pronounce_words(&phrase) {
        let rendered: Vec<String> = p.phonemes.iter().map(ToString::to_string).collect();
        let source = serde_json::to_value(p.source).expect("source serializes");
        println!("{}\t{}\t{}", p.word, rendered.join(" "), source.as_str().unwrap_or(""));
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(a) => run(a),
        Command::Serve(a) => serve(a),
        Command::PosTrain(a) => pos_train(a),
        Command::Tag(a) => tag(a),
        Command::Pronounce(a) => pronounce(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("phraselette: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
