//! `xferlat`: pronunciation-variant graph compiler and LF-MMI toolkit.
//!
//! Exit codes: 0 success, 1 runtime computation failure, 2 usage or
//! validation error. Diagnostics go to standard error; reports are TSV.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use xferlat_core::error::Error;
use xferlat_core::graph::{self, ContextConfig, ContextMode};
use xferlat_core::inventory::{self, Language, UnifiedInventory};
use xferlat_core::lexicon::{self, Lexicon};
use xferlat_core::lfmmi;
use xferlat_core::rules::{self, RuleSet};
use xferlat_core::train::{self, SyntheticConfig, ToyOptions, TrainOptions};
use xferlat_core::wfst;

mod manifest;

#[derive(Parser)]
#[command(
    name = "xferlat",
    version,
    about = "Pronunciation-variant graph compiler and LF-MMI toolkit",
    propagate_version = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Phoneme inventory operations
    #[command(subcommand)]
    Inventory(InventoryCmd),
    /// Lexicon and variant expansion operations
    #[command(subcommand)]
    Lexicon(LexiconCmd),
    /// Numerator/denominator graph compilation
    #[command(subcommand)]
    Graph(GraphCmd),
    /// LF-MMI objective computation
    #[command(subcommand)]
    Lfmmi(LfmmiCmd),
    /// Synthetic training demonstration
    #[command(subcommand)]
    Train(TrainCmd),
    /// Run every stage from one config file
    Pipeline(PipelineArgs),
}

#[derive(Subcommand)]
enum InventoryCmd {
    /// Tie an L2 inventory into an L1 inventory
    Tie(TieArgs),
}

#[derive(Args)]
struct TieArgs {
    /// L1 (English) inventory file
    #[arg(long)]
    l1: PathBuf,
    /// L2 (Korean) inventory file
    #[arg(long)]
    l2: PathBuf,
    /// Output path for the unified inventory
    #[arg(long)]
    out: PathBuf,
    /// Optional TSV tie report path
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Subcommand)]
enum LexiconCmd {
    /// Expand a word's pronunciations through the transfer rules
    Expand(ExpandArgs),
}

#[derive(Args)]
struct ExpandArgs {
    /// Unified inventory file
    #[arg(long)]
    inventory: PathBuf,
    /// CMUDict-format lexicon
    #[arg(long)]
    lexicon: PathBuf,
    /// Transfer rule file
    #[arg(long)]
    rules: PathBuf,
    /// Word to expand
    #[arg(long)]
    word: String,
    /// Also write the word acceptor in AT&T text format
    #[arg(long)]
    fst: Option<PathBuf>,
    /// Symbol table sidecar to write next to --fst
    #[arg(long)]
    symbols: Option<PathBuf>,
}

#[derive(Subcommand)]
enum GraphCmd {
    /// Compile the numerator graph for a transcript
    CompileNum(CompileNumArgs),
    /// Compile the shared denominator graph
    CompileDen(CompileDenArgs),
}

#[derive(Args)]
struct CompileNumArgs {
    #[arg(long)]
    inventory: PathBuf,
    #[arg(long)]
    lexicon: PathBuf,
    #[arg(long)]
    rules: PathBuf,
    /// Space-separated word sequence
    #[arg(long)]
    transcript: String,
    /// Context mode: monophone or left_biphone
    #[arg(long, default_value = "left_biphone")]
    context: String,
    /// Insert optional silence around words
    #[arg(long, default_value = "on", value_parser = ["on", "off"])]
    silence: String,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct CompileDenArgs {
    #[arg(long)]
    inventory: PathBuf,
    #[arg(long)]
    lexicon: PathBuf,
    #[arg(long)]
    rules: PathBuf,
    #[arg(long, default_value = "left_biphone")]
    context: String,
    /// Denominator language model: bigram or uniform
    #[arg(long, default_value = "bigram", value_parser = ["bigram", "uniform"])]
    den: String,
    /// Add-k smoothing constant for the bigram
    #[arg(long, default_value_t = 1.0)]
    add_k: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Subcommand)]
enum LfmmiCmd {
    /// Compute the objective for one score matrix
    Score(ScoreArgs),
}

#[derive(Args)]
struct ScoreArgs {
    /// Numerator graph file
    #[arg(long)]
    num: PathBuf,
    /// Denominator graph file
    #[arg(long)]
    den: PathBuf,
    /// TSV score matrix: `T C` header then T rows of C log-scores
    #[arg(long)]
    scores: PathBuf,
    /// Optional gradient dump path (TSV, same shape as the scores)
    #[arg(long)]
    grad: Option<PathBuf>,
}

#[derive(Subcommand)]
enum TrainCmd {
    /// Train multi-candidate vs canonical-only models on synthetic data
    Toy(ToyArgs),
}

#[derive(Args)]
struct ToyArgs {
    #[arg(long)]
    inventory: PathBuf,
    #[arg(long)]
    lexicon: PathBuf,
    #[arg(long)]
    rules: PathBuf,
    /// Output run directory (created if absent)
    #[arg(long)]
    out: PathBuf,
    /// Master seed; every random stream derives from it
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Per-position probability of a non-canonical realization
    #[arg(long, default_value_t = 0.7)]
    variant_prob: f64,
    #[arg(long, default_value_t = 40)]
    epochs: usize,
    #[arg(long, default_value_t = 1.0)]
    lr: f64,
    #[arg(long, default_value_t = 32)]
    batch: usize,
    #[arg(long, default_value_t = 500)]
    train_n: usize,
    #[arg(long, default_value_t = 200)]
    test_n: usize,
    /// Feature dimensionality
    #[arg(long, default_value_t = 16)]
    dim: usize,
    /// Gaussian noise level around phone means
    #[arg(long, default_value_t = 0.5)]
    sigma: f64,
    #[arg(long, default_value_t = 3)]
    frames_min: usize,
    #[arg(long, default_value_t = 8)]
    frames_max: usize,
    /// Hidden layer width (0 for the plain linear scorer)
    #[arg(long, default_value_t = 0)]
    hidden: usize,
    /// Add-k smoothing for the denominator bigram
    #[arg(long, default_value_t = 1.0)]
    add_k: f64,
}

#[derive(Args)]
struct PipelineArgs {
    /// key=value config file, one entry per line
    #[arg(long)]
    config: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

/// 1 for computation failures, 2 for input/validation problems.
fn exit_code(e: &Error) -> u8 {
    match e {
        Error::NoAcceptingPath(_)
        | Error::Cyclic(_)
        | Error::EpsilonCycle(_)
        | Error::PathOverflow(_) => 1,
        _ => 2,
    }
}

fn read_file(path: &Path) -> Result<String, Error> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))
}

fn write_file(path: &Path, contents: &str) -> Result<(), Error> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir)
                .map_err(|e| Error::io(dir.display().to_string(), e))?;
        }
    }
    std::fs::write(path, contents).map_err(|e| Error::io(path.display().to_string(), e))
}

fn load_unified(path: &Path) -> Result<UnifiedInventory, Error> {
    inventory::parse_unified(&read_file(path)?)
}

fn load_lexicon(path: &Path, inv: &UnifiedInventory) -> Result<Lexicon, Error> {
    lexicon::parse_lexicon(&read_file(path)?, inv)
}

fn load_rules(path: &Path, inv: &UnifiedInventory) -> Result<RuleSet, Error> {
    rules::parse_rules(&read_file(path)?, inv)
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Inventory(InventoryCmd::Tie(args)) => cmd_inventory_tie(args),
        Command::Lexicon(LexiconCmd::Expand(args)) => cmd_lexicon_expand(args),
        Command::Graph(GraphCmd::CompileNum(args)) => cmd_compile_num(args),
        Command::Graph(GraphCmd::CompileDen(args)) => cmd_compile_den(args),
        Command::Lfmmi(LfmmiCmd::Score(args)) => cmd_lfmmi_score(args),
        Command::Train(TrainCmd::Toy(args)) => cmd_train_toy(&args),
        Command::Pipeline(args) => cmd_pipeline(args),
    }
}

fn tie_report(unified: &UnifiedInventory) -> String {
    let mut report = String::new();
    report.push_str("l2\tl1\n");
    for (l2, l1) in unified.ties() {
        writeln!(report, "{l2}\t{l1}").unwrap();
    }
    writeln!(report, "# ties\t{}", unified.ties().count()).unwrap();
    writeln!(
        report,
        "# unified\t{} ({} consonants + {} vowels, +1 silence)",
        unified.speech_count(),
        unified.consonant_count(),
        unified.vowel_count()
    )
    .unwrap();
    report
}

fn cmd_inventory_tie(args: TieArgs) -> Result<(), Error> {
    let l1 = inventory::parse_inventory(&read_file(&args.l1)?, Language::English)?;
    let l2 = inventory::parse_inventory(&read_file(&args.l2)?, Language::Korean)?;
    let unified = inventory::tie_inventories(&l1, &l2)?;
    write_file(&args.out, &inventory::serialize_unified(&unified))?;
    if let Some(path) = &args.report {
        write_file(path, &tie_report(&unified))?;
    }
    println!(
        "tied {} + {} phonemes -> {} speech phonemes ({} ties); wrote {}",
        l1.len(),
        l2.len(),
        unified.speech_count(),
        unified.ties().count(),
        args.out.display()
    );
    Ok(())
}

fn cmd_lexicon_expand(args: ExpandArgs) -> Result<(), Error> {
    let inv = load_unified(&args.inventory)?;
    let lex = load_lexicon(&args.lexicon, &inv)?;
    let ruleset = load_rules(&args.rules, &inv)?;
    let word = args.word.to_uppercase();
    let prons = lex
        .pronunciations(&word)
        .ok_or_else(|| Error::validation(format!("word '{word}' not in lexicon")))?;
    for pron in prons {
        let vs = rules::expand_pronunciation(&word, pron, &ruleset, &inv)?;
        println!("{word}\t{} variants", vs.variants.len());
        for v in &vs.variants {
            println!("  {}", v.join(" "));
        }
    }
    if let Some(fst_path) = &args.fst {
        let fst = lexicon::build_word_fst::<f64>(&word, &lex, &ruleset, &inv)?;
        write_file(fst_path, &wfst::to_text(&fst))?;
        if let Some(sym_path) = &args.symbols {
            write_file(sym_path, &inv.symbol_table().to_text())?;
        }
    }
    Ok(())
}

fn cmd_compile_num(args: CompileNumArgs) -> Result<(), Error> {
    let inv = load_unified(&args.inventory)?;
    let lex = load_lexicon(&args.lexicon, &inv)?;
    let ruleset = load_rules(&args.rules, &inv)?;
    let mode: ContextMode = args.context.parse()?;
    let transcript: Vec<String> = args
        .transcript
        .split_whitespace()
        .map(|w| w.to_uppercase())
        .collect();
    let fsa = lexicon::build_utterance_fsa::<f64>(
        &transcript,
        &lex,
        &ruleset,
        &inv,
        args.silence == "on",
    )?;
    let cfg = ContextConfig::new(mode, inv.num_phonemes());
    let compiled = graph::compile_numerator(&fsa.fst, cfg)?;
    write_file(&args.out, &graph::serialize_graph(&compiled))?;
    println!(
        "numerator for '{}': {} states, {} arcs -> {}",
        transcript.join(" "),
        compiled.fst.num_states(),
        compiled.fst.num_arcs(),
        args.out.display()
    );
    Ok(())
}

fn cmd_compile_den(args: CompileDenArgs) -> Result<(), Error> {
    let inv = load_unified(&args.inventory)?;
    let lex = load_lexicon(&args.lexicon, &inv)?;
    let ruleset = load_rules(&args.rules, &inv)?;
    let mode: ContextMode = args.context.parse()?;
    let cfg = ContextConfig::new(mode, inv.num_phonemes());
    let compiled = if args.den == "uniform" {
        graph::compile_uniform_denominator::<f64>(cfg)?
    } else {
        let table = inv.symbol_table();
        let mut corpus: Vec<Vec<usize>> = Vec::new();
        for word in lex.words() {
            for pron in lex.pronunciations(word).unwrap() {
                let vs = rules::expand_pronunciation(word, pron, &ruleset, &inv)?;
                for v in vs.variants {
                    corpus.push(
                        v.iter()
                            .map(|s| (table.id(s).unwrap() - 1) as usize)
                            .collect(),
                    );
                }
            }
        }
        let lm = graph::estimate_phone_bigram(&corpus, inv.num_phonemes(), args.add_k)?;
        graph::compile_denominator::<f64>(&lm, cfg)?
    };
    write_file(&args.out, &graph::serialize_graph(&compiled))?;
    println!(
        "denominator ({}): {} states, {} arcs -> {}",
        args.den,
        compiled.fst.num_states(),
        compiled.fst.num_arcs(),
        args.out.display()
    );
    Ok(())
}

fn cmd_lfmmi_score(args: ScoreArgs) -> Result<(), Error> {
    let num = graph::parse_graph::<f64>(&read_file(&args.num)?)?;
    let den = graph::parse_graph::<f64>(&read_file(&args.den)?)?;
    let scores = lfmmi::AcousticScores::<f64>::parse_tsv(&read_file(&args.scores)?)?;
    let result = lfmmi::lfmmi(&num, &den, &scores)?;
    println!("objective\t{:.10}", result.objective);
    println!("num_logprob\t{:.10}", result.num_logprob);
    println!("den_logprob\t{:.10}", result.den_logprob);
    if let Some(path) = &args.grad {
        let mut out = String::new();
        writeln!(out, "{}\t{}", scores.num_frames, scores.num_pdfs).unwrap();
        for row in result.gradient_rows(scores.num_pdfs) {
            let line: Vec<String> = row.iter().map(|v| format!("{v:.10e}")).collect();
            writeln!(out, "{}", line.join("\t")).unwrap();
        }
        write_file(path, &out)?;
    }
    Ok(())
}

fn cmd_train_toy(args: &ToyArgs) -> Result<(), Error> {
    let inv = load_unified(&args.inventory)?;
    let lex = load_lexicon(&args.lexicon, &inv)?;
    let ruleset = load_rules(&args.rules, &inv)?;
    let opts = ToyOptions {
        seed: args.seed,
        variant_prob: args.variant_prob,
        train_n: args.train_n,
        test_n: args.test_n,
        synth: SyntheticConfig {
            feature_dim: args.dim,
            noise_sigma: args.sigma,
            frames_per_phone: (args.frames_min, args.frames_max),
            seed: args.seed,
        },
        train: TrainOptions {
            learning_rate: args.lr,
            epochs: args.epochs,
            batch_size: args.batch,
        },
        hidden: if args.hidden == 0 {
            None
        } else {
            Some(args.hidden)
        },
        add_k: args.add_k,
    };
    let outcome = train::run_toy::<f64>(&lex, &ruleset, &inv, &opts)?;

    let mut loss_tsv = String::from("epoch\tneg_objective\n");
    for (epoch, loss) in outcome.multi.loss_trace.iter().enumerate() {
        writeln!(loss_tsv, "{epoch}\t{loss:.10}").unwrap();
    }
    write_file(&args.out.join("loss.tsv"), &loss_tsv)?;

    let mut report_tsv = String::from("condition\trecovery\n");
    writeln!(report_tsv, "multi\t{:.6}", outcome.multi.recovery).unwrap();
    writeln!(report_tsv, "canonical\t{:.6}", outcome.canonical.recovery).unwrap();
    writeln!(report_tsv, "chance\t{:.6}", outcome.chance_rate).unwrap();
    writeln!(report_tsv, "chance_3sigma\t{:.6}", 3.0 * outcome.chance_sigma).unwrap();
    write_file(&args.out.join("report.tsv"), &report_tsv)?;

    let model_path = args.out.join("model.bin");
    std::fs::write(&model_path, outcome.multi_model.to_bytes())
        .map_err(|e| Error::io(model_path.display().to_string(), e))?;

    println!(
        "toy run: multi recovery {:.3}, canonical {:.3}, chance {:.3} (+3σ {:.3}); \
         phones {:?}; skipped {}",
        outcome.multi.recovery,
        outcome.canonical.recovery,
        outcome.chance_rate,
        outcome.chance_rate + 3.0 * outcome.chance_sigma,
        outcome.phones,
        outcome.multi.skipped,
    );
    Ok(())
}

#[derive(Debug, Default)]
struct PipelineConfig {
    l1_inventory: PathBuf,
    l2_inventory: PathBuf,
    rules: PathBuf,
    lexicon: PathBuf,
    toy_lexicon: Option<PathBuf>,
    toy_rules: Option<PathBuf>,
    transcript: String,
    out_dir: PathBuf,
    seed: u64,
    variant_prob: f64,
    epochs: usize,
    context: String,
}

fn parse_pipeline_config(text: &str, base: &Path) -> Result<PipelineConfig, Error> {
    let mut cfg = PipelineConfig {
        transcript: "THANK".to_string(),
        seed: 42,
        variant_prob: 0.7,
        epochs: 40,
        context: "left_biphone".to_string(),
        ..Default::default()
    };
    let mut seen = [false; 5];
    let resolve = |v: &str| -> PathBuf {
        let p = PathBuf::from(v);
        if p.is_absolute() {
            p
        } else {
            base.join(p)
        }
    };
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::parse(i + 1, format!("expected key=value, got '{line}'")))?;
        let (key, value) = (key.trim(), value.trim());
        let bad_num = |k: &str| Error::parse(i + 1, format!("bad numeric value for '{k}'"));
        match key {
            "l1_inventory" => {
                cfg.l1_inventory = resolve(value);
                seen[0] = true;
            }
            "l2_inventory" => {
                cfg.l2_inventory = resolve(value);
                seen[1] = true;
            }
            "rules" => {
                cfg.rules = resolve(value);
                seen[2] = true;
            }
            "lexicon" => {
                cfg.lexicon = resolve(value);
                seen[3] = true;
            }
            "out_dir" => {
                cfg.out_dir = resolve(value);
                seen[4] = true;
            }
            "toy_lexicon" => cfg.toy_lexicon = Some(resolve(value)),
            "toy_rules" => cfg.toy_rules = Some(resolve(value)),
            "transcript" => cfg.transcript = value.to_string(),
            "seed" => cfg.seed = value.parse().map_err(|_| bad_num("seed"))?,
            "variant_prob" => {
                cfg.variant_prob = value.parse().map_err(|_| bad_num("variant_prob"))?
            }
            "epochs" => cfg.epochs = value.parse().map_err(|_| bad_num("epochs"))?,
            "context" => cfg.context = value.to_string(),
            other => return Err(Error::validation(format!("unknown config key '{other}'"))),
        }
    }
    let names = ["l1_inventory", "l2_inventory", "rules", "lexicon", "out_dir"];
    for (ok, name) in seen.iter().zip(names) {
        if !ok {
            return Err(Error::validation(format!("missing config key '{name}'")));
        }
    }
    Ok(cfg)
}

/// One-shot pipeline: tie, expand, compile both graphs, train, manifest.
fn cmd_pipeline(args: PipelineArgs) -> Result<(), Error> {
    let text = read_file(&args.config)?;
    let base = args
        .config
        .parent()
        .map(Path::to_path_buf)
        .unwrap_or_default();
    let cfg = parse_pipeline_config(&text, &base)?;
    let out = &cfg.out_dir;

    cmd_inventory_tie(TieArgs {
        l1: cfg.l1_inventory.clone(),
        l2: cfg.l2_inventory.clone(),
        out: out.join("unified.inv"),
        report: None,
    })?;
    let inv = load_unified(&out.join("unified.inv"))?;
    let lex = load_lexicon(&cfg.lexicon, &inv)?;
    let ruleset = load_rules(&cfg.rules, &inv)?;

    let mut variants_tsv = String::from("word\tvariant\n");
    for word in lex.words() {
        for pron in lex.pronunciations(word).unwrap() {
            let vs = rules::expand_pronunciation(word, pron, &ruleset, &inv)?;
            for v in &vs.variants {
                writeln!(variants_tsv, "{word}\t{}", v.join(" ")).unwrap();
            }
        }
    }
    write_file(&out.join("variants.tsv"), &variants_tsv)?;

    cmd_compile_num(CompileNumArgs {
        inventory: out.join("unified.inv"),
        lexicon: cfg.lexicon.clone(),
        rules: cfg.rules.clone(),
        transcript: cfg.transcript.clone(),
        context: cfg.context.clone(),
        silence: "on".to_string(),
        out: out.join("num.fst"),
    })?;
    cmd_compile_den(CompileDenArgs {
        inventory: out.join("unified.inv"),
        lexicon: cfg.lexicon.clone(),
        rules: cfg.rules.clone(),
        context: cfg.context.clone(),
        den: "bigram".to_string(),
        add_k: 1.0,
        out: out.join("den.fst"),
    })?;

    cmd_train_toy(&ToyArgs {
        inventory: out.join("unified.inv"),
        lexicon: cfg.toy_lexicon.unwrap_or_else(|| cfg.lexicon.clone()),
        rules: cfg.toy_rules.unwrap_or_else(|| cfg.rules.clone()),
        out: out.clone(),
        seed: cfg.seed,
        variant_prob: cfg.variant_prob,
        epochs: cfg.epochs,
        lr: 1.0,
        batch: 32,
        train_n: 500,
        test_n: 200,
        dim: 16,
        sigma: 0.5,
        frames_min: 3,
        frames_max: 8,
        hidden: 0,
        add_k: 1.0,
    })?;

    let artifact_names = [
        "unified.inv",
        "variants.tsv",
        "num.fst",
        "den.fst",
        "loss.tsv",
        "report.tsv",
    ];
    let mut entries = Vec::new();
    for name in artifact_names {
        let path = out.join(name);
        let bytes =
            std::fs::read(&path).map_err(|e| Error::io(path.display().to_string(), e))?;
        entries.push((name.to_string(), manifest::sha256_hex(&bytes)));
    }
    write_file(&out.join("manifest.tsv"), &manifest::render(&entries))?;
    println!(
        "pipeline complete: {} artifacts in {}",
        entries.len(),
        out.display()
    );
    Ok(())
}
