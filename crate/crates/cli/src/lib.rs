//! The `govaudit` command line: argument handling, wiring and report output.

use std::collections::BTreeSet;
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};

use govaudit::chain::{FixtureWorld, Mode, OfflineTransport, Provider, ProviderConfig, Transport};
use govaudit::docs::{load_rules, DocAuditor, DEFAULT_CHUNK_OVERLAP, DEFAULT_CHUNK_SIZE};
use govaudit::evm::{disassemble, strip_push_arguments};
use govaudit::governance::{audit_governance, load_deployers, SoundnessConfig};
use govaudit::primitives::{decode_hex, Address};
use govaudit::proposal::{Lexicon, ProposalAuditor, ProposalRecord, DEFAULT_TEXT_THRESHOLD};
use govaudit::registry::{Strategies, StrategyContext};
use govaudit::report::{
    render_text, AuditReport, Diagnostic, ExitStatus, ProvenanceMode, SimilarityVerdict, Subject, SubjectKind, Verdicts,
};
use govaudit::similarity::{load_templates, SimilarityDecision, DEFAULT_NGRAM, DEFAULT_THRESHOLD};

#[derive(Debug, Parser)]
#[command(name = "govaudit", version, about = "Audit DAO governance contracts, proposals and documentation")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// Chain whose data is audited.
    #[arg(long, global = true, env = "GOVAUDIT_CHAIN_ID", default_value_t = 1)]
    pub chain_id: u64,
    /// live, record or replay.
    #[arg(long, global = true, env = "GOVAUDIT_MODE", default_value = "live")]
    pub mode: Mode,
    /// Response cache for record and replay.
    #[arg(long, global = true, env = "GOVAUDIT_CACHE_DIR")]
    pub cache_dir: Option<PathBuf>,
    /// Serve chain data from a fixture world file instead of the network.
    #[arg(long, global = true)]
    pub fixtures: Option<PathBuf>,
    /// Emit the JSON report instead of text.
    #[arg(long, global = true)]
    pub json: bool,
    /// Opcode similarity kernel.
    #[arg(long, global = true, default_value = "jaccard")]
    pub similarity_kernel: String,
    /// Opcode n-gram length.
    #[arg(long, global = true, default_value_t = DEFAULT_NGRAM)]
    pub ngram: usize,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Soundness, independence and immutability of a governance contract.
    Governance(GovernanceArgs),
    /// Description/code consistency and target immutability of a proposal file.
    Proposal(ProposalArgs),
    /// The six documentation rules over a documentation file.
    Docs(DocsArgs),
    /// Opcode similarity of two runtime bytecode files.
    Similarity(SimilarityArgs),
}

#[derive(Debug, Args)]
pub struct GovernanceArgs {
    pub address: Address,
    /// Template records (JSON lines), a file or a directory of them.
    #[arg(long)]
    pub templates: Option<PathBuf>,
    /// Platform deployer list.
    #[arg(long)]
    pub deployers: Option<PathBuf>,
    /// Template similarity threshold.
    #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
    pub threshold: f64,
    /// Governance contracts whose source is documented as open.
    #[arg(long = "documented-open-source", value_delimiter = ',')]
    pub documented_open_source: Vec<Address>,
}

#[derive(Debug, Args)]
pub struct ProposalArgs {
    pub file: PathBuf,
    /// Description/code similarity threshold.
    #[arg(long, default_value_t = DEFAULT_TEXT_THRESHOLD)]
    pub threshold: f64,
    #[arg(long, default_value = "lexical")]
    pub text_similarity: String,
    #[arg(long, default_value = "heuristic")]
    pub classifier: String,
    #[arg(long, default_value = "pattern")]
    pub parser: String,
    /// Directory with verbs.txt, synonyms.txt and symbols.txt overriding the built-in lists.
    #[arg(long)]
    pub lexicon_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DocsArgs {
    pub file: PathBuf,
    /// LLM client; defaults to `script` when --llm-script is given, else `http`.
    #[arg(long)]
    pub llm: Option<String>,
    /// Scripted LLM responses.
    #[arg(long)]
    pub llm_script: Option<PathBuf>,
    /// Question chains replacing the bundled ones.
    #[arg(long)]
    pub question_chains: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_CHUNK_SIZE)]
    pub chunk_size: usize,
    #[arg(long, default_value_t = DEFAULT_CHUNK_OVERLAP)]
    pub chunk_overlap: usize,
}

#[derive(Debug, Args)]
pub struct SimilarityArgs {
    /// Hex text or raw bytecode.
    pub file_a: PathBuf,
    pub file_b: PathBuf,
    #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
    pub threshold: f64,
}

/// A failure before any audit ran.
#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Input(String),
}

impl Failure {
    fn status(&self) -> ExitStatus {
        match self {
            Failure::Usage(_) => ExitStatus::Usage,
            Failure::Input(_) => ExitStatus::Input,
        }
    }
}

fn usage(e: impl std::fmt::Display) -> Failure {
    Failure::Usage(e.to_string())
}

fn input(e: impl std::fmt::Display) -> Failure {
    Failure::Input(e.to_string())
}

/// Chain data for a run: a fixture world or the configured endpoints, with the offline
/// transport standing in for the network in replay mode.
pub fn build_provider(global: &GlobalArgs) -> Result<Provider, Failure> {
    let mut config = ProviderConfig::from_env(global.chain_id).map_err(usage)?;
    config.mode = global.mode;
    if global.cache_dir.is_some() {
        config.cache_dir = global.cache_dir.clone();
    }
    let transport: Arc<dyn Transport> = match (&global.fixtures, global.mode) {
        (_, Mode::Replay) => Arc::new(OfflineTransport::default()),
        (Some(path), _) => Arc::new(FixtureWorld::load(path).map_err(input)?),
        (None, _) => Arc::new(config.http_transport()),
    };
    Provider::new(&config, transport).map_err(usage)
}

fn strategy_context(global: &GlobalArgs) -> StrategyContext {
    StrategyContext {
        ngram: global.ngram,
        ..StrategyContext::default()
    }
}

fn subject(kind: SubjectKind, identifier: impl Into<String>) -> Subject {
    Subject {
        kind,
        identifier: identifier.into(),
    }
}

fn provenance(global: &GlobalArgs) -> ProvenanceMode {
    global.mode.into()
}

fn with_fixture(mut report: AuditReport, global: &GlobalArgs) -> AuditReport {
    report.fixture = global
        .fixtures
        .as_ref()
        .and_then(|p| p.file_name())
        .map(|n| n.to_string_lossy().into_owned());
    report
}

pub fn cmd_governance(global: &GlobalArgs, args: &GovernanceArgs) -> Result<AuditReport, Failure> {
    let strategies = Strategies::builtin();
    let kernel = strategies
        .sequence_similarity
        .create(&global.similarity_kernel, &strategy_context(global))
        .map_err(usage)?;
    let templates = match &args.templates {
        Some(path) => load_templates(path).map_err(input)?,
        None => Vec::new(),
    };
    let deployers = match &args.deployers {
        Some(path) => load_deployers(path).map_err(input)?,
        None => Vec::new(),
    };
    let config = SoundnessConfig {
        templates,
        deployers,
        documented_open_source: args.documented_open_source.iter().copied().collect::<BTreeSet<_>>(),
        threshold: args.threshold,
        kernel,
    };
    let provider = build_provider(global)?;
    let audit = audit_governance(args.address, &provider, &config);
    let report = AuditReport::new(
        subject(SubjectKind::Governance, args.address.to_string()),
        Some(Verdicts::Governance(audit)),
        Vec::new(),
        provenance(global),
    );
    Ok(with_fixture(report, global))
}

pub fn cmd_proposal(global: &GlobalArgs, args: &ProposalArgs) -> Result<AuditReport, Failure> {
    let record = ProposalRecord::load(&args.file).map_err(input)?;
    let lexicon = match &args.lexicon_dir {
        Some(dir) => Lexicon::load_dir(dir).map_err(input)?,
        None => Lexicon::default(),
    };
    let ctx = StrategyContext {
        lexicon: Arc::new(lexicon),
        ..strategy_context(global)
    };
    let strategies = Strategies::builtin();
    let auditor = ProposalAuditor {
        classifier: strategies.classifier.create(&args.classifier, &ctx).map_err(usage)?,
        parser: strategies.parser.create(&args.parser, &ctx).map_err(usage)?,
        similarity: strategies.text_similarity.create(&args.text_similarity, &ctx).map_err(usage)?,
        lexicon: ctx.lexicon.clone(),
        threshold: args.threshold,
    };
    let provider = build_provider(global)?;
    let (verdicts, diagnostics) = match auditor.audit(&record, &provider) {
        Ok(audit) => (Some(Verdicts::Proposal(audit)), Vec::new()),
        Err(e) => (None, vec![Diagnostic::from_proposal(&e)]),
    };
    let report = AuditReport::new(
        subject(SubjectKind::Proposal, record.id.clone()),
        verdicts,
        diagnostics,
        provenance(global),
    );
    Ok(with_fixture(report, global))
}

pub fn cmd_docs(global: &GlobalArgs, args: &DocsArgs) -> Result<AuditReport, Failure> {
    let document = std::fs::read_to_string(&args.file).map_err(|e| input(format!("{}: {e}", args.file.display())))?;
    if args.chunk_size <= args.chunk_overlap {
        return Err(usage("--chunk-size must exceed --chunk-overlap"));
    }
    if let Some(script) = args.llm_script.as_ref().filter(|p| !p.is_file()) {
        return Err(input(format!("{}: no such file", script.display())));
    }
    let name = args
        .llm
        .clone()
        .unwrap_or_else(|| if args.llm_script.is_some() { "script" } else { "http" }.to_string());
    let ctx = StrategyContext {
        llm_script: args.llm_script.clone(),
        ..strategy_context(global)
    };
    let llm = Strategies::builtin().llm.create(&name, &ctx).map_err(usage)?;
    let mut auditor = DocAuditor::new(llm);
    if let Some(path) = &args.question_chains {
        auditor.rules = load_rules(path).map_err(input)?;
    }
    auditor.chunk_size = args.chunk_size;
    auditor.chunk_overlap = args.chunk_overlap;
    let report = auditor.audit_documentation(&document);
    let identifier = args
        .file
        .file_name()
        .map_or_else(|| args.file.display().to_string(), |n| n.to_string_lossy().into_owned());
    // scripted answers are a replay of recorded completions
    let scripted = name == "script";
    let mode = if scripted { ProvenanceMode::Replay } else { provenance(global) };
    let mut out = AuditReport::new(
        subject(SubjectKind::Documentation, identifier),
        Some(Verdicts::Documentation(report)),
        Vec::new(),
        mode,
    );
    if scripted {
        out.fixture = args
            .llm_script
            .as_ref()
            .and_then(|p| p.file_name())
            .map(|n| n.to_string_lossy().into_owned());
    }
    Ok(out)
}

/// Hex text (optional `0x`, whitespace ignored) or, failing that, the raw bytes.
pub fn read_bytecode(path: &Path) -> Result<Vec<u8>, Failure> {
    let bytes = std::fs::read(path).map_err(|e| input(format!("{}: {e}", path.display())))?;
    if let Ok(text) = std::str::from_utf8(&bytes) {
        let compact: String = text.split_whitespace().collect();
        if let Ok(code) = decode_hex(&compact) {
            return Ok(code);
        }
    }
    Ok(bytes)
}

pub fn cmd_similarity(global: &GlobalArgs, args: &SimilarityArgs) -> Result<AuditReport, Failure> {
    let kernel = Strategies::builtin()
        .sequence_similarity
        .create(&global.similarity_kernel, &strategy_context(global))
        .map_err(usage)?;
    let a = strip_push_arguments(&disassemble(&read_bytecode(&args.file_a)?));
    let b = strip_push_arguments(&disassemble(&read_bytecode(&args.file_b)?));
    let verdict = SimilarityVerdict {
        kernel: kernel.name().to_string(),
        ngram: global.ngram,
        decision: SimilarityDecision::new(kernel.score(&a, &b), args.threshold),
        opcode_counts: [a.len(), b.len()],
    };
    let name = |p: &Path| p.file_name().map_or_else(|| p.display().to_string(), |n| n.to_string_lossy().into_owned());
    Ok(AuditReport::new(
        subject(SubjectKind::Similarity, format!("{} {}", name(&args.file_a), name(&args.file_b))),
        Some(Verdicts::Similarity(verdict)),
        Vec::new(),
        ProvenanceMode::Live,
    ))
}

pub fn execute(cli: &Cli) -> Result<AuditReport, Failure> {
    match &cli.command {
        Command::Governance(args) => cmd_governance(&cli.global, args),
        Command::Proposal(args) => cmd_proposal(&cli.global, args),
        Command::Docs(args) => cmd_docs(&cli.global, args),
        Command::Similarity(args) => cmd_similarity(&cli.global, args),
    }
}

/// Parses `args`, runs the command and writes its output; returns the exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { ExitStatus::Usage.code() } else { 0 };
            let target: &mut dyn Write = if e.use_stderr() { stderr } else { stdout };
            let _ = write!(target, "{}", e.render());
            return code;
        }
    };
    match execute(&cli) {
        Ok(report) => {
            let rendered = if cli.global.json {
                report.to_json() + "\n"
            } else {
                render_text(&report)
            };
            let _ = stdout.write_all(rendered.as_bytes());
            report.exit_status().code()
        }
        Err(failure) => {
            let (Failure::Usage(message) | Failure::Input(message)) = &failure;
            let _ = writeln!(stderr, "govaudit: {message}");
            if matches!(failure, Failure::Usage(_)) {
                let _ = writeln!(stderr, "Run `govaudit --help` for usage.");
            }
            failure.status().code()
        }
    }
}
