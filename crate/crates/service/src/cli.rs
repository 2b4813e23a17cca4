//! The `coach` command line.

use std::fs;
use std::io::{self, BufRead, IsTerminal, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use coach_core::{transcript, CoreError, ModelSettings, Orchestrator, OutputItem, Session, SessionStore, TurnOutput};
use coach_eval::coding::keyword_coder;
use coach_eval::report::ProviderInfo;
use coach_eval::transcript::TRANSCRIPT_SUFFIX;
use coach_eval::{
    load_seed_dir, load_transcript, load_transcript_dir, render_counterfactual_report, render_report,
    transcript_metrics, Agent, AnnotatedTranscript, Coder, CounterfactualConfig, ExternalMICode, Harness, Manifest,
    BARRIER_PERSONAS,
};
use coach_healthdata::{HealthStore, StoreConfig};
use coach_llm::{Provider, RecordingProvider, DEFAULT_MODEL, DEFAULT_TEMPERATURE};

use crate::api::{router, AppState};
use crate::config::{build_provider, CommonArgs, ProviderKind, ProviderSettings, ServeArgs, Settings, UsageError};

#[derive(Debug, Parser)]
#[command(name = "coach", version, about = "Physical-activity health coach: API server, terminal chat, data import and evaluation")]
pub struct Cli {
    /// Log filter, e.g. `info` or `coach_core=debug`.
    #[arg(long, env = "COACH_LOG", default_value = "warn", global = true)]
    pub log: String,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Serve the HTTP API.
    Serve(ServeArgs),
    /// Import health records (NDJSON, one record per line) into the data directory.
    Ingest(IngestArgs),
    /// Chat with the coach in the terminal.
    Chat(ChatArgs),
    /// Evaluate conversations.
    #[command(subcommand)]
    Eval(EvalCommand),
    /// Print a stored session.
    ExportSession(ExportArgs),
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    /// Records file, or `-` for standard input.
    pub file: PathBuf,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Args)]
pub struct ChatArgs {
    /// Continue an existing session instead of starting a new one.
    #[arg(long)]
    pub session: Option<String>,
    /// Save every model exchange of this chat to a cassette file.
    #[arg(long)]
    pub record: Option<PathBuf>,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ExportFormat {
    /// Role-prefixed plain text.
    Text,
    /// Annotated transcript JSON, the input format of `eval`.
    Json,
}

#[derive(Debug, Args)]
pub struct ExportArgs {
    pub id: String,
    #[arg(long, value_enum, default_value = "text")]
    pub format: ExportFormat,
    #[command(flatten)]
    pub common: CommonArgs,
}

/// The model that codes coach replies.
#[derive(Debug, Clone, Args)]
pub struct CoderArgs {
    /// Coder backend; `scripted` is a crude keyword coder for smoke runs.
    #[arg(long, env = "COACH_CODER_PROVIDER", value_enum, default_value = "live")]
    pub coder_provider: ProviderKind,
    /// Cassette for the replay coder.
    #[arg(long, env = "COACH_CODER_CASSETTE")]
    pub coder_cassette: Option<PathBuf>,
    #[arg(long, env = "COACH_CODER_MODEL", default_value = DEFAULT_MODEL)]
    pub coder_model: String,
    #[arg(long, env = "COACH_CODER_TEMPERATURE", default_value_t = DEFAULT_TEMPERATURE)]
    pub coder_temperature: f64,
}

#[derive(Debug, Subcommand)]
pub enum EvalCommand {
    /// Code every coach reply with the external MI codes.
    Code {
        /// Session files, transcript files, or directories of them.
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        /// Directory for the coded transcripts.
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        coder: CoderArgs,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Aggregate metrics, CSV tables and SVG charts over transcripts.
    Metrics {
        /// Session files, transcript files, or directories of them.
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        /// Directory for tables, charts and the manifest.
        #[arg(long)]
        out: PathBuf,
    },
    /// Replay seed histories against barrier personas with the full coach and a
    /// system-prompt-only baseline, then code and compare the replies.
    Counterfactual {
        /// Directory of seed history JSON files.
        #[arg(long)]
        histories: PathBuf,
        /// Agents to compare, comma separated.
        #[arg(long, value_delimiter = ',', default_value = "full,baseline")]
        agents: Vec<Agent>,
        /// Runs per (history, persona, agent) cell.
        #[arg(long, default_value_t = 1)]
        repeats: usize,
        /// Cells run in parallel.
        #[arg(long, default_value_t = 4)]
        workers: usize,
        /// Health records the full coach may query; the store is empty otherwise.
        #[arg(long)]
        records: Option<PathBuf>,
        /// Directory for cell results, tables and the manifest.
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        coder: CoderArgs,
        #[command(flatten)]
        common: CommonArgs,
    },
}

pub fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Serve(args) => serve(&args),
        Command::Ingest(args) => ingest(&args),
        Command::Chat(args) => chat(&args),
        Command::Eval(command) => eval(command),
        Command::ExportSession(args) => export_session(&args),
    }
}

fn serve(args: &ServeArgs) -> anyhow::Result<()> {
    let serve = args.resolve()?;
    let settings = &serve.settings;
    // Built outside the runtime: the live client must not be created or
    // dropped on an async thread.
    let provider = settings.build_provider()?;
    let store = Arc::new(settings.open_store()?);
    let sessions = SessionStore::open(settings.sessions_dir())?;
    let orchestrator = Arc::new(Orchestrator::new(provider, store, settings.coach.clone()));
    let app = router(AppState::new(orchestrator.clone(), sessions).with_api_token(serve.api_token.clone()));

    let runtime = tokio::runtime::Builder::new_multi_thread().enable_all().build()?;
    runtime.block_on(async {
        let listener = tokio::net::TcpListener::bind((serve.bind.as_str(), serve.port))
            .await
            .with_context(|| format!("binding {}:{}", serve.bind, serve.port))?;
        eprintln!(
            "coach listening on http://{} (provider {})",
            listener.local_addr()?,
            orchestrator.provider().label()
        );
        axum::serve(listener, app)
            .with_graceful_shutdown(async {
                let _ = tokio::signal::ctrl_c().await;
            })
            .await?;
        anyhow::Ok(())
    })?;
    drop(runtime);
    drop(orchestrator);
    Ok(())
}

fn ingest(args: &IngestArgs) -> anyhow::Result<()> {
    let settings = args.common.resolve()?;
    let store = settings.open_store()?;
    let report = if args.file == Path::new("-") {
        store.ingest_reader(io::stdin().lock())?
    } else {
        let file = fs::File::open(&args.file).with_context(|| format!("opening {}", args.file.display()))?;
        store.ingest_reader(io::BufReader::new(file))?
    };
    println!("accepted: {}", report.accepted);
    println!("duplicates: {}", report.duplicates);
    println!("rejected: {}", report.rejected_count());
    for rejection in &report.rejected {
        eprintln!("  line {}: {}", rejection.line, rejection.reason);
    }
    Ok(())
}

fn print_turn(out: &mut impl Write, session: &Session, turn: &TurnOutput) -> io::Result<()> {
    if let Some(change) = turn.state_change {
        writeln!(out, "[{} -> {}]", change.from, change.to)?;
    }
    for item in &turn.items {
        match item {
            OutputItem::Message { content, .. } => writeln!(out, "coach: {content}")?,
            OutputItem::Visualization { event_id } => match session.event(event_id) {
                Some(event) => writeln!(
                    out,
                    "[chart {}: {} by {}, {} to {}]",
                    event.id,
                    event.chart.source,
                    event.chart.granularity.as_str(),
                    event.chart.start,
                    event.chart.end
                )?,
                None => writeln!(out, "[chart {event_id}]")?,
            },
        }
    }
    Ok(())
}

fn chat(args: &ChatArgs) -> anyhow::Result<()> {
    let settings = args.common.resolve()?;
    let mut provider = settings.build_provider()?;
    let recorder = args.record.as_ref().map(|_| Arc::new(RecordingProvider::new(provider.clone())));
    if let Some(recorder) = &recorder {
        provider = recorder.clone();
    }
    let store = Arc::new(settings.open_store()?);
    let sessions = SessionStore::open(settings.sessions_dir())?;
    let orchestrator = Orchestrator::new(provider, store, settings.coach.clone()).with_session_store(sessions.clone());
    let mut session = match &args.session {
        Some(id) => sessions.load(id)?,
        None => {
            let session = Session::fresh();
            sessions.save(&session)?;
            session
        }
    };
    eprintln!("session {} (state {}); /quit or end of input to leave", session.id, session.state);

    let interactive = io::stdin().is_terminal();
    let mut stdout = io::stdout().lock();
    let mut lines = io::stdin().lock().lines();
    loop {
        if interactive {
            write!(stdout, "you> ")?;
            stdout.flush()?;
        }
        let Some(line) = lines.next().transpose()? else { break };
        let text = line.trim();
        if text == "/quit" {
            break;
        }
        if text.is_empty() {
            continue;
        }
        match orchestrator.handle_user_message(&mut session, text) {
            Ok(turn) => print_turn(&mut stdout, &session, &turn)?,
            Err(CoreError::Provider(err)) => eprintln!("error: {err}; the message was not recorded, try again"),
            Err(err) => return Err(err.into()),
        }
    }
    if let (Some(recorder), Some(path)) = (recorder, &args.record) {
        recorder.cassette().save(path)?;
        eprintln!("cassette saved to {}", path.display());
    }
    Ok(())
}

fn export_session(args: &ExportArgs) -> anyhow::Result<()> {
    let settings = args.common.resolve()?;
    let sessions = SessionStore::open(settings.sessions_dir())?;
    let session = sessions.load(&args.id)?;
    match args.format {
        ExportFormat::Text => print!("{}", transcript(&session)),
        ExportFormat::Json => {
            println!("{}", serde_json::to_string_pretty(&AnnotatedTranscript::from_session(&session))?)
        }
    }
    Ok(())
}

impl CoderArgs {
    fn provider_settings(&self, settings: &Settings) -> anyhow::Result<ProviderSettings> {
        if self.coder_provider == ProviderKind::Replay && self.coder_cassette.is_none() {
            return Err(UsageError("the replay coder needs --coder-cassette".into()).into());
        }
        Ok(ProviderSettings {
            kind: self.coder_provider,
            cassette: self.coder_cassette.clone(),
            ..settings.provider.clone()
        })
    }

    fn model(&self) -> ModelSettings {
        ModelSettings {
            model_id: self.coder_model.clone(),
            temperature: self.coder_temperature,
        }
    }
}

fn provider_info(provider: &dyn Provider, model: &ModelSettings) -> ProviderInfo {
    ProviderInfo {
        provider: provider.label(),
        model_id: model.model_id.clone(),
        temperature: model.temperature,
    }
}

fn load_inputs(inputs: &[PathBuf]) -> anyhow::Result<Vec<AnnotatedTranscript>> {
    let mut transcripts = Vec::new();
    for input in inputs {
        if input.is_dir() {
            transcripts.extend(load_transcript_dir(input)?);
        } else {
            transcripts.push(load_transcript(input)?);
        }
    }
    Ok(transcripts)
}

fn input_names(inputs: &[PathBuf]) -> Vec<String> {
    inputs.iter().map(|p| p.display().to_string()).collect()
}

fn eval(command: EvalCommand) -> anyhow::Result<()> {
    match command {
        EvalCommand::Code {
            inputs,
            out,
            coder,
            common,
        } => {
            let settings = common.resolve_without_coach()?;
            let coder_settings = coder.provider_settings(&settings)?;
            let provider = build_provider(&coder_settings, keyword_coder)?;
            let model = coder.model();
            let mut transcripts = load_inputs(&inputs)?;
            fs::create_dir_all(&out)?;
            let coding = Coder::new(provider.as_ref(), model.clone());
            let mut written = Vec::new();
            let (mut replies, mut failures) = (0, 0);
            for transcript in &mut transcripts {
                failures += transcript.code_replies(&coding);
                replies += transcript.replies().count();
                let path = out.join(format!("{}{TRANSCRIPT_SUFFIX}", transcript.id));
                fs::write(&path, serde_json::to_string_pretty(transcript)? + "\n")?;
                written.push(path);
            }
            let mut manifest = Manifest::new("eval code");
            manifest.coder = Some(provider_info(provider.as_ref(), &model));
            if let Some(path) = &coder_settings.cassette {
                manifest.add_cassette(path)?;
            }
            manifest.inputs = input_names(&inputs);
            manifest.write(&out, &written)?;
            println!(
                "coded {} replies in {} transcripts ({failures} left uncoded) -> {}",
                replies - failures,
                transcripts.len(),
                out.display()
            );
            Ok(())
        }
        EvalCommand::Metrics { inputs, out } => {
            let transcripts = load_inputs(&inputs)?;
            let metrics = transcript_metrics(&transcripts);
            fs::create_dir_all(&out)?;
            let written = render_report(&metrics, &out)?;
            let mut manifest = Manifest::new("eval metrics");
            manifest.inputs = input_names(&inputs);
            manifest.write(&out, &written)?;
            println!(
                "{} transcripts, {} coach messages, {} uncoded -> {}",
                metrics.transcripts,
                metrics.agent_messages,
                metrics.uncoded_responses,
                out.display()
            );
            Ok(())
        }
        EvalCommand::Counterfactual {
            histories,
            agents,
            repeats,
            workers,
            records,
            out,
            coder,
            common,
        } => {
            let settings = common.resolve()?;
            let coach = settings.build_provider()?;
            let coder_settings = coder.provider_settings(&settings)?;
            let coder_provider = build_provider(&coder_settings, keyword_coder)?;
            let coder_model = coder.model();
            let store = HealthStore::in_memory(StoreConfig {
                time_zone: settings.time_zone,
                ..StoreConfig::default()
            });
            if let Some(path) = &records {
                let report = store.ingest_reader(io::BufReader::new(
                    fs::File::open(path).with_context(|| format!("opening {}", path.display()))?,
                ))?;
                eprintln!("records: {} accepted, {} rejected", report.accepted, report.rejected_count());
            }
            let seeds = load_seed_dir(&histories)?;
            let today = settings
                .coach
                .today
                .unwrap_or_else(|| chrono::Utc::now().with_timezone(&settings.time_zone).date_naive());
            let config = CounterfactualConfig {
                coach: settings.coach.clone(),
                today,
                repeats,
                workers,
            };
            let harness = Harness::new(
                coach.clone(),
                Arc::new(store),
                Coder::new(coder_provider.as_ref(), coder_model.clone()),
                config,
            );
            let result = harness.run(&seeds, &BARRIER_PERSONAS, &agents)?;
            fs::create_dir_all(&out)?;
            let written = render_counterfactual_report(&result, &out)?;

            let mut manifest = Manifest::new("eval counterfactual");
            manifest.coach = Some(provider_info(coach.as_ref(), &settings.coach.model));
            manifest.coder = Some(provider_info(coder_provider.as_ref(), &coder_model));
            for path in [&settings.provider.cassette, &coder_settings.cassette].into_iter().flatten() {
                manifest.add_cassette(path)?;
            }
            manifest.inputs = std::iter::once(&histories)
                .chain(records.as_ref())
                .map(|p| p.display().to_string())
                .collect();
            manifest.write(&out, &written)?;

            for summary in &result.summaries {
                let containment = |code| summary.codes.code(code).map_or(0.0, |c| c.containment) * 100.0;
                println!(
                    "{}: {} cells, {} failed; Open Question in {:.1}%, Advise Without Permission in {:.1}%",
                    summary.agent,
                    summary.cells,
                    summary.failed,
                    containment(ExternalMICode::OpenQuestion),
                    containment(ExternalMICode::AdviseWithoutPermission)
                );
            }
            println!("-> {}", out.display());
            Ok(())
        }
    }
}

impl CommonArgs {
    /// Settings for commands that only need the provider endpoint, so a
    /// coach provider misconfiguration does not get in the way.
    fn resolve_without_coach(&self) -> anyhow::Result<Settings> {
        let mut args = self.clone();
        if args.provider == Some(ProviderKind::Replay) && args.cassette.is_none() {
            args.provider = None;
        }
        args.resolve()
    }
}

