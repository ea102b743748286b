use std::collections::BTreeMap;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Duration;

use anyhow::{anyhow, bail, Context};
use serde::{Deserialize, Serialize};
use stylesim::llmloop::{
    run_closed_loop, ClosedLoopOptions, Generator, HttpGenerator, RetryPolicy, StubGenerator,
};
use stylesim::metrics::SessionSummary;
use stylesim::persona::{archetype_from_utterances, default_archetype, PersonaModel};
use stylesim::promptgen::Translator;
use stylesim::replay::output::{
    frontier_svg, write_frontier_csv, write_summary_csv, write_window_csv, SUMMARY_COLUMNS,
};
use stylesim::replay::{
    filter_sessions, fit_corpus_persona, frontier, load_corpus, run_ablation, window_ablation,
    CorpusFormat, ParsedCorpus, PolicySummary, ReplayContext, Role,
};
use stylesim::stats::{
    compare_to_baseline, default_baseline, rank_table, write_rank_csv, write_stats_csv,
    ComparisonRow, StatsOptions, COMPARED_METRICS, DEFAULT_RESAMPLES, DEFAULT_SESOI,
};
use stylesim::textfeat::LexiconSet;
use stylesim::RawStyleVector;

use crate::config::{
    parse_policy_list, parse_windows, CentroidChoice, CorpusSpec, GeneratorKind, PersonaSource,
    RunConfig,
};

const VERSION: &str = env!("CARGO_PKG_VERSION");
const INCOMPLETE_MARKER: &str = "INCOMPLETE";

/// A failed command and the exit code it maps to.
pub enum Failure {
    /// Bad flags, config or paths: exit 2.
    Usage(anyhow::Error),
    /// Anything that goes wrong once work has started: exit 1.
    Runtime(anyhow::Error),
}

impl Failure {
    pub fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Runtime(_) => 1,
        }
    }

    pub fn error(&self) -> &anyhow::Error {
        match self {
            Failure::Usage(e) | Failure::Runtime(e) => e,
        }
    }
}

impl<E: Into<anyhow::Error>> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Runtime(e.into())
    }
}

trait UsageExt<T> {
    fn usage(self) -> Result<T, Failure>;
}

impl<T, E: Into<anyhow::Error>> UsageExt<T> for Result<T, E> {
    fn usage(self) -> Result<T, Failure> {
        self.map_err(|e| Failure::Usage(e.into()))
    }
}

type CmdResult = Result<(), Failure>;

pub fn header(config_hash: &str, seed: u64) -> String {
    format!("# stylesim {VERSION} config={config_hash} seed={seed}")
}

fn write_file(
    path: &Path,
    body: impl FnOnce(&mut dyn Write) -> std::io::Result<()>,
) -> anyhow::Result<()> {
    let f = fs::File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
    let mut w = BufWriter::new(f);
    body(&mut w).with_context(|| format!("cannot write {}", path.display()))?;
    w.flush()
        .with_context(|| format!("cannot write {}", path.display()))?;
    Ok(())
}

/// `stem.ext` for a single corpus, `stem-name.ext` when there are several.
fn per_corpus(dir: &Path, stem: &str, ext: &str, corpus: &str, several: bool) -> PathBuf {
    if several {
        dir.join(format!("{stem}-{corpus}.{ext}"))
    } else {
        dir.join(format!("{stem}.{ext}"))
    }
}

fn load_config(path: &Path) -> Result<RunConfig, Failure> {
    RunConfig::load(path).usage()
}

fn load_archetype(cfg: &RunConfig, lex: &LexiconSet) -> anyhow::Result<RawStyleVector> {
    match &cfg.archetype_path {
        Some(p) => {
            let src =
                fs::read_to_string(p).with_context(|| format!("cannot read {}", p.display()))?;
            archetype_from_utterances(&src, lex)
                .with_context(|| format!("archetype {}", p.display()))
        }
        None => Ok(default_archetype(lex)),
    }
}

fn read_corpus(spec: &CorpusSpec) -> anyhow::Result<ParsedCorpus> {
    let name = spec.name();
    let parsed = load_corpus(&spec.path, spec.format, &name)
        .with_context(|| format!("corpus {} ({})", name, spec.path.display()))?;
    for r in &parsed.rejects {
        log::warn!("{name}: line {} rejected: {}", r.line, r.reason);
    }
    Ok(parsed)
}

fn persona_for(
    cfg: &RunConfig,
    corpus: &ParsedCorpus,
    name: &str,
    raw_archetype: RawStyleVector,
    lex: &LexiconSet,
) -> anyhow::Result<PersonaModel> {
    let persona = match cfg.persona.source {
        PersonaSource::Fit => fit_corpus_persona(&corpus.sessions, name, raw_archetype, lex)
            .with_context(|| format!("fitting persona on {name}"))?,
        PersonaSource::File => {
            let p = cfg.persona.path.as_ref().expect("validated");
            PersonaModel::load(p).with_context(|| format!("persona {}", p.display()))?
        }
    };
    Ok(match cfg.persona.centroid {
        CentroidChoice::Corpus => persona,
        CentroidChoice::Archetype => persona.anchored_to_archetype(),
    })
}

pub fn fit_persona(config: &Path, out: Option<PathBuf>) -> CmdResult {
    let mut cfg = load_config(config)?;
    if let Some(o) = out {
        cfg.out_dir = o;
    }
    cfg.validate().usage()?;
    let lex = LexiconSet::shared();
    let archetype = load_archetype(&cfg, lex)?;
    fs::create_dir_all(&cfg.out_dir)
        .with_context(|| format!("cannot create {}", cfg.out_dir.display()))?;
    let several = cfg.corpora.len() > 1;
    for spec in &cfg.corpora {
        let name = spec.name();
        let corpus = read_corpus(spec)?;
        let persona = fit_corpus_persona(&corpus.sessions, &name, archetype, lex)
            .with_context(|| format!("fitting persona on {name}"))?;
        let path = per_corpus(&cfg.out_dir, "persona", "json", &name, several);
        persona
            .save(&path)
            .with_context(|| format!("cannot write {}", path.display()))?;
        println!(
            "{name}: n_samples={} -> {}",
            persona.scaler.n_samples,
            path.display()
        );
    }
    Ok(())
}

pub struct SimulateOptions {
    pub config: PathBuf,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub policies: Option<String>,
    pub windows: Option<String>,
    pub closed_loop: bool,
    pub jobs: Option<usize>,
}

pub fn simulate(opts: SimulateOptions) -> CmdResult {
    let mut cfg = load_config(&opts.config)?;
    if let Some(s) = opts.seed {
        cfg.seed = s;
    }
    if let Some(o) = opts.out {
        cfg.out_dir = o;
    }
    if let Some(p) = &opts.policies {
        cfg.policies = parse_policy_list(p).usage()?;
    }
    if let Some(w) = &opts.windows {
        cfg.windows = parse_windows(w).usage()?;
    }
    if opts.closed_loop {
        cfg.closed_loop.enabled = true;
    }
    cfg.validate().usage()?;

    fs::create_dir_all(&cfg.out_dir)
        .with_context(|| format!("cannot create {}", cfg.out_dir.display()))?;
    let marker = cfg.out_dir.join(INCOMPLETE_MARKER);
    if marker.exists() {
        fs::remove_file(&marker).with_context(|| format!("cannot remove {}", marker.display()))?;
    }
    let result = run_simulation(&cfg, opts.jobs.unwrap_or_else(rayon::current_num_threads));
    if let Err(e) = &result {
        // Anything already written is from this failed run.
        let _ = fs::write(&marker, format!("{e:#}\n"));
    }
    result.map_err(Failure::Runtime)
}

struct CorpusRun {
    name: String,
    summaries: Vec<PolicySummary>,
}

fn run_simulation(cfg: &RunConfig, jobs: usize) -> anyhow::Result<()> {
    let head = header(&cfg.hash(), cfg.seed);
    let lex = LexiconSet::shared();
    let archetype = load_archetype(cfg, lex)?;
    let mut translator = Translator::builtin();
    if let Some(t) = cfg.thresholds {
        translator = translator.with_thresholds(t);
    }
    let stats_opts = StatsOptions {
        n_resamples: cfg.bootstrap_resamples,
        seed: cfg.seed,
        sesoi: cfg.sesoi,
        paired: cfg.paired,
    };
    let several = cfg.corpora.len() > 1;
    let out = &cfg.out_dir;
    let closed_dir = out.join("closed_loop");

    let mut runs = Vec::new();
    let mut rejects = Vec::new();
    let mut stats_rows: Vec<ComparisonRow> = Vec::new();
    let mut analysis = 0u32;
    let mut closed_runs = Vec::new();
    let mut incomplete = Vec::new();

    for spec in &cfg.corpora {
        let name = spec.name();
        let corpus = read_corpus(spec)?;
        rejects.extend(corpus.rejects.iter().map(|r| (name.clone(), r.clone())));
        let persona = persona_for(cfg, &corpus, &name, archetype, lex)?;
        let total = corpus.sessions.len();
        let sessions = filter_sessions(corpus.sessions);
        if sessions.is_empty() {
            bail!("corpus {name}: no session has at least 3 usable user turns");
        }
        println!(
            "{name}: {} sessions replayed ({} filtered out, {} lines rejected)",
            sessions.len(),
            total - sessions.len(),
            corpus.rejects.len()
        );
        let ctx = ReplayContext::new(&persona)
            .with_translator(translator.clone())
            .with_lexicon(lex);
        let summaries = run_ablation(&cfg.policies, &sessions, &ctx)
            .with_context(|| format!("replaying {name}"))?;

        let points = frontier(&summaries);
        write_file(&per_corpus(out, "frontier", "csv", &name, several), |w| {
            write_frontier_csv(w, &head, &points)
        })?;
        fs::write(
            per_corpus(out, "frontier", "svg", &name, several),
            frontier_svg(&head, &points),
        )?;

        if !cfg.windows.is_empty() {
            let rows = window_ablation(&sessions, &ctx, &cfg.windows)?;
            write_file(
                &per_corpus(out, "window_ablation", "csv", &name, several),
                |w| write_window_csv(w, &head, &rows),
            )?;
        }

        if summaries.len() > 1 {
            let baseline = match &cfg.baseline {
                Some(b) => b.as_str(),
                None => default_baseline(&summaries).expect("non-empty"),
            };
            let groups: Vec<(&str, &[SessionSummary])> = summaries
                .iter()
                .map(|s| (s.policy.as_str(), s.sessions.as_slice()))
                .collect();
            let rows = compare_to_baseline(&name, &groups, baseline, &stats_opts, analysis)
                .with_context(|| format!("statistics for {name}"))?;
            analysis += rows.len() as u32;
            stats_rows.extend(rows);
        }

        if cfg.closed_loop.enabled {
            let generator = build_generator(cfg, &translator)?;
            let cl_opts = ClosedLoopOptions {
                base_prompt: cfg.base_prompt.clone(),
                max_reply_tokens: cfg.closed_loop.max_reply_tokens,
                retry: RetryPolicy {
                    max_retries: cfg.closed_loop.retries,
                    base_delay: Duration::from_millis(cfg.closed_loop.base_delay_ms),
                },
            };
            let report = run_closed_loop(
                generator.as_ref(),
                &cfg.policies,
                &sessions,
                &ctx,
                &cl_opts,
                jobs,
            )?;
            incomplete.extend(report.incomplete.into_iter().map(|i| (name.clone(), i)));
            closed_runs.push(CorpusRun {
                name: name.clone(),
                summaries: report.summaries,
            });
        }

        runs.push(CorpusRun { name, summaries });
    }

    write_file(&out.join("summary.csv"), |w| {
        for (i, r) in runs.iter().enumerate() {
            write_summary_csv(w, &head, &r.name, &r.summaries, i == 0)?;
        }
        Ok(())
    })?;
    write_file(&out.join("stats.csv"), |w| {
        write_stats_csv(w, &head, &stats_rows)
    })?;

    if runs.iter().all(|r| r.summaries.len() >= 2) {
        let table: Vec<(String, Vec<PolicySummary>)> = runs
            .iter()
            .map(|r| (r.name.clone(), r.summaries.clone()))
            .collect();
        let tables = ["synchrony", "stability"]
            .into_iter()
            .map(|m| rank_table(&table, m))
            .collect::<Result<Vec<_>, _>>()?;
        write_file(&out.join("ranks.csv"), |w| {
            write_rank_csv(w, &head, &tables)
        })?;
    }

    if !rejects.is_empty() {
        write_file(&out.join("rejects.csv"), |w| {
            writeln!(w, "{head}")?;
            writeln!(w, "corpus,line,reason")?;
            for (corpus, r) in &rejects {
                writeln!(
                    w,
                    "{},{},\"{}\"",
                    corpus,
                    r.line,
                    r.reason.replace('"', "\"\"")
                )?;
            }
            Ok(())
        })?;
    }

    if cfg.closed_loop.enabled {
        fs::create_dir_all(&closed_dir)?;
        write_file(&closed_dir.join("summary.csv"), |w| {
            for (i, r) in closed_runs.iter().enumerate() {
                write_summary_csv(w, &head, &r.name, &r.summaries, i == 0)?;
            }
            Ok(())
        })?;
        for r in &closed_runs {
            let points = frontier(&r.summaries);
            write_file(
                &per_corpus(&closed_dir, "frontier", "csv", &r.name, several),
                |w| write_frontier_csv(w, &head, &points),
            )?;
        }
        write_file(&closed_dir.join("incomplete.csv"), |w| {
            writeln!(w, "{head}")?;
            writeln!(w, "corpus,policy,session_id,reason")?;
            for (corpus, i) in &incomplete {
                writeln!(
                    w,
                    "{},{},{},\"{}\"",
                    corpus,
                    i.policy,
                    i.session_id,
                    i.reason.replace('"', "\"\"")
                )?;
            }
            Ok(())
        })?;
    }
    Ok(())
}

fn build_generator(cfg: &RunConfig, translator: &Translator) -> anyhow::Result<Box<dyn Generator>> {
    Ok(match cfg.closed_loop.generator {
        GeneratorKind::Echo => Box::new(StubGenerator::echo()),
        GeneratorKind::Fixed => Box::new(StubGenerator::fixed(
            cfg.closed_loop.reply.clone().expect("validated"),
        )),
        GeneratorKind::Styled => Box::new(StubGenerator::styled(translator)),
        GeneratorKind::Http => Box::new(HttpGenerator::from_env()?),
    })
}

type PolicyRows = (String, Vec<SessionSummary>);

pub struct StatsCommand {
    pub summary: PathBuf,
    pub config: Option<PathBuf>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub baseline: Option<String>,
}

#[derive(Deserialize)]
struct SummaryRecord {
    corpus: String,
    policy: String,
    session_id: String,
    participant_id: String,
    synchrony: f64,
    stability: f64,
    coherence: f64,
    legibility: f64,
    flip_rate: f64,
    cache_hit_rate: f64,
    n_turns: usize,
}

#[derive(Serialize)]
struct StatsSettings<'a> {
    summary_sha256_prefix: &'a str,
    n_resamples: usize,
    sesoi: f64,
    paired: bool,
    baseline: Option<&'a str>,
}

pub fn stats(cmd: StatsCommand) -> CmdResult {
    if !cmd.summary.is_file() {
        return Err(Failure::Usage(anyhow!(
            "summary not found: {}",
            cmd.summary.display()
        )));
    }
    let cfg = cmd.config.as_deref().map(load_config).transpose()?;
    let mut opts = StatsOptions {
        n_resamples: cfg
            .as_ref()
            .map_or(DEFAULT_RESAMPLES, |c| c.bootstrap_resamples),
        seed: cfg.as_ref().map_or(0, |c| c.seed),
        sesoi: cfg.as_ref().map_or(DEFAULT_SESOI, |c| c.sesoi),
        paired: cfg.as_ref().is_some_and(|c| c.paired),
    };
    if let Some(s) = cmd.seed {
        opts.seed = s;
    }
    let baseline = cmd
        .baseline
        .or_else(|| cfg.as_ref().and_then(|c| c.baseline.clone()));
    let out = cmd
        .out
        .or_else(|| cfg.as_ref().map(|c| c.out_dir.clone()))
        .unwrap_or_else(|| PathBuf::from("."));

    let bytes =
        fs::read(&cmd.summary).with_context(|| format!("cannot read {}", cmd.summary.display()))?;
    let summary_hash: String = {
        use sha2::{Digest, Sha256};
        Sha256::digest(&bytes)
            .iter()
            .take(6)
            .map(|b| format!("{b:02x}"))
            .collect()
    };
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(bytes.as_slice());
    let headers: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    if headers != SUMMARY_COLUMNS {
        return Err(Failure::Usage(anyhow!(
            "{} is not a summary table (columns: {})",
            cmd.summary.display(),
            headers.join(",")
        )));
    }
    // corpus -> policy -> rows, both in order of first appearance.
    let mut corpora: Vec<(String, Vec<PolicyRows>)> = Vec::new();
    for rec in reader.deserialize::<SummaryRecord>() {
        let r = rec.context("malformed summary row")?;
        let ci = match corpora.iter().position(|(c, _)| *c == r.corpus) {
            Some(i) => i,
            None => {
                corpora.push((r.corpus.clone(), Vec::new()));
                corpora.len() - 1
            }
        };
        let policies = &mut corpora[ci].1;
        let pi = match policies.iter().position(|(p, _)| *p == r.policy) {
            Some(i) => i,
            None => {
                policies.push((r.policy.clone(), Vec::new()));
                policies.len() - 1
            }
        };
        policies[pi].1.push(SessionSummary {
            session_id: r.session_id,
            participant_id: r.participant_id,
            policy: r.policy,
            synchrony: r.synchrony,
            stability: r.stability,
            coherence: r.coherence,
            legibility: r.legibility,
            flip_rate: r.flip_rate,
            cache_hit_rate: r.cache_hit_rate,
            mean_churn: f64::NAN,
            n_turns: r.n_turns,
        });
    }
    if corpora.is_empty() {
        return Err(Failure::Runtime(anyhow!(
            "{} has no rows",
            cmd.summary.display()
        )));
    }

    let settings = StatsSettings {
        summary_sha256_prefix: &summary_hash,
        n_resamples: opts.n_resamples,
        sesoi: opts.sesoi,
        paired: opts.paired,
        baseline: baseline.as_deref(),
    };
    let settings_hash: String = {
        use sha2::{Digest, Sha256};
        let json = serde_json::to_vec(&settings)?;
        Sha256::digest(&json)
            .iter()
            .take(6)
            .map(|b| format!("{b:02x}"))
            .collect()
    };
    let config_hash = cfg.as_ref().map_or(settings_hash, RunConfig::hash);
    let head = header(&config_hash, opts.seed);

    let mut rows = Vec::new();
    let mut analysis = 0u32;
    for (corpus, policies) in &corpora {
        if policies.len() < 2 {
            continue;
        }
        let base = match &baseline {
            Some(b) => b.clone(),
            None => policies
                .iter()
                .find(|(p, _)| p == "uncapped")
                .unwrap_or(&policies[0])
                .0
                .clone(),
        };
        let groups: Vec<(&str, &[SessionSummary])> = policies
            .iter()
            .map(|(p, s)| (p.as_str(), s.as_slice()))
            .collect();
        let r = compare_to_baseline(corpus, &groups, &base, &opts, analysis)
            .with_context(|| format!("statistics for {corpus}"))?;
        analysis += r.len() as u32;
        rows.extend(r);
    }
    debug_assert!(rows
        .iter()
        .all(|r| COMPARED_METRICS.contains(&r.metric.as_str())));
    fs::create_dir_all(&out).with_context(|| format!("cannot create {}", out.display()))?;
    let path = out.join("stats.csv");
    write_file(&path, |w| write_stats_csv(w, &head, &rows))?;
    println!("{} comparison rows -> {}", rows.len(), path.display());
    Ok(())
}

#[derive(Serialize)]
struct EventLine<'a> {
    session_id: &'a str,
    participant_id: &'a str,
    event_type: &'a str,
    text: &'a str,
    turn: usize,
}

pub fn convert(input: &Path, format: CorpusFormat, out: &Path, name: Option<String>) -> CmdResult {
    if !input.is_file() {
        return Err(Failure::Usage(anyhow!(
            "input not found: {}",
            input.display()
        )));
    }
    let name = name.unwrap_or_else(|| format.as_str().to_string());
    let corpus = load_corpus(input, format, &name)?;
    if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent)?;
    }
    let mut events: BTreeMap<&str, usize> = BTreeMap::new();
    write_file(out, |w| {
        for s in &corpus.sessions {
            for u in &s.turns {
                let line = EventLine {
                    session_id: &s.session_id,
                    participant_id: &s.participant_id,
                    event_type: match u.role {
                        Role::User => "user_message",
                        Role::Bot => "bot_response",
                    },
                    text: &u.text,
                    turn: u.turn_index + 1,
                };
                serde_json::to_writer(&mut *w, &line)?;
                w.write_all(b"\n")?;
                *events.entry(line.event_type).or_default() += 1;
            }
        }
        Ok(())
    })?;
    println!(
        "{} sessions ({} user, {} bot utterances) -> {}",
        corpus.sessions.len(),
        events.get("user_message").copied().unwrap_or(0),
        events.get("bot_response").copied().unwrap_or(0),
        out.display()
    );
    Ok(())
}
