//! Run configuration: one JSON document, unknown keys rejected.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use stylesim::policies::{PolicyConfig, PolicyKind};
use stylesim::promptgen::DEFAULT_BASE_PROMPT;
use stylesim::replay::CorpusFormat;
use stylesim::stats::{DEFAULT_RESAMPLES, DEFAULT_SESOI};
use stylesim::DIM;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusSpec {
    pub path: PathBuf,
    pub format: CorpusFormat,
    /// Corpus tag in outputs; defaults to the file stem.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
}

impl CorpusSpec {
    pub fn name(&self) -> String {
        self.name.clone().unwrap_or_else(|| {
            self.path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "corpus".into())
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PersonaSource {
    #[default]
    Fit,
    File,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CentroidChoice {
    /// Mean standardized bot style of the corpus.
    #[default]
    Corpus,
    /// The standardized archetype, so the Static target is the anchor.
    Archetype,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PersonaSpec {
    #[serde(default)]
    pub source: PersonaSource,
    /// Persona file, required when `source` is `file`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    #[serde(default)]
    pub centroid: CentroidChoice,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GeneratorKind {
    Echo,
    Fixed,
    Styled,
    #[default]
    Http,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClosedLoopSpec {
    #[serde(default)]
    pub enabled: bool,
    #[serde(default)]
    pub generator: GeneratorKind,
    /// Sentence used by the `fixed` generator.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reply: Option<String>,
    #[serde(default = "default_max_reply_tokens")]
    pub max_reply_tokens: u32,
    #[serde(default = "default_retries")]
    pub retries: u32,
    #[serde(default = "default_base_delay_ms")]
    pub base_delay_ms: u64,
}

impl Default for ClosedLoopSpec {
    fn default() -> Self {
        Self {
            enabled: false,
            generator: GeneratorKind::default(),
            reply: None,
            max_reply_tokens: default_max_reply_tokens(),
            retries: default_retries(),
            base_delay_ms: default_base_delay_ms(),
        }
    }
}

fn default_max_reply_tokens() -> u32 {
    stylesim::llmloop::DEFAULT_MAX_REPLY_TOKENS
}
fn default_retries() -> u32 {
    stylesim::llmloop::DEFAULT_RETRIES
}
fn default_base_delay_ms() -> u64 {
    stylesim::llmloop::DEFAULT_BASE_DELAY.as_millis() as u64
}
fn default_policies() -> Vec<PolicyConfig> {
    PolicyKind::ALL.into_iter().map(PolicyConfig::new).collect()
}
fn default_out_dir() -> PathBuf {
    PathBuf::from("out")
}
fn default_base_prompt() -> String {
    DEFAULT_BASE_PROMPT.to_string()
}
fn default_resamples() -> usize {
    DEFAULT_RESAMPLES
}
fn default_sesoi() -> f64 {
    DEFAULT_SESOI
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub corpora: Vec<CorpusSpec>,
    #[serde(default = "default_policies")]
    pub policies: Vec<PolicyConfig>,
    #[serde(default)]
    pub persona: PersonaSpec,
    /// Assistant utterances, one per line; the shipped set when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub archetype_path: Option<PathBuf>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_out_dir")]
    pub out_dir: PathBuf,
    /// Window sizes for predictive synchrony; empty skips the ablation.
    #[serde(default)]
    pub windows: Vec<usize>,
    #[serde(default = "default_base_prompt")]
    pub base_prompt: String,
    /// Per-dimension fragment thresholds in z-units.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub thresholds: Option<[f64; DIM]>,
    #[serde(default = "default_resamples")]
    pub bootstrap_resamples: usize,
    #[serde(default = "default_sesoi")]
    pub sesoi: f64,
    /// Paired TOST on per-participant means instead of Welch.
    #[serde(default)]
    pub paired: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub baseline: Option<String>,
    #[serde(default)]
    pub closed_loop: ClosedLoopSpec,
}

impl RunConfig {
    /// Parses a config file; relative paths resolve against its directory.
    pub fn load(path: &Path) -> Result<Self> {
        let src = fs::read_to_string(path)
            .with_context(|| format!("cannot read config {}", path.display()))?;
        let mut cfg: RunConfig = serde_json::from_str(&src)
            .with_context(|| format!("invalid config {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new(""));
        let resolve = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        cfg.corpora.iter_mut().for_each(|c| resolve(&mut c.path));
        if let Some(p) = cfg.persona.path.as_mut() {
            resolve(p);
        }
        if let Some(p) = cfg.archetype_path.as_mut() {
            resolve(p);
        }
        resolve(&mut cfg.out_dir);
        Ok(cfg)
    }

    /// Checks everything that can be checked before work starts.
    pub fn validate(&self) -> Result<()> {
        ensure!(!self.corpora.is_empty(), "config lists no corpora");
        let mut names = Vec::new();
        for c in &self.corpora {
            ensure!(c.path.is_file(), "corpus not found: {}", c.path.display());
            let name = c.name();
            ensure!(!names.contains(&name), "duplicate corpus name `{name}`");
            names.push(name);
        }
        ensure!(!self.policies.is_empty(), "config lists no policies");
        let mut labels = Vec::new();
        for p in &self.policies {
            p.validate()?;
            ensure!(
                !labels.contains(&p.label()),
                "duplicate policy label `{}`",
                p.label()
            );
            labels.push(p.label());
        }
        if let Some(b) = &self.baseline {
            ensure!(
                labels.contains(&b.as_str()),
                "baseline `{b}` is not among the policies"
            );
        }
        match (self.persona.source, &self.persona.path) {
            (PersonaSource::File, None) => {
                bail!("persona.source is `file` but persona.path is missing")
            }
            (PersonaSource::File, Some(p)) => {
                ensure!(p.is_file(), "persona file not found: {}", p.display())
            }
            _ => {}
        }
        if let Some(p) = &self.archetype_path {
            ensure!(p.is_file(), "archetype file not found: {}", p.display());
        }
        ensure!(
            self.windows.iter().all(|&k| k >= 1),
            "window sizes must be >= 1"
        );
        ensure!(!self.base_prompt.trim().is_empty(), "base_prompt is empty");
        if let Some(t) = &self.thresholds {
            ensure!(
                t.iter().all(|x| x.is_finite() && *x >= 0.0),
                "thresholds must be finite and >= 0"
            );
        }
        ensure!(
            self.bootstrap_resamples > 0,
            "bootstrap_resamples must be positive"
        );
        ensure!(
            self.sesoi.is_finite() && self.sesoi >= 0.0,
            "sesoi must be finite and >= 0"
        );
        if self.closed_loop.generator == GeneratorKind::Fixed {
            ensure!(
                self.closed_loop
                    .reply
                    .as_deref()
                    .is_some_and(|r| !r.trim().is_empty()),
                "closed_loop.reply is required for the fixed generator"
            );
        }
        Ok(())
    }

    /// First 12 hex digits of the SHA-256 of the canonical JSON form. The
    /// output directory is left out so relocated runs share a hash.
    pub fn hash(&self) -> String {
        let mut canonical = self.clone();
        canonical.out_dir = PathBuf::new();
        let json = serde_json::to_vec(&canonical).expect("config serializes");
        Sha256::digest(&json)
            .iter()
            .take(6)
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}

/// Parses `static,cap,...` into default-parameter policies.
pub fn parse_policy_list(s: &str) -> Result<Vec<PolicyConfig>> {
    s.split(',')
        .map(str::trim)
        .filter(|k| !k.is_empty())
        .map(|k| Ok(PolicyConfig::new(k.parse::<PolicyKind>()?)))
        .collect()
}

/// Parses `1,3,5,8`.
pub fn parse_windows(s: &str) -> Result<Vec<usize>> {
    s.split(',')
        .map(str::trim)
        .filter(|k| !k.is_empty())
        .map(|k| {
            k.parse::<usize>()
                .with_context(|| format!("bad window size `{k}`"))
        })
        .collect()
}
