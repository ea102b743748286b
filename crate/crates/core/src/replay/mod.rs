//! Corpus ingestion, session filtering, turn-by-turn policy replay and
//! aggregation.

mod corpus;
pub mod output;
mod sim;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::textfeat::tokenize;

pub use corpus::{
    adapt_external_corpus, load_corpus, parse_external, parse_session_jsonl, ParsedCorpus, Reject,
};
pub use sim::{
    fit_corpus_persona, frontier, hybrid_saturation_rate, pareto_front, run_ablation, run_session,
    user_z_series, window_ablation, FrontierPoint, MetricStat, PolicySummary, ReplayContext,
    SessionRun, WindowResult,
};

/// Minimum number of usable user turns a session needs to be replayed.
pub const MIN_USER_TURNS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    User,
    Bot,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Utterance {
    pub role: Role,
    pub text: String,
    /// Position in the session, 0-based and strictly increasing.
    pub turn_index: usize,
}

impl Utterance {
    /// True when the text has at least one word token.
    pub fn is_usable(&self) -> bool {
        !tokenize::tokens(&self.text).is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionLog {
    pub session_id: String,
    pub participant_id: String,
    pub turns: Vec<Utterance>,
    /// Corpus tag.
    pub source: String,
}

impl SessionLog {
    /// Builds a session by alternating User/Bot from the first utterance.
    pub fn alternating<S: Into<String>>(
        session_id: impl Into<String>,
        source: impl Into<String>,
        texts: impl IntoIterator<Item = S>,
    ) -> Self {
        let session_id = session_id.into();
        let turns = texts
            .into_iter()
            .enumerate()
            .map(|(i, text)| Utterance {
                role: if i % 2 == 0 { Role::User } else { Role::Bot },
                text: text.into(),
                turn_index: i,
            })
            .collect();
        Self {
            participant_id: session_id.clone(),
            session_id,
            turns,
            source: source.into(),
        }
    }

    pub fn user_turns(&self) -> impl Iterator<Item = &Utterance> {
        self.turns.iter().filter(|u| u.role == Role::User)
    }

    pub fn bot_turns(&self) -> impl Iterator<Item = &Utterance> {
        self.turns.iter().filter(|u| u.role == Role::Bot)
    }

    /// User turns with word content; empty ones are skipped by the replay.
    pub fn usable_user_turns(&self) -> impl Iterator<Item = &Utterance> {
        self.user_turns().filter(|u| u.is_usable())
    }

    pub fn n_usable_user_turns(&self) -> usize {
        self.usable_user_turns().count()
    }
}

/// Keeps sessions with at least three usable user turns.
pub fn filter_sessions(sessions: Vec<SessionLog>) -> Vec<SessionLog> {
    sessions
        .into_iter()
        .filter(|s| s.n_usable_user_turns() >= MIN_USER_TURNS)
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorpusFormat {
    /// Native session JSONL.
    Jsonl,
    /// `dialogues_text.txt`: one dialogue per line, `__eou__` separated.
    DailyDialog,
    /// Blended Skill Talk style JSON with `dialog: [[speaker, text], ...]`.
    PersonaChat,
    /// JSON or JSONL records with `conversations: [{role, content}, ...]`.
    Empathetic,
}

impl CorpusFormat {
    pub fn as_str(self) -> &'static str {
        match self {
            CorpusFormat::Jsonl => "jsonl",
            CorpusFormat::DailyDialog => "daily_dialog",
            CorpusFormat::PersonaChat => "persona_chat",
            CorpusFormat::Empathetic => "empathetic",
        }
    }
}

impl fmt::Display for CorpusFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CorpusFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        [
            CorpusFormat::Jsonl,
            CorpusFormat::DailyDialog,
            CorpusFormat::PersonaChat,
            CorpusFormat::Empathetic,
        ]
        .into_iter()
        .find(|f| f.as_str() == s)
        .ok_or_else(|| Error::UnknownFormat(s.to_string()))
    }
}
