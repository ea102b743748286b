//! Where the public dialogue corpora are looked for. Each corpus is found
//! through an environment variable or a default path under `data/` at the
//! workspace root.

use std::env;
use std::path::PathBuf;

use stylesim::replay::{adapt_external_corpus, filter_sessions, CorpusFormat, SessionLog};

#[derive(Debug, Clone, Copy)]
pub struct PublicCorpus {
    pub name: &'static str,
    pub env_var: &'static str,
    /// Relative to the workspace root.
    pub default_path: &'static str,
    pub format: CorpusFormat,
}

pub const DAILY_DIALOG: PublicCorpus = PublicCorpus {
    name: "dailydialog",
    env_var: "DAILYDIALOG_TEXT",
    default_path: "data/dailydialog/dialogues_text.txt",
    format: CorpusFormat::DailyDialog,
};

pub const PERSONA_CHAT: PublicCorpus = PublicCorpus {
    name: "persona_chat",
    env_var: "PERSONACHAT_JSON",
    default_path: "data/persona_chat/train.json",
    format: CorpusFormat::PersonaChat,
};

pub const EMPATHETIC: PublicCorpus = PublicCorpus {
    name: "empathetic",
    env_var: "EMPATHETIC_JSON",
    default_path: "data/empathetic/train.json",
    format: CorpusFormat::Empathetic,
};

pub const ALL: [PublicCorpus; 3] = [DAILY_DIALOG, PERSONA_CHAT, EMPATHETIC];

pub fn workspace_root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

impl PublicCorpus {
    /// The export's path, or a message naming the places that were tried.
    pub fn locate(&self) -> Result<PathBuf, String> {
        if let Ok(p) = env::var(self.env_var) {
            let p = PathBuf::from(p);
            return if p.is_file() {
                Ok(p)
            } else {
                Err(format!(
                    "{} corpus not found: {}={} is not a file",
                    self.name,
                    self.env_var,
                    p.display()
                ))
            };
        }
        let p = workspace_root().join(self.default_path);
        if p.is_file() {
            Ok(p)
        } else {
            Err(format!(
                "{} corpus not found (set {} or place the export at {})",
                self.name, self.env_var, self.default_path
            ))
        }
    }

    /// The first `limit` sessions that pass the length filter.
    pub fn load_sample(&self, limit: usize) -> Result<Vec<SessionLog>, String> {
        let path = self.locate()?;
        let sessions = adapt_external_corpus(&path, self.format).map_err(|e| e.to_string())?;
        Ok(filter_sessions(sessions).into_iter().take(limit).collect())
    }
}
