use std::collections::{HashMap, HashSet};
use std::fs;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::Deserialize;
use serde_json::Value;

use super::{CorpusFormat, Role, SessionLog, Utterance};
use crate::error::{Error, Result};

/// A line that could not be used, with the reason.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Reject {
    pub line: usize,
    pub reason: String,
}

#[derive(Debug, Clone, Default)]
pub struct ParsedCorpus {
    pub sessions: Vec<SessionLog>,
    pub rejects: Vec<Reject>,
}

#[derive(Deserialize)]
struct EventLine {
    session_id: String,
    participant_id: String,
    event_type: String,
    text: String,
    turn: u64,
}

struct Pending {
    session_id: String,
    participant_id: String,
    events: Vec<(u64, Role, String)>,
    seen: HashSet<(u64, Role)>,
}

/// Groups event lines into sessions ordered by turn, user before bot on
/// equal turns. Malformed and duplicate lines go to `rejects`.
pub fn parse_session_jsonl(reader: impl BufRead, source: &str) -> Result<ParsedCorpus> {
    let mut pending: Vec<Pending> = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();
    let mut rejects = Vec::new();

    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = match line {
            Ok(l) => l,
            Err(e) => {
                rejects.push(Reject {
                    line: line_no,
                    reason: e.to_string(),
                });
                continue;
            }
        };
        if line.trim().is_empty() {
            continue;
        }
        let ev: EventLine = match serde_json::from_str(&line) {
            Ok(ev) => ev,
            Err(e) => {
                rejects.push(Reject {
                    line: line_no,
                    reason: e.to_string(),
                });
                continue;
            }
        };
        let role = match ev.event_type.as_str() {
            "user_message" => Role::User,
            "bot_response" => Role::Bot,
            other => {
                rejects.push(Reject {
                    line: line_no,
                    reason: format!("unknown event_type `{other}`"),
                });
                continue;
            }
        };
        if ev.session_id.is_empty() {
            rejects.push(Reject {
                line: line_no,
                reason: "empty session_id".into(),
            });
            continue;
        }
        let slot = *index.entry(ev.session_id.clone()).or_insert_with(|| {
            pending.push(Pending {
                session_id: ev.session_id.clone(),
                participant_id: ev.participant_id.clone(),
                events: Vec::new(),
                seen: HashSet::new(),
            });
            pending.len() - 1
        });
        let p = &mut pending[slot];
        if !p.seen.insert((ev.turn, role)) {
            rejects.push(Reject {
                line: line_no,
                reason: format!("duplicate turn {} for session {}", ev.turn, ev.session_id),
            });
            continue;
        }
        p.events.push((ev.turn, role, ev.text));
    }

    if pending.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let sessions = pending
        .into_iter()
        .map(|mut p| {
            p.events
                .sort_by_key(|(turn, role, _)| (*turn, *role == Role::Bot));
            SessionLog {
                session_id: p.session_id,
                participant_id: p.participant_id,
                turns: p
                    .events
                    .into_iter()
                    .enumerate()
                    .map(|(turn_index, (_, role, text))| Utterance {
                        role,
                        text,
                        turn_index,
                    })
                    .collect(),
                source: source.to_string(),
            }
        })
        .collect();
    Ok(ParsedCorpus { sessions, rejects })
}

/// Maps an external corpus export to alternating User/Bot sessions.
pub fn parse_external(src: &str, format: CorpusFormat, source: &str) -> Result<Vec<SessionLog>> {
    let dialogues: Vec<(Option<String>, Vec<String>)> = match format {
        CorpusFormat::Jsonl => {
            return Err(Error::InvalidArgument(
                "session JSONL is not an external format; use parse_session_jsonl".into(),
            ))
        }
        CorpusFormat::DailyDialog => daily_dialog(src),
        CorpusFormat::PersonaChat => persona_chat(src)?,
        CorpusFormat::Empathetic => empathetic(src)?,
    };
    let sessions: Vec<SessionLog> = dialogues
        .into_iter()
        .enumerate()
        .filter(|(_, (_, texts))| !texts.is_empty())
        .map(|(i, (id, texts))| {
            let id = id.unwrap_or_else(|| format!("{source}-{:06}", i + 1));
            SessionLog::alternating(id, source, texts)
        })
        .collect();
    if sessions.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    Ok(sessions)
}

/// Reads an external export; the corpus tag is the format name.
pub fn adapt_external_corpus(path: &Path, format: CorpusFormat) -> Result<Vec<SessionLog>> {
    let src = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_external(&src, format, format.as_str())
}

/// Loads any supported format under the given corpus tag.
pub fn load_corpus(path: &Path, format: CorpusFormat, source: &str) -> Result<ParsedCorpus> {
    match format {
        CorpusFormat::Jsonl => {
            let f = fs::File::open(path).map_err(|e| Error::io(path, e))?;
            parse_session_jsonl(BufReader::new(f), source)
        }
        _ => {
            let src = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            Ok(ParsedCorpus {
                sessions: parse_external(&src, format, source)?,
                rejects: Vec::new(),
            })
        }
    }
}

fn daily_dialog(src: &str) -> Vec<(Option<String>, Vec<String>)> {
    src.lines()
        .map(|line| {
            let texts = line
                .split("__eou__")
                .map(str::trim)
                .filter(|t| !t.is_empty())
                .map(str::to_string)
                .collect();
            (None, texts)
        })
        .collect()
}

fn malformed(location: String, reason: &str) -> Error {
    Error::Malformed {
        location,
        reason: reason.to_string(),
    }
}

/// Whole-document JSON array, or one JSON value per line.
fn json_records(src: &str) -> Result<Vec<Value>> {
    let trimmed = src.trim_start();
    if trimmed.starts_with('[') {
        match serde_json::from_str::<Value>(trimmed)? {
            Value::Array(items) => Ok(items),
            _ => unreachable!("document starts with `[`"),
        }
    } else {
        src.lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty())
            .map(|(i, l)| {
                serde_json::from_str(l)
                    .map_err(|e| malformed(format!("line {}", i + 1), &e.to_string()))
            })
            .collect()
    }
}

fn record_id(rec: &Value, keys: &[&str]) -> Option<String> {
    keys.iter().find_map(|k| match rec.get(*k)? {
        Value::String(s) if !s.is_empty() => Some(s.clone()),
        Value::Number(n) => Some(n.to_string()),
        _ => None,
    })
}

fn persona_chat(src: &str) -> Result<Vec<(Option<String>, Vec<String>)>> {
    json_records(src)?
        .iter()
        .enumerate()
        .map(|(i, rec)| {
            let loc = || format!("dialogue {}", i + 1);
            let texts = if let Some(dialog) = rec.get("dialog") {
                dialog
                    .as_array()
                    .ok_or_else(|| malformed(loc(), "`dialog` is not an array"))?
                    .iter()
                    .map(|pair| {
                        pair.get(1)
                            .and_then(Value::as_str)
                            .map(str::to_string)
                            .ok_or_else(|| malformed(loc(), "expected [speaker, text] pairs"))
                    })
                    .collect::<Result<Vec<_>>>()?
            } else {
                // Flattened export: two parallel message lists, interleaved.
                let list = |k: &str| -> Result<Vec<String>> {
                    rec.get(k)
                        .and_then(Value::as_array)
                        .ok_or_else(|| malformed(loc(), "missing `dialog`"))?
                        .iter()
                        .map(|v| {
                            v.as_str()
                                .map(str::to_string)
                                .ok_or_else(|| malformed(loc(), "non-string message"))
                        })
                        .collect()
                };
                let free = list("free_messages")?;
                let guided = list("guided_messages")?;
                let mut out = Vec::with_capacity(free.len() + guided.len());
                for j in 0..free.len().max(guided.len()) {
                    out.extend(free.get(j).cloned());
                    out.extend(guided.get(j).cloned());
                }
                out
            };
            Ok((record_id(rec, &["id", "dialog_id"]), texts))
        })
        .collect()
}

fn empathetic(src: &str) -> Result<Vec<(Option<String>, Vec<String>)>> {
    json_records(src)?
        .iter()
        .enumerate()
        .map(|(i, rec)| {
            let loc = || format!("dialogue {}", i + 1);
            let texts = rec
                .get("conversations")
                .and_then(Value::as_array)
                .ok_or_else(|| malformed(loc(), "missing `conversations` array"))?
                .iter()
                .map(|m| {
                    m.get("content")
                        .and_then(Value::as_str)
                        .map(str::to_string)
                        .ok_or_else(|| malformed(loc(), "message without `content`"))
                })
                .collect::<Result<Vec<_>>>()?;
            Ok((record_id(rec, &["conv_id", "id"]), texts))
        })
        .collect()
}
