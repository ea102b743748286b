//! Target vector → delta instructions → base+delta system prompt.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::textfeat::lexicon::FRAGMENT_TABLE;
use crate::vector::{StyleVector, DIM, FEATURE_NAMES};

pub const DEFAULT_THRESHOLD: f64 = 0.5;
pub const SEPARATOR: &str = "\n\n";
/// Delta used when no dimension crosses its threshold.
pub const STATIC_DELTA: &str =
    "Maintain your own consistent, friendly style, whatever tone the user takes.";
pub const DEFAULT_BASE_PROMPT: &str =
    "You are a friendly virtual companion. Keep the conversation \
going with warmth and curiosity, stay honest about being an AI, and never give medical, legal, or \
financial advice.";
/// Largest possible churn between two instruction sets.
pub const MAX_CHURN: usize = 2 * DIM;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    High,
    Low,
}

/// Identifies one fragment: a dimension and a direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FragmentId {
    pub dimension: usize,
    pub direction: Direction,
}

impl fmt::Display for FragmentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let dir = match self.direction {
            Direction::High => "high",
            Direction::Low => "low",
        };
        write!(f, "{}.{dir}", FEATURE_NAMES[self.dimension])
    }
}

/// Active fragments keyed by id, so iteration is in dimension order.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct InstructionSet {
    pub fragments: BTreeMap<FragmentId, String>,
}

impl InstructionSet {
    pub fn is_empty(&self) -> bool {
        self.fragments.is_empty()
    }

    pub fn len(&self) -> usize {
        self.fragments.len()
    }

    pub fn contains(&self, id: FragmentId) -> bool {
        self.fragments.contains_key(&id)
    }

    pub fn ids(&self) -> impl Iterator<Item = FragmentId> + '_ {
        self.fragments.keys().copied()
    }

    /// Rendered delta block; the static line when empty.
    pub fn render(&self) -> String {
        if self.is_empty() {
            STATIC_DELTA.to_string()
        } else {
            self.fragments
                .values()
                .cloned()
                .collect::<Vec<_>>()
                .join("\n")
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ComposedPrompt {
    pub base: String,
    pub delta: String,
    pub full_text: String,
}

/// The g(·) mapping: per-dimension thresholds over a fixed fragment table.
#[derive(Debug, Clone)]
pub struct Translator {
    table: HashMap<FragmentId, String>,
    thresholds: [f64; DIM],
}

impl Translator {
    pub fn builtin() -> Self {
        Self::from_table(FRAGMENT_TABLE).expect("built-in fragment table is valid")
    }

    /// Parses `dimension_index<TAB>direction<TAB>text` lines.
    pub fn from_table(src: &str) -> Result<Self> {
        let mut table = HashMap::new();
        for (i, line) in src.lines().enumerate() {
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let bad = |reason: &str| Error::Malformed {
                location: format!("fragment table line {}", i + 1),
                reason: reason.to_string(),
            };
            let cols: Vec<&str> = line.splitn(3, '\t').collect();
            if cols.len() != 3 {
                return Err(bad("expected 3 tab-separated columns"));
            }
            let dimension: usize = cols[0]
                .trim()
                .parse()
                .map_err(|_| bad("bad dimension index"))?;
            if dimension >= DIM {
                return Err(bad("dimension index out of range"));
            }
            let direction = match cols[1].trim() {
                "high" => Direction::High,
                "low" => Direction::Low,
                _ => return Err(bad("direction must be `high` or `low`")),
            };
            let text = cols[2].trim();
            if text.is_empty() {
                return Err(bad("empty fragment text"));
            }
            if table
                .insert(
                    FragmentId {
                        dimension,
                        direction,
                    },
                    text.to_string(),
                )
                .is_some()
            {
                return Err(bad("duplicate (dimension, direction)"));
            }
        }
        Ok(Self {
            table,
            thresholds: [DEFAULT_THRESHOLD; DIM],
        })
    }

    pub fn with_thresholds(mut self, thresholds: [f64; DIM]) -> Self {
        self.thresholds = thresholds;
        self
    }

    pub fn thresholds(&self) -> &[f64; DIM] {
        &self.thresholds
    }

    pub fn fragment_text(&self, id: FragmentId) -> Option<&str> {
        self.table.get(&id).map(String::as_str)
    }

    /// High fragment above +threshold, Low below -threshold, nothing between.
    pub fn vector_to_instructions(&self, target: &StyleVector) -> InstructionSet {
        let mut fragments = BTreeMap::new();
        for (dimension, (&z, &t)) in target.0.iter().zip(self.thresholds.iter()).enumerate() {
            let direction = if z > t {
                Direction::High
            } else if z < -t {
                Direction::Low
            } else {
                continue;
            };
            let id = FragmentId {
                dimension,
                direction,
            };
            if let Some(text) = self.table.get(&id) {
                fragments.insert(id, text.clone());
            }
        }
        InstructionSet { fragments }
    }
}

impl Default for Translator {
    fn default() -> Self {
        Self::builtin()
    }
}

pub fn compose_prompt(base: &str, instr: &InstructionSet) -> Result<ComposedPrompt> {
    if base.trim().is_empty() {
        return Err(Error::InvalidArgument("base prompt is empty".into()));
    }
    let delta = instr.render();
    Ok(ComposedPrompt {
        base: base.to_string(),
        full_text: format!("{base}{SEPARATOR}{delta}"),
        delta,
    })
}

/// Size of the symmetric difference of the two fragment-id sets.
pub fn instruction_churn(prev: &InstructionSet, cur: &InstructionSet) -> usize {
    let removed = prev.ids().filter(|id| !cur.contains(*id)).count();
    let added = cur.ids().filter(|id| !prev.contains(*id)).count();
    removed + added
}
