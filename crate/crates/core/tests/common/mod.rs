#![allow(dead_code)]

use proptest::prelude::*;
use stylesim::persona::{default_archetype, PersonaModel};
use stylesim::replay::{filter_sessions, fit_corpus_persona, Role, SessionLog, Utterance};
use stylesim::synth::{synthetic_sessions, SynthConfig};
use stylesim::textfeat::LexiconSet;
use stylesim::StyleVector;

pub fn synthetic(n: usize, seed: u64) -> Vec<SessionLog> {
    filter_sessions(synthetic_sessions(&SynthConfig {
        n_sessions: n,
        seed,
        ..SynthConfig::default()
    }))
}

pub fn persona_for(sessions: &[SessionLog]) -> PersonaModel {
    let lex = LexiconSet::shared();
    fit_corpus_persona(sessions, "synthetic", default_archetype(lex), lex).unwrap()
}

/// User-only session built from the given texts, one bot filler per turn.
pub fn session_from_user_texts(id: &str, texts: &[&str]) -> SessionLog {
    let mut turns = Vec::new();
    for t in texts {
        turns.push(Utterance {
            role: Role::User,
            text: (*t).to_string(),
            turn_index: turns.len(),
        });
        turns.push(Utterance {
            role: Role::Bot,
            text: "I see, tell me more.".into(),
            turn_index: turns.len(),
        });
    }
    SessionLog {
        session_id: id.into(),
        participant_id: id.into(),
        turns,
        source: "fixture".into(),
    }
}

pub fn style_vec(range: f64) -> impl Strategy<Value = StyleVector> {
    prop::array::uniform8(-range..range).prop_map(StyleVector)
}

pub fn vec_seq(range: f64, max_len: usize) -> impl Strategy<Value = Vec<StyleVector>> {
    prop::collection::vec(style_vec(range), 1..=max_len)
}
