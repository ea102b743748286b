//! Seeded synthetic dialogues with per-user drifting register and mood.
//! Used to exercise the pipeline when no real corpus is at hand.

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::replay::{Role, SessionLog, Utterance};

const TOPICS: [&str; 12] = [
    "weekend",
    "project",
    "movie",
    "interview",
    "trip",
    "dinner",
    "exam",
    "concert",
    "weather",
    "phone",
    "garden",
    "budget",
];

const INFORMAL: [&str; 10] = [
    "lol the {t} was kinda wild tbh",
    "omg i cant believe the {t}!!",
    "yeah gonna check the {t} later",
    "nah the {t} kinda sucks",
    "haha ok u right about the {t}",
    "wanna talk about the {t}?",
    "ugh the {t} again lol",
    "dunno, the {t} seems ok i guess",
    "btw the {t} was pretty cool",
    "yep the {t} is done, finally",
];

const FORMAL: [&str; 10] = [
    "I would like to discuss the {t} in more detail.",
    "Could you please explain how the {t} was organized?",
    "I believe the {t} requires careful consideration.",
    "Thank you for your assistance with the {t}.",
    "In my opinion, the {t} has been handled appropriately.",
    "Regarding the {t}, I have prepared several questions.",
    "The {t} was scheduled for Tuesday afternoon.",
    "Would it be possible to reconsider the {t}?",
    "Please let me know whether the {t} is confirmed.",
    "I understand the {t} involves additional documentation.",
];

const POSITIVE: [&str; 5] = [
    "It makes me really happy.",
    "I love it.",
    "Honestly that is wonderful news.",
    "We had a great time.",
    "So glad about that!",
];

const NEGATIVE: [&str; 5] = [
    "Honestly it feels terrible.",
    "I am worried and upset about it.",
    "That was a sad and awful day.",
    "It really hurts.",
    "I hate how it went.",
];

const SOCIAL: [&str; 4] = [
    "My friends and family think so too.",
    "We talked about it with our neighbors.",
    "My sister told me the same thing.",
    "Everyone at work agrees with us.",
];

const COGNITIVE: [&str; 4] = [
    "I think that is because I realize why it happened.",
    "Maybe I should consider the reasons first.",
    "I wonder whether I understand it correctly.",
    "Perhaps it depends on what we know.",
];

const BOT: [&str; 10] = [
    "That sounds interesting, tell me more about it.",
    "I see. How did that make you feel?",
    "Thanks for sharing that with me.",
    "That makes sense. What happened next?",
    "I am glad you told me about it.",
    "Interesting! What do you think you will do?",
    "I understand. Is there anything I can help with?",
    "That is good to hear.",
    "Oh, I did not expect that. Go on.",
    "Sounds like quite a day. How are you feeling now?",
];

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub n_sessions: usize,
    pub min_user_turns: usize,
    pub max_user_turns: usize,
    /// Participants are assigned round robin; 0 means one per session.
    pub n_participants: usize,
    /// Per-turn standard deviation of the register random walk.
    pub drift: f64,
    /// Chance that a user turn repeats an earlier user turn verbatim.
    pub repeat_prob: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            n_sessions: 50,
            min_user_turns: 4,
            max_user_turns: 10,
            n_participants: 0,
            drift: 0.15,
            repeat_prob: 0.05,
            seed: 0,
        }
    }
}

/// Box-Muller standard normal.
fn normal(rng: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = rng.random::<f64>().max(f64::MIN_POSITIVE);
    let u2: f64 = rng.random();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

fn pick<'a>(rng: &mut ChaCha8Rng, bank: &[&'a str]) -> &'a str {
    bank.choose(rng).copied().expect("non-empty bank")
}

fn user_utterance(
    rng: &mut ChaCha8Rng,
    register: f64,
    mood: f64,
    social: f64,
    reflective: f64,
) -> String {
    let topic = pick(rng, &TOPICS);
    let bank: &[&str] = if rng.random::<f64>() < register {
        &INFORMAL
    } else {
        &FORMAL
    };
    let mut parts = vec![pick(rng, bank).replace("{t}", topic)];
    if rng.random::<f64>() < mood.abs() {
        parts.push(pick(rng, if mood > 0.0 { &POSITIVE } else { &NEGATIVE }).to_string());
    }
    if rng.random::<f64>() < social {
        parts.push(pick(rng, &SOCIAL).to_string());
    }
    if rng.random::<f64>() < reflective {
        parts.push(pick(rng, &COGNITIVE).to_string());
    }
    let text = parts.join(" ");
    if register > 0.7 && rng.random::<f64>() < 0.5 {
        text.to_lowercase()
    } else {
        text
    }
}

/// Generates `cfg.n_sessions` sessions; identical configs give identical
/// output on every platform.
pub fn synthetic_sessions(cfg: &SynthConfig) -> Vec<SessionLog> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let width = cfg.n_sessions.max(1).to_string().len().max(4);
    (0..cfg.n_sessions)
        .map(|i| {
            let n_user =
                rng.random_range(cfg.min_user_turns..=cfg.max_user_turns.max(cfg.min_user_turns));
            let mut register: f64 = rng.random();
            let mut mood: f64 = rng.random_range(-1.0..1.0);
            let social: f64 = rng.random::<f64>() * 0.6;
            let reflective: f64 = rng.random::<f64>() * 0.6;
            let mut turns = Vec::with_capacity(2 * n_user);
            let mut said: Vec<String> = Vec::new();
            for _ in 0..n_user {
                let text = if !said.is_empty() && rng.random::<f64>() < cfg.repeat_prob {
                    said[rng.random_range(0..said.len())].clone()
                } else {
                    user_utterance(&mut rng, register, mood, social, reflective)
                };
                said.push(text.clone());
                turns.push(Utterance {
                    role: Role::User,
                    text,
                    turn_index: turns.len(),
                });
                turns.push(Utterance {
                    role: Role::Bot,
                    text: pick(&mut rng, &BOT).to_string(),
                    turn_index: turns.len(),
                });
                register = (register + cfg.drift * normal(&mut rng)).clamp(0.0, 1.0);
                mood = (mood + cfg.drift * normal(&mut rng)).clamp(-1.0, 1.0);
            }
            let session_id = format!("syn-{i:0width$}");
            let participant_id = if cfg.n_participants == 0 {
                session_id.clone()
            } else {
                format!("p-{:0width$}", i % cfg.n_participants)
            };
            SessionLog {
                session_id,
                participant_id,
                turns,
                source: "synthetic".into(),
            }
        })
        .collect()
}
