use std::cmp::Ordering;
use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{SessionLog, MIN_USER_TURNS};
use crate::error::{Error, Result};
use crate::metrics::{
    predictive_synchrony, turn_metrics, SessionSummary, TurnMetrics, TurnObservation,
    SUMMARY_METRICS,
};
use crate::persona::PersonaModel;
use crate::policies::{policy_step, PolicyConfig, PolicyKind, PolicyState};
use crate::promptgen::{InstructionSet, Translator};
use crate::textfeat::{style_vector, LexiconSet};
use crate::vector::{RawStyleVector, StyleVector, INFORMALITY};

/// Everything a replay needs besides the policy and the session.
#[derive(Debug, Clone)]
pub struct ReplayContext<'a> {
    pub persona: &'a PersonaModel,
    /// Coherence anchor in the persona's z-space.
    pub archetype_z: StyleVector,
    pub translator: Translator,
    pub lex: &'a LexiconSet,
}

impl<'a> ReplayContext<'a> {
    pub fn new(persona: &'a PersonaModel) -> Self {
        Self {
            persona,
            archetype_z: persona.archetype_z(),
            translator: Translator::builtin(),
            lex: LexiconSet::shared(),
        }
    }

    pub fn with_translator(mut self, translator: Translator) -> Self {
        self.translator = translator;
        self
    }

    pub fn with_lexicon(mut self, lex: &'a LexiconSet) -> Self {
        self.lex = lex;
        self
    }

    /// Standardized style of one utterance.
    pub fn vectorize(&self, text: &str) -> Result<StyleVector> {
        Ok(self.persona.standardize(&style_vector(text, self.lex)?))
    }

    /// Raw informality implied by a z-space bot vector, clamped to [0, 1].
    pub fn informality_of(&self, b: &StyleVector) -> f64 {
        self.persona.scaler.invert(b).to_array()[INFORMALITY].clamp(0.0, 1.0)
    }

    pub fn instructions(&self, b: &StyleVector) -> InstructionSet {
        self.translator.vector_to_instructions(b)
    }
}

/// Result of replaying one session under one policy.
#[derive(Debug, Clone, PartialEq)]
pub struct SessionRun {
    pub corpus: String,
    pub turns: Vec<TurnMetrics>,
    /// b_t after each user turn.
    pub targets: Vec<StyleVector>,
    pub summary: SessionSummary,
}

/// Replays a session: b_0 is the centroid, each usable user turn drives one
/// policy step, and the logged bot replies are ignored.
pub fn run_session(
    policy: &PolicyConfig,
    session: &SessionLog,
    ctx: &ReplayContext<'_>,
) -> Result<SessionRun> {
    let n_usable = session.n_usable_user_turns();
    if n_usable < MIN_USER_TURNS {
        return Err(Error::SessionTooShort {
            session_id: session.session_id.clone(),
            user_turns: n_usable,
        });
    }
    let centroid = ctx.persona.centroid;
    let mut state = PolicyState::seeded(centroid);
    let mut prev_instr = ctx.instructions(&centroid);
    let mut prev_bin = None;
    let mut turns = Vec::with_capacity(n_usable);
    let mut targets = Vec::with_capacity(n_usable);

    for utt in session.user_turns() {
        if !utt.is_usable() {
            log::debug!(
                "session {}: skipping empty user turn {}",
                session.session_id,
                utt.turn_index
            );
            continue;
        }
        let u = ctx.vectorize(&utt.text)?;
        let b_prev = state.b_prev.ok_or(Error::StateNotSeeded)?;
        let step = policy_step(policy, &mut state, u, &utt.text, centroid)?;
        let cur_instr = ctx.instructions(&step.b_next);
        let m = turn_metrics(TurnObservation {
            user: &u,
            bot: &step.b_next,
            bot_prev: &b_prev,
            archetype: &ctx.archetype_z,
            prev_instr: &prev_instr,
            cur_instr: &cur_instr,
            prev_bin,
            informality_raw: ctx.informality_of(&step.b_next),
            cache_hit: step.cache_hit,
        })?;
        prev_bin = Some(m.register_bin);
        prev_instr = cur_instr;
        turns.push(m);
        targets.push(step.b_next);
    }

    let summary = SessionSummary::from_turns(
        &session.session_id,
        &session.participant_id,
        policy.label(),
        &turns,
    );
    Ok(SessionRun {
        corpus: session.source.clone(),
        turns,
        targets,
        summary,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricStat {
    pub mean: f64,
    /// Population standard deviation across sessions.
    pub std: f64,
}

/// One policy aggregated over a corpus, session first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicySummary {
    pub policy: String,
    pub kind: PolicyKind,
    pub n_sessions: usize,
    pub metrics: BTreeMap<String, MetricStat>,
    /// Per-session rows sorted by session id.
    pub sessions: Vec<SessionSummary>,
}

impl PolicySummary {
    /// Sorts rows so the result does not depend on corpus order.
    pub fn from_sessions(policy: &PolicyConfig, mut sessions: Vec<SessionSummary>) -> Result<Self> {
        if sessions.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        sessions.sort_by(|a, b| {
            a.session_id
                .cmp(&b.session_id)
                .then_with(|| a.participant_id.cmp(&b.participant_id))
                .then_with(|| {
                    a.synchrony
                        .partial_cmp(&b.synchrony)
                        .unwrap_or(Ordering::Equal)
                })
        });
        let n = sessions.len() as f64;
        let metrics = SUMMARY_METRICS
            .iter()
            .map(|&name| {
                let xs: Vec<f64> = sessions.iter().filter_map(|s| s.metric(name)).collect();
                let mean = xs.iter().sum::<f64>() / n;
                let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
                (
                    name.to_string(),
                    MetricStat {
                        mean,
                        std: var.sqrt(),
                    },
                )
            })
            .collect();
        Ok(Self {
            policy: policy.label().to_string(),
            kind: policy.kind,
            n_sessions: sessions.len(),
            metrics,
            sessions,
        })
    }

    /// Across-session mean of a summary metric; panics on an unknown name.
    pub fn mean(&self, metric: &str) -> f64 {
        self.metrics
            .get(metric)
            .unwrap_or_else(|| panic!("unknown metric `{metric}`"))
            .mean
    }
}

/// Every policy over every session, sessions replayed in parallel.
pub fn run_ablation(
    policies: &[PolicyConfig],
    sessions: &[SessionLog],
    ctx: &ReplayContext<'_>,
) -> Result<Vec<PolicySummary>> {
    if policies.is_empty() {
        return Err(Error::InvalidArgument("no policies to run".into()));
    }
    if sessions.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    policies.iter().try_for_each(PolicyConfig::validate)?;
    policies
        .iter()
        .map(|p| {
            let rows = sessions
                .par_iter()
                .map(|s| run_session(p, s, ctx).map(|r| r.summary))
                .collect::<Result<Vec<_>>>()?;
            PolicySummary::from_sessions(p, rows)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrontierPoint {
    pub policy: String,
    pub mean_stability: f64,
    pub mean_synchrony: f64,
    pub mean_coherence: f64,
}

pub fn frontier(summaries: &[PolicySummary]) -> Vec<FrontierPoint> {
    summaries
        .iter()
        .map(|s| FrontierPoint {
            policy: s.policy.clone(),
            mean_stability: s.mean("stability"),
            mean_synchrony: s.mean("synchrony"),
            mean_coherence: s.mean("coherence"),
        })
        .collect()
}

/// For each point, whether no other point is at least as good on both
/// stability and synchrony and strictly better on one.
pub fn pareto_front(points: &[FrontierPoint]) -> Vec<bool> {
    points
        .iter()
        .map(|p| {
            !points.iter().any(|q| {
                q.mean_stability >= p.mean_stability
                    && q.mean_synchrony >= p.mean_synchrony
                    && (q.mean_stability > p.mean_stability || q.mean_synchrony > p.mean_synchrony)
            })
        })
        .collect()
}

/// Standardized vectors of a session's usable user turns.
pub fn user_z_series(session: &SessionLog, ctx: &ReplayContext<'_>) -> Result<Vec<StyleVector>> {
    session
        .usable_user_turns()
        .map(|u| ctx.vectorize(&u.text))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowResult {
    pub window: usize,
    /// `None` when no session has enough history for this window.
    pub predictive_synchrony: Option<f64>,
    /// Sessions contributing at least one eligible turn.
    pub n_sessions: usize,
}

/// Predictive synchrony for each window size over the same sessions.
pub fn window_ablation(
    sessions: &[SessionLog],
    ctx: &ReplayContext<'_>,
    windows: &[usize],
) -> Result<Vec<WindowResult>> {
    let series = sessions
        .par_iter()
        .map(|s| user_z_series(s, ctx))
        .collect::<Result<Vec<_>>>()?;
    windows
        .iter()
        .map(|&k| {
            let value = match predictive_synchrony(&series, k) {
                Ok(v) => Some(v),
                Err(Error::InsufficientHistory { .. }) => None,
                Err(e) => return Err(e),
            };
            Ok(WindowResult {
                window: k,
                predictive_synchrony: value,
                n_sessions: series.iter().filter(|s| s.len() > k).count(),
            })
        })
        .collect()
}

/// Share of Hybrid turns where both the raw and the EMA-shrunk deviation
/// reach the cap, so Hybrid and Cap take the same step.
pub fn hybrid_saturation_rate(
    sessions: &[SessionLog],
    ctx: &ReplayContext<'_>,
    cfg: &PolicyConfig,
) -> Result<f64> {
    let counts = sessions
        .par_iter()
        .map(|s| {
            let mut state = PolicyState::seeded(ctx.persona.centroid);
            let mut saturated = 0usize;
            let mut total = 0usize;
            for utt in s.usable_user_turns() {
                let u = ctx.vectorize(&utt.text)?;
                let b_prev = state.b_prev.ok_or(Error::StateNotSeeded)?;
                let d = u.distance(&b_prev);
                if d >= cfg.kappa && cfg.alpha * d >= cfg.kappa {
                    saturated += 1;
                }
                total += 1;
                policy_step(cfg, &mut state, u, &utt.text, ctx.persona.centroid)?;
            }
            Ok((saturated, total))
        })
        .collect::<Result<Vec<_>>>()?;
    let (sat, total) = counts
        .into_iter()
        .fold((0, 0), |(a, b), (c, d)| (a + c, b + d));
    if total == 0 {
        return Err(Error::EmptyCorpus);
    }
    Ok(sat as f64 / total as f64)
}

/// Fits the persona on bot utterances, or on all utterances when the corpus
/// has no usable bot turns.
pub fn fit_corpus_persona(
    sessions: &[SessionLog],
    fitted_on: &str,
    raw_archetype: RawStyleVector,
    lex: &LexiconSet,
) -> Result<PersonaModel> {
    let vectorize = |texts: Vec<&str>| -> Result<Vec<RawStyleVector>> {
        texts
            .into_par_iter()
            .map(|t| style_vector(t, lex))
            .collect()
    };
    let bot: Vec<&str> = sessions
        .iter()
        .flat_map(|s| s.bot_turns())
        .filter(|u| u.is_usable())
        .map(|u| u.text.as_str())
        .collect();
    let raw = if bot.is_empty() {
        log::info!("{fitted_on}: no bot utterances, fitting persona on all utterances");
        let all = sessions
            .iter()
            .flat_map(|s| s.turns.iter())
            .filter(|u| u.is_usable())
            .map(|u| u.text.as_str())
            .collect();
        vectorize(all)?
    } else {
        vectorize(bot)?
    };
    PersonaModel::fit(&raw, fitted_on, raw_archetype)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::persona::default_archetype;
    use crate::replay::filter_sessions;

    const TEXTS: [&str; 12] = [
        "hey whats up lol",
        "Good afternoon. I would like to discuss the project scope.",
        "omg that is sooo cool!!",
        "I understand your concern and will review the proposal carefully.",
        "ok nvm",
        "Could you please clarify the timeline for the final report?",
        "haha yeah i dunno",
        "Thank you for your patience; the analysis is nearly complete.",
        "wanna grab food later?",
        "Please find the revised document attached for your consideration.",
        "lol u serious",
        "I appreciate the detailed explanation of the methodology.",
    ];

    fn corpus() -> Vec<SessionLog> {
        (0..4)
            .map(|i| {
                let texts: Vec<&str> = TEXTS.iter().cycle().skip(i).take(8).copied().collect();
                SessionLog::alternating(format!("s{i}"), "fx", texts)
            })
            .collect()
    }

    fn persona(sessions: &[SessionLog]) -> PersonaModel {
        let lex = LexiconSet::shared();
        fit_corpus_persona(sessions, "fx", default_archetype(lex), lex).unwrap()
    }

    #[test]
    fn anchors_hold() {
        let sessions = corpus();
        let p = persona(&sessions).anchored_to_archetype();
        let ctx = ReplayContext::new(&p);
        let stat = run_session(&PolicyConfig::new(PolicyKind::Static), &sessions[0], &ctx).unwrap();
        assert_eq!(stat.summary.stability, 1.0);
        assert_eq!(stat.summary.coherence, 1.0);
        assert_eq!(stat.summary.flip_rate, 0.0);
        assert_eq!(stat.summary.legibility, 1.0);
        let unc =
            run_session(&PolicyConfig::new(PolicyKind::Uncapped), &sessions[0], &ctx).unwrap();
        assert_eq!(unc.summary.synchrony, 1.0);
        assert_eq!(unc.turns.len(), 4);
        for (s, u) in stat.turns.iter().zip(&unc.turns) {
            assert_eq!(s.synchrony, u.coherence);
        }
    }

    #[test]
    fn short_session_rejected() {
        let s = SessionLog::alternating("x", "fx", ["hi there", "hello"]);
        let p = persona(&corpus());
        let ctx = ReplayContext::new(&p);
        assert!(matches!(
            run_session(&PolicyConfig::new(PolicyKind::Static), &s, &ctx),
            Err(Error::SessionTooShort { user_turns: 1, .. })
        ));
    }

    #[test]
    fn empty_user_turn_is_skipped() {
        let s = SessionLog::alternating(
            "x",
            "fx",
            ["hi", "a", "...", "b", "ok then", "c", "sure thing", "d"],
        );
        let s = filter_sessions(vec![s]).pop().unwrap();
        let p = persona(&corpus());
        let r = run_session(
            &PolicyConfig::new(PolicyKind::Ema),
            &s,
            &ReplayContext::new(&p),
        )
        .unwrap();
        assert_eq!(r.turns.len(), 3);
    }

    #[test]
    fn ablation_is_order_independent() {
        let sessions = corpus();
        let p = persona(&sessions);
        let ctx = ReplayContext::new(&p);
        let policies: Vec<_> = PolicyKind::ALL.into_iter().map(PolicyConfig::new).collect();
        let a = run_ablation(&policies, &sessions, &ctx).unwrap();
        let mut rev = sessions.clone();
        rev.reverse();
        let b = run_ablation(&policies, &rev, &ctx).unwrap();
        assert_eq!(a, b);
        let pts = frontier(&a);
        assert_eq!(pts[0].mean_stability, 1.0);
        assert_eq!(pts[1].mean_synchrony, 1.0);
        let front = pareto_front(&pts);
        assert!(front[0] && front[1]);
    }

    #[test]
    fn pareto_dominance() {
        let pt = |s: f64, y: f64| FrontierPoint {
            policy: String::new(),
            mean_stability: s,
            mean_synchrony: y,
            mean_coherence: 0.0,
        };
        let pts = [pt(1.0, 0.1), pt(0.5, 1.0), pt(0.4, 0.9), pt(0.5, 1.0)];
        assert_eq!(pareto_front(&pts), [true, true, false, true]);
    }

    #[test]
    fn windows() {
        let sessions = corpus();
        let p = persona(&sessions);
        let ctx = ReplayContext::new(&p);
        let w = window_ablation(&sessions, &ctx, &[1, 3, 4]).unwrap();
        assert!(w[0].predictive_synchrony.is_some());
        assert_eq!(w[0].n_sessions, 4);
        assert_eq!(w[2].predictive_synchrony, None);
    }
}
