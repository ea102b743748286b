//! Closed-loop replay: each turn's prompt goes to a text generator and the
//! realized reply, not the idealized target, is scored.

mod http;
mod stub;

use std::thread;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{turn_metrics, SessionSummary, TurnMetrics, TurnObservation};
use crate::policies::{policy_step, PolicyConfig, PolicyState};
use crate::promptgen::{compose_prompt, DEFAULT_BASE_PROMPT};
use crate::replay::{PolicySummary, ReplayContext, Role, SessionLog, MIN_USER_TURNS};
use crate::vector::StyleVector;

pub use http::{HttpGenerator, ENV_KEY, ENV_MODEL, ENV_URL};
pub use stub::{StubGenerator, StubMode, STYLE_MARKERS};

pub const DEFAULT_MAX_REPLY_TOKENS: u32 = 256;
pub const DEFAULT_RETRIES: u32 = 3;
pub const DEFAULT_BASE_DELAY: Duration = Duration::from_millis(500);

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeneratorRequest {
    /// Composed base + delta prompt.
    pub system_prompt: String,
    /// Conversation so far, ending with the current user message.
    pub history: Vec<(Role, String)>,
    pub max_reply_tokens: u32,
}

impl GeneratorRequest {
    pub fn last_user_text(&self) -> Option<&str> {
        self.history
            .iter()
            .rev()
            .find(|(r, _)| *r == Role::User)
            .map(|(_, t)| t.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeneratorResponse {
    pub text: String,
    pub latency_ms: u64,
    pub provider_tag: String,
    /// Set when the provider declined to answer; `text` may then be empty.
    pub refused: bool,
}

/// A synchronous text generator.
pub trait Generator: Send + Sync {
    fn generate(&self, req: &GeneratorRequest) -> Result<GeneratorResponse>;

    fn provider_tag(&self) -> &str;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RetryPolicy {
    /// Retries after the first attempt.
    pub max_retries: u32,
    /// Delay before retry `i` is `base_delay * 2^i`.
    pub base_delay: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self {
            max_retries: DEFAULT_RETRIES,
            base_delay: DEFAULT_BASE_DELAY,
        }
    }
}

/// Calls the generator until it yields a usable reply or retries run out.
/// Empty non-refused replies count as failures.
pub fn generate_with_retry(
    generator: &dyn Generator,
    req: &GeneratorRequest,
    retry: &RetryPolicy,
) -> Result<GeneratorResponse> {
    let attempts = retry.max_retries + 1;
    let mut last = String::new();
    for attempt in 0..attempts {
        if attempt > 0 {
            let delay = retry.base_delay.saturating_mul(1 << (attempt - 1).min(16));
            log::warn!(
                "{}: attempt {attempt} failed ({last}); retrying in {delay:?}",
                generator.provider_tag()
            );
            thread::sleep(delay);
        }
        match generator.generate(req) {
            Ok(r) if r.refused || !r.text.trim().is_empty() => return Ok(r),
            Ok(_) => last = "empty reply".into(),
            Err(e) => last = e.to_string(),
        }
    }
    Err(Error::Generator {
        attempts,
        reason: last,
    })
}

#[derive(Debug, Clone)]
pub struct ClosedLoopOptions {
    pub base_prompt: String,
    pub max_reply_tokens: u32,
    pub retry: RetryPolicy,
}

impl Default for ClosedLoopOptions {
    fn default() -> Self {
        Self {
            base_prompt: DEFAULT_BASE_PROMPT.to_string(),
            max_reply_tokens: DEFAULT_MAX_REPLY_TOKENS,
            retry: RetryPolicy::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClosedLoopRun {
    pub turns: Vec<TurnMetrics>,
    /// Targets the policy asked for.
    pub targets: Vec<StyleVector>,
    /// Standardized style of each generated reply.
    pub realized: Vec<StyleVector>,
    pub replies: Vec<String>,
    pub summary: SessionSummary,
}

/// Replays one session through a generator. The policy recurrence runs on
/// realized reply styles: after each turn `b_prev` is the reply's vector.
pub fn closed_loop_session(
    generator: &dyn Generator,
    policy: &PolicyConfig,
    session: &SessionLog,
    ctx: &ReplayContext<'_>,
    opts: &ClosedLoopOptions,
) -> Result<ClosedLoopRun> {
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
    let mut history: Vec<(Role, String)> = Vec::new();
    let mut run = ClosedLoopRun {
        turns: Vec::with_capacity(n_usable),
        targets: Vec::with_capacity(n_usable),
        realized: Vec::with_capacity(n_usable),
        replies: Vec::with_capacity(n_usable),
        summary: SessionSummary::from_turns("", "", "", &[]),
    };

    for utt in session.usable_user_turns() {
        let u = ctx.vectorize(&utt.text)?;
        let b_prev = state.b_prev.ok_or(Error::StateNotSeeded)?;
        let step = policy_step(policy, &mut state, u, &utt.text, centroid)?;
        let instr = ctx.instructions(&step.b_next);
        let prompt = compose_prompt(&opts.base_prompt, &instr)?;
        history.push((Role::User, utt.text.clone()));
        let req = GeneratorRequest {
            system_prompt: prompt.full_text,
            history: history.clone(),
            max_reply_tokens: opts.max_reply_tokens,
        };
        let reply = generate_with_retry(generator, &req, &opts.retry)?;
        if reply.refused {
            return Err(Error::Generator {
                attempts: 1,
                reason: format!("provider refused turn {}", utt.turn_index),
            });
        }
        let realized = ctx.vectorize(&reply.text)?;
        state.b_prev = Some(realized);

        let m = turn_metrics(TurnObservation {
            user: &u,
            bot: &realized,
            bot_prev: &b_prev,
            archetype: &ctx.archetype_z,
            prev_instr: &prev_instr,
            cur_instr: &instr,
            prev_bin,
            informality_raw: ctx.informality_of(&realized),
            cache_hit: step.cache_hit,
        })?;
        prev_bin = Some(m.register_bin);
        prev_instr = instr;
        history.push((Role::Bot, reply.text.clone()));
        run.turns.push(m);
        run.targets.push(step.b_next);
        run.realized.push(realized);
        run.replies.push(reply.text);
    }
    run.summary = SessionSummary::from_turns(
        &session.session_id,
        &session.participant_id,
        policy.label(),
        &run.turns,
    );
    Ok(run)
}

/// A session dropped from closed-loop aggregates.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Incomplete {
    pub policy: String,
    pub session_id: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClosedLoopReport {
    pub provider: String,
    pub summaries: Vec<PolicySummary>,
    pub incomplete: Vec<Incomplete>,
}

/// Every policy over every session with at most `jobs` sessions in flight.
/// Failed sessions are logged and left out of the aggregates.
pub fn run_closed_loop(
    generator: &dyn Generator,
    policies: &[PolicyConfig],
    sessions: &[SessionLog],
    ctx: &ReplayContext<'_>,
    opts: &ClosedLoopOptions,
    jobs: usize,
) -> Result<ClosedLoopReport> {
    if policies.is_empty() {
        return Err(Error::InvalidArgument("no policies to run".into()));
    }
    policies.iter().try_for_each(PolicyConfig::validate)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
    let mut summaries = Vec::new();
    let mut incomplete = Vec::new();
    for p in policies {
        let results: Vec<_> = pool.install(|| {
            sessions
                .par_iter()
                .map(|s| (s, closed_loop_session(generator, p, s, ctx, opts)))
                .collect()
        });
        let mut rows = Vec::new();
        for (s, r) in results {
            match r {
                Ok(run) => rows.push(run.summary),
                Err(e) => {
                    log::warn!("{}: session {} incomplete: {e}", p.label(), s.session_id);
                    incomplete.push(Incomplete {
                        policy: p.label().to_string(),
                        session_id: s.session_id.clone(),
                        reason: e.to_string(),
                    });
                }
            }
        }
        if !rows.is_empty() {
            summaries.push(PolicySummary::from_sessions(p, rows)?);
        }
    }
    Ok(ClosedLoopReport {
        provider: generator.provider_tag().to_string(),
        summaries,
        incomplete,
    })
}

/// Milliseconds since `start`, saturating.
pub(crate) fn elapsed_ms(start: Instant) -> u64 {
    u64::try_from(start.elapsed().as_millis()).unwrap_or(u64::MAX)
}
