//! Style-adaptation policies as pure state transitions
//! `(u_t, b_{t-1}, config) -> b_t`.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::vector::StyleVector;

pub const DEFAULT_KAPPA: f64 = 0.25;
pub const DEFAULT_ALPHA: f64 = 0.5;
pub const DEFAULT_EPSILON: f64 = 0.1;
pub const DEFAULT_RHO: f64 = 1.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyKind {
    Static,
    Uncapped,
    Cap,
    Ema,
    #[serde(rename = "deadband")]
    DeadBand,
    Hybrid,
    HybridRadius,
    HybridCache,
}

impl PolicyKind {
    pub const ALL: [PolicyKind; 8] = [
        PolicyKind::Static,
        PolicyKind::Uncapped,
        PolicyKind::Cap,
        PolicyKind::Ema,
        PolicyKind::DeadBand,
        PolicyKind::Hybrid,
        PolicyKind::HybridRadius,
        PolicyKind::HybridCache,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            PolicyKind::Static => "static",
            PolicyKind::Uncapped => "uncapped",
            PolicyKind::Cap => "cap",
            PolicyKind::Ema => "ema",
            PolicyKind::DeadBand => "deadband",
            PolicyKind::Hybrid => "hybrid",
            PolicyKind::HybridRadius => "hybrid_radius",
            PolicyKind::HybridCache => "hybrid_cache",
        }
    }
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PolicyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        PolicyKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown policy kind `{s}`")))
    }
}

fn default_kappa() -> f64 {
    DEFAULT_KAPPA
}
fn default_alpha() -> f64 {
    DEFAULT_ALPHA
}
fn default_epsilon() -> f64 {
    DEFAULT_EPSILON
}
fn default_rho() -> f64 {
    DEFAULT_RHO
}

/// A policy and its hyperparameters. Parameters a kind does not use are
/// carried along but ignored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicyConfig {
    pub kind: PolicyKind,
    /// Output label; defaults to the kind name.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    /// Maximum step length in z-units.
    #[serde(default = "default_kappa")]
    pub kappa: f64,
    /// EMA weight on the user's current style.
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    /// Dead-band radius.
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    /// Persona leash radius.
    #[serde(default = "default_rho")]
    pub rho: f64,
}

impl PolicyConfig {
    pub fn new(kind: PolicyKind) -> Self {
        Self {
            kind,
            name: None,
            kappa: DEFAULT_KAPPA,
            alpha: DEFAULT_ALPHA,
            epsilon: DEFAULT_EPSILON,
            rho: DEFAULT_RHO,
        }
    }

    pub fn with_kappa(mut self, kappa: f64) -> Self {
        self.kappa = kappa;
        self
    }

    pub fn with_alpha(mut self, alpha: f64) -> Self {
        self.alpha = alpha;
        self
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon = epsilon;
        self
    }

    pub fn with_rho(mut self, rho: f64) -> Self {
        self.rho = rho;
        self
    }

    pub fn named(mut self, name: impl Into<String>) -> Self {
        self.name = Some(name.into());
        self
    }

    pub fn label(&self) -> &str {
        self.name.as_deref().unwrap_or(self.kind.as_str())
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidArgument(format!("{}: {what}", self.label())));
        if self.kappa.is_nan() || self.kappa < 0.0 {
            return bad("kappa must be >= 0");
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return bad("alpha must lie in [0, 1]");
        }
        if self.epsilon.is_nan() || self.epsilon < 0.0 {
            return bad("epsilon must be >= 0");
        }
        if self.rho.is_nan() || self.rho <= 0.0 {
            return bad("rho must be > 0");
        }
        Ok(())
    }
}

/// Session-confined policy memory.
#[derive(Debug, Clone, Default)]
pub struct PolicyState {
    /// b_{t-1}; `None` until seeded with the persona centroid.
    pub b_prev: Option<StyleVector>,
    /// Normalized user text → emitted vector (Hybrid+Cache only).
    pub cache: HashMap<String, StyleVector>,
    pub turn: usize,
}

impl PolicyState {
    pub fn seeded(centroid: StyleVector) -> Self {
        Self {
            b_prev: Some(centroid),
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Step {
    pub b_next: StyleVector,
    pub cache_hit: bool,
}

/// Lower-cased, whitespace-collapsed cache key.
pub fn cache_key(text: &str) -> String {
    text.split_whitespace()
        .map(str::to_lowercase)
        .collect::<Vec<_>>()
        .join(" ")
}

/// Shortens `delta` to length `kappa` when it is longer.
pub fn cap_delta(delta: StyleVector, kappa: f64) -> StyleVector {
    let n = delta.norm();
    if n <= kappa {
        delta
    } else {
        delta * (kappa / n)
    }
}

pub fn ema_blend(b_prev: StyleVector, u: StyleVector, alpha: f64) -> StyleVector {
    b_prev * (1.0 - alpha) + u * alpha
}

/// Jumps to `u` only when it lies strictly outside the band around `b_prev`.
pub fn deadband_gate(b_prev: StyleVector, u: StyleVector, epsilon: f64) -> StyleVector {
    if u.distance(&b_prev) > epsilon {
        u
    } else {
        b_prev
    }
}

/// Pulls `b` back onto the sphere of radius `rho` around `center`.
pub fn radius_clamp(b: StyleVector, center: StyleVector, rho: f64) -> StyleVector {
    let offset = b - center;
    let d = offset.norm();
    if d <= rho {
        b
    } else {
        center + offset * (rho / d)
    }
}

fn hybrid(cfg: &PolicyConfig, b_prev: StyleVector, u: StyleVector) -> StyleVector {
    b_prev + cap_delta(ema_blend(b_prev, u, cfg.alpha) - b_prev, cfg.kappa)
}

/// One turn of the chosen policy. Updates `state.b_prev` and `state.turn`.
pub fn policy_step(
    cfg: &PolicyConfig,
    state: &mut PolicyState,
    u: StyleVector,
    user_text: &str,
    centroid: StyleVector,
) -> Result<Step> {
    let b_prev = state.b_prev.ok_or(Error::StateNotSeeded)?;
    let mut cache_hit = false;
    let b_next = match cfg.kind {
        PolicyKind::Static => centroid,
        PolicyKind::Uncapped => u,
        PolicyKind::Cap => b_prev + cap_delta(u - b_prev, cfg.kappa),
        PolicyKind::Ema => ema_blend(b_prev, u, cfg.alpha),
        PolicyKind::DeadBand => deadband_gate(b_prev, u, cfg.epsilon),
        PolicyKind::Hybrid => hybrid(cfg, b_prev, u),
        PolicyKind::HybridRadius => radius_clamp(hybrid(cfg, b_prev, u), centroid, cfg.rho),
        PolicyKind::HybridCache => {
            let key = cache_key(user_text);
            match state.cache.get(&key) {
                Some(&v) => {
                    cache_hit = true;
                    v
                }
                None => {
                    let v = hybrid(cfg, b_prev, u);
                    state.cache.insert(key, v);
                    v
                }
            }
        }
    };
    state.b_prev = Some(b_next);
    state.turn += 1;
    Ok(Step { b_next, cache_hit })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(head: &[f64]) -> StyleVector {
        let mut a = [0.0; 8];
        a[..head.len()].copy_from_slice(head);
        StyleVector(a)
    }

    #[test]
    fn kind_names_round_trip() {
        for k in PolicyKind::ALL {
            assert_eq!(k.as_str().parse::<PolicyKind>().unwrap(), k);
            let json = serde_json::to_string(&k).unwrap();
            assert_eq!(json, format!("\"{}\"", k.as_str()));
        }
        assert!("echo".parse::<PolicyKind>().is_err());
    }

    #[test]
    fn config_defaults_from_json() {
        let c: PolicyConfig = serde_json::from_str(r#"{"kind":"hybrid_radius"}"#).unwrap();
        assert_eq!((c.kappa, c.alpha, c.epsilon, c.rho), (0.25, 0.5, 0.1, 1.5));
        assert!(serde_json::from_str::<PolicyConfig>(r#"{"kind":"cap","gain":1}"#).is_err());
        assert!(PolicyConfig::new(PolicyKind::Ema)
            .with_alpha(1.5)
            .validate()
            .is_err());
        assert!(PolicyConfig::new(PolicyKind::Cap)
            .with_kappa(0.0)
            .validate()
            .is_ok());
        assert_eq!(
            PolicyConfig::new(PolicyKind::Cap).named("cap-0.5").label(),
            "cap-0.5"
        );
    }

    #[test]
    fn cap_examples() {
        let small = v(&[0.1]);
        assert_eq!(cap_delta(small, 0.25), small);
        let capped = cap_delta(v(&[0.3, 0.4]), 0.25);
        assert!(capped.max_abs_diff(&v(&[0.15, 0.2])) < 1e-15);
        assert_eq!(cap_delta(v(&[0.3, 0.4]), 0.0), StyleVector::ZERO);
    }

    #[test]
    fn ema_examples() {
        let b = v(&[1.0, -2.0]);
        let u = v(&[3.0, 5.0]);
        assert_eq!(ema_blend(b, u, 1.0), u);
        assert_eq!(ema_blend(b, u, 0.0), b);
        assert_eq!(
            ema_blend(StyleVector::ZERO, StyleVector::splat(1.0), 0.5),
            StyleVector::splat(0.5)
        );
    }

    #[test]
    fn deadband_examples() {
        let b = StyleVector::ZERO;
        assert_eq!(deadband_gate(b, v(&[0.05]), 0.1), b);
        assert_eq!(deadband_gate(b, v(&[0.2]), 0.1), v(&[0.2]));
        // exactly on the boundary holds
        assert_eq!(deadband_gate(b, v(&[0.5]), 0.5), b);
    }

    #[test]
    fn radius_examples() {
        let c = v(&[1.0]);
        let far = radius_clamp(v(&[3.0]), c, 1.5);
        assert!(far.max_abs_diff(&v(&[2.5])) < 1e-15);
        assert_eq!(radius_clamp(c, c, 1.5), c);
        assert_eq!(radius_clamp(v(&[2.0]), c, 1.5), v(&[2.0]));
    }

    #[test]
    fn unseeded_state_errors() {
        let mut st = PolicyState::default();
        let cfg = PolicyConfig::new(PolicyKind::Uncapped);
        assert!(matches!(
            policy_step(&cfg, &mut st, StyleVector::ZERO, "x", StyleVector::ZERO),
            Err(Error::StateNotSeeded)
        ));
    }

    #[test]
    fn dispatch_anchors() {
        let c = v(&[0.2, -0.1]);
        let u = v(&[1.0, 2.0, 3.0]);
        let mut st = PolicyState::seeded(c);
        let s = policy_step(&PolicyConfig::new(PolicyKind::Static), &mut st, u, "hi", c).unwrap();
        assert_eq!(s.b_next, c);
        let s = policy_step(
            &PolicyConfig::new(PolicyKind::Uncapped),
            &mut st,
            u,
            "hi",
            c,
        )
        .unwrap();
        assert_eq!(s.b_next, u);
        assert_eq!(st.turn, 2);
        assert_eq!(st.b_prev, Some(u));
    }

    #[test]
    fn cache_replays_first_vector() {
        let cfg = PolicyConfig::new(PolicyKind::HybridCache);
        let c = StyleVector::ZERO;
        let mut st = PolicyState::seeded(c);
        let inputs = [
            (v(&[1.0]), "Hello there"),
            (v(&[0.0, 1.0]), "ok"),
            (v(&[2.0, 2.0]), "what now"),
            (v(&[-1.0]), "sure"),
            (v(&[0.0, 1.0]), "OK "),
        ];
        let mut out = Vec::new();
        for (u, t) in inputs {
            out.push(policy_step(&cfg, &mut st, u, t, c).unwrap());
        }
        assert!(out[4].cache_hit);
        assert_eq!(out[4].b_next, out[1].b_next);
        assert_eq!(out.iter().filter(|s| s.cache_hit).count(), 1);
        assert_eq!(cache_key("  OK\tthen  "), "ok then");
    }
}
