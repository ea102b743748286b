//! Per-turn and per-session evaluation quantities.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::promptgen::{instruction_churn, InstructionSet, MAX_CHURN};
use crate::textfeat::{category_rate, tokenize, WordSet};
use crate::vector::StyleVector;

/// Norms at or below this are treated as the zero vector by [`cosine`].
pub const ZERO_NORM: f64 = 1e-12;
pub const FORMAL_UPPER: f64 = 0.33;
pub const INFORMAL_LOWER: f64 = 0.66;
/// Smoothing term in the classic LSM denominator.
pub const LSM_SMOOTHING: f64 = 0.0001;

/// Cosine similarity with total conventions: identical inputs and two zero
/// vectors give 1, exactly one zero vector gives 0.
pub fn cosine(a: &StyleVector, b: &StyleVector) -> f64 {
    if a == b {
        return 1.0;
    }
    let (na, nb) = (a.norm(), b.norm());
    match (na <= ZERO_NORM, nb <= ZERO_NORM) {
        (true, true) => 1.0,
        (true, false) | (false, true) => 0.0,
        _ => (a.dot(b) / (na * nb)).clamp(-1.0, 1.0),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RegisterBin {
    Formal,
    Neutral,
    Informal,
}

/// Bins raw informality at 0.33 / 0.66; both boundaries fall in Neutral.
pub fn register_bin(informality_raw: f64) -> Result<RegisterBin> {
    if !(0.0..=1.0).contains(&informality_raw) {
        return Err(Error::InvalidArgument(format!(
            "informality {informality_raw} outside [0, 1]"
        )));
    }
    Ok(if informality_raw < FORMAL_UPPER {
        RegisterBin::Formal
    } else if informality_raw <= INFORMAL_LOWER {
        RegisterBin::Neutral
    } else {
        RegisterBin::Informal
    })
}

/// Share of consecutive pairs whose bin changes; 0 for fewer than 2 bins.
pub fn flip_rate(bins: &[RegisterBin]) -> f64 {
    if bins.len() < 2 {
        return 0.0;
    }
    let flips = bins.windows(2).filter(|w| w[0] != w[1]).count();
    flips as f64 / (bins.len() - 1) as f64
}

/// `1 - mean(churn) / 16`, clamped to [0, 1]; 1 for an empty sequence.
pub fn legibility_score(churns: &[usize]) -> f64 {
    if churns.is_empty() {
        return 1.0;
    }
    let mean = churns.iter().sum::<usize>() as f64 / churns.len() as f64;
    (1.0 - mean / MAX_CHURN as f64).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TurnMetrics {
    pub synchrony: f64,
    pub stability: f64,
    pub coherence: f64,
    pub churn: usize,
    pub register_bin: RegisterBin,
    pub flipped: bool,
    pub cache_hit: bool,
}

/// Everything one turn's metrics depend on.
#[derive(Debug, Clone, Copy)]
pub struct TurnObservation<'a> {
    pub user: &'a StyleVector,
    pub bot: &'a StyleVector,
    pub bot_prev: &'a StyleVector,
    pub archetype: &'a StyleVector,
    pub prev_instr: &'a InstructionSet,
    pub cur_instr: &'a InstructionSet,
    /// `None` on the first turn.
    pub prev_bin: Option<RegisterBin>,
    pub informality_raw: f64,
    pub cache_hit: bool,
}

pub fn turn_metrics(obs: TurnObservation<'_>) -> Result<TurnMetrics> {
    let bin = register_bin(obs.informality_raw)?;
    Ok(TurnMetrics {
        synchrony: cosine(obs.user, obs.bot),
        stability: cosine(obs.bot, obs.bot_prev),
        coherence: cosine(obs.bot, obs.archetype),
        churn: instruction_churn(obs.prev_instr, obs.cur_instr),
        register_bin: bin,
        flipped: obs.prev_bin.is_some_and(|p| p != bin),
        cache_hit: obs.cache_hit,
    })
}

/// Per-session means of the per-turn values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionSummary {
    pub session_id: String,
    pub participant_id: String,
    pub policy: String,
    pub synchrony: f64,
    pub stability: f64,
    pub coherence: f64,
    pub legibility: f64,
    pub flip_rate: f64,
    pub cache_hit_rate: f64,
    pub mean_churn: f64,
    pub n_turns: usize,
}

impl SessionSummary {
    pub fn from_turns(
        session_id: &str,
        participant_id: &str,
        policy: &str,
        turns: &[TurnMetrics],
    ) -> Self {
        let n = turns.len().max(1) as f64;
        let mean = |f: fn(&TurnMetrics) -> f64| turns.iter().map(f).sum::<f64>() / n;
        let churns: Vec<usize> = turns.iter().map(|t| t.churn).collect();
        let flips = turns.iter().filter(|t| t.flipped).count();
        Self {
            session_id: session_id.to_string(),
            participant_id: participant_id.to_string(),
            policy: policy.to_string(),
            synchrony: mean(|t| t.synchrony),
            stability: mean(|t| t.stability),
            coherence: mean(|t| t.coherence),
            legibility: legibility_score(&churns),
            flip_rate: if turns.len() < 2 {
                0.0
            } else {
                flips as f64 / (turns.len() - 1) as f64
            },
            cache_hit_rate: mean(|t| if t.cache_hit { 1.0 } else { 0.0 }),
            mean_churn: mean(|t| t.churn as f64),
            n_turns: turns.len(),
        }
    }

    /// Metric by column name, for generic aggregation and ranking.
    pub fn metric(&self, name: &str) -> Option<f64> {
        Some(match name {
            "synchrony" => self.synchrony,
            "stability" => self.stability,
            "coherence" => self.coherence,
            "legibility" => self.legibility,
            "flip_rate" => self.flip_rate,
            "cache_hit_rate" => self.cache_hit_rate,
            "mean_churn" => self.mean_churn,
            _ => return None,
        })
    }
}

pub const SUMMARY_METRICS: [&str; 7] = [
    "synchrony",
    "stability",
    "coherence",
    "legibility",
    "flip_rate",
    "cache_hit_rate",
    "mean_churn",
];

/// Mean over categories of `1 - |p_a - p_b| / (p_a + p_b + 0.0001)`.
pub fn classic_lsm(text_a: &str, text_b: &str, categories: &[(String, WordSet)]) -> Result<f64> {
    if tokenize::tokens(text_a).is_empty() || tokenize::tokens(text_b).is_empty() {
        return Err(Error::EmptyUtterance);
    }
    if categories.is_empty() {
        return Err(Error::InvalidArgument("no LSM categories".into()));
    }
    let total: f64 = categories
        .iter()
        .map(|(_, set)| {
            let pa = category_rate(text_a, set);
            let pb = category_rate(text_b, set);
            1.0 - (pa - pb).abs() / (pa + pb + LSM_SMOOTHING)
        })
        .sum();
    Ok(total / categories.len() as f64)
}

/// Cosine between the mean of the last `k` user vectors and the next one,
/// averaged per session and then across sessions that have eligible turns.
pub fn predictive_synchrony(user_series: &[Vec<StyleVector>], k: usize) -> Result<f64> {
    if k == 0 {
        return Err(Error::InvalidArgument("window size must be >= 1".into()));
    }
    let per_session: Vec<f64> = user_series
        .iter()
        .filter_map(|series| {
            let sims: Vec<f64> = (k..series.len())
                .map(|next| {
                    let window = StyleVector::mean(&series[next - k..next]).expect("k >= 1");
                    cosine(&window, &series[next])
                })
                .collect();
            (!sims.is_empty()).then(|| sims.iter().sum::<f64>() / sims.len() as f64)
        })
        .collect();
    if per_session.is_empty() {
        return Err(Error::InsufficientHistory { window: k });
    }
    Ok(per_session.iter().sum::<f64>() / per_session.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::textfeat::LexiconSet;
    use RegisterBin::*;

    fn e(i: usize) -> StyleVector {
        let mut v = StyleVector::ZERO;
        v.0[i] = 1.0;
        v
    }

    #[test]
    fn cosine_conventions() {
        let v = StyleVector::from([0.3, -1.2, 0.7, 2.0, 0.0, 0.1, -0.4, 0.9]);
        assert_eq!(cosine(&v, &v), 1.0);
        assert!((cosine(&v, &(v * 3.0)) - 1.0).abs() < 1e-15);
        assert_eq!(cosine(&e(0), &e(1)), 0.0);
        assert_eq!(cosine(&StyleVector::ZERO, &StyleVector::ZERO), 1.0);
        assert_eq!(cosine(&StyleVector::ZERO, &v), 0.0);
        assert_eq!(cosine(&v, &StyleVector::splat(1e-15)), 0.0);
        assert!((cosine(&v, &(v * -1.0)) + 1.0).abs() < 1e-15);
    }

    #[test]
    fn register_bins() {
        assert_eq!(register_bin(0.5).unwrap(), Neutral);
        assert_eq!(register_bin(0.0).unwrap(), Formal);
        assert_eq!(register_bin(0.33).unwrap(), Neutral);
        assert_eq!(register_bin(0.66).unwrap(), Neutral);
        assert_eq!(register_bin(0.661).unwrap(), Informal);
        assert_eq!(register_bin(1.0).unwrap(), Informal);
        assert!(register_bin(1.01).is_err());
        assert!(register_bin(f64::NAN).is_err());
    }

    #[test]
    fn flips() {
        assert_eq!(flip_rate(&[Formal, Formal, Formal]), 0.0);
        assert_eq!(flip_rate(&[Formal, Informal, Formal]), 1.0);
        assert_eq!(flip_rate(&[Formal, Informal, Informal]), 0.5);
        assert_eq!(flip_rate(&[Formal]), 0.0);
        assert_eq!(flip_rate(&[]), 0.0);
    }

    #[test]
    fn legibility() {
        assert_eq!(legibility_score(&[0, 0, 0]), 1.0);
        assert_eq!(legibility_score(&[16, 16]), 0.0);
        assert_eq!(legibility_score(&[0, 8]), 0.75);
        assert_eq!(legibility_score(&[]), 1.0);
    }

    #[test]
    fn lsm_examples() {
        let cats = &LexiconSet::shared().lsm_categories;
        let same = classic_lsm(
            "I think that we should go to the park",
            "I think that we should go to the park",
            cats,
        )
        .unwrap();
        assert!((0.999..=1.0).contains(&same));
        assert_eq!(classic_lsm("cat mat", "dog log", cats).unwrap(), 1.0);
        assert!(classic_lsm("", "x", cats).is_err());

        // single category, p_a = 0.1, p_b = 0
        let set: WordSet = ["the".to_string()].into_iter().collect();
        let one = vec![("articles".to_string(), set)];
        let a = "the b c d e f g h i j";
        let v = classic_lsm(a, "x y z", &one).unwrap();
        assert!((v - (1.0 - 0.1 / 0.1001)).abs() < 1e-12);
        assert!((v - 0.001).abs() < 1e-5);
    }

    #[test]
    fn predictive_synchrony_examples() {
        let constant = vec![StyleVector::splat(0.7); 10];
        for k in [1, 3, 5, 8] {
            let p = predictive_synchrony(std::slice::from_ref(&constant), k).unwrap();
            assert!((p - 1.0).abs() < 1e-12);
        }
        assert!(matches!(
            predictive_synchrony(std::slice::from_ref(&constant), 10),
            Err(Error::InsufficientHistory { window: 10 })
        ));
        assert!(predictive_synchrony(&[constant], 0).is_err());

        // Hand-computed: series e0, e1, e0 with k = 1 gives cos(e0,e1)=0 and
        // cos(e1,e0)=0; k = 2 gives cos((e0+e1)/2, e0) = 1/sqrt(2).
        let s = vec![e(0), e(1), e(0)];
        assert_eq!(
            predictive_synchrony(std::slice::from_ref(&s), 1).unwrap(),
            0.0
        );
        let k2 = predictive_synchrony(&[s], 2).unwrap();
        assert!((k2 - 0.5f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn summary_macro_means() {
        let t = |s: f64, hit: bool, churn: usize, flipped: bool| TurnMetrics {
            synchrony: s,
            stability: 1.0,
            coherence: 0.5,
            churn,
            register_bin: Neutral,
            flipped,
            cache_hit: hit,
        };
        let turns = [
            t(1.0, false, 0, false),
            t(0.0, true, 8, true),
            t(0.5, false, 4, false),
        ];
        let s = SessionSummary::from_turns("s", "p", "cap", &turns);
        assert_eq!(s.synchrony, 0.5);
        assert_eq!(s.flip_rate, 0.5);
        assert!((s.cache_hit_rate - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(s.legibility, 0.75);
        assert_eq!(s.n_turns, 3);
        assert_eq!(s.metric("legibility"), Some(0.75));
        assert_eq!(s.metric("nope"), None);
    }
}
