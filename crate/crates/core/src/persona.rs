//! Per-corpus standardization, persona centroid and assistant archetype.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::textfeat::{self, lexicon::ARCHETYPE_UTTERANCES, LexiconSet};
use crate::vector::{RawStyleVector, StyleVector, DIM};

/// Columns whose population std falls below this are treated as constant.
pub const MIN_STD: f64 = 1e-9;

/// Per-feature z-scoring fitted on one corpus.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureScaler {
    pub means: [f64; DIM],
    /// Population standard deviations, with constant columns mapped to 1.0.
    pub stds: [f64; DIM],
    pub fitted_on: String,
    pub n_samples: usize,
}

impl FeatureScaler {
    pub fn fit(raw: &[RawStyleVector], fitted_on: impl Into<String>) -> Result<Self> {
        if raw.is_empty() {
            return Err(Error::NoFittingData);
        }
        let n = raw.len() as f64;
        let mut means = [0.0; DIM];
        for v in raw {
            for (m, x) in means.iter_mut().zip(v.to_array()) {
                *m += x;
            }
        }
        means.iter_mut().for_each(|m| *m /= n);
        let mut vars = [0.0; DIM];
        for v in raw {
            for ((s, x), m) in vars.iter_mut().zip(v.to_array()).zip(means) {
                *s += (x - m) * (x - m);
            }
        }
        let stds = vars.map(|s| {
            let sd = (s / n).sqrt();
            if sd < MIN_STD {
                1.0
            } else {
                sd
            }
        });
        Ok(Self {
            means,
            stds,
            fitted_on: fitted_on.into(),
            n_samples: raw.len(),
        })
    }

    pub fn standardize(&self, v: &RawStyleVector) -> StyleVector {
        let a = v.to_array();
        StyleVector(std::array::from_fn(|i| {
            (a[i] - self.means[i]) / self.stds[i]
        }))
    }

    /// Maps a z-space vector back to raw feature units.
    pub fn invert(&self, z: &StyleVector) -> RawStyleVector {
        RawStyleVector::from_array(std::array::from_fn(|i| z[i] * self.stds[i] + self.means[i]))
    }
}

/// Mean of the standardized vectors.
pub fn compute_centroid(raw: &[RawStyleVector], scaler: &FeatureScaler) -> Result<StyleVector> {
    let z: Vec<StyleVector> = raw.iter().map(|v| scaler.standardize(v)).collect();
    StyleVector::mean(&z).ok_or(Error::NoFittingData)
}

/// Places a raw archetype into a corpus's z-space.
pub fn standardize_archetype(
    raw_archetype: &RawStyleVector,
    scaler: &FeatureScaler,
) -> StyleVector {
    scaler.standardize(raw_archetype)
}

/// Mean raw style vector of non-blank utterances, one per line.
pub fn archetype_from_utterances(src: &str, lex: &LexiconSet) -> Result<RawStyleVector> {
    let vectors: Vec<[f64; DIM]> = src
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| textfeat::style_vector(l, lex).map(|v| v.to_array()))
        .collect::<Result<_>>()?;
    if vectors.is_empty() {
        return Err(Error::NoFittingData);
    }
    let n = vectors.len() as f64;
    Ok(RawStyleVector::from_array(std::array::from_fn(|i| {
        vectors.iter().map(|v| v[i]).sum::<f64>() / n
    })))
}

/// Raw archetype of the shipped synthetic assistant utterances.
pub fn default_archetype(lex: &LexiconSet) -> RawStyleVector {
    archetype_from_utterances(ARCHETYPE_UTTERANCES, lex).expect("shipped archetype lines are valid")
}

#[derive(Debug, Clone, PartialEq)]
pub struct PersonaModel {
    pub scaler: FeatureScaler,
    /// Policy start state and Static target (b_c).
    pub centroid: StyleVector,
    pub raw_archetype: RawStyleVector,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PersonaFile {
    means: [f64; DIM],
    stds: [f64; DIM],
    centroid: [f64; DIM],
    raw_archetype: [f64; DIM],
    fitted_on: String,
    n_samples: usize,
}

impl PersonaModel {
    /// Fits scaler and centroid on `raw`.
    pub fn fit(
        raw: &[RawStyleVector],
        fitted_on: impl Into<String>,
        raw_archetype: RawStyleVector,
    ) -> Result<Self> {
        let scaler = FeatureScaler::fit(raw, fitted_on)?;
        let centroid = compute_centroid(raw, &scaler)?;
        Ok(Self {
            scaler,
            centroid,
            raw_archetype,
        })
    }

    /// Coherence anchor in this persona's z-space.
    pub fn archetype_z(&self) -> StyleVector {
        standardize_archetype(&self.raw_archetype, &self.scaler)
    }

    /// Same scaler, with the standardized archetype as the policy centroid.
    pub fn anchored_to_archetype(mut self) -> Self {
        self.centroid = self.archetype_z();
        self
    }

    pub fn standardize(&self, v: &RawStyleVector) -> StyleVector {
        self.scaler.standardize(v)
    }

    pub fn to_json(&self) -> Result<String> {
        let file = PersonaFile {
            means: self.scaler.means,
            stds: self.scaler.stds,
            centroid: self.centroid.0,
            raw_archetype: self.raw_archetype.to_array(),
            fitted_on: self.scaler.fitted_on.clone(),
            n_samples: self.scaler.n_samples,
        };
        let mut s = serde_json::to_string_pretty(&file)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(src: &str) -> Result<Self> {
        let f: PersonaFile = serde_json::from_str(src)?;
        if f.n_samples == 0 {
            return Err(Error::InvalidArgument(
                "persona n_samples must be positive".into(),
            ));
        }
        if f.stds.iter().any(|s| !s.is_finite() || *s <= 0.0) {
            return Err(Error::InvalidArgument(
                "persona stds must be positive".into(),
            ));
        }
        Ok(Self {
            scaler: FeatureScaler {
                means: f.means,
                stds: f.stds,
                fitted_on: f.fitted_on,
                n_samples: f.n_samples,
            },
            centroid: StyleVector(f.centroid),
            raw_archetype: RawStyleVector::from_array(f.raw_archetype),
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let s = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn raw(a: [f64; DIM]) -> RawStyleVector {
        RawStyleVector::from_array(a)
    }

    #[test]
    fn two_point_column() {
        let s = FeatureScaler::fit(&[raw([0.0; DIM]), raw([2.0; DIM])], "t").unwrap();
        assert_eq!(s.means, [1.0; DIM]);
        assert_eq!(s.stds, [1.0; DIM]);
        assert_eq!(s.standardize(&raw([2.0; DIM])), StyleVector::splat(1.0));
    }

    #[test]
    fn constant_column_falls_back() {
        let mut a = [0.0; DIM];
        let rows: Vec<_> = (0..3)
            .map(|i| {
                a[0] = 5.0;
                a[1] = i as f64;
                raw(a)
            })
            .collect();
        let s = FeatureScaler::fit(&rows, "t").unwrap();
        assert_eq!(s.stds[0], 1.0);
        for r in &rows {
            assert_eq!(s.standardize(r)[0], 0.0);
        }
    }

    #[test]
    fn single_vector_and_empty() {
        let v = raw([1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0]);
        let s = FeatureScaler::fit(&[v], "t").unwrap();
        assert_eq!(s.means, v.to_array());
        assert_eq!(s.stds, [1.0; DIM]);
        assert!(matches!(
            FeatureScaler::fit(&[], "t"),
            Err(Error::NoFittingData)
        ));
        assert!(compute_centroid(&[], &s).is_err());
        assert_eq!(compute_centroid(&[v], &s).unwrap(), StyleVector::ZERO);
    }

    #[test]
    fn inverse_round_trip() {
        let rows = [
            raw([0.1, -0.3, 7.0, 80.0, 0.1, 0.0, 0.2, 0.4]),
            raw([0.7, 0.5, 12.0, 55.5, 0.0, 0.3, 0.0, 0.6]),
        ];
        let s = FeatureScaler::fit(&rows, "t").unwrap();
        let v = raw([0.33, 0.1, 9.5, 61.0, 0.05, 0.2, 0.1, 0.5]);
        let back = s.invert(&s.standardize(&v)).to_array();
        for (a, b) in back.iter().zip(v.to_array()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn symmetric_centroid_is_zero() {
        let s = FeatureScaler::fit(&[raw([0.0; DIM])], "t").unwrap();
        let c = compute_centroid(&[raw([1.5; DIM]), raw([-1.5; DIM])], &s).unwrap();
        assert_eq!(c, StyleVector::ZERO);
    }

    #[test]
    fn archetype_depends_on_scaler() {
        let arch = default_archetype(LexiconSet::shared());
        assert!(arch.is_finite());
        let s1 = FeatureScaler::fit(&[raw([0.0; DIM]), raw([2.0; DIM])], "a").unwrap();
        let s2 = FeatureScaler::fit(&[raw([1.0; DIM]), raw([5.0; DIM])], "b").unwrap();
        assert_ne!(
            standardize_archetype(&arch, &s1),
            standardize_archetype(&arch, &s2)
        );
        let at_mean = raw(s1.means);
        assert_eq!(standardize_archetype(&at_mean, &s1), StyleVector::ZERO);
    }

    #[test]
    fn archetype_from_lines() {
        let lex = LexiconSet::shared();
        let one = archetype_from_utterances("Hello there, friend.\n\n", lex).unwrap();
        assert_eq!(
            one,
            textfeat::style_vector("Hello there, friend.", lex).unwrap()
        );
        assert!(archetype_from_utterances("\n  \n", lex).is_err());
        assert!(archetype_from_utterances("ok\n...\n", lex).is_err());
    }

    #[test]
    fn json_rejects_unknown_fields() {
        let p =
            PersonaModel::fit(&[raw([0.0; DIM]), raw([1.0; DIM])], "c", raw([0.5; DIM])).unwrap();
        let mut v: serde_json::Value = serde_json::from_str(&p.to_json().unwrap()).unwrap();
        v["extra"] = serde_json::json!(1);
        assert!(PersonaModel::from_json(&v.to_string()).is_err());
    }
}
