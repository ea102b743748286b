//! Fixed-width style vectors.
//!
//! Feature order is part of the on-disk contract (persona files, fragment
//! table indices) and must not change.

use std::ops::{Add, Index, Mul, Sub};

use serde::{Deserialize, Serialize};

pub const DIM: usize = 8;

/// Feature names in vector order.
pub const FEATURE_NAMES: [&str; DIM] = [
    "informality",
    "sentiment",
    "avg_sentence_len",
    "readability",
    "social_rate",
    "cognitive_rate",
    "affective_rate",
    "function_word_ratio",
];

pub const INFORMALITY: usize = 0;

/// Raw (unstandardized) features of one utterance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RawStyleVector {
    pub informality: f64,
    pub sentiment: f64,
    pub avg_sentence_len: f64,
    pub readability: f64,
    pub social_rate: f64,
    pub cognitive_rate: f64,
    pub affective_rate: f64,
    pub function_word_ratio: f64,
}

impl RawStyleVector {
    pub fn to_array(&self) -> [f64; DIM] {
        [
            self.informality,
            self.sentiment,
            self.avg_sentence_len,
            self.readability,
            self.social_rate,
            self.cognitive_rate,
            self.affective_rate,
            self.function_word_ratio,
        ]
    }

    pub fn from_array(a: [f64; DIM]) -> Self {
        Self {
            informality: a[0],
            sentiment: a[1],
            avg_sentence_len: a[2],
            readability: a[3],
            social_rate: a[4],
            cognitive_rate: a[5],
            affective_rate: a[6],
            function_word_ratio: a[7],
        }
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|x| x.is_finite())
    }
}

/// A vector in (usually standardized) style space.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct StyleVector(pub [f64; DIM]);

impl StyleVector {
    pub const ZERO: StyleVector = StyleVector([0.0; DIM]);

    pub fn splat(x: f64) -> Self {
        StyleVector([x; DIM])
    }

    pub fn as_array(&self) -> &[f64; DIM] {
        &self.0
    }

    pub fn dot(&self, other: &StyleVector) -> f64 {
        self.0.iter().zip(other.0.iter()).map(|(a, b)| a * b).sum()
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn distance(&self, other: &StyleVector) -> f64 {
        (*self - *other).norm()
    }

    pub fn scale(&self, k: f64) -> StyleVector {
        StyleVector(self.0.map(|x| x * k))
    }

    pub fn max_abs_diff(&self, other: &StyleVector) -> f64 {
        self.0
            .iter()
            .zip(other.0.iter())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Componentwise mean; `None` for an empty iterator.
    pub fn mean<'a>(vs: impl IntoIterator<Item = &'a StyleVector>) -> Option<StyleVector> {
        let mut acc = [0.0; DIM];
        let mut n = 0usize;
        for v in vs {
            for (a, x) in acc.iter_mut().zip(v.0.iter()) {
                *a += x;
            }
            n += 1;
        }
        (n > 0).then(|| StyleVector(acc.map(|a| a / n as f64)))
    }
}

impl From<[f64; DIM]> for StyleVector {
    fn from(a: [f64; DIM]) -> Self {
        StyleVector(a)
    }
}

impl Index<usize> for StyleVector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl Add for StyleVector {
    type Output = StyleVector;
    fn add(self, rhs: StyleVector) -> StyleVector {
        let mut out = self.0;
        for (o, r) in out.iter_mut().zip(rhs.0.iter()) {
            *o += r;
        }
        StyleVector(out)
    }
}

impl Sub for StyleVector {
    type Output = StyleVector;
    fn sub(self, rhs: StyleVector) -> StyleVector {
        let mut out = self.0;
        for (o, r) in out.iter_mut().zip(rhs.0.iter()) {
            *o -= r;
        }
        StyleVector(out)
    }
}

impl Mul<f64> for StyleVector {
    type Output = StyleVector;
    fn mul(self, k: f64) -> StyleVector {
        self.scale(k)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn raw_array_order_is_stable() {
        let a = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0];
        let raw = RawStyleVector::from_array(a);
        assert_eq!(raw.to_array(), a);
        assert_eq!(raw.readability, 4.0);
        assert_eq!(FEATURE_NAMES[INFORMALITY], "informality");
    }

    #[test]
    fn arithmetic() {
        let a = StyleVector::from([3.0, 4.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        assert_eq!(a.norm(), 5.0);
        assert_eq!((a - a).norm(), 0.0);
        assert_eq!((a + a)[0], 6.0);
        assert_eq!((a * 0.5)[1], 2.0);
        assert_eq!(StyleVector::mean([&a, &StyleVector::ZERO]).unwrap()[0], 1.5);
        assert!(StyleVector::mean(std::iter::empty()).is_none());
    }
}
