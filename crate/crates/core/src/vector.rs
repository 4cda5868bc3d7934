use std::ops::{Deref, Index};

use serde::{Deserialize, Serialize};

/// A point (or gradient, or moment accumulator) in parameter space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ParamVector(Vec<f64>);

impl ParamVector {
    pub fn new(entries: Vec<f64>) -> Self {
        Self(entries)
    }

    pub fn zeros(d: usize) -> Self {
        Self(vec![0.0; d])
    }

    pub fn filled(d: usize, value: f64) -> Self {
        Self(vec![value; d])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|x| x.is_finite())
    }

    /// Euclidean norm, scaled by the largest entry so that vectors with
    /// entries near the bottom of the f64 range do not underflow.
    pub fn norm(&self) -> f64 {
        scaled_norm(self.0.iter().copied())
    }

    pub fn distance(&self, other: &ParamVector) -> f64 {
        debug_assert_eq!(self.len(), other.len());
        scaled_norm(self.0.iter().zip(&other.0).map(|(a, b)| a - b))
    }

    pub fn dot(&self, other: &ParamVector) -> f64 {
        self.0.iter().zip(&other.0).map(|(a, b)| a * b).sum()
    }

    pub fn sub(&self, other: &ParamVector) -> ParamVector {
        self.zip_map(other, |a, b| a - b)
    }

    pub fn add(&self, other: &ParamVector) -> ParamVector {
        self.zip_map(other, |a, b| a + b)
    }

    pub fn scale(&self, c: f64) -> ParamVector {
        self.map(|x| c * x)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> ParamVector {
        ParamVector(self.0.iter().map(|&x| f(x)).collect())
    }

    pub fn zip_map(&self, other: &ParamVector, f: impl Fn(f64, f64) -> f64) -> ParamVector {
        debug_assert_eq!(self.len(), other.len());
        ParamVector(self.0.iter().zip(&other.0).map(|(&a, &b)| f(a, b)).collect())
    }

    pub fn max_abs_diff(&self, other: &ParamVector) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

fn scaled_norm(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let scale = values.clone().fold(0.0_f64, |m, x| m.max(x.abs()));
    if scale == 0.0 || !scale.is_finite() {
        return if values.clone().any(|x| x.is_nan()) {
            f64::NAN
        } else {
            scale
        };
    }
    scale * values.map(|x| (x / scale).powi(2)).sum::<f64>().sqrt()
}

impl Deref for ParamVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl Index<usize> for ParamVector {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl From<Vec<f64>> for ParamVector {
    fn from(v: Vec<f64>) -> Self {
        Self(v)
    }
}

impl From<&[f64]> for ParamVector {
    fn from(v: &[f64]) -> Self {
        Self(v.to_vec())
    }
}
