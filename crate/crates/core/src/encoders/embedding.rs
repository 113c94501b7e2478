use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A unit-norm vector.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Embedding(Vec<f64>);

pub fn dot(u: &[f64], v: &[f64]) -> f64 {
    u.iter().zip(v).map(|(a, b)| a * b).sum()
}

impl Embedding {
    /// Normalizes `values` to unit length; the zero vector is rejected.
    pub fn normalized(mut values: Vec<f64>) -> Result<Self> {
        let norm = dot(&values, &values).sqrt();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(Error::Numerical(format!("cannot normalize a vector of norm {norm}")));
        }
        for v in &mut values {
            *v /= norm;
        }
        Ok(Embedding(values))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn norm(&self) -> f64 {
        dot(&self.0, &self.0).sqrt()
    }
}

/// Cosine similarity from the general formula (not assuming unit inputs), clamped to [-1, 1].
pub fn cosine(u: &Embedding, v: &Embedding) -> f64 {
    let (a, b) = (u.values(), v.values());
    let denom = dot(a, a).sqrt() * dot(b, b).sqrt();
    if denom == 0.0 {
        return 0.0;
    }
    (dot(a, b) / denom).clamp(-1.0, 1.0)
}

/// Gradient through `y = x / ‖x‖`: given `y`, `‖x‖` and `dL/dy`, returns `dL/dx`.
pub fn normalize_backward(unit: &[f64], norm: f64, grad: &[f64]) -> Vec<f64> {
    let proj = dot(unit, grad);
    unit.iter()
        .zip(grad)
        .map(|(u, g)| (g - u * proj) / norm)
        .collect()
}

/// Renormalized mean of the per-anchor query embeddings.
#[derive(Clone, Debug, PartialEq)]
pub struct AnchorEnhancedEmbedding {
    pub embedding: Embedding,
    /// Number of averaged anchors; zero means the classic embedding was substituted.
    pub source_count: usize,
    /// Norm of the mean before renormalization (1 on fallback).
    pub mean_norm: f64,
}

pub fn anchor_enhanced_embedding(per_anchor: &[Embedding], classic: &Embedding) -> Result<AnchorEnhancedEmbedding> {
    if per_anchor.is_empty() {
        return Ok(AnchorEnhancedEmbedding {
            embedding: classic.clone(),
            source_count: 0,
            mean_norm: 1.0,
        });
    }
    let dim = classic.dim();
    if per_anchor.iter().any(|e| e.dim() != dim) {
        return Err(Error::Data("anchor embeddings differ in dimension".into()));
    }
    let k = per_anchor.len() as f64;
    let mut mean = vec![0.0; dim];
    for e in per_anchor {
        for (m, v) in mean.iter_mut().zip(e.values()) {
            *m += v;
        }
    }
    for m in &mut mean {
        *m /= k;
    }
    let mean_norm = dot(&mean, &mean).sqrt();
    if mean_norm < 1e-12 {
        return Err(Error::Numerical("anchor embeddings average to the zero vector".into()));
    }
    Ok(AnchorEnhancedEmbedding {
        embedding: Embedding::normalized(mean)?,
        source_count: per_anchor.len(),
        mean_norm,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e(v: &[f64]) -> Embedding {
        Embedding::normalized(v.to_vec()).unwrap()
    }

    #[test]
    fn averaging_examples() {
        let one = anchor_enhanced_embedding(&[e(&[1.0, 0.0])], &e(&[0.0, 1.0])).unwrap();
        assert_eq!(one.embedding.values(), &[1.0, 0.0]);
        assert_eq!(one.source_count, 1);

        let two = anchor_enhanced_embedding(&[e(&[1.0, 0.0]), e(&[0.0, 1.0])], &e(&[0.0, 1.0])).unwrap();
        for v in two.embedding.values() {
            assert!((v - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-8);
        }

        let fallback = anchor_enhanced_embedding(&[], &e(&[0.0, 1.0])).unwrap();
        assert_eq!(fallback.embedding.values(), &[0.0, 1.0]);
        assert_eq!(fallback.source_count, 0);
    }

    #[test]
    fn antipodal_mean_is_an_error() {
        assert!(matches!(
            anchor_enhanced_embedding(&[e(&[1.0, 0.0]), e(&[-1.0, 0.0])], &e(&[0.0, 1.0])),
            Err(Error::Numerical(_))
        ));
    }

    #[test]
    fn cosine_examples() {
        let u = e(&[0.6, 0.8]);
        assert!((cosine(&u, &u) - 1.0).abs() < 1e-12);
        assert_eq!(cosine(&e(&[1.0, 0.0]), &e(&[0.0, 1.0])), 0.0);
        assert!((cosine(&u, &e(&[-0.6, -0.8])) + 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_vector_rejected() {
        assert!(Embedding::normalized(vec![0.0, 0.0]).is_err());
    }
}
