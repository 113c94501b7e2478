use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One InfoNCE term and its gradients.
#[derive(Clone, Debug, PartialEq)]
pub struct InfoNce {
    pub loss: f64,
    /// `∂L/∂pos`
    pub grad_pos: f64,
    /// `∂L/∂neg_j`
    pub grad_negs: Vec<f64>,
    /// `∂L/∂ln τ`
    pub grad_log_tau: f64,
}

/// `−log softmax` of the margin-shifted positive logit `(pos − γ)/τ` against the
/// negative logits `neg/τ`, evaluated with max subtraction.
pub fn info_nce(pos: f64, negs: &[f64], margin: f64, tau: f64) -> Result<InfoNce> {
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(Error::Numerical(format!("temperature must be positive, got {tau}")));
    }
    if !pos.is_finite() || !margin.is_finite() || negs.iter().any(|n| !n.is_finite()) {
        return Err(Error::Numerical("non-finite score in contrastive loss".into()));
    }
    let z0 = (pos - margin) / tau;
    let zs: Vec<f64> = negs.iter().map(|n| n / tau).collect();
    let max = zs.iter().copied().fold(z0, f64::max);
    let e0 = (z0 - max).exp();
    let es: Vec<f64> = zs.iter().map(|z| (z - max).exp()).collect();
    let sum = e0 + es.iter().sum::<f64>();
    let loss = max + sum.ln() - z0;
    let p0 = e0 / sum;
    let ps: Vec<f64> = es.iter().map(|e| e / sum).collect();
    let grad_pos = (p0 - 1.0) / tau;
    let grad_negs = ps.iter().map(|p| p / tau).collect();
    let grad_log_tau = -((p0 - 1.0) * z0 + ps.iter().zip(&zs).map(|(p, z)| p * z).sum::<f64>());
    Ok(InfoNce {
        loss,
        grad_pos,
        grad_negs,
        grad_log_tau,
    })
}

/// Classic query loss: positive `φ(h,r,t)`, negatives self + in-batch.
pub fn loss_classic(pos: f64, negs: &[f64], margin: f64, tau: f64) -> Result<f64> {
    Ok(info_nce(pos, negs, margin, tau)?.loss)
}

/// Anchor-enhanced loss: positive `φ(h,r,t_a)`, negatives in-batch + in-batch-relation.
pub fn loss_anchor(pos: f64, negs: &[f64], margin: f64, tau: f64) -> Result<f64> {
    Ok(info_nce(pos, negs, margin, tau)?.loss)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossBreakdown {
    /// `L_hrt_a`
    pub anchor: f64,
    /// `L_hr`
    pub classic: f64,
    /// `L_cls = α·L_hrt_a + L_hr`
    pub combined: f64,
    pub alpha: f64,
    pub tau: f64,
    pub margin: f64,
}

pub fn loss_combined(l_anchor: f64, l_classic: f64, alpha: f64, tau: f64, margin: f64) -> LossBreakdown {
    LossBreakdown {
        anchor: l_anchor,
        classic: l_classic,
        combined: alpha * l_anchor + l_classic,
        alpha,
        tau,
        margin,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn equal_logits_give_ln2() {
        assert!((loss_classic(0.3, &[0.3], 0.0, 1.0).unwrap() - 2f64.ln()).abs() < 1e-12);
        assert!((loss_anchor(0.1, &[0.1, 0.1, 0.1], 0.0, 1.0).unwrap() - 4f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn no_negatives_give_zero() {
        assert_eq!(loss_classic(0.7, &[], 0.0, 0.05).unwrap(), 0.0);
        assert_eq!(loss_anchor(-0.2, &[], 0.0, 0.05).unwrap(), 0.0);
    }

    #[test]
    fn matches_high_precision_reference() {
        // pos = 1, neg = 0, γ = 0.02, τ = 0.05: loss = ln(1 + e^(−19.6)), computed by hand as
        // e^(−19.6) − e^(−39.2)/2, accurate far below 1e-6
        let x = (-19.6f64).exp();
        let reference = x - x * x / 2.0;
        let got = loss_classic(1.0, &[0.0], 0.02, 0.05).unwrap();
        assert!((got - reference).abs() < 1e-12, "{got} vs {reference}");
    }

    #[test]
    fn non_finite_inputs_error() {
        assert!(info_nce(f64::NAN, &[], 0.0, 1.0).is_err());
        assert!(info_nce(0.0, &[f64::INFINITY], 0.0, 1.0).is_err());
        assert!(info_nce(0.0, &[], 0.0, 0.0).is_err());
    }

    #[test]
    fn combined_examples() {
        let b = loss_combined(1.0, 2.0, 0.3, 0.05, 0.02);
        assert!((b.combined - 2.3).abs() < 1e-15);
        assert_eq!(loss_combined(5.0, 2.0, 0.0, 0.05, 0.02).combined, 2.0);
    }

    proptest! {
        #[test]
        fn margin_is_monotone(pos in -1.0f64..1.0, negs in proptest::collection::vec(-1.0f64..1.0, 0..6),
                              g in 0.0f64..0.5, dg in 0.0f64..0.5, tau in 0.01f64..2.0) {
            let a = info_nce(pos, &negs, g, tau).unwrap().loss;
            let b = info_nce(pos, &negs, g + dg, tau).unwrap().loss;
            prop_assert!(b >= a - 1e-12);
        }

        #[test]
        fn gradients_match_finite_differences(pos in -1.0f64..1.0, negs in proptest::collection::vec(-1.0f64..1.0, 1..5),
                                              g in 0.0f64..0.1, tau in 0.05f64..1.0) {
            let r = info_nce(pos, &negs, g, tau).unwrap();
            let h = 1e-6;
            let f = |p: f64, n: &[f64], t: f64| info_nce(p, n, g, t).unwrap().loss;
            let fd_pos = (f(pos + h, &negs, tau) - f(pos - h, &negs, tau)) / (2.0 * h);
            prop_assert!((fd_pos - r.grad_pos).abs() < 1e-5 * (1.0 + r.grad_pos.abs()));
            let lt = tau.ln();
            let fd_tau = (f(pos, &negs, (lt + h).exp()) - f(pos, &negs, (lt - h).exp())) / (2.0 * h);
            prop_assert!((fd_tau - r.grad_log_tau).abs() < 1e-5 * (1.0 + r.grad_log_tau.abs()));
            for j in 0..negs.len() {
                let mut up = negs.clone();
                up[j] += h;
                let mut dn = negs.clone();
                dn[j] -= h;
                let fd = (f(pos, &up, tau) - f(pos, &dn, tau)) / (2.0 * h);
                prop_assert!((fd - r.grad_negs[j]).abs() < 1e-5 * (1.0 + fd.abs()));
            }
        }
    }
}
