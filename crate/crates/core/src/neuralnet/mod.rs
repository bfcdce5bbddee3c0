//! Dense feed-forward networks with exact reverse-mode gradients and an
//! Adam optimizer, generic over the element type.

mod adam;
mod checkpoint;
mod layer;

pub use adam::{clip_global_norm, AdamConfig, OptimizerState};
pub use checkpoint::{CheckpointMeta, LayerRecord, MlpRecord, TensorRecord, CHECKPOINT_FORMAT_VERSION};
pub use layer::{Activation, DenseLayer, LayerGrads, Mlp, MlpGrads, Trace};

use crate::scalar::Scalar;

/// Numerically stable softmax (max-subtracted).
pub fn softmax<T: Scalar>(z: &[T]) -> Vec<T> {
    let m = z.iter().copied().fold(T::neg_infinity(), T::max);
    let mut out: Vec<T> = z.iter().map(|&x| (x - m).exp()).collect();
    let total: T = out.iter().copied().sum();
    for p in &mut out {
        *p /= total;
    }
    out
}

/// `log(softmax(z))` without forming the probabilities.
pub fn log_softmax<T: Scalar>(z: &[T]) -> Vec<T> {
    let m = z.iter().copied().fold(T::neg_infinity(), T::max);
    let lse = m + z.iter().map(|&x| (x - m).exp()).sum::<T>().ln();
    z.iter().map(|&x| x - lse).collect()
}

/// Index of the largest component; the lowest index wins ties.
pub fn argmax<T: Scalar>(z: &[T]) -> usize {
    let mut best = 0;
    for (i, &x) in z.iter().enumerate().skip(1) {
        if x > z[best] {
            best = i;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn uniform_on_equal_logits() {
        let p = softmax(&[0.0f64, 0.0, 0.0]);
        for x in p {
            assert!((x - 1.0 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn large_logits_do_not_overflow() {
        let p = softmax(&[1000.0f64, 0.0]);
        assert!((p[0] - 1.0).abs() < 1e-12);
        assert!(p[1] >= 0.0 && p[1] < 1e-300);
        let lp = log_softmax(&[1000.0f64, 0.0]);
        assert!(lp[0].abs() < 1e-12);
        assert!((lp[1] + 1000.0).abs() < 1e-9);
    }

    #[test]
    fn argmax_ties_pick_lowest() {
        assert_eq!(argmax(&[1.0f64, 3.0, 3.0]), 1);
        assert_eq!(argmax(&[2.0f64, 2.0, 2.0]), 0);
    }

    proptest! {
        #[test]
        fn normalized_and_shift_invariant(z in proptest::collection::vec(-50.0f64..50.0, 1..20), c in -100.0f64..100.0) {
            let p = softmax(&z);
            prop_assert!(p.iter().all(|&x| x > 0.0));
            prop_assert!((p.iter().sum::<f64>() - 1.0).abs() <= 1e-9);
            prop_assert_eq!(argmax(&p), argmax(&z));
            let shifted: Vec<f64> = z.iter().map(|x| x + c).collect();
            let q = softmax(&shifted);
            for (a, b) in p.iter().zip(&q) {
                prop_assert!((a - b).abs() <= 1e-12);
            }
            let lp = log_softmax(&z);
            for (a, b) in lp.iter().zip(&p) {
                prop_assert!((a - b.ln()).abs() <= 1e-9);
            }
        }
    }
}
