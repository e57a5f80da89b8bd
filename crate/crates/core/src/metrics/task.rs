use crate::error::{Error, Result};

/// Label threshold for probabilities.
pub const THRESHOLD: f64 = 0.5;

/// F1 over true/false positives pooled across every label of every sample.
/// Both matrices are thresholded at 0.5; returns 0 when nothing is positive.
pub fn micro_f1(pred: &[Vec<f64>], target: &[Vec<f64>]) -> Result<f64> {
    if pred.len() != target.len() {
        return Err(Error::shape(format!(
            "{} predictions for {} targets",
            pred.len(),
            target.len()
        )));
    }
    let (mut tp, mut fp, mut fn_) = (0u64, 0u64, 0u64);
    for (p, t) in pred.iter().zip(target) {
        if p.len() != t.len() {
            return Err(Error::shape(format!(
                "prediction width {} differs from target width {}",
                p.len(),
                t.len()
            )));
        }
        for (&pv, &tv) in p.iter().zip(t) {
            match (pv >= THRESHOLD, tv >= THRESHOLD) {
                (true, true) => tp += 1,
                (true, false) => fp += 1,
                (false, true) => fn_ += 1,
                (false, false) => {}
            }
        }
    }
    let denom = 2 * tp + fp + fn_;
    Ok(if denom == 0 {
        0.0
    } else {
        2.0 * tp as f64 / denom as f64
    })
}

/// Mean absolute error.
pub fn mae(pred: &[f64], target: &[f64]) -> Result<f64> {
    if pred.len() != target.len() {
        return Err(Error::shape(format!(
            "{} predictions for {} targets",
            pred.len(),
            target.len()
        )));
    }
    if pred.is_empty() {
        return Err(Error::input("mean absolute error of zero values"));
    }
    Ok(pred.iter().zip(target).map(|(p, t)| (p - t).abs()).sum::<f64>() / pred.len() as f64)
}

#[cfg(test)]
mod tests {
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;

    #[test]
    fn micro_f1_examples() {
        let t = vec![vec![1.0, 0.0, 1.0], vec![0.0, 1.0, 0.0]];
        assert_eq!(micro_f1(&t, &t).unwrap(), 1.0);
        let zeros = vec![vec![0.0; 3]; 2];
        assert_eq!(micro_f1(&zeros, &t).unwrap(), 0.0);
        assert_eq!(micro_f1(&zeros, &zeros).unwrap(), 0.0);

        // TP = 2, FP = 1, FN = 1
        let p = vec![vec![0.9, 0.7, 0.2], vec![0.1, 0.8, 0.3]];
        let t = vec![vec![1.0, 0.0, 1.0], vec![0.0, 1.0, 0.0]];
        assert!((micro_f1(&p, &t).unwrap() - 2.0 / 3.0).abs() < 1e-15);

        assert!(micro_f1(&p, &t[..1]).is_err());
        assert!(micro_f1(&[vec![1.0]], &[vec![1.0, 0.0]]).is_err());
    }

    #[test]
    fn mae_examples() {
        assert_eq!(mae(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert_eq!(mae(&[1.0, 2.0], &[0.0, 0.0]).unwrap(), 1.5);
        assert!(mae(&[1.0], &[]).is_err());
        assert!(mae(&[], &[]).is_err());

        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let p: Vec<f64> = (0..50).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let t: Vec<f64> = (0..50).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let mut total = 0.0;
        for i in 0..50 {
            let d = p[i] - t[i];
            total += if d < 0.0 { -d } else { d };
        }
        assert!((mae(&p, &t).unwrap() - total / 50.0).abs() < 1e-14);
    }
}
