//! Categorical sampling and greedy selection helpers.

use crate::error::{Error, Result};
use rand::Rng as _;

/// Draws an index from a log-probability vector. The probabilities must sum
/// to one within 1e-6; non-finite entries are rejected.
pub fn sample_categorical(log_probs: &[f64], rng: &mut crate::rng::Rng) -> Result<usize> {
    if log_probs.is_empty() {
        return Err(Error::InvalidArgument("empty distribution".into()));
    }
    if log_probs.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("categorical log-probabilities".into()));
    }
    let probs: Vec<f64> = log_probs.iter().map(|&lp| lp.exp()).collect();
    let mut total = 0.0;
    for &p in &probs {
        total += p;
    }
    if (total - 1.0).abs() > 1e-6 {
        return Err(Error::InvalidArgument(format!(
            "probabilities sum to {total}, expected 1"
        )));
    }
    let u: f64 = rng.gen::<f64>() * total;
    let mut acc = 0.0;
    for (i, &p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return Ok(i);
        }
    }
    Ok(probs.len() - 1)
}

/// Index of the maximum entry; ties resolve to the lowest index.
pub fn argmax_tie_low(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;

    #[test]
    fn degenerate_distribution_always_picks_support() {
        let lp = [0.0f64, -745.0, -745.0, -745.0];
        let mut rng = rng_from_seed(3);
        for _ in 0..100 {
            assert_eq!(sample_categorical(&lp, &mut rng).unwrap(), 0);
        }
    }

    #[test]
    fn uniform_frequencies_within_band() {
        let lp = [0.25f64.ln(); 4];
        let mut rng = rng_from_seed(11);
        let mut counts = [0u32; 4];
        let n = 100_000;
        for _ in 0..n {
            counts[sample_categorical(&lp, &mut rng).unwrap()] += 1;
        }
        for &c in &counts {
            let f = c as f64 / n as f64;
            assert!((0.24..=0.26).contains(&f), "frequency {f}");
        }
    }

    #[test]
    fn same_seed_same_draws() {
        let lp = [0.25f64.ln(); 4];
        let mut a = rng_from_seed(5);
        let mut b = rng_from_seed(5);
        for _ in 0..1000 {
            assert_eq!(
                sample_categorical(&lp, &mut a).unwrap(),
                sample_categorical(&lp, &mut b).unwrap()
            );
        }
    }

    #[test]
    fn non_finite_rejected() {
        let mut rng = rng_from_seed(0);
        assert!(sample_categorical(&[f64::NAN, 0.0], &mut rng).is_err());
        assert!(sample_categorical(&[f64::NEG_INFINITY, 0.0], &mut rng).is_err());
    }

    #[test]
    fn unnormalized_rejected() {
        let mut rng = rng_from_seed(0);
        assert!(sample_categorical(&[0.0, 0.0], &mut rng).is_err());
    }

    #[test]
    fn argmax_breaks_ties_low() {
        assert_eq!(argmax_tie_low(&[1.0, 1.0, 1.0]), 0);
        assert_eq!(argmax_tie_low(&[0.0, 2.0, 2.0]), 1);
    }
}
