use rand::Rng;

use crate::Real;

/// Index of the largest value; ties go to the lowest index.
pub fn argmax<F: Real>(values: &[F]) -> usize {
    assert!(!values.is_empty(), "argmax of empty slice");
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Greedy with probability `1 − ε`, otherwise uniform over all actions.
pub fn epsilon_greedy<F: Real, R: Rng + ?Sized>(q_values: &[F], epsilon: f64, rng: &mut R) -> usize {
    debug_assert!((0.0..=1.0).contains(&epsilon));
    if rng.gen::<f64>() < epsilon {
        rng.gen_range(0..q_values.len())
    } else {
        argmax(q_values)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn greedy_when_epsilon_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            assert_eq!(epsilon_greedy(&[0.1, 0.9], 0.0, &mut rng), 1);
        }
    }

    #[test]
    fn ties_pick_lowest() {
        assert_eq!(argmax(&[1.0, 3.0, 3.0, 2.0]), 1);
    }

    fn within_3_sigma(count: usize, n: usize, p: f64) -> bool {
        let mean = n as f64 * p;
        let sd = (n as f64 * p * (1.0 - p)).sqrt();
        (count as f64 - mean).abs() <= 3.0 * sd
    }

    #[test]
    fn uniform_when_epsilon_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut counts = [0usize; 4];
        for _ in 0..10_000 {
            counts[epsilon_greedy(&[0.0, 5.0, 1.0, 2.0], 1.0, &mut rng)] += 1;
        }
        assert!(counts.iter().all(|&c| within_3_sigma(c, 10_000, 0.25)), "{counts:?}");
    }

    #[test]
    fn half_epsilon_two_actions() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let hits = (0..10_000)
            .filter(|_| epsilon_greedy(&[0.2, 0.8], 0.5, &mut rng) == 1)
            .count();
        assert!(within_3_sigma(hits, 10_000, 0.75), "{hits}");
    }
}
