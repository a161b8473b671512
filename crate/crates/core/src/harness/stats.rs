/// z-value of a two-sided 95% normal interval.
pub const Z95: f64 = 1.96;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub mean: f64,
    /// `1.96 * s / sqrt(n)` with the unbiased sample deviation; 0 when `n < 2`.
    pub ci95: f64,
    /// False when fewer than two samples make the interval undefined.
    pub ci_defined: bool,
}

pub fn summarize(samples: &[f64]) -> Summary {
    let n = samples.len();
    if n == 0 {
        return Summary {
            mean: f64::NAN,
            ci95: 0.0,
            ci_defined: false,
        };
    }
    let mean = samples.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return Summary {
            mean,
            ci95: 0.0,
            ci_defined: false,
        };
    }
    let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    Summary {
        mean,
        ci95: Z95 * var.sqrt() / (n as f64).sqrt(),
        ci_defined: true,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    #[test]
    fn hand_example() {
        let s = summarize(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(s.mean, 2.5);
        // s^2 = 5/3
        assert!((s.ci95 - 1.96 * (5.0f64 / 3.0).sqrt() / 2.0).abs() < 1e-15);
    }

    #[test]
    fn single_sample_flags_undefined_interval() {
        let s = summarize(&[42.0]);
        assert_eq!((s.mean, s.ci95, s.ci_defined), (42.0, 0.0, false));
    }

    #[test]
    fn coverage_is_about_95_percent() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let normal = Normal::new(3.0, 2.0).unwrap();
        let reps = 1000;
        let covered = (0..reps)
            .filter(|_| {
                let xs: Vec<f64> = (0..200).map(|_| normal.sample(&mut rng)).collect();
                let s = summarize(&xs);
                (s.mean - 3.0).abs() <= s.ci95
            })
            .count();
        // binomial(1000, 0.95) sd ~ 6.9
        assert!((920..=975).contains(&covered), "{covered}");
    }
}
