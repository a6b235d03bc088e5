//! Sample mean and standard error.

/// Mean of a sample with its standard error (`s / √n`).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Estimate {
    pub mean: f64,
    pub std_err: f64,
    pub count: usize,
}

impl Estimate {
    /// Accumulates in slice order, so equal inputs give bit-identical output.
    pub fn from_samples(samples: &[f64]) -> Self {
        let count = samples.len();
        if count == 0 {
            return Estimate::default();
        }
        let n = count as f64;
        let mean = samples.iter().sum::<f64>() / n;
        let std_err = if count > 1 {
            let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
            (var / n).sqrt()
        } else {
            0.0
        };
        Estimate {
            mean,
            std_err,
            count,
        }
    }

    /// Whether `value` lies within `k` standard errors of the mean.
    pub fn within(&self, value: f64, k: f64) -> bool {
        (self.mean - value).abs() <= k * self.std_err
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_sample_has_zero_error() {
        let e = Estimate::from_samples(&[2.5]);
        assert_eq!(e.mean, 2.5);
        assert_eq!(e.std_err, 0.0);
    }

    #[test]
    fn known_sample() {
        let e = Estimate::from_samples(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(e.mean, 2.5);
        // s² = 5/3
        assert!((e.std_err - (5.0f64 / 3.0 / 4.0).sqrt()).abs() < 1e-15);
    }
}
