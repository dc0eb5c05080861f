//! Summary statistics for Monte Carlo estimates.

/// One-sided 95% normal quantile.
pub const Z95: f64 = 1.6448536269514722;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub n: usize,
    pub mean: f64,
    pub sd: f64,
}

impl Summary {
    pub fn of(xs: &[f64]) -> Self {
        let n = xs.len();
        if n == 0 {
            return Summary {
                n,
                mean: f64::NAN,
                sd: f64::NAN,
            };
        }
        let mean = xs.iter().sum::<f64>() / n as f64;
        let sd = if n > 1 {
            (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        Summary { n, mean, sd }
    }

    pub fn se(&self) -> f64 {
        self.sd / (self.n as f64).sqrt()
    }

    /// Lower end of the one-sided 95% interval for the mean.
    pub fn lower95(&self) -> f64 {
        self.mean - Z95 * self.se()
    }
}
