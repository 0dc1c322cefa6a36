//! Single-pass, mergeable central-moment accumulator (up to the fourth moment).
//!
//! Updates follow the one-pass recurrences of Terriberry and Pébay, so partial
//! accumulators built on disjoint chunks can be merged in any grouping.

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Moments {
    n: u64,
    mean: f64,
    m2: f64,
    m3: f64,
    m4: f64,
}

impl Moments {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_slice<T: Copy + Into<f64>>(xs: &[T]) -> Self {
        let mut m = Moments::new();
        for &x in xs {
            m.push(x.into());
        }
        m
    }

    pub fn push(&mut self, x: f64) {
        let n1 = self.n as f64;
        self.n += 1;
        let n = self.n as f64;
        let delta = x - self.mean;
        let delta_n = delta / n;
        let delta_n2 = delta_n * delta_n;
        let term1 = delta * delta_n * n1;
        self.mean += delta_n;
        self.m4 += term1 * delta_n2 * (n * n - 3.0 * n + 3.0) + 6.0 * delta_n2 * self.m2 - 4.0 * delta_n * self.m3;
        self.m3 += term1 * delta_n * (n - 2.0) - 3.0 * delta_n * self.m2;
        self.m2 += term1;
    }

    pub fn merge(&self, other: &Moments) -> Moments {
        if self.n == 0 {
            return *other;
        }
        if other.n == 0 {
            return *self;
        }
        let (na, nb) = (self.n as f64, other.n as f64);
        let n = na + nb;
        let delta = other.mean - self.mean;
        let d2 = delta * delta;
        let d3 = d2 * delta;
        let d4 = d2 * d2;
        let mean = self.mean + delta * nb / n;
        let m2 = self.m2 + other.m2 + d2 * na * nb / n;
        let m3 =
            self.m3 + other.m3 + d3 * na * nb * (na - nb) / (n * n) + 3.0 * delta * (na * other.m2 - nb * self.m2) / n;
        let m4 = self.m4
            + other.m4
            + d4 * na * nb * (na * na - na * nb + nb * nb) / (n * n * n)
            + 6.0 * d2 * (na * na * other.m2 + nb * nb * self.m2) / (n * n)
            + 4.0 * delta * (na * other.m3 - nb * self.m3) / n;
        Moments { n: self.n + other.n, mean, m2, m3, m4 }
    }

    pub fn count(&self) -> u64 {
        self.n
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Population variance (1/N).
    pub fn variance(&self) -> f64 {
        if self.n == 0 {
            0.0
        } else {
            self.m2 / self.n as f64
        }
    }

    pub fn std(&self) -> f64 {
        self.variance().sqrt()
    }

    /// `m3 / m2^(3/2)` with 1/N central moments; `None` when the variance is zero.
    pub fn skewness(&self) -> Option<f64> {
        if self.m2 <= 0.0 {
            return None;
        }
        let n = self.n as f64;
        Some((self.m3 / n) / (self.m2 / n).powf(1.5))
    }

    /// `m4 / m2^2 - 3`; `None` when the variance is zero.
    pub fn excess_kurtosis(&self) -> Option<f64> {
        if self.m2 <= 0.0 {
            return None;
        }
        let n = self.n as f64;
        let m2 = self.m2 / n;
        Some((self.m4 / n) / (m2 * m2) - 3.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn three_point_sample() {
        let m = Moments::from_slice(&[-1.0, 0.0, 1.0]);
        assert_eq!(m.mean(), 0.0);
        assert!((m.std() - (2.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert_eq!(m.skewness(), Some(0.0));
        assert!((m.excess_kurtosis().unwrap() + 1.5).abs() < 1e-12);
    }

    #[test]
    fn constant_is_degenerate() {
        let m = Moments::from_slice(&[5.0f64; 10]);
        assert_eq!(m.mean(), 5.0);
        assert_eq!(m.variance(), 0.0);
        assert_eq!(m.skewness(), None);
    }

    proptest! {
        #[test]
        fn merge_matches_sequential(xs in prop::collection::vec(-1e3f64..1e3, 2..200), split in 0usize..200) {
            let split = split % xs.len();
            let whole = Moments::from_slice(&xs);
            let merged = Moments::from_slice(&xs[..split]).merge(&Moments::from_slice(&xs[split..]));
            prop_assert_eq!(whole.count(), merged.count());
            let close = |a: f64, b: f64, scale: f64| (a - b).abs() <= 1e-9 * scale.max(1.0);
            prop_assert!(close(whole.mean(), merged.mean(), whole.mean().abs()));
            prop_assert!(close(whole.variance(), merged.variance(), whole.variance()));
            if whole.variance() > 1e-6 {
                prop_assert!(close(whole.skewness().unwrap(), merged.skewness().unwrap(), 1.0));
                prop_assert!(close(whole.excess_kurtosis().unwrap(), merged.excess_kurtosis().unwrap(), 1.0));
            }
        }
    }
}
