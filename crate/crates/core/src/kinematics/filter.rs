//! Second-order Butterworth low-pass, applied forward and backward.

use crate::error::{Error, Result};

/// Biquad coefficients in direct form II transposed, `a[0] == 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Butterworth2 {
    b: [f64; 3],
    a: [f64; 3],
}

impl Butterworth2 {
    /// Bilinear-transform design with the cutoff pre-warped so the -3 dB point
    /// lands exactly on `cutoff` Hz.
    pub fn lowpass(cutoff: f64, sample_rate: f64) -> Result<Self> {
        if !(sample_rate > 0.0) || !sample_rate.is_finite() {
            return Err(Error::invalid(
                "sample_rate",
                format!("must be positive, got {sample_rate}"),
            ));
        }
        let nyquist = 0.5 * sample_rate;
        if !(cutoff > 0.0 && cutoff < nyquist) {
            return Err(Error::invalid(
                "cutoff",
                format!("must lie in (0, {nyquist}) Hz, got {cutoff}"),
            ));
        }
        let k = (std::f64::consts::PI * cutoff / sample_rate).tan();
        let k2 = k * k;
        let sqrt2 = std::f64::consts::SQRT_2;
        let norm = 1.0 / (1.0 + sqrt2 * k + k2);
        let b0 = k2 * norm;
        Ok(Self {
            b: [b0, 2.0 * b0, b0],
            a: [1.0, 2.0 * (k2 - 1.0) * norm, (1.0 - sqrt2 * k + k2) * norm],
        })
    }

    pub fn b(&self) -> [f64; 3] {
        self.b
    }

    pub fn a(&self) -> [f64; 3] {
        self.a
    }

    /// Steady-state filter state for a unit step, so a constant input
    /// produces a constant output from the first sample.
    fn step_state(&self) -> [f64; 2] {
        let [_, b1, b2] = self.b;
        let [_, a1, a2] = self.a;
        let z1 = b2 - a2;
        [b1 - a1 + z1, z1]
    }

    /// Single causal pass starting from the steady state of `x[0]`.
    pub fn filter(&self, x: &[f64]) -> Vec<f64> {
        let [b0, b1, b2] = self.b;
        let [_, a1, a2] = self.a;
        let zi = self.step_state();
        let x0 = x.first().copied().unwrap_or(0.0);
        let (mut z0, mut z1) = (zi[0] * x0, zi[1] * x0);
        x.iter()
            .map(|&xn| {
                let y = b0 * xn + z0;
                z0 = b1 * xn - a1 * y + z1;
                z1 = b2 * xn - a2 * y;
                y
            })
            .collect()
    }

    /// Zero-phase forward-backward filtering with odd reflection padding of
    /// up to 9 samples at each end. The effective magnitude response is
    /// `|H(f)|²`.
    pub fn filtfilt(&self, x: &[f64]) -> Result<Vec<f64>> {
        let n = x.len();
        if n < 2 {
            return Err(Error::InsufficientSamples { needed: 2, got: n });
        }
        let pad = 9.min(n - 1);
        let (first, last) = (x[0], x[n - 1]);
        let mut ext = Vec::with_capacity(n + 2 * pad);
        ext.extend((1..=pad).rev().map(|i| 2.0 * first - x[i]));
        ext.extend_from_slice(x);
        ext.extend((1..=pad).map(|i| 2.0 * last - x[n - 1 - i]));

        let mut y = self.filter(&ext);
        y.reverse();
        let mut y = self.filter(&y);
        y.reverse();
        Ok(y[pad..pad + n].to_vec())
    }

    /// Analytic magnitude of one pass at `freq` Hz.
    pub fn magnitude(&self, freq: f64, sample_rate: f64) -> f64 {
        let w = 2.0 * std::f64::consts::PI * freq / sample_rate;
        let (c1, s1, c2, s2) = (w.cos(), w.sin(), (2.0 * w).cos(), (2.0 * w).sin());
        let num_re = self.b[0] + self.b[1] * c1 + self.b[2] * c2;
        let num_im = -(self.b[1] * s1 + self.b[2] * s2);
        let den_re = 1.0 + self.a[1] * c1 + self.a[2] * c2;
        let den_im = -(self.a[1] * s1 + self.a[2] * s2);
        (num_re.hypot(num_im)) / (den_re.hypot(den_im))
    }
}

/// Zero-phase low-pass of a single channel.
pub fn lowpass(x: &[f64], cutoff: f64, sample_rate: f64) -> Result<Vec<f64>> {
    Butterworth2::lowpass(cutoff, sample_rate)?.filtfilt(x)
}
