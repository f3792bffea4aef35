//! Finite-difference derivatives of uniformly sampled signals.

use crate::error::{Error, Result};

/// First derivative of `values` sampled every `dt` seconds.
///
/// Interior points use the central difference `(v[i+1] - v[i-1]) / 2dt`;
/// the two boundary points use one-sided first differences.
pub fn central_difference(values: &[f64], dt: f64) -> Result<Vec<f64>> {
    let n = values.len();
    if n < 3 {
        return Err(Error::InsufficientSamples { needed: 3, got: n });
    }
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::invalid("dt", format!("must be positive, got {dt}")));
    }
    let mut out = Vec::with_capacity(n);
    out.push((values[1] - values[0]) / dt);
    out.extend(values.windows(3).map(|w| (w[2] - w[0]) / (2.0 * dt)));
    out.push((values[n - 1] - values[n - 2]) / dt);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_ramp_is_exact_everywhere() {
        let dt = 0.004;
        let v: Vec<f64> = (0..50).map(|i| 0.3 * i as f64 * dt).collect();
        let d = central_difference(&v, dt).unwrap();
        assert!(d.iter().all(|x| (x - 0.3).abs() < 1e-12));
    }

    #[test]
    fn quadratic_interior_is_exact() {
        let dt = 0.01;
        let v: Vec<f64> = (0..20).map(|i| (i as f64 * dt).powi(2)).collect();
        let d = central_difference(&v, dt).unwrap();
        for (i, x) in d.iter().enumerate().take(19).skip(1) {
            assert!((x - 2.0 * i as f64 * dt).abs() < 1e-12);
        }
    }

    #[test]
    fn too_short() {
        assert_eq!(
            central_difference(&[1.0, 2.0], 0.1),
            Err(Error::InsufficientSamples { needed: 3, got: 2 })
        );
    }
}
