/// Minimum-jerk point-to-point profile over `duration` seconds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MinimumJerk {
    pub distance: f64,
    pub duration: f64,
}

impl MinimumJerk {
    pub const fn new(distance: f64, duration: f64) -> Self {
        Self { distance, duration }
    }

    fn phase(&self, t: f64) -> f64 {
        (t / self.duration).clamp(0.0, 1.0)
    }

    /// Displacement at time `t` (clamped to the movement interval).
    pub fn position(&self, t: f64) -> f64 {
        let s = self.phase(t);
        self.distance * s.powi(3) * (10.0 - 15.0 * s + 6.0 * s * s)
    }

    pub fn velocity(&self, t: f64) -> f64 {
        let s = self.phase(t);
        30.0 * self.distance / self.duration * s * s * (1.0 - s).powi(2)
    }

    /// `1.875 · d / T`, reached at mid-movement.
    pub fn peak_velocity(&self) -> f64 {
        1.875 * self.distance / self.duration
    }

    /// Times at which the speed equals `speed`, on the rising and falling
    /// flanks. `None` if the peak does not exceed `speed`.
    pub fn threshold_crossings(&self, speed: f64) -> Option<(f64, f64)> {
        if !(self.peak_velocity() > speed) {
            return None;
        }
        // s(1 - s) = sqrt(speed T / 30 d)
        let q = (speed * self.duration / (30.0 * self.distance)).sqrt();
        let root = (0.25 - q).max(0.0).sqrt();
        Some(((0.5 - root) * self.duration, (0.5 + root) * self.duration))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn profile() {
        let m = MinimumJerk::new(0.25, 0.6);
        assert_eq!(m.position(0.0), 0.0);
        assert!((m.position(0.6) - 0.25).abs() < 1e-15);
        assert!((m.position(0.3) - 0.125).abs() < 1e-15);
        assert!((m.peak_velocity() - 0.78125).abs() < 1e-15);
        assert!((m.velocity(0.3) - m.peak_velocity()).abs() < 1e-15);
        let (a, b) = m.threshold_crossings(0.05).unwrap();
        assert!((m.velocity(a) - 0.05).abs() < 1e-12);
        assert!((m.velocity(b) - 0.05).abs() < 1e-12);
        assert!((a + b - 0.6).abs() < 1e-15);
        assert!(m.threshold_crossings(1.0).is_none());
    }
}
