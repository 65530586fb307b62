use serde::{Deserialize, Serialize};

/// A `(lower, upper)` enclosure and the truncation depth that produced it.
/// `certified` is false for best-effort estimates (depth-doubling agreement).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CertifiedValue {
    pub lower: f64,
    pub upper: f64,
    pub depth: usize,
    pub certified: bool,
}

impl CertifiedValue {
    pub fn new(lower: f64, upper: f64, depth: usize, certified: bool) -> Self {
        debug_assert!(lower <= upper, "{lower} > {upper}");
        Self {
            lower,
            upper,
            depth,
            certified,
        }
    }

    pub fn exact(x: f64) -> Self {
        Self::new(x, x, 0, true)
    }

    pub fn mid(&self) -> f64 {
        0.5 * (self.lower + self.upper)
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lower <= x && x <= self.upper
    }

    /// Clips a probability-valued enclosure to `[0, 1]`.
    pub fn clip_unit(mut self) -> Self {
        self.lower = self.lower.clamp(0.0, 1.0);
        self.upper = self.upper.clamp(0.0, 1.0);
        self
    }
}
