use serde::{Deserialize, Serialize};

use crate::error::{ImdError, Result};

/// Strictly increasing list of positive temperatures.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct TemperatureGrid(Vec<f64>);

impl TemperatureGrid {
    pub const DEFAULT_MIN: f64 = 0.1;
    pub const DEFAULT_MAX: f64 = 10.0;
    pub const DEFAULT_STEPS: usize = 256;

    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(ImdError::InvalidParameter("temperature grid is empty".into()));
        }
        if values.iter().any(|t| !(t.is_finite() && *t > 0.0)) {
            return Err(ImdError::InvalidParameter(
                "temperatures must be finite and positive".into(),
            ));
        }
        if values.windows(2).any(|w| w[0] >= w[1]) {
            return Err(ImdError::InvalidParameter(
                "temperatures must be strictly increasing".into(),
            ));
        }
        Ok(Self(values))
    }

    /// `steps` log-spaced points from `min` to `max`, both included.
    pub fn log_spaced(min: f64, max: f64, steps: usize) -> Result<Self> {
        if !(min > 0.0 && max > min) || steps == 0 {
            return Err(ImdError::InvalidParameter(format!(
                "invalid grid range [{min}, {max}] with {steps} steps"
            )));
        }
        if steps == 1 {
            return Self::new(vec![min]);
        }
        let (lo, hi) = (min.ln(), max.ln());
        let last = (steps - 1) as f64;
        let mut v: Vec<f64> = (0..steps)
            .map(|i| (lo + (hi - lo) * i as f64 / last).exp())
            .collect();
        v[0] = min;
        v[steps - 1] = max;
        Self::new(v)
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl Default for TemperatureGrid {
    fn default() -> Self {
        Self::log_spaced(Self::DEFAULT_MIN, Self::DEFAULT_MAX, Self::DEFAULT_STEPS)
            .expect("default grid is valid")
    }
}

impl TryFrom<Vec<f64>> for TemperatureGrid {
    type Error = ImdError;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<TemperatureGrid> for Vec<f64> {
    fn from(g: TemperatureGrid) -> Self {
        g.0
    }
}
