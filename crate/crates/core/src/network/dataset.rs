use serde::{Deserialize, Serialize};

use super::NetworkError;

/// Samples `x` (`n x M`), labels `y` (`n x m`) and the label-size bound
/// `epsilon`, which defaults to `||y||^2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub x: Vec<Vec<f64>>,
    pub y: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
}

impl Dataset {
    pub fn new(x: Vec<Vec<f64>>, y: Vec<Vec<f64>>, epsilon: Option<f64>) -> Result<Self, NetworkError> {
        let d = Dataset { x, y, epsilon };
        d.validate()?;
        Ok(d)
    }

    pub fn from_json(text: &str) -> Result<Self, NetworkError> {
        let d: Dataset = serde_json::from_str(text).map_err(|e| NetworkError::Dataset(e.to_string()))?;
        d.validate()?;
        Ok(d)
    }

    pub fn samples(&self) -> usize {
        self.x.len()
    }

    pub fn input_dim(&self) -> usize {
        self.x.first().map_or(0, Vec::len)
    }

    pub fn output_dim(&self) -> usize {
        self.y.first().map_or(0, Vec::len)
    }

    pub fn flat_x(&self) -> Vec<f64> {
        self.x.concat()
    }

    pub fn flat_y(&self) -> Vec<f64> {
        self.y.concat()
    }

    pub fn label_norm2(&self) -> f64 {
        self.flat_y().iter().map(|v| v * v).sum()
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon.unwrap_or_else(|| self.label_norm2())
    }

    /// Shapes are rectangular, values finite, and `0 < epsilon <= ||y||^2`.
    pub fn validate(&self) -> Result<(), NetworkError> {
        let bad = |m: String| Err(NetworkError::Dataset(m));
        if self.x.is_empty() || self.x.len() != self.y.len() {
            return bad(format!("{} inputs and {} labels", self.x.len(), self.y.len()));
        }
        let (mx, my) = (self.input_dim(), self.output_dim());
        if self.x.iter().any(|r| r.len() != mx) || self.y.iter().any(|r| r.len() != my) || my == 0 {
            return bad("rows of different lengths".into());
        }
        if self.flat_x().iter().chain(&self.flat_y()).any(|v| !v.is_finite()) {
            return bad("non-finite entry".into());
        }
        let eps = self.epsilon();
        if !(eps > 0.0) {
            return bad(format!("epsilon = {eps} must be positive"));
        }
        let norm = self.label_norm2();
        if norm < eps {
            return Err(NetworkError::LabelsTooSmall { norm, epsilon: eps });
        }
        Ok(())
    }
}
