use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Kernel function of the binary SVM.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum KernelSpec {
    /// `|x·y + 1|^degree`
    Polynomial { degree: u32 },
    /// `exp(-gamma ‖x - y‖²)`
    Rbf { gamma: f64 },
}

impl KernelSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            KernelSpec::Polynomial { degree: 0 } => {
                Err(Error::InvalidKernel("polynomial degree must be positive".into()))
            }
            KernelSpec::Rbf { gamma } if !(gamma > 0.0 && gamma.is_finite()) => {
                Err(Error::InvalidKernel(format!("rbf gamma must be positive, got {gamma}")))
            }
            _ => Ok(()),
        }
    }

    /// Unchecked evaluation; callers guarantee equal lengths.
    #[inline]
    pub fn compute(&self, x: &[f64], y: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), y.len());
        match *self {
            KernelSpec::Polynomial { degree } => {
                let dot: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
                (dot + 1.0).abs().powi(degree as i32)
            }
            KernelSpec::Rbf { gamma } => {
                let d2: f64 = x
                    .iter()
                    .zip(y)
                    .map(|(a, b)| {
                        let d = a - b;
                        d * d
                    })
                    .sum();
                (-gamma * d2).exp()
            }
        }
    }

    /// Short tag used in file names and report columns.
    pub fn tag(&self) -> String {
        match *self {
            KernelSpec::Polynomial { degree } => format!("poly-d{degree}"),
            KernelSpec::Rbf { gamma } => format!("rbf-g{gamma}"),
        }
    }

    pub fn family(&self) -> &'static str {
        match self {
            KernelSpec::Polynomial { .. } => "polynomial",
            KernelSpec::Rbf { .. } => "rbf",
        }
    }
}

impl fmt::Display for KernelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            KernelSpec::Polynomial { degree } => write!(f, "polynomial(d={degree})"),
            KernelSpec::Rbf { gamma } => write!(f, "rbf(gamma={gamma})"),
        }
    }
}

/// Checked kernel evaluation.
pub fn kernel_eval(spec: &KernelSpec, x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            found: y.len(),
        });
    }
    Ok(spec.compute(x, y))
}
