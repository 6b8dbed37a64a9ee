use serde::{Deserialize, Serialize};

use crate::rareevent::{IpsDiagnostics, IsDiagnostics, SplittingDiagnostics};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Exact,
    Crude,
    Ips,
    Is,
    Splitting,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Exact => "exact",
            Method::Crude => "crude",
            Method::Ips => "ips",
            Method::Is => "is",
            Method::Splitting => "splitting",
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Diagnostics {
    #[default]
    None,
    Ips(IpsDiagnostics),
    Is(IsDiagnostics),
    Splitting(SplittingDiagnostics),
}

/// A point estimate with its standard error.
///
/// Probability-valued estimates are never clamped inside an estimator; use
/// [`Estimate::display_probability`] for presentation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub std_error: f64,
    pub method: Method,
    /// Trajectories or particles simulated.
    pub n_work: u64,
    #[serde(default)]
    pub diagnostics: Diagnostics,
}

impl Estimate {
    pub fn exact(value: f64) -> Self {
        Estimate { value, std_error: 0.0, method: Method::Exact, n_work: 0, diagnostics: Diagnostics::None }
    }

    /// Fraction `hits / n` with binomial standard error.
    pub fn proportion(hits: u64, n: u64, method: Method) -> Self {
        let p = hits as f64 / n as f64;
        Estimate {
            value: p,
            std_error: (p * (1.0 - p) / n as f64).sqrt(),
            method,
            n_work: n,
            diagnostics: Diagnostics::None,
        }
    }

    /// Sample mean with standard error `s / sqrt(k)` of independent replicates.
    pub fn from_replicates(values: &[f64], method: Method, n_work: u64) -> Self {
        let (value, std_error) = mean_and_se(values);
        Estimate { value, std_error, method, n_work, diagnostics: Diagnostics::None }
    }

    pub fn with_diagnostics(mut self, d: Diagnostics) -> Self {
        self.diagnostics = d;
        self
    }

    pub fn display_probability(&self) -> f64 {
        self.value.clamp(0.0, 1.0)
    }

    /// Whether `truth` lies within `k` standard errors of the estimate.
    pub fn covers(&self, truth: f64, k: f64) -> bool {
        (self.value - truth).abs() <= k * self.std_error
    }
}

/// Mean and standard error of the mean; the error is 0 for fewer than two
/// values.
pub fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let k = values.len();
    if k == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / k as f64;
    if k < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (k - 1) as f64;
    (mean, (var / k as f64).sqrt())
}
