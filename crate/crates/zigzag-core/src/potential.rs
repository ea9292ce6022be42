//! The 1-periodic edge potential q on [0, 1].
//!
//! Two representations are supported: piecewise-constant segments (the exact
//! path, propagated by closed-form transfer matrices) and uniform samples
//! (integrated by a fixed-step RK4 scheme). The constant `q0` always uses the
//! half-integral convention
//!
//! ```text
//! q0 = (1/2) * integral_0^1 q(t) dt
//! ```
//!
//! (not the plain integral); every asymptotic bracket in this crate depends
//! on that convention.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Tolerance on "segment widths sum to 1" and on the stored-q0 identity.
pub const WIDTH_SUM_TOL: f64 = 1e-12;

/// Serialized form: `{"type":"piecewise","segments":[[w,v],...]}` or
/// `{"type":"samples","values":[...]}`.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(bound = "T: Real")]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum PotentialSpec<T: Real> {
    Piecewise { segments: Vec<[T; 2]> },
    Samples { values: Vec<T> },
}

/// Validated potential with its cached mean constant `q0 = ½∫q`.
#[derive(Debug, Clone, PartialEq)]
pub struct Potential<T: Real> {
    spec: PotentialSpec<T>,
    q0: T,
}

impl<T: Real> Potential<T> {
    /// The zero potential as a single exact segment.
    pub fn zero() -> Self {
        Self::constant(T::zero())
    }

    /// The constant potential `q ≡ c` as a single exact segment.
    pub fn constant(c: T) -> Self {
        Potential {
            spec: PotentialSpec::Piecewise {
                segments: vec![[T::one(), c]],
            },
            q0: c / T::of(2.0),
        }
    }

    /// Piecewise-constant potential from `(width, value)` segments.
    pub fn piecewise(segments: Vec<[T; 2]>) -> Result<Self> {
        Self::from_spec(PotentialSpec::Piecewise { segments })
    }

    /// Uniformly sampled potential; `values[i] = q(i/(n-1))`, n ≥ 2.
    pub fn sampled(values: Vec<T>) -> Result<Self> {
        Self::from_spec(PotentialSpec::Samples { values })
    }

    /// Sample `f` at `n` uniform points of [0, 1] (endpoints included).
    pub fn sampled_from_fn(n: usize, f: impl Fn(T) -> T) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidPotential(format!(
                "sampled potential needs at least 2 points, got {n}"
            )));
        }
        let step = T::one() / T::of((n - 1) as f64);
        let values = (0..n).map(|i| f(T::of(i as f64) * step)).collect();
        Self::sampled(values)
    }

    /// Validate a deserialized spec and cache `q0`.
    pub fn from_spec(spec: PotentialSpec<T>) -> Result<Self> {
        match &spec {
            PotentialSpec::Piecewise { segments } => {
                if segments.is_empty() {
                    return Err(Error::InvalidPotential("no segments".into()));
                }
                let mut width_sum = T::zero();
                for (i, seg) in segments.iter().enumerate() {
                    let [w, v] = *seg;
                    if !(w.is_finite() && v.is_finite()) {
                        return Err(Error::InvalidPotential(format!(
                            "segment {i} has non-finite entries"
                        )));
                    }
                    if w <= T::zero() {
                        return Err(Error::InvalidPotential(format!(
                            "segment {i} has non-positive width {w}"
                        )));
                    }
                    width_sum += w;
                }
                if (width_sum - T::one()).abs() > T::of(WIDTH_SUM_TOL) {
                    return Err(Error::InvalidPotential(format!(
                        "segment widths sum to {width_sum}, expected 1"
                    )));
                }
            }
            PotentialSpec::Samples { values } => {
                if values.len() < 2 {
                    return Err(Error::InvalidPotential(format!(
                        "sampled potential needs at least 2 points, got {}",
                        values.len()
                    )));
                }
                if values.iter().any(|v| !v.is_finite()) {
                    return Err(Error::InvalidPotential("non-finite sample".into()));
                }
            }
        }
        let q0 = recompute_q0(&spec);
        Ok(Potential { spec, q0 })
    }

    /// Parse the JSON text format.
    pub fn from_json(text: &str) -> Result<Self> {
        let spec: PotentialSpec<T> = serde_json::from_str(text)
            .map_err(|e| Error::InvalidPotential(format!("JSON parse error: {e}")))?;
        Self::from_spec(spec)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.spec).expect("potential spec serializes")
    }

    pub fn spec(&self) -> &PotentialSpec<T> {
        &self.spec
    }

    /// `q0 = ½∫₀¹ q(t) dt` (half-integral convention).
    pub fn q0(&self) -> T {
        self.q0
    }

    /// Pointwise value q(t); samples are linearly interpolated.
    pub fn value(&self, t: T) -> T {
        let t = t.max(T::zero()).min(T::one());
        match &self.spec {
            PotentialSpec::Piecewise { segments } => {
                let mut acc = T::zero();
                for seg in segments {
                    acc += seg[0];
                    if t <= acc {
                        return seg[1];
                    }
                }
                segments.last().unwrap()[1]
            }
            PotentialSpec::Samples { values } => {
                let n = values.len();
                let pos = t * T::of((n - 1) as f64);
                let i = pos.floor().to_f64_lossy() as usize;
                if i + 1 >= n {
                    return values[n - 1];
                }
                let frac = pos - T::of(i as f64);
                values[i] + (values[i + 1] - values[i]) * frac
            }
        }
    }

    /// The reversed potential q̃(t) = q(1−t). If y solves −y″+qy = λy then
    /// t ↦ y(1−t) solves the same equation with q̃.
    pub fn reversed(&self) -> Self {
        let spec = match &self.spec {
            PotentialSpec::Piecewise { segments } => PotentialSpec::Piecewise {
                segments: segments.iter().rev().cloned().collect(),
            },
            PotentialSpec::Samples { values } => PotentialSpec::Samples {
                values: values.iter().rev().cloned().collect(),
            },
        };
        let q0 = self.q0;
        Potential { spec, q0 }
    }

    /// Short human-readable summary used in reports.
    pub fn digest(&self) -> PotentialDigest {
        match &self.spec {
            PotentialSpec::Piecewise { segments } => PotentialDigest {
                kind: "piecewise".into(),
                len: segments.len(),
                q0: self.q0.to_f64_lossy(),
            },
            PotentialSpec::Samples { values } => PotentialDigest {
                kind: "samples".into(),
                len: values.len(),
                q0: self.q0.to_f64_lossy(),
            },
        }
    }

    /// Re-derives `q0` from the representation and checks it against the
    /// stored value (the type invariant).
    pub fn q0_defect(&self) -> T {
        (recompute_q0(&self.spec) - self.q0).abs()
    }
}

fn recompute_q0<T: Real>(spec: &PotentialSpec<T>) -> T {
    let half = T::of(0.5);
    match spec {
        PotentialSpec::Piecewise { segments } => {
            let integral = segments.iter().fold(T::zero(), |s, seg| s + seg[0] * seg[1]);
            half * integral
        }
        PotentialSpec::Samples { values } => {
            // trapezoid rule: exact for the linear interpolant
            let n = values.len();
            let h = T::one() / T::of((n - 1) as f64);
            let inner: T = values[1..n - 1].iter().cloned().sum();
            let integral = h * (half * (values[0] + values[n - 1]) + inner);
            half * integral
        }
    }
}

/// Potential summary attached to spectrum reports.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct PotentialDigest {
    pub kind: String,
    pub len: usize,
    pub q0: f64,
}
