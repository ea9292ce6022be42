//! Tube geometry, magnetic flux and the per-channel monodromy matrix.
//!
//! A uniform axial field of amplitude B threads each slanted edge with the
//! flux a = B·(√3/4)·cos(π/2N); vertical edges carry none. After the cyclic
//! reduction, channel k only sees the numbers
//!
//! ```text
//! c_k = cos(a + πk/N),   s_k = sin(a + πk/N),
//! c0k = cos(πk/N),       s0k = sin(πk/N).
//! ```
//!
//! Channel indices are canonicalized to k ∈ {0, …, N−1}; the paper's k = N
//! is the k = 0 channel (all channel quantities used here are invariant
//! under k → k + N).

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hill::{propagate, FundamentalData};
use crate::potential::Potential;
use crate::scalar::Real;

/// |c_k| below this flags the channel as singular (flat-band regime).
pub const SINGULAR_CK: f64 = 1e-9;

/// |φ₁| below this counts as a Dirichlet point, where the monodromy matrix
/// has a pole.
pub const DIRICHLET_POLE_TOL: f64 = 1e-12;

/// Flux per slanted edge: a = B·(√3/4)·cos(π/2N).
pub fn flux_from_field<T: Real>(n: usize, b: T) -> Result<T> {
    if n < 1 {
        return Err(Error::InvalidParameter(format!("N must be ≥ 1, got {n}")));
    }
    let half_angle = T::PI() / (T::of(2.0) * T::of(n as f64));
    Ok(b * T::of(3.0).sqrt() / T::of(4.0) * half_angle.cos())
}

/// Tube radius R_N = √3 / (4 sin(π/2N)).
pub fn tube_radius<T: Real>(n: usize) -> Result<T> {
    if n < 1 {
        return Err(Error::InvalidParameter(format!("N must be ≥ 1, got {n}")));
    }
    let half_angle = T::PI() / (T::of(2.0) * T::of(n as f64));
    Ok(T::of(3.0).sqrt() / (T::of(4.0) * half_angle.sin()))
}

/// Field amplitudes B_{k,m} at which channel k becomes singular:
/// the flux equals ã_{k,m} = π/2 − πk/N + πm exactly.
pub fn singular_fields<T: Real>(
    n: usize,
    k: usize,
    m_range: impl IntoIterator<Item = i64>,
) -> Result<Vec<T>> {
    if n < 1 || k < 1 || k > n {
        return Err(Error::InvalidParameter(format!(
            "need 1 ≤ k ≤ N with N ≥ 1, got N={n}, k={k}"
        )));
    }
    let half_angle = T::PI() / (T::of(2.0) * T::of(n as f64));
    let denom = T::of(3.0).sqrt() * half_angle.cos();
    if denom.abs() < T::of(1e-12) {
        return Err(Error::InvalidParameter(
            "N = 1 carries no flux: no field is singular".into(),
        ));
    }
    Ok(m_range
        .into_iter()
        .map(|m| {
            let a_tilde = T::PI() / T::of(2.0) - T::PI() * T::of(k as f64) / T::of(n as f64)
                + T::PI() * T::of(m as f64);
            T::of(4.0) * a_tilde / denom
        })
        .collect())
}

/// Tube configuration: N, field amplitude, and the derived flux and radius.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
#[serde(bound = "T: Real")]
pub struct TubeConfig<T: Real> {
    pub n: usize,
    pub b_field: T,
    pub a: T,
    pub radius: T,
}

impl<T: Real> TubeConfig<T> {
    pub fn from_field(n: usize, b: T) -> Result<Self> {
        Ok(TubeConfig {
            n,
            b_field: b,
            a: flux_from_field(n, b)?,
            radius: tube_radius(n)?,
        })
    }

    /// Build from a flux value, back-computing the field. Rejected for
    /// N = 1, where every field gives zero flux.
    pub fn from_flux(n: usize, a: T) -> Result<Self> {
        let unit = flux_from_field(n, T::one())?;
        if unit.abs() < T::of(1e-12) {
            if a != T::zero() {
                return Err(Error::InvalidParameter(
                    "N = 1 admits only zero flux".into(),
                ));
            }
            return Ok(TubeConfig {
                n,
                b_field: T::zero(),
                a: T::zero(),
                radius: tube_radius(n)?,
            });
        }
        Ok(TubeConfig {
            n,
            b_field: a / unit,
            a,
            radius: tube_radius(n)?,
        })
    }
}

/// Reduced data of one channel.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
#[serde(bound = "T: Real")]
pub struct ChannelParams<T: Real> {
    /// Number of channels N.
    pub n: usize,
    /// Canonical channel index in {0, …, N−1}.
    pub k: usize,
    /// Flux per slanted edge.
    pub a: T,
    pub c_k: T,
    pub s_k: T,
    pub c0k: T,
    pub s0k: T,
    pub singular: bool,
}

impl<T: Real> ChannelParams<T> {
    pub fn new(n: usize, k: i64, a: T) -> Result<Self> {
        Self::with_threshold(n, k, a, T::of(SINGULAR_CK))
    }

    pub fn with_threshold(n: usize, k: i64, a: T, singular_threshold: T) -> Result<Self> {
        if n < 1 {
            return Err(Error::InvalidParameter(format!("N must be ≥ 1, got {n}")));
        }
        let k = k.rem_euclid(n as i64) as usize;
        let ratio = T::PI() * T::of(k as f64) / T::of(n as f64);
        let phase = a + ratio;
        let c_k = phase.cos();
        let s_k = phase.sin();
        Ok(ChannelParams {
            n,
            k,
            a,
            c_k,
            s_k,
            c0k: ratio.cos(),
            s0k: ratio.sin(),
            singular: c_k.abs() < singular_threshold,
        })
    }

    /// s^{−k/2} = e^{−iπk/N}.
    pub fn s_pow_neg_half_k(&self) -> Complex<T> {
        let ang = -T::PI() * T::of(self.k as f64) / T::of(self.n as f64);
        Complex::new(ang.cos(), ang.sin())
    }

    /// s^{−k} = e^{−2πik/N}, the determinant of the monodromy matrix.
    pub fn s_pow_neg_k(&self) -> Complex<T> {
        let ang = -T::of(2.0) * T::PI() * T::of(self.k as f64) / T::of(self.n as f64);
        Complex::new(ang.cos(), ang.sin())
    }

    /// e^{ia}·s^k, the twist that enters the Kirchhoff conditions.
    pub fn twist(&self) -> Complex<T> {
        let ang = self.a + T::of(2.0) * T::PI() * T::of(self.k as f64) / T::of(self.n as f64);
        Complex::new(ang.cos(), ang.sin())
    }

    fn require_regular(&self) -> Result<()> {
        if self.singular {
            Err(Error::ChannelSingular {
                k: self.k,
                ck_abs: self.c_k.abs().to_f64_lossy(),
            })
        } else {
            Ok(())
        }
    }
}

/// The 2×2 channel monodromy matrix at one λ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Monodromy2x2<T: Real> {
    pub lambda: T,
    /// Row-major entries.
    pub m: [[Complex<T>; 2]; 2],
}

impl<T: Real> Monodromy2x2<T> {
    pub fn det(&self) -> Complex<T> {
        self.m[0][0] * self.m[1][1] - self.m[0][1] * self.m[1][0]
    }

    pub fn trace(&self) -> Complex<T> {
        self.m[0][0] + self.m[1][1]
    }
}

/// Monodromy matrix 𝓜_k(λ) of a non-singular channel away from σ_D.
///
/// Built as 𝓡⁻¹𝓣_k𝓡·𝓜 from the scalar fundamental data, with
/// 𝓣_k = s^{−k/2}/(2c_k)·[[2Δ, 1], [4Δ²−4c_k², 2Δ]] and 𝓡 = diag(1, φ₁);
/// its (2,1) entry has poles at the Dirichlet spectrum.
pub fn monodromy<T: Real>(
    q: &Potential<T>,
    lambda: T,
    ch: &ChannelParams<T>,
) -> Result<Monodromy2x2<T>> {
    ch.require_regular()?;
    let d = propagate(q, lambda)?;
    monodromy_from_data(&d, ch)
}

pub(crate) fn monodromy_from_data<T: Real>(
    d: &FundamentalData<T>,
    ch: &ChannelParams<T>,
) -> Result<Monodromy2x2<T>> {
    ch.require_regular()?;
    if d.phi1.abs() <= T::of(DIRICHLET_POLE_TOL) {
        return Err(Error::DirichletPole {
            lambda: d.lambda.to_f64_lossy(),
            phi1_abs: d.phi1.abs().to_f64_lossy(),
        });
    }
    let two = T::of(2.0);
    let four = T::of(4.0);
    let delta = d.delta;
    // 𝓡⁻¹𝓣_k𝓡 without its s^{−k/2}/(2c_k) prefactor
    let a11 = two * delta;
    let a12 = d.phi1;
    let a21 = four * (delta * delta - ch.c_k * ch.c_k) / d.phi1;
    let a22 = two * delta;
    // times 𝓜 = [[θ₁, φ₁], [θ′₁, φ′₁]]
    let b11 = a11 * d.theta1 + a12 * d.theta1p;
    let b12 = a11 * d.phi1 + a12 * d.phi1p;
    let b21 = a21 * d.theta1 + a22 * d.theta1p;
    let b22 = a21 * d.phi1 + a22 * d.phi1p;

    let pre = ch.s_pow_neg_half_k() / Complex::new(two * ch.c_k, T::zero());
    Ok(Monodromy2x2 {
        lambda: d.lambda,
        m: [
            [pre * b11, pre * b12],
            [pre * b21, pre * b22],
        ],
    })
}

/// The entire characteristic function D_k(τ, λ) = det(𝓜_k(λ) − τI)
/// = τ² − Tr 𝓜_k(λ)·τ + s^{−k}, computed through the trace identity
/// Tr 𝓜_k = 2s^{−k/2}(F + s_k²)/c_k so it stays finite across σ_D.
pub fn characteristic_det<T: Real>(
    q: &Potential<T>,
    lambda: T,
    ch: &ChannelParams<T>,
    tau: Complex<T>,
) -> Result<Complex<T>> {
    ch.require_regular()?;
    let f = propagate(q, lambda)?.f;
    let trace = ch.s_pow_neg_half_k()
        * Complex::new(T::of(2.0) * (f + ch.s_k * ch.s_k) / ch.c_k, T::zero());
    Ok(tau * tau - trace * tau + ch.s_pow_neg_k())
}
