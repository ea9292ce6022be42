//! Spectral theory of the magnetic Schrödinger operator on the zigzag
//! periodic nanotube graph.
//!
//! A uniform axial magnetic field B and a 1-periodic edge potential q reduce
//! the operator on the tube to N independent channel operators on the
//! single-chain graph; everything a channel sees is scalar Hill data — the
//! fundamental solutions θ, φ of −y″ + qy = λy on [0, 1] and the function
//!
//! ```text
//! F(λ) = 2Δ(λ)² + φ₁θ′₁/4 − 1,    Δ = (φ′₁ + θ₁)/2,
//! ```
//!
//! plus the flux constants c_k = cos(a + πk/N), s_k = sin(a + πk/N). Bands,
//! gaps, resonances, periodic and anti-periodic eigenvalues and flat bands
//! are all level sets F(λ) = c for constants c ∈ [−5/4, 1].
//!
//! Modules:
//! - [`potential`]: the edge potential (piecewise-constant or sampled) and
//!   its JSON format; note the half-integral convention q₀ = ½∫q.
//! - [`hill`]: fundamental solutions, Δ and F.
//! - [`rootscan`]: bracketed root finding for F(λ) = c with tangency
//!   detection, plus Dirichlet and Neumann spectra.
//! - [`magnetic`]: tube geometry, flux, singular fields, channel parameters
//!   and the 2×2 monodromy matrix with its exact identities.
//! - [`spectra`]: Lyapunov branches, per-channel bands, flat bands, full
//!   spectrum assembly with union bands and gaps, field sweeps, high-energy
//!   asymptotics and flat-band collapse rates.
//! - [`eigenfunctions`]: compactly supported eigenfunctions and the
//!   Kirchhoff residual oracle.
//! - [`floquet`]: the independent fiber-determinant verification path.
//! - [`verify`]: the acceptance suite run by `zigzag verify`.
//!
//! The numeric kernel is generic over the scalar type through
//! [`scalar::Real`] (`f32` or `f64`); the aliases below fix the common
//! double-precision instantiations.

pub mod eigenfunctions;
pub mod error;
pub mod floquet;
pub mod hill;
pub mod magnetic;
pub mod potential;
pub mod rootscan;
pub mod scalar;
pub mod spectra;
pub mod verify;

pub use error::{Error, Result};
pub use scalar::Real;

/// Double-precision aliases for the main entry types.
pub type Potential64 = potential::Potential<f64>;
pub type FundamentalData64 = hill::FundamentalData<f64>;
pub type Window64 = rootscan::Window<f64>;
pub type SolverOpts64 = rootscan::SolverOpts<f64>;
pub type RootList64 = rootscan::RootList<f64>;
pub type TubeConfig64 = magnetic::TubeConfig<f64>;
pub type ChannelParams64 = magnetic::ChannelParams<f64>;
pub type Monodromy64 = magnetic::Monodromy2x2<f64>;
pub type Band64 = spectra::Band<f64>;
pub type SpectrumReport64 = spectra::SpectrumReport<f64>;
pub type CompactEigenfunction64 = eigenfunctions::CompactEigenfunction<f64>;

/// Single-precision aliases; the kernel runs, but the documented accuracy
/// contracts assume `f64`.
pub type Potential32 = potential::Potential<f32>;
pub type FundamentalData32 = hill::FundamentalData<f32>;
