//! Channel Lyapunov functions, band/gap assembly, flat bands, full-spectrum
//! reports and field sweeps.
//!
//! Bands are computed from the set inequality (F + s_k²)² ≤ c_k² rather than
//! by tracking √R_k branches; the branch points are exactly the resonance
//! roots, which the root scanner already reports (tangencies become closed
//! gaps). Per-channel band indexing starts at n = 1 for the lowest band in
//! the window. Union bands S_n are the maximal closed intervals of
//! ∪_k σ_{k,n}; gaps are the open complementary intervals between them.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hill::propagate;
use crate::magnetic::{ChannelParams, TubeConfig};
use crate::potential::{Potential, PotentialDigest};
use crate::rootscan::{
    dirichlet_spectrum, solve_f_equals, Multiplicity, Root, RootList, SolverOpts, Window,
};
use crate::scalar::Real;

/// Channels with 1e−9 ≤ |c_k| below this are computed normally but flagged
/// near-flat, with predicted collapse offsets attached.
pub const NEAR_FLAT_CK: f64 = 1e-4;

/// A gap is reported closed when shorter than this times max(1, |λ|).
pub const GAP_CLOSED_REL: f64 = 1e-8;

/// Lyapunov data at one λ for one channel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct LyapunovValue<T: Real> {
    pub lambda: T,
    /// T_k = (c0k/c_k)(F + s_k²)
    pub t_k: T,
    /// R_k = (s0k²/c_k²)(c_k² − (F + s_k²)²)
    pub r_k: T,
    /// F_± = T_k ± √R_k (complex once R_k < 0)
    pub f_plus: Complex<T>,
    pub f_minus: Complex<T>,
}

/// Lyapunov branches for a non-singular channel. For k = 0 the radicand
/// vanishes identically and both branches reduce to F₀ = (F + s₀²)/c₀.
pub fn lyapunov<T: Real>(
    q: &Potential<T>,
    lambda: T,
    ch: &ChannelParams<T>,
) -> Result<LyapunovValue<T>> {
    if ch.singular {
        return Err(Error::ChannelSingular {
            k: ch.k,
            ck_abs: ch.c_k.abs().to_f64_lossy(),
        });
    }
    let f = propagate(q, lambda)?.f;
    let w = f + ch.s_k * ch.s_k;
    let t_k = ch.c0k / ch.c_k * w;
    let r_k = ch.s0k * ch.s0k / (ch.c_k * ch.c_k) * (ch.c_k * ch.c_k - w * w);
    let sqrt_r = if r_k >= T::zero() {
        Complex::new(r_k.sqrt(), T::zero())
    } else {
        Complex::new(T::zero(), (-r_k).sqrt())
    };
    let t = Complex::new(t_k, T::zero());
    Ok(LyapunovValue {
        lambda,
        t_k,
        r_k,
        f_plus: t + sqrt_r,
        f_minus: t - sqrt_r,
    })
}

/// What a band endpoint is.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EndpointKind {
    Resonance,
    Periodic,
    Antiperiodic,
    Flat,
    /// The band continues past the search window and was clipped.
    WindowEdge,
}

/// One spectral band σ_{k,n} = [lo, hi] of channel k.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct Band<T: Real> {
    pub k: usize,
    pub n: usize,
    pub lo: T,
    pub hi: T,
    pub lo_kind: EndpointKind,
    pub hi_kind: EndpointKind,
}

/// Both resonance families of a channel: the even family solves
/// F = |c_k| − s_k², the odd family F = −|c_k| − s_k².
pub fn resonances<T: Real>(
    q: &Potential<T>,
    ch: &ChannelParams<T>,
    window: Window<T>,
    opts: &SolverOpts<T>,
) -> Result<(RootList<T>, RootList<T>)> {
    if ch.singular {
        return Err(Error::ChannelSingular {
            k: ch.k,
            ck_abs: ch.c_k.abs().to_f64_lossy(),
        });
    }
    if ch.s0k == T::zero() {
        // R_k ≡ 0: the Lyapunov function is scalar, no branch points
        return Ok((
            RootList {
                constant: upper_constant(ch),
                roots: vec![],
            },
            RootList {
                constant: lower_constant(ch),
                roots: vec![],
            },
        ));
    }
    let even = solve_f_equals(q, upper_constant(ch), window, opts)?;
    let odd = solve_f_equals(q, lower_constant(ch), window, opts)?;
    Ok((even, odd))
}

fn upper_constant<T: Real>(ch: &ChannelParams<T>) -> T {
    ch.c_k.abs() - ch.s_k * ch.s_k
}

fn lower_constant<T: Real>(ch: &ChannelParams<T>) -> T {
    -ch.c_k.abs() - ch.s_k * ch.s_k
}

fn periodic_constant<T: Real>(ch: &ChannelParams<T>) -> T {
    ch.c0k * ch.c_k - ch.s_k * ch.s_k
}

fn antiperiodic_constant<T: Real>(ch: &ChannelParams<T>) -> T {
    -ch.c0k * ch.c_k - ch.s_k * ch.s_k
}

/// Periodic eigenvalues of channel k: roots of F = c0k·c_k − s_k².
pub fn periodic_eigenvalues<T: Real>(
    q: &Potential<T>,
    ch: &ChannelParams<T>,
    window: Window<T>,
    opts: &SolverOpts<T>,
) -> Result<RootList<T>> {
    if ch.singular {
        return Err(Error::ChannelSingular {
            k: ch.k,
            ck_abs: ch.c_k.abs().to_f64_lossy(),
        });
    }
    solve_f_equals(q, periodic_constant(ch), window, opts)
}

/// Anti-periodic eigenvalues of channel k: roots of F = −c0k·c_k − s_k².
pub fn antiperiodic_eigenvalues<T: Real>(
    q: &Potential<T>,
    ch: &ChannelParams<T>,
    window: Window<T>,
    opts: &SolverOpts<T>,
) -> Result<RootList<T>> {
    if ch.singular {
        return Err(Error::ChannelSingular {
            k: ch.k,
            ck_abs: ch.c_k.abs().to_f64_lossy(),
        });
    }
    solve_f_equals(q, antiperiodic_constant(ch), window, opts)
}

fn endpoint_kind<T: Real>(ch: &ChannelParams<T>, constant: T) -> EndpointKind {
    if ch.s0k != T::zero() {
        EndpointKind::Resonance
    } else if constant == periodic_constant(ch) {
        EndpointKind::Periodic
    } else {
        EndpointKind::Antiperiodic
    }
}

/// Maximal closed intervals where (F + s_k²)² ≤ c_k², assembled from the two
/// boundary-root families. A double-tangent boundary point splits two bands
/// that share the endpoint (closed gap).
pub fn channel_bands<T: Real>(
    q: &Potential<T>,
    ch: &ChannelParams<T>,
    window: Window<T>,
    opts: &SolverOpts<T>,
) -> Result<Vec<Band<T>>> {
    if ch.singular {
        return Err(Error::ChannelSingular {
            k: ch.k,
            ck_abs: ch.c_k.abs().to_f64_lossy(),
        });
    }
    let upper = solve_f_equals(q, upper_constant(ch), window, opts)?;
    let lower = solve_f_equals(q, lower_constant(ch), window, opts)?;

    #[derive(Clone, Copy)]
    struct Boundary<T: Real> {
        lambda: T,
        kind: EndpointKind,
        tangent: bool,
    }
    let mut boundaries: Vec<Boundary<T>> = Vec::new();
    for (list, constant) in [(&upper, upper_constant(ch)), (&lower, lower_constant(ch))] {
        for r in &list.roots {
            boundaries.push(Boundary {
                lambda: r.lambda,
                kind: endpoint_kind(ch, constant),
                tangent: r.multiplicity == Multiplicity::DoubleTangent,
            });
        }
    }
    boundaries.sort_by(|a, b| a.lambda.partial_cmp(&b.lambda).unwrap());

    let inside = |lam: T| -> Result<bool> {
        let f = propagate(q, lam)?.f;
        let w = f + ch.s_k * ch.s_k;
        Ok(w * w <= ch.c_k * ch.c_k + T::of(1e-9))
    };

    // segment endpoints: window.lo, boundaries..., window.hi
    let mut cut_points: Vec<T> = Vec::with_capacity(boundaries.len() + 2);
    cut_points.push(window.lo);
    cut_points.extend(boundaries.iter().map(|b| b.lambda));
    cut_points.push(window.hi);

    let mut bands: Vec<Band<T>> = Vec::new();
    let half = T::of(0.5);
    let mut open: Option<Band<T>> = None;
    for i in 0..cut_points.len() - 1 {
        let (a, b) = (cut_points[i], cut_points[i + 1]);
        let seg_inside = if b > a {
            inside(half * (a + b))?
        } else {
            false // zero-length segment between coincident cuts
        };
        let left_boundary = if i == 0 { None } else { Some(boundaries[i - 1]) };
        if seg_inside {
            match &mut open {
                Some(band) => {
                    // splitting at a tangency: close and reopen
                    if let Some(bd) = left_boundary {
                        if bd.tangent {
                            let mut done = *band;
                            done.hi = bd.lambda;
                            done.hi_kind = bd.kind;
                            bands.push(done);
                            *band = Band {
                                k: ch.k,
                                n: 0,
                                lo: bd.lambda,
                                hi: b,
                                lo_kind: bd.kind,
                                hi_kind: EndpointKind::WindowEdge,
                            };
                            continue;
                        }
                    }
                    band.hi = b;
                }
                None => {
                    let (lo, lo_kind) = match left_boundary {
                        Some(bd) => (bd.lambda, bd.kind),
                        None => (window.lo, EndpointKind::WindowEdge),
                    };
                    open = Some(Band {
                        k: ch.k,
                        n: 0,
                        lo,
                        hi: b,
                        lo_kind,
                        hi_kind: EndpointKind::WindowEdge,
                    });
                }
            }
        } else if let Some(mut band) = open.take() {
            match left_boundary {
                Some(bd) => {
                    band.hi = bd.lambda;
                    band.hi_kind = bd.kind;
                }
                None => unreachable!("band cannot close at the window start"),
            }
            bands.push(band);
        }
    }
    if let Some(band) = open {
        bands.push(band);
    }

    for (i, band) in bands.iter_mut().enumerate() {
        band.n = i + 1;
        debug_assert!(band.lo < band.hi, "band interior must be nonempty");
    }
    Ok(bands)
}

/// σ_D and σ_AP of a singular channel (its entire spectrum, all of infinite
/// multiplicity).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct FlatBandSpectrum<T: Real> {
    pub sigma_d: Vec<T>,
    pub sigma_ap: Vec<T>,
}

/// Flat-band spectrum of a singular channel: σ_D ∪ σ_AP with
/// σ_AP = {λ : F(λ) = −1}. The two sets are disjoint.
pub fn flat_band_spectrum<T: Real>(
    q: &Potential<T>,
    ch: &ChannelParams<T>,
    window: Window<T>,
    opts: &SolverOpts<T>,
) -> Result<FlatBandSpectrum<T>> {
    if !ch.singular {
        return Err(Error::ChannelNotSingular {
            k: ch.k,
            ck_abs: ch.c_k.abs().to_f64_lossy(),
        });
    }
    let sigma_d = dirichlet_spectrum(q, window, opts)?;
    let sigma_ap = solve_f_equals(q, -T::one(), window, opts)?.lambdas();
    Ok(FlatBandSpectrum { sigma_d, sigma_ap })
}

/// Per-channel slice of a spectrum report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct ChannelReport<T: Real> {
    pub k: usize,
    pub c_k: T,
    pub singular: bool,
    pub near_flat: bool,
    pub bands: Vec<Band<T>>,
    pub resonances_even: Vec<Root<T>>,
    pub resonances_odd: Vec<Root<T>>,
    pub periodic: Vec<Root<T>>,
    pub antiperiodic: Vec<Root<T>>,
    /// σ_AP points for a singular channel (empty otherwise).
    pub flat_points: Vec<T>,
    /// For near-flat channels: (λ̃_n, predicted ± offset) collapse data.
    pub collapse_predictions: Vec<CollapsePrediction<T>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct CollapsePrediction<T: Real> {
    pub lambda_tilde: T,
    /// Predicted |offset| of both collapsing endpoints: |c_k / F′(λ̃)|.
    pub offset: T,
}

/// Maximal closed interval S_n of the union ∪_k σ_{k,n}.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct UnionBand<T: Real> {
    pub n: usize,
    pub lo: T,
    pub hi: T,
}

/// Open gap G_n = (lo, hi) between S_n and S_{n+1}.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct Gap<T: Real> {
    pub n: usize,
    pub lo: T,
    pub hi: T,
}

/// Full-spectrum description at one field value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct SpectrumReport<T: Real> {
    pub n: usize,
    pub b_field: T,
    pub a: T,
    pub q_digest: PotentialDigest,
    pub window: (T, T),
    pub channels: Vec<ChannelReport<T>>,
    /// σ_D: eigenvalues of infinite multiplicity present in every channel.
    pub dirichlet: Vec<T>,
    pub union_bands: Vec<UnionBand<T>>,
    pub gaps: Vec<Gap<T>>,
}

/// Compute the spectrum of H(a) over the window: per-channel bands (or flat
/// points), the union bands S_n, the gaps G_n and the Dirichlet points.
pub fn full_spectrum<T: Real>(
    q: &Potential<T>,
    tube: &TubeConfig<T>,
    window: Window<T>,
    opts: &SolverOpts<T>,
) -> Result<SpectrumReport<T>> {
    let mut channels = Vec::with_capacity(tube.n);
    for k in 1..=tube.n {
        let ch = ChannelParams::new(tube.n, k as i64, tube.a)?;
        channels.push(channel_report(q, &ch, window, opts)?);
    }
    let dirichlet = dirichlet_spectrum(q, window, opts)?;

    let mut intervals: Vec<(T, T)> = channels
        .iter()
        .flat_map(|c| c.bands.iter().map(|b| (b.lo, b.hi)))
        .collect();
    intervals.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let gap_tol = |x: T| T::of(GAP_CLOSED_REL) * x.abs().max(T::one());
    let mut union_bands: Vec<UnionBand<T>> = Vec::new();
    for (lo, hi) in intervals {
        match union_bands.last_mut() {
            Some(last) if lo <= last.hi + gap_tol(lo) => {
                if hi > last.hi {
                    last.hi = hi;
                }
            }
            _ => union_bands.push(UnionBand { n: 0, lo, hi }),
        }
    }
    for (i, b) in union_bands.iter_mut().enumerate() {
        b.n = i + 1;
    }
    let gaps = union_bands
        .windows(2)
        .enumerate()
        .map(|(i, pair)| Gap {
            n: i + 1,
            lo: pair[0].hi,
            hi: pair[1].lo,
        })
        .collect();

    Ok(SpectrumReport {
        n: tube.n,
        b_field: tube.b_field,
        a: tube.a,
        q_digest: q.digest(),
        window: (window.lo, window.hi),
        channels,
        dirichlet,
        union_bands,
        gaps,
    })
}

/// Convenience wrapper taking the field amplitude directly.
pub fn full_spectrum_from_field<T: Real>(
    q: &Potential<T>,
    n: usize,
    b: T,
    window: Window<T>,
    opts: &SolverOpts<T>,
) -> Result<SpectrumReport<T>> {
    full_spectrum(q, &TubeConfig::from_field(n, b)?, window, opts)
}

fn channel_report<T: Real>(
    q: &Potential<T>,
    ch: &ChannelParams<T>,
    window: Window<T>,
    opts: &SolverOpts<T>,
) -> Result<ChannelReport<T>> {
    if ch.singular {
        let flat = flat_band_spectrum(q, ch, window, opts)?;
        return Ok(ChannelReport {
            k: ch.k,
            c_k: ch.c_k,
            singular: true,
            near_flat: false,
            bands: vec![],
            resonances_even: vec![],
            resonances_odd: vec![],
            periodic: vec![],
            antiperiodic: vec![],
            flat_points: flat.sigma_ap,
            collapse_predictions: vec![],
        });
    }
    let bands = channel_bands(q, ch, window, opts)?;
    let (even, odd) = resonances(q, ch, window, opts)?;
    let periodic = periodic_eigenvalues(q, ch, window, opts)?;
    let antiperiodic = antiperiodic_eigenvalues(q, ch, window, opts)?;

    let near_flat = ch.c_k.abs() < T::of(NEAR_FLAT_CK);
    let mut collapse_predictions = Vec::new();
    if near_flat {
        let tilde = solve_f_equals(q, -T::one(), window, opts)?;
        for r in &tilde.roots {
            let fp = f_prime(q, r.lambda)?;
            if fp.abs() >= T::of(1e-8) {
                collapse_predictions.push(CollapsePrediction {
                    lambda_tilde: r.lambda,
                    offset: (ch.c_k.abs() / fp).abs(),
                });
            }
        }
    }

    Ok(ChannelReport {
        k: ch.k,
        c_k: ch.c_k,
        singular: false,
        near_flat,
        bands,
        resonances_even: even.roots,
        resonances_odd: odd.roots,
        periodic: periodic.roots,
        antiperiodic: antiperiodic.roots,
        flat_points: vec![],
        collapse_predictions,
    })
}

/// F′(λ) by central difference with step 1e−6·max(1, |λ|).
pub fn f_prime<T: Real>(q: &Potential<T>, lambda: T) -> Result<T> {
    let h = T::of(1e-6) * lambda.abs().max(T::one());
    let fp = propagate(q, lambda + h)?.f;
    let fm = propagate(q, lambda - h)?.f;
    Ok((fp - fm) / (T::of(2.0) * h))
}

/// Spectrum reports over a grid of field amplitudes. Bands are linked
/// across field values by their (k, n) key; see [`band_traces`].
pub fn sweep_field<T: Real>(
    q: &Potential<T>,
    n: usize,
    b_grid: &[T],
    window: Window<T>,
    opts: &SolverOpts<T>,
) -> Result<Vec<SpectrumReport<T>>> {
    b_grid
        .iter()
        .map(|&b| full_spectrum_from_field(q, n, b, window, opts))
        .collect()
}

/// Track of one (k, n) band across a sweep, for collapse monitoring.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct BandTrace<T: Real> {
    pub k: usize,
    pub n: usize,
    /// (B, lo, hi) triples in sweep order; bands absent at some B are skipped.
    pub points: Vec<(T, T, T)>,
}

pub fn band_traces<T: Real>(reports: &[SpectrumReport<T>]) -> Vec<BandTrace<T>> {
    let mut traces: Vec<BandTrace<T>> = Vec::new();
    for rep in reports {
        for chan in &rep.channels {
            for band in &chan.bands {
                let found = traces
                    .iter_mut()
                    .find(|t| t.k == band.k && t.n == band.n);
                let entry = (rep.b_field, band.lo, band.hi);
                match found {
                    Some(t) => t.points.push(entry),
                    None => traces.push(BandTrace {
                        k: band.k,
                        n: band.n,
                        points: vec![entry],
                    }),
                }
            }
        }
    }
    traces.sort_by_key(|a| (a.k, a.n));
    traces
}

/// Which root family an asymptotic bracket predicts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BracketKind {
    Periodic,
    Antiperiodic,
    ResonanceEven,
    ResonanceOdd,
}

/// High-energy prediction for the n-th root pair of a family:
/// centers (πn ∓ u₀)² + q₀ with u₀ = ½·arccos((1 + 8c)/9) for the family
/// constant c, plus a guard interval for seeding brackets.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct AsymptoticBracket<T: Real> {
    pub n: usize,
    pub center_minus: T,
    pub center_plus: T,
    pub lo: T,
    pub hi: T,
}

pub fn asymptotic_bracket<T: Real>(
    kind: BracketKind,
    ch: &ChannelParams<T>,
    n: usize,
    q0: T,
) -> Result<AsymptoticBracket<T>> {
    if n < 1 {
        return Err(Error::InvalidParameter(format!("n must be ≥ 1, got {n}")));
    }
    let c = match kind {
        BracketKind::Periodic => periodic_constant(ch),
        BracketKind::Antiperiodic => antiperiodic_constant(ch),
        BracketKind::ResonanceEven => upper_constant(ch),
        BracketKind::ResonanceOdd => lower_constant(ch),
    };
    let arg = ((T::one() + T::of(8.0) * c) / T::of(9.0))
        .max(-T::one())
        .min(T::one());
    let u0 = arg.acos() / T::of(2.0);
    let pin = T::PI() * T::of(n as f64);
    let center_minus = (pin - u0) * (pin - u0) + q0;
    let center_plus = (pin + u0) * (pin + u0) + q0;
    let guard = T::of(5.0).max(T::of(10.0) * q0.abs());
    Ok(AsymptoticBracket {
        n,
        center_minus,
        center_plus,
        lo: center_minus - guard,
        hi: center_plus + guard,
    })
}

/// Measured and predicted offsets of the two endpoints of one collapsing
/// band, for one value of |c_k|.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct CollapseSample<T: Real> {
    /// |c_k| at the probed flux.
    pub c0: T,
    /// Endpoint from the even family (F = |c_k| − s_k²): measured offset
    /// endpoint − λ̃ and its prediction +c0/F′(λ̃).
    pub even_measured: T,
    pub even_predicted: T,
    /// Endpoint from the odd family (F = −|c_k| − s_k²): measured offset
    /// and its prediction −c0/F′(λ̃).
    pub odd_measured: T,
    pub odd_predicted: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct CollapseRate<T: Real> {
    pub lambda_tilde: T,
    pub f_prime: T,
    pub samples: Vec<CollapseSample<T>>,
}

/// Flat-band collapse rate: endpoints of the band collapsing onto λ̃_n as
/// the flux approaches the singular value ã_{k,m}, measured at the given
/// small |c_k| values against the first-order prediction ±c0/F′(λ̃_n).
pub fn collapse_rate<T: Real>(
    q: &Potential<T>,
    n_channels: usize,
    k: usize,
    m: i64,
    band_n: usize,
    c0_values: &[T],
    opts: &SolverOpts<T>,
) -> Result<CollapseRate<T>> {
    if k < 1 || k > n_channels {
        return Err(Error::InvalidParameter(format!(
            "need 1 ≤ k ≤ N, got k={k}, N={n_channels}"
        )));
    }
    if band_n < 1 {
        return Err(Error::InvalidParameter("band index starts at 1".into()));
    }
    for &c0 in c0_values {
        if c0 <= T::of(1e-8) || c0 > T::of(0.05) {
            return Err(Error::InvalidParameter(format!(
                "c0 values must lie in (1e-8, 0.05], got {c0}"
            )));
        }
    }

    // locate λ̃_{band_n}: the band_n-th root of F = −1
    let q0 = q.q0();
    let hi_guess = {
        let u = T::PI() * T::of(band_n as f64 / 2.0 + 2.0);
        u * u + T::of(10.0) * q0.abs()
    };
    let window = Window::new(T::of(-10.0) - T::of(10.0) * q0.abs(), hi_guess)?;
    let tilde = solve_f_equals(q, -T::one(), window, opts)?;
    if tilde.roots.len() < band_n {
        return Err(Error::InvalidParameter(format!(
            "only {} roots of F = -1 found below the search window",
            tilde.roots.len()
        )));
    }
    let lambda_tilde = tilde.roots[band_n - 1].lambda;
    let fp = f_prime(q, lambda_tilde)?;
    if fp.abs() < T::of(1e-8) {
        return Err(Error::DegenerateDerivative {
            lambda: lambda_tilde.to_f64_lossy(),
            min: 1e-8,
        });
    }

    let a_tilde = T::PI() / T::of(2.0) - T::PI() * T::of(k as f64) / T::of(n_channels as f64)
        + T::PI() * T::of(m as f64);
    let mut samples = Vec::with_capacity(c0_values.len());
    for &c0 in c0_values {
        // flux with |c_k| exactly c0: cos(ã + πk/N ∓ ε) = ±sin ε
        let a = a_tilde - c0.asin();
        let ch = ChannelParams::new(n_channels, k as i64, a)?;
        debug_assert!((ch.c_k.abs() - c0).abs() <= T::of(1e-12));

        let local = Window::new(
            lambda_tilde - T::of(0.5).max(T::of(20.0) * (c0 / fp).abs()),
            lambda_tilde + T::of(0.5).max(T::of(20.0) * (c0 / fp).abs()),
        )?;
        let even = solve_f_equals(q, upper_constant(&ch), local, opts)?;
        let odd = solve_f_equals(q, lower_constant(&ch), local, opts)?;
        let nearest = |list: &RootList<T>| -> Result<T> {
            list.roots
                .iter()
                .map(|r| r.lambda)
                .min_by(|x, y| {
                    (*x - lambda_tilde)
                        .abs()
                        .partial_cmp(&(*y - lambda_tilde).abs())
                        .unwrap()
                })
                .ok_or_else(|| {
                    Error::InvalidParameter("no collapsing endpoint found near λ̃".into())
                })
        };
        samples.push(CollapseSample {
            c0,
            even_measured: nearest(&even)? - lambda_tilde,
            even_predicted: c0 / fp,
            odd_measured: nearest(&odd)? - lambda_tilde,
            odd_predicted: -c0 / fp,
        });
    }
    Ok(CollapseRate {
        lambda_tilde,
        f_prime: fp,
        samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hill::free_f;
    use std::f64::consts::PI;

    fn opts() -> SolverOpts<f64> {
        SolverOpts::default()
    }

    fn cos_q(amp: f64) -> Potential<f64> {
        Potential::<f64>::sampled_from_fn(2048, |t| amp * (2.0 * PI * t).cos()).unwrap()
    }

    const LAMBDA_TILDE_1: f64 = 1.5152610871399395;
    const LAMBDA_TILDE_2: f64 = 3.650519363459398;

    #[test]
    fn lyapunov_reduces_to_f_for_trivial_channel() {
        let q = Potential::<f64>::zero();
        let ch = ChannelParams::new(3, 0, 0.0).unwrap();
        for lam in [0.0, 2.0, 11.0] {
            let v = lyapunov(&q, lam, &ch).unwrap();
            assert_eq!(v.r_k, 0.0);
            assert!((v.f_plus.re - free_f(lam)).abs() < 1e-12);
            assert_eq!(v.f_plus, v.f_minus);
        }
    }

    #[test]
    fn lyapunov_frozen_example() {
        // q=0, N=3, k=1, a=0, λ=0: T₁ = 7/4, R₁ = −135/16
        let q = Potential::<f64>::zero();
        let ch = ChannelParams::new(3, 1, 0.0).unwrap();
        let v = lyapunov(&q, 0.0, &ch).unwrap();
        assert!((v.t_k - 1.75).abs() < 1e-12);
        assert!((v.r_k + 135.0 / 16.0).abs() < 1e-11);
        // branch algebra
        assert!((v.f_plus + v.f_minus - Complex::new(2.0 * v.t_k, 0.0)).norm() < 1e-10);
        let prod = v.f_plus * v.f_minus;
        assert!((prod - Complex::new(v.t_k * v.t_k - v.r_k, 0.0)).norm() < 1e-10);
    }

    #[test]
    fn resonances_empty_for_scalar_channels() {
        let q = Potential::<f64>::zero();
        let w = Window::new(0.0, 50.0).unwrap();
        let ch = ChannelParams::new(2, 2, 0.4).unwrap(); // k ≡ 0
        let (even, odd) = resonances(&q, &ch, w, &opts()).unwrap();
        assert!(even.roots.is_empty() && odd.roots.is_empty());
    }

    #[test]
    fn resonance_families_free_channel() {
        // N=3, k=1, a=0: even constant −¼ (first root ≈ 0.70740),
        // odd constant −5/4 (double-tangent at (π(n−½))²)
        let q = Potential::<f64>::zero();
        let w = Window::new(0.0, 30.0).unwrap();
        let ch = ChannelParams::new(3, 1, 0.0).unwrap();
        let (even, odd) = resonances(&q, &ch, w, &opts()).unwrap();
        assert!((even.constant + 0.25).abs() < 1e-12);
        assert!((even.roots[0].lambda - 0.7073965086109056).abs() < 1e-9);
        assert!((odd.constant + 1.25).abs() < 1e-12);
        assert!((odd.roots[0].lambda - PI * PI / 4.0).abs() < 1e-6);
        assert_eq!(odd.roots[0].multiplicity, Multiplicity::DoubleTangent);
    }

    #[test]
    fn resonance_count_n2_channel() {
        // N=2, k=1 at generic a: both families, 2 roots per half period
        let q = Potential::<f64>::zero();
        let hi = (10.0 * PI).powi(2);
        let w = Window::new(0.0, hi).unwrap();
        let ch = ChannelParams::<f64>::new(2, 1, 0.4).unwrap();
        assert!(ch.c0k.abs() < 1e-15);
        let (even, odd) = resonances(&q, &ch, w, &opts()).unwrap();
        let expected = |c: f64| {
            let u0 = ((1.0 + 8.0 * c) / 9.0).acos() / 2.0;
            // roots at u0 and πn ± u0 inside [0, 10π]
            let mut count = 1; // u0
            for n in 1..=10 {
                if PI * n as f64 - u0 <= 10.0 * PI {
                    count += 1;
                }
                if PI * n as f64 + u0 <= 10.0 * PI {
                    count += 1;
                }
            }
            count
        };
        assert_eq!(even.roots.len(), expected(even.constant));
        assert_eq!(odd.roots.len(), expected(odd.constant));
    }

    #[test]
    fn periodic_constants_reduce_at_zero_flux() {
        // a=0: F(λ±) = cos(2πk/N), F(μ±) = −1
        let ch = ChannelParams::<f64>::new(5, 2, 0.0).unwrap();
        assert!((periodic_constant(&ch) - (2.0 * PI * 2.0 / 5.0).cos()).abs() < 1e-14);
        assert!((antiperiodic_constant(&ch) + 1.0).abs() < 1e-14);
    }

    #[test]
    fn periodic_free_k0() {
        let q = Potential::<f64>::zero();
        let w = Window::new(-1.0, 100.0).unwrap();
        let ch = ChannelParams::new(3, 0, 0.0).unwrap();
        let list = periodic_eigenvalues(&q, &ch, w, &opts()).unwrap();
        let expect = [0.0, PI * PI, 4.0 * PI * PI, 9.0 * PI * PI];
        assert_eq!(list.roots.len(), 4);
        for (r, e) in list.roots.iter().zip(expect) {
            assert!((r.lambda - e).abs() < 1e-6 * (1.0 + e));
        }
    }

    #[test]
    fn eigenvalues_lie_in_bands() {
        // q = 2cos2πt, N=3, k=1, a=0.3: λ±, μ± satisfy their equation and
        // lie inside closed bands
        let q = cos_q(2.0);
        let w = Window::new(-3.0, 60.0).unwrap();
        let ch = ChannelParams::new(3, 1, 0.3).unwrap();
        let bands = channel_bands(&q, &ch, w, &opts()).unwrap();
        let per = periodic_eigenvalues(&q, &ch, w, &opts()).unwrap();
        let anti = antiperiodic_eigenvalues(&q, &ch, w, &opts()).unwrap();
        assert!(!per.roots.is_empty() && !anti.roots.is_empty());
        for list in [&per, &anti] {
            for r in &list.roots {
                let f = propagate(&q, r.lambda).unwrap().f;
                assert!((f - list.constant).abs() < 1e-8);
                let inside = bands
                    .iter()
                    .any(|b| b.lo - 1e-7 <= r.lambda && r.lambda <= b.hi + 1e-7);
                assert!(inside, "root {} outside every band", r.lambda);
            }
        }
    }

    #[test]
    fn channel_bands_free_k0() {
        let q = Potential::<f64>::zero();
        let w = Window::new(0.0, 12.0).unwrap();
        let ch = ChannelParams::new(3, 0, 0.0).unwrap();
        let bands = channel_bands(&q, &ch, w, &opts()).unwrap();
        // F ∈ [−1, 1]: [0, λ̃₁], [λ̃₂, π²], [π², hi]
        assert_eq!(bands.len(), 3, "{bands:?}");
        assert!((bands[0].lo - 0.0).abs() < 1e-12);
        assert!((bands[0].hi - LAMBDA_TILDE_1).abs() < 1e-9);
        assert!((bands[1].lo - LAMBDA_TILDE_2).abs() < 1e-9);
        assert!((bands[1].hi - PI * PI).abs() < 1e-6);
        assert!((bands[2].lo - PI * PI).abs() < 1e-6);
        assert_eq!(bands[1].hi_kind, EndpointKind::Periodic);
        assert_eq!(bands[1].lo_kind, EndpointKind::Antiperiodic);
        // λ = 0 is itself the lowest periodic eigenvalue
        assert_eq!(bands[0].lo_kind, EndpointKind::Periodic);
        assert_eq!(bands[0].n, 1);
        assert_eq!(bands[2].n, 3);
    }

    #[test]
    fn channel_bands_free_k1_tangent_split() {
        let q = Potential::<f64>::zero();
        let w = Window::new(0.0, 6.0).unwrap();
        let ch = ChannelParams::new(3, 1, 0.0).unwrap();
        let bands = channel_bands(&q, &ch, w, &opts()).unwrap();
        // 𝔖 = {F ∈ [−5/4, −¼]}: [0.70740, π²/4] and [π²/4, 5.29241]
        assert_eq!(bands.len(), 2, "{bands:?}");
        assert!((bands[0].lo - 0.7073965086109056).abs() < 1e-9);
        assert!((bands[0].hi - PI * PI / 4.0).abs() < 1e-6);
        assert!((bands[1].lo - bands[0].hi).abs() < 1e-12, "shared endpoint");
        let second_exit = ((2.0 * PI - (-1.0f64 / 9.0).acos()) / 2.0).powi(2);
        assert!((bands[1].hi - second_exit).abs() < 1e-9);
        assert_eq!(bands[0].hi_kind, EndpointKind::Resonance);
    }

    #[test]
    fn bands_invariant_under_flux_plus_pi() {
        let q = cos_q(1.0);
        let w = Window::new(0.0, 40.0).unwrap();
        let a = 0.37;
        let ch1 = ChannelParams::new(4, 1, a).unwrap();
        let ch2 = ChannelParams::new(4, 1, a + PI).unwrap();
        let b1 = channel_bands(&q, &ch1, w, &opts()).unwrap();
        let b2 = channel_bands(&q, &ch2, w, &opts()).unwrap();
        assert_eq!(b1.len(), b2.len());
        for (x, y) in b1.iter().zip(&b2) {
            assert!((x.lo - y.lo).abs() < 1e-9 && (x.hi - y.hi).abs() < 1e-9);
        }
    }

    #[test]
    fn band_membership_matches_predicate() {
        // set identity on a grid (Eq. T6-1)
        let q = cos_q(1.0);
        let w = Window::new(0.0, 80.0).unwrap();
        let ch = ChannelParams::new(3, 1, 0.3).unwrap();
        let bands = channel_bands(&q, &ch, w, &opts()).unwrap();
        for i in 0..2000 {
            let lam = w.lo + (w.hi - w.lo) * i as f64 / 1999.0;
            let f = propagate(&q, lam).unwrap().f;
            let wv = f + ch.s_k * ch.s_k;
            let inside_pred = wv * wv <= ch.c_k * ch.c_k + 1e-9;
            let inside_bands = bands
                .iter()
                .any(|b| b.lo - 1e-7 <= lam && lam <= b.hi + 1e-7);
            // boundary points may flip either way within tolerance
            let near_edge = bands
                .iter()
                .any(|b| (lam - b.lo).abs() < 1e-4 || (lam - b.hi).abs() < 1e-4);
            assert!(
                inside_pred == inside_bands || near_edge,
                "λ={lam}: predicate {inside_pred} vs bands {inside_bands}"
            );
        }
    }

    #[test]
    fn flat_band_spectrum_free() {
        let q = Potential::<f64>::zero();
        let w = Window::new(0.0, 12.0).unwrap();
        let ch = ChannelParams::new(2, 1, 0.0).unwrap(); // c_k = cos(π/2) = 0
        assert!(ch.singular);
        let flat = flat_band_spectrum(&q, &ch, w, &opts()).unwrap();
        assert!((flat.sigma_ap[0] - LAMBDA_TILDE_1).abs() < 1e-9);
        assert!((flat.sigma_ap[1] - LAMBDA_TILDE_2).abs() < 1e-9);
        assert!((flat.sigma_d[0] - PI * PI).abs() < 1e-8);
        // disjoint sets
        for d in &flat.sigma_d {
            for ap in &flat.sigma_ap {
                assert!((d - ap).abs() > 1e-3);
            }
        }
        // misuse
        let regular = ChannelParams::new(2, 1, 0.3).unwrap();
        assert!(matches!(
            flat_band_spectrum(&q, &regular, w, &opts()),
            Err(Error::ChannelNotSingular { .. })
        ));
    }

    #[test]
    fn flat_band_shift_with_constant_potential() {
        let q = Potential::<f64>::constant(5.0);
        let w = Window::new(0.0, 17.0).unwrap();
        let ch = ChannelParams::new(2, 1, 0.0).unwrap();
        let flat = flat_band_spectrum(&q, &ch, w, &opts()).unwrap();
        assert!((flat.sigma_ap[0] - (LAMBDA_TILDE_1 + 5.0)).abs() < 1e-9);
        assert!((flat.sigma_d[0] - (PI * PI + 5.0)).abs() < 1e-8);
    }

    #[test]
    fn full_spectrum_n1_single_channel() {
        let q = Potential::<f64>::zero();
        let tube = TubeConfig::from_field(1, 0.0).unwrap();
        let w = Window::new(0.0, 12.0).unwrap();
        let rep = full_spectrum(&q, &tube, w, &opts()).unwrap();
        assert_eq!(rep.channels.len(), 1);
        assert_eq!(rep.channels[0].k, 0);
        // single channel: union bands = its bands where cos2√λ ∈ [−7/9, 1]
        assert!((rep.union_bands[0].lo - 0.0).abs() < 1e-12);
        assert!((rep.union_bands[0].hi - LAMBDA_TILDE_1).abs() < 1e-9);
        assert!(!rep.gaps.is_empty());
        assert!((rep.gaps[0].lo - LAMBDA_TILDE_1).abs() < 1e-9);
        assert!((rep.gaps[0].hi - LAMBDA_TILDE_2).abs() < 1e-9);
    }

    #[test]
    fn full_spectrum_n3_zero_field_union_and_intersection() {
        let q = Potential::<f64>::zero();
        let tube = TubeConfig::from_field(3, 0.0).unwrap();
        let w = Window::new(0.0, 12.0).unwrap();
        let rep = full_spectrum(&q, &tube, w, &opts()).unwrap();
        // S₁ ⊇ [0, 2.46740] (metallic at zero flux for N divisible by 3)
        assert!(rep.union_bands[0].lo < 1e-9);
        assert!(rep.union_bands[0].hi >= PI * PI / 4.0 - 1e-6);
        // ∩_k σ_{k,1} ≠ ∅
        let firsts: Vec<(f64, f64)> = rep
            .channels
            .iter()
            .map(|c| (c.bands[0].lo, c.bands[0].hi))
            .collect();
        let lo = firsts.iter().map(|b| b.0).fold(f64::MIN, f64::max);
        let hi = firsts.iter().map(|b| b.1).fold(f64::MAX, f64::min);
        assert!(lo < hi, "channel-1 bands must share an interval");
    }

    #[test]
    fn full_spectrum_singular_field_flat_channel() {
        // N=3, B = B_{1,0} = 4π/9: channel 1 collapses to flat points
        let q = Potential::<f64>::zero();
        let tube = TubeConfig::from_field(3, 4.0 * PI / 9.0).unwrap();
        let w = Window::new(0.0, 12.0).unwrap();
        let rep = full_spectrum(&q, &tube, w, &opts()).unwrap();
        let flat_channel = rep.channels.iter().find(|c| c.singular).unwrap();
        assert_eq!(flat_channel.k, 1);
        assert!((flat_channel.flat_points[0] - LAMBDA_TILDE_1).abs() < 1e-9);
        // union bands come from the two regular channels only
        assert!(rep.channels.iter().filter(|c| !c.singular).count() == 2);
        assert!(!rep.union_bands.is_empty());
    }

    #[test]
    fn near_flat_channel_is_flagged_with_predictions() {
        // |c_k| = 1e−5 sits between the singular threshold and the
        // near-flat bound: bands are computed normally but the report
        // carries the predicted collapse offsets
        let q = Potential::<f64>::zero();
        let a = PI / 6.0 - 1e-5f64.asin();
        let tube = TubeConfig::from_flux(3, a).unwrap();
        let w = Window::new(0.0, 6.0).unwrap();
        let rep = full_spectrum(&q, &tube, w, &opts()).unwrap();
        let chan = rep.channels.iter().find(|c| c.k == 1).unwrap();
        assert!(!chan.singular);
        assert!(chan.near_flat);
        assert!(!chan.bands.is_empty());
        assert!(!chan.collapse_predictions.is_empty());
        let p = &chan.collapse_predictions[0];
        assert!((p.lambda_tilde - LAMBDA_TILDE_1).abs() < 1e-9);
        assert!((p.offset - 1e-5 / 0.5744354941563394).abs() < 1e-9);
        // the collapsing band is about twice the predicted offset wide
        let width = chan.bands[0].hi - chan.bands[0].lo;
        assert!((width - 2.0 * p.offset).abs() < 0.05 * width);
        // a regular channel stays unflagged
        assert!(!rep.channels.iter().find(|c| c.k == 2).unwrap().near_flat);
    }

    #[test]
    fn sweep_links_bands() {
        let q = Potential::<f64>::zero();
        let w = Window::new(0.0, 10.0).unwrap();
        let grid = [0.0, 0.2, 0.4];
        let reps = sweep_field(&q, 3, &grid, w, &opts()).unwrap();
        assert_eq!(reps.len(), 3);
        let traces = band_traces(&reps);
        assert!(traces.iter().any(|t| t.points.len() == 3));
    }

    #[test]
    fn asymptotic_bracket_free_periodic() {
        // q=0, k=0, a=0, periodic: centers (πn)² exactly
        let ch = ChannelParams::<f64>::new(3, 0, 0.0).unwrap();
        let br = asymptotic_bracket(BracketKind::Periodic, &ch, 4, 0.0).unwrap();
        assert!((br.center_minus - (4.0 * PI).powi(2)).abs() < 1e-9);
        assert!((br.center_plus - (4.0 * PI).powi(2)).abs() < 1e-9);
        assert!(br.lo <= br.center_minus && br.center_plus <= br.hi);
        assert!(asymptotic_bracket(BracketKind::Periodic, &ch, 0, 0.0).is_err());
    }

    #[test]
    fn asymptotic_bracket_resonance_even_matches_roots() {
        // N=3, k=1, a=0: u₀ = ½ arccos(−1/9) ≈ 0.84107
        let q = Potential::<f64>::zero();
        let ch = ChannelParams::new(3, 1, 0.0).unwrap();
        let br = asymptotic_bracket(BracketKind::ResonanceEven, &ch, 10, 0.0).unwrap();
        let u0 = 0.8410686705679303;
        assert!((br.center_minus - (10.0 * PI - u0).powi(2)).abs() < 1e-9);
        assert!((br.center_plus - (10.0 * PI + u0).powi(2)).abs() < 1e-9);
        // the bracket window actually contains the computed roots
        let w = Window::new(br.lo, br.hi).unwrap();
        let (even, _) = resonances(&q, &ch, w, &opts()).unwrap();
        assert!(even
            .roots
            .iter()
            .any(|r| (r.lambda - br.center_minus).abs() < 1e-6));
        assert!(even
            .roots
            .iter()
            .any(|r| (r.lambda - br.center_plus).abs() < 1e-6));
    }

    #[test]
    fn collapse_rate_free_first_band() {
        let q = Potential::<f64>::zero();
        let rate = collapse_rate(&q, 3, 1, 0, 1, &[1e-3, 5e-4], &opts()).unwrap();
        assert!((rate.lambda_tilde - LAMBDA_TILDE_1).abs() < 1e-9);
        assert!((rate.f_prime + 0.5744354941563394).abs() < 1e-6);
        for s in &rate.samples {
            // both endpoints within 20% of the first-order prediction
            let even_err = (s.even_measured - s.even_predicted).abs();
            let odd_err = (s.odd_measured - s.odd_predicted).abs();
            assert!(even_err <= 0.2 * s.even_predicted.abs());
            assert!(odd_err <= 0.2 * s.odd_predicted.abs());
        }
        // O(c0²) remainder: halving c0 shrinks the error ~4×
        let e1 = (rate.samples[0].even_measured - rate.samples[0].even_predicted).abs();
        let e2 = (rate.samples[1].even_measured - rate.samples[1].even_predicted).abs();
        assert!(e2 < 0.45 * e1, "e1={e1:e} e2={e2:e}");
        assert!(e2 > 0.10 * e1, "e1={e1:e} e2={e2:e}");
    }

    #[test]
    fn collapse_rate_rejects_large_c0() {
        let q = Potential::<f64>::zero();
        assert!(collapse_rate(&q, 3, 1, 0, 1, &[0.2], &opts()).is_err());
    }

    #[test]
    fn report_serializes_to_json() {
        let q = Potential::<f64>::zero();
        let tube = TubeConfig::from_field(2, 0.5).unwrap();
        let w = Window::new(0.0, 10.0).unwrap();
        let rep = full_spectrum(&q, &tube, w, &opts()).unwrap();
        let text = serde_json::to_string(&rep).unwrap();
        let back: SpectrumReport<f64> = serde_json::from_str(&text).unwrap();
        assert_eq!(rep, back);
    }
}
