//! Independent verification path through the direct-integral fiber operator.
//!
//! For quasimomentum p the fiber problem on the three-edge fundamental
//! domain reduces to a 2×2 linear system in (f₀(0), f₀(1)); its determinant
//! vanishes exactly when
//!
//! ```text
//! Q(λ, p) = F(λ) + s_k² − c_k·cos(p + πk/N) = 0.
//! ```
//!
//! `fiber_q_closed` evaluates that closed form; `fiber_q_direct` builds the
//! boundary-condition system itself and returns its normalized determinant —
//! the two must agree away from σ_D, which is the genuinely independent
//! check of the whole reduction. The union of fiber roots over a p-grid
//! reproduces the channel bands; it is a verification tool, not the primary
//! band algorithm.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::hill::propagate;
use crate::magnetic::{ChannelParams, DIRICHLET_POLE_TOL};
use crate::potential::Potential;
use crate::rootscan::{classify_from_samples, sample_grid, SolverOpts, Window};
use crate::scalar::Real;

/// Closed-form fiber determinant Q = F + s_k² − c_k·cos(p + πk/N).
pub fn fiber_q_closed<T: Real>(
    q: &Potential<T>,
    lambda: T,
    p: T,
    ch: &ChannelParams<T>,
) -> Result<T> {
    let f = propagate(q, lambda)?.f;
    Ok(f + ch.s_k * ch.s_k - ch.c_k * (p + phase_offset(ch)).cos())
}

fn phase_offset<T: Real>(ch: &ChannelParams<T>) -> T {
    T::PI() * T::of(ch.k as f64) / T::of(ch.n as f64)
}

/// Determinant of the fiber boundary-condition system in (f₀(0), f₀(1)),
/// normalized by e^{−ip}/4 so that its zero set matches `fiber_q_closed`.
///
/// The construction divides by φ₁, so λ near σ_D is a pole error.
pub fn fiber_q_direct<T: Real>(
    q: &Potential<T>,
    lambda: T,
    p: T,
    ch: &ChannelParams<T>,
) -> Result<Complex<T>> {
    let d = propagate(q, lambda)?;
    if d.phi1.abs() <= T::of(DIRICHLET_POLE_TOL) {
        return Err(Error::DirichletPole {
            lambda: lambda.to_f64_lossy(),
            phi1_abs: d.phi1.abs().to_f64_lossy(),
        });
    }
    let unit = |ang: T| Complex::new(ang.cos(), ang.sin());
    let re = |x: T| Complex::new(x, T::zero());
    let two_pi_k_n = T::of(2.0) * phase_offset(ch);
    let one = Complex::new(T::one(), T::zero());

    // row 1: x(1 + e^{i(p−a)} + e^{i(p+a)}s^k) − y(2Δ + φ′₁) = 0
    // row 2: −x e^{ip}(2Δ + θ₁) + y(e^{ip} + e^{ia} + e^{−ia}s^{−k}) = 0
    let alpha = one + unit(p - ch.a) + unit(p + ch.a + two_pi_k_n);
    let beta = unit(p) + unit(ch.a) + unit(-ch.a - two_pi_k_n);
    let two_delta = T::of(2.0) * d.delta;
    let m12 = re(two_delta + d.phi1p);
    let m21 = re(two_delta + d.theta1);

    debug_assert!({
        let lhs = (two_delta + d.theta1) * (two_delta + d.phi1p);
        let rhs = T::of(8.0) * d.delta * d.delta + d.theta1p * d.phi1 + T::one();
        (lhs - rhs).abs() <= T::of(1e-10) * (T::one() + lhs.abs())
    });

    // det = αβ − e^{ip}·m21·m12; normalized as in the closed form:
    // (m21·m12 − e^{−ip}αβ)/4 = F + s_k² − c_k cos(p + πk/N)
    Ok((m21 * m12 - unit(-p) * alpha * beta) / re(T::of(4.0)))
}

/// Uniform p-grid aligned to the channel phase, so the extremal fibers
/// cos(p + πk/N) = ±1 are sampled exactly.
pub fn default_p_grid<T: Real>(ch: &ChannelParams<T>, count: usize) -> Vec<T> {
    let two_pi = T::of(2.0) * T::PI();
    let offset = phase_offset(ch);
    (0..count)
        .map(|i| {
            let p = two_pi * T::of(i as f64) / T::of(count as f64) - offset;
            if p < T::zero() {
                p + two_pi
            } else {
                p
            }
        })
        .collect()
}

/// Union over the p-grid of the λ-roots of Q, merged into maximal closed
/// intervals and clipped to the window. Must agree with the channel bands.
pub fn spectrum_via_fibers<T: Real>(
    q: &Potential<T>,
    ch: &ChannelParams<T>,
    p_grid: &[T],
    window: Window<T>,
    opts: &SolverOpts<T>,
) -> Result<Vec<(T, T)>> {
    if ch.singular {
        return Err(Error::ChannelSingular {
            k: ch.k,
            ck_abs: ch.c_k.abs().to_f64_lossy(),
        });
    }
    if p_grid.len() < 64 {
        return Err(Error::InvalidParameter(format!(
            "p-grid needs at least 64 points, got {}",
            p_grid.len()
        )));
    }

    // extend the window down to the spectrum floor so the j-th fiber root
    // has the same band index for every p
    let mut floor = window.lo.min(T::zero());
    let mut escape_run = 0;
    loop {
        let f = propagate(q, floor)?.f;
        if f > opts.f_escape {
            escape_run += 1;
            if escape_run >= 3 {
                break;
            }
        } else {
            escape_run = 0;
        }
        floor -= opts.neg_step;
        if floor < window.lo - T::of(1e6) {
            break;
        }
    }
    let work = Window::new(floor - opts.neg_step, window.hi)?;

    // F on the scan grid, shared by every p
    let grid = sample_grid(work, opts);
    let mut f_samples: Vec<(T, T)> = Vec::with_capacity(grid.len());
    for &lam in &grid {
        f_samples.push((lam, propagate(q, lam)?.f));
    }

    let offset = phase_offset(ch);
    let mut per_p_roots: Vec<Vec<T>> = Vec::with_capacity(p_grid.len());
    for &p in p_grid {
        let c = ch.c_k * (p + offset).cos() - ch.s_k * ch.s_k;
        let samples: Vec<(T, T)> = f_samples.iter().map(|&(x, f)| (x, f - c)).collect();
        let mut g = |lam: T| Ok(propagate(q, lam)?.f - c);
        let roots = classify_from_samples(&samples, &mut g, opts, true)?;
        let mut expanded = Vec::with_capacity(roots.len() + 2);
        for r in roots {
            expanded.push(r.lambda);
            if r.multiplicity == crate::rootscan::Multiplicity::DoubleTangent {
                expanded.push(r.lambda);
            }
        }
        per_p_roots.push(expanded);
    }

    let m_min = per_p_roots.iter().map(|r| r.len()).min().unwrap_or(0);
    let mut intervals: Vec<(T, T)> = Vec::new();
    for j in 0..m_min {
        let lo = per_p_roots
            .iter()
            .map(|r| r[j])
            .fold(T::infinity(), |a, b| a.min(b));
        let hi = per_p_roots
            .iter()
            .map(|r| r[j])
            .fold(T::neg_infinity(), |a, b| a.max(b));
        intervals.push((lo, hi));
    }
    // partially visible top band
    let top_lo = per_p_roots
        .iter()
        .filter(|r| r.len() > m_min)
        .map(|r| r[m_min])
        .fold(T::infinity(), |a, b| a.min(b));
    if top_lo.is_finite() {
        intervals.push((top_lo, window.hi));
    }

    // merge touching or overlapping sweeps, then clip
    intervals.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut merged: Vec<(T, T)> = Vec::new();
    for (lo, hi) in intervals {
        match merged.last_mut() {
            Some(last) if lo <= last.1 + opts.root_rel * T::of(64.0) => {
                if hi > last.1 {
                    last.1 = hi;
                }
            }
            _ => merged.push((lo, hi)),
        }
    }
    Ok(merged
        .into_iter()
        .filter_map(|(lo, hi)| {
            let lo = lo.max(window.lo);
            let hi = hi.min(window.hi);
            (lo < hi).then_some((lo, hi))
        })
        .collect())
}

/// Lebesgue measure of the symmetric difference of two interval unions.
pub fn interval_symmetric_difference<T: Real>(a: &[(T, T)], b: &[(T, T)]) -> T {
    let mut cuts: Vec<T> = a
        .iter()
        .chain(b.iter())
        .flat_map(|&(lo, hi)| [lo, hi])
        .collect();
    cuts.sort_by(|x, y| x.partial_cmp(y).unwrap());
    cuts.dedup();
    let covered = |set: &[(T, T)], x: T| set.iter().any(|&(lo, hi)| lo <= x && x <= hi);
    let mut measure = T::zero();
    for w in cuts.windows(2) {
        let mid = (w[0] + w[1]) / T::of(2.0);
        if covered(a, mid) != covered(b, mid) {
            measure += w[1] - w[0];
        }
    }
    measure
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectra::channel_bands;
    use rand::{Rng, SeedableRng};
    use std::f64::consts::PI;

    fn opts() -> SolverOpts<f64> {
        SolverOpts::default()
    }

    #[test]
    fn closed_form_trivial_zero() {
        let q = Potential::<f64>::zero();
        let ch = ChannelParams::new(3, 0, 0.0).unwrap();
        let v = fiber_q_closed(&q, 0.0, 0.0, &ch).unwrap();
        assert!(v.abs() < 1e-14);
        let d = fiber_q_direct(&q, 0.0, 0.0, &ch).unwrap();
        assert!(d.norm() < 1e-14);
    }

    #[test]
    fn cosine_symmetry() {
        let q = Potential::<f64>::zero();
        let ch = ChannelParams::new(4, 1, 0.3).unwrap();
        for (lam, p) in [(0.7, 0.9), (5.0, 2.2), (13.0, 4.0)] {
            let lhs = fiber_q_closed(&q, lam, p, &ch).unwrap();
            let rhs = fiber_q_closed(&q, lam, -p - 2.0 * PI / 4.0, &ch).unwrap();
            assert!((lhs - rhs).abs() < 1e-12);
        }
    }

    #[test]
    fn extremal_fiber_reproduces_resonance_constants() {
        // at cos(p + πk/N) = ±1 the fiber equation becomes F = ±|c_k| − s_k²
        // (for c_k > 0), the band-edge constants
        let ch = ChannelParams::<f64>::new(3, 1, 0.3).unwrap();
        let grid = default_p_grid(&ch, 256);
        let offset = PI / 3.0;
        let vals: Vec<f64> = grid.iter().map(|p| (p + offset).cos()).collect();
        let max = vals.iter().cloned().fold(f64::MIN, f64::max);
        let min = vals.iter().cloned().fold(f64::MAX, f64::min);
        assert!((max - 1.0).abs() < 1e-15);
        assert!((min + 1.0).abs() < 1e-15);
    }

    #[test]
    fn direct_determinant_identity() {
        // (2Δ+θ₁)(2Δ+φ′₁) = 8Δ² + θ′₁φ₁ + 1
        let q = Potential::<f64>::sampled_from_fn(1024, |t| 2.0 * (2.0 * PI * t).cos()).unwrap();
        for lam in [-4.0, 0.3, 7.7, 42.0] {
            let d = propagate(&q, lam).unwrap();
            let lhs = (2.0 * d.delta + d.theta1) * (2.0 * d.delta + d.phi1p);
            let rhs = 8.0 * d.delta * d.delta + d.theta1p * d.phi1 + 1.0;
            assert!((lhs - rhs).abs() < 1e-10 * (1.0 + lhs.abs()));
        }
    }

    #[test]
    fn direct_agrees_with_closed_randomized() {
        let q = Potential::<f64>::sampled_from_fn(2048, |t| 2.0 * (2.0 * PI * t).cos()).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let mut tested = 0;
        while tested < 100 {
            let lam = rng.gen_range(-5.0..100.0);
            let p = rng.gen_range(0.0..2.0 * PI);
            let k = rng.gen_range(0i64..5);
            let a = rng.gen_range(-1.5..1.5);
            let ch = ChannelParams::new(5, k, a).unwrap();
            let closed = fiber_q_closed(&q, lam, p, &ch).unwrap();
            let direct = match fiber_q_direct(&q, lam, p, &ch) {
                Ok(v) => v,
                Err(Error::DirichletPole { .. }) => continue,
                Err(e) => panic!("{e}"),
            };
            let err = (direct - num_complex::Complex::new(closed, 0.0)).norm();
            assert!(
                err <= 1e-8 * (1.0 + closed.abs()),
                "λ={lam} p={p} k={k} a={a}: {err:e}"
            );
            tested += 1;
        }
    }

    #[test]
    fn direct_pole_near_dirichlet() {
        let q = Potential::<f64>::zero();
        let ch = ChannelParams::new(3, 1, 0.3).unwrap();
        assert!(matches!(
            fiber_q_direct(&q, PI * PI, 1.0, &ch),
            Err(Error::DirichletPole { .. })
        ));
    }

    #[test]
    fn singular_channel_fiber_recovers_sigma_ap() {
        // c_k = 0: Q = F + 1 independent of p, zeros are σ_AP
        let q = Potential::<f64>::zero();
        let ch = ChannelParams::new(2, 1, 0.0).unwrap();
        assert!(ch.singular);
        let lam_tilde = 1.5152610871399395;
        for p in [0.0, 1.0, 2.5, 5.0] {
            let v = fiber_q_closed(&q, lam_tilde, p, &ch).unwrap();
            assert!(v.abs() < 1e-9, "p={p}: {v:e}");
        }
    }

    #[test]
    fn fiber_union_free_k0() {
        // k=0, a=0, q=0: fiber union = {cos 2√λ ∈ [−7/9, 1]}
        let q = Potential::<f64>::zero();
        let ch = ChannelParams::new(3, 0, 0.0).unwrap();
        let w = Window::new(0.0, 12.0).unwrap();
        let grid = default_p_grid(&ch, 128);
        let bands = spectrum_via_fibers(&q, &ch, &grid, w, &opts()).unwrap();
        assert!((bands[0].0 - 0.0).abs() < 1e-9);
        assert!((bands[0].1 - 1.5152610871399395).abs() < 1e-7);
        assert!((bands[1].0 - 3.650519363459398).abs() < 1e-7);
    }

    #[test]
    fn fiber_union_matches_channel_bands() {
        let q = Potential::<f64>::sampled_from_fn(2048, |t| (2.0 * PI * t).cos()).unwrap();
        let ch = ChannelParams::new(3, 1, 0.3).unwrap();
        let w = Window::new(0.0, 60.0).unwrap();
        let grid = default_p_grid(&ch, 256);
        let fibers = spectrum_via_fibers(&q, &ch, &grid, w, &opts()).unwrap();
        let bands: Vec<(f64, f64)> = channel_bands(&q, &ch, w, &opts())
            .unwrap()
            .iter()
            .map(|b| (b.lo, b.hi))
            .collect();
        let sd = interval_symmetric_difference(&fibers, &bands);
        assert!(sd <= 1e-4, "symmetric difference {sd:e}");
    }

    #[test]
    fn fiber_rejects_small_grid_and_singular() {
        let q = Potential::<f64>::zero();
        let w = Window::new(0.0, 10.0).unwrap();
        let ch = ChannelParams::new(3, 1, 0.3).unwrap();
        assert!(spectrum_via_fibers(&q, &ch, &[0.0; 10], w, &opts()).is_err());
        let sing = ChannelParams::new(2, 1, 0.0).unwrap();
        let grid = default_p_grid(&sing, 128);
        assert!(matches!(
            spectrum_via_fibers(&q, &sing, &grid, w, &opts()),
            Err(Error::ChannelSingular { .. })
        ));
    }

    #[test]
    fn symmetric_difference_measure_basics() {
        let a = [(0.0f64, 1.0f64), (2.0, 3.0)];
        let b = [(0.0f64, 1.5f64), (2.0, 3.0)];
        assert!((interval_symmetric_difference(&a, &b) - 0.5).abs() < 1e-15);
        assert_eq!(interval_symmetric_difference(&a, &a), 0.0);
    }
}
