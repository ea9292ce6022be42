//! Bracketed root finding for the oscillatory spectral functions.
//!
//! The scan variable is u = √λ for λ ≥ 0, where F oscillates roughly like
//! cos 2u with period π; a uniform step of π/16 guarantees every sign change
//! and every extremum is bracketed. Below λ = 0 the scan walks λ directly in
//! steps of 0.25 and stops once F has escaped above 3/2 (F → +∞ as
//! λ → −∞, and no equation constant exceeds 1).
//!
//! Sign-change cells are refined by Brent's method. Tangential (double)
//! roots are found by locating local extrema of F − c and accepting them as
//! roots when the extremal value is within `tol_f` of zero; a tangency is
//! reported as one `DoubleTangent` root, never split into two nearby simple
//! roots.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hill::propagate;
use crate::potential::Potential;
use crate::scalar::Real;

/// Closed λ interval to search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Window<T: Real> {
    pub lo: T,
    pub hi: T,
}

impl<T: Real> Window<T> {
    pub fn new(lo: T, hi: T) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite()) || lo >= hi {
            return Err(Error::InvalidWindow {
                lo: lo.to_f64_lossy(),
                hi: hi.to_f64_lossy(),
            });
        }
        Ok(Window { lo, hi })
    }

    pub fn contains(&self, x: T) -> bool {
        self.lo <= x && x <= self.hi
    }
}

/// Tolerances and scan parameters. Defaults implement the documented
/// contracts for `f64`.
#[derive(Debug, Clone, Copy)]
pub struct SolverOpts<T: Real> {
    /// Tangency tolerance: an extremum of F − c with |value| below this is a
    /// double root.
    pub tol_f: T,
    /// Relative λ tolerance of root refinement (times max(1, |λ|)).
    pub root_rel: T,
    /// Scan step in u = √λ above zero.
    pub u_step: T,
    /// Scan step in λ below zero.
    pub neg_step: T,
    /// Stop the downward scan once F exceeds this value.
    pub f_escape: T,
}

impl<T: Real> Default for SolverOpts<T> {
    fn default() -> Self {
        SolverOpts {
            tol_f: T::of(1e-8),
            root_rel: T::of(1e-12),
            u_step: T::PI() / T::of(16.0),
            neg_step: T::of(0.25),
            f_escape: T::of(1.5),
        }
    }
}

impl<T: Real> SolverOpts<T> {
    fn xtol(&self, x: T) -> T {
        self.root_rel * x.abs().max(T::one())
    }
}

/// Root multiplicity tag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Multiplicity {
    Simple,
    DoubleTangent,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct Root<T: Real> {
    pub lambda: T,
    pub multiplicity: Multiplicity,
}

/// Sorted real solutions of F(λ) = c in a window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct RootList<T: Real> {
    /// The equation constant c.
    pub constant: T,
    pub roots: Vec<Root<T>>,
}

impl<T: Real> RootList<T> {
    pub fn lambdas(&self) -> Vec<T> {
        self.roots.iter().map(|r| r.lambda).collect()
    }

    /// Number of roots counting a tangency twice.
    pub fn count_with_multiplicity(&self) -> usize {
        self.roots
            .iter()
            .map(|r| match r.multiplicity {
                Multiplicity::Simple => 1,
                Multiplicity::DoubleTangent => 2,
            })
            .sum()
    }
}

/// Ascending λ grid over the window: direct steps below zero (anchored at
/// λ = 0), u = √λ steps above (anchored at u = 0), window edges included.
pub(crate) fn sample_grid<T: Real>(window: Window<T>, opts: &SolverOpts<T>) -> Vec<T> {
    let mut grid: Vec<T> = Vec::new();
    let zero = T::zero();

    if window.lo < zero {
        let neg_hi = window.hi.min(zero);
        let mut down: Vec<T> = Vec::new();
        let mut j = (neg_hi / opts.neg_step).floor().max(-T::of(1e9));
        // first anchored step at or below neg_hi
        if j * opts.neg_step >= neg_hi {
            j -= T::one();
        }
        down.push(neg_hi);
        let mut lam = j * opts.neg_step;
        while lam > window.lo {
            down.push(lam);
            j -= T::one();
            lam = j * opts.neg_step;
        }
        down.push(window.lo);
        down.reverse();
        grid.extend(down);
    }

    if window.hi > zero {
        let u_lo = window.lo.max(zero).sqrt();
        let u_hi = window.hi.sqrt();
        if grid.last() != Some(&window.lo.max(zero)) {
            grid.push(window.lo.max(zero));
        }
        let mut j = (u_lo / opts.u_step).floor() + T::one();
        let mut u = j * opts.u_step;
        while u < u_hi {
            let lam = u * u;
            if lam > *grid.last().unwrap() {
                grid.push(lam);
            }
            j += T::one();
            u = j * opts.u_step;
        }
        if *grid.last().unwrap() < window.hi {
            grid.push(window.hi);
        }
    }

    grid.dedup();
    grid
}

/// Brent's method on a bracketing interval [a, b] with g(a)·g(b) < 0.
fn brent<T: Real>(
    g: &mut impl FnMut(T) -> Result<T>,
    mut a: T,
    mut b: T,
    mut fa: T,
    mut fb: T,
    opts: &SolverOpts<T>,
) -> Result<T> {
    let two = T::of(2.0);
    let three = T::of(3.0);
    let eps = T::epsilon();

    if fa.abs() < fb.abs() {
        std::mem::swap(&mut a, &mut b);
        std::mem::swap(&mut fa, &mut fb);
    }
    let mut c = a;
    let mut fc = fa;
    let mut d = b - a;
    let mut e = d;

    for _ in 0..200 {
        if fb == T::zero() {
            return Ok(b);
        }
        if (fb > T::zero()) == (fc > T::zero()) {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol1 = two * eps * b.abs() + T::of(0.5) * opts.xtol(b);
        let xm = T::of(0.5) * (c - b);
        if xm.abs() <= tol1 {
            return Ok(b);
        }
        if e.abs() >= tol1 && fa.abs() > fb.abs() {
            // inverse quadratic / secant step
            let s = fb / fa;
            let (mut p, mut q) = if a == c {
                (two * xm * s, T::one() - s)
            } else {
                let q = fa / fc;
                let r = fb / fc;
                (
                    s * (two * xm * q * (q - r) - (b - a) * (r - T::one())),
                    (q - T::one()) * (r - T::one()) * (s - T::one()),
                )
            };
            if p > T::zero() {
                q = -q;
            }
            p = p.abs();
            let min1 = three * xm * q - (tol1 * q).abs();
            let min2 = (e * q).abs();
            if two * p < min1.min(min2) {
                e = d;
                d = p / q;
            } else {
                d = xm;
                e = d;
            }
        } else {
            d = xm;
            e = d;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol1 {
            d
        } else if xm > T::zero() {
            tol1
        } else {
            -tol1
        };
        fb = g(b)?;
    }
    Ok(b)
}

/// Golden-section refinement of a local extremum of g on [a, b].
/// `seek_max` selects which extremum is tracked.
fn golden_extremum<T: Real>(
    g: &mut impl FnMut(T) -> Result<T>,
    mut a: T,
    mut b: T,
    seek_max: bool,
    opts: &SolverOpts<T>,
) -> Result<(T, T)> {
    let inv_phi = T::of(0.618_033_988_749_894_9);
    let orient = if seek_max { -T::one() } else { T::one() };

    let mut x1 = b - inv_phi * (b - a);
    let mut x2 = a + inv_phi * (b - a);
    let mut f1 = orient * g(x1)?;
    let mut f2 = orient * g(x2)?;
    for _ in 0..120 {
        if (b - a).abs() <= opts.xtol(a.abs().max(b.abs())) {
            break;
        }
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = orient * g(x1)?;
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = orient * g(x2)?;
        }
    }
    let xm = T::of(0.5) * (a + b);
    Ok((xm, g(xm)?))
}

/// Extrema with |g| this far from zero are never tangency candidates; the
/// bound covers the sample-offset of a π/16 grid against |∂²F/∂u²| ≲ 9/2.
const EXTREMUM_SCREEN: f64 = 0.1;

/// Order-of-contact probe for a root at a window edge, where only one side
/// is visible: step twice toward the interior and compare increments. A
/// simple zero grows linearly (ratio ≈ 2), a tangency quadratically
/// (ratio ≈ 4).
fn probe_classify<T: Real>(
    g: &mut impl FnMut(T) -> Result<T>,
    x0: T,
    g0: T,
    toward: T,
) -> Result<Multiplicity> {
    let h = (toward - x0) / T::of(8.0);
    let g1 = g(x0 + h)? - g0;
    let g2 = g(x0 + h + h)? - g0;
    if g1.abs() < T::of(1e-300) {
        return Ok(Multiplicity::Simple);
    }
    Ok(if g2 / g1 >= T::of(3.0) {
        Multiplicity::DoubleTangent
    } else {
        Multiplicity::Simple
    })
}

/// Classify and refine roots of g over precomputed samples.
///
/// `samples` must be ascending in λ and correspond to `g`. When `tangencies`
/// is false only sign-change roots are extracted (used for φ₁ and θ′₁ whose
/// zeros are all simple).
pub(crate) fn classify_from_samples<T: Real>(
    samples: &[(T, T)],
    g: &mut impl FnMut(T) -> Result<T>,
    opts: &SolverOpts<T>,
    tangencies: bool,
) -> Result<Vec<Root<T>>> {
    let n = samples.len();
    let mut roots: Vec<Root<T>> = Vec::new();
    if n < 2 {
        return Ok(roots);
    }

    let is_zero = |v: T| v == T::zero();

    // exact zeros at grid points
    for i in 0..n {
        let (x, v) = samples[i];
        if !is_zero(v) {
            continue;
        }
        let left = samples[..i].iter().rev().find(|s| !is_zero(s.1));
        let right = samples[i + 1..].iter().find(|s| !is_zero(s.1));
        let multiplicity = match (left, right) {
            (Some(l), Some(r)) => {
                if (l.1 > T::zero()) == (r.1 > T::zero()) {
                    Multiplicity::DoubleTangent
                } else {
                    Multiplicity::Simple
                }
            }
            (Some(l), None) if tangencies => probe_classify(g, x, T::zero(), l.0)?,
            (None, Some(r)) if tangencies => probe_classify(g, x, T::zero(), r.0)?,
            _ => Multiplicity::Simple,
        };
        roots.push(Root {
            lambda: x,
            multiplicity,
        });
    }

    // sign-change cells
    for i in 0..n - 1 {
        let (a, fa) = samples[i];
        let (b, fb) = samples[i + 1];
        if is_zero(fa) || is_zero(fb) {
            continue;
        }
        if (fa > T::zero()) != (fb > T::zero()) {
            let lambda = brent(g, a, b, fa, fb, opts)?;
            roots.push(Root {
                lambda,
                multiplicity: Multiplicity::Simple,
            });
        }
    }

    // interior extrema (tangency candidates): triples of one strict sign
    if tangencies {
        for i in 1..n - 1 {
            let (_, v0) = samples[i - 1];
            let (_, v1) = samples[i];
            let (_, v2) = samples[i + 1];
            if is_zero(v0) || is_zero(v1) || is_zero(v2) {
                continue;
            }
            let same_sign =
                (v0 > T::zero()) == (v1 > T::zero()) && (v1 > T::zero()) == (v2 > T::zero());
            if !same_sign {
                continue; // a crossing lives in these cells; already handled
            }
            let valley = v1 < v0 && v1 < v2;
            let peak = v1 > v0 && v1 > v2;
            if !(valley || peak) {
                continue;
            }
            // only a valley of positive g or a peak of negative g can touch 0
            let toward_zero = (valley && v1 > T::zero()) || (peak && v1 < T::zero());
            if !toward_zero || v1.abs() > T::of(EXTREMUM_SCREEN) {
                continue;
            }
            let (x_ext, g_ext) = golden_extremum(g, samples[i - 1].0, samples[i + 1].0, peak, opts)?;
            if g_ext.abs() <= opts.tol_f {
                roots.push(Root {
                    lambda: x_ext,
                    multiplicity: Multiplicity::DoubleTangent,
                });
            } else if (g_ext > T::zero()) != (v0 > T::zero()) {
                // the extremum dips across: two genuine simple roots
                let ga = g(samples[i - 1].0)?;
                let gb = g(samples[i + 1].0)?;
                let r1 = brent(g, samples[i - 1].0, x_ext, ga, g_ext, opts)?;
                let r2 = brent(g, x_ext, samples[i + 1].0, g_ext, gb, opts)?;
                roots.push(Root {
                    lambda: r1,
                    multiplicity: Multiplicity::Simple,
                });
                roots.push(Root {
                    lambda: r2,
                    multiplicity: Multiplicity::Simple,
                });
            }
        }

        // window edges: a tangency can sit on (or marginally outside) the
        // boundary; a simple root just outside must not be reported
        for (i, neighbor) in [(0usize, 1usize), (n - 1, n - 2)] {
            let (x, v) = samples[i];
            let (xn, vn) = samples[neighbor];
            if is_zero(v) || is_zero(vn) {
                continue;
            }
            if (v > T::zero()) == (vn > T::zero())
                && v.abs() <= opts.tol_f
                && v.abs() < vn.abs()
                && probe_classify(g, x, v, xn)? == Multiplicity::DoubleTangent
            {
                roots.push(Root {
                    lambda: x,
                    multiplicity: Multiplicity::DoubleTangent,
                });
            }
        }
    }

    roots.sort_by(|p, q| p.lambda.partial_cmp(&q.lambda).unwrap());
    // merge coincident detections
    let merge_tol = |x: T| T::of(8.0) * opts.xtol(x);
    let mut merged: Vec<Root<T>> = Vec::new();
    for r in roots {
        match merged.last_mut() {
            Some(last) if (r.lambda - last.lambda).abs() <= merge_tol(r.lambda) => {
                if r.multiplicity == Multiplicity::DoubleTangent {
                    last.multiplicity = Multiplicity::DoubleTangent;
                }
            }
            _ => merged.push(r),
        }
    }
    Ok(merged)
}

/// Evaluate F − c over the scan grid, walking the negative part downward
/// with the F > `f_escape` early exit.
fn f_minus_c_samples<T: Real>(
    q: &Potential<T>,
    c: T,
    window: Window<T>,
    opts: &SolverOpts<T>,
) -> Result<Vec<(T, T)>> {
    let grid = sample_grid(window, opts);
    let mut neg: Vec<(T, T)> = Vec::new();
    let mut pos: Vec<(T, T)> = Vec::new();

    // negative side, scanned downward from 0
    let mut escape_run = 0;
    for &lam in grid.iter().rev() {
        if lam > T::zero() {
            continue;
        }
        let f = propagate(q, lam)?.f;
        neg.push((lam, f - c));
        if f > opts.f_escape {
            escape_run += 1;
            if escape_run >= 3 {
                break;
            }
        } else {
            escape_run = 0;
        }
    }
    neg.reverse();

    for &lam in grid.iter() {
        if lam <= T::zero() {
            continue;
        }
        pos.push((lam, propagate(q, lam)?.f - c));
    }

    neg.extend(pos);
    Ok(neg)
}

/// All real roots of F(λ) = c in the window, with tangency tags.
///
/// `c` must lie in [−5/4, 1] (allowing 1e−9 of floating slack): only there
/// does the theory guarantee that every complex root is real.
pub fn solve_f_equals<T: Real>(
    q: &Potential<T>,
    c: T,
    window: Window<T>,
    opts: &SolverOpts<T>,
) -> Result<RootList<T>> {
    let lo_c = T::of(-1.25);
    let hi_c = T::one();
    let slack = T::of(1e-9);
    if c < lo_c - slack || c > hi_c + slack {
        return Err(Error::ConstantOutOfRange(c.to_f64_lossy()));
    }
    let c = c.max(lo_c).min(hi_c);

    let samples = f_minus_c_samples(q, c, window, opts)?;
    let mut g = |lam: T| Ok(propagate(q, lam)?.f - c);
    let roots = classify_from_samples(&samples, &mut g, opts, true)?;
    Ok(RootList { constant: c, roots })
}

/// Dirichlet spectrum σ_D = {λ : φ₁(λ) = 0}; all zeros are simple.
pub fn dirichlet_spectrum<T: Real>(
    q: &Potential<T>,
    window: Window<T>,
    opts: &SolverOpts<T>,
) -> Result<Vec<T>> {
    scan_simple_zeros(q, window, opts, |d| d.phi1)
}

/// Neumann spectrum {λ : θ′₁(λ) = 0}; all zeros are simple.
pub fn neumann_spectrum<T: Real>(
    q: &Potential<T>,
    window: Window<T>,
    opts: &SolverOpts<T>,
) -> Result<Vec<T>> {
    scan_simple_zeros(q, window, opts, |d| d.theta1p)
}

fn scan_simple_zeros<T: Real>(
    q: &Potential<T>,
    window: Window<T>,
    opts: &SolverOpts<T>,
    pick: impl Fn(&crate::hill::FundamentalData<T>) -> T,
) -> Result<Vec<T>> {
    let grid = sample_grid(window, opts);
    let mut samples = Vec::with_capacity(grid.len());
    for &lam in &grid {
        samples.push((lam, pick(&propagate(q, lam)?)));
    }
    let mut g = |lam: T| Ok(pick(&propagate(q, lam)?));
    let roots = classify_from_samples(&samples, &mut g, opts, false)?;
    Ok(roots.into_iter().map(|r| r.lambda).collect())
}
