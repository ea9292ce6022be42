//! Compactly supported flat-band eigenfunctions on Γ^(1) and the Kirchhoff
//! residual oracle that verifies them.
//!
//! Cell n carries three edges: j = 0 the vertical edge, j = 1 the up-slant,
//! j = 2 the down-slant. Every edge function is stored in the (θ, φ) basis,
//! f_{n,j}(t) = α·θ(t, λ) + β·φ(t, λ), so the eigen-equation holds on each
//! edge by construction and only the vertex conditions
//!
//! ```text
//! f_{n,0}(1) = f_{n,1}(0) = e^{ia} s^k f_{n,2}(1)
//! f_{n+1,0}(0) = e^{ia} f_{n,1}(1) = f_{n,2}(0)
//! −f′_{n,0}(1) + f′_{n,1}(0) − e^{ia} s^k f′_{n,2}(1) = 0
//! f′_{n+1,0}(0) − e^{ia} f′_{n,1}(1) + f′_{n,2}(0) = 0
//! ```
//!
//! need numerical verification. Coefficients are genuinely complex: e^{ia}
//! and s^k do not cancel.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hill::{eval_solution, propagate};
use crate::magnetic::ChannelParams;
use crate::potential::Potential;
use crate::scalar::Real;

/// Edge address: cell index n ∈ ℤ, edge j ∈ {0, 1, 2}.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct EdgeIndex {
    pub cell: i64,
    pub j: u8,
}

impl EdgeIndex {
    pub fn new(cell: i64, j: u8) -> Self {
        assert!(j < 3, "edge index j must be 0, 1 or 2");
        EdgeIndex { cell, j }
    }
}

/// (θ, φ)-basis coefficients of one support edge.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct EdgeCoeff<T: Real> {
    pub edge: EdgeIndex,
    pub alpha: Complex<T>,
    pub beta: Complex<T>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EigenfunctionKind {
    /// λ ∈ σ_D with η = 1 − e^{2ia}s^k φ′₁² ≠ 0 (support spans two cells).
    DirichletGeneric,
    /// λ ∈ σ_D with η = 0 (support is two slant edges of one cell).
    DirichletDegenerate,
    /// λ ∈ σ_AP on a singular channel (c_k = 0).
    AntiperiodicFlat,
}

/// A finitely supported eigenfunction with per-edge (θ, φ) coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct CompactEigenfunction<T: Real> {
    pub lambda: T,
    pub channel: ChannelParams<T>,
    pub kind: EigenfunctionKind,
    /// Sorted by edge; edges not listed carry the zero function.
    pub support: Vec<EdgeCoeff<T>>,
    /// The coefficient functional divisor: η, 1, or C₂ depending on `kind`.
    pub normalizer: Complex<T>,
}

impl<T: Real> CompactEigenfunction<T> {
    fn normalized(mut self) -> Self {
        self.support.retain(|c| {
            c.alpha.norm_sqr() != T::zero() || c.beta.norm_sqr() != T::zero()
        });
        self.support.sort_by_key(|c| c.edge);
        self
    }

    /// Coefficients of edge (cell, j); zero outside the support.
    pub fn coeff(&self, cell: i64, j: u8) -> (Complex<T>, Complex<T>) {
        self.support
            .iter()
            .find(|c| c.edge.cell == cell && c.edge.j == j)
            .map(|c| (c.alpha, c.beta))
            .unwrap_or((Complex::default(), Complex::default()))
    }

    pub fn support_cells(&self) -> (i64, i64) {
        let min = self.support.iter().map(|c| c.edge.cell).min().unwrap_or(0);
        let max = self.support.iter().map(|c| c.edge.cell).max().unwrap_or(0);
        (min, max)
    }

    /// Shifted copy ψ^{(n+n0)}: reindexes the support, nothing else.
    pub fn translate(&self, shift: i64) -> Self {
        let mut out = self.clone();
        for c in &mut out.support {
            c.edge.cell += shift;
        }
        out
    }

    /// Copy scaled by a complex weight.
    pub fn scaled(&self, w: Complex<T>) -> Self {
        let mut out = self.clone();
        for c in &mut out.support {
            c.alpha *= w;
            c.beta *= w;
        }
        out
    }

    /// Pointwise sum of translates (supports merge, coefficients add).
    pub fn superpose(parts: &[CompactEigenfunction<T>]) -> Option<Self> {
        let first = parts.first()?;
        let mut out = first.clone();
        out.support.clear();
        for p in parts {
            for c in &p.support {
                match out.support.iter_mut().find(|e| e.edge == c.edge) {
                    Some(e) => {
                        e.alpha += c.alpha;
                        e.beta += c.beta;
                    }
                    None => out.support.push(*c),
                }
            }
        }
        Some(out.normalized())
    }

    /// Recover the weight of ψ^{(n)} inside a finite combination via the
    /// trace formulas: f̂_n = f′_{n,0}(0)/η, f′_{n,1}(0), or f_{n,0}(0)/C₁
    /// depending on the construction.
    pub fn recover_weight(&self, combined: &Self, n: i64) -> Complex<T> {
        match self.kind {
            EigenfunctionKind::DirichletGeneric => {
                let (_, beta) = combined.coeff(n, 0);
                beta / self.normalizer
            }
            EigenfunctionKind::DirichletDegenerate => {
                let (_, beta) = combined.coeff(n, 1);
                beta
            }
            EigenfunctionKind::AntiperiodicFlat => {
                let (alpha, _) = combined.coeff(n, 0);
                alpha / self.normalizer
            }
        }
    }
}

fn unit_phase<T: Real>(angle: T) -> Complex<T> {
    Complex::new(angle.cos(), angle.sin())
}

/// Dirichlet flat-band eigenfunction ψ^{(0)} at λ ∈ σ_D.
///
/// The branch is chosen by η = 1 − e^{2ia}s^k φ′₁²: for η ≠ 0 the support
/// spans cells {−1, 0} with five nonzero edges, for η = 0 it is the two
/// slant edges of cell 0.
pub fn dirichlet_eigenfunction<T: Real>(
    q: &Potential<T>,
    lambda: T,
    ch: &ChannelParams<T>,
) -> Result<CompactEigenfunction<T>> {
    let d = propagate(q, lambda)?;
    if d.phi1.abs() > T::of(1e-9) {
        return Err(Error::NotDirichletEigenvalue {
            lambda: lambda.to_f64_lossy(),
            phi1_abs: d.phi1.abs().to_f64_lossy(),
        });
    }
    let phi1p = Complex::new(d.phi1p, T::zero());
    let e_ia = unit_phase(ch.a);
    let twist = ch.twist(); // e^{ia} s^k
    let eta = Complex::new(T::one(), T::zero()) - e_ia * twist * phi1p * phi1p;

    let zero = Complex::<T>::default();
    let (kind, support, normalizer) = if eta.norm() >= T::of(1e-9) {
        (
            EigenfunctionKind::DirichletGeneric,
            vec![
                EdgeCoeff {
                    edge: EdgeIndex::new(0, 0),
                    alpha: zero,
                    beta: eta,
                },
                EdgeCoeff {
                    edge: EdgeIndex::new(0, 1),
                    alpha: zero,
                    beta: phi1p,
                },
                EdgeCoeff {
                    edge: EdgeIndex::new(0, 2),
                    alpha: zero,
                    beta: e_ia * phi1p * phi1p,
                },
                EdgeCoeff {
                    edge: EdgeIndex::new(-1, 1),
                    alpha: zero,
                    beta: -twist * phi1p,
                },
                EdgeCoeff {
                    edge: EdgeIndex::new(-1, 2),
                    alpha: zero,
                    beta: -Complex::new(T::one(), T::zero()),
                },
            ],
            eta,
        )
    } else {
        (
            EigenfunctionKind::DirichletDegenerate,
            vec![
                EdgeCoeff {
                    edge: EdgeIndex::new(0, 1),
                    alpha: zero,
                    beta: Complex::new(T::one(), T::zero()),
                },
                EdgeCoeff {
                    edge: EdgeIndex::new(0, 2),
                    alpha: zero,
                    beta: e_ia * phi1p,
                },
            ],
            Complex::new(T::one(), T::zero()),
        )
    };
    Ok(CompactEigenfunction {
        lambda,
        channel: *ch,
        kind,
        support,
        normalizer,
    }
    .normalized())
}

/// Anti-periodic flat-band eigenfunction at λ ∈ σ_AP for a singular channel
/// (c_k = 0), with C₁ = φ′₁ + 2Δ and C₂ = −θ′₁ − 2θ₁Δ/φ₁.
pub fn antiperiodic_flatband_eigenfunction<T: Real>(
    q: &Potential<T>,
    lambda: T,
    ch: &ChannelParams<T>,
) -> Result<CompactEigenfunction<T>> {
    if !ch.singular {
        return Err(Error::ChannelNotSingular {
            k: ch.k,
            ck_abs: ch.c_k.abs().to_f64_lossy(),
        });
    }
    let d = propagate(q, lambda)?;
    if (d.f + T::one()).abs() > T::of(1e-8) {
        return Err(Error::NotAntiperiodicPoint {
            lambda: lambda.to_f64_lossy(),
            defect: (d.f + T::one()).abs().to_f64_lossy(),
        });
    }
    if d.phi1.abs() <= T::of(1e-9) {
        return Err(Error::DirichletPole {
            lambda: lambda.to_f64_lossy(),
            phi1_abs: d.phi1.abs().to_f64_lossy(),
        });
    }

    let re = |x: T| Complex::new(x, T::zero());
    let c1 = re(d.phi1p + T::of(2.0) * d.delta);
    let c2 = re(-d.theta1p - T::of(2.0) * d.theta1 * d.delta / d.phi1);
    let e_ia = unit_phase(ch.a);
    let e_mia = unit_phase(-ch.a);
    let inv_phi1 = re(T::one() / d.phi1);
    let theta1_over_phi1 = re(d.theta1 / d.phi1);
    let one = Complex::new(T::one(), T::zero());
    let zero = Complex::<T>::default();

    let support = vec![
        // ψ_{0,0} = C₁·θ + C₂·φ, so ψ_{0,0}(0) = C₁ and ψ′_{0,0}(0) = C₂
        // (the order used throughout the construction; the displayed
        // statement swaps the two, which fails the vertex conditions)
        EdgeCoeff {
            edge: EdgeIndex::new(0, 0),
            alpha: c1,
            beta: c2,
        },
        // ψ_{0,1} = θ − (θ₁/φ₁)·φ
        EdgeCoeff {
            edge: EdgeIndex::new(0, 1),
            alpha: one,
            beta: -theta1_over_phi1,
        },
        // ψ_{0,2} = −e^{ia}·φ/φ₁
        EdgeCoeff {
            edge: EdgeIndex::new(0, 2),
            alpha: zero,
            beta: -e_ia * inv_phi1,
        },
        // ψ_{−1,1} = e^{−ia}C₁·φ/φ₁
        EdgeCoeff {
            edge: EdgeIndex::new(-1, 1),
            alpha: zero,
            beta: e_mia * c1 * inv_phi1,
        },
        // ψ_{−1,2} = C₁·(θ − (θ₁/φ₁)φ)
        EdgeCoeff {
            edge: EdgeIndex::new(-1, 2),
            alpha: c1,
            beta: -c1 * theta1_over_phi1,
        },
    ];
    Ok(CompactEigenfunction {
        lambda,
        channel: *ch,
        kind: EigenfunctionKind::AntiperiodicFlat,
        support,
        normalizer: c1,
    }
    .normalized())
}

/// Edge value and derivative at local coordinate x, through `eval_solution`
/// on the two basis columns.
pub fn edge_values<T: Real>(
    q: &Potential<T>,
    psi: &CompactEigenfunction<T>,
    cell: i64,
    j: u8,
    x: T,
) -> Result<(Complex<T>, Complex<T>)> {
    let (alpha, beta) = psi.coeff(cell, j);
    let (theta_x, theta_px) = eval_solution(q, psi.lambda, T::one(), T::zero(), x)?;
    let (phi_x, phi_px) = eval_solution(q, psi.lambda, T::zero(), T::one(), x)?;
    Ok((
        alpha * Complex::new(theta_x, T::zero()) + beta * Complex::new(phi_x, T::zero()),
        alpha * Complex::new(theta_px, T::zero()) + beta * Complex::new(phi_px, T::zero()),
    ))
}

/// Maximum Kirchhoff residual (continuity and flux balance) over every
/// vertex touched by the support plus one cell of margin.
pub fn kirchhoff_residual<T: Real>(
    q: &Potential<T>,
    psi: &CompactEigenfunction<T>,
) -> Result<T> {
    if psi.support.is_empty() {
        return Ok(T::zero());
    }
    let d = propagate(q, psi.lambda)?;
    let t1 = Complex::new(d.theta1, T::zero());
    let t1p = Complex::new(d.theta1p, T::zero());
    let p1 = Complex::new(d.phi1, T::zero());
    let p1p = Complex::new(d.phi1p, T::zero());

    // endpoint data from the basis representation
    let at0 = |cell: i64, j: u8| psi.coeff(cell, j); // (f(0), f′(0)) = (α, β)
    let at1 = |cell: i64, j: u8| {
        let (alpha, beta) = psi.coeff(cell, j);
        (alpha * t1 + beta * p1, alpha * t1p + beta * p1p)
    };

    let e_ia = unit_phase(psi.channel.a);
    let twist = psi.channel.twist();

    let (min_cell, max_cell) = psi.support_cells();
    let mut max_res = T::zero();
    let mut push = |v: Complex<T>| {
        let n = v.norm();
        if n > max_res {
            max_res = n;
        }
    };

    for n in (min_cell - 1)..=(max_cell + 1) {
        // vertex A_n: top of vertical n, start of slant-1 n, end of slant-2 n
        let (v0, d0) = at1(n, 0);
        let (v1, d1) = at0(n, 1);
        let (v2, d2) = at1(n, 2);
        push(v0 - v1);
        push(v1 - twist * v2);
        push(-d0 + d1 - twist * d2);

        // vertex B_n: bottom of vertical n+1, end of slant-1 n, start of slant-2 n
        let (w0, e0) = at0(n + 1, 0);
        let (w1, e1) = at1(n, 1);
        let (w2, e2) = at0(n, 2);
        push(w0 - e_ia * w1);
        push(e_ia * w1 - w2);
        push(e0 - e_ia * e1 + e2);
    }
    Ok(max_res)
}

/// Largest |ψ| over all vertices touched by the support (plus margin).
/// Dirichlet eigenfunctions must vanish there.
pub fn max_vertex_value<T: Real>(
    q: &Potential<T>,
    psi: &CompactEigenfunction<T>,
) -> Result<T> {
    if psi.support.is_empty() {
        return Ok(T::zero());
    }
    let (min_cell, max_cell) = psi.support_cells();
    let mut max_v = T::zero();
    for n in (min_cell - 1)..=(max_cell + 1) {
        for j in 0..3u8 {
            for x in [T::zero(), T::one()] {
                let (v, _) = edge_values(q, psi, n, j, x)?;
                if v.norm() > max_v {
                    max_v = v.norm();
                }
            }
        }
    }
    Ok(max_v)
}

/// Consistency of the edge solutions at interior points: each support edge
/// is evaluated forward from t = 0 and backward through the reversed
/// potential from t = 1; the maximum discrepancy is returned.
pub fn eigen_equation_consistency<T: Real>(
    q: &Potential<T>,
    psi: &CompactEigenfunction<T>,
    points: usize,
) -> Result<T> {
    let q_rev = q.reversed();
    let mut worst = T::zero();
    for c in &psi.support {
        let (f1, f1p) = edge_values(q, psi, c.edge.cell, c.edge.j, T::one())?;
        for i in 1..=points {
            let x = T::of(i as f64) / T::of((points + 1) as f64);
            let (fwd, _) = edge_values(q, psi, c.edge.cell, c.edge.j, x)?;
            // g(s) = f(1−s) solves the reversed equation with
            // g(0) = f(1), g′(0) = −f′(1)
            let s = T::one() - x;
            let (gt, _) = eval_solution(&q_rev, psi.lambda, T::one(), T::zero(), s)?;
            let (gp, _) = eval_solution(&q_rev, psi.lambda, T::zero(), T::one(), s)?;
            let bwd = f1 * Complex::new(gt, T::zero())
                - f1p * Complex::new(gp, T::zero());
            let diff = (fwd - bwd).norm();
            if diff > worst {
                worst = diff;
            }
        }
    }
    Ok(worst)
}
