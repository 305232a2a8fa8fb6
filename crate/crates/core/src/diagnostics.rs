//! Numerical diagnostics for the reduced joining system: Weyl sums, winding
//! and Lipschitz checks of `H_n`, the boundary increment of `F_n`, proof
//! constants, and a truncated Fourier search for coboundaries.

use std::f64::consts::TAU;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::compensated::circle_dist;
use crate::dynamics::{JoiningSystem, SkewMap, TorusPoint};
use crate::error::{invalid, Error, Result};
use crate::fixed::Fiber;
use crate::observables::e_fiber;
use crate::orbit::{orbit_stream, FnSink, OrbitSegmentPlan, TrivializedOrbit};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeylReport {
    pub freq: [i64; 3],
    /// `(N, (1/N) Σ_{n=1}^{N} e(k · orbit_n))`.
    pub checkpoints: Vec<(u64, Complex64)>,
}

impl WeylReport {
    pub fn max_modulus(&self) -> f64 {
        self.checkpoints.iter().map(|(_, v)| v.norm()).fold(0.0, f64::max)
    }

    pub fn modulus_at(&self, n: u64) -> Option<f64> {
        self.checkpoints.iter().find(|(m, _)| *m == n).map(|(_, v)| v.norm())
    }
}

/// All nonzero `k ∈ Z^3` with `max |k_i| <= bound`, up to sign (the Weyl sum
/// at `-k` is the conjugate of the sum at `k`).
pub fn frequencies_up_to(bound: i64) -> Vec<[i64; 3]> {
    let mut out = Vec::new();
    for a in -bound..=bound {
        for b in -bound..=bound {
            for c in -bound..=bound {
                let k = [a, b, c];
                if k > [0, 0, 0] {
                    out.push(k);
                }
            }
        }
    }
    out
}

/// Weyl sums along the `T*'` orbit of `start`, one report per frequency.
pub fn weyl_sums(
    js: &JoiningSystem,
    start: &TorusPoint,
    freqs: &[[i64; 3]],
    checkpoints: &[u64],
    plan: &OrbitSegmentPlan,
) -> Result<Vec<WeylReport>> {
    if freqs.is_empty() || freqs.contains(&[0, 0, 0]) {
        return Err(invalid("freqs", "frequencies must be nonzero"));
    }
    let driver = TrivializedOrbit::new(js, *start);
    let sink = FnSink::new(freqs.len(), |_, pt: &TorusPoint, acc: &mut [Complex64]| {
        for (slot, k) in acc.iter_mut().zip(freqs) {
            let phase = Fiber::from_fixed(pt.x.mul_int(k[0]) + pt.y.mul_int(k[1])) + pt.z.mul_int(k[2]);
            *slot += e_fiber(phase);
        }
    });
    let sums = orbit_stream(&driver, &sink, checkpoints, plan)?;
    Ok(freqs
        .iter()
        .enumerate()
        .map(|(i, &freq)| WeylReport {
            freq,
            checkpoints: checkpoints.iter().zip(&sums).map(|(&n, s)| (n, s[i] / n as f64)).collect(),
        })
        .collect())
}

pub const MIN_MESH: u64 = 16;
pub const MAX_DOUBLINGS: u32 = 24;

/// Result of sampling a lift along `x ↦ f(x, y0)` on a uniform mesh.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeshScan {
    pub winding: i64,
    /// Sum of wrapped increments before rounding.
    pub raw: f64,
    /// Largest `|f(x_{j+1}) - f(x_j)| / Δx`; a lower bound on the Lipschitz
    /// constant of the lift.
    pub max_slope: f64,
    pub nodes: u64,
}

/// Counts how many times `x ↦ f(x, y0)` winds around the circle over
/// `x ∈ [0, 1]`.
///
/// The mesh starts at `4 · lipschitz` nodes so that consecutive samples of a
/// `lipschitz`-Lipschitz function differ by at most 1/4, and is doubled
/// whenever a wrapped increment still exceeds 1/4.
pub fn winding_scan(f: impl Fn(f64) -> f64, lipschitz: f64) -> Result<MeshScan> {
    let mut nodes = ((4.0 * lipschitz).ceil() as u64).max(MIN_MESH).next_power_of_two();
    for _ in 0..=MAX_DOUBLINGS {
        let h = 1.0 / nodes as f64;
        let mut prev = f(0.0);
        let mut raw = 0.0;
        let mut max_slope: f64 = 0.0;
        let mut fine = true;
        for j in 1..=nodes {
            let v = f(j as f64 * h);
            let d = v - prev;
            max_slope = max_slope.max(d.abs() / h);
            let w = d - d.round();
            if w.abs() > 0.25 {
                fine = false;
                break;
            }
            raw += w;
            prev = v;
        }
        if fine {
            let winding = raw.round();
            if (raw - winding).abs() > 1e-6 {
                return Err(Error::NonIntegralWinding(raw));
            }
            return Ok(MeshScan {
                winding: winding as i64,
                raw,
                max_slope,
                nodes,
            });
        }
        nodes *= 2;
    }
    Err(Error::MeshInsufficient { nodes })
}

/// Integer winding of `x ↦ lift(x, y0)`; see [`winding_scan`].
pub fn winding_in_x(lift: impl Fn(f64, f64) -> f64, y0: f64, lipschitz: f64) -> Result<i64> {
    Ok(winding_scan(|x| lift(x, y0), lipschitz)?.winding)
}

/// Largest finite-difference slope of `lift` between horizontally or
/// vertically adjacent nodes of a `mesh × mesh` grid on `[0,1]^2`.
pub fn lipschitz_estimate(lift: impl Fn(f64, f64) -> f64, mesh: usize) -> Result<f64> {
    if mesh < 2 {
        return Err(invalid("mesh", "at least two nodes per side are required"));
    }
    let h = 1.0 / (mesh - 1) as f64;
    let vals: Vec<f64> = (0..mesh * mesh).map(|k| lift((k % mesh) as f64 * h, (k / mesh) as f64 * h)).collect();
    let mut best: f64 = 0.0;
    for j in 0..mesh {
        for i in 0..mesh {
            let v = vals[j * mesh + i];
            if i + 1 < mesh {
                best = best.max((vals[j * mesh + i + 1] - v).abs() / h);
            }
            if j + 1 < mesh {
                best = best.max((vals[(j + 1) * mesh + i] - v).abs() / h);
            }
        }
    }
    Ok(best)
}

/// `F_n(1, y) - F_n(0, y)` assembled from the lift, next to its closed form
/// `nkc d1 - nkc β - ⌊nβ⌋`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundaryIncrement {
    pub computed: f64,
    pub closed_form: f64,
}

/// `F_n(x, y) = k H̃_n(x, y) + nkc(αy - βx) - ⌊nβ⌋(x + nα) + ⌊nα⌋(y + nβ)`,
/// where `H̃_n` is the continuous lift of `H_n` normalised by
/// `H̃_n(0, 0) ∈ [0, 1)`.
pub fn f_n_lift(js: &JoiningSystem, k: i64, n: u64, x: f64, y: f64) -> f64 {
    let (a, b) = js.rotation_f64();
    let c = js.twist() as f64;
    let (kf, nf) = (k as f64, n as f64);
    let shift = js.cocycle_closed(0.0, 0.0, n).floor();
    let h = (js.cocycle_closed(x, y, n) - crate::compensated::Dd::new(shift)).to_f64();
    kf * h + nf * kf * c * (a * y - b * x) - (nf * b).floor() * (x + nf * a) + (nf * a).floor() * (y + nf * b)
}

pub fn boundary_increment_fn(js: &JoiningSystem, k: i64, n: u64, y: f64) -> Result<BoundaryIncrement> {
    if !(0.0..1.0).contains(&y) {
        return Err(invalid("y", "must lie in [0, 1)"));
    }
    let computed = f_n_lift(js, k, n, 1.0, y) - f_n_lift(js, k, n, 0.0, y);
    let (_, b) = js.rotation_f64();
    let (d1, _) = js.base().h().windings();
    let (kf, nf, c) = (k as f64, n as f64, js.twist() as f64);
    let closed_form = nf * kf * c * d1 as f64 - nf * kf * c * b - (nf * b).floor();
    Ok(BoundaryIncrement { computed, closed_form })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProofConstants {
    pub k: i64,
    pub p: i64,
    pub q: i64,
    pub d1: i64,
    pub alpha: f64,
    pub beta: f64,
    pub lipschitz: f64,
    pub discriminant: f64,
    pub delta1: f64,
    pub nu: f64,
}

/// Discriminants below this are treated as an exact resonance.
pub const RESONANCE_TOLERANCE: f64 = 1e-12;

/// `δ₁ = |kcd₁ - kcβ - β| / (24k(p²+q²)(L + |α| + |β|))` and
/// `ν = 6 / |kcd₁ - kcβ - β|` with `c = p² - q²`.
pub fn proof_constants(k: i64, p: u64, q: u64, d1: i64, alpha: f64, beta: f64, lipschitz: f64) -> Result<ProofConstants> {
    let primes = crate::heisenberg::PrimePair::new(p, q)?;
    if k < 1 {
        return Err(invalid("k", "must be at least 1"));
    }
    if lipschitz.is_nan() || lipschitz < 0.0 || !alpha.is_finite() || !beta.is_finite() {
        return Err(invalid("constants", "alpha, beta and L must be finite with L >= 0"));
    }
    let (kf, c, s) = (k as f64, primes.twist() as f64, primes.norm() as f64);
    let discriminant = (kf * c * d1 as f64 - kf * c * beta - beta).abs();
    if discriminant <= RESONANCE_TOLERANCE * (1.0 + kf * c * (d1.unsigned_abs() as f64 + beta.abs())) {
        return Err(Error::ResonantDiscriminant);
    }
    let delta1 = discriminant / (24.0 * kf * s * (lipschitz + alpha.abs() + beta.abs()));
    Ok(ProofConstants {
        k,
        p: primes.p(),
        q: primes.q(),
        d1,
        alpha,
        beta,
        lipschitz,
        discriminant,
        delta1,
        nu: 6.0 / discriminant,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoboundaryReport {
    pub k: i64,
    pub cutoff: usize,
    pub grid: usize,
    /// RMS circle distance of `R∘T₀ - R - g`, divided by `1/sqrt(12)`, the
    /// RMS for a uniformly random error.
    pub residual: f64,
    /// Modes `(m, n)` whose denominator `|e(mα + nβ) - 1|` fell below
    /// [`SMALL_DENOMINATOR`].
    pub skipped_modes: Vec<(i64, i64)>,
    /// Linear winding part `(k c d1, k c d2)` removed before solving.
    pub removed_winding: (i64, i64),
    pub note: String,
}

pub const SMALL_DENOMINATOR: f64 = 1e-9;

/// Fourier solution of `R(ω + (α, β)) - R(ω) = g(ω)` restricted to modes
/// `|m|, |n| <= cutoff`.
#[derive(Clone, Debug)]
pub struct TransferSolution {
    cutoff: usize,
    /// `R̂(m, n)` at index `(m + M)(2M + 1) + (n + M)`.
    coeffs: Vec<Complex64>,
    pub skipped: Vec<(i64, i64)>,
}

impl TransferSolution {
    pub fn eval(&self, x: f64, y: f64) -> f64 {
        let m = self.cutoff as i64;
        let w = 2 * self.cutoff + 1;
        let ex: Vec<Complex64> = (-m..=m).map(|i| Complex64::from_polar(1.0, TAU * i as f64 * x)).collect();
        let ey: Vec<Complex64> = (-m..=m).map(|j| Complex64::from_polar(1.0, TAU * j as f64 * y)).collect();
        let mut acc = Complex64::new(0.0, 0.0);
        for (i, exi) in ex.iter().enumerate() {
            let row: Complex64 = (0..w).map(|j| self.coeffs[i * w + j] * ey[j]).sum();
            acc += exi * row;
        }
        acc.re
    }
}

/// Smallest power of two grid side used for cutoff `m`.
pub fn transfer_grid(cutoff: usize) -> usize {
    (4 * (cutoff + 1)).max(64).next_power_of_two()
}

/// Solves the transfer equation for a real-valued `g` sampled at cell centres
/// of a `grid × grid` mesh.
pub fn solve_transfer(g: &[f64], grid: usize, alpha: f64, beta: f64, cutoff: usize) -> Result<TransferSolution> {
    if cutoff < 1 {
        return Err(invalid("cutoff", "must be at least 1"));
    }
    if g.len() != grid * grid || grid < 2 * cutoff + 1 {
        return Err(invalid("grid", "sample count does not match a grid resolving the cutoff"));
    }
    let m = cutoff as i64;
    let w = 2 * cutoff + 1;
    let inv = 1.0 / grid as f64;
    // twiddle[i][k] = e(-m_i * (k + 1/2) / grid)
    let twiddle: Vec<Complex64> = (-m..=m)
        .flat_map(|mi| (0..grid).map(move |k| Complex64::from_polar(1.0, -TAU * mi as f64 * (k as f64 + 0.5) * inv)))
        .collect();
    // Transform along x for every row, then along y.
    let mut rows = vec![Complex64::new(0.0, 0.0); grid * w];
    for r in 0..grid {
        let line = &g[r * grid..(r + 1) * grid];
        for i in 0..w {
            let tw = &twiddle[i * grid..(i + 1) * grid];
            rows[r * w + i] = line.iter().zip(tw).map(|(v, t)| t * v).sum::<Complex64>() * inv;
        }
    }
    let mut coeffs = vec![Complex64::new(0.0, 0.0); w * w];
    let mut skipped = Vec::new();
    for i in 0..w {
        for j in 0..w {
            let tw = &twiddle[j * grid..(j + 1) * grid];
            let ghat: Complex64 = (0..grid).map(|r| rows[r * w + i] * tw[r]).sum::<Complex64>() * inv;
            let (mi, nj) = (i as i64 - m, j as i64 - m);
            if mi == 0 && nj == 0 {
                continue;
            }
            let denom = Complex64::from_polar(1.0, TAU * (mi as f64 * alpha + nj as f64 * beta)) - 1.0;
            if denom.norm() < SMALL_DENOMINATOR {
                skipped.push((mi, nj));
                continue;
            }
            coeffs[i * w + j] = ghat / denom;
        }
    }
    Ok(TransferSolution { cutoff, coeffs, skipped })
}

/// Normalised RMS circle distance of `R(ω + (α,β)) - R(ω) - g(ω)` over the
/// sampled cell centres.
pub fn transfer_residual(sol: &TransferSolution, g_circle: &[f64], grid: usize, alpha: f64, beta: f64) -> f64 {
    let m = sol.cutoff as i64;
    let w = 2 * sol.cutoff + 1;
    let centres: Vec<f64> = (0..grid).map(|k| (k as f64 + 0.5) / grid as f64).collect();
    let eval_grid = |sx: f64, sy: f64| -> Vec<f64> {
        let ex: Vec<Complex64> = centres
            .iter()
            .flat_map(|&x| (-m..=m).map(move |i| Complex64::from_polar(1.0, TAU * i as f64 * (x + sx))))
            .collect();
        let ey: Vec<Complex64> = centres
            .iter()
            .flat_map(|&y| (-m..=m).map(move |j| Complex64::from_polar(1.0, TAU * j as f64 * (y + sy))))
            .collect();
        // partial[r][i] = Σ_j R̂(i, j) e(n_j y_r)
        let mut partial = vec![Complex64::new(0.0, 0.0); grid * w];
        for r in 0..grid {
            for i in 0..w {
                partial[r * w + i] = (0..w).map(|j| sol.coeffs[i * w + j] * ey[r * w + j]).sum();
            }
        }
        let mut out = vec![0.0; grid * grid];
        for r in 0..grid {
            for c in 0..grid {
                out[r * grid + c] = (0..w).map(|i| partial[r * w + i] * ex[c * w + i]).sum::<Complex64>().re;
            }
        }
        out
    };
    let here = eval_grid(0.0, 0.0);
    let there = eval_grid(alpha, beta);
    let mean_sq = here
        .iter()
        .zip(&there)
        .zip(g_circle)
        .map(|((r0, r1), g)| circle_dist(r1 - r0 - g, 0.0).powi(2))
        .sum::<f64>()
        / (grid * grid) as f64;
    mean_sq.sqrt() * 12f64.sqrt()
}

/// Searches the modes `|m|, |n| <= cutoff` for a solution of
/// `R(T₀ω) = R(ω) + k H'(ω)` and reports the residual.
///
/// The linear winding part `k c (d1 x + d2 y)` of `k H'` is removed before
/// solving and restored when measuring the residual. A large residual is
/// evidence against a solution in this subspace, not a proof that none
/// exists.
pub fn coboundary_search(js: &JoiningSystem, k: i64, cutoff: usize) -> Result<CoboundaryReport> {
    if k < 1 {
        return Err(invalid("k", "must be at least 1"));
    }
    let grid = transfer_grid(cutoff);
    let (a, b) = js.rotation_f64();
    let (w1, w2) = js.windings();
    let (w1, w2) = (k * w1, k * w2);
    let mut full = Vec::with_capacity(grid * grid);
    let mut periodic = Vec::with_capacity(grid * grid);
    for r in 0..grid {
        let y = (r as f64 + 0.5) / grid as f64;
        for c in 0..grid {
            let x = (c as f64 + 0.5) / grid as f64;
            let g = k as f64 * js.h_prime_n_f64(x, y, 1);
            full.push(g);
            periodic.push(g - (w1 as f64 * x + w2 as f64 * y));
        }
    }
    let sol = solve_transfer(&periodic, grid, a, b, cutoff)?;
    let residual = transfer_residual(&sol, &full, grid, a, b);
    Ok(CoboundaryReport {
        k,
        cutoff,
        grid,
        residual,
        skipped_modes: sol.skipped,
        removed_winding: (w1, w2),
        note: "finite Fourier subspace search; evidence, not proof".into(),
    })
}
