//! Fiber functions `h : T^2 -> T^1` and their cocycle sums.
//!
//! A fiber function is given by its lift
//!
//! ```text
//! h(x, y) = d1 x + d2 y + constant + periodic(x, y)
//! ```
//!
//! with integer windings `(d1, d2)` and a `Z^2`-periodic Lipschitz part. The
//! periodic part is either a finite trigonometric sum or a bilinear
//! interpolation table.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::compensated::{two_prod, Dd, Neumaier};
use crate::error::{invalid, Result};
use crate::fixed::{Fiber, Fixed};

/// `amplitude * sin(2π (k1 x + k2 y) + phase)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrigTerm {
    pub k1: i64,
    pub k2: i64,
    pub amplitude: f64,
    #[serde(default)]
    pub phase: f64,
}

impl TrigTerm {
    fn eval(&self, x: f64, y: f64) -> f64 {
        self.amplitude * (TAU * (self.k1 as f64 * x + self.k2 as f64 * y) + self.phase).sin()
    }
}

/// Periodic bilinear interpolation of `values` on an `nx × ny` grid over
/// `[0,1)^2` (row-major in `y`, i.e. `values[j * nx + i]` sits at `(i/nx, j/ny)`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BilinearTable {
    pub nx: usize,
    pub ny: usize,
    pub values: Vec<f64>,
}

impl BilinearTable {
    pub fn new(nx: usize, ny: usize, values: Vec<f64>) -> Result<Self> {
        if nx == 0 || ny == 0 || values.len() != nx * ny {
            return Err(invalid(
                "table",
                format!("expected {nx}x{ny} values, got {}", values.len()),
            ));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(invalid("table", "values must be finite"));
        }
        Ok(BilinearTable { nx, ny, values })
    }

    fn at(&self, i: usize, j: usize) -> f64 {
        self.values[(j % self.ny) * self.nx + (i % self.nx)]
    }

    fn eval(&self, x: f64, y: f64) -> f64 {
        let u = x.rem_euclid(1.0) * self.nx as f64;
        let v = y.rem_euclid(1.0) * self.ny as f64;
        let (i, j) = (u.floor(), v.floor());
        let (s, t) = (u - i, v - j);
        let (i, j) = (i as usize % self.nx, j as usize % self.ny);
        let (a, b) = (self.at(i, j), self.at(i + 1, j));
        let (c, d) = (self.at(i, j + 1), self.at(i + 1, j + 1));
        (1.0 - t) * ((1.0 - s) * a + s * b) + t * ((1.0 - s) * c + s * d)
    }

    /// `sup (|∂x| + |∂y|)`, attained at cell corners for bilinear patches.
    fn lipschitz(&self) -> f64 {
        let (sx, sy) = (self.nx as f64, self.ny as f64);
        let mut best: f64 = 0.0;
        for j in 0..self.ny {
            for i in 0..self.nx {
                let (a, b) = (self.at(i, j), self.at(i + 1, j));
                let (c, d) = (self.at(i, j + 1), self.at(i + 1, j + 1));
                for (dx, dy) in [
                    (b - a, c - a),
                    (b - a, d - b),
                    (d - c, c - a),
                    (d - c, d - b),
                ] {
                    best = best.max(dx.abs() * sx + dy.abs() * sy);
                }
            }
        }
        best
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PeriodicPart {
    Trig(Vec<TrigTerm>),
    Table(BilinearTable),
}

/// The fiber function `h`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BaseFunctionSpec {
    pub d1: i64,
    pub d2: i64,
    #[serde(default)]
    pub constant: f64,
    pub periodic: PeriodicPart,
}

impl BaseFunctionSpec {
    pub fn linear(d1: i64, d2: i64) -> Self {
        BaseFunctionSpec {
            d1,
            d2,
            constant: 0.0,
            periodic: PeriodicPart::Trig(Vec::new()),
        }
    }

    pub fn constant(theta: f64) -> Self {
        BaseFunctionSpec {
            constant: theta,
            ..Self::linear(0, 0)
        }
    }

    pub fn trig(d1: i64, d2: i64, terms: Vec<TrigTerm>) -> Self {
        BaseFunctionSpec {
            d1,
            d2,
            constant: 0.0,
            periodic: PeriodicPart::Trig(terms),
        }
    }

    pub fn table(d1: i64, d2: i64, table: BilinearTable) -> Self {
        BaseFunctionSpec {
            d1,
            d2,
            constant: 0.0,
            periodic: PeriodicPart::Table(table),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.constant.is_finite() {
            return Err(invalid("constant", "must be finite"));
        }
        match &self.periodic {
            PeriodicPart::Trig(terms) => {
                if terms.iter().any(|t| !t.amplitude.is_finite() || !t.phase.is_finite()) {
                    return Err(invalid("terms", "amplitude and phase must be finite"));
                }
            }
            PeriodicPart::Table(t) => {
                BilinearTable::new(t.nx, t.ny, t.values.clone())?;
            }
        }
        Ok(())
    }

    pub fn windings(&self) -> (i64, i64) {
        (self.d1, self.d2)
    }

    pub fn is_trig(&self) -> bool {
        matches!(self.periodic, PeriodicPart::Trig(_))
    }

    pub fn periodic(&self, x: f64, y: f64) -> f64 {
        match &self.periodic {
            PeriodicPart::Trig(terms) => terms.iter().map(|t| t.eval(x, y)).sum(),
            PeriodicPart::Table(t) => t.eval(x, y),
        }
    }

    /// The real lift `d1 x + d2 y + constant + periodic(x, y)`.
    pub fn lift(&self, x: f64, y: f64) -> f64 {
        self.d1 as f64 * x + self.d2 as f64 * y + self.constant + self.periodic(x, y)
    }

    /// Lipschitz constant of the lift for the sup-norm metric on `R^2`:
    /// `sup (|∂x h| + |∂y h|)` bounded termwise.
    pub fn lipschitz(&self) -> f64 {
        let linear = (self.d1.abs() + self.d2.abs()) as f64;
        linear
            + match &self.periodic {
                PeriodicPart::Trig(terms) => terms
                    .iter()
                    .map(|t| TAU * t.amplitude.abs() * (t.k1.abs() + t.k2.abs()) as f64)
                    .sum(),
                PeriodicPart::Table(t) => t.lipschitz(),
            }
    }

    /// Fixed-point lift. The linear part is exact; the periodic part is
    /// evaluated at the fractional coordinates, so integer translates of the
    /// argument change the value by exactly `d1 a + d2 b`.
    pub fn lift_fixed(&self, x: Fixed, y: Fixed) -> Fiber {
        let shift = self.constant.floor();
        let linear = x.mul_int(self.d1) + y.mul_int(self.d2) + Fixed::from_int(shift as i64);
        let rest = (self.constant - shift) + self.periodic(x.fract().to_f64(), y.fract().to_f64());
        Fiber::from_fixed(linear) + Fiber::from_f64(rest)
    }

    /// `h_n(x, y) = Σ_{i<n} h(x + iα, y + iβ)` in exact fixed point.
    pub fn cocycle_fixed(&self, x: Fixed, y: Fixed, n: u64, alpha: Fixed, beta: Fixed) -> Fiber {
        let (mut u, mut v) = (x, y);
        let mut acc = Fiber::ZERO;
        for _ in 0..n {
            acc += self.lift_fixed(u, v);
            u += alpha;
            v += beta;
        }
        acc
    }

    /// `h_n(x, y)` by compensated summation of the lift along the orbit.
    pub fn cocycle_sum(&self, x: f64, y: f64, n: u64, alpha: f64, beta: f64) -> f64 {
        self.cocycle_sum_dd(x, y, n, alpha, beta).to_f64()
    }

    /// `h_n(x, y)` as an unevaluated double-double. The linear part is summed
    /// in closed form, `n (d1 x + d2 y) + (d1 α + d2 β) n(n-1)/2`, with exact
    /// products; the bounded periodic part is summed term by term.
    pub fn cocycle_sum_dd(&self, x: f64, y: f64, n: u64, alpha: f64, beta: f64) -> Dd {
        let nf = n as f64;
        let tri = if n == 0 { 0.0 } else { (n as f64) * ((n - 1) as f64) / 2.0 };
        let mut acc = Dd::ZERO;
        for (coef, base, step) in [(self.d1, x, alpha), (self.d2, y, beta)] {
            if coef == 0 {
                continue;
            }
            let c = coef as f64;
            let (p, e) = two_prod(base, c * nf);
            acc = acc + Dd::from_sum(p, e);
            let (p, e) = two_prod(step, c * tri);
            acc = acc + Dd::from_sum(p, e);
        }
        let mut periodic = Neumaier::new();
        if self.constant != 0.0 || !matches!(&self.periodic, PeriodicPart::Trig(t) if t.is_empty()) {
            for i in 0..n {
                let fi = i as f64;
                periodic.add(self.constant + self.periodic(x + fi * alpha, y + fi * beta));
            }
        }
        acc + periodic.as_dd()
    }

    /// `h_n(x, y)` with trigonometric terms summed as geometric series, so the
    /// cost is independent of `n`. Falls back to [`Self::cocycle_sum_dd`] for
    /// tables.
    pub fn cocycle_sum_closed(&self, x: f64, y: f64, n: u64, alpha: f64, beta: f64) -> Dd {
        let PeriodicPart::Trig(terms) = &self.periodic else {
            return self.cocycle_sum_dd(x, y, n, alpha, beta);
        };
        let linear = BaseFunctionSpec::linear(self.d1, self.d2).cocycle_sum_dd(x, y, n, alpha, beta);
        let mut periodic = Neumaier::new();
        periodic.add(self.constant * n as f64);
        for t in terms {
            let theta = t.k1 as f64 * alpha + t.k2 as f64 * beta;
            let phase = TAU * (t.k1 as f64 * x + t.k2 as f64 * y) + t.phase;
            periodic.add(t.amplitude * geometric_sin_sum(phase, theta, n));
        }
        linear + periodic.as_dd()
    }
}

/// `Σ_{i<n} sin(phase + 2π i θ)`.
fn geometric_sin_sum(phase: f64, theta: f64, n: u64) -> f64 {
    let t = theta - theta.round();
    let half = std::f64::consts::PI * t;
    let denom = half.sin();
    if denom.abs() < 1e-14 {
        // θ is (numerically) an integer: every term equals sin(phase)
        return n as f64 * phase.sin();
    }
    // Σ e(iθ) = e((n-1)θ/2) sin(π n θ) / sin(π θ)
    let nf = n as f64;
    let ratio = (std::f64::consts::PI * (nf * t).rem_euclid(2.0)).sin() / denom;
    let centre = phase + TAU * ((nf - 1.0) * t / 2.0);
    ratio * centre.sin()
}
