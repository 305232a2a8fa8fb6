//! Deterministic segmented orbit engine.
//!
//! An orbit of length `N` is cut into segments of a fixed power-of-two size.
//! Pass 1 computes each segment's exact cocycle increment in parallel, an
//! exclusive scan turns those into segment offsets, and pass 2 replays every
//! segment from its offset and feeds the visited states to a [`Sink`]. Sink
//! partial sums are merged in segment order, so the output depends on the
//! segment size but never on the number of worker threads.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::dynamics::{JoiningSystem, SkewMap, TorusPoint};
use crate::error::{invalid, Error, Result};
use crate::fixed::{Fiber, Fixed};
use crate::heisenberg::{GroupElement, NilPoint};

pub const DEFAULT_SEGMENT_SIZE: u64 = 1 << 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct OrbitSegmentPlan {
    segment_size: u64,
    workers: usize,
}

impl Default for OrbitSegmentPlan {
    fn default() -> Self {
        OrbitSegmentPlan {
            segment_size: DEFAULT_SEGMENT_SIZE,
            workers: 1,
        }
    }
}

impl OrbitSegmentPlan {
    pub fn new(segment_size: u64, workers: usize) -> Result<Self> {
        if !segment_size.is_power_of_two() {
            return Err(invalid("segment_size", format!("{segment_size} is not a power of two")));
        }
        if workers == 0 {
            return Err(invalid("workers", "must be positive"));
        }
        Ok(OrbitSegmentPlan { segment_size, workers })
    }

    pub fn segment_size(&self) -> u64 {
        self.segment_size
    }

    pub fn workers(&self) -> usize {
        self.workers
    }

    pub fn with_workers(self, workers: usize) -> Result<Self> {
        OrbitSegmentPlan::new(self.segment_size, workers)
    }

    /// Runs `op` on a pool of `workers` threads. A single worker runs inline.
    fn run<R: Send>(&self, op: impl FnOnce() -> R + Send) -> Result<R> {
        if self.workers == 1 {
            return Ok(op());
        }
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(self.workers)
            .build()
            .map_err(|e| Error::ThreadPool(e.to_string()))?;
        Ok(pool.install(op))
    }
}

/// A source of orbit states indexed by `n >= 0` whose state at `n` is
/// determined by an exact prefix sum of per-step increments.
pub trait OrbitDriver: Sync {
    type State;
    type Increment: Copy + Send + Sync;

    fn zero(&self) -> Self::Increment;

    fn combine(&self, a: Self::Increment, b: Self::Increment) -> Self::Increment;

    /// Sum of the increments of steps `first .. first + len`.
    fn increment(&self, first: u64, len: u64) -> Self::Increment;

    /// Calls `f(n, state_n)` for `n` in `first .. first + len`, where `prefix`
    /// is the sum of the increments of steps `0 .. first`.
    fn visit(&self, first: u64, len: u64, prefix: Self::Increment, f: &mut dyn FnMut(u64, &Self::State));
}

/// Accumulates a fixed number of complex sums over visited states.
pub trait Sink<S>: Sync {
    fn width(&self) -> usize;

    fn accumulate(&self, n: u64, state: &S, acc: &mut [Complex64]);
}

/// A [`Sink`] backed by a closure.
pub struct FnSink<F> {
    width: usize,
    f: F,
}

impl<F> FnSink<F> {
    pub fn new(width: usize, f: F) -> Self {
        FnSink { width, f }
    }
}

impl<S, F> Sink<S> for FnSink<F>
where
    F: Fn(u64, &S, &mut [Complex64]) + Sync,
{
    fn width(&self) -> usize {
        self.width
    }

    fn accumulate(&self, n: u64, state: &S, acc: &mut [Complex64]) {
        (self.f)(n, state, acc)
    }
}

struct SegmentOutput {
    /// Partial sums at checkpoints falling inside the segment.
    marks: Vec<(usize, Vec<Complex64>)>,
    total: Vec<Complex64>,
}

fn validate_checkpoints(checkpoints: &[u64]) -> Result<u64> {
    let last = *checkpoints
        .last()
        .ok_or_else(|| invalid("checkpoints", "at least one checkpoint is required"))?;
    if checkpoints[0] == 0 {
        return Err(invalid("checkpoints", "checkpoints must be positive"));
    }
    if checkpoints.windows(2).any(|w| w[0] >= w[1]) {
        return Err(invalid("checkpoints", "checkpoints must be strictly increasing"));
    }
    if last >= 1 << 63 {
        return Err(Error::OutOfRange {
            name: "N",
            value: last.to_string(),
            allowed: "below 2^63",
        });
    }
    Ok(last)
}

/// Evaluates `Σ_{n=1}^{N_k} sink(state_n)` at every checkpoint `N_k`.
///
/// Returns one vector of `sink.width()` unnormalised sums per checkpoint.
pub fn orbit_stream<D, K>(driver: &D, sink: &K, checkpoints: &[u64], plan: &OrbitSegmentPlan) -> Result<Vec<Vec<Complex64>>>
where
    D: OrbitDriver,
    K: Sink<D::State>,
{
    let total = validate_checkpoints(checkpoints)?;
    let seg = plan.segment_size;
    let segments: Vec<(u64, u64)> = (0..total.div_ceil(seg))
        .map(|k| {
            let first = 1 + k * seg;
            (first, seg.min(total + 1 - first))
        })
        .collect();
    let width = sink.width();

    plan.run(|| {
        let increments: Vec<D::Increment> = segments
            .par_iter()
            .map(|&(first, len)| driver.increment(first, len))
            .collect();

        let mut offsets = Vec::with_capacity(segments.len());
        let mut running = driver.increment(0, 1);
        for inc in &increments {
            offsets.push(running);
            running = driver.combine(running, *inc);
        }

        let outputs: Vec<SegmentOutput> = segments
            .par_iter()
            .zip(offsets.par_iter())
            .map(|(&(first, len), &prefix)| {
                let mut acc = vec![Complex64::new(0.0, 0.0); width];
                let mut marks = Vec::new();
                let mut next = checkpoints.partition_point(|&c| c < first);
                driver.visit(first, len, prefix, &mut |n, state| {
                    sink.accumulate(n, state, &mut acc);
                    if next < checkpoints.len() && checkpoints[next] == n {
                        marks.push((next, acc.clone()));
                        next += 1;
                    }
                });
                SegmentOutput { marks, total: acc }
            })
            .collect();

        let mut result = vec![Vec::new(); checkpoints.len()];
        let mut running = vec![Complex64::new(0.0, 0.0); width];
        for out in outputs {
            for (idx, partial) in out.marks {
                result[idx] = running.iter().zip(&partial).map(|(a, b)| a + b).collect();
            }
            for (r, t) in running.iter_mut().zip(&out.total) {
                *r += t;
            }
        }
        result
    })
}

/// `n ↦ T^n(start)` for any skew map.
pub struct SkewOrbit<'a, M: SkewMap> {
    map: &'a M,
    start: NilPoint,
}

impl<'a, M: SkewMap> SkewOrbit<'a, M> {
    pub fn new(map: &'a M, start: NilPoint) -> Result<Self> {
        map.check_law(&start)?;
        Ok(SkewOrbit { map, start })
    }

    fn base_point(&self, n: u64) -> (Fixed, Fixed) {
        let (a, b) = self.map.rotation();
        let r = self.start.rep();
        let n = n as i64;
        (r.x + a.mul_int(n), r.y + b.mul_int(n))
    }
}

impl<M: SkewMap> OrbitDriver for SkewOrbit<'_, M> {
    type State = NilPoint;
    type Increment = Fiber;

    fn zero(&self) -> Fiber {
        Fiber::ZERO
    }

    fn combine(&self, a: Fiber, b: Fiber) -> Fiber {
        a + b
    }

    fn increment(&self, first: u64, len: u64) -> Fiber {
        let (a, b) = self.map.rotation();
        let (mut x, mut y) = self.base_point(first);
        let mut acc = Fiber::ZERO;
        for _ in 0..len {
            acc += self.map.fiber_lift(x, y);
            x += a;
            y += b;
        }
        acc
    }

    fn visit(&self, first: u64, len: u64, prefix: Fiber, f: &mut dyn FnMut(u64, &NilPoint)) {
        let (a, b) = self.map.rotation();
        let law = self.map.law();
        let rep = *self.start.rep();
        let (mut x, mut y) = self.base_point(first);
        let (mut nx, mut ny) = (x - rep.x, y - rep.y);
        let mut z = prefix;
        for n in first..first + len {
            let state = GroupElement::new(nx, ny, z, law).compose(&rep).canonical_rep();
            f(n, &state);
            z += self.map.fiber_lift(x, y);
            x += a;
            y += b;
            nx += a;
            ny += b;
        }
    }
}

/// `n ↦ (A^n(a0), B^n(b0))` for two drivers run in lockstep.
pub struct PairOrbit<A, B> {
    pub first: A,
    pub second: B,
}

impl<A: OrbitDriver, B: OrbitDriver> OrbitDriver for PairOrbit<A, B>
where
    A::State: Clone,
    B::State: Clone,
{
    type State = (A::State, B::State);
    type Increment = (A::Increment, B::Increment);

    fn zero(&self) -> Self::Increment {
        (self.first.zero(), self.second.zero())
    }

    fn combine(&self, a: Self::Increment, b: Self::Increment) -> Self::Increment {
        (self.first.combine(a.0, b.0), self.second.combine(a.1, b.1))
    }

    fn increment(&self, first: u64, len: u64) -> Self::Increment {
        (self.first.increment(first, len), self.second.increment(first, len))
    }

    fn visit(&self, first: u64, len: u64, prefix: Self::Increment, f: &mut dyn FnMut(u64, &Self::State)) {
        let mut left = Vec::with_capacity(len as usize);
        self.first.visit(first, len, prefix.0, &mut |_, s| left.push(s.clone()));
        let mut left = left.into_iter();
        self.second.visit(first, len, prefix.1, &mut |n, s| {
            let l = left.next().expect("drivers visit equal ranges");
            f(n, &(l, s.clone()));
        });
    }
}

/// `n ↦ (T*')^n(start)` on `T^3`.
pub struct TrivializedOrbit<'a> {
    js: &'a JoiningSystem,
    start: TorusPoint,
}

impl<'a> TrivializedOrbit<'a> {
    pub fn new(js: &'a JoiningSystem, start: TorusPoint) -> Self {
        TrivializedOrbit { js, start }
    }
}

impl OrbitDriver for TrivializedOrbit<'_> {
    type State = TorusPoint;
    type Increment = Fiber;

    fn zero(&self) -> Fiber {
        Fiber::ZERO
    }

    fn combine(&self, a: Fiber, b: Fiber) -> Fiber {
        a + b
    }

    fn increment(&self, first: u64, len: u64) -> Fiber {
        let (a, b) = self.js.rotation();
        let n = first as i64;
        let (mut x, mut y) = (self.start.x + a.mul_int(n), self.start.y + b.mul_int(n));
        let mut acc = Fiber::ZERO;
        for _ in 0..len {
            acc += self.js.fiber_lift(x, y);
            x += a;
            y += b;
        }
        acc
    }

    fn visit(&self, first: u64, len: u64, prefix: Fiber, f: &mut dyn FnMut(u64, &TorusPoint)) {
        let (a, b) = self.js.rotation();
        let c = self.js.twist();
        let (x0, y0) = (self.start.x, self.start.y);
        let n0 = first as i64;
        let (mut x, mut y) = (x0 + a.mul_int(n0), y0 + b.mul_int(n0));
        let mut h = prefix;
        for n in first..first + len {
            let z = self.start.z + h + self.js.trivialising_shear(x0, y0, n).mul_int(c);
            f(n, &TorusPoint::new(x, y, z));
            h += self.js.fiber_lift(x, y);
            x += a;
            y += b;
        }
    }
}

/// `n ↦ n`, for sums that need no dynamics.
pub struct IndexOrbit;

impl OrbitDriver for IndexOrbit {
    type State = u64;
    type Increment = ();

    fn zero(&self) {}

    fn combine(&self, _: (), _: ()) {}

    fn increment(&self, _: u64, _: u64) {}

    fn visit(&self, first: u64, len: u64, _: (), f: &mut dyn FnMut(u64, &u64)) {
        for n in first..first + len {
            f(n, &n);
        }
    }
}
