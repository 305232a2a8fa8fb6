//! Experiment commands. Each command writes its reports into the output
//! directory and returns the file names together with a short summary.

use std::path::PathBuf;
use std::time::Instant;

use heislab::diagnostics::{
    boundary_increment_fn, coboundary_search, frequencies_up_to, lipschitz_estimate, proof_constants, weyl_sums, winding_scan,
    BoundaryIncrement, CoboundaryReport, ProofConstants, WeylReport,
};
use heislab::dynamics::{SkewMap, TorusPoint};
use heislab::heisenberg::{GroupLaw, NilPoint};
use heislab::moebius::{bilinear_sum, bilinear_sum_reduced, correlation_sum, davenport_baseline, CorrelationReport, MobiusTable, Weight};
use heislab::orbit::OrbitSegmentPlan;
use heislab::report::{fmt_f64, to_json, weyl_csv, write_correlation, write_text};
use serde::Serialize;
use serde_json::json;

use crate::config::ExperimentConfig;
use crate::manifest::{Diagnostic, RunManifest};
use crate::verify::reduced_pair_point;

pub type CmdResult<T> = Result<T, Box<dyn std::error::Error>>;

/// Soft thresholds recorded in the manifest.
pub const CORRELATION_MAX: f64 = 0.05;
pub const CORRELATION_DECAY_RATIO: f64 = 0.5;
pub const DAVENPORT_MAX: f64 = 0.01;
pub const WEYL_MAX: f64 = 0.05;
pub const COBOUNDARY_RESIDUAL_MIN: f64 = 0.1;
/// Tolerance of the two-route bilinear identity.
pub const ROUTE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Default)]
pub struct CommandOutput {
    pub files: Vec<String>,
    pub summary: Vec<String>,
    pub diagnostics: Vec<Diagnostic>,
}

impl CommandOutput {
    fn merge(&mut self, other: CommandOutput) {
        self.files.extend(other.files);
        self.summary.extend(other.summary);
        self.diagnostics.extend(other.diagnostics);
    }
}

/// Resolved configuration for a command invocation.
#[derive(Debug, Clone)]
pub struct Context {
    pub cfg: ExperimentConfig,
    pub out: PathBuf,
}

impl Context {
    pub fn new(cfg: ExperimentConfig, out: Option<PathBuf>) -> Self {
        let out = out.unwrap_or_else(|| cfg.output.dir.clone());
        Context { cfg, out }
    }

    pub fn plan(&self) -> OrbitSegmentPlan {
        self.cfg.plan()
    }

    fn identity(&self) -> NilPoint {
        NilPoint::identity(GroupLaw::HEISENBERG)
    }

    fn write_json<T: Serialize>(&self, name: &str, value: &T) -> CmdResult<String> {
        write_text(&self.out.join(name), &to_json(value)?)?;
        Ok(name.to_string())
    }

    fn write_csv(&self, name: &str, text: &str) -> CmdResult<String> {
        write_text(&self.out.join(name), text)?;
        Ok(name.to_string())
    }

    fn sieve(&self, bound: u64) -> CmdResult<MobiusTable> {
        Ok(MobiusTable::sieve(bound)?)
    }
}

fn describe(report: &CorrelationReport, label: &str) -> String {
    let last = report.checkpoints.last().expect("nonempty");
    format!("{label}: |S({})| = {}", last.n, fmt_f64(last.modulus()))
}

pub fn cmd_sieve(ctx: &Context, bound: Option<u64>) -> CmdResult<CommandOutput> {
    let bound = bound.unwrap_or(ctx.cfg.sieve.bound);
    let t0 = Instant::now();
    let table = ctx.sieve(bound)?;
    let elapsed = t0.elapsed();
    let mut marks: Vec<u64> = std::iter::successors(Some(10u64), |n| n.checked_mul(10)).take_while(|&n| n <= bound).collect();
    if marks.last() != Some(&bound) {
        marks.push(bound);
    }
    let mut csv = String::from("N,mertens\n");
    for (n, m) in marks.iter().zip(table.mertens_at(&marks)) {
        csv.push_str(&format!("{n},{m}\n"));
    }
    Ok(CommandOutput {
        files: vec![ctx.write_csv("mertens.csv", &csv)?],
        summary: vec![format!("sieved mu up to {bound} in {:.2} s", elapsed.as_secs_f64())],
        diagnostics: Vec::new(),
    })
}

pub fn cmd_orbit(ctx: &Context, steps: u64) -> CmdResult<CommandOutput> {
    let sys = ctx.cfg.skew_system();
    let mut pt = ctx.identity();
    let mut csv = String::from("n,x,y,z\n");
    for n in 0..=steps {
        let [x, y, z] = pt.to_f64();
        csv.push_str(&format!("{n},{},{},{}\n", fmt_f64(x), fmt_f64(y), fmt_f64(z)));
        pt = sys.step(&pt)?;
    }
    Ok(CommandOutput {
        files: vec![ctx.write_csv("orbit.csv", &csv)?],
        summary: vec![format!("wrote {} orbit points of T from the identity coset", steps + 1)],
        diagnostics: Vec::new(),
    })
}

fn correlation_diagnostics(report: &CorrelationReport) -> Vec<Diagnostic> {
    let last = report.checkpoints.last().expect("nonempty");
    let mut out = vec![Diagnostic::at_most(&format!("correlation |S({})|", last.n), last.modulus(), CORRELATION_MAX)];
    if let Some(early) = report.value_at(10_000).filter(|_| last.n > 10_000) {
        let ratio = last.modulus() / early.norm();
        out.push(Diagnostic::at_most(
            &format!("correlation |S({})| / |S(10000)|", last.n),
            ratio,
            CORRELATION_DECAY_RATIO,
        ));
    }
    out
}

pub fn cmd_correlate(ctx: &Context, table: Option<&MobiusTable>) -> CmdResult<CommandOutput> {
    let cfg = &ctx.cfg;
    let owned;
    let table = match table {
        Some(t) => t,
        None => {
            owned = ctx.sieve(cfg.sieve.bound)?;
            &owned
        }
    };
    let sys = cfg.skew_system();
    let mut report = correlation_sum(&sys, &cfg.observable, &ctx.identity(), &cfg.checkpoints.correlation, Weight::Mobius(table), &ctx.plan())?;
    report.metadata.insert("seed".into(), json!(cfg.seed));
    let mut out = CommandOutput {
        files: write_correlation(&ctx.out, "correlation", &report)?.to_vec(),
        summary: vec![describe(&report, "mobius correlation")],
        diagnostics: correlation_diagnostics(&report),
    };
    let dav = davenport_baseline(cfg.system.alpha, table, &cfg.checkpoints.davenport, &ctx.plan())?;
    out.files.extend(write_correlation(&ctx.out, "davenport", &dav)?);
    out.summary.push(describe(&dav, "davenport baseline"));
    let last = dav.checkpoints.last().expect("nonempty");
    out.diagnostics.push(Diagnostic::at_most(&format!("davenport |S({})|", last.n), last.modulus(), DAVENPORT_MAX));
    Ok(out)
}

/// Largest distance between the direct and reduced bilinear sums.
pub fn route_gap(direct: &CorrelationReport, reduced: &CorrelationReport) -> f64 {
    direct
        .checkpoints
        .iter()
        .zip(&reduced.checkpoints)
        .map(|(a, b)| (a.value - b.value).norm())
        .fold(0.0, f64::max)
}

pub fn cmd_bilinear(ctx: &Context) -> CmdResult<CommandOutput> {
    let cfg = &ctx.cfg;
    let sys = cfg.skew_system();
    let cps = &cfg.checkpoints.bilinear;
    let direct = bilinear_sum(&sys, &cfg.observable, &ctx.identity(), cfg.primes(), cps, &ctx.plan())?;
    let reduced = bilinear_sum_reduced(&sys, &cfg.observable, cfg.primes(), cps, &ctx.plan())?;
    let gap = route_gap(&direct, &reduced);
    let mut files = write_correlation(&ctx.out, "bilinear", &direct)?.to_vec();
    files.extend(write_correlation(&ctx.out, "bilinear_reduced", &reduced)?);
    Ok(CommandOutput {
        files,
        summary: vec![
            describe(&direct, "bilinear sum"),
            format!("direct vs reduced route: max gap {}", fmt_f64(gap)),
        ],
        diagnostics: vec![Diagnostic::at_most("bilinear route gap", gap, ROUTE_TOLERANCE)],
    })
}

pub fn cmd_reduce_joining(ctx: &Context, steps: u64) -> CmdResult<CommandOutput> {
    let js = ctx.cfg.joining_system();
    let sys = js.base();
    let (p, q) = (js.primes().p() as u32, js.primes().q() as u32);
    let (tp, tq) = (sys.power(p), sys.power(q));
    let (mut a, mut b) = (ctx.identity(), ctx.identity());
    let mut t = TorusPoint::origin();
    let mut mismatches = 0u64;
    let mut csv = String::from("n,x,y,z\n");
    for n in 0..=steps {
        if n > 0 {
            a = tp.step(&a)?;
            b = tq.step(&b)?;
            t = js.step_trivialized(&t);
            mismatches += (reduced_pair_point(&a, &b, js.primes())? != t) as u64;
        }
        let [x, y, z] = t.to_f64();
        csv.push_str(&format!("{n},{},{},{}\n", fmt_f64(x), fmt_f64(y), fmt_f64(z)));
    }
    let files = vec![
        ctx.write_csv("reduced_orbit.csv", &csv)?,
        ctx.write_json("reduce_joining.json", &json!({ "steps": steps, "mismatches": mismatches }))?,
    ];
    Ok(CommandOutput {
        files,
        summary: vec![format!("reduced joining orbit: {mismatches} mismatches in {steps} steps")],
        diagnostics: Vec::new(),
    })
}

pub fn cmd_weyl(ctx: &Context) -> CmdResult<CommandOutput> {
    let cfg = &ctx.cfg;
    let js = cfg.joining_system();
    let freqs = frequencies_up_to(cfg.weyl.max_frequency);
    let cps = &cfg.checkpoints.weyl;
    let reports: Vec<WeylReport> = weyl_sums(&js, &TorusPoint::origin(), &freqs, cps, &ctx.plan())?;
    let last = *cps.last().expect("nonempty");
    let (worst, freq) = reports
        .iter()
        .map(|r| (r.modulus_at(last).unwrap_or(0.0), r.freq))
        .fold((0.0, [0, 0, 0]), |acc, v| if v.0 > acc.0 { v } else { acc });
    let files = vec![
        ctx.write_csv("weyl.csv", &weyl_csv(&reports))?,
        ctx.write_json(
            "weyl.json",
            &json!({
                "orbit": "trivialized joining map from the origin",
                "primes": [cfg.joining.p, cfg.joining.q],
                "max_frequency": cfg.weyl.max_frequency,
                "frequencies": freqs.len(),
                "segment_size": cfg.plan.segment_size,
            }),
        )?,
    ];
    Ok(CommandOutput {
        files,
        summary: vec![format!("weyl: max |W({last})| = {} at k = {freq:?}", fmt_f64(worst))],
        diagnostics: vec![Diagnostic::at_most(&format!("weyl max |W({last})|"), worst, WEYL_MAX)],
    })
}

#[derive(Debug, Serialize)]
pub struct WindingSummary {
    pub n: u64,
    pub y0: f64,
    pub winding: i64,
    pub expected: i64,
    pub nodes: u64,
    pub lipschitz_estimate: f64,
    pub lipschitz_bound: f64,
}

pub fn winding_summary(ctx: &Context, n: u64, y0: f64) -> CmdResult<WindingSummary> {
    let js = ctx.cfg.joining_system();
    let bound = n as f64 * js.lipschitz();
    let scan = winding_scan(|x| js.cocycle_closed(x, y0, n).to_f64(), bound)?;
    let mesh = 257;
    let est = lipschitz_estimate(|x, y| js.cocycle_closed(x, y, n).to_f64(), mesh)?;
    Ok(WindingSummary {
        n,
        y0,
        winding: scan.winding,
        expected: n as i64 * js.windings().0,
        nodes: scan.nodes,
        lipschitz_estimate: est.max(scan.max_slope),
        lipschitz_bound: bound,
    })
}

pub fn cmd_winding(ctx: &Context, n: u64, y0: f64) -> CmdResult<CommandOutput> {
    let s = winding_summary(ctx, n, y0)?;
    let line = format!(
        "winding of H_{n}(., {y0}) = {} (expected {}); Lipschitz estimate {} <= bound {}",
        s.winding,
        s.expected,
        fmt_f64(s.lipschitz_estimate),
        fmt_f64(s.lipschitz_bound)
    );
    Ok(CommandOutput {
        files: vec![ctx.write_json("winding.json", &s)?],
        summary: vec![line],
        diagnostics: Vec::new(),
    })
}

#[derive(Debug, Serialize)]
pub struct ConstantsReport {
    pub constants: ProofConstants,
    pub boundary_n: u64,
    pub boundary_increments: Vec<(f64, BoundaryIncrement)>,
}

pub fn constants_report(ctx: &Context) -> CmdResult<ConstantsReport> {
    let cfg = &ctx.cfg;
    let js = cfg.joining_system();
    let (a, b) = js.rotation_f64();
    let c = &cfg.constants;
    let constants = proof_constants(c.k, cfg.joining.p, cfg.joining.q, cfg.system.h.d1, a, b, cfg.system.h.lipschitz())?;
    let boundary_increments = (0..10)
        .map(|i| {
            let y = (i as f64 + 0.5) / 10.0;
            boundary_increment_fn(&js, c.k, c.n, y).map(|v| (y, v))
        })
        .collect::<Result<_, _>>()?;
    Ok(ConstantsReport {
        constants,
        boundary_n: c.n,
        boundary_increments,
    })
}

pub fn cmd_constants(ctx: &Context) -> CmdResult<CommandOutput> {
    let r = constants_report(ctx)?;
    let pc = &r.constants;
    Ok(CommandOutput {
        files: vec![ctx.write_json("constants.json", &r)?],
        summary: vec![format!(
            "discriminant {} delta1 {} nu {}",
            fmt_f64(pc.discriminant),
            fmt_f64(pc.delta1),
            fmt_f64(pc.nu)
        )],
        diagnostics: Vec::new(),
    })
}

pub fn cmd_coboundary(ctx: &Context) -> CmdResult<CommandOutput> {
    let cfg = &ctx.cfg;
    let report: CoboundaryReport = coboundary_search(&cfg.joining_system(), cfg.coboundary.k, cfg.coboundary.cutoff)?;
    Ok(CommandOutput {
        files: vec![ctx.write_json("coboundary.json", &report)?],
        summary: vec![format!(
            "coboundary search (k = {}, M = {}): residual {} with {} skipped modes",
            report.k,
            report.cutoff,
            fmt_f64(report.residual),
            report.skipped_modes.len()
        )],
        diagnostics: vec![Diagnostic::at_least("coboundary residual", report.residual, COBOUNDARY_RESIDUAL_MIN)],
    })
}

/// Every experiment of the configuration, followed by `manifest.json`.
pub fn cmd_run(ctx: &Context) -> CmdResult<(CommandOutput, RunManifest)> {
    let mut manifest = RunManifest::new(&ctx.cfg, ctx.cfg.plan.workers);
    let mut all = CommandOutput::default();
    let table = ctx.sieve(ctx.cfg.sieve.bound)?;
    let outputs = [
        ("correlate", cmd_correlate(ctx, Some(&table))?),
        ("bilinear", cmd_bilinear(ctx)?),
        ("weyl", cmd_weyl(ctx)?),
        ("constants", cmd_constants(ctx)?),
        ("coboundary", cmd_coboundary(ctx)?),
    ];
    for (name, out) in outputs {
        manifest.record(name, out.files.clone());
        all.merge(out);
    }
    manifest.diagnostics = all.diagnostics.clone();
    manifest.record("run", ["manifest.json".to_string()]);
    manifest.finish();
    all.files.push(ctx.write_json("manifest.json", &manifest)?);
    Ok((all, manifest))
}
