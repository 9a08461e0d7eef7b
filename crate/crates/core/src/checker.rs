//! Per-run specification checking and reports.
//!
//! Every assertion of a spec is judged at every external configuration of
//! one recorded run. The strongest positive outcome is "no violation found
//! on this run"; nothing is claimed about other drivers or other external
//! modules.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write;
use std::sync::Arc;

use serde::Serialize;

use crate::assertion::{NamedAssertion, Spec};
use crate::ast::{Ident, ModuleDef, OverlapError, Stmt};
use crate::dump::{trace_end_label, ValueJson};
use crate::interpreter::{initial, record_from, Bounds, Trace};
use crate::runtime::{Config, Value};
use crate::sat::{counterexample, evaluate, Caveat, EvalContext, History, Modules};

pub use crate::props::{check_equivalence, check_linking_laws};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    NoViolationFound,
    Violated,
    Withheld,
}

impl Status {
    pub fn exit_code(self) -> i32 {
        match self {
            Status::NoViolationFound => 0,
            Status::Violated => 1,
            Status::Withheld => 2,
        }
    }

    pub fn describe(self) -> &'static str {
        match self {
            Status::NoViolationFound => "no violation found on this run",
            Status::Violated => "violated on this run",
            Status::Withheld => "verdict withheld: bounds were exceeded on this run",
        }
    }
}

/// A failing assertion instance.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Witness {
    pub position: usize,
    /// Index into the burst following `position`, for witnesses found at
    /// internal configurations (`check_internal` only).
    pub micro: Option<usize>,
    pub assertion: String,
    /// Instances of the leading universal quantifiers, outermost first.
    pub bindings: Vec<(Ident, Value)>,
    pub caveats: BTreeSet<Caveat>,
}

/// An assertion instance whose judgment exceeded the bounds.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct WithheldAt {
    pub position: usize,
    pub assertion: String,
    pub caveats: BTreeSet<Caveat>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RunSummary {
    pub positions: usize,
    pub steps: usize,
    pub end: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Verdict {
    pub status: Status,
    pub witnesses: Vec<Witness>,
    pub withheld: Vec<WithheldAt>,
    /// Witnesses at internal configurations. These do not affect `status`.
    pub internal_witnesses: Vec<Witness>,
    pub caveats: BTreeSet<Caveat>,
    pub run: RunSummary,
}

#[derive(Clone, Debug, Default)]
pub struct CheckOptions {
    pub bounds: Bounds,
    pub seed: u64,
    pub check_internal: bool,
    /// Worker threads for judging positions; 0 picks the machine's count.
    pub threads: usize,
}

#[derive(Debug, thiserror::Error)]
pub enum CheckError {
    #[error("cannot link internal and external modules: {0}")]
    Overlap(#[from] OverlapError),
}

/// Records the run of `driver` and checks `spec` along it.
pub fn check_run(
    internal: &ModuleDef,
    external: &ModuleDef,
    driver: Vec<Stmt>,
    spec: &Spec,
    opts: &CheckOptions,
) -> Result<(Verdict, Trace), CheckError> {
    let modules = Modules::new(internal.clone(), external.clone())?;
    let trace = record_from(&modules.internal, &modules.linked, initial(driver), &opts.bounds);
    let verdict = check_trace(&modules, &trace, spec, opts);
    Ok((verdict, trace))
}

enum Finding {
    Holds(BTreeSet<Caveat>),
    Fails(Witness),
    Withheld(WithheldAt),
}

fn judge_one(
    modules: &Modules,
    config: Config,
    history: History,
    bounds: &Bounds,
    position: usize,
    micro: Option<usize>,
    na: &NamedAssertion,
) -> Finding {
    let ctx = EvalContext { modules, config, history, bounds: *bounds };
    let j = evaluate(&ctx, &na.assertion);
    if j.withheld {
        Finding::Withheld(WithheldAt { position, assertion: na.name.clone(), caveats: j.caveats })
    } else if j.holds {
        Finding::Holds(j.caveats)
    } else {
        let bindings = counterexample(&ctx, &na.assertion).unwrap_or_default();
        Finding::Fails(Witness { position, micro, assertion: na.name.clone(), bindings, caveats: j.caveats })
    }
}

/// Judges every assertion at every external position of `trace`. Positions
/// are spread over threads; results are merged in (position, assertion)
/// order, so the verdict does not depend on scheduling.
pub fn check_trace(modules: &Modules, trace: &Trace, spec: &Spec, opts: &CheckOptions) -> Verdict {
    let jobs: Vec<(usize, Option<usize>)> = (0..trace.len())
        .flat_map(|p| {
            let micros = if opts.check_internal { trace.bursts.get(p).map_or(0, Vec::len) } else { 0 };
            std::iter::once((p, None)).chain((0..micros).map(move |k| (p, Some(k))))
        })
        .collect();

    let run_job = |&(p, micro): &(usize, Option<usize>)| -> Vec<Finding> {
        let (config, history) = match micro {
            None => ((*trace.externals[p]).clone(), History::of_trace(trace, p)),
            Some(k) => ((*trace.bursts[p][k]).clone(), History::of_trace(trace, p + 1)),
        };
        spec.assertions
            .iter()
            .map(|na| judge_one(modules, config.clone(), history.clone(), &opts.bounds, p, micro, na))
            .collect()
    };

    let threads = match opts.threads {
        0 => std::thread::available_parallelism().map_or(1, |n| n.get()),
        n => n,
    }
    .min(jobs.len().max(1));
    let results: Vec<Vec<Finding>> = if threads <= 1 {
        jobs.iter().map(run_job).collect()
    } else {
        let chunk = jobs.len().div_ceil(threads);
        std::thread::scope(|s| {
            let handles: Vec<_> =
                jobs.chunks(chunk).map(|c| s.spawn(move || c.iter().map(run_job).collect::<Vec<_>>())).collect();
            handles.into_iter().flat_map(|h| h.join().expect("checker worker panicked")).collect()
        })
    };

    let mut witnesses = Vec::new();
    let mut internal_witnesses = Vec::new();
    let mut withheld = Vec::new();
    let mut caveats = BTreeSet::new();
    for ((_, micro), findings) in jobs.iter().zip(results) {
        for f in findings {
            match f {
                Finding::Holds(c) => caveats.extend(c),
                Finding::Fails(w) => {
                    caveats.extend(w.caveats.iter().copied());
                    if micro.is_some() {
                        internal_witnesses.push(w);
                    } else {
                        witnesses.push(w);
                    }
                }
                Finding::Withheld(w) => {
                    caveats.extend(w.caveats.iter().copied());
                    if micro.is_none() {
                        withheld.push(w);
                    }
                }
            }
        }
    }
    let status = if !witnesses.is_empty() {
        Status::Violated
    } else if !withheld.is_empty() {
        Status::Withheld
    } else {
        Status::NoViolationFound
    };
    Verdict {
        status,
        witnesses,
        withheld,
        internal_witnesses,
        caveats,
        run: RunSummary { positions: trace.len(), steps: trace.steps, end: trace_end_label(&trace.end) },
    }
}

/// Checks a spec at a single configuration with no recorded past.
pub fn check_config(modules: &Modules, config: &Config, spec: &Spec, bounds: &Bounds) -> Verdict {
    let trace = Trace {
        externals: vec![Arc::new(config.clone())],
        bursts: Vec::new(),
        end: crate::interpreter::TraceEnd::Terminated,
        steps: 0,
    };
    let opts = CheckOptions { bounds: *bounds, threads: 1, ..CheckOptions::default() };
    let mut v = check_trace(modules, &trace, spec, &opts);
    v.run.end = "single configuration".into();
    v
}

#[derive(Serialize)]
struct WitnessJson<'a> {
    position: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    micro: Option<usize>,
    assertion: &'a str,
    bindings: BTreeMap<String, ValueJson>,
    /// Quantifier order of `bindings`.
    order: Vec<String>,
    caveats: &'a BTreeSet<Caveat>,
}

impl<'a> From<&'a Witness> for WitnessJson<'a> {
    fn from(w: &'a Witness) -> Self {
        WitnessJson {
            position: w.position,
            micro: w.micro,
            assertion: &w.assertion,
            bindings: w.bindings.iter().map(|(x, v)| (x.to_string(), v.into())).collect(),
            order: w.bindings.iter().map(|(x, _)| x.to_string()).collect(),
            caveats: &w.caveats,
        }
    }
}

#[derive(Serialize)]
struct ReportJson<'a> {
    status: Status,
    summary: &'static str,
    spec: Option<&'a str>,
    witnesses: Vec<WitnessJson<'a>>,
    withheld: &'a [WithheldAt],
    #[serde(skip_serializing_if = "Option::is_none")]
    internal_witnesses: Option<Vec<WitnessJson<'a>>>,
    caveats: &'a BTreeSet<Caveat>,
    seeds: BTreeMap<&'static str, u64>,
    bounds: &'a Bounds,
    run: &'a RunSummary,
}

/// The JSON report. Contains nothing that varies between identical
/// invocations.
pub fn report_json(v: &Verdict, spec: &Spec, opts: &CheckOptions) -> String {
    let r = ReportJson {
        status: v.status,
        summary: v.status.describe(),
        spec: spec.name.as_deref(),
        witnesses: v.witnesses.iter().map(WitnessJson::from).collect(),
        withheld: &v.withheld,
        internal_witnesses: opts.check_internal.then(|| v.internal_witnesses.iter().map(WitnessJson::from).collect()),
        caveats: &v.caveats,
        seeds: [("check", opts.seed)].into_iter().collect(),
        bounds: &opts.bounds,
        run: &v.run,
    };
    serde_json::to_string_pretty(&r).expect("report is serializable")
}

pub fn report_text(v: &Verdict, spec: &Spec) -> String {
    let mut out = String::new();
    let name = spec.name.as_deref().unwrap_or("spec");
    let _ = writeln!(out, "{name}: {}", v.status.describe());
    let _ = writeln!(out, "run: {} external positions, {} steps, {}", v.run.positions, v.run.steps, v.run.end);
    for w in &v.witnesses {
        let b = w.bindings.iter().map(|(x, v)| format!("{x} = {v}")).collect::<Vec<_>>().join(", ");
        let _ = writeln!(
            out,
            "  {} fails at position {}{}",
            w.assertion,
            w.position,
            if b.is_empty() { String::new() } else { format!(" with {b}") }
        );
    }
    for w in &v.withheld {
        let _ = writeln!(out, "  {} withheld at position {}", w.assertion, w.position);
    }
    if !v.internal_witnesses.is_empty() {
        let _ = writeln!(out, "internal configurations (diagnostic only, not part of the verdict):");
        for w in &v.internal_witnesses {
            let _ = writeln!(out, "  {} fails at position {} micro {}", w.assertion, w.position, w.micro.unwrap_or(0));
        }
    }
    if !v.caveats.is_empty() {
        let c = v.caveats.iter().map(|c| format!("{c:?}")).collect::<Vec<_>>().join(", ");
        let _ = writeln!(out, "caveats: {c}");
    }
    out
}
