//! The `sweep` subcommand: checks over a parameter grid, run concurrently.
//!
//! Instances are enumerated in the nested order topology, K, t_ℓ, t_r, r_ℓ,
//! r_r, α and rows are emitted in that order whatever the completion order.

use std::path::Path;

use cogwyn_core::converse::verify_reconstruction;
use cogwyn_core::schemes::certify_plan;
use cogwyn_core::{Alpha, NetworkParams, Topology};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::commands::{build_genie, build_plan, mg_interval, Resolved};
use crate::output::{CliError, Report, Rows};
use crate::{ConstructionArg, FamilyArg, GenieArgs, InstanceArgs};

/// Checks a sweep can run on each instance.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepCheck {
    /// Multiplexing-gain interval.
    Mg,
    /// Best plan certified on the equal-gain model.
    Certify,
    /// Reconstruction replay of the first upper bound (or the asymmetric genie).
    Converse,
}

fn default_alpha() -> Vec<Alpha> {
    vec![Alpha::parse("0.5").expect("valid literal")]
}

fn default_topology() -> Vec<Topology> {
    vec![Topology::Symmetric]
}

fn default_checks() -> Vec<SweepCheck> {
    vec![SweepCheck::Mg]
}

fn default_trials() -> usize {
    20
}

/// The sweep spec file.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    #[serde(rename = "K")]
    pub k: Vec<usize>,
    pub tl: Vec<usize>,
    pub tr: Vec<usize>,
    pub rl: Vec<usize>,
    pub rr: Vec<usize>,
    #[serde(default = "default_alpha")]
    pub alpha: Vec<Alpha>,
    #[serde(default = "default_topology")]
    pub topology: Vec<Topology>,
    #[serde(default = "default_checks")]
    pub checks: Vec<SweepCheck>,
    /// Replay trials of the converse check.
    #[serde(default = "default_trials")]
    pub trials: usize,
}

/// One instance of the grid.
#[derive(Clone, Debug)]
struct Point {
    index: usize,
    topology: Topology,
    k: usize,
    side: [usize; 4],
    alpha: Alpha,
}

/// One output row.
#[derive(Clone, Debug, Default, Serialize)]
pub struct SweepRow {
    pub index: usize,
    pub topology: String,
    #[serde(rename = "K")]
    pub k: usize,
    pub tl: usize,
    pub tr: usize,
    pub rl: usize,
    pub rr: usize,
    pub alpha: String,
    pub mg_lower: Option<usize>,
    pub mg_upper: Option<usize>,
    pub plan_claim: Option<usize>,
    pub certified_dof: Option<usize>,
    pub certify_pass: Option<bool>,
    pub converse_bound: Option<usize>,
    pub converse_error: Option<f64>,
    pub converse_pass: Option<bool>,
    /// Verification failed (a check did not pass or raised a structural error).
    pub failed: bool,
    pub note: String,
}

const HEADERS: [&str; 18] = [
    "index",
    "topology",
    "K",
    "tl",
    "tr",
    "rl",
    "rr",
    "alpha",
    "mg_lower",
    "mg_upper",
    "plan_claim",
    "certified_dof",
    "certify_pass",
    "converse_bound",
    "converse_error",
    "converse_pass",
    "failed",
    "note",
];

fn opt<T: ToString>(v: &Option<T>) -> String {
    v.as_ref().map(ToString::to_string).unwrap_or_default()
}

impl SweepRow {
    fn cells(&self) -> Vec<String> {
        vec![
            self.index.to_string(),
            self.topology.clone(),
            self.k.to_string(),
            self.tl.to_string(),
            self.tr.to_string(),
            self.rl.to_string(),
            self.rr.to_string(),
            self.alpha.clone(),
            opt(&self.mg_lower),
            opt(&self.mg_upper),
            opt(&self.plan_claim),
            opt(&self.certified_dof),
            opt(&self.certify_pass),
            opt(&self.converse_bound),
            opt(&self.converse_error),
            opt(&self.converse_pass),
            self.failed.to_string(),
            self.note.clone(),
        ]
    }
}

fn enumerate(spec: &SweepSpec) -> Vec<Point> {
    let mut out = Vec::new();
    for &topology in &spec.topology {
        for &k in &spec.k {
            for &tl in &spec.tl {
                for &tr in &spec.tr {
                    for &rl in &spec.rl {
                        for &rr in &spec.rr {
                            for alpha in &spec.alpha {
                                out.push(Point { index: out.len(), topology, k, side: [tl, tr, rl, rr], alpha: alpha.clone() });
                            }
                        }
                    }
                }
            }
        }
    }
    out
}

/// Records an error: structural and numerical failures fail the row, other
/// errors only mark the check as not applicable.
fn record(row: &mut SweepRow, what: &str, e: CliError) {
    if e.code == 1 {
        row.failed = true;
    }
    if !row.note.is_empty() {
        row.note.push_str("; ");
    }
    row.note.push_str(&format!("{what}: {}", e.message));
}

fn run_point(pt: &Point, spec: &SweepSpec, seed: u64) -> SweepRow {
    let [tl, tr, rl, rr] = pt.side;
    let mut row = SweepRow {
        index: pt.index,
        topology: pt.topology.to_string(),
        k: pt.k,
        tl,
        tr,
        rl,
        rr,
        alpha: pt.alpha.to_string(),
        ..SweepRow::default()
    };
    let params = match NetworkParams::new(pt.k, tl, tr, rl, rr) {
        Ok(p) => p,
        Err(e) => {
            record(&mut row, "instance", e.into());
            return row;
        }
    };
    let inst = Resolved::new(params, pt.topology, Some(pt.alpha.clone()), None);
    if spec.checks.contains(&SweepCheck::Mg) {
        match mg_interval(&inst) {
            Ok(iv) => {
                row.mg_lower = Some(iv.lower);
                row.mg_upper = Some(iv.upper);
            }
            Err(e) => record(&mut row, "mg", e),
        }
    }
    if spec.checks.contains(&SweepCheck::Certify) {
        let outcome = build_plan(&inst, ConstructionArg::Auto).and_then(|plan| {
            row.plan_claim = Some(plan.claimed_dof);
            Ok(certify_plan(&plan, &inst.model()?)?)
        });
        match outcome {
            Ok(rep) => {
                row.certified_dof = Some(rep.certified_dof);
                row.certify_pass = Some(rep.pass);
                row.failed |= !rep.pass;
            }
            Err(e) => record(&mut row, "certify", e),
        }
    }
    if spec.checks.contains(&SweepCheck::Converse) {
        let family = match pt.topology {
            Topology::Asymmetric => FamilyArg::Asym,
            Topology::Symmetric => FamilyArg::Ub1,
        };
        let args = GenieArgs {
            family,
            threshold_rule: None,
            instance: InstanceArgs {
                instance: None,
                k: Some(pt.k),
                tl,
                tr,
                rl,
                rr,
                topology: Some(pt.topology),
                alpha: Some(pt.alpha.to_string()),
                random_gains: false,
            },
        };
        let outcome = build_genie(&args, seed)
            .and_then(|(g, model)| Ok(verify_reconstruction(&g, &model, spec.trials, seed, 1e-8)?));
        match outcome {
            Ok(rep) => {
                row.converse_bound = Some(rep.bound);
                row.converse_error = Some(rep.max_abs_error);
                row.converse_pass = Some(rep.pass);
                row.failed |= !rep.pass;
            }
            Err(e) => record(&mut row, "converse", e),
        }
    }
    row
}

/// Runs the sweep described by the spec file with `jobs` worker threads.
pub fn run(path: &Path, jobs: usize, seed: u64) -> Result<Report, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::invalid(format!("{}: {e}", path.display())))?;
    let spec: SweepSpec = serde_json::from_str(&text)?;
    let points = enumerate(&spec);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| CliError::invalid(format!("thread pool: {e}")))?;
    let rows: Vec<SweepRow> = pool.install(|| points.par_iter().map(|pt| run_point(pt, &spec, seed)).collect());
    let failed = rows.iter().filter(|r| r.failed).count();
    let mut table = Rows::new(&HEADERS);
    for r in &rows {
        table.push(r.cells());
    }
    Ok(Report::json(&rows)?
        .with_rows(table)
        .csv_by_default()
        .with_ok(failed == 0)
        .note(format!("{} instances, {failed} failed", rows.len())))
}
