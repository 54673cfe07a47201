//! Implementations of the single-instance subcommands.

use std::path::Path;

use cogwyn_core::converse::{
    build_asym_genie, build_offset_genie, build_sym_genie_ub1, build_sym_genie_ub2, build_sym_genie_ub3,
    genie_entropy_check, verify_reconstruction, GeniePartition,
};
use cogwyn_core::dofcalc::{
    asym_mg, asym_mg_per_user, sym_dof_interval, sym_lower_bounds, sym_mg_symmetric_si, sym_upper_bounds, DofInterval,
    GainKind, ThresholdRule,
};
use cogwyn_core::netmodel::{build_channel, sample_generic_gains};
use cogwyn_core::schemes::{
    best_plan, certify_plan, sym_general_plan, sym_symmetric_si_plan, LowerBoundLabel, TransmissionPlan,
};
use cogwyn_core::simulator::{approach_grid, fixed_gain_rank_check, geometric_grid, offset_experiment, random_gain_rank_trials, slope_estimate};
use cogwyn_core::tridiag::critical_roots;
use cogwyn_core::{Alpha, ChannelModel, CrossGainAssignment, Instance, NetworkParams, Topology};
use serde_json::json;

use crate::output::{cell, CliError, Report, Rows};
use crate::{ConstructionArg, FamilyArg, GenieArgs, InstanceArgs};

/// An instance with its cross-gains resolved.
#[derive(Clone, Debug)]
pub struct Resolved {
    pub params: NetworkParams,
    pub topology: Topology,
    /// The common gain, when the gains are equal.
    pub alpha: Option<Alpha>,
    /// The gains of the channel model, when known.
    pub gains: Option<CrossGainAssignment>,
}

impl Resolved {
    /// Builds an instance from parameters, a topology and optional gains.
    pub fn new(params: NetworkParams, topology: Topology, alpha: Option<Alpha>, random_seed: Option<u64>) -> Self {
        let gains = match (&alpha, random_seed) {
            (_, Some(seed)) => Some(sample_generic_gains(params.k, topology, seed)),
            (Some(a), None) => Some(CrossGainAssignment::EqualAlpha { alpha: a.value() }),
            (None, None) => None,
        };
        Self { params, topology, alpha, gains }
    }

    /// The common gain, or an input error naming the command's need for it.
    pub fn alpha(&self) -> Result<&Alpha, CliError> {
        self.alpha.as_ref().ok_or_else(|| CliError::invalid("this command needs a common cross-gain (--alpha)"))
    }

    /// The channel model.
    pub fn model(&self) -> Result<ChannelModel, CliError> {
        let gains = self.gains.clone().ok_or_else(|| CliError::invalid("this command needs --alpha or --random-gains"))?;
        Ok(build_channel(self.params, self.topology, gains)?)
    }

    fn is_random(&self) -> bool {
        self.gains.as_ref().is_some_and(|g| g.is_random())
    }
}

fn read_text(path: &Path) -> Result<String, CliError> {
    if path.as_os_str() == "-" {
        std::io::read_to_string(std::io::stdin()).map_err(|e| CliError::invalid(format!("standard input: {e}")))
    } else {
        std::fs::read_to_string(path).map_err(|e| CliError::invalid(format!("{}: {e}", path.display())))
    }
}

/// Parses a cross-gain token.
pub fn parse_alpha(s: &str) -> Result<Alpha, CliError> {
    Ok(Alpha::parse(s)?)
}

/// Resolves the instance flags (or instance file).
pub fn resolve(args: &InstanceArgs, seed: u64) -> Result<Resolved, CliError> {
    let flag_alpha = args.alpha.as_deref().map(parse_alpha).transpose()?;
    let random = args.random_gains.then_some(seed);
    if let Some(path) = &args.instance {
        let inst: Instance = serde_json::from_str(&read_text(path)?)?;
        inst.params.validate()?;
        if flag_alpha.is_some() || random.is_some() {
            return Ok(Resolved::new(inst.params, inst.topology, flag_alpha, random));
        }
        let alpha = inst.gains.equal_alpha().map(Alpha::from);
        return Ok(Resolved { params: inst.params, topology: inst.topology, alpha, gains: Some(inst.gains) });
    }
    let k = args.k.ok_or_else(|| CliError::invalid("--K is required (or --instance)"))?;
    let params = NetworkParams::new(k, args.tl, args.tr, args.rl, args.rr)?;
    Ok(Resolved::new(params, args.topology.unwrap_or(Topology::Symmetric), flag_alpha, random))
}

/// Multiplexing-gain interval of a resolved instance.
pub fn mg_interval(inst: &Resolved) -> Result<DofInterval, CliError> {
    let p = &inst.params;
    Ok(match inst.topology {
        Topology::Asymmetric => DofInterval::exact(asym_mg(p), "asymmetric formula"),
        Topology::Symmetric if inst.is_random() => sym_dof_interval(p, GainKind::Random).interval,
        Topology::Symmetric => {
            let alpha = inst.alpha()?;
            if p.side().is_balanced() {
                sym_mg_symmetric_si(p, alpha)?
            } else {
                sym_dof_interval(p, GainKind::Equal(alpha)).interval
            }
        }
    })
}

/// `mg`: the interval, plus the per-user asymptote of the asymmetric model.
pub fn mg(args: &InstanceArgs, seed: u64) -> Result<Report, CliError> {
    let inst = resolve(args, seed)?;
    let iv = mg_interval(&inst)?;
    let mut report = Report::json(&iv)?;
    if inst.topology == Topology::Asymmetric {
        let r = asym_mg_per_user(&inst.params);
        report = report.note(format!("per-user asymptote {}/{}", r.numer(), r.denom()));
    }
    Ok(report)
}

/// `bounds`: every lower and upper bound of a symmetric instance.
pub fn bounds(args: &InstanceArgs, seed: u64, rule: ThresholdRule) -> Result<Report, CliError> {
    let inst = resolve(args, seed)?;
    if inst.topology != Topology::Symmetric {
        return Err(CliError::invalid("bounds are defined for the symmetric model"));
    }
    let p = &inst.params;
    let (list, interval, flags) = if inst.is_random() {
        let rep = sym_dof_interval(p, GainKind::Random);
        (rep.bounds, rep.interval, rep.flags)
    } else {
        let alpha = inst.alpha()?;
        let mut list = sym_lower_bounds(p);
        list.extend(sym_upper_bounds(p, alpha, rule));
        let rep = sym_dof_interval(p, GainKind::Equal(alpha));
        (list, rep.interval, rep.flags)
    };
    let mut rows = Rows::new(&["label", "value", "applicable", "note"]);
    for b in &list {
        rows.push(vec![
            b.label.clone(),
            b.value.map(|v| v.to_string()).unwrap_or_default(),
            b.applicable.to_string(),
            b.note.clone().unwrap_or_default(),
        ]);
    }
    let consistent = flags.iter().all(|f| !f.starts_with("inconsistent"));
    let mut report = Report::json(&json!({"rule": rule, "bounds": list, "interval": interval, "flags": flags}))?
        .with_rows(rows)
        .with_ok(consistent);
    for f in flags {
        report = report.note(f);
    }
    Ok(report)
}

/// `roots`: the real roots of `u_p`.
pub fn roots(p: usize) -> Result<Report, CliError> {
    let set = critical_roots(p)?;
    let mut rows = Rows::new(&["alpha", "multiplicity"]);
    for r in &set.roots {
        rows.push(vec![r.alpha.to_string(), r.multiplicity.to_string()]);
    }
    Ok(Report::json(&set)?.with_rows(rows))
}

/// Builds a plan for an instance.
pub fn build_plan(inst: &Resolved, construction: ConstructionArg) -> Result<TransmissionPlan, CliError> {
    let p = &inst.params;
    // Every root of every u_p exceeds 1/2 in magnitude, so a smaller value
    // stands in for a generic gain when sizing plans.
    let generic = Alpha::from(0.25);
    let alpha = match (&inst.alpha, inst.topology) {
        (Some(a), _) => a,
        (None, Topology::Asymmetric) => &generic,
        (None, Topology::Symmetric) if inst.is_random() => &generic,
        (None, Topology::Symmetric) => return Err(CliError::invalid("this command needs --alpha or --random-gains")),
    };
    let plan = match construction {
        ConstructionArg::Auto => best_plan(p, inst.topology, alpha)?,
        ConstructionArg::Balanced => sym_symmetric_si_plan(p, alpha)?,
        ConstructionArg::Lb1 => sym_general_plan(p, LowerBoundLabel::LB1)?,
        ConstructionArg::Lb2 => sym_general_plan(p, LowerBoundLabel::LB2)?,
        ConstructionArg::Lb3 => sym_general_plan(p, LowerBoundLabel::LB3)?,
        ConstructionArg::Lb4 => sym_general_plan(p, LowerBoundLabel::LB4)?,
    };
    if plan.instance.topology != inst.topology {
        return Err(CliError::invalid(format!("the {construction:?} construction is for the symmetric model")));
    }
    Ok(plan)
}

fn plan_rows(plan: &TransmissionPlan) -> Rows {
    let mut rows = Rows::new(&["message", "strategy", "prelog"]);
    for (m, tag) in &plan.strategies {
        rows.push(vec![m.to_string(), format!("{tag:?}"), plan.per_message_prelog[m].to_string()]);
    }
    rows
}

/// `plan`: the plan JSON.
pub fn plan(args: &InstanceArgs, seed: u64, construction: ConstructionArg) -> Result<Report, CliError> {
    let inst = resolve(args, seed)?;
    let plan = build_plan(&inst, construction)?;
    let rows = plan_rows(&plan);
    Ok(Report::json(&plan)?.with_rows(rows).note(format!("{:?} claims {}", plan.family, plan.claimed_dof)))
}

/// Reads a plan file and resolves the instance it describes, taking the
/// gains from the flags.
fn plan_and_instance(path: Option<&Path>, args: &InstanceArgs, seed: u64) -> Result<(TransmissionPlan, Resolved), CliError> {
    match path {
        Some(path) => {
            let plan: TransmissionPlan = serde_json::from_str(&read_text(path)?)?;
            let params = NetworkParams::from_side(plan.instance.k, plan.instance.side)?;
            let alpha = args.alpha.as_deref().map(parse_alpha).transpose()?;
            let inst = Resolved::new(params, plan.instance.topology, alpha, args.random_gains.then_some(seed));
            Ok((plan, inst))
        }
        None => {
            let inst = resolve(args, seed)?;
            Ok((build_plan(&inst, ConstructionArg::Auto)?, inst))
        }
    }
}

/// `certify`: runs the four plan checks.
pub fn certify(path: Option<&Path>, args: &InstanceArgs, seed: u64) -> Result<Report, CliError> {
    let (plan, inst) = plan_and_instance(path, args, seed)?;
    let rep = certify_plan(&plan, &inst.model()?)?;
    let mut report = Report::json(&rep)?.with_ok(rep.pass);
    if let Some(f) = &rep.failure {
        report = report.note(format!("check {} failed: {}", f.check.label(), f.detail));
    }
    Ok(report)
}

/// Builds the partition of a genie family together with the model it is checked on.
pub fn build_genie(args: &GenieArgs, seed: u64) -> Result<(GeniePartition, ChannelModel), CliError> {
    let inst = resolve(&args.instance, seed)?;
    let alpha = inst.alpha()?;
    let p = &inst.params;
    let a = alpha.value();
    let rule = |default: ThresholdRule| args.threshold_rule.map(ThresholdRule::from).unwrap_or(default);
    let (partition, topology) = match args.family {
        FamilyArg::Asym => (build_asym_genie(p, a)?, Topology::Asymmetric),
        FamilyArg::Ub1 => (build_sym_genie_ub1(p, a, rule(ThresholdRule::Statement))?, Topology::Symmetric),
        FamilyArg::Ub2 => (build_sym_genie_ub2(p, alpha, rule(ThresholdRule::Prose))?, Topology::Symmetric),
        FamilyArg::Ub3 => (build_sym_genie_ub3(p, alpha, rule(ThresholdRule::Prose))?, Topology::Symmetric),
        FamilyArg::Offset => (build_offset_genie(p, a)?, Topology::Symmetric),
    };
    let model = ChannelModel::equal(*p, topology, a)?;
    Ok((partition, model))
}

/// `converse`: builds the partition and replays its identities.
pub fn converse(args: &GenieArgs, seed: u64, trials: usize, tol: f64) -> Result<Report, CliError> {
    if trials == 0 {
        return Err(CliError::invalid("--trials must be positive"));
    }
    let (partition, model) = build_genie(args, seed)?;
    let rep = verify_reconstruction(&partition, &model, trials, seed, tol)?;
    let ent = genie_entropy_check(&partition);
    let ok = rep.pass && ent.nonsingular;
    let data = json!({
        "family": partition.family,
        "bound": rep.bound,
        "targets": rep.targets,
        "max_abs_error": rep.max_abs_error,
        "trials": rep.trials,
        "tol": rep.tol,
        "pass": rep.pass,
        "entropy_ok": ent.nonsingular,
    });
    let mut report = Report::json(&data)?.with_ok(ok);
    for n in &partition.notes {
        report = report.note(n.clone());
    }
    Ok(report)
}

/// `entropy`: the conditional-covariance check of a genie family.
pub fn entropy(args: &GenieArgs, seed: u64) -> Result<Report, CliError> {
    let (partition, _) = build_genie(args, seed)?;
    let ent = genie_entropy_check(&partition);
    let mut data = serde_json::to_value(&ent)?;
    data["bound"] = json!(partition.bound_value);
    data["family"] = json!(partition.family);
    Ok(Report::json(&data)?.with_ok(ent.nonsingular))
}

/// `simulate`: the rate curve of a plan.
pub fn simulate(path: Option<&Path>, args: &InstanceArgs, seed: u64, grid: (f64, f64, usize)) -> Result<Report, CliError> {
    let (plan, inst) = plan_and_instance(path, args, seed)?;
    let grid = geometric_grid(grid.0, grid.1, grid.2)?;
    let plan_id = format!("{:?}", plan.family);
    let curve = slope_estimate(&plan, &inst.model()?, &grid, &plan_id)?;
    let mut rows = Rows::new(&["P", "sum_rate_nats", "plan_id"]);
    for pt in &curve.points {
        rows.push(vec![pt.p.to_string(), pt.sum_rate_nats.to_string(), curve.plan_id.clone()]);
    }
    let note = format!(
        "slope {:.4} ± {:.4} (claimed {})",
        curve.slope_estimate, curve.slope_stderr, plan.claimed_dof
    );
    Ok(Report::json(&curve)?.with_rows(rows).csv_by_default().note(note))
}

/// `offset`: the offset proxy along an approach to a critical gain.
pub fn offset(
    l: usize,
    k: usize,
    alpha_star: &str,
    exponents: std::ops::RangeInclusive<i32>,
    below: bool,
    power: f64,
) -> Result<Report, CliError> {
    if exponents.is_empty() {
        return Err(CliError::invalid("--emin must not exceed --emax"));
    }
    let star = parse_alpha(alpha_star)?.value();
    let grid = approach_grid(star, exponents, !below);
    let curve = offset_experiment(l, k, star, &grid, &[power])?;
    let mut rows = Rows::new(&["alpha", "offset_proxy"]);
    for s in &curve.samples {
        rows.push(vec![s.alpha.to_string(), s.offset_proxy.to_string()]);
    }
    let note = format!(
        "fitted nu {:.4} (multiplicity {}), monotone {}",
        curve.fitted_nu, curve.multiplicity, curve.monotone
    );
    Ok(Report::json(&curve)?.with_rows(rows).csv_by_default().note(note))
}

/// `random-check`: principal-block rank trials.
pub fn random_check(k: usize, topology: Topology, trials: usize, alpha: Option<&str>, seed: u64) -> Result<Report, CliError> {
    let rep = match alpha {
        Some(a) => fixed_gain_rank_check(k, topology, CrossGainAssignment::EqualAlpha { alpha: parse_alpha(a)?.value() })?,
        None => random_gain_rank_trials(k, topology, trials, seed)?,
    };
    let mut rows = Rows::new(&["trial", "start", "size"]);
    for f in &rep.examples {
        rows.push(vec![f.trial.to_string(), f.start.to_string(), f.size.to_string()]);
    }
    let data = serde_json::to_value(&rep)?;
    let summary = ["K", "topology", "trials", "max_size", "failures"]
        .iter()
        .map(|key| format!("{key}={}", cell(&data[*key])))
        .collect::<Vec<_>>()
        .join(" ");
    let ok = rep.failures == 0;
    let mut report = Report::json(&rep)?.with_ok(ok).note(summary);
    if !rep.examples.is_empty() {
        report = report.with_rows(rows);
    }
    Ok(report)
}
