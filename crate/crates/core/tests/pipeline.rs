//! Cross-module tests: instances and plans through JSON, the bound interval
//! against certified plans and genie bounds, and the rate curve of a plan.

use cogwyn_core::converse::{build_asym_genie, build_sym_genie_ub1, genie_entropy_check, verify_reconstruction};
use cogwyn_core::dofcalc::{asym_mg, sym_dof_interval, GainKind, ThresholdRule};
use cogwyn_core::netmodel::sample_generic_gains;
use cogwyn_core::schemes::{asym_plan, best_plan, certify_plan, TransmissionPlan};
use cogwyn_core::simulator::{default_power_grid, slope_estimate};
use cogwyn_core::{Alpha, ChannelModel, CrossGainAssignment, Instance, NetworkParams, Topology};
use proptest::prelude::*;

fn params(k: usize, tl: usize, tr: usize, rl: usize, rr: usize) -> NetworkParams {
    NetworkParams::new(k, tl, tr, rl, rr).unwrap()
}

#[test]
fn instance_json_builds_the_same_model() {
    let inst = Instance {
        params: params(6, 1, 0, 0, 1),
        topology: Topology::Symmetric,
        gains: CrossGainAssignment::EqualAlpha { alpha: 0.4 },
    };
    let text = serde_json::to_string(&inst).unwrap();
    assert!(text.contains("\"K\":6"));
    let back: Instance = serde_json::from_str(&text).unwrap();
    assert_eq!(back, inst);
    assert_eq!(back.build().unwrap(), ChannelModel::equal(inst.params, Topology::Symmetric, 0.4).unwrap());
}

#[test]
fn plan_json_round_trip_keeps_the_certificate() {
    let p = params(13, 1, 1, 0, 1);
    let alpha = Alpha::parse("0.8").unwrap();
    let plan = best_plan(&p, Topology::Symmetric, &alpha).unwrap();
    let back: TransmissionPlan = serde_json::from_str(&serde_json::to_string(&plan).unwrap()).unwrap();
    assert_eq!(back, plan);
    let model = ChannelModel::equal(p, Topology::Symmetric, 0.8).unwrap();
    assert_eq!(certify_plan(&back, &model).unwrap(), certify_plan(&plan, &model).unwrap());
}

#[test]
fn asymmetric_plan_and_genie_meet_under_random_gains() {
    for seed in 0..20u64 {
        let p = params(9 + seed as usize, (seed % 3) as usize, (seed % 2) as usize, 1, (seed % 4) as usize);
        let gains = sample_generic_gains(p.k, Topology::Asymmetric, seed);
        let model = cogwyn_core::netmodel::build_channel(p, Topology::Asymmetric, gains).unwrap();
        let rep = certify_plan(&asym_plan(&p), &model).unwrap();
        assert!(rep.pass, "{rep:?}");
        assert_eq!(rep.certified_dof, asym_mg(&p));
        assert_eq!(build_asym_genie(&p, 0.9).unwrap().bound_value, asym_mg(&p));
    }
}

#[test]
fn first_upper_bound_genie_is_tight_against_its_formula_and_entropy_safe() {
    let p = params(16, 1, 0, 1, 1);
    let g = build_sym_genie_ub1(&p, -0.6, ThresholdRule::Statement).unwrap();
    let report = sym_dof_interval(&p, GainKind::Equal(&Alpha::from(-0.6)));
    let ub1 = report.bounds.iter().find(|b| b.label == "UB1").and_then(|b| b.value).unwrap();
    assert_eq!(g.bound_value, ub1);
    let model = ChannelModel::equal(p, Topology::Symmetric, -0.6).unwrap();
    assert!(verify_reconstruction(&g, &model, 50, 3, 1e-8).unwrap().pass);
    assert!(genie_entropy_check(&g).nonsingular);
}

#[test]
fn rate_curve_slope_matches_the_certified_dof() {
    let p = params(10, 0, 0, 1, 1);
    let alpha = Alpha::parse("root:3:1").unwrap();
    let plan = best_plan(&p, Topology::Symmetric, &alpha).unwrap();
    let model = ChannelModel::equal(p, Topology::Symmetric, alpha.value()).unwrap();
    let rep = certify_plan(&plan, &model).unwrap();
    assert!(rep.pass, "{rep:?}");
    let curve = slope_estimate(&plan, &model, &default_power_grid(), "lb").unwrap();
    assert!((curve.slope_estimate - rep.certified_dof as f64).abs() < 0.05, "{curve:?}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// The merged interval is consistent and the best plan certifies inside it.
    #[test]
    fn best_plan_sits_inside_the_interval(
        k in 2usize..30, tl in 0usize..3, tr in 0usize..3, rl in 0usize..3, rr in 0usize..3, a in 0.15f64..1.9, neg: bool,
    ) {
        let p = params(k, tl, tr, rl, rr);
        let a = if neg { -a } else { a };
        let alpha = Alpha::from(a);
        let report = sym_dof_interval(&p, GainKind::Equal(&alpha));
        prop_assert!(report.interval.lower <= report.interval.upper, "{:?}", report);
        let plan = best_plan(&p, Topology::Symmetric, &alpha).unwrap();
        let model = ChannelModel::equal(p, Topology::Symmetric, a).unwrap();
        let rep = certify_plan(&plan, &model).unwrap();
        prop_assert!(rep.pass, "{:?}", rep);
        prop_assert!(rep.certified_dof <= report.interval.upper);
    }
}
