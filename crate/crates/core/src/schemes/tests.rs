use super::*;
use crate::dofcalc::{asym_mg, asym_gamma, lower_bound_aux, sym_lower_bounds, balanced_case, balanced_interval, BalancedCase};
use crate::netmodel::{sample_generic_gains, build_channel};
use crate::tridiag::Alpha;
use proptest::prelude::*;

fn p(k: usize, tl: usize, tr: usize, rl: usize, rr: usize) -> NetworkParams {
    NetworkParams::new(k, tl, tr, rl, rr).unwrap()
}

fn asym_model(params: NetworkParams, alpha: f64) -> ChannelModel {
    ChannelModel::equal(params, Topology::Asymmetric, alpha).unwrap()
}

fn sym_model(params: NetworkParams, alpha: f64) -> ChannelModel {
    ChannelModel::equal(params, Topology::Symmetric, alpha).unwrap()
}

#[test]
fn asym_plan_examples() {
    let q = p(7, 2, 1, 2, 1);
    let plan = asym_plan(&q);
    assert_eq!(plan.silenced, vec![7]);
    assert_eq!(plan.claimed_dof, 6);
    let rep = certify_plan(&plan, &asym_model(q, 0.8)).unwrap();
    assert!(rep.pass, "{rep:?}");
    assert_eq!(rep.certified_dof, 6);

    let q = p(8, 0, 0, 0, 0);
    let plan = asym_plan(&q);
    assert_eq!(plan.silenced, vec![2, 4, 6, 8]);
    assert_eq!(plan.claimed_dof, 4);

    let q = p(5, 2, 0, 2, 0);
    let plan = asym_plan(&q);
    assert!(plan.silenced.is_empty());
    assert_eq!(plan.claimed_dof, 5);
    assert!(certify_plan(&plan, &asym_model(q, 1.3)).unwrap().pass);
}

#[test]
fn asym_plan_tags_follow_groups() {
    let q = p(8, 2, 1, 2, 1);
    let plan = asym_plan(&q);
    use StrategyTag::*;
    let tags: Vec<StrategyTag> = (1..=8).map(|m| plan.strategies[&m]).collect();
    assert_eq!(tags, vec![SingleUserSICLeft, SingleUserSICLeft, SingleUserSICLeft, DPCLeft, DPCLeft, DPCRightScaled, SingleUserSICRight, Silenced]);
    let q = p(6, 1, 2, 1, 0);
    let plan = asym_plan(&q);
    assert_eq!(plan.strategies[&4], Skipped);
    assert_eq!(plan.strategies[&6], DPCRightScaled);
    assert!(certify_plan(&plan, &asym_model(q, 0.6)).unwrap().pass);
}

#[test]
fn asym_plan_matches_formula_on_grid() {
    for k in 1..=24 {
        for code in 0..81 {
            let (tl, tr, rl, rr) = (code % 3, code / 3 % 3, code / 9 % 3, code / 27);
            let q = p(k, tl, tr, rl, rr);
            let plan = asym_plan(&q);
            let rep = certify_plan(&plan, &asym_model(q, 0.7)).unwrap();
            assert!(rep.pass, "{q:?}: {:?}", rep.failure);
            assert_eq!(rep.certified_dof, asym_mg(&q), "{q:?}");
            let beta = q.sigma() + 2;
            let extra = usize::from(k % beta > q.side().left_sum() + 1);
            assert_eq!(plan.silenced.len(), k / beta + extra);
            assert_eq!(plan.silenced.len(), asym_gamma(&q));
        }
    }
}

#[test]
fn asym_plan_certifies_with_random_gains() {
    let q = p(23, 1, 2, 0, 1);
    let gains = sample_generic_gains(23, Topology::Asymmetric, 5);
    let model = build_channel(q, Topology::Asymmetric, gains).unwrap();
    let rep = certify_plan(&asym_plan(&q), &model).unwrap();
    assert!(rep.pass);
    assert_eq!(rep.certified_dof, asym_mg(&q));
}

#[test]
fn fair_time_sharing_examples() {
    let q = p(8, 0, 0, 0, 0);
    let plans = fair_time_sharing_plan(&q);
    assert_eq!(plans.len(), 2);
    assert_eq!(plans[0].silenced, vec![1, 3, 5, 7]);
    assert_eq!(plans[1].silenced, vec![2, 4, 6, 8]);
    for m in 1..=8 {
        let served = plans.iter().filter(|pl| pl.per_message_prelog[&m] == 1).count();
        assert_eq!(served, 1, "message {m}");
    }
    let q = p(5, 2, 0, 2, 0);
    for plan in fair_time_sharing_plan(&q) {
        assert!(plan.claimed_dof >= 4);
        assert!(certify_plan(&plan, &asym_model(q, 0.9)).unwrap().pass);
    }
}

#[test]
fn fair_time_sharing_average() {
    for k in 1..=30 {
        for code in 0..81 {
            let (tl, tr, rl, rr) = (code % 3, code / 3 % 3, code / 9 % 3, code / 27);
            let q = p(k, tl, tr, rl, rr);
            let plans = fair_time_sharing_plan(&q);
            let beta = q.sigma() + 2;
            let total: usize = plans.iter().map(|pl| pl.claimed_dof).sum();
            assert!(total as f64 / beta as f64 >= (k - asym_gamma(&q)) as f64 - 1.0, "{q:?}");
            // rotations that silence K only because the tail is too long
            let extra = plans
                .iter()
                .enumerate()
                .filter(|(i, pl)| pl.silenced.len() > (i + 1..=k).step_by(beta).count())
                .count();
            let floor = if extra == 0 { beta - 1 } else { beta - 1 - extra.min(beta - 1) };
            for m in 1..=k {
                let served = plans.iter().filter(|pl| pl.per_message_prelog[&m] == 1).count();
                assert!(served >= floor, "{q:?} message {m} served {served} of {beta}");
            }
            for plan in &plans {
                let rep = certify_plan(plan, &asym_model(q, 1.1)).unwrap();
                assert!(rep.pass && rep.certified_dof == plan.claimed_dof, "{q:?}");
            }
        }
    }
}

#[test]
fn example_one_plans() {
    let q = p(7, 1, 1, 1, 1);
    let plan = sym_symmetric_si_plan(&q, &Alpha::from(0.3)).unwrap();
    assert_eq!(plan.silenced, vec![4]);
    assert_eq!(plan.claimed_dof, 6);
    assert!(certify_plan(&plan, &sym_model(q, 0.3)).unwrap().pass);

    let star = Alpha::parse("root:3:1").unwrap();
    let plan = sym_symmetric_si_plan(&q, &star).unwrap();
    assert_eq!(plan.silenced, vec![3, 6]);
    let model = sym_model(q, star.value());
    let rep = certify_plan(&plan, &model).unwrap();
    assert!(rep.pass);
    assert_eq!(rep.certified_dof, 5);

    let forced = sym_plan_with_silencing(&q, &star, &[4]).unwrap();
    assert_eq!(forced.claimed_dof, 6);
    let rep = certify_plan(&forced, &model).unwrap();
    assert!(!rep.pass);
    let f = rep.failure.unwrap();
    assert_eq!(f.check, Check::SubnetDof);
    assert!(f.detail.contains("rank 2 < claimed 3"), "{}", f.detail);
}

#[test]
fn case_one_is_a_single_mimo_subnet() {
    let q = p(3, 1, 1, 1, 1);
    let plan = sym_symmetric_si_plan(&q, &Alpha::from(0.45)).unwrap();
    assert!(plan.silenced.is_empty());
    assert_eq!(plan.subnets.len(), 1);
    assert_eq!(plan.claimed_dof, 3);
    assert!(certify_plan(&plan, &sym_model(q, 0.45)).unwrap().pass);
}

#[test]
fn mimo_modes_follow_reduced_parameters() {
    // t=(2,1), r=(0,1): broadcast subnets
    let q = p(6, 2, 1, 0, 1);
    let plan = sym_symmetric_si_plan(&q, &Alpha::from(0.4)).unwrap();
    assert!(plan.subnets.iter().any(|s| matches!(&s.scheme, SubnetScheme::Mimo { mode: MimoMode::BC, .. })));
    assert!(certify_plan(&plan, &sym_model(q, 0.4)).unwrap().pass);
    // t=(0,1), r=(2,1): multiple-access subnets
    let q = p(6, 0, 1, 2, 1);
    let plan = sym_symmetric_si_plan(&q, &Alpha::from(0.4)).unwrap();
    assert!(plan.subnets.iter().any(|s| matches!(&s.scheme, SubnetScheme::Mimo { mode: MimoMode::MAC, .. })));
    assert!(certify_plan(&plan, &sym_model(q, 0.4)).unwrap().pass);
}

#[test]
fn reduced_mimo_parameters_are_lexicographic() {
    let side = SideInfo::new(1, 2, 2, 1);
    assert_eq!(mimo_reduced_params(&side, 4), side);
    assert_eq!(mimo_reduced_params(&side, 2), SideInfo::new(0, 0, 1, 1));
    assert_eq!(mimo_reduced_params(&side, 3), SideInfo::new(0, 1, 2, 1));
}

#[test]
fn uncovered_gap_and_unbalanced_are_rejected() {
    assert!(matches!(sym_symmetric_si_plan(&p(4, 1, 1, 1, 1), &Alpha::from(0.3)), Err(Error::NotApplicable(_))));
    assert!(matches!(sym_symmetric_si_plan(&p(9, 1, 0, 1, 1), &Alpha::from(0.3)), Err(Error::Precondition(_))));
}

fn sym_alphas() -> Vec<Alpha> {
    let mut out: Vec<Alpha> = [0.27, 0.63, 1.37, -0.51].into_iter().map(Alpha::from).collect();
    for q in 1..=7 {
        for k in 1..=crate::tridiag::positive_root_count(q) {
            out.push(Alpha::critical(q, k, false).unwrap());
        }
    }
    out
}

#[test]
fn balanced_plans_land_in_the_interval() {
    for alpha in sym_alphas() {
        for s in 0..=3 {
            for tl in 0..=s {
                for tr in 0..=s {
                    for k in 1..=22 {
                        let q = p(k, tl, tr, s - tl, s - tr);
                        let Some(iv) = balanced_interval(&q, &alpha).unwrap() else { continue };
                        let plan = sym_symmetric_si_plan(&q, &alpha).unwrap();
                        let rep = certify_plan(&plan, &sym_model(q, alpha.value())).unwrap();
                        assert!(rep.pass, "{q:?} α={alpha}: {:?}", rep.failure);
                        assert!(iv.lower <= rep.certified_dof && rep.certified_dof <= iv.upper, "{q:?} α={alpha}");
                        let case = balanced_case(&q, &alpha).unwrap();
                        if case != BalancedCase::Case2 {
                            assert_eq!(rep.certified_dof, iv.lower, "{q:?} α={alpha} {case:?}");
                        }
                    }
                }
            }
        }
    }
}

#[test]
fn shared_root_needs_the_repaired_pattern() {
    // u_2 and u_5 vanish together at α = ±1
    let q = p(7, 2, 2, 2, 2);
    let one = Alpha::from(1.0);
    assert!(one.u_is_zero(5) && one.u_is_zero(2));
    let plan = sym_symmetric_si_plan(&q, &one).unwrap();
    assert!(!plan.notes.is_empty());
    let rep = certify_plan(&plan, &sym_model(q, 1.0)).unwrap();
    assert!(rep.pass);
    assert_eq!(rep.certified_dof, balanced_interval(&q, &one).unwrap().unwrap().lower);
}

#[test]
fn general_plan_examples() {
    let q = p(12, 1, 0, 1, 0);
    let plan = sym_general_plan(&q, LowerBoundLabel::LB2).unwrap();
    assert_eq!(plan.silenced, vec![1, 3, 4, 6, 7, 9, 10, 12]);
    assert_eq!(plan.claimed_dof, 4);
    assert!(certify_plan(&plan, &sym_model(q, 0.55)).unwrap().pass);

    let q = p(10, 0, 0, 1, 1);
    let plan = sym_general_plan(&q, LowerBoundLabel::LB4).unwrap();
    assert_eq!(plan.silenced, vec![1, 5, 6, 10]);
    assert_eq!(plan.claimed_dof, 6);
    let rep = certify_plan(&plan, &sym_model(q, 0.55)).unwrap();
    assert!(rep.pass);
    assert_eq!(plan.strategies[&3], StrategyTag::CentralMimoDecode);

    let q = p(8, 1, 1, 1, 1);
    let plan = sym_general_plan(&q, LowerBoundLabel::LB1).unwrap();
    assert_eq!(plan.silenced, vec![1, 4, 5, 8]);
    assert_eq!(plan.claimed_dof, 4);
    assert!(certify_plan(&plan, &sym_model(q, 0.55)).unwrap().pass);

    assert!(matches!(sym_general_plan(&p(8, 0, 1, 0, 2), LowerBoundLabel::LB1), Err(Error::NotApplicable(_))));
    assert!(matches!(sym_general_plan(&p(8, 0, 0, 0, 0), LowerBoundLabel::LB1), Err(Error::NotApplicable(_))));
}

#[test]
fn general_plans_match_bounds_on_grid() {
    let labels = ["LB1", "LB2", "LB3", "LB4"];
    for k in 1..=20 {
        for code in 0..256 {
            let (tl, tr, rl, rr) = (code % 4, code / 4 % 4, code / 16 % 4, code / 64);
            let q = p(k, tl, tr, rl, rr);
            let bounds = sym_lower_bounds(&q);
            let aux = lower_bound_aux(&q);
            for (i, label) in LowerBoundLabel::ALL.into_iter().enumerate() {
                let Ok(plan) = sym_general_plan(&q, label) else { continue };
                let b = bounds.iter().find(|b| b.label == labels[i]).unwrap();
                assert_eq!(Some(plan.claimed_dof), b.value, "{q:?} {label}");
                let a = aux[i].1.unwrap();
                assert_eq!(plan.silenced.len(), (2 * a.gamma + a.theta).min(k), "{q:?} {label}");
                let rep = certify_plan(&plan, &sym_model(q, 0.377)).unwrap();
                assert!(rep.pass, "{q:?} {label}: {:?}", rep.failure);
            }
        }
    }
}

#[test]
fn central_decode_fails_at_a_root() {
    let q = p(10, 0, 0, 1, 1);
    let star = Alpha::parse("root:3:1").unwrap();
    let plan = sym_general_plan(&q, LowerBoundLabel::LB4).unwrap();
    let rep = certify_plan(&plan, &sym_model(q, star.value())).unwrap();
    assert!(!rep.pass);
    assert_eq!(rep.failure.unwrap().check, Check::SubnetDof);
}

#[test]
fn tampered_receiver_window_fails_side_information() {
    let q = p(7, 2, 1, 2, 1);
    let mut plan = asym_plan(&q);
    if let SubnetScheme::Chain { receivers, .. } = &mut plan.subnets[0].scheme {
        let prog = receivers.iter_mut().find(|r| r.receiver == 4).unwrap();
        prog.steps.insert(0, DecodeStep { antennas: vec![1], decodes: vec![1] });
    }
    let rep = certify_plan(&plan, &asym_model(q, 0.8)).unwrap();
    assert_eq!(rep.failure.unwrap().check, Check::SideInformation);
}

#[test]
fn tampered_subnet_fails_non_interference() {
    let q = p(8, 0, 0, 0, 0);
    let mut plan = asym_plan(&q);
    plan.silenced.retain(|&x| x != 2);
    let rep = certify_plan(&plan, &asym_model(q, 0.8)).unwrap();
    assert_eq!(rep.failure.unwrap().check, Check::NonInterference);
}

#[test]
fn tampered_claim_fails_sum() {
    let q = p(8, 0, 0, 0, 0);
    let mut plan = asym_plan(&q);
    plan.claimed_dof += 1;
    let rep = certify_plan(&plan, &asym_model(q, 0.8)).unwrap();
    assert_eq!(rep.failure.unwrap().check, Check::DofSum);
}

#[test]
fn mismatched_instance_is_rejected() {
    let plan = asym_plan(&p(8, 0, 0, 0, 0));
    assert!(certify_plan(&plan, &asym_model(p(9, 0, 0, 0, 0), 0.8)).is_err());
    assert!(certify_plan(&plan, &sym_model(p(8, 0, 0, 0, 0), 0.8)).is_err());
}

#[test]
fn plan_json_has_the_documented_keys() {
    let plan = asym_plan(&p(8, 0, 0, 0, 0));
    let v = serde_json::to_value(&plan).unwrap();
    for key in ["silenced", "subnets", "strategies", "claimed_dof", "family"] {
        assert!(v.get(key).is_some(), "{key}");
    }
    assert!(v["subnets"][0].get("tx").is_some() && v["subnets"][0].get("rx").is_some());
    let back: TransmissionPlan = serde_json::from_value(v).unwrap();
    assert_eq!(back, plan);
}

#[test]
fn rates_grow_with_the_claimed_slope() {
    let q = p(9, 1, 0, 1, 1);
    let model = asym_model(q, 0.8);
    let plan = asym_plan(&q);
    let (lo, hi) = (1e8, 1e12);
    let slope = (plan_sum_rate(&plan, &model, hi).unwrap() - plan_sum_rate(&plan, &model, lo).unwrap())
        / (0.5 * (hi / lo).ln());
    assert!((slope - plan.claimed_dof as f64).abs() < 0.05, "{slope}");
}

#[test]
fn best_plan_reaches_the_interval_lower_end() {
    use crate::dofcalc::{sym_dof_interval, GainKind};
    for (q, a) in [(p(7, 1, 1, 1, 1), "0.3"), (p(7, 1, 1, 1, 1), "root:3:1"), (p(11, 2, 0, 1, 1), "0.6"), (p(9, 0, 1, 2, 0), "1.3")] {
        let alpha = Alpha::parse(a).unwrap();
        let plan = best_plan(&q, Topology::Symmetric, &alpha).unwrap();
        let want = sym_dof_interval(&q, GainKind::Equal(&alpha)).interval.lower;
        assert_eq!(plan.claimed_dof, want, "{q:?} at {a}");
        let rep = certify_plan(&plan, &sym_model(q, alpha.value())).unwrap();
        assert!(rep.pass, "{rep:?}");
    }
    // At a root of u_3 the central decoder of the LB4 plan is singular, so a
    // smaller certified plan is chosen.
    let q = p(5, 0, 1, 1, 1);
    let star = Alpha::parse("root:3:1").unwrap();
    let plan = best_plan(&q, Topology::Symmetric, &star).unwrap();
    assert_ne!(plan.family, SchemeFamily::SymPropLB4);
    assert!(certify_plan(&plan, &sym_model(q, star.value())).unwrap().pass);
    let q = p(7, 2, 1, 2, 1);
    assert_eq!(best_plan(&q, Topology::Asymmetric, &Alpha::from(0.5)).unwrap().claimed_dof, asym_mg(&q));
}

proptest! {
    #[test]
    fn general_plans_are_non_interfering(k in 3usize..30, tl in 0usize..3, tr in 0usize..3, rl in 0usize..3, rr in 0usize..3, a in 0.2f64..1.8) {
        let q = p(k, tl, tr, rl, rr);
        let model = sym_model(q, a);
        for label in LowerBoundLabel::ALL {
            if let Ok(plan) = sym_general_plan(&q, label) {
                for (i, s) in plan.subnets.iter().enumerate() {
                    for (j, o) in plan.subnets.iter().enumerate() {
                        if i != j {
                            prop_assert!(model.submatrix(&s.rx, &o.tx).unwrap().iter().all(|x| *x == 0.0));
                        }
                    }
                }
                let claimed: usize = plan.per_message_prelog.values().sum();
                prop_assert_eq!(claimed, plan.claimed_dof);
            }
        }
    }
}
