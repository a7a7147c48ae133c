mod common;

use searchplan::eval::{f_conditional, f_markov};
use searchplan::formulation::{
    build_csp_l, build_csp_u, build_msp, extract_plan, secant_coefficients, CspOptions,
};
use searchplan::milp::{solve, MilpModel, SolveControls, SolveStatus, VarId};
use searchplan::{derive_effort, EffortMap};
use std::collections::BTreeMap;

fn exact() -> SolveControls {
    SolveControls::default().with_gap(0.0)
}

fn fix_effort(model: &mut MilpModel, effort: &BTreeMap<(usize, usize, usize), VarId>, z: &EffortMap) {
    for (&(l, s, t), &v) in effort {
        model.fix(v, z.get(l, s, t) as f64);
    }
}

#[test]
fn secant_is_exact_at_consecutive_integers() {
    for alpha in [0.05, 0.3, std::f64::consts::LN_2, 1.7] {
        for i in 0..60u64 {
            let (a, b) = secant_coefficients(alpha, i);
            let y = i as f64;
            assert!((a - b * y - (-y * alpha).exp()).abs() <= 1e-12, "alpha {alpha} i {i}");
            assert!((a - b * (y + 1.0) - (-(y + 1.0) * alpha).exp()).abs() <= 1e-12);
            // Under-estimates at every other integer.
            for k in [0.0, y + 2.0, y + 5.0] {
                assert!(a - b * k <= (-k * alpha).exp() + 1e-15);
            }
        }
    }
}

#[test]
fn fixed_effort_reproduces_path_objective() {
    let mut checked = 0;
    for (name, inst) in common::tiny_suite() {
        let cond = inst.target.conditional.as_ref().unwrap();
        let Some(plan) = common::random_feasible_plan(&inst, 3) else { continue };
        let z = derive_effort(&plan, &inst).unwrap();
        let expect = f_conditional(&z, cond, inst.detection.alpha);
        for pre in [false, true] {
            let opts = CspOptions { preprocess: pre, ..CspOptions::default() };
            let (mut m, h) = build_csp_u(&inst, cond, &opts).unwrap();
            fix_effort(&mut m, &h.sp.effort, &z);
            let out = solve(&m, &exact()).unwrap();
            assert_eq!(out.status, SolveStatus::Optimal, "{name}");
            assert!((out.objective.unwrap() - expect).abs() <= 1e-10, "{name} csp-u pre={pre}");

            let (mut m, h) = build_csp_l(&inst, cond, &opts).unwrap();
            fix_effort(&mut m, &h.sp.effort, &z);
            let out = solve(&m, &exact()).unwrap();
            assert!((out.objective.unwrap() - expect).abs() <= 1e-10, "{name} csp-l pre={pre}");
        }
        checked += 1;
    }
    assert!(checked >= 15, "only {checked} instances had a random feasible plan");
}

#[test]
fn fixed_effort_reproduces_markov_objective() {
    for (name, inst) in common::tiny_suite().into_iter().filter(|(n, _)| n.starts_with("t3") || n.starts_with("t4")) {
        let markov = inst.target.markov.as_ref().unwrap();
        let Some(plan) = common::random_feasible_plan(&inst, 5) else { continue };
        let z = derive_effort(&plan, &inst).unwrap();
        let (mut m, h) = build_msp(&inst, markov).unwrap();
        fix_effort(&mut m, &h.sp.effort, &z);
        let out = solve(&m, &exact()).unwrap();
        let expect = f_markov(&z, markov, inst.detection.alpha, 1);
        assert!((out.objective.unwrap() - expect).abs() <= 1e-9, "{name}: {} vs {expect}", out.objective.unwrap());
    }
}

#[test]
fn level_selectors_are_integral() {
    for (name, inst) in common::tiny_suite().into_iter().take(10) {
        let cond = inst.target.conditional.as_ref().unwrap();
        for binary in [true, false] {
            let opts = CspOptions { binary_levels: binary, ..CspOptions::default() };
            let (m, h) = build_csp_u(&inst, cond, &opts).unwrap();
            let out = solve(&m, &exact()).unwrap();
            let x = out.values.unwrap();
            for ws in &h.levels {
                for w in ws {
                    let v = x[w.0];
                    assert!((v - v.round()).abs() <= 1e-6, "{name} binary={binary} w={v}");
                }
            }
        }
    }
}

#[test]
fn extracted_plans_are_feasible_and_consistent() {
    for (name, inst) in common::tiny_suite().into_iter().take(8) {
        let cond = inst.target.conditional.as_ref().unwrap();
        let (m, h) = build_csp_u(&inst, cond, &CspOptions::default()).unwrap();
        let out = solve(&m, &exact()).unwrap();
        let x = out.values.unwrap();
        match extract_plan(&inst, &h.sp, &x, true) {
            Ok((plan, z)) => {
                assert!(searchplan::check_plan_feasibility(&plan, &inst).feasible(), "{name}");
                assert_eq!(derive_effort(&plan, &inst).unwrap(), z);
                let f = f_conditional(&z, cond, inst.detection.alpha);
                assert!((f - out.objective.unwrap()).abs() < 1e-9, "{name}");
            }
            // Relaxed flows may come back fractional; the solve pipeline
            // repairs them.
            Err(e) => assert!(h.sp.relaxed_flows, "{name}: {e}"),
        }
    }
}

#[test]
fn preprocessing_shrinks_effort_domain() {
    let (_, inst) = common::tiny_suite().into_iter().find(|(n, _)| n == "t4-j1-camo").unwrap();
    let cond = inst.target.conditional.as_ref().unwrap();
    let (full, hf) = build_csp_l(&inst, cond, &CspOptions::default()).unwrap();
    let (pre, hp) = build_csp_l(&inst, cond, &CspOptions::preprocessed()).unwrap();
    assert!(hp.sp.effort.len() < hf.sp.effort.len());
    assert!(pre.num_vars() < full.num_vars());
    assert_eq!(hp.survival.len(), hf.survival.len());
}

#[test]
fn mismatched_path_horizon_is_rejected() {
    let (_, inst) = common::tiny_suite().into_iter().next().unwrap();
    let (_, longer) = common::tiny_suite().into_iter().find(|(n, _)| n == "t4-j1").unwrap();
    let cond = longer.target.conditional.as_ref().unwrap();
    assert!(build_csp_u(&inst, cond, &CspOptions::default()).is_err());
    let tight = CspOptions { max_effort: 1, ..CspOptions::default() };
    assert!(build_csp_l(&inst, inst.target.conditional.as_ref().unwrap(), &tight).is_err());
}
