mod common;

use std::str::FromStr;

use searchplan::model::{line_example, EntryMode};
use searchplan::report::{parse_plan_dump, write_plan_dump};
use searchplan::{check_plan_feasibility, derive_effort, grid_instance, GridOptions, Method, SolveReport};

const TWO_CLASS_PLAN: &str = include_str!("data/two_class_9x9_plan.txt");

#[test]
fn method_names_round_trip() {
    for m in Method::ALL {
        assert_eq!(Method::from_str(m.name()).unwrap(), m);
        assert_eq!(m.to_string(), m.name());
        assert_eq!(serde_json::to_string(&m).unwrap(), format!("\"{}\"", m.name()));
    }
    assert!(Method::from_str("simplex").is_err());
}

#[test]
fn plan_dumps_round_trip() {
    for (name, inst) in common::tiny_suite() {
        let Some(plan) = common::random_feasible_plan(&inst, 11) else { continue };
        let text = write_plan_dump(&plan, &inst).unwrap();
        assert_eq!(text.lines().count(), inst.classes.iter().map(|c| c.count as usize).sum::<usize>());
        assert_eq!(parse_plan_dump(&text, &inst).unwrap(), plan, "{name}\n{text}");
    }
}

#[test]
fn line_dump_without_class_names() {
    let inst = line_example();
    let plan = parse_plan_dump("# one searcher\n1, 2, 3, s-, s-, s-\n", &inst).unwrap();
    assert!(check_plan_feasibility(&plan, &inst).feasible());
    let plan = parse_plan_dump("s+, s+, 1, 2, 3, s\u{2212}", &inst).unwrap();
    assert!(check_plan_feasibility(&plan, &inst).feasible());
    assert!(parse_plan_dump("s+, 1, 2", &inst).is_err());
    assert!(parse_plan_dump("9: s+, s+, 1, 2, 3, s-", &inst).is_err());
    assert!(parse_plan_dump("s+, s+, 1, 7, 3, s-", &inst).is_err());
}

#[test]
fn two_class_reference_plan_is_feasible() {
    let inst = grid_instance(&GridOptions::two_class(9, 5, 15).with_entry(EntryMode::left_of_centre(9))).unwrap();
    let plan = parse_plan_dump(TWO_CLASS_PLAN, &inst).unwrap();
    let report = check_plan_feasibility(&plan, &inst);
    assert!(report.feasible(), "{:?}", report.violations);
    let z = derive_effort(&plan, &inst).unwrap();
    // 12 + 12 + 9 + 9 + 9 looks at grid cells.
    let looks: u32 = z.nonzero().filter(|&(_, s, _, _)| s < 81).map(|(_, _, _, v)| v).sum();
    assert_eq!(looks, 51);
    let again = parse_plan_dump(&write_plan_dump(&plan, &inst).unwrap(), &inst).unwrap();
    assert_eq!(again, plan);
}

#[test]
fn one_more_mission_period_breaks_the_reference_plan() {
    let inst = grid_instance(&GridOptions::two_class(9, 5, 15).with_entry(EntryMode::left_of_centre(9))).unwrap();
    let text = TWO_CLASS_PLAN.replacen(
        "2: s+, s+, s+, s+, s+, s+, (4,1), (4,2), (4,3), (4,4), (4,5), (4,6)",
        "2: s+, s+, s+, s+, s+, (4,1), (4,1), (4,2), (4,3), (4,4), (4,5), (4,6)",
        1,
    );
    let plan = parse_plan_dump(&text, &inst).unwrap();
    assert!(!check_plan_feasibility(&plan, &inst).feasible());
}

#[test]
fn trace_csv_has_a_header() {
    let mut r = SolveReport::new(Method::Sca);
    let mut buf = Vec::new();
    r.write_trace(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert!(text.starts_with("event,iteration,upper,lower,gap,delta,seconds,cuts,reinstated,lazy_pending"));
    r.trace.push(Default::default());
    let mut buf = Vec::new();
    r.write_trace(&mut buf).unwrap();
    assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 2);
}
