use flow_core::goals::{
    builtin_catalog, select_techniques, Distribution, GoalScope, GoalSpec, GoalTime, Intent,
    ProcessStyle, ProjectParams,
};
use proptest::prelude::*;

#[test]
fn cube_has_sixteen_valid_goals() {
    assert_eq!(GoalSpec::all().count(), 18);
    let valid: Vec<_> = GoalSpec::all().filter(GoalSpec::is_valid).collect();
    assert_eq!(valid.len(), 16);
    assert!(valid
        .iter()
        .all(|g| !(g.time == GoalTime::After && g.scope == GoalScope::Organization)));
    assert!(GoalSpec::new(Intent::Improve, GoalTime::After, GoalScope::Organization).is_err());
}

#[test]
fn every_valid_goal_gets_an_answer() {
    for g in GoalSpec::all().filter(GoalSpec::is_valid) {
        let s = select_techniques(g, &ProjectParams::default(), &builtin_catalog()).unwrap();
        assert_eq!(s.goal, g);
        assert!(s.complete || !s.missing.is_empty());
    }
}

fn params() -> impl Strategy<Value = ProjectParams> {
    (
        proptest::option::of(1u32..200),
        proptest::option::of(prop::sample::select(vec!["Automotive", "Banking", "Web"])),
        proptest::option::of(prop::sample::select(vec![
            ProcessStyle::Agile,
            ProcessStyle::ProcessDriven,
            ProcessStyle::Any,
        ])),
        proptest::option::of(prop::sample::select(vec!["V-Modell XT", "Scrum", "RUP"])),
        proptest::option::of(prop::sample::select(vec![
            Distribution::Local,
            Distribution::DistributedVertical,
            Distribution::DistributedHorizontal,
            Distribution::DistributedOther,
        ])),
    )
        .prop_map(
            |(team_size, domain, process_style, process_model, distribution)| ProjectParams {
                team_size,
                budget: None,
                domain: domain.map(String::from),
                process_style,
                process_model: process_model.map(String::from),
                distribution,
                misc: Vec::new(),
            },
        )
}

fn names(goal: GoalSpec, p: &ProjectParams) -> Vec<String> {
    select_techniques(goal, p, &builtin_catalog())
        .unwrap()
        .matches
        .into_iter()
        .map(|m| m.technique.name)
        .collect()
}

proptest! {
    #[test]
    fn forgetting_a_parameter_never_loses_a_technique(p in params(), field in 0usize..5, goal in 0usize..16) {
        let goal = GoalSpec::all().filter(GoalSpec::is_valid).nth(goal).unwrap();
        let mut relaxed = p.clone();
        match field {
            0 => relaxed.team_size = None,
            1 => relaxed.domain = None,
            2 => relaxed.process_style = None,
            3 => relaxed.process_model = None,
            _ => relaxed.distribution = None,
        }
        let strict = names(goal, &p);
        let loose = names(goal, &relaxed);
        prop_assert!(strict.iter().all(|n| loose.contains(n)), "{:?} vs {:?}", strict, loose);
    }
}
