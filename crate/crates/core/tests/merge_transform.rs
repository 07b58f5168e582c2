use flow_core::derive::ingest_elicitation;
use flow_core::merge::{merge_models, structural_signature};
use flow_core::testkit::fixtures;
use flow_core::testkit::gen::{self, ModelShape};
use flow_core::transform::{apply_transformation, NewStore, Transformation};
use flow_core::{
    validate, Activity, AggregateState, Attachment, Flow, FlowModel, InformationStore, ModelKind,
};
use proptest::prelude::*;
use rand::seq::IndexedRandom;
use rand::Rng;

fn parts(seed: u64) -> Vec<FlowModel> {
    let mut rng = gen::rng(seed);
    ["p", "q", "r"]
        .iter()
        .map(|prefix| {
            let shape = ModelShape {
                id_prefix: prefix.to_string(),
                awkward_text: false,
                ..ModelShape::default()
            };
            let mut m = gen::valid_model(&mut rng, &shape);
            m.kind = ModelKind::Ist;
            m
        })
        .collect()
}

#[test]
fn shared_document_becomes_one_store() {
    let models = ingest_elicitation(&fixtures::specification_records()).unwrap();
    let merged = merge_models(&models).unwrap();
    assert!(merged.issues.is_empty());
    let specs: Vec<_> = merged
        .model
        .stores
        .iter()
        .filter(|s| s.name == "Spezifikation")
        .collect();
    assert_eq!(specs.len(), 1);
    assert!(validate(&merged.model).iter().all(|v| !v.is_error()));
}

#[test]
fn elicitation_then_merge_equals_direct_construction() {
    use AggregateState::*;
    let models = ingest_elicitation(&fixtures::specification_records()).unwrap();
    let merged = merge_models(&models).unwrap().model;
    let direct = FlowModel::new("Anforderungsanalyse", ModelKind::Ist)
        .with_store(InformationStore::liquid("Kunde"))
        .with_store(InformationStore::solid("Spezifikation"))
        .with_store(InformationStore::liquid("Projektleiter"))
        .with_store(InformationStore::solid("Architektur"))
        .with_store(InformationStore::liquid("Architekt"))
        .with_activity(Activity::new("Anforderungsanalyse"))
        .with_activity(Activity::new("Entwurf"))
        .with_flow(
            Flow::new(
                "Anforderungsanalyse.in1",
                "Kunde",
                "Anforderungsanalyse",
                Liquid,
            )
            .with_content("Anforderungen"),
        )
        .with_flow(
            Flow::new(
                "Anforderungsanalyse.out1",
                "Anforderungsanalyse",
                "Spezifikation",
                Solid,
            )
            .with_content("Anforderungen"),
        )
        .with_flow(
            Flow::new(
                "Anforderungsanalyse.ctl1",
                "Projektleiter",
                "Anforderungsanalyse",
                Liquid,
            )
            .with_content("Termine")
            .attached(Attachment::Control),
        )
        .with_flow(
            Flow::new("Entwurf.in1", "Spezifikation", "Entwurf", Solid)
                .with_content("Anforderungen"),
        )
        .with_flow(
            Flow::new("Entwurf.out1", "Entwurf", "Architektur", Solid).with_content("Entwurf"),
        )
        .with_flow(
            Flow::new("Entwurf.sup1", "Architekt", "Entwurf", Liquid)
                .with_content("Erfahrung")
                .attached(Attachment::Support),
        );
    assert!(merged.is_isomorphic(&direct), "{merged:#?}");
}

#[test]
fn state_mismatch_is_reported_once() {
    let merged = merge_models(&fixtures::state_mismatch_parts()).unwrap();
    assert_eq!(merged.issues.len(), 1);
    let issue = &merged.issues[0];
    assert_eq!(
        (issue.existing.as_str(), issue.incoming.as_str()),
        ("Kunde", "kunde")
    );
    assert_eq!(merged.model.stores.len(), 2);
}

#[test]
fn merging_one_part_is_identity() {
    let m = fixtures::notation_example();
    let merged = merge_models(std::slice::from_ref(&m)).unwrap();
    assert!(merged.model.is_isomorphic(&m));
}

/// A transformation of `kind` built from the elements of `m`. It may still
/// fail a precondition; the caller only counts successes.
fn random_transformation(rng: &mut impl Rng, m: &FlowModel, kind: usize) -> Option<Transformation> {
    // Flows touching a detail-modeled activity would change its interface.
    let plain = |f: &&Flow| {
        !f.is_null_flow
            && [&f.source, &f.target]
                .iter()
                .all(|e| m.activity(e).is_none_or(|a| a.sub_model.is_none()))
    };
    let flows: Vec<&Flow> = m.flows.iter().filter(plain).collect();
    let fresh = NewStore {
        id: m.fresh_id("doc"),
        name: "Protokoll".into(),
    };
    match kind {
        0 => {
            let liquid: Vec<_> = flows
                .iter()
                .filter(|f| f.state != AggregateState::Solid && f.directed)
                .collect();
            let f = liquid.choose(rng)?;
            Some(Transformation::Solidify {
                flow: f.id.clone(),
                document: fresh,
            })
        }
        1 => {
            let hops: Vec<(&Flow, &Flow)> = flows
                .iter()
                .flat_map(|a| flows.iter().map(move |b| (*a, *b)))
                .filter(|(a, b)| a.target == b.source && a.id != b.id && a.directed && b.directed)
                .collect();
            let (a, b) = hops.choose(rng)?;
            Some(Transformation::Liquefy {
                inflow: a.id.clone(),
                outflow: b.id.clone(),
            })
        }
        2 => {
            let f = flows
                .iter()
                .filter(|f| f.directed)
                .collect::<Vec<_>>()
                .choose(rng)
                .copied()?;
            let via = m
                .stores
                .iter()
                .filter(|s| !f.touches(&s.id))
                .collect::<Vec<_>>()
                .choose(rng)
                .copied();
            Some(match via {
                Some(s) if rng.random_bool(0.5) => Transformation::Detour {
                    flow: f.id.clone(),
                    via: s.id.clone(),
                    create: None,
                },
                _ => Transformation::Detour {
                    flow: f.id.clone(),
                    via: fresh.id,
                    create: Some(("Zwischenablage".into(), AggregateState::Solid)),
                },
            })
        }
        3 => {
            let f = flows.choose(rng)?;
            let target = m.stores.choose(rng)?;
            Some(Transformation::Branch {
                flow: f.id.clone(),
                new_target: target.id.clone(),
            })
        }
        4 => {
            let pairs: Vec<_> = m
                .stores
                .iter()
                .flat_map(|a| m.stores.iter().map(move |b| (a, b)))
                .filter(|(a, b)| a.id != b.id && a.state == b.state)
                .collect();
            let (a, b) = pairs.choose(rng)?;
            Some(Transformation::Merge {
                keep: a.id.clone(),
                absorb: b.id.clone(),
            })
        }
        _ => {
            let hops: Vec<(&Flow, &Flow)> = flows
                .iter()
                .flat_map(|a| flows.iter().map(move |b| (*a, *b)))
                .filter(|(a, b)| a.target == b.source && a.source != b.target)
                .collect();
            let (a, b) = hops.choose(rng)?;
            Some(Transformation::Shortcut {
                source: a.source.clone(),
                intermediate: a.target.clone(),
                target: b.target.clone(),
            })
        }
    }
}

#[test]
fn every_generated_kind_applies_somewhere() {
    let mut applied = [0usize; 6];
    for seed in 0..400 {
        let mut rng = gen::rng(seed);
        let m = gen::valid_model(&mut rng, &ModelShape::default());
        for (kind, count) in applied.iter_mut().enumerate() {
            if let Some(t) = random_transformation(&mut rng, &m, kind) {
                if apply_transformation(&m, &t).is_ok() {
                    *count += 1;
                }
            }
        }
    }
    assert!(applied.iter().all(|&n| n >= 10), "{applied:?}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn merge_is_associative(seed in any::<u64>()) {
        let [a, b, c]: [FlowModel; 3] = parts(seed).try_into().unwrap();
        let flat = merge_models(&[a.clone(), b.clone(), c.clone()]);
        let left = merge_models(&[a.clone(), b.clone()]).and_then(|ab| merge_models(&[ab.model, c.clone()]));
        let right = merge_models(&[b, c]).and_then(|bc| merge_models(&[a, bc.model]));
        match (flat, left, right) {
            (Ok(flat), Ok(left), Ok(right)) => {
                let sig = structural_signature(&flat.model);
                prop_assert_eq!(&sig, &structural_signature(&left.model));
                prop_assert_eq!(&sig, &structural_signature(&right.model));
                let errors: Vec<_> = validate(&flat.model).into_iter().filter(|v| v.is_error()).collect();
                prop_assert!(errors.is_empty(), "{:?}", errors);
            }
            (flat, left, right) => {
                prop_assert!(flat.is_err() && left.is_err() && right.is_err());
            }
        }
    }

    #[test]
    fn transformations_are_pure_and_keep_models_valid(seed in any::<u64>(), kind in 0usize..6) {
        let mut rng = gen::rng(seed);
        let m = gen::valid_model(&mut rng, &ModelShape::default());
        let before = m.clone();
        if let Some(t) = random_transformation(&mut rng, &m, kind) {
            let result = apply_transformation(&m, &t);
            prop_assert_eq!(&m, &before);
            if let Ok(out) = result {
                let errors: Vec<_> = validate(&out).into_iter().filter(|v| v.is_error()).collect();
                prop_assert!(errors.is_empty(), "{:?} after {:?}", errors, t);
            }
        }
    }
}
