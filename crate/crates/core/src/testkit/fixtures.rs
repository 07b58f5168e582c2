//! Hand-built models used by tests, the acceptance suite and benches.

use crate::derive::{ElicitationEntry, ElicitationRecord};
use crate::model::{
    Activity, AggregateState::*, Attachment, Flow, FlowModel, InformationStore, ModelKind,
};
use crate::validate::Rule;

/// The example model of the notation overview, rebuilt from its legend: every
/// store kind in single and multiple form, information and experience flows
/// of all three states, an activity with content, control and support sides,
/// a black-box activity and a null flow.
pub fn notation_example() -> FlowModel {
    FlowModel::new("Beispiel", ModelKind::Ist)
        .with_store(InformationStore::liquid("Kunde"))
        .with_store(
            InformationStore::liquid("Team")
                .named("Entwicklerteam")
                .multiple(),
        )
        .with_store(InformationStore::liquid("Analyst").role())
        .with_store(
            InformationStore::liquid("Senior")
                .named("Erfahrener Entwickler")
                .experience(),
        )
        .with_store(InformationStore::solid("Lastenheft"))
        .with_store(InformationStore::solid("Altdokumente").multiple())
        .with_store(InformationStore::undefined("Projektwissen"))
        .with_store(InformationStore::undefined("Archiv").multiple())
        .with_activity(Activity::new("A1").named("Anforderungen erheben"))
        .with_activity(Activity::new("A2").named("Entwurf"))
        .with_flow(Flow::new("f1", "Kunde", "A1", Liquid).with_content("Anforderungen"))
        .with_flow(Flow::new("f2", "Altdokumente", "A1", Solid).with_content("Altsystem"))
        .with_flow(
            Flow::new("f3", "Senior", "A1", Liquid)
                .with_content("Vorgehen")
                .experience()
                .attached(Attachment::Control),
        )
        .with_flow(Flow::new("f4", "Projektwissen", "A1", Undefined).attached(Attachment::Support))
        .with_flow(Flow::new("f5", "A1", "Lastenheft", Solid).with_content("Anforderungen"))
        .with_flow(Flow::new("f6", "Lastenheft", "A2", Solid))
        .with_flow(Flow::new("f7", "A2", "Archiv", Undefined))
        .with_flow(
            Flow::new("f8", "Analyst", "Team", Liquid)
                .with_content("Domänenwissen")
                .experience(),
        )
        .with_flow(Flow::new("f9", "Lastenheft", "Team", Solid).experience())
        .with_flow(Flow::new("f10", "Archiv", "Projektwissen", Undefined).experience())
        .with_flow(
            Flow::new("f11", "Kunde", "Lastenheft", Liquid)
                .with_content("Budget")
                .null(),
        )
}

/// One minimal model per modeling rule, each violating exactly that rule.
pub fn rule_fixtures() -> Vec<(Rule, FlowModel)> {
    let two =
        |a: InformationStore, b: InformationStore| FlowModel::default().with_store(a).with_store(b);
    vec![
        (
            Rule::R1,
            two(
                InformationStore::liquid("Analyst"),
                InformationStore::solid("Spec"),
            )
            .with_flow(Flow::new("f", "Analyst", "Spec", Solid)),
        ),
        (
            Rule::R2,
            two(
                InformationStore::solid("Spec"),
                InformationStore::liquid("Tester"),
            )
            .with_flow(Flow::new("f", "Spec", "Tester", Liquid)),
        ),
        (
            Rule::R3,
            two(InformationStore::liquid("a"), InformationStore::liquid("b"))
                .with_flow(Flow::new("f", "a", "b", Liquid).attached(Attachment::Control)),
        ),
        (
            Rule::R4,
            two(InformationStore::liquid("a"), InformationStore::liquid("b"))
                .with_flow(Flow::new("f", "a", "b", Liquid).undirected()),
        ),
        (
            Rule::R5,
            FlowModel::default()
                .with_store(InformationStore::solid("Spec"))
                .with_activity(
                    Activity::new("A").with_sub_model(
                        FlowModel::default()
                            .with_activity(Activity::new("A1"))
                            .with_flow(Flow::new("g", "Spec", "A1", Solid)),
                    ),
                ),
        ),
        (
            Rule::R6,
            two(InformationStore::liquid("x"), InformationStore::solid("x")),
        ),
    ]
}

/// A document that is written and never read.
pub fn dead_document() -> FlowModel {
    FlowModel::default()
        .with_store(InformationStore::liquid("Analyst"))
        .with_store(InformationStore::solid("Protokoll"))
        .with_flow(Flow::new("f1", "Analyst", "Protokoll", Liquid).with_content("Notizen"))
}

/// Requirements passed from mouth to mouth.
pub fn stille_post() -> FlowModel {
    FlowModel::default()
        .with_store(InformationStore::liquid("Kunde"))
        .with_store(InformationStore::liquid("Vertrieb"))
        .with_store(InformationStore::liquid("Entwickler"))
        .with_flow(Flow::new("f1", "Kunde", "Vertrieb", Liquid).with_content("Anforderungen"))
        .with_flow(Flow::new("f2", "Vertrieb", "Entwickler", Liquid).with_content("Anforderungen"))
}

fn entry(who: &str, what: &str, state: &str, medium: &str) -> ElicitationEntry {
    ElicitationEntry {
        function_or_person: who.into(),
        content: what.into(),
        state: state.into(),
        medium: medium.into(),
    }
}

/// Two interviews about consecutive activities that share the specification.
pub fn specification_records() -> Vec<ElicitationRecord> {
    vec![
        ElicitationRecord {
            organization: "Beispiel GmbH".into(),
            respondent: "Interviewer".into(),
            date: "2010-03-01".into(),
            interviewee: "Analyst".into(),
            context: "Projekt X".into(),
            task_name: "Anforderungsanalyse".into(),
            inputs: vec![entry("Kunde", "Anforderungen", "flüssig", "Gespräch")],
            outputs: vec![entry("Spezifikation", "Anforderungen", "fest", "Word")],
            steering: vec![entry("Projektleiter", "Termine", "flüssig", "Meeting")],
            support: vec![],
        },
        ElicitationRecord {
            organization: "Beispiel GmbH".into(),
            respondent: "Interviewer".into(),
            date: "2010-03-02".into(),
            interviewee: "Entwickler".into(),
            context: "Projekt X".into(),
            task_name: "Entwurf".into(),
            inputs: vec![entry("Spezifikation ", "Anforderungen", "solid", "Word")],
            outputs: vec![entry("Architektur", "Entwurf", "solid", "UML")],
            steering: vec![],
            support: vec![entry("Architekt", "Erfahrung", "liquid", "Gespräch")],
        },
    ]
}

/// Two parts that both mention "Kunde" but disagree on its state.
pub fn state_mismatch_parts() -> Vec<FlowModel> {
    vec![
        FlowModel::default()
            .with_store(InformationStore::liquid("Kunde"))
            .with_activity(Activity::new("A"))
            .with_flow(Flow::new("f1", "Kunde", "A", Liquid)),
        FlowModel::default()
            .with_store(InformationStore::solid("kunde").named("Kunde"))
            .with_activity(Activity::new("B"))
            .with_flow(Flow::new("f2", "kunde", "B", Solid)),
    ]
}
