use super::io::{parse_instance, serialize_instance};
use super::*;
use crate::rational::parse_rational;
use proptest::prelude::*;

pub(crate) const INTRO: &str = r#"{
  "kind": "general",
  "agents": ["X", "Y"],
  "items": ["a", "b", "c"],
  "relevance": {"X": ["a", "b", "c"], "Y": ["b"]},
  "valuations": {"type": "additive",
                 "weights": {"X": {"a": "1", "b": "1", "c": "1/5"}, "Y": {"b": 1}}}
}"#;

fn q(s: &str) -> Rational {
    parse_rational(s).unwrap()
}

fn set(inst: &Instance, names: &[&str]) -> ItemSet {
    names.iter().map(|n| inst.item_id(n).unwrap()).collect()
}

#[test]
fn intro_instance_parses() {
    let inst = parse_instance(INTRO).unwrap();
    let x = inst.agent_id("X").unwrap();
    let y = inst.agent_id("Y").unwrap();
    assert_eq!(inst.relevant(x).len(), 3);
    assert_eq!(inst.relevant_items(y).unwrap(), vec![inst.item_id("b").unwrap()]);
    assert_eq!(inst.value_of(x, &set(&inst, &["b", "c"])), q("6/5"));
    assert_eq!(inst.value_of(y, &ItemSet::new()), q("0"));
    assert_eq!(inst.value_of(y, &set(&inst, &["a", "c"])), q("0"));
}

#[test]
fn named_queries_reject_unknown_ids() {
    let inst = parse_instance(INTRO).unwrap();
    assert_eq!(inst.value_of_named("X", &["a", "c"]).unwrap(), q("6/5"));
    assert!(matches!(inst.value_of_named("Z", &[]), Err(Error::UnknownAgent(_))));
    assert!(matches!(inst.value_of_named("X", &["z"]), Err(Error::UnknownItem(_))));
}

#[test]
fn empty_item_list_is_valid() {
    let text = r#"{"kind":"general","agents":["1","2"],"items":[],"relevance":{},
        "valuations":{"type":"additive","weights":{}}}"#;
    let inst = parse_instance(text).unwrap();
    assert_eq!(inst.m(), 0);
    assert_eq!(inst.range_size(AgentId(0), 10), RangeSize::Exact(1));
}

#[test]
fn non_monotone_table_is_rejected() {
    let text = r#"{"kind":"general","agents":["1"],"items":["a","b"],
        "relevance":{"1":["a","b"]},
        "valuations":{"type":"table","tables":{"1":[
            {"bundle":["a"],"value":"2"},{"bundle":["b"],"value":"1"},
            {"bundle":["a","b"],"value":"1"}]}}}"#;
    assert!(matches!(parse_instance(text), Err(Error::NonMonotone { .. })));
}

#[test]
fn table_relevance_found_through_a_pair() {
    // V({a}) = V({}) = 0 but V({a,b}) = 2 > V({b}) = 1, so a is relevant.
    let text = r#"{"kind":"general","agents":["1"],"items":["a","b"],
        "relevance":{"1":["a","b"]},
        "valuations":{"type":"table","tables":{"1":[
            {"bundle":["a"],"value":"0"},{"bundle":["b"],"value":"1"},
            {"bundle":["a","b"],"value":"2"}]}}}"#;
    let inst = parse_instance(text).unwrap();
    assert_eq!(inst.relevant_items(AgentId(0)).unwrap().len(), 2);
}

#[test]
fn declared_relevance_must_match_weights() {
    let text = r#"{"kind":"general","agents":["X","Y"],"items":["a","b"],
        "relevance":{"X":["a","b"],"Y":["b"]},
        "valuations":{"type":"additive","weights":{"X":{"a":"1"},"Y":{"b":"1"}}}}"#;
    assert!(matches!(parse_instance(text), Err(Error::RelevanceMismatch { .. })));
}

#[test]
fn item_nobody_values_is_rejected() {
    let text = r#"{"kind":"general","agents":["X"],"items":["a","b"],
        "relevance":{"X":["a"]},
        "valuations":{"type":"additive","weights":{"X":{"a":"1"}}}}"#;
    assert!(matches!(parse_instance(text), Err(Error::EmptyAgentList(_))));
}

#[test]
fn negative_weight_is_rejected() {
    let text = r#"{"kind":"general","agents":["X"],"items":["a"],
        "relevance":{"X":["a"]},
        "valuations":{"type":"additive","weights":{"X":{"a":"-1"}}}}"#;
    assert!(matches!(parse_instance(text), Err(Error::NegativeValue { .. })));
}

#[test]
fn unknown_fields_are_schema_errors() {
    let text = r#"{"kind":"general","agents":[],"items":[],"relevance":{},"bogus":1,
        "valuations":{"type":"additive","weights":{}}}"#;
    assert!(matches!(parse_instance(text), Err(Error::Schema(_))));
}

#[test]
fn range_sizes() {
    let text = r#"{"kind":"general","agents":["1","2"],"items":["a","b","c","d"],
        "relevance":{"1":["a","b"],"2":["a","b","c","d"]},
        "valuations":{"type":"additive","weights":{
            "1":{"a":"1","b":"1"},"2":{"a":"1","b":"1","c":"1","d":"1"}}}}"#;
    let inst = parse_instance(text).unwrap();
    assert_eq!(inst.range_size(AgentId(0), 100), RangeSize::Exact(3));
    assert_eq!(inst.range_size(AgentId(1), 100), RangeSize::Exact(5));
    assert_eq!(inst.range_size(AgentId(1), 4), RangeSize::Exceeded);
}

#[test]
fn graph_relevance_is_incidence() {
    let g = GraphInstance::symmetric(
        vec!["u".into(), "v".into(), "w".into()],
        vec![(0, 1, "e0".into(), q("1")), (1, 2, "e1".into(), q("0"))],
        false,
    )
    .unwrap();
    let inst = g.instance();
    assert_eq!(inst.relevant_items(AgentId(1)).unwrap(), vec![ItemId(0), ItemId(1)]);
    assert_eq!(inst.relevant_items(AgentId(2)).unwrap(), vec![ItemId(1)]);
}

#[test]
fn parallel_edges_need_multigraph_kind() {
    let edges = vec![(0, 1, "e0".into(), q("1")), (0, 1, "e1".into(), q("1"))];
    let names = vec!["u".to_string(), "v".to_string()];
    assert!(GraphInstance::symmetric(names.clone(), edges.clone(), false).is_err());
    assert!(GraphInstance::symmetric(names, edges, true).is_ok());
}

#[test]
fn identical_table_restricts_to_relevant_items() {
    let text = r#"{"kind":"general","agents":["1","2"],"items":["a","b"],
        "relevance":{"1":["a","b"],"2":["b"]},
        "valuations":{"type":"identical","shared":{"table":[
            {"bundle":["a"],"value":"1"},{"bundle":["b"],"value":"1"},
            {"bundle":["a","b"],"value":"3/2"}]}}}"#;
    let inst = parse_instance(text).unwrap();
    let all = set(&inst, &["a", "b"]);
    assert_eq!(inst.value_of(AgentId(0), &all), q("3/2"));
    assert_eq!(inst.value_of(AgentId(1), &all), q("1"));
}

#[test]
fn planar_faces_default_ids_and_boundary() {
    let text = r#"{"kind":"planar-faces","agents":["p","q","r","s"],
        "faces":[["p","q","r"],["q","r","s"]],
        "valuations":{"type":"identical","shared":{"additive":{"f0":"1","f1":"1"}}}}"#;
    let inst = parse_instance(text).unwrap();
    assert_eq!(inst.item_names_all(), &["f0".to_string(), "f1".to_string()]);
    let p = PlanarInstance::new(inst).unwrap();
    assert_eq!(p.outer_boundary().len(), 4);
}

#[test]
fn restriction_keeps_values() {
    let inst = parse_instance(INTRO).unwrap();
    let sub = inst.restrict(&[AgentId(0)], &[ItemId(2), ItemId(0)]).unwrap();
    assert_eq!(sub.item_names_all(), &["c".to_string(), "a".to_string()]);
    assert_eq!(sub.value_of(AgentId(0), &[ItemId(0), ItemId(1)].into()), q("6/5"));
}

#[test]
fn int_valuation_scales_consistently() {
    let inst = parse_instance(INTRO).unwrap();
    let iv = inst.int_valuation(AgentId(0)).unwrap();
    // a, b, c at scale 5.
    assert_eq!(iv.value(0b111), 11);
    assert_eq!(iv.max_after_removal(0b111), 10);
    assert_eq!(iv.max_after_removal(0), 0);
}

fn additive_instance(w: &[Vec<u8>]) -> Option<Instance> {
    let n = w.len();
    let m = w[0].len();
    let weights: Vec<Vec<Rational>> = w
        .iter()
        .map(|r| r.iter().map(|&x| Rational::from_integer(x as i128)).collect())
        .collect();
    let relevance = (0..n)
        .map(|i| (0..m).filter(|&a| w[i][a] > 0).map(ItemId).collect())
        .collect();
    Instance::new(
        InstanceKind::General,
        (0..n).map(|i| format!("agent{i}")).collect(),
        (0..m).map(|a| format!("item{a}")).collect(),
        relevance,
        ValuationProfile::Additive { weights },
        Structure::General,
    )
    .ok()
}

proptest! {
    #[test]
    fn additive_round_trip(w in proptest::collection::vec(proptest::collection::vec(0u8..4, 4), 1..4)) {
        if let Some(inst) = additive_instance(&w) {
            let back = parse_instance(&serialize_instance(&inst)).unwrap();
            prop_assert_eq!(back, inst);
        }
    }

    #[test]
    fn additive_values_are_monotone(
        w in proptest::collection::vec(proptest::collection::vec(1u8..5, 5), 2..3),
        small in 0u32..32, extra in 0u32..32,
    ) {
        let inst = additive_instance(&w).unwrap();
        let mk = |mask: u32| -> ItemSet { (0..5).filter(|b| mask & (1 << b) != 0).map(ItemId).collect() };
        for a in inst.agents() {
            prop_assert!(inst.value_of(a, &mk(small)) <= inst.value_of(a, &mk(small | extra)));
        }
    }
}
