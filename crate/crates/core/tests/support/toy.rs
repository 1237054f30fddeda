//! A three-operator knowledge base small enough to enumerate by hand, and
//! random predicate streams over it.

use std::sync::Arc;

use planrec::discourse::Cue;
use planrec::knowledge::{ParamValue, Unit};
use planrec::{KnowledgeBase, Predicate};
use proptest::prelude::*;

pub const TOY_KB: &str = r#"{
  "domains": {
    "place": {"symbols": ["home", "park", "shop"]},
    "hour": {"interval": [0, 3], "unit": "minute"}
  },
  "operators": [
    {
      "name": "TRIP",
      "params": [
        {"name": "from", "domain": "place", "required": true},
        {"name": "to", "domain": "place", "required": true},
        {"name": "at", "domain": "hour"}
      ],
      "preconditions": [{"predicate": "AT", "args": {"place": "from"}}],
      "effects": [
        {"predicate": "TRIP", "args": {"from": "from", "to": "to", "at": "at"}},
        {"predicate": "AT", "args": {"place": "to"}}
      ]
    },
    {
      "name": "RIDE",
      "params": [
        {"name": "from", "domain": "place", "required": true},
        {"name": "to", "domain": "place", "required": true},
        {"name": "at", "domain": "hour", "required": true}
      ],
      "effects": [{"predicate": "RIDE", "args": {"from": "from", "to": "to", "at": "at"}}],
      "body": ["TRIP"]
    },
    {
      "name": "STAY",
      "params": [
        {"name": "place", "domain": "place", "required": true},
        {"name": "at", "domain": "hour", "required": true}
      ],
      "preconditions": [{"predicate": "AT", "args": {"place": "place"}}],
      "effects": [{"predicate": "STAY", "args": {"place": "place", "at": "at"}}]
    }
  ]
}"#;

pub fn toy() -> Arc<KnowledgeBase> {
    Arc::new(KnowledgeBase::from_json_str(TOY_KB).unwrap())
}

fn place() -> impl Strategy<Value = ParamValue> {
    prop_oneof![
        8 => prop::sample::subsequence(vec!["home", "park", "shop"], 1..=2)
            .prop_map(|s| ParamValue::symbols(s).unwrap()),
        1 => Just(ParamValue::symbol("moon")),
    ]
}

fn hour() -> impl Strategy<Value = ParamValue> {
    (0i64..=3, 0i64..=3).prop_map(|(a, b)| ParamValue::interval(a.min(b), a.max(b), Unit::Minute).unwrap())
}

fn meta() -> impl Strategy<Value = Option<String>> {
    prop_oneof![
        4 => Just(None),
        1 => Just(Some("WANT".to_string())),
        1 => Just(Some("CAN".to_string())),
        1 => Just(Some("MUST".to_string())),
        1 => Just(Some("HOPE".to_string())),
    ]
}

fn cues() -> impl Strategy<Value = Vec<Cue>> {
    prop_oneof![
        6 => Just(vec![]),
        1 => Just(vec![Cue::Digress]),
        1 => Just(vec![Cue::Correct]),
        1 => (0usize..3).prop_map(|t| vec![Cue::Topic(t)]),
        1 => (0usize..3).prop_map(|t| vec![Cue::Correct, Cue::Topic(t)]),
    ]
}

pub fn predicate() -> impl Strategy<Value = Predicate> {
    let name = prop_oneof![
        4 => Just("TRIP"),
        3 => Just("RIDE"),
        3 => Just("AT"),
        3 => Just("STAY"),
        1 => Just("DIGRESS"),
        1 => Just("CORRECT"),
        1 => Just("SWIM"),
    ];
    (
        name,
        proptest::option::of(place()),
        proptest::option::of(place()),
        proptest::option::of(hour()),
        meta(),
        cues(),
    )
        .prop_map(|(name, a, b, h, meta, cues)| {
            let mut p = Predicate::new(name);
            let args: Vec<(&str, Option<ParamValue>)> = match name {
                "TRIP" | "RIDE" => vec![("from", a), ("to", b), ("at", h)],
                "AT" => vec![("place", a.or(b))],
                "STAY" => vec![("place", a), ("at", h)],
                _ => vec![],
            };
            for (k, v) in args {
                if let Some(v) = v {
                    p = p.arg(k, v);
                }
            }
            p.meta = meta;
            p.cues = cues.into_iter().collect();
            p
        })
}

pub fn stream(max: usize) -> impl Strategy<Value = Vec<Predicate>> {
    prop::collection::vec(predicate(), 1..=max)
}
