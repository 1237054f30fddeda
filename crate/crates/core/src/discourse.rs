//! Parsed statements and the discourse relations that attach a new
//! statement to the interpretation of the discourse so far.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::direct::{unify, Interpretation, PlanFragment, Unified};
use crate::knowledge::{KnowledgeBase, ParamValue};

/// Predicate names that carry only a cue and never produce fragments.
pub const DIGRESS: &str = "DIGRESS";
pub const CORRECT: &str = "CORRECT";

/// Explicit evidence supplied upstream for a discourse relation or topic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Cue {
    Digress,
    Correct,
    /// Points at a plan position (0 = first plan) in the interpretation.
    Topic(usize),
}

impl fmt::Display for Cue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cue::Digress => f.write_str(DIGRESS),
            Cue::Correct => f.write_str(CORRECT),
            Cue::Topic(t) => write!(f, "TOPIC:{t}"),
        }
    }
}

impl FromStr for Cue {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            DIGRESS => Ok(Cue::Digress),
            CORRECT => Ok(Cue::Correct),
            other => other
                .strip_prefix("TOPIC:")
                .and_then(|n| n.parse().ok())
                .map(Cue::Topic)
                .ok_or_else(|| format!("unknown cue `{other}`")),
        }
    }
}

impl Serialize for Cue {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Cue {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// One statement as delivered by the language front end.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Predicate {
    #[serde(rename = "predicate")]
    pub name: String,
    #[serde(default)]
    pub args: BTreeMap<String, ParamValue>,
    #[serde(default)]
    pub meta: Option<String>,
    #[serde(default)]
    pub cues: BTreeSet<Cue>,
}

impl Predicate {
    pub fn new(name: impl Into<String>) -> Self {
        Predicate {
            name: name.into(),
            args: BTreeMap::new(),
            meta: None,
            cues: BTreeSet::new(),
        }
    }

    pub fn arg(mut self, name: impl Into<String>, value: ParamValue) -> Self {
        self.args.insert(name.into(), value);
        self
    }

    pub fn meta(mut self, meta: impl Into<String>) -> Self {
        self.meta = Some(meta.into());
        self
    }

    pub fn cue(mut self, cue: Cue) -> Self {
        self.cues.insert(cue);
        self
    }

    /// A bare DIGRESS or CORRECT marker.
    pub fn is_cue_only(&self) -> bool {
        self.name == DIGRESS || self.name == CORRECT
    }
}

/// Cues carried by a predicate. For a bare cue predicate these become
/// pending and apply to the next domain statement.
pub fn detect_cues(pred: &Predicate) -> BTreeSet<Cue> {
    let mut cues = pred.cues.clone();
    match pred.name.as_str() {
        DIGRESS => {
            cues.insert(Cue::Digress);
        }
        CORRECT => {
            cues.insert(Cue::Correct);
        }
        _ => {}
    }
    cues
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum RelationKind {
    Elaboration,
    Introduction,
    Correction,
}

/// A way of attaching a fragment to an interpretation, with its probability.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelationCandidate {
    pub kind: RelationKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub topic: Option<usize>,
    pub probability: f64,
}

/// Enumerate the relations by which `frag` can attach to `interp`, with
/// probabilities normalised to sum to one.
///
/// Raw weights: elaborating the plan at distance `d` from the most recent
/// one weighs `decay^d` when the fragment unifies with it; introduction
/// weighs `intro_weight`; correction exists only under a CORRECT cue and
/// weighs `boost * decay^d` for every topic whose operator is compatible.
/// DIGRESS damps the `d = 0` elaboration; a topic cue boosts its topic.
pub fn relation_candidates(
    interp: &Interpretation,
    frag: &PlanFragment,
    cues: &BTreeSet<Cue>,
    kb: &KnowledgeBase,
) -> Vec<RelationCandidate> {
    let cfg = &kb.config;
    let n = interp.plans.len();
    let mut raw: Vec<(RelationKind, Option<usize>, f64)> = Vec::new();

    let topic_boost = |topic: usize| {
        if cues.contains(&Cue::Topic(topic)) {
            cfg.cue_boost
        } else {
            1.0
        }
    };

    let mut correctable = Vec::new();
    for distance in 0..n {
        let topic = n - 1 - distance;
        let decay = cfg.elaboration_decay.powi(distance as i32);
        match unify(&interp.plans[topic], frag, kb) {
            Unified::Merged(_) => {
                let mut w = decay * topic_boost(topic);
                if distance == 0 && cues.contains(&Cue::Digress) {
                    w *= cfg.digression_damping;
                }
                raw.push((RelationKind::Elaboration, Some(topic), w));
                correctable.push((topic, decay));
            }
            Unified::Conflict => correctable.push((topic, decay)),
            Unified::Unrelated => {}
        }
    }
    if cues.contains(&Cue::Correct) {
        for (topic, decay) in correctable {
            raw.push((RelationKind::Correction, Some(topic), cfg.cue_boost * decay * topic_boost(topic)));
        }
    }
    raw.push((RelationKind::Introduction, None, cfg.intro_weight));

    let total: f64 = raw.iter().map(|(_, _, w)| w).sum();
    raw.into_iter()
        .filter(|(_, _, w)| *w > 0.0)
        .map(|(kind, topic, w)| RelationCandidate {
            kind,
            topic,
            probability: w / total,
        })
        .collect()
}
