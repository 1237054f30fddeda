//! Direct inference: statement -> plan fragments, fragments -> candidate
//! interpretations, and probability-based pruning.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::discourse::{relation_candidates, Cue, Predicate, RelationCandidate, RelationKind};
use crate::knowledge::{KnowledgeBase, MatchRule, Operator, ParamValue, Source, StrengthTag};

/// Slack on the relative rejection test so that ratios sitting on the
/// threshold survive float rounding.
const PRUNE_EPS: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DirectError {
    #[error("no operator explains predicate `{0}`")]
    NoInterpretation(String),
    #[error("every candidate interpretation was invalid")]
    EmptySet,
}

/// A parameter value together with the source it came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Binding {
    pub value: ParamValue,
    pub tag: StrengthTag,
}

/// One reading of a single statement as (part of) an operator instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanFragment {
    pub operator: String,
    pub bindings: BTreeMap<String, Binding>,
    pub rule: MatchRule,
    pub probability: f64,
}

/// An operator instance. Every declared parameter is present; unknown ones
/// hold `ParamValue::Undefined`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Plan {
    pub operator: String,
    pub params: BTreeMap<String, Binding>,
    /// Indices of the statements that contributed to this plan.
    pub statements: Vec<usize>,
}

impl Plan {
    fn blank(op: &Operator, kb: &KnowledgeBase) -> Plan {
        let undefined = kb.config.tag(Source::Undefined);
        let params = op
            .params
            .iter()
            .map(|p| {
                let value = kb
                    .domains
                    .get(&p.domain)
                    .map(|d| d.undefined())
                    .unwrap_or(ParamValue::Undefined { cardinality: 1 });
                (p.name.clone(), Binding { value, tag: undefined })
            })
            .collect();
        Plan {
            operator: op.name.clone(),
            params,
            statements: Vec::new(),
        }
    }

    pub fn from_fragment(frag: &PlanFragment, kb: &KnowledgeBase, statement: usize) -> Plan {
        let mut plan = match kb.operator(&frag.operator) {
            Some(op) => Plan::blank(op, kb),
            None => Plan {
                operator: frag.operator.clone(),
                params: BTreeMap::new(),
                statements: Vec::new(),
            },
        };
        for (name, binding) in &frag.bindings {
            plan.params.insert(name.clone(), binding.clone());
        }
        plan.statements.push(statement);
        plan
    }

    pub fn value(&self, param: &str) -> Option<&ParamValue> {
        self.params.get(param).map(|b| &b.value)
    }

    /// Same operator and parameter bindings; statement provenance is ignored.
    pub fn same_structure(&self, other: &Plan) -> bool {
        self.operator == other.operator && self.params == other.params
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Status {
    #[default]
    InProgress,
    Complete,
    Stalled,
}

/// A hypothesised sequence of plans for the discourse so far.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Interpretation {
    pub plans: Vec<Plan>,
    pub probability: f64,
    pub relations: Vec<RelationCandidate>,
    pub status: Status,
}

impl Interpretation {
    pub fn empty() -> Self {
        Interpretation::from_plans(Vec::new(), 1.0)
    }

    pub fn from_plans(plans: Vec<Plan>, probability: f64) -> Self {
        Interpretation {
            plans,
            probability,
            relations: Vec::new(),
            status: Status::InProgress,
        }
    }

    pub fn same_structure(&self, other: &Interpretation) -> bool {
        self.plans.len() == other.plans.len()
            && self.plans.iter().zip(&other.plans).all(|(a, b)| a.same_structure(b))
    }

    /// Compact one-line rendering, e.g. `GO(Adelaide->Sydney) FLY(?->Hawaii)`.
    pub fn summary(&self) -> String {
        self.plans
            .iter()
            .map(|p| {
                let show = |name: &str| p.value(name).map_or_else(|| "?".to_string(), |v| v.to_string());
                if p.params.contains_key("origin") || p.params.contains_key("destination") {
                    format!("{}({}->{})", p.operator, show("origin"), show("destination"))
                } else {
                    let inner: Vec<String> = p.params.iter().map(|(k, b)| format!("{k}={}", b.value)).collect();
                    format!("{}({})", p.operator, inner.join(","))
                }
            })
            .collect::<Vec<_>>()
            .join(" ")
    }
}

/// Operator name and bindings of one fragment before its mass is known.
type Found = (String, BTreeMap<String, Binding>);

/// Map one statement onto operator fragments using the precondition,
/// effect and body rules.
///
/// Each rule starts with the configured mass (replaced by the meta-bias row
/// when the statement carries a known meta predicate). Mass of rules that
/// match nothing is handed to the successful rules in proportion to their
/// own mass, and each rule's share is split evenly over its fragments.
pub fn interpret_predicate(pred: &Predicate, kb: &KnowledgeBase) -> Result<Vec<PlanFragment>, DirectError> {
    let user = kb.config.tag(Source::UserStatement);
    let mut matches: BTreeMap<MatchRule, Vec<Found>> = BTreeMap::new();

    for op in &kb.operators {
        for (rule, patterns) in [
            (MatchRule::Precondition, &op.preconditions),
            (MatchRule::Effect, &op.effects),
        ] {
            for pattern in patterns.iter().filter(|p| p.predicate == pred.name) {
                if let Some(b) = bind(pred, op, |arg| pattern.args.get(arg).map(String::as_str), kb, user) {
                    push_unique(matches.entry(rule).or_default(), &op.name, b);
                }
            }
        }
        if op.body.contains(&pred.name) {
            if let Some(b) = bind(pred, op, |arg| op.param(arg).map(|p| p.name.as_str()), kb, user) {
                push_unique(matches.entry(MatchRule::Body).or_default(), &op.name, b);
            }
        }
    }

    if matches.is_empty() {
        return Err(DirectError::NoInterpretation(pred.name.clone()));
    }

    let masses = kb.config.rule_masses(pred.meta.as_deref());
    let successful: f64 = matches.keys().map(|r| masses.get(*r)).sum();
    let count = matches.len() as f64;
    let share = |rule: MatchRule| {
        if successful > 0.0 {
            masses.get(rule) / successful
        } else {
            1.0 / count
        }
    };

    let mut out = Vec::new();
    for (rule, found) in matches {
        let each = share(rule) / found.len() as f64;
        for (operator, bindings) in found {
            out.push(PlanFragment {
                operator,
                bindings,
                rule,
                probability: each,
            });
        }
    }
    Ok(out)
}

fn push_unique(list: &mut Vec<Found>, op: &str, bindings: BTreeMap<String, Binding>) {
    if !list.iter().any(|(o, b)| o == op && *b == bindings) {
        list.push((op.to_string(), bindings));
    }
}

/// Bind every statement argument onto an operator parameter. Fails when an
/// argument has no target or its value lies outside the parameter's domain.
fn bind<'a>(
    pred: &Predicate,
    op: &'a Operator,
    target: impl Fn(&str) -> Option<&'a str>,
    kb: &KnowledgeBase,
    tag: StrengthTag,
) -> Option<BTreeMap<String, Binding>> {
    let mut out = BTreeMap::new();
    for (arg, value) in &pred.args {
        let param = target(arg)?;
        let domain = kb.domain_of(&op.name, param)?;
        if !domain.admits(value) {
            return None;
        }
        if out
            .insert(
                param.to_string(),
                Binding {
                    value: value.clone(),
                    tag,
                },
            )
            .is_some()
        {
            return None;
        }
    }
    Some(out)
}

/// Outcome of merging a fragment into an existing plan.
#[derive(Debug, Clone, PartialEq)]
pub enum Unified {
    Merged(Plan),
    /// Same activity, but two values of equal standing disagree.
    Conflict,
    /// The operators describe different activities.
    Unrelated,
}

/// Merge a fragment into a plan. The operators must match or one must
/// specialise the other (appear in its body, transitively); the more
/// specific operator is kept. Overlapping values of the same source kind
/// are intersected, and an empty intersection is a conflict. Values of
/// different kinds resolve to the stronger one.
pub fn unify(plan: &Plan, frag: &PlanFragment, kb: &KnowledgeBase) -> Unified {
    merge(&plan.operator, &plan.params, &frag.operator, &frag.bindings, &plan.statements, &[], kb, false)
}

/// Symmetric form of [`unify`] over two plans.
pub fn merge_plans(a: &Plan, b: &Plan, kb: &KnowledgeBase) -> Unified {
    merge(&a.operator, &a.params, &b.operator, &b.params, &a.statements, &b.statements, kb, false)
}

/// Like [`unify`] but values from the fragment replace disagreeing values
/// regardless of strength.
pub fn correct(plan: &Plan, frag: &PlanFragment, kb: &KnowledgeBase) -> Unified {
    merge(&plan.operator, &plan.params, &frag.operator, &frag.bindings, &plan.statements, &[], kb, true)
}

#[allow(clippy::too_many_arguments)]
fn merge(
    a_op: &str,
    a: &BTreeMap<String, Binding>,
    b_op: &str,
    b: &BTreeMap<String, Binding>,
    a_statements: &[usize],
    b_statements: &[usize],
    kb: &KnowledgeBase,
    b_overrides: bool,
) -> Unified {
    let Some(op) = kb.merged_operator(a_op, b_op).and_then(|name| kb.operator(name)) else {
        return Unified::Unrelated;
    };
    let mut plan = Plan::blank(op, kb);
    for (name, slot) in plan.params.iter_mut() {
        let left = a.get(name).filter(|x| x.value.is_defined());
        let right = b.get(name).filter(|x| x.value.is_defined());
        let merged = match (left, right) {
            (None, None) => continue,
            (Some(x), None) | (None, Some(x)) => x.clone(),
            (Some(x), Some(y)) => match x.value.intersect(&y.value) {
                Some(common) if x.tag.kind == y.tag.kind => Binding {
                    value: common,
                    tag: x.tag,
                },
                _ if b_overrides => y.clone(),
                None if x.tag.kind == y.tag.kind => return Unified::Conflict,
                _ => {
                    if x.tag.strength >= y.tag.strength {
                        x.clone()
                    } else {
                        y.clone()
                    }
                }
            },
        };
        *slot = merged;
    }
    let statements: BTreeSet<usize> = a_statements.iter().chain(b_statements).copied().collect();
    plan.statements = statements.into_iter().collect();
    Unified::Merged(plan)
}

/// Attach `frag` to `interp` under `rel`. `None` means the triple is invalid
/// and must be discarded.
pub fn apply_relation(
    interp: &Interpretation,
    frag: &PlanFragment,
    rel: &RelationCandidate,
    statement: usize,
    kb: &KnowledgeBase,
) -> Option<Interpretation> {
    let mut plans = interp.plans.clone();
    match (rel.kind, rel.topic) {
        (RelationKind::Introduction, _) => plans.push(Plan::from_fragment(frag, kb, statement)),
        (RelationKind::Elaboration, Some(t)) | (RelationKind::Correction, Some(t)) => {
            let target = plans.get(t)?;
            let merged = if rel.kind == RelationKind::Elaboration {
                unify(target, frag, kb)
            } else {
                correct(target, frag, kb)
            };
            let Unified::Merged(mut plan) = merged else {
                return None;
            };
            if !plan.statements.contains(&statement) {
                plan.statements.push(statement);
            }
            plans[t] = plan;
        }
        _ => return None,
    }
    let mut relations = interp.relations.clone();
    relations.push(rel.clone());
    Some(Interpretation {
        plans,
        probability: interp.probability,
        relations,
        status: Status::InProgress,
    })
}

/// One (interpretation, fragment, relation) triple considered by [`combine`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateRecord {
    pub interpretation: usize,
    pub fragment: usize,
    pub relation: RelationCandidate,
    /// Unnormalised probability, absent when the triple was invalid.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub probability: Option<f64>,
}

/// Combine the live interpretations with the fragments of a new statement.
/// Each valid triple scores `P(I) * P(i) * P(R)`; structurally identical
/// results are merged by summing, and the set is normalised.
pub fn combine(
    live: &[Interpretation],
    frags: &[PlanFragment],
    cues: &BTreeSet<Cue>,
    statement: usize,
    kb: &KnowledgeBase,
) -> Result<Vec<Interpretation>, DirectError> {
    combine_logged(live, frags, cues, statement, kb).map(|(set, _)| set)
}

pub fn combine_logged(
    live: &[Interpretation],
    frags: &[PlanFragment],
    cues: &BTreeSet<Cue>,
    statement: usize,
    kb: &KnowledgeBase,
) -> Result<(Vec<Interpretation>, Vec<CandidateRecord>), DirectError> {
    let seed = [Interpretation::empty()];
    let base: &[Interpretation] = if live.is_empty() { &seed } else { live };

    let mut out: Vec<Interpretation> = Vec::new();
    let mut log = Vec::new();
    for (j, interp) in base.iter().enumerate() {
        for (k, frag) in frags.iter().enumerate() {
            for rel in relation_candidates(interp, frag, cues, kb) {
                let result = apply_relation(interp, frag, &rel, statement, kb);
                let p = interp.probability * frag.probability * rel.probability;
                log.push(CandidateRecord {
                    interpretation: j,
                    fragment: k,
                    relation: rel,
                    probability: result.as_ref().map(|_| p),
                });
                let Some(mut next) = result else { continue };
                next.probability = p;
                match out.iter_mut().find(|o| o.same_structure(&next)) {
                    Some(existing) => existing.probability += p,
                    None => out.push(next),
                }
            }
        }
    }
    if out.is_empty() {
        return Err(DirectError::EmptySet);
    }
    normalize(&mut out);
    Ok((out, log))
}

/// Scale probabilities to sum to one. An all-zero set becomes uniform.
pub fn normalize(set: &mut [Interpretation]) {
    let total: f64 = set.iter().map(|i| i.probability).sum();
    if total > 0.0 && total.is_finite() {
        for i in set.iter_mut() {
            i.probability /= total;
        }
    } else if !set.is_empty() {
        let uniform = 1.0 / set.len() as f64;
        for i in set.iter_mut() {
            i.probability = uniform;
        }
    }
}

/// Normalise, drop every interpretation whose probability relative to the
/// best one falls below `threshold`, renormalise, and sort descending
/// (stable, so ties keep insertion order).
pub fn normalize_and_prune(set: Vec<Interpretation>, threshold: f64) -> Vec<Interpretation> {
    prune_logged(set, threshold).0
}

/// [`normalize_and_prune`] that also returns what was dropped.
pub fn prune_logged(mut set: Vec<Interpretation>, threshold: f64) -> (Vec<Interpretation>, Vec<Interpretation>) {
    if set.is_empty() {
        return (set, Vec::new());
    }
    normalize(&mut set);
    let max = set.iter().map(|i| i.probability).fold(0.0_f64, f64::max);
    let (mut kept, dropped): (Vec<_>, Vec<_>) = set
        .into_iter()
        .partition(|i| i.probability / max >= threshold - PRUNE_EPS);
    normalize(&mut kept);
    kept.sort_by(|a, b| b.probability.partial_cmp(&a.probability).unwrap_or(std::cmp::Ordering::Equal));
    (kept, dropped)
}
