//! Indirect inference: fill gaps left by the statements using the rule base.
//!
//! A rule may overwrite a parameter only when its source is at least as
//! strong as the source recorded in the parameter's tag. The new value is
//! tagged with the rule's own source, whatever the sources of the values it
//! was derived from.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::direct::{Binding, Interpretation, Status};
use crate::knowledge::{IndirectRule, KnowledgeBase, ParamRef, ParamValue, Scope, Selector, ValueExpr};
use crate::scoring::{ic_param, is_complete};

/// A single accepted rule conclusion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AppliedRule {
    pub rule: String,
    pub plan: usize,
    pub param: String,
    pub value: ParamValue,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Saturation {
    pub interpretation: Interpretation,
    pub passes: usize,
    pub applied: Vec<AppliedRule>,
    /// The pass limit stopped the run before a fixpoint was reached.
    pub hit_pass_limit: bool,
}

/// Plan indices bound to the selectors at one rule position.
#[derive(Debug, Clone, Copy)]
struct Position {
    this: Option<usize>,
    prev: Option<usize>,
    next: Option<usize>,
    first: usize,
    last: usize,
}

impl Position {
    fn resolve(&self, sel: Selector) -> Option<usize> {
        match sel {
            Selector::This => self.this,
            Selector::Prev => self.prev,
            Selector::Next => self.next,
            Selector::First => Some(self.first),
            Selector::Last => Some(self.last),
        }
    }
}

fn positions(scope: Scope, n: usize) -> Vec<Position> {
    if n == 0 {
        return Vec::new();
    }
    let base = Position {
        this: None,
        prev: None,
        next: None,
        first: 0,
        last: n - 1,
    };
    match scope {
        Scope::Each => (0..n).map(|i| Position { this: Some(i), ..base }).collect(),
        Scope::Adjacent => (1..n)
            .map(|i| Position {
                prev: Some(i - 1),
                next: Some(i),
                ..base
            })
            .collect(),
        Scope::Once => vec![base],
    }
}

fn lookup<'a>(interp: &'a Interpretation, pos: &Position, r: &ParamRef) -> Option<&'a ParamValue> {
    let plan = interp.plans.get(pos.resolve(r.plan)?)?;
    plan.value(&r.param).filter(|v| v.is_defined())
}

fn evaluate(expr: &ValueExpr, interp: &Interpretation, pos: &Position) -> Option<ParamValue> {
    let keys_of = |refs: &[ParamRef]| -> Option<Vec<String>> {
        refs.iter().map(|r| lookup(interp, pos, r)?.exact_key()).collect()
    };
    match expr {
        ValueExpr::Copy(r) => lookup(interp, pos, r).cloned(),
        ValueExpr::Constant(v) => Some(v.clone()),
        ValueExpr::Lookup { keys, entries } => {
            let key = keys_of(keys)?;
            entries.iter().find(|e| e.keys == key).map(|e| e.value.clone())
        }
        ValueExpr::Shift { from, keys, entries } => {
            let key = keys_of(keys)?;
            let by = entries.iter().find(|e| e.keys == key)?.by;
            match lookup(interp, pos, from)? {
                ParamValue::IntInterval { lo, hi, unit } => Some(ParamValue::IntInterval {
                    lo: lo + by,
                    hi: hi + by,
                    unit: *unit,
                }),
                _ => None,
            }
        }
    }
}

/// Apply `rule` at every position where it matches, skipping parameters in
/// `locked` and locking the ones it changes.
fn apply_rule(
    interp: &mut Interpretation,
    rule: &IndirectRule,
    kb: &KnowledgeBase,
    locked: &mut HashSet<(usize, String)>,
    applied: &mut Vec<AppliedRule>,
) -> usize {
    let tag = kb.config.tag(rule.source);
    let target_param = &rule.conclusion.param;
    let mut changes = 0;

    for pos in positions(rule.scope, interp.plans.len()) {
        let Some(target) = pos.resolve(rule.conclusion.plan) else { continue };
        let plan = &interp.plans[target];
        if !rule.operators.is_empty() && !rule.operators.contains(&plan.operator) {
            continue;
        }
        let Some(current) = plan.params.get(target_param) else { continue };
        if locked.contains(&(target, target_param.clone())) {
            continue;
        }
        if !rule.requires.iter().all(|r| lookup(interp, &pos, r).is_some()) {
            continue;
        }
        let same = rule.same.iter().all(|[a, b]| match (lookup(interp, &pos, a), lookup(interp, &pos, b)) {
            (Some(x), Some(y)) => x == y,
            _ => false,
        });
        if !same {
            continue;
        }
        let Some(value) = evaluate(&rule.conclusion.value, interp, &pos) else { continue };
        if kb
            .domain_of(&plan.operator, target_param)
            .is_some_and(|d| !d.admits(&value))
        {
            continue;
        }
        // Strength gate: same or stronger replaces, weaker never does.
        if tag.strength < current.tag.strength || value == current.value {
            continue;
        }
        // Never trade a parameter for a less informative one.
        let (Ok(new_ic), Ok(old_ic)) = (ic_param(&value, tag), ic_param(&current.value, current.tag)) else {
            continue;
        };
        if new_ic < old_ic {
            continue;
        }

        interp.plans[target].params.insert(
            target_param.clone(),
            Binding {
                value: value.clone(),
                tag,
            },
        );
        locked.insert((target, target_param.clone()));
        applied.push(AppliedRule {
            rule: rule.name.clone(),
            plan: target,
            param: target_param.clone(),
            value,
        });
        changes += 1;
    }
    changes
}

/// One application of `rule` across the interpretation; `None` when it
/// changes nothing.
pub fn try_rule(interp: &Interpretation, rule: &IndirectRule, kb: &KnowledgeBase) -> Option<Interpretation> {
    let mut out = interp.clone();
    let changed = apply_rule(&mut out, rule, kb, &mut HashSet::new(), &mut Vec::new());
    (changed > 0).then_some(out)
}

/// Run the rule base to a fixpoint, strongest rules first, stopping early
/// once the interpretation's IC reaches zero.
pub fn saturate(interp: &Interpretation, kb: &KnowledgeBase) -> Interpretation {
    saturate_report(interp, kb).interpretation
}

pub fn saturate_report(interp: &Interpretation, kb: &KnowledgeBase) -> Saturation {
    let mut current = interp.clone();
    let mut applied = Vec::new();
    if is_complete(&current, kb) {
        current.status = Status::Complete;
        return Saturation {
            interpretation: current,
            passes: 0,
            applied,
            hit_pass_limit: false,
        };
    }

    let rules = kb.rules_by_strength();
    let params: usize = current.plans.iter().map(|p| p.params.len()).sum();
    let limit = (rules.len() * params).max(1);

    for pass in 1..=limit {
        let mut locked = HashSet::new();
        let mut changed = false;
        for rule in &rules {
            if apply_rule(&mut current, rule, kb, &mut locked, &mut applied) > 0 {
                changed = true;
                if is_complete(&current, kb) {
                    current.status = Status::Complete;
                    return Saturation {
                        interpretation: current,
                        passes: pass,
                        applied,
                        hit_pass_limit: false,
                    };
                }
            }
        }
        if !changed {
            current.status = Status::Stalled;
            return Saturation {
                interpretation: current,
                passes: pass,
                applied,
                hit_pass_limit: false,
            };
        }
    }
    current.status = Status::InProgress;
    Saturation {
        interpretation: current,
        passes: limit,
        applied,
        hit_pass_limit: true,
    }
}
