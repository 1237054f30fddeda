//! Information content of parameters, plans and interpretations, and the
//! IC-based probability update.
//!
//! `IC(p) = log2(S(p) / N(p))` where `S` is the strength of the parameter's
//! source and `N` the number of values it may still take. An interpretation
//! scores the sum over the required parameters of all its plans; 0 means
//! every required parameter is exactly and directly known.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::direct::{Interpretation, Plan, Status};
use crate::knowledge::{IcNormMode, KnowledgeBase, ParamValue, Source, StrengthTag};

/// Totals at or above this are treated as zero.
const COMPLETE_EPS: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScoringError {
    #[error("parameter domain has no values")]
    DegenerateDomain,
    #[error("ICNORM is zero: nothing left to discriminate")]
    DegenerateNorm,
    #[error("ICNORM of an empty set")]
    EmptySet,
}

pub fn ic_param(value: &ParamValue, tag: StrengthTag) -> Result<f64, ScoringError> {
    let n = value.cardinality();
    if n == 0 {
        return Err(ScoringError::DegenerateDomain);
    }
    Ok((tag.strength / n as f64).log2())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanIc {
    pub operator: String,
    /// IC of each required parameter.
    pub params: BTreeMap<String, f64>,
    pub total: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IcReport {
    pub plans: Vec<PlanIc>,
    pub total: f64,
    /// ICNORM of the update this report was produced for, if any.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub icnorm: Option<f64>,
}

fn required<'p>(plan: &'p Plan, kb: &'p KnowledgeBase) -> impl Iterator<Item = (&'p String, &'p crate::direct::Binding)> {
    let op = kb.operator(&plan.operator);
    plan.params
        .iter()
        .filter(move |(name, _)| op.is_none_or(|o| o.param(name).is_some_and(|p| p.required)))
}

pub fn ic_plan(plan: &Plan, kb: &KnowledgeBase) -> PlanIc {
    let params: BTreeMap<String, f64> = required(plan, kb)
        .map(|(name, b)| {
            // A zero-cardinality value cannot be built through the public
            // constructors; count it as an undefined parameter.
            let ic = ic_param(&b.value, b.tag).unwrap_or_else(|_| kb.config.strengths.undefined.log2());
            (name.clone(), ic)
        })
        .collect();
    let total = params.values().sum();
    PlanIc {
        operator: plan.operator.clone(),
        params,
        total,
    }
}

pub fn ic_interpretation(interp: &Interpretation, kb: &KnowledgeBase) -> IcReport {
    let plans: Vec<PlanIc> = interp.plans.iter().map(|p| ic_plan(p, kb)).collect();
    let total = plans.iter().map(|p| p.total).sum();
    IcReport {
        plans,
        total,
        icnorm: None,
    }
}

/// Lowest IC an interpretation with this plan structure could have: every
/// required parameter undefined over its whole domain.
pub fn min_ic(interp: &Interpretation, kb: &KnowledgeBase) -> f64 {
    let s_min = kb.config.strengths.get(Source::Undefined);
    interp
        .plans
        .iter()
        .flat_map(|plan| {
            required(plan, kb).map(move |(name, b)| {
                let n = kb
                    .domain_of(&plan.operator, name)
                    .map(|d| d.cardinality())
                    .unwrap_or_else(|| b.value.cardinality())
                    .max(1);
                (s_min / n as f64).log2()
            })
        })
        .sum()
}

/// The normalising constant shared by every interpretation in `set`.
pub fn icnorm(set: &[Interpretation], kb: &KnowledgeBase, mode: IcNormMode) -> Result<f64, ScoringError> {
    if set.is_empty() {
        return Err(ScoringError::EmptySet);
    }
    let norm = match mode {
        IcNormMode::Min => set.iter().map(|i| min_ic(i, kb)).fold(0.0, f64::min),
        IcNormMode::Sum => set.iter().map(|i| ic_interpretation(i, kb).total).sum(),
    };
    if norm < 0.0 {
        Ok(norm)
    } else {
        Err(ScoringError::DegenerateNorm)
    }
}

/// `1 - IC / ICNORM`, clamped to [0, 1].
pub fn update_factor(ic: f64, norm: f64) -> f64 {
    (1.0 - ic / norm).clamp(0.0, 1.0)
}

/// Reweight by information content: `P(I) <- P(I) (1 - IC(I)/ICNORM)`,
/// then renormalise. Identity when ICNORM degenerates or every factor is 0.
pub fn update_probabilities(set: &[Interpretation], kb: &KnowledgeBase, mode: IcNormMode) -> Vec<Interpretation> {
    update_with_norm(set, kb, mode).0
}

pub fn update_with_norm(
    set: &[Interpretation],
    kb: &KnowledgeBase,
    mode: IcNormMode,
) -> (Vec<Interpretation>, Option<f64>) {
    let Ok(norm) = icnorm(set, kb, mode) else {
        return (set.to_vec(), None);
    };
    let mut out: Vec<Interpretation> = set.to_vec();
    for interp in out.iter_mut() {
        let ic = ic_interpretation(interp, kb).total;
        interp.probability *= update_factor(ic, norm);
    }
    let total: f64 = out.iter().map(|i| i.probability).sum();
    if total <= 0.0 {
        return (set.to_vec(), Some(norm));
    }
    for interp in out.iter_mut() {
        interp.probability /= total;
    }
    (out, Some(norm))
}

pub fn is_complete(interp: &Interpretation, kb: &KnowledgeBase) -> bool {
    ic_interpretation(interp, kb).total >= -COMPLETE_EPS
}

/// Informative stopping rule: complete at zero IC, stalled when the last
/// saturation pass changed nothing, otherwise still in progress.
pub fn completion_check(interp: &Interpretation, kb: &KnowledgeBase) -> Status {
    if is_complete(interp, kb) {
        Status::Complete
    } else if interp.status == Status::Stalled {
        Status::Stalled
    } else {
        Status::InProgress
    }
}
