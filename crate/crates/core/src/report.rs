//! The result document written by `planrec interpret` and `:finalize`.
//!
//! Field order is fixed by the struct definitions and maps are ordered, so
//! the same input always serialises to the same bytes.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::direct::Status;
use crate::discourse::RelationCandidate;
use crate::engine::{FinalResult, TraceEvent};
use crate::knowledge::{KnowledgeBase, ParamValue, Source};
use crate::scoring::ic_param;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamReport {
    pub value: ParamValue,
    pub tag: Source,
    pub strength: f64,
    pub ic: f64,
    pub required: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanReport {
    pub operator: String,
    pub statements: Vec<usize>,
    pub ic: f64,
    pub params: BTreeMap<String, ParamReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterpretationReport {
    pub rank: usize,
    pub probability: f64,
    pub status: Status,
    pub ic: f64,
    pub summary: String,
    pub plans: Vec<PlanReport>,
    pub relations: Vec<RelationCandidate>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultDocument {
    pub version: u32,
    pub statements: usize,
    pub icnorm: Option<f64>,
    pub interpretations: Vec<InterpretationReport>,
    pub diagnostics: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace: Option<Vec<TraceEvent>>,
}

impl ResultDocument {
    pub fn build(result: &FinalResult, kb: &KnowledgeBase, include_trace: bool) -> Self {
        let interpretations = result
            .ranked
            .iter()
            .map(|r| {
                let i = &r.interpretation;
                let plans = i
                    .plans
                    .iter()
                    .zip(&r.ic.plans)
                    .map(|(plan, plan_ic)| PlanReport {
                        operator: plan.operator.clone(),
                        statements: plan.statements.clone(),
                        ic: plan_ic.total,
                        params: plan
                            .params
                            .iter()
                            .map(|(name, b)| {
                                let ic = plan_ic
                                    .params
                                    .get(name)
                                    .copied()
                                    .or_else(|| ic_param(&b.value, b.tag).ok())
                                    .unwrap_or_else(|| kb.config.strengths.undefined.log2());
                                let param = ParamReport {
                                    value: b.value.clone(),
                                    tag: b.tag.kind,
                                    strength: b.tag.strength,
                                    ic,
                                    required: kb.is_required(&plan.operator, name),
                                };
                                (name.clone(), param)
                            })
                            .collect(),
                    })
                    .collect();
                InterpretationReport {
                    rank: r.rank,
                    probability: i.probability,
                    status: i.status,
                    ic: r.ic.total,
                    summary: i.summary(),
                    plans,
                    relations: i.relations.clone(),
                }
            })
            .collect();
        ResultDocument {
            version: FORMAT_VERSION,
            statements: result.statements,
            icnorm: result.icnorm,
            interpretations,
            diagnostics: result.diagnostics.clone(),
            trace: include_trace.then(|| result.trace.clone()),
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("result document serialises");
        s.push('\n');
        s
    }
}
