//! Random interpretations over the travel KB with arbitrary tags, for the
//! indirect-inference properties.

use std::collections::BTreeMap;
use std::sync::Arc;

use planrec::direct::{Binding, Interpretation, Plan};
use planrec::knowledge::{Domain, ParamValue, Source};
use planrec::KnowledgeBase;
use proptest::prelude::*;

/// Per-parameter draw: (source index, two value seeds, keep-undefined flag).
type Draw = (usize, u32, u32, bool);

fn value(domain: &Domain, a: u32, b: u32) -> ParamValue {
    match domain {
        Domain::Symbols { symbols } => {
            let n = symbols.len();
            let picks: Vec<&String> = (0..1 + (b as usize % 2))
                .map(|k| &symbols[(a as usize + k * 7) % n])
                .collect();
            ParamValue::symbols(picks.into_iter().cloned()).unwrap()
        }
        Domain::Interval { interval, unit } => {
            let [lo, hi] = *interval;
            let width = hi - lo + 1;
            let start = lo + (a as i64 % width);
            let end = (start + (b as i64 % 4)).min(hi);
            ParamValue::interval(start, end, *unit).unwrap()
        }
    }
}

fn plan(kb: &KnowledgeBase, op: usize, draws: &[Draw]) -> Plan {
    let op = &kb.operators[op % kb.operators.len()];
    let mut params = BTreeMap::new();
    for (decl, (src, a, b, undefined)) in op.params.iter().zip(draws) {
        let domain = &kb.domains[&decl.domain];
        let kind = Source::ALL[src % Source::ALL.len()];
        let binding = if *undefined || kind == Source::Undefined {
            Binding {
                value: domain.undefined(),
                tag: kb.config.tag(Source::Undefined),
            }
        } else {
            Binding {
                value: value(domain, *a, *b),
                tag: kb.config.tag(kind),
            }
        };
        params.insert(decl.name.clone(), binding);
    }
    Plan {
        operator: op.name.clone(),
        params,
        statements: vec![0],
    }
}

pub fn interpretation(kb: Arc<KnowledgeBase>) -> impl Strategy<Value = Interpretation> {
    let draw = (0usize..6, any::<u32>(), any::<u32>(), prop::bool::weighted(0.4));
    let one = (0usize..16, prop::collection::vec(draw, 8));
    prop::collection::vec(one, 1..=3).prop_map(move |plans| {
        let plans = plans.iter().map(|(op, draws)| plan(&kb, *op, draws)).collect();
        Interpretation::from_plans(plans, 1.0)
    })
}
