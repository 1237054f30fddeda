//! Exhaustive reference for the direct phase, written against the toy KB
//! JSON without going through the engine's own types or algorithms.
//!
//! Probabilities are exact fractions. Only the information-content factor
//! (a base-2 logarithm) is computed in floating point and converted.

use std::collections::{BTreeMap, BTreeSet};

use num_rational::BigRational;
use num_traits::{FromPrimitive, One, Signed, Zero};
use planrec::discourse::Cue;
use planrec::knowledge::ParamValue;
use planrec::{Plan, Predicate};
use serde_json::Value;

type Q = BigRational;

fn q(n: i64, d: i64) -> Q {
    Q::new(n.into(), d.into())
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum OVal {
    Undef,
    Sym(BTreeSet<String>),
    Int(i64, i64),
}

impl OVal {
    fn defined(&self) -> bool {
        !matches!(self, OVal::Undef)
    }

    fn intersect(&self, other: &OVal) -> Option<OVal> {
        match (self, other) {
            (OVal::Sym(a), OVal::Sym(b)) => {
                let c: BTreeSet<String> = a.intersection(b).cloned().collect();
                (!c.is_empty()).then_some(OVal::Sym(c))
            }
            (OVal::Int(a, b), OVal::Int(c, d)) => {
                let (lo, hi) = (*a.max(c), *b.min(d));
                (lo <= hi).then_some(OVal::Int(lo, hi))
            }
            _ => None,
        }
    }

    pub fn from_engine(v: &ParamValue) -> OVal {
        match v {
            ParamValue::SymbolSet(s) => OVal::Sym(s.clone()),
            ParamValue::IntInterval { lo, hi, .. } => OVal::Int(*lo, *hi),
            ParamValue::Undefined { .. } => OVal::Undef,
        }
    }
}

#[derive(Debug, Clone)]
enum ODomain {
    Sym(BTreeSet<String>),
    Int(i64, i64),
}

impl ODomain {
    fn size(&self) -> f64 {
        match self {
            ODomain::Sym(s) => s.len() as f64,
            ODomain::Int(lo, hi) => (hi - lo + 1) as f64,
        }
    }

    fn admits(&self, v: &OVal) -> bool {
        match (self, v) {
            (ODomain::Sym(all), OVal::Sym(s)) => s.is_subset(all),
            (ODomain::Int(lo, hi), OVal::Int(a, b)) => lo <= a && b <= hi,
            _ => false,
        }
    }
}

#[derive(Debug, Clone)]
struct OOp {
    name: String,
    /// (name, domain, required) in declaration order.
    params: Vec<(String, String, bool)>,
    pre: Vec<(String, BTreeMap<String, String>)>,
    eff: Vec<(String, BTreeMap<String, String>)>,
    body: Vec<String>,
}

pub struct Oracle {
    ops: Vec<OOp>,
    domains: BTreeMap<String, ODomain>,
    threshold: Q,
}

/// Operator name plus its parameters; undefined ones are `Undef`.
pub type OPlan = (String, BTreeMap<String, OVal>);

#[derive(Debug, Clone)]
struct OInterp {
    plans: Vec<OPlan>,
    p: Q,
}

struct Frag {
    op: String,
    bind: BTreeMap<String, OVal>,
    p: Q,
}

#[derive(Clone, Copy, PartialEq)]
enum Rel {
    Elab(usize),
    Corr(usize),
    Intro,
}

enum Merge {
    Ok(OPlan),
    Conflict,
    Unrelated,
}

fn patterns(v: &Value) -> Vec<(String, BTreeMap<String, String>)> {
    v.as_array()
        .map(|a| {
            a.iter()
                .map(|p| {
                    let args = p["args"]
                        .as_object()
                        .map(|o| o.iter().map(|(k, v)| (k.clone(), v.as_str().unwrap().to_string())).collect())
                        .unwrap_or_default();
                    (p["predicate"].as_str().unwrap().to_string(), args)
                })
                .collect()
        })
        .unwrap_or_default()
}

impl Oracle {
    pub fn new(kb_json: &str) -> Oracle {
        let v: Value = serde_json::from_str(kb_json).unwrap();
        let mut domains = BTreeMap::new();
        for (name, d) in v["domains"].as_object().unwrap() {
            let dom = if let Some(s) = d.get("symbols") {
                ODomain::Sym(s.as_array().unwrap().iter().map(|x| x.as_str().unwrap().to_string()).collect())
            } else {
                let i = d["interval"].as_array().unwrap();
                ODomain::Int(i[0].as_i64().unwrap(), i[1].as_i64().unwrap())
            };
            domains.insert(name.clone(), dom);
        }
        let ops = v["operators"]
            .as_array()
            .unwrap()
            .iter()
            .map(|o| OOp {
                name: o["name"].as_str().unwrap().to_string(),
                params: o["params"]
                    .as_array()
                    .unwrap()
                    .iter()
                    .map(|p| {
                        (
                            p["name"].as_str().unwrap().to_string(),
                            p["domain"].as_str().unwrap().to_string(),
                            p["required"].as_bool().unwrap_or(false),
                        )
                    })
                    .collect(),
                pre: patterns(&o["preconditions"]),
                eff: patterns(&o["effects"]),
                body: o["body"]
                    .as_array()
                    .map(|b| b.iter().map(|x| x.as_str().unwrap().to_string()).collect())
                    .unwrap_or_default(),
            })
            .collect();
        Oracle {
            ops,
            domains,
            threshold: q(1, 2),
        }
    }

    fn op(&self, name: &str) -> &OOp {
        self.ops.iter().find(|o| o.name == name).unwrap()
    }

    fn domain(&self, op: &str, param: &str) -> Option<&ODomain> {
        let (_, d, _) = self.op(op).params.iter().find(|(n, _, _)| n == param)?;
        self.domains.get(d)
    }

    /// Does `general` occur somewhere below `specific` in body expansion?
    fn below(&self, specific: &str, general: &str, depth: usize) -> bool {
        depth < self.ops.len()
            && self
                .op(specific)
                .body
                .iter()
                .any(|b| b == general || self.below(b, general, depth + 1))
    }

    fn blank(&self, op: &str) -> OPlan {
        let params = self.op(op).params.iter().map(|(n, _, _)| (n.clone(), OVal::Undef)).collect();
        (op.to_string(), params)
    }

    fn bind(&self, pred: &Predicate, op: &OOp, map: &dyn Fn(&str) -> Option<String>) -> Option<BTreeMap<String, OVal>> {
        let mut out = BTreeMap::new();
        for (arg, value) in &pred.args {
            let param = map(arg)?;
            let v = OVal::from_engine(value);
            if !self.domain(&op.name, &param)?.admits(&v) {
                return None;
            }
            if out.insert(param, v).is_some() {
                return None;
            }
        }
        Some(out)
    }

    fn fragments(&self, pred: &Predicate) -> Option<Vec<Frag>> {
        // rule index: 0 precondition, 1 effect, 2 body
        let mut found: [Vec<(String, BTreeMap<String, OVal>)>; 3] = Default::default();
        let mut add = |rule: usize, op: &str, b: BTreeMap<String, OVal>| {
            if !found[rule].iter().any(|(o, x)| o == op && *x == b) {
                found[rule].push((op.to_string(), b));
            }
        };
        for op in &self.ops {
            for (rule, pats) in [(0, &op.pre), (1, &op.eff)] {
                for (name, args) in pats.iter() {
                    if *name != pred.name {
                        continue;
                    }
                    if let Some(b) = self.bind(pred, op, &|a| args.get(a).cloned()) {
                        add(rule, &op.name, b);
                    }
                }
            }
            if op.body.contains(&pred.name) {
                let names: Vec<String> = op.params.iter().map(|(n, _, _)| n.clone()).collect();
                if let Some(b) = self.bind(pred, op, &|a| names.iter().find(|n| *n == a).cloned()) {
                    add(2, &op.name, b);
                }
            }
        }
        let mass = match pred.meta.as_deref() {
            Some("WANT") | Some("MUST") => [q(1, 5), q(3, 5), q(1, 5)],
            Some("CAN") => [q(3, 5), q(1, 5), q(1, 5)],
            _ => [q(1, 3), q(1, 3), q(1, 3)],
        };
        let hit: Vec<usize> = (0..3).filter(|r| !found[*r].is_empty()).collect();
        if hit.is_empty() {
            return None;
        }
        let total: Q = hit.iter().map(|r| mass[*r].clone()).sum();
        let rules = Q::from_usize(hit.len()).unwrap();
        let mut out = Vec::new();
        for r in hit {
            let share = if total.is_zero() {
                Q::one() / rules.clone()
            } else {
                mass[r].clone() / total.clone()
            };
            let n = Q::from_usize(found[r].len()).unwrap();
            for (op, bind) in &found[r] {
                out.push(Frag {
                    op: op.clone(),
                    bind: bind.clone(),
                    p: share.clone() / n.clone(),
                });
            }
        }
        Some(out)
    }

    fn merge(&self, plan: &OPlan, frag: &Frag, overrides: bool) -> Merge {
        let winner = if plan.0 == frag.op || self.below(&plan.0, &frag.op, 0) {
            plan.0.clone()
        } else if self.below(&frag.op, &plan.0, 0) {
            frag.op.clone()
        } else {
            return Merge::Unrelated;
        };
        let mut out = self.blank(&winner);
        for (name, slot) in out.1.iter_mut() {
            let left = plan.1.get(name).filter(|v| v.defined());
            let right = frag.bind.get(name).filter(|v| v.defined());
            *slot = match (left, right) {
                (None, None) => continue,
                (Some(x), None) | (None, Some(x)) => x.clone(),
                (Some(x), Some(y)) => match x.intersect(y) {
                    Some(c) => c,
                    None if overrides => y.clone(),
                    None => return Merge::Conflict,
                },
            };
        }
        Merge::Ok(out)
    }

    fn relations(&self, interp: &OInterp, frag: &Frag, cues: &BTreeSet<Cue>) -> Vec<(Rel, Q)> {
        let n = interp.plans.len();
        let boost = |t: usize| if cues.contains(&Cue::Topic(t)) { q(3, 1) } else { Q::one() };
        let mut raw = Vec::new();
        let mut correctable = Vec::new();
        let mut decay = Q::one();
        for d in 0..n {
            let t = n - 1 - d;
            match self.merge(&interp.plans[t], frag, false) {
                Merge::Ok(_) => {
                    let mut w = decay.clone() * boost(t);
                    if d == 0 && cues.contains(&Cue::Digress) {
                        w *= q(3, 10);
                    }
                    raw.push((Rel::Elab(t), w));
                    correctable.push((t, decay.clone()));
                }
                Merge::Conflict => correctable.push((t, decay.clone())),
                Merge::Unrelated => {}
            }
            decay *= q(1, 2);
        }
        if cues.contains(&Cue::Correct) {
            for (t, dec) in correctable {
                raw.push((Rel::Corr(t), q(3, 1) * dec * boost(t)));
            }
        }
        raw.push((Rel::Intro, q(3, 20)));
        let total: Q = raw.iter().map(|(_, w)| w.clone()).sum();
        raw.into_iter().map(|(r, w)| (r, w / total.clone())).collect()
    }

    fn apply(&self, interp: &OInterp, frag: &Frag, rel: Rel) -> Option<Vec<OPlan>> {
        let mut plans = interp.plans.clone();
        match rel {
            Rel::Intro => {
                let mut p = self.blank(&frag.op);
                for (k, v) in &frag.bind {
                    p.1.insert(k.clone(), v.clone());
                }
                plans.push(p);
            }
            Rel::Elab(t) | Rel::Corr(t) => match self.merge(&plans[t], frag, matches!(rel, Rel::Corr(_))) {
                Merge::Ok(p) => plans[t] = p,
                _ => return None,
            },
        }
        Some(plans)
    }

    fn ic(&self, plans: &[OPlan]) -> f64 {
        let mut total = 0.0;
        for (op, params) in plans {
            for (name, _, required) in &self.op(op).params {
                if !required {
                    continue;
                }
                let (s, n) = match &params[name] {
                    OVal::Undef => (0.1, self.domain(op, name).unwrap().size()),
                    OVal::Sym(set) => (1.0, set.len() as f64),
                    OVal::Int(lo, hi) => (1.0, (hi - lo + 1) as f64),
                };
                total += (s / n).log2();
            }
        }
        total
    }

    fn worst_ic(&self, plans: &[OPlan]) -> f64 {
        let mut total = 0.0;
        for (op, _) in plans {
            for (name, _, required) in &self.op(op).params {
                if *required {
                    total += (0.1 / self.domain(op, name).unwrap().size()).log2();
                }
            }
        }
        total
    }

    fn prune(&self, mut set: Vec<OInterp>) -> Vec<OInterp> {
        normalize(&mut set);
        let max = set.iter().map(|i| i.p.clone()).max().unwrap();
        set.retain(|i| i.p.clone() / max.clone() >= self.threshold);
        normalize(&mut set);
        set
    }

    fn ic_update(&self, set: Vec<OInterp>) -> Vec<OInterp> {
        let norm = set.iter().map(|i| self.worst_ic(&i.plans)).fold(0.0, f64::min);
        if norm >= 0.0 {
            return set;
        }
        let mut out = set.clone();
        for i in out.iter_mut() {
            let factor = (1.0 - self.ic(&i.plans) / norm).clamp(0.0, 1.0);
            i.p *= Q::from_float(factor).unwrap();
        }
        if out.iter().all(|i| i.p.is_zero()) {
            return set;
        }
        normalize(&mut out);
        out
    }

    /// The live distribution after feeding `stream`, keyed by plan sequence.
    pub fn run(&self, stream: &[Predicate]) -> BTreeMap<Vec<OPlan>, Q> {
        let mut live: Vec<OInterp> = Vec::new();
        let mut pending: BTreeSet<Cue> = BTreeSet::new();
        for pred in stream {
            let mut cues = pred.cues.clone();
            if pred.name == "DIGRESS" || pred.name == "CORRECT" {
                cues.insert(if pred.name == "DIGRESS" { Cue::Digress } else { Cue::Correct });
                pending.extend(cues);
                continue;
            }
            let Some(frags) = self.fragments(pred) else { continue };
            let active: BTreeSet<Cue> = pending.union(&cues).cloned().collect();
            let base = if live.is_empty() {
                vec![OInterp { plans: vec![], p: Q::one() }]
            } else {
                live.clone()
            };
            let mut next: Vec<OInterp> = Vec::new();
            for interp in &base {
                for frag in &frags {
                    for (rel, pr) in self.relations(interp, frag, &active) {
                        let Some(plans) = self.apply(interp, frag, rel) else { continue };
                        let p = interp.p.clone() * frag.p.clone() * pr;
                        match next.iter_mut().find(|i| i.plans == plans) {
                            Some(i) => i.p += p,
                            None => next.push(OInterp { plans, p }),
                        }
                    }
                }
            }
            if next.is_empty() {
                continue;
            }
            pending.clear();
            let pruned = self.prune(next);
            let updated = self.ic_update(pruned);
            live = self.prune(updated);
        }
        live.into_iter().map(|i| (i.plans, i.p)).collect()
    }
}

fn normalize(set: &mut [OInterp]) {
    let total: Q = set.iter().map(|i| i.p.clone()).sum();
    if total.is_positive() {
        for i in set.iter_mut() {
            i.p = i.p.clone() / total.clone();
        }
    } else if !set.is_empty() {
        let u = Q::one() / Q::from_usize(set.len()).unwrap();
        for i in set.iter_mut() {
            i.p = u.clone();
        }
    }
}

pub fn engine_plans(plans: &[Plan]) -> Vec<OPlan> {
    plans
        .iter()
        .map(|p| {
            let params = p.params.iter().map(|(k, b)| (k.clone(), OVal::from_engine(&b.value))).collect();
            (p.operator.clone(), params)
        })
        .collect()
}

pub fn to_f64(x: &Q) -> f64 {
    use num_traits::ToPrimitive;
    x.to_f64().unwrap()
}

/// Compare engine and oracle on `cases` random streams of at most four
/// predicates over the toy KB.
pub fn check_streams(cases: u32, seed: u8) -> Result<String, String> {
    use proptest::prelude::*;
    use std::cell::Cell;

    let kb = super::toy::toy();
    let oracle = Oracle::new(super::toy::TOY_KB);
    let plans_seen = Cell::new(0usize);
    let r = super::runner(cases, seed).run(&super::toy::stream(4), |stream| {
        let mut session = planrec::Session::with_defaults(std::sync::Arc::clone(&kb));
        for p in &stream {
            let _ = session.process_statement(p);
        }
        let engine: BTreeMap<Vec<OPlan>, f64> = session
            .live()
            .iter()
            .map(|i| (engine_plans(&i.plans), i.probability))
            .collect();
        prop_assert_eq!(engine.len(), session.live().len(), "engine kept duplicate structures");
        let exact = oracle.run(&stream);
        let keys = |m: &BTreeMap<Vec<OPlan>, f64>| m.keys().cloned().collect::<Vec<_>>();
        let exact_f: BTreeMap<Vec<OPlan>, f64> = exact.iter().map(|(k, v)| (k.clone(), to_f64(v))).collect();
        prop_assert_eq!(keys(&engine), keys(&exact_f), "different survivors for {:?}", stream);
        for (k, p) in &engine {
            let want = exact_f[k];
            prop_assert!((p - want).abs() < 1e-9, "P = {p}, oracle {want} for {:?}", stream);
        }
        plans_seen.set(plans_seen.get() + engine.len());
        Ok(())
    });
    r.map(|_| format!("{cases} streams, {} interpretations compared", plans_seen.get()))
        .map_err(|e| e.to_string())
}
