//! Domain knowledge: operator library, indirect-inference rule base, value
//! domains and engine configuration.
//!
//! A knowledge base is a single JSON document with the top-level keys
//! `operators`, `rules`, `domains` and `config`. It is immutable once loaded
//! and can be shared between sessions.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Unit of an integer interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Unit {
    /// 0-based day of the year.
    Day,
    /// Minute of the day, 0..=1439.
    Minute,
}

impl fmt::Display for Unit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Unit::Day => f.write_str("day"),
            Unit::Minute => f.write_str("minute"),
        }
    }
}

/// The value currently assigned to a plan parameter.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawValue", into = "RawValue")]
pub enum ParamValue {
    /// A non-empty finite set of symbolic constants.
    SymbolSet(BTreeSet<String>),
    /// A closed integer interval.
    IntInterval { lo: i64, hi: i64, unit: Unit },
    /// Nothing is known; carries the size of the parameter's domain.
    Undefined { cardinality: u64 },
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum RawValue {
    Set {
        set: Vec<String>,
    },
    Interval {
        interval: [i64; 2],
        unit: Unit,
    },
    Undefined {
        undefined: u64,
    },
}

impl TryFrom<RawValue> for ParamValue {
    type Error = String;

    fn try_from(raw: RawValue) -> Result<Self, Self::Error> {
        match raw {
            RawValue::Set { set } => ParamValue::symbols(set),
            RawValue::Interval {
                interval: [lo, hi],
                unit,
            } => ParamValue::interval(lo, hi, unit),
            RawValue::Undefined { undefined } => {
                if undefined == 0 {
                    Err("undefined value must carry a domain cardinality >= 1".into())
                } else {
                    Ok(ParamValue::Undefined {
                        cardinality: undefined,
                    })
                }
            }
        }
    }
}

impl From<ParamValue> for RawValue {
    fn from(value: ParamValue) -> Self {
        match value {
            ParamValue::SymbolSet(set) => RawValue::Set {
                set: set.into_iter().collect(),
            },
            ParamValue::IntInterval { lo, hi, unit } => RawValue::Interval {
                interval: [lo, hi],
                unit,
            },
            ParamValue::Undefined { cardinality } => RawValue::Undefined {
                undefined: cardinality,
            },
        }
    }
}

impl ParamValue {
    pub fn symbols<I, S>(values: I) -> Result<Self, String>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let set: BTreeSet<String> = values.into_iter().map(Into::into).collect();
        if set.is_empty() {
            return Err("symbol set must not be empty".into());
        }
        Ok(ParamValue::SymbolSet(set))
    }

    pub fn symbol(value: impl Into<String>) -> Self {
        ParamValue::SymbolSet(BTreeSet::from([value.into()]))
    }

    pub fn interval(lo: i64, hi: i64, unit: Unit) -> Result<Self, String> {
        if lo > hi {
            return Err(format!("interval lower bound {lo} exceeds upper bound {hi}"));
        }
        Ok(ParamValue::IntInterval { lo, hi, unit })
    }

    pub fn exact(value: i64, unit: Unit) -> Self {
        ParamValue::IntInterval {
            lo: value,
            hi: value,
            unit,
        }
    }

    /// N(p): the number of values still possible for the parameter.
    pub fn cardinality(&self) -> u64 {
        match self {
            ParamValue::SymbolSet(set) => set.len() as u64,
            ParamValue::IntInterval { lo, hi, .. } => (hi - lo) as u64 + 1,
            ParamValue::Undefined { cardinality } => *cardinality,
        }
    }

    pub fn is_defined(&self) -> bool {
        !matches!(self, ParamValue::Undefined { .. })
    }

    /// Intersection of two defined values of the same kind. `None` when the
    /// intersection is empty or the kinds differ.
    pub fn intersect(&self, other: &ParamValue) -> Option<ParamValue> {
        match (self, other) {
            (ParamValue::SymbolSet(a), ParamValue::SymbolSet(b)) => {
                let common: BTreeSet<String> = a.intersection(b).cloned().collect();
                (!common.is_empty()).then_some(ParamValue::SymbolSet(common))
            }
            (
                ParamValue::IntInterval { lo: l1, hi: h1, unit: u1 },
                ParamValue::IntInterval { lo: l2, hi: h2, unit: u2 },
            ) if u1 == u2 => {
                let lo = *l1.max(l2);
                let hi = *h1.min(h2);
                (lo <= hi).then_some(ParamValue::IntInterval { lo, hi, unit: *u1 })
            }
            _ => None,
        }
    }

    /// The single value as a lookup key, when exactly one value remains.
    pub fn exact_key(&self) -> Option<String> {
        match self {
            ParamValue::SymbolSet(set) if set.len() == 1 => set.iter().next().cloned(),
            ParamValue::IntInterval { lo, hi, .. } if lo == hi => Some(lo.to_string()),
            _ => None,
        }
    }
}

impl fmt::Display for ParamValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParamValue::SymbolSet(set) => {
                let items: Vec<&str> = set.iter().map(String::as_str).collect();
                if items.len() == 1 {
                    f.write_str(items[0])
                } else {
                    write!(f, "{{{}}}", items.join(","))
                }
            }
            ParamValue::IntInterval { lo, hi, unit } if lo == hi => write!(f, "{lo}{}", unit_suffix(*unit)),
            ParamValue::IntInterval { lo, hi, unit } => {
                write!(f, "[{lo}..{hi}]{}", unit_suffix(*unit))
            }
            ParamValue::Undefined { .. } => f.write_str("?"),
        }
    }
}

fn unit_suffix(unit: Unit) -> &'static str {
    match unit {
        Unit::Day => "d",
        Unit::Minute => "m",
    }
}

/// The information source behind a parameter value, most reliable first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Source {
    UserStatement,
    DomainKnowledge,
    DomainAssumption,
    UserModel,
    CommonSense,
    Undefined,
}

impl Source {
    pub const ALL: [Source; 6] = [
        Source::UserStatement,
        Source::DomainKnowledge,
        Source::DomainAssumption,
        Source::UserModel,
        Source::CommonSense,
        Source::Undefined,
    ];

    /// Kinds an indirect rule may declare as its source.
    pub fn is_indirect(self) -> bool {
        matches!(
            self,
            Source::DomainKnowledge | Source::DomainAssumption | Source::UserModel | Source::CommonSense
        )
    }
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// A source kind paired with its configured strength in (0, 1].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StrengthTag {
    pub kind: Source,
    pub strength: f64,
}

/// Strength per source kind.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "PascalCase", deny_unknown_fields)]
pub struct Strengths {
    pub user_statement: f64,
    pub domain_knowledge: f64,
    pub domain_assumption: f64,
    pub user_model: f64,
    pub common_sense: f64,
    pub undefined: f64,
}

impl Default for Strengths {
    fn default() -> Self {
        Strengths {
            user_statement: 1.0,
            domain_knowledge: 0.85,
            domain_assumption: 0.7,
            user_model: 0.55,
            common_sense: 0.4,
            undefined: 0.1,
        }
    }
}

impl Strengths {
    pub fn get(&self, kind: Source) -> f64 {
        match kind {
            Source::UserStatement => self.user_statement,
            Source::DomainKnowledge => self.domain_knowledge,
            Source::DomainAssumption => self.domain_assumption,
            Source::UserModel => self.user_model,
            Source::CommonSense => self.common_sense,
            Source::Undefined => self.undefined,
        }
    }

    pub fn tag(&self, kind: Source) -> StrengthTag {
        StrengthTag {
            kind,
            strength: self.get(kind),
        }
    }
}

/// The three plan-inference rules that map a statement onto operators.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MatchRule {
    Precondition,
    Effect,
    Body,
}

impl MatchRule {
    pub const ALL: [MatchRule; 3] = [MatchRule::Precondition, MatchRule::Effect, MatchRule::Body];
}

/// Probability mass allotted to each plan-inference rule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RuleMass {
    pub precondition: f64,
    pub effect: f64,
    pub body: f64,
}

impl RuleMass {
    pub fn new(precondition: f64, effect: f64, body: f64) -> Self {
        RuleMass {
            precondition,
            effect,
            body,
        }
    }

    pub fn get(&self, rule: MatchRule) -> f64 {
        match rule {
            MatchRule::Precondition => self.precondition,
            MatchRule::Effect => self.effect,
            MatchRule::Body => self.body,
        }
    }

    pub fn total(&self) -> f64 {
        self.precondition + self.effect + self.body
    }
}

impl Default for RuleMass {
    fn default() -> Self {
        RuleMass::new(1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0)
    }
}

/// How ICNORM is derived for the probability update.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IcNormMode {
    /// Most negative attainable IC over the plan structures in the set.
    #[default]
    Min,
    /// Sum of the current IC of every interpretation in the set.
    Sum,
}

impl std::str::FromStr for IcNormMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "min" => Ok(IcNormMode::Min),
            "sum" => Ok(IcNormMode::Sum),
            other => Err(format!("unknown icnorm mode `{other}` (expected min|sum)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EngineConfig {
    pub rule_mass_priors: RuleMass,
    /// Rule-mass triple used in place of the priors for a given meta predicate.
    pub meta_bias: BTreeMap<String, RuleMass>,
    pub strengths: Strengths,
    /// Raw weight of the Introduction relation.
    pub intro_weight: f64,
    /// Per-step decay of elaboration weight with topic distance.
    pub elaboration_decay: f64,
    /// Multiplier applied by a cue that names a relation or a topic.
    pub cue_boost: f64,
    /// Multiplier on elaborating the most recent topic under DIGRESS.
    pub digression_damping: f64,
    pub threshold_direct: f64,
    pub threshold_indirect: f64,
    pub icnorm: IcNormMode,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            rule_mass_priors: RuleMass::default(),
            meta_bias: BTreeMap::from([
                ("WANT".to_string(), RuleMass::new(0.2, 0.6, 0.2)),
                ("CAN".to_string(), RuleMass::new(0.6, 0.2, 0.2)),
                ("MUST".to_string(), RuleMass::new(0.2, 0.6, 0.2)),
            ]),
            strengths: Strengths::default(),
            intro_weight: 0.15,
            elaboration_decay: 0.5,
            cue_boost: 3.0,
            digression_damping: 0.3,
            threshold_direct: 0.5,
            threshold_indirect: 0.7,
            icnorm: IcNormMode::Min,
        }
    }
}

impl EngineConfig {
    /// Rule masses before failed rules are redistributed.
    pub fn rule_masses(&self, meta: Option<&str>) -> RuleMass {
        meta.and_then(|m| self.meta_bias.get(m))
            .copied()
            .unwrap_or(self.rule_mass_priors)
    }

    pub fn tag(&self, kind: Source) -> StrengthTag {
        self.strengths.tag(kind)
    }
}

/// The set of values a parameter may range over.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Domain {
    Symbols { symbols: Vec<String> },
    Interval { interval: [i64; 2], unit: Unit },
}

impl Domain {
    pub fn cardinality(&self) -> u64 {
        match self {
            Domain::Symbols { symbols } => symbols.iter().collect::<BTreeSet<_>>().len() as u64,
            Domain::Interval { interval: [lo, hi], .. } => {
                if hi < lo {
                    0
                } else {
                    (hi - lo) as u64 + 1
                }
            }
        }
    }

    /// Whether a defined value lies inside this domain.
    pub fn admits(&self, value: &ParamValue) -> bool {
        match (self, value) {
            (Domain::Symbols { symbols }, ParamValue::SymbolSet(set)) => {
                set.iter().all(|s| symbols.iter().any(|d| d == s))
            }
            (Domain::Interval { interval: [dlo, dhi], unit }, ParamValue::IntInterval { lo, hi, unit: u }) => {
                unit == u && dlo <= lo && hi <= dhi
            }
            _ => false,
        }
    }

    pub fn undefined(&self) -> ParamValue {
        ParamValue::Undefined {
            cardinality: self.cardinality().max(1),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamDecl {
    pub name: String,
    pub domain: String,
    #[serde(default)]
    pub required: bool,
}

/// A predicate pattern inside a precondition or effect list. `args` maps
/// the statement's argument names onto the operator's parameter names.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PredicatePattern {
    pub predicate: String,
    #[serde(default)]
    pub args: BTreeMap<String, String>,
}

/// A STRIPS-style action definition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Operator {
    pub name: String,
    pub params: Vec<ParamDecl>,
    #[serde(default)]
    pub preconditions: Vec<PredicatePattern>,
    #[serde(default)]
    pub effects: Vec<PredicatePattern>,
    /// Names of operators this action decomposes into.
    #[serde(default)]
    pub body: Vec<String>,
}

impl Operator {
    pub fn param(&self, name: &str) -> Option<&ParamDecl> {
        self.params.iter().find(|p| p.name == name)
    }
}

/// How a rule walks the plan sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scope {
    /// Every plan in turn, referenced as `self`.
    Each,
    /// Every consecutive pair, referenced as `prev` and `next`.
    Adjacent,
    /// Applied once per interpretation; only `first` and `last` are available.
    Once,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Selector {
    #[serde(rename = "self")]
    This,
    Prev,
    Next,
    First,
    Last,
}

impl Selector {
    pub fn allowed_in(self, scope: Scope) -> bool {
        match self {
            Selector::First | Selector::Last => true,
            Selector::This => scope == Scope::Each,
            Selector::Prev | Selector::Next => scope == Scope::Adjacent,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamRef {
    pub plan: Selector,
    pub param: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LookupEntry {
    #[serde(rename = "match")]
    pub keys: Vec<String>,
    pub value: ParamValue,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShiftEntry {
    #[serde(rename = "match")]
    pub keys: Vec<String>,
    pub by: i64,
}

/// How a rule computes the value it concludes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
pub enum ValueExpr {
    /// The current value of another parameter.
    Copy(ParamRef),
    Constant(ParamValue),
    /// Table lookup keyed by the exact values of the given parameters.
    Lookup {
        keys: Vec<ParamRef>,
        entries: Vec<LookupEntry>,
    },
    /// An interval parameter shifted by an offset looked up in a table.
    Shift {
        from: ParamRef,
        keys: Vec<ParamRef>,
        entries: Vec<ShiftEntry>,
    },
}

impl ValueExpr {
    pub fn references(&self) -> Vec<&ParamRef> {
        match self {
            ValueExpr::Copy(r) => vec![r],
            ValueExpr::Constant(_) => Vec::new(),
            ValueExpr::Lookup { keys, .. } => keys.iter().collect(),
            ValueExpr::Shift { from, keys, .. } => std::iter::once(from).chain(keys.iter()).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Conclusion {
    pub plan: Selector,
    pub param: String,
    pub value: ValueExpr,
}

/// An indirect-inference rule: when its pattern matches, it proposes a value
/// for one parameter, tagged with the rule's source kind.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IndirectRule {
    pub name: String,
    pub source: Source,
    pub scope: Scope,
    /// Operators the concluded plan must instantiate; empty means any.
    #[serde(default)]
    pub operators: Vec<String>,
    /// Parameters that must be defined for the rule to apply.
    #[serde(default)]
    pub requires: Vec<ParamRef>,
    /// Pairs of parameters that must hold equal defined values.
    #[serde(default)]
    pub same: Vec<[ParamRef; 2]>,
    pub conclusion: Conclusion,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KnowledgeBase {
    pub operators: Vec<Operator>,
    #[serde(default)]
    pub rules: Vec<IndirectRule>,
    pub domains: BTreeMap<String, Domain>,
    #[serde(default)]
    pub config: EngineConfig,
}

#[derive(Debug, Error)]
pub enum KbError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed knowledge base: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("invalid knowledge base: {}", join_diagnostics(.0))]
    Validation(Vec<Diagnostic>),
}

fn join_diagnostics(diags: &[Diagnostic]) -> String {
    diags.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")
}

/// One violated knowledge-base invariant.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Diagnostic {
    #[error("operator `{0}` is defined more than once")]
    DuplicateOperator(String),
    #[error("operator `{operator}` declares parameter `{param}` more than once")]
    DuplicateParam { operator: String, param: String },
    #[error("parameter `{operator}.{param}` uses unknown domain `{domain}`")]
    UnknownDomain {
        operator: String,
        param: String,
        domain: String,
    },
    #[error("domain `{0}` is empty")]
    EmptyDomain(String),
    #[error("pattern {predicate} in operator `{operator}` maps to undeclared parameter `{param}`")]
    UnknownPatternParam {
        operator: String,
        predicate: String,
        param: String,
    },
    #[error("body of `{operator}` names unknown operator `{body}`")]
    UnknownBodyOperator { operator: String, body: String },
    #[error("operator `{0}` contains itself through its body")]
    BodyCycle(String),
    #[error("rule `{0}` is defined more than once")]
    DuplicateRule(String),
    #[error("rule `{rule}` has source {kind}, which is not an indirect kind")]
    DirectRuleSource { rule: String, kind: Source },
    #[error("rule `{rule}`: {message}")]
    BadRule { rule: String, message: String },
    #[error("config: {0}")]
    BadConfig(String),
}

/// Read, parse and validate a knowledge base.
pub fn load_kb(path: impl AsRef<Path>) -> Result<KnowledgeBase, KbError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| KbError::Io {
        path: path.display().to_string(),
        source,
    })?;
    KnowledgeBase::from_json_str(&text)
}

impl KnowledgeBase {
    pub fn from_json_str(text: &str) -> Result<Self, KbError> {
        let kb: KnowledgeBase = serde_json::from_str(text)?;
        let diags = validate_kb(&kb);
        if diags.is_empty() {
            Ok(kb)
        } else {
            Err(KbError::Validation(diags))
        }
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("knowledge base serializes")
    }

    pub fn operator(&self, name: &str) -> Option<&Operator> {
        self.operators.iter().find(|op| op.name == name)
    }

    pub fn domain_of(&self, operator: &str, param: &str) -> Option<&Domain> {
        let decl = self.operator(operator)?.param(param)?;
        self.domains.get(&decl.domain)
    }

    pub fn is_required(&self, operator: &str, param: &str) -> bool {
        self.operator(operator)
            .and_then(|op| op.param(param))
            .is_some_and(|p| p.required)
    }

    /// True when `general` appears, possibly transitively, in the body of
    /// `specific`.
    pub fn specializes(&self, specific: &str, general: &str) -> bool {
        let mut seen = HashSet::new();
        let mut stack = vec![specific];
        while let Some(name) = stack.pop() {
            let Some(op) = self.operator(name) else { continue };
            for child in &op.body {
                if child == general {
                    return true;
                }
                if seen.insert(child.as_str()) {
                    stack.push(child);
                }
            }
        }
        false
    }

    /// The operator a merged plan takes when `a` and `b` describe the same
    /// activity: the more specific one. `None` if they are unrelated.
    pub fn merged_operator<'a>(&self, a: &'a str, b: &'a str) -> Option<&'a str> {
        if a == b || self.specializes(a, b) {
            Some(a)
        } else if self.specializes(b, a) {
            Some(b)
        } else {
            None
        }
    }

    /// Rules in application order: strongest source first, file order within
    /// a strength level.
    pub fn rules_by_strength(&self) -> Vec<&IndirectRule> {
        let mut rules: Vec<&IndirectRule> = self.rules.iter().collect();
        let strengths = &self.config.strengths;
        rules.sort_by(|a, b| {
            strengths
                .get(b.source)
                .partial_cmp(&strengths.get(a.source))
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        rules
    }
}

/// Check every cross-reference and configuration range. Returns one
/// diagnostic per violation; empty when the knowledge base is sound.
pub fn validate_kb(kb: &KnowledgeBase) -> Vec<Diagnostic> {
    let mut diags = Vec::new();

    for (name, domain) in &kb.domains {
        if domain.cardinality() == 0 {
            diags.push(Diagnostic::EmptyDomain(name.clone()));
        }
    }

    let mut names = HashSet::new();
    for op in &kb.operators {
        if !names.insert(op.name.as_str()) {
            diags.push(Diagnostic::DuplicateOperator(op.name.clone()));
        }
        let mut params = HashSet::new();
        for p in &op.params {
            if !params.insert(p.name.as_str()) {
                diags.push(Diagnostic::DuplicateParam {
                    operator: op.name.clone(),
                    param: p.name.clone(),
                });
            }
            if !kb.domains.contains_key(&p.domain) {
                diags.push(Diagnostic::UnknownDomain {
                    operator: op.name.clone(),
                    param: p.name.clone(),
                    domain: p.domain.clone(),
                });
            }
        }
        for pattern in op.preconditions.iter().chain(&op.effects) {
            for target in pattern.args.values() {
                if op.param(target).is_none() {
                    diags.push(Diagnostic::UnknownPatternParam {
                        operator: op.name.clone(),
                        predicate: pattern.predicate.clone(),
                        param: target.clone(),
                    });
                }
            }
        }
    }
    for op in &kb.operators {
        let mut dangling = false;
        for child in &op.body {
            if kb.operator(child).is_none() {
                dangling = true;
                diags.push(Diagnostic::UnknownBodyOperator {
                    operator: op.name.clone(),
                    body: child.clone(),
                });
            }
        }
        if !dangling && kb.specializes(&op.name, &op.name) {
            diags.push(Diagnostic::BodyCycle(op.name.clone()));
        }
    }

    let mut rule_names = HashSet::new();
    for rule in &kb.rules {
        if !rule_names.insert(rule.name.as_str()) {
            diags.push(Diagnostic::DuplicateRule(rule.name.clone()));
        }
        validate_rule(kb, rule, &mut diags);
    }

    validate_config(&kb.config, &mut diags);
    diags
}

fn validate_rule(kb: &KnowledgeBase, rule: &IndirectRule, diags: &mut Vec<Diagnostic>) {
    let mut bad = |message: String| {
        diags.push(Diagnostic::BadRule {
            rule: rule.name.clone(),
            message,
        })
    };
    if !rule.source.is_indirect() {
        diags.push(Diagnostic::DirectRuleSource {
            rule: rule.name.clone(),
            kind: rule.source,
        });
        return;
    }
    for op in &rule.operators {
        if kb.operator(op).is_none() {
            bad(format!("filter names unknown operator `{op}`"));
        }
    }

    let declared = |param: &str| kb.operators.iter().any(|op| op.param(param).is_some());
    let conclusion = &rule.conclusion;
    let refs = rule
        .requires
        .iter()
        .chain(rule.same.iter().flatten())
        .chain(conclusion.value.references())
        .chain(std::iter::once(&ParamRef {
            plan: conclusion.plan,
            param: conclusion.param.clone(),
        }))
        .cloned()
        .collect::<Vec<_>>();
    for r in &refs {
        if !r.plan.allowed_in(rule.scope) {
            bad(format!("selector {:?} is not available in {:?} scope", r.plan, rule.scope));
        }
        if !declared(&r.param) {
            bad(format!("parameter `{}` is not declared by any operator", r.param));
        }
    }

    for r in conclusion.value.references() {
        if !rule.requires.contains(r) {
            bad(format!(
                "value references `{:?}.{}` without requiring it to be defined",
                r.plan, r.param
            ));
        }
    }

    match &conclusion.value {
        ValueExpr::Lookup { keys, entries } => {
            for e in entries {
                if e.keys.len() != keys.len() {
                    bad(format!("lookup entry {:?} has {} keys, expected {}", e.keys, e.keys.len(), keys.len()));
                }
            }
        }
        ValueExpr::Shift { keys, entries, .. } => {
            for e in entries {
                if e.keys.len() != keys.len() {
                    bad(format!("shift entry {:?} has {} keys, expected {}", e.keys, e.keys.len(), keys.len()));
                }
            }
        }
        ValueExpr::Constant(ParamValue::Undefined { .. }) => bad("constant must be a defined value".into()),
        _ => {}
    }
}

fn validate_config(cfg: &EngineConfig, diags: &mut Vec<Diagnostic>) {
    let mut bad = |msg: String| diags.push(Diagnostic::BadConfig(msg));

    let s = &cfg.strengths;
    if s.user_statement != 1.0 {
        bad(format!("strength of UserStatement must be 1.0, got {}", s.user_statement));
    }
    for pair in Source::ALL.windows(2) {
        let (hi, lo) = (s.get(pair[0]), s.get(pair[1]));
        if hi <= lo {
            bad(format!(
                "strength of {} ({hi}) must exceed strength of {} ({lo})",
                pair[0], pair[1]
            ));
        }
    }
    for kind in Source::ALL {
        let v = s.get(kind);
        if !(v > 0.0 && v <= 1.0) {
            bad(format!("strength of {kind} must lie in (0,1], got {v}"));
        }
    }

    let mut check_mass = |label: &str, m: &RuleMass| {
        let parts = [m.precondition, m.effect, m.body];
        if parts.iter().any(|v| !v.is_finite() || *v < 0.0) {
            bad(format!("{label} rule masses must be non-negative"));
        } else if (m.total() - 1.0).abs() > 1e-9 {
            bad(format!("{label} rule masses sum to {}, expected 1", m.total()));
        }
    };
    check_mass("prior", &cfg.rule_mass_priors);
    for (meta, row) in &cfg.meta_bias {
        check_mass(&format!("meta-bias `{meta}`"), row);
    }

    let open_unit = |v: f64| v > 0.0 && v < 1.0;
    let closed_unit = |v: f64| (0.0..=1.0).contains(&v);
    if !open_unit(cfg.intro_weight) {
        bad(format!("intro_weight must lie in (0,1), got {}", cfg.intro_weight));
    }
    if !open_unit(cfg.elaboration_decay) {
        bad(format!("elaboration_decay must lie in (0,1), got {}", cfg.elaboration_decay));
    }
    if !(cfg.cue_boost > 1.0 && cfg.cue_boost.is_finite()) {
        bad(format!("cue_boost must exceed 1, got {}", cfg.cue_boost));
    }
    if !open_unit(cfg.digression_damping) {
        bad(format!("digression_damping must lie in (0,1), got {}", cfg.digression_damping));
    }
    if !closed_unit(cfg.threshold_direct) {
        bad(format!("threshold_direct must lie in [0,1], got {}", cfg.threshold_direct));
    }
    if !closed_unit(cfg.threshold_indirect) {
        bad(format!("threshold_indirect must lie in [0,1], got {}", cfg.threshold_indirect));
    }
}
