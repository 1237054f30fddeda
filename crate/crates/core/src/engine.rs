//! The statement-by-statement driver.
//!
//! A [`Session`] holds the live interpretation set. Each domain statement is
//! turned into fragments, combined with the live set, pruned, reweighted by
//! information content and pruned again. [`Session::finalize`] runs indirect
//! inference over the survivors and ranks them.

use std::collections::BTreeSet;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::direct::{self, CandidateRecord, DirectError, Interpretation, PlanFragment, Status};
use crate::discourse::{detect_cues, Cue, Predicate};
use crate::indirect::{saturate_report, AppliedRule};
use crate::knowledge::{EngineConfig, IcNormMode, KnowledgeBase};
use crate::scoring::{completion_check, ic_interpretation, update_with_norm, IcReport};

/// When indirect inference runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum IndirectMode {
    /// Only once, at the end of the dialogue.
    #[default]
    Final,
    /// After every statement as well.
    PerStatement,
}

impl std::str::FromStr for IndirectMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "final" => Ok(IndirectMode::Final),
            "per-statement" => Ok(IndirectMode::PerStatement),
            other => Err(format!("unknown indirect mode `{other}` (expected final or per-statement)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EngineOptions {
    pub threshold_direct: f64,
    pub threshold_indirect: f64,
    pub icnorm: IcNormMode,
    pub indirect: IndirectMode,
    /// Record a [`TraceEvent`] log.
    pub trace: bool,
}

impl EngineOptions {
    pub fn from_config(cfg: &EngineConfig) -> Self {
        EngineOptions {
            threshold_direct: cfg.threshold_direct,
            threshold_indirect: cfg.threshold_indirect,
            icnorm: cfg.icnorm,
            indirect: IndirectMode::Final,
            trace: false,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EngineError {
    #[error("statement {index}: {source}")]
    Direct {
        index: usize,
        #[source]
        source: DirectError,
    },
}

/// One step of the inference, kept when tracing is on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum TraceEvent {
    Statement {
        index: usize,
        predicate: String,
        cues: BTreeSet<Cue>,
    },
    Fragments {
        index: usize,
        fragments: Vec<PlanFragment>,
    },
    Candidates {
        index: usize,
        candidates: Vec<CandidateRecord>,
    },
    Pruned {
        index: Option<usize>,
        stage: String,
        kept: Vec<String>,
        dropped: Vec<String>,
    },
    IcUpdate {
        index: Option<usize>,
        icnorm: Option<f64>,
        probabilities: Vec<f64>,
    },
    Saturated {
        index: Option<usize>,
        interpretation: String,
        passes: usize,
        applied: Vec<AppliedRule>,
        status: Status,
        hit_pass_limit: bool,
    },
    Diagnostic {
        index: Option<usize>,
        message: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ranked {
    pub rank: usize,
    pub interpretation: Interpretation,
    pub ic: IcReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FinalResult {
    pub ranked: Vec<Ranked>,
    pub icnorm: Option<f64>,
    pub statements: usize,
    pub diagnostics: Vec<String>,
    pub trace: Vec<TraceEvent>,
}

#[derive(Debug, Clone)]
pub struct Session {
    kb: Arc<KnowledgeBase>,
    options: EngineOptions,
    live: Vec<Interpretation>,
    pending: BTreeSet<Cue>,
    statements: usize,
    trace: Vec<TraceEvent>,
    diagnostics: Vec<String>,
}

fn summaries(set: &[Interpretation]) -> Vec<String> {
    set.iter().map(|i| format!("{} p={:.4}", i.summary(), i.probability)).collect()
}

impl Session {
    pub fn new(kb: Arc<KnowledgeBase>, options: EngineOptions) -> Self {
        Session {
            kb,
            options,
            live: Vec::new(),
            pending: BTreeSet::new(),
            statements: 0,
            trace: Vec::new(),
            diagnostics: Vec::new(),
        }
    }

    /// A session using the thresholds and ICNORM mode from the KB config.
    pub fn with_defaults(kb: Arc<KnowledgeBase>) -> Self {
        let options = EngineOptions::from_config(&kb.config);
        Session::new(kb, options)
    }

    pub fn kb(&self) -> &KnowledgeBase {
        &self.kb
    }

    pub fn options(&self) -> &EngineOptions {
        &self.options
    }

    pub fn live(&self) -> &[Interpretation] {
        &self.live
    }

    pub fn pending_cues(&self) -> &BTreeSet<Cue> {
        &self.pending
    }

    /// Number of predicates seen, cue markers included.
    pub fn statements(&self) -> usize {
        self.statements
    }

    pub fn trace(&self) -> &[TraceEvent] {
        &self.trace
    }

    pub fn diagnostics(&self) -> &[String] {
        &self.diagnostics
    }

    fn record(&mut self, event: TraceEvent) {
        if self.options.trace {
            self.trace.push(event);
        }
    }

    /// Feed one predicate. On error the live set and pending cues are left
    /// as they were and the error is also kept as a diagnostic.
    pub fn process_statement(&mut self, pred: &Predicate) -> Result<(), EngineError> {
        let index = self.statements;
        self.statements += 1;
        let cues = detect_cues(pred);
        self.record(TraceEvent::Statement {
            index,
            predicate: pred.name.clone(),
            cues: cues.clone(),
        });
        if pred.is_cue_only() {
            self.pending.extend(cues);
            return Ok(());
        }

        match self.step(pred, index, &cues) {
            Ok(()) => {
                self.pending.clear();
                Ok(())
            }
            Err(source) => {
                let err = EngineError::Direct { index, source };
                self.diagnostics.push(err.to_string());
                self.record(TraceEvent::Diagnostic {
                    index: Some(index),
                    message: err.to_string(),
                });
                Err(err)
            }
        }
    }

    fn step(&mut self, pred: &Predicate, index: usize, cues: &BTreeSet<Cue>) -> Result<(), DirectError> {
        let kb = Arc::clone(&self.kb);
        let frags = direct::interpret_predicate(pred, &kb)?;
        let mut active = self.pending.clone();
        active.extend(cues.iter().cloned());
        let (combined, candidates) = direct::combine_logged(&self.live, &frags, &active, index, &kb)?;
        self.record(TraceEvent::Fragments {
            index,
            fragments: frags,
        });
        self.record(TraceEvent::Candidates { index, candidates });

        let mut set = self.prune(combined, self.options.threshold_direct, Some(index), "direct");
        if self.options.indirect == IndirectMode::PerStatement {
            set = set
                .into_iter()
                .map(|i| self.saturate_one(&i, Some(index)))
                .collect();
        }
        let (updated, norm) = update_with_norm(&set, &kb, self.options.icnorm);
        self.record(TraceEvent::IcUpdate {
            index: Some(index),
            icnorm: norm,
            probabilities: updated.iter().map(|i| i.probability).collect(),
        });
        self.live = self.prune(updated, self.options.threshold_direct, Some(index), "ic");
        Ok(())
    }

    fn prune(&mut self, set: Vec<Interpretation>, threshold: f64, index: Option<usize>, stage: &str) -> Vec<Interpretation> {
        let (kept, dropped) = direct::prune_logged(set, threshold);
        self.record(TraceEvent::Pruned {
            index,
            stage: stage.to_string(),
            kept: summaries(&kept),
            dropped: summaries(&dropped),
        });
        kept
    }

    fn saturate_one(&mut self, interp: &Interpretation, index: Option<usize>) -> Interpretation {
        let run = saturate_report(interp, &self.kb);
        if run.hit_pass_limit {
            let message = format!("saturation pass limit reached for {}", interp.summary());
            self.diagnostics.push(message.clone());
            self.record(TraceEvent::Diagnostic { index, message });
        }
        self.record(TraceEvent::Saturated {
            index,
            interpretation: interp.summary(),
            passes: run.passes,
            applied: run.applied,
            status: run.interpretation.status,
            hit_pass_limit: run.hit_pass_limit,
        });
        run.interpretation
    }

    /// Saturate, reweight, prune at the indirect threshold and rank. Does
    /// not change the live set.
    ///
    /// Interpretations are saturated best first; once one of them is
    /// complete the rest are left as they are.
    pub fn finalize(&self) -> FinalResult {
        let mut work = self.clone();
        work.trace.clear();
        let kb = Arc::clone(&work.kb);

        let mut saturated = Vec::with_capacity(work.live.len());
        let mut done = false;
        for interp in self.live.iter() {
            if done {
                let mut kept = interp.clone();
                kept.status = completion_check(&kept, &kb);
                saturated.push(kept);
                continue;
            }
            let out = work.saturate_one(interp, None);
            done = out.status == Status::Complete;
            saturated.push(out);
        }

        let (updated, norm) = if saturated.is_empty() {
            (saturated, None)
        } else {
            update_with_norm(&saturated, &kb, work.options.icnorm)
        };
        work.record(TraceEvent::IcUpdate {
            index: None,
            icnorm: norm,
            probabilities: updated.iter().map(|i| i.probability).collect(),
        });
        let kept = work.prune(updated, work.options.threshold_indirect, None, "indirect");

        let ranked = kept
            .into_iter()
            .enumerate()
            .map(|(i, interpretation)| {
                let mut ic = ic_interpretation(&interpretation, &kb);
                ic.icnorm = norm;
                Ranked {
                    rank: i + 1,
                    interpretation,
                    ic,
                }
            })
            .collect();

        let mut trace = self.trace.clone();
        trace.extend(work.trace);
        FinalResult {
            ranked,
            icnorm: norm,
            statements: self.statements,
            diagnostics: work.diagnostics,
            trace,
        }
    }

    /// Forget the dialogue; the KB and options are kept.
    pub fn reset(&mut self) {
        self.live.clear();
        self.pending.clear();
        self.statements = 0;
        self.trace.clear();
        self.diagnostics.clear();
    }
}
