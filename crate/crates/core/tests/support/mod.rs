//! Shared fixtures for the integration tests and the acceptance runner.
#![allow(dead_code)]

pub mod gen;
pub mod oracle;
pub mod toy;

use std::path::PathBuf;
use std::sync::Arc;

use planrec::KnowledgeBase;
use proptest::test_runner::{Config, RngAlgorithm, TestRng, TestRunner};

pub fn travel() -> Arc<KnowledgeBase> {
    Arc::new(KnowledgeBase::from_json_str(planrec::TRAVEL_KB).unwrap())
}

pub fn manifest_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
}

pub fn example(name: &str) -> PathBuf {
    manifest_dir().join("examples").join(name)
}

pub fn kb_path() -> PathBuf {
    manifest_dir().join("kb/travel.json")
}

/// A deterministic runner: fixed ChaCha seed, no failure persistence.
pub fn runner(cases: u32, seed: u8) -> TestRunner {
    let config = Config {
        cases,
        failure_persistence: None,
        max_shrink_iters: 2000,
        ..Config::default()
    };
    TestRunner::new_with_rng(config, TestRng::from_seed(RngAlgorithm::ChaCha, &[seed; 32]))
}
