//! Shared inputs for the benchmarks.

use xgen_core::config::RunConfig;
use xgen_core::doc::{RuleClassifier, RuleTagger};
use xgen_core::eval::{EvalConfig, GeneratedSet, Reference};
use xgen_core::fixtures::{self, AIRCRAFT_REFERENCE, CORPUS};
use xgen_core::gen::{ExampleLibrary, StubBackend};
use xgen_core::kernel::SimulationConfig;
use xgen_core::pipeline::Pipeline;

/// Every bundled source file, concatenated.
pub fn corpus_text() -> String {
    CORPUS.iter().chain(AIRCRAFT_REFERENCE.iter()).map(|(_, t)| *t).collect::<Vec<_>>().join("\n")
}

pub fn aircraft_simulation() -> SimulationConfig {
    SimulationConfig {
        end_time: 100.0,
        continuous_step: 0.1,
        ..SimulationConfig::default()
    }
}

/// The reference scored against itself.
pub fn self_evaluation() -> (GeneratedSet, Reference, EvalConfig) {
    let cfg = EvalConfig {
        simulation: aircraft_simulation(),
        ..EvalConfig::default()
    };
    let reference = Reference::new(fixtures::aircraft_reference(), &cfg.simulation).expect("reference simulates");
    (GeneratedSet::parse(&fixtures::aircraft_sources()), reference, cfg)
}

pub fn stub_backend() -> StubBackend {
    StubBackend::new(fixtures::aircraft_reference())
}

/// Aircraft pipeline over `backend` with the rule tagger and bundled examples.
pub fn pipeline(backend: &StubBackend) -> Pipeline<'_> {
    let cfg = RunConfig::from_toml(fixtures::AIRCRAFT_CONFIG, ".").expect("bundled config");
    Pipeline {
        backend,
        tagger: &RuleTagger,
        classifier: &RuleClassifier,
        library: ExampleLibrary::new(fixtures::library_units(), cfg.pipeline.shots),
        settings: cfg.pipeline.clone(),
        convention: cfg.port_convention,
        limits: cfg.limits(),
    }
}
