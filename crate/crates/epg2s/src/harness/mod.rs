//! Experiment orchestration and reporting: runs trained systems over test
//! corpora, tabulates metrics with Welch significance tests, and renders
//! deterministic reports.

pub mod experiment;
pub mod report;

pub use experiment::{
    run_enhancement_experiment, run_generation_experiment, unprocessed_ladder, EvalOptions,
    TrainedSystem, DEFAULT_EVAL_SNRS,
};
pub use report::{
    emit_per_utterance, emit_report, pairwise_p, parse_report, tables_from_per_utterance,
    ExperimentTable, ParsedTable, ReportFormat, SignificanceTest, SIGNIFICANCE_LEVEL,
};
