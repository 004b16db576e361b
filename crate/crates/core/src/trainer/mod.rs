//! Training loop, validation metrics, weight sweeps and the ablation study.

mod dataset;
mod eval;
mod experiments;
mod output;
mod train;

pub use dataset::{collect_scenes, is_validation, split_fraction, Dataset, Example};
pub use eval::{evaluate, evaluate_expert, EvalReport, ExampleMetrics};
pub use experiments::{
    ablation, run_all, run_point, spearman, sweep, AblationReport, AblationRow, RunCache, RunKey,
    SweepPoint, SweepResult, SweepRow,
};
pub use output::{
    ensure_dir, write_ablation, write_bytes, write_csv, write_json, write_report, write_run,
    write_sweep, RunArtifacts,
};
pub use train::{train, train_on, EpochLog, StepLog, TrainOutcome};
