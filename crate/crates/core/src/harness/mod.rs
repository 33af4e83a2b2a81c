//! Datasets, synthetic generation, metrics and the three experiments.

pub mod dataset;
pub mod experiments;
pub mod generator;
pub mod metrics;
pub mod report;
pub mod vocab;

pub use dataset::{load_dataset, read_jsonl, save_dataset, write_jsonl, ConversationRecord, Label, RecordSentence};
pub use experiments::{
    run_gap_experiment, run_length_experiment, run_residual_experiment, score_record, GapOptions,
    LengthOptions, ResidualOptions, ResidualOutcome, ScoredRecord,
};
pub use generator::{generate, generate_corpus, BandConfig, CorpusKind, GeneratorConfig, LabelMix};
pub use metrics::{compute_metrics, MetricsReport, Outcome};
pub use report::{config_digest, BucketReport, Histogram, Report, SideReport};
