//! Ranking metrics, significance testing and the repetition and ablation
//! pipelines.

mod auc;
mod experiment;
mod stats;

pub use auc::{auc, auc_brute_force};
pub use experiment::{
    ablation_report, evaluate, repeat_experiment, run_ablation, run_ablation_repetition, run_repetition,
    summarize, AblationReport, AblationRepetition, ClassReport, ExperimentConfig, ExperimentReport, Repetition,
    Summary, TestScores,
};
pub use stats::{mean, regularized_incomplete_beta, sample_std, student_t_two_sided, welch_t_test, WelchTest};
