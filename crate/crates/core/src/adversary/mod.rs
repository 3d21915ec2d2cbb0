//! Attack harnesses and PUF quality metrics.

pub mod metrics;
pub mod modeling;
pub mod replay;

pub use metrics::{puf_metrics, PufMetrics, ResponseSource};
pub use modeling::{
    collect_crps, collect_naked_crps, collect_obfuscated_crps, dataset_from_text, dataset_to_text, train_linear_attack,
    CrpKind, CrpRecord, LinearAttackModel, TrainParams,
};
pub use replay::{replay_attack, AttackReport, IntervalPolicy, ReplayAttacker, ReplayScenario, ReplaySessionLog};
