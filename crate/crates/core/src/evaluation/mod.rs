//! Offline k-fold evaluation and the simulated-teacher protocols.

mod kfold;
mod metrics;
mod protocol;

pub use kfold::{fold_assignment, kfold, Labeled, DEFAULT_FOLDS};
pub use metrics::{metrics, ConfusionMatrix, Metrics, UNKNOWN_LABEL};
pub use protocol::{
    pick_rho, replay_accuracy, run_context_protocol, run_protocol, summarize, Action, Context, Introduction,
    Learner, ProtocolEvent, ProtocolLog, ProtocolParams, ProtocolSummary, Termination,
};
