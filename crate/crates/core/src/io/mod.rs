//! File formats and feature encoding.

mod checkpoint;
mod events;
mod hashing;
mod reports;

pub use checkpoint::{load_checkpoint, save_checkpoint, Checkpoint, SCHEMA_VERSION};
pub use events::{
    default_brand_name, default_user_name, load_event_file, load_events, write_events, EventFile,
    IdMap,
};
pub use hashing::{hash_features, token_hash, token_slot, DEFAULT_HASH_WIDTH};
pub use reports::{
    load_ground_truth, load_metrics_report, read_rankings, read_trace, save_ground_truth,
    save_metrics_report, write_rankings, write_trace, RankedItem, TruthFile,
};
