//! Building observed matrices from raw logs, cold-start filtering, and
//! synthetic data generation.

mod builders;
mod filter;
mod monotonic;
mod records;
mod synth;

pub use builders::{build_ctr_matrix, build_efficiency_matrix, build_rate_matrix, IdMapping, MatrixSummary};
pub use filter::{apply_filters, FilterConfig, Filtered};
pub use monotonic::{monotonic_experiment, Mapping, MonotonicConfig, MonotonicRow};
pub use records::{read_claims, read_ctr_events, read_views, ClaimRecord, CtrRecord, ViewRecord};
pub use synth::{reveal, synth_emf, synth_smf};
