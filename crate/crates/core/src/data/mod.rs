//! Measurement data: channel schema and normalization, profiles, CSV I/O and
//! cross-validation folds.

mod folds;
mod ingest;
mod profile;
mod schema;

pub use folds::{make_folds, CvIteration, CvSplit, FoldPlan, FoldRole, FoldSets};
pub use ingest::{derive_vector_norms, ingest_csv, ingest_reader, write_csv, write_csv_to};
pub use profile::{split_subsequences, MeasurementProfile, ProfileDims};
pub use schema::{denormalize, normalize, ChannelSchema};
