//! Skeleton sequences, ingestion, root-joint preprocessing and splits.

mod dataset;
mod io;
mod preprocess;
mod sequence;
mod split;

pub use dataset::LabeledDataset;
pub use io::{
    load_dataset, load_dataset_with_report, read_sequences, save_dataset, DatasetFormat,
    IngestReport, RawSequence, Rejection,
};
pub use preprocess::root_subtract;
pub use sequence::SkeletonSequence;
pub use split::{split, split_indices, stratified_folds, SplitIndices, SplitProtocol};
pub(crate) use split::stratified;
