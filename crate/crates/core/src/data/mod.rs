//! Dataset ingestion, synthetic generation, and the on-disk text formats.

pub(crate) mod formats;
mod labels;
mod letor;
mod synth;

pub use formats::{
    join_queries, read_dataset, read_embeddings, read_pairwise, read_predictions, read_rankings,
    read_utilities, write_dataset, write_embeddings, write_pairwise, write_predictions,
    write_rankings, write_utilities, DatasetPaths, PredictionRow,
};
pub use labels::{pairwise_from_utilities, ranking_from_relevance, ranking_from_utilities};
pub use letor::{parse_letor, write_letor, LetorItem, RawQuery};
pub use synth::{generate_query, generate_synthetic, SyntheticSpec};
