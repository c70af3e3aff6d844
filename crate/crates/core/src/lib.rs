//! Diversity analysis for generated dialogue responses.
//!
//! * [`corpus`], [`tokenize`], [`embeddings`]: response corpora, tokenization
//!   and the SEMB embedding format.
//! * [`lexical`]: Dist-n, Ent-n and Low-Frequency baselines.
//! * [`clustering`]: k-means semantic clusters and cluster distributions.
//! * [`sement`]: Sem-Ent, the entropy of the semantic cluster distribution.
//! * [`dress`]: focal sample weights and negative-training flags.
//! * [`toy`]: a small weighted-NLL trainer demonstrating the weighting.
//! * [`bradley_terry`], [`correlation`]: pairwise human-judgment analysis.
//! * [`robustness`]: Sem-Ent ranking stability across cluster counts.

pub mod bradley_terry;
pub mod clustering;
pub mod corpus;
pub mod correlation;
pub mod dress;
pub mod embeddings;
pub mod error;
pub mod io_util;
pub mod lexical;
pub mod robustness;
pub mod sement;
pub mod tokenize;
pub mod toy;

pub use clustering::{ClusterAssignment, ClusterModel, KMeansConfig, SemanticDistribution};
pub use corpus::{CorpusFormat, ResponseCorpus, ResponseRecord};
pub use embeddings::EmbeddingMatrix;
pub use error::{Error, Result};
pub use sement::SemEntScore;
pub use tokenize::TokenSequence;
