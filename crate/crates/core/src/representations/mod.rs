//! Fixed-size representations over local features: visual-word dictionaries,
//! bag-of-words histograms and incremental (local) LDA topic models.

mod dictionary;
mod lda;

pub use dictionary::{
    assign_words, bow_encode, bow_encode_vectors, build_dictionary, build_dictionary_traced, BowHistogram, Dictionary,
};
pub use lda::{
    lda_infer, lda_infer_counts, lda_update, local_lda_update, phi, LdaParams, TopicHistogram, TopicModel, TopicScope,
    DEFAULT_ALPHA, DEFAULT_BETA, DEFAULT_GIBBS_ITERS, DEFAULT_TOPICS,
};

/// Default dictionary size.
pub const DEFAULT_DICTIONARY_SIZE: usize = 90;
