//! Sequences, mutation, elite selection and the evaluated-dataset store.

mod dataset;
mod mutation;
mod selection;
mod sequence;

pub use dataset::{rank_order, DatasetError, Direction, EvaluationDataset, ScoredSequence};
pub use mutation::{mutate, propose_pool, MutationParams, MutationParamsError, ProposalPool, DEDUP_RETRY_FACTOR};
pub use selection::{select_elites, select_from_entries, SelectionError, SelectionStrategy};
pub use sequence::{parse_sequence, Alphabet, Sequence, SequenceError, ALPHABET_SIZE};
