//! Isometries `S(f_i)` on `L^2(X, dx)`, words in them, and checks of the
//! Cuntz relations and of the embedding of the infinite algebra.

mod checks;
mod eval;
mod test_function;
mod word;

pub use checks::{
    check_alternative_embedding, check_cuntz_relations, check_embedding, Completeness, CompletenessEntry, CuntzConfig,
    Deviation, EmbeddingReport, RelationReport, WordRelationReport, FLOAT_TOLERANCE,
};
pub use eval::{
    apply_adjoint, apply_generator, apply_word, sample_expr, Evaluator, PointFunction, Representation, RootScalar,
};
pub use test_function::{standard_test_functions, TestFunction};
pub use word::{alternative_embedding, embedding_word, Letter, OperatorExpr, OperatorWord};
