//! Text formats: form expressions, JSON documents and reports, trajectory CSV.

mod documents;
mod expr;
mod run;

pub use documents::{
    read_trajectory_csv, write_trajectory_csv, AlgebraDocument, BracketEntry, BracketTerm,
    Coefficient, Notation, Structure, StructureDocument, StructureKind, SCHEMA,
};
pub use expr::{parse_form, parse_form_degree, parse_scalar};
pub use run::{run_flow, run_metric, RunConfig, RunSummary};
