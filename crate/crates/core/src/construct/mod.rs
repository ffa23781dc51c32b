//! Lie algebras with hypo structures built from Kahler data, explicit families, the
//! inducing-structure solver for cocalibrated G2-structures, and the fixture catalog.

mod builders;
mod catalog;
mod diagonal;
pub(crate) mod inducing;
mod kahler;

pub use builders::{build_almost_abelian, build_class_ii, symplectic_residual};
pub use catalog::{catalog, catalog_ids, Fixture};
pub use diagonal::{diagonal_conditions, normal_form_matrix, DiagonalCase, DiagonalConditions};
pub use inducing::find_inducing_hypo;
pub use kahler::{build_domega_ideal, build_kahler_extension, quotient_by_reeb, KahlerData};
