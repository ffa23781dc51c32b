pub mod algebra;
pub mod construct;
pub mod error;
pub mod flow;
pub mod geometry;
pub mod gstruct;
pub mod io;
pub mod reproduce;
pub mod torsion;
