//! SU(3)-, G2- and Sp(1)-structures on Lie algebras and the stable forms behind them.

mod g2;
pub(crate) mod kernel;
pub mod model;
mod sp1;
mod stable;
mod su3;

pub(crate) use g2::from_mat7;
pub use g2::{g2_metric, su3_from_g2, su3_to_g2, G2Structure};
pub use sp1::{sp1_hypo_residual, sp1_to_su3, Sp1Structure};
pub use stable::{stable_three_form_data, StableData};
pub(crate) use su3::kernel_frame;
pub use su3::{validate_su3, Su3Structure};
