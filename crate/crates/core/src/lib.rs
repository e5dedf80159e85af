#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bessel;
pub mod error;
pub mod estimation;
pub mod ext;
pub mod io;
pub mod likelihood;
pub mod model;
pub mod quad;
pub mod sde;
pub mod separating;
pub mod stats;
pub mod verify;

pub use error::{Error, Result};
pub use ext::ExtReal;
pub use model::{BoundaryClass, EtaSpec, MutSelParams};
