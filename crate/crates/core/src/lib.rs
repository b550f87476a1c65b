pub mod arithmetic;
pub mod averages;
pub mod error;
pub mod euler;
pub mod identities;
pub mod quadrature;
pub mod shiftsets;
pub mod special;
pub mod testfn;
pub mod zeta;

pub use error::{Error, Result};
