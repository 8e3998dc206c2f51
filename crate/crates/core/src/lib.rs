pub mod charfn;
pub mod density;
pub mod error;
pub mod functionals;
pub mod lp;
pub mod moments;
pub mod poly;
pub mod report;

pub use error::{Error, Result};
pub use poly::{random_in_class, ClassParams, CoefficientLaw, MultiIndex, Polynomial};
