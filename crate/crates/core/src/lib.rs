pub mod error;
pub mod num;
pub mod params;
pub mod hurwitz;
pub mod cotk;
pub mod linform;
pub mod saddle;
pub mod quadrature;
pub mod bound;
pub mod verify;

pub use error::{Error, ErrorKind, Result};
pub use params::{NMode, Params, PrecisionPolicy};
