pub mod damping;
pub mod discrete_bath;
pub mod error;
pub mod oracle;
pub mod quad;
pub mod response;
pub mod specfun;
pub mod thermo;
pub mod verify;

pub use error::{Error, Result};
