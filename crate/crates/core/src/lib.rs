pub mod bits;
pub mod channel;
pub mod error;
pub mod fec;
pub mod framing;
pub mod harness;
pub mod mode;
pub mod modem;
pub mod receiver;
pub mod rll;

pub use bits::BitSequence;
pub use error::{Error, Result};
