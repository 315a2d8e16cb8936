//! Succinct sequences: wavelet trees, wavelet matrices and rank/select
//! structures, with parallel construction and work/span accounting.

pub mod archive;
pub mod bits;
pub mod error;
pub mod io;
pub mod oracle;
pub mod par;
pub mod rsb;
pub mod rsg;
pub mod var;
pub mod wt;

pub use error::{Error, Result};
