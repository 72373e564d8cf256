pub mod data;
pub mod demo;
pub mod error;
pub mod index;
pub mod numerics;
pub mod pipeline;
pub mod reference;
pub mod render;
pub mod robust;
pub mod tour;

pub use error::{Error, Result};
