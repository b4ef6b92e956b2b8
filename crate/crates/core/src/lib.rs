#![no_std]
#![doc = include_str!("../README.md")]

extern crate alloc;

pub mod boundary;
pub mod error;
pub mod geometry;
pub mod measure;
pub mod numeric;
pub mod spectral;
pub mod tauberian;
pub mod transport;

pub use error::{Error, Result};
