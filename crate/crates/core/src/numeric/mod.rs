//! Numerical building blocks shared by every module.

pub mod fft;
pub mod gauss;
pub mod linalg;
pub mod stats;

pub use gauss::Rule;
pub use linalg::CMatrix;
pub use num_complex::Complex64 as C64;

/// `(re, im)` shorthand.
pub const fn c64(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}
