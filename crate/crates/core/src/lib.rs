pub mod convolution;
pub mod dirichlet;
pub mod error;
pub mod estimates;
pub mod geometry;
pub mod kernels;
pub mod noise;
pub mod quad;
pub mod report;
pub mod semigroup;

pub use error::{Error, Result};

#[cfg(doctest)]
mod guide {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/domains.md")]
    mod domains {}
    #[doc = include_str!("../../../book/src/kernels.md")]
    mod kernels {}
    #[doc = include_str!("../../../book/src/semigroup.md")]
    mod semigroup {}
    #[doc = include_str!("../../../book/src/dirichlet.md")]
    mod dirichlet {}
    #[doc = include_str!("../../../book/src/noise.md")]
    mod noise {}
    #[doc = include_str!("../../../book/src/convolution.md")]
    mod convolution {}
    #[doc = include_str!("../../../book/src/simulation.md")]
    mod simulation {}
}
