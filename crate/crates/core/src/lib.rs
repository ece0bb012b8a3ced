// `!(x > 0.0)` is used on purpose: it rejects NaN along with the out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli_io;
pub mod error;
pub mod fokker_planck;
pub mod master_equation;
pub mod quadrature;
pub mod statistics;
pub mod structure_factor;
pub mod vector;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/statistics.md")]
    mod statistics {}
    #[doc = include_str!("../../../book/src/structure-factor.md")]
    mod structure_factor {}
    #[doc = include_str!("../../../book/src/master-equation.md")]
    mod master_equation {}
    #[doc = include_str!("../../../book/src/fokker-planck.md")]
    mod fokker_planck {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
