//! Lévy exponents, random integral mappings and their compositions, with
//! quadrature and Monte Carlo checks of the identities between them.

#![allow(clippy::excessive_precision, clippy::neg_cmp_op_on_partial_ord)]

pub mod cli_app;
pub mod error;
pub mod levy_core;
pub mod mapping_catalog;
pub mod integral_map;
pub mod measure_alg;
pub mod path_sim;
pub mod quadrature;
pub mod special_fn;

pub use error::{Error, Result};
