//! Block Toeplitz and Hankel operators whose symbols are built from finite
//! Blaschke products: exact symbol arithmetic, finite sections with error
//! bounds, hyponormality and normality verdicts, inner matrix function
//! divisors, and the 2x2 subnormal completion classifier.

pub mod blaschke;
pub mod classify;
pub mod cli;
pub mod completion;
pub mod error;
pub mod hardy_ops;
pub mod inner_matrix;
pub mod poly;
pub mod quadrature;
pub mod symbol;
