// NaN must fail every range check, so `!(x > 0.0)` is intentional.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod descent;
pub mod effective;
pub mod embedding;
pub mod experiment;
pub mod quantum;
pub mod seeds;
pub mod stats;
