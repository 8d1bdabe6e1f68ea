//! Command-line front end for the oel3d pipeline.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::type_complexity)]

pub mod commands;
pub mod config;
