//! An interpreter for a small class-based object language together with a
//! checker for holistic assertions over its runs: assertions about
//! permission (`access`), authority (`calls`), time (`next`, `will`, `prev`,
//! `was`), space (`in S: A`) and viewpoint (`external`, `internal`).
//!
//! A check records one run of a driver against an internal module linked
//! with an external one, and judges the specification at every external
//! configuration of that run. "No violation found" is a statement about
//! that run only.

pub mod assertion;
pub mod ast;
pub mod checker;
pub mod corpus;
pub mod dump;
pub mod ghost;
pub mod interpreter;
pub mod props;
pub mod runtime;
pub mod sat;
pub mod syntax;
