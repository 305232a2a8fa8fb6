//! Experiment driver for skew products on the Heisenberg nilmanifold:
//! configuration, self-verification, experiment commands and run manifests.

pub mod commands;
pub mod config;
pub mod manifest;
pub mod verify;
