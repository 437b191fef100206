//! Batch commands and the HTTP session service behind the `scaffold` binary.

pub mod commands;
pub mod service;
