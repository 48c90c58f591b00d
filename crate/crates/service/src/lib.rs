//! Index builder and HTTP service for guided ontology exploration.

pub mod api;
pub mod config;
pub mod endpoint;
pub mod error;
pub mod pipeline;
pub mod remote;
