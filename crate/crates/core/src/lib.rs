//! Deterministic coordination engine for a sextortion-relief DAO.

pub mod agents;
pub mod casework;
pub mod digest;
pub mod engine;
pub mod governance;
pub mod identity;
pub mod ledger;
pub mod roles;
pub mod tokens;

pub use digest::Digest;
pub use engine::{Command, Engine, EngineConfig, EngineError};
