//! Service boundary for the coordination engine: HTTP routes, the
//! scenario runner and the command-line entry points.

pub mod cli;
pub mod config;
pub mod http;
pub mod scenario;

pub use config::GatewayConfig;
pub use http::{router, serve, ServeError, ServerHandle};
pub use scenario::{run_scenario, RunTranscript, ScenarioError, ScenarioScript};
