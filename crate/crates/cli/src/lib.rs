pub mod config;
pub mod pipeline;

pub use config::{ConfigError, RunConfig};
pub use pipeline::{run_from_path, RunError, Session, Step};
