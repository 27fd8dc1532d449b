//! Model bundles, the `dfs` command line and the HTTP acquisition service.

pub mod bundle;
pub mod cli;
pub mod http;
pub mod session;

pub use bundle::ModelBundle;
pub use session::SessionManager;
