//! Scenario files, CSV output and figure presets behind the `macgame`
//! command-line tool.

pub mod analysis;
pub mod error;
pub mod presets;
pub mod scenario_file;
pub mod simulate;
pub mod table;

pub use error::CliError;
pub use scenario_file::{ParseError, ScenarioFile, ScenarioFileError, Sweep, SweepParameter};
pub use table::Table;
