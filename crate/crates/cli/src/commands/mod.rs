pub mod balance;
pub mod simulate;
pub mod sweep;
pub mod traps;

pub use balance::cmd_balance;
pub use simulate::{cmd_simulate, run_experiment, SimulateOptions};
pub use sweep::{cmd_sweep, SweepSpec};
pub use traps::{cmd_learn, cmd_traps, load_patterns};
