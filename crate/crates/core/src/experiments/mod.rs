//! Monte-Carlo sweeps, solution records and channel files.

pub mod channel_file;
pub mod dump;
pub mod selftest;
pub mod sweep;

pub use channel_file::{format_channel_file, parse_channel_file, read_channel_file, write_channel_file};
pub use dump::{dump_solution, read_solution, validate_record, SolutionRecord};
pub use selftest::{run_selftest, CheckResult, SelftestReport};
pub use sweep::{
    run_access_prob, run_sweep, AccessRow, AccessSpec, AccessTable, AxisUnit, SnrPattern, SolverKind,
    SweepAxis, SweepRow, SweepSpec, SweepTable,
};
