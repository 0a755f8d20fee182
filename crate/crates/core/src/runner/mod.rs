//! Configuration, reference presets, sweeps and CSV/plot artifacts.

pub mod commands;
pub mod config;
pub mod output;
pub mod plots;
pub mod presets;

pub use commands::{
    cmd_harmonic_mean, cmd_run, cmd_sweep_barenblatt, cmd_sweep_relevant, cmd_table, execute,
    parse_rows, relevant_amplitude, run_barenblatt_sweep, run_relevant_sweep, run_table,
    BarenblattEntry, CommandError, RelevantEntry, RelevantSweep, RunOutcome, RunOverrides,
    TableEntry, DEFAULT_EPSILONS,
};
pub use config::{parse_config, ConfigError, OutputConfig, OutputFiles, RunConfig};
pub use output::SummaryRow;
pub use plots::{cmd_plots, emit_plots};
pub use presets::{initial_datum, preset, PresetRow, PRESETS, PRESET_COUNT};
