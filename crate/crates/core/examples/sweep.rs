//! A short Monte-Carlo RMSE sweep; the CSV goes to stdout.

use ofdm_radar_doa::harness::{rmse_sweep, write_summary_csv, ExperimentConfig};

fn main() -> ofdm_radar_doa::Result<()> {
    let cfg = ExperimentConfig {
        n_targets: vec![2, 6],
        tx_power_dbm: vec![20.0, 40.0],
        n_trials: 10,
        ..ExperimentConfig::default()
    };
    let result = rmse_sweep(&cfg)?;
    write_summary_csv(std::io::stdout().lock(), &result.rows)
}
