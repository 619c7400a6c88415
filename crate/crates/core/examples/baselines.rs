//! Proposed estimator against global MUSIC and DFT beam selection on a scene
//! with more targets than receive antennas.

use ofdm_radar_doa::baselines::Method;
use ofdm_radar_doa::harness::{run_trial, ExperimentConfig, SweepPoint};

fn main() {
    let cfg = ExperimentConfig::default();
    let point = SweepPoint {
        n_targets: 6,
        tx_power_dbm: 40.0,
    };
    for trial in 0..3 {
        let record = run_trial(&cfg, point, trial);
        println!("trial {trial}:");
        for method in Method::ALL {
            let o = record.outcome(method).unwrap();
            println!(
                "  {:<17} RMSE {:6.2} deg  misses {}  flagged {}",
                method.as_str(),
                o.rmse_deg(),
                o.misses,
                o.flagged
            );
        }
    }
}
