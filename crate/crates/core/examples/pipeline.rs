//! The full estimator on one random scene, scored against the truth.

use ofdm_radar_doa::echo::synthesize_echo;
use ofdm_radar_doa::harness::{associate, doa_errors_deg, rms, Estimate};
use ofdm_radar_doa::ofdm::generate_frame;
use ofdm_radar_doa::params::{Scenario, ScenarioConfig, SystemParams};
use ofdm_radar_doa::pipeline::{estimate, ProposedConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

fn main() -> ofdm_radar_doa::Result<()> {
    let params = SystemParams::desk().with_tx_power_dbm(40.0);
    let mut rng = ChaCha20Rng::seed_from_u64(21);
    let scene = Scenario::generate(21, 5, &ScenarioConfig::default(), &params)?;
    let tx = generate_frame(&mut rng, &params);
    let rx = synthesize_echo(&tx, &scene, &params, &mut rng, true)?;

    let out = estimate(&rx, &tx, &params, scene.targets.len(), &ProposedConfig::default())?;
    let est: Vec<Estimate> = out.estimates().map(Estimate::from).collect();
    let assoc = associate(&scene.targets, &est, &params);
    for &(t, e) in &assoc.pairs {
        let truth = &scene.targets[t];
        println!(
            "{:6.1} m {:5.1} m/s {:6.1} deg  ->  {:6.1} m {:6.1} deg ({})",
            truth.range,
            truth.radial_velocity,
            truth.doa.to_degrees(),
            params.range_of_delay(est[e].delay),
            est[e].doa.to_degrees(),
            est[e].winning_domain.map(|d| d.as_str()).unwrap_or("-")
        );
    }
    let errors = doa_errors_deg(&scene.targets, &assoc, &est, 30.0);
    println!("DoA RMSE {:.2} deg, {} missed", rms(&errors), assoc.unmatched_truths.len());
    Ok(())
}
