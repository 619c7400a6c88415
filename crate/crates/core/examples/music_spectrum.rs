//! Delay- and Doppler-domain MUSIC spectra for the strongest detection,
//! written as `angle_deg,value` CSV.

use std::fs::File;

use ofdm_radar_doa::echo::synthesize_echo;
use ofdm_radar_doa::harness::write_spectrum_csv;
use ofdm_radar_doa::ofdm::generate_frame;
use ofdm_radar_doa::params::{Scenario, ScenarioConfig, SystemParams};
use ofdm_radar_doa::pipeline::{estimate, ProposedConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

fn main() -> ofdm_radar_doa::Result<()> {
    let params = SystemParams::desk().with_tx_power_dbm(40.0);
    let mut rng = ChaCha20Rng::seed_from_u64(5);
    let scene = Scenario::generate(5, 2, &ScenarioConfig::default(), &params)?;
    let tx = generate_frame(&mut rng, &params);
    let rx = synthesize_echo(&tx, &scene, &params, &mut rng, true)?;

    let out = estimate(&rx, &tx, &params, 2, &ProposedConfig::default())?;
    let first = &out.outcomes[0];
    for (name, spectrum) in [("delay", &first.delay_spectrum), ("doppler", &first.doppler_spectrum)] {
        let peaks: Vec<String> = spectrum
            .peak_angles
            .iter()
            .map(|a| format!("{:.1}", a.to_degrees()))
            .collect();
        println!("{name} spectrum peaks: {} deg", peaks.join(", "));
        let path = std::env::temp_dir().join(format!("{name}_spectrum.csv"));
        write_spectrum_csv(File::create(&path)?, spectrum)?;
        println!("  -> {}", path.display());
    }
    println!(
        "fused: {:.1} deg from the {} domain",
        first.fused.doa_est.to_degrees(),
        first.fused.winning_domain.as_str()
    );
    let truth: Vec<String> = scene
        .targets
        .iter()
        .map(|t| format!("{:.1}", t.doa.to_degrees()))
        .collect();
    println!("truth: {} deg", truth.join(", "));
    Ok(())
}
