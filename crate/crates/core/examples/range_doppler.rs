//! Range-Doppler map of a three-target scene, read out with known-count peak
//! picking and with CA-CFAR.

use ofdm_radar_doa::echo::synthesize_echo;
use ofdm_radar_doa::ofdm::generate_frame;
use ofdm_radar_doa::params::{Scenario, ScenarioConfig, SystemParams};
use ofdm_radar_doa::range_doppler::{
    cfar_detect, detect_peaks, matched_filter_frame, range_doppler_map, CfarConfig,
};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

fn main() -> ofdm_radar_doa::Result<()> {
    let params = SystemParams::desk().with_tx_power_dbm(40.0);
    let mut rng = ChaCha20Rng::seed_from_u64(11);
    let scene = Scenario::generate(11, 3, &ScenarioConfig::default(), &params)?;
    let tx = generate_frame(&mut rng, &params);
    let rx = synthesize_echo(&tx, &scene, &params, &mut rng, true)?;

    let map = range_doppler_map(&matched_filter_frame(&rx, &tx)?, &params)?;
    for t in &scene.targets {
        println!(
            "truth: range bin {:5.2}  Doppler {:6.0} Hz",
            t.delay() / params.delay_bin(),
            t.doppler(&params)
        );
    }

    let peaks = detect_peaks(&map, scene.targets.len())?;
    for d in &peaks.detections {
        println!(
            "peak: bin ({:2}, {:3})  range {:6.1} m  Doppler {:6.0} Hz",
            d.doppler_bin,
            d.range_bin,
            params.range_of_delay(d.delay_est),
            d.doppler_est
        );
    }

    let hits = cfar_detect(&map, &CfarConfig::default(), params.n_rx * params.n_tx)?;
    println!("CFAR: {} cells above threshold", hits.len());
    Ok(())
}
