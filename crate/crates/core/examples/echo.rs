//! Synthesizes the received frame for a small scene and checks the noise floor.

use ofdm_radar_doa::echo::synthesize_echo;
use ofdm_radar_doa::ofdm::generate_frame;
use ofdm_radar_doa::params::{Scenario, ScenarioConfig, SystemParams};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

fn main() -> ofdm_radar_doa::Result<()> {
    let params = SystemParams::desk().with_tx_power_dbm(30.0);
    let mut rng = ChaCha20Rng::seed_from_u64(3);
    let tx = generate_frame(&mut rng, &params);

    let empty = synthesize_echo(&tx, &Scenario::new(vec![]), &params, &mut rng, true)?;
    let var = empty.echoes.iter().map(|y| y.norm_sqr()).sum::<f64>() / empty.echoes.len() as f64;
    println!("noise-only variance {var:.4e} W vs B*N_o {:.4e} W", params.noise_power());

    let scene = Scenario::generate(3, 2, &ScenarioConfig::default(), &params)?;
    let clean = synthesize_echo(&tx, &scene, &params, &mut rng, false)?;
    let signal = clean.echoes.iter().map(|y| y.norm_sqr()).sum::<f64>() / clean.echoes.len() as f64;
    println!(
        "echo power per sample {signal:.4e} W, per-sample SNR {:.1} dB",
        10.0 * (signal / params.noise_power()).log10()
    );
    Ok(())
}
