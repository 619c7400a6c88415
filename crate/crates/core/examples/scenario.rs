//! Draws a random scenario and prints its geometry and echo strengths.

use ofdm_radar_doa::config;
use ofdm_radar_doa::params::{path_loss_power, steering_vector, Scenario, ScenarioConfig, SystemParams};

fn main() -> ofdm_radar_doa::Result<()> {
    let params = SystemParams::desk();
    println!(
        "desk preset: range bin {:.2} m, velocity bin {:.2} m/s, symbol {:.2} us",
        params.range_bin(),
        params.velocity_bin(),
        params.symbol_duration() * 1e6
    );

    let scenario = Scenario::generate(7, 4, &ScenarioConfig::default(), &params)?;
    for (i, t) in scenario.targets.iter().enumerate() {
        let loss_db = 10.0 * path_loss_power(t.range, &params)?.log10();
        println!(
            "target {i}: {:6.1} m  {:5.1} m/s  {:6.1} deg  path loss {loss_db:.1} dB  |alpha|^2 {:.2e}",
            t.range,
            t.radial_velocity,
            t.doa.to_degrees(),
            t.reflection.norm_sqr()
        );
    }

    let a = steering_vector(20f64.to_radians(), params.n_rx);
    println!("a_R(20 deg) = {a:.3}");

    // Scenarios round-trip through TOML.
    let text = config::to_toml(&scenario)?;
    let back: Scenario = config::from_toml(&text)?;
    assert_eq!(back, scenario);
    println!("\n{text}");
    Ok(())
}
