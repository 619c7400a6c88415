//! Builds a 64-QAM transmit frame and stores it in the binary tensor format.

use ofdm_radar_doa::io;
use ofdm_radar_doa::ofdm::{generate_frame, qam64_map};
use ofdm_radar_doa::params::SystemParams;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

fn main() -> ofdm_radar_doa::Result<()> {
    let params = SystemParams::desk();
    println!("corner symbols: {} {}", qam64_map(0)?, qam64_map(63)?);

    let mut rng = ChaCha20Rng::seed_from_u64(1);
    let tx = generate_frame(&mut rng, &params);
    let n = tx.symbols.len() as f64;
    let power = tx.symbols.iter().map(|x| x.norm_sqr()).sum::<f64>() / n;
    println!(
        "frame {:?}, mean entry power {power:.4e} W (target {:.4e} W)",
        tx.symbols.dim(),
        params.per_entry_power()
    );

    let path = std::env::temp_dir().join("qam_frame.bin");
    io::save_tensor(&path, &tx.symbols, 1)?;
    let (back, seed) = io::load_tensor(&path)?;
    assert_eq!(back.shape(), tx.symbols.shape());
    println!("wrote {} (seed {seed})", path.display());
    Ok(())
}
