use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ofdm_radar_doa::baselines::Method;
use ofdm_radar_doa::harness::{
    self, rmse_sweep, run_trial, trial_frames, ExperimentConfig, ScalePreset, SweepPoint,
};
use ofdm_radar_doa::pipeline::{estimate, ProposedConfig};
use ofdm_radar_doa::range_doppler::{matched_filter_frame, range_doppler_map};
use ofdm_radar_doa::{config, io, Result};

#[derive(Parser)]
#[command(version, about = "MIMO-OFDM radar simulation and DoA estimation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one trial and print every estimate against the truth.
    Run(Common),
    /// Monte-Carlo RMSE sweep over target counts and transmit powers.
    Sweep(Common),
    /// Dump the delay- and Doppler-domain MUSIC spectra of every detection.
    Spectrum(Common),
    /// Dump the integrated range-Doppler map as a binary tensor.
    Rdmap(Common),
}

#[derive(Args)]
struct Common {
    /// Experiment config (TOML). Defaults apply to missing fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<usize>,
    /// Comma-separated subset of proposed, sequential_music, dft_data_aided.
    #[arg(long, value_delimiter = ',')]
    methods: Option<Vec<Method>>,
    /// `paper` or `desk`; ignored when the config sets `system`.
    #[arg(long)]
    preset: Option<ScalePreset>,
    /// Trial index for the single-frame subcommands.
    #[arg(long, default_value_t = 0)]
    trial: usize,
}

impl Common {
    fn experiment(&self) -> Result<ExperimentConfig> {
        let mut cfg: ExperimentConfig = match &self.config {
            Some(path) => config::load(path)?,
            None => ExperimentConfig::default(),
        };
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(trials) = self.trials {
            cfg.n_trials = trials;
        }
        if let Some(methods) = &self.methods {
            cfg.methods = methods.clone();
        }
        if let Some(preset) = self.preset {
            cfg.scale_preset = preset;
        }
        cfg.validate()?;
        std::fs::create_dir_all(&self.out_dir)?;
        Ok(cfg)
    }

    /// First sweep point, used by the single-frame subcommands.
    fn point(cfg: &ExperimentConfig) -> SweepPoint {
        cfg.points()[0]
    }
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

fn run(args: &Common) -> Result<()> {
    let cfg = args.experiment()?;
    let point = Common::point(&cfg);
    let record = run_trial(&cfg, point, args.trial);
    let params = cfg.params();
    println!(
        "trial {} seed {} targets {} tx {} dBm",
        record.trial_index, record.seed, point.n_targets, point.tx_power_dbm
    );
    for (i, t) in record.truth.iter().enumerate() {
        println!(
            "truth {i}: range {:.2} m  velocity {:.2} m/s  doa {:.2} deg",
            t.range,
            t.radial_velocity,
            t.doa.to_degrees()
        );
    }
    for o in &record.outcomes {
        println!(
            "{}: rmse {:.3} deg, misses {}, flagged {}{}",
            o.method.as_str(),
            o.rmse_deg(),
            o.misses,
            o.flagged,
            o.failure.as_deref().map(|f| format!(", failed: {f}")).unwrap_or_default()
        );
        for e in &o.estimates {
            println!(
                "  bin ({}, {})  range {:.2} m  doa {:.2} deg",
                e.doppler_bin,
                e.range_bin,
                params.range_of_delay(e.delay),
                e.doa.to_degrees()
            );
        }
    }
    let records = [record];
    harness::write_detections_csv(create(&args.out_dir, "detections.csv")?, &records)?;
    harness::write_truth_csv(create(&args.out_dir, "truth.csv")?, &records, &params)?;
    Ok(())
}

fn sweep(args: &Common) -> Result<()> {
    let cfg = args.experiment()?;
    let result = rmse_sweep(&cfg)?;
    harness::write_summary_csv(create(&args.out_dir, "summary.csv")?, &result.rows)?;
    harness::write_detections_csv(create(&args.out_dir, "detections.csv")?, &result.trials)?;
    harness::write_truth_csv(create(&args.out_dir, "truth.csv")?, &result.trials, &cfg.params())?;
    config::save(args.out_dir.join("config.toml"), &cfg)?;
    harness::write_summary_csv(std::io::stdout().lock(), &result.rows)?;
    Ok(())
}

fn spectrum(args: &Common) -> Result<()> {
    let cfg = args.experiment()?;
    let frames = trial_frames(&cfg, Common::point(&cfg), args.trial)?;
    let proposed = ProposedConfig {
        music: cfg.music,
    };
    let out = estimate(
        &frames.rx,
        &frames.tx,
        &frames.params,
        Common::point(&cfg).n_targets,
        &proposed,
    )?;
    for (i, o) in out.outcomes.iter().enumerate() {
        harness::write_spectrum_csv(create(&args.out_dir, &format!("delay_spectrum_{i}.csv"))?, &o.delay_spectrum)?;
        harness::write_spectrum_csv(
            create(&args.out_dir, &format!("doppler_spectrum_{i}.csv"))?,
            &o.doppler_spectrum,
        )?;
        println!(
            "detection {i}: bin ({}, {}) -> {:.1} deg ({})",
            o.fused.detection.doppler_bin,
            o.fused.detection.range_bin,
            o.fused.doa_est.to_degrees(),
            o.fused.winning_domain.as_str()
        );
    }
    Ok(())
}

fn rdmap(args: &Common) -> Result<()> {
    let cfg = args.experiment()?;
    let frames = trial_frames(&cfg, Common::point(&cfg), args.trial)?;
    let data = matched_filter_frame(&frames.rx, &frames.tx)?;
    let map = range_doppler_map(&data, &frames.params)?;
    let tensor = map.integrated.mapv(num_complex::Complex64::from).into_dyn();
    let path = args.out_dir.join("rdmap.bin");
    io::save_tensor(&path, &tensor, frames.scenario.seed)?;
    println!(
        "wrote {} ({} x {})",
        path.display(),
        map.n_doppler_bins(),
        map.n_range_bins()
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run(a) => run(a),
        Command::Sweep(a) => sweep(a),
        Command::Spectrum(a) => spectrum(a),
        Command::Rdmap(a) => rdmap(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
