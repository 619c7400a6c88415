//! Naive reference implementations written straight from the signal model,
//! with plain loops and `Vec`s so they share no code with the library.

#![allow(dead_code, clippy::needless_range_loop)]

use std::f64::consts::PI;

use num_complex::Complex64;
use ofdm_radar_doa::params::{SystemParams, Target};

pub type C = Complex64;

pub fn cis(phase: f64) -> C {
    C::new(phase.cos(), phase.sin())
}

pub fn steering(theta: f64, n: usize) -> Vec<C> {
    (0..n).map(|k| cis(PI * k as f64 * theta.sin())).collect()
}

/// `y[m][n][k]` for the given transmit symbols `x[m][n][p]`.
pub fn echo(x: &[Vec<Vec<C>>], targets: &[Target], p: &SystemParams) -> Vec<Vec<Vec<C>>> {
    let c = 299_792_458.0;
    let t_sym = 1.0 / p.subcarrier_spacing
        + p.cp_length as f64 / (p.subcarrier_spacing * p.n_subcarriers as f64);
    let mut y = vec![vec![vec![C::new(0.0, 0.0); p.n_rx]; p.n_subcarriers]; p.n_symbols];
    for t in targets {
        let tau = 2.0 * t.range / c;
        let fd = 2.0 * t.radial_velocity * p.carrier_freq / c;
        let a_r = steering(t.doa, p.n_rx);
        let a_t = steering(t.doa, p.n_tx);
        for m in 0..p.n_symbols {
            for n in 0..p.n_subcarriers {
                let mut beam = C::new(0.0, 0.0);
                for q in 0..p.n_tx {
                    beam += a_t[q] * x[m][n][q];
                }
                let phase = -2.0 * PI * p.subcarrier_spacing * tau * n as f64
                    + 2.0 * PI * fd * m as f64 * t_sym;
                for k in 0..p.n_rx {
                    y[m][n][k] += t.reflection * a_r[k] * beam * cis(phase);
                }
            }
        }
    }
    y
}

/// `Y[k][l][m][n] = y_mn[k] conj(x_mn[l])`.
pub fn matched_filter(y: &[Vec<Vec<C>>], x: &[Vec<Vec<C>>]) -> Vec<Vec<Vec<Vec<C>>>> {
    let (m, n, nr, nt) = (y.len(), y[0].len(), y[0][0].len(), x[0][0].len());
    let mut out = vec![vec![vec![vec![C::new(0.0, 0.0); n]; m]; nt]; nr];
    for k in 0..nr {
        for l in 0..nt {
            for i in 0..m {
                for j in 0..n {
                    out[k][l][i][j] = y[i][j][k] * x[i][j][l].conj();
                }
            }
        }
    }
    out
}

/// `F_M^T Y F_N` with `[F]_{ab} = exp(j 2 pi a b / len)`, as an explicit
/// matrix product.
pub fn dft2(ymat: &[Vec<C>]) -> Vec<Vec<C>> {
    let (m, n) = (ymat.len(), ymat[0].len());
    let f = |len: usize, a: usize, b: usize| cis(2.0 * PI * (a * b) as f64 / len as f64);
    let mut tmp = vec![vec![C::new(0.0, 0.0); n]; m];
    for a in 0..m {
        for j in 0..n {
            for i in 0..m {
                tmp[a][j] += f(m, i, a) * ymat[i][j];
            }
        }
    }
    let mut out = vec![vec![C::new(0.0, 0.0); n]; m];
    for a in 0..m {
        for b in 0..n {
            for j in 0..n {
                out[a][b] += tmp[a][j] * f(n, j, b);
            }
        }
    }
    out
}

pub fn integrate(maps: &[Vec<Vec<Vec<C>>>]) -> Vec<Vec<f64>> {
    let (m, n) = (maps[0][0].len(), maps[0][0][0].len());
    let mut out = vec![vec![0.0; n]; m];
    for per_rx in maps {
        for map in per_rx {
            for a in 0..m {
                for b in 0..n {
                    out[a][b] += map[a][b].norm_sqr();
                }
            }
        }
    }
    out
}

/// Delay-domain snapshots, `N_r` rows by `N_t * M` columns.
pub fn delay_snapshots(ymf: &[Vec<Vec<Vec<C>>>], tau: f64, p: &SystemParams) -> Vec<Vec<C>> {
    let (nr, nt, m, n) = (ymf.len(), ymf[0].len(), ymf[0][0].len(), ymf[0][0][0].len());
    let mut out = vec![vec![C::new(0.0, 0.0); nt * m]; nr];
    for k in 0..nr {
        for l in 0..nt {
            for i in 0..m {
                let mut acc = C::new(0.0, 0.0);
                for j in 0..n {
                    acc += ymf[k][l][i][j] * cis(2.0 * PI * p.subcarrier_spacing * tau * j as f64);
                }
                out[k][l * m + i] = acc / (n as f64).sqrt();
            }
        }
    }
    out
}

/// Doppler-domain snapshots, `N_r` rows by `N_t * N_c` columns.
pub fn doppler_snapshots(ymf: &[Vec<Vec<Vec<C>>>], fd: f64, p: &SystemParams) -> Vec<Vec<C>> {
    let (nr, nt, m, n) = (ymf.len(), ymf[0].len(), ymf[0][0].len(), ymf[0][0][0].len());
    let t_sym = p.symbol_duration();
    let mut out = vec![vec![C::new(0.0, 0.0); nt * n]; nr];
    for k in 0..nr {
        for l in 0..nt {
            for j in 0..n {
                let mut acc = C::new(0.0, 0.0);
                for i in 0..m {
                    acc += ymf[k][l][i][j] * cis(-2.0 * PI * fd * i as f64 * t_sym);
                }
                out[k][l * n + j] = acc / (n as f64).sqrt();
            }
        }
    }
    out
}

/// `Σ_s y_s y_s^H`.
pub fn covariance(snaps: &[Vec<C>]) -> Vec<Vec<C>> {
    let n = snaps.len();
    let mut r = vec![vec![C::new(0.0, 0.0); n]; n];
    for a in 0..n {
        for b in 0..n {
            for s in 0..snaps[0].len() {
                r[a][b] += snaps[a][s] * snaps[b][s].conj();
            }
        }
    }
    r
}

/// Closed-form MUSIC spectrum of a 2x2 Hermitian covariance with one
/// source: the noise eigenvector belongs to the smaller eigenvalue.
pub fn music_2x2(r: &[Vec<C>], grid: &[f64]) -> Vec<f64> {
    let (a, d, b) = (r[0][0].re, r[1][1].re, r[0][1]);
    let lambda = 0.5 * (a + d) - ((0.5 * (a - d)).powi(2) + b.norm_sqr()).sqrt();
    // (R - lambda I) e = 0 gives e = (b, lambda - a) up to scale.
    let e = [b, C::new(lambda - a, 0.0)];
    let norm = (e[0].norm_sqr() + e[1].norm_sqr()).sqrt();
    grid.iter()
        .map(|&theta| {
            let s = steering(theta, 2);
            let proj = (e[0].conj() * s[0] + e[1].conj() * s[1]) / norm;
            1.0 / proj.norm_sqr()
        })
        .collect()
}

/// `|f_M[kb]^T Y^MF f_N[lb]|^2` with
/// `Y^MF_mn = a_R^H y_mn (a_T^T x_mn)^*`.
pub fn candidate_power(
    y: &[Vec<Vec<C>>],
    x: &[Vec<Vec<C>>],
    theta: f64,
    doppler_bin: usize,
    range_bin: usize,
) -> f64 {
    let (m, n, nr, nt) = (y.len(), y[0].len(), y[0][0].len(), x[0][0].len());
    let a_r = steering(theta, nr);
    let a_t = steering(theta, nt);
    let mut acc = C::new(0.0, 0.0);
    for i in 0..m {
        for j in 0..n {
            let mut rx = C::new(0.0, 0.0);
            for k in 0..nr {
                rx += a_r[k].conj() * y[i][j][k];
            }
            let mut tx = C::new(0.0, 0.0);
            for q in 0..nt {
                tx += a_t[q] * x[i][j][q];
            }
            let w = cis(2.0 * PI * ((doppler_bin * i) as f64 / m as f64 + (range_bin * j) as f64 / n as f64));
            acc += rx * tx.conj() * w;
        }
    }
    acc.norm_sqr()
}

/// Relative error `‖a - b‖ / ‖b‖` over flattened complex data.
pub fn rel_err<'a>(a: impl IntoIterator<Item = &'a C>, b: impl IntoIterator<Item = &'a C>) -> f64 {
    let (mut num, mut den) = (0.0, 0.0);
    for (x, y) in a.into_iter().zip(b) {
        num += (x - y).norm_sqr();
        den += y.norm_sqr();
    }
    (num / den).sqrt()
}

pub fn rel_err_real(a: &[f64], b: &[f64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum();
    let den: f64 = b.iter().map(|y| y * y).sum();
    (num / den).sqrt()
}

/// The small configuration used by the oracle comparisons.
pub fn small_params() -> SystemParams {
    SystemParams {
        n_symbols: 8,
        n_subcarriers: 16,
        n_tx: 2,
        n_rx: 2,
        ..SystemParams::desk()
    }
}

/// One stage's agreement with its reference.
pub struct StageCheck {
    pub stage: &'static str,
    pub rel_err: f64,
}

/// Runs every pipeline stage of the library against the references on a
/// random small frame and reports the relative error of each.
pub fn oracle_suite(seed: u64) -> Vec<StageCheck> {
    use ndarray::Array2;
    use ofdm_radar_doa::echo::synthesize_echo;
    use ofdm_radar_doa::fusion::candidate_power as lib_power;
    use ofdm_radar_doa::music::{delay_filter, doppler_filter, music_spectrum, sample_covariance};
    use ofdm_radar_doa::ofdm::generate_frame;
    use ofdm_radar_doa::params::{Scenario, ScenarioConfig};
    use ofdm_radar_doa::range_doppler::{matched_filter_frame, range_doppler_map, Detection};
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    let p = small_params();
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let scenario = Scenario::generate(seed, 3, &ScenarioConfig::default(), &p).unwrap();
    let tx = generate_frame(&mut rng, &p);
    let rx = synthesize_echo(&tx, &scenario, &p, &mut rng, false).unwrap();

    let x: Vec<Vec<Vec<C>>> = (0..p.n_symbols)
        .map(|i| {
            (0..p.n_subcarriers)
                .map(|j| (0..p.n_tx).map(|q| tx.symbols[(i, j, q)]).collect())
                .collect()
        })
        .collect();
    let mut checks = Vec::new();

    let y = echo(&x, &scenario.targets, &p);
    checks.push(StageCheck {
        stage: "echo",
        rel_err: rel_err(rx.echoes.iter(), y.iter().flatten().flatten()),
    });

    let ymf = matched_filter(&y, &x);
    let data = matched_filter_frame(&rx, &tx).unwrap();
    checks.push(StageCheck {
        stage: "matched filter",
        rel_err: rel_err(data.matrices.iter(), ymf.iter().flatten().flatten().flatten()),
    });

    let maps: Vec<Vec<Vec<Vec<C>>>> = ymf
        .iter()
        .map(|per_rx| per_rx.iter().map(|ym| dft2(ym)).collect())
        .collect();
    let map = range_doppler_map(&data, &p).unwrap();
    checks.push(StageCheck {
        stage: "2D DFT",
        rel_err: rel_err(map.per_channel.iter(), maps.iter().flatten().flatten().flatten()),
    });
    let integrated = integrate(&maps);
    let flat: Vec<f64> = integrated.iter().flatten().copied().collect();
    checks.push(StageCheck {
        stage: "non-coherent integration",
        rel_err: rel_err_real(map.integrated.as_slice().unwrap(), &flat),
    });

    let to_matrix = |rows: &[Vec<C>]| Array2::from_shape_fn((rows.len(), rows[0].len()), |(a, b)| rows[a][b]);
    let tau = scenario.targets[0].delay();
    let fd = scenario.targets[1].doppler(&p);

    let ds = delay_snapshots(&ymf, tau, &p);
    let lib_ds = delay_filter(&data, tau, &p).unwrap();
    checks.push(StageCheck {
        stage: "delay filter",
        rel_err: rel_err(lib_ds.snapshots.iter(), to_matrix(&ds).iter()),
    });
    let dr = covariance(&ds);
    let lib_dr = sample_covariance(&lib_ds).unwrap();
    checks.push(StageCheck {
        stage: "delay covariance",
        rel_err: rel_err(lib_dr.matrix.transpose().iter(), dr.iter().flatten()),
    });

    let fs = doppler_snapshots(&ymf, fd, &p);
    let lib_fs = doppler_filter(&data, fd, &p).unwrap();
    checks.push(StageCheck {
        stage: "Doppler filter",
        rel_err: rel_err(lib_fs.snapshots.iter(), to_matrix(&fs).iter()),
    });
    let fr = covariance(&fs);
    let lib_fr = sample_covariance(&lib_fs).unwrap();
    checks.push(StageCheck {
        stage: "Doppler covariance",
        rel_err: rel_err(lib_fr.matrix.transpose().iter(), fr.iter().flatten()),
    });

    let step = 0.1f64.to_radians();
    let spectrum = music_spectrum(&lib_fr, 1, step, 2).unwrap();
    let reference = music_2x2(&fr, &spectrum.grid);
    checks.push(StageCheck {
        stage: "MUSIC spectrum",
        rel_err: rel_err_real(&spectrum.values, &reference),
    });

    let mut lib_powers = Vec::new();
    let mut ref_powers = Vec::new();
    for (kb, lb) in [(0, 0), (3, 5), (7, 15), (map.bin_of_doppler(fd), map.bin_of_delay(tau))] {
        let det = Detection {
            doppler_bin: kb,
            range_bin: lb,
            delay_est: 0.0,
            doppler_est: 0.0,
            peak_power: 0.0,
        };
        for theta in [-1.2, -0.3, 0.0, 0.45, 1.0] {
            lib_powers.push(lib_power(&rx, &tx, theta, &det, &p).unwrap());
            ref_powers.push(candidate_power(&y, &x, theta, kb, lb));
        }
    }
    checks.push(StageCheck {
        stage: "candidate power",
        rel_err: rel_err_real(&lib_powers, &ref_powers),
    });
    checks
}
