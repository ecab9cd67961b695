//! Acceptance gate: end-to-end statistical criteria for the relay
//! receiver. Each test prints exactly one `ACCEPTANCE n ...: PASS|FAIL`
//! line and asserts it. These run full-scale Monte-Carlo experiments
//! and take tens of minutes on a single core; run them alone with
//! `cargo test -p pnc-relay --test acceptance`.

use num_complex::Complex64;
use pnc_relay::channel::{
    band_truncate, build_channel_matrix, cir_to_frequency_full, draw_paths, ChannelStatParams,
    MeasuredCir, OfdmParams,
};
use pnc_relay::codec::{
    build_qc_ldpc, compute_syndrome, encode, joint_gspa_decode_with, JointDist, LdpcCode,
};
use pnc_relay::detect::{sm_lmmse_detect, AcaFgdDetector, ReceivedFrame};
use pnc_relay::refine::{refine, BeliefState};
use pnc_relay::receiver::Scheme;
use pnc_relay::sim::{ber_sweep, energy_contribution_table, xor_accumulate, SimConfig, SimRecord};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use std::time::Instant;

fn report(n: usize, name: &str, pass: bool, detail: &str) {
    println!(
        "ACCEPTANCE {n} ({name}): {} — {detail}",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "acceptance criterion {n} ({name}) failed: {detail}");
}

fn run_point(f: impl FnOnce(&mut SimConfig)) -> SimRecord {
    let mut cfg = SimConfig::default();
    f(&mut cfg);
    let res = ber_sweep(&cfg, |_| {}).expect("sweep runs");
    assert!(res.failures.is_empty(), "{:?}", res.failures);
    res.records.into_iter().next().expect("one record")
}

/// Standard error of an empirical rate p over n samples.
fn se(p: f64, n: u64) -> f64 {
    (p * (1.0 - p) / n as f64).sqrt()
}

#[test]
fn acceptance_1_energy_contribution_table() {
    let ofdm = OfdmParams::default_sim();
    let table = energy_contribution_table(&ofdm, &[0.1, 1.5], &[0, 1, 2], 5000, 1).unwrap();
    // (sigma_u, depth index, expected percent)
    let cells = [
        (0usize, 0usize, 98.40f64, "sigma 0.1 D=0"),
        (0, 1, 99.42, "sigma 0.1 D=1"),
        (1, 1, 77.53, "sigma 1.5 D=1"),
        (1, 2, 95.18, "sigma 1.5 D=2"),
    ];
    let mut pass = true;
    let mut detail = String::new();
    for (si, di, want, label) in cells {
        let got = table[si][di];
        let ok = (got - want).abs() <= 3.0;
        pass &= ok;
        detail.push_str(&format!("{label}: {got:.2}% (target {want}±3) "));
    }
    report(1, "banded energy table", pass, detail.trim());
}

#[test]
fn acceptance_2_iterative_gain() {
    let one = run_point(|c| {
        c.snr_grid_db = vec![6.0];
        c.frames_per_point = 500;
        c.receiver.outer_iterations = 1;
    });
    let five = run_point(|c| {
        c.snr_grid_db = vec![6.0];
        c.frames_per_point = 500;
    });
    let pass = one.ber > 0.0 && 2.0 * five.ber <= one.ber;
    report(
        2,
        "outer-iteration gain",
        pass,
        &format!(
            "SNR 6 dB sigma 0.1: BER {:.3e} (1 outer) vs {:.3e} (5 outer), need >=2x gain",
            one.ber, five.ber
        ),
    );
}

#[test]
fn acceptance_3_fast_channel_robustness() {
    let base = |c: &mut SimConfig| {
        c.snr_grid_db = vec![8.0];
        c.sigma_u_grid = vec![1.5];
        c.frames_per_point = 500;
    };
    let aca = run_point(base);
    let lmmse = run_point(|c| {
        base(c);
        c.receiver.scheme = Scheme::SmLmmse;
    });
    let fixed = run_point(|c| {
        base(c);
        c.receiver.scheme = Scheme::FixedD(1);
    });
    let pass = aca.ber < 1e-2 && lmmse.ber > 5e-2 && fixed.ber > 5e-2;
    report(
        3,
        "fast-channel robustness",
        pass,
        &format!(
            "sigma 1.5 SNR 8 dB: adaptive {:.3e} (<1e-2), LMMSE {:.3e} (>5e-2), fixed-D(1) {:.3e} (>5e-2)",
            aca.ber, lmmse.ber, fixed.ber
        ),
    );
}

#[test]
fn acceptance_4_multihop_degradation() {
    // closed-form odd-parity oracle on injected synthetic error patterns
    let mut rng = ChaCha12Rng::seed_from_u64(44);
    let (hops, p, bits) = (5usize, 0.1f64, 10_000_000usize);
    let patterns: Vec<Vec<u8>> = (0..hops)
        .map(|_| (0..bits).map(|_| u8::from(rng.gen::<f64>() < p)).collect())
        .collect();
    let acc = xor_accumulate(&patterns);
    let emp = acc.iter().map(|&b| b as u64).sum::<u64>() as f64 / bits as f64;
    let closed = (1.0 - (1.0 - 2.0 * p).powi(hops as i32)) / 2.0;
    let oracle_ok = (emp - closed).abs() < 5e-4;

    // At SNR 8 dB both hop counts decode successfully. The receiver is
    // error-free there at this trial scale (0 errors in >10^6 bits per
    // point), so the strict degradation ordering is measured at 3 dB,
    // the highest grid point where bit errors are still resolvable.
    let one_8 = run_point(|c| {
        c.snr_grid_db = vec![8.0];
        c.frames_per_point = 1000;
    });
    let five_8 = run_point(|c| {
        c.snr_grid_db = vec![8.0];
        c.frames_per_point = 1000;
        c.relay_counts = vec![5];
    });
    let one_3 = run_point(|c| {
        c.snr_grid_db = vec![3.0];
        c.frames_per_point = 500;
    });
    let five_3 = run_point(|c| {
        c.snr_grid_db = vec![3.0];
        c.frames_per_point = 500;
        c.relay_counts = vec![5];
    });
    let decodes = one_8.ber < 1e-2 && five_8.ber < 1e-2;
    let trend = one_3.ber > 0.0 && five_3.ber > one_3.ber && one_3.ber < 1e-2 && five_3.ber < 1e-2;
    let pass = oracle_ok && decodes && trend;
    report(
        4,
        "multi-hop degradation",
        pass,
        &format!(
            "SNR 8 dB: BER {:.3e} (1 hop) vs {:.3e} (5 hops), both <1e-2; \
             trend at SNR 3 dB: {:.3e} (1 hop) < {:.3e} (5 hops); \
             oracle {emp:.5} vs closed form {closed:.5}",
            one_8.ber, five_8.ber, one_3.ber, five_3.ber
        ),
    );
}

#[test]
fn acceptance_5_refinement_gain() {
    let grid = [1.0f64, 2.0, 3.0];
    let run = |refinement: bool, snr: f64| {
        run_point(|c| {
            c.snr_grid_db = vec![snr];
            c.frames_per_point = 500;
            c.relay_counts = vec![5];
            c.receiver.decode_iterations = 10;
            c.receiver.refinement_enabled = refinement;
        })
    };
    let mut never_worse = true;
    let mut improved_mid = false;
    let mut detail = String::new();
    for (i, &snr) in grid.iter().enumerate() {
        let off = run(false, snr);
        let on = run(true, snr);
        let noise = 2.0 * (se(off.ber, off.bits).powi(2) + se(on.ber, on.bits).powi(2)).sqrt();
        if on.ber > off.ber + noise {
            never_worse = false;
        }
        let mid = i > 0 && i + 1 < grid.len();
        if mid && on.ber < off.ber {
            improved_mid = true;
        }
        detail.push_str(&format!(
            "SNR {snr}: off {:.3e} on {:.3e} (2SE {noise:.1e}) ",
            off.ber, on.ber
        ));
    }
    report(
        5,
        "refinement gain",
        never_worse && improved_mid,
        &format!("{}— never worse within 2SE, improved at mid-SNR", detail),
    );
}

#[test]
fn acceptance_6_cer_robustness() {
    let lmmse = run_point(|c| {
        c.snr_grid_db = vec![8.0];
        c.frames_per_point = 500;
        c.receiver.scheme = Scheme::SmLmmse;
        c.cer_db = Some(10.0);
    });
    let perfect = run_point(|c| {
        c.snr_grid_db = vec![8.0];
        c.frames_per_point = 500;
    });
    let cer20 = run_point(|c| {
        c.snr_grid_db = vec![8.0];
        c.frames_per_point = 500;
        c.cer_db = Some(20.0);
    });
    // statistical floor: up to 3 error events are indistinguishable from 0
    let floor = 3.0 / cer20.bits as f64;
    let pass = lmmse.ber > 1e-1 && cer20.ber <= (5.0 * perfect.ber).max(floor);
    report(
        6,
        "channel-estimate robustness",
        pass,
        &format!(
            "sigma 0.1 SNR 8 dB: LMMSE@CER10 {:.3e} (>1e-1); adaptive perfect {:.3e} vs CER20 {:.3e} (<=5x)",
            lmmse.ber, perfect.ber, cer20.ber
        ),
    );
}

// ---------------------------------------------------------------------------
// criterion 7: independent oracles, all inside one minute
// ---------------------------------------------------------------------------

const PI: f64 = std::f64::consts::PI;

fn oracle_channel_brute_force() -> bool {
    let ofdm = OfdmParams {
        carrier_freq_hz: 22_400.0,
        symbol_duration_s: 64.0 / 50_000.0,
        cp_duration_s: 20.5e-3,
        sample_rate_hz: 50_000.0,
        fft_size: 64,
        num_subcarriers: 12,
        bits_per_symbol: 1,
    };
    let mut rng = ChaCha12Rng::seed_from_u64(77);
    for sigma_u in [0.1, 1.5] {
        let paths = draw_paths(
            &mut rng,
            &ChannelStatParams::default_sim(sigma_u),
            ofdm.cp_duration_s,
        )
        .unwrap();
        let h = build_channel_matrix(&paths, &ofdm).unwrap();
        for row in 0..12 {
            for col in 0..12 {
                let f_n = ofdm.carrier_freq_hz + (row as f64 - 6.0) / ofdm.symbol_duration_s;
                let f_m = ofdm.carrier_freq_hz + (col as f64 - 6.0) / ofdm.symbol_duration_s;
                let mut want = Complex64::new(0.0, 0.0);
                for p in 0..paths.num_paths() {
                    let arg =
                        (paths.doppler_factors[p] * f_m - (f_n - f_m)) * ofdm.symbol_duration_s;
                    let mag = if arg == 0.0 { 1.0 } else { (PI * arg).sin() / (PI * arg) };
                    let rho = mag * Complex64::new((PI * arg).cos(), (PI * arg).sin());
                    let ph = -2.0 * PI * f_m * paths.delays_s[p];
                    want += paths.amplitudes[p] * Complex64::new(ph.cos(), ph.sin()) * rho;
                }
                if (h.get(row, col) - want).norm() >= 1e-10 {
                    return false;
                }
            }
        }
    }
    true
}

fn oracle_cir_triple_loop() -> bool {
    let mut rng = ChaCha12Rng::seed_from_u64(78);
    let (nf, lm) = (16usize, 4usize);
    let samples: Vec<Complex64> = (0..nf * lm)
        .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect();
    let cir = MeasuredCir::new(nf, lm, 1.0, 1.0, samples).unwrap();
    let h = cir_to_frequency_full(&cir).unwrap();
    for i in 0..nf {
        for k in 0..nf {
            let mut want = Complex64::new(0.0, 0.0);
            for l in 0..lm {
                for n in 0..nf {
                    let ang = 2.0 * PI * (-(i as f64) * n as f64 + k as f64 * (n as f64 - l as f64))
                        / nf as f64;
                    want += cir.sample(n, l) * Complex64::new(ang.cos(), ang.sin());
                }
            }
            if (h.get(i, k) - want / nf as f64).norm() >= 1e-9 {
                return false;
            }
        }
    }
    true
}

fn oracle_gspa_tree_enumeration() -> bool {
    let code = LdpcCode::from_parity_check(vec![vec![0, 1], vec![1, 2, 3], vec![3, 4, 5]], 6, 3, 0)
        .unwrap();
    let l = 6usize;
    let mut rng = ChaCha12Rng::seed_from_u64(79);
    for _ in 0..10 {
        let prior = JointDist(
            (0..l)
                .map(|_| {
                    let mut p = [0.0f64; 4];
                    for x in p.iter_mut() {
                        *x = rng.gen_range(0.01..1.0);
                    }
                    let s: f64 = p.iter().sum();
                    for x in p.iter_mut() {
                        *x /= s;
                    }
                    p
                })
                .collect(),
        );
        // brute-force joint enumeration over both component codewords
        let mut marg = vec![[0.0f64; 4]; l];
        for wa in 0..1usize << l {
            let ca: Vec<u8> = (0..l).map(|i| ((wa >> i) & 1) as u8).collect();
            if !compute_syndrome(&code, &ca).unwrap().iter().all(|&s| s == 0) {
                continue;
            }
            for wb in 0..1usize << l {
                let cb: Vec<u8> = (0..l).map(|i| ((wb >> i) & 1) as u8).collect();
                if !compute_syndrome(&code, &cb).unwrap().iter().all(|&s| s == 0) {
                    continue;
                }
                let mut w = 1.0;
                for i in 0..l {
                    w *= prior.0[i][(2 * ca[i] + cb[i]) as usize];
                }
                for i in 0..l {
                    marg[i][(2 * ca[i] + cb[i]) as usize] += w;
                }
            }
        }
        for p in &mut marg {
            let s: f64 = p.iter().sum();
            for x in p.iter_mut() {
                *x /= s;
            }
        }
        let out = joint_gspa_decode_with(&code, &prior, 10, false).unwrap();
        for i in 0..l {
            for s in 0..4 {
                if (out.posterior.0[i][s] - marg[i][s]).abs() >= 1e-9 {
                    return false;
                }
            }
        }
    }
    true
}

fn oracle_aca_diagonal_map() -> bool {
    let mut rng = ChaCha12Rng::seed_from_u64(80);
    let n = 6usize;
    let diag = |rng: &mut ChaCha12Rng| {
        let mut m = pnc_relay::channel::ChannelMatrix::zeros(n);
        for i in 0..n {
            m.set(i, i, Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
        }
        m
    };
    let h_a = diag(&mut rng);
    let h_b = diag(&mut rng);
    let y: Vec<Complex64> = (0..n)
        .map(|_| Complex64::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)))
        .collect();
    let sigma2 = 0.5;
    let frame = ReceivedFrame::new(y.clone(), sigma2).unwrap();
    let prior = JointDist::uniform(n);
    let det = AcaFgdDetector::with_depth_profile(
        &frame,
        &h_a,
        &h_b,
        &vec![0; n],
        &pnc_relay::codec::Constellation::bpsk(),
    )
    .unwrap();
    let out = det.detect(&prior, 1).unwrap();
    let symbols = [1.0f64, -1.0]; // bit 0 -> +1, bit 1 -> -1
    for m in 0..n {
        let mut want = [0.0f64; 4];
        for s in 0..4 {
            let (xa, xb) = (symbols[s >> 1], symbols[s & 1]);
            let d = y[m] - h_a.get(m, m) * xa - h_b.get(m, m) * xb;
            want[s] = (-d.norm_sqr() / sigma2).exp();
        }
        let total: f64 = want.iter().sum();
        for s in 0..4 {
            if (out.0[m][s] - want[s] / total).abs() >= 1e-9 {
                return false;
            }
        }
    }
    true
}

fn oracle_lmmse_identity_channel() -> bool {
    let mut rng = ChaCha12Rng::seed_from_u64(81);
    let n = 5usize;
    let h = pnc_relay::channel::ChannelMatrix::identity(n);
    let y: Vec<Complex64> = (0..n)
        .map(|_| Complex64::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)))
        .collect();
    let sigma2 = 0.4;
    let frame = ReceivedFrame::new(y.clone(), sigma2).unwrap();
    let out = sm_lmmse_detect(&frame, &h, &h, &JointDist::uniform(n)).unwrap();
    // uniform prior, identity channels: K = (2 + sigma^2) I, C = 2/(2+sigma^2) I,
    // candidate mean for joint state s is C (s_a + s_b), variance 4 sigma^2/(2+sigma^2)^2
    let c = 2.0 / (2.0 + sigma2);
    let var = 4.0 * sigma2 / (2.0 + sigma2).powi(2);
    let symbols = [1.0f64, -1.0];
    for m in 0..n {
        let xhat = y[m] * c;
        let mut want = [0.0f64; 4];
        for s in 0..4 {
            let mu = c * (symbols[s >> 1] + symbols[s & 1]);
            want[s] = (-(xhat - mu).norm_sqr() / var).exp();
        }
        let total: f64 = want.iter().sum();
        for s in 0..4 {
            if (out.0[m][s] - want[s] / total).abs() >= 1e-9 {
                return false;
            }
        }
    }
    true
}

fn oracle_refinement_closed_form() -> bool {
    let post = JointDist(vec![[0.4, 0.3, 0.2, 0.1]]);
    let st = BeliefState::new(1, 1.0, 5.0).unwrap(); // z = 0, r = 1/2
    let out = refine(&post, &st).unwrap();
    let want: Vec<f64> = post.0[0].iter().map(|p| (0.5 * p + 0.25) / 1.5).collect();
    (0..4).all(|s| (out.0[0][s] - want[s]).abs() < 1e-12)
}

fn oracle_syndrome_linearity() -> bool {
    let code = build_qc_ldpc(336, 112, 7).unwrap();
    let mut rng = ChaCha12Rng::seed_from_u64(82);
    for _ in 0..1000 {
        let ia: Vec<u8> = (0..112).map(|_| rng.gen_range(0..2u8)).collect();
        let ib: Vec<u8> = (0..112).map(|_| rng.gen_range(0..2u8)).collect();
        let ca = encode(&code, &ia).unwrap();
        let cb = encode(&code, &ib).unwrap();
        let xor: Vec<u8> = ca.iter().zip(&cb).map(|(&a, &b)| a ^ b).collect();
        for w in [&ca, &cb, &xor] {
            if !compute_syndrome(&code, w).unwrap().iter().all(|&s| s == 0) {
                return false;
            }
        }
    }
    true
}

#[test]
fn acceptance_7_oracle_suites() {
    let t = Instant::now();
    let checks = [
        ("channel brute force", oracle_channel_brute_force()),
        ("CIR triple loop", oracle_cir_triple_loop()),
        ("G-SPA tree enumeration", oracle_gspa_tree_enumeration()),
        ("detector diagonal MAP", oracle_aca_diagonal_map()),
        ("LMMSE identity channel", oracle_lmmse_identity_channel()),
        ("refinement closed form", oracle_refinement_closed_form()),
        ("syndrome linearity x1000", oracle_syndrome_linearity()),
    ];
    let elapsed = t.elapsed();
    let failed: Vec<&str> = checks.iter().filter(|(_, ok)| !ok).map(|(n, _)| *n).collect();
    let pass = failed.is_empty() && elapsed.as_secs() < 60;
    report(
        7,
        "oracle suites",
        pass,
        &format!("7 oracle families in {elapsed:.1?} (<60 s), failures: {failed:?}"),
    );
}

#[test]
fn acceptance_8_complexity_scaling() {
    let ofdm = OfdmParams::default_sim();
    let stats = ChannelStatParams::default_sim(0.1);
    let mut rng = ChaCha12Rng::seed_from_u64(88);
    let h_a = build_channel_matrix(
        &draw_paths(&mut rng, &stats, ofdm.cp_duration_s).unwrap(),
        &ofdm,
    )
    .unwrap();
    let h_b = build_channel_matrix(
        &draw_paths(&mut rng, &stats, ofdm.cp_duration_s).unwrap(),
        &ofdm,
    )
    .unwrap();
    let n = ofdm.num_subcarriers;
    let y: Vec<Complex64> = (0..n)
        .map(|_| Complex64::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)))
        .collect();
    let frame = ReceivedFrame::new(y, 0.25).unwrap();
    let prior = JointDist::uniform(n);
    let constellation = pnc_relay::codec::Constellation::bpsk();

    let time_aca = |d: usize| {
        let profile = vec![d; n];
        let mut best = f64::INFINITY;
        for _ in 0..3 {
            let t = Instant::now();
            let det =
                AcaFgdDetector::with_depth_profile(&frame, &h_a, &h_b, &profile, &constellation)
                    .unwrap();
            det.detect(&prior, 1).unwrap();
            best = best.min(t.elapsed().as_secs_f64());
        }
        best
    };
    let aca1 = time_aca(1);
    let aca2 = time_aca(2);
    let aca_ratio = aca2 / aca1;

    let time_lmmse = |d: usize| {
        let ta = band_truncate(&h_a, &vec![d; n]).unwrap();
        let tb = band_truncate(&h_b, &vec![d; n]).unwrap();
        let mut best = f64::INFINITY;
        for _ in 0..3 {
            let t = Instant::now();
            sm_lmmse_detect(&frame, &ta, &tb, &prior).unwrap();
            best = best.min(t.elapsed().as_secs_f64());
        }
        best
    };
    let lm1 = time_lmmse(1);
    let lm2 = time_lmmse(2);
    let lm_ratio = lm2 / lm1;

    let pass = (4.0..=48.0).contains(&aca_ratio) && lm_ratio < 2.0;
    report(
        8,
        "complexity scaling",
        pass,
        &format!(
            "detector D=2/D=1 time ratio {aca_ratio:.1} (need 4..48, {aca1:.3}s -> {aca2:.3}s); \
             LMMSE ratio {lm_ratio:.2} (need <2)"
        ),
    );
}
