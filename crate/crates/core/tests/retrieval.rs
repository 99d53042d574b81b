use bocda::fiber::{Channel, FiberSegment};
use bocda::forward::{synthesize_noiseless, NoiseModel, ScanConfig, Sweep};
use bocda::retrieval::{
    background_kernel, deconvolve_gain, ground_truth_gain, ground_truth_strength, peak_bfs_trace, BackgroundKernel,
    KernelOptions,
};
use bocda::Error;

const LAMBDA_ROUND_TRIP: f64 = 1e-6;
const ROUND_TRIP_TOL: f64 = 0.03;

fn two_segments() -> (Channel, ScanConfig) {
    let wl = 1.55e-6;
    let a = FiberSegment::smf28(0.26);
    let b0 = a.bfs(wl).unwrap();
    let mut b = FiberSegment::smf28(0.24).with_bfs(b0 + 30e6, wl);
    b.gain_coeff = 0.8;
    b.label = "insert".into();
    let ch = Channel::new(wl, vec![a, b]);
    let mut cfg = ScanConfig::with_positions(Sweep::new(0.01, 0.49, 0.02), Sweep::new(b0 - 60e6, b0 + 90e6, 1e6));
    cfg.noise = NoiseModel::off();
    (ch, cfg)
}

fn rel_l2(a: &[f64], b: &[f64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    let den: f64 = b.iter().map(|y| y * y).sum();
    (num / den).sqrt()
}

fn kernel(ch: &Channel, cfg: &ScanConfig) -> BackgroundKernel {
    background_kernel(ch.length(), cfg, &KernelOptions::for_channel(ch)).unwrap()
}

#[test]
#[allow(clippy::needless_range_loop)]
fn fft_operator_matches_entries() {
    let (ch, mut cfg) = two_segments();
    cfg.positions_m = Some(Sweep::new(0.01, 0.49, 0.08));
    cfg.probe_sweep_hz.step = 10e6;
    let k = kernel(&ch, &cfg);
    let n = k.n_cols();
    let x: Vec<f64> = (0..n).map(|i| ((i * 37 % 11) as f64) / 11.0).collect();
    let y = k.apply(&x);
    let nv = k.n_detunings();
    for r in 0..k.n_rows() {
        let (p, j) = (r / nv, r % nv);
        let mut acc = 0.0;
        for c in 0..k.n_cells() {
            for kk in 0..nv {
                acc += k.entry(p, j, c, kk) * x[c * nv + kk];
            }
        }
        assert!((acc - y[r]).abs() <= 1e-12 * (1.0 + acc.abs()) * 1e3, "{acc} {}", y[r]);
    }
    let yv: Vec<f64> = (0..k.n_rows()).map(|i| ((i * 13 % 7) as f64) - 3.0).collect();
    let kty = k.apply_adjoint(&yv);
    let lhs: f64 = y.iter().zip(&yv).map(|(a, b)| a * b).sum();
    let rhs: f64 = x.iter().zip(&kty).map(|(a, b)| a * b).sum();
    assert!((lhs - rhs).abs() <= 1e-10 * lhs.abs().max(1.0));
}

#[test]
fn correlation_row_is_lorentzian_stencil() {
    let (ch, cfg) = two_segments();
    let k = kernel(&ch, &cfg);
    let phi = k.phi();
    let nv = k.n_detunings();
    // a cell far from position p sees only background; the owning cell is dominated by the Lorentzian
    let p = 5;
    let col = k.column(p, 60);
    let row = &col[p * nv..(p + 1) * nv];
    let peak = row.iter().copied().fold(0.0, f64::max);
    let j = row.iter().position(|v| *v == peak).unwrap();
    assert_eq!(j, 60);
    let shape: Vec<f64> = row.iter().map(|v| v / peak).collect();
    let lor: Vec<f64> = (0..nv).map(|jj| phi[jj * nv + 60]).collect();
    assert!(rel_l2(&shape, &lor) < 0.2, "{}", rel_l2(&shape, &lor));
}

#[test]
fn kernel_reproduces_forward_model() {
    let (ch, cfg) = two_segments();
    let k = kernel(&ch, &cfg);
    let c = ground_truth_strength(&ch, &cfg, &k).unwrap();
    let s = synthesize_noiseless(&ch, &cfg).unwrap();
    let pred = k.apply(&c);
    assert!(rel_l2(&pred, &s.intensity) < 1e-9, "{}", rel_l2(&pred, &s.intensity));
    assert!(k.apply(&vec![0.0; k.n_cols()]).iter().all(|v| *v == 0.0));
}

#[test]
fn round_trip_recovers_gain() {
    let (ch, cfg) = two_segments();
    let k = kernel(&ch, &cfg);
    let s = synthesize_noiseless(&ch, &cfg).unwrap();
    let g = deconvolve_gain(&s, &k, LAMBDA_ROUND_TRIP).unwrap();
    let truth = ground_truth_gain(&ch, &cfg, &k).unwrap();
    let err = rel_l2(&g.gain, &truth);
    assert!(err < ROUND_TRIP_TOL, "relative L2 error {err}");
    assert!(g.gain.iter().all(|v| *v >= 0.0));
}

#[test]
fn residual_grows_with_lambda() {
    let (ch, cfg) = two_segments();
    let k = kernel(&ch, &cfg);
    let s = synthesize_noiseless(&ch, &cfg).unwrap();
    let mut last = -1.0;
    for lambda in [0.0, 1e-6, 1e-4, 1e-2, 1.0, 100.0] {
        let g = deconvolve_gain(&s, &k, lambda).unwrap();
        assert!(g.residual_norm >= last, "lambda {lambda}: {} < {last}", g.residual_norm);
        last = g.residual_norm;
    }
}

#[test]
fn deconvolved_trace_follows_segments() {
    let (ch, cfg) = two_segments();
    let k = kernel(&ch, &cfg);
    let s = synthesize_noiseless(&ch, &cfg).unwrap();
    let g = deconvolve_gain(&s, &k, 1e-6).unwrap();
    let b0 = ch.segments[0].bfs(ch.wavelength_m).unwrap();
    let t = peak_bfs_trace(&s);
    for (z, nu) in g.positions.iter().zip(g.gain.chunks(s.detunings.len())) {
        let j = (0..nu.len()).max_by(|&a, &b| nu[a].total_cmp(&nu[b])).unwrap();
        let expect = if *z < 0.26 { b0 } else { b0 + 30e6 };
        assert!((s.detunings[j] - expect).abs() <= 1e6, "z={z}");
    }
    assert_eq!(t.len(), s.positions.len());
}

#[test]
fn mismatched_grid_and_budget_errors() {
    let (ch, cfg) = two_segments();
    let k = kernel(&ch, &cfg);
    let mut other = cfg.clone();
    other.probe_sweep_hz.step = 2e6;
    let s = synthesize_noiseless(&ch, &other).unwrap();
    assert!(matches!(deconvolve_gain(&s, &k, 0.0), Err(Error::GridMismatch(_))));
    let tiny = KernelOptions { memory_budget_bytes: 1024, ..KernelOptions::for_channel(&ch) };
    assert!(matches!(background_kernel(ch.length(), &cfg, &tiny), Err(Error::GridTooLarge { .. })));
}
