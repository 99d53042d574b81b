use bocda::detect::EventKind;
use bocda::fiber::{Channel, Feature, FiberSegment};
use bocda::otdr::{mean_trace, otdr_detect, otdr_profile, simulate_with, OtdrConfig};

fn bent(loss: f64) -> Channel {
    Channel::new(1.55e-6, vec![FiberSegment::smf28(3.0)]).with_feature(Feature::bend(1.5, loss, 0.1))
}

#[test]
fn strong_bend_is_seen_weak_bend_is_not() {
    let cfg = OtdrConfig::default();
    let strong = otdr_detect(&simulate_with(&bent(0.2), &cfg, 1).unwrap(), cfg.threshold_db).unwrap();
    assert_eq!(strong.len(), 1, "{strong:?}");
    assert_eq!(strong[0].kind, EventKind::OtdrStep);
    assert!((strong[0].position_m - 1.5).abs() < 0.1);
    let weak = otdr_detect(&simulate_with(&bent(0.01), &cfg, 1).unwrap(), cfg.threshold_db).unwrap();
    assert!(weak.is_empty(), "{weak:?}");
}

#[test]
fn averaging_shrinks_noise() {
    let ch = Channel::new(1.55e-6, vec![FiberSegment::smf28(3.0)]);
    let cfg = OtdrConfig::default();
    let clean = otdr_profile(&ch, cfg.pulse_width_s, cfg.sampling_m, 3.0).unwrap();
    let (mut single, mut mean, mut count) = (0.0, 0.0, 0.0);
    for seed in 0..100 {
        let traces = simulate_with(&ch, &cfg, seed).unwrap();
        let m = mean_trace(&traces).unwrap();
        for (k, c) in clean.power_db.iter().enumerate() {
            single += (traces[0].power_db[k] - c).powi(2);
            mean += (m.power_db[k] - c).powi(2);
            count += 1.0;
        }
    }
    let single = (single / count).sqrt();
    let expected = cfg.noise_sigma_db / (cfg.n_traces as f64).sqrt();
    let mean = (mean / count).sqrt();
    assert!((single / cfg.noise_sigma_db - 1.0).abs() < 0.2, "{single}");
    assert!((mean / expected - 1.0).abs() < 0.2, "{mean} vs {expected}");
}

#[test]
fn traces_are_seeded_and_serialized() {
    let cfg = OtdrConfig::default();
    let a = simulate_with(&bent(0.05), &cfg, 3).unwrap();
    let b = simulate_with(&bent(0.05), &cfg, 3).unwrap();
    let c = simulate_with(&bent(0.05), &cfg, 4).unwrap();
    assert_eq!(a[0].to_text(), b[0].to_text());
    assert_ne!(a[0].to_text(), c[0].to_text());
    let text = a[0].to_text();
    assert!(text.starts_with("# bocda-otdr/1"));
    assert!(text.lines().any(|l| l == "position_m,power_db"));
    assert!(otdr_detect(&[], cfg.threshold_db).is_err());
}
