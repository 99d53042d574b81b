//! Small robust-statistics helpers.

/// Scale factor turning a median absolute deviation into a Gaussian σ.
pub const MAD_TO_SIGMA: f64 = 1.482_602_218_505_602;

pub fn median(v: &[f64]) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2]
    } else {
        0.5 * (s[n / 2 - 1] + s[n / 2])
    }
}

/// Robust σ from the median absolute deviation.
pub fn mad_sigma(v: &[f64]) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    let m = median(v);
    let dev: Vec<f64> = v.iter().map(|x| (x - m).abs()).collect();
    MAD_TO_SIGMA * median(&dev)
}

/// Robust σ of white noise on a slowly varying signal, from first differences.
pub fn diff_sigma(v: &[f64]) -> f64 {
    if v.len() < 2 {
        return 0.0;
    }
    let d: Vec<f64> = v.windows(2).map(|w| w[1] - w[0]).collect();
    mad_sigma(&d) / std::f64::consts::SQRT_2
}

/// Running median over `2*half + 1` samples, window clipped at the ends.
pub fn running_median(v: &[f64], half: usize) -> Vec<f64> {
    let n = v.len();
    (0..n)
        .map(|i| {
            let lo = i.saturating_sub(half);
            let hi = (i + half + 1).min(n);
            median(&v[lo..hi])
        })
        .collect()
}

/// Contiguous runs `[start, end)` where `mask` is true.
pub fn runs(mask: &[bool]) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, &m) in mask.iter().enumerate() {
        match (m, start) {
            (true, None) => start = Some(i),
            (false, Some(s)) => {
                out.push((s, i));
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        out.push((s, mask.len()));
    }
    out
}
