//! Least-squares slopes, growth trends and per-trial seeds.

/// Slope of the least-squares line through `(x_i, y_i)`; `NaN` with fewer
/// than two distinct `x`.
pub fn slope(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if sxx == 0.0 {
        f64::NAN
    } else {
        sxy / sxx
    }
}

/// Slope of `ln y` against `ln x`.
pub fn log_log_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    slope(&lx, &ly)
}

/// `v[i+1] / v[i]`, with `0/0 = 1` and `x/0 = inf`.
pub fn consecutive_ratios(v: &[f64]) -> Vec<f64> {
    v.windows(2)
        .map(|w| match (w[0] == 0.0, w[1] == 0.0) {
            (true, true) => 1.0,
            (true, false) => f64::INFINITY,
            _ => w[1] / w[0],
        })
        .collect()
}

/// Slope of `log2 v` against the index spacing `xs`; all-zero data has
/// slope 0, data with some zeros `inf`.
pub fn log2_growth_rate(xs: &[f64], v: &[f64]) -> f64 {
    if v.iter().all(|&y| y == 0.0) {
        return 0.0;
    }
    if v.iter().any(|&y| y <= 0.0) {
        return f64::INFINITY;
    }
    let ly: Vec<f64> = v.iter().map(|y| y.log2()).collect();
    slope(xs, &ly)
}

/// `log2` growth rate of the running maximum of `v`, fitted over the upper
/// half of the points (at least two). A bounded sequence that saturates
/// gives a rate near 0 even while it still creeps up at the start.
pub fn envelope_growth_rate(xs: &[f64], v: &[f64]) -> f64 {
    let env: Vec<f64> = v
        .iter()
        .scan(f64::NEG_INFINITY, |run, &y| {
            *run = run.max(y);
            Some(*run)
        })
        .collect();
    let from = (v.len() / 2).min(v.len().saturating_sub(2));
    log2_growth_rate(&xs[from..], &env[from..])
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of one trial, a fixed function of the run seed and the trial's
/// coordinates.
pub fn trial_seed(seed: u64, coords: &[u64]) -> u64 {
    coords.iter().fold(splitmix64(seed), |h, &c| splitmix64(h ^ splitmix64(c)))
}
