//! Small numeric helpers: compensated summation, log-space accumulation and
//! least-squares slopes.

/// Neumaier-compensated sum. Keeps the error of summing `n` terms near one
/// ulp instead of `O(n)` ulps, which matters for the 1e-12 mass-conservation
/// checks over 2^16 terms.
pub fn neumaier_sum(terms: &[f64]) -> f64 {
    if terms.iter().any(|x| !x.is_finite()) {
        // infinities dominate and NaN propagates, as in plain summation
        return terms.iter().sum();
    }
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for &x in terms {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            comp += (sum - t) + x;
        } else {
            comp += (x - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// log2 of a sum of nonnegative terms given as log2 values.
///
/// `-inf` entries (zero terms) are skipped; an empty or all-zero input
/// yields `-inf`.
pub fn log2_sum_exp2(log_terms: &[f64]) -> f64 {
    let max = log_terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max; // empty, all -inf, or a +inf term dominates
    }
    let shifted: Vec<f64> = log_terms
        .iter()
        .filter(|l| l.is_finite() || **l == f64::INFINITY)
        .map(|&l| (l - max).exp2())
        .collect();
    max + neumaier_sum(&shifted).log2()
}

/// Ordinary least squares fit y = slope*x + intercept.
///
/// Returns `(slope, intercept, rms_residual)`. Requires at least two
/// distinct x values; the caller checks that.
pub fn ols_fit(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len() as f64;
    let mx = neumaier_sum(xs) / n;
    let my = neumaier_sum(ys) / n;
    let sxx: Vec<f64> = xs.iter().map(|x| (x - mx) * (x - mx)).collect();
    let sxy: Vec<f64> = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).collect();
    let sxx = neumaier_sum(&sxx);
    let sxy = neumaier_sum(&sxy);
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let res: Vec<f64> = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| {
            let e = y - (slope * x + intercept);
            e * e
        })
        .collect();
    let rms = (neumaier_sum(&res) / n).sqrt();
    (slope, intercept, rms)
}

/// Cumulative log2 factorials: `table[k] = log2(k!)`.
pub fn log2_factorials(up_to: usize) -> Vec<f64> {
    let mut t = Vec::with_capacity(up_to + 1);
    t.push(0.0);
    let mut acc = 0.0f64;
    let mut comp = 0.0f64;
    for k in 1..=up_to {
        // compensated running sum of log2(k)
        let x = (k as f64).log2();
        let s = acc + x;
        if acc.abs() >= x.abs() {
            comp += (acc - s) + x;
        } else {
            comp += (x - s) + acc;
        }
        acc = s;
        t.push(acc + comp);
    }
    t
}
