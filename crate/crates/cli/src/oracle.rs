//! Randomized cross-check of the exact packing-supremum oracle.
//!
//! Each instance draws a tiny point/radius family, computes the exact
//! supremum through the library's dynamic program, recomputes it with the
//! plain depth-first enumeration below (one ball per point, exact rational
//! disjointness, canonical left-to-right summation of the best family), and
//! runs the greedy estimate. The enumeration here is deliberately
//! independent of the library's search.

use crate::config::Config;
use crate::CliError;
use mfpack_core::measure::MeasureModel;
use mfpack_core::packing::{
    balls_disjoint, greedy_prepacking_estimate, prepacking_sup_exact, Ball,
};
use mfpack_core::util::neumaier_sum;
use rand::{Rng, SeedableRng};

/// Single-ball weight, mirroring the library's midpoint-mass convention.
fn weight(model: &MeasureModel, b: &Ball, q: f64, t: f64, depth: usize) -> f64 {
    let enc = model.ball_mass_bounds(b.center, b.radius, depth).expect("in-range ball");
    let mass = 0.5 * (enc.lower + enc.upper);
    let diameter = 2.0 * b.radius;
    if mass == 0.0 {
        if q < 0.0 {
            return f64::INFINITY;
        }
        if q == 0.0 {
            return (t * diameter.log2()).exp2();
        }
        return 0.0;
    }
    (q * mass.log2() + t * diameter.log2()).exp2()
}

/// Depth-first maximizer over sub-families with at most one ball per point.
fn enumerate_sup(
    model: &MeasureModel,
    points: &[f64],
    radii: &[f64],
    epsilon: f64,
    q: f64,
    t: f64,
    depth: usize,
) -> f64 {
    fn canonical(model: &MeasureModel, fam: &mut Vec<Ball>, q: f64, t: f64, depth: usize) -> f64 {
        fam.sort_by(|a, b| {
            a.center
                .partial_cmp(&b.center)
                .unwrap()
                .then(a.radius.partial_cmp(&b.radius).unwrap())
        });
        let ws: Vec<f64> = fam.iter().map(|b| weight(model, b, q, t, depth)).collect();
        neumaier_sum(&ws)
    }
    fn rec(
        model: &MeasureModel,
        points: &[f64],
        radii: &[f64],
        epsilon: f64,
        i: usize,
        current: &mut Vec<Ball>,
        best: &mut f64,
        q: f64,
        t: f64,
        depth: usize,
    ) {
        if i == points.len() {
            let v = canonical(model, &mut current.clone(), q, t, depth);
            if v > *best {
                *best = v;
            }
            return;
        }
        rec(model, points, radii, epsilon, i + 1, current, best, q, t, depth);
        for &r in radii {
            if r > epsilon {
                continue;
            }
            let b = Ball::new(points[i], r);
            if current.iter().all(|c| balls_disjoint(c, &b)) {
                current.push(b);
                rec(model, points, radii, epsilon, i + 1, current, best, q, t, depth);
                current.pop();
            }
        }
    }
    let mut best = 0.0;
    rec(model, points, radii, epsilon, 0, &mut Vec::new(), &mut best, q, t, depth);
    best
}

#[derive(serde::Serialize)]
struct OracleReport {
    instances: usize,
    greedy_within_exact: usize,
    enumeration_bit_exact: usize,
    all_pass: bool,
}

pub fn cmd_oracle(cfg: &Config, seed: u64) -> Result<String, CliError> {
    let opts = crate::section(&cfg.oracle, "oracle")?;
    let model = cfg.model.build()?;
    let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
    let mut greedy_ok = 0usize;
    let mut bit_exact = 0usize;
    for _ in 0..opts.instances {
        let npts = rng.gen_range(1..=opts.max_points.min(16));
        let points: Vec<f64> =
            (0..npts).map(|_| rng.gen_range(0..8192) as f64 / 8192.0).collect();
        let radii: Vec<f64> = (0..rng.gen_range(1..=opts.max_radii.min(8)))
            .map(|_| 2f64.powi(-rng.gen_range(4..11)))
            .collect();
        let q = rng.gen_range(-1.0..3.0);
        let t = rng.gen_range(-0.5..2.0);
        let epsilon = 0.125;
        let exact =
            prepacking_sup_exact(&model, &points, epsilon, q, t, &radii, opts.depth)?;
        let greedy =
            greedy_prepacking_estimate(&model, &points, epsilon, q, t, &radii, opts.depth)?;
        if greedy.value <= exact.value + 1e-12 {
            greedy_ok += 1;
        }
        let brute = enumerate_sup(&model, &points, &radii, epsilon, q, t, opts.depth);
        if brute.to_bits() == exact.value.to_bits() {
            bit_exact += 1;
        }
    }
    let report = OracleReport {
        instances: opts.instances,
        greedy_within_exact: greedy_ok,
        enumeration_bit_exact: bit_exact,
        all_pass: greedy_ok == opts.instances && bit_exact == opts.instances,
    };
    Ok(crate::to_json(&report))
}
