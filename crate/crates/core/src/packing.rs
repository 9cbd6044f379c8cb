//! Centered ball packings and weighted packing sums.
//!
//! A centered packing of a set E is a finite family of pairwise disjoint
//! closed balls with centers in E and radii at most epsilon. Disjointness
//! is `|x_i - x_j| > r_i + r_j`, checked in exact rational arithmetic
//! (every f64 is a dyadic rational, so the certificate is exact).
//!
//! The weighted sum `sum_i mass(B_i)^q (2 r_i)^t` follows the conventions
//! `0^q = +inf` for `q < 0` and `0^0 = 1`.
//!
//! On a line, the supremum of the weighted sum over sub-packings of a
//! finite candidate set is a maximum-weight disjoint-interval problem, so
//! the tiny-scale oracle is an exact dynamic program rather than a subset
//! enumeration; a greedy insertion gives the cheap lower bound.

use crate::error::{Error, Result};
use crate::measure::MeasureModel;
use crate::util::{log2_factorials, log2_sum_exp2, neumaier_sum};
use num_bigint::BigInt;
use num_rational::BigRational;

/// A closed ball on the line.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct Ball {
    pub center: f64,
    pub radius: f64,
}

impl Ball {
    pub fn new(center: f64, radius: f64) -> Self {
        Ball { center, radius }
    }

    fn left(&self) -> BigRational {
        rational(self.center) - rational(self.radius)
    }

    fn right(&self) -> BigRational {
        rational(self.center) + rational(self.radius)
    }
}

fn rational(x: f64) -> BigRational {
    BigRational::from_float(x).expect("finite coordinate")
}

/// Exact disjointness of two closed balls: `|x_i - x_j| > r_i + r_j`.
pub fn balls_disjoint(a: &Ball, b: &Ball) -> bool {
    let dist = {
        let d = rational(a.center) - rational(b.center);
        if d < BigRational::from(BigInt::from(0)) {
            -d
        } else {
            d
        }
    };
    dist > rational(a.radius) + rational(b.radius)
}

/// Whether the family is a centered epsilon-packing of the carrier set:
/// centers in the carrier, radii in (0, epsilon], closed balls pairwise
/// disjoint.
pub fn is_centered_packing<F: Fn(f64) -> bool>(
    balls: &[Ball],
    in_carrier: F,
    epsilon: f64,
) -> bool {
    for b in balls {
        if !(b.radius > 0.0 && b.radius <= epsilon) || !in_carrier(b.center) {
            return false;
        }
    }
    for (i, a) in balls.iter().enumerate() {
        for b in balls.iter().skip(i + 1) {
            if !balls_disjoint(a, b) {
                return false;
            }
        }
    }
    true
}

/// A finite centered packing with its scale bound; construction certifies
/// the packing property.
#[derive(Clone, Debug)]
pub struct CenteredPacking {
    pub balls: Vec<Ball>,
    pub epsilon: f64,
}

impl CenteredPacking {
    pub fn new<F: Fn(f64) -> bool>(balls: Vec<Ball>, epsilon: f64, in_carrier: F) -> Result<Self> {
        if !is_centered_packing(&balls, in_carrier, epsilon) {
            return Err(Error::Domain("not a centered packing of the carrier".into()));
        }
        Ok(CenteredPacking { balls, epsilon })
    }
}

/// Weighted packing sum with its mass-enclosure uncertainty.
#[derive(Clone, Copy, Debug)]
pub struct PackingSum {
    /// Sum with every ball mass at its enclosure midpoint.
    pub value: f64,
    /// Certified bounds from the mass enclosures.
    pub lower: f64,
    pub upper: f64,
}

/// One term `mass^q (2r)^t` under the zero-mass conventions.
fn term(mass: f64, q: f64, t: f64, diameter: f64) -> f64 {
    let scale = (t * diameter.log2()).exp2();
    if mass == 0.0 {
        if q < 0.0 {
            return f64::INFINITY;
        }
        if q == 0.0 {
            return scale; // 0^0 = 1
        }
        return 0.0;
    }
    (q * mass.log2() + t * diameter.log2()).exp2()
}

/// `sum_i mass(B_i)^q (2 r_i)^t` with ball masses resolved at `depth`.
pub fn packing_sum(
    model: &MeasureModel,
    packing: &CenteredPacking,
    q: f64,
    t: f64,
    depth: usize,
) -> Result<PackingSum> {
    let mut mids = Vec::with_capacity(packing.balls.len());
    let mut lows = Vec::with_capacity(packing.balls.len());
    let mut highs = Vec::with_capacity(packing.balls.len());
    for b in &packing.balls {
        let enc = model.ball_mass_bounds(b.center, b.radius, depth)?;
        let d = 2.0 * b.radius;
        mids.push(term(0.5 * (enc.lower + enc.upper), q, t, d));
        let (tl, th) = (term(enc.lower, q, t, d), term(enc.upper, q, t, d));
        // the term is monotone in the mass, increasing iff q >= 0
        if q >= 0.0 {
            lows.push(tl);
            highs.push(th);
        } else {
            lows.push(th);
            highs.push(tl);
        }
    }
    Ok(PackingSum {
        value: neumaier_sum(&mids),
        lower: neumaier_sum(&lows),
        upper: neumaier_sum(&highs),
    })
}

/// Outcome of the exact tiny-scale supremum search.
#[derive(Clone, Debug)]
pub struct SupremumOutcome {
    pub value: f64,
    pub chosen: Vec<Ball>,
}

/// Candidate balls: one per (point, admissible radius), radii above epsilon
/// dropped.
fn candidate_balls(points: &[f64], radii: &[f64], epsilon: f64) -> Result<Vec<Ball>> {
    for &x in points {
        if !(0.0..1.0).contains(&x) {
            return Err(Error::Domain(format!("candidate point {x} outside [0,1)")));
        }
    }
    for &r in radii {
        if !(r > 0.0) {
            return Err(Error::Domain("candidate radii must be positive".into()));
        }
    }
    Ok(points
        .iter()
        .flat_map(|&x| radii.iter().filter(|&&r| r <= epsilon).map(move |&r| Ball::new(x, r)))
        .collect())
}

/// Midpoint-mass weight of one candidate ball.
fn ball_weight(model: &MeasureModel, b: &Ball, q: f64, t: f64, depth: usize) -> Result<f64> {
    let enc = model.ball_mass_bounds(b.center, b.radius, depth)?;
    Ok(term(0.5 * (enc.lower + enc.upper), q, t, 2.0 * b.radius))
}

/// Canonical value of a chosen family: balls sorted by (center, radius),
/// weights summed left to right. Both the exact oracle and any independent
/// enumeration of the same optimum produce bit-identical values this way.
fn canonical_value(model: &MeasureModel, chosen: &mut Vec<Ball>, q: f64, t: f64, depth: usize) -> Result<f64> {
    chosen.sort_by(|a, b| {
        a.center.partial_cmp(&b.center).unwrap().then(a.radius.partial_cmp(&b.radius).unwrap())
    });
    let mut weights = Vec::with_capacity(chosen.len());
    for b in chosen.iter() {
        weights.push(ball_weight(model, b, q, t, depth)?);
    }
    Ok(neumaier_sum(&weights))
}

/// Exact supremum of the weighted packing sum over all centered packings
/// drawn from `points x radii`.
///
/// Balls on a line are intervals, so the maximum-weight disjoint subfamily
/// is a weighted-interval-scheduling dynamic program over candidates sorted
/// by right endpoint; weights are nonnegative (possibly infinite), endpoint
/// comparisons are exact rationals.
pub fn prepacking_sup_exact(
    model: &MeasureModel,
    points: &[f64],
    epsilon: f64,
    q: f64,
    t: f64,
    radii: &[f64],
    depth: usize,
) -> Result<SupremumOutcome> {
    if points.len() > 16 || radii.len() > 8 {
        return Err(Error::BudgetExceeded(format!(
            "exact supremum budget is 16 points x 8 radii, got {} x {}",
            points.len(),
            radii.len()
        )));
    }
    let mut cands = candidate_balls(points, radii, epsilon)?;
    // sort by right endpoint (ties by left, then coordinates) for the DP
    cands.sort_by(|a, b| {
        a.right()
            .cmp(&b.right())
            .then_with(|| a.left().cmp(&b.left()))
            .then(a.center.partial_cmp(&b.center).unwrap())
            .then(a.radius.partial_cmp(&b.radius).unwrap())
    });
    let n = cands.len();
    let mut weights = Vec::with_capacity(n);
    for b in &cands {
        weights.push(ball_weight(model, b, q, t, depth)?);
    }
    // prev[i]: number of candidates strictly disjoint to the left of i
    let mut prev = vec![0usize; n];
    for i in 0..n {
        let li = cands[i].left();
        // rightmost j with right_j < left_i
        let mut p = 0;
        for j in (0..i).rev() {
            if cands[j].right() < li {
                p = j + 1;
                break;
            }
        }
        prev[i] = p;
    }
    let mut dp = vec![0.0f64; n + 1];
    for i in 1..=n {
        let include = weights[i - 1] + dp[prev[i - 1]];
        dp[i] = if include > dp[i - 1] { include } else { dp[i - 1] };
    }
    // reconstruct the chosen family
    let mut chosen = Vec::new();
    let mut i = n;
    while i > 0 {
        let include = weights[i - 1] + dp[prev[i - 1]];
        if include > dp[i - 1] {
            chosen.push(cands[i - 1]);
            i = prev[i - 1];
        } else {
            i -= 1;
        }
    }
    if dp[n].is_infinite() {
        return Ok(SupremumOutcome { value: f64::INFINITY, chosen });
    }
    let value = canonical_value(model, &mut chosen, q, t, depth)?;
    Ok(SupremumOutcome { value, chosen })
}

/// Greedy lower bound for the same supremum: insert candidates by
/// decreasing weight when disjoint from everything already kept.
pub fn greedy_prepacking_estimate(
    model: &MeasureModel,
    points: &[f64],
    epsilon: f64,
    q: f64,
    t: f64,
    radii: &[f64],
    depth: usize,
) -> Result<SupremumOutcome> {
    let cands = candidate_balls(points, radii, epsilon)?;
    let mut weighted = Vec::with_capacity(cands.len());
    for b in cands {
        weighted.push((ball_weight(model, &b, q, t, depth)?, b));
    }
    weighted.sort_by(|(wa, a), (wb, b)| {
        wb.partial_cmp(wa)
            .unwrap()
            .then(a.center.partial_cmp(&b.center).unwrap())
            .then(a.radius.partial_cmp(&b.radius).unwrap())
    });
    let mut chosen: Vec<Ball> = Vec::new();
    for (_, b) in weighted {
        if chosen.iter().all(|c| balls_disjoint(c, &b)) {
            chosen.push(b);
        }
    }
    if chosen.iter().any(|b| {
        ball_weight(model, b, q, t, depth).map(|w| w.is_infinite()).unwrap_or(false)
    }) {
        return Ok(SupremumOutcome { value: f64::INFINITY, chosen });
    }
    let value = canonical_value(model, &mut chosen, q, t, depth)?;
    Ok(SupremumOutcome { value, chosen })
}

/// Dyadic partition sum at one level, in log2 space.
#[derive(Clone, Copy, Debug)]
pub struct PartitionSum {
    /// log2 of `sum mass^q (2^-n)^t` over positive-mass order-n words.
    pub log2: f64,
    /// A zero-mass word met `q < 0`: the sum is infinite by convention.
    pub infinite: bool,
    /// Zero-mass words excluded for `q >= 0`.
    pub excluded_zero_words: u64,
}

/// `S_n(q, t) = sum over order-n words of mass^q (2^-n)^t`, zero-mass words
/// excluded for `q >= 0` and infinite for `q < 0`.
pub fn partition_sum(model: &MeasureModel, n: usize, q: f64, t: f64) -> Result<PartitionSum> {
    if n > crate::measure::ENUMERATION_CAP {
        return Err(Error::DepthExceeded(format!(
            "partition sum at order {n} exceeds the enumeration cap {}",
            crate::measure::ENUMERATION_CAP
        )));
    }
    let nt = n as f64 * t;
    match model {
        MeasureModel::Uniform => {
            // 2^n equal masses 2^-n
            Ok(PartitionSum {
                log2: n as f64 * (1.0 - q) - nt,
                infinite: false,
                excluded_zero_words: 0,
            })
        }
        MeasureModel::Cascade { p0, p1 } => {
            // group words by zero count: C(n,k) words share one mass
            let lf = log2_factorials(n);
            let (l0, l1) = (p0.log2(), p1.log2());
            let terms: Vec<f64> = (0..=n)
                .map(|k| {
                    let log2_choose = lf[n] - lf[k] - lf[n - k];
                    log2_choose + q * (k as f64 * l0 + (n - k) as f64 * l1) - nt
                })
                .collect();
            Ok(PartitionSum {
                log2: log2_sum_exp2(&terms),
                infinite: false,
                excluded_zero_words: 0,
            })
        }
        MeasureModel::Selective(_) => {
            let mut terms = Vec::new();
            model.for_each_region(n, |_, order, log2m, _| {
                // 2^(n-order) equal leaves of log-mass log2m - (n-order)
                let d = (n - order) as f64;
                terms.push(d * (1.0 - q) + q * log2m - nt);
            })?;
            Ok(PartitionSum {
                log2: log2_sum_exp2(&terms),
                infinite: false,
                excluded_zero_words: 0,
            })
        }
        MeasureModel::Explicit(_) => {
            let masses = model.log2_masses_at(n)?;
            let mut terms = Vec::with_capacity(masses.len());
            let mut excluded = 0u64;
            for l in masses {
                if l == f64::NEG_INFINITY {
                    if q < 0.0 {
                        return Ok(PartitionSum {
                            log2: f64::INFINITY,
                            infinite: true,
                            excluded_zero_words: 0,
                        });
                    }
                    excluded += 1;
                    continue;
                }
                terms.push(q * l - nt);
            }
            Ok(PartitionSum {
                log2: log2_sum_exp2(&terms),
                infinite: false,
                excluded_zero_words: excluded,
            })
        }
    }
}
