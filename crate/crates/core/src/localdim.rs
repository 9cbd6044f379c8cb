//! Local exponents, finite-scale level sets, replacement families and the
//! bound comparison.
//!
//! The quantity estimated here scores a finite set M against a centered
//! packing of M: replacement families `(B(y_i, delta_i))` indexed like the
//! packing, splittable into at most k parts that are each centered
//! u_eps-packings of M, are searched to minimize
//! `sup_i log mass(B(y_i, delta_i)) / log(2 r_i)`.
//! The base packing itself is always admissible (u_eps >= eps), so every
//! estimate is dominated by the base sup-ratio. On the selective model the
//! partner-swap family — keep type-1 balls, replace each other ball by its
//! related type-1 interval's ball — certifies a value below the exponent of
//! the type-1 window.
//!
//! All estimated suprema/infima are finite-scale: level-set membership is
//! certified from mass enclosures at tested dyadic radii, and limits in p
//! and eta are reported as tables, never extrapolated.

use crate::dyadic::{interval_of, locate, type_of, DyadicWord, IntervalType};
use crate::error::{Error, Result};
use crate::measure::MeasureModel;
use crate::packing::{balls_disjoint, is_centered_packing, Ball, CenteredPacking};
use crate::spectrum::{legendre_inf, olsen_bound, LegendreOutcome, OlsenOutcome, ScalingCurve};
use num_rational::BigRational;
use num_traits::One;
use serde::{Deserialize, Serialize};

/// Finite-scale local exponent samples `(n, log mass(I_n) / log 2^-n)`.
#[derive(Clone, Debug, Serialize)]
pub struct ExponentTrace {
    pub descriptor: String,
    pub samples: Vec<(usize, f64)>,
}

/// What to trace: a point of `[0,1)` or the leftmost selected path of one
/// lineage.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TraceTarget {
    Point { x: f64 },
    SelectedPath { lineage: usize },
}

/// Interval exponents along a point or a selected path at the given orders.
pub fn exponent_trace(
    model: &MeasureModel,
    target: &TraceTarget,
    orders: &[usize],
) -> Result<ExponentTrace> {
    if orders.iter().any(|&n| n == 0) {
        return Err(Error::Domain("exponent trace needs orders >= 1".into()));
    }
    match target {
        TraceTarget::Point { x } => {
            let mut samples = Vec::with_capacity(orders.len());
            for &n in orders {
                let w = locate(*x, n)?;
                let mass = model.mass(&w)?;
                samples.push((n, -mass.log2 / n as f64));
            }
            Ok(ExponentTrace { descriptor: format!("point {x}"), samples })
        }
        TraceTarget::SelectedPath { lineage } => {
            let fam = match model {
                MeasureModel::Selective(f) => f,
                _ => {
                    return Err(Error::Domain(
                        "selected-path traces need the selective model".into(),
                    ))
                }
            };
            if *lineage > 1 {
                return Err(Error::Domain("lineage index must be 0 or 1".into()));
            }
            let deepest = *orders.iter().max().unwrap();
            // walk the leftmost selected chain, no global enumeration
            let mut chain = fam.seeds()[*lineage].clone();
            while chain.order() < deepest {
                let sons = fam.sons(&chain)?;
                chain = sons[0].clone();
            }
            let mut samples = Vec::with_capacity(orders.len());
            for &n in orders {
                let w = chain.prefix(n);
                let mass = model.mass(&w)?;
                samples.push((n, -mass.log2 / n as f64));
            }
            Ok(ExponentTrace {
                descriptor: format!("selected path, lineage {lineage}"),
                samples,
            })
        }
    }
}

/// Per-candidate level-set diagnostics.
#[derive(Clone, Debug, Serialize)]
pub struct CandidateDiagnostics {
    pub point: f64,
    pub passed: bool,
    /// Max interval exponent over the deepest sampled orders.
    pub limsup_proxy: f64,
    /// First failed radius test `(j, required_log2, certified_log2)`.
    pub first_failure: Option<(usize, f64, f64)>,
}

/// A finite-depth level-set sample.
#[derive(Clone, Debug, Serialize)]
pub struct LevelSetSample {
    pub alpha: f64,
    pub eta: f64,
    pub p: u64,
    pub depth: usize,
    pub members: Vec<f64>,
    pub diagnostics: Vec<CandidateDiagnostics>,
}

/// Smallest dyadic exponent j whose radius 2^-j is tested: `2 * 2^-j < 1/p`.
fn first_tested_exponent(p: u64) -> usize {
    let mut j = 1usize;
    while (1.0 - j as f64).exp2() >= 1.0 / p as f64 {
        j += 1;
    }
    j
}

/// Keep the candidates that certify the scale condition
/// `mass(B(x, r)) >= (2r)^eta` at every tested dyadic radius with
/// `2r < 1/p` down to `2^-depth`, and whose deep interval exponents stay
/// within `alpha + limsup_slack`.
pub fn level_set_sample(
    model: &MeasureModel,
    alpha: f64,
    eta: f64,
    p: u64,
    depth: usize,
    limsup_slack: f64,
    candidates: &[f64],
) -> Result<LevelSetSample> {
    if !(eta > alpha) {
        return Err(Error::Domain(format!("eta = {eta} must exceed alpha = {alpha}")));
    }
    if p == 0 {
        return Err(Error::Domain("p must be a positive integer".into()));
    }
    let j_start = first_tested_exponent(p);
    let mass_depth = (depth + 6).min(crate::measure::BALL_DEPTH_CAP);
    let mut members = Vec::new();
    let mut diagnostics = Vec::new();
    for &x in candidates {
        if !(0.0..1.0).contains(&x) {
            return Err(Error::Domain(format!("candidate {x} outside [0,1)")));
        }
        let mut first_failure = None;
        for j in j_start..=depth {
            let r = (-(j as f64)).exp2();
            let enc = model.ball_mass_bounds(x, r, mass_depth)?;
            let required = (1.0 - j as f64) * eta; // log2 (2r)^eta
            let certified = enc.lower.log2();
            if certified < required - 1e-12 {
                first_failure = Some((j, required, certified));
                break;
            }
        }
        // lim sup proxy over the deepest three sampled orders
        let mut limsup = f64::NEG_INFINITY;
        for n in depth.saturating_sub(2)..=depth {
            if n == 0 {
                continue;
            }
            let w = locate(x, n)?;
            limsup = limsup.max(-model.mass(&w)?.log2 / n as f64);
        }
        let passed = first_failure.is_none() && limsup <= alpha + limsup_slack;
        if passed {
            members.push(x);
        }
        diagnostics.push(CandidateDiagnostics { point: x, passed, limsup_proxy: limsup, first_failure });
    }
    Ok(LevelSetSample { alpha, eta, p, depth, members, diagnostics })
}

/// The u_eps family rule: how far replacement radii may exceed the packing
/// scale.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum URule {
    /// u_eps = eps.
    #[default]
    Identity,
    /// u_eps = sqrt(eps).
    Sqrt,
}

impl URule {
    pub fn apply(&self, eps: f64) -> f64 {
        match self {
            URule::Identity => eps,
            URule::Sqrt => eps.sqrt(),
        }
    }
}

/// A replacement family: one ball per base index, split into parts that are
/// each centered u_eps-packings of M.
#[derive(Clone, Debug, Serialize)]
pub struct ReplacementFamily {
    pub assignment: Vec<Ball>,
    pub parts: Vec<Vec<usize>>,
}

impl ReplacementFamily {
    /// Whether the parts partition the index set and each part is a
    /// centered u_eps-packing of the points of M.
    pub fn is_valid(&self, m_points: &[f64], u_eps: f64) -> bool {
        let n = self.assignment.len();
        let mut seen = vec![false; n];
        for part in &self.parts {
            for &i in part {
                if i >= n || seen[i] {
                    return false;
                }
                seen[i] = true;
            }
        }
        if !seen.iter().all(|&s| s) {
            return false;
        }
        let in_m = |x: f64| m_points.iter().any(|&m| m == x);
        self.parts.iter().all(|part| {
            let balls: Vec<Ball> = part.iter().map(|&i| self.assignment[i]).collect();
            is_centered_packing(&balls, in_m, u_eps)
        })
    }
}

/// Search budgets for the replacement-family optimization.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SearchBudget {
    /// Exhaustive assignment search up to this many base indices.
    pub exhaustive_indices: usize,
    /// Number of dyadic radius levels below u_eps per candidate center.
    pub radius_levels: usize,
    /// Greedy repair rounds beyond the exhaustive range.
    pub repair_rounds: usize,
    /// Mass-enclosure resolution for ratio terms.
    pub mass_depth: usize,
    /// Node cap for the exhaustive search.
    pub node_cap: usize,
}

impl Default for SearchBudget {
    fn default() -> Self {
        SearchBudget {
            exhaustive_indices: 5,
            radius_levels: 4,
            repair_rounds: 16,
            mass_depth: 44,
            node_cap: 200_000,
        }
    }
}

/// Outcome of one replacement-family optimization.
#[derive(Clone, Debug, Serialize)]
pub struct LkOutcome {
    /// Certified upper end of the best sup-ratio found.
    pub value: f64,
    /// Lower end from the mass enclosures.
    pub value_low: f64,
    /// Sup-ratio of the base packing itself (the structural upper bound).
    pub base_sup: f64,
    pub family: ReplacementFamily,
    pub parts_used: usize,
}

/// Certified ratio interval `log mass(ball) / log (2 r_base)`.
fn ratio_interval(
    model: &MeasureModel,
    ball: &Ball,
    base_diam_log2: f64,
    mass_depth: usize,
) -> Result<(f64, f64)> {
    debug_assert!(base_diam_log2 < 0.0);
    let enc = model.ball_mass_bounds(ball.center, ball.radius, mass_depth)?;
    let hi = enc.lower.log2() / base_diam_log2; // smaller mass, larger ratio
    let lo = enc.upper.log2() / base_diam_log2;
    Ok((lo, hi))
}

/// Split balls into at most k parts, each pairwise disjoint, by exact graph
/// coloring on the conflict graph. Returns None when impossible.
fn color_into_parts(balls: &[Ball], k: usize) -> Option<Vec<Vec<usize>>> {
    let n = balls.len();
    let mut conflict = vec![vec![false; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            let c = !balls_disjoint(&balls[i], &balls[j]);
            conflict[i][j] = c;
            conflict[j][i] = c;
        }
    }
    let mut color = vec![usize::MAX; n];
    fn assign(
        i: usize,
        n: usize,
        k: usize,
        conflict: &[Vec<bool>],
        color: &mut Vec<usize>,
    ) -> bool {
        if i == n {
            return true;
        }
        for c in 0..k {
            if (0..i).all(|j| !(conflict[i][j] && color[j] == c)) {
                color[i] = c;
                if assign(i + 1, n, k, conflict, color) {
                    return true;
                }
                color[i] = usize::MAX;
            }
        }
        false
    }
    if !assign(0, n, k, &conflict, &mut color) {
        return None;
    }
    let mut parts = vec![Vec::new(); k];
    for (i, &c) in color.iter().enumerate() {
        parts[c].push(i);
    }
    parts.retain(|p| !p.is_empty());
    Some(parts)
}

/// Minimize the sup-ratio over replacement families with at most k parts.
///
/// Candidate balls combine centers of M with dyadic radii at most u_eps.
/// Exhaustive branch-and-bound under the budget, greedy repair above it;
/// the base packing is always admissible, so the result never exceeds the
/// base sup-ratio. Extra candidate families (witnesses) can be seeded in.
pub fn lk_estimate(
    model: &MeasureModel,
    m_points: &[f64],
    base: &CenteredPacking,
    k: usize,
    u_rule: URule,
    budget: &SearchBudget,
    seeds: &[ReplacementFamily],
) -> Result<LkOutcome> {
    if k == 0 || k > 4 {
        return Err(Error::Domain("part budget k must be in 1..=4".into()));
    }
    let in_m = |x: f64| m_points.iter().any(|&m| m == x);
    if !is_centered_packing(&base.balls, in_m, base.epsilon) {
        return Err(Error::Domain("base family is not a centered packing of M".into()));
    }
    if base.balls.is_empty() {
        return Err(Error::Domain("base packing is empty".into()));
    }
    if base.balls.iter().any(|b| 2.0 * b.radius >= 1.0) {
        return Err(Error::Domain("base diameters must stay below 1".into()));
    }
    let u_eps = u_rule.apply(base.epsilon);
    let idx_count = base.balls.len();
    let base_diam_log2: Vec<f64> =
        base.balls.iter().map(|b| (2.0 * b.radius).log2()).collect();

    // dyadic radius grid below u_eps
    let mut radii = Vec::new();
    let mut j = (-(u_eps.log2())).ceil() as i32;
    while radii.len() < budget.radius_levels {
        let r = (-(j as f64)).exp2();
        if r <= u_eps && r > 0.0 {
            radii.push(r);
        }
        j += 1;
    }

    // per-index candidates sorted by certified upper ratio
    let mut cands: Vec<Vec<(Ball, f64, f64)>> = Vec::with_capacity(idx_count);
    for i in 0..idx_count {
        let mut list = Vec::new();
        for &y in m_points {
            for &r in &radii {
                let b = Ball::new(y, r);
                let (lo, hi) = ratio_interval(model, &b, base_diam_log2[i], budget.mass_depth)?;
                if hi.is_finite() {
                    list.push((b, lo, hi));
                }
            }
        }
        list.sort_by(|a, b| {
            a.2.partial_cmp(&b.2)
                .unwrap()
                .then(a.0.center.partial_cmp(&b.0.center).unwrap())
                .then(a.0.radius.partial_cmp(&b.0.radius).unwrap())
        });
        cands.push(list);
    }

    // evaluate a full assignment: sup ratios plus colorability
    let evaluate = |balls: &[Ball]| -> Option<(f64, f64, Vec<Vec<usize>>)> {
        let parts = color_into_parts(balls, k)?;
        let fam = ReplacementFamily { assignment: balls.to_vec(), parts: parts.clone() };
        if !fam.is_valid(m_points, u_eps) {
            return None;
        }
        let mut hi = f64::NEG_INFINITY;
        let mut lo = f64::NEG_INFINITY;
        for (i, b) in balls.iter().enumerate() {
            let (l, h) = ratio_interval(model, b, base_diam_log2[i], budget.mass_depth).ok()?;
            hi = hi.max(h);
            lo = lo.max(l);
        }
        Some((hi, lo, parts))
    };

    let mut best: Option<(f64, f64, Vec<Ball>, Vec<Vec<usize>>)> = None;
    let consider = |balls: &[Ball], best: &mut Option<(f64, f64, Vec<Ball>, Vec<Vec<usize>>)>| {
        if let Some((hi, lo, parts)) = evaluate(balls) {
            if best.as_ref().map_or(true, |(bh, _, _, _)| hi < *bh) {
                *best = Some((hi, lo, balls.to_vec(), parts));
            }
        }
    };

    // the base family and any seeded witnesses are candidate solutions
    let base_admissible = base.balls.iter().all(|b| b.radius <= u_eps);
    if base_admissible {
        consider(&base.balls, &mut best);
    }
    for s in seeds {
        if s.assignment.len() == idx_count {
            consider(&s.assignment, &mut best);
        }
    }
    let base_sup = {
        let mut sup = f64::NEG_INFINITY;
        for (i, b) in base.balls.iter().enumerate() {
            let (_, h) = ratio_interval(model, b, base_diam_log2[i], budget.mass_depth)?;
            sup = sup.max(h);
        }
        sup
    };

    if idx_count <= budget.exhaustive_indices {
        // branch and bound over per-index candidate lists
        fn dfs(
            level: usize,
            chosen: &mut Vec<Ball>,
            cands: &[Vec<(Ball, f64, f64)>],
            best: &mut Option<(f64, f64, Vec<Ball>, Vec<Vec<usize>>)>,
            nodes: &mut usize,
            node_cap: usize,
            evaluate: &dyn Fn(&[Ball]) -> Option<(f64, f64, Vec<Vec<usize>>)>,
        ) {
            if *nodes >= node_cap {
                return;
            }
            *nodes += 1;
            if level == cands.len() {
                if let Some((hi, lo, parts)) = evaluate(chosen) {
                    if best.as_ref().map_or(true, |(bh, _, _, _)| hi < *bh) {
                        *best = Some((hi, lo, chosen.clone(), parts));
                    }
                }
                return;
            }
            for (ball, _, hi) in &cands[level] {
                if let Some((bh, _, _, _)) = best {
                    if *hi >= *bh {
                        break; // candidates are sorted; nothing better remains
                    }
                }
                chosen.push(*ball);
                dfs(level + 1, chosen, cands, best, nodes, node_cap, evaluate);
                chosen.pop();
            }
        }
        let mut nodes = 0usize;
        dfs(0, &mut Vec::new(), &cands, &mut best, &mut nodes, budget.node_cap, &evaluate);
    } else {
        // greedy: best candidate per index, then bump conflicting indices
        let mut pick = vec![0usize; idx_count];
        'rounds: for _ in 0..budget.repair_rounds {
            let balls: Vec<Ball> = pick
                .iter()
                .enumerate()
                .map(|(i, &c)| cands[i].get(c).map(|(b, _, _)| *b))
                .collect::<Option<Vec<_>>>()
                .unwrap_or_default();
            if balls.len() == idx_count {
                if let Some((hi, lo, parts)) = evaluate(&balls) {
                    if best.as_ref().map_or(true, |(bh, _, _, _)| hi < *bh) {
                        best = Some((hi, lo, balls, parts));
                    }
                    break 'rounds;
                }
            }
            // bump the index whose next candidate costs least
            let mut bump: Option<(usize, f64)> = None;
            for i in 0..idx_count {
                if let Some((_, _, hi)) = cands[i].get(pick[i] + 1) {
                    if bump.map_or(true, |(_, h)| *hi < h) {
                        bump = Some((i, *hi));
                    }
                }
            }
            match bump {
                Some((i, _)) => pick[i] += 1,
                None => break 'rounds,
            }
        }
    }

    match best {
        Some((hi, lo, assignment, parts)) => Ok(LkOutcome {
            value: hi,
            value_low: lo,
            base_sup,
            parts_used: parts.len(),
            family: ReplacementFamily { assignment, parts },
        }),
        None => Err(Error::Infeasible(
            "no admissible replacement family found (base packing not reusable)".into(),
        )),
    }
}

/// The partner-swap witness family on the selective model.
///
/// For each ball, take the largest selected interval containing its center
/// and contained in the ball. Type-1 indices keep their ball; every other
/// index is replaced by the ball hugging its related type-1 interval
/// (center at the partner midpoint, radius half the interval length). The
/// two groups each stay packings thanks to the separation condition, so the
/// family satisfies the two-part property, and every ratio is controlled by
/// a type-1 window exponent.
pub fn partner_replacement_family(
    model: &MeasureModel,
    base: &CenteredPacking,
    mass_depth: usize,
) -> Result<(ReplacementFamily, f64)> {
    let fam = match model {
        MeasureModel::Selective(f) => f,
        _ => return Err(Error::Domain("partner witness needs the selective model".into())),
    };
    let bands = *fam.bands();
    let mut keep = Vec::new();
    let mut swapped = Vec::new();
    let mut assignment = vec![Ball::new(0.0, 0.0); base.balls.len()];
    let mut value = f64::NEG_INFINITY;
    for (i, ball) in base.balls.iter().enumerate() {
        let sel = largest_selected_inside(fam, ball)?.ok_or_else(|| {
            Error::Domain(format!(
                "ball at {} contains no selected interval around its center",
                ball.center
            ))
        })?;
        let diam_log2 = (2.0 * ball.radius).log2();
        if type_of(&sel, &bands) == IntervalType::Type1 {
            assignment[i] = *ball;
            keep.push(i);
        } else {
            let partner = fam.partner(&sel)?;
            let order = partner.order();
            if order + 1 > crate::measure::BALL_DEPTH_CAP {
                return Err(Error::DepthExceeded(format!(
                    "partner interval order {order} too deep for exact ball coordinates"
                )));
            }
            let iv = interval_of(&partner);
            let b = Ball::new(iv.midpoint_f64(), iv.length_f64() / 2.0);
            assignment[i] = b;
            swapped.push(i);
        }
        let (_, hi) = ratio_interval(model, &assignment[i], diam_log2, mass_depth)?;
        value = value.max(hi);
    }
    let mut parts = Vec::new();
    if !keep.is_empty() {
        parts.push(keep);
    }
    if !swapped.is_empty() {
        parts.push(swapped);
    }
    Ok((ReplacementFamily { assignment, parts }, value))
}

/// The largest (lowest-order) selected interval containing the ball center
/// and contained in the closed ball, scanning generations downward.
fn largest_selected_inside(
    fam: &crate::construction::SelectedFamily,
    ball: &Ball,
) -> Result<Option<DyadicWord>> {
    let left = BigRational::from_float(ball.center).unwrap()
        - BigRational::from_float(ball.radius).unwrap();
    let right = BigRational::from_float(ball.center).unwrap()
        + BigRational::from_float(ball.radius).unwrap();
    for k in 0..=fam.max_generation() {
        let order = fam.generation_order(k) as usize;
        if (-(order as f64)).exp2() > 2.0 * ball.radius {
            continue; // interval longer than the ball, cannot fit
        }
        let w = locate(ball.center, order)?;
        if !fam.is_selected(&w)? {
            continue;
        }
        let iv = interval_of(&w);
        let a = BigRational::new(iv.numerator().clone().into(), BigRational::one().denom() << order);
        let b = &a + BigRational::new(1.into(), BigRational::one().denom() << order);
        if a >= left && b <= right {
            return Ok(Some(w));
        }
    }
    Ok(None)
}

/// One sampled-M instance inside a T estimate.
#[derive(Clone, Debug, Serialize)]
pub struct TInstance {
    pub size: usize,
    pub value: f64,
    pub base_sup: f64,
    pub parts_used: usize,
}

/// Finite-scale T estimate at one (eta, p).
#[derive(Clone, Debug, Serialize)]
pub struct TEstimate {
    pub alpha: f64,
    pub eta: f64,
    pub p: u64,
    pub depth: usize,
    /// Sup over sampled M of the replacement-family estimates; None when
    /// the level-set sample is empty (undefined).
    pub value: Option<f64>,
    pub instances: Vec<TInstance>,
    /// Partner-swap witness value on the full sample, selective model only.
    pub witness_value: Option<f64>,
    /// `value <= eta + 0.05` whenever defined.
    pub ceiling_ok: bool,
    pub members: usize,
}

/// Candidate pool for level-set sampling: selected-interval midpoints at the
/// deepest generation of order <= depth for the selective model, an evenly
/// spaced dyadic midpoint grid otherwise.
pub fn default_candidates(model: &MeasureModel, depth: usize, max_points: usize) -> Result<Vec<f64>> {
    match model {
        MeasureModel::Selective(fam) => {
            let mut k = 0usize;
            while fam.generation_order(k + 1) as usize + 1 <= depth
                && fam.generation(k + 1).map(|g| g.len()).unwrap_or(usize::MAX) <= max_points
            {
                k += 1;
            }
            let gen = fam.generation(k)?;
            Ok(gen.iter().map(|n| interval_of(&n.word).midpoint_f64()).collect())
        }
        _ => {
            let order = 4usize.min(depth.saturating_sub(2)).max(1);
            let count = (1usize << order).min(max_points);
            Ok((0..count)
                .map(|i| {
                    let iv = interval_of(&DyadicWord::from_numerator(i as u64, order));
                    iv.midpoint_f64()
                })
                .collect())
        }
    }
}

/// Base packing hugging each member point at the given radius.
fn hugging_packing(members: &[f64], radius: f64) -> Result<CenteredPacking> {
    let balls: Vec<Ball> = members.iter().map(|&x| Ball::new(x, radius)).collect();
    CenteredPacking::new(balls, radius, |x| members.contains(&x))
}

/// A packing of the member points at the largest dyadic radius that keeps
/// the balls disjoint and the scale below `1/p`.
pub fn member_packing(members: &[f64], p: u64) -> Result<CenteredPacking> {
    if members.is_empty() {
        return Err(Error::Domain("cannot pack an empty member set".into()));
    }
    let mut pts = members.to_vec();
    pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut min_gap = f64::INFINITY;
    for w in pts.windows(2) {
        min_gap = min_gap.min(w[1] - w[0]);
    }
    let mut r = 0.25f64;
    while 2.0 * r >= min_gap || 2.0 * r >= 1.0 / p as f64 {
        r /= 2.0;
        if r < 1e-300 {
            return Err(Error::Domain("duplicate member points cannot be packed".into()));
        }
    }
    hugging_packing(members, r)
}

/// Estimate the replacement-exponent score at one (eta, p): sample M from
/// the finite-depth level set, optimize replacement families with one and
/// two parts (the partner witness seeded on the selective model), and
/// report the sup over instances.
pub fn t_estimate(
    model: &MeasureModel,
    alpha: f64,
    eta: f64,
    p: u64,
    depth: usize,
    budget: &SearchBudget,
) -> Result<TEstimate> {
    let candidates = default_candidates(model, depth, 16)?;
    let sample = level_set_sample(model, alpha, eta, p, depth, 0.2, &candidates)?;
    if sample.members.is_empty() {
        return Ok(TEstimate {
            alpha,
            eta,
            p,
            depth,
            value: None,
            instances: Vec::new(),
            witness_value: None,
            ceiling_ok: true,
            members: 0,
        });
    }
    // the ball radius: half the spacing floor of the member grid, dyadic
    let radius = {
        let mut min_gap = f64::INFINITY;
        let mut pts = sample.members.clone();
        pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for w in pts.windows(2) {
            min_gap = min_gap.min(w[1] - w[0]);
        }
        let mut r = 1.0f64;
        while 2.0 * r >= min_gap || 2.0 * r >= 1.0 / p as f64 {
            r /= 2.0;
        }
        r
    };
    // instances: the full sample plus deterministic halves
    let mut instance_sets: Vec<Vec<f64>> = vec![sample.members.clone()];
    if sample.members.len() >= 4 {
        instance_sets.push(sample.members.iter().cloned().step_by(2).collect());
        instance_sets.push(sample.members.iter().cloned().skip(1).step_by(2).collect());
    }
    let mut instances = Vec::new();
    let mut value = f64::NEG_INFINITY;
    let mut witness_value = None;
    for (idx, m) in instance_sets.iter().enumerate() {
        let base = hugging_packing(m, radius)?;
        let mut seeds = Vec::new();
        if matches!(model, MeasureModel::Selective(_)) {
            if let Ok((fam, wv)) = partner_replacement_family(model, &base, budget.mass_depth) {
                if idx == 0 {
                    witness_value = Some(wv);
                }
                seeds.push(fam);
            }
        }
        let mut inst_best: Option<LkOutcome> = None;
        for k in [1usize, 2] {
            let out = lk_estimate(model, m, &base, k, URule::Identity, budget, &seeds)?;
            if inst_best.as_ref().map_or(true, |b| out.value < b.value) {
                inst_best = Some(out);
            }
        }
        let out = inst_best.expect("at least one k evaluated");
        value = value.max(out.value);
        instances.push(TInstance {
            size: m.len(),
            value: out.value,
            base_sup: out.base_sup,
            parts_used: out.parts_used,
        });
    }
    Ok(TEstimate {
        alpha,
        eta,
        p,
        depth,
        value: Some(value),
        instances,
        witness_value,
        ceiling_ok: value <= eta + 0.05,
        members: sample.members.len(),
    })
}

/// Everything the bound comparison reports.
#[derive(Clone, Debug, Serialize)]
pub struct BoundComparison {
    pub alpha: f64,
    pub olsen: OlsenOutcome,
    /// inf over q >= 1 of alpha q + B(q).
    pub tail_inf: LegendreOutcome,
    pub t_hat: Option<f64>,
    pub t_over_alpha: Option<f64>,
    /// `(t_hat / alpha) * tail_inf` when both sides are usable.
    pub new_bound: Option<f64>,
    /// Strictly better than the q >= 0 bound?
    pub improvement: Option<bool>,
    /// Do the q >= 0 and q >= 1 infima agree on the grid?
    pub infima_agree: Option<bool>,
    pub t_detail: TEstimate,
}

/// Parameters for the T estimate inside a bound comparison.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TParams {
    /// eta = alpha + eta_margin.
    pub eta_margin: f64,
    pub p: u64,
    pub depth: usize,
    pub budget: SearchBudget,
}

impl Default for TParams {
    fn default() -> Self {
        TParams { eta_margin: 0.05, p: 256, depth: 30, budget: SearchBudget::default() }
    }
}

/// Compare the q >= 0 bound against the replacement-scaled q >= 1 bound.
pub fn compare_bounds(
    model: &MeasureModel,
    alpha: f64,
    curve: &ScalingCurve,
    t_params: &TParams,
) -> Result<BoundComparison> {
    if !(alpha > 0.0) {
        return Err(Error::Domain("alpha must be positive".into()));
    }
    let olsen = olsen_bound(curve, alpha)?;
    let tail_inf = legendre_inf(curve, alpha, 1.0)?;
    let t = t_estimate(model, alpha, alpha + t_params.eta_margin, t_params.p, t_params.depth, &t_params.budget)?;
    let t_hat = t.value;
    let t_over_alpha = t_hat.map(|v| v / alpha);
    let olsen_value = match &olsen {
        OlsenOutcome::Applicable { outcome } if outcome.is_attained() => Some(outcome.grid_value()),
        _ => None,
    };
    let tail_value = tail_inf.is_attained().then(|| tail_inf.grid_value());
    let new_bound = match (t_over_alpha, tail_value) {
        (Some(f), Some(v)) => Some(f * v),
        _ => None,
    };
    let improvement = match (new_bound, olsen_value) {
        (Some(n), Some(o)) => Some(n < o),
        _ => None,
    };
    let infima_agree = match (olsen_value, tail_value) {
        (Some(o), Some(t)) => Some((o - t).abs() <= 1e-12),
        _ => None,
    };
    Ok(BoundComparison {
        alpha,
        olsen,
        tail_inf,
        t_hat,
        t_over_alpha,
        new_bound,
        improvement,
        infima_agree,
        t_detail: t,
    })
}
