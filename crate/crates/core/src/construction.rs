//! The selected-interval family: a deterministic, two-lineage tree of dyadic
//! intervals whose digit-0 frequencies are steered through two disjoint type
//! windows by a growth schedule.
//!
//! Generation `G_k` lives at order `n0 + 6k`. The schedule entries
//! `n_0 < n_1 < n_2 < ...` cut the orders into repeating phases:
//!
//! * `[n_{3i}, n_{3i+1})` — split: every interval selects two same-type
//!   children six bits deeper;
//! * `[n_{3i+1}, n_{3i+2})` — the lineage that was type 2 at `n_{3i+1}`
//!   drifts into the type-1 window, arriving exactly at `n_{3i+2}`; the
//!   type-1 lineage keeps its type;
//! * `[n_{3i+2}, n_{3i+3})` — the lineage that was type 1 at `n_{3i+1}`
//!   drifts into the type-2 window, arriving at `n_{3i+3}`; the other
//!   lineage keeps type 1.
//!
//! Drifting intervals satisfy the global window `beta1 < N0/n < gamma2` at
//! every step. Same-generation intervals of order `n` keep a gap larger
//! than `2^-(n-1)` (numerators at least 4 apart) and children stay more
//! than `2^-n` away from their father's endpoints (child offsets in
//! `[2, 61]`), which pins the per-step zero increment to `[1, 5]`.
//!
//! All selection is deterministic: child offsets are scanned in increasing
//! numerator order and the first admissible candidate (pair) wins.

use crate::dyadic::{type_of, DyadicWord, IntervalType, TypeBands};
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::sync::{Arc, RwLock};

/// Offsets a child may occupy inside its father: distance to both father
/// endpoints stays above one child-interval length.
const OFFSET_MIN: u64 = 2;
const OFFSET_MAX: u64 = 61;
/// Minimal numerator gap between same-generation intervals.
const SIBLING_GAP: u64 = 4;

/// Growth rule for the schedule entries.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Growth {
    /// `n_{3i+1} = 2^{n_{3i}} * n0`, then two doublings. Entries explode past
    /// any practical order almost immediately; useful for schedule arithmetic
    /// and lazy single-path probes only.
    Tower,
    /// `n_{p+1} = factor * n_p`.
    Geometric { factor: u64 },
    /// `n_{p+1} = n_p + step`.
    Affine { step: u64 },
}

/// Deterministic tie-break rule for candidate selection.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SelectionPolicy {
    /// Scan children in increasing numerator order, take the first
    /// admissible candidate (pair).
    #[default]
    LexSmallest,
}

fn default_order_cap() -> u64 {
    4096
}

/// Parameters of the construction and of the measure built on top of it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstructionParams {
    pub beta1: f64,
    pub gamma1: f64,
    pub beta2: f64,
    pub gamma2: f64,
    pub p0: f64,
    pub p1: f64,
    pub n0: u64,
    pub growth: Growth,
    #[serde(default)]
    pub selection_policy: SelectionPolicy,
    #[serde(default = "default_order_cap")]
    pub order_cap: u64,
}

impl ConstructionParams {
    /// The frozen desk preset: feasible from order 12 on a doubling
    /// schedule, with `g(gamma2) < 1` by a 0.0055 margin.
    pub fn desk_preset() -> Self {
        ConstructionParams {
            beta1: 0.30,
            gamma1: 0.36,
            beta2: 0.41,
            gamma2: 0.448,
            p0: 0.42,
            p1: 0.58,
            n0: 12,
            growth: Growth::Geometric { factor: 2 },
            selection_policy: SelectionPolicy::LexSmallest,
            order_cap: 4096,
        }
    }

    pub fn bands(&self) -> TypeBands {
        TypeBands {
            beta1: self.beta1,
            gamma1: self.gamma1,
            beta2: self.beta2,
            gamma2: self.gamma2,
        }
    }

    /// Hard invariants; the first violated condition becomes the error.
    pub fn basic_checks(&self) -> Result<()> {
        let ord = [self.beta1, self.gamma1, self.beta2, self.gamma2];
        if !(0.0 < ord[0] && ord[0] < ord[1] && ord[1] < ord[2] && ord[2] < ord[3] && ord[3] < 0.5)
        {
            return Err(Error::Domain(
                "window ordering 0 < beta1 < gamma1 < beta2 < gamma2 < 1/2 violated".into(),
            ));
        }
        if !(self.p0 > 0.0 && self.p1 > 0.0 && (self.p0 + self.p1 - 1.0).abs() <= 1e-12) {
            return Err(Error::Domain("p0, p1 must be positive with p0 + p1 = 1".into()));
        }
        if frequency_exponent(self.gamma2, self.p0, self.p1) >= 1.0 {
            // equal probabilities land here too: g is constantly 1
            return Err(Error::Domain(format!(
                "g(gamma2) < 1 required, got g({}) = {}",
                self.gamma2,
                frequency_exponent(self.gamma2, self.p0, self.p1)
            )));
        }
        if self.p0 >= self.p1 {
            return Err(Error::Domain(
                "p0 < p1 required (the frequency-exponent map must be strictly increasing)".into(),
            ));
        }
        if self.n0 < 6 || self.n0 % 6 != 0 {
            return Err(Error::Domain("n0 must be a positive multiple of 6".into()));
        }
        if self.n0 > self.order_cap {
            return Err(Error::Domain("n0 exceeds the order cap".into()));
        }
        match self.growth {
            Growth::Tower => {}
            Growth::Geometric { factor } => {
                if factor < 2 {
                    return Err(Error::Domain("geometric growth factor must be >= 2".into()));
                }
            }
            Growth::Affine { step } => {
                if step < 6 || step % 6 != 0 {
                    return Err(Error::Domain(
                        "affine growth step must be a positive multiple of 6".into(),
                    ));
                }
            }
        }
        Ok(())
    }
}

/// The exponent map linking digit-0 frequency to local scaling exponents:
/// `g(x) = -(x ln(p0/p1) + ln p1) / ln 2`. Strictly increasing when p0 < p1;
/// selected intervals satisfy `mass = length^{g(N0/n)}`.
pub fn frequency_exponent(x: f64, p0: f64, p1: f64) -> f64 {
    -(x * (p0 / p1).ln() + p1.ln()) / std::f64::consts::LN_2
}

/// Increasing schedule orders, all congruent to n0 mod 6.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Schedule {
    pub entries: Vec<u64>,
}

/// Entry p+1 from the entries so far; `None` on u64 overflow.
fn next_entry(growth: Growth, n0: u64, entries: &[u64]) -> Option<u64> {
    let p = entries.len() - 1;
    let last = entries[p];
    match growth {
        Growth::Tower => {
            if p % 3 == 0 {
                // n_{3i+1} = 2^{n_{3i}} * n0
                if last >= 63 {
                    return None;
                }
                1u64.checked_shl(last as u32)?.checked_mul(n0)
            } else {
                last.checked_mul(2)
            }
        }
        Growth::Geometric { factor } => last.checked_mul(factor),
        Growth::Affine { step } => last.checked_add(step),
    }
}

/// First `count` schedule entries. Entries past the order cap are refused
/// with a capped-schedule error carrying the last representable entry.
pub fn schedule(params: &ConstructionParams, count: usize) -> Result<Schedule> {
    if count == 0 {
        return Err(Error::Domain("schedule: count must be >= 1".into()));
    }
    params.basic_checks()?;
    let mut entries = vec![params.n0];
    while entries.len() < count {
        match next_entry(params.growth, params.n0, &entries) {
            Some(v) if v <= params.order_cap => entries.push(v),
            _ => {
                return Err(Error::CappedSchedule {
                    last: *entries.last().unwrap(),
                    requested: entries.len(),
                })
            }
        }
    }
    Ok(Schedule { entries })
}

/// Phase of the construction step taken from a father of order `m`.
#[derive(Clone, Debug, PartialEq, Eq)]
enum Phase {
    /// Two same-type children per interval.
    Split,
    /// One child per interval; the lineage whose ancestor at `anchor` had
    /// `migrating_anchor_type` drifts toward `target_type`, arriving at
    /// `target_order`; the other lineage keeps its current type.
    Drift {
        anchor: u64,
        migrating_anchor_type: IntervalType,
        target_order: u64,
        target_type: IntervalType,
    },
}

/// Locate `m` inside the schedule windows. Entries are generated on demand;
/// a u64 overflow means the next boundary is unreachable, which leaves `m`
/// in the current window.
fn phase_of(m: u64, params: &ConstructionParams) -> Phase {
    debug_assert!(m >= params.n0);
    let mut entries = vec![params.n0];
    loop {
        let p = entries.len() - 1;
        let next = next_entry(params.growth, params.n0, &entries);
        let in_window = match next {
            Some(v) => m < v,
            None => true,
        };
        if in_window {
            return match p % 3 {
                0 => Phase::Split,
                1 => Phase::Drift {
                    anchor: entries[p],
                    migrating_anchor_type: IntervalType::Type2,
                    target_order: next.expect("drift window has a finite right end"),
                    target_type: IntervalType::Type1,
                },
                _ => Phase::Drift {
                    anchor: entries[p - 1],
                    migrating_anchor_type: IntervalType::Type1,
                    target_order: next.expect("drift window has a finite right end"),
                    target_type: IntervalType::Type2,
                },
            };
        }
        entries.push(next.unwrap());
    }
}

/// Smallest/largest integers strictly inside the window at `order`, if any.
fn window_int_range(bands: &TypeBands, t: IntervalType, order: u64) -> Option<(u64, u64)> {
    let (lo_f, hi_f) = bands.window(t);
    let mut lo = ((lo_f * order as f64).floor() as i64 - 1).max(0) as u64;
    while lo <= order && !bands.in_window(t, lo as usize, order as usize) {
        lo += 1;
        if lo as f64 > hi_f * order as f64 + 2.0 {
            return None;
        }
    }
    if lo > order {
        return None;
    }
    let mut hi = ((hi_f * order as f64).ceil() as u64 + 1).min(order);
    while hi > lo && !bands.in_window(t, hi as usize, order as usize) {
        hi -= 1;
    }
    bands.in_window(t, hi as usize, order as usize).then_some((lo, hi))
}

/// Integer range strictly inside the global window at `order`.
fn global_int_range(bands: &TypeBands, order: u64) -> Option<(u64, u64)> {
    let wide = TypeBands {
        beta1: bands.beta1,
        gamma1: bands.gamma2,
        beta2: bands.beta2,
        gamma2: bands.gamma2,
    };
    window_int_range(&wide, IntervalType::Type1, order)
}

/// Zero-count corridor for a drift: entry `j` is the inclusive range of zero
/// counts at order `start + 6j` from which the target window at
/// `target_order` is reachable with one to five new zeros per step, staying
/// inside the global window at every intermediate order.
fn drift_corridor(
    bands: &TypeBands,
    start: u64,
    target_order: u64,
    target_type: IntervalType,
) -> Vec<Option<(u64, u64)>> {
    debug_assert!(target_order >= start && (target_order - start) % 6 == 0);
    let steps = ((target_order - start) / 6) as usize;
    let mut ranges = vec![None; steps + 1];
    ranges[steps] = window_int_range(bands, target_type, target_order);
    for j in (0..steps).rev() {
        let order = start + 6 * j as u64;
        ranges[j] = match ranges[j + 1] {
            None => None,
            Some((nlo, nhi)) => {
                // one to five zeros are added per step
                let lo = nlo.saturating_sub(5);
                let hi = nhi.saturating_sub(1);
                if lo > hi {
                    None
                } else if j == 0 {
                    Some((lo, hi))
                } else {
                    global_int_range(bands, order).and_then(|(glo, ghi)| {
                        let l = lo.max(glo);
                        let h = hi.min(ghi);
                        (l <= h).then_some((l, h))
                    })
                }
            }
        };
    }
    ranges
}

/// One member of a built generation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SelectedNode {
    pub word: DyadicWord,
    /// Index of the seed this node descends from (0 or 1).
    pub lineage: usize,
    /// Index of the father within the previous generation.
    pub father: Option<usize>,
    /// Index of the related node within the same generation.
    pub partner: usize,
}

/// The two order-n0 seeds: the lexicographically smallest admissible pair,
/// type 1 first.
pub fn seed_generation(params: &ConstructionParams) -> Result<[DyadicWord; 2]> {
    params.basic_checks()?;
    let bands = params.bands();
    let n0 = params.n0;
    let z1 = window_int_range(&bands, IntervalType::Type1, n0)
        .ok_or_else(|| Error::Infeasible(format!("no type-1 zero count exists at order {n0}")))?
        .1;
    let z2 = window_int_range(&bands, IntervalType::Type2, n0)
        .ok_or_else(|| Error::Infeasible(format!("no type-2 zero count exists at order {n0}")))?
        .1;
    // The smallest numerator of a fixed type puts all zeros first with as
    // many zeros as the window allows; separation then holds automatically
    // because the two numerators differ by a large power of two.
    let zeros_first = |z: u64| {
        let mut bits = vec![0u8; z as usize];
        bits.extend(std::iter::repeat(1u8).take((n0 - z) as usize));
        DyadicWord::from_bits(&bits)
    };
    let w1 = zeros_first(z1);
    let w2 = zeros_first(z2);
    let gap_ok = {
        let a = w1.numerator();
        let b = w2.numerator();
        let diff = if a > b { &a - &b } else { &b - &a };
        diff >= SIBLING_GAP.into()
    };
    if !gap_ok {
        return Err(Error::Infeasible(format!(
            "seed intervals at order {n0} violate the separation gap"
        )));
    }
    Ok([w1, w2])
}

/// The lazily built family of selected intervals.
///
/// Children of a father are memoized; concurrent readers may recompute the
/// same entry but always observe identical results.
pub struct SelectedFamily {
    params: ConstructionParams,
    bands: TypeBands,
    seeds: [DyadicWord; 2],
    sons_memo: RwLock<HashMap<DyadicWord, Arc<Vec<DyadicWord>>>>,
}

impl SelectedFamily {
    pub fn new(params: ConstructionParams) -> Result<Self> {
        params.basic_checks()?;
        let seeds = seed_generation(&params)?;
        let bands = params.bands();
        Ok(SelectedFamily { params, bands, seeds, sons_memo: RwLock::new(HashMap::new()) })
    }

    pub fn params(&self) -> &ConstructionParams {
        &self.params
    }

    pub fn bands(&self) -> &TypeBands {
        &self.bands
    }

    pub fn seeds(&self) -> &[DyadicWord; 2] {
        &self.seeds
    }

    /// Generation order `n0 + 6k`.
    pub fn generation_order(&self, k: usize) -> u64 {
        self.params.n0 + 6 * k as u64
    }

    /// Deepest generation index whose order fits under the cap.
    pub fn max_generation(&self) -> usize {
        ((self.params.order_cap - self.params.n0) / 6) as usize
    }

    /// The selected children of a selected father, in increasing numerator
    /// order. The father is assumed to be a member of its generation.
    pub fn sons(&self, father: &DyadicWord) -> Result<Arc<Vec<DyadicWord>>> {
        if let Some(hit) = self.sons_memo.read().unwrap().get(father) {
            return Ok(hit.clone());
        }
        let computed = Arc::new(self.compute_sons(father)?);
        let mut memo = self.sons_memo.write().unwrap();
        Ok(memo.entry(father.clone()).or_insert(computed).clone())
    }

    fn compute_sons(&self, father: &DyadicWord) -> Result<Vec<DyadicWord>> {
        let m = father.order() as u64;
        debug_assert!(m >= self.params.n0 && (m - self.params.n0) % 6 == 0);
        if m + 6 > self.params.order_cap {
            return Err(Error::DepthExceeded(format!(
                "sons of an order-{m} father exceed the order cap {}",
                self.params.order_cap
            )));
        }
        let child_order = m + 6;
        let candidates: Vec<DyadicWord> =
            (OFFSET_MIN..=OFFSET_MAX).map(|o| father.extended(o, 6)).collect();
        match phase_of(m, &self.params) {
            Phase::Split => {
                let t = type_of(father, &self.bands);
                if t == IntervalType::Untyped {
                    return Err(Error::Infeasible(format!(
                        "split phase at order {m}: father {father} is untyped"
                    )));
                }
                let typed: Vec<&DyadicWord> =
                    candidates.iter().filter(|c| type_of(c, &self.bands) == t).collect();
                for (i, a) in typed.iter().enumerate() {
                    for b in typed.iter().skip(i + 1) {
                        if b.offset_in_father() - a.offset_in_father() >= SIBLING_GAP {
                            return Ok(vec![(*a).clone(), (*b).clone()]);
                        }
                    }
                }
                Err(Error::Infeasible(format!(
                    "split phase at order {m}: father {father} has no separated same-type child pair"
                )))
            }
            Phase::Drift { anchor, migrating_anchor_type, target_order, target_type } => {
                let ancestor = father.prefix(anchor as usize);
                let a_type = type_of(&ancestor, &self.bands);
                let chosen = if a_type == migrating_anchor_type {
                    let corridor =
                        drift_corridor(&self.bands, child_order, target_order, target_type);
                    let range = corridor[0];
                    candidates.iter().find(|c| {
                        let z = c.zero_count();
                        self.bands.in_global_window(z, child_order as usize)
                            && range.map_or(false, |(lo, hi)| lo <= z as u64 && z as u64 <= hi)
                    })
                } else {
                    let t = type_of(father, &self.bands);
                    if t == IntervalType::Untyped {
                        return Err(Error::Infeasible(format!(
                            "drift phase at order {m}: resident father {father} is untyped"
                        )));
                    }
                    candidates.iter().find(|c| type_of(c, &self.bands) == t)
                };
                match chosen {
                    Some(c) => Ok(vec![c.clone()]),
                    None => Err(Error::Infeasible(format!(
                        "drift phase at order {m}: father {father} has no admissible child \
                         (target {target_type} at order {target_order})"
                    ))),
                }
            }
        }
    }

    /// Build generation `k` with lineage and pairing indices.
    pub fn generation(&self, k: usize) -> Result<Vec<SelectedNode>> {
        let mut gen = vec![
            SelectedNode { word: self.seeds[0].clone(), lineage: 0, father: None, partner: 1 },
            SelectedNode { word: self.seeds[1].clone(), lineage: 1, father: None, partner: 0 },
        ];
        for _ in 0..k {
            let mut next = Vec::with_capacity(gen.len() * 2);
            let mut sons_per_father = None;
            for (i, node) in gen.iter().enumerate() {
                let sons = self.sons(&node.word)?;
                match sons_per_father {
                    None => sons_per_father = Some(sons.len()),
                    Some(s) if s == sons.len() => {}
                    Some(s) => {
                        return Err(Error::Infeasible(format!(
                            "uneven sons per father: {} vs {}",
                            s,
                            sons.len()
                        )))
                    }
                }
                let s = sons.len();
                for (j, son) in sons.iter().enumerate() {
                    next.push(SelectedNode {
                        word: son.clone(),
                        lineage: node.lineage,
                        father: Some(i),
                        partner: node.partner * s + j,
                    });
                }
            }
            gen = next;
        }
        Ok(gen)
    }

    /// Eagerly build generations 0..=k, surfacing any infeasibility.
    pub fn build_to(&self, k: usize) -> Result<()> {
        self.generation(k).map(|_| ())
    }

    /// Membership of a word in its generation.
    pub fn is_selected(&self, word: &DyadicWord) -> Result<bool> {
        let n = word.order() as u64;
        if n < self.params.n0 || (n - self.params.n0) % 6 != 0 {
            return Ok(false);
        }
        if n > self.params.order_cap {
            return Err(Error::DepthExceeded(format!(
                "selection query at order {n} exceeds the order cap"
            )));
        }
        if n > self.params.n0 && !self.bands.in_global_window(word.zero_count(), word.order()) {
            return Ok(false);
        }
        let k = ((n - self.params.n0) / 6) as usize;
        let mut cur = word.prefix(self.params.n0 as usize);
        if cur != self.seeds[0] && cur != self.seeds[1] {
            return Ok(false);
        }
        for level in 1..=k {
            let next = word.prefix((self.params.n0 + 6 * level as u64) as usize);
            if !self.sons(&cur)?.contains(&next) {
                return Ok(false);
            }
            cur = next;
        }
        Ok(true)
    }

    /// Whether the word's interval contains a selected interval, i.e. the
    /// word is an ancestor-or-equal of some selected word. Computed along
    /// the ancestor chain only (memoized), never by global enumeration.
    pub fn contains_selected(&self, word: &DyadicWord) -> Result<bool> {
        let j = word.order() as u64;
        if j > self.params.order_cap {
            return Err(Error::DepthExceeded(format!(
                "containment query at order {j} exceeds the order cap"
            )));
        }
        if j <= self.params.n0 {
            return Ok(self.seeds.iter().any(|s| word.is_prefix_of(s)));
        }
        let k = (j - self.params.n0).div_ceil(6);
        let mut cur = word.prefix(self.params.n0 as usize);
        if cur != self.seeds[0] && cur != self.seeds[1] {
            return Ok(false);
        }
        for level in 1..=k {
            let order_l = self.params.n0 + 6 * level;
            let sons = self.sons(&cur)?;
            if order_l < j {
                let next = word.prefix(order_l as usize);
                if !sons.contains(&next) {
                    return Ok(false);
                }
                cur = next;
            } else {
                return Ok(sons.iter().any(|s| word.is_prefix_of(s)));
            }
        }
        unreachable!("loop returns at the crossing level");
    }

    /// The unique same-generation word related to a selected word: the one
    /// reached by the same child-index path from the other seed.
    pub fn partner(&self, word: &DyadicWord) -> Result<DyadicWord> {
        if !self.is_selected(word)? {
            return Err(Error::Domain(format!("partner: {word} is not a selected word")));
        }
        let k = ((word.order() as u64 - self.params.n0) / 6) as usize;
        let seed_idx = if word.prefix(self.params.n0 as usize) == self.seeds[0] { 0 } else { 1 };
        let mut cur = self.seeds[seed_idx].clone();
        let mut partner = self.seeds[1 - seed_idx].clone();
        for level in 1..=k {
            let next = word.prefix((self.params.n0 + 6 * level as u64) as usize);
            let sons = self.sons(&cur)?;
            let j = sons
                .iter()
                .position(|s| *s == next)
                .expect("selected word's prefix is a son of its father");
            let partner_sons = self.sons(&partner)?;
            if partner_sons.len() != sons.len() {
                return Err(Error::Infeasible("uneven sons across related fathers".into()));
            }
            partner = partner_sons[j].clone();
            cur = next;
        }
        Ok(partner)
    }
}

impl std::fmt::Debug for SelectedFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SelectedFamily")
            .field("params", &self.params)
            .field("seeds", &self.seeds)
            .finish()
    }
}

trait OffsetInFather {
    fn offset_in_father(&self) -> u64;
}

impl OffsetInFather for DyadicWord {
    /// Numerator of the last six bits: the child's offset inside its father.
    fn offset_in_father(&self) -> u64 {
        let bits = self.bits();
        bits[bits.len() - 6..].iter().fold(0u64, |acc, &b| (acc << 1) | b as u64)
    }
}

/// One validation check with its outcome.
#[derive(Clone, Debug, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

/// Feasibility report: every check that ran, in order, plus advisory notes.
#[derive(Clone, Debug, Serialize)]
pub struct FeasibilityReport {
    pub pass: bool,
    pub checks: Vec<CheckResult>,
    pub notes: Vec<String>,
}

impl FeasibilityReport {
    pub fn first_failure(&self) -> Option<&CheckResult> {
        self.checks.iter().find(|c| !c.pass)
    }
}

/// Run every feasibility check the construction relies on and report the
/// outcomes. Failures are carried in the report, never raised.
pub fn validate(params: &ConstructionParams) -> FeasibilityReport {
    let mut checks = Vec::new();
    let mut notes = Vec::new();
    fn record(
        checks: &mut Vec<CheckResult>,
        name: &str,
        result: std::result::Result<String, String>,
    ) -> bool {
        let (pass, detail) = match result {
            Ok(d) => (true, d),
            Err(d) => (false, d),
        };
        checks.push(CheckResult { name: name.into(), pass, detail });
        pass
    }

    let basics_ok = record(
        &mut checks,
        "parameter-invariants",
        params
            .basic_checks()
            .map(|_| "ordering, probabilities, g(gamma2) < 1, base order".into())
            .map_err(|e| e.to_string()),
    );

    if params.beta1 <= 1.0 / 3.0 {
        notes.push(format!(
            "beta1 = {} is at or below 1/3; the asymptotic counting regime assumes larger \
             beta1, desk-scale feasibility is checked directly instead",
            params.beta1
        ));
    }

    if !basics_ok {
        return FeasibilityReport { pass: false, checks, notes };
    }

    let seeds = seed_generation(params);
    let seeds_ok = record(
        &mut checks,
        "seed-pair",
        seeds
            .as_ref()
            .map(|s| format!("seeds {} (type1) and {} (type2)", s[0], s[1]))
            .map_err(|e| e.to_string()),
    );
    if !seeds_ok {
        return FeasibilityReport { pass: false, checks, notes };
    }

    let family = SelectedFamily::new(params.clone()).expect("checked params construct");
    record(
        &mut checks,
        "first-split",
        (|| {
            for seed in family.seeds() {
                let sons = family.sons(seed).map_err(|e| e.to_string())?;
                if sons.len() != 2 {
                    return Err(format!("seed {seed} produced {} sons", sons.len()));
                }
            }
            Ok("both seeds produce two separated same-type sons".into())
        })(),
    );

    // Drift corridors for the first full cycle, where the schedule entries
    // are representable.
    let bands = params.bands();
    let mut entries = vec![params.n0];
    for _ in 0..3 {
        match next_entry(params.growth, params.n0, &entries) {
            Some(v) => entries.push(v),
            None => break,
        }
    }
    if entries.len() >= 3 {
        let (n1, n2) = (entries[1], entries[2]);
        record(
            &mut checks,
            "drift-corridor-to-type1",
            (|| {
                if n2 > params.order_cap {
                    return Ok(format!("skipped: window [{n1}, {n2}) beyond the order cap"));
                }
                let corridor = drift_corridor(&bands, n1, n2, IntervalType::Type1);
                let start = window_int_range(&bands, IntervalType::Type2, n1)
                    .ok_or_else(|| format!("no type-2 zero count at order {n1}"))?;
                let reach =
                    corridor[0].ok_or_else(|| format!("empty corridor from order {n1} to {n2}"))?;
                if start.1 < reach.0 || reach.1 < start.0 {
                    return Err(format!(
                        "type-2 counts {start:?} at order {n1} cannot enter the corridor {reach:?}"
                    ));
                }
                Ok(format!("corridor from order {n1} to type 1 at {n2} is nonempty"))
            })(),
        );
    }
    if entries.len() >= 4 {
        let (n2, n3) = (entries[2], entries[3]);
        record(
            &mut checks,
            "drift-corridor-to-type2",
            (|| {
                if n3 > params.order_cap {
                    return Ok(format!("skipped: window [{n2}, {n3}) beyond the order cap"));
                }
                let corridor = drift_corridor(&bands, n2, n3, IntervalType::Type2);
                let start = window_int_range(&bands, IntervalType::Type1, n2)
                    .ok_or_else(|| format!("no type-1 zero count at order {n2}"))?;
                let reach =
                    corridor[0].ok_or_else(|| format!("empty corridor from order {n2} to {n3}"))?;
                if start.1 < reach.0 || reach.1 < start.0 {
                    return Err(format!(
                        "type-1 counts {start:?} at order {n2} cannot enter the corridor {reach:?}"
                    ));
                }
                Ok(format!("corridor from order {n2} to type 2 at {n3} is nonempty"))
            })(),
        );
    }

    let pass = checks.iter().all(|c| c.pass);
    FeasibilityReport { pass, checks, notes }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dyadic::interval_of;
    use num_bigint::BigUint;

    fn desk() -> ConstructionParams {
        ConstructionParams::desk_preset()
    }

    #[test]
    fn schedule_examples() {
        let mut p = desk();
        p.n0 = 6;
        p.growth = Growth::Tower;
        let s = schedule(&p, 4).unwrap();
        assert_eq!(s.entries, vec![6, 384, 768, 1536]);
        // n4 = 2^1536 * 6 exceeds any representable order
        match schedule(&p, 5) {
            Err(Error::CappedSchedule { last, requested }) => {
                assert_eq!(last, 1536);
                assert_eq!(requested, 4);
            }
            other => panic!("expected capped schedule, got {other:?}"),
        }

        p.growth = Growth::Geometric { factor: 2 };
        assert_eq!(schedule(&p, 4).unwrap().entries, vec![6, 12, 24, 48]);

        p.growth = Growth::Affine { step: 12 };
        assert_eq!(schedule(&p, 3).unwrap().entries, vec![6, 18, 30]);
    }

    #[test]
    fn validate_rejects_bad_params() {
        // equal probabilities make g constantly 1, so the exponent check
        // fails before the ordering check
        let mut p = desk();
        p.p0 = 0.5;
        p.p1 = 0.5;
        let r = validate(&p);
        assert!(!r.pass);
        assert!(r.first_failure().unwrap().detail.contains("g(gamma2) < 1"));

        // reversed probabilities push g above 1 everywhere below 1/2
        let mut p = desk();
        p.p0 = 0.6;
        p.p1 = 0.4;
        assert!(!validate(&p).pass);

        let mut p = desk();
        p.beta1 = 0.40;
        p.gamma1 = 0.35;
        let r = validate(&p);
        assert!(!r.pass);
        assert!(r.first_failure().unwrap().detail.contains("ordering"));

        let mut p = desk();
        p.gamma2 = 0.49;
        let r = validate(&p);
        assert!(!r.pass, "g(0.49) >= 1 for p1 = 0.58");
    }

    #[test]
    fn validate_desk_preset_passes() {
        let r = validate(&desk());
        assert!(r.pass, "desk preset failed: {:?}", r.first_failure());
        // beta1 = 0.30 sits below the asymptotic counting bound
        assert!(!r.notes.is_empty());
    }

    #[test]
    fn seeds_match_brute_force_scan() {
        for n0 in [12u64, 18] {
            let mut p = desk();
            p.n0 = n0;
            let bands = p.bands();
            let got = seed_generation(&p).unwrap();
            // independent scan in pair-lexicographic order
            let mut expect = None;
            'outer: for a in 0..(1u64 << n0) {
                let w1 = DyadicWord::from_numerator(a, n0 as usize);
                if type_of(&w1, &bands) != IntervalType::Type1 {
                    continue;
                }
                for b in 0..(1u64 << n0) {
                    let w2 = DyadicWord::from_numerator(b, n0 as usize);
                    if type_of(&w2, &bands) != IntervalType::Type2 {
                        continue;
                    }
                    if a.abs_diff(b) >= SIBLING_GAP {
                        expect = Some([w1, w2]);
                        break 'outer;
                    }
                }
            }
            assert_eq!(got, expect.unwrap(), "n0 = {n0}");
            assert_eq!(type_of(&got[0], &bands), IntervalType::Type1);
            assert_eq!(type_of(&got[1], &bands), IntervalType::Type2);
        }
    }

    #[test]
    fn seed_separation_gap_holds() {
        let s = seed_generation(&desk()).unwrap();
        let (a, b) = (s[0].numerator(), s[1].numerator());
        let diff = if a > b { &a - &b } else { &b - &a };
        assert!(diff >= BigUint::from(4u32));
    }

    /// Exhaustive invariant sweep over a small eager build: orders, window
    /// membership, separations, offsets, pairing.
    #[test]
    fn desk_build_invariants() {
        let fam = SelectedFamily::new(desk()).unwrap();
        let bands = *fam.bands();
        for k in 0..=6 {
            let gen = fam.generation(k).unwrap();
            let order = fam.generation_order(k);
            // split doubles through order 24, drift holds the count
            let expect_len = match order {
                12 => 2,
                18 => 4,
                24..=48 => 8,
                _ => unreachable!(),
            };
            assert_eq!(gen.len(), expect_len, "generation {k}");
            for node in &gen {
                assert_eq!(node.word.order() as u64, order);
                assert!(
                    bands.in_global_window(node.word.zero_count(), node.word.order()),
                    "global window violated by {} at order {order}",
                    node.word
                );
            }
            // pairwise separation: numerators at least 4 apart
            for (i, a) in gen.iter().enumerate() {
                for b in gen.iter().skip(i + 1) {
                    let na = a.word.numerator();
                    let nb = b.word.numerator();
                    let diff = if na > nb { &na - &nb } else { &nb - &na };
                    assert!(diff >= BigUint::from(4u32), "separation at generation {k}");
                }
            }
            // child-father endpoint distances via offsets
            if k > 0 {
                for node in &gen {
                    let o = node.word.offset_in_father();
                    assert!((OFFSET_MIN..=OFFSET_MAX).contains(&o));
                }
            }
            // pairing: involution, generation-preserving, swaps lineages
            for (i, node) in gen.iter().enumerate() {
                let p = node.partner;
                assert_ne!(p, i);
                assert_eq!(gen[p].partner, i);
                assert_eq!(gen[p].lineage, 1 - node.lineage);
            }
        }
    }

    #[test]
    fn phase_sequence_on_desk_schedule() {
        let p = desk();
        // orders 12, 18 split; 24..42 drift to type 1; 48..90 drift to type 2
        assert_eq!(phase_of(12, &p), Phase::Split);
        assert_eq!(phase_of(18, &p), Phase::Split);
        match phase_of(24, &p) {
            Phase::Drift { anchor, target_order, target_type, .. } => {
                assert_eq!((anchor, target_order, target_type), (24, 48, IntervalType::Type1));
            }
            other => panic!("unexpected {other:?}"),
        }
        match phase_of(66, &p) {
            Phase::Drift { anchor, target_order, target_type, .. } => {
                assert_eq!((anchor, target_order, target_type), (24, 96, IntervalType::Type2));
            }
            other => panic!("unexpected {other:?}"),
        }
        assert_eq!(phase_of(96, &p), Phase::Split);
    }

    #[test]
    fn affine_schedule_builds_and_cycles_phases() {
        let mut p = desk();
        p.growth = Growth::Affine { step: 18 };
        // entries 12, 30, 48, 66, ...: split on [12,30), drift-to-1 on
        // [30,48), drift-to-2 on [48,66), split again from 66
        assert_eq!(schedule(&p, 4).unwrap().entries, vec![12, 30, 48, 66]);
        assert!(validate(&p).pass, "{:?}", validate(&p).first_failure());
        let fam = SelectedFamily::new(p).unwrap();
        let bands = *fam.bands();
        // splits fire from orders 12, 18 and 24, then the drifts hold the
        // count at 16 until the next split window opens at 66
        let sizes: Vec<usize> =
            (0..=9).map(|k| fam.generation(k).unwrap().len()).collect();
        assert_eq!(sizes, vec![2, 4, 8, 16, 16, 16, 16, 16, 16, 16]);
        // arrival: type 1 everywhere at order 48, split resumes at 66
        for node in fam.generation(6).unwrap() {
            assert_eq!(type_of(&node.word, &bands), IntervalType::Type1);
        }
        assert_eq!(fam.generation(10).unwrap().len(), 32);
    }

    #[test]
    fn tower_schedule_stays_in_first_split_window() {
        let mut p = desk();
        p.growth = Growth::Tower;
        // n_1 = 2^12 * 12 = 49152, so every order under the cap splits
        assert_eq!(phase_of(12, &p), Phase::Split);
        assert_eq!(phase_of(4092, &p), Phase::Split);
    }

    #[test]
    fn drift_arrivals_have_the_right_types() {
        let fam = SelectedFamily::new(desk()).unwrap();
        let bands = *fam.bands();
        // at order 48 the migrated lineage has arrived in the type-1 window
        for node in fam.generation(6).unwrap() {
            assert_eq!(type_of(&node.word, &bands), IntervalType::Type1);
        }
        // at order 96 lineage 0 has migrated to type 2, lineage 1 stays 1
        let fam = SelectedFamily::new(desk()).unwrap();
        for node in fam.generation(14).unwrap() {
            let t = type_of(&node.word, &bands);
            if node.lineage == 0 {
                assert_eq!(t, IntervalType::Type2, "lineage 0 at order 96");
            } else {
                assert_eq!(t, IntervalType::Type1, "lineage 1 at order 96");
            }
        }
    }

    #[test]
    fn is_selected_and_membership() {
        let fam = SelectedFamily::new(desk()).unwrap();
        for seed in fam.seeds() {
            assert!(fam.is_selected(seed).unwrap());
        }
        // wrong-order words are never selected
        assert!(!fam.is_selected(&DyadicWord::parse("0101").unwrap()).unwrap());
        // a word violating the global window is never selected
        let all_ones = DyadicWord::from_bits(&[1u8; 18]);
        assert!(!fam.is_selected(&all_ones).unwrap());
        // every generation-3 member answers true
        for node in fam.generation(3).unwrap() {
            assert!(fam.is_selected(&node.word).unwrap());
        }
    }

    #[test]
    fn contains_selected_matches_exhaustive_ancestor_scan() {
        let fam = SelectedFamily::new(desk()).unwrap();
        let gen3 = fam.generation(3).unwrap(); // order 30
        for j in [0usize, 5, 12, 13, 20, 24, 29, 30] {
            let k = if j <= 12 { 0 } else { (j - 12).div_ceil(6) };
            let gen_k = fam.generation(k).unwrap();
            // sample words: prefixes of generation-3 members plus outsiders
            let mut samples: Vec<DyadicWord> =
                gen3.iter().map(|n| n.word.prefix(j)).collect();
            samples.push(DyadicWord::from_bits(&vec![1u8; j]));
            samples.push(DyadicWord::from_bits(&vec![0u8; j]));
            for w in samples {
                let expect = gen_k.iter().any(|n| w.is_prefix_of(&n.word));
                assert_eq!(fam.contains_selected(&w).unwrap(), expect, "word {w} (order {j})");
            }
        }
        assert!(fam.contains_selected(&DyadicWord::empty()).unwrap());
    }

    #[test]
    fn contains_selected_false_for_separated_sibling_subtree() {
        let fam = SelectedFamily::new(desk()).unwrap();
        // the all-ones order-12 word is far from both seeds
        let w = DyadicWord::from_bits(&[1u8; 12]);
        assert!(!fam.contains_selected(&w).unwrap());
    }

    #[test]
    fn partner_is_a_lineage_swapping_involution() {
        let fam = SelectedFamily::new(desk()).unwrap();
        assert_eq!(fam.partner(&fam.seeds()[0]).unwrap(), fam.seeds()[1]);
        for k in [2usize, 4] {
            let gen = fam.generation(k).unwrap();
            for node in &gen {
                let p = fam.partner(&node.word).unwrap();
                assert_eq!(p, gen[node.partner].word, "index pairing equals path pairing");
                assert_eq!(fam.partner(&p).unwrap(), node.word, "involution");
                assert_eq!(p.order(), node.word.order(), "generation preserved");
            }
        }
        assert!(fam.partner(&DyadicWord::parse("0101").unwrap()).is_err());
    }

    #[test]
    fn lazy_and_eager_agree_and_builds_are_deterministic() {
        let fam_a = SelectedFamily::new(desk()).unwrap();
        let fam_b = SelectedFamily::new(desk()).unwrap();
        let gen = fam_a.generation(5).unwrap();
        for node in &gen {
            assert!(fam_b.is_selected(&node.word).unwrap());
        }
        assert_eq!(fam_a.generation(5).unwrap(), fam_b.generation(5).unwrap());
    }

    #[test]
    fn concurrent_readers_observe_identical_results() {
        use std::sync::Arc;
        let fam = Arc::new(SelectedFamily::new(desk()).unwrap());
        let reference = fam.generation(5).unwrap();
        let words: Vec<DyadicWord> = reference.iter().map(|n| n.word.clone()).collect();
        let handles: Vec<_> = (0..4)
            .map(|_| {
                let fam = fam.clone();
                let words = words.clone();
                std::thread::spawn(move || {
                    // cold memo on some threads, warm on others
                    let mut selected = 0usize;
                    for w in &words {
                        if fam.is_selected(w).unwrap() {
                            selected += 1;
                        }
                        assert!(fam.contains_selected(&w.prefix(20)).unwrap());
                    }
                    (selected, fam.generation(5).unwrap())
                })
            })
            .collect();
        for h in handles {
            let (selected, gen) = h.join().unwrap();
            assert_eq!(selected, words.len());
            assert_eq!(gen, reference);
        }
    }

    #[test]
    fn depth_cap_is_enforced() {
        let mut p = desk();
        p.order_cap = 30;
        let fam = SelectedFamily::new(p).unwrap();
        assert!(fam.generation(3).is_ok()); // order 30
        match fam.generation(4) {
            Err(Error::DepthExceeded(_)) => {}
            other => panic!("expected depth error, got {other:?}"),
        }
    }

    #[test]
    fn infeasible_windows_fail_validation() {
        // a window missing every ratio k/12: (0.334, 0.3345) straddles no integer
        let mut p = desk();
        p.beta1 = 0.334;
        p.gamma1 = 0.3345;
        let r = validate(&p);
        assert!(!r.pass);
        assert_eq!(r.first_failure().unwrap().name, "seed-pair");
    }

    #[test]
    fn child_interval_endpoint_distances_exceed_one_unit() {
        let fam = SelectedFamily::new(desk()).unwrap();
        for node in fam.generation(1).unwrap() {
            let child = interval_of(&node.word);
            let f_word = node.word.prefix(node.word.order() - 6);
            let f_int = interval_of(&f_word);
            let left_dist = child.left_f64() - f_int.left_f64();
            let right_dist = (f_int.left_f64() + f_int.length_f64())
                - (child.left_f64() + child.length_f64());
            let unit = child.length_f64();
            assert!(left_dist > unit * (1.0 - 1e-12));
            assert!(right_dist > unit * (1.0 - 1e-12));
        }
    }
}
