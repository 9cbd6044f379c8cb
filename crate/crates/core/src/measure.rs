//! Evaluatable probability measures on the dyadic tree.
//!
//! Four model kinds share one interface:
//!
//! * `Uniform` — Lebesgue measure restricted to `[0,1)`;
//! * `Cascade` — the full binomial cascade, `mass = p0^{N0} p1^{n-N0}`;
//! * `Selective` — children of an interval containing a selected interval
//!   split its mass `p0 : p1`, all other intervals split evenly;
//! * `Explicit` — a validated weight table at a single order.
//!
//! Masses are handled in log2 space throughout. For the structured models
//! the log-mass is a small integer combination of `log2 p0`, `log2 p1` and
//! `-1`, so products never underflow and exponent identities hold to
//! near machine precision even at order 2000.

use crate::construction::SelectedFamily;
use crate::dyadic::DyadicWord;
use crate::error::{Error, Result};
use crate::util::neumaier_sum;
use std::sync::Arc;

/// Hard ceiling for whole-level enumerations (2^22 leaves).
pub const ENUMERATION_CAP: usize = 22;
/// Ball arithmetic uses f64 interval indices, exact up to this depth.
pub const BALL_DEPTH_CAP: usize = 52;

/// A mass value carried as log2.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Mass {
    pub log2: f64,
}

impl Mass {
    pub fn value(&self) -> f64 {
        self.log2.exp2()
    }
}

/// Lower/upper enclosure of a ball mass from one dyadic resolution level.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MassBounds {
    pub lower: f64,
    pub upper: f64,
}

/// An explicit weight table at a single order: the leaves of the measure.
#[derive(Debug)]
pub struct WeightTable {
    order: usize,
    /// prefix[i] = sum of the first i leaf masses
    prefix: Vec<f64>,
    has_zero: bool,
}

impl WeightTable {
    /// Build from leaf masses indexed by numerator. Requires all 2^order
    /// entries, nonnegative, summing to 1 within 1e-9 unless `renormalize`.
    pub fn new(order: usize, mut masses: Vec<f64>, renormalize: bool) -> Result<Self> {
        if order > 20 {
            return Err(Error::BudgetExceeded(format!(
                "weight table order {order} exceeds the cap of 20"
            )));
        }
        if masses.len() != 1usize << order {
            return Err(Error::ModelIntegrity(format!(
                "weight table needs {} masses at order {order}, got {}",
                1usize << order,
                masses.len()
            )));
        }
        if masses.iter().any(|m| !m.is_finite() || *m < 0.0) {
            return Err(Error::ModelIntegrity("weight table masses must be finite and >= 0".into()));
        }
        let total = neumaier_sum(&masses);
        if (total - 1.0).abs() > 1e-9 {
            if renormalize {
                if total <= 0.0 {
                    return Err(Error::ModelIntegrity("weight table total mass is zero".into()));
                }
                for m in &mut masses {
                    *m /= total;
                }
            } else {
                return Err(Error::ModelIntegrity(format!(
                    "weight table total mass {total} differs from 1 (pass renormalize to rescale)"
                )));
            }
        }
        let mut prefix = Vec::with_capacity(masses.len() + 1);
        let mut acc = 0.0f64;
        let mut comp = 0.0f64;
        prefix.push(0.0);
        for &m in &masses {
            let t = acc + m;
            if acc.abs() >= m.abs() {
                comp += (acc - t) + m;
            } else {
                comp += (m - t) + acc;
            }
            acc = t;
            prefix.push(acc + comp);
        }
        let has_zero = masses.iter().any(|&m| m == 0.0);
        Ok(WeightTable { order, prefix, has_zero })
    }

    /// Parse "word mass" lines; every word of one common order exactly once.
    pub fn parse(text: &str, renormalize: bool) -> Result<Self> {
        let mut order = None;
        let mut entries: Vec<(u64, f64)> = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut parts = line.split_whitespace();
            let word = parts
                .next()
                .ok_or_else(|| Error::ModelIntegrity(format!("line {}: missing word", lineno + 1)))?;
            let mass: f64 = parts
                .next()
                .ok_or_else(|| Error::ModelIntegrity(format!("line {}: missing mass", lineno + 1)))?
                .parse()
                .map_err(|e| Error::ModelIntegrity(format!("line {}: {e}", lineno + 1)))?;
            let w = DyadicWord::parse(word)
                .map_err(|e| Error::ModelIntegrity(format!("line {}: {e}", lineno + 1)))?;
            match order {
                None => order = Some(w.order()),
                Some(o) if o == w.order() => {}
                Some(o) => {
                    return Err(Error::ModelIntegrity(format!(
                        "line {}: order {} differs from {}",
                        lineno + 1,
                        w.order(),
                        o
                    )))
                }
            }
            entries.push((w.numerator_u64(), mass));
        }
        let order = order.ok_or_else(|| Error::ModelIntegrity("empty weight table".into()))?;
        if order > 20 {
            return Err(Error::BudgetExceeded(format!(
                "weight table order {order} exceeds the cap of 20"
            )));
        }
        let mut masses = vec![f64::NAN; 1usize << order];
        for (num, m) in entries {
            let slot = &mut masses[num as usize];
            if !slot.is_nan() {
                return Err(Error::ModelIntegrity(format!(
                    "duplicate entry for word numerator {num}"
                )));
            }
            *slot = m;
        }
        if let Some(missing) = masses.iter().position(|m| m.is_nan()) {
            return Err(Error::ModelIntegrity(format!(
                "missing entry for word numerator {missing} at order {order}"
            )));
        }
        WeightTable::new(order, masses, renormalize)
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn has_zero_mass(&self) -> bool {
        self.has_zero
    }

    /// Exact block sum of leaves `[i0, i1)`.
    fn block_mass(&self, i0: usize, i1: usize) -> f64 {
        self.prefix[i1] - self.prefix[i0]
    }
}

/// A dyadic measure model. Cloning is cheap; the selective family and the
/// weight table are shared.
#[derive(Clone, Debug)]
pub enum MeasureModel {
    Uniform,
    Cascade { p0: f64, p1: f64 },
    Selective(Arc<SelectedFamily>),
    Explicit(Arc<WeightTable>),
}

impl MeasureModel {
    pub fn cascade(p0: f64, p1: f64) -> Result<Self> {
        if !(p0 > 0.0 && p1 > 0.0 && (p0 + p1 - 1.0).abs() <= 1e-12) {
            return Err(Error::Domain("cascade needs p0, p1 > 0 with p0 + p1 = 1".into()));
        }
        Ok(MeasureModel::Cascade { p0, p1 })
    }

    pub fn selective(family: Arc<SelectedFamily>) -> Self {
        MeasureModel::Selective(family)
    }

    /// A short stable name for reports.
    pub fn name(&self) -> String {
        match self {
            MeasureModel::Uniform => "uniform".into(),
            MeasureModel::Cascade { p0, p1 } => format!("cascade({p0},{p1})"),
            MeasureModel::Selective(f) => {
                format!("selective(n0={})", f.params().n0)
            }
            MeasureModel::Explicit(t) => format!("explicit(order={})", t.order()),
        }
    }

    /// The (p0, p1) envelope pair for the order-n mass envelope, when the
    /// model has one.
    pub fn envelope_probs(&self) -> Option<(f64, f64)> {
        match self {
            MeasureModel::Uniform => Some((0.5, 0.5)),
            MeasureModel::Cascade { p0, p1 } => Some((*p0, *p1)),
            MeasureModel::Selective(f) => Some((f.params().p0, f.params().p1)),
            MeasureModel::Explicit(_) => None,
        }
    }

    /// Whether some dyadic interval has zero mass (only explicit tables can).
    pub fn has_zero_mass(&self) -> bool {
        match self {
            MeasureModel::Explicit(t) => t.has_zero_mass(),
            _ => false,
        }
    }

    /// Mass of the word's interval.
    pub fn mass(&self, word: &DyadicWord) -> Result<Mass> {
        let n = word.order();
        match self {
            MeasureModel::Uniform => Ok(Mass { log2: -(n as f64) }),
            MeasureModel::Cascade { p0, p1 } => {
                let zeros = word.zero_count();
                Ok(Mass { log2: factored_log2(zeros, n - zeros, 0, *p0, *p1) })
            }
            MeasureModel::Selective(fam) => {
                let biased = selective_bias_depth(fam, word)?;
                let zeros = word.bits()[..biased].iter().filter(|&&b| b == 0).count();
                let p = fam.params();
                Ok(Mass {
                    log2: factored_log2(zeros, biased - zeros, n - biased, p.p0, p.p1),
                })
            }
            MeasureModel::Explicit(t) => {
                if n > t.order() {
                    return Err(Error::DepthExceeded(format!(
                        "explicit table stops at order {}, asked for order {n}",
                        t.order()
                    )));
                }
                let shift = t.order() - n;
                let i0 = (word.numerator_u64() as usize) << shift;
                Ok(Mass { log2: t.block_mass(i0, i0 + (1 << shift)).log2() })
            }
        }
    }

    /// log2 masses of every order-n word, indexed by numerator.
    pub fn log2_masses_at(&self, n: usize) -> Result<Vec<f64>> {
        if n > ENUMERATION_CAP {
            return Err(Error::BudgetExceeded(format!(
                "enumerating 2^{n} masses exceeds the cap 2^{ENUMERATION_CAP}"
            )));
        }
        let mut out = vec![0.0f64; 1usize << n];
        match self {
            MeasureModel::Explicit(t) => {
                if n > t.order() {
                    return Err(Error::DepthExceeded(format!(
                        "explicit table stops at order {}, asked for order {n}",
                        t.order()
                    )));
                }
                let shift = t.order() - n;
                for (i, slot) in out.iter_mut().enumerate() {
                    *slot = t.block_mass(i << shift, (i + 1) << shift).log2();
                }
            }
            _ => {
                self.for_each_region(n, |num, order, log2m, _| {
                    let width = 1usize << (n - order);
                    let base = (num as usize) << (n - order);
                    let leaf = log2m - (n - order) as f64;
                    for slot in &mut out[base..base + width] {
                        *slot = leaf;
                    }
                })?;
            }
        }
        Ok(out)
    }

    /// Visit the order-n level as maximal constant-mass regions.
    ///
    /// `f(start_numerator, region_order, log2_region_mass, is_single_leaf)`:
    /// the region covers the `2^(n - region_order)` order-n leaves below one
    /// order-`region_order` word, each carrying an equal share of the region
    /// mass. Regions arrive in increasing numerator order, so any fold over
    /// them is deterministic. Not available for explicit tables.
    pub fn for_each_region<F: FnMut(u64, usize, f64, bool)>(
        &self,
        n: usize,
        mut f: F,
    ) -> Result<()> {
        if n > ENUMERATION_CAP {
            return Err(Error::BudgetExceeded(format!(
                "level walk at order {n} exceeds the cap 2^{ENUMERATION_CAP}"
            )));
        }
        match self {
            MeasureModel::Uniform => {
                f(0, 0, 0.0, n == 0);
                Ok(())
            }
            MeasureModel::Cascade { p0, p1 } => {
                let (l0, l1) = (p0.log2(), p1.log2());
                // full binary recursion; 2^n leaves
                fn rec<F: FnMut(u64, usize, f64, bool)>(
                    num: u64,
                    order: usize,
                    log2m: f64,
                    n: usize,
                    l0: f64,
                    l1: f64,
                    f: &mut F,
                ) {
                    if order == n {
                        f(num, order, log2m, true);
                        return;
                    }
                    rec(num << 1, order + 1, log2m + l0, n, l0, l1, f);
                    rec((num << 1) | 1, order + 1, log2m + l1, n, l0, l1, f);
                }
                rec(0, 0, 0.0, n, l0, l1, &mut f);
                Ok(())
            }
            MeasureModel::Selective(fam) => {
                let p = fam.params();
                let (l0, l1) = (p.p0.log2(), p.p1.log2());
                let n0 = p.n0 as usize;
                // candidates: selected words the current node is a prefix of
                struct Ctx<'a, F> {
                    fam: &'a SelectedFamily,
                    n: usize,
                    n0: usize,
                    l0: f64,
                    l1: f64,
                    f: &'a mut F,
                }
                fn rec<F: FnMut(u64, usize, f64, bool)>(
                    ctx: &mut Ctx<'_, F>,
                    word: &DyadicWord,
                    num: u64,
                    log2m: f64,
                    cands: &[DyadicWord],
                ) -> Result<()> {
                    let order = word.order();
                    if cands.is_empty() {
                        // even splits all the way down
                        (ctx.f)(num, order, log2m, order == ctx.n);
                        return Ok(());
                    }
                    if order == ctx.n {
                        (ctx.f)(num, order, log2m, true);
                        return Ok(());
                    }
                    // candidates for the next order
                    let step_cands: Vec<DyadicWord> =
                        if order >= ctx.n0 && (order - ctx.n0) % 6 == 0 {
                            // the node itself is selected; descend to sons
                            debug_assert!(cands.len() == 1 && cands[0] == *word);
                            ctx.fam.sons(word)?.as_ref().clone()
                        } else {
                            cands.to_vec()
                        };
                    for b in [0u8, 1] {
                        let child = word.child(b);
                        let next: Vec<DyadicWord> = step_cands
                            .iter()
                            .filter(|s| s.bit(order) == b)
                            .cloned()
                            .collect();
                        let dl = if b == 0 { ctx.l0 } else { ctx.l1 };
                        rec(ctx, &child, (num << 1) | b as u64, log2m + dl, &next)?;
                    }
                    Ok(())
                }
                let seeds = fam.seeds().to_vec();
                let mut ctx = Ctx { fam, n, n0, l0, l1, f: &mut f };
                rec(&mut ctx, &DyadicWord::empty(), 0, 0.0, &seeds)
            }
            MeasureModel::Explicit(_) => Err(Error::Domain(
                "region walk is not defined for explicit weight tables".into(),
            )),
        }
    }

    /// Lower/upper enclosure of the measure of the closed ball
    /// `[center - radius, center + radius]` from the order-`depth` grid.
    ///
    /// Lower sums the grid intervals wholly inside the ball, upper those
    /// meeting it; enclosures nest as `depth` grows.
    pub fn ball_mass_bounds(&self, center: f64, radius: f64, depth: usize) -> Result<MassBounds> {
        if !(0.0..1.0).contains(&center) {
            return Err(Error::Domain(format!("ball center {center} outside [0,1)")));
        }
        if !(radius > 0.0) {
            return Err(Error::Domain("ball radius must be positive".into()));
        }
        if depth > BALL_DEPTH_CAP {
            return Err(Error::DepthExceeded(format!(
                "ball resolution {depth} exceeds the cap {BALL_DEPTH_CAP}"
            )));
        }
        let scale = (depth as f64).exp2();
        let lo = (center - radius).max(0.0);
        let hi = (center + radius).min(1.0);
        let total = 1u64 << depth;
        // inside: i/2^d >= lo and (i+1)/2^d <= hi
        let in_start = ((lo * scale).ceil() as i64).clamp(0, total as i64) as u64;
        let in_end = ((hi * scale).floor() as i64).clamp(0, total as i64) as u64;
        // meets with positive overlap: i < hi*2^d and i+1 > lo*2^d
        // (touching at a single point adds nothing, the measure is atomless)
        let meet_start = ((lo * scale).floor() as i64).clamp(0, total as i64) as u64;
        let meet_end = ((hi * scale).ceil() as i64).clamp(0, total as i64) as u64;
        let lower = if in_start < in_end { self.range_mass(depth, in_start, in_end)? } else { 0.0 };
        let upper = if meet_start < meet_end {
            self.range_mass(depth, meet_start, meet_end)?
        } else {
            0.0
        };
        Ok(MassBounds { lower, upper: upper.max(lower) })
    }

    /// Exact mass of the union of order-`depth` intervals `[i0, i1)`, via
    /// the aligned dyadic block decomposition (O(depth) mass queries).
    fn range_mass(&self, depth: usize, i0: u64, i1: u64) -> Result<f64> {
        if let MeasureModel::Explicit(t) = self {
            if depth > t.order() {
                return Err(Error::DepthExceeded(format!(
                    "explicit table stops at order {}, asked for depth {depth}",
                    t.order()
                )));
            }
            let shift = t.order() - depth;
            return Ok(t.block_mass((i0 as usize) << shift, (i1 as usize) << shift));
        }
        let mut terms = Vec::new();
        let mut i = i0;
        while i < i1 {
            let align = if i == 0 { depth as u32 } else { i.trailing_zeros().min(depth as u32) };
            let mut b = align;
            while (1u64 << b) > i1 - i {
                b -= 1;
            }
            let word = DyadicWord::from_numerator(i >> b, depth - b as usize);
            terms.push(self.mass(&word)?.value());
            i += 1u64 << b;
        }
        Ok(neumaier_sum(&terms))
    }

    /// Whether `p0^n <= mass <= p1^n` holds across the whole order-n level,
    /// with the model's own probability pair.
    pub fn mass_envelope_check(&self, n: usize) -> Result<bool> {
        let (p0, p1) = self.envelope_probs().ok_or_else(|| {
            Error::Domain("mass envelope is defined only for probability-split models".into())
        })?;
        let lo = n as f64 * p0.log2() - 1e-9;
        let hi = n as f64 * p1.log2() + 1e-9;
        let mut ok = true;
        self.for_each_region(n, |_, order, log2m, _| {
            let leaf = log2m - (n - order) as f64;
            if leaf < lo || leaf > hi {
                ok = false;
            }
        })?;
        Ok(ok)
    }
}

/// `zeros*log2(p0) + ones*log2(p1) - halves`, the exact-form log mass.
fn factored_log2(zeros: usize, ones: usize, halves: usize, p0: f64, p1: f64) -> f64 {
    zeros as f64 * p0.log2() + ones as f64 * p1.log2() - halves as f64
}

/// Number of leading bits of `word` whose parent interval contains a
/// selected interval. Those steps split `p0 : p1`; the rest split evenly.
///
/// Walks the selected prefix chain only, so a depth-2000 query touches a few
/// hundred memoized nodes rather than the tree.
fn selective_bias_depth(fam: &SelectedFamily, word: &DyadicWord) -> Result<usize> {
    let n = word.order();
    let n0 = fam.params().n0 as usize;
    let lcp = |a: &DyadicWord, b: &DyadicWord, from: usize| -> usize {
        let cap = a.order().min(b.order());
        let mut l = from;
        while l < cap && a.bit(l) == b.bit(l) {
            l += 1;
        }
        l
    };
    // agreement with the seeds
    let mut best = 0usize;
    let mut cur: Option<DyadicWord> = None;
    for seed in fam.seeds() {
        let l = lcp(word, seed, 0);
        best = best.max(l);
        if l == n0 && n <= n0 {
            // the word is a prefix of this seed
            return Ok(n);
        }
        if l == n0 && n > n0 {
            cur = Some(seed.clone());
        }
    }
    if n <= n0 {
        // deepest containing prefix order is the agreement with the closest
        // seed; bits up to and including that index split biased
        return Ok((best + 1).min(n));
    }
    let mut cur = match cur {
        Some(c) => c,
        None => return Ok((best + 1).min(n)),
    };
    loop {
        let m = cur.order();
        if m == n {
            return Ok(n); // the word itself is selected
        }
        let sons = fam.sons(&cur)?;
        let mut descend: Option<DyadicWord> = None;
        for s in sons.iter() {
            let l = lcp(word, s, m);
            best = best.max(l);
            if l == s.order().min(n) {
                if s.order() <= n {
                    descend = Some(s.clone());
                } else {
                    // the son agrees with every remaining bit of the word
                    return Ok(n);
                }
            }
        }
        match descend {
            Some(next) => cur = next,
            None => return Ok((best + 1).min(n)),
        }
    }
}
