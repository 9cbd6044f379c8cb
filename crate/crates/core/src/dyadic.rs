//! Binary words and exact dyadic intervals — the combinatorial substrate.
//!
//! A word `j = j_1 j_2 ... j_n` over `{0,1}` indexes the half-open interval
//! `I_j = [sum_k j_k 2^-k, sum_k j_k 2^-k + 2^-n)`. Endpoints are exact
//! rationals with power-of-two denominators (the numerator is just the word
//! read as a big-endian integer), so disjointness and separation tests carry
//! no floating error.

use crate::error::{Error, Result};
use num_bigint::BigUint;
use num_traits::{One, Zero};
use std::fmt;

/// A finite binary word; the empty word has order 0.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct DyadicWord {
    bits: Vec<u8>,
}

impl DyadicWord {
    pub fn empty() -> Self {
        DyadicWord { bits: Vec::new() }
    }

    /// Build from a slice of 0/1 values.
    pub fn from_bits(bits: &[u8]) -> Self {
        assert!(bits.iter().all(|&b| b <= 1), "bits must be 0 or 1");
        DyadicWord { bits: bits.to_vec() }
    }

    /// Parse plain 0/1 text, the serialization used everywhere.
    pub fn parse(s: &str) -> Result<Self> {
        let mut bits = Vec::with_capacity(s.len());
        for c in s.chars() {
            match c {
                '0' => bits.push(0),
                '1' => bits.push(1),
                _ => return Err(Error::Domain(format!("invalid word character {c:?}"))),
            }
        }
        Ok(DyadicWord { bits })
    }

    /// Word of the given order whose bits are the low `order` bits of
    /// `numerator` (big-endian). Panics if the numerator does not fit.
    pub fn from_numerator(numerator: u64, order: usize) -> Self {
        assert!(order >= 64 || numerator < (1u64 << order), "numerator out of range");
        let bits = (0..order)
            .map(|i| ((numerator >> (order - 1 - i)) & 1) as u8)
            .collect();
        DyadicWord { bits }
    }

    /// Order `n`: the number of bits.
    pub fn order(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn bits(&self) -> &[u8] {
        &self.bits
    }

    pub fn bit(&self, i: usize) -> u8 {
        self.bits[i]
    }

    /// Number of times the letter 0 appears.
    pub fn zero_count(&self) -> usize {
        self.bits.iter().filter(|&&b| b == 0).count()
    }

    /// Digit-0 frequency `N0(j)/n` as an f64. Zero order yields NaN.
    pub fn zero_ratio(&self) -> f64 {
        self.zero_count() as f64 / self.order() as f64
    }

    pub fn child(&self, bit: u8) -> Self {
        assert!(bit <= 1);
        let mut bits = self.bits.clone();
        bits.push(bit);
        DyadicWord { bits }
    }

    /// Extend by the low `len` bits of `suffix` (big-endian).
    pub fn extended(&self, suffix: u64, len: usize) -> Self {
        let mut bits = self.bits.clone();
        for i in 0..len {
            bits.push(((suffix >> (len - 1 - i)) & 1) as u8);
        }
        DyadicWord { bits }
    }

    /// First `len` bits.
    pub fn prefix(&self, len: usize) -> Self {
        assert!(len <= self.bits.len());
        DyadicWord { bits: self.bits[..len].to_vec() }
    }

    pub fn is_prefix_of(&self, other: &DyadicWord) -> bool {
        other.bits.len() >= self.bits.len() && other.bits[..self.bits.len()] == self.bits[..]
    }

    /// The word read as a big-endian integer; this is the interval numerator.
    pub fn numerator(&self) -> BigUint {
        let mut n = BigUint::zero();
        for &b in &self.bits {
            n <<= 1u8;
            if b == 1 {
                n |= BigUint::one();
            }
        }
        n
    }

    /// Numerator as u64; only valid for order <= 63.
    pub fn numerator_u64(&self) -> u64 {
        assert!(self.bits.len() <= 63);
        self.bits.iter().fold(0u64, |acc, &b| (acc << 1) | b as u64)
    }
}

impl fmt::Display for DyadicWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.bits {
            write!(f, "{b}")?;
        }
        Ok(())
    }
}

impl fmt::Debug for DyadicWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "\"{self}\"")
    }
}

/// Half-open dyadic interval `[numerator/2^order, (numerator+1)/2^order)`.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct DyadicInterval {
    numerator: BigUint,
    order: usize,
}

impl DyadicInterval {
    pub fn new(numerator: BigUint, order: usize) -> Result<Self> {
        if numerator >= (BigUint::one() << order) {
            return Err(Error::Domain(format!(
                "interval numerator {numerator} out of range at order {order}"
            )));
        }
        Ok(DyadicInterval { numerator, order })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn numerator(&self) -> &BigUint {
        &self.numerator
    }

    /// Exact left endpoint rendered as "num/2^n".
    pub fn left_exact(&self) -> String {
        format!("{}/2^{}", self.numerator, self.order)
    }

    /// Lossy left endpoint.
    pub fn left_f64(&self) -> f64 {
        big_to_f64(&self.numerator) / (self.order as f64).exp2()
    }

    /// Lossy length 2^-order.
    pub fn length_f64(&self) -> f64 {
        (-(self.order as f64)).exp2()
    }

    /// Lossy midpoint; exact as an f64 whenever order <= 52.
    pub fn midpoint_f64(&self) -> f64 {
        (big_to_f64(&self.numerator) + 0.5) / (self.order as f64).exp2()
    }

    /// Exact membership of an f64 point.
    pub fn contains_f64(&self, x: f64) -> bool {
        if !(0.0..1.0).contains(&x) {
            return false;
        }
        locate(x, self.order).map(|w| w.numerator() == self.numerator).unwrap_or(false)
    }

    /// Two intervals of equal order are identical or disjoint; for equal
    /// orders this reports disjointness exactly.
    pub fn disjoint_same_order(&self, other: &DyadicInterval) -> bool {
        assert_eq!(self.order, other.order);
        self.numerator != other.numerator
    }
}

fn big_to_f64(n: &BigUint) -> f64 {
    // num-bigint's conversion saturates; orders used with f64 endpoints stay
    // far below that.
    use num_traits::ToPrimitive;
    n.to_f64().unwrap_or(f64::INFINITY)
}

/// The dyadic interval indexed by a word: positional weights `j_k 2^-k`.
pub fn interval_of(word: &DyadicWord) -> DyadicInterval {
    DyadicInterval { numerator: word.numerator(), order: word.order() }
}

/// The order-n word whose interval contains x.
pub fn locate(x: f64, order: usize) -> Result<DyadicWord> {
    if !(0.0..1.0).contains(&x) {
        return Err(Error::Domain(format!("locate: point {x} outside [0,1)")));
    }
    let mut bits = Vec::with_capacity(order);
    let mut y = x;
    for _ in 0..order {
        // doubling an f64 and subtracting 1 are exact, so this walks the
        // exact binary expansion of x
        y *= 2.0;
        if y >= 1.0 {
            bits.push(1);
            y -= 1.0;
        } else {
            bits.push(0);
        }
    }
    Ok(DyadicWord { bits })
}

/// Classification of an interval by its digit-0 frequency.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Hash)]
pub enum IntervalType {
    Type1,
    Type2,
    Untyped,
}

impl IntervalType {
    pub fn opposite(self) -> IntervalType {
        match self {
            IntervalType::Type1 => IntervalType::Type2,
            IntervalType::Type2 => IntervalType::Type1,
            IntervalType::Untyped => IntervalType::Untyped,
        }
    }
}

impl fmt::Display for IntervalType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IntervalType::Type1 => write!(f, "type1"),
            IntervalType::Type2 => write!(f, "type2"),
            IntervalType::Untyped => write!(f, "untyped"),
        }
    }
}

/// The two open frequency windows defining interval types: type 1 when
/// `beta1 < N0/n < gamma1`, type 2 when `beta2 < N0/n < gamma2`, both strict.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TypeBands {
    pub beta1: f64,
    pub gamma1: f64,
    pub beta2: f64,
    pub gamma2: f64,
}

impl TypeBands {
    /// Window for one type tag.
    pub fn window(&self, t: IntervalType) -> (f64, f64) {
        match t {
            IntervalType::Type1 => (self.beta1, self.gamma1),
            IntervalType::Type2 => (self.beta2, self.gamma2),
            IntervalType::Untyped => panic!("untyped has no window"),
        }
    }

    /// Strict-window test on an integer zero count. This is the single
    /// comparison used everywhere, so classification and counting arguments
    /// cannot disagree at float boundaries.
    pub fn in_window(&self, t: IntervalType, zeros: usize, order: usize) -> bool {
        let (lo, hi) = self.window(t);
        let r = zeros as f64 / order as f64;
        lo < r && r < hi
    }

    /// Global constraint `beta1 < N0/n < gamma2` satisfied by every selected
    /// interval.
    pub fn in_global_window(&self, zeros: usize, order: usize) -> bool {
        let r = zeros as f64 / order as f64;
        self.beta1 < r && r < self.gamma2
    }
}

/// Strict-inequality classification of `N0(j)/n`. The empty word is untyped.
pub fn type_of(word: &DyadicWord, bands: &TypeBands) -> IntervalType {
    if word.is_empty() {
        return IntervalType::Untyped;
    }
    let (z, n) = (word.zero_count(), word.order());
    if bands.in_window(IntervalType::Type1, z, n) {
        IntervalType::Type1
    } else if bands.in_window(IntervalType::Type2, z, n) {
        IntervalType::Type2
    } else {
        IntervalType::Untyped
    }
}

/// All 6-bit extensions of a typed word having the same type (the set called
/// I-tilde). Untyped input is a domain error.
pub fn tilde_set(word: &DyadicWord, bands: &TypeBands) -> Result<Vec<DyadicWord>> {
    let t = type_of(word, bands);
    if t == IntervalType::Untyped {
        return Err(Error::Domain(format!("tilde_set: word {word} is untyped")));
    }
    Ok((0u64..64)
        .map(|o| word.extended(o, 6))
        .filter(|w| type_of(w, bands) == t)
        .collect())
}

/// All order-2n extensions of a typed order-n word having the opposite type
/// (the set called I-check). Enumerates 2^n extensions, so `n` is capped.
pub fn check_set(word: &DyadicWord, bands: &TypeBands, max_order: usize) -> Result<Vec<DyadicWord>> {
    let t = type_of(word, bands);
    if t == IntervalType::Untyped {
        return Err(Error::Domain(format!("check_set: word {word} is untyped")));
    }
    let n = word.order();
    if n > max_order {
        return Err(Error::BudgetExceeded(format!(
            "check_set: enumerating 2^{n} extensions exceeds the cap of 2^{max_order}"
        )));
    }
    let want = t.opposite();
    Ok((0u64..(1u64 << n))
        .map(|o| word.extended(o, n))
        .filter(|w| type_of(w, bands) == want)
        .collect())
}

/// Whether some extension of `word` to `target_order` has the target type.
///
/// Decided by counting, not enumeration: appending `d` bits can realize any
/// zero count in `[N0, N0 + d]`, so the question is whether that integer
/// range meets the open window at the target order.
pub fn contains_type_descendant(
    word: &DyadicWord,
    target_order: usize,
    target_type: IntervalType,
    bands: &TypeBands,
) -> bool {
    assert!(target_order >= word.order(), "target order below word order");
    let z = word.zero_count();
    let d = target_order - word.order();
    reachable_window_hit(z, d, target_order, target_type, bands)
}

/// Is there an integer in `[z, z+d]` lying strictly inside the window at
/// `target_order`? Scans only near the window edges.
pub(crate) fn reachable_window_hit(
    z: usize,
    d: usize,
    target_order: usize,
    target_type: IntervalType,
    bands: &TypeBands,
) -> bool {
    let (lo, _) = bands.window(target_type);
    // first candidate: just below the window floor, defensively widened one
    // integer against float rounding of lo * target_order
    let start = ((lo * target_order as f64).floor() as i64 - 1).max(z as i64) as usize;
    let end = z + d;
    for v in start..=end {
        if bands.in_window(target_type, v, target_order) {
            return true;
        }
        // past the upper edge: no later v can re-enter an open interval
        if v as f64 / target_order as f64 >= bands.window(target_type).1 {
            break;
        }
    }
    false
}
