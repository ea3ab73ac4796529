//! Pairwise dominance between criteria vectors: the better/equal/worse
//! counts, strict Pareto dominance and its k-relaxed variant.

use crate::error::{Error, Result};

/// Per-pair criterion counts from the first item's point of view.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct DominanceCounts {
    pub better: usize,
    pub equal: usize,
    pub worse: usize,
}

impl DominanceCounts {
    pub fn criteria(&self) -> usize {
        self.better + self.equal + self.worse
    }

    /// The same comparison seen from the other item.
    pub fn reversed(self) -> Self {
        Self {
            better: self.worse,
            equal: self.equal,
            worse: self.better,
        }
    }

    pub fn is_pareto(&self) -> bool {
        self.worse == 0 && self.better > 0
    }

    pub fn is_k_dominant(&self, relaxation: Relaxation) -> bool {
        // n_b >= (n_b + n_w) / (k + 1)  <=>  n_b * k >= n_w
        self.better > 0 && relaxation.scaled_at_least(self.better, self.worse)
    }
}

/// The k-dominance relaxation factor, 0 <= k <= 1.
///
/// `k` is held as the exact dyadic rational `numer / 2^shift` that the `f64`
/// represents, so threshold comparisons never round.
#[derive(Clone, Copy, Debug)]
pub struct Relaxation {
    k: f64,
    numer: u64,
    shift: u32,
}

impl Relaxation {
    pub const STRICT: Relaxation = Relaxation {
        k: 0.0,
        numer: 0,
        shift: 0,
    };

    pub fn new(k: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&k) {
            return Err(Error::Domain(format!(
                "relaxation factor k = {k} is outside [0, 1]"
            )));
        }
        if k == 0.0 {
            return Ok(Self::STRICT);
        }
        let bits = k.to_bits();
        let biased = ((bits >> 52) & 0x7ff) as i32;
        let fraction = bits & ((1u64 << 52) - 1);
        let (mut numer, mut exp) = if biased == 0 {
            (fraction, -1074)
        } else {
            (fraction | (1u64 << 52), biased - 1075)
        };
        let tz = numer.trailing_zeros();
        numer >>= tz;
        exp += tz as i32;
        debug_assert!(exp <= 0);
        Ok(Self {
            k,
            numer,
            shift: (-exp) as u32,
        })
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    /// Exact test of `count * k >= bound`.
    fn scaled_at_least(&self, count: usize, bound: usize) -> bool {
        if bound == 0 {
            return true;
        }
        let lhs = count as u128 * self.numer as u128;
        let bound = bound as u128;
        if self.shift >= bound.leading_zeros() {
            // bound << shift >= 2^127, beyond any reachable lhs
            return false;
        }
        lhs >= bound << self.shift
    }
}

impl PartialEq for Relaxation {
    fn eq(&self, other: &Self) -> bool {
        self.k == other.k
    }
}

fn check_dims(a: &[f64], b: &[f64]) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::Dimension {
            expected: a.len(),
            actual: b.len(),
        });
    }
    if a.is_empty() {
        return Err(Error::Domain(
            "cannot compare empty criteria vectors".into(),
        ));
    }
    Ok(())
}

/// Counts without dimension checks. Values within `tolerance` count as equal;
/// zero means exact comparison.
#[inline]
pub(crate) fn counts_unchecked(a: &[f64], b: &[f64], tolerance: f64) -> DominanceCounts {
    let mut better = 0;
    let mut worse = 0;
    if tolerance == 0.0 {
        for (x, y) in a.iter().zip(b) {
            better += (x > y) as usize;
            worse += (x < y) as usize;
        }
    } else {
        for (x, y) in a.iter().zip(b) {
            if (x - y).abs() > tolerance {
                better += (x > y) as usize;
                worse += (x < y) as usize;
            }
        }
    }
    DominanceCounts {
        better,
        equal: a.len() - better - worse,
        worse,
    }
}

pub fn dominance_counts(a: &[f64], b: &[f64]) -> Result<DominanceCounts> {
    check_dims(a, b)?;
    Ok(counts_unchecked(a, b, 0.0))
}

/// Like [`dominance_counts`], but criteria closer than `tolerance` count as equal.
/// A non-zero tolerance departs from strict equality and changes method semantics.
pub fn dominance_counts_with_tolerance(
    a: &[f64],
    b: &[f64],
    tolerance: f64,
) -> Result<DominanceCounts> {
    check_dims(a, b)?;
    if !(tolerance >= 0.0 && tolerance.is_finite()) {
        return Err(Error::Domain(format!(
            "equality tolerance {tolerance} must be finite and >= 0"
        )));
    }
    Ok(counts_unchecked(a, b, tolerance))
}

/// `a` is no worse than `b` on every criterion and strictly better on one.
pub fn pareto_dominates(a: &[f64], b: &[f64]) -> Result<bool> {
    Ok(dominance_counts(a, b)?.is_pareto())
}

pub fn k_dominates(a: &[f64], b: &[f64], k: f64) -> Result<bool> {
    let relaxation = Relaxation::new(k)?;
    Ok(dominance_counts(a, b)?.is_k_dominant(relaxation))
}
