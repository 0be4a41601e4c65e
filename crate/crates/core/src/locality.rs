//! The locality system: four normalization rows plus eight no-signaling rows
//! over the sixteen cells, its eight closed-form solutions, and the
//! inequalities that nonnegativity induces through them.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::behavior::{index_of, Behavior, Outcome, Setting};
use crate::bell::HardyQuadruple;
use crate::error::{Error, Result};

/// The twelve rows of the locality system as `(coefficients, rhs)`.
///
/// Row order: block sums for (a1,b1), (a1,b2), (a2,b1), (a2,b2); then the
/// Alice rows a1+, a1-, a2+, a2- (remote b1 minus remote b2); then the Bob
/// rows b1+, b1-, b2+, b2- (remote a1 minus remote a2).
pub fn constraint_rows() -> [([i64; 16], i64); 12] {
    let mut rows = [([0i64; 16], 0i64); 12];
    let mut r = 0;
    for a in Setting::ALL {
        for b in Setting::ALL {
            for oa in Outcome::ALL {
                for ob in Outcome::ALL {
                    rows[r].0[index_of(a, b, oa, ob) - 1] = 1;
                }
            }
            rows[r].1 = 1;
            r += 1;
        }
    }
    for a in Setting::ALL {
        for oa in Outcome::ALL {
            for ob in Outcome::ALL {
                rows[r].0[index_of(a, Setting::One, oa, ob) - 1] = 1;
                rows[r].0[index_of(a, Setting::Two, oa, ob) - 1] = -1;
            }
            r += 1;
        }
    }
    for b in Setting::ALL {
        for ob in Outcome::ALL {
            for oa in Outcome::ALL {
                rows[r].0[index_of(Setting::One, b, oa, ob) - 1] = 1;
                rows[r].0[index_of(Setting::Two, b, oa, ob) - 1] = -1;
            }
            r += 1;
        }
    }
    rows
}

/// Left-hand side minus right-hand side of each row of the locality system.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConstraintResiduals {
    pub norm: [f64; 4],
    pub signal: [f64; 8],
}

impl ConstraintResiduals {
    pub fn max_norm(&self) -> f64 {
        self.norm.iter().fold(0.0, |m, r| m.max(r.abs()))
    }

    pub fn max_signal(&self) -> f64 {
        self.signal.iter().fold(0.0, |m, r| m.max(r.abs()))
    }

    pub fn max_abs(&self) -> f64 {
        self.max_norm().max(self.max_signal())
    }
}

pub fn constraint_residuals(b: &Behavior) -> ConstraintResiduals {
    let rows = constraint_rows();
    let mut all = [0.0; 12];
    for (out, (coef, rhs)) in all.iter_mut().zip(rows.iter()) {
        let lhs: f64 = coef.iter().zip(b.probs()).map(|(&c, p)| c as f64 * p).sum();
        *out = lhs - *rhs as f64;
    }
    let mut norm = [0.0; 4];
    let mut signal = [0.0; 8];
    norm.copy_from_slice(&all[..4]);
    signal.copy_from_slice(&all[4..]);
    ConstraintResiduals { norm, signal }
}

/// Exact rank of an integer matrix by fraction-free elimination.
pub fn integer_rank(rows: &[Vec<i64>]) -> usize {
    let mut m: Vec<Vec<i128>> = rows
        .iter()
        .map(|r| r.iter().map(|&x| x as i128).collect())
        .collect();
    let ncols = m.first().map_or(0, Vec::len);
    let mut rank = 0;
    for col in 0..ncols {
        let Some(pivot) = (rank..m.len()).find(|&r| m[r][col] != 0) else {
            continue;
        };
        m.swap(rank, pivot);
        for r in 0..m.len() {
            if r == rank || m[r][col] == 0 {
                continue;
            }
            let (num, den) = (m[r][col], m[rank][col]);
            for c in 0..ncols {
                m[r][c] = m[r][c] * den - m[rank][c] * num;
            }
            let g = m[r].iter().fold(0i128, |g, &x| gcd(g, x.abs()));
            if g > 1 {
                m[r].iter_mut().for_each(|x| *x /= g);
            }
        }
        rank += 1;
    }
    rank
}

fn gcd(a: i128, b: i128) -> i128 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Rank of the 12x16 coefficient matrix of the locality system.
pub fn system_rank() -> usize {
    let rows: Vec<Vec<i64>> = constraint_rows().iter().map(|(c, _)| c.to_vec()).collect();
    integer_rank(&rows)
}

/// One of the eight solutions of the locality system.
///
/// Each parametrization keeps eight cells free and solves for the other
/// eight. The free cells are exactly the terms of one of the eight CHSH sums,
/// which is what the variant is named after.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FreeSetId {
    Sigma1,
    Sigma1Prime,
    Sigma2,
    Sigma2Prime,
    Sigma3,
    Sigma3Prime,
    Sigma4,
    Sigma4Prime,
}

/// A solved cell written as `p_solved = (1 + sum_i sign_i * p_{free_i}) / 2`.
///
/// `terms` holds signed cell numbers in ascending order of the free cells.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Relation {
    pub solved: usize,
    pub terms: [i8; 8],
}

impl Relation {
    pub fn evaluate(&self, b: &Behavior) -> f64 {
        let s: f64 = self
            .terms
            .iter()
            .map(|&t| t.signum() as f64 * b.p(t.unsigned_abs() as usize))
            .sum();
        (1.0 + s) / 2.0
    }

    /// The three free cells that enter with a positive sign.
    pub fn positive(&self) -> [usize; 3] {
        let mut out = [0; 3];
        let mut n = 0;
        for &t in &self.terms {
            if t > 0 {
                out[n] = t as usize;
                n += 1;
            }
        }
        debug_assert_eq!(n, 3);
        out
    }
}

macro_rules! rel {
    ($solved:expr => [$($t:expr),*]) => {
        Relation { solved: $solved, terms: [$($t),*] }
    };
}

const SIGMA1: [Relation; 8] = [
    rel!(2 => [-1, -4, 5, -8, -9, 12, 14, -15]),
    rel!(3 => [-1, -4, -5, 8, 9, -12, -14, 15]),
    rel!(6 => [1, -4, -5, -8, -9, 12, 14, -15]),
    rel!(7 => [-1, 4, -5, -8, 9, -12, -14, 15]),
    rel!(10 => [-1, 4, 5, -8, -9, -12, 14, -15]),
    rel!(11 => [1, -4, -5, 8, -9, -12, -14, 15]),
    rel!(13 => [-1, 4, 5, -8, 9, -12, -14, -15]),
    rel!(16 => [1, -4, -5, 8, -9, 12, -14, -15]),
];

const SIGMA1_PRIME: [Relation; 8] = [
    rel!(1 => [-2, -3, 6, -7, -10, 11, 13, -16]),
    rel!(4 => [-2, -3, -6, 7, 10, -11, -13, 16]),
    rel!(5 => [2, -3, -6, -7, -10, 11, 13, -16]),
    rel!(8 => [-2, 3, -6, -7, 10, -11, -13, 16]),
    rel!(9 => [-2, 3, 6, -7, -10, -11, 13, -16]),
    rel!(12 => [2, -3, -6, 7, -10, -11, -13, 16]),
    rel!(14 => [-2, 3, 6, -7, 10, -11, -13, -16]),
    rel!(15 => [2, -3, -6, 7, -10, 11, -13, -16]),
];

const SIGMA2: [Relation; 8] = [
    rel!(2 => [-1, -4, 5, -8, 10, -11, -13, 16]),
    rel!(3 => [-1, -4, -5, 8, -10, 11, 13, -16]),
    rel!(6 => [1, -4, -5, -8, 10, -11, -13, 16]),
    rel!(7 => [-1, 4, -5, -8, -10, 11, 13, -16]),
    rel!(9 => [1, -4, -5, 8, -10, -11, 13, -16]),
    rel!(12 => [-1, 4, 5, -8, -10, -11, -13, 16]),
    rel!(14 => [1, -4, -5, 8, 10, -11, -13, -16]),
    rel!(15 => [-1, 4, 5, -8, -10, 11, -13, -16]),
];

const SIGMA2_PRIME: [Relation; 8] = [
    rel!(1 => [-2, -3, 6, -7, 9, -12, -14, 15]),
    rel!(4 => [-2, -3, -6, 7, -9, 12, 14, -15]),
    rel!(5 => [2, -3, -6, -7, 9, -12, -14, 15]),
    rel!(8 => [-2, 3, -6, -7, -9, 12, 14, -15]),
    rel!(10 => [2, -3, -6, 7, -9, -12, 14, -15]),
    rel!(11 => [-2, 3, 6, -7, -9, -12, -14, 15]),
    rel!(13 => [2, -3, -6, 7, 9, -12, -14, -15]),
    rel!(16 => [-2, 3, 6, -7, -9, 12, -14, -15]),
];

const SIGMA3: [Relation; 8] = [
    rel!(2 => [-1, -4, 6, -7, -9, 12, 13, -16]),
    rel!(3 => [-1, -4, -6, 7, 9, -12, -13, 16]),
    rel!(5 => [1, -4, -6, -7, -9, 12, 13, -16]),
    rel!(8 => [-1, 4, -6, -7, 9, -12, -13, 16]),
    rel!(10 => [-1, 4, 6, -7, -9, -12, 13, -16]),
    rel!(11 => [1, -4, -6, 7, -9, -12, -13, 16]),
    rel!(14 => [-1, 4, 6, -7, 9, -12, -13, -16]),
    rel!(15 => [1, -4, -6, 7, -9, 12, -13, -16]),
];

const SIGMA3_PRIME: [Relation; 8] = [
    rel!(1 => [-2, -3, 5, -8, -10, 11, 14, -15]),
    rel!(4 => [-2, -3, -5, 8, 10, -11, -14, 15]),
    rel!(6 => [2, -3, -5, -8, -10, 11, 14, -15]),
    rel!(7 => [-2, 3, -5, -8, 10, -11, -14, 15]),
    rel!(9 => [-2, 3, 5, -8, -10, -11, 14, -15]),
    rel!(12 => [2, -3, -5, 8, -10, -11, -14, 15]),
    rel!(13 => [-2, 3, 5, -8, 10, -11, -14, -15]),
    rel!(16 => [2, -3, -5, 8, -10, 11, -14, -15]),
];

const SIGMA4: [Relation; 8] = [
    rel!(1 => [-2, -3, 5, -8, 9, -12, -13, 16]),
    rel!(4 => [-2, -3, -5, 8, -9, 12, 13, -16]),
    rel!(6 => [2, -3, -5, -8, 9, -12, -13, 16]),
    rel!(7 => [-2, 3, -5, -8, -9, 12, 13, -16]),
    rel!(10 => [2, -3, -5, 8, -9, -12, 13, -16]),
    rel!(11 => [-2, 3, 5, -8, -9, -12, -13, 16]),
    rel!(14 => [2, -3, -5, 8, 9, -12, -13, -16]),
    rel!(15 => [-2, 3, 5, -8, -9, 12, -13, -16]),
];

const SIGMA4_PRIME: [Relation; 8] = [
    rel!(2 => [-1, -4, 6, -7, 10, -11, -14, 15]),
    rel!(3 => [-1, -4, -6, 7, -10, 11, 14, -15]),
    rel!(5 => [1, -4, -6, -7, 10, -11, -14, 15]),
    rel!(8 => [-1, 4, -6, -7, -10, 11, 14, -15]),
    rel!(9 => [1, -4, -6, 7, -10, -11, 14, -15]),
    rel!(12 => [-1, 4, 6, -7, -10, -11, -14, 15]),
    rel!(13 => [1, -4, -6, 7, 10, -11, -14, -15]),
    rel!(16 => [-1, 4, 6, -7, -10, 11, -14, -15]),
];

impl FreeSetId {
    pub const ALL: [FreeSetId; 8] = [
        FreeSetId::Sigma1,
        FreeSetId::Sigma1Prime,
        FreeSetId::Sigma2,
        FreeSetId::Sigma2Prime,
        FreeSetId::Sigma3,
        FreeSetId::Sigma3Prime,
        FreeSetId::Sigma4,
        FreeSetId::Sigma4Prime,
    ];

    /// Position 1..=8 in the canonical order.
    pub fn family(self) -> u8 {
        Self::ALL.iter().position(|&v| v == self).unwrap() as u8 + 1
    }

    pub fn from_family(family: u8) -> Option<Self> {
        Self::ALL.get((family as usize).checked_sub(1)?).copied()
    }

    /// Which CHSH sum (1..=4) the free cells add up to, and whether it is the primed one.
    pub fn sigma(self) -> (u8, bool) {
        let f = self.family();
        (f.div_ceil(2), f.is_multiple_of(2))
    }

    /// The parametrization that solves for this one's free cells.
    pub fn inverse(self) -> Self {
        let f = self.family();
        Self::from_family(if f % 2 == 1 { f + 1 } else { f - 1 }).unwrap()
    }

    pub fn relations(self) -> &'static [Relation; 8] {
        match self {
            FreeSetId::Sigma1 => &SIGMA1,
            FreeSetId::Sigma1Prime => &SIGMA1_PRIME,
            FreeSetId::Sigma2 => &SIGMA2,
            FreeSetId::Sigma2Prime => &SIGMA2_PRIME,
            FreeSetId::Sigma3 => &SIGMA3,
            FreeSetId::Sigma3Prime => &SIGMA3_PRIME,
            FreeSetId::Sigma4 => &SIGMA4,
            FreeSetId::Sigma4Prime => &SIGMA4_PRIME,
        }
    }

    pub fn solved(self) -> [usize; 8] {
        self.relations().map(|r| r.solved)
    }

    pub fn free(self) -> [usize; 8] {
        self.relations()[0].terms.map(|t| t.unsigned_abs() as usize)
    }

    /// Command-line name, `eq12` through `eq19` in canonical order.
    pub fn flag_name(self) -> String {
        format!("eq{}", 11 + self.family())
    }
}

impl fmt::Display for FreeSetId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.flag_name())
    }
}

impl FromStr for FreeSetId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.to_ascii_lowercase();
        if let Some(n) = lower.strip_prefix("eq").and_then(|n| n.parse::<u8>().ok()) {
            if (12..=19).contains(&n) {
                return Ok(Self::from_family(n - 11).unwrap());
            }
        }
        if let Some(rest) = lower.strip_prefix("sigma") {
            let (digit, primed) = match rest
                .strip_suffix("prime")
                .or_else(|| rest.strip_suffix('\''))
            {
                Some(d) => (d, true),
                None => (rest, false),
            };
            if let Ok(i @ 1..=4) = digit.trim_end_matches('_').parse::<u8>() {
                return Ok(Self::from_family(2 * i - 1 + primed as u8).unwrap());
            }
        }
        Err(Error::Config(format!(
            "unknown parametrization `{s}` (expected eq12..eq19)"
        )))
    }
}

/// The free cells of `variant`, read out of `b` in ascending cell order.
pub fn free_values(b: &Behavior, variant: FreeSetId) -> [f64; 8] {
    variant.free().map(|i| b.p(i))
}

/// Build the full box from the eight free cells of `variant`.
///
/// Solved entries are not clamped; run [`crate::behavior::is_valid`] on the result.
pub fn complete_from_free_set(free: [f64; 8], variant: FreeSetId) -> Result<Behavior> {
    let mut probs = [0.0; 16];
    for (&i, &v) in variant.free().iter().zip(free.iter()) {
        probs[i - 1] = v;
    }
    let partial = Behavior::new(probs)?;
    for rel in variant.relations() {
        probs[rel.solved - 1] = rel.evaluate(&partial);
    }
    Behavior::new(probs)
}

/// Complete from `variant`'s free set, then from its inverse's free set.
///
/// Fails if `b` does not satisfy the locality system to within `tol`.
pub fn completion_roundtrip(b: &Behavior, variant: FreeSetId, tol: f64) -> Result<Behavior> {
    let max_residual = constraint_residuals(b).max_abs();
    if max_residual > tol {
        return Err(Error::ConstraintViolation { max_residual, tol });
    }
    let once = complete_from_free_set(free_values(b, variant), variant)?;
    let inverse = variant.inverse();
    let mut twice = complete_from_free_set(free_values(&once, inverse), inverse)?;
    twice.label = b.label.clone();
    Ok(twice)
}

/// `2 pj - 1 <= pk + pl + pm`, which every nonnegative no-signaling box obeys.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NsBound {
    pub lhs: f64,
    pub rhs: f64,
    pub satisfied: bool,
}

pub fn ns_bound_check(b: &Behavior, q: &HardyQuadruple) -> NsBound {
    let lhs = 2.0 * b.p(q.j) - 1.0;
    let rhs = q.klm().iter().map(|&i| b.p(i)).sum();
    NsBound {
        lhs,
        rhs,
        satisfied: lhs <= rhs,
    }
}

/// Slack of an inequality of the form `... >= 0`; negative means violated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Slack {
    pub slack: f64,
    pub satisfied: bool,
}

impl Slack {
    fn new(slack: f64) -> Self {
        Self {
            slack,
            satisfied: slack >= 0.0,
        }
    }
}

/// Three inequalities that nonnegativity forces through the `Sigma1`
/// parametrization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SideChecks {
    /// `1 + p4 + p5 + p9 >= p1 + p8 + p12 + p14 + p15` (p13 >= 0).
    pub p13_nonnegative: Slack,
    /// `p9 + p15 <= 1` (p10 + p16 >= 0).
    pub p10_p16_nonnegative: Slack,
    /// `p1 + p4 + p5 + p8 + p9 + p12 + p14 + p15 <= 4` (solved cells sum >= 0).
    pub solved_sum_nonnegative: Slack,
}

pub fn nonneg_side_checks(b: &Behavior) -> SideChecks {
    let p = |i| b.p(i);
    SideChecks {
        p13_nonnegative: Slack::new(
            1.0 + p(4) + p(5) + p(9) - (p(1) + p(8) + p(12) + p(14) + p(15)),
        ),
        p10_p16_nonnegative: Slack::new(1.0 - p(9) - p(15)),
        solved_sum_nonnegative: Slack::new(
            4.0 - FreeSetId::Sigma1.free().iter().map(|&i| p(i)).sum::<f64>(),
        ),
    }
}

/// Draw a random valid no-signaling box by rejection: uniform free values for
/// `variant`, completed, kept only when every entry lands in `[0, 1]`.
pub fn sample_no_signaling<R: Rng + ?Sized>(rng: &mut R, variant: FreeSetId) -> Behavior {
    loop {
        let free: [f64; 8] = std::array::from_fn(|_| rng.random::<f64>());
        let b = complete_from_free_set(free, variant).expect("finite inputs");
        if crate::behavior::is_valid(&b) {
            return b;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::behavior::{is_no_signaling, is_normalized, is_valid};

    fn pr() -> Behavior {
        let mut p = [0.0; 16];
        for i in [1, 4, 5, 8, 9, 12, 14, 15] {
            p[i - 1] = 0.5;
        }
        Behavior::new(p).unwrap()
    }

    fn mermin() -> Behavior {
        Behavior::new([
            0.25, 0.375, 0.375, 0.0, 0.0, 0.625, 0.225, 0.15, 0.0, 0.225, 0.625, 0.15, 0.09, 0.135,
            0.135, 0.64,
        ])
        .unwrap()
    }

    #[test]
    fn rows_match_written_system() {
        // Transcribed row by row: (positive cells, negative cells, rhs).
        let written: [(&[usize], &[usize], i64); 12] = [
            (&[1, 2, 3, 4], &[], 1),
            (&[5, 6, 7, 8], &[], 1),
            (&[9, 10, 11, 12], &[], 1),
            (&[13, 14, 15, 16], &[], 1),
            (&[1, 2], &[5, 6], 0),
            (&[3, 4], &[7, 8], 0),
            (&[9, 10], &[13, 14], 0),
            (&[11, 12], &[15, 16], 0),
            (&[1, 3], &[9, 11], 0),
            (&[2, 4], &[10, 12], 0),
            (&[5, 7], &[13, 15], 0),
            (&[6, 8], &[14, 16], 0),
        ];
        for ((coef, rhs), (pos, neg, want_rhs)) in constraint_rows().iter().zip(written) {
            let mut want = [0i64; 16];
            pos.iter().for_each(|&i| want[i - 1] = 1);
            neg.iter().for_each(|&i| want[i - 1] = -1);
            assert_eq!(*coef, want);
            assert_eq!(*rhs, want_rhs);
        }
    }

    #[test]
    fn residual_examples() {
        let r = constraint_residuals(&Behavior::uniform());
        assert_eq!(r.max_abs(), 0.0);
        assert_eq!(constraint_residuals(&pr()).max_abs(), 0.0);

        let mut p = [0.0; 16];
        for i in [1, 5, 9, 14] {
            p[i - 1] = 1.0;
        }
        let r = constraint_residuals(&Behavior::new(p).unwrap());
        assert_eq!(r.max_norm(), 0.0);
        // row p5 + p7 - p13 - p15
        assert_eq!(r.signal[6], 1.0);
    }

    #[test]
    fn rank() {
        assert_eq!(system_rank(), 8);
        let rows: Vec<Vec<i64>> = constraint_rows()[..4]
            .iter()
            .map(|(c, _)| c.to_vec())
            .collect();
        assert_eq!(integer_rank(&rows), 4);
        let rows: Vec<Vec<i64>> = constraint_rows()
            .iter()
            .map(|(c, _)| c[..4].to_vec())
            .collect();
        assert!(integer_rank(&rows) <= 4);
    }

    #[test]
    fn solved_and_free_partition_cells() {
        for v in FreeSetId::ALL {
            let mut all: Vec<usize> = v.solved().into_iter().chain(v.free()).collect();
            all.sort_unstable();
            assert_eq!(all, (1..=16).collect::<Vec<_>>(), "{v}");
            assert!(v.free().windows(2).all(|w| w[0] < w[1]));
            assert_eq!(v.inverse().inverse(), v);
            assert_eq!(v.inverse().free(), {
                let mut s = v.solved();
                s.sort_unstable();
                s
            });
            for rel in v.relations() {
                assert_eq!(rel.terms.iter().filter(|t| **t > 0).count(), 3);
            }
        }
    }

    #[test]
    fn solved_sets_as_listed() {
        let listed: [[usize; 8]; 8] = [
            [2, 3, 6, 7, 10, 11, 13, 16],
            [1, 4, 5, 8, 9, 12, 14, 15],
            [2, 3, 6, 7, 9, 12, 14, 15],
            [1, 4, 5, 8, 10, 11, 13, 16],
            [2, 3, 5, 8, 10, 11, 14, 15],
            [1, 4, 6, 7, 9, 12, 13, 16],
            [1, 4, 6, 7, 10, 11, 14, 15],
            [2, 3, 5, 8, 9, 12, 13, 16],
        ];
        for (v, want) in FreeSetId::ALL.iter().zip(listed) {
            assert_eq!(v.solved(), want);
        }
    }

    #[test]
    fn flag_names_parse() {
        for v in FreeSetId::ALL {
            assert_eq!(v.flag_name().parse::<FreeSetId>().unwrap(), v);
        }
        assert_eq!("eq12".parse::<FreeSetId>().unwrap(), FreeSetId::Sigma1);
        assert_eq!(
            "sigma2prime".parse::<FreeSetId>().unwrap(),
            FreeSetId::Sigma2Prime
        );
        assert!("eq20".parse::<FreeSetId>().is_err());
    }

    #[test]
    fn completion_examples() {
        let pr_box = complete_from_free_set([0.5; 8], FreeSetId::Sigma1).unwrap();
        assert_eq!(pr_box, pr());

        let u = complete_from_free_set([0.25; 8], FreeSetId::Sigma1).unwrap();
        assert_eq!(u, Behavior::uniform());

        let m = mermin();
        let rebuilt =
            complete_from_free_set(free_values(&m, FreeSetId::Sigma1), FreeSetId::Sigma1).unwrap();
        for i in 1..=16 {
            assert!((rebuilt.p(i) - m.p(i)).abs() < 1e-15, "p{i}");
        }
    }

    #[test]
    fn roundtrip_examples() {
        assert_eq!(
            completion_roundtrip(&pr(), FreeSetId::Sigma1, 1e-12).unwrap(),
            pr()
        );
        let m = mermin();
        let back = completion_roundtrip(&m, FreeSetId::Sigma1, 1e-12).unwrap();
        for i in 1..=16 {
            assert!((back.p(i) - m.p(i)).abs() < 1e-12);
        }
        for v in FreeSetId::ALL {
            assert_eq!(
                completion_roundtrip(&Behavior::uniform(), v, 1e-12).unwrap(),
                Behavior::uniform()
            );
        }
    }

    #[test]
    fn roundtrip_rejects_signaling_box() {
        let mut p = [0.0; 16];
        for i in [1, 5, 9, 14] {
            p[i - 1] = 1.0;
        }
        let err =
            completion_roundtrip(&Behavior::new(p).unwrap(), FreeSetId::Sigma1, 1e-9).unwrap_err();
        match err {
            Error::ConstraintViolation { max_residual, .. } => assert_eq!(max_residual, 1.0),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn ns_bound_examples() {
        let q = HardyQuadruple::new(FreeSetId::Sigma1Prime, 5, [2, 11, 13]);
        let r = ns_bound_check(&pr(), &q);
        assert_eq!((r.lhs, r.rhs, r.satisfied), (0.0, 0.0, true));

        let mut p = [0.0; 16];
        p[4] = 1.0;
        let r = ns_bound_check(&Behavior::new(p).unwrap(), &q);
        assert_eq!((r.lhs, r.rhs, r.satisfied), (1.0, 0.0, false));

        let r = ns_bound_check(&Behavior::uniform(), &q);
        assert_eq!((r.lhs, r.rhs, r.satisfied), (-0.5, 0.75, true));
    }

    #[test]
    fn side_check_examples() {
        assert_eq!(nonneg_side_checks(&pr()).solved_sum_nonnegative.slack, 0.0);
        let s = nonneg_side_checks(&mermin()).solved_sum_nonnegative.slack;
        assert!((s - 3.18).abs() < 1e-12);
        assert_eq!(
            nonneg_side_checks(&Behavior::uniform())
                .p10_p16_nonnegative
                .slack,
            0.5
        );
    }

    #[test]
    fn sampled_boxes_are_no_signaling() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for v in FreeSetId::ALL {
            let b = sample_no_signaling(&mut rng, v);
            assert!(is_valid(&b));
            assert!(is_normalized(&b, 1e-12));
            assert!(is_no_signaling(&b, 1e-12));
        }
    }
}
