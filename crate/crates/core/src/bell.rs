//! CHSH sums in correlation and probability form, CH combinations, and the
//! 64 Hardy-type four-probability inequalities.

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::behavior::{correlations, is_no_signaling, marginals, Behavior, Outcome, Setting};
use crate::error::{Error, Result};
use crate::locality::FreeSetId;

/// Default tolerance for flagging an inequality as violated.
pub const DEFAULT_VIOLATION_TOL: f64 = 1e-9;
/// Default threshold below which a cell counts as zero for Hardy witnesses.
pub const DEFAULT_WITNESS_EPS: f64 = 1e-6;

/// Cells entering `Sigma_i` (index 0..4).
pub const SIGMA_TERMS: [[usize; 8]; 4] = [
    [1, 4, 5, 8, 9, 12, 14, 15],
    [1, 4, 5, 8, 10, 11, 13, 16],
    [1, 4, 6, 7, 9, 12, 13, 16],
    [2, 3, 5, 8, 9, 12, 13, 16],
];

/// Cells entering `Sigma'_i` (index 0..4).
pub const SIGMA_PRIME_TERMS: [[usize; 8]; 4] = [
    [2, 3, 6, 7, 10, 11, 13, 16],
    [2, 3, 6, 7, 9, 12, 14, 15],
    [2, 3, 5, 8, 10, 11, 14, 15],
    [1, 4, 6, 7, 10, 11, 14, 15],
];

/// Sign of `c11, c12, c21, c22` in `Delta_i`.
const DELTA_SIGNS: [[f64; 4]; 4] = [
    [1.0, 1.0, 1.0, -1.0],
    [1.0, 1.0, -1.0, 1.0],
    [1.0, -1.0, 1.0, 1.0],
    [-1.0, 1.0, 1.0, 1.0],
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SigmaValues {
    pub sigma: [f64; 4],
    pub sigma_prime: [f64; 4],
}

impl SigmaValues {
    /// The sum whose terms are the free cells of `variant`.
    pub fn of_family(&self, variant: FreeSetId) -> f64 {
        let (i, primed) = variant.sigma();
        let i = i as usize - 1;
        if primed {
            self.sigma_prime[i]
        } else {
            self.sigma[i]
        }
    }
}

pub fn sigma_values(b: &Behavior) -> SigmaValues {
    let sum = |terms: &[usize; 8]| terms.iter().map(|&i| b.p(i)).sum::<f64>();
    SigmaValues {
        sigma: SIGMA_TERMS.map(|t| sum(&t)),
        sigma_prime: SIGMA_PRIME_TERMS.map(|t| sum(&t)),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeltaValues {
    pub delta: [f64; 4],
}

pub fn delta_values(b: &Behavior) -> DeltaValues {
    let c = correlations(b).as_array();
    DeltaValues {
        delta: DELTA_SIGNS.map(|s| s.iter().zip(c.iter()).map(|(s, c)| s * c).sum()),
    }
}

/// A two-sided bound `lower <= value <= upper`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundCheck {
    pub value: f64,
    pub lower: f64,
    pub upper: f64,
    pub violated_lower: bool,
    pub violated_upper: bool,
}

impl BoundCheck {
    pub fn new(value: f64, lower: f64, upper: f64, tol: f64) -> Self {
        Self {
            value,
            lower,
            upper,
            violated_lower: value - lower < -tol,
            violated_upper: upper - value < -tol,
        }
    }

    pub fn violated(&self) -> bool {
        self.violated_lower || self.violated_upper
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChshReport {
    pub sigma: [BoundCheck; 4],
    pub sigma_prime: [BoundCheck; 4],
    pub delta: [BoundCheck; 4],
    /// `Delta_i == 2 (Sigma_i - 2)` within tolerance, per `i`.
    pub forms_consistent: [bool; 4],
    pub violations: usize,
}

pub fn chsh_check(b: &Behavior, tol: f64) -> ChshReport {
    let s = sigma_values(b);
    let d = delta_values(b);
    let sigma = s.sigma.map(|v| BoundCheck::new(v, 1.0, 3.0, tol));
    let sigma_prime = s.sigma_prime.map(|v| BoundCheck::new(v, 1.0, 3.0, tol));
    let delta = d.delta.map(|v| BoundCheck::new(v, -2.0, 2.0, tol));
    let forms_consistent =
        std::array::from_fn(|i| (d.delta[i] - 2.0 * (s.sigma[i] - 2.0)).abs() <= tol);
    let violations = sigma
        .iter()
        .chain(&sigma_prime)
        .filter(|c| c.violated())
        .count();
    ChshReport {
        sigma,
        sigma_prime,
        delta,
        forms_consistent,
        violations,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChValues {
    pub b: [f64; 4],
}

/// The four-cell CH combinations (no-signaling already folded in).
pub fn ch_values(b: &Behavior) -> ChValues {
    let p = |i| b.p(i);
    ChValues {
        b: [
            -p(2) + p(5) - p(11) - p(13),
            -p(2) + p(5) - p(9) - p(15),
            -p(3) - p(5) - p(10) + p(13),
            -p(1) + p(5) - p(10) - p(15),
        ],
    }
}

/// Which block supplies each single-party probability in the six-term CH form.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct MarginalChoice {
    /// Remote setting used for `p(a_j = +1)`.
    pub alice_remote: Setting,
    /// Remote setting used for `p(b_k = +1)`.
    pub bob_remote: Setting,
}

impl MarginalChoice {
    pub const ALL: [MarginalChoice; 4] = [
        MarginalChoice {
            alice_remote: Setting::One,
            bob_remote: Setting::One,
        },
        MarginalChoice {
            alice_remote: Setting::Two,
            bob_remote: Setting::One,
        },
        MarginalChoice {
            alice_remote: Setting::One,
            bob_remote: Setting::Two,
        },
        MarginalChoice {
            alice_remote: Setting::Two,
            bob_remote: Setting::Two,
        },
    ];
}

/// The six-term CH combinations computed from joint `(+,+)` cells and the
/// chosen single-party marginals, without assuming no-signaling.
pub fn ch_values_full(b: &Behavior, choice: MarginalChoice) -> ChValues {
    use Setting::{One, Two};
    let m = marginals(b);
    let joint = |a, bs| b.cell(a, bs, Outcome::Plus, Outcome::Plus);
    let pa = |s| m.alice(s, Outcome::Plus, choice.alice_remote);
    let pb = |s| m.bob(s, Outcome::Plus, choice.bob_remote);
    let (j11, j12, j21, j22) = (
        joint(One, One),
        joint(One, Two),
        joint(Two, One),
        joint(Two, Two),
    );
    ChValues {
        b: [
            j11 + j12 + j21 - j22 - pa(One) - pb(One),
            j11 + j12 - j21 + j22 - pa(One) - pb(Two),
            j11 - j12 + j21 + j22 - pa(Two) - pb(One),
            -j11 + j12 + j21 + j22 - pa(Two) - pb(Two),
        ],
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChReport {
    pub four_term: [BoundCheck; 4],
    pub full: [BoundCheck; 4],
    pub marginal_choice: MarginalChoice,
    pub violations: usize,
}

pub fn ch_check(b: &Behavior, tol: f64) -> ChReport {
    ch_check_with(b, MarginalChoice::default(), tol)
}

pub fn ch_check_with(b: &Behavior, choice: MarginalChoice, tol: f64) -> ChReport {
    let four_term = ch_values(b).b.map(|v| BoundCheck::new(v, -1.0, 0.0, tol));
    let full = ch_values_full(b, choice)
        .b
        .map(|v| BoundCheck::new(v, -1.0, 0.0, tol));
    let violations = four_term
        .iter()
        .chain(&full)
        .filter(|c| c.violated())
        .count();
    ChReport {
        four_term,
        full,
        marginal_choice: choice,
        violations,
    }
}

/// `pj <= pk + pl + pm <= 1 + pj`, read off one solved relation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct HardyQuadruple {
    /// Source parametrization, 1..=8.
    pub family: u8,
    pub j: usize,
    pub k: usize,
    pub l: usize,
    pub m: usize,
    /// Which CHSH sum (1..=4) this inequality rewrites.
    pub sigma_index: u8,
    pub primed: bool,
}

impl HardyQuadruple {
    pub fn new(variant: FreeSetId, j: usize, mut klm: [usize; 3]) -> Self {
        klm.sort_unstable();
        let (sigma_index, primed) = variant.sigma();
        Self {
            family: variant.family(),
            j,
            k: klm[0],
            l: klm[1],
            m: klm[2],
            sigma_index,
            primed,
        }
    }

    pub fn klm(&self) -> [usize; 3] {
        [self.k, self.l, self.m]
    }

    pub fn variant(&self) -> FreeSetId {
        FreeSetId::from_family(self.family).expect("family in 1..=8")
    }

    /// Look up the canonical quadruple with this family and `j`.
    pub fn find(family: u8, j: usize) -> Option<HardyQuadruple> {
        enumerate_hardy_inequalities()
            .iter()
            .copied()
            .find(|q| q.family == family && q.j == j)
    }

    pub fn lower_slack(&self, b: &Behavior) -> f64 {
        self.klm().iter().map(|&i| b.p(i)).sum::<f64>() - b.p(self.j)
    }

    pub fn display(&self) -> String {
        format!(
            "p{j} <= p{k} + p{l} + p{m} <= 1 + p{j}",
            j = self.j,
            k = self.k,
            l = self.l,
            m = self.m
        )
    }
}

/// The 64 inequalities, ordered by family and then by `j`.
pub fn enumerate_hardy_inequalities() -> &'static [HardyQuadruple] {
    static TABLE: OnceLock<Vec<HardyQuadruple>> = OnceLock::new();
    TABLE.get_or_init(|| {
        FreeSetId::ALL
            .iter()
            .flat_map(|&v| {
                let mut qs: Vec<_> = v
                    .relations()
                    .iter()
                    .map(|r| HardyQuadruple::new(v, r.solved, r.positive()))
                    .collect();
                qs.sort_by_key(|q| q.j);
                qs
            })
            .collect()
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HardyEntry {
    pub family: u8,
    pub j: usize,
    pub k: usize,
    pub l: usize,
    pub m: usize,
    pub lower_slack: f64,
    pub upper_slack: f64,
    pub violated_lower: bool,
    pub violated_upper: bool,
}

impl HardyEntry {
    pub fn violated(&self) -> bool {
        self.violated_lower || self.violated_upper
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ViolationSummary {
    pub violated_lower: usize,
    pub violated_upper: usize,
    pub violated: usize,
    pub satisfied: usize,
    /// Violations per family 1..=8.
    pub per_family: [usize; 8],
    /// Violations per CHSH sum 1..=4 (two families each).
    pub per_sigma: [usize; 4],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViolationReport {
    pub entries: Vec<HardyEntry>,
    pub summary: ViolationSummary,
}

pub fn hardy_check(b: &Behavior, tol: f64) -> ViolationReport {
    let entries: Vec<HardyEntry> = enumerate_hardy_inequalities()
        .iter()
        .map(|q| {
            let lower_slack = q.lower_slack(b);
            let upper_slack = 1.0 + b.p(q.j) - (lower_slack + b.p(q.j));
            HardyEntry {
                family: q.family,
                j: q.j,
                k: q.k,
                l: q.l,
                m: q.m,
                lower_slack,
                upper_slack,
                violated_lower: lower_slack < -tol,
                violated_upper: upper_slack < -tol,
            }
        })
        .collect();
    let mut summary = ViolationSummary {
        violated_lower: 0,
        violated_upper: 0,
        violated: 0,
        satisfied: 0,
        per_family: [0; 8],
        per_sigma: [0; 4],
    };
    for e in &entries {
        summary.violated_lower += e.violated_lower as usize;
        summary.violated_upper += e.violated_upper as usize;
        if e.violated() {
            summary.violated += 1;
            summary.per_family[e.family as usize - 1] += 1;
            summary.per_sigma[(e.family as usize - 1) / 2] += 1;
        } else {
            summary.satisfied += 1;
        }
    }
    ViolationReport { entries, summary }
}

/// Quadruples with `pk, pl, pm <= eps` and `pj > eps`.
pub fn hardy_witness(b: &Behavior, eps: f64) -> Vec<HardyQuadruple> {
    enumerate_hardy_inequalities()
        .iter()
        .filter(|q| b.p(q.j) > eps && q.klm().iter().all(|&i| b.p(i) <= eps))
        .copied()
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IdentityCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub discrepancy: f64,
    pub holds: bool,
}

impl IdentityCheck {
    fn new(lhs: f64, rhs: f64, tol: f64) -> Self {
        let discrepancy = lhs - rhs;
        Self {
            lhs,
            rhs,
            discrepancy,
            holds: discrepancy.abs() <= tol,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChIdentity {
    /// `(Sigma_i - 3) / 2`.
    pub predicted: f64,
    pub four_term: IdentityCheck,
    pub full: IdentityCheck,
    /// True when the box is no-signaling, so the identity must hold.
    pub asserted: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquivalenceAudit {
    pub no_signaling: bool,
    /// `Delta_i = 2 (Sigma_i - 2)`.
    pub delta_identity: [IdentityCheck; 4],
    /// `Sigma_i + Sigma'_i = 4`.
    pub sum_identity: [IdentityCheck; 4],
    /// `B_i = (Sigma_i - 3) / 2`.
    pub ch_identity: [ChIdentity; 4],
    /// Every CH identity holds, i.e. CH and CHSH agree on this box.
    pub ch_chsh_equivalent: bool,
    /// Asserted identities that failed. Always empty for a consistent box.
    pub failures: Vec<String>,
}

pub fn equivalence_audit(b: &Behavior, tol: f64) -> EquivalenceAudit {
    let ns = is_no_signaling(b, tol);
    let s = sigma_values(b);
    let d = delta_values(b);
    let four = ch_values(b);
    let full = ch_values_full(b, MarginalChoice::default());
    let delta_identity =
        std::array::from_fn(|i| IdentityCheck::new(d.delta[i], 2.0 * (s.sigma[i] - 2.0), tol));
    let sum_identity =
        std::array::from_fn(|i| IdentityCheck::new(s.sigma[i] + s.sigma_prime[i], 4.0, tol));
    let ch_identity: [ChIdentity; 4] = std::array::from_fn(|i| {
        let predicted = (s.sigma[i] - 3.0) / 2.0;
        ChIdentity {
            predicted,
            four_term: IdentityCheck::new(four.b[i], predicted, tol),
            full: IdentityCheck::new(full.b[i], predicted, tol),
            asserted: ns,
        }
    });
    let mut failures = Vec::new();
    for i in 0..4 {
        let n = i + 1;
        if !delta_identity[i].holds {
            failures.push(format!("Delta{n} != 2(Sigma{n} - 2)"));
        }
        if !sum_identity[i].holds {
            failures.push(format!("Sigma{n} + Sigma'{n} != 4"));
        }
        if ns && !(ch_identity[i].four_term.holds && ch_identity[i].full.holds) {
            failures.push(format!("B{n} != (Sigma{n} - 3)/2 on a no-signaling box"));
        }
    }
    let ch_chsh_equivalent = ch_identity
        .iter()
        .all(|c| c.four_term.holds && c.full.holds);
    EquivalenceAudit {
        no_signaling: ns,
        delta_identity,
        sum_identity,
        ch_identity,
        ch_chsh_equivalent,
        failures,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SigmaShift {
    pub sigma_index: u8,
    pub primed: bool,
    pub pj: f64,
    /// The CHSH sum rewritten by the quadruple's relation; expected `1 - 2 pj`.
    pub family_sum: f64,
    /// Its partner (`Sigma` for `Sigma'` and vice versa); expected `3 + 2 pj`.
    pub complement_sum: f64,
    pub predicted_family: f64,
    pub predicted_complement: f64,
    pub holds: bool,
}

/// With `pk = pl = pm = 0`, one CHSH sum is pushed to `1 - 2 pj` and its
/// partner to `3 + 2 pj`.
pub fn sigma_shift_of_hardy(b: &Behavior, q: &HardyQuadruple, tol: f64) -> Result<SigmaShift> {
    if !crate::behavior::is_normalized(b, tol) || !is_no_signaling(b, tol) {
        return Err(Error::Precondition(
            "box must be normalized and no-signaling".into(),
        ));
    }
    if let Some(i) = q.klm().into_iter().find(|&i| b.p(i).abs() > tol) {
        return Err(Error::Precondition(format!(
            "p{i} = {} is not zero",
            b.p(i)
        )));
    }
    let s = sigma_values(b);
    let variant = q.variant();
    let family_sum = s.of_family(variant);
    let complement_sum = s.of_family(variant.inverse());
    let pj = b.p(q.j);
    let predicted_family = 1.0 - 2.0 * pj;
    let predicted_complement = 3.0 + 2.0 * pj;
    let holds = (family_sum - predicted_family).abs() <= tol * 16.0
        && (complement_sum - predicted_complement).abs() <= tol * 16.0;
    Ok(SigmaShift {
        sigma_index: q.sigma_index,
        primed: q.primed,
        pj,
        family_sum,
        complement_sum,
        predicted_family,
        predicted_complement,
        holds,
    })
}
