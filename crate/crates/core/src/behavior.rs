//! The 16-probability box of a two-party, two-setting, two-outcome experiment.
//!
//! Cells are numbered 1..=16. The setting pair `(a_j, b_k)` selects a block of
//! four consecutive cells, `(a1,b1)`, `(a1,b2)`, `(a2,b1)`, `(a2,b2)` in that
//! order, and within a block the outcome pairs run `(+,+)`, `(+,-)`, `(-,+)`,
//! `(-,-)`. Every other module addresses cells through [`index_of`].

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};

/// Default tolerance for normalization and no-signaling predicates.
pub const DEFAULT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Party {
    A,
    B,
}

/// Measurement setting index at one wing.
#[derive(
    Debug, Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize,
)]
pub enum Setting {
    #[default]
    One,
    Two,
}

impl Setting {
    pub const ALL: [Setting; 2] = [Setting::One, Setting::Two];

    pub fn from_index(index: u8) -> Option<Self> {
        match index {
            1 => Some(Setting::One),
            2 => Some(Setting::Two),
            _ => None,
        }
    }

    pub fn index(self) -> u8 {
        match self {
            Setting::One => 1,
            Setting::Two => 2,
        }
    }

    fn zero_based(self) -> usize {
        self.index() as usize - 1
    }
}

/// One of the four observables `a1`, `a2`, `b1`, `b2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SettingId {
    pub party: Party,
    pub setting: Setting,
}

impl SettingId {
    pub const ALL: [SettingId; 4] = [
        SettingId {
            party: Party::A,
            setting: Setting::One,
        },
        SettingId {
            party: Party::A,
            setting: Setting::Two,
        },
        SettingId {
            party: Party::B,
            setting: Setting::One,
        },
        SettingId {
            party: Party::B,
            setting: Setting::Two,
        },
    ];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Outcome {
    Plus,
    Minus,
}

impl Outcome {
    pub const ALL: [Outcome; 2] = [Outcome::Plus, Outcome::Minus];

    pub fn from_sign(value: i8) -> Option<Self> {
        match value {
            1 => Some(Outcome::Plus),
            -1 => Some(Outcome::Minus),
            _ => None,
        }
    }

    pub fn sign(self) -> i8 {
        match self {
            Outcome::Plus => 1,
            Outcome::Minus => -1,
        }
    }

    fn zero_based(self) -> usize {
        match self {
            Outcome::Plus => 0,
            Outcome::Minus => 1,
        }
    }
}

/// Cell number (1..=16) of `p(a_j = m, b_k = n)`.
pub fn index_of(a: Setting, b: Setting, out_a: Outcome, out_b: Outcome) -> usize {
    let block = 2 * a.zero_based() + b.zero_based();
    4 * block + 2 * out_a.zero_based() + out_b.zero_based() + 1
}

/// Inverse of [`index_of`].
pub fn cell_of(index: usize) -> (Setting, Setting, Outcome, Outcome) {
    assert!((1..=16).contains(&index), "cell index {index} out of range");
    let i = index - 1;
    let block = i / 4;
    let a = Setting::ALL[block / 2];
    let b = Setting::ALL[block % 2];
    let out_a = Outcome::ALL[(i % 4) / 2];
    let out_b = Outcome::ALL[i % 2];
    (a, b, out_a, out_b)
}

/// The block number (0..4) that contains the given 1-based cell.
pub fn block_of(index: usize) -> usize {
    (index - 1) / 4
}

/// Joint probabilities `p1..p16` of a box.
///
/// Entries may lie outside `[0, 1]` or fail normalization; such boxes are kept
/// so that the diagnostics can describe what is wrong with them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Behavior {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    probs: [f64; 16],
}

impl Behavior {
    pub fn new(probs: [f64; 16]) -> Result<Self> {
        if let Some((i, &value)) = probs.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFinite {
                index: i + 1,
                value,
            });
        }
        Ok(Self { label: None, probs })
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }

    pub fn uniform() -> Self {
        Self {
            label: None,
            probs: [0.25; 16],
        }
    }

    /// Deterministic local strategy assigning fixed outcomes to every observable.
    pub fn local_vertex(a1: Outcome, a2: Outcome, b1: Outcome, b2: Outcome) -> Self {
        let alice = [a1, a2];
        let bob = [b1, b2];
        let mut probs = [0.0; 16];
        for a in Setting::ALL {
            for b in Setting::ALL {
                let idx = index_of(a, b, alice[a.zero_based()], bob[b.zero_based()]);
                probs[idx - 1] = 1.0;
            }
        }
        Self { label: None, probs }
    }

    /// All 16 deterministic local strategies, ordered by `(a1, a2, b1, b2)`
    /// with `+` before `-`.
    pub fn local_vertices() -> Vec<Behavior> {
        let mut out = Vec::with_capacity(16);
        for a1 in Outcome::ALL {
            for a2 in Outcome::ALL {
                for b1 in Outcome::ALL {
                    for b2 in Outcome::ALL {
                        out.push(Self::local_vertex(a1, a2, b1, b2));
                    }
                }
            }
        }
        out
    }

    /// Convex mixture `sum_i w_i * b_i`. Weights are used as given.
    pub fn mixture(parts: &[(f64, &Behavior)]) -> Result<Self> {
        let mut probs = [0.0; 16];
        for (w, b) in parts {
            for (acc, p) in probs.iter_mut().zip(b.probs.iter()) {
                *acc += w * p;
            }
        }
        Self::new(probs)
    }

    pub fn probs(&self) -> &[f64; 16] {
        &self.probs
    }

    /// Probability of cell `index` (1-based).
    pub fn p(&self, index: usize) -> f64 {
        self.probs[index - 1]
    }

    pub fn cell(&self, a: Setting, b: Setting, out_a: Outcome, out_b: Outcome) -> f64 {
        self.p(index_of(a, b, out_a, out_b))
    }

    /// The four cells of the `(a, b)` block in `(+,+), (+,-), (-,+), (-,-)` order.
    pub fn block(&self, a: Setting, b: Setting) -> [f64; 4] {
        let start = index_of(a, b, Outcome::Plus, Outcome::Plus) - 1;
        [
            self.probs[start],
            self.probs[start + 1],
            self.probs[start + 2],
            self.probs[start + 3],
        ]
    }

    /// Parse the Behavior JSON schema: `{"label": "...", "probs": [16 numbers]}`.
    pub fn from_json_str(text: &str) -> Result<Self> {
        let value: Value = serde_json::from_str(text)
            .map_err(|e| Error::Schema(format!("malformed JSON: {e}")))?;
        Self::from_json_value(&value)
    }

    pub fn from_json_value(value: &Value) -> Result<Self> {
        let obj = value
            .as_object()
            .ok_or_else(|| Error::Schema("top level must be an object".into()))?;
        if let Some(key) = obj.keys().find(|k| *k != "probs" && *k != "label") {
            return Err(Error::Schema(format!("unknown field `{key}`")));
        }
        let label = match obj.get("label") {
            None | Some(Value::Null) => None,
            Some(Value::String(s)) => Some(s.clone()),
            Some(_) => return Err(Error::Schema("field `label` must be a string".into())),
        };
        let probs = obj
            .get("probs")
            .ok_or_else(|| Error::Schema("missing field `probs`".into()))?
            .as_array()
            .ok_or_else(|| Error::Schema("field `probs` must be an array".into()))?;
        if probs.len() != 16 {
            return Err(Error::Schema(format!(
                "field `probs` must hold 16 numbers, found {}",
                probs.len()
            )));
        }
        let mut out = [0.0; 16];
        for (i, v) in probs.iter().enumerate() {
            out[i] = v.as_f64().ok_or_else(|| {
                Error::Schema(format!("field `probs[{i}]` (p{}) is not a number", i + 1))
            })?;
        }
        let mut b = Self::new(out)?;
        b.label = label;
        Ok(b)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string(self).expect("behavior serializes")
    }
}

/// True iff every entry lies in `[0, 1]` (exact comparison).
pub fn is_valid(b: &Behavior) -> bool {
    b.probs.iter().all(|p| (0.0..=1.0).contains(p))
}

/// Sum of each setting-pair block, in block order.
pub fn block_sums(b: &Behavior) -> [f64; 4] {
    let mut sums = [0.0; 4];
    for (i, p) in b.probs.iter().enumerate() {
        sums[i / 4] += p;
    }
    sums
}

pub fn is_normalized(b: &Behavior, tol: f64) -> bool {
    block_sums(b).iter().all(|s| (s - 1.0).abs() <= tol)
}

/// Single-party marginals, each computed from both possible remote settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Marginals {
    /// `alice[j][m][k]` = p(a_j = m) summed over the `(a_j, b_k)` block.
    pub alice: [[[f64; 2]; 2]; 2],
    /// `bob[k][n][j]` = p(b_k = n) summed over the `(a_j, b_k)` block.
    pub bob: [[[f64; 2]; 2]; 2],
}

impl Marginals {
    pub fn alice(&self, setting: Setting, outcome: Outcome, remote: Setting) -> f64 {
        self.alice[setting.zero_based()][outcome.zero_based()][remote.zero_based()]
    }

    pub fn bob(&self, setting: Setting, outcome: Outcome, remote: Setting) -> f64 {
        self.bob[setting.zero_based()][outcome.zero_based()][remote.zero_based()]
    }

    /// Differences between the two remote-setting variants, in the order of the
    /// signaling rows of the locality system: a1+, a1-, a2+, a2-, b1+, b1-, b2+, b2-.
    pub fn signaling_gaps(&self) -> [f64; 8] {
        let mut gaps = [0.0; 8];
        let mut i = 0;
        for s in Setting::ALL {
            for o in Outcome::ALL {
                gaps[i] = self.alice(s, o, Setting::One) - self.alice(s, o, Setting::Two);
                i += 1;
            }
        }
        for s in Setting::ALL {
            for o in Outcome::ALL {
                gaps[i] = self.bob(s, o, Setting::One) - self.bob(s, o, Setting::Two);
                i += 1;
            }
        }
        gaps
    }
}

pub fn marginals(b: &Behavior) -> Marginals {
    let mut alice = [[[0.0; 2]; 2]; 2];
    let mut bob = [[[0.0; 2]; 2]; 2];
    for sa in Setting::ALL {
        for sb in Setting::ALL {
            for oa in Outcome::ALL {
                for ob in Outcome::ALL {
                    let p = b.cell(sa, sb, oa, ob);
                    alice[sa.zero_based()][oa.zero_based()][sb.zero_based()] += p;
                    bob[sb.zero_based()][ob.zero_based()][sa.zero_based()] += p;
                }
            }
        }
    }
    Marginals { alice, bob }
}

/// True iff all eight marginal pairs agree within `tol`.
pub fn is_no_signaling(b: &Behavior, tol: f64) -> bool {
    marginals(b).signaling_gaps().iter().all(|g| g.abs() <= tol)
}

/// Correlation coefficient `c(a_j, b_k)`.
pub fn correlation(b: &Behavior, a: Setting, bs: Setting) -> f64 {
    let [pp, pm, mp, mm] = b.block(a, bs);
    pp + mm - pm - mp
}

/// The four correlation coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrelationVector {
    pub c11: f64,
    pub c12: f64,
    pub c21: f64,
    pub c22: f64,
}

impl CorrelationVector {
    pub fn as_array(&self) -> [f64; 4] {
        [self.c11, self.c12, self.c21, self.c22]
    }
}

pub fn correlations(b: &Behavior) -> CorrelationVector {
    use Setting::{One, Two};
    CorrelationVector {
        c11: correlation(b, One, One),
        c12: correlation(b, One, Two),
        c21: correlation(b, Two, One),
        c22: correlation(b, Two, Two),
    }
}
