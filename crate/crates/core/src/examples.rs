//! The reference boxes used throughout the tests and by the CLI, with the
//! quantities each is known to produce.
//!
//! The probabilities live as Behavior JSON files under `data/`. They are
//! compiled in here, and the CLI reads the same files from disk.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::behavior::{self, Behavior};
use crate::bell::{self, HardyQuadruple, MarginalChoice};
use crate::error::{Error, Result};
use crate::locality;

pub const PR_BOX_FILE: &str = "pr_box.json";
pub const MERMIN_FILE: &str = "mermin_example.json";
pub const KWIAT_HARDY_FILE: &str = "kwiat_hardy.json";
pub const HARDY_PATTERN_FILES: [&str; 2] = [
    "hardy_pattern_1_6_11_13.json",
    "hardy_pattern_1_6_9_15.json",
];

const PR_BOX_JSON: &str = include_str!("../data/pr_box.json");
const MERMIN_JSON: &str = include_str!("../data/mermin_example.json");
const KWIAT_HARDY_JSON: &str = include_str!("../data/kwiat_hardy.json");
const HARDY_PATTERN_JSON: [&str; 2] = [
    include_str!("../data/hardy_pattern_1_6_11_13.json"),
    include_str!("../data/hardy_pattern_1_6_9_15.json"),
];

/// Where the CLI looks for the data files: `$HARDYBOX_DATA_DIR`, else the
/// directory shipped with this crate.
pub fn data_dir() -> PathBuf {
    std::env::var_os("HARDYBOX_DATA_DIR")
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(concat!(env!("CARGO_MANIFEST_DIR"), "/data")))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Expected {
    Value(f64),
    Flag(bool),
    Count(usize),
    /// A Hardy quadruple as (j, k, l, m).
    Quadruple([usize; 4]),
}

#[derive(Debug, Clone, Serialize)]
pub struct NamedBox {
    pub label: String,
    pub file: &'static str,
    pub behavior: Behavior,
    pub expected: BTreeMap<&'static str, Expected>,
}

fn parse(json: &str) -> Behavior {
    Behavior::from_json_str(json).expect("bundled data file is well formed")
}

fn named(file: &'static str, json: &str, expected: &[(&'static str, Expected)]) -> NamedBox {
    let behavior = parse(json);
    NamedBox {
        label: behavior.label.clone().unwrap_or_else(|| file.to_string()),
        file,
        behavior,
        expected: expected.iter().copied().collect(),
    }
}

pub fn pr_box() -> NamedBox {
    named(
        PR_BOX_FILE,
        PR_BOX_JSON,
        &[
            ("sigma1", Expected::Value(4.0)),
            ("b1", Expected::Value(0.5)),
            ("no_signaling", Expected::Flag(true)),
        ],
    )
}

pub fn mermin_example_box() -> NamedBox {
    named(
        MERMIN_FILE,
        MERMIN_JSON,
        &[
            ("sigma1", Expected::Value(0.82)),
            ("sigma1_prime", Expected::Value(3.18)),
            ("witness", Expected::Quadruple([13, 4, 5, 9])),
            ("violated", Expected::Count(16)),
            ("satisfied", Expected::Count(48)),
            ("violated_in_sigma1_family", Expected::Count(16)),
            ("no_signaling", Expected::Flag(true)),
        ],
    )
}

pub fn kwiat_hardy_box() -> NamedBox {
    named(
        KWIAT_HARDY_FILE,
        KWIAT_HARDY_JSON,
        &[
            ("sigma1", Expected::Value(4.0)),
            ("b1_full", Expected::Value(1.0)),
            ("no_signaling", Expected::Flag(false)),
        ],
    )
}

fn pattern_quadruples() -> [HardyQuadruple; 2] {
    [
        HardyQuadruple::find(2, 1).expect("quadruple (1; 6,11,13)"),
        HardyQuadruple::find(4, 1).expect("quadruple (1; 6,9,15)"),
    ]
}

/// The two patterns that differ only in the sign of the a2 outcome.
pub fn hardy_pattern_boxes() -> Vec<NamedBox> {
    pattern_quadruples()
        .iter()
        .zip(HARDY_PATTERN_FILES)
        .zip(HARDY_PATTERN_JSON)
        .map(|((q, file), json)| {
            named(
                file,
                json,
                &[
                    ("witness", Expected::Quadruple([q.j, q.k, q.l, q.m])),
                    ("pj", Expected::Value(0.09)),
                    ("no_signaling", Expected::Flag(true)),
                ],
            )
        })
        .collect()
}

pub fn all() -> Vec<NamedBox> {
    let mut v = vec![pr_box(), mermin_example_box(), kwiat_hardy_box()];
    v.extend(hardy_pattern_boxes());
    v
}

/// A no-signaling box with pk = pl = pm = 0 and the given pj, completed from
/// the quadruple's own free set with every other free cell equal.
pub fn hardy_pattern_construction(q: &HardyQuadruple, pj: f64) -> Result<Behavior> {
    let variant = q.variant();
    let rel = variant
        .relations()
        .iter()
        .find(|r| r.solved == q.j)
        .ok_or_else(|| {
            Error::Precondition(format!("p{} is not solved by {}", q.j, variant.flag_name()))
        })?;
    let free = variant.free();
    let negatives = free
        .iter()
        .zip(rel.terms)
        .filter(|(i, s)| !q.klm().contains(i) && *s < 0)
        .count();
    if negatives == 0 {
        return Err(Error::Precondition(
            "relation has no negative free terms".into(),
        ));
    }
    // pj = (1 - negatives * v) / 2
    let v = (1.0 - 2.0 * pj) / negatives as f64;
    let values = free.map(|i| if q.klm().contains(&i) { 0.0 } else { v });
    let b = locality::complete_from_free_set(values, variant)?;
    if !behavior::is_valid(&b) {
        return Err(Error::InvalidBehavior(format!(
            "completion for pj = {pj} has entries outside [0, 1]"
        )));
    }
    Ok(b.with_label(format!("Hardy pattern ({}; {},{},{})", q.j, q.k, q.l, q.m)))
}

#[derive(Debug, Clone, Serialize)]
pub struct ExpectationCheck {
    pub name: &'static str,
    pub expected: Expected,
    pub actual: Expected,
    pub ok: bool,
}

/// Recompute every expected quantity of `nb` from the analysis modules.
pub fn verify(nb: &NamedBox, tol: f64) -> Vec<ExpectationCheck> {
    let b = &nb.behavior;
    let report = bell::hardy_check(b, bell::DEFAULT_VIOLATION_TOL);
    nb.expected
        .iter()
        .map(|(&name, &expected)| {
            let actual = match name {
                "sigma1" => Expected::Value(bell::sigma_values(b).sigma[0]),
                "sigma1_prime" => Expected::Value(bell::sigma_values(b).sigma_prime[0]),
                "b1" => Expected::Value(bell::ch_values(b).b[0]),
                "b1_full" => {
                    Expected::Value(bell::ch_values_full(b, MarginalChoice::default()).b[0])
                }
                "no_signaling" => {
                    Expected::Flag(behavior::is_no_signaling(b, behavior::DEFAULT_TOL))
                }
                "violated" => Expected::Count(report.summary.violated),
                "satisfied" => Expected::Count(report.summary.satisfied),
                "violated_in_sigma1_family" => Expected::Count(report.summary.per_sigma[0]),
                "pj" => match expected {
                    Expected::Value(_) => match nb.expected.get("witness") {
                        Some(Expected::Quadruple(q)) => Expected::Value(b.p(q[0])),
                        _ => Expected::Flag(false),
                    },
                    _ => Expected::Flag(false),
                },
                "witness" => match expected {
                    Expected::Quadruple(want) => {
                        let found = bell::hardy_witness(b, bell::DEFAULT_WITNESS_EPS)
                            .into_iter()
                            .map(|q| [q.j, q.k, q.l, q.m])
                            .find(|q| *q == want);
                        found
                            .map(Expected::Quadruple)
                            .unwrap_or(Expected::Flag(false))
                    }
                    _ => Expected::Flag(false),
                },
                _ => Expected::Flag(false),
            };
            let ok = match (expected, actual) {
                (Expected::Value(x), Expected::Value(y)) => (x - y).abs() <= tol,
                (x, y) => x == y,
            };
            ExpectationCheck {
                name,
                expected,
                actual,
                ok,
            }
        })
        .collect()
}

/// Read one of the data files from `dir`.
pub fn load(dir: &Path, file: &str) -> Result<Behavior> {
    let text = std::fs::read_to_string(dir.join(file))?;
    Behavior::from_json_str(&text)
}
