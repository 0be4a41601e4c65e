//! Finite-run experiments: sampling trials from a box, estimating cell
//! frequencies, and testing Hardy inequalities and no-signaling on the
//! estimates.
//!
//! Randomness comes from ChaCha8 seeded with `seed_from_u64(seed)`. Stream 0
//! picks the settings, and stream `1 + block` draws the outcomes of the block
//! `(a_j, b_k)`, block numbered `2(j-1) + (k-1)`. Each block therefore sees the
//! same outcome sequence whatever the setting policy does.

use std::io::{Read, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::behavior::{self, Behavior, Outcome, Party, Setting};
use crate::bell::HardyQuadruple;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SettingPolicy {
    #[default]
    UniformRandom,
    /// Cycles (a1,b1), (a1,b2), (a2,b1), (a2,b2).
    RoundRobin,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrialRecord {
    pub setting_a: Setting,
    pub setting_b: Setting,
    pub outcome_a: Outcome,
    pub outcome_b: Outcome,
}

impl TrialRecord {
    pub fn block(&self) -> usize {
        2 * self.setting_a.index() as usize + self.setting_b.index() as usize - 3
    }

    pub fn cell(&self) -> usize {
        behavior::index_of(
            self.setting_a,
            self.setting_b,
            self.outcome_a,
            self.outcome_b,
        )
    }
}

fn settings_of_block(block: usize) -> (Setting, Setting) {
    (Setting::ALL[block / 2], Setting::ALL[block % 2])
}

/// Position of `u` in the cumulative distribution of `block`, never landing on
/// a zero-probability cell.
fn draw(block: &[f64], u: f64) -> usize {
    let total: f64 = block.iter().sum();
    let target = u * total;
    let mut acc = 0.0;
    let mut last = 0;
    for (k, &p) in block.iter().enumerate() {
        if p > 0.0 {
            acc += p;
            last = k;
            if target < acc {
                return k;
            }
        }
    }
    last
}

pub fn simulate(
    b: &Behavior,
    n_trials: usize,
    seed: u64,
    policy: SettingPolicy,
) -> Result<Vec<TrialRecord>> {
    if !behavior::is_valid(b) {
        return Err(Error::InvalidBehavior("entries must lie in [0, 1]".into()));
    }
    if !behavior::is_normalized(b, 1e-9) {
        return Err(Error::InvalidBehavior(
            "each block must sum to 1 within 1e-9".into(),
        ));
    }
    if n_trials == 0 {
        return Err(Error::Precondition("n_trials must be positive".into()));
    }
    let mut chooser = ChaCha8Rng::seed_from_u64(seed);
    chooser.set_stream(0);
    let mut outcome_rngs: Vec<ChaCha8Rng> = (0..4)
        .map(|k| {
            let mut r = ChaCha8Rng::seed_from_u64(seed);
            r.set_stream(1 + k);
            r
        })
        .collect();

    let mut trials = Vec::with_capacity(n_trials);
    for t in 0..n_trials {
        let block = match policy {
            SettingPolicy::UniformRandom => chooser.random_range(0..4usize),
            SettingPolicy::RoundRobin => t % 4,
        };
        let u: f64 = outcome_rngs[block].random();
        let k = draw(&b.probs()[4 * block..4 * block + 4], u);
        let (setting_a, setting_b) = settings_of_block(block);
        trials.push(TrialRecord {
            setting_a,
            setting_b,
            outcome_a: Outcome::ALL[k / 2],
            outcome_b: Outcome::ALL[k % 2],
        });
    }
    Ok(trials)
}

/// Wilson score interval for `count` successes in `n` trials.
pub fn wilson_interval(count: u64, n: u64, z: f64) -> (f64, f64) {
    let (c, n) = (count as f64, n as f64);
    let p = c / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((center - half).max(0.0), (center + half).min(1.0))
}

/// Half-width of the one-sigma Wilson interval.
pub fn wilson_stderr(count: u64, n: u64) -> f64 {
    let (c, n) = (count as f64, n as f64);
    let p = c / n;
    (p * (1.0 - p) / n + 1.0 / (4.0 * n * n)).sqrt() / (1.0 + 1.0 / n)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleStats {
    pub counts: [u64; 16],
    pub trials_per_block: [u64; 4],
    pub freq: [f64; 16],
    pub stderr: [f64; 16],
}

impl SampleStats {
    pub fn from_counts(counts: [u64; 16]) -> Result<Self> {
        let mut trials_per_block = [0u64; 4];
        for (i, c) in counts.iter().enumerate() {
            trials_per_block[i / 4] += c;
        }
        for (blk, &n) in trials_per_block.iter().enumerate() {
            if n == 0 {
                let (a, b) = settings_of_block(blk);
                return Err(Error::EmptyBlock(a.index(), b.index()));
            }
        }
        let mut freq = [0.0; 16];
        let mut stderr = [0.0; 16];
        for i in 0..16 {
            let n = trials_per_block[i / 4];
            freq[i] = counts[i] as f64 / n as f64;
            stderr[i] = wilson_stderr(counts[i], n);
        }
        Ok(Self {
            counts,
            trials_per_block,
            freq,
            stderr,
        })
    }

    /// The empirical box (normalized per block by construction).
    pub fn behavior(&self) -> Result<Behavior> {
        Behavior::new(self.freq)
    }
}

pub fn estimate(trials: &[TrialRecord]) -> Result<SampleStats> {
    let mut counts = [0u64; 16];
    for t in trials {
        counts[t.cell() - 1] += 1;
    }
    SampleStats::from_counts(counts)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Decision {
    Violated,
    NotViolated,
    /// Every relevant count is zero, so the data say nothing about the slack.
    Inconclusive,
}

#[derive(Debug, Clone, Serialize)]
pub struct StatTestResult {
    pub quadruple: HardyQuadruple,
    /// Estimate of (pk + pl + pm) - pj.
    pub point_estimate: f64,
    pub standard_error: f64,
    pub z_score: f64,
    pub alpha: f64,
    pub z_critical: f64,
    pub decision: Decision,
}

fn standard_normal() -> Normal {
    Normal::new(0.0, 1.0).expect("unit normal")
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::Precondition(format!(
            "alpha must lie in (0, 1), got {alpha}"
        )))
    }
}

/// One-sided z test of the lower Hardy bound. The four cells sit in four
/// different blocks, so their estimates are independent and the variances add.
pub fn test_inequality(
    stats: &SampleStats,
    q: &HardyQuadruple,
    alpha: f64,
) -> Result<StatTestResult> {
    check_alpha(alpha)?;
    let cells = [q.j, q.k, q.l, q.m];
    let slack = q.klm().iter().map(|&i| stats.freq[i - 1]).sum::<f64>() - stats.freq[q.j - 1];
    let standard_error = cells
        .iter()
        .map(|&i| stats.stderr[i - 1].powi(2))
        .sum::<f64>()
        .sqrt();
    let z_critical = standard_normal().inverse_cdf(1.0 - alpha);
    let z_score = if standard_error > 0.0 {
        slack / standard_error
    } else {
        0.0
    };
    let decision = if cells.iter().all(|&i| stats.counts[i - 1] == 0) {
        Decision::Inconclusive
    } else if z_score < -z_critical {
        Decision::Violated
    } else {
        Decision::NotViolated
    };
    Ok(StatTestResult {
        quadruple: *q,
        point_estimate: slack,
        standard_error,
        z_score,
        alpha,
        z_critical,
        decision,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct SignalingTest {
    /// The party whose marginal is compared.
    pub party: Party,
    pub setting: Setting,
    pub outcome: Outcome,
    /// Marginal frequency with the remote party on setting 1, then 2.
    pub freq: [f64; 2],
    pub trials: [u64; 2],
    pub gap: f64,
    pub z_score: f64,
    pub p_value: f64,
    pub significant: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct SignalingReport {
    pub alpha: f64,
    /// Bonferroni-corrected level used for each of the eight tests.
    pub per_test_alpha: f64,
    pub tests: Vec<SignalingTest>,
    pub signaling_detected: bool,
}

/// Two-proportion z tests of the eight marginal equalities, in the order of
/// the signaling rows of the locality system.
pub fn test_signaling(stats: &SampleStats, alpha: f64) -> Result<SignalingReport> {
    check_alpha(alpha)?;
    let per_test_alpha = alpha / 8.0;
    let normal = standard_normal();
    let mut tests = Vec::with_capacity(8);
    for party in [Party::A, Party::B] {
        for setting in Setting::ALL {
            for outcome in Outcome::ALL {
                let mut x = [0u64; 2];
                let mut n = [0u64; 2];
                for (r, remote) in Setting::ALL.into_iter().enumerate() {
                    let (sa, sb) = match party {
                        Party::A => (setting, remote),
                        Party::B => (remote, setting),
                    };
                    for other in Outcome::ALL {
                        let (oa, ob) = match party {
                            Party::A => (outcome, other),
                            Party::B => (other, outcome),
                        };
                        x[r] += stats.counts[behavior::index_of(sa, sb, oa, ob) - 1];
                    }
                    let blk = behavior::block_of(behavior::index_of(
                        sa,
                        sb,
                        Outcome::Plus,
                        Outcome::Plus,
                    ));
                    n[r] = stats.trials_per_block[blk];
                }
                let f = [x[0] as f64 / n[0] as f64, x[1] as f64 / n[1] as f64];
                let pooled = (x[0] + x[1]) as f64 / (n[0] + n[1]) as f64;
                let se = (pooled * (1.0 - pooled) * (1.0 / n[0] as f64 + 1.0 / n[1] as f64)).sqrt();
                let gap = f[0] - f[1];
                let z_score = if se > 0.0 { gap / se } else { 0.0 };
                let p_value = 2.0 * (1.0 - normal.cdf(z_score.abs()));
                tests.push(SignalingTest {
                    party,
                    setting,
                    outcome,
                    freq: f,
                    trials: n,
                    gap,
                    z_score,
                    p_value,
                    significant: p_value < per_test_alpha,
                });
            }
        }
    }
    let signaling_detected = tests.iter().any(|t| t.significant);
    Ok(SignalingReport {
        alpha,
        per_test_alpha,
        tests,
        signaling_detected,
    })
}

pub const CSV_HEADER: [&str; 4] = ["settingA", "settingB", "outcomeA", "outcomeB"];

fn outcome_text(o: Outcome) -> &'static str {
    match o {
        Outcome::Plus => "+1",
        Outcome::Minus => "-1",
    }
}

pub fn write_trials_csv<W: Write>(out: W, trials: &[TrialRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for t in trials {
        w.write_record([
            t.setting_a.index().to_string().as_str(),
            t.setting_b.index().to_string().as_str(),
            outcome_text(t.outcome_a),
            outcome_text(t.outcome_b),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_trials_csv<R: Read>(input: R) -> Result<Vec<TrialRecord>> {
    let mut r = csv::Reader::from_reader(input);
    let header = r.headers()?.clone();
    if header.iter().map(str::trim).ne(CSV_HEADER) {
        return Err(Error::Schema(format!(
            "expected header {}",
            CSV_HEADER.join(",")
        )));
    }
    let mut trials = Vec::new();
    for (row, rec) in r.records().enumerate() {
        let rec = rec?;
        let line = row + 2;
        let field = |k: usize| rec.get(k).map(str::trim).unwrap_or("");
        let setting = |k: usize| {
            field(k)
                .parse::<u8>()
                .ok()
                .and_then(Setting::from_index)
                .ok_or_else(|| {
                    Error::Schema(format!(
                        "line {line}: {} must be 1 or 2, got {:?}",
                        CSV_HEADER[k],
                        field(k)
                    ))
                })
        };
        let outcome = |k: usize| {
            field(k)
                .parse::<i8>()
                .ok()
                .and_then(Outcome::from_sign)
                .ok_or_else(|| {
                    Error::Schema(format!(
                        "line {line}: {} must be +1 or -1, got {:?}",
                        CSV_HEADER[k],
                        field(k)
                    ))
                })
        };
        trials.push(TrialRecord {
            setting_a: setting(0)?,
            setting_b: setting(1)?,
            outcome_a: outcome(2)?,
            outcome_b: outcome(3)?,
        });
    }
    Ok(trials)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn stream_test_vectors() {
        let mut r = ChaCha8Rng::seed_from_u64(42);
        r.set_stream(0);
        let a: [u64; 3] = [r.random(), r.random(), r.random()];
        let mut r = ChaCha8Rng::seed_from_u64(42);
        r.set_stream(3);
        let b: [u64; 3] = [r.random(), r.random(), r.random()];
        assert_eq!(a, STREAM0_SEED42);
        assert_eq!(b, STREAM3_SEED42);
    }

    const STREAM0_SEED42: [u64; 3] = [
        12578764544318200737,
        17529487244874322312,
        7886285670807131020,
    ];
    const STREAM3_SEED42: [u64; 3] = [
        6672028999979260041,
        10928159205316631748,
        13467973396282439615,
    ];

    #[test]
    fn draw_skips_empty_cells() {
        assert_eq!(draw(&[0.0, 1.0, 0.0, 0.0], 0.0), 1);
        assert_eq!(draw(&[0.0, 1.0, 0.0, 0.0], 0.999_999_999), 1);
        assert_eq!(draw(&[0.5, 0.0, 0.0, 0.5], 0.5), 3);
        assert_eq!(draw(&[0.25; 4], 0.3), 1);
    }

    #[test]
    fn deterministic_block() {
        let b = Behavior::local_vertex(Outcome::Plus, Outcome::Minus, Outcome::Plus, Outcome::Plus);
        let trials = simulate(&b, 1000, 5, SettingPolicy::UniformRandom).unwrap();
        for t in trials
            .iter()
            .filter(|t| t.setting_a == Setting::One && t.setting_b == Setting::One)
        {
            assert_eq!((t.outcome_a, t.outcome_b), (Outcome::Plus, Outcome::Plus));
        }
    }

    #[test]
    fn round_robin_splits_evenly() {
        let trials = simulate(&Behavior::uniform(), 403, 1, SettingPolicy::RoundRobin).unwrap();
        let s = estimate(&trials).unwrap();
        assert_eq!(s.trials_per_block, [101, 101, 101, 100]);
    }

    #[test]
    fn rejects_bad_input() {
        let mut p = *Behavior::uniform().probs();
        p[0] = 0.3;
        let b = Behavior::new(p).unwrap();
        assert!(matches!(
            simulate(&b, 10, 0, SettingPolicy::RoundRobin),
            Err(Error::InvalidBehavior(_))
        ));
        assert!(simulate(&Behavior::uniform(), 0, 0, SettingPolicy::RoundRobin).is_err());
    }

    #[test]
    fn synthetic_counts() {
        let mut c = [25u64; 16];
        c[12] = 9;
        c[13] = 91;
        c[14] = 0;
        c[15] = 0;
        let s = SampleStats::from_counts(c).unwrap();
        assert_abs_diff_eq!(s.freq[12], 0.09, epsilon = 1e-15);
        assert_abs_diff_eq!(s.freq[13], 0.91, epsilon = 1e-15);
        assert_eq!(s.trials_per_block[3], 100);
    }

    #[test]
    fn empty_block_reported() {
        let mut c = [1u64; 16];
        for k in 4..8 {
            c[k] = 0;
        }
        assert!(matches!(
            SampleStats::from_counts(c),
            Err(Error::EmptyBlock(1, 2))
        ));
    }

    #[test]
    fn wilson_all_successes() {
        let n = 1000;
        let (lo, hi) = wilson_interval(n, n, 1.0);
        assert_eq!(hi, 1.0);
        assert!(lo > 1.0 - 2.0 / n as f64 && lo < 1.0);
        // Matches the textbook closed form at z = 1.
        assert_abs_diff_eq!(
            wilson_stderr(30, 100),
            (0.3 * 0.7 / 100.0 + 1.0 / 40000.0f64).sqrt() / 1.01,
            epsilon = 1e-15
        );
    }

    #[test]
    fn csv_roundtrip() {
        let trials = simulate(&Behavior::uniform(), 50, 9, SettingPolicy::UniformRandom).unwrap();
        let mut buf = Vec::new();
        write_trials_csv(&mut buf, &trials).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("settingA,settingB,outcomeA,outcomeB\n"));
        assert_eq!(read_trials_csv(buf.as_slice()).unwrap(), trials);
        let bad = "settingA,settingB,outcomeA,outcomeB\n1,3,+1,-1\n";
        assert!(
            matches!(read_trials_csv(bad.as_bytes()), Err(Error::Schema(m)) if m.contains("line 2"))
        );
    }
}
