//! Everything the library can say about a single box, bundled for output.

use serde::Serialize;

use crate::behavior::{self, Behavior, CorrelationVector, Marginals};
use crate::bell::{
    self, BoundCheck, ChReport, ChshReport, EquivalenceAudit, HardyQuadruple, ViolationReport,
};
use crate::locality::{self, ConstraintResiduals, SideChecks};

#[derive(Debug, Clone, Serialize)]
pub struct EvaluationReport {
    pub label: Option<String>,
    pub probs: [f64; 16],
    pub valid: bool,
    pub block_sums: [f64; 4],
    pub normalized: bool,
    pub no_signaling: bool,
    pub residuals: ConstraintResiduals,
    pub max_residual: f64,
    pub marginals: Marginals,
    pub correlations: CorrelationVector,
    pub chsh: ChshReport,
    pub ch: ChReport,
    pub hardy: ViolationReport,
    pub witnesses: Vec<HardyQuadruple>,
    pub side_checks: SideChecks,
    pub audit: EquivalenceAudit,
}

impl EvaluationReport {
    /// Validity, normalization and no-signaling all hold.
    pub fn physical(&self) -> bool {
        self.valid && self.normalized && self.no_signaling
    }

    /// A few lines for people rather than scripts.
    pub fn summary(&self) -> String {
        let mut out = String::new();
        let name = self.label.as_deref().unwrap_or("(unlabeled box)");
        let yn = |b: bool| if b { "yes" } else { "no" };
        out.push_str(&format!("{name}\n"));
        out.push_str(&format!(
            "  valid: {}  normalized: {}  no-signaling: {} (max residual {:e})\n",
            yn(self.valid),
            yn(self.normalized),
            yn(self.no_signaling),
            self.max_residual
        ));
        let row = |checks: &[BoundCheck; 4]| {
            checks
                .iter()
                .map(|c| format!("{:.6}", c.value))
                .collect::<Vec<_>>()
                .join(" ")
        };
        out.push_str(&format!("  Sigma:  {}\n", row(&self.chsh.sigma)));
        out.push_str(&format!("  Sigma': {}\n", row(&self.chsh.sigma_prime)));
        out.push_str(&format!("  Delta:  {}\n", row(&self.chsh.delta)));
        out.push_str(&format!("  B (four-term): {}\n", row(&self.ch.four_term)));
        out.push_str(&format!("  B (full form): {}\n", row(&self.ch.full)));
        let h = &self.hardy.summary;
        out.push_str(&format!(
            "  Hardy inequalities: {} violated ({} lower, {} upper), {} satisfied\n",
            h.violated, h.violated_lower, h.violated_upper, h.satisfied
        ));
        for q in &self.witnesses {
            out.push_str(&format!("  Hardy witness: {}\n", q.display()));
        }
        if !self.audit.failures.is_empty() {
            out.push_str(&format!(
                "  equivalence audit failures: {}\n",
                self.audit.failures.join(", ")
            ));
        }
        out
    }
}

pub fn evaluate(b: &Behavior, tol: f64, eps: f64) -> EvaluationReport {
    let residuals = locality::constraint_residuals(b);
    EvaluationReport {
        label: b.label.clone(),
        probs: *b.probs(),
        valid: behavior::is_valid(b),
        block_sums: behavior::block_sums(b),
        normalized: behavior::is_normalized(b, tol),
        no_signaling: behavior::is_no_signaling(b, tol),
        max_residual: residuals.max_abs(),
        residuals,
        marginals: behavior::marginals(b),
        correlations: behavior::correlations(b),
        chsh: bell::chsh_check(b, tol),
        ch: bell::ch_check(b, tol),
        hardy: bell::hardy_check(b, tol),
        witnesses: bell::hardy_witness(b, eps),
        side_checks: locality::nonneg_side_checks(b),
        audit: bell::equivalence_audit(b, tol),
    }
}
