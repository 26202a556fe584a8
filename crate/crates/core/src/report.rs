use std::fmt;

/// Whether a report states an equality or a one-sided bound `lhs ≤ rhs`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReportKind {
    Identity,
    Inequality,
}

/// Which side of the balance a term belongs to. `Aux` terms are diagnostics
/// that enter neither side.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Lhs,
    Rhs,
    Aux,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Term {
    pub name: String,
    pub side: Side,
    pub value: f64,
}

/// A secondary pass/fail check attached to a report (pointwise claims,
/// sign conditions, fit quality).
#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub passed: bool,
}

/// Both sides of one identity or inequality, with the named terms that make
/// them up.
#[derive(Clone, Debug, PartialEq)]
pub struct BalanceReport {
    pub name: String,
    pub kind: ReportKind,
    pub lhs: f64,
    pub rhs: f64,
    /// `lhs − rhs`.
    pub residual: f64,
    /// `rhs − lhs`; nonnegative when an inequality holds.
    pub margin: f64,
    pub terms: Vec<Term>,
    /// `(base cells per axis, residual)` from coarse to fine.
    pub refinement_history: Vec<(usize, f64)>,
    pub checks: Vec<Check>,
    pub warnings: Vec<String>,
    /// Accumulated adaptive-quadrature error estimate, weighted as the terms.
    pub error_bound: f64,
}

impl BalanceReport {
    /// Sum of the magnitudes of the lhs and rhs terms; the reference size
    /// for relative residuals, robust to both sides vanishing.
    pub fn scale(&self) -> f64 {
        self.terms.iter().filter(|t| t.side != Side::Aux).map(|t| t.value.abs()).sum()
    }

    pub fn relative_residual(&self) -> f64 {
        self.residual.abs() / self.scale().max(f64::MIN_POSITIVE)
    }

    pub fn term(&self, name: &str) -> Option<f64> {
        self.terms.iter().find(|t| t.name == name).map(|t| t.value)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    /// Identity: `|residual| ≤ tol·scale`. Inequality: `margin ≥ −tol·scale`.
    /// All attached checks must pass as well.
    pub fn holds(&self, tol: f64) -> bool {
        let main = match self.kind {
            ReportKind::Identity => self.residual.abs() <= tol * self.scale(),
            ReportKind::Inequality => self.margin >= -tol * self.scale(),
        };
        main && self.checks.iter().all(|c| c.passed)
    }

    /// The quantity a verifier compares against its tolerance.
    pub fn headline(&self) -> f64 {
        match self.kind {
            ReportKind::Identity => self.residual,
            ReportKind::Inequality => self.margin,
        }
    }
}

impl fmt::Display for BalanceReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: lhs {:.12e} rhs {:.12e} ", self.name, self.lhs, self.rhs)?;
        match self.kind {
            ReportKind::Identity => write!(f, "residual {:.3e} (relative {:.3e})", self.residual, self.relative_residual()),
            ReportKind::Inequality => write!(f, "margin {:.6e}", self.margin),
        }
    }
}

/// Accumulates terms; `lhs` and `rhs` are the ordered sums of their terms.
pub(crate) struct ReportBuilder {
    name: String,
    kind: ReportKind,
    terms: Vec<Term>,
    checks: Vec<Check>,
    warnings: Vec<String>,
    error_bound: f64,
}

impl ReportBuilder {
    pub fn new(name: &str, kind: ReportKind) -> ReportBuilder {
        ReportBuilder {
            name: name.to_string(),
            kind,
            terms: Vec::new(),
            checks: Vec::new(),
            warnings: Vec::new(),
            error_bound: 0.0,
        }
    }

    pub fn lhs(&mut self, name: &str, value: f64) -> &mut Self {
        self.push(name, Side::Lhs, value)
    }

    pub fn rhs(&mut self, name: &str, value: f64) -> &mut Self {
        self.push(name, Side::Rhs, value)
    }

    pub fn aux(&mut self, name: &str, value: f64) -> &mut Self {
        self.push(name, Side::Aux, value)
    }

    fn push(&mut self, name: &str, side: Side, value: f64) -> &mut Self {
        self.terms.push(Term { name: name.to_string(), side, value });
        self
    }

    pub fn check(&mut self, name: &str, value: f64, passed: bool) -> &mut Self {
        self.checks.push(Check { name: name.to_string(), value, passed });
        self
    }

    pub fn warn(&mut self, message: String) -> &mut Self {
        if !self.warnings.contains(&message) {
            self.warnings.push(message);
        }
        self
    }

    /// Adds `|weight|·bound` to the error estimate and records budget warnings.
    pub fn quadrature<const N: usize>(&mut self, what: &str, integral: &crate::surface::Integral<N>, weights: [f64; N]) -> &mut Self {
        for (b, w) in integral.error_bound.iter().zip(weights) {
            self.error_bound += b * w.abs();
        }
        if integral.budget_exceeded {
            self.warn(format!("refinement budget exceeded in {what}"));
        }
        self
    }

    pub fn finish(&self) -> BalanceReport {
        let sum = |side: Side| self.terms.iter().filter(|t| t.side == side).map(|t| t.value).sum::<f64>();
        let lhs = sum(Side::Lhs);
        let rhs = sum(Side::Rhs);
        BalanceReport {
            name: self.name.clone(),
            kind: self.kind,
            lhs,
            rhs,
            residual: lhs - rhs,
            margin: rhs - lhs,
            terms: self.terms.clone(),
            refinement_history: Vec::new(),
            checks: self.checks.clone(),
            warnings: self.warnings.clone(),
            error_bound: self.error_bound,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sides_sum_to_lhs_and_rhs() {
        let mut b = ReportBuilder::new("t", ReportKind::Inequality);
        b.lhs("a", 1.0).lhs("b", 2.0).rhs("c", 3.5).aux("d", 100.0);
        let r = b.finish();
        assert_eq!((r.lhs, r.rhs), (3.0, 3.5));
        assert_eq!(r.margin, 0.5);
        assert!(r.holds(0.0));
        assert_eq!(r.term("d"), Some(100.0));
    }

    #[test]
    fn failing_check_fails_report() {
        let mut b = ReportBuilder::new("t", ReportKind::Identity);
        b.lhs("a", 1.0).rhs("b", 1.0).check("sign", -1.0, false);
        assert!(!b.finish().holds(1.0));
    }
}
