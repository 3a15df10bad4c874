//! Piecewise-linear membership functions and the product / probabilistic
//! sum fuzzy algebra used to evaluate class expressions.

use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FuzzyError {
    #[error("invalid thresholds: l = {low} must be strictly below h = {high}")]
    InvalidThresholds { low: f64, high: f64 },
    #[error("truth value {0} outside [0, 1]")]
    DomainError(f64),
    #[error("unknown term `{0}`")]
    UnknownTerm(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Polarity {
    /// Requires a high abundance.
    High,
    /// Requires a low (absent) abundance.
    Low,
}

impl Polarity {
    pub fn keyword(self) -> &'static str {
        match self {
            Polarity::High => "high",
            Polarity::Low => "low",
        }
    }
}

/// A ramp between the low threshold `l` and the high threshold `h`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MembershipFn {
    polarity: Polarity,
    low: f64,
    high: f64,
}

impl MembershipFn {
    pub fn new(polarity: Polarity, low: f64, high: f64) -> Result<Self, FuzzyError> {
        check_thresholds(low, high)?;
        Ok(Self { polarity, low, high })
    }

    pub fn high(low: f64, high: f64) -> Result<Self, FuzzyError> {
        Self::new(Polarity::High, low, high)
    }

    pub fn low(low: f64, high: f64) -> Result<Self, FuzzyError> {
        Self::new(Polarity::Low, low, high)
    }

    pub fn polarity(&self) -> Polarity {
        self.polarity
    }

    pub fn l(&self) -> f64 {
        self.low
    }

    pub fn h(&self) -> f64 {
        self.high
    }

    pub fn eval(&self, p: f64) -> f64 {
        let up = ramp(p, self.low, self.high);
        match self.polarity {
            Polarity::High => up,
            Polarity::Low => 1.0 - up,
        }
    }
}

fn check_thresholds(low: f64, high: f64) -> Result<(), FuzzyError> {
    // also rejects NaN
    if low < high {
        Ok(())
    } else {
        Err(FuzzyError::InvalidThresholds { low, high })
    }
}

#[inline]
fn ramp(p: f64, l: f64, h: f64) -> f64 {
    if p < l {
        0.0
    } else if p < h {
        (p - l) / (h - l)
    } else {
        1.0
    }
}

/// Membership for a required high abundance.
pub fn mu_high(p: f64, l: f64, h: f64) -> Result<f64, FuzzyError> {
    check_thresholds(l, h)?;
    Ok(ramp(p, l, h))
}

/// Membership for a required low abundance; the complement of [`mu_high`].
pub fn mu_low(p: f64, l: f64, h: f64) -> Result<f64, FuzzyError> {
    mu_high(p, l, h).map(|m| 1.0 - m)
}

fn check_truth(a: f64) -> Result<f64, FuzzyError> {
    if (0.0..=1.0).contains(&a) {
        Ok(a)
    } else {
        Err(FuzzyError::DomainError(a))
    }
}

/// Fuzzy AND (product t-norm).
pub fn f_and(a: f64, b: f64) -> Result<f64, FuzzyError> {
    Ok(check_truth(a)? * check_truth(b)?)
}

/// Fuzzy OR (probabilistic sum), `a + b - ab`.
///
/// Evaluated as `a + b(1 - a)` so that `1` absorbs and `0` is the identity
/// exactly in floating point.
pub fn f_or(a: f64, b: f64) -> Result<f64, FuzzyError> {
    let (a, b) = (check_truth(a)?, check_truth(b)?);
    Ok(a + b * (1.0 - a))
}

/// Fuzzy NOT.
pub fn f_not(a: f64) -> Result<f64, FuzzyError> {
    Ok(1.0 - check_truth(a)?)
}

/// Left fold of [`f_and`]; the empty conjunction is 1.
pub fn f_and_all<I: IntoIterator<Item = f64>>(values: I) -> Result<f64, FuzzyError> {
    values.into_iter().try_fold(1.0, f_and)
}

/// Left fold of [`f_or`]; the empty disjunction is 0.
pub fn f_or_all<I: IntoIterator<Item = f64>>(values: I) -> Result<f64, FuzzyError> {
    values.into_iter().try_fold(0.0, f_or)
}

/// Logic expression over named terms.
///
/// Built through [`FuzzyExpr::and`] / [`FuzzyExpr::or`], nested nodes of the
/// same connective are flattened so `And` never directly contains `And`.
#[derive(Debug, Clone, PartialEq)]
pub enum FuzzyExpr {
    Term(String),
    And(Vec<FuzzyExpr>),
    Or(Vec<FuzzyExpr>),
    Not(Box<FuzzyExpr>),
}

impl FuzzyExpr {
    pub fn term(name: impl Into<String>) -> Self {
        FuzzyExpr::Term(name.into())
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(child: FuzzyExpr) -> Self {
        FuzzyExpr::Not(Box::new(child))
    }

    /// Conjunction; a single child collapses to itself.
    pub fn and(children: Vec<FuzzyExpr>) -> Self {
        Self::flatten(children, true)
    }

    /// Disjunction; a single child collapses to itself.
    pub fn or(children: Vec<FuzzyExpr>) -> Self {
        Self::flatten(children, false)
    }

    fn flatten(children: Vec<FuzzyExpr>, conj: bool) -> Self {
        let mut flat = Vec::with_capacity(children.len());
        for child in children {
            match child {
                FuzzyExpr::And(inner) if conj => flat.extend(inner),
                FuzzyExpr::Or(inner) if !conj => flat.extend(inner),
                other => flat.push(other),
            }
        }
        if flat.len() == 1 {
            return flat.pop().unwrap();
        }
        if conj {
            FuzzyExpr::And(flat)
        } else {
            FuzzyExpr::Or(flat)
        }
    }

    /// Every term name referenced, in first-appearance order.
    pub fn term_names(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.collect_terms(&mut out);
        out
    }

    fn collect_terms<'a>(&'a self, out: &mut Vec<&'a str>) {
        match self {
            FuzzyExpr::Term(name) => {
                if !out.contains(&name.as_str()) {
                    out.push(name);
                }
            }
            FuzzyExpr::And(cs) | FuzzyExpr::Or(cs) => cs.iter().for_each(|c| c.collect_terms(out)),
            FuzzyExpr::Not(c) => c.collect_terms(out),
        }
    }

    /// Evaluates with a term lookup function.
    pub fn eval_with<F>(&self, lookup: &F) -> Result<f64, FuzzyError>
    where
        F: Fn(&str) -> Option<f64>,
    {
        match self {
            FuzzyExpr::Term(name) => {
                let v = lookup(name).ok_or_else(|| FuzzyError::UnknownTerm(name.clone()))?;
                check_truth(v)
            }
            FuzzyExpr::And(cs) => cs
                .iter()
                .try_fold(1.0, |acc, c| f_and(acc, c.eval_with(lookup)?)),
            FuzzyExpr::Or(cs) => cs
                .iter()
                .try_fold(0.0, |acc, c| f_or(acc, c.eval_with(lookup)?)),
            FuzzyExpr::Not(c) => f_not(c.eval_with(lookup)?),
        }
    }

    fn fmt_prec(&self, f: &mut fmt::Formatter<'_>, parent: u8) -> fmt::Result {
        // precedence: or = 1, and = 2, unary = 3
        let (prec, sep, children) = match self {
            FuzzyExpr::Term(name) => return f.write_str(name),
            FuzzyExpr::Not(c) => {
                f.write_str("not ")?;
                return c.fmt_prec(f, 3);
            }
            FuzzyExpr::And(cs) => (2, " and ", cs),
            FuzzyExpr::Or(cs) => (1, " or ", cs),
        };
        let paren = prec <= parent;
        if paren {
            f.write_str("(")?;
        }
        for (i, c) in children.iter().enumerate() {
            if i > 0 {
                f.write_str(sep)?;
            }
            c.fmt_prec(f, prec)?;
        }
        if paren {
            f.write_str(")")?;
        }
        Ok(())
    }
}

/// Renders in the rule-DSL expression syntax, parenthesizing only where
/// needed to preserve the tree shape.
impl fmt::Display for FuzzyExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_prec(f, 0)
    }
}

/// Evaluates `expr` against a term environment.
pub fn eval_expr(expr: &FuzzyExpr, env: &HashMap<String, f64>) -> Result<f64, FuzzyError> {
    expr.eval_with(&|name: &str| env.get(name).copied())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn env(pairs: &[(&str, f64)]) -> HashMap<String, f64> {
        pairs.iter().map(|&(k, v)| (k.to_string(), v)).collect()
    }

    fn t(name: &str) -> FuzzyExpr {
        FuzzyExpr::term(name)
    }

    #[test]
    fn mu_high_examples() {
        assert_eq!(mu_high(0.5, 1.0, 17.0).unwrap(), 0.0);
        assert_eq!(mu_high(17.0, 1.0, 17.0).unwrap(), 1.0);
        assert_eq!(mu_high(9.0, 1.0, 17.0).unwrap(), 0.5);
        assert_eq!(mu_high(1.0, 1.0, 17.0).unwrap(), 0.0);
    }

    #[test]
    fn mu_low_examples() {
        assert_eq!(mu_low(0.5, 1.0, 17.0).unwrap(), 1.0);
        assert_eq!(mu_low(9.0, 1.0, 17.0).unwrap(), 0.5);
        assert_eq!(mu_low(40.0, 10.0, 40.0).unwrap(), 0.0);
    }

    #[test]
    fn bad_thresholds_rejected() {
        assert!(matches!(mu_high(1.0, 5.0, 5.0), Err(FuzzyError::InvalidThresholds { .. })));
        assert!(matches!(mu_low(1.0, 6.0, 5.0), Err(FuzzyError::InvalidThresholds { .. })));
        assert!(MembershipFn::high(f64::NAN, 1.0).is_err());
    }

    #[test]
    fn operator_examples() {
        assert_eq!(f_and(0.9, 0.9).unwrap(), 0.81);
        assert_eq!(f_or(0.9, 0.9).unwrap(), 0.99);
        assert_eq!(f_not(0.25).unwrap(), 0.75);
        for a in [0.0, 0.3, 0.77, 1.0] {
            assert_eq!(f_and(a, 1.0).unwrap(), a);
            assert_eq!(f_or(a, 0.0).unwrap(), a);
        }
        assert_eq!(f_and(1.2, 0.5), Err(FuzzyError::DomainError(1.2)));
        assert_eq!(f_not(-0.1), Err(FuzzyError::DomainError(-0.1)));
    }

    #[test]
    fn expr_examples() {
        let all = FuzzyExpr::and(vec![t("a"), t("b"), t("c")]);
        assert_eq!(eval_expr(&all, &env(&[("a", 1.0), ("b", 1.0), ("c", 1.0)])).unwrap(), 1.0);

        let agt = FuzzyExpr::and(vec![t("fe"), t("nti"), t("ca")]);
        let e = env(&[("fe", 1.0), ("nti", 0.5), ("ca", 1.0)]);
        assert_eq!(eval_expr(&agt, &e).unwrap(), 0.5);

        let metals = FuzzyExpr::or(vec![t("mg"), t("mn"), t("fe")]);
        let e = env(&[("mg", 0.5), ("mn", 0.5), ("fe", 0.0)]);
        assert_eq!(eval_expr(&metals, &e).unwrap(), 0.75);
    }

    #[test]
    fn unresolved_term() {
        let e = FuzzyExpr::and(vec![t("a"), t("missing")]);
        assert_eq!(
            eval_expr(&e, &env(&[("a", 1.0)])),
            Err(FuzzyError::UnknownTerm("missing".into()))
        );
    }

    #[test]
    fn constructors_flatten() {
        let e = FuzzyExpr::and(vec![FuzzyExpr::and(vec![t("a"), t("b")]), t("c")]);
        assert_eq!(e, FuzzyExpr::And(vec![t("a"), t("b"), t("c")]));
        assert_eq!(FuzzyExpr::or(vec![t("x")]), t("x"));
    }

    #[test]
    fn display_keeps_shape() {
        let e = FuzzyExpr::and(vec![
            FuzzyExpr::or(vec![t("mg"), t("mn"), t("fe")]),
            FuzzyExpr::not(t("ti")),
            FuzzyExpr::not(FuzzyExpr::or(vec![t("a"), t("b")])),
        ]);
        assert_eq!(e.to_string(), "(mg or mn or fe) and not ti and not (a or b)");
        assert_eq!(e.term_names(), vec!["mg", "mn", "fe", "ti", "a", "b"]);
    }

    fn arb_expr() -> impl Strategy<Value = FuzzyExpr> {
        let leaf = (0usize..4).prop_map(|i| FuzzyExpr::term(format!("t{i}")));
        leaf.prop_recursive(5, 32, 4, |inner| {
            prop_oneof![
                prop::collection::vec(inner.clone(), 2..4).prop_map(FuzzyExpr::and),
                prop::collection::vec(inner.clone(), 2..4).prop_map(FuzzyExpr::or),
                inner.prop_map(FuzzyExpr::not),
            ]
        })
    }

    proptest! {
        #[test]
        fn high_plus_low_is_one(p in -10.0f64..200.0, l in -5.0f64..100.0, w in 1e-6f64..100.0) {
            let h = l + w;
            prop_assume!(l < h);
            let hi = mu_high(p, l, h).unwrap();
            let lo = mu_low(p, l, h).unwrap();
            prop_assert_eq!(hi + lo, 1.0);
            prop_assert!((0.0..=1.0).contains(&hi));
        }

        #[test]
        fn mu_high_monotone(p in 0.0f64..100.0, dp in 0.0f64..50.0, l in 0.0f64..50.0, w in 0.01f64..50.0) {
            let h = l + w;
            prop_assert!(mu_high(p, l, h).unwrap() <= mu_high(p + dp, l, h).unwrap());
            prop_assert!(mu_low(p, l, h).unwrap() >= mu_low(p + dp, l, h).unwrap());
        }

        #[test]
        fn operator_laws(a in 0.0f64..=1.0, b in 0.0f64..=1.0, c in 0.0f64..=1.0) {
            prop_assert_eq!(f_and(a, b).unwrap(), f_and(b, a).unwrap());
            prop_assert!((f_or(a, b).unwrap() - f_or(b, a).unwrap()).abs() <= 1e-15);
            let l = f_and(f_and(a, b).unwrap(), c).unwrap();
            let r = f_and(a, f_and(b, c).unwrap()).unwrap();
            prop_assert!((l - r).abs() <= 1e-15);
            let l = f_or(f_or(a, b).unwrap(), c).unwrap();
            let r = f_or(a, f_or(b, c).unwrap()).unwrap();
            prop_assert!((l - r).abs() <= 1e-15);
            prop_assert_eq!(f_and(a, 0.0).unwrap(), 0.0);
            prop_assert_eq!(f_or(a, 1.0).unwrap(), 1.0);
            prop_assert_eq!(f_or(1.0, a).unwrap(), 1.0);
            prop_assert_eq!(f_or(a, 0.0).unwrap(), a);
            prop_assert!(f_and(a, b).unwrap() <= a.min(b));
            let lhs = f_not(f_and(a, b).unwrap()).unwrap();
            let rhs = f_or(f_not(a).unwrap(), f_not(b).unwrap()).unwrap();
            prop_assert!((lhs - rhs).abs() <= 1e-15);
        }

        #[test]
        fn eval_closed_on_unit_interval(expr in arb_expr(), vals in prop::collection::vec(0.0f64..=1.0, 4)) {
            let e: HashMap<String, f64> = vals.iter().enumerate().map(|(i, v)| (format!("t{i}"), *v)).collect();
            let r = eval_expr(&expr, &e).unwrap();
            prop_assert!((0.0..=1.0).contains(&r));
        }
    }
}
