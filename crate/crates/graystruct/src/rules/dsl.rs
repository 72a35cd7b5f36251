//! Line-oriented DSL for user-defined succession rules.
//!
//! ```text
//! name: my_rule
//! axiom: 2
//! # exact cases first, ascending, then exactly one general case
//! case k=2: 3, 3
//! case k>=3: 3, 3, range(4,k), k+1
//! stable: i=1 j=2
//! ```
//!
//! Terms: integer literal, `k`, `k+c`, `k-c`, `range(a,expr)` meaning
//! `a, a+1, ..., expr` (empty when `expr < a`), and `rep(expr,mult)` for
//! `mult` copies of `expr` where `mult` is an integer, `k`, or `k-c`.

use crate::error::{Error, Result};
use crate::rules::{
    check_stability_at, Family, StabilityCertificate, StabilityOutcome, SuccessionRule,
    DEFAULT_LABEL_BOUND,
};

/// What a fixed general-case position holds for labels past the check
/// bound, as far as the affine term structure can tell.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum SymbolicValue {
    Constant(i64),
    Varies,
    Unknown,
}

/// An affine expression in the case variable: `k + offset` or a constant.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Expr {
    Const(i64),
    KPlus(i64),
}

impl Expr {
    fn eval(self, k: i64) -> i64 {
        match self {
            Expr::Const(c) => c,
            Expr::KPlus(off) => k + off,
        }
    }

    fn is_const(self) -> bool {
        matches!(self, Expr::Const(_))
    }

    fn render(self) -> String {
        match self {
            Expr::Const(c) => c.to_string(),
            Expr::KPlus(0) => "k".into(),
            Expr::KPlus(off) if off > 0 => format!("k+{off}"),
            Expr::KPlus(off) => format!("k-{}", -off),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum Term {
    Single(Expr),
    Range { from: i64, to: Expr },
    Rep { value: Expr, times: Expr },
}

impl Term {
    /// Number of children the term contributes at `k`, clamped at zero.
    fn len_at(&self, k: i64) -> i64 {
        match self {
            Term::Single(_) => 1,
            Term::Range { from, to } => (to.eval(k) - from + 1).max(0),
            Term::Rep { times, .. } => times.eval(k).max(0),
        }
    }

    /// Length as an affine function `alpha * k + beta`, ignoring clamping.
    fn len_affine(&self) -> (i64, i64) {
        match self {
            Term::Single(_) => (0, 1),
            Term::Range { from, to } => match to {
                Expr::Const(c) => (0, (c - from + 1).max(0)),
                Expr::KPlus(off) => (1, off - from + 1),
            },
            Term::Rep { times, .. } => match times {
                Expr::Const(c) => (0, (*c).max(0)),
                Expr::KPlus(off) => (1, *off),
            },
        }
    }

    fn push_values(&self, k: i64, out: &mut Vec<u32>) -> Result<()> {
        let as_u32 = |v: i64| -> Result<u32> {
            if v >= 1 && v <= u32::MAX as i64 {
                Ok(v as u32)
            } else {
                Err(Error::InvalidWord(format!(
                    "term produces non-positive label value {v} at k={k}"
                )))
            }
        };
        match self {
            Term::Single(e) => out.push(as_u32(e.eval(k))?),
            Term::Range { from, to } => {
                let hi = to.eval(k);
                let mut v = *from;
                while v <= hi {
                    out.push(as_u32(v)?);
                    v += 1;
                }
            }
            Term::Rep { value, times } => {
                let v = as_u32(value.eval(k))?;
                for _ in 0..times.eval(k).max(0) {
                    out.push(v);
                }
            }
        }
        Ok(())
    }

    fn render(&self) -> String {
        match self {
            Term::Single(e) => e.render(),
            Term::Range { from, to } => format!("range({from},{})", to.render()),
            Term::Rep { value, times } => {
                format!("rep({},{})", value.render(), times.render())
            }
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Case {
    /// Exact match value, or the lower bound of the general case.
    pub guard: u32,
    pub exact: bool,
    pub terms: Vec<Term>,
}

impl Case {
    fn values_at(&self, k: u32) -> Result<Vec<u32>> {
        let mut out = Vec::new();
        for t in &self.terms {
            t.push_values(k as i64, &mut out)?;
        }
        Ok(out)
    }
}

/// A rule parsed from DSL text: exact cases checked first (ascending),
/// then one general case.
#[derive(Debug, Clone)]
pub struct DslRule {
    pub(crate) name: String,
    pub(crate) axiom: u32,
    pub(crate) cases: Vec<Case>,
}

impl DslRule {
    pub(crate) fn child_values(&self, k: u32) -> Result<Option<Vec<u32>>> {
        for case in &self.cases {
            let hit = if case.exact {
                case.guard == k
            } else {
                k >= case.guard
            };
            if hit {
                return Ok(Some(case.values_at(k)?));
            }
        }
        Ok(None)
    }

    fn general(&self) -> &Case {
        self.cases.last().expect("parser guarantees a general case")
    }

    /// Symbolic analysis of general-case position `pos` for all `k` past
    /// `bound`: the terms are constants or affine in `k`, so a fixed
    /// position holds a constant label exactly when its covering term does
    /// not involve `k` and nothing before it grows.
    pub(crate) fn symbolic_value_at(&self, pos: usize, bound: u32) -> SymbolicValue {
        let probe = (bound + 1).max(self.general().guard) as i64;
        let mut offset = 0i64;
        for term in &self.general().terms {
            let len = term.len_at(probe);
            if offset + len >= pos as i64 {
                // Covering term found with a constant start offset.
                return match term {
                    Term::Single(Expr::Const(c)) => SymbolicValue::Constant(*c),
                    Term::Single(Expr::KPlus(_)) => SymbolicValue::Varies,
                    Term::Range { from, .. } => {
                        SymbolicValue::Constant(from + (pos as i64 - offset - 1))
                    }
                    Term::Rep {
                        value: Expr::Const(c),
                        ..
                    } => SymbolicValue::Constant(*c),
                    Term::Rep { .. } => SymbolicValue::Varies,
                };
            }
            let (alpha, _) = term.len_affine();
            if alpha != 0 {
                // A growing term before the position shifts coverage with
                // k; constancy is not decidable from the term shapes.
                return SymbolicValue::Unknown;
            }
            offset += len;
        }
        SymbolicValue::Unknown
    }

    pub(crate) fn to_text(&self, stability: Option<&StabilityCertificate>) -> String {
        let mut out = String::new();
        out.push_str(&format!("name: {}\n", self.name));
        out.push_str(&format!("axiom: {}\n", self.axiom));
        for case in &self.cases {
            let guard = if case.exact {
                format!("k={}", case.guard)
            } else {
                format!("k>={}", case.guard)
            };
            let terms: Vec<String> = case.terms.iter().map(Term::render).collect();
            out.push_str(&format!("case {}: {}\n", guard, terms.join(", ")));
        }
        if let Some(cert) = stability {
            out.push_str(&format!("stable: i={} j={}\n", cert.i, cert.j));
        }
        out
    }
}

struct LineParser<'a> {
    line: &'a str,
    lineno: usize,
    pos: usize,
}

impl<'a> LineParser<'a> {
    fn err(&self, msg: impl Into<String>) -> Error {
        Error::Dsl {
            line: self.lineno,
            col: self.pos + 1,
            msg: msg.into(),
        }
    }

    fn rest(&self) -> &'a str {
        &self.line[self.pos..]
    }

    fn skip_ws(&mut self) {
        while self.rest().starts_with(' ') || self.rest().starts_with('\t') {
            self.pos += 1;
        }
    }

    fn eat(&mut self, tok: &str) -> bool {
        if self.rest().starts_with(tok) {
            self.pos += tok.len();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, tok: &str) -> Result<()> {
        if self.eat(tok) {
            Ok(())
        } else {
            Err(self.err(format!("expected `{tok}`")))
        }
    }

    fn integer(&mut self) -> Result<i64> {
        let digits: String = self.rest().chars().take_while(|c| c.is_ascii_digit()).collect();
        if digits.is_empty() {
            return Err(self.err("expected an integer"));
        }
        self.pos += digits.len();
        digits
            .parse()
            .map_err(|_| self.err("integer out of range"))
    }

    /// `int | k | k+int | k-int`
    fn expr(&mut self) -> Result<Expr> {
        if self.eat("k") {
            if self.eat("+") {
                Ok(Expr::KPlus(self.integer()?))
            } else if self.eat("-") {
                Ok(Expr::KPlus(-self.integer()?))
            } else {
                Ok(Expr::KPlus(0))
            }
        } else {
            Ok(Expr::Const(self.integer()?))
        }
    }

    fn term(&mut self) -> Result<Term> {
        if self.rest().starts_with("range(") {
            self.pos += "range(".len();
            self.skip_ws();
            let from = self.integer()?;
            self.skip_ws();
            self.expect(",")?;
            self.skip_ws();
            let to = self.expr()?;
            self.skip_ws();
            self.expect(")")?;
            Ok(Term::Range { from, to })
        } else if self.rest().starts_with("rep(") {
            self.pos += "rep(".len();
            self.skip_ws();
            let value = self.expr()?;
            self.skip_ws();
            self.expect(",")?;
            self.skip_ws();
            let times = self.expr()?;
            if let Expr::KPlus(off) = times {
                if off > 0 {
                    return Err(self.err("rep multiplicity must be an integer, k, or k-<int>"));
                }
            }
            self.skip_ws();
            self.expect(")")?;
            Ok(Term::Rep { value, times })
        } else {
            Ok(Term::Single(self.expr()?))
        }
    }

    fn terms(&mut self) -> Result<Vec<Term>> {
        let mut terms = Vec::new();
        loop {
            self.skip_ws();
            terms.push(self.term()?);
            self.skip_ws();
            if !self.eat(",") {
                break;
            }
        }
        if !self.rest().is_empty() {
            return Err(self.err("trailing input after terms"));
        }
        Ok(terms)
    }
}

/// Parse a rule from DSL text. Productions evaluate lazily from the case
/// list; the first matching case wins, colors are auto-assigned. The
/// declared `stable:` pair is verified when present and inferred when not.
pub fn parse_rule(source: &str) -> Result<SuccessionRule> {
    let mut name: Option<String> = None;
    let mut axiom: Option<u32> = None;
    let mut exact_cases: Vec<Case> = Vec::new();
    let mut general: Option<Case> = None;
    let mut declared_stable: Option<(usize, usize)> = None;

    for (idx, raw) in source.lines().enumerate() {
        let lineno = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut p = LineParser {
            line,
            lineno,
            pos: 0,
        };
        if p.eat("name:") {
            p.skip_ws();
            let ident = p.rest().trim();
            if ident.is_empty()
                || !ident
                    .chars()
                    .all(|c| c.is_ascii_alphanumeric() || "_-()".contains(c))
            {
                return Err(p.err("expected an identifier"));
            }
            name = Some(ident.to_string());
        } else if p.eat("axiom:") {
            p.skip_ws();
            let v = p.integer()?;
            if v < 1 {
                return Err(p.err("axiom must be a positive integer"));
            }
            axiom = Some(v as u32);
        } else if p.eat("case") {
            p.skip_ws();
            p.expect("k")?;
            p.skip_ws();
            if p.eat(">=") {
                p.skip_ws();
                let guard = p.integer()?;
                p.skip_ws();
                p.expect(":")?;
                let terms = p.terms()?;
                if general.is_some() {
                    return Err(p.err("more than one general case"));
                }
                if guard < 1 {
                    return Err(p.err("general case bound must be positive"));
                }
                general = Some(Case {
                    guard: guard as u32,
                    exact: false,
                    terms,
                });
            } else if p.eat("=") {
                p.skip_ws();
                let guard = p.integer()?;
                p.skip_ws();
                p.expect(":")?;
                let terms = p.terms()?;
                if general.is_some() {
                    return Err(p.err("exact cases must precede the general case"));
                }
                if guard < 1 {
                    return Err(p.err("case value must be positive"));
                }
                if let Some(last) = exact_cases.last() {
                    if last.guard >= guard as u32 {
                        return Err(p.err("exact cases must be ascending and distinct"));
                    }
                }
                exact_cases.push(Case {
                    guard: guard as u32,
                    exact: true,
                    terms,
                });
            } else {
                return Err(p.err("expected `=` or `>=` after `k`"));
            }
        } else if p.eat("stable:") {
            p.skip_ws();
            p.expect("i=")?;
            let i = p.integer()?;
            p.skip_ws();
            p.expect("j=")?;
            let j = p.integer()?;
            if i < 1 || j <= i {
                return Err(p.err("stable requires 1 <= i < j"));
            }
            declared_stable = Some((i as usize, j as usize));
        } else {
            return Err(p.err("expected `name:`, `axiom:`, `case`, `stable:` or a comment"));
        }
    }

    let dsl_err = |msg: &str| Error::Dsl {
        line: 0,
        col: 0,
        msg: msg.into(),
    };
    let name = name.ok_or_else(|| dsl_err("missing `name:` line"))?;
    let axiom = axiom.ok_or_else(|| dsl_err("missing `axiom:` line"))?;
    let general = general.ok_or_else(|| dsl_err("missing general `case k>=...:` line"))?;

    let mut cases = exact_cases;
    cases.push(general);
    let dsl = DslRule { name, axiom, cases };

    validate(&dsl)?;

    // Certify stability: the declared pair is verified when present,
    // otherwise the pair is inferred by search.
    let rule = SuccessionRule::from_dsl(dsl.clone(), None);
    let stability = match check_stability_at(&rule, DEFAULT_LABEL_BOUND, declared_stable) {
        StabilityOutcome::Certified(cert) => Some(cert),
        StabilityOutcome::Refused(witness) => {
            if declared_stable.is_some() {
                return Err(Error::NotStable {
                    rule: rule.name().to_string(),
                    witness,
                });
            }
            None
        }
    };
    Ok(SuccessionRule::from_dsl(dsl, stability))
}

/// Load-time validation: arity of every case, and a bounded reachability
/// closure so that no reachable label lacks a case.
fn validate(dsl: &DslRule) -> Result<()> {
    // Exact cases: evaluate and count.
    for case in dsl.cases.iter().filter(|c| c.exact) {
        let vals = case.values_at(case.guard)?;
        if vals.len() as u32 != case.guard {
            return Err(Error::Dsl {
                line: 0,
                col: 0,
                msg: format!(
                    "case k={} produces {} children, expected {}",
                    case.guard,
                    vals.len(),
                    case.guard
                ),
            });
        }
    }

    // General case: the affine sum of term lengths must equal k, or the
    // rule must close below the bound (finite rules still need the
    // mandatory general case even if it is never reached).
    let general = dsl.general();
    let (alpha, beta): (i64, i64) = general
        .terms
        .iter()
        .map(Term::len_affine)
        .fold((0, 0), |(a, b), (ta, tb)| (a + ta, b + tb));
    let symbolic_ok = alpha == 1 && beta == 0;
    if symbolic_ok {
        // Clamped lengths at the entry point would break the affine count.
        let k0 = general.guard;
        let vals = general.values_at(k0)?;
        if vals.len() as u32 != k0 {
            return Err(Error::Dsl {
                line: 0,
                col: 0,
                msg: format!(
                    "general case produces {} children at k={k0}, expected {k0}",
                    vals.len()
                ),
            });
        }
    }

    // Bounded closure: every reachable value has a case and correct arity.
    let mut seen = std::collections::BTreeSet::new();
    let mut queue = vec![dsl.axiom];
    let mut grows_past_bound = false;
    while let Some(v) = queue.pop() {
        if !seen.insert(v) {
            continue;
        }
        let children = dsl.child_values(v)?.ok_or_else(|| Error::Dsl {
            line: 0,
            col: 0,
            msg: format!("no case matches reachable label ({v})"),
        })?;
        if children.len() as u32 != v {
            return Err(Error::Dsl {
                line: 0,
                col: 0,
                msg: format!(
                    "label ({v}) produces {} children, expected {v}",
                    children.len()
                ),
            });
        }
        for c in children {
            if c <= DEFAULT_LABEL_BOUND {
                if !seen.contains(&c) {
                    queue.push(c);
                }
            } else {
                grows_past_bound = true;
            }
        }
    }
    if !symbolic_ok && grows_past_bound {
        return Err(Error::Dsl {
            line: 0,
            col: 0,
            msg: "general case arity is not affine-equal to k and labels grow past the check bound"
                .into(),
        });
    }
    Ok(())
}

/// Canonical DSL text for a built-in family.
pub(crate) fn builtin_dsl_text(family: Family, stability: Option<&StabilityCertificate>) -> String {
    let body = match family {
        Family::Catalan => "case k>=2: range(2,k), k+1".to_string(),
        Family::OddFibonacci => {
            "case k=2: 2, 3\ncase k=3: 2, 3, 3\ncase k>=4: range(2,k+1)".to_string()
        }
        Family::Fibonacci => {
            "case k=1: 2\ncase k=2: 1, 2\ncase k>=3: range(2,k+1)".to_string()
        }
        Family::Motzkin => "case k=1: 2\ncase k>=2: range(1,k-1), k+1".to_string(),
        Family::TAry(t) => format!("case k>={t}: range({t},k+{})", t - 1),
        Family::OmegaR(r) => format!("case k>={r}: range({r},k), rep(k+1,{})", r - 1),
        Family::SchroderS => "case k>=3: range(3,k), rep(k+1,2)".to_string(),
        Family::GrandDyck => {
            "case k=2: 3, 3\ncase k=3: 3, 3, 4\ncase k>=4: 3, 3, range(4,k), k+1".to_string()
        }
        Family::FactorialP => {
            // Even labels only; the DSL cannot express the parity guard, so
            // the serialized form documents the even-label orbit.
            "# labels are even: 2k -> (2)(4)...(2k)(2k+2)^k\ncase k>=2: rep(k+2,k)".to_string()
        }
        Family::FactorialNaive => "case k>=1: rep(k+1,k)".to_string(),
    };
    let mut out = format!("name: {}\naxiom: {}\n{}\n", family.name(), family.axiom(), body);
    if let Some(cert) = stability {
        out.push_str(&format!("stable: i={} j={}\n", cert.i, cert.j));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rules::{builtin, Label};

    const CATALAN_SRC: &str = "\
name: my_catalan
axiom: 2
# the classic rule
case k>=2: range(2,k), k+1
";

    #[test]
    fn parsed_catalan_matches_builtin() {
        let parsed = parse_rule(CATALAN_SRC).unwrap();
        let cat = builtin("catalan", None).unwrap();
        for k in 2..=50 {
            assert_eq!(
                parsed.production(k).unwrap().children,
                cat.production(k).unwrap().children,
                "mismatch at k={k}"
            );
        }
        let cert = parsed.stability().expect("stable");
        assert_eq!((cert.i, cert.j), (1, 2));
    }

    #[test]
    fn parsed_grand_dyck_matches_builtin() {
        let src = "\
name: gd
axiom: 2
case k=2: 3, 3
case k=3: 3, 3, 4
case k>=4: 3, 3, range(4,k), k+1
stable: i=1 j=2
";
        let parsed = parse_rule(src).unwrap();
        let gd = builtin("grand_dyck", None).unwrap();
        for k in 2..=50 {
            assert_eq!(
                parsed.production(k).unwrap().children,
                gd.production(k).unwrap().children
            );
        }
        let cert = parsed.stability().unwrap();
        assert_eq!(cert.c1, Label::colored(3, 1));
        assert_eq!(cert.c2, Label::colored(3, 2));
    }

    #[test]
    fn arity_violation_rejected() {
        let src = "\
name: broken
axiom: 2
case k>=2: range(2,k-1), k+1
";
        let err = parse_rule(src).unwrap_err();
        assert!(matches!(err, Error::Dsl { .. }), "got {err:?}");
    }

    #[test]
    fn syntax_error_carries_position() {
        let src = "name: x\naxiom: 2\ncase k>=2: range(2,k), +\n";
        match parse_rule(src) {
            Err(Error::Dsl { line, col, .. }) => {
                assert_eq!(line, 3);
                assert!(col > 10);
            }
            other => panic!("expected positioned error, got {other:?}"),
        }
    }

    #[test]
    fn missing_case_for_reachable_label() {
        let src = "\
name: holey
axiom: 2
case k=2: 5, 5
case k>=6: range(2,k+1)
";
        let err = parse_rule(src).unwrap_err();
        match err {
            Error::Dsl { msg, .. } => assert!(msg.contains("no case matches"), "{msg}"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn declared_stable_is_verified() {
        let src = "\
name: notstable
axiom: 1
case k=1: 2
case k>=2: range(1,k-1), k+1
stable: i=1 j=2
";
        assert!(matches!(
            parse_rule(src),
            Err(Error::NotStable { .. })
        ));
    }

    #[test]
    fn round_trip_through_text() {
        let parsed = parse_rule(CATALAN_SRC).unwrap();
        let text = parsed.to_dsl_text();
        let reparsed = parse_rule(&text).unwrap();
        for k in 2..=40 {
            assert_eq!(
                parsed.production(k).unwrap().children,
                reparsed.production(k).unwrap().children
            );
        }
        assert_eq!(parsed.stability(), reparsed.stability());
    }

    #[test]
    fn builtin_dsl_texts_reproduce_productions() {
        for (name, p) in [
            ("catalan", None),
            ("motzkin", None),
            ("t_ary", Some(3)),
            ("omega_r", Some(3)),
            ("schroder_s", None),
            ("grand_dyck", None),
            ("factorial_naive", None),
        ] {
            let rule = builtin(name, p).unwrap();
            let reparsed = parse_rule(&rule.to_dsl_text()).unwrap();
            for v in rule.reachable_values(40).unwrap() {
                assert_eq!(
                    rule.production(v).unwrap().children,
                    reparsed.production(v).unwrap().children,
                    "{name} at k={v}"
                );
            }
        }
    }

    #[test]
    fn finite_rule_with_unreached_general_case() {
        let src = "\
name: odd_fib
axiom: 2
case k=2: 2, 3
case k=3: 2, 3, 3
case k>=4: range(2,k+1)
";
        let parsed = parse_rule(src).unwrap();
        let odd = builtin("odd_fibonacci", None).unwrap();
        for k in [2u32, 3] {
            assert_eq!(
                parsed.production(k).unwrap().children,
                odd.production(k).unwrap().children
            );
        }
        assert!(parsed.stability().is_some());
    }
}
