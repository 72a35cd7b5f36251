//! Succession rules: labels, productions, built-in families and the
//! stability certificate that gates Gray-code generation.
//!
//! A succession rule is an axiom label plus a production map; a label of
//! value `k` produces exactly `k` children. A rule is *stable* when two
//! fixed positions of every production hold the same pair of labels
//! regardless of the parent; that pair is what lets consecutive sublists
//! of the generation order join at Hamming distance one.

mod dsl;

pub use dsl::{parse_rule, DslRule};

use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, RwLock};

use crate::error::{Error, Result};
use crate::shifted::Branch;

/// A production symbol: a positive value plus a color index.
///
/// Colors distinguish repeated values inside one production. They are
/// assigned left to right starting at 1; a value that occurs once keeps
/// color 0. Two labels are identical only as `(value, color)` pairs; use
/// [`Label::matches`] when one side may carry the uncolored form of the
/// same child (see the module docs on normalized comparison).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize)]
pub struct Label {
    pub value: u32,
    pub color: u32,
}

impl Label {
    pub fn new(value: u32) -> Self {
        Label { value, color: 0 }
    }

    pub fn colored(value: u32, color: u32) -> Self {
        Label { value, color }
    }

    /// Normalized comparison: equal values, and equal colors unless either
    /// side is uncolored. A production that holds a unique child of some
    /// value writes it with color 0 while another production repeats that
    /// value and colors it; the uncolored form stands for any of them.
    pub fn matches(self, other: Label) -> bool {
        self.value == other.value
            && (self.color == other.color || self.color == 0 || other.color == 0)
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.color == 0 {
            write!(f, "{}", self.value)
        } else {
            write!(f, "{}#{}", self.value, self.color)
        }
    }
}

/// Parse a label token: `value` or `value#color`.
impl std::str::FromStr for Label {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidWord(format!("bad label token `{s}`"));
        let (v, c) = match s.split_once('#') {
            Some((v, c)) => (v, Some(c)),
            None => (s, None),
        };
        let value: u32 = v.parse().map_err(|_| bad())?;
        if value == 0 {
            return Err(bad());
        }
        let color = match c {
            Some(c) => c.parse().map_err(|_| bad())?,
            None => 0,
        };
        Ok(Label { value, color })
    }
}

/// The ordered children of one label, colors assigned.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Production {
    pub parent: Label,
    pub children: Vec<Label>,
}

impl Production {
    /// Color a list of raw child values: repeated values get 1, 2, ... in
    /// left-to-right order, unique values get 0. The result is a pure
    /// function of the value sequence.
    pub fn from_values(parent: u32, values: &[u32]) -> Production {
        let mut total: HashMap<u32, u32> = HashMap::new();
        for &v in values {
            *total.entry(v).or_insert(0) += 1;
        }
        let mut seen: HashMap<u32, u32> = HashMap::new();
        let children = values
            .iter()
            .map(|&v| {
                if total[&v] > 1 {
                    let c = seen.entry(v).or_insert(0);
                    *c += 1;
                    Label::colored(v, *c)
                } else {
                    Label::new(v)
                }
            })
            .collect();
        Production {
            parent: Label::new(parent),
            children,
        }
    }

    pub fn arity(&self) -> usize {
        self.children.len()
    }
}

/// Built-in rule families.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    /// Axiom (2); (k) -> (2)(3)...(k)(k+1). Catalan numbers.
    Catalan,
    /// Axiom (2); (2) -> (2)(3), (3) -> (2)(3)(3). Odd-indexed Fibonacci.
    OddFibonacci,
    /// Axiom (2); (2) -> (1)(2), (1) -> (2). Fibonacci. Not stable.
    Fibonacci,
    /// Axiom (1); (k) -> (1)(2)...(k-1)(k+1). Motzkin numbers. Not stable.
    Motzkin,
    /// Axiom (t); (k) -> (t)(t+1)...(k+t-1). t-ary trees.
    TAry(u32),
    /// Axiom (r); (k) -> (r)(r+1)...(k)(k+1)^(r-1).
    OmegaR(u32),
    /// Axiom (3); (k) -> (3)(4)...(k)(k+1)^2. Schroeder paths.
    SchroderS,
    /// Axiom (2); (2) -> (3)(3), (3) -> (3)(3)(4), (k) -> (3)^2(4)...(k)(k+1).
    GrandDyck,
    /// Axiom (2); (2k) -> (2)(4)...(2k)(2k+2)^k. Factorial numbers.
    FactorialP,
    /// Axiom (2); (k) -> (k+1)^k. Factorial numbers. Not stable.
    FactorialNaive,
}

impl Family {
    pub fn name(self) -> String {
        match self {
            Family::Catalan => "catalan".into(),
            Family::OddFibonacci => "odd_fibonacci".into(),
            Family::Fibonacci => "fibonacci".into(),
            Family::Motzkin => "motzkin".into(),
            Family::TAry(t) => format!("t_ary({t})"),
            Family::OmegaR(r) => format!("omega_r({r})"),
            Family::SchroderS => "schroder_s".into(),
            Family::GrandDyck => "grand_dyck".into(),
            Family::FactorialP => "factorial_p".into(),
            Family::FactorialNaive => "factorial_naive".into(),
        }
    }

    pub fn axiom(self) -> u32 {
        match self {
            Family::Motzkin => 1,
            Family::TAry(t) => t,
            Family::OmegaR(r) => r,
            Family::SchroderS => 3,
            _ => 2,
        }
    }

    /// Raw child values of label `k`, or None when the family leaves `k`
    /// undefined (finite rules, parity constraints, values below the axiom).
    fn child_values(self, k: u32) -> Option<Vec<u32>> {
        match self {
            Family::Catalan => (k >= 2).then(|| (2..=k + 1).collect()),
            Family::OddFibonacci => match k {
                2 => Some(vec![2, 3]),
                3 => Some(vec![2, 3, 3]),
                _ => None,
            },
            Family::Fibonacci => match k {
                2 => Some(vec![1, 2]),
                1 => Some(vec![2]),
                _ => None,
            },
            Family::Motzkin => {
                (k >= 1).then(|| (1..k).chain(std::iter::once(k + 1)).collect())
            }
            Family::TAry(t) => (k >= t).then(|| (t..=k + t - 1).collect()),
            Family::OmegaR(r) => (k >= r).then(|| {
                (r..=k)
                    .chain(std::iter::repeat(k + 1).take(r as usize - 1))
                    .collect()
            }),
            Family::SchroderS => Family::OmegaR(3).child_values(k),
            Family::GrandDyck => (k >= 2).then(|| {
                let mut v = vec![3, 3];
                v.extend(4..=k);
                if k >= 3 {
                    v.push(k + 1);
                }
                v
            }),
            Family::FactorialP => (k >= 2 && k % 2 == 0).then(|| {
                let m = k / 2;
                (1..=m)
                    .map(|i| 2 * i)
                    .chain(std::iter::repeat(k + 2).take(m as usize))
                    .collect()
            }),
            Family::FactorialNaive => {
                (k >= 1).then(|| std::iter::repeat(k + 1).take(k as usize).collect())
            }
        }
    }

    /// Expected word counts per length, when the defined sequence is known.
    pub fn expected_counts(self) -> Option<&'static [u64]> {
        match self {
            Family::Catalan => Some(&[
                1, 2, 5, 14, 42, 132, 429, 1430, 4862, 16796, 58786, 208012,
            ]),
            Family::OddFibonacci => Some(&[
                1, 2, 5, 13, 34, 89, 233, 610, 1597, 4181, 10946, 28657, 75025, 196418,
                514229, 1346269,
            ]),
            Family::Fibonacci => Some(&[1, 2, 3, 5, 8, 13, 21, 34, 55, 89]),
            Family::Motzkin => Some(&[1, 1, 2, 4, 9, 21, 51, 127, 323, 835]),
            Family::TAry(3) => Some(&[1, 3, 12, 55, 273, 1428, 7752, 43263]),
            Family::OmegaR(3) | Family::SchroderS => {
                Some(&[1, 3, 11, 45, 197, 903, 4279, 20793])
            }
            Family::GrandDyck => {
                Some(&[1, 2, 6, 20, 70, 252, 924, 3432, 12870, 48620])
            }
            Family::FactorialP => Some(&[1, 2, 6, 24, 120, 720, 5040]),
            Family::FactorialNaive => Some(&[1, 1, 2, 6, 24, 120, 720]),
            _ => None,
        }
    }
}

/// A certificate of the stability property: positions `i < j` (1-based)
/// such that every reachable production holds `c1` at position `i` and
/// `c2` at position `j`.
///
/// When the color at a certificate position varies between 0 and one
/// nonzero index across productions, the stored label keeps color 0 and
/// [`Label::matches`] bridges the gap.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StabilityCertificate {
    pub i: usize,
    pub j: usize,
    pub c1: Label,
    pub c2: Label,
}

impl StabilityCertificate {
    /// Branch whose shifted list starts at `start`, or None when `start`
    /// matches neither fixed label.
    pub fn branch_of(&self, start: Label) -> Option<Branch> {
        // When c1 and c2 share a value they are always both colored, so the
        // exact color decides; otherwise the value does.
        if self.c1.value == self.c2.value {
            if start.matches(self.c1) {
                return Some(Branch::Low);
            }
            if start.matches(self.c2) {
                return Some(Branch::High);
            }
            None
        } else if start.matches(self.c1) {
            Some(Branch::Low)
        } else if start.matches(self.c2) {
            Some(Branch::High)
        } else {
            None
        }
    }
}

impl fmt::Display for StabilityCertificate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "i={}, j={}, c1={}, c2={}",
            self.i, self.j, self.c1, self.c2
        )
    }
}

/// Why a rule fails the stability check.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StabilityWitness {
    /// A reachable production has fewer than two children, so it cannot
    /// host two fixed positions.
    TooFewChildren { label: Label, arity: usize },
    /// No fixed position pair survives these two reachable parents.
    NoCommonPair { first: Label, second: Label },
    /// Some position pair holds constant values but with conflicting
    /// nonzero colors, which would break digit identity.
    ColorConflict { first: Label, second: Label },
}

impl fmt::Display for StabilityWitness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StabilityWitness::TooFewChildren { label, arity } => write!(
                f,
                "production of ({label}) has {arity} child(ren), too few for two fixed positions"
            ),
            StabilityWitness::NoCommonPair { first, second } => write!(
                f,
                "productions of ({first}) and ({second}) admit no common fixed-position pair"
            ),
            StabilityWitness::ColorConflict { first, second } => write!(
                f,
                "productions of ({first}) and ({second}) color the fixed pair inconsistently"
            ),
        }
    }
}

/// Outcome of [`check_stability`]. Refusal is a value, not an error.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StabilityOutcome {
    Certified(StabilityCertificate),
    Refused(StabilityWitness),
}

impl StabilityOutcome {
    pub fn certificate(&self) -> Option<&StabilityCertificate> {
        match self {
            StabilityOutcome::Certified(c) => Some(c),
            StabilityOutcome::Refused(_) => None,
        }
    }
}

pub(crate) enum RuleSource {
    Builtin(Family),
    Dsl(DslRule),
}

/// Default bound for exhaustive reachability and stability checks.
pub const DEFAULT_LABEL_BOUND: u32 = 64;

/// An axiom plus a production map, with an optional stability certificate.
///
/// Values are immutable after construction; production and shifted-list
/// caches are interior but safe for concurrent readers.
pub struct SuccessionRule {
    name: String,
    axiom: Label,
    source: RuleSource,
    stability: Option<StabilityCertificate>,
    productions: RwLock<HashMap<u32, Arc<Production>>>,
    pub(crate) shifted_cache: RwLock<HashMap<(u32, Branch), Arc<[Label]>>>,
}

impl fmt::Debug for SuccessionRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SuccessionRule")
            .field("name", &self.name)
            .field("axiom", &self.axiom)
            .field("stability", &self.stability)
            .finish()
    }
}

/// Construct a built-in rule by name. `params` supplies `t` for `t_ary`
/// and `r` for `omega_r`.
pub fn builtin(name: &str, param: Option<u32>) -> Result<SuccessionRule> {
    let family = match (name, param) {
        ("catalan", None) => Family::Catalan,
        ("odd_fibonacci", None) => Family::OddFibonacci,
        ("fibonacci", None) => Family::Fibonacci,
        ("motzkin", None) => Family::Motzkin,
        ("t_ary", Some(t)) => {
            if t < 2 {
                return Err(Error::InvalidParam {
                    rule: "t_ary".into(),
                    msg: format!("t must be at least 2, got {t}"),
                });
            }
            Family::TAry(t)
        }
        ("omega_r", Some(r)) => {
            if r < 2 {
                return Err(Error::InvalidParam {
                    rule: "omega_r".into(),
                    msg: format!("r must be at least 2, got {r}"),
                });
            }
            Family::OmegaR(r)
        }
        ("schroder_s", None) => Family::SchroderS,
        ("grand_dyck", None) => Family::GrandDyck,
        ("factorial_p", None) => Family::FactorialP,
        ("factorial_naive", None) => Family::FactorialNaive,
        ("t_ary" | "omega_r", None) => {
            return Err(Error::InvalidParam {
                rule: name.into(),
                msg: "missing integer parameter".into(),
            })
        }
        (_, Some(_)) => {
            return Err(Error::InvalidParam {
                rule: name.into(),
                msg: "rule takes no parameter".into(),
            })
        }
        _ => return Err(Error::UnknownRule(name.into())),
    };
    Ok(SuccessionRule::from_family(family))
}

/// Names accepted by [`builtin`], in display order.
pub const BUILTIN_NAMES: &[&str] = &[
    "catalan",
    "odd_fibonacci",
    "fibonacci",
    "motzkin",
    "t_ary",
    "omega_r",
    "schroder_s",
    "grand_dyck",
    "factorial_p",
    "factorial_naive",
];

impl SuccessionRule {
    pub(crate) fn from_family(family: Family) -> SuccessionRule {
        let mut rule = SuccessionRule {
            name: family.name(),
            axiom: Label::new(family.axiom()),
            source: RuleSource::Builtin(family),
            stability: None,
            productions: RwLock::new(HashMap::new()),
            shifted_cache: RwLock::new(HashMap::new()),
        };
        if let StabilityOutcome::Certified(cert) =
            check_stability(&rule, DEFAULT_LABEL_BOUND)
        {
            rule.stability = Some(cert);
        }
        rule
    }

    pub(crate) fn from_dsl(dsl: DslRule, stability: Option<StabilityCertificate>) -> SuccessionRule {
        SuccessionRule {
            name: dsl.name.clone(),
            axiom: Label::new(dsl.axiom),
            source: RuleSource::Dsl(dsl),
            stability,
            productions: RwLock::new(HashMap::new()),
            shifted_cache: RwLock::new(HashMap::new()),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn axiom(&self) -> Label {
        self.axiom
    }

    pub fn family(&self) -> Option<Family> {
        match &self.source {
            RuleSource::Builtin(f) => Some(*f),
            RuleSource::Dsl(_) => None,
        }
    }

    pub fn stability(&self) -> Option<&StabilityCertificate> {
        self.stability.as_ref()
    }

    /// Expected word counts per length, when known for this rule.
    pub fn expected_counts(&self) -> Option<&'static [u64]> {
        self.family().and_then(Family::expected_counts)
    }

    /// The stability certificate, or the witness explaining refusal.
    pub fn require_stable(&self) -> Result<&StabilityCertificate> {
        match &self.stability {
            Some(cert) => Ok(cert),
            None => {
                let witness = match check_stability(self, DEFAULT_LABEL_BOUND) {
                    StabilityOutcome::Refused(w) => w,
                    // Unreachable in practice: construction would have
                    // attached the certificate.
                    StabilityOutcome::Certified(_) => StabilityWitness::NoCommonPair {
                        first: self.axiom,
                        second: self.axiom,
                    },
                };
                Err(Error::NotStable {
                    rule: self.name.clone(),
                    witness,
                })
            }
        }
    }

    /// Production of the label with this value, colors assigned. Shared
    /// across colored variants of the value ("s(k_2,*) = s(k_1,*)").
    pub fn production(&self, value: u32) -> Result<Arc<Production>> {
        if let Some(p) = self.productions.read().unwrap().get(&value) {
            return Ok(p.clone());
        }
        let values = match &self.source {
            RuleSource::Builtin(f) => f.child_values(value),
            RuleSource::Dsl(d) => d.child_values(value)?,
        }
        .ok_or_else(|| Error::UndefinedLabel(Label::new(value), self.name.clone()))?;
        let prod = Arc::new(Production::from_values(value, &values));
        self.productions
            .write()
            .unwrap()
            .entry(value)
            .or_insert(prod.clone());
        Ok(prod)
    }

    /// Production of a label; the color is ignored for lookup but kept as
    /// the parent in the returned value.
    pub fn production_of(&self, label: Label) -> Result<Production> {
        let p = self.production(label.value)?;
        Ok(Production {
            parent: label,
            children: p.children.clone(),
        })
    }

    /// Reachable label values, ascending, exploring children up to `bound`.
    pub fn reachable_values(&self, bound: u32) -> Result<Vec<u32>> {
        Ok(self.reachable_with_overflow(bound)?.0)
    }

    /// Reachable values up to `bound`, plus the child values that were cut
    /// off by the bound (the first layer past it), both ascending.
    fn reachable_with_overflow(&self, bound: u32) -> Result<(Vec<u32>, Vec<u32>)> {
        let mut seen = std::collections::BTreeSet::new();
        let mut overflow = std::collections::BTreeSet::new();
        let mut queue = Vec::new();
        if self.axiom.value <= bound {
            queue.push(self.axiom.value);
        } else {
            overflow.insert(self.axiom.value);
        }
        while let Some(v) = queue.pop() {
            if !seen.insert(v) {
                continue;
            }
            let prod = self.production(v)?;
            for child in &prod.children {
                if child.value <= bound {
                    if !seen.contains(&child.value) {
                        queue.push(child.value);
                    }
                } else {
                    overflow.insert(child.value);
                }
            }
        }
        Ok((
            seen.into_iter().collect(),
            overflow.into_iter().collect(),
        ))
    }

    /// Render the rule in the line-oriented DSL format.
    pub fn to_dsl_text(&self) -> String {
        match &self.source {
            RuleSource::Dsl(d) => d.to_text(self.stability.as_ref()),
            RuleSource::Builtin(f) => dsl::builtin_dsl_text(*f, self.stability.as_ref()),
        }
    }
}

enum PairFailure {
    Descending,
    ValueConflict(Label),
    ColorConflict(Label),
}

/// Try one fixed-position pair against every production.
fn try_pair(
    prods: &[Arc<Production>],
    i: usize,
    j: usize,
) -> std::result::Result<StabilityCertificate, PairFailure> {
    let first = &prods[0];
    let c1v = first.children[i - 1].value;
    let c2v = first.children[j - 1].value;
    if c1v > c2v {
        return Err(PairFailure::Descending);
    }
    if let Some(p) = prods
        .iter()
        .find(|p| p.children[i - 1].value != c1v || p.children[j - 1].value != c2v)
    {
        return Err(PairFailure::ValueConflict(p.parent));
    }
    // Colors at each position must be one nonzero index, optionally mixed
    // with 0; two distinct nonzero colors would break digit identity.
    let color_at = |pos: usize| -> std::result::Result<u32, Label> {
        let mut nonzero = 0u32;
        let mut saw_zero = false;
        for p in prods {
            let c = p.children[pos - 1].color;
            if c == 0 {
                saw_zero = true;
            } else if nonzero != 0 && nonzero != c {
                return Err(p.parent);
            } else {
                nonzero = c;
            }
        }
        // Mixed {0, m} collapses to the uncolored representative.
        Ok(if saw_zero { 0 } else { nonzero })
    };
    let col_i = color_at(i).map_err(PairFailure::ColorConflict)?;
    let col_j = color_at(j).map_err(PairFailure::ColorConflict)?;
    Ok(StabilityCertificate {
        i,
        j,
        c1: Label::colored(c1v, col_i),
        c2: Label::colored(c2v, col_j),
    })
}

/// Search for a stability certificate, exhaustively over reachable label
/// values up to `label_bound`. For DSL rules whose general case places
/// constant terms at the candidate positions, the certificate extends
/// symbolically to all larger labels; otherwise it is exhaustive up to
/// the bound.
pub fn check_stability(rule: &SuccessionRule, label_bound: u32) -> StabilityOutcome {
    check_stability_at(rule, label_bound, None)
}

/// As [`check_stability`], but restricted to one declared position pair
/// when `pinned` is given.
pub(crate) fn check_stability_at(
    rule: &SuccessionRule,
    label_bound: u32,
    pinned: Option<(usize, usize)>,
) -> StabilityOutcome {
    let (reachable, overflow) = match rule.reachable_with_overflow(label_bound) {
        Ok(r) => r,
        Err(_) => {
            // A reachable label without a production cannot be certified.
            return StabilityOutcome::Refused(StabilityWitness::NoCommonPair {
                first: rule.axiom,
                second: rule.axiom,
            });
        }
    };
    // Sample the first layer past the bound as well: for affine rule
    // shapes, agreement at two out-of-bound parents pins the general case.
    let samples = reachable
        .iter()
        .chain(overflow.iter().take(4))
        .copied()
        .collect::<Vec<_>>();
    let mut prods: Vec<Arc<Production>> = Vec::with_capacity(samples.len());
    for v in samples {
        match rule.production(v) {
            Ok(p) => prods.push(p),
            Err(_) => {
                return StabilityOutcome::Refused(StabilityWitness::NoCommonPair {
                    first: rule.axiom,
                    second: Label::new(v),
                })
            }
        }
    }
    if prods.is_empty() {
        return StabilityOutcome::Refused(StabilityWitness::NoCommonPair {
            first: rule.axiom,
            second: rule.axiom,
        });
    }

    // Every production needs at least two children.
    for p in &prods {
        if p.arity() < 2 {
            return StabilityOutcome::Refused(StabilityWitness::TooFewChildren {
                label: p.parent,
                arity: p.arity(),
            });
        }
    }

    let min_arity = prods.iter().map(|p| p.arity()).min().unwrap_or(0);
    let first_parent = prods[0].parent;
    let candidates: Vec<(usize, usize)> = match pinned {
        Some((i, j)) => {
            if j > min_arity {
                return StabilityOutcome::Refused(StabilityWitness::TooFewChildren {
                    label: prods.iter().min_by_key(|p| p.arity()).unwrap().parent,
                    arity: min_arity,
                });
            }
            vec![(i, j)]
        }
        None => (1..=min_arity)
            .flat_map(|i| ((i + 1)..=min_arity).map(move |j| (i, j)))
            .collect(),
    };

    let mut refusal_second = first_parent;
    let mut color_conflict = None;
    for (i, j) in candidates {
        match try_pair(&prods, i, j) {
            Ok(cert) => {
                // For DSL rules that keep growing past the bound, consult
                // the affine term structure of the general case: a position
                // whose covering term involves k cannot stay constant.
                if !overflow.is_empty() {
                    if let RuleSource::Dsl(d) = &rule.source {
                        use dsl::SymbolicValue as SV;
                        let bad = |pos: usize, want: u32| match d.symbolic_value_at(pos, label_bound)
                        {
                            SV::Varies => true,
                            SV::Constant(c) => c != want as i64,
                            SV::Unknown => false,
                        };
                        if bad(i, cert.c1.value) || bad(j, cert.c2.value) {
                            refusal_second = Label::new(overflow[0]);
                            continue;
                        }
                    }
                }
                return StabilityOutcome::Certified(cert);
            }
            Err(PairFailure::Descending) => {}
            Err(PairFailure::ValueConflict(parent)) => refusal_second = parent,
            Err(PairFailure::ColorConflict(parent)) => {
                color_conflict = Some(StabilityWitness::ColorConflict {
                    first: first_parent,
                    second: parent,
                });
            }
        }
    }
    StabilityOutcome::Refused(color_conflict.unwrap_or(StabilityWitness::NoCommonPair {
        first: first_parent,
        second: refusal_second,
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labels(spec: &[(u32, u32)]) -> Vec<Label> {
        spec.iter().map(|&(v, c)| Label::colored(v, c)).collect()
    }

    #[test]
    fn catalan_basics() {
        let rule = builtin("catalan", None).unwrap();
        assert_eq!(rule.axiom(), Label::new(2));
        let p = rule.production(3).unwrap();
        assert_eq!(p.children, labels(&[(2, 0), (3, 0), (4, 0)]));
        let cert = rule.stability().expect("catalan is stable");
        assert_eq!((cert.i, cert.j), (1, 2));
        assert_eq!(cert.c1, Label::new(2));
        assert_eq!(cert.c2, Label::new(3));
    }

    #[test]
    fn t_ary_two_matches_catalan() {
        let t2 = builtin("t_ary", Some(2)).unwrap();
        let cat = builtin("catalan", None).unwrap();
        for k in 2..=30 {
            assert_eq!(t2.production(k).unwrap(), cat.production(k).unwrap());
        }
    }

    #[test]
    fn schroder_and_grand_dyck_colors() {
        let s = builtin("schroder_s", None).unwrap();
        let p = s.production(3).unwrap();
        assert_eq!(p.children, labels(&[(3, 0), (4, 1), (4, 2)]));
        let p4 = s.production(4).unwrap();
        assert_eq!(p4.children, labels(&[(3, 0), (4, 0), (5, 1), (5, 2)]));

        let gd = builtin("grand_dyck", None).unwrap();
        let p2 = gd.production(2).unwrap();
        assert_eq!(p2.children, labels(&[(3, 1), (3, 2)]));
        let cert = gd.stability().unwrap();
        assert_eq!(cert.c1, Label::colored(3, 1));
        assert_eq!(cert.c2, Label::colored(3, 2));
    }

    #[test]
    fn factorial_p_certificate() {
        let rule = builtin("factorial_p", None).unwrap();
        let cert = rule.stability().unwrap();
        assert_eq!((cert.i, cert.j), (1, 2));
        assert_eq!(cert.c1, Label::new(2));
        assert_eq!(cert.c2, Label::new(4));
        let p = rule.production(4).unwrap();
        assert_eq!(p.children, labels(&[(2, 0), (4, 0), (6, 1), (6, 2)]));
    }

    #[test]
    fn stability_split_matches_families() {
        let stable = [
            ("catalan", None),
            ("odd_fibonacci", None),
            ("t_ary", Some(3)),
            ("omega_r", Some(3)),
            ("schroder_s", None),
            ("grand_dyck", None),
            ("factorial_p", None),
        ];
        for (name, p) in stable {
            let rule = builtin(name, p).unwrap();
            assert!(rule.stability().is_some(), "{name} should be stable");
        }
        for name in ["fibonacci", "motzkin", "factorial_naive"] {
            let rule = builtin(name, None).unwrap();
            assert!(rule.stability().is_none(), "{name} should be refused");
        }
    }

    #[test]
    fn fibonacci_witness_is_the_unit_production() {
        let rule = builtin("fibonacci", None).unwrap();
        match check_stability(&rule, 64) {
            StabilityOutcome::Refused(StabilityWitness::TooFewChildren { label, arity }) => {
                assert_eq!(label, Label::new(1));
                assert_eq!(arity, 1);
            }
            other => panic!("expected TooFewChildren, got {other:?}"),
        }
    }

    #[test]
    fn factorial_naive_refused_with_pair() {
        let rule = builtin("factorial_naive", None).unwrap();
        match check_stability(&rule, 64) {
            StabilityOutcome::Refused(StabilityWitness::NoCommonPair { .. }) => {}
            other => panic!("expected NoCommonPair, got {other:?}"),
        }
    }

    #[test]
    fn arity_matches_value() {
        for (name, p) in [
            ("catalan", None),
            ("odd_fibonacci", None),
            ("fibonacci", None),
            ("motzkin", None),
            ("t_ary", Some(3)),
            ("omega_r", Some(4)),
            ("schroder_s", None),
            ("grand_dyck", None),
            ("factorial_p", None),
            ("factorial_naive", None),
        ] {
            let rule = builtin(name, p).unwrap();
            for v in rule.reachable_values(30).unwrap() {
                let prod = rule.production(v).unwrap();
                assert_eq!(
                    prod.arity() as u32,
                    v,
                    "{name}: label ({v}) must have {v} children"
                );
            }
        }
    }

    #[test]
    fn unknown_and_invalid() {
        assert!(matches!(builtin("nope", None), Err(Error::UnknownRule(_))));
        assert!(matches!(
            builtin("t_ary", Some(1)),
            Err(Error::InvalidParam { .. })
        ));
        assert!(matches!(
            builtin("t_ary", None),
            Err(Error::InvalidParam { .. })
        ));
        let odd = builtin("odd_fibonacci", None).unwrap();
        assert!(matches!(odd.production(5), Err(Error::UndefinedLabel(..))));
    }

    #[test]
    fn color_assignment_is_pure() {
        let vals = [7, 3, 7, 7, 2];
        let a = Production::from_values(5, &vals);
        let b = Production::from_values(5, &vals);
        assert_eq!(a, b);
        assert_eq!(
            a.children,
            labels(&[(7, 1), (3, 0), (7, 2), (7, 3), (2, 0)])
        );
    }

    #[test]
    fn label_matching() {
        assert!(Label::new(4).matches(Label::colored(4, 1)));
        assert!(Label::colored(4, 1).matches(Label::new(4)));
        assert!(!Label::colored(3, 1).matches(Label::colored(3, 2)));
        assert!(!Label::new(4).matches(Label::new(5)));
        assert!(Label::colored(3, 2).matches(Label::colored(3, 2)));
    }

    #[test]
    fn label_tokens() {
        assert_eq!("3".parse::<Label>().unwrap(), Label::new(3));
        assert_eq!("4#2".parse::<Label>().unwrap(), Label::colored(4, 2));
        assert_eq!(Label::colored(4, 2).to_string(), "4#2");
        assert!("0".parse::<Label>().is_err());
        assert!("x#1".parse::<Label>().is_err());
    }
}
