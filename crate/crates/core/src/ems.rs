//! Expected mean squares for the eight model variants.
//!
//! Each E(MS) is a linear combination of variance components with
//! coefficients that are products of the level counts `a`, `b`, `c`, `r`,
//! plus at most one opaque fixed-effect quadratic term. The tables are
//! stored as data in a compact written form (`"bcr A + bc eA + eT"`) and
//! parsed on lookup; coefficients stay symbolic until evaluated at a
//! particular [`DesignDims`].

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Neg, Sub};

use serde::Serialize;

use crate::design::{derived_effect_kind, Axis, AxisSet, DesignDims, EffectKind, ModelVariant, SourceId};

/// Variance of the random term belonging to a source (σ²_R, σ²_A, ...,
/// σ²_eT). There is exactly one per source.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct VarianceComponent(pub SourceId);

impl VarianceComponent {
    pub fn all() -> impl Iterator<Item = VarianceComponent> {
        SourceId::ALL.into_iter().map(VarianceComponent)
    }

    pub fn source(self) -> SourceId {
        self.0
    }
}

impl fmt::Display for VarianceComponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "σ²_{}", self.0.label())
    }
}

/// Fixed-effect quadratic term of a source: its df-normalized sum of
/// squared effects, zero exactly under the source's null hypothesis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct QTerm {
    pub owner: SourceId,
}

impl fmt::Display for QTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Q({})", self.owner.label())
    }
}

/// Product of a subset of the level counts {a, b, c, r}.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Monomial(AxisSet);

impl Monomial {
    pub const ONE: Monomial = Monomial(AxisSet::EMPTY);

    /// Product of the level counts of the axes in `set`.
    pub fn of(set: AxisSet) -> Self {
        Monomial(set)
    }

    pub fn eval(self, dims: DesignDims) -> i64 {
        dims.product(self.0) as i64
    }

    fn parse(s: &str) -> Option<Self> {
        if s == "1" {
            return Some(Monomial::ONE);
        }
        let mut set = AxisSet::EMPTY;
        for ch in s.chars() {
            let axis = match ch {
                'r' => Axis::Block,
                'a' => Axis::A,
                'b' => Axis::B,
                'c' => Axis::C,
                _ => return None,
            };
            set = AxisSet(set.0 | axis.bit());
        }
        Some(Monomial(set))
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("1");
        }
        for (axis, ch) in [(Axis::A, 'a'), (Axis::B, 'b'), (Axis::C, 'c'), (Axis::Block, 'r')] {
            if self.0.contains(axis) {
                write!(f, "{ch}")?;
            }
        }
        Ok(())
    }
}

/// Symbolic E(MS): Σ count · monomial · σ² + Σ count · Q.
///
/// Counts are integers so expressions can be added and subtracted; a single
/// table entry always has count 1 on every term.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct EmsExpression {
    terms: BTreeMap<(VarianceComponent, Monomial), i64>,
    q_terms: BTreeMap<QTerm, i64>,
}

impl EmsExpression {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn variance(component: VarianceComponent, coefficient: Monomial) -> Self {
        let mut e = Self::zero();
        e.terms.insert((component, coefficient), 1);
        e
    }

    pub fn q(owner: SourceId) -> Self {
        let mut e = Self::zero();
        e.q_terms.insert(QTerm { owner }, 1);
        e
    }

    /// Parses the written form used for the tables, e.g.
    /// `"Q + bc eA + c eAB + eT"`; `Q` belongs to `owner`.
    pub fn parse(text: &str, owner: SourceId) -> Option<Self> {
        let mut e = Self::zero();
        for term in text.split('+').map(str::trim) {
            let part = match term.split_whitespace().collect::<Vec<_>>()[..] {
                ["Q"] => Self::q(owner),
                [comp] => Self::variance(VarianceComponent(comp.parse().ok()?), Monomial::ONE),
                [mono, comp] => Self::variance(VarianceComponent(comp.parse().ok()?), Monomial::parse(mono)?),
                _ => return None,
            };
            e = e + part;
        }
        Some(e)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty() && self.q_terms.is_empty()
    }

    /// Numeric coefficient of `component` at `dims`.
    pub fn coefficient(&self, component: VarianceComponent, dims: DesignDims) -> i64 {
        self.terms.iter().filter(|((c, _), _)| *c == component).map(|((_, m), n)| n * m.eval(dims)).sum()
    }

    /// Nonzero numeric coefficients at `dims`.
    pub fn coefficients(&self, dims: DesignDims) -> BTreeMap<VarianceComponent, i64> {
        let mut out = BTreeMap::new();
        for ((c, m), n) in &self.terms {
            *out.entry(*c).or_insert(0) += n * m.eval(dims);
        }
        out.retain(|_, v| *v != 0);
        out
    }

    /// Symbolic terms as `(component, monomial, count)`.
    pub fn symbolic_terms(&self) -> impl Iterator<Item = (VarianceComponent, Monomial, i64)> + '_ {
        self.terms.iter().map(|(&(c, m), &n)| (c, m, n))
    }

    pub fn q_terms(&self) -> impl Iterator<Item = (QTerm, i64)> + '_ {
        self.q_terms.iter().map(|(&q, &n)| (q, n))
    }

    pub fn components(&self) -> impl Iterator<Item = VarianceComponent> + '_ {
        let mut v: Vec<_> = self.terms.keys().map(|(c, _)| *c).collect();
        v.dedup();
        v.into_iter()
    }

    /// Numeric value given variance components and Q values.
    pub fn evaluate(
        &self,
        dims: DesignDims,
        sigma2: impl Fn(VarianceComponent) -> f64,
        q_value: impl Fn(SourceId) -> f64,
    ) -> f64 {
        let var: f64 = self.terms.iter().map(|((c, m), n)| (n * m.eval(dims)) as f64 * sigma2(*c)).sum();
        let q: f64 = self.q_terms.iter().map(|(q, n)| *n as f64 * q_value(q.owner)).sum();
        var + q
    }

    /// The expression with coefficients evaluated at `dims`, e.g.
    /// `"Q(A) + 9σ²_eA + 3σ²_eAB + σ²_eT"`.
    pub fn display_at(&self, dims: DesignDims) -> String {
        let parts = self
            .q_terms
            .iter()
            .map(|(q, n)| (*n, q.to_string()))
            .chain(self.coefficients(dims).into_iter().map(|(c, n)| (n, c.to_string())));
        join_signed(parts)
    }

    fn normalize(mut self) -> Self {
        self.terms.retain(|_, n| *n != 0);
        self.q_terms.retain(|_, n| *n != 0);
        self
    }
}

fn join_signed(parts: impl Iterator<Item = (i64, String)>) -> String {
    let mut s = String::new();
    for (n, body) in parts {
        let coef = match n.abs() {
            1 => String::new(),
            k => k.to_string(),
        };
        if s.is_empty() {
            if n < 0 {
                s.push('-');
            }
        } else {
            s.push_str(if n < 0 { " - " } else { " + " });
        }
        s.push_str(&coef);
        s.push_str(&body);
    }
    if s.is_empty() {
        s.push('0');
    }
    s
}

impl fmt::Display for EmsExpression {
    /// Symbolic form, e.g. `"Q(B) + acσ²_eB + crσ²_AB + σ²_eT"`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts =
            self.q_terms.iter().map(|(q, n)| (*n, q.to_string())).chain(self.terms.iter().map(|((c, m), n)| {
                let mono = if *m == Monomial::ONE { String::new() } else { m.to_string() };
                (*n, format!("{mono}{c}"))
            }));
        f.write_str(&join_signed(parts))
    }
}

impl Add for EmsExpression {
    type Output = EmsExpression;

    fn add(mut self, rhs: EmsExpression) -> EmsExpression {
        for (k, n) in rhs.terms {
            *self.terms.entry(k).or_insert(0) += n;
        }
        for (k, n) in rhs.q_terms {
            *self.q_terms.entry(k).or_insert(0) += n;
        }
        self.normalize()
    }
}

impl Neg for EmsExpression {
    type Output = EmsExpression;

    fn neg(mut self) -> EmsExpression {
        self.terms.values_mut().for_each(|n| *n = -*n);
        self.q_terms.values_mut().for_each(|n| *n = -*n);
        self
    }
}

impl Sub for EmsExpression {
    type Output = EmsExpression;

    fn sub(self, rhs: EmsExpression) -> EmsExpression {
        self + (-rhs)
    }
}

/// Coefficient-wise sum; Q terms are collected with multiplicity.
pub fn ems_sum<'a>(exprs: impl IntoIterator<Item = &'a EmsExpression>) -> EmsExpression {
    exprs.into_iter().fold(EmsExpression::zero(), |acc, e| acc + e.clone())
}

// Rows not depending on the variant: random blocks and the four error strata.
const RANDOM_BLOCKS: &str = "abc R + bc eA + ac eB + c eAB + eT";
const FIXED_BLOCKS: &str = "Q + bc eA + ac eB + c eAB + eT";
const ERROR_A: &str = "bc eA + c eAB + eT";
const ERROR_B: &str = "ac eB + c eAB + eT";
const ERROR_AB: &str = "c eAB + eT";
const ERROR_T: &str = "eT";

// Treatment rows in the order A, B, AB, C, AC, BC, ABC.
type TreatmentRows = [&'static str; 7];

const ALL_FIXED: TreatmentRows =
    ["Q + bc eA + c eAB + eT", "Q + ac eB + c eAB + eT", "Q + c eAB + eT", "Q + eT", "Q + eT", "Q + eT", "Q + eT"];

const ALL_RANDOM: TreatmentRows = [
    "bcr A + bc eA + cr AB + c eAB + br AC + r ABC + eT",
    "acr B + ac eB + cr AB + c eAB + ar BC + r ABC + eT",
    "cr AB + c eAB + r ABC + eT",
    "abr C + br AC + ar BC + r ABC + eT",
    "br AC + r ABC + eT",
    "ar BC + r ABC + eT",
    "r ABC + eT",
];

const ONLY_A_FIXED: TreatmentRows = [
    "Q + bc eA + cr AB + c eAB + br AC + r ABC + eT",
    "acr B + ac eB + cr AB + c eAB + ar BC + r ABC + eT",
    "cr AB + c eAB + r ABC + eT",
    "abr C + br AC + ar BC + r ABC + eT",
    "br AC + r ABC + eT",
    "ar BC + r ABC + eT",
    "r ABC + eT",
];

const ONLY_B_FIXED: TreatmentRows = [
    "bcr A + bc eA + cr AB + c eAB + br AC + r ABC + eT",
    "Q + ac eB + cr AB + c eAB + ar BC + r ABC + eT",
    "cr AB + c eAB + r ABC + eT",
    "abr C + br AC + ar BC + r ABC + eT",
    "br AC + r ABC + eT",
    "ar BC + r ABC + eT",
    "r ABC + eT",
];

const ONLY_C_FIXED: TreatmentRows = [
    "bcr A + bc eA + cr AB + c eAB + br AC + r ABC + eT",
    "acr B + ac eB + cr AB + c eAB + ar BC + r ABC + eT",
    "cr AB + c eAB + r ABC + eT",
    "Q + br AC + ar BC + r ABC + eT",
    "br AC + r ABC + eT",
    "ar BC + r ABC + eT",
    "r ABC + eT",
];

const ONLY_A_RANDOM: TreatmentRows = [
    "bcr A + bc eA + cr AB + c eAB + br AC + r ABC + eT",
    "Q + ac eB + cr AB + c eAB + r ABC + eT",
    "cr AB + c eAB + r ABC + eT",
    "Q + br AC + r ABC + eT",
    "br AC + r ABC + eT",
    "Q + r ABC + eT",
    "r ABC + eT",
];

const ONLY_B_RANDOM: TreatmentRows = [
    "Q + bc eA + cr AB + c eAB + r ABC + eT",
    "acr B + ac eB + cr AB + c eAB + ar BC + r ABC + eT",
    "cr AB + c eAB + r ABC + eT",
    "Q + ar BC + r ABC + eT",
    "Q + r ABC + eT",
    "ar BC + r ABC + eT",
    "r ABC + eT",
];

const ONLY_C_RANDOM: TreatmentRows = [
    "Q + bc eA + c eAB + br AC + r ABC + eT",
    "Q + ac eB + c eAB + ar BC + r ABC + eT",
    "Q + r ABC + c eAB + eT",
    "abr C + br AC + ar BC + r ABC + eT",
    "br AC + r ABC + eT",
    "ar BC + r ABC + eT",
    "r ABC + eT",
];

fn treatment_rows(model: ModelVariant) -> &'static TreatmentRows {
    match model.code().as_str() {
        "FFF" => &ALL_FIXED,
        "RRR" => &ALL_RANDOM,
        "FRR" => &ONLY_A_FIXED,
        "RFR" => &ONLY_B_FIXED,
        "RRF" => &ONLY_C_FIXED,
        "RFF" => &ONLY_A_RANDOM,
        "FRF" => &ONLY_B_RANDOM,
        "FFR" => &ONLY_C_RANDOM,
        _ => unreachable!("a model variant has exactly three F/R letters"),
    }
}

fn parse_row(text: &str, owner: SourceId) -> EmsExpression {
    EmsExpression::parse(text, owner).unwrap_or_else(|| panic!("malformed EMS table row {text:?}"))
}

/// E(MS) of `source` under `model`, with random blocks.
pub fn ems(model: ModelVariant, source: SourceId) -> EmsExpression {
    let text = match source {
        SourceId::R => RANDOM_BLOCKS,
        SourceId::EA => ERROR_A,
        SourceId::EB => ERROR_B,
        SourceId::EAB => ERROR_AB,
        SourceId::ET => ERROR_T,
        treatment => {
            let pos = SourceId::TREATMENTS.iter().position(|&s| s == treatment).expect("treatment source");
            treatment_rows(model)[pos]
        }
    };
    parse_row(text, source)
}

/// E(MS_R) if blocks were fixed. Not used by any test plan.
pub fn fixed_block_ems_r() -> EmsExpression {
    parse_row(FIXED_BLOCKS, SourceId::R)
}

/// Whether `ems(model, source)` carries a Q term.
pub fn has_q_term(model: ModelVariant, source: SourceId) -> bool {
    derived_effect_kind(model, source) == EffectKind::Fixed
}
