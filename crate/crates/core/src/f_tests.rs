//! F-test plans per model variant and their evaluation against an ANOVA
//! table.
//!
//! When no single mean square has the expectation needed under the null
//! hypothesis, the statistic is a ratio of sums of mean squares and its
//! degrees of freedom are approximated. The primary df are Satterthwaite's;
//! for a side with exactly two mean squares both Ames–Webster orderings are
//! attached as alternates.

use std::fmt::Write as _;

use serde::Serialize;

use crate::design::{derived_effect_kind, DesignDims, EffectKind, ModelVariant, SourceId};
use crate::df_approx::{aw_pair, satterthwaite, AwEstimate, MsPoint, PairOrdering};
use crate::distributions::f_upper_tail;
use crate::ems::{ems, ems_sum, EmsExpression, Monomial, VarianceComponent};
use crate::error::{Error, Result};
use crate::sums_of_squares::AnovaTable;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Hypothesis {
    /// The source is random and its variance is zero.
    VarZero(VarianceComponent),
    /// The source is fixed and all its effects are zero.
    EffectsZero(SourceId),
}

impl Hypothesis {
    pub fn for_source(model: ModelVariant, source: SourceId) -> Self {
        match derived_effect_kind(model, source) {
            EffectKind::Fixed => Hypothesis::EffectsZero(source),
            EffectKind::Random => Hypothesis::VarZero(VarianceComponent(source)),
        }
    }

    /// The term that numerator minus denominator expectations must equal.
    pub fn tested_term(self) -> EmsExpression {
        match self {
            Hypothesis::EffectsZero(s) => EmsExpression::q(s),
            Hypothesis::VarZero(c) => EmsExpression::variance(c, Monomial::of(c.source().axes().complement())),
        }
    }
}

impl std::fmt::Display for Hypothesis {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Hypothesis::VarZero(c) => write!(f, "{c} = 0"),
            Hypothesis::EffectsZero(s) => write!(f, "all {} effects = 0", s.label()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FTestSpec {
    pub source: SourceId,
    pub numerator: Vec<SourceId>,
    pub denominator: Vec<SourceId>,
    pub hypothesis: Hypothesis,
}

impl FTestSpec {
    pub fn is_simple(&self) -> bool {
        self.numerator.len() == 1 && self.denominator.len() == 1
    }

    /// Ratio written out, e.g. `"(A + eAB) / (eA + AB)"`.
    pub fn ratio_label(&self) -> String {
        let side = |v: &[SourceId]| {
            let s = v.iter().map(|s| s.label()).collect::<Vec<_>>().join(" + ");
            if v.len() > 1 {
                format!("({s})")
            } else {
                s
            }
        };
        format!("{} / {}", side(&self.numerator), side(&self.denominator))
    }
}

// Plans in the order A, B, AB, C, AC, BC, ABC, written "numerator / denominator".
type PlanRows = [&'static str; 7];

const BLOCK_ROW: &str = "R, eAB / eA, eB";
const ERROR_ROWS: [(SourceId, &str); 3] =
    [(SourceId::EA, "eA / eAB"), (SourceId::EB, "eB / eAB"), (SourceId::EAB, "eAB / eT")];

const ALL_FIXED: PlanRows = ["A / eA", "B / eB", "AB / eAB", "C / eT", "AC / eT", "BC / eT", "ABC / eT"];

const ALL_RANDOM: PlanRows = [
    "A, eAB, ABC / eA, AB, AC",
    "B, eAB, ABC / eB, AB, BC",
    "AB, eT / eAB, ABC",
    "C, ABC / AC, BC",
    "AC / ABC",
    "BC / ABC",
    "ABC / eT",
];

const ONLY_A_RANDOM: PlanRows =
    ["A, eAB, ABC / eA, AB, AC", "B, eAB / eB, AB", "AB, eT / eAB, ABC", "C / AC", "AC / ABC", "BC / ABC", "ABC / eT"];

const ONLY_B_RANDOM: PlanRows =
    ["A, eAB / eA, AB", "B, eAB, ABC / eB, AB, BC", "AB, eT / eAB, ABC", "C / BC", "AC / ABC", "BC / ABC", "ABC / eT"];

const ONLY_C_RANDOM: PlanRows =
    ["A, eT / eA, AC", "B, eT / eB, BC", "AB, eT / eAB, ABC", "C, ABC / AC, BC", "AC / ABC", "BC / ABC", "ABC / eT"];

fn plan_rows(model: ModelVariant) -> &'static PlanRows {
    match model.code().as_str() {
        "FFF" => &ALL_FIXED,
        // with a single fixed factor the random-model ratios still apply
        "RRR" | "FRR" | "RFR" | "RRF" => &ALL_RANDOM,
        "RFF" => &ONLY_A_RANDOM,
        "FRF" => &ONLY_B_RANDOM,
        "FFR" => &ONLY_C_RANDOM,
        _ => unreachable!("a model variant has exactly three F/R letters"),
    }
}

fn parse_spec(model: ModelVariant, source: SourceId, row: &str) -> FTestSpec {
    let side = |s: &str| -> Vec<SourceId> {
        s.split(',').map(|t| t.trim().parse().unwrap_or_else(|_| panic!("bad plan row {row:?}"))).collect()
    };
    let (num, den) = row.split_once('/').unwrap_or_else(|| panic!("bad plan row {row:?}"));
    FTestSpec {
        source,
        numerator: side(num),
        denominator: side(den),
        hypothesis: Hypothesis::for_source(model, source),
    }
}

/// The eleven tests of `model` (every source but eT), in source order.
pub fn f_test_plan(model: ModelVariant) -> Vec<FTestSpec> {
    let rows = plan_rows(model);
    SourceId::ALL
        .into_iter()
        .filter(|&s| s != SourceId::ET)
        .map(|s| {
            let row = if s == SourceId::R {
                BLOCK_ROW
            } else if let Some((_, r)) = ERROR_ROWS.iter().find(|(e, _)| *e == s) {
                r
            } else {
                rows[SourceId::TREATMENTS.iter().position(|&t| t == s).expect("treatment")]
            };
            parse_spec(model, s, row)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum DfMethod {
    Exact,
    Satterthwaite,
    AmesWebster { r_used: f64, ordering: PairOrdering },
}

impl std::fmt::Display for DfMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            DfMethod::Exact => f.write_str("exact"),
            DfMethod::Satterthwaite => f.write_str("satterthwaite"),
            DfMethod::AmesWebster { r_used, ordering } => {
                let o = match ordering {
                    PairOrdering::Forward => "fwd",
                    PairOrdering::Reverse => "rev",
                };
                write!(f, "aw-{o}(r={r_used:.4})")
            }
        }
    }
}

/// Degrees of freedom of one side of the ratio and how they were obtained.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SideDf {
    pub df: f64,
    pub method: DfMethod,
}

impl SideDf {
    fn from_aw(e: AwEstimate) -> Self {
        SideDf { df: e.f_hat, method: DfMethod::AmesWebster { r_used: e.r_used, ordering: e.ordering } }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Alternate {
    pub df1: SideDf,
    pub df2: SideDf,
    pub p_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FTestResult {
    pub source: SourceId,
    pub hypothesis: Hypothesis,
    pub ratio: String,
    pub f_value: f64,
    pub df1: SideDf,
    pub df2: SideDf,
    /// `Exact` when both sides are single mean squares, else `Satterthwaite`.
    pub df_method: DfMethod,
    pub p_value: f64,
    pub alternates: Vec<Alternate>,
}

struct Side {
    primary: SideDf,
    /// Ames–Webster forward, reverse and selected, when the side is a pair.
    aw: Option<[Option<SideDf>; 3]>,
}

fn side_df(table: &AnovaTable, sources: &[SourceId]) -> Result<Side> {
    if let [s] = sources {
        let row = table.row(*s);
        return Ok(Side { primary: SideDf { df: row.df as f64, method: DfMethod::Exact }, aw: None });
    }
    let points: Vec<MsPoint> =
        sources.iter().map(|&s| table.row(s)).filter(|r| r.ms > 0.0).map(|r| MsPoint { ms: r.ms, df: r.df }).collect();
    let df = if points.is_empty() {
        // degenerate all-zero side: nothing to weight by, use the plain total
        sources.iter().map(|&s| table.row(s).df as f64).sum()
    } else {
        satterthwaite(&points)?
    };
    let primary = SideDf { df, method: DfMethod::Satterthwaite };
    let aw = match (sources.len(), &points[..]) {
        (2, [p, q]) => {
            let pair = aw_pair(*p, *q)?;
            Some([
                pair.forward.map(SideDf::from_aw),
                pair.reverse.map(SideDf::from_aw),
                pair.selected().map(SideDf::from_aw),
            ])
        }
        _ => None,
    };
    Ok(Side { primary, aw })
}

fn p_value(f: f64, df1: f64, df2: f64) -> Result<f64> {
    f_upper_tail(f, df1, df2)
}

/// Evaluates every spec of `plan` against `table`.
pub fn evaluate(plan: &[FTestSpec], table: &AnovaTable) -> Result<Vec<FTestResult>> {
    plan.iter().map(|spec| evaluate_one(spec, table)).collect()
}

fn evaluate_one(spec: &FTestSpec, table: &AnovaTable) -> Result<FTestResult> {
    let sum = |v: &[SourceId]| v.iter().map(|&s| table.ms(s)).sum::<f64>();
    let (num, den) = (sum(&spec.numerator), sum(&spec.denominator));
    if den.is_nan() || den <= 0.0 {
        return Err(Error::NonPositiveDenominator { tested: spec.source, value: den });
    }
    let f_value = num / den;
    let (n, d) = (side_df(table, &spec.numerator)?, side_df(table, &spec.denominator)?);
    let p = p_value(f_value, n.primary.df, d.primary.df)?;

    let mut alternates = Vec::new();
    let mut push = |df1: SideDf, df2: SideDf| -> Result<()> {
        alternates.push(Alternate { df1, df2, p_value: p_value(f_value, df1.df, df2.df)? });
        Ok(())
    };
    for alt in n.aw.iter().flat_map(|a| a[..2].iter().flatten()) {
        push(*alt, d.primary)?;
    }
    for alt in d.aw.iter().flat_map(|a| a[..2].iter().flatten()) {
        push(n.primary, *alt)?;
    }
    let selected = |s: &Side| s.aw.and_then(|a| a[2]);
    if selected(&n).is_some() || selected(&d).is_some() {
        push(selected(&n).unwrap_or(n.primary), selected(&d).unwrap_or(d.primary))?;
    }

    let df_method = if spec.is_simple() { DfMethod::Exact } else { DfMethod::Satterthwaite };
    Ok(FTestResult {
        source: spec.source,
        hypothesis: spec.hypothesis,
        ratio: spec.ratio_label(),
        f_value,
        df1: n.primary,
        df2: d.primary,
        df_method,
        p_value: p,
        alternates,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExactnessEntry {
    pub source: SourceId,
    /// E(numerator) − E(denominator).
    pub difference: String,
    /// The difference minus the tested term; empty when the test is exact.
    pub residual: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExactnessReport {
    pub model: ModelVariant,
    pub entries: Vec<ExactnessEntry>,
}

/// Checks that every test of `model` isolates exactly its tested term, both
/// symbolically and with coefficients evaluated at `dims`.
pub fn verify_exactness(model: ModelVariant, dims: DesignDims) -> Result<ExactnessReport> {
    let mut entries = Vec::new();
    for spec in f_test_plan(model) {
        let side = |v: &[SourceId]| ems_sum(v.iter().map(|&s| ems(model, s)).collect::<Vec<_>>().iter());
        let difference = side(&spec.numerator) - side(&spec.denominator);
        let residual = difference.clone() - spec.hypothesis.tested_term();
        let numeric_ok = residual.coefficients(dims).is_empty() && residual.q_terms().next().is_none();
        if !residual.is_zero() || !numeric_ok {
            return Err(Error::ExactnessViolation { tested: spec.source, residual: residual.to_string() });
        }
        entries.push(ExactnessEntry {
            source: spec.source,
            difference: difference.to_string(),
            residual: String::new(),
        });
    }
    Ok(ExactnessReport { model, entries })
}

/// ANOVA table joined with its F tests, ready for printing.
#[derive(Debug, Clone, Serialize)]
pub struct AnovaReport {
    pub model: ModelVariant,
    pub alpha: f64,
    pub table: AnovaTable,
    pub tests: Vec<FTestResult>,
}

impl AnovaReport {
    pub fn new(model: ModelVariant, table: AnovaTable, alpha: f64) -> Result<Self> {
        let tests = evaluate(&f_test_plan(model), &table)?;
        Ok(AnovaReport { model, alpha, table, tests })
    }

    pub fn test(&self, source: SourceId) -> Option<&FTestResult> {
        self.tests.iter().find(|t| t.source == source)
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("Model {} (alpha = {})\n", self.model, self.alpha);
        let _ = writeln!(
            s,
            "{:<6}{:>5}{:>13}{:>12}{:>10}{:>9}{:>9}  {:<14}{:>10}  ",
            "Source", "df", "SS", "MS", "F", "df1", "df2", "method", "p"
        );
        for row in &self.table.rows {
            let _ = write!(s, "{:<6}{:>5}{:>13.4}{:>12.4}", row.source.label(), row.df, row.ss, row.ms);
            if let Some(t) = self.test(row.source) {
                let mark = if t.p_value < self.alpha { "*" } else { "" };
                let _ = write!(
                    s,
                    "{:>10.2}{:>9.2}{:>9.2}  {:<14}{:>10.4}  {mark}",
                    t.f_value,
                    t.df1.df,
                    t.df2.df,
                    t.df_method.to_string(),
                    t.p_value
                );
            }
            s.push('\n');
        }
        let _ = writeln!(s, "{:<6}{:>5}{:>13.4}", "Total", self.table.total_df(), self.table.total_ss());
        let with_alts: Vec<_> = self.tests.iter().filter(|t| !t.alternates.is_empty()).collect();
        if !with_alts.is_empty() {
            s.push_str("\nAmes-Webster alternatives:\n");
            for t in with_alts {
                let _ = writeln!(s, "  {}: F = {}", t.source.label(), t.ratio);
                for a in &t.alternates {
                    let _ = writeln!(
                        s,
                        "    df1 {:>8.3} {:<26} df2 {:>8.3} {:<26} p {:.4}",
                        a.df1.df,
                        a.df1.method.to_string(),
                        a.df2.df,
                        a.df2.method.to_string(),
                        a.p_value
                    );
                }
            }
        }
        s
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("source,df,ss,ms,f,df1,df2,method,p,significant\n");
        for row in &self.table.rows {
            let _ = write!(s, "{},{},{},{}", row.source.label(), row.df, row.ss, row.ms);
            match self.test(row.source) {
                Some(t) => {
                    let _ = writeln!(
                        s,
                        ",{},{},{},{},{},{}",
                        t.f_value,
                        t.df1.df,
                        t.df2.df,
                        t.df_method,
                        t.p_value,
                        t.p_value < self.alpha
                    );
                }
                None => s.push_str(",,,,,,\n"),
            }
        }
        s
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(s: &str) -> ModelVariant {
        s.parse().unwrap()
    }

    fn golden_table() -> AnovaTable {
        let dims = DesignDims::new(2, 4, 3, 3).unwrap();
        AnovaTable::from_mean_squares(
            dims,
            [9.4758, 10.9903, 0.4220, 7.3937, 2.5387, 11.2718, 0.3141, 3.1476, 2.3759, 1.8678, 3.2911, 1.4921],
        )
    }

    fn spec_of(model: &str, source: SourceId) -> FTestSpec {
        f_test_plan(m(model)).into_iter().find(|s| s.source == source).unwrap()
    }

    #[test]
    fn plan_examples() {
        let a = spec_of("FFF", SourceId::A);
        assert_eq!((a.numerator, a.denominator), (vec![SourceId::A], vec![SourceId::EA]));
        assert_eq!(a.hypothesis, Hypothesis::EffectsZero(SourceId::A));

        let c = spec_of("RRR", SourceId::C);
        assert_eq!(c.numerator, vec![SourceId::C, SourceId::ABC]);
        assert_eq!(c.denominator, vec![SourceId::AC, SourceId::BC]);
        assert_eq!(c.hypothesis, Hypothesis::VarZero(VarianceComponent(SourceId::C)));

        let a = spec_of("FFR", SourceId::A);
        assert_eq!(a.numerator, vec![SourceId::A, SourceId::ET]);
        assert_eq!(a.denominator, vec![SourceId::EA, SourceId::AC]);
        assert_eq!(a.hypothesis, Hypothesis::EffectsZero(SourceId::A));
    }

    #[test]
    fn plans_have_eleven_disjoint_tests_and_shared_block_test() {
        let block = spec_of("FFF", SourceId::R);
        for model in ModelVariant::all() {
            let plan = f_test_plan(model);
            assert_eq!(plan.len(), 11);
            assert!(plan.iter().all(|s| s.source != SourceId::ET));
            for s in &plan {
                assert!(s.numerator.iter().all(|x| !s.denominator.contains(x)), "{model} {}", s.source);
                assert_eq!(s.numerator[0], s.source);
            }
            let r = &plan[0];
            assert_eq!((&r.numerator, &r.denominator), (&block.numerator, &block.denominator));
        }
    }

    #[test]
    fn single_fixed_factor_reuses_random_plan() {
        for (code, fixed) in [("FRR", SourceId::A), ("RFR", SourceId::B), ("RRF", SourceId::C)] {
            for (x, y) in f_test_plan(m(code)).iter().zip(f_test_plan(m("RRR"))) {
                assert_eq!((&x.numerator, &x.denominator), (&y.numerator, &y.denominator));
                let expected_fixed = x.source == fixed;
                assert_eq!(matches!(x.hypothesis, Hypothesis::EffectsZero(_)), expected_fixed, "{code}");
            }
        }
    }

    #[test]
    fn golden_fixed_f_values() {
        let results = evaluate(&f_test_plan(m("FFF")), &golden_table()).unwrap();
        let f = |s| results.iter().find(|r| r.source == s).unwrap().f_value;
        for (s, expected) in [
            (SourceId::A, 26.04),
            (SourceId::B, 2.91),
            (SourceId::AB, 35.89),
            (SourceId::C, 2.11),
            (SourceId::AC, 1.59),
            (SourceId::BC, 1.25),
            (SourceId::ABC, 2.21),
        ] {
            assert!((f(s) - expected).abs() < 0.01, "{s}: {}", f(s));
        }
    }

    #[test]
    fn constant_mean_squares_give_unit_f() {
        let dims = DesignDims::new(3, 4, 3, 5).unwrap();
        let table = AnovaTable::from_mean_squares(dims, [2.5; 12]);
        for model in ModelVariant::all() {
            for r in evaluate(&f_test_plan(model), &table).unwrap() {
                assert!((r.f_value - 1.0).abs() < 1e-12, "{model} {}", r.source);
                assert!((0.0..=1.0).contains(&r.p_value));
            }
        }
    }

    #[test]
    fn simple_tests_are_exact_complex_get_alternates() {
        let results = evaluate(&f_test_plan(m("RRR")), &golden_table()).unwrap();
        for r in &results {
            let spec = spec_of("RRR", r.source);
            if spec.is_simple() {
                assert_eq!(r.df_method, DfMethod::Exact);
                assert!(r.alternates.is_empty());
            } else {
                assert_eq!(r.df_method, DfMethod::Satterthwaite);
            }
            assert!((r.p_value - f_upper_tail(r.f_value, r.df1.df, r.df2.df).unwrap()).abs() < 1e-15);
        }
        // AB: (AB + eT)/(eAB + ABC); denominator pair eAB/ABC has r* defined both ways
        let ab = results.iter().find(|r| r.source == SourceId::AB).unwrap();
        let den_aw: Vec<_> =
            ab.alternates.iter().filter(|a| matches!(a.df2.method, DfMethod::AmesWebster { .. })).collect();
        assert!(den_aw.len() >= 2);
        assert!(den_aw.iter().all(|a| (6.0..=18.0).contains(&a.df2.df)));
        // A has three-term sides: Satterthwaite only
        let a = results.iter().find(|r| r.source == SourceId::A).unwrap();
        assert!(a.alternates.is_empty());
    }

    #[test]
    fn scaling_mean_squares_keeps_f_and_df() {
        let t = golden_table();
        let ms: Vec<f64> = t.rows.iter().map(|r| r.ms * 7.3).collect();
        let scaled = AnovaTable::from_mean_squares(t.dims, ms.try_into().unwrap());
        for model in ModelVariant::all() {
            let a = evaluate(&f_test_plan(model), &t).unwrap();
            let b = evaluate(&f_test_plan(model), &scaled).unwrap();
            for (x, y) in a.iter().zip(&b) {
                assert!((x.f_value - y.f_value).abs() < 1e-10 * x.f_value.max(1.0));
                assert!((x.df1.df - y.df1.df).abs() < 1e-9 && (x.df2.df - y.df2.df).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn zero_denominator_is_an_error() {
        let dims = DesignDims::new(2, 2, 2, 2).unwrap();
        let mut ms = [1.0; 12];
        ms[2] = 0.0; // eA
        let table = AnovaTable::from_mean_squares(dims, ms);
        let err = evaluate(&f_test_plan(m("FFF")), &table).unwrap_err();
        assert!(matches!(err, Error::NonPositiveDenominator { tested: SourceId::A, .. }));
    }

    #[test]
    fn exactness_examples() {
        let dims = DesignDims::new(2, 4, 3, 3).unwrap();
        for model in ModelVariant::all() {
            let report = verify_exactness(model, dims).unwrap();
            assert_eq!(report.entries.len(), 11);
            assert!(report.entries.iter().all(|e| e.residual.is_empty()));
        }
        let fff = verify_exactness(m("FFF"), dims).unwrap();
        assert_eq!(fff.entries.iter().find(|e| e.source == SourceId::C).unwrap().difference, "Q(C)");
        let rff = verify_exactness(m("RFF"), dims).unwrap();
        assert_eq!(rff.entries.iter().find(|e| e.source == SourceId::B).unwrap().difference, "Q(B)");
        let rrr = verify_exactness(m("RRR"), dims).unwrap();
        assert_eq!(rrr.entries.iter().find(|e| e.source == SourceId::A).unwrap().difference, "bcrσ²_A");
    }

    #[test]
    fn report_formats() {
        let report = AnovaReport::new(m("FFF"), golden_table(), 0.05).unwrap();
        assert_eq!(report.to_csv().lines().count(), 13);
        assert!(report.to_text().contains("Total"));
        let json: serde_json::Value = serde_json::from_str(&report.to_json()).unwrap();
        assert_eq!(json["tests"].as_array().unwrap().len(), 11);
    }
}
