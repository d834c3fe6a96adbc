//! Re-analysis of a strip-split layout as if it came from a three-way
//! factorial in blocks or from a split-split plot, to show how the choice of
//! error terms changes the conclusions.
//!
//! All three analyses are fixed-effects and share the same orthogonal
//! decomposition; they differ only in how the error strata are pooled.

use std::fmt::Write as _;

use serde::Serialize;

use crate::data::BalancedLayout;
use crate::design::SourceId;
use crate::design::SourceId::{A, AB, ABC, AC, B, BC, C, EA, EAB, EB, ET, R};
use crate::distributions::f_upper_tail;
use crate::error::Result;
use crate::sums_of_squares::{anova_table, AnovaTable};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum DesignKind {
    StripSplit,
    Factorial,
    SplitSplit,
}

impl DesignKind {
    pub fn name(self) -> &'static str {
        match self {
            DesignKind::StripSplit => "strip-split plot",
            DesignKind::Factorial => "factorial",
            DesignKind::SplitSplit => "split-split plot",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RowTest {
    pub f_value: f64,
    /// Label of the error row used as denominator.
    pub error: String,
    pub df1: usize,
    pub df2: usize,
    pub p_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonRow {
    pub label: String,
    /// Strip-split sources pooled into this row.
    pub pooled: Vec<SourceId>,
    pub df: usize,
    pub ss: f64,
    pub ms: f64,
    /// `None` for rows without a test, or when the error mean square is zero.
    pub test: Option<RowTest>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonTable {
    pub design: DesignKind,
    pub rows: Vec<ComparisonRow>,
}

impl ComparisonTable {
    pub fn row(&self, label: &str) -> Option<&ComparisonRow> {
        self.rows.iter().find(|r| r.label == label)
    }

    pub fn total_ss(&self) -> f64 {
        self.rows.iter().map(|r| r.ss).sum()
    }

    pub fn total_df(&self) -> usize {
        self.rows.iter().map(|r| r.df).sum()
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("{} design\n", self.design.name());
        let _ = writeln!(s, "{:<8}{:>5}{:>14}{:>12}{:>9}{:>11}", "Source", "df", "SS", "MS", "F", "p");
        for r in &self.rows {
            let _ = write!(s, "{:<8}{:>5}{:>14.4}{:>12.4}", r.label, r.df, r.ss, r.ms);
            if let Some(t) = &r.test {
                let _ = write!(s, "{:>9.2}{:>11.4}  /{}", t.f_value, t.p_value, t.error);
            }
            s.push('\n');
        }
        s
    }
}

// Pools strip-split rows; `groups` lists (label, members, error label).
fn build(
    table: &AnovaTable,
    design: DesignKind,
    groups: &[(&str, &[SourceId], Option<&str>)],
) -> Result<ComparisonTable> {
    let mut rows: Vec<ComparisonRow> = groups
        .iter()
        .map(|(label, members, _)| {
            let df = members.iter().map(|&s| table.row(s).df).sum();
            let ss = members.iter().map(|&s| table.row(s).ss).sum::<f64>();
            ComparisonRow { label: label.to_string(), pooled: members.to_vec(), df, ss, ms: ss / df as f64, test: None }
        })
        .collect();
    for (k, (_, _, error)) in groups.iter().enumerate() {
        let Some(error) = error else { continue };
        let e = rows.iter().find(|r| r.label == *error).expect("error row exists").clone();
        let row = &mut rows[k];
        if e.ms > 0.0 {
            let f_value = row.ms / e.ms;
            let p_value = f_upper_tail(f_value, row.df as f64, e.df as f64)?;
            row.test = Some(RowTest { f_value, error: e.label, df1: row.df, df2: e.df, p_value });
        }
    }
    Ok(ComparisonTable { design, rows })
}

/// The strip-split analysis with its fixed-model tests for the treatments.
pub fn strip_split_from_table(table: &AnovaTable) -> Result<ComparisonTable> {
    build(
        table,
        DesignKind::StripSplit,
        &[
            ("R", &[R], None),
            ("A", &[A], Some("eA")),
            ("eA", &[EA], None),
            ("B", &[B], Some("eB")),
            ("eB", &[EB], None),
            ("AB", &[AB], Some("eAB")),
            ("eAB", &[EAB], None),
            ("C", &[C], Some("eT")),
            ("AC", &[AC], Some("eT")),
            ("BC", &[BC], Some("eT")),
            ("ABC", &[ABC], Some("eT")),
            ("eT", &[ET], None),
        ],
    )
}

/// Three-way factorial in blocks: all four error strata pooled into one
/// residual that tests every treatment source.
pub fn factorial_from_table(table: &AnovaTable) -> Result<ComparisonTable> {
    build(
        table,
        DesignKind::Factorial,
        &[
            ("R", &[R], None),
            ("A", &[A], Some("eT")),
            ("B", &[B], Some("eT")),
            ("AB", &[AB], Some("eT")),
            ("C", &[C], Some("eT")),
            ("AC", &[AC], Some("eT")),
            ("BC", &[BC], Some("eT")),
            ("ABC", &[ABC], Some("eT")),
            ("eT", &[EA, EB, EAB, ET], None),
        ],
    )
}

/// Split-split plot: the block × B error is absorbed into the block × A × B
/// error, which then tests B and AB.
pub fn split_split_from_table(table: &AnovaTable) -> Result<ComparisonTable> {
    build(
        table,
        DesignKind::SplitSplit,
        &[
            ("R", &[R], None),
            ("A", &[A], Some("eA")),
            ("eA", &[EA], None),
            ("B", &[B], Some("eAB")),
            ("AB", &[AB], Some("eAB")),
            ("eAB", &[EB, EAB], None),
            ("C", &[C], Some("eT")),
            ("AC", &[AC], Some("eT")),
            ("BC", &[BC], Some("eT")),
            ("ABC", &[ABC], Some("eT")),
            ("eT", &[ET], None),
        ],
    )
}

pub fn factorial_anova(layout: &BalancedLayout) -> Result<ComparisonTable> {
    factorial_from_table(&anova_table(layout))
}

pub fn split_split_anova(layout: &BalancedLayout) -> Result<ComparisonTable> {
    split_split_from_table(&anova_table(layout))
}

/// A treatment whose significance differs between designs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Divergence {
    pub source: SourceId,
    /// Significance in strip-split, factorial and split-split order.
    pub significant: [bool; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Comparison {
    pub alpha: f64,
    pub tables: [ComparisonTable; 3],
    pub divergences: Vec<Divergence>,
}

pub fn compare_tables(table: &AnovaTable, alpha: f64) -> Result<Comparison> {
    let tables = [strip_split_from_table(table)?, factorial_from_table(table)?, split_split_from_table(table)?];
    let divergences = SourceId::TREATMENTS
        .into_iter()
        .filter_map(|s| {
            let significant = std::array::from_fn(|k| {
                tables[k].row(s.label()).and_then(|r| r.test.as_ref()).is_some_and(|t| t.p_value < alpha)
            });
            let differs = significant.iter().any(|&x| x != significant[0]);
            differs.then_some(Divergence { source: s, significant })
        })
        .collect();
    Ok(Comparison { alpha, tables, divergences })
}

pub fn compare_designs(layout: &BalancedLayout, alpha: f64) -> Result<Comparison> {
    compare_tables(&anova_table(layout), alpha)
}

impl Comparison {
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for t in &self.tables {
            s.push_str(&t.to_text());
            s.push('\n');
        }
        if self.divergences.is_empty() {
            let _ = writeln!(s, "No treatment changes significance at alpha = {}.", self.alpha);
        } else {
            let _ = writeln!(s, "Significance at alpha = {} differs between designs:", self.alpha);
            for d in &self.divergences {
                let parts: Vec<String> = self
                    .tables
                    .iter()
                    .zip(d.significant)
                    .map(|(t, sig)| format!("{} {}", t.design.name(), if sig { "yes" } else { "no" }))
                    .collect();
                let _ = writeln!(s, "  {}: {}", d.source.label(), parts.join(", "));
            }
        }
        s
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("design,source,df,ss,ms,f,error,p,significant\n");
        for t in &self.tables {
            for r in &t.rows {
                let _ = write!(s, "{},{},{},{},{}", t.design.name(), r.label, r.df, r.ss, r.ms);
                match &r.test {
                    Some(x) => {
                        let _ = writeln!(s, ",{},{},{},{}", x.f_value, x.error, x.p_value, x.p_value < self.alpha);
                    }
                    None => s.push_str(",,,,\n"),
                }
            }
        }
        s
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("comparison serializes")
    }
}
