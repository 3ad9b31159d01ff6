use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{CandidatePair, Method};
use crate::corpus::PairLabel;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelCount {
    pub label: PairLabel,
    pub count: usize,
    /// Share of the method's annotated pairs, in percent.
    pub percent: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodRow {
    pub method: Method,
    pub counts: Vec<LabelCount>,
    /// Annotated pairs; unlabeled ones are not part of the total.
    pub total: usize,
    pub unlabeled: usize,
    /// Pairs found by this method and no other, as `[query_id, candidate_id, label]`.
    pub exclusive: Vec<(String, String, PairLabel)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodsReport {
    pub rows: Vec<MethodRow>,
}

fn percent(count: usize, total: usize) -> f64 {
    if total == 0 {
        0.0
    } else {
        100.0 * count as f64 / total as f64
    }
}

/// Per-method label counts over each method's own pool of pairs, plus the
/// pairs each method found alone.
pub fn compare_methods(runs: &[(Method, Vec<CandidatePair>)]) -> MethodsReport {
    let keys: Vec<BTreeSet<(String, String)>> = runs
        .iter()
        .map(|(_, pairs)| pairs.iter().map(CandidatePair::key).collect())
        .collect();
    let rows = runs
        .iter()
        .enumerate()
        .map(|(i, (method, pairs))| {
            let mut tally: BTreeMap<PairLabel, usize> = BTreeMap::new();
            for p in pairs {
                *tally.entry(p.label).or_default() += 1;
            }
            let total: usize = PairLabel::ANNOTATED.iter().map(|l| tally.get(l).copied().unwrap_or(0)).sum();
            let counts = PairLabel::ANNOTATED
                .iter()
                .map(|&label| {
                    let count = tally.get(&label).copied().unwrap_or(0);
                    LabelCount {
                        label,
                        count,
                        percent: percent(count, total),
                    }
                })
                .collect();
            let mut exclusive: Vec<(String, String, PairLabel)> = pairs
                .iter()
                .filter(|p| {
                    let key = p.key();
                    keys.iter().enumerate().all(|(j, other)| j == i || !other.contains(&key))
                })
                .map(|p| (p.query_id.clone(), p.candidate_id.clone(), p.label))
                .collect();
            exclusive.sort();
            MethodRow {
                method: *method,
                counts,
                total,
                unlabeled: tally.get(&PairLabel::Unlabeled).copied().unwrap_or(0),
                exclusive,
            }
        })
        .collect();
    MethodsReport { rows }
}

/// Formats a count with its share, e.g. `46 (4.17%)`.
pub(crate) fn cell(count: usize, percent: f64) -> String {
    format!("{count} ({percent:.2}%)")
}

impl MethodsReport {
    pub fn to_text(&self) -> String {
        let mut header = vec!["Method".to_string()];
        header.extend(PairLabel::ANNOTATED.iter().map(|l| l.heading().to_string()));
        header.push("Total".into());
        header.push("Unlabeled".into());
        let mut lines = vec![header];
        for row in &self.rows {
            let mut line = vec![row.method.to_string()];
            line.extend(row.counts.iter().map(|c| cell(c.count, c.percent)));
            line.push(row.total.to_string());
            line.push(row.unlabeled.to_string());
            lines.push(line);
        }
        let widths: Vec<usize> = (0..lines[0].len())
            .map(|c| lines.iter().map(|l| l[c].chars().count()).max().unwrap_or(0))
            .collect();

        let mut out = String::new();
        for line in &lines {
            let cells: Vec<String> = line
                .iter()
                .zip(&widths)
                .map(|(s, &w)| format!("{s:<w$}"))
                .collect();
            out.push_str(cells.join("  ").trim_end());
            out.push('\n');
        }
        for row in &self.rows {
            if row.exclusive.is_empty() {
                continue;
            }
            let near = row.exclusive.iter().filter(|e| e.2 == PairLabel::NearDuplicate).count();
            writeln!(
                out,
                "\nOnly {}: {} pairs, {} near-duplicate",
                row.method,
                row.exclusive.len(),
                near
            )
            .expect("String write");
            for (q, c, label) in &row.exclusive {
                writeln!(out, "  {q}\t{c}\t{label}").expect("String write");
            }
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}
