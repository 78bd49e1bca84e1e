//! Lower and upper bounds on the half-marginal average purity per qubit
//! count, with the existence verdict they imply.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use tesh_conic::{SolveStatus, SolverSettings};
use tesh_core::enumerator::lp_lower_bound;
use tesh_core::fixtures::te_fixtures;
use tesh_core::purity_bound::{upper_bound_with, PurityBound, RelaxationLimits};
use tesh_core::separability::{verify_te, DEFAULT_AS_TOL};
use tesh_core::state::average_marginal_purity;
use tesh_core::Result;

use crate::nrange::NRange;

pub const BOUNDS_FORMAT: &str = "tesh-bounds-v1";

/// Margin by which the lower bound must exceed the upper bound before
/// existence is ruled out.
pub const VERDICT_MARGIN: f64 = 1e-6;

const SEVEN_QUBIT_NOTE: &str =
    "plain LP value; the SDP strengthening of the LP for seven qubits is not implemented";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    /// A shipped state verifies as threshold-entangled.
    ExistsKnown,
    Open,
    /// Lower bound above upper bound.
    Impossible,
    /// A solver did not reach optimality.
    Undetermined,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::ExistsKnown => "exists-known",
            Verdict::Open => "open",
            Verdict::Impossible => "impossible",
            Verdict::Undetermined => "undetermined",
        }
    }
}

/// A shipped state cited as a witness.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixtureCitation {
    pub name: String,
    pub verified: bool,
    pub average_purity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundsRow {
    pub n: usize,
    /// Marginal size `⌊n/2⌋`.
    pub m: usize,
    pub lower_bound: Option<f64>,
    pub lp_status: SolveStatus,
    pub lp_seconds: f64,
    pub upper_bound: Option<f64>,
    pub sdp_level: usize,
    /// Solver status, or the reason no relaxation was solved.
    pub sdp_status: String,
    pub sdp_seconds: f64,
    pub moment_matrix_side: Option<usize>,
    pub verdict: Verdict,
    /// `upper − lower`; negative when existence is ruled out.
    pub gap_width: Option<f64>,
    pub fixtures: Vec<FixtureCitation>,
    /// Every verified fixture lies between the two bounds.
    pub sandwich_holds: bool,
    pub note: Option<String>,
}

impl BoundsRow {
    pub fn solved(&self) -> bool {
        self.lower_bound.is_some() && self.upper_bound.is_some()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundsReport {
    pub format: String,
    pub n_range: String,
    pub sdp_level: usize,
    pub solver: SolverSettings,
    pub limits: RelaxationLimits,
    pub rows: Vec<BoundsRow>,
}

impl BoundsReport {
    pub fn all_solved(&self) -> bool {
        self.rows.iter().all(|r| r.solved() && r.sandwich_holds)
    }

    pub fn row(&self, n: usize) -> Option<&BoundsRow> {
        self.rows.iter().find(|r| r.n == n)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,m,lower_bound,upper_bound,sdp_level,verdict,gap_width,fixtures,note\n");
        for r in &self.rows {
            let fixtures: Vec<&str> = r.fixtures.iter().filter(|f| f.verified).map(|f| f.name.as_str()).collect();
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{}",
                r.n,
                r.m,
                opt(r.lower_bound),
                opt(r.upper_bound),
                r.sdp_level,
                r.verdict.as_str(),
                opt(r.gap_width),
                fixtures.join(";"),
                csv_field(r.note.as_deref().unwrap_or("")),
            );
        }
        out
    }

    pub fn to_markdown(&self) -> String {
        let mut out = String::from(
            "| n | m | lower bound (LP) | upper bound (SDP) | level | verdict | gap width | witnesses |\n\
             |---|---|---|---|---|---|---|---|\n",
        );
        let mut notes = Vec::new();
        for r in &self.rows {
            let fixtures: Vec<&str> = r.fixtures.iter().filter(|f| f.verified).map(|f| f.name.as_str()).collect();
            let mark = if r.note.is_some() { "*" } else { "" };
            let _ = writeln!(
                out,
                "| {}{mark} | {} | {} | {} | {} | {} | {} | {} |",
                r.n,
                r.m,
                opt(r.lower_bound),
                opt(r.upper_bound),
                r.sdp_level,
                r.verdict.as_str(),
                opt(r.gap_width),
                fixtures.join(", "),
            );
            if let Some(note) = &r.note {
                notes.push(format!("\\* n = {}: {note}.", r.n));
            }
        }
        for note in notes {
            out.push('\n');
            out.push_str(&note);
            out.push('\n');
        }
        out
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.7}")).unwrap_or_else(|| "-".into())
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn upper(m: usize, level: usize, limits: &RelaxationLimits, settings: &SolverSettings) -> (Option<PurityBound>, String) {
    match upper_bound_with(m, level, limits, settings) {
        Ok(b) => {
            let status = serde_json::to_value(b.status)
                .ok()
                .and_then(|v| v.as_str().map(String::from))
                .unwrap_or_default();
            (Some(b), status)
        }
        Err(e) => (None, e.to_string()),
    }
}

/// Runs both bounds for every `n` in `range` (which must lie in `4..=9`).
/// Upper bounds depend only on `⌊n/2⌋` and are solved once per marginal
/// size.
pub fn build_table(
    range: NRange,
    level: usize,
    limits: &RelaxationLimits,
    settings: &SolverSettings,
) -> Result<BoundsReport> {
    let mut ub_cache: BTreeMap<usize, (Option<PurityBound>, String)> = BTreeMap::new();
    let mut rows = Vec::new();
    for n in range.iter() {
        let m = n / 2;
        let lp = lp_lower_bound(n)?;
        let (ub, sdp_status) = ub_cache
            .entry(m)
            .or_insert_with(|| upper(m, level, limits, settings))
            .clone();
        let lower_bound = lp.value;
        let upper_bound = ub.as_ref().and_then(|b| b.value);

        let mut fixtures = Vec::new();
        for f in te_fixtures(n) {
            let psi = f.state();
            fixtures.push(FixtureCitation {
                name: f.name.to_string(),
                verified: verify_te(&psi, DEFAULT_AS_TOL)?.verdict,
                average_purity: average_marginal_purity(&psi, m)?,
            });
        }
        let sandwich_holds = fixtures.iter().filter(|f| f.verified).all(|f| {
            lower_bound.map_or(true, |lb| f.average_purity >= lb - VERDICT_MARGIN)
                && upper_bound.map_or(true, |ub| f.average_purity <= ub + VERDICT_MARGIN)
        });

        let verdict = match (lower_bound, upper_bound) {
            (Some(lb), Some(ub)) if lb > ub + VERDICT_MARGIN => Verdict::Impossible,
            _ if fixtures.iter().any(|f| f.verified) => Verdict::ExistsKnown,
            (Some(_), Some(_)) => Verdict::Open,
            _ => Verdict::Undetermined,
        };
        rows.push(BoundsRow {
            n,
            m,
            lower_bound,
            lp_status: lp.status,
            lp_seconds: lp.seconds,
            upper_bound,
            sdp_level: level,
            sdp_status,
            sdp_seconds: ub.as_ref().map_or(0.0, |b| b.seconds),
            moment_matrix_side: ub.as_ref().map(|b| b.moment_matrix_side),
            verdict,
            gap_width: lower_bound.zip(upper_bound).map(|(lb, ub)| ub - lb),
            fixtures,
            sandwich_holds,
            note: (n == 7).then(|| SEVEN_QUBIT_NOTE.to_string()),
        });
    }
    Ok(BoundsReport {
        format: BOUNDS_FORMAT.to_string(),
        n_range: range.to_string(),
        sdp_level: level,
        solver: *settings,
        limits: *limits,
        rows,
    })
}
