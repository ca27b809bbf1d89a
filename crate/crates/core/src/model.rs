//! Typed election results: per-unit vote records, hierarchical polling ids,
//! and the units × candidates vote matrix every metric consumes.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;
use unicode_normalization::UnicodeNormalization;

/// Default separator between territorial levels inside a `polling_id`.
pub const DEFAULT_SEPARATOR: char = '|';

/// Unit key used when everything is aggregated into a single national unit.
pub const NATIONAL_UNIT: &str = "national";

/// Tolerance on per-unit rate sums in source files.
pub const RATE_SUM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("no vote records supplied")]
    EmptyInput,
    #[error("negative vote count {value} for candidate `{candidate}` in unit `{polling_id}`")]
    NegativeVotes {
        polling_id: String,
        candidate: String,
        value: i64,
    },
    #[error("polling id `{polling_id}` has {found} levels, {required} required")]
    MalformedPollingId {
        polling_id: String,
        required: usize,
        found: usize,
    },
    #[error("an election needs at least two candidates, found {0}")]
    TooFewCandidates(usize),
    #[error("an election needs at least one unit")]
    NoUnits,
    #[error("vote matrix is {rows}x{cols}, expected {units}x{candidates}")]
    ShapeMismatch {
        rows: usize,
        cols: usize,
        units: usize,
        candidates: usize,
    },
    #[error("vote weight {value} at unit {unit}, candidate {candidate} is not a finite non-negative number")]
    InvalidWeight {
        unit: usize,
        candidate: usize,
        value: f64,
    },
    #[error("election has zero total votes")]
    ZeroTotalVotes,
    #[error("duplicate label `{0}`")]
    DuplicateLabel(String),
    #[error("vote count {value} at unit `{unit}` is not an integer")]
    NonIntegralVotes { unit: String, value: f64 },
}

/// Normalizes a label to Unicode NFC so visually identical names compare equal.
pub fn normalize_label(label: &str) -> String {
    label.trim().nfc().collect()
}

/// One candidate's result in one voting unit.
#[derive(Debug, Clone, PartialEq)]
pub struct VoteRecord {
    pub polling_id: String,
    pub candidate: String,
    pub value: i64,
    /// 1-based rank of the candidate inside its unit.
    pub rank: u32,
    /// `false` for abstention, blank and null pseudo-rows.
    pub is_real_candidate: bool,
    pub rate: f64,
}

impl VoteRecord {
    /// A real-candidate record with rank and rate left for [`assign_ranks_and_rates`].
    pub fn new(polling_id: impl Into<String>, candidate: impl Into<String>, value: i64) -> Self {
        VoteRecord {
            polling_id: polling_id.into(),
            candidate: candidate.into(),
            value,
            rank: 0,
            is_real_candidate: true,
            rate: 0.0,
        }
    }

    pub fn pseudo(polling_id: impl Into<String>, label: impl Into<String>, value: i64) -> Self {
        VoteRecord {
            is_real_candidate: false,
            ..VoteRecord::new(polling_id, label, value)
        }
    }
}

/// Recomputes `rank` and `rate` of every record from the vote counts of its unit.
///
/// Ranks order by descending votes; equal counts are ordered by candidate label.
pub fn assign_ranks_and_rates(records: &mut [VoteRecord]) {
    let mut by_unit: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (idx, r) in records.iter().enumerate() {
        by_unit.entry(r.polling_id.as_str()).or_default().push(idx);
    }
    let groups: Vec<Vec<usize>> = by_unit.into_values().collect();
    for mut idxs in groups {
        idxs.sort_by(|&a, &b| {
            records[b]
                .value
                .cmp(&records[a].value)
                .then_with(|| records[a].candidate.cmp(&records[b].candidate))
        });
        let total: i64 = idxs.iter().map(|&i| records[i].value.max(0)).sum();
        for (pos, &i) in idxs.iter().enumerate() {
            records[i].rank = pos as u32 + 1;
            records[i].rate = if total > 0 {
                records[i].value.max(0) as f64 / total as f64
            } else {
                0.0
            };
        }
    }
}

/// Positional view of a hierarchical `polling_id` such as `R01|PROV|COMM|ST7`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PollingIdFormat {
    pub separator: char,
}

impl Default for PollingIdFormat {
    fn default() -> Self {
        PollingIdFormat {
            separator: DEFAULT_SEPARATOR,
        }
    }
}

impl PollingIdFormat {
    pub fn levels<'a>(&self, polling_id: &'a str) -> Vec<&'a str> {
        polling_id.split(self.separator).collect()
    }

    pub fn depth(&self, polling_id: &str) -> usize {
        polling_id.split(self.separator).count()
    }

    pub fn join<S: AsRef<str>>(&self, levels: &[S]) -> String {
        let sep = self.separator.to_string();
        levels
            .iter()
            .map(|s| s.as_ref())
            .collect::<Vec<_>>()
            .join(&sep)
    }

    /// The key of the unit containing `polling_id` at `level`.
    pub fn unit_key(&self, polling_id: &str, level: AggregationLevel) -> Result<String, ModelError> {
        match level {
            AggregationLevel::Unit => Ok(polling_id.to_string()),
            AggregationLevel::Prefix(0) => Ok(NATIONAL_UNIT.to_string()),
            AggregationLevel::Prefix(depth) => {
                let levels = self.levels(polling_id);
                if levels.len() < depth {
                    return Err(ModelError::MalformedPollingId {
                        polling_id: polling_id.to_string(),
                        required: depth,
                        found: levels.len(),
                    });
                }
                Ok(self.join(&levels[..depth]))
            }
        }
    }
}

/// Which territorial level forms a unit of the vote matrix.
///
/// `Prefix(d)` keeps the first `d` components of the polling id, so
/// `Prefix(0)` is the whole country and `Unit` is the finest level available.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AggregationLevel {
    Unit,
    Prefix(usize),
}

impl AggregationLevel {
    /// `true` when `self` is at least as coarse as `other`.
    pub fn is_ancestor_of(self, other: AggregationLevel) -> bool {
        match (self, other) {
            (_, AggregationLevel::Unit) => true,
            (AggregationLevel::Unit, AggregationLevel::Prefix(_)) => false,
            (AggregationLevel::Prefix(a), AggregationLevel::Prefix(b)) => a <= b,
        }
    }
}

impl fmt::Display for AggregationLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AggregationLevel::Unit => write!(f, "unit"),
            AggregationLevel::Prefix(d) => write!(f, "{d}"),
        }
    }
}

impl std::str::FromStr for AggregationLevel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "unit" => Ok(AggregationLevel::Unit),
            "national" => Ok(AggregationLevel::Prefix(0)),
            other => other
                .parse::<usize>()
                .map(AggregationLevel::Prefix)
                .map_err(|_| format!("invalid aggregation level `{other}`: expected `unit`, `national` or a depth")),
        }
    }
}

/// Territorial metadata for one unit, joined to results through `polling_id`.
#[derive(Debug, Clone, PartialEq)]
pub struct LocationRecord {
    pub polling_id: String,
    /// Named components, coarsest first.
    pub levels: Vec<(String, String)>,
    pub value: Option<i64>,
    pub rate: Option<f64>,
}

impl LocationRecord {
    /// Whether the level values reproduce the polling id under `format`.
    pub fn is_consistent(&self, format: &PollingIdFormat) -> bool {
        let parts: Vec<&str> = self.levels.iter().map(|(_, v)| v.as_str()).collect();
        format.join(&parts) == self.polling_id
    }
}

/// M units × N candidates table of non-negative vote weights and the derived shares.
///
/// Votes are stored as `f64`; integer counts from files are exact well beyond
/// any real electorate, and synthetic generators may produce fractional weights.
#[derive(Debug, Clone, PartialEq)]
pub struct ElectionMatrix {
    units: Vec<String>,
    candidates: Vec<String>,
    votes: Vec<f64>,
    shares: Vec<f64>,
    unit_totals: Vec<f64>,
    candidate_totals: Vec<f64>,
    overall_share: Vec<f64>,
    total: f64,
}

impl ElectionMatrix {
    /// Builds a matrix from per-unit rows of votes, one column per candidate.
    pub fn new(
        units: Vec<String>,
        candidates: Vec<String>,
        votes: Vec<Vec<f64>>,
    ) -> Result<Self, ModelError> {
        let n = candidates.len();
        let m = units.len();
        if n < 2 {
            return Err(ModelError::TooFewCandidates(n));
        }
        if m == 0 {
            return Err(ModelError::NoUnits);
        }
        check_unique(&units)?;
        check_unique(&candidates)?;
        if votes.len() != m || votes.iter().any(|row| row.len() != n) {
            return Err(ModelError::ShapeMismatch {
                rows: votes.len(),
                cols: votes.iter().map(Vec::len).find(|&c| c != n).unwrap_or(n),
                units: m,
                candidates: n,
            });
        }
        let mut flat = Vec::with_capacity(m * n);
        for (k, row) in votes.iter().enumerate() {
            for (i, &v) in row.iter().enumerate() {
                if !v.is_finite() || v < 0.0 {
                    return Err(ModelError::InvalidWeight {
                        unit: k,
                        candidate: i,
                        value: v,
                    });
                }
                flat.push(v);
            }
        }

        let unit_totals: Vec<f64> = flat.chunks(n).map(|row| row.iter().sum()).collect();
        let mut candidate_totals = vec![0.0; n];
        for row in flat.chunks(n) {
            for (acc, v) in candidate_totals.iter_mut().zip(row) {
                *acc += v;
            }
        }
        let total: f64 = candidate_totals.iter().sum();
        if total <= 0.0 {
            return Err(ModelError::ZeroTotalVotes);
        }
        let shares = flat
            .chunks(n)
            .zip(&unit_totals)
            .flat_map(|(row, &t)| row.iter().map(move |&v| if t > 0.0 { v / t } else { 0.0 }))
            .collect();
        let overall_share = candidate_totals.iter().map(|&c| c / total).collect();

        Ok(ElectionMatrix {
            units,
            candidates,
            votes: flat,
            shares,
            unit_totals,
            candidate_totals,
            overall_share,
            total,
        })
    }

    pub fn n_units(&self) -> usize {
        self.units.len()
    }

    pub fn n_candidates(&self) -> usize {
        self.candidates.len()
    }

    pub fn units(&self) -> &[String] {
        &self.units
    }

    pub fn candidates(&self) -> &[String] {
        &self.candidates
    }

    pub fn candidate_index(&self, label: &str) -> Option<usize> {
        self.candidates.iter().position(|c| c == label)
    }

    pub fn unit_index(&self, label: &str) -> Option<usize> {
        self.units.iter().position(|u| u == label)
    }

    #[inline]
    pub fn votes(&self, unit: usize, candidate: usize) -> f64 {
        self.votes[unit * self.candidates.len() + candidate]
    }

    #[inline]
    pub fn share(&self, unit: usize, candidate: usize) -> f64 {
        self.shares[unit * self.candidates.len() + candidate]
    }

    pub fn unit_votes(&self, unit: usize) -> &[f64] {
        let n = self.candidates.len();
        &self.votes[unit * n..(unit + 1) * n]
    }

    pub fn unit_shares(&self, unit: usize) -> &[f64] {
        let n = self.candidates.len();
        &self.shares[unit * n..(unit + 1) * n]
    }

    pub fn unit_total(&self, unit: usize) -> f64 {
        self.unit_totals[unit]
    }

    pub fn candidate_total(&self, candidate: usize) -> f64 {
        self.candidate_totals[candidate]
    }

    pub fn total_votes(&self) -> f64 {
        self.total
    }

    /// National vote share of each candidate, in candidate order.
    pub fn overall_share(&self) -> &[f64] {
        &self.overall_share
    }

    /// Indices of units whose total is zero. They stay in the matrix with
    /// all-zero shares and drop out of every weighted sum.
    pub fn zero_vote_units(&self) -> Vec<usize> {
        (0..self.units.len())
            .filter(|&k| self.unit_totals[k] == 0.0)
            .collect()
    }

    /// Vote rows in unit order.
    pub fn vote_rows(&self) -> Vec<Vec<f64>> {
        self.votes
            .chunks(self.candidates.len())
            .map(<[f64]>::to_vec)
            .collect()
    }

    /// Rebuilds the matrix with every unit label passed through `f`.
    pub fn relabel_units<F: FnMut(usize, &str) -> String>(&self, mut f: F) -> Result<Self, ModelError> {
        let units = self
            .units
            .iter()
            .enumerate()
            .map(|(k, u)| f(k, u))
            .collect();
        ElectionMatrix::new(units, self.candidates.clone(), self.vote_rows())
    }

    /// One record per (unit, candidate) cell, including zero cells, with ranks
    /// and rates recomputed. Fails if a cell holds a fractional weight.
    pub fn to_records(&self) -> Result<Vec<VoteRecord>, ModelError> {
        let mut out = Vec::with_capacity(self.votes.len());
        for (k, unit) in self.units.iter().enumerate() {
            for (i, cand) in self.candidates.iter().enumerate() {
                let v = self.votes(k, i);
                if v.fract() != 0.0 || v > i64::MAX as f64 {
                    return Err(ModelError::NonIntegralVotes {
                        unit: unit.clone(),
                        value: v,
                    });
                }
                out.push(VoteRecord::new(unit.clone(), cand.clone(), v as i64));
            }
        }
        assign_ranks_and_rates(&mut out);
        Ok(out)
    }
}

fn check_unique(labels: &[String]) -> Result<(), ModelError> {
    let mut seen = BTreeSet::new();
    for l in labels {
        if !seen.insert(l.as_str()) {
            return Err(ModelError::DuplicateLabel(l.clone()));
        }
    }
    Ok(())
}

/// Selects the unit level (and polling-id separator) used to group records.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct UnitKey {
    pub level: AggregationLevel,
    pub format: PollingIdFormat,
}

impl UnitKey {
    pub fn new(level: AggregationLevel) -> Self {
        UnitKey {
            level,
            format: PollingIdFormat::default(),
        }
    }

    pub fn with_separator(mut self, separator: char) -> Self {
        self.format.separator = separator;
        self
    }
}

impl Default for UnitKey {
    fn default() -> Self {
        UnitKey::new(AggregationLevel::Unit)
    }
}

/// Sums records into a matrix whose units are the polling-id prefixes selected by `key`.
///
/// Units and candidates are ordered lexicographically so the result does not
/// depend on record order. Candidates missing from a unit get zero votes there.
pub fn build_matrix(records: &[VoteRecord], key: &UnitKey) -> Result<ElectionMatrix, ModelError> {
    build_matrix_with_candidates(records, key, &[])
}

/// Like [`build_matrix`], but `extra_candidates` are added as columns even
/// when no record mentions them.
pub fn build_matrix_with_candidates(
    records: &[VoteRecord],
    key: &UnitKey,
    extra_candidates: &[String],
) -> Result<ElectionMatrix, ModelError> {
    if records.is_empty() {
        return Err(ModelError::EmptyInput);
    }
    let mut candidates: BTreeSet<String> = extra_candidates.iter().map(|c| normalize_label(c)).collect();
    let mut cells: BTreeMap<String, BTreeMap<String, u128>> = BTreeMap::new();
    for r in records {
        if r.value < 0 {
            return Err(ModelError::NegativeVotes {
                polling_id: r.polling_id.clone(),
                candidate: r.candidate.clone(),
                value: r.value,
            });
        }
        let unit = key.format.unit_key(&r.polling_id, key.level)?;
        let cand = normalize_label(&r.candidate);
        candidates.insert(cand.clone());
        *cells.entry(unit).or_default().entry(cand).or_insert(0) += r.value as u128;
    }
    let candidates: Vec<String> = candidates.into_iter().collect();
    let mut units = Vec::with_capacity(cells.len());
    let mut rows = Vec::with_capacity(cells.len());
    for (unit, counts) in cells {
        rows.push(
            candidates
                .iter()
                .map(|c| counts.get(c).copied().unwrap_or(0) as f64)
                .collect(),
        );
        units.push(unit);
    }
    ElectionMatrix::new(units, candidates, rows)
}

/// A problem found by [`validate`].
#[derive(Debug, Clone, PartialEq)]
pub enum Finding {
    NegativeVotes {
        polling_id: String,
        candidate: String,
        value: i64,
    },
    RateOutOfRange {
        polling_id: String,
        candidate: String,
        rate: f64,
    },
    RateSumViolation {
        polling_id: String,
        sum: f64,
    },
    RankNotPermutation {
        polling_id: String,
        ranks: Vec<u32>,
    },
    RankOrderViolation {
        polling_id: String,
        candidate: String,
        rank: u32,
        expected: u32,
    },
    DuplicateCandidate {
        polling_id: String,
        candidate: String,
    },
}

impl Finding {
    pub fn polling_id(&self) -> &str {
        match self {
            Finding::NegativeVotes { polling_id, .. }
            | Finding::RateOutOfRange { polling_id, .. }
            | Finding::RateSumViolation { polling_id, .. }
            | Finding::RankNotPermutation { polling_id, .. }
            | Finding::RankOrderViolation { polling_id, .. }
            | Finding::DuplicateCandidate { polling_id, .. } => polling_id,
        }
    }
}

impl fmt::Display for Finding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Finding::NegativeVotes {
                polling_id,
                candidate,
                value,
            } => write!(f, "{polling_id}: negative votes {value} for `{candidate}`"),
            Finding::RateOutOfRange {
                polling_id,
                candidate,
                rate,
            } => write!(f, "{polling_id}: rate {rate} for `{candidate}` outside [0, 1]"),
            Finding::RateSumViolation { polling_id, sum } => {
                write!(f, "{polling_id}: rates sum to {sum}")
            }
            Finding::RankNotPermutation { polling_id, ranks } => {
                write!(f, "{polling_id}: ranks {ranks:?} are not a permutation of 1..={}", ranks.len())
            }
            Finding::RankOrderViolation {
                polling_id,
                candidate,
                rank,
                expected,
            } => write!(f, "{polling_id}: `{candidate}` ranked {rank}, expected {expected}"),
            Finding::DuplicateCandidate {
                polling_id,
                candidate,
            } => write!(f, "{polling_id}: candidate `{candidate}` appears more than once"),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub findings: Vec<Finding>,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.findings.is_empty()
    }

    pub fn len(&self) -> usize {
        self.findings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.findings.is_empty()
    }

    pub fn for_unit<'a>(&'a self, polling_id: &'a str) -> impl Iterator<Item = &'a Finding> + 'a {
        self.findings.iter().filter(move |f| f.polling_id() == polling_id)
    }
}

/// Checks the per-record and per-unit invariants of a results file without
/// modifying anything. Findings are grouped by polling id in key order.
pub fn validate(records: &[VoteRecord]) -> ValidationReport {
    let mut by_unit: BTreeMap<&str, Vec<&VoteRecord>> = BTreeMap::new();
    for r in records {
        by_unit.entry(r.polling_id.as_str()).or_default().push(r);
    }
    let mut findings = Vec::new();
    for (pid, rows) in by_unit {
        let mut seen = BTreeSet::new();
        for r in &rows {
            if r.value < 0 {
                findings.push(Finding::NegativeVotes {
                    polling_id: pid.to_string(),
                    candidate: r.candidate.clone(),
                    value: r.value,
                });
            }
            if !(0.0..=1.0).contains(&r.rate) {
                findings.push(Finding::RateOutOfRange {
                    polling_id: pid.to_string(),
                    candidate: r.candidate.clone(),
                    rate: r.rate,
                });
            }
            if !seen.insert(normalize_label(&r.candidate)) {
                findings.push(Finding::DuplicateCandidate {
                    polling_id: pid.to_string(),
                    candidate: r.candidate.clone(),
                });
            }
        }

        let total: i64 = rows.iter().map(|r| r.value.max(0)).sum();
        let rate_sum: f64 = rows.iter().map(|r| r.rate).sum();
        if total > 0 && (rate_sum - 1.0).abs() > RATE_SUM_TOLERANCE {
            findings.push(Finding::RateSumViolation {
                polling_id: pid.to_string(),
                sum: rate_sum,
            });
        }

        let mut ranks: Vec<u32> = rows.iter().map(|r| r.rank).collect();
        ranks.sort_unstable();
        if ranks.iter().enumerate().any(|(i, &r)| r != i as u32 + 1) {
            findings.push(Finding::RankNotPermutation {
                polling_id: pid.to_string(),
                ranks: rows.iter().map(|r| r.rank).collect(),
            });
        } else {
            let mut order: Vec<&&VoteRecord> = rows.iter().collect();
            order.sort_by(|a, b| b.value.cmp(&a.value).then_with(|| a.candidate.cmp(&b.candidate)));
            for (pos, r) in order.iter().enumerate() {
                let expected = pos as u32 + 1;
                if r.rank != expected {
                    findings.push(Finding::RankOrderViolation {
                        polling_id: pid.to_string(),
                        candidate: r.candidate.clone(),
                        rank: r.rank,
                        expected,
                    });
                }
            }
        }
    }
    ValidationReport { findings }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(pid: &str, cand: &str, v: i64) -> VoteRecord {
        VoteRecord::new(pid, cand, v)
    }

    #[test]
    fn two_unit_matrix() {
        let records = vec![rec("u1", "A", 60), rec("u1", "B", 40), rec("u2", "A", 40), rec("u2", "B", 60)];
        let m = build_matrix(&records, &UnitKey::default()).unwrap();
        assert_eq!(m.n_units(), 2);
        assert_eq!(m.candidates(), &["A".to_string(), "B".to_string()]);
        assert_eq!(m.unit_shares(0), &[0.6, 0.4]);
        assert_eq!(m.unit_shares(1), &[0.4, 0.6]);
        assert_eq!(m.overall_share(), &[0.5, 0.5]);
    }

    #[test]
    fn unanimity_with_declared_candidate() {
        let records = vec![rec("u1", "A", 100)];
        let m = build_matrix_with_candidates(&records, &UnitKey::default(), &["A".into(), "B".into()]).unwrap();
        assert_eq!(m.vote_rows(), vec![vec![100.0, 0.0]]);
        assert_eq!(m.unit_shares(0), &[1.0, 0.0]);
        assert_eq!(m.overall_share(), &[1.0, 0.0]);
    }

    #[test]
    fn single_candidate_is_rejected() {
        let err = build_matrix(&[rec("u1", "A", 10)], &UnitKey::default()).unwrap_err();
        assert_eq!(err, ModelError::TooFewCandidates(1));
    }

    #[test]
    fn empty_and_negative_inputs() {
        assert_eq!(build_matrix(&[], &UnitKey::default()).unwrap_err(), ModelError::EmptyInput);
        let err = build_matrix(&[rec("u1", "A", -1), rec("u1", "B", 3)], &UnitKey::default()).unwrap_err();
        assert!(matches!(err, ModelError::NegativeVotes { value: -1, .. }));
    }

    #[test]
    fn prefix_deeper_than_polling_id() {
        let key = UnitKey::new(AggregationLevel::Prefix(3));
        let err = build_matrix(&[rec("R1|P1", "A", 1), rec("R1|P1", "B", 1)], &key).unwrap_err();
        assert!(matches!(err, ModelError::MalformedPollingId { required: 3, found: 2, .. }));
    }

    #[test]
    fn zero_total_unit_is_kept_with_zero_shares() {
        let records = vec![rec("u1", "A", 0), rec("u1", "B", 0), rec("u2", "A", 3), rec("u2", "B", 1)];
        let m = build_matrix(&records, &UnitKey::default()).unwrap();
        assert_eq!(m.zero_vote_units(), vec![0]);
        assert_eq!(m.unit_shares(0), &[0.0, 0.0]);
        assert_eq!(m.overall_share(), &[0.75, 0.25]);
    }

    #[test]
    fn national_level_collapses_to_one_unit() {
        let records = vec![rec("R1|a", "A", 1), rec("R2|b", "B", 3)];
        let m = build_matrix(&records, &UnitKey::new(AggregationLevel::Prefix(0))).unwrap();
        assert_eq!(m.units(), &[NATIONAL_UNIT.to_string()]);
        assert_eq!(m.unit_shares(0), m.overall_share());
    }

    #[test]
    fn custom_separator() {
        let key = UnitKey::new(AggregationLevel::Prefix(1)).with_separator('/');
        let records = vec![rec("R1/x", "A", 1), rec("R1/y", "B", 1), rec("R2/z", "A", 2)];
        let m = build_matrix(&records, &key).unwrap();
        assert_eq!(m.units(), &["R1".to_string(), "R2".to_string()]);
    }

    #[test]
    fn nfc_equivalent_labels_merge() {
        let composed = "Jos\u{e9}";
        let decomposed = "Jose\u{301}";
        let records = vec![rec("u1", composed, 1), rec("u2", decomposed, 2), rec("u2", "B", 1)];
        let m = build_matrix(&records, &UnitKey::default()).unwrap();
        assert_eq!(m.n_candidates(), 2);
        assert_eq!(m.candidate_total(m.candidate_index(composed).unwrap()), 3.0);
    }

    #[test]
    fn ranks_break_ties_by_label() {
        let mut records = vec![rec("u", "C", 5), rec("u", "B", 5), rec("u", "A", 1)];
        assign_ranks_and_rates(&mut records);
        let ranks: Vec<(String, u32)> = records.iter().map(|r| (r.candidate.clone(), r.rank)).collect();
        assert_eq!(ranks, vec![("C".into(), 2), ("B".into(), 1), ("A".into(), 3)]);
        assert!((records.iter().map(|r| r.rate).sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn validate_clean_fixture() {
        let mut records = vec![rec("u1", "A", 60), rec("u1", "B", 40), rec("u2", "A", 1), rec("u2", "B", 3)];
        assign_ranks_and_rates(&mut records);
        assert!(validate(&records).is_clean());
    }

    #[test]
    fn validate_rate_sum() {
        let mut records = vec![rec("u1", "A", 60), rec("u1", "B", 40)];
        assign_ranks_and_rates(&mut records);
        records[0].rate = 0.58;
        let report = validate(&records);
        assert_eq!(report.len(), 1);
        assert!(matches!(&report.findings[0], Finding::RateSumViolation { sum, .. } if (sum - 0.98).abs() < 1e-12));
    }

    #[test]
    fn validate_negative_votes() {
        let mut records = vec![rec("u1", "A", 10), rec("u1", "B", 0)];
        assign_ranks_and_rates(&mut records);
        records[1].value = -3;
        let report = validate(&records);
        assert_eq!(report.len(), 1);
        assert!(matches!(report.findings[0], Finding::NegativeVotes { value: -3, .. }));
    }

    #[test]
    fn validate_rank_problems() {
        let mut records = vec![rec("u1", "A", 10), rec("u1", "B", 20)];
        assign_ranks_and_rates(&mut records);
        records.swap(0, 1);
        let (r0, r1) = (records[0].rank, records[1].rank);
        records[0].rank = r1;
        records[1].rank = r0;
        let report = validate(&records);
        assert_eq!(report.len(), 2);
        assert!(report.findings.iter().all(|f| matches!(f, Finding::RankOrderViolation { .. })));

        records[0].rank = 1;
        records[1].rank = 1;
        let report = validate(&records);
        assert!(matches!(report.findings[0], Finding::RankNotPermutation { .. }));
    }

    #[test]
    fn aggregation_level_parsing_and_order() {
        assert_eq!("unit".parse::<AggregationLevel>().unwrap(), AggregationLevel::Unit);
        assert_eq!("2".parse::<AggregationLevel>().unwrap(), AggregationLevel::Prefix(2));
        assert_eq!("national".parse::<AggregationLevel>().unwrap(), AggregationLevel::Prefix(0));
        assert!("x".parse::<AggregationLevel>().is_err());
        assert!(AggregationLevel::Prefix(1).is_ancestor_of(AggregationLevel::Unit));
        assert!(AggregationLevel::Prefix(1).is_ancestor_of(AggregationLevel::Prefix(2)));
        assert!(!AggregationLevel::Prefix(2).is_ancestor_of(AggregationLevel::Prefix(1)));
        assert!(!AggregationLevel::Unit.is_ancestor_of(AggregationLevel::Prefix(3)));
    }

    #[test]
    fn location_join() {
        let loc = LocationRecord {
            polling_id: "R01|PROV|COMM|ST7".into(),
            levels: vec![
                ("region".into(), "R01".into()),
                ("province".into(), "PROV".into()),
                ("commune".into(), "COMM".into()),
                ("station".into(), "ST7".into()),
            ],
            value: None,
            rate: None,
        };
        assert!(loc.is_consistent(&PollingIdFormat::default()));
        assert!(!loc.is_consistent(&PollingIdFormat { separator: '/' }));
    }
}
