//! Validation and downstream analysis: correlation and z-scores, robustness
//! protocols over regional EP/EC, swing-state labels, survey-based mass
//! polarization and the regression-ready panel export.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::Write;

use thiserror::Error;

use crate::metrics::polarization_report;
use crate::model::{build_matrix_with_candidates, AggregationLevel, ModelError, UnitKey, VoteRecord};
use crate::pipeline::{curate_records, national_ranking, AbstentionMode, CurationConfig, PipelineError, TopN};

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("series lengths differ: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("need at least {needed} points, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("series is constant")]
    ConstantSeries,
    #[error("series contains a non-finite value")]
    NonFinite,
    #[error("state `{state}` has {count} winners, expected 4")]
    WrongWinnerCount { state: String, count: usize },
    #[error("no responses for {party} in region `{region}`, year {year}")]
    MissingParty { party: Party, region: String, year: i32 },
    #[error("all weights are zero for {party} in region `{region}`, year {year}")]
    AllWeightsZero { party: Party, region: String, year: i32 },
    #[error("invalid survey response: {0}")]
    InvalidResponse(String),
    #[error("region sets differ: only in a {only_a:?}, only in b {only_b:?}")]
    RegionMismatch { only_a: Vec<String>, only_b: Vec<String> },
    #[error("robustness needs at least {needed} {what}, found {found}")]
    NotEnough { what: &'static str, needed: usize, found: usize },
    #[error("duplicate panel key ({0}, {1})")]
    DuplicateKey(String, i32),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn check_finite(xs: &[f64]) -> Result<(), AnalysisError> {
    if xs.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(AnalysisError::NonFinite)
    }
}

/// Pearson product-moment correlation.
pub fn pearson(xs: &[f64], ys: &[f64]) -> Result<f64, AnalysisError> {
    if xs.len() != ys.len() {
        return Err(AnalysisError::LengthMismatch(xs.len(), ys.len()));
    }
    if xs.len() < 3 {
        return Err(AnalysisError::TooFewPoints {
            needed: 3,
            got: xs.len(),
        });
    }
    check_finite(xs)?;
    check_finite(ys)?;
    let (mx, my) = (mean(xs), mean(ys));
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(AnalysisError::ConstantSeries);
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Sample (n − 1) standard deviation.
pub fn sample_std(xs: &[f64]) -> f64 {
    let m = mean(xs);
    (xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() - 1) as f64).sqrt()
}

/// Z-scores using the sample standard deviation.
pub fn standardize(xs: &[f64]) -> Result<Vec<f64>, AnalysisError> {
    if xs.len() < 2 {
        return Err(AnalysisError::TooFewPoints {
            needed: 2,
            got: xs.len(),
        });
    }
    check_finite(xs)?;
    let m = mean(xs);
    let sd = sample_std(xs);
    if sd == 0.0 {
        return Err(AnalysisError::ConstantSeries);
    }
    Ok(xs.iter().map(|x| (x - m) / sd).collect())
}

// ---------------------------------------------------------------------------
// Robustness
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RobustnessProtocol {
    Aggregation,
    Abstentions,
    ElectionType,
    Rounds,
    TopN,
    EnpSubset,
}

impl RobustnessProtocol {
    pub fn as_str(self) -> &'static str {
        match self {
            RobustnessProtocol::Aggregation => "AGGREGATION",
            RobustnessProtocol::Abstentions => "ABSTENTIONS",
            RobustnessProtocol::ElectionType => "ELECTION_TYPE",
            RobustnessProtocol::Rounds => "ROUNDS",
            RobustnessProtocol::TopN => "TOP_N",
            RobustnessProtocol::EnpSubset => "ENP_SUBSET",
        }
    }
}

impl fmt::Display for RobustnessProtocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for RobustnessProtocol {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().replace('-', "_").as_str() {
            "AGGREGATION" => Ok(RobustnessProtocol::Aggregation),
            "ABSTENTIONS" => Ok(RobustnessProtocol::Abstentions),
            "ELECTION_TYPE" => Ok(RobustnessProtocol::ElectionType),
            "ROUNDS" => Ok(RobustnessProtocol::Rounds),
            "TOP_N" => Ok(RobustnessProtocol::TopN),
            "ENP_SUBSET" => Ok(RobustnessProtocol::EnpSubset),
            other => Err(format!("unknown robustness protocol `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegionMetrics {
    pub ep: f64,
    pub ec: f64,
    pub n_units: usize,
}

pub type RegionalMetrics = BTreeMap<String, RegionMetrics>;

#[derive(Debug, Clone, PartialEq)]
pub struct RegionPair {
    pub region: String,
    pub a: RegionMetrics,
    pub b: RegionMetrics,
}

/// Paired regional metrics under two variants of the data and their correlations.
#[derive(Debug, Clone, PartialEq)]
pub struct RobustnessResult {
    pub protocol: RobustnessProtocol,
    pub pairs: Vec<RegionPair>,
    pub rho_ep: f64,
    pub rho_ec: f64,
    pub n: usize,
}

/// EP and EC of every region (polling-id prefix of depth `region_depth`),
/// computed from records that are already curated. All regions share the
/// national candidate list so their EP/EC stay comparable.
pub fn regional_metrics_from_curated(
    curated: &[VoteRecord],
    unit_key: &UnitKey,
    region_depth: usize,
) -> Result<RegionalMetrics, AnalysisError> {
    let region_level = AggregationLevel::Prefix(region_depth);
    if !region_level.is_ancestor_of(unit_key.level) {
        return Err(PipelineError::NotAnAncestor {
            from: unit_key.level,
            to: region_level,
        }
        .into());
    }
    let candidates: Vec<String> = curated
        .iter()
        .map(|r| r.candidate.clone())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let mut by_region: BTreeMap<String, Vec<VoteRecord>> = BTreeMap::new();
    for r in curated {
        let region = unit_key.format.unit_key(&r.polling_id, region_level)?;
        by_region.entry(region).or_default().push(r.clone());
    }
    let mut out = BTreeMap::new();
    for (region, records) in by_region {
        let m = match build_matrix_with_candidates(&records, unit_key, &candidates) {
            Ok(m) => m,
            Err(ModelError::ZeroTotalVotes) => continue,
            Err(e) => return Err(e.into()),
        };
        let report = polarization_report(&m);
        out.insert(
            region,
            RegionMetrics {
                ep: report.ep,
                ec: report.ec,
                n_units: m.n_units(),
            },
        );
    }
    Ok(out)
}

/// Curates `records` nationally with `config`, then reports EP/EC per region.
pub fn regional_metrics(
    records: &[VoteRecord],
    config: &CurationConfig,
    region_depth: usize,
) -> Result<RegionalMetrics, AnalysisError> {
    let curated = curate_records(records, config)?;
    regional_metrics_from_curated(&curated.records, &config.unit_key(), region_depth)
}

/// Aligns two regional metric sets and correlates EP with EP and EC with EC.
pub fn robustness_pairs(
    variant_a: &RegionalMetrics,
    variant_b: &RegionalMetrics,
    protocol: RobustnessProtocol,
) -> Result<RobustnessResult, AnalysisError> {
    let keys_a: BTreeSet<&String> = variant_a.keys().collect();
    let keys_b: BTreeSet<&String> = variant_b.keys().collect();
    if keys_a != keys_b {
        return Err(AnalysisError::RegionMismatch {
            only_a: keys_a.difference(&keys_b).map(|s| s.to_string()).collect(),
            only_b: keys_b.difference(&keys_a).map(|s| s.to_string()).collect(),
        });
    }
    if variant_a.len() < 3 {
        return Err(AnalysisError::NotEnough {
            what: "regions",
            needed: 3,
            found: variant_a.len(),
        });
    }
    let pairs: Vec<RegionPair> = variant_a
        .iter()
        .map(|(region, a)| RegionPair {
            region: region.clone(),
            a: *a,
            b: variant_b[region],
        })
        .collect();
    let series = |f: fn(&RegionPair) -> f64| pairs.iter().map(f).collect::<Vec<f64>>();
    let rho_ep = pearson(&series(|p| p.a.ep), &series(|p| p.b.ep))?;
    let rho_ec = pearson(&series(|p| p.a.ec), &series(|p| p.b.ec))?;
    Ok(RobustnessResult {
        protocol,
        n: pairs.len(),
        pairs,
        rho_ep,
        rho_ec,
    })
}

/// One point of the top-N convergence curve.
#[derive(Debug, Clone, PartialEq)]
pub struct TopNPoint {
    pub n: usize,
    /// Share of real-candidate votes held by the top `n` candidates.
    pub coverage: f64,
    pub result: RobustnessResult,
}

/// Regional EP/EC under top-n curation for n = 2..=max_n (capped at the number
/// of real candidates), each correlated with the all-candidates values.
pub fn robustness_top_n(
    records: &[VoteRecord],
    config: &CurationConfig,
    region_depth: usize,
    max_n: usize,
) -> Result<Vec<TopNPoint>, AnalysisError> {
    let n_real = national_ranking(records).len();
    if n_real < 3 {
        return Err(AnalysisError::NotEnough {
            what: "candidates",
            needed: 3,
            found: n_real,
        });
    }
    let all_config = CurationConfig {
        top_n: TopN::All,
        ..config.clone()
    };
    let baseline = regional_metrics(records, &all_config, region_depth)?;
    if baseline.len() < 3 {
        return Err(AnalysisError::NotEnough {
            what: "regions",
            needed: 3,
            found: baseline.len(),
        });
    }
    let mut out = Vec::new();
    for n in 2..=max_n.min(n_real) {
        let cfg = CurationConfig {
            top_n: TopN::Count(n),
            ..config.clone()
        };
        let curated = curate_records(records, &cfg)?;
        let metrics = regional_metrics_from_curated(&curated.records, &cfg.unit_key(), region_depth)?;
        out.push(TopNPoint {
            n,
            coverage: curated.coverage,
            result: robustness_pairs(&baseline, &metrics, RobustnessProtocol::TopN)?,
        });
    }
    Ok(out)
}

/// Compares all candidates against the top ⌈ENP⌉ candidates, where ENP is the
/// effective number of real candidates from national totals.
pub fn robustness_enp_subset(
    records: &[VoteRecord],
    config: &CurationConfig,
    region_depth: usize,
) -> Result<(usize, RobustnessResult), AnalysisError> {
    let ranking = national_ranking(records);
    let total: i64 = ranking.iter().map(|(_, v)| v).sum();
    if total == 0 {
        return Err(PipelineError::EmptyAfterFilter.into());
    }
    let hhi: f64 = ranking
        .iter()
        .map(|(_, v)| {
            let s = *v as f64 / total as f64;
            s * s
        })
        .sum();
    let n = ((1.0 / hhi).ceil() as usize).clamp(2, ranking.len().max(2));
    let all = regional_metrics(records, &CurationConfig { top_n: TopN::All, ..config.clone() }, region_depth)?;
    let subset = regional_metrics(
        records,
        &CurationConfig {
            top_n: TopN::Count(n),
            ..config.clone()
        },
        region_depth,
    )?;
    Ok((n, robustness_pairs(&all, &subset, RobustnessProtocol::EnpSubset)?))
}

/// Regional EP/EC with units at `fine` versus units at `coarse`.
pub fn robustness_aggregation(
    records: &[VoteRecord],
    config: &CurationConfig,
    region_depth: usize,
    fine: AggregationLevel,
    coarse: AggregationLevel,
) -> Result<RobustnessResult, AnalysisError> {
    let a = regional_metrics(records, &config.clone().with_level(fine), region_depth)?;
    let b = regional_metrics(records, &config.clone().with_level(coarse), region_depth)?;
    robustness_pairs(&a, &b, RobustnessProtocol::Aggregation)
}

/// Regional EP/EC with pseudo-rows excluded versus treated as candidates.
pub fn robustness_abstentions(
    records: &[VoteRecord],
    config: &CurationConfig,
    region_depth: usize,
) -> Result<RobustnessResult, AnalysisError> {
    let a = regional_metrics(records, &config.clone().with_abstentions(AbstentionMode::Exclude), region_depth)?;
    let b = regional_metrics(
        records,
        &config.clone().with_abstentions(AbstentionMode::AsCandidates),
        region_depth,
    )?;
    robustness_pairs(&a, &b, RobustnessProtocol::Abstentions)
}

/// Writes results as `protocol,n,coverage,rho_ep,rho_ec`. For top-N rows `n`
/// is the candidate count; otherwise it is the number of regions and
/// `coverage` is empty.
pub fn write_robustness_csv<W: Write>(
    out: W,
    rows: &[(RobustnessResult, Option<(usize, f64)>)],
    fmt_num: impl Fn(f64) -> String,
) -> Result<(), AnalysisError> {
    let mut w = csv::Writer::from_writer(out);
    let csv_err = |e: csv::Error| AnalysisError::Io(std::io::Error::other(e.to_string()));
    w.write_record(["protocol", "n", "coverage", "rho_ep", "rho_ec"]).map_err(csv_err)?;
    for (r, top) in rows {
        let (n, coverage) = match top {
            Some((n, c)) => (n.to_string(), fmt_num(*c)),
            None => (r.n.to_string(), String::new()),
        };
        w.write_record([r.protocol.as_str(), &n, &coverage, &fmt_num(r.rho_ep), &fmt_num(r.rho_ec)])
            .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

// ---------------------------------------------------------------------------
// Swing states
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SwingClass {
    Swing,
    Partisan(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SwingLabel {
    pub state: String,
    pub winners: Vec<String>,
    pub label: SwingClass,
}

/// Labels a state SWING when its last four presidential winners include at
/// least two parties, PARTISAN(party) otherwise.
pub fn classify_swing(winners_by_state: &BTreeMap<String, Vec<String>>) -> Result<Vec<SwingLabel>, AnalysisError> {
    winners_by_state
        .iter()
        .map(|(state, winners)| {
            if winners.len() != 4 {
                return Err(AnalysisError::WrongWinnerCount {
                    state: state.clone(),
                    count: winners.len(),
                });
            }
            let parties: BTreeSet<&str> = winners.iter().map(|w| w.trim()).collect();
            let label = if parties.len() >= 2 {
                SwingClass::Swing
            } else {
                SwingClass::Partisan(winners[0].trim().to_string())
            };
            Ok(SwingLabel {
                state: state.clone(),
                winners: winners.clone(),
                label,
            })
        })
        .collect()
}

/// Statewide presidential winners (D/R) for 2008, 2012, 2016 and 2020.
/// The District of Columbia is left out.
pub const PRESIDENTIAL_WINNERS_2008_2020: [(&str, [&str; 4]); 50] = [
    ("AK", ["R", "R", "R", "R"]),
    ("AL", ["R", "R", "R", "R"]),
    ("AR", ["R", "R", "R", "R"]),
    ("AZ", ["R", "R", "R", "D"]),
    ("CA", ["D", "D", "D", "D"]),
    ("CO", ["D", "D", "D", "D"]),
    ("CT", ["D", "D", "D", "D"]),
    ("DE", ["D", "D", "D", "D"]),
    ("FL", ["D", "D", "R", "R"]),
    ("GA", ["R", "R", "R", "D"]),
    ("HI", ["D", "D", "D", "D"]),
    ("IA", ["D", "D", "R", "R"]),
    ("ID", ["R", "R", "R", "R"]),
    ("IL", ["D", "D", "D", "D"]),
    ("IN", ["D", "R", "R", "R"]),
    ("KS", ["R", "R", "R", "R"]),
    ("KY", ["R", "R", "R", "R"]),
    ("LA", ["R", "R", "R", "R"]),
    ("MA", ["D", "D", "D", "D"]),
    ("MD", ["D", "D", "D", "D"]),
    ("ME", ["D", "D", "D", "D"]),
    ("MI", ["D", "D", "R", "D"]),
    ("MN", ["D", "D", "D", "D"]),
    ("MO", ["R", "R", "R", "R"]),
    ("MS", ["R", "R", "R", "R"]),
    ("MT", ["R", "R", "R", "R"]),
    ("NC", ["D", "R", "R", "R"]),
    ("ND", ["R", "R", "R", "R"]),
    ("NE", ["R", "R", "R", "R"]),
    ("NH", ["D", "D", "D", "D"]),
    ("NJ", ["D", "D", "D", "D"]),
    ("NM", ["D", "D", "D", "D"]),
    ("NV", ["D", "D", "D", "D"]),
    ("NY", ["D", "D", "D", "D"]),
    ("OH", ["D", "D", "R", "R"]),
    ("OK", ["R", "R", "R", "R"]),
    ("OR", ["D", "D", "D", "D"]),
    ("PA", ["D", "D", "R", "D"]),
    ("RI", ["D", "D", "D", "D"]),
    ("SC", ["R", "R", "R", "R"]),
    ("SD", ["R", "R", "R", "R"]),
    ("TN", ["R", "R", "R", "R"]),
    ("TX", ["R", "R", "R", "R"]),
    ("UT", ["R", "R", "R", "R"]),
    ("VA", ["D", "D", "D", "D"]),
    ("VT", ["D", "D", "D", "D"]),
    ("WA", ["D", "D", "D", "D"]),
    ("WI", ["D", "D", "R", "D"]),
    ("WV", ["R", "R", "R", "R"]),
    ("WY", ["R", "R", "R", "R"]),
];

pub fn presidential_winners_2008_2020() -> BTreeMap<String, Vec<String>> {
    PRESIDENTIAL_WINNERS_2008_2020
        .iter()
        .map(|(s, w)| (s.to_string(), w.iter().map(|p| p.to_string()).collect()))
        .collect()
}

// ---------------------------------------------------------------------------
// Mass polarization
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Party {
    Democrat,
    Republican,
}

impl fmt::Display for Party {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Party::Democrat => f.write_str("Democrat"),
            Party::Republican => f.write_str("Republican"),
        }
    }
}

/// 7-point partisan identity.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pid7 {
    StrongDemocrat,
    NotVeryStrongDemocrat,
    LeanDemocrat,
    Independent,
    LeanRepublican,
    NotVeryStrongRepublican,
    StrongRepublican,
}

pub const PID7_SCALE: [(Pid7, &str, i8); 7] = [
    (Pid7::StrongDemocrat, "Strong Democrat", -3),
    (Pid7::NotVeryStrongDemocrat, "Not Very Strong Democrat", -2),
    (Pid7::LeanDemocrat, "Lean Democrat", -1),
    (Pid7::Independent, "Independent", 0),
    (Pid7::LeanRepublican, "Lean Republican", 1),
    (Pid7::NotVeryStrongRepublican, "Not Very Strong Republican", 2),
    (Pid7::StrongRepublican, "Strong Republican", 3),
];

impl Pid7 {
    /// Parses a pid7 label (case-insensitive). "Not sure" maps to `Ok(None)`.
    pub fn parse(label: &str) -> Result<Option<Pid7>, AnalysisError> {
        let norm = label.trim().to_ascii_lowercase();
        if norm == "not sure" {
            return Ok(None);
        }
        PID7_SCALE
            .iter()
            .find(|(_, name, _)| name.to_ascii_lowercase() == norm)
            .map(|(p, _, _)| Some(*p))
            .ok_or_else(|| AnalysisError::InvalidResponse(format!("unknown pid7 label `{label}`")))
    }

    pub fn score(self) -> i8 {
        PID7_SCALE.iter().find(|(p, _, _)| *p == self).map(|e| e.2).unwrap()
    }

    /// Party and strength (1 lean, 2 not very strong, 3 strong); `None` for independents.
    pub fn party_strength(self) -> Option<(Party, u8)> {
        let s = self.score();
        match s.signum() {
            -1 => Some((Party::Democrat, s.unsigned_abs())),
            1 => Some((Party::Republican, s.unsigned_abs())),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SurveyResponse {
    pub region: String,
    pub year: i32,
    pub party: Party,
    /// 1 = lean, 2 = not very strong, 3 = strong.
    pub strength: u8,
    pub weight: f64,
}

impl SurveyResponse {
    /// Builds a response from a pid7 label; independents and "not sure" give `None`.
    pub fn from_pid7(region: &str, year: i32, label: &str, weight: f64) -> Result<Option<Self>, AnalysisError> {
        Ok(Pid7::parse(label)?.and_then(Pid7::party_strength).map(|(party, strength)| SurveyResponse {
            region: region.to_string(),
            year,
            party,
            strength,
            weight,
        }))
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct MassPolarizationInput {
    pub responses: Vec<SurveyResponse>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MassPolarization {
    pub ideology_dem: f64,
    pub ideology_rep: f64,
    pub pp: f64,
}

fn party_ideology(input: &MassPolarizationInput, party: Party, region: &str, year: i32) -> Result<f64, AnalysisError> {
    let mut found = false;
    let (mut num, mut den) = (0.0, 0.0);
    for r in input
        .responses
        .iter()
        .filter(|r| r.party == party && r.region == region && r.year == year)
    {
        if !(1..=3).contains(&r.strength) {
            return Err(AnalysisError::InvalidResponse(format!("strength {} outside 1..=3", r.strength)));
        }
        if !(r.weight.is_finite() && r.weight >= 0.0) {
            return Err(AnalysisError::InvalidResponse(format!("weight {} is negative or not finite", r.weight)));
        }
        found = true;
        num += r.strength as f64 * r.weight;
        den += r.weight;
    }
    if !found {
        return Err(AnalysisError::MissingParty {
            party,
            region: region.to_string(),
            year,
        });
    }
    if den == 0.0 {
        return Err(AnalysisError::AllWeightsZero {
            party,
            region: region.to_string(),
            year,
        });
    }
    Ok(num / den)
}

/// Weighted mean partisan strength of each party in (region, year) and their
/// absolute difference. Weights are normalized within each party cell.
pub fn mass_polarization(input: &MassPolarizationInput, region: &str, year: i32) -> Result<MassPolarization, AnalysisError> {
    let ideology_dem = party_ideology(input, Party::Democrat, region, year)?;
    let ideology_rep = party_ideology(input, Party::Republican, region, year)?;
    Ok(MassPolarization {
        ideology_dem,
        ideology_rep,
        pp: (ideology_dem - ideology_rep).abs(),
    })
}

/// Every (region, year) cell present in the input, in key order.
pub fn mass_polarization_cells(input: &MassPolarizationInput) -> Vec<((String, i32), Result<MassPolarization, AnalysisError>)> {
    let cells: BTreeSet<(String, i32)> = input.responses.iter().map(|r| (r.region.clone(), r.year)).collect();
    cells
        .into_iter()
        .map(|(g, t)| {
            let res = mass_polarization(input, &g, t);
            ((g, t), res)
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Regression export
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
pub struct PanelMetric {
    pub region: String,
    pub year: i32,
    pub ep: f64,
    pub ec: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CovariateRow {
    pub region: String,
    pub year: i32,
    pub values: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegressionRow {
    pub region: String,
    pub year: i32,
    /// `ep_z`, `ec_z`, then covariates in column order.
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegressionTable {
    pub columns: Vec<String>,
    pub rows: Vec<RegressionRow>,
    /// Metric keys without a complete covariate row; omitted from `rows`.
    pub missing: Vec<(String, i32)>,
}

impl RegressionTable {
    pub fn write_csv<W: Write>(&self, out: W, fmt_num: impl Fn(f64) -> String) -> Result<(), AnalysisError> {
        let mut w = csv::Writer::from_writer(out);
        let csv_err = |e: csv::Error| AnalysisError::Io(std::io::Error::other(e.to_string()));
        w.write_record(&self.columns).map_err(csv_err)?;
        for r in &self.rows {
            let mut rec = vec![r.region.clone(), r.year.to_string()];
            rec.extend(r.values.iter().map(|v| fmt_num(*v)));
            w.write_record(&rec).map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Joins per-(region, year) EP/EC with covariates and z-scores every numeric
/// column. Columns: region, year, ep_z, ec_z, then covariates alphabetically.
/// Rows are sorted by (region, year).
pub fn export_regression_table(
    metrics: &[PanelMetric],
    covariates: &[CovariateRow],
) -> Result<RegressionTable, AnalysisError> {
    let names: BTreeSet<&String> = covariates.iter().flat_map(|c| c.values.keys()).collect();
    let mut cov_by_key: BTreeMap<(String, i32), &CovariateRow> = BTreeMap::new();
    for c in covariates {
        if cov_by_key.insert((c.region.clone(), c.year), c).is_some() {
            return Err(AnalysisError::DuplicateKey(c.region.clone(), c.year));
        }
    }
    let mut metric_by_key: BTreeMap<(String, i32), &PanelMetric> = BTreeMap::new();
    for m in metrics {
        if metric_by_key.insert((m.region.clone(), m.year), m).is_some() {
            return Err(AnalysisError::DuplicateKey(m.region.clone(), m.year));
        }
    }

    let mut keys = Vec::new();
    let mut raw: Vec<Vec<f64>> = vec![Vec::new(); 2 + names.len()];
    let mut missing = Vec::new();
    for (key, m) in &metric_by_key {
        let cov = cov_by_key
            .get(key)
            .and_then(|c| names.iter().map(|n| c.values.get(*n).copied()).collect::<Option<Vec<f64>>>());
        match cov {
            Some(values) => {
                keys.push(key.clone());
                raw[0].push(m.ep);
                raw[1].push(m.ec);
                for (col, v) in raw[2..].iter_mut().zip(values) {
                    col.push(v);
                }
            }
            None => missing.push(key.clone()),
        }
    }
    let z: Vec<Vec<f64>> = raw.iter().map(|c| standardize(c)).collect::<Result<_, _>>()?;
    let rows = keys
        .into_iter()
        .enumerate()
        .map(|(i, (region, year))| RegressionRow {
            region,
            year,
            values: z.iter().map(|c| c[i]).collect(),
        })
        .collect();
    let mut columns = vec!["region".to_string(), "year".into(), "ep_z".into(), "ec_z".into()];
    columns.extend(names.into_iter().cloned());
    Ok(RegressionTable { columns, rows, missing })
}
