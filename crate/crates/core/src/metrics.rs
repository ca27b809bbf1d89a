//! Antagonism decomposition (Within/Between), EP and EC, and the classical
//! measures they are compared against.
//!
//! Every kernel is a pure function of an [`ElectionMatrix`]. Candidates with
//! zero votes overall get antagonism 0 (the 0/0 case) and are listed in the
//! report so callers can tell structural zeros from measured ones.

use thiserror::Error;

use crate::model::ElectionMatrix;

/// Default sensitivity grid for the Esteban-Ray measure.
pub const DEFAULT_ER_ALPHAS: [f64; 2] = [0.25, 1.0];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error("candidate index {index} out of range for {n} candidates")]
    CandidateOutOfRange { index: usize, n: usize },
    #[error("dispersion needs at least two units with votes, found {0}")]
    SingleUnit(usize),
    #[error("Esteban-Ray alpha must be a positive finite number, got {0}")]
    InvalidAlpha(f64),
}

fn check_candidate(m: &ElectionMatrix, i: usize) -> Result<(), MetricsError> {
    if i >= m.n_candidates() {
        Err(MetricsError::CandidateOutOfRange {
            index: i,
            n: m.n_candidates(),
        })
    } else {
        Ok(())
    }
}

/// Vote-weighted mean absolute deviation of candidate `i`'s unit shares from
/// its national share, divided by N − 1.
pub fn within_antagonism(m: &ElectionMatrix, i: usize) -> Result<f64, MetricsError> {
    check_candidate(m, i)?;
    let total = m.candidate_total(i);
    if total == 0.0 {
        return Ok(0.0);
    }
    let mean = m.overall_share()[i];
    let numerator: f64 = (0..m.n_units())
        .map(|k| m.votes(k, i) * (m.share(k, i) - mean).abs())
        .sum();
    Ok(numerator / ((m.n_candidates() - 1) as f64 * total))
}

/// Vote-weighted closeness `1 − |share_i − share_j|` of candidate `i` to every
/// other candidate, divided by N(N − 1).
///
/// The j = i term is left out: with it a tied election would exceed 1/N.
pub fn between_antagonism(m: &ElectionMatrix, i: usize) -> Result<f64, MetricsError> {
    check_candidate(m, i)?;
    Ok(between_all(m)[i])
}

/// Per-unit sums Σ_j |r_i − r_j| for every candidate, via sorting and prefix sums.
fn abs_distance_sums(shares: &[f64], order: &mut Vec<usize>, out: &mut [f64]) {
    order.clear();
    order.extend(0..shares.len());
    order.sort_by(|&a, &b| shares[a].total_cmp(&shares[b]));
    let n = shares.len();
    let total: f64 = shares.iter().sum();
    let mut below = 0.0;
    for (pos, &idx) in order.iter().enumerate() {
        let r = shares[idx];
        let above = total - below - r;
        let n_below = pos as f64;
        let n_above = (n - pos - 1) as f64;
        out[idx] = (r * n_below - below) + (above - r * n_above);
        below += r;
    }
}

fn between_all(m: &ElectionMatrix) -> Vec<f64> {
    let n = m.n_candidates();
    let mut numer = vec![0.0; n];
    let mut order = Vec::with_capacity(n);
    let mut dist = vec![0.0; n];
    for k in 0..m.n_units() {
        if m.unit_total(k) == 0.0 {
            continue;
        }
        abs_distance_sums(m.unit_shares(k), &mut order, &mut dist);
        for i in 0..n {
            let v = m.votes(k, i);
            if v > 0.0 {
                numer[i] += v * ((n - 1) as f64 - dist[i]);
            }
        }
    }
    let denom_scale = (n * (n - 1)) as f64;
    numer
        .into_iter()
        .enumerate()
        .map(|(i, x)| {
            let total = m.candidate_total(i);
            if total == 0.0 {
                0.0
            } else {
                (x / (denom_scale * total)).max(0.0)
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct CandidateAntagonism {
    pub candidate: String,
    pub within: f64,
    pub between: f64,
    pub total: f64,
}

/// Per-candidate antagonisms and their election-level sums.
#[derive(Debug, Clone, PartialEq)]
pub struct AntagonismReport {
    pub per_candidate: Vec<CandidateAntagonism>,
    /// Election polarization: sum of within-antagonisms.
    pub ep: f64,
    /// Election competitiveness: sum of between-antagonisms.
    pub ec: f64,
    pub n_candidates: usize,
    pub n_units: usize,
    /// Candidates with no votes anywhere; their antagonisms are 0 by convention.
    pub zero_vote_candidates: Vec<String>,
}

impl AntagonismReport {
    /// EP and EC only compare across elections with the same number of candidates.
    pub fn comparable_with(&self, other: &AntagonismReport) -> bool {
        self.n_candidates == other.n_candidates
    }

    pub fn candidate(&self, label: &str) -> Option<&CandidateAntagonism> {
        self.per_candidate.iter().find(|c| c.candidate == label)
    }
}

pub fn polarization_report(m: &ElectionMatrix) -> AntagonismReport {
    let between = between_all(m);
    let mut per_candidate = Vec::with_capacity(m.n_candidates());
    let mut zero_vote_candidates = Vec::new();
    for (i, label) in m.candidates().iter().enumerate() {
        if m.candidate_total(i) == 0.0 {
            zero_vote_candidates.push(label.clone());
        }
        let within = within_antagonism(m, i).expect("index in range");
        per_candidate.push(CandidateAntagonism {
            candidate: label.clone(),
            within,
            between: between[i],
            total: within + between[i],
        });
    }
    let ep = per_candidate.iter().map(|c| c.within).sum();
    let ec = per_candidate.iter().map(|c| c.between).sum();
    AntagonismReport {
        per_candidate,
        ep,
        ec,
        n_candidates: m.n_candidates(),
        n_units: m.n_units(),
        zero_vote_candidates,
    }
}

/// Sensitivity parameter of the Esteban-Ray measure. The normalization
/// K = 1 / (Σ_k votes_i,k)^(2+α) is applied per candidate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstebanRayParams {
    alpha: f64,
}

impl EstebanRayParams {
    pub fn new(alpha: f64) -> Result<Self, MetricsError> {
        if alpha.is_finite() && alpha > 0.0 {
            Ok(EstebanRayParams { alpha })
        } else {
            Err(MetricsError::InvalidAlpha(alpha))
        }
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// The normalization constant for a candidate with `total_votes` votes.
    pub fn k_normalization(&self, total_votes: f64) -> f64 {
        total_votes.powf(-(2.0 + self.alpha))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstebanRayResult {
    pub alpha: f64,
    pub per_candidate: Vec<f64>,
    /// Sum of the per-candidate values.
    pub aggregate: f64,
    pub zero_vote_candidates: Vec<String>,
}

/// Esteban-Ray antagonism per candidate, adapted to unit-level vote counts.
pub fn esteban_ray(m: &ElectionMatrix, params: EstebanRayParams) -> EstebanRayResult {
    let n = m.n_candidates();
    let alpha = params.alpha();
    let mut sums = vec![0.0; n];
    let mut order: Vec<usize> = Vec::with_capacity(n);
    for k in 0..m.n_units() {
        if m.unit_total(k) == 0.0 {
            continue;
        }
        let shares = m.unit_shares(k);
        let votes = m.unit_votes(k);
        order.clear();
        order.extend(0..n);
        order.sort_by(|&a, &b| shares[a].total_cmp(&shares[b]));
        let total_v: f64 = votes.iter().sum();
        let total_w: f64 = votes.iter().zip(shares).map(|(v, r)| v * r).sum();
        // Σ_j v_j |r_i − r_j| from running sums of v_j and v_j r_j below r_i.
        let (mut v_below, mut w_below) = (0.0, 0.0);
        for &idx in &order {
            let (r, v) = (shares[idx], votes[idx]);
            let v_above = total_v - v_below - v;
            let w_above = total_w - w_below - v * r;
            if v > 0.0 {
                let weighted = (r * v_below - w_below) + (w_above - r * v_above);
                sums[idx] += v.powf(1.0 + alpha) * weighted.max(0.0);
            }
            v_below += v;
            w_below += v * r;
        }
    }
    let mut zero_vote_candidates = Vec::new();
    let per_candidate: Vec<f64> = sums
        .into_iter()
        .enumerate()
        .map(|(i, s)| {
            let total = m.candidate_total(i);
            if total == 0.0 {
                zero_vote_candidates.push(m.candidates()[i].clone());
                0.0
            } else {
                s * params.k_normalization(total)
            }
        })
        .collect();
    EstebanRayResult {
        alpha,
        aggregate: per_candidate.iter().sum(),
        per_candidate,
        zero_vote_candidates,
    }
}

/// Sample standard deviation of candidate `i`'s unit shares around its
/// vote-weighted national share. Units without votes are skipped.
pub fn dispersion(m: &ElectionMatrix, i: usize) -> Result<f64, MetricsError> {
    check_candidate(m, i)?;
    let mean = m.overall_share()[i];
    let (count, ss) = (0..m.n_units())
        .filter(|&k| m.unit_total(k) > 0.0)
        .fold((0usize, 0.0), |(c, acc), k| {
            let d = m.share(k, i) - mean;
            (c + 1, acc + d * d)
        });
    if count < 2 {
        return Err(MetricsError::SingleUnit(count));
    }
    Ok((ss / (count - 1) as f64).sqrt())
}

#[derive(Debug, Clone, PartialEq)]
pub struct DispersionResult {
    pub per_candidate: Vec<f64>,
    pub aggregate: f64,
}

pub fn dispersion_all(m: &ElectionMatrix) -> Result<DispersionResult, MetricsError> {
    let per_candidate = (0..m.n_candidates())
        .map(|i| dispersion(m, i))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(DispersionResult {
        aggregate: per_candidate.iter().sum(),
        per_candidate,
    })
}

/// Gap between the two largest national shares.
pub fn margin_of_victory(m: &ElectionMatrix) -> f64 {
    let mut shares = m.overall_share().to_vec();
    shares.sort_by(|a, b| b.total_cmp(a));
    (shares[0] - shares[1]).max(0.0)
}

/// Reynal-Querol index over national shares: 1 − Σ ((1/2 − s)/(1/2))² s.
pub fn reynal_querol(m: &ElectionMatrix) -> f64 {
    1.0 - m
        .overall_share()
        .iter()
        .map(|&s| {
            let d = (0.5 - s) / 0.5;
            d * d * s
        })
        .sum::<f64>()
}

/// Laakso-Taagepera effective number of candidates, 1 / Σ s².
pub fn effective_number_of_candidates(m: &ElectionMatrix) -> f64 {
    1.0 / m.overall_share().iter().map(|s| s * s).sum::<f64>()
}

/// Classical polarization and competitiveness measures for one election.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonReport {
    pub esteban_ray: Vec<EstebanRayResult>,
    /// `None` when the matrix has fewer than two units with votes.
    pub dispersion: Option<DispersionResult>,
    pub margin_of_victory: f64,
    pub reynal_querol: f64,
    pub enp: f64,
}

pub fn comparison_report(m: &ElectionMatrix, alphas: &[EstebanRayParams]) -> ComparisonReport {
    ComparisonReport {
        esteban_ray: alphas.iter().map(|&p| esteban_ray(m, p)).collect(),
        dispersion: dispersion_all(m).ok(),
        margin_of_victory: margin_of_victory(m),
        reynal_querol: reynal_querol(m),
        enp: effective_number_of_candidates(m),
    }
}
