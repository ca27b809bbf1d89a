//! Seeded synthetic elections: clamped Gaussian vote shares per unit with a
//! constant number of votes per unit.
//!
//! Each unit consumes exactly one standard-normal draw per Gaussian variable,
//! in unit order, from a ChaCha8 stream seeded with [`SyntheticSpec::seed`].

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use thiserror::Error;

use crate::model::{ElectionMatrix, ModelError};

pub const DEFAULT_VOTES_PER_UNIT: u32 = 100;
pub const MAX_SIGMA: f64 = 0.25;

/// Means used in the published sweep.
pub const GRID_MEANS: [f64; 5] = [0.5, 0.66, 0.75, 0.8333, 1.0];
/// Standard deviations used in the published sweep.
pub const GRID_SIGMAS: [f64; 4] = [0.0025, 0.05, 0.10, 0.25];
pub const GRID_UNITS: usize = 100;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SynthError {
    #[error("invalid synthetic spec: {0}")]
    InvalidSpec(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    /// Gaussian mean of the share of each drawn candidate.
    pub means: Vec<f64>,
    pub sigmas: Vec<f64>,
    pub n_units: usize,
    pub votes_per_unit: u32,
    pub seed: u64,
}

impl SyntheticSpec {
    pub fn new(means: Vec<f64>, sigmas: Vec<f64>, n_units: usize, seed: u64) -> Self {
        SyntheticSpec {
            means,
            sigmas,
            n_units,
            votes_per_unit: DEFAULT_VOTES_PER_UNIT,
            seed,
        }
    }

    pub fn two_candidate(mean: f64, sigma: f64, n_units: usize, seed: u64) -> Self {
        SyntheticSpec::new(vec![mean], vec![sigma], n_units, seed)
    }

    pub fn with_votes_per_unit(mut self, votes: u32) -> Self {
        self.votes_per_unit = votes;
        self
    }

    pub fn validate(&self, drawn: usize) -> Result<(), SynthError> {
        let invalid = |msg: String| Err(SynthError::InvalidSpec(msg));
        if self.means.len() != drawn || self.sigmas.len() != drawn {
            return invalid(format!(
                "expected {drawn} means and sigmas, got {} and {}",
                self.means.len(),
                self.sigmas.len()
            ));
        }
        if let Some(mu) = self.means.iter().find(|m| !(0.0..=1.0).contains(*m)) {
            return invalid(format!("mean {mu} outside [0, 1]"));
        }
        if let Some(s) = self.sigmas.iter().find(|s| !(0.0..=MAX_SIGMA).contains(*s)) {
            return invalid(format!("sigma {s} outside [0, {MAX_SIGMA}]"));
        }
        if self.n_units == 0 {
            return invalid("number of units must be positive".into());
        }
        if self.votes_per_unit == 0 {
            return invalid("votes per unit must be positive".into());
        }
        Ok(())
    }
}

/// Candidate labels `A`, `B`, ... (then `C27`, `C28`, ... past the alphabet).
pub fn candidate_label(i: usize) -> String {
    if i < 26 {
        ((b'A' + i as u8) as char).to_string()
    } else {
        format!("C{}", i + 1)
    }
}

/// Zero-padded unit labels that sort in generation order.
pub fn unit_label(k: usize, n_units: usize) -> String {
    let width = n_units.max(1).to_string().len();
    format!("u{:0width$}", k + 1)
}

fn draw(rng: &mut ChaCha8Rng, mean: f64, sigma: f64) -> f64 {
    let z: f64 = StandardNormal.sample(rng);
    (mean + sigma * z).clamp(0.0, 1.0)
}

/// Number of whole 0.01 steps in a share in [0, 1]. Computed on the scaled
/// value so that shares lying exactly on the grid keep their value.
fn grid_steps(r: f64) -> f64 {
    (r * 100.0 + 1e-9).floor().min(100.0)
}

fn finish(spec: &SyntheticSpec, shares: Vec<Vec<f64>>) -> Result<ElectionMatrix, SynthError> {
    let n = shares[0].len();
    let vpu = spec.votes_per_unit as f64;
    // The residual candidate takes whatever is left of the unit's votes.
    let rows = shares
        .into_iter()
        .map(|r| {
            let mut votes: Vec<f64> = r[..n - 1].iter().map(|x| vpu * x).collect();
            let used: f64 = votes.iter().sum();
            votes.push((vpu - used).max(0.0));
            votes
        })
        .collect();
    Ok(ElectionMatrix::new(
        (0..spec.n_units).map(|k| unit_label(k, spec.n_units)).collect(),
        (0..n).map(candidate_label).collect(),
        rows,
    )?)
}

pub(crate) fn sample_two(spec: &SyntheticSpec, grid: bool) -> Result<ElectionMatrix, SynthError> {
    spec.validate(1)?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let vpu = spec.votes_per_unit as f64;
    let mut rows = Vec::with_capacity(spec.n_units);
    for _ in 0..spec.n_units {
        let r0 = draw(&mut rng, spec.means[0], spec.sigmas[0]);
        let first = if grid { vpu * grid_steps(r0) / 100.0 } else { vpu * r0 };
        rows.push(vec![first, vpu - first]);
    }
    Ok(ElectionMatrix::new(
        (0..spec.n_units).map(|k| unit_label(k, spec.n_units)).collect(),
        vec![candidate_label(0), candidate_label(1)],
        rows,
    )?)
}

/// Two-candidate sampler: the first share is drawn, clamped to [0, 1] and
/// floored to the 0.01 grid; the second takes the rest.
pub fn sample_two_candidate(spec: &SyntheticSpec) -> Result<ElectionMatrix, SynthError> {
    sample_two(spec, true)
}

/// Three-candidate sampler: two clamped draws; if they overflow 1 the second
/// is cut back to 1 − r₀, and the third candidate takes the residual.
pub fn sample_three_candidate(spec: &SyntheticSpec) -> Result<ElectionMatrix, SynthError> {
    spec.validate(2)?;
    sample_sequential(spec)
}

/// Stick-breaking generalization of the three-candidate sampler: candidates
/// 1..n−1 are drawn in order, each cut back so the running sum never exceeds 1,
/// and the last candidate takes the residual.
pub fn sample_n_candidate(n: usize, spec: &SyntheticSpec) -> Result<ElectionMatrix, SynthError> {
    if n < 2 {
        return Err(SynthError::InvalidSpec(format!("need at least 2 candidates, got {n}")));
    }
    spec.validate(n - 1)?;
    sample_sequential(spec)
}

fn sample_sequential(spec: &SyntheticSpec) -> Result<ElectionMatrix, SynthError> {
    let drawn = spec.means.len();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut shares = Vec::with_capacity(spec.n_units);
    for _ in 0..spec.n_units {
        let mut row: Vec<f64> = spec
            .means
            .iter()
            .zip(&spec.sigmas)
            .map(|(&mu, &s)| draw(&mut rng, mu, s))
            .collect();
        let mut used = 0.0;
        for r in row.iter_mut() {
            if used + *r > 1.0 {
                *r = 1.0 - used;
            }
            used += *r;
        }
        row.push(1.0 - used);
        debug_assert_eq!(row.len(), drawn + 1);
        shares.push(row);
    }
    finish(spec, shares)
}

/// Per-candidate Gaussian means for an `n`-candidate sweep cell whose leading
/// candidate expects `leader` of the vote; the others split the rest evenly.
pub fn sweep_means(n: usize, leader: f64) -> Vec<f64> {
    assert!(n >= 2, "sweep needs at least two candidates");
    let rest = (1.0 - leader) / (n - 1) as f64;
    std::iter::once(leader)
        .chain(std::iter::repeat_n(rest, n - 2))
        .collect()
}

/// Samples an `n`-candidate sweep cell: the published two-candidate sampler for
/// n = 2, the three-candidate sampler for n = 3 and stick-breaking beyond.
pub fn sample_sweep_cell(
    n: usize,
    leader: f64,
    sigma: f64,
    n_units: usize,
    seed: u64,
) -> Result<ElectionMatrix, SynthError> {
    let means = sweep_means(n, leader);
    let sigmas = vec![sigma; means.len()];
    let spec = SyntheticSpec::new(means, sigmas, n_units, seed);
    match n {
        2 => sample_two_candidate(&spec),
        3 => sample_three_candidate(&spec),
        _ => sample_n_candidate(n, &spec),
    }
}

/// Rounds each unit's real-valued votes to integers with the largest-remainder
/// rule, keeping every unit total at its rounded original total.
pub fn apportion_integer_votes(m: &ElectionMatrix) -> Result<ElectionMatrix, ModelError> {
    let rows = m
        .vote_rows()
        .into_iter()
        .map(|row| {
            let target = row.iter().sum::<f64>().round();
            let mut floors: Vec<f64> = row.iter().map(|v| v.floor()).collect();
            let mut missing = (target - floors.iter().sum::<f64>()).max(0.0) as usize;
            let mut order: Vec<usize> = (0..row.len()).collect();
            order.sort_by(|&a, &b| {
                let (ra, rb) = (row[a] - row[a].floor(), row[b] - row[b].floor());
                rb.total_cmp(&ra).then(a.cmp(&b))
            });
            for &i in order.iter().cycle() {
                if missing == 0 {
                    break;
                }
                floors[i] += 1.0;
                missing -= 1;
            }
            floors
        })
        .collect();
    ElectionMatrix::new(m.units().to_vec(), m.candidates().to_vec(), rows)
}
