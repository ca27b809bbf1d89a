//! Brute-force reference implementations and fixture builders shared by the
//! integration tests. The oracles work on plain vote rows and never call into
//! the library's metric kernels.

#![allow(dead_code)]

use epec::{ElectionMatrix, VoteRecord};
use rand::Rng;

pub fn shares(rows: &[Vec<f64>]) -> Vec<Vec<f64>> {
    rows.iter()
        .map(|row| {
            let t: f64 = row.iter().sum();
            row.iter().map(|v| if t > 0.0 { v / t } else { 0.0 }).collect()
        })
        .collect()
}

pub fn national_shares(rows: &[Vec<f64>]) -> Vec<f64> {
    let n = rows[0].len();
    let total: f64 = rows.iter().flatten().sum();
    (0..n).map(|i| rows.iter().map(|r| r[i]).sum::<f64>() / total).collect()
}

fn candidate_votes(rows: &[Vec<f64>], i: usize) -> f64 {
    rows.iter().map(|r| r[i]).sum()
}

pub fn within(rows: &[Vec<f64>], i: usize) -> f64 {
    let n = rows[0].len() as f64;
    let r = shares(rows);
    let s = national_shares(rows)[i];
    let vi = candidate_votes(rows, i);
    if vi == 0.0 {
        return 0.0;
    }
    let mut acc = 0.0;
    for k in 0..rows.len() {
        acc += rows[k][i] * (r[k][i] - s).abs();
    }
    acc / ((n - 1.0) * vi)
}

pub fn between(rows: &[Vec<f64>], i: usize) -> f64 {
    let n = rows[0].len();
    let r = shares(rows);
    let vi = candidate_votes(rows, i);
    if vi == 0.0 {
        return 0.0;
    }
    let mut acc = 0.0;
    for j in 0..n {
        if j == i {
            continue;
        }
        for k in 0..rows.len() {
            acc += rows[k][i] * (1.0 - (r[k][i] - r[k][j]).abs());
        }
    }
    acc / ((n * (n - 1)) as f64 * vi)
}

pub fn ep_ec(rows: &[Vec<f64>]) -> (f64, f64) {
    let n = rows[0].len();
    ((0..n).map(|i| within(rows, i)).sum(), (0..n).map(|i| between(rows, i)).sum())
}

pub fn esteban_ray(rows: &[Vec<f64>], i: usize, alpha: f64) -> f64 {
    let n = rows[0].len();
    let r = shares(rows);
    let vi = candidate_votes(rows, i);
    if vi == 0.0 {
        return 0.0;
    }
    let mut acc = 0.0;
    for k in 0..rows.len() {
        for j in 0..n {
            acc += rows[k][i].powf(1.0 + alpha) * rows[k][j] * (r[k][i] - r[k][j]).abs();
        }
    }
    acc * vi.powf(-(2.0 + alpha))
}

/// Sample standard deviation of unit shares about the national share,
/// skipping units without votes.
pub fn dispersion(rows: &[Vec<f64>], i: usize) -> f64 {
    let r = shares(rows);
    let s = national_shares(rows)[i];
    let voting: Vec<usize> = (0..rows.len()).filter(|&k| rows[k].iter().sum::<f64>() > 0.0).collect();
    let ss: f64 = voting.iter().map(|&k| (r[k][i] - s).powi(2)).sum();
    (ss / (voting.len() - 1) as f64).sqrt()
}

pub fn reynal_querol(rows: &[Vec<f64>]) -> f64 {
    let mut acc = 0.0;
    for s in national_shares(rows) {
        acc += (0.5 - s) * (0.5 - s) / 0.25 * s;
    }
    1.0 - acc
}

pub fn enp(rows: &[Vec<f64>]) -> f64 {
    let mut hhi = 0.0;
    for s in national_shares(rows) {
        hhi += s * s;
    }
    1.0 / hhi
}

pub fn matrix(rows: Vec<Vec<f64>>) -> ElectionMatrix {
    let units = (0..rows.len()).map(|k| format!("u{k:03}")).collect();
    let cands = (0..rows[0].len()).map(|i| format!("c{i}")).collect();
    ElectionMatrix::new(units, cands, rows).expect("valid matrix")
}

/// Random integer vote rows with a positive grand total. Roughly one cell in
/// eight is zero so that empty units and candidates get exercised.
pub fn random_rows<R: Rng>(rng: &mut R, units: usize, cands: usize) -> Vec<Vec<f64>> {
    loop {
        let rows: Vec<Vec<f64>> = (0..units)
            .map(|_| {
                (0..cands)
                    .map(|_| if rng.gen_ratio(1, 8) { 0.0 } else { rng.gen_range(0..500) as f64 })
                    .collect()
            })
            .collect();
        if rows.iter().flatten().sum::<f64>() > 0.0 {
            return rows;
        }
    }
}

/// Records for a hierarchical fixture: `regions` × `districts` × `stations`
/// polling ids of the form `R01|D02|S03`, with integer votes per candidate.
pub fn hierarchical_records<R: Rng>(
    rng: &mut R,
    regions: usize,
    districts: usize,
    stations: usize,
    candidate_weights: &[f64],
) -> Vec<VoteRecord> {
    let mut out = Vec::new();
    for g in 0..regions {
        // Region-specific tilt so regional EP/EC vary.
        let tilt: Vec<f64> = candidate_weights.iter().map(|w| w * rng.gen_range(0.5..1.5)).collect();
        for d in 0..districts {
            for s in 0..stations {
                let pid = format!("R{:02}|D{:02}|S{:02}", g + 1, d + 1, s + 1);
                for (i, w) in tilt.iter().enumerate() {
                    let v = (w * rng.gen_range(50.0..150.0)).round() as i64;
                    out.push(VoteRecord::new(pid.clone(), format!("cand{}", i + 1), v));
                }
            }
        }
    }
    epec::model::assign_ranks_and_rates(&mut out);
    out
}
