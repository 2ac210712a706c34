use rayon::prelude::*;
use serde::Serialize;

use super::langevin::StochasticTrajectory;
use crate::error::{Error, Result};

/// Members are reduced in fixed-size chunks so the summary does not depend on
/// thread count or completion order.
const CHUNK: usize = 64;

pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct EnsembleConfig {
    n_members: usize,
    base_seed: u64,
}

impl EnsembleConfig {
    pub fn new(n_members: usize, base_seed: u64) -> Result<Self> {
        if n_members == 0 {
            return Err(Error::Ensemble("ensemble needs at least one member".into()));
        }
        Ok(EnsembleConfig { n_members, base_seed })
    }

    pub fn n_members(&self) -> usize {
        self.n_members
    }

    pub fn base_seed(&self) -> u64 {
        self.base_seed
    }

    /// splitmix64 is a bijection, so distinct indices give distinct seeds.
    pub fn member_seed(&self, index: usize) -> u64 {
        self.base_seed ^ splitmix64(index as u64)
    }
}

/// Pointwise statistics; the standard errors are NaN for a single member.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnsembleSummary {
    pub t: Vec<f64>,
    pub mean_x: Vec<f64>,
    pub mean_v: Vec<f64>,
    pub stderr_x: Vec<f64>,
    pub stderr_v: Vec<f64>,
    pub n: usize,
}

#[derive(Clone)]
struct Moments {
    n: f64,
    mean_x: Vec<f64>,
    mean_v: Vec<f64>,
    m2_x: Vec<f64>,
    m2_v: Vec<f64>,
}

impl Moments {
    fn empty(len: usize) -> Self {
        Moments {
            n: 0.0,
            mean_x: vec![0.0; len],
            mean_v: vec![0.0; len],
            m2_x: vec![0.0; len],
            m2_v: vec![0.0; len],
        }
    }

    fn add(&mut self, tr: &StochasticTrajectory) {
        self.n += 1.0;
        let n = self.n;
        for i in 0..self.mean_x.len() {
            let dx = tr.x[i] - self.mean_x[i];
            self.mean_x[i] += dx / n;
            self.m2_x[i] += dx * (tr.x[i] - self.mean_x[i]);
            let dv = tr.v[i] - self.mean_v[i];
            self.mean_v[i] += dv / n;
            self.m2_v[i] += dv * (tr.v[i] - self.mean_v[i]);
        }
    }

    /// Chan et al. pairwise update.
    fn merge(&mut self, other: &Moments) {
        if other.n == 0.0 {
            return;
        }
        let n = self.n + other.n;
        let (wa, wb) = (self.n / n, other.n / n);
        let cross = self.n * other.n / n;
        for i in 0..self.mean_x.len() {
            let dx = other.mean_x[i] - self.mean_x[i];
            self.mean_x[i] = wa * self.mean_x[i] + wb * other.mean_x[i];
            self.m2_x[i] += other.m2_x[i] + dx * dx * cross;
            let dv = other.mean_v[i] - self.mean_v[i];
            self.mean_v[i] = wa * self.mean_v[i] + wb * other.mean_v[i];
            self.m2_v[i] += other.m2_v[i] + dv * dv * cross;
        }
        self.n = n;
    }
}

fn check_grid(reference: &[f64], tr: &StochasticTrajectory, index: usize) -> Result<()> {
    if tr.t.len() != reference.len() || tr.x.len() != reference.len() || tr.v.len() != reference.len() {
        return Err(Error::Ensemble(format!(
            "member {index} has {} samples, expected {}",
            tr.t.len(),
            reference.len()
        )));
    }
    if tr.t.iter().zip(reference).any(|(a, b)| a != b) {
        return Err(Error::Ensemble(format!("member {index} is on a different time grid")));
    }
    Ok(())
}

/// Runs `member(seed)` for every member concurrently and reduces the paths.
///
/// Members must share the time grid of member 0 exactly.
pub fn ensemble_mean<F>(config: &EnsembleConfig, member: F) -> Result<EnsembleSummary>
where
    F: Fn(u64) -> Result<StochasticTrajectory> + Sync,
{
    let first = member(config.member_seed(0))?;
    let grid = first.t.clone();
    let len = grid.len();
    let n = config.n_members;
    let chunks: Vec<Moments> = (0..n.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let mut acc = Moments::empty(len);
            for i in c * CHUNK..((c + 1) * CHUNK).min(n) {
                let tr = if i == 0 {
                    first.clone()
                } else {
                    member(config.member_seed(i))?
                };
                check_grid(&grid, &tr, i)?;
                acc.add(&tr);
            }
            Ok(acc)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut total = Moments::empty(len);
    for c in &chunks {
        total.merge(c);
    }
    let se = |m2: &[f64]| -> Vec<f64> {
        if n < 2 {
            return vec![f64::NAN; len];
        }
        let nf = n as f64;
        m2.iter().map(|s| (s / (nf - 1.0) / nf).sqrt()).collect()
    };
    Ok(EnsembleSummary {
        t: grid,
        stderr_x: se(&total.m2_x),
        stderr_v: se(&total.m2_v),
        mean_x: total.mean_x,
        mean_v: total.mean_v,
        n,
    })
}

/// Max-norm distance between the ensemble mean position and a reference
/// sampled on the same grid.
pub fn max_deviation(summary: &EnsembleSummary, reference_x: &[f64]) -> Result<f64> {
    if reference_x.len() != summary.mean_x.len() {
        return Err(Error::Ensemble(format!(
            "reference has {} samples, ensemble has {}",
            reference_x.len(),
            summary.mean_x.len()
        )));
    }
    Ok(summary
        .mean_x
        .iter()
        .zip(reference_x)
        .fold(0.0f64, |m, (a, b)| m.max((a - b).abs())))
}
