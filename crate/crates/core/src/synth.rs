// SPDX-License-Identifier: Apache-2.0

//! Synthetic partition ensembles with a planted group structure.

use std::fmt;
use std::str::FromStr;

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

use crate::ensemble::{Partition, PartitionEnsemble};
use crate::error::{Error, Result};
use crate::seed::{rng_for, STAGE_SYNTH};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SynthMode {
    /// One-hot copies; each vertex label is replaced by a random other group with probability `eta`.
    Hard,
    /// Each vertex mixes its planted one-hot vector with a flat Dirichlet draw: `(1 - eta) e + eta d`.
    Soft,
    /// Soft copies, where the later half of the copies splits planted group 0 in two.
    HierarchicalSplit,
}

impl FromStr for SynthMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "hard" => Ok(SynthMode::Hard),
            "soft" => Ok(SynthMode::Soft),
            "hierarchical-split" | "split" => Ok(SynthMode::HierarchicalSplit),
            other => Err(Error::InvalidParameter(format!(
                "unknown mode '{other}'; expected hard, soft or hierarchical-split"
            ))),
        }
    }
}

impl fmt::Display for SynthMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SynthMode::Hard => "hard",
            SynthMode::Soft => "soft",
            SynthMode::HierarchicalSplit => "hierarchical-split",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthParams {
    pub n: usize,
    pub k: usize,
    pub l: usize,
    pub eta: f64,
    pub mode: SynthMode,
    pub seed: u64,
}

/// Where a generated group comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GroupOrigin {
    Planted { group: usize },
    /// One half of a split planted group.
    SplitHalf { group: usize, half: usize },
}

#[derive(Debug, Clone)]
pub struct SyntheticEnsemble {
    pub ensemble: PartitionEnsemble,
    /// Planted group of every vertex.
    pub planted: Vec<usize>,
    /// Half (0 or 1) of planted group 0 for its members; `None` elsewhere.
    pub split_half: Vec<Option<usize>>,
    /// Origin of every group, per partition and local index.
    pub origins: Vec<Vec<GroupOrigin>>,
}

impl SyntheticEnsemble {
    /// Origins in stacked row order.
    pub fn stacked_origins(&self) -> Vec<GroupOrigin> {
        self.origins.iter().flatten().copied().collect()
    }
}

fn validate(p: &SynthParams) -> Result<()> {
    if p.n == 0 || p.k == 0 || p.k > p.n {
        return Err(Error::InvalidParameter(format!(
            "need 1 <= k <= n, got k = {}, n = {}",
            p.k, p.n
        )));
    }
    if p.l == 0 {
        return Err(Error::InvalidParameter("need at least one copy".into()));
    }
    if !p.eta.is_finite() || !(0.0..=1.0).contains(&p.eta) {
        return Err(Error::InvalidParameter(format!("eta must lie in [0, 1], got {}", p.eta)));
    }
    if p.mode == SynthMode::HierarchicalSplit && p.n / p.k < 2 {
        return Err(Error::InvalidParameter(
            "hierarchical-split needs at least two vertices per planted group".into(),
        ));
    }
    Ok(())
}

pub fn generate_synthetic_ensemble(p: &SynthParams) -> Result<SyntheticEnsemble> {
    validate(p)?;
    let mut rng = rng_for(p.seed, STAGE_SYNTH, 0);
    let mut planted: Vec<usize> = (0..p.n).map(|i| i % p.k).collect();
    planted.shuffle(&mut rng);

    let mut split_half = vec![None; p.n];
    let members: Vec<usize> = (0..p.n).filter(|&i| planted[i] == 0).collect();
    let first = members.len().div_ceil(2);
    for (r, &v) in members.iter().enumerate() {
        split_half[v] = Some(usize::from(r >= first));
    }

    let mut partitions = Vec::with_capacity(p.l);
    let mut origins = Vec::with_capacity(p.l);
    for copy in 0..p.l {
        let mut rng = rng_for(p.seed, STAGE_SYNTH, 1 + copy as u64);
        let split = p.mode == SynthMode::HierarchicalSplit && copy >= p.l / 2;
        // Split copies move the second half of group 0 into a new group k.
        let labels: Vec<usize> = (0..p.n)
            .map(|i| if split && split_half[i] == Some(1) { p.k } else { planted[i] })
            .collect();
        let m = if split { p.k + 1 } else { p.k };
        let name = format!("copy{copy:02}");
        let partition = match p.mode {
            SynthMode::Hard => {
                let noisy = labels
                    .iter()
                    .map(|&g| {
                        if m > 1 && rng.random::<f64>() < p.eta {
                            let other = rng.random_range(0..m - 1);
                            if other >= g {
                                other + 1
                            } else {
                                other
                            }
                        } else {
                            g
                        }
                    })
                    .collect();
                Partition::hard(name, noisy, Some(m))?
            }
            SynthMode::Soft | SynthMode::HierarchicalSplit => {
                let mut a = Array2::<f64>::zeros((m, p.n));
                for (i, &g) in labels.iter().enumerate() {
                    let draws: Vec<f64> = (0..m).map(|_| Exp1.sample(&mut rng)).collect();
                    let total: f64 = draws.iter().sum();
                    for (h, d) in draws.iter().enumerate() {
                        let dir = if total > 0.0 { d / total } else { 1.0 / m as f64 };
                        let base = if h == g { 1.0 - p.eta } else { 0.0 };
                        a[[h, i]] = (base + p.eta * dir).min(1.0);
                    }
                }
                Partition::soft(name, a)?
            }
        };
        let mut o: Vec<GroupOrigin> = (0..p.k)
            .map(|g| {
                if split && g == 0 {
                    GroupOrigin::SplitHalf { group: 0, half: 0 }
                } else {
                    GroupOrigin::Planted { group: g }
                }
            })
            .collect();
        if split {
            o.push(GroupOrigin::SplitHalf { group: 0, half: 1 });
        }
        partitions.push(partition);
        origins.push(o);
    }
    Ok(SyntheticEnsemble {
        ensemble: PartitionEnsemble::with_vertex_count(p.n, partitions, None)?,
        planted,
        split_half,
        origins,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(mode: SynthMode, eta: f64) -> SynthParams {
        SynthParams {
            n: 60,
            k: 3,
            l: 4,
            eta,
            mode,
            seed: 7,
        }
    }

    #[test]
    fn noiseless_hard_copies_are_identical() {
        let s = generate_synthetic_ensemble(&params(SynthMode::Hard, 0.0)).unwrap();
        let parts = s.ensemble.partitions();
        assert!(parts.iter().all(|p| p.assignment() == parts[0].assignment()));
        let mut sizes = [0; 3];
        s.planted.iter().for_each(|&g| sizes[g] += 1);
        assert_eq!(sizes, [20, 20, 20]);
    }

    #[test]
    fn soft_cardinality_and_sums() {
        let s = generate_synthetic_ensemble(&params(SynthMode::Soft, 0.05)).unwrap();
        assert_eq!(s.ensemble.stack().matrix.n_groups(), 12);
        for p in s.ensemble.partitions() {
            for c in p.assignment().columns() {
                assert!((c.sum() - 1.0).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn split_copies_have_one_more_group() {
        let s = generate_synthetic_ensemble(&params(SynthMode::HierarchicalSplit, 0.05)).unwrap();
        let m: Vec<usize> = s.ensemble.partitions().iter().map(|p| p.n_groups()).collect();
        assert_eq!(m, vec![3, 3, 4, 4]);
        assert_eq!(s.stacked_origins().len(), 14);
    }

    #[test]
    fn rejects_bad_ranges() {
        let mut p = params(SynthMode::Soft, 0.05);
        p.k = 61;
        assert!(generate_synthetic_ensemble(&p).is_err());
        p.k = 3;
        p.eta = 1.5;
        assert!(generate_synthetic_ensemble(&p).is_err());
        p.eta = 0.1;
        p.l = 0;
        assert!(generate_synthetic_ensemble(&p).is_err());
    }

    #[test]
    fn mode_parses() {
        assert_eq!("hierarchical-split".parse::<SynthMode>().unwrap(), SynthMode::HierarchicalSplit);
        assert!("odd".parse::<SynthMode>().is_err());
    }
}
