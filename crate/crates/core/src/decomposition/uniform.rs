use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::spectral::{Grid, SpectralField};

use super::block::Block;
use super::profile::{partition_bump, Transition};

/// Frequency-uniform blocks `σ_k(ξ) = Π_i θ(ξ_i − k_i)`, one per integer
/// vector `k` that meets the lattice.
#[derive(Debug, Clone)]
pub struct UniformSystem {
    grid: Grid,
    transition: Transition,
    keys: Vec<Vec<i64>>,
    blocks: Vec<Block>,
    lookup: BTreeMap<Vec<i64>, usize>,
}

impl UniformSystem {
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// `σ(ξ)`.
    pub fn sigma(&self, xi: &[f64]) -> f64 {
        xi.iter().map(|&x| partition_bump(self.transition, x)).product()
    }

    /// Active block indices in lexicographic order.
    pub fn indices(&self) -> &[Vec<i64>] {
        &self.keys
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    /// Largest `|k|_∞` in the active set.
    pub fn k_max(&self) -> i64 {
        self.keys
            .iter()
            .flat_map(|k| k.iter().map(|v| v.abs()))
            .max()
            .unwrap_or(0)
    }

    pub fn block(&self, k: &[i64]) -> Result<&Block> {
        self.lookup
            .get(k)
            .map(|&i| &self.blocks[i])
            .ok_or_else(|| Error::Index {
                index: format!("{k:?}"),
                range: format!("|k|_inf <= {}", self.k_max()),
            })
    }

    pub fn blocks(&self) -> impl Iterator<Item = (&[i64], &Block)> {
        self.keys.iter().map(|k| k.as_slice()).zip(self.blocks.iter())
    }
}

pub fn build_uniform(grid: &Grid) -> UniformSystem {
    let transition = Transition::Mollifier;
    let n = grid.n_dims();
    let mut acc: BTreeMap<Vec<i64>, Vec<(usize, f64)>> = BTreeMap::new();
    for idx in 0..grid.len() {
        // each representative contributes 1/count of its weight
        let mut reps: Vec<Vec<f64>> = Vec::new();
        grid.for_each_representative(idx, |xi| reps.push(xi.to_vec()));
        let share = 1.0 / reps.len() as f64;
        let mut local: BTreeMap<Vec<i64>, f64> = BTreeMap::new();
        for xi in &reps {
            let ranges: Vec<Vec<(i64, f64)>> = xi
                .iter()
                .map(|&x| {
                    let c = x.round() as i64;
                    (c - 1..=c + 1)
                        .map(|k| (k, partition_bump(transition, x - k as f64)))
                        .filter(|(_, w)| *w != 0.0)
                        .collect()
                })
                .collect();
            let mut stack: Vec<(Vec<i64>, f64)> = vec![(Vec::with_capacity(n), 1.0)];
            for axis in ranges.iter() {
                let mut next = Vec::new();
                for (key, w) in &stack {
                    for &(k, wa) in axis {
                        let mut key = key.clone();
                        key.push(k);
                        next.push((key, w * wa));
                    }
                }
                stack = next;
            }
            for (key, w) in stack {
                *local.entry(key).or_insert(0.0) += w * share;
            }
        }
        for (key, w) in local {
            acc.entry(key).or_default().push((idx, w));
        }
    }
    let mut keys = Vec::with_capacity(acc.len());
    let mut blocks = Vec::with_capacity(acc.len());
    let mut lookup = BTreeMap::new();
    for (i, (k, support)) in acc.into_iter().enumerate() {
        lookup.insert(k.clone(), i);
        keys.push(k);
        blocks.push(Block::from_support(support));
    }
    UniformSystem {
        grid: grid.clone(),
        transition,
        keys,
        blocks,
        lookup,
    }
}

/// `□_k f`. The result is generally not conjugate-symmetric.
pub fn uniform_block(f: &SpectralField, k: &[i64], sys: &UniformSystem) -> Result<SpectralField> {
    Ok(sys.block(k)?.apply(f))
}
