//! Depth-first enumeration of matrix products over the word tree.
//!
//! Every node costs one `d × d` multiply. Products are rescaled by their largest
//! entry every [`RESCALE_EVERY`] levels and the scale is carried in log form,
//! so deep products neither underflow nor overflow. Leaves are grouped by
//! `λ_ī`, which only depends on how often each distinct weight value occurs in
//! the word; per group only the list of `log ‖A_ī‖` is kept.
//!
//! The parallel path splits the tree at a fixed prefix depth and concatenates
//! subtree results in lexicographic order. Each leaf value is produced by the
//! same sequence of floating point operations in both paths, so the output is
//! bit-identical.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use crate::linalg::{self, Matrix, NormKind};
use crate::math;
use crate::{Error, Result};

const RESCALE_EVERY: usize = 16;
/// The parallel path wants at least this many subtrees.
const MIN_TASKS: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum LeafRule {
    /// All words of exactly this length.
    Depth(usize),
    /// The stopping-time partition: stop at the first prefix with `λ_ī ≤ r`.
    Weight(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct LeafGroup {
    /// `log λ_ī`, shared by the group.
    pub log_weight: f64,
    /// `log ‖A_ī‖` for each leaf, in lexicographic word order.
    pub log_norms: Vec<f64>,
    pub min: f64,
    pub max: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct LeafTable {
    pub groups: Vec<LeafGroup>,
    pub count: usize,
}

impl LeafTable {
    /// `log Σ_ī exp(t log‖A_ī‖)` per group.
    pub fn group_sums(&self, t: f64) -> Vec<f64> {
        self.groups
            .iter()
            .map(|g| {
                if t == 0.0 {
                    return math::ln(g.log_norms.len() as f64);
                }
                let m = if t > 0.0 { t * g.max } else { t * g.min };
                let s: f64 = g.log_norms.iter().map(|l| math::exp(t * l - m)).sum();
                m + math::ln(s)
            })
            .collect()
    }

    /// Per group, `log Σ exp(t ℓ)` and the `exp(t ℓ)`-weighted mean of `ℓ`.
    pub fn group_moments(&self, t: f64) -> Vec<(f64, f64)> {
        self.groups
            .iter()
            .map(|g| {
                let m = if t > 0.0 { t * g.max } else { t * g.min };
                let (mut s, mut sl) = (0.0, 0.0);
                for l in &g.log_norms {
                    let e = if t == 0.0 { 1.0 } else { math::exp(t * l - m) };
                    s += e;
                    sl += e * l;
                }
                let log_sum = if t == 0.0 { math::ln(s) } else { m + math::ln(s) };
                (log_sum, sl / s)
            })
            .collect()
    }
}

pub(crate) struct Enumerator<'a> {
    dim: usize,
    mats: Vec<&'a [f64]>,
    weights: &'a [f64],
    class_of: Vec<usize>,
    class_values: Vec<f64>,
    norm: NormKind,
    rule: LeafRule,
    max_depth: usize,
}

struct Task {
    level: usize,
    mat: Vec<f64>,
    log_scale: f64,
    weight: f64,
    counts: Vec<u32>,
}

impl<'a> Enumerator<'a> {
    pub fn new(
        matrices: &'a [Matrix],
        weights: &'a [f64],
        norm: NormKind,
        rule: LeafRule,
        budget: usize,
    ) -> Result<Self> {
        let n = matrices.len();
        let mut class_values: Vec<f64> = Vec::new();
        let mut class_of = Vec::with_capacity(n);
        for w in weights {
            match class_values.iter().position(|v| v == w) {
                Some(c) => class_of.push(c),
                None => {
                    class_of.push(class_values.len());
                    class_values.push(*w);
                }
            }
        }
        let max_depth = match rule {
            LeafRule::Depth(d) => {
                let needed = (n as u128).checked_pow(d as u32).unwrap_or(u128::MAX);
                if needed > budget as u128 {
                    return Err(Error::Budget { needed, budget });
                }
                d
            }
            LeafRule::Weight(r) => {
                if !(r > 0.0 && r < 1.0) {
                    return Err(Error::Domain {
                        value: r,
                        lo: 0.0,
                        hi: 1.0,
                    });
                }
                let min_w = weights.iter().copied().fold(f64::INFINITY, f64::min);
                let max_w = weights.iter().copied().fold(0.0, f64::max);
                let bound = 1.0 / (r * min_w);
                if bound > budget as f64 {
                    return Err(Error::Budget {
                        needed: bound as u128,
                        budget,
                    });
                }
                math::ceil(math::ln(r) / math::ln(max_w)) as usize + 1
            }
        };
        let radix = max_depth as u128 + 1;
        if radix.checked_pow(class_values.len() as u32).map_or(true, |k| k > u64::MAX as u128) {
            return Err(Error::Unsupported("too many distinct weights for this depth".into()));
        }
        Ok(Enumerator {
            dim: matrices[0].dim(),
            mats: matrices.iter().map(|m| m.as_slice()).collect(),
            weights,
            class_of,
            class_values,
            norm,
            rule,
            max_depth,
        })
    }

    fn is_leaf(&self, level: usize, weight: f64) -> bool {
        match self.rule {
            LeafRule::Depth(d) => level == d,
            LeafRule::Weight(r) => weight <= r || level == self.max_depth,
        }
    }

    fn key(&self, counts: &[u32]) -> u64 {
        let radix = self.max_depth as u64 + 1;
        counts.iter().rev().fold(0u64, |k, c| k * radix + *c as u64)
    }

    fn log_weight(&self, key: u64) -> f64 {
        let radix = self.max_depth as u64 + 1;
        let mut k = key;
        let mut s = 0.0;
        for v in &self.class_values {
            let c = k % radix;
            k /= radix;
            s += c as f64 * math::ln(*v);
        }
        s
    }

    /// Child state `parent · A_i`, rescaled on fixed levels.
    #[inline]
    fn step(&self, parent: &[f64], i: usize, child_level: usize, child: &mut [f64], log_scale: f64) -> f64 {
        linalg::mul_into(self.dim, parent, self.mats[i], child);
        if child_level % RESCALE_EVERY == 0 {
            let s = child.iter().fold(0.0f64, |m, x| m.max(math::abs(*x)));
            if s > 0.0 {
                for x in child.iter_mut() {
                    *x /= s;
                }
                return log_scale + math::ln(s);
            }
        }
        log_scale
    }

    fn root(&self) -> Task {
        Task {
            level: 0,
            mat: Matrix::identity(self.dim).as_slice().to_vec(),
            log_scale: 0.0,
            weight: 1.0,
            counts: vec![0; self.class_values.len()],
        }
    }

    /// Subtree roots at `split` levels (or shallower leaves), in order.
    fn tasks(&self, split: usize) -> Vec<Task> {
        let mut out = Vec::new();
        self.collect_tasks(self.root(), split, &mut out);
        out
    }

    fn collect_tasks(&self, t: Task, split: usize, out: &mut Vec<Task>) {
        if t.level == split || self.is_leaf(t.level, t.weight) {
            out.push(t);
            return;
        }
        for i in 0..self.mats.len() {
            let mut mat = vec![0.0; t.mat.len()];
            let log_scale = self.step(&t.mat, i, t.level + 1, &mut mat, t.log_scale);
            let mut counts = t.counts.clone();
            counts[self.class_of[i]] += 1;
            self.collect_tasks(
                Task {
                    level: t.level + 1,
                    mat,
                    log_scale,
                    weight: t.weight * self.weights[i],
                    counts,
                },
                split,
                out,
            );
        }
    }

    fn run_task(&self, task: &Task) -> (Vec<u64>, Vec<f64>) {
        let d2 = self.dim * self.dim;
        let mut buf = vec![0.0; (self.max_depth + 1) * d2];
        buf[task.level * d2..(task.level + 1) * d2].copy_from_slice(&task.mat);
        let mut counts = task.counts.clone();
        let mut keys = Vec::new();
        let mut vals = Vec::new();
        self.rec(task.level, &mut buf, task.log_scale, task.weight, &mut counts, &mut keys, &mut vals);
        (keys, vals)
    }

    #[allow(clippy::too_many_arguments)]
    fn rec(
        &self,
        level: usize,
        buf: &mut [f64],
        log_scale: f64,
        weight: f64,
        counts: &mut [u32],
        keys: &mut Vec<u64>,
        vals: &mut Vec<f64>,
    ) {
        let d2 = self.dim * self.dim;
        if self.is_leaf(level, weight) {
            let m = &buf[level * d2..(level + 1) * d2];
            keys.push(self.key(counts));
            vals.push(log_scale + math::ln(linalg::norm_of(self.dim, m, self.norm)));
            return;
        }
        for i in 0..self.mats.len() {
            let (head, tail) = buf.split_at_mut((level + 1) * d2);
            let parent = &head[level * d2..];
            let ls = self.step(parent, i, level + 1, &mut tail[..d2], log_scale);
            counts[self.class_of[i]] += 1;
            self.rec(level + 1, buf, ls, weight * self.weights[i], counts, keys, vals);
            counts[self.class_of[i]] -= 1;
        }
    }

    fn split_level(&self) -> usize {
        let n = self.mats.len().max(2);
        let mut p = 0;
        let mut k = 1usize;
        while k < MIN_TASKS && p < self.max_depth {
            k = k.saturating_mul(n);
            p += 1;
        }
        p
    }

    pub fn collect(&self, parallel: bool) -> LeafTable {
        let parts: Vec<(Vec<u64>, Vec<f64>)> = if parallel {
            let tasks = self.tasks(self.split_level());
            self.run_tasks(&tasks)
        } else {
            vec![self.run_task(&self.root())]
        };
        let mut grouped: BTreeMap<u64, Vec<f64>> = BTreeMap::new();
        let mut count = 0;
        for (keys, vals) in parts {
            count += vals.len();
            for (k, v) in keys.into_iter().zip(vals) {
                grouped.entry(k).or_default().push(v);
            }
        }
        let groups = grouped
            .into_iter()
            .map(|(k, log_norms)| {
                let min = log_norms.iter().copied().fold(f64::INFINITY, f64::min);
                let max = log_norms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                LeafGroup {
                    log_weight: self.log_weight(k),
                    log_norms,
                    min,
                    max,
                }
            })
            .collect();
        LeafTable { groups, count }
    }

    #[cfg(feature = "parallel")]
    fn run_tasks(&self, tasks: &[Task]) -> Vec<(Vec<u64>, Vec<f64>)> {
        use rayon::prelude::*;
        tasks.par_iter().map(|t| self.run_task(t)).collect()
    }

    #[cfg(not(feature = "parallel"))]
    fn run_tasks(&self, tasks: &[Task]) -> Vec<(Vec<u64>, Vec<f64>)> {
        tasks.iter().map(|t| self.run_task(t)).collect()
    }
}

/// Convenience wrapper around [`Enumerator`].
pub(crate) fn collect_leaves(
    matrices: &[Matrix],
    weights: &[f64],
    norm: NormKind,
    rule: LeafRule,
    budget: usize,
    parallel: bool,
) -> Result<LeafTable> {
    Ok(Enumerator::new(matrices, weights, norm, rule, budget)?.collect(parallel))
}

/// Calls `visit(depth, product)` for every word of length `1..=max_depth`, in
/// depth-first lexicographic order. Products are not rescaled, so this is
/// meant for ratios and directions at moderate depth.
pub(crate) fn visit_products(matrices: &[Matrix], max_depth: usize, visit: &mut dyn FnMut(usize, &[usize], &[f64])) {
    fn rec(
        ms: &[Matrix],
        d: usize,
        level: usize,
        max_depth: usize,
        buf: &mut [f64],
        word: &mut Vec<usize>,
        visit: &mut dyn FnMut(usize, &[usize], &[f64]),
    ) {
        let d2 = d * d;
        if level > 0 {
            visit(level, word, &buf[level * d2..(level + 1) * d2]);
        }
        if level == max_depth {
            return;
        }
        for (i, m) in ms.iter().enumerate() {
            let (head, tail) = buf.split_at_mut((level + 1) * d2);
            let parent = &head[level * d2..];
            linalg::mul_into(d, parent, m.as_slice(), &mut tail[..d2]);
            // renormalize so long products stay in range; callers use ratios
            let s = tail[..d2].iter().fold(0.0f64, |a, x| a.max(math::abs(*x)));
            if s > 0.0 {
                for x in tail[..d2].iter_mut() {
                    *x /= s;
                }
            }
            word.push(i);
            rec(ms, d, level + 1, max_depth, buf, word, visit);
            word.pop();
        }
    }
    let d = matrices[0].dim();
    let mut buf = vec![0.0; (max_depth + 1) * d * d];
    buf[..d * d].copy_from_slice(Matrix::identity(d).as_slice());
    let mut word = Vec::with_capacity(max_depth);
    rec(matrices, d, 0, max_depth, &mut buf, &mut word, visit);
}
