//! Pointwise Hölder exponent estimators and a Gibbs-weighted word sampler.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::linalg::{self, Matrix, NormKind};
use crate::math;
use crate::pressure::{MatrixSystem, PressureCurve};
use crate::symbolic::{self, SymbolStream, Word};
use crate::zipper::{CurveEvaluator, Zipper};
use crate::{Error, Result};

/// `log‖A_{i|n}‖ / log λ_{i|n}` for `n = 1..=depth`.
pub fn symbolic_exponent(system: &MatrixSystem, stream: &SymbolStream, depth: usize, norm: NormKind) -> Result<Vec<f64>> {
    if depth == 0 {
        return Err(Error::Parameter("depth must be at least 1".into()));
    }
    if stream.max_symbol() >= system.len() {
        return Err(Error::Parameter("stream uses a symbol outside the alphabet".into()));
    }
    let ms = system.matrices();
    let ws = system.weights();
    let mut p = Matrix::identity(system.dim());
    let mut log_scale = 0.0;
    let mut log_weight = 0.0;
    let mut out = Vec::with_capacity(depth);
    for k in 0..depth {
        let s = stream.symbol(k);
        p = p.mul(&ms[s]);
        let m = p.as_slice().iter().fold(0.0f64, |a, x| a.max(math::abs(*x)));
        if m > 0.0 {
            p = p.scale(1.0 / m);
            log_scale += math::ln(m);
        }
        log_weight += math::ln(ws[s]);
        out.push((log_scale + math::ln(p.norm(norm))) / log_weight);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DirectOptions {
    pub scale_count: usize,
    pub samples_per_scale: usize,
    pub seed: u64,
}

impl Default for DirectOptions {
    fn default() -> Self {
        DirectOptions {
            scale_count: 16,
            samples_per_scale: 8,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HolderEstimate {
    pub x: f64,
    /// Symbolic ratios along the coding of `x`; empty when not requested.
    pub symbolic_sequence: Vec<f64>,
    /// Smallest slope `log‖v(x)−v(y)‖ / log|x−y|` over the finer half of
    /// the scales, a proxy for the liminf.
    pub direct_min: f64,
    /// Least-squares slope of `log‖v(x)−v(y)‖` against `log|x−y|`.
    pub direct_regression: f64,
    /// Exponents `k` of the scales `ρ_k = 2^-k`.
    pub scales_used: Vec<usize>,
    /// Some scale could only be sampled on one side of `x`.
    pub one_sided: bool,
}

impl HolderEstimate {
    pub fn symbolic_final(&self) -> Option<f64> {
        self.symbolic_sequence.last().copied()
    }
}

/// Metric estimate of the Hölder exponent of `v` at `x`. Scales are
/// `ρ_k = 2^-k` for `k = 4..=3+scale_count`; at each scale `y = x ± ρ_k` and
/// `samples_per_scale` uniform points with `ρ_{k+1} ≤ |y−x| ≤ ρ_k` are used.
pub fn direct_exponent(zipper: &Zipper, x: f64, opts: &DirectOptions) -> Result<HolderEstimate> {
    let ev = CurveEvaluator::new(zipper, 8)?;
    direct_with(&ev, x, opts)
}

/// [`direct_exponent`] with a prepared evaluator.
pub fn direct_with(ev: &CurveEvaluator<'_>, x: f64, opts: &DirectOptions) -> Result<HolderEstimate> {
    if !(x > 0.0 && x < 1.0) {
        return Err(Error::Domain {
            value: x,
            lo: 0.0,
            hi: 1.0,
        });
    }
    if opts.scale_count < 2 {
        return Err(Error::Parameter("need at least two scales".into()));
    }
    let first = 4;
    let last = 3 + opts.scale_count;
    // evaluation error far below the smallest increment |v(x) − v(y)|
    let tol = ev.radius() * math::powf(2.0, -3.0 * last as f64);
    let vx = ev.evaluate(x, tol)?.position;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ x.to_bits());
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut fine_min = f64::INFINITY;
    let mut one_sided = false;
    let mut scales_used = Vec::new();
    let fine_from = first + opts.scale_count / 2;
    for k in first..=last {
        let rho = math::powf(2.0, -(k as f64));
        let mut offsets = vec![rho, -rho];
        for _ in 0..opts.samples_per_scale {
            let r = rho * (0.5 + 0.5 * rng.gen::<f64>());
            let side = if rng.gen::<bool>() { 1.0 } else { -1.0 };
            offsets.push(side * r);
        }
        let mut used = false;
        for h in offsets {
            let mut y = x + h;
            if !(0.0..=1.0).contains(&y) {
                one_sided = true;
                y = x - h;
                if !(0.0..=1.0).contains(&y) {
                    continue;
                }
            }
            let dx = math::abs(y - x);
            let vy = ev.evaluate(y, tol)?.position;
            let dv = linalg::norm2(&linalg::sub(&vx, &vy));
            if dv <= 0.0 || dx <= 0.0 {
                continue;
            }
            let (lx, lv) = (math::ln(dx), math::ln(dv));
            xs.push(lx);
            ys.push(lv);
            if k >= fine_from {
                fine_min = fine_min.min(lv / lx);
            }
            used = true;
        }
        if used {
            scales_used.push(k);
        }
    }
    if xs.len() < 2 {
        return Err(Error::Failed(format!("no usable increments at x = {x}")));
    }
    let (_, slope, _) = math::linear_fit(&xs, &ys);
    Ok(HolderEstimate {
        x,
        symbolic_sequence: Vec::new(),
        direct_min: fine_min,
        direct_regression: slope,
        scales_used,
        one_sided,
    })
}

/// Both estimators at `x`: the symbolic one along the coding of `x` to
/// `depth` symbols, and the metric one.
pub fn estimate(zipper: &Zipper, x: f64, depth: usize, opts: &DirectOptions) -> Result<HolderEstimate> {
    let ev = CurveEvaluator::new(zipper, 8)?;
    estimate_with(zipper, &ev, x, depth, opts)
}

pub fn estimate_with(
    zipper: &Zipper,
    ev: &CurveEvaluator<'_>,
    x: f64,
    depth: usize,
    opts: &DirectOptions,
) -> Result<HolderEstimate> {
    let mut e = direct_with(ev, x, opts)?;
    let w = symbolic::coding(zipper.weights(), zipper.signature(), x, depth)?;
    let stream = SymbolStream::from_word(&w, 0);
    e.symbolic_sequence = symbolic_exponent(&zipper.matrix_system()?, &stream, depth, NormKind::Spectral)?;
    Ok(e)
}

/// Words up to this count are sampled exactly from the full table.
pub const EXACT_SAMPLING_LIMIT: usize = 1 << 16;
/// Leaves per block in the sequential sampler.
const BLOCK_LEAVES: usize = 4096;

/// Draws `count` words of length `depth` with probability proportional to
/// `‖A_ī‖^t λ_ī^{-P(t)}`, returned as streams with a `0̄` tail.
///
/// With at most [`EXACT_SAMPLING_LIMIT`] words the distribution is sampled
/// exactly. Otherwise the word is built in blocks, each drawn conditionally on
/// the product chosen so far; this is exact when the norms are multiplicative.
pub fn gibbs_sampler(
    system: &MatrixSystem,
    curve: &PressureCurve,
    t: f64,
    depth: usize,
    count: usize,
    seed: u64,
) -> Result<Vec<SymbolStream>> {
    if !curve.contains(t) {
        return Err(Error::Domain {
            value: t,
            lo: curve.t_grid[0],
            hi: curve.t_grid[curve.t_grid.len() - 1],
        });
    }
    if depth == 0 {
        return Err(Error::Parameter("depth must be at least 1".into()));
    }
    let p = curve.value_at(t);
    let n = system.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let total = (n as u128).checked_pow(depth as u32).unwrap_or(u128::MAX);
    let words: Vec<Word> = if total <= EXACT_SAMPLING_LIMIT as u128 {
        exact_samples(system, t, p, depth, count, &mut rng)?
    } else {
        (0..count)
            .map(|_| block_sample(system, t, p, depth, &mut rng))
            .collect()
    };
    Ok(words.iter().map(|w| SymbolStream::from_word(w, 0)).collect())
}

fn exact_samples(system: &MatrixSystem, t: f64, p: f64, depth: usize, count: usize, rng: &mut ChaCha8Rng) -> Result<Vec<Word>> {
    let n = system.len();
    let ms = system.matrices();
    let ws = system.weights();
    let total = n.pow(depth as u32);
    let mut logw = Vec::with_capacity(total);
    for idx in 0..total {
        let w = decode(idx, n, depth);
        let q = w.product(ms);
        logw.push(t * math::ln(q.norm(NormKind::Spectral)) - p * math::ln(w.weight(ws)));
    }
    let m = logw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut cdf = Vec::with_capacity(total);
    let mut acc = 0.0;
    for l in &logw {
        acc += math::exp(l - m);
        cdf.push(acc);
    }
    Ok((0..count)
        .map(|_| {
            let u = rng.gen::<f64>() * acc;
            let k = cdf.partition_point(|c| *c <= u).min(total - 1);
            decode(k, n, depth)
        })
        .collect())
}

/// The `idx`-th word of length `depth` in lexicographic order.
fn decode(idx: usize, n: usize, depth: usize) -> Word {
    let mut s = vec![0usize; depth];
    let mut r = idx;
    for k in (0..depth).rev() {
        s[k] = r % n;
        r /= n;
    }
    Word::new(s)
}

fn block_sample(system: &MatrixSystem, t: f64, p: f64, depth: usize, rng: &mut ChaCha8Rng) -> Word {
    let n = system.len();
    let ms = system.matrices();
    let ws = system.weights();
    let mut block = 1;
    while n.pow(block as u32 + 1) <= BLOCK_LEAVES {
        block += 1;
    }
    let mut word = Vec::with_capacity(depth);
    let mut prefix = Matrix::identity(system.dim());
    while word.len() < depth {
        let b = block.min(depth - word.len());
        let total = n.pow(b as u32);
        let mut logw = Vec::with_capacity(total);
        let mut prods = Vec::with_capacity(total);
        for idx in 0..total {
            let mut q = prefix.clone();
            let mut lw = 0.0;
            let syms = decode(idx, n, b).0;
            for &s in &syms {
                q = q.mul(&ms[s]);
                lw += math::ln(ws[s]);
            }
            logw.push(t * math::ln(q.norm(NormKind::Spectral)) - p * lw);
            prods.push((syms, q));
        }
        let m = logw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let weights: Vec<f64> = logw.iter().map(|l| math::exp(l - m)).collect();
        let sum: f64 = weights.iter().sum();
        let mut u = rng.gen::<f64>() * sum;
        let mut pick = total - 1;
        for (k, w) in weights.iter().enumerate() {
            if u < *w {
                pick = k;
                break;
            }
            u -= w;
        }
        let (syms, q) = prods.swap_remove(pick);
        word.extend(syms);
        let s = q.as_slice().iter().fold(0.0f64, |a, x| a.max(math::abs(*x)));
        prefix = if s > 0.0 { q.scale(1.0 / s) } else { q };
    }
    Word::new(word)
}
