//! Words, eventually periodic symbol streams, and the combinatorics of the
//! shift space: `i∧j`, `i∨j`, the projections `π` and `Π`, and the
//! stopping-time partition `Ξ_r`.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::linalg::{Matrix, NormKind};
use crate::zipper::Zipper;
use crate::{Error, Result};

/// Streams are compared and truncated at this many symbols when a quantity
/// would otherwise be unbounded.
pub const STREAM_RESOLUTION: usize = 64;

/// A finite word over `{0, .., N-1}`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Word(pub Vec<usize>);

impl Word {
    pub fn new(symbols: Vec<usize>) -> Self {
        Word(symbols)
    }

    pub fn empty() -> Self {
        Word(Vec::new())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn symbols(&self) -> &[usize] {
        &self.0
    }

    pub fn concat(&self, other: &Word) -> Word {
        let mut s = self.0.clone();
        s.extend_from_slice(&other.0);
        Word(s)
    }

    /// `λ_ī`, the product of the weights along the word.
    pub fn weight(&self, weights: &[f64]) -> f64 {
        self.0.iter().map(|&i| weights[i]).product()
    }

    /// `A_ī = A_{i_1} ⋯ A_{i_n}`.
    pub fn product(&self, matrices: &[Matrix]) -> Matrix {
        let mut p = Matrix::identity(matrices[0].dim());
        for &i in &self.0 {
            p = p.mul(&matrices[i]);
        }
        p
    }

    pub fn check_alphabet(&self, n: usize) -> Result<()> {
        match self.0.iter().find(|&&s| s >= n) {
            Some(s) => Err(Error::Parameter(format!("symbol {s} outside alphabet of size {n}"))),
            None => Ok(()),
        }
    }

    /// Digits for alphabets up to ten symbols, comma-separated otherwise.
    pub fn format(&self, alphabet: usize) -> String {
        format_symbols(&self.0, alphabet)
    }

    /// Parses the output of [`Word::format`]. The empty string is the empty word.
    pub fn parse(s: &str, alphabet: usize) -> Result<Word> {
        let w = Word(parse_symbols(s.trim())?);
        w.check_alphabet(alphabet)?;
        Ok(w)
    }
}

fn format_symbols(s: &[usize], alphabet: usize) -> String {
    if alphabet <= 10 {
        s.iter().map(|d| char::from(b'0' + *d as u8)).collect()
    } else {
        let parts: Vec<String> = s.iter().map(|d| d.to_string()).collect();
        parts.join(",")
    }
}

fn parse_symbols(s: &str) -> Result<Vec<usize>> {
    if s.is_empty() {
        return Ok(Vec::new());
    }
    let bad = || Error::Parameter(format!("cannot parse symbols from {s:?}"));
    if s.contains(',') {
        s.split(',')
            .map(|p| p.trim().parse::<usize>().map_err(|_| bad()))
            .collect()
    } else {
        s.chars()
            .map(|c| c.to_digit(10).map(|d| d as usize).ok_or_else(bad))
            .collect()
    }
}

/// An eventually periodic element of `Σ`: `prefix` followed by `period`
/// repeated forever. Stored in canonical form (shortest period, shortest
/// prefix), so structural equality is equality of sequences.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SymbolStream {
    prefix: Vec<usize>,
    period: Vec<usize>,
}

impl SymbolStream {
    pub fn new(prefix: Vec<usize>, period: Vec<usize>) -> Result<Self> {
        if period.is_empty() {
            return Err(Error::Parameter("stream period must be nonempty".into()));
        }
        let mut s = SymbolStream { prefix, period };
        s.canonicalize();
        Ok(s)
    }

    /// `w` followed by `tail` repeated.
    pub fn from_word(w: &Word, tail: usize) -> Self {
        SymbolStream::new(w.0.clone(), vec![tail]).expect("nonempty period")
    }

    /// The constant stream `k k k …`.
    pub fn constant(k: usize) -> Self {
        SymbolStream::from_word(&Word::empty(), k)
    }

    fn canonicalize(&mut self) {
        let p = self.period.len();
        for q in 1..=p {
            if p % q == 0 && (q..p).all(|k| self.period[k] == self.period[k - q]) {
                self.period.truncate(q);
                break;
            }
        }
        while let Some(&last) = self.prefix.last() {
            if last != *self.period.last().expect("nonempty") {
                break;
            }
            self.prefix.pop();
            self.period.rotate_right(1);
        }
    }

    pub fn prefix(&self) -> &[usize] {
        &self.prefix
    }

    pub fn period(&self) -> &[usize] {
        &self.period
    }

    /// Symbol at 0-based position `k`.
    pub fn symbol(&self, k: usize) -> usize {
        if k < self.prefix.len() {
            self.prefix[k]
        } else {
            self.period[(k - self.prefix.len()) % self.period.len()]
        }
    }

    /// The first `n` symbols.
    pub fn truncate(&self, n: usize) -> Word {
        Word((0..n).map(|k| self.symbol(k)).collect())
    }

    /// The shift `σ^k`.
    pub fn shift(&self, k: usize) -> SymbolStream {
        if k <= self.prefix.len() {
            SymbolStream {
                prefix: self.prefix[k..].to_vec(),
                period: self.period.clone(),
            }
        } else {
            let r = (k - self.prefix.len()) % self.period.len();
            let mut period = self.period.clone();
            period.rotate_left(r);
            SymbolStream {
                prefix: Vec::new(),
                period,
            }
        }
    }

    pub fn max_symbol(&self) -> usize {
        self.prefix.iter().chain(&self.period).copied().max().unwrap_or(0)
    }

    pub fn format(&self, alphabet: usize) -> String {
        format!(
            "{}({})",
            format_symbols(&self.prefix, alphabet),
            format_symbols(&self.period, alphabet)
        )
    }

    /// Parses `prefix(period)`, e.g. `01(1)` or `3,11(0,2)`.
    pub fn parse(s: &str, alphabet: usize) -> Result<SymbolStream> {
        let s = s.trim();
        let bad = || Error::Parameter(format!("stream {s:?} is not of the form prefix(period)"));
        let open = s.find('(').ok_or_else(bad)?;
        if !s.ends_with(')') {
            return Err(bad());
        }
        let prefix = parse_symbols(s[..open].trim_end_matches(','))?;
        let period = parse_symbols(&s[open + 1..s.len() - 1])?;
        let st = SymbolStream::new(prefix, period)?;
        if st.max_symbol() >= alphabet {
            return Err(Error::Parameter(format!(
                "stream {s:?} uses a symbol outside alphabet of size {alphabet}"
            )));
        }
        Ok(st)
    }
}

impl fmt::Display for SymbolStream {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let alphabet = if self.max_symbol() < 10 { 10 } else { usize::MAX };
        f.write_str(&self.format(alphabet))
    }
}

/// Length of the common prefix, or `None` when the streams are equal.
fn common_prefix(i: &SymbolStream, j: &SymbolStream) -> Option<usize> {
    if i == j {
        return None;
    }
    let mut k = 0;
    while i.symbol(k) == j.symbol(k) {
        k += 1;
    }
    Some(k)
}

/// `i∧j`: the number of equal leading symbols.
pub fn wedge(i: &SymbolStream, j: &SymbolStream) -> Result<usize> {
    common_prefix(i, j).ok_or(Error::WedgeUndefined)
}

/// `i∧j` capped at `cap`; equal streams give `cap`.
fn wedge_capped(i: &SymbolStream, j: &SymbolStream, cap: usize) -> (usize, bool) {
    match common_prefix(i, j) {
        Some(k) if k < cap => (k, false),
        _ => (cap, true),
    }
}

/// Result of `i∨j`, noting whether the stream resolution cap was hit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Vee {
    pub value: usize,
    pub capped: bool,
}

/// `i∨j`: how long the two streams stay near the common boundary of the
/// adjacent cylinders they split into. Zero unless the first differing
/// symbols are neighbours.
pub fn vee(i: &SymbolStream, j: &SymbolStream, signature: &[bool]) -> Result<Vee> {
    let w = wedge(i, j)?;
    let (a, b) = (i.symbol(w), j.symbol(w));
    if a.abs_diff(b) != 1 {
        return Ok(Vee {
            value: 0,
            capped: false,
        });
    }
    let (lower, upper, lo_sym, up_sym) = if a < b { (i, j, a, b) } else { (j, i, b, a) };
    let top = signature.len() - 1;
    // Points of the lower cylinder next to the boundary code as N-1 N-1 … unless
    // that piece is reversed; symmetrically for the upper cylinder.
    let lower_tail = if signature[lo_sym] { 0 } else { top };
    let upper_tail = if signature[up_sym] { top } else { 0 };
    let (l, lc) = wedge_capped(&lower.shift(w + 1), &SymbolStream::constant(lower_tail), STREAM_RESOLUTION);
    let (u, uc) = wedge_capped(&upper.shift(w + 1), &SymbolStream::constant(upper_tail), STREAM_RESOLUTION);
    Ok(if l < u {
        Vee { value: l, capped: lc }
    } else if u < l {
        Vee { value: u, capped: uc }
    } else {
        Vee {
            value: l,
            capped: lc && uc,
        }
    })
}

/// `π(i)`: the parameter of a stream under `g_i(x) = ±λ_i x + γ_i`, exact via
/// the fixed point of the periodic part.
pub fn pi_project_with(weights: &[f64], signature: &[bool], stream: &SymbolStream) -> f64 {
    let mut offsets = Vec::with_capacity(weights.len());
    let mut acc = 0.0;
    for w in weights {
        offsets.push(acc);
        acc += w;
    }
    let g = |i: usize| {
        if signature[i] {
            (-weights[i], offsets[i] + weights[i])
        } else {
            (weights[i], offsets[i])
        }
    };
    // compose(a, c) after (a2, c2): x ↦ a (a2 x + c2) + c
    let compose = |outer: (f64, f64), inner: (f64, f64)| (outer.0 * inner.0, outer.0 * inner.1 + outer.1);
    let mut per = (1.0, 0.0);
    for &s in &stream.period {
        per = compose(per, g(s));
    }
    let fixed = per.1 / (1.0 - per.0);
    let mut pre = (1.0, 0.0);
    for &s in &stream.prefix {
        pre = compose(pre, g(s));
    }
    (pre.0 * fixed + pre.1).clamp(0.0, 1.0)
}

pub fn pi_project(zipper: &Zipper, stream: &SymbolStream) -> f64 {
    pi_project_with(zipper.weights(), zipper.signature(), stream)
}

/// `Π(i) = Σ A_{i|k-1} t_{i_k}`, truncated once `‖A_{i|n}‖ R ≤ tol`. Returns
/// the point and its error bound.
pub fn big_pi_project(zipper: &Zipper, stream: &SymbolStream, tol: f64) -> Result<(Vec<f64>, f64)> {
    if !(tol > 0.0) {
        return Err(Error::Parameter(format!("tolerance must be positive, got {tol}")));
    }
    if stream.max_symbol() >= zipper.len() {
        return Err(Error::Parameter("stream uses a symbol outside the alphabet".into()));
    }
    let (c, r) = zipper.attractor_radius(8)?;
    let d = zipper.dim();
    let mut m = Matrix::identity(d);
    let mut b = vec![0.0; d];
    for k in 0..4096 {
        let err = m.norm(NormKind::Spectral) * r;
        if err <= tol {
            let mut p = m.apply(&c);
            for (x, y) in p.iter_mut().zip(&b) {
                *x += y;
            }
            return Ok((p, err));
        }
        let f = &zipper.maps()[stream.symbol(k)];
        let s = m.apply(f.translation());
        for (x, y) in b.iter_mut().zip(&s) {
            *x += y;
        }
        m = m.mul(f.matrix());
    }
    Err(Error::Failed("projection did not reach the tolerance".into()))
}

/// The signature-aware coding of `x ∈ [0, 1]`, to `depth` symbols. At shared
/// cylinder boundaries the upper cylinder is chosen.
pub fn coding(weights: &[f64], signature: &[bool], x: f64, depth: usize) -> Result<Word> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::Domain {
            value: x,
            lo: 0.0,
            hi: 1.0,
        });
    }
    let n = weights.len();
    let mut offsets = Vec::with_capacity(n + 1);
    let mut acc = 0.0;
    for w in weights {
        offsets.push(acc);
        acc += w;
    }
    offsets.push(1.0);
    let mut y = x;
    let mut out = Vec::with_capacity(depth);
    for _ in 0..depth {
        let mut i = 0;
        while i + 1 < n && offsets[i + 1] <= y {
            i += 1;
        }
        out.push(i);
        y = if signature[i] {
            (offsets[i + 1] - y) / weights[i]
        } else {
            (y - offsets[i]) / weights[i]
        };
        y = y.clamp(0.0, 1.0);
    }
    Ok(Word(out))
}

/// The stopping-time partition `Ξ_r`.
#[derive(Debug, Clone, PartialEq)]
pub struct CylinderPartition {
    pub r: f64,
    pub words: Vec<Word>,
}

/// All words with `λ_ī ≤ r < λ_{ī minus last symbol}`, in lexicographic order.
pub fn xi_partition(weights: &[f64], r: f64, budget: usize) -> Result<CylinderPartition> {
    if !(r > 0.0 && r < 1.0) {
        return Err(Error::Domain {
            value: r,
            lo: 0.0,
            hi: 1.0,
        });
    }
    let min_w = weights.iter().copied().fold(f64::INFINITY, f64::min);
    let bound = 1.0 / (r * min_w);
    if bound > budget as f64 {
        return Err(Error::Budget {
            needed: bound as u128,
            budget,
        });
    }
    let mut words = Vec::new();
    let mut stack = vec![(Vec::new(), 1.0f64)];
    while let Some((w, lw)) = stack.pop() {
        if lw <= r {
            words.push(Word(w));
            continue;
        }
        for i in (0..weights.len()).rev() {
            let mut c = w.clone();
            c.push(i);
            stack.push((c, lw * weights[i]));
        }
    }
    Ok(CylinderPartition { r, words })
}

/// The comparison quantity for `|π(i) − π(j)|` on signature-0 zippers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistanceBracket {
    /// `λ_{i|w+v} + λ_{j|w+v}`.
    pub s: f64,
    /// `w + v` where `w = i∧j`, `v = i∨j`.
    pub level: usize,
    /// `i∨j` hit the stream resolution cap.
    pub capped: bool,
}

pub fn distance_bracket(weights: &[f64], i: &SymbolStream, j: &SymbolStream) -> Result<DistanceBracket> {
    let signature = vec![false; weights.len()];
    let w = wedge(i, j)?;
    let v = vee(i, j, &signature)?;
    let level = w + v.value;
    let s = i.truncate(level).weight(weights) + j.truncate(level).weight(weights);
    Ok(DistanceBracket {
        s,
        level,
        capped: v.capped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn st(s: &str) -> SymbolStream {
        SymbolStream::parse(s, 10).unwrap()
    }

    #[test]
    fn canonical_form() {
        assert_eq!(st("0101(01)"), st("(01)"));
        assert_eq!(st("(0000)"), st("(0)"));
        assert_eq!(st("01(1)").format(2), "0(1)");
        assert_eq!(st("012012(012)").shift(4), st("(120)"));
        assert_eq!(SymbolStream::parse("3,11(0,2)", 12).unwrap().symbol(3), 2);
        assert!(SymbolStream::parse("01", 2).is_err());
        assert!(SymbolStream::parse("02(1)", 2).is_err());
    }

    #[test]
    fn wedge_examples() {
        assert_eq!(wedge(&st("01(0)"), &st("011(0)")).unwrap(), 2);
        assert_eq!(wedge(&st("(0)"), &st("1(0)")).unwrap(), 0);
        assert_eq!(wedge(&st("(012)"), &st("012012100(0)")).unwrap(), 6);
        assert_eq!(wedge(&st("(0)"), &st("00(0)")), Err(Error::WedgeUndefined));
    }

    #[test]
    fn vee_examples() {
        let sig = [false, false];
        assert_eq!(vee(&st("0111(0)"), &st("1000(1)"), &sig).unwrap().value, 3);
        assert_eq!(vee(&st("01(0)"), &st("01(1)"), &sig).unwrap().value, 0);
        let sig3 = [false, false, false];
        assert_eq!(vee(&st("02(0)"), &st("00(0)"), &sig3).unwrap().value, 0);
        // i = 0 1̄ and j = 1 0̄ code the same point
        let v = vee(&st("0(1)"), &st("1(0)"), &sig).unwrap();
        assert!(v.capped && v.value == STREAM_RESOLUTION);
    }

    #[test]
    fn vee_with_reversed_piece() {
        // With the first piece reversed, the boundary next to cylinder 1 is
        // approached from cylinder 0 along 0 0 0 …
        let sig = [true, false];
        assert_eq!(vee(&st("0000(1)"), &st("1(1)"), &sig).unwrap().value, 0);
        assert_eq!(vee(&st("0000(1)"), &st("100(1)"), &sig).unwrap().value, 2);
    }

    #[test]
    fn pi_examples() {
        let half = [0.5, 0.5];
        let s0 = [false, false];
        assert_eq!(pi_project_with(&half, &s0, &st("0(1)")), 0.5);
        assert_eq!(pi_project_with(&half, &s0, &st("(1)")), 1.0);
        let third = [1.0 / 3.0; 3];
        let x = pi_project_with(&third, &[false; 3], &st("(1)"));
        assert!((x - 0.5).abs() < 1e-15);
        let x = pi_project_with(&half, &s0, &st("(01)"));
        assert!((x - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn coding_inverts_pi() {
        let w = [0.2, 0.5, 0.3];
        let sig = [false, true, false];
        for x in [0.1, 0.37, 0.55, 0.9] {
            let c = coding(&w, &sig, x, 40).unwrap();
            let back = pi_project_with(&w, &sig, &SymbolStream::from_word(&c, 0));
            assert!((back - x).abs() < 1e-12, "{x} {back}");
        }
    }

    #[test]
    fn xi_examples() {
        let p = xi_partition(&[0.5, 0.5], 0.3, 1 << 20).unwrap();
        assert_eq!(p.words.len(), 4);
        let p = xi_partition(&[0.5, 0.25, 0.25], 0.3, 1 << 20).unwrap();
        let f: Vec<String> = p.words.iter().map(|w| w.format(3)).collect();
        assert_eq!(f, ["00", "01", "02", "1", "2"]);
        let p = xi_partition(&[0.5, 0.5], 0.5, 1 << 20).unwrap();
        assert_eq!(p.words.len(), 2);
        assert!(xi_partition(&[0.5, 0.5], 1.0, 1 << 20).is_err());
    }

    #[test]
    fn bracket_examples() {
        let half = [0.5, 0.5];
        let b = distance_bracket(&half, &st("(0)"), &st("0(1)")).unwrap();
        assert_eq!((b.level, b.s), (1, 1.0));
        let b = distance_bracket(&half, &st("(0)"), &st("(1)")).unwrap();
        assert_eq!((b.level, b.s), (0, 2.0));
        let b = distance_bracket(&half, &st("0(1)"), &st("1(0)")).unwrap();
        assert!(b.capped && b.s < 1e-18);
    }

    #[test]
    fn word_format_round_trip() {
        let w = Word::new(vec![3, 11, 0]);
        assert_eq!(w.format(12), "3,11,0");
        assert_eq!(Word::parse("3,11,0", 12).unwrap(), w);
        assert_eq!(Word::parse("0102", 3).unwrap().format(3), "0102");
    }
}
