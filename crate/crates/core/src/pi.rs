//! Free Grossman–Larson generators, words over them, and the companion
//! Π-rough path of a grid-sampled branched rough path.
//!
//! The truncated GL algebra is free on the generators `ν_1..ν_K`, so the
//! products `e_w = ν_{w₁} ⋆ ⋯ ⋆ ν_{w_m}` over words with `|w| <= [p]` form a
//! basis of the forest space. The group-like element of a character `X` is
//! `X̂ = Σ_ρ (X,ρ) ρ / σ(ρ)`; writing `X̂ = Σ_w (Z,w) e_w` gives the word
//! coordinates `Z`, which are a shuffle character because the generators are
//! primitive.

use std::collections::HashMap;
use std::ops::Range;
use std::sync::Arc;

use num::{BigRational, One, Zero};
use serde::{Deserialize, Serialize};

use crate::character::Character;
use crate::effect::{beta_form, dyadic_sums, integrate_one_form, omega_interval, IntegralEstimate, IntegrationOptions};
use crate::error::{Error, Result};
use crate::forest::{gl_product_lin, Forest, ForestBasis, ForestLinComb, Tree};
use crate::linalg::{self, Matrix};
use crate::one_form::{PolynomialOneForm, VectorPolynomial};
use crate::rough_path::{stride_indices, BranchedRoughPath};
use crate::scalar::Scalar;

/// Shuffle relations on the companion path must hold to this (relative) level.
pub const SHUFFLE_TOL: f64 = 1e-8;

/// A word over generator indices `1..=K`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Word(Vec<usize>);

impl Word {
    pub fn new(letters: Vec<usize>) -> Word {
        Word(letters)
    }

    pub fn empty() -> Word {
        Word(Vec::new())
    }

    pub fn letters(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn concat(&self, other: &Word) -> Word {
        Word(self.0.iter().chain(&other.0).copied().collect())
    }

    pub fn reversed(&self) -> Word {
        Word(self.0.iter().rev().copied().collect())
    }
}

/// All interleavings of `a` and `b`, with multiplicity.
pub fn shuffle(a: &Word, b: &Word) -> Vec<Word> {
    fn go(a: &[usize], b: &[usize], prefix: &mut Vec<usize>, out: &mut Vec<Word>) {
        if a.is_empty() || b.is_empty() {
            let mut w = prefix.clone();
            w.extend_from_slice(a);
            w.extend_from_slice(b);
            out.push(Word(w));
            return;
        }
        prefix.push(a[0]);
        go(&a[1..], b, prefix, out);
        prefix.pop();
        prefix.push(b[0]);
        go(a, &b[1..], prefix, out);
        prefix.pop();
    }
    let mut out = Vec::new();
    go(&a.0, &b.0, &mut Vec::new(), &mut out);
    out
}

/// Rank bookkeeping for one degree of the generator computation.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DegreeRank {
    pub degree: usize,
    /// Dimension of the degree-`n` forest space.
    pub dimension: usize,
    /// Rank of the GL products of lower-degree generators.
    pub product_rank: usize,
    pub new_generators: usize,
}

/// Change of basis between forests and words for one degree.
#[derive(Clone, Debug)]
struct Block {
    forests: Range<usize>,
    words: Vec<usize>,
    /// `inverse[r][c]`: row `r` is a forest of the block, column `c` a word.
    inverse: Matrix,
    inverse_f64: Vec<Vec<f64>>,
}

#[derive(Clone, Debug)]
pub struct GeneratorSet {
    d: usize,
    p_floor: usize,
    basis: Arc<ForestBasis>,
    generators: Vec<Tree>,
    degrees: Vec<usize>,
    ranks: Vec<DegreeRank>,
    words: Vec<Word>,
    word_index: HashMap<Word, usize>,
    blocks: Vec<Block>,
}

/// Generator dump for reports.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeneratorDump {
    pub p_floor: usize,
    pub d: usize,
    pub generators: Vec<String>,
}

/// Words of weighted degree exactly `n`, in lexicographic order.
fn words_of_degree(degrees: &[usize], n: usize) -> Vec<Word> {
    fn go(degrees: &[usize], left: usize, prefix: &mut Vec<usize>, out: &mut Vec<Word>) {
        if left == 0 {
            out.push(Word(prefix.clone()));
            return;
        }
        for (k, &deg) in degrees.iter().enumerate() {
            if deg <= left {
                prefix.push(k + 1);
                go(degrees, left - deg, prefix, out);
                prefix.pop();
            }
        }
    }
    let mut out = Vec::new();
    go(degrees, n, &mut Vec::new(), &mut out);
    out
}

fn element(generators: &[Tree], w: &Word) -> Result<ForestLinComb<BigRational>> {
    let mut acc = ForestLinComb::single(Forest::empty(), BigRational::one());
    for &k in w.letters() {
        let nu = ForestLinComb::single(generators[k - 1].clone().into(), BigRational::one());
        acc = gl_product_lin(&acc, &nu)?;
    }
    Ok(acc)
}

fn row_of(basis: &ForestBasis, range: &Range<usize>, lin: &ForestLinComb<BigRational>) -> Result<Vec<BigRational>> {
    let mut row = vec![BigRational::zero(); range.len()];
    for (rho, c) in lin.iter() {
        let i = basis
            .index_of(rho)
            .filter(|i| range.contains(i))
            .ok_or_else(|| Error::LinearSystem(format!("product term {} outside its degree", rho.encoding())))?;
        row[i - range.start] = c.clone();
    }
    Ok(row)
}

/// Generators `ν_1..ν_K` of the GL algebra truncated at degree `p_floor`.
///
/// Degree by degree, the span of products of lower-degree generators is
/// completed by trees taken in canonical order.
pub fn compute_generators(d: usize, p_floor: usize) -> Result<GeneratorSet> {
    if d == 0 || p_floor == 0 {
        return Err(Error::InvalidParameter(format!("need d >= 1 and [p] >= 1, got d = {d}, [p] = {p_floor}")));
    }
    let basis = ForestBasis::shared(d, p_floor)?;
    let mut generators: Vec<Tree> = Vec::new();
    let mut degrees: Vec<usize> = Vec::new();
    let mut ranks = Vec::new();
    for n in 1..=p_floor {
        let range = basis.degree_range(n);
        let products: Vec<Word> = words_of_degree(&degrees, n).into_iter().filter(|w| w.len() >= 2).collect();
        let mut rows: Matrix = products
            .iter()
            .map(|w| row_of(&basis, &range, &element(&generators, w)?))
            .collect::<Result<_>>()?;
        let product_rank = linalg::rank(&rows);
        if product_rank != rows.len() {
            return Err(Error::LinearSystem(format!(
                "degree {n}: {} generator products have rank {product_rank}, contradicting freeness",
                rows.len()
            )));
        }
        let mut current = product_rank;
        let mut fresh = Vec::new();
        for i in range.clone() {
            if current == range.len() {
                break;
            }
            let Some(tree) = basis.forest(i).as_tree() else { continue };
            let mut unit = vec![BigRational::zero(); range.len()];
            unit[i - range.start] = BigRational::one();
            rows.push(unit);
            let r = linalg::rank(&rows);
            if r > current {
                current = r;
                fresh.push(tree.clone());
            } else {
                rows.pop();
            }
        }
        if current != range.len() {
            return Err(Error::LinearSystem(format!("degree {n}: trees and products do not span")));
        }
        ranks.push(DegreeRank { degree: n, dimension: range.len(), product_rank, new_generators: fresh.len() });
        degrees.extend(std::iter::repeat(n).take(fresh.len()));
        generators.extend(fresh);
    }

    let mut words = vec![Word::empty()];
    let mut blocks = Vec::new();
    for n in 1..=p_floor {
        let range = basis.degree_range(n);
        let ws = words_of_degree(&degrees, n);
        if ws.len() != range.len() {
            return Err(Error::LinearSystem(format!(
                "degree {n}: {} words for {} forests",
                ws.len(),
                range.len()
            )));
        }
        let m: Matrix = ws.iter().map(|w| row_of(&basis, &range, &element(&generators, w)?)).collect::<Result<_>>()?;
        let inverse = linalg::inverse(&m)?;
        let inverse_f64 = inverse.iter().map(|r| r.iter().map(f64::from_ratio).collect()).collect();
        let first = words.len();
        words.extend(ws);
        blocks.push(Block { forests: range, words: (first..words.len()).collect(), inverse, inverse_f64 });
    }
    let word_index = words.iter().cloned().enumerate().map(|(i, w)| (w, i)).collect();
    Ok(GeneratorSet { d, p_floor, basis, generators, degrees, ranks, words, word_index, blocks })
}

impl GeneratorSet {
    pub fn d(&self) -> usize {
        self.d
    }

    pub fn p_floor(&self) -> usize {
        self.p_floor
    }

    /// Number of generators `K`.
    pub fn k(&self) -> usize {
        self.generators.len()
    }

    pub fn generators(&self) -> &[Tree] {
        &self.generators
    }

    /// `|ν_k|` for `k` in `1..=K`.
    pub fn degree_of(&self, k: usize) -> usize {
        self.degrees[k - 1]
    }

    pub fn ranks(&self) -> &[DegreeRank] {
        &self.ranks
    }

    /// All words with `|w| <= [p]`, the empty word first, grouped by degree.
    pub fn words(&self) -> &[Word] {
        &self.words
    }

    pub fn word_position(&self, w: &Word) -> Option<usize> {
        self.word_index.get(w).copied()
    }

    pub fn word_degree(&self, w: &Word) -> Result<usize> {
        word_degree(w, self)
    }

    /// `e_w` expanded in forests.
    pub fn element(&self, w: &Word) -> Result<ForestLinComb<BigRational>> {
        self.word_degree(w)?;
        element(&self.generators, w)
    }

    /// Word coordinates `(Z, w)` of a character, dense over [`Self::words`].
    pub fn coordinates<S: Scalar>(&self, x: &Character<S>) -> Result<Vec<S>> {
        if x.d() != self.d || x.p_floor() != self.p_floor {
            return Err(Error::DimensionMismatch(format!(
                "character over (d={}, [p]={}) but generators for (d={}, [p]={})",
                x.d(),
                x.p_floor(),
                self.d,
                self.p_floor
            )));
        }
        let mut out = vec![S::zero(); self.words.len()];
        out[0] = S::one();
        for block in &self.blocks {
            for (r, i) in block.forests.clone().enumerate() {
                let v = x.value(i);
                if v.is_zero() {
                    continue;
                }
                let xr = v.clone() / S::from_i64(self.basis.sigma(i) as i64);
                for (c, &w) in block.words.iter().enumerate() {
                    let m = &block.inverse[r][c];
                    if !m.is_zero() {
                        out[w] = out[w].clone() + xr.clone() * S::from_ratio(m);
                    }
                }
            }
        }
        Ok(out)
    }

    fn coordinates_f64(&self, values: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        out[0] = 1.0;
        for block in &self.blocks {
            for (r, i) in block.forests.clone().enumerate() {
                if values[i] == 0.0 {
                    continue;
                }
                let xr = values[i] / self.basis.sigma(i) as f64;
                for (c, &w) in block.words.iter().enumerate() {
                    out[w] += xr * block.inverse_f64[r][c];
                }
            }
        }
    }

    pub fn dump(&self) -> GeneratorDump {
        GeneratorDump {
            p_floor: self.p_floor,
            d: self.d,
            generators: self.generators.iter().map(Tree::encoding).collect(),
        }
    }
}

/// Weighted degree `Σ |ν_{w_j}|`, zero for the empty word.
pub fn word_degree(w: &Word, gens: &GeneratorSet) -> Result<usize> {
    w.letters().iter().try_fold(0, |acc, &k| {
        if k == 0 || k > gens.k() {
            Err(Error::InvalidParameter(format!("letter {k} outside 1..={}", gens.k())))
        } else {
            Ok(acc + gens.degree_of(k))
        }
    })
}

/// Largest violation of `(g,u)(g,v) = Σ_{w ∈ u⧢v} (g,w)` over non-empty word
/// pairs with `|u| + |v| <= [p]`, relative to `1 + |(g,u)(g,v)|`.
pub fn shuffle_defect<S: Scalar>(gens: &GeneratorSet, g: &[S]) -> (f64, Word, Word) {
    let mut worst = (0.0, Word::empty(), Word::empty());
    let deg: Vec<usize> = gens.words.iter().map(|w| word_degree(w, gens).expect("valid")).collect();
    for (a, u) in gens.words.iter().enumerate().skip(1) {
        for (b, v) in gens.words.iter().enumerate().skip(a) {
            if deg[a] + deg[b] > gens.p_floor {
                continue;
            }
            let lhs = g[a].clone() * g[b].clone();
            let rhs = shuffle(u, v)
                .iter()
                .fold(S::zero(), |acc, w| acc + g[gens.word_index[w]].clone());
            let defect = (lhs.clone() - rhs).abs_f64() / (1.0 + lhs.abs_f64());
            if defect > worst.0 {
                worst = (defect, u.clone(), v.clone());
            }
        }
    }
    worst
}

/// The companion Π-rough path of a grid-sampled branched rough path.
#[derive(Clone, Debug)]
pub struct PiRoughPath {
    gens: Arc<GeneratorSet>,
    p: f64,
    times: Vec<f64>,
    positions: Vec<Vec<f64>>,
    /// `values[k][w] = (Z_{0,t_k}, w)`.
    values: Vec<Vec<f64>>,
    /// Deconcatenations `w = uv` as index pairs.
    splits: Vec<Vec<(usize, usize)>>,
    /// `reverse[u]`: index of the reversed word and the sign `(-1)^{len u}`.
    reverse: Vec<(usize, f64)>,
}

impl PiRoughPath {
    /// `Z_{0,t}` = word coordinates of `X_{0,t}` at every grid time; fails if
    /// the shuffle relations are violated beyond [`SHUFFLE_TOL`].
    pub fn build(x: &BranchedRoughPath, gens: Arc<GeneratorSet>) -> Result<Self> {
        if gens.d != x.d() || gens.p_floor != x.p_floor() {
            return Err(Error::DimensionMismatch(format!(
                "path over (d={}, [p]={}) but generators for (d={}, [p]={})",
                x.d(),
                x.p_floor(),
                gens.d,
                gens.p_floor
            )));
        }
        let nw = gens.words.len();
        let inv0 = x.values()[0].inverse();
        let mut values = Vec::with_capacity(x.len());
        let mut buf = vec![0.0; x.basis().len()];
        for k in 0..x.len() {
            crate::rough_path::increment_into(x.basis(), inv0.forest_values(), x.values()[k].forest_values(), &mut buf);
            let mut z = vec![0.0; nw];
            gens.coordinates_f64(&buf, &mut z);
            values.push(z);
        }
        let splits = gens
            .words
            .iter()
            .map(|w| {
                (0..=w.len())
                    .map(|c| {
                        let u = Word(w.0[..c].to_vec());
                        let v = Word(w.0[c..].to_vec());
                        (gens.word_index[&u], gens.word_index[&v])
                    })
                    .collect()
            })
            .collect();
        let reverse = gens
            .words
            .iter()
            .map(|w| (gens.word_index[&w.reversed()], if w.len() % 2 == 0 { 1.0 } else { -1.0 }))
            .collect();
        let z = PiRoughPath {
            gens,
            p: x.p(),
            times: x.times().to_vec(),
            positions: (0..x.len()).map(|k| x.position(k)).collect(),
            values,
            splits,
            reverse,
        };
        for g in &z.values {
            let (defect, w1, w2) = shuffle_defect(&z.gens, g);
            if defect > SHUFFLE_TOL {
                return Err(Error::ShuffleViolation { w1: w1.0, w2: w2.0, defect });
            }
        }
        Ok(z)
    }

    pub fn generators(&self) -> &Arc<GeneratorSet> {
        &self.gens
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// `π₁(X_{t_k})` of the underlying branched path.
    pub fn position(&self, k: usize) -> &[f64] {
        &self.positions[k]
    }

    /// `(Z_{0,t_k}, w)` dense over the words of the generator set.
    pub fn values(&self, k: usize) -> &[f64] {
        &self.values[k]
    }

    /// Coordinate path `z^k_t = (Z_{0,t}, (k))`, `k` in `1..=K`.
    pub fn coordinate_path(&self, k: usize) -> Result<Vec<f64>> {
        let w = self
            .gens
            .word_position(&Word(vec![k]))
            .ok_or_else(|| Error::InvalidParameter(format!("no generator {k}")))?;
        Ok(self.values.iter().map(|z| z[w]).collect())
    }

    /// `Z_{t_i,t_j} = Z_{0,t_i}^{-1} Z_{0,t_j}` in the truncated tensor algebra.
    pub fn increment_idx(&self, i: usize, j: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.gens.words.len()];
        self.increment_into(i, j, &mut out);
        out
    }

    fn increment_into(&self, i: usize, j: usize, out: &mut [f64]) {
        let (zi, zj) = (&self.values[i], &self.values[j]);
        for (w, splits) in self.splits.iter().enumerate() {
            out[w] = splits
                .iter()
                .map(|&(u, v)| {
                    let (r, sign) = self.reverse[u];
                    sign * zi[r] * zj[v]
                })
                .sum();
        }
    }

    /// `max_w |(g,w)|^{1/|w|}`.
    fn norm(&self, g: &[f64]) -> f64 {
        self.gens
            .words
            .iter()
            .enumerate()
            .skip(1)
            .map(|(i, w)| g[i].abs().powf(1.0 / word_degree(w, &self.gens).expect("valid") as f64))
            .fold(0.0, f64::max)
    }

    /// Grid p-variation of `Z` on at most `max_points` evenly strided points.
    pub fn p_variation(&self, max_points: usize) -> f64 {
        let n = self.len();
        if n < 2 {
            return 0.0;
        }
        let stride = (n - 1).div_ceil(max_points.max(2) - 1).max(1);
        let idx = stride_indices(n, stride);
        let m = idx.len() - 1;
        let mut best = vec![0.0f64; m + 1];
        let mut buf = vec![0.0; self.gens.words.len()];
        for j in 1..=m {
            for i in 0..j {
                self.increment_into(idx[i], idx[j], &mut buf);
                best[j] = best[j].max(best[i] + self.norm(&buf).powf(self.p));
            }
        }
        best[m].powf(1.0 / self.p)
    }
}

/// `(word position, D^l_{i₁…i_l} f_{ν_k})` for the words `i₁⋯i_l k` with
/// degree-one inner letters and a non-vanishing coefficient.
fn taylor_terms(f: &PolynomialOneForm, gens: &GeneratorSet) -> Vec<(usize, VectorPolynomial)> {
    let mut out = Vec::new();
    for (pos, w) in gens.words.iter().enumerate().skip(1) {
        let (&k, inner) = w.letters().split_last().expect("non-empty");
        if inner.iter().any(|&i| i > gens.d) {
            continue;
        }
        let base = f.f_tau(&gens.generators[k - 1]);
        let poly: VectorPolynomial = base
            .iter()
            .map(|p| inner.iter().fold(p.clone(), |acc, &i| acc.derivative(i)))
            .collect();
        if poly.iter().any(|p| !p.is_zero()) {
            out.push((pos, poly));
        }
    }
    out
}

fn taylor_sum(terms: &[(usize, VectorPolynomial)], x: &[f64], z: &[f64], e: usize) -> Vec<f64> {
    let mut out = vec![0.0; e];
    for (w, poly) in terms {
        if z[*w] == 0.0 {
            continue;
        }
        for (o, p) in out.iter_mut().zip(poly) {
            *o += p.eval_f64(x) * z[*w];
        }
    }
    out
}

/// Exact counterpart of one Π-side Riemann term: `Σ_k Σ D^l f_{ν_k}(x) (Z, i₁⋯i_l k)`
/// with `Z` the word coordinates of `a`.
pub fn pi_taylor_term<S: Scalar>(
    f: &PolynomialOneForm,
    gens: &GeneratorSet,
    x: &[S],
    a: &Character<S>,
) -> Result<Vec<S>> {
    let z = gens.coordinates(a)?;
    let mut out = vec![S::zero(); f.e()];
    for (w, poly) in taylor_terms(f, gens) {
        for (o, p) in out.iter_mut().zip(&poly) {
            *o = o.clone() + p.eval(x) * z[w].clone();
        }
    }
    Ok(out)
}

fn check_form(f: &PolynomialOneForm, gens: &GeneratorSet, p: f64) -> Result<()> {
    if f.d() != gens.d {
        return Err(Error::DimensionMismatch(format!("one-form over d={} but path over d={}", f.d(), gens.d)));
    }
    f.validate_against(p)
}

/// First level of the Π-integral of `g = (f_{ν_1}, …, f_{ν_K})` along `Z` over
/// grid indices `[s, t]`, by dyadic Riemann sums.
pub fn first_level_pi_integral(
    f: &PolynomialOneForm,
    z: &PiRoughPath,
    s: usize,
    t: usize,
    opts: &IntegrationOptions,
) -> Result<IntegralEstimate> {
    check_form(f, &z.gens, z.p)?;
    if t < s || t >= z.len() {
        return Err(Error::InvalidParameter(format!("bad grid window [{s}, {t}]")));
    }
    let terms = taylor_terms(f, &z.gens);
    let mut buf = vec![0.0; z.gens.words.len()];
    dyadic_sums(t - s, f.e(), opts, |a, b| {
        z.increment_into(s + a, s + b, &mut buf);
        taylor_sum(&terms, &z.positions[s + a], &buf, f.e())
    })
}

/// Termwise Taylor residual at one interval scale.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TaylorRow {
    /// Interval length in grid steps.
    pub scale: usize,
    /// Largest `|β(X_s)(X_{s,t}) − Σ_k Σ D^l f_{ν_k}(x_s)(Z_{s,t}, i₁⋯i_l k)|`.
    pub residual: f64,
    /// Largest `ω(s,t)` among the sampled intervals.
    pub omega: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FirstLevelComparison {
    pub branched: IntegralEstimate,
    pub pi: IntegralEstimate,
    /// Max-norm difference of the finest sums (identical meshes).
    pub gap: f64,
    /// Max-norm difference of the reported limits.
    pub value_gap: f64,
    pub taylor: Vec<TaylorRow>,
}

/// Both first-level pipelines on `[t_s, t_t]` with every dyadic level
/// evaluated, plus the termwise Taylor check at each scale.
pub fn compare_first_levels_with(
    f: &PolynomialOneForm,
    x: &BranchedRoughPath,
    z: &PiRoughPath,
    s: usize,
    t: usize,
    opts: &IntegrationOptions,
) -> Result<FirstLevelComparison> {
    check_form(f, &z.gens, x.p())?;
    if z.len() != x.len() {
        return Err(Error::DimensionMismatch("Π-path and branched path on different grids".into()));
    }
    if t < s || t >= x.len() {
        return Err(Error::InvalidParameter(format!("bad grid window [{s}, {t}]")));
    }
    let matched = IntegrationOptions { tol: 0.0, ..opts.clone() };
    let lifted = f.lifted(x.basis());
    let forms: Vec<_> = (s..=t).map(|k| beta_form(&lifted, x.basis(), &x.position(k))).collect();
    let branched = integrate_one_form(&forms, x, s, t, &matched)?;
    let pi = first_level_pi_integral(f, z, s, t, &matched)?;
    let max_diff = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(u, v)| (u - v).abs()).fold(0.0, f64::max);
    let gap = max_diff(&branched.raw, &pi.raw);
    let value_gap = max_diff(&branched.value, &pi.value);

    let terms = taylor_terms(f, &z.gens);
    let mut taylor = Vec::new();
    let span = t - s;
    let mut scale = 1;
    let mut zbuf = vec![0.0; z.gens.words.len()];
    while scale <= span {
        let count = span / scale;
        let mut residual = 0.0f64;
        for q in 0..count {
            let (a, b) = (s + q * scale, s + (q + 1) * scale);
            let inc = x.increment_idx(a, b);
            let lhs = forms[a - s].evaluate_values(inc.forest_values());
            z.increment_into(a, b, &mut zbuf);
            let rhs = taylor_sum(&terms, &z.positions[a], &zbuf, f.e());
            residual = residual.max(max_diff(&lhs, &rhs));
        }
        let step = count.div_ceil(8).max(1);
        let omega = (0..count)
            .step_by(step)
            .map(|q| omega_interval(x, s + q * scale, s + (q + 1) * scale))
            .fold(0.0, f64::max);
        taylor.push(TaylorRow { scale, residual, omega });
        scale *= 2;
    }
    Ok(FirstLevelComparison { branched, pi, gap, value_gap, taylor })
}

/// [`compare_first_levels_with`] building the generators and `Z` from `X`.
pub fn compare_first_levels(
    f: &PolynomialOneForm,
    x: &BranchedRoughPath,
    s: usize,
    t: usize,
    opts: &IntegrationOptions,
) -> Result<FirstLevelComparison> {
    let gens = Arc::new(compute_generators(x.d(), x.p_floor())?);
    let z = PiRoughPath::build(x, gens)?;
    compare_first_levels_with(f, x, &z, s, t, opts)
}
