//! Time-sampled branched rough paths.
//!
//! Paths store absolute values `X_t`; increments are `X_s⁻¹ X_t`, so Chen's
//! identity holds by construction. All suprema over partitions are taken over
//! the sample grid.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::character::{Character, CharacterJson};
use crate::error::{Error, Result};
use crate::forest::{tree_factorial, vertex_labels, ForestBasis};
use crate::MAX_DEGREE;

#[derive(Clone, Debug)]
pub struct BranchedRoughPath {
    times: Vec<f64>,
    values: Vec<Character<f64>>,
    p: f64,
}

/// Additive perturbation `t ↦ c(t)` of the `[•_i]_j` tree component.
#[derive(Clone, Debug, PartialEq)]
pub struct Perturbation {
    pub i: u32,
    pub j: u32,
    /// One value per sample time, starting at 0.
    pub values: Vec<f64>,
}

fn check_times(times: &[f64]) -> Result<()> {
    if times.len() < 2 {
        return Err(Error::InvalidParameter("at least two samples are required".into()));
    }
    for (row, w) in times.windows(2).enumerate() {
        if !(w[1] > w[0]) || !w[0].is_finite() || !w[1].is_finite() {
            return Err(Error::NonIncreasingTimes { row: row + 1 });
        }
    }
    Ok(())
}

fn p_floor_of(p: f64) -> Result<usize> {
    if !(p >= 1.0) || !p.is_finite() {
        return Err(Error::InvalidParameter(format!("p must be at least 1, got {p}")));
    }
    let n = p.floor() as usize;
    if n > MAX_DEGREE {
        return Err(Error::DegreeCap { degree: n, cap: MAX_DEGREE });
    }
    Ok(n)
}

/// Character of the straight segment with displacement `v`:
/// `(X, τ) = Π_{vertices} v_label / τ!`.
pub fn segment_character(basis: &Arc<ForestBasis>, v: &[f64]) -> Result<Character<f64>> {
    if v.len() != basis.d() {
        return Err(Error::DimensionMismatch(format!("displacement of length {} for d={}", v.len(), basis.d())));
    }
    let trees = basis
        .trees()
        .iter()
        .map(|&i| {
            let tau = basis.forest(i).as_tree().expect("tree index");
            let prod: f64 = vertex_labels(tau).iter().map(|&l| v[l as usize - 1]).product();
            prod / tree_factorial(tau) as f64
        })
        .collect();
    Character::from_tree_values(basis.clone(), trees)
}

/// Dense forest values of `a⁻¹ b` given the dense values of `a⁻¹` and `b`.
pub(crate) fn increment_into(basis: &ForestBasis, inv_a: &[f64], b: &[f64], out: &mut [f64]) {
    out[0] = 1.0;
    for i in 1..basis.len() {
        out[i] = if basis.tree_pos(i).is_some() {
            basis
                .coproduct(i)
                .iter()
                .map(|&(l, r, m)| m as f64 * inv_a[l] * b[r])
                .sum()
        } else {
            basis.factors(i).iter().map(|&k| out[basis.trees()[k]]).product()
        };
    }
}

fn norm_of(basis: &ForestBasis, values: &[f64]) -> f64 {
    (1..basis.len())
        .map(|i| values[i].abs().powf(1.0 / basis.degree(i) as f64))
        .fold(0.0, f64::max)
}

impl BranchedRoughPath {
    pub fn new(times: Vec<f64>, values: Vec<Character<f64>>, p: f64) -> Result<Self> {
        check_times(&times)?;
        let n = p_floor_of(p)?;
        if values.len() != times.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} times but {} values",
                times.len(),
                values.len()
            )));
        }
        let d = values[0].d();
        if values.iter().any(|v| v.d() != d || v.p_floor() != n) {
            return Err(Error::DimensionMismatch(format!("values must all be over d={d}, [p]={n}")));
        }
        Ok(BranchedRoughPath { times, values, p })
    }

    /// Canonical lift of the piecewise-linear interpolant of the samples.
    /// The starting value is the lift of the segment from the origin to the
    /// first sample.
    pub fn canonical_lift(times: &[f64], points: &[Vec<f64>], p: f64) -> Result<Self> {
        check_times(times)?;
        let n = p_floor_of(p)?;
        if points.len() != times.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} times but {} points",
                times.len(),
                points.len()
            )));
        }
        let d = points[0].len();
        if d == 0 || points.iter().any(|x| x.len() != d) {
            return Err(Error::DimensionMismatch("points must share a positive dimension".into()));
        }
        let basis = ForestBasis::shared(d, n)?;
        let mut values = Vec::with_capacity(points.len());
        values.push(segment_character(&basis, &points[0])?);
        for w in points.windows(2) {
            let v: Vec<f64> = w[1].iter().zip(&w[0]).map(|(b, a)| b - a).collect();
            let seg = segment_character(&basis, &v)?;
            let next = values.last().expect("non-empty").group_product(&seg)?;
            values.push(next);
        }
        Ok(BranchedRoughPath { times: times.to_vec(), values, p })
    }

    /// Canonical lift with `c_{ij}(t)` added to the `[•_i]_j` tree value of
    /// every absolute value `X_t`; requires `[p] = 2`.
    pub fn ito_like_lift(
        times: &[f64],
        points: &[Vec<f64>],
        p: f64,
        perturbations: &[Perturbation],
    ) -> Result<Self> {
        if p_floor_of(p)? != 2 {
            return Err(Error::InvalidParameter(format!("Itô-type lift needs [p] = 2, got p = {p}")));
        }
        let base = Self::canonical_lift(times, points, p)?;
        let basis = base.basis().clone();
        let mut trees: Vec<Vec<f64>> = base.values.iter().map(|v| v.tree_values().to_vec()).collect();
        for pert in perturbations {
            let d = basis.d();
            for label in [pert.i, pert.j] {
                if label == 0 || label as usize > d {
                    return Err(Error::LabelOutOfRange { label, d });
                }
            }
            if pert.values.len() != times.len() {
                return Err(Error::DimensionMismatch(format!(
                    "perturbation ({}, {}) has {} values for {} samples",
                    pert.i,
                    pert.j,
                    pert.values.len(),
                    times.len()
                )));
            }
            if pert.values[0] != 0.0 {
                return Err(Error::InvalidParameter("perturbation paths must start at 0".into()));
            }
            let leaf = basis.leaf(pert.i);
            let tree = basis.graft_root(leaf, pert.j).expect("degree 2 within truncation");
            let pos = basis.tree_pos(tree).expect("tree");
            for (row, c) in trees.iter_mut().zip(&pert.values) {
                row[pos] += c;
            }
        }
        let values = trees
            .into_iter()
            .map(|t| Character::from_tree_values(basis.clone(), t))
            .collect::<Result<Vec<_>>>()?;
        Self::new(times.to_vec(), values, p)
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[Character<f64>] {
        &self.values
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn p_floor(&self) -> usize {
        self.values[0].p_floor()
    }

    pub fn d(&self) -> usize {
        self.values[0].d()
    }

    pub fn basis(&self) -> &Arc<ForestBasis> {
        self.values[0].basis()
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Level-one position `π₁(X_{t_k})`.
    pub fn position(&self, k: usize) -> Vec<f64> {
        self.values[k].level_one()
    }

    /// Grid index of time `t`.
    pub fn index_of_time(&self, t: f64) -> Result<usize> {
        let tol = 1e-12 * (1.0 + t.abs());
        let k = self.times.partition_point(|&s| s < t - tol);
        if k < self.times.len() && (self.times[k] - t).abs() <= tol {
            Ok(k)
        } else {
            Err(Error::OffGrid(t))
        }
    }

    /// `X_{t_i}⁻¹ X_{t_j}`.
    pub fn increment_idx(&self, i: usize, j: usize) -> Character<f64> {
        self.values[i].inverse().group_product(&self.values[j]).expect("same basis")
    }

    pub fn increment(&self, s: f64, t: f64) -> Result<Character<f64>> {
        let i = self.index_of_time(s)?;
        let j = self.index_of_time(t)?;
        if i > j {
            return Err(Error::InvalidParameter(format!("increment needs s <= t, got {s} > {t}")));
        }
        Ok(self.increment_idx(i, j))
    }

    /// The path restricted to the given increasing grid indices.
    pub fn restrict(&self, indices: &[usize]) -> Result<Self> {
        let times = indices.iter().map(|&k| self.times[k]).collect();
        let values = indices.iter().map(|&k| self.values[k].clone()).collect();
        Self::new(times, values, self.p)
    }

    /// Every `stride`-th grid point, always keeping the last one.
    pub fn subsample(&self, stride: usize) -> Result<Self> {
        self.restrict(&stride_indices(self.len(), stride))
    }

    /// `δ_λ X`, the pointwise dilation.
    pub fn dilate(&self, lambda: f64) -> Self {
        BranchedRoughPath {
            times: self.times.clone(),
            values: self.values.iter().map(|v| v.dilate(&lambda)).collect(),
            p: self.p,
        }
    }

    fn inverse_values(&self) -> Vec<Vec<f64>> {
        self.values.iter().map(|v| v.inverse().forest_values().to_vec()).collect()
    }

    /// `‖X_{t_i,t_j}‖^p` for all `i <= j` (row `i`, column `j - i`).
    fn norm_powers(&self, lo: usize, hi: usize) -> Vec<Vec<f64>> {
        let basis = self.basis();
        let inv = self.inverse_values();
        let mut buf = vec![0.0; basis.len()];
        (lo..=hi)
            .map(|i| {
                (i..=hi)
                    .map(|j| {
                        increment_into(basis, &inv[i], self.values[j].forest_values(), &mut buf);
                        norm_of(basis, &buf).powf(self.p)
                    })
                    .collect()
            })
            .collect()
    }

    /// Grid p-variation over `[t_lo, t_hi]` by dynamic programming.
    pub fn p_variation_idx(&self, lo: usize, hi: usize) -> f64 {
        if hi <= lo {
            return 0.0;
        }
        let powers = self.norm_powers(lo, hi);
        let m = hi - lo;
        let mut best = vec![0.0f64; m + 1];
        for j in 1..=m {
            best[j] = (0..j).map(|i| best[i] + powers[i][j - i]).fold(0.0, f64::max);
        }
        best[m].powf(1.0 / self.p)
    }

    pub fn p_variation(&self, s: f64, t: f64) -> Result<f64> {
        let i = self.index_of_time(s)?;
        let j = self.index_of_time(t)?;
        Ok(self.p_variation_idx(i, j))
    }

    /// p-variation over the whole grid.
    pub fn total_p_variation(&self) -> f64 {
        self.p_variation_idx(0, self.len() - 1)
    }

    /// Table of `ω(t_i, t_j) = ‖X‖_{p-var,[t_i,t_j]}^p` for all grid pairs.
    pub fn control(&self) -> ControlFn {
        let n = self.len();
        let powers = self.norm_powers(0, n - 1);
        let table = (0..n)
            .map(|a| {
                let mut best = vec![0.0f64; n - a];
                for j in 1..n - a {
                    best[j] = (0..j)
                        .map(|i| best[i] + powers[a + i][j - i])
                        .fold(0.0, f64::max);
                }
                best
            })
            .collect();
        ControlFn { times: self.times.clone(), table }
    }

    pub fn to_json(&self) -> PathJson {
        PathJson {
            p: self.p,
            d: self.d(),
            p_floor: self.p_floor(),
            samples: self
                .times
                .iter()
                .zip(&self.values)
                .map(|(&t, v)| PathSample { t, value: v.to_json() })
                .collect(),
        }
    }

    pub fn from_json(json: &PathJson) -> Result<Self> {
        let values = json
            .samples
            .iter()
            .map(|s| Character::from_json(&s.value))
            .collect::<Result<Vec<_>>>()?;
        Self::new(json.samples.iter().map(|s| s.t).collect(), values, json.p)
    }
}

/// `0, stride, 2·stride, …` with the last index always included.
pub fn stride_indices(len: usize, stride: usize) -> Vec<usize> {
    let stride = stride.max(1);
    let mut idx: Vec<usize> = (0..len).step_by(stride).collect();
    if *idx.last().expect("non-empty grid") != len - 1 {
        idx.push(len - 1);
    }
    idx
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathSample {
    pub t: f64,
    pub value: CharacterJson,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathJson {
    pub p: f64,
    pub d: usize,
    pub p_floor: usize,
    pub samples: Vec<PathSample>,
}

/// Control `ω` tabulated on all pairs of grid points.
#[derive(Clone, Debug)]
pub struct ControlFn {
    times: Vec<f64>,
    table: Vec<Vec<f64>>,
}

impl ControlFn {
    pub fn times(&self) -> &[f64] {
        &self.times
    }

    /// `ω(t_i, t_j)` for `i <= j`.
    pub fn omega_idx(&self, i: usize, j: usize) -> f64 {
        if j < i {
            return 0.0;
        }
        self.table[i][j - i]
    }

    pub fn omega(&self, s: f64, t: f64) -> Result<f64> {
        let find = |x: f64| {
            self.times
                .iter()
                .position(|&u| (u - x).abs() <= 1e-12 * (1.0 + x.abs()))
                .ok_or(Error::OffGrid(x))
        };
        Ok(self.omega_idx(find(s)?, find(t)?))
    }

    /// Largest violation of `ω(s,u) + ω(u,t) <= ω(s,t)` over all grid triples.
    pub fn superadditivity_defect(&self) -> f64 {
        let n = self.times.len();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for k in i..n {
                for j in k..n {
                    worst = worst.max(self.omega_idx(i, k) + self.omega_idx(k, j) - self.omega_idx(i, j));
                }
            }
        }
        worst
    }
}

/// Inhomogeneous distance between two paths on the same grid:
/// `|π₁X¹₀ − π₁X²₀| + max_ρ (sup_D Σ |(X¹−X², ρ)|^{p/|ρ|})^{1/p}`.
pub fn dp_metric(x1: &BranchedRoughPath, x2: &BranchedRoughPath) -> Result<f64> {
    if x1.times != x2.times {
        return Err(Error::DimensionMismatch("paths are sampled on different grids".into()));
    }
    if x1.d() != x2.d() || x1.p_floor() != x2.p_floor() || x1.p != x2.p {
        return Err(Error::DimensionMismatch("paths differ in d or p".into()));
    }
    let basis = x1.basis();
    let p = x1.p;
    let start: f64 = x1
        .position(0)
        .iter()
        .zip(x2.position(0))
        .map(|(a, b)| (a - b).powi(2))
        .sum::<f64>()
        .sqrt();
    let (inv1, inv2) = (x1.inverse_values(), x2.inverse_values());
    let n = x1.len();
    let f = basis.len();
    let exponents: Vec<f64> = (0..f).map(|i| p / basis.degree(i).max(1) as f64).collect();
    let mut best = vec![vec![0.0f64; f]; n];
    let (mut b1, mut b2) = (vec![0.0; f], vec![0.0; f]);
    for j in 1..n {
        let mut row = vec![0.0f64; f];
        for i in 0..j {
            increment_into(basis, &inv1[i], x1.values[j].forest_values(), &mut b1);
            increment_into(basis, &inv2[i], x2.values[j].forest_values(), &mut b2);
            for r in 1..f {
                let cand = best[i][r] + (b1[r] - b2[r]).abs().powf(exponents[r]);
                if cand > row[r] {
                    row[r] = cand;
                }
            }
        }
        best[j] = row;
    }
    let tail = best[n - 1][1..].iter().fold(0.0f64, |m, &v| m.max(v));
    Ok(start + tail.powf(1.0 / p))
}
