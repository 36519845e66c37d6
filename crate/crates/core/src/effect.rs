//! Fibre elements, effects and the rough integral.
//!
//! A [`OneFormRep`] is a linear functional `φ(a) = Σ_ρ φ^ρ (a, ρ)` on the
//! character group. Effects are paths `y` with `y_t − y_s ≈ β(X_s)(X_{s,t})`;
//! they are integrated by compensated Riemann sums on nested dyadic
//! sub-grids of the sample grid.

use std::sync::Arc;

use num::Zero;
use serde::{Deserialize, Serialize};

use crate::character::Character;
use crate::error::{Error, Result};
use crate::forest::ForestBasis;
use crate::one_form::{LiftedOneForm, PolynomialOneForm};
use crate::rough_path::{increment_into, stride_indices, BranchedRoughPath};
use crate::scalar::Scalar;

/// `φ = Σ_ρ φ^ρ` with `φ^ρ ∈ ℝ^e`, supported on forests of degree `>= 1`.
#[derive(Clone, Debug)]
pub struct OneFormRep<S: Scalar = f64> {
    basis: Arc<ForestBasis>,
    e: usize,
    /// `coeffs[i * e + k]`: output `k` on basis forest `i`.
    coeffs: Vec<S>,
}

impl<S: Scalar> PartialEq for OneFormRep<S> {
    fn eq(&self, other: &Self) -> bool {
        self.basis.d() == other.basis.d()
            && self.basis.n() == other.basis.n()
            && self.e == other.e
            && self.coeffs == other.coeffs
    }
}

impl<S: Scalar> OneFormRep<S> {
    pub fn zero(basis: Arc<ForestBasis>, e: usize) -> Self {
        let coeffs = vec![S::zero(); basis.len() * e];
        OneFormRep { basis, e, coeffs }
    }

    pub fn basis(&self) -> &Arc<ForestBasis> {
        &self.basis
    }

    pub fn e(&self) -> usize {
        self.e
    }

    pub fn coeff(&self, i: usize) -> &[S] {
        &self.coeffs[i * self.e..(i + 1) * self.e]
    }

    /// Adds `c` to the coefficient on basis forest `i` (`i >= 1`).
    pub fn add_to(&mut self, i: usize, c: &[S]) {
        assert!(i > 0, "one-forms carry no coefficient on the empty forest");
        for (k, v) in c.iter().enumerate() {
            let slot = &mut self.coeffs[i * self.e + k];
            *slot = slot.clone() + v.clone();
        }
    }

    /// Forest indices with a non-zero coefficient.
    pub fn support(&self) -> Vec<usize> {
        (1..self.basis.len()).filter(|&i| self.coeff(i).iter().any(|c| !c.is_zero())).collect()
    }

    /// Output coordinate `k` as a scalar one-form.
    pub fn component(&self, k: usize) -> OneFormRep<S> {
        let coeffs = (0..self.basis.len()).map(|i| self.coeffs[i * self.e + k].clone()).collect();
        OneFormRep { basis: self.basis.clone(), e: 1, coeffs }
    }

    pub fn scaled(&self, c: &S) -> Self {
        OneFormRep {
            basis: self.basis.clone(),
            e: self.e,
            coeffs: self.coeffs.iter().map(|v| v.clone() * c.clone()).collect(),
        }
    }

    pub fn plus(&self, other: &Self) -> Result<Self> {
        self.check(other)?;
        Ok(OneFormRep {
            basis: self.basis.clone(),
            e: self.e,
            coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a.clone() + b.clone()).collect(),
        })
    }

    fn check(&self, other: &Self) -> Result<()> {
        if self.basis.d() != other.basis.d() || self.basis.n() != other.basis.n() || self.e != other.e {
            return Err(Error::DimensionMismatch("one-forms over different spaces".into()));
        }
        Ok(())
    }

    fn check_char(&self, a: &Character<S>) -> Result<()> {
        if a.d() != self.basis.d() || a.p_floor() != self.basis.n() {
            return Err(Error::DimensionMismatch("character and one-form over different spaces".into()));
        }
        Ok(())
    }

    /// `φ(a) = Σ_ρ φ^ρ (a, ρ)` given the dense forest values of `a`.
    pub fn evaluate_values(&self, values: &[S]) -> Vec<S> {
        let mut out = vec![S::zero(); self.e];
        for (i, v) in values.iter().enumerate().skip(1) {
            if v.is_zero() {
                continue;
            }
            for (k, o) in out.iter_mut().enumerate() {
                let c = &self.coeffs[i * self.e + k];
                if !c.is_zero() {
                    *o = o.clone() + c.clone() * v.clone();
                }
            }
        }
        out
    }

    pub fn evaluate(&self, a: &Character<S>) -> Result<Vec<S>> {
        self.check_char(a)?;
        Ok(self.evaluate_values(a.forest_values()))
    }

    /// Parallel translation `φ_b(c) = φ(bc) − φ(b)`.
    pub fn translate(&self, b: &Character<S>) -> Result<Self> {
        self.check_char(b)?;
        let mut out = Self::zero(self.basis.clone(), self.e);
        for rho in 1..self.basis.len() {
            let c = self.coeff(rho);
            if c.iter().all(Zero::is_zero) {
                continue;
            }
            for &(l, r, m) in self.basis.coproduct(rho) {
                if r == 0 {
                    continue;
                }
                let w = S::from_i64(m as i64) * b.value(l).clone();
                let scaled: Vec<S> = c.iter().map(|v| v.clone() * w.clone()).collect();
                out.add_to(r, &scaled);
            }
        }
        Ok(out)
    }

    fn require_scalar(&self, other: &Self) -> Result<()> {
        self.check(other)?;
        if self.e != 1 {
            return Err(Error::InvalidParameter(format!("products need scalar one-forms, got e = {}", self.e)));
        }
        Ok(())
    }

    /// `(φ₁φ₂)(a) = Σ φ₁^{ρ₁} φ₂^{ρ₂} (a, ρ₁ρ₂)`, `|ρ₁| + |ρ₂| <= [p]`.
    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.require_scalar(other)?;
        let mut out = Self::zero(self.basis.clone(), 1);
        let (sa, sb) = (self.support(), other.support());
        for &i in &sa {
            for &j in &sb {
                if let Some(k) = self.basis.product(i, j) {
                    let v = self.coeffs[i].clone() * other.coeffs[j].clone();
                    out.coeffs[k] = out.coeffs[k].clone() + v;
                }
            }
        }
        Ok(out)
    }

    /// `(φ₁ ≻ φ₂)(a) = Σ φ₁^ρ φ₂^τ (a, ρ ≻ τ)`; `φ₂` must be supported on trees.
    pub fn graft(&self, other: &Self) -> Result<Self> {
        self.require_scalar(other)?;
        let mut out = Self::zero(self.basis.clone(), 1);
        let sb = other.support();
        if let Some(&bad) = sb.iter().find(|&&j| self.basis.tree_pos(j).is_none()) {
            return Err(Error::InvalidParameter(format!(
                "grafting needs a tree-supported right factor, found {}",
                self.basis.forest(bad)
            )));
        }
        for &i in &self.support() {
            for &j in &sb {
                let pos = self.basis.tree_pos(j).expect("checked");
                if let Some(k) = self.basis.graft(i, pos) {
                    let v = self.coeffs[i].clone() * other.coeffs[j].clone();
                    out.coeffs[k] = out.coeffs[k].clone() + v;
                }
            }
        }
        Ok(out)
    }

    /// Per-forest magnitudes `‖φ‖_ρ = |φ^ρ|` (max over outputs).
    pub fn rho_norms(&self) -> Vec<f64> {
        (0..self.basis.len())
            .map(|i| self.coeff(i).iter().map(Scalar::abs_f64).fold(0.0, f64::max))
            .collect()
    }
}

/// `β(X)` as a fibre element at the point `x = π₁(X)`.
pub fn beta_form(lifted: &LiftedOneForm, basis: &Arc<ForestBasis>, x: &[f64]) -> OneFormRep {
    let mut out = OneFormRep::zero(basis.clone(), lifted.e());
    for (i, c) in lifted.coefficients_at(x) {
        out.add_to(i, &c);
    }
    out
}

/// A scalar effect sampled on a window of the grid together with its one-form.
#[derive(Clone, Debug)]
pub struct EffectPath {
    /// Grid index of the first sample.
    pub start: usize,
    pub values: Vec<f64>,
    pub forms: Vec<OneFormRep>,
}

impl EffectPath {
    /// Running compensated sums `y_{k+1} = y_k + β_k(X_{t_k,t_{k+1}})` from `xi`.
    pub fn integrate(x: &BranchedRoughPath, start: usize, xi: f64, forms: Vec<OneFormRep>) -> Result<Self> {
        let grid = GridIncrements::new(x, start, start + forms.len() - 1);
        Self::integrate_with(&grid, xi, forms)
    }

    fn integrate_with(grid: &GridIncrements, xi: f64, forms: Vec<OneFormRep>) -> Result<Self> {
        if forms.iter().any(|f| f.e() != 1) {
            return Err(Error::InvalidParameter("effects are scalar".into()));
        }
        let mut values = Vec::with_capacity(forms.len());
        values.push(xi);
        let mut buf = vec![0.0; grid.basis.len()];
        for k in 0..forms.len() - 1 {
            grid.increment(k, k + 1, &mut buf);
            let next = values[k] + forms[k].evaluate_values(&buf)[0];
            values.push(next);
        }
        Ok(EffectPath { start: grid.start, values, forms })
    }
}

/// One-form of the product effect `y₁ y₂`:
/// `y₁(t) β₂ + β₁ y₂(t) + β₁β₂`.
pub fn multiply_effects(
    b1: &[OneFormRep],
    b2: &[OneFormRep],
    y1: &EffectPath,
    y2: &EffectPath,
) -> Result<Vec<OneFormRep>> {
    if b1.len() != b2.len() || y1.values.len() != b1.len() || y2.values.len() != b1.len() {
        return Err(Error::DimensionMismatch("effects sampled on different windows".into()));
    }
    (0..b1.len())
        .map(|k| {
            let mut out = b2[k].scaled(&y1.values[k]).plus(&b1[k].scaled(&y2.values[k]))?;
            out = out.plus(&b1[k].mul(&b2[k])?)?;
            Ok(out)
        })
        .collect()
}

/// One-form of `t ↦ ∫ y₁ dy₂` where `y₂` has the tree-supported one-form `β₂`:
/// `y₁(t) β₂ + β₁ ≻ β₂`.
pub fn graft_effects(b1: &[OneFormRep], y1: &EffectPath, b2: &[OneFormRep]) -> Result<Vec<OneFormRep>> {
    if b1.len() != b2.len() || y1.values.len() != b1.len() {
        return Err(Error::DimensionMismatch("effects sampled on different windows".into()));
    }
    (0..b1.len())
        .map(|k| b2[k].scaled(&y1.values[k]).plus(&b1[k].graft(&b2[k])?))
        .collect()
}

/// Refinement and stopping rules for the compensated Riemann sums.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntegrationOptions {
    /// Number of nested dyadic levels, finest being the sample grid.
    pub max_levels: usize,
    /// Stop refining once two successive levels differ by less than this.
    pub tol: f64,
    /// Accelerate with the observed geometric rate of the last three levels.
    pub extrapolate: bool,
    /// Report non-convergence when the final gap exceeds `fail_tol · (1 + |value|)`.
    pub fail_tol: f64,
}

impl Default for IntegrationOptions {
    fn default() -> Self {
        IntegrationOptions { max_levels: 12, tol: 1e-9, extrapolate: true, fail_tol: 1e-3 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntegralEstimate {
    /// Extrapolated value when extrapolation applied, else the finest sum.
    pub value: Vec<f64>,
    /// Sum on the finest level computed.
    pub raw: Vec<f64>,
    /// Largest component difference between the two finest levels.
    pub gap: f64,
    pub levels: usize,
    pub extrapolated: bool,
}

/// Inverses and values of a grid window, for repeated increments.
struct GridIncrements {
    basis: Arc<ForestBasis>,
    start: usize,
    inv: Vec<Vec<f64>>,
    vals: Vec<Vec<f64>>,
}

impl GridIncrements {
    fn new(x: &BranchedRoughPath, start: usize, end: usize) -> Self {
        let window = &x.values()[start..=end];
        GridIncrements {
            basis: x.basis().clone(),
            start,
            inv: window.iter().map(|v| v.inverse().forest_values().to_vec()).collect(),
            vals: window.iter().map(|v| v.forest_values().to_vec()).collect(),
        }
    }

    fn len(&self) -> usize {
        self.vals.len()
    }

    /// Dense values of `X_{t_a, t_b}` (offsets relative to the window).
    fn increment(&self, a: usize, b: usize, out: &mut [f64]) {
        increment_into(&self.basis, &self.inv[a], &self.vals[b], out);
    }
}

fn aitken(s: &[Vec<f64>]) -> Option<Vec<f64>> {
    let [.., a, b, c] = s else { return None };
    let mut out = Vec::with_capacity(c.len());
    for k in 0..c.len() {
        let (d1, d2) = (b[k] - a[k], c[k] - b[k]);
        if d1 == 0.0 || d2 == 0.0 {
            out.push(c[k]);
            continue;
        }
        let r = d2 / d1;
        if r > 0.0 && r < 0.75 {
            out.push(c[k] + d2 * r / (1.0 - r));
        } else {
            out.push(c[k]);
        }
    }
    Some(out)
}

fn sums_over_levels(grid: &GridIncrements, forms: &[OneFormRep], opts: &IntegrationOptions) -> Result<IntegralEstimate> {
    let mut buf = vec![0.0; grid.basis.len()];
    dyadic_sums(grid.len() - 1, forms[0].e(), opts, |a, b| {
        grid.increment(a, b, &mut buf);
        forms[a].evaluate_values(&buf)
    })
}

/// Riemann sums `Σ term(a, b)` over nested dyadic sub-grids of `0..=m`,
/// coarse to fine, with the stopping and extrapolation rules of `opts`.
pub(crate) fn dyadic_sums<F>(m: usize, e: usize, opts: &IntegrationOptions, mut term: F) -> Result<IntegralEstimate>
where
    F: FnMut(usize, usize) -> Vec<f64>,
{
    if m == 0 {
        return Ok(IntegralEstimate { value: vec![0.0; e], raw: vec![0.0; e], gap: 0.0, levels: 0, extrapolated: false });
    }
    let top = (usize::BITS - 1 - m.leading_zeros()) as usize;
    let coarsest = top.min(opts.max_levels.max(1) - 1);
    let mut levels: Vec<Vec<f64>> = Vec::new();
    let mut gap = f64::INFINITY;
    for level in (0..=coarsest).rev() {
        let idx = stride_indices(m + 1, 1 << level);
        let mut total = vec![0.0; e];
        for w in idx.windows(2) {
            for (t, v) in total.iter_mut().zip(term(w[0], w[1])) {
                *t += v;
            }
        }
        if let Some(prev) = levels.last() {
            gap = prev.iter().zip(&total).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        }
        levels.push(total);
        if gap < opts.tol {
            break;
        }
    }
    if levels.len() == 1 {
        gap = 0.0;
    }
    let raw = levels.last().expect("at least one level").clone();
    let scale = 1.0 + raw.iter().map(|v| v.abs()).fold(0.0, f64::max);
    if !gap.is_finite() || gap > opts.fail_tol * scale {
        return Err(Error::NonCauchy { gap, tol: opts.fail_tol * scale });
    }
    let extrapolated = if opts.extrapolate && gap >= opts.tol { aitken(&levels) } else { None };
    Ok(IntegralEstimate {
        value: extrapolated.clone().unwrap_or_else(|| raw.clone()),
        raw,
        gap,
        levels: levels.len(),
        extrapolated: extrapolated.is_some(),
    })
}

/// `∫_{t_s}^{t_t} β(X_r) dX_r` where `forms[k]` is `β(X_{t_{s+k}})`.
pub fn integrate_one_form(
    forms: &[OneFormRep],
    x: &BranchedRoughPath,
    s: usize,
    t: usize,
    opts: &IntegrationOptions,
) -> Result<IntegralEstimate> {
    if t < s || t >= x.len() {
        return Err(Error::InvalidParameter(format!("bad grid window [{s}, {t}]")));
    }
    if forms.len() != t - s + 1 {
        return Err(Error::DimensionMismatch(format!("{} one-forms for {} grid points", forms.len(), t - s + 1)));
    }
    let grid = GridIncrements::new(x, s, t);
    sums_over_levels(&grid, forms, opts)
}

/// All effects `r ↦ (Y_{s,r}, ρ)` for `e`-labelled forests `ρ` on a window.
struct EffectSystem {
    e_basis: Arc<ForestBasis>,
    grid: GridIncrements,
    /// `forms[ρ]`: one-form of the effect at every window point (when needed).
    forms: Vec<Option<Vec<OneFormRep>>>,
    /// `values[ρ][k] = (Y_{s, t_{s+k}}, ρ)`.
    values: Vec<Vec<f64>>,
}

fn e_basis_for(f: &PolynomialOneForm, x: &BranchedRoughPath) -> Result<Arc<ForestBasis>> {
    if f.d() != x.d() {
        return Err(Error::DimensionMismatch(format!("one-form over d={} but path over d={}", f.d(), x.d())));
    }
    f.validate_against(x.p())?;
    ForestBasis::shared(f.e(), x.p_floor())
}

impl EffectSystem {
    fn build(f: &PolynomialOneForm, x: &BranchedRoughPath, s: usize, t: usize) -> Result<Self> {
        let e_basis = e_basis_for(f, x)?;
        let d_basis = x.basis().clone();
        let lifted = f.lifted(&d_basis);
        let grid = GridIncrements::new(x, s, t);
        let npts = t - s + 1;
        let betas: Vec<OneFormRep> = (s..=t).map(|k| beta_form(&lifted, &d_basis, &x.position(k))).collect();
        let n = e_basis.n();
        let mut forms: Vec<Option<Vec<OneFormRep>>> = vec![None; e_basis.len()];
        let mut values: Vec<Vec<f64>> = vec![Vec::new(); e_basis.len()];
        values[0] = vec![1.0; npts];
        let leaf_forms: Vec<Vec<OneFormRep>> =
            (0..f.e()).map(|j| betas.iter().map(|b| b.component(j)).collect()).collect();
        for rho in 1..e_basis.len() {
            let deg = e_basis.degree(rho);
            if e_basis.tree_pos(rho).is_some() {
                let tree = e_basis.forest(rho).as_tree().expect("tree");
                let j = tree.label() as usize - 1;
                let branches = tree.branches();
                let tree_forms = if branches.is_empty() {
                    leaf_forms[j].clone()
                } else {
                    let sigma = e_basis.index_of(&branches).expect("lower degree");
                    let y1 = EffectPath {
                        start: s,
                        values: values[sigma].clone(),
                        forms: Vec::new(),
                    };
                    let b1 = forms[sigma].as_ref().expect("branch one-forms computed first");
                    graft_effects(b1, &y1, &leaf_forms[j])?
                };
                let effect = EffectPath::integrate_with(&grid, 0.0, tree_forms)?;
                values[rho] = effect.values;
                forms[rho] = Some(effect.forms);
            } else {
                let factors = e_basis.factors(rho);
                let first = e_basis.trees()[factors[0]];
                let rest_forest = e_basis
                    .forest(rho)
                    .trees()
                    .iter()
                    .skip(1)
                    .fold(crate::forest::Forest::empty(), |acc, t| acc.mul(&t.clone().into()));
                let rest = e_basis.index_of(&rest_forest).expect("lower degree");
                values[rho] = values[first].iter().zip(&values[rest]).map(|(a, b)| a * b).collect();
                if deg < n {
                    let y1 = EffectPath { start: s, values: values[first].clone(), forms: Vec::new() };
                    let y2 = EffectPath { start: s, values: values[rest].clone(), forms: Vec::new() };
                    let b1 = forms[first].as_ref().expect("factor one-forms computed first");
                    let b2 = forms[rest].as_ref().expect("factor one-forms computed first");
                    forms[rho] = Some(multiply_effects(b1, b2, &y1, &y2)?);
                }
            }
        }
        Ok(EffectSystem { e_basis, grid, forms, values })
    }

    fn character_at(&self, k: usize) -> Character<f64> {
        let trees = self.e_basis.trees().iter().map(|&i| self.values[i][k]).collect();
        Character::from_tree_values(self.e_basis.clone(), trees).expect("sizes match")
    }
}

/// The rough integral `Y_{s,t}` with its refinement diagnostics.
#[derive(Clone, Debug)]
pub struct FullIntegral {
    /// Tree values from the (possibly extrapolated) limits.
    pub y: Character<f64>,
    /// Tree values from the finest compensated sums.
    pub raw: Character<f64>,
    /// Largest gap between the two finest levels over all trees.
    pub gap: f64,
}

/// `Y_{t_s, t_t}` over `e` labels, grid indices `s <= t`.
pub fn full_integral(
    f: &PolynomialOneForm,
    x: &BranchedRoughPath,
    s: usize,
    t: usize,
    opts: &IntegrationOptions,
) -> Result<FullIntegral> {
    if t < s || t >= x.len() {
        return Err(Error::InvalidParameter(format!("bad grid window [{s}, {t}]")));
    }
    if s == t {
        let id = Character::identity(e_basis_for(f, x)?);
        return Ok(FullIntegral { y: id.clone(), raw: id, gap: 0.0 });
    }
    let sys = EffectSystem::build(f, x, s, t)?;
    let mut limit = Vec::with_capacity(sys.e_basis.n_trees());
    let mut gap: f64 = 0.0;
    for &i in sys.e_basis.trees() {
        let forms = sys.forms[i].as_ref().expect("tree one-forms are always built");
        let est = sums_over_levels(&sys.grid, forms, opts)?;
        gap = gap.max(est.gap);
        limit.push(est.value[0]);
    }
    let y = Character::from_tree_values(sys.e_basis.clone(), limit)?;
    Ok(FullIntegral { y, raw: sys.character_at(t - s), gap })
}

/// `t ↦ Y_{0,t}` on the whole grid from the finest compensated sums,
/// started at the identity.
pub fn integral_path(f: &PolynomialOneForm, x: &BranchedRoughPath) -> Result<BranchedRoughPath> {
    let sys = EffectSystem::build(f, x, 0, x.len() - 1)?;
    let values = (0..x.len()).map(|k| sys.character_at(k)).collect();
    BranchedRoughPath::new(x.times().to_vec(), values, x.p())
}

/// The composed one-forms `B_ρ` at `X_s` (index of the `e`-basis; `ε` unused).
pub fn local_forms(f: &PolynomialOneForm, x: &BranchedRoughPath, s: usize) -> Result<(Arc<ForestBasis>, Vec<OneFormRep>)> {
    let e_basis = e_basis_for(f, x)?;
    let d_basis = x.basis().clone();
    let beta = beta_form(&f.lifted(&d_basis), &d_basis, &x.position(s));
    let mut b: Vec<OneFormRep> = vec![OneFormRep::zero(d_basis.clone(), 1); e_basis.len()];
    for rho in 1..e_basis.len() {
        b[rho] = match e_basis.forest(rho).as_tree() {
            Some(tree) => {
                let leaf = beta.component(tree.label() as usize - 1);
                let branches = tree.branches();
                if branches.is_empty() {
                    leaf
                } else {
                    b[e_basis.index_of(&branches).expect("lower degree")].graft(&leaf)?
                }
            }
            None => {
                let factors = e_basis.factors(rho);
                factors[1..].iter().try_fold(b[e_basis.trees()[factors[0]]].clone(), |acc, &k| {
                    acc.mul(&b[e_basis.trees()[k]])
                })?
            }
        };
    }
    Ok((e_basis, b))
}

/// `(Ỹ_{s,t}, ρ) = B_ρ(X_{s,t})`, dense over the `e`-basis with `ε ↦ 1`.
pub fn y_tilde(f: &PolynomialOneForm, x: &BranchedRoughPath, s: usize, t: usize) -> Result<(Arc<ForestBasis>, Vec<f64>)> {
    let (e_basis, b) = local_forms(f, x, s)?;
    let inc = x.increment_idx(s, t);
    let mut out = vec![0.0; e_basis.len()];
    out[0] = 1.0;
    for rho in 1..e_basis.len() {
        out[rho] = b[rho].evaluate_values(inc.forest_values())[0];
    }
    Ok((e_basis, out))
}

/// The one-forms `β_s^ρ(X_s)` of the effects `r ↦ (Y_{s,r}, ρ)` at their
/// starting point, for the trees `ρ` of the `e`-basis.
pub fn effect_forms_at_start(
    f: &PolynomialOneForm,
    x: &BranchedRoughPath,
    s: usize,
) -> Result<(Arc<ForestBasis>, Vec<Option<OneFormRep>>)> {
    let t = (s + 1).min(x.len() - 1);
    if t == s {
        return Err(Error::InvalidParameter("no grid point after s".into()));
    }
    let sys = EffectSystem::build(f, x, s, t)?;
    let out = sys.forms.iter().map(|f| f.as_ref().map(|v| v[0].clone())).collect();
    Ok((sys.e_basis, out))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorRow {
    /// Interval length in grid steps.
    pub scale: usize,
    /// `max |y_t − y_s − β(X_s)(X_{s,t})|` over intervals of this scale.
    pub remainder: f64,
    /// `max_ρ |(Y_{s,t}, ρ) − (Ỹ_{s,t}, ρ)|` over intervals of this scale.
    pub y_error: f64,
    /// Largest `ω(s,t)` among the intervals of this scale.
    pub omega: f64,
}

/// Largest number of grid points used when evaluating `ω` on one interval.
pub const OMEGA_POINTS: usize = 257;

/// `ω(t_a, t_b)` from the grid p-variation, on at most [`OMEGA_POINTS`] points.
pub fn omega_interval(x: &BranchedRoughPath, a: usize, b: usize) -> f64 {
    let span = b - a;
    let stride = span.div_ceil(OMEGA_POINTS - 1).max(1);
    let idx: Vec<usize> = stride_indices(span + 1, stride).into_iter().map(|k| a + k).collect();
    if idx.len() < 2 {
        return 0.0;
    }
    let sub = x.restrict(&idx).expect("increasing indices");
    sub.total_p_variation().powf(x.p())
}

/// Local error table at the given interval lengths (in grid steps), using
/// at most `max_intervals` evenly spread intervals per scale.
pub fn local_error_report(
    f: &PolynomialOneForm,
    x: &BranchedRoughPath,
    scales: &[usize],
    max_intervals: usize,
    opts: &IntegrationOptions,
) -> Result<Vec<ErrorRow>> {
    let span = x.len() - 1;
    let mut rows = Vec::new();
    for &w in scales {
        if w == 0 || w > span {
            return Err(Error::InvalidParameter(format!("scale {w} outside 1..={span}")));
        }
        let count = span / w;
        let step = count.div_ceil(max_intervals.max(1)).max(1);
        let (mut remainder, mut y_error, mut omega) = (0.0f64, 0.0f64, 0.0f64);
        for q in (0..count).step_by(step) {
            let (s, t) = (q * w, (q + 1) * w);
            let full = full_integral(f, x, s, t, opts)?;
            let (_, tilde) = y_tilde(f, x, s, t)?;
            let e_basis = full.y.basis().clone();
            for j in 1..=f.e() as u32 {
                let leaf = e_basis.leaf(j);
                remainder = remainder.max((full.y.value(leaf) - tilde[leaf]).abs());
            }
            for rho in 1..e_basis.len() {
                y_error = y_error.max((full.y.value(rho) - tilde[rho]).abs());
            }
            omega = omega.max(omega_interval(x, s, t));
        }
        rows.push(ErrorRow { scale: w, remainder, y_error, omega });
    }
    Ok(rows)
}
