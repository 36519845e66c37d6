//! Polynomial one-forms `f = (f_1, …, f_d)`, `f_i: ℝ^d → ℝ^e`, the
//! tree-indexed derivatives `f_τ` and the lifted one-form `β`.

use std::collections::BTreeMap;

use num::{BigRational, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::character::Character;
use crate::error::{Error, Result};
use crate::forest::{gl_product, Forest, ForestBasis, Tree};
use crate::scalar::{ratio_from_f64, Scalar};

/// Multivariate polynomial with exact rational coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct Polynomial {
    nvars: usize,
    terms: BTreeMap<Vec<u32>, BigRational>,
    float_terms: Vec<(Vec<u32>, f64)>,
}

impl Polynomial {
    pub fn zero(nvars: usize) -> Polynomial {
        Self::from_terms(nvars, BTreeMap::new())
    }

    pub fn constant(nvars: usize, c: BigRational) -> Polynomial {
        Self::from_terms(nvars, BTreeMap::from([(vec![0; nvars], c)]))
    }

    /// The coordinate function `x_var` (`var` is 1-based).
    pub fn variable(nvars: usize, var: usize) -> Polynomial {
        let mut exps = vec![0; nvars];
        exps[var - 1] = 1;
        Self::from_terms(nvars, BTreeMap::from([(exps, BigRational::from_integer(1.into()))]))
    }

    pub fn from_terms(nvars: usize, terms: BTreeMap<Vec<u32>, BigRational>) -> Polynomial {
        let terms: BTreeMap<_, _> = terms.into_iter().filter(|(_, c)| !c.is_zero()).collect();
        let float_terms = terms.iter().map(|(e, c)| (e.clone(), Scalar::to_f64(c))).collect();
        Polynomial { nvars, terms, float_terms }
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn terms(&self) -> &BTreeMap<Vec<u32>, BigRational> {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn total_degree(&self) -> u32 {
        self.terms.keys().map(|e| e.iter().sum()).max().unwrap_or(0)
    }

    /// `∂/∂x_var` (`var` is 1-based).
    pub fn derivative(&self, var: usize) -> Polynomial {
        let v = var - 1;
        let mut out = BTreeMap::new();
        for (exps, c) in &self.terms {
            if exps[v] == 0 {
                continue;
            }
            let mut e = exps.clone();
            e[v] -= 1;
            let coeff = c * BigRational::from_integer(exps[v].into());
            *out.entry(e).or_insert_with(BigRational::zero) += coeff;
        }
        Self::from_terms(self.nvars, out)
    }

    pub fn add(&self, other: &Polynomial) -> Polynomial {
        let mut out = self.terms.clone();
        for (e, c) in &other.terms {
            *out.entry(e.clone()).or_insert_with(BigRational::zero) += c;
        }
        Self::from_terms(self.nvars, out)
    }

    pub fn scale(&self, c: &BigRational) -> Polynomial {
        Self::from_terms(self.nvars, self.terms.iter().map(|(e, v)| (e.clone(), v * c)).collect())
    }

    pub fn eval_f64(&self, x: &[f64]) -> f64 {
        self.float_terms
            .iter()
            .map(|(e, c)| c * e.iter().zip(x).map(|(&k, xi)| xi.powi(k as i32)).product::<f64>())
            .sum()
    }

    pub fn eval<S: Scalar>(&self, x: &[S]) -> S {
        let mut total = S::zero();
        for (exps, c) in &self.terms {
            let mut term = S::from_ratio(c);
            for (&k, xi) in exps.iter().zip(x) {
                for _ in 0..k {
                    term = term * xi.clone();
                }
            }
            total = total + term;
        }
        total
    }
}

/// `f_i` evaluated coordinatewise: one polynomial per output coordinate.
pub type VectorPolynomial = Vec<Polynomial>;

#[derive(Clone, Debug, PartialEq)]
pub struct PolynomialOneForm {
    d: usize,
    e: usize,
    gamma: f64,
    /// `components[i][k]` is output coordinate `k` of `f_{i+1}`.
    components: Vec<VectorPolynomial>,
}

impl PolynomialOneForm {
    pub fn new(d: usize, e: usize, gamma: f64, components: Vec<VectorPolynomial>) -> Result<Self> {
        if d == 0 || e == 0 {
            return Err(Error::InvalidParameter("d and e must be positive".into()));
        }
        if !(gamma > 1.0) || !gamma.is_finite() {
            return Err(Error::InvalidParameter(format!("gamma must exceed 1, got {gamma}")));
        }
        if components.len() != d || components.iter().any(|c| c.len() != e) {
            return Err(Error::DimensionMismatch(format!("expected {d} components with {e} outputs each")));
        }
        if components.iter().flatten().any(|p| p.nvars() != d) {
            return Err(Error::DimensionMismatch(format!("polynomials must have {d} variables")));
        }
        Ok(PolynomialOneForm { d, e, gamma, components })
    }

    /// `f ≡ 0`.
    pub fn zero(d: usize, e: usize, gamma: f64) -> Result<Self> {
        Self::new(d, e, gamma, vec![vec![Polynomial::zero(d); e]; d])
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn e(&self) -> usize {
        self.e
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// Checks `γ > p`.
    pub fn validate_against(&self, p: f64) -> Result<()> {
        if self.gamma > p {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!("need gamma > p, got gamma = {} and p = {p}", self.gamma)))
        }
    }

    pub fn component(&self, i: u32) -> &VectorPolynomial {
        &self.components[i as usize - 1]
    }

    /// `D^l_{i₁…i_l} f_i`.
    pub fn derivative(&self, i: u32, multi_index: &[u32]) -> VectorPolynomial {
        self.component(i)
            .iter()
            .map(|p| multi_index.iter().fold(p.clone(), |acc, &v| acc.derivative(v as usize)))
            .collect()
    }

    /// `f_{•_i} = f_i`, `f_{[•_{i₁}⋯•_{i_l}]_i} = D^l_{i₁…i_l} f_i`, zero for depth > 2.
    pub fn f_tau(&self, tau: &Tree) -> VectorPolynomial {
        if tau.depth() > 2 {
            return vec![Polynomial::zero(self.d); self.e];
        }
        let idx: Vec<u32> = tau.children().iter().map(Tree::label).collect();
        self.derivative(tau.label(), &idx)
    }

    /// `D^ρ g` for a depth ≤ 1 forest `ρ = •_{i₁}⋯•_{i_l}`.
    fn d_rho(g: &VectorPolynomial, rho: &Forest) -> VectorPolynomial {
        g.iter()
            .map(|p| rho.trees().iter().fold(p.clone(), |acc, t| acc.derivative(t.label() as usize)))
            .collect()
    }

    /// `β(X)(a) = Σ_τ f_τ(x) (a, τ) / σ(τ)` over trees of degree `1..=[p]`.
    pub fn beta_eval<S: Scalar>(&self, x: &[S], a: &Character<S>) -> Vec<S> {
        let basis = a.basis();
        let mut out = vec![S::zero(); self.e];
        for &i in basis.trees() {
            let tau = basis.forest(i).as_tree().expect("tree");
            let value = a.value(i).clone();
            if value.is_zero() {
                continue;
            }
            let sigma = S::from_i64(basis.sigma(i) as i64);
            for (k, p) in self.f_tau(tau).iter().enumerate() {
                out[k] = out[k].clone() + p.eval(x) * value.clone() / sigma.clone();
            }
        }
        out
    }

    /// Precomputed `f_τ / σ(τ)` for every non-vanishing tree of `basis`.
    pub fn lifted(&self, basis: &ForestBasis) -> LiftedOneForm {
        let entries = basis
            .trees()
            .iter()
            .filter_map(|&i| {
                let tau = basis.forest(i).as_tree().expect("tree");
                let f = self.f_tau(tau);
                if f.iter().all(Polynomial::is_zero) {
                    return None;
                }
                let inv_sigma = BigRational::new(1.into(), (basis.sigma(i) as i64).into());
                Some((i, f.iter().map(|p| p.scale(&inv_sigma)).collect()))
            })
            .collect();
        LiftedOneForm { e: self.e, entries }
    }

    /// Taylor side `B = Σ_τ Σ_{ρ ∈ S_d} D^ρ f_τ(x) (X,ρ)(a,τ) / (σ(τ)σ(ρ))`,
    /// with `ρ` ranging over depth ≤ 1 forests with `|ρ| <= [p] − |τ|`.
    pub fn b_sum<S: Scalar>(&self, x: &[S], xst: &Character<S>, a: &Character<S>) -> Vec<S> {
        let basis = a.basis();
        let n = basis.n();
        let mut out = vec![S::zero(); self.e];
        for &ti in basis.trees() {
            let tau = basis.forest(ti).as_tree().expect("tree");
            let f_tau = self.f_tau(tau);
            for ri in 0..basis.len() {
                let rho = basis.forest(ri);
                if rho.depth() > 1 || basis.degree(ri) + tau.degree() > n {
                    continue;
                }
                let weight = S::from_i64((basis.sigma(ti) * basis.sigma(ri)) as i64);
                let scalar = xst.value(ri).clone() * a.value(ti).clone() / weight;
                for (k, p) in Self::d_rho(&f_tau, rho).iter().enumerate() {
                    out[k] = out[k].clone() + p.eval(x) * scalar.clone();
                }
            }
        }
        out
    }

    /// Translation side `C = Σ_τ f_τ(x)/σ(τ) ((X a, τ) − (X, τ))` through the
    /// character product.
    pub fn c_sum_direct<S: Scalar>(&self, x: &[S], xst: &Character<S>, a: &Character<S>) -> Result<Vec<S>> {
        let prod = xst.group_product(a)?;
        let basis = a.basis();
        let mut out = vec![S::zero(); self.e];
        for &ti in basis.trees() {
            let tau = basis.forest(ti).as_tree().expect("tree");
            let diff = (prod.value(ti).clone() - xst.value(ti).clone()) / S::from_i64(basis.sigma(ti) as i64);
            for (k, p) in self.f_tau(tau).iter().enumerate() {
                out[k] = out[k].clone() + p.eval(x) * diff.clone();
            }
        }
        Ok(out)
    }

    /// `C` with `(X a, τ)` expanded through the Grossman–Larson product:
    /// `Σ σ(τ)/(σ(ρ₁)σ(ρ₂)) (ρ₁⋆ρ₂, τ)(X,ρ₁)(a,ρ₂)`, `|ρ₂| >= 1`.
    pub fn c_sum_gl<S: Scalar>(&self, x: &[S], xst: &Character<S>, a: &Character<S>) -> Result<Vec<S>> {
        let basis = a.basis();
        let n = basis.n();
        let f_vals: Vec<Option<(Vec<S>, u64)>> = (0..basis.len())
            .map(|i| {
                basis.forest(i).as_tree().map(|tau| (self.f_tau(tau).iter().map(|p| p.eval(x)).collect(), basis.sigma(i)))
            })
            .collect();
        let mut out = vec![S::zero(); self.e];
        for r1 in 0..basis.len() {
            for r2 in 1..basis.len() {
                if basis.degree(r1) + basis.degree(r2) > n {
                    continue;
                }
                let prod = gl_product(basis.forest(r1), basis.forest(r2))?;
                let base = xst.value(r1).clone() * a.value(r2).clone()
                    / S::from_i64((basis.sigma(r1) * basis.sigma(r2)) as i64);
                for (tau, coeff) in prod.iter() {
                    let Some(ti) = basis.index_of(tau) else { continue };
                    let Some((fv, sigma_tau)) = &f_vals[ti] else { continue };
                    let s_tau = S::from_i64(*sigma_tau as i64);
                    let scalar = base.clone() * s_tau.clone() * S::from_ratio(coeff) / s_tau;
                    for (k, v) in fv.iter().enumerate() {
                        out[k] = out[k].clone() + v.clone() * scalar.clone();
                    }
                }
            }
        }
        Ok(out)
    }

    /// Upper estimate of the Lip(γ−1) norm on a box by grid sampling.
    ///
    /// Takes the entrywise maximum of `|D^k f|` for `k <= m`, `m` the largest
    /// integer below `γ−1`, and the sampled Hölder quotient of `D^m f` with
    /// exponent `γ−1−m`.
    pub fn lip_norm_estimate(&self, gamma_minus_1: f64, bounds: &[(f64, f64)], samples_per_axis: usize) -> Result<f64> {
        if bounds.len() != self.d {
            return Err(Error::DimensionMismatch(format!("box has {} sides for d={}", bounds.len(), self.d)));
        }
        if !(gamma_minus_1 > 0.0) {
            return Err(Error::InvalidParameter("gamma - 1 must be positive".into()));
        }
        let m = (gamma_minus_1.ceil() as usize).saturating_sub(1);
        let holder = gamma_minus_1 - m as f64;
        let points = grid_points(bounds, samples_per_axis.max(2));
        let mut best: f64 = 0.0;
        for i in 1..=self.d as u32 {
            let mut indices: Vec<Vec<u32>> = vec![Vec::new()];
            for order in 0..=m {
                if order > 0 {
                    indices = indices
                        .iter()
                        .flat_map(|idx| {
                            let last = idx.last().copied().unwrap_or(1);
                            (last..=self.d as u32).map(move |v| {
                                let mut w = idx.clone();
                                w.push(v);
                                w
                            })
                        })
                        .collect();
                }
                for idx in &indices {
                    let deriv = self.derivative(i, idx);
                    let values: Vec<Vec<f64>> =
                        points.iter().map(|x| deriv.iter().map(|p| p.eval_f64(x)).collect()).collect();
                    for v in values.iter().flatten() {
                        best = best.max(v.abs());
                    }
                    if order == m {
                        for a in 0..points.len() {
                            for b in a + 1..points.len() {
                                let dist = euclid(&points[a], &points[b]);
                                let diff = values[a]
                                    .iter()
                                    .zip(&values[b])
                                    .map(|(u, v)| (u - v).abs())
                                    .fold(0.0, f64::max);
                                best = best.max(diff / dist.powf(holder));
                            }
                        }
                    }
                }
            }
        }
        Ok(best)
    }

    pub fn from_config(cfg: &OneFormConfig) -> Result<Self> {
        let (d, e) = (cfg.d, cfg.e);
        if cfg.components.len() != d * e {
            return Err(Error::DimensionMismatch(format!(
                "expected {} component lists (d·e), got {}",
                d * e,
                cfg.components.len()
            )));
        }
        let mut components = vec![Vec::with_capacity(e); d];
        for (idx, terms) in cfg.components.iter().enumerate() {
            let mut map: BTreeMap<Vec<u32>, BigRational> = BTreeMap::new();
            for term in terms {
                if term.monomial.len() != d {
                    return Err(Error::DimensionMismatch(format!(
                        "monomial {:?} must have {d} exponents",
                        term.monomial
                    )));
                }
                *map.entry(term.monomial.clone()).or_insert_with(BigRational::zero) += term.coeff.to_ratio()?;
            }
            components[idx / e].push(Polynomial::from_terms(d, map));
        }
        Self::new(d, e, cfg.gamma, components)
    }

    pub fn to_config(&self) -> OneFormConfig {
        OneFormConfig {
            d: self.d,
            e: self.e,
            gamma: self.gamma,
            components: self
                .components
                .iter()
                .flatten()
                .map(|p| {
                    p.terms()
                        .iter()
                        .map(|(e, c)| MonomialTerm { monomial: e.clone(), coeff: Coefficient::Exact(c.to_string()) })
                        .collect()
                })
                .collect(),
        }
    }
}

fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

fn grid_points(bounds: &[(f64, f64)], k: usize) -> Vec<Vec<f64>> {
    let mut pts: Vec<Vec<f64>> = vec![Vec::new()];
    for &(lo, hi) in bounds {
        pts = pts
            .into_iter()
            .flat_map(|p| {
                (0..k).map(move |j| {
                    let mut q = p.clone();
                    q.push(lo + (hi - lo) * j as f64 / (k - 1) as f64);
                    q
                })
            })
            .collect();
    }
    pts
}

/// `f_τ / σ(τ)` for the trees of a basis on which `f_τ` does not vanish.
#[derive(Clone, Debug)]
pub struct LiftedOneForm {
    e: usize,
    entries: Vec<(usize, VectorPolynomial)>,
}

impl LiftedOneForm {
    pub fn e(&self) -> usize {
        self.e
    }

    /// `(forest index, f_τ(x)/σ(τ))` pairs.
    pub fn coefficients_at(&self, x: &[f64]) -> Vec<(usize, Vec<f64>)> {
        self.entries
            .iter()
            .map(|(i, f)| (*i, f.iter().map(|p| p.eval_f64(x)).collect()))
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Coefficient {
    Float(f64),
    /// Decimal integer or fraction such as `"-3/4"`.
    Exact(String),
}

impl Coefficient {
    pub fn to_ratio(&self) -> Result<BigRational> {
        match self {
            Coefficient::Float(x) => {
                ratio_from_f64(*x).ok_or_else(|| Error::Parse(format!("coefficient {x} is not finite")))
            }
            Coefficient::Exact(s) => {
                let parsed: std::result::Result<BigRational, _> = s.trim().parse();
                parsed.map_err(|_| Error::Parse(format!("bad coefficient {s:?}")))
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonomialTerm {
    pub monomial: Vec<u32>,
    pub coeff: Coefficient,
}

/// `components[(i−1)·e + k]` lists the terms of output `k` of `f_i`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OneFormConfig {
    pub d: usize,
    pub e: usize,
    pub gamma: f64,
    pub components: Vec<Vec<MonomialTerm>>,
}

/// Magnitude of the largest rational coefficient.
pub fn max_coefficient(f: &PolynomialOneForm) -> f64 {
    f.components
        .iter()
        .flatten()
        .flat_map(|p| p.terms().values())
        .map(|c| Scalar::to_f64(&c.abs()))
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::ratio;

    fn q(n: i64) -> BigRational {
        ratio(n, 1)
    }

    fn poly(nvars: usize, terms: &[(&[u32], i64)]) -> Polynomial {
        Polynomial::from_terms(nvars, terms.iter().map(|(e, c)| (e.to_vec(), q(*c))).collect())
    }

    fn tree(s: &str) -> Tree {
        Forest::parse(s).unwrap().as_tree().unwrap().clone()
    }

    #[test]
    fn derivative_examples() {
        let f = PolynomialOneForm::new(
            2,
            1,
            3.5,
            vec![vec![poly(2, &[(&[2, 1], 1)])], vec![poly(2, &[(&[1, 0], 3), (&[0, 1], -1)])]],
        )
        .unwrap();
        assert_eq!(f.derivative(1, &[1, 2]), vec![poly(2, &[(&[1, 0], 2)])]);
        assert_eq!(f.derivative(1, &[1, 2]), f.derivative(1, &[2, 1]));
        assert!(f.derivative(2, &[1, 1])[0].is_zero());
    }

    #[test]
    fn f_tau_examples() {
        let f = PolynomialOneForm::new(
            2,
            1,
            3.5,
            vec![vec![poly(2, &[(&[2, 1], 1)])], vec![poly(2, &[(&[0, 3], 1)])]],
        )
        .unwrap();
        assert_eq!(f.f_tau(&tree("1")), f.component(1).clone());
        assert_eq!(f.f_tau(&tree("1(2)")), f.derivative(1, &[2]));
        assert_eq!(f.f_tau(&tree("1(1 2)")), f.derivative(1, &[1, 2]));
        assert!(f.f_tau(&tree("1(1(1))"))[0].is_zero());
    }

    #[test]
    fn beta_examples() {
        let basis = ForestBasis::shared(1, 2).unwrap();
        let f = PolynomialOneForm::new(1, 1, 2.5, vec![vec![Polynomial::variable(1, 1)]]).unwrap();
        let id = Character::<f64>::identity(basis.clone());
        assert_eq!(f.beta_eval(&[0.7], &id), vec![0.0]);
        let (h, qv, x) = (0.3, -0.8, 1.7);
        let a = Character::from_tree_map(
            basis.clone(),
            [(&Forest::parse("1").unwrap(), h), (&Forest::parse("1(1)").unwrap(), qv)],
        )
        .unwrap();
        assert!((f.beta_eval(&[x], &a)[0] - (x * h + qv)).abs() < 1e-15);
        let c = PolynomialOneForm::new(1, 1, 2.5, vec![vec![Polynomial::constant(1, ratio(3, 2))]]).unwrap();
        assert!((c.beta_eval(&[x], &a)[0] - 1.5 * h).abs() < 1e-15);
    }

    #[test]
    fn lip_norm_examples() {
        let lin = PolynomialOneForm::new(
            2,
            2,
            2.5,
            vec![
                vec![Polynomial::variable(2, 1), Polynomial::zero(2)],
                vec![Polynomial::zero(2), Polynomial::variable(2, 2)],
            ],
        )
        .unwrap();
        let small = lin.lip_norm_estimate(1.5, &[(-1.0, 1.0), (-1.0, 1.0)], 9).unwrap();
        assert!(small >= 1.0);
        let big = lin.lip_norm_estimate(1.5, &[(-2.0, 2.0), (-2.0, 2.0)], 17).unwrap();
        assert!(big >= small);
        let c = PolynomialOneForm::new(1, 1, 2.0, vec![vec![Polynomial::constant(1, ratio(-5, 2))]]).unwrap();
        assert_eq!(c.lip_norm_estimate(1.0, &[(0.0, 1.0)], 5).unwrap(), 2.5);
    }

    #[test]
    fn config_roundtrip() {
        let json = r#"{"d":1,"e":1,"gamma":2.5,"components":[[{"monomial":[2],"coeff":"3/4"},{"monomial":[0],"coeff":-1.5}]]}"#;
        let cfg: OneFormConfig = serde_json::from_str(json).unwrap();
        let f = PolynomialOneForm::from_config(&cfg).unwrap();
        assert_eq!(f.component(1)[0], Polynomial::from_terms(1, [(vec![2], ratio(3, 4)), (vec![0], ratio(-3, 2))].into()));
        assert_eq!(PolynomialOneForm::from_config(&f.to_config()).unwrap(), f);
        assert!(f.validate_against(2.0).is_ok());
        assert!(f.validate_against(2.5).is_err());
    }
}
