//! Truncated characters on the forest algebra.
//!
//! A [`Character`] stores one value per tree of degree `<= n`; forest values
//! are the products of their tree values and are cached densely alongside,
//! indexed like the owning [`ForestBasis`].

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forest::{Forest, ForestBasis};
use crate::scalar::Scalar;

#[derive(Clone, Debug)]
pub struct Character<S: Scalar = f64> {
    basis: Arc<ForestBasis>,
    trees: Vec<S>,
    forests: Vec<S>,
}

impl<S: Scalar> PartialEq for Character<S> {
    fn eq(&self, other: &Self) -> bool {
        self.basis.d() == other.basis.d()
            && self.basis.n() == other.basis.n()
            && self.trees == other.trees
    }
}

/// Fills every non-tree forest value (and `ε`) from the tree values.
fn fill_forests<S: Scalar>(basis: &ForestBasis, trees: &[S]) -> Vec<S> {
    (0..basis.len())
        .map(|i| match basis.tree_pos(i) {
            Some(k) => trees[k].clone(),
            None => basis
                .factors(i)
                .iter()
                .fold(S::one(), |acc, &k| acc * trees[k].clone()),
        })
        .collect()
}

impl<S: Scalar> Character<S> {
    pub fn identity(basis: Arc<ForestBasis>) -> Self {
        let trees = vec![S::zero(); basis.n_trees()];
        Self::from_tree_values(basis, trees).expect("sizes match")
    }

    /// Tree values in the order of [`ForestBasis::trees`].
    pub fn from_tree_values(basis: Arc<ForestBasis>, trees: Vec<S>) -> Result<Self> {
        if trees.len() != basis.n_trees() {
            return Err(Error::DimensionMismatch(format!(
                "expected {} tree values, got {}",
                basis.n_trees(),
                trees.len()
            )));
        }
        let forests = fill_forests(&basis, &trees);
        Ok(Character { basis, trees, forests })
    }

    /// Builds from `(forest, value)` pairs; every forest must be a tree of
    /// the basis, missing trees default to zero.
    pub fn from_tree_map<'a, I>(basis: Arc<ForestBasis>, values: I) -> Result<Self>
    where
        I: IntoIterator<Item = (&'a Forest, S)>,
    {
        let mut trees = vec![S::zero(); basis.n_trees()];
        for (f, v) in values {
            let pos = basis
                .index_of(f)
                .and_then(|i| basis.tree_pos(i))
                .ok_or_else(|| Error::DimensionMismatch(format!("{f} is not a tree of the basis")))?;
            trees[pos] = v;
        }
        Self::from_tree_values(basis, trees)
    }

    pub fn basis(&self) -> &Arc<ForestBasis> {
        &self.basis
    }

    pub fn d(&self) -> usize {
        self.basis.d()
    }

    /// Truncation level `[p]`.
    pub fn p_floor(&self) -> usize {
        self.basis.n()
    }

    pub fn tree_values(&self) -> &[S] {
        &self.trees
    }

    /// Dense forest values, indexed like the basis (`ε` at 0).
    pub fn forest_values(&self) -> &[S] {
        &self.forests
    }

    /// Value on the basis forest with index `i`.
    pub fn value(&self, i: usize) -> &S {
        &self.forests[i]
    }

    /// `(a, ρ)`; zero above the truncation or for labels outside `1..=d`.
    pub fn evaluate(&self, rho: &Forest) -> S {
        match self.basis.index_of(rho) {
            Some(i) => self.forests[i].clone(),
            None => S::zero(),
        }
    }

    /// Level-one components `(a, •_i)`, `i = 1..=d`.
    pub fn level_one(&self) -> Vec<S> {
        (1..=self.d() as u32).map(|i| self.forests[self.basis.leaf(i)].clone()).collect()
    }

    fn check_compatible(&self, other: &Self) -> Result<()> {
        if self.d() != other.d() || self.p_floor() != other.p_floor() {
            return Err(Error::DimensionMismatch(format!(
                "characters over (d={}, [p]={}) and (d={}, [p]={})",
                self.d(),
                self.p_floor(),
                other.d(),
                other.p_floor()
            )));
        }
        Ok(())
    }

    /// `(ab, ρ) = Σ_{Δρ} (a, ρ₍₁₎)(b, ρ₍₂₎)`.
    pub fn group_product(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        let basis = &self.basis;
        let trees = basis
            .trees()
            .iter()
            .map(|&i| {
                basis.coproduct(i).iter().fold(S::zero(), |acc, &(l, r, m)| {
                    acc + S::from_i64(m as i64) * self.forests[l].clone() * other.forests[r].clone()
                })
            })
            .collect();
        Self::from_tree_values(self.basis.clone(), trees)
    }

    /// Solves `(a a⁻¹, τ) = 0` degree by degree.
    pub fn inverse(&self) -> Self {
        let basis = &self.basis;
        let mut inv: Vec<S> = vec![S::zero(); basis.len()];
        inv[0] = S::one();
        let mut trees = vec![S::zero(); basis.n_trees()];
        for i in 1..basis.len() {
            match basis.tree_pos(i) {
                Some(k) => {
                    let rest = basis.coproduct(i).iter().filter(|&&(_, r, _)| r != i).fold(
                        S::zero(),
                        |acc, &(l, r, m)| acc + S::from_i64(m as i64) * self.forests[l].clone() * inv[r].clone(),
                    );
                    inv[i] = -rest;
                    trees[k] = inv[i].clone();
                }
                None => {
                    inv[i] = basis.factors(i).iter().fold(S::one(), |acc, &k| acc * trees[k].clone());
                }
            }
        }
        Character { basis: self.basis.clone(), trees, forests: inv }
    }

    /// `max_{1 <= |ρ| <= n} |(a, ρ)|^{1/|ρ|}`.
    pub fn norm(&self) -> f64 {
        (1..self.basis.len())
            .map(|i| self.forests[i].abs_f64().powf(1.0 / self.basis.degree(i) as f64))
            .fold(0.0, f64::max)
    }

    /// Dilation `(a, ρ) ↦ λ^{|ρ|} (a, ρ)`.
    pub fn dilate(&self, lambda: &S) -> Self {
        let trees = self
            .basis
            .trees()
            .iter()
            .zip(&self.trees)
            .map(|(&i, v)| {
                let mut scale = S::one();
                for _ in 0..self.basis.degree(i) {
                    scale = scale * lambda.clone();
                }
                scale * v.clone()
            })
            .collect();
        Self::from_tree_values(self.basis.clone(), trees).expect("sizes match")
    }

    pub fn to_f64(&self) -> Character<f64> {
        Character {
            basis: self.basis.clone(),
            trees: self.trees.iter().map(Scalar::to_f64).collect(),
            forests: self.forests.iter().map(Scalar::to_f64).collect(),
        }
    }

    pub fn to_json(&self) -> CharacterJson {
        CharacterJson {
            d: self.d(),
            p_floor: self.p_floor(),
            trees: self
                .basis
                .trees()
                .iter()
                .zip(&self.trees)
                .map(|(&i, v)| TreeValue { forest: self.basis.forest(i).encoding(), value: v.to_f64() })
                .collect(),
        }
    }
}

impl Character<f64> {
    pub fn from_json(json: &CharacterJson) -> Result<Self> {
        let basis = ForestBasis::shared(json.d, json.p_floor)?;
        let parsed = json
            .trees
            .iter()
            .map(|tv| Ok((Forest::parse(&tv.forest)?, tv.value)))
            .collect::<Result<Vec<_>>>()?;
        Self::from_tree_map(basis, parsed.iter().map(|(f, v)| (f, *v)))
    }

    /// Largest absolute difference over all forests.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.forests
            .iter()
            .zip(&other.forests)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TreeValue {
    pub forest: String,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CharacterJson {
    pub d: usize,
    pub p_floor: usize,
    pub trees: Vec<TreeValue>,
}

/// Whether a dense forest-indexed map satisfies `(a, ε) = 1` and
/// `(a, ρ₁ρ₂) = (a, ρ₁)(a, ρ₂)` within `tol` (`tol = 0` is exact).
pub fn is_character<S: Scalar>(basis: &ForestBasis, values: &[S], tol: f64) -> bool {
    if values.len() != basis.len() || !crate::scalar::approx_eq(&values[0], &S::one(), tol) {
        return false;
    }
    for i in 0..basis.len() {
        for j in 0..basis.len() {
            if let Some(k) = basis.product(i, j) {
                let prod = values[i].clone() * values[j].clone();
                if !crate::scalar::approx_eq(&values[k], &prod, tol) {
                    return false;
                }
            }
        }
    }
    true
}
