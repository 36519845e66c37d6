//! Labelled non-planar rooted trees and forests.
//!
//! Trees are stored canonically: children are sorted by the total order
//! `(degree, label, children)`, so structural equality is isomorphism of
//! labelled non-planar trees. A forest is a sorted multiset of trees; the
//! empty forest is the unit `ε`.
//!
//! Text encoding: `•_i` is `"i"`, `[ρ]_i` is `"i(ρ)"` and a forest is the
//! space-separated list of its trees in canonical order, e.g. `"1 2(1)"`.
//! The empty forest encodes as the empty string.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::sync::{Arc, Mutex, OnceLock};

use num::{BigRational, One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::scalar::Scalar;
use crate::MAX_DEGREE;

#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Tree {
    label: u32,
    degree: usize,
    children: Vec<Tree>,
}

impl Tree {
    pub fn leaf(label: u32) -> Tree {
        Tree { label, degree: 1, children: Vec::new() }
    }

    /// Builds `[children]_label`, sorting the children into canonical order.
    pub fn new(label: u32, mut children: Vec<Tree>) -> Tree {
        children.sort();
        let degree = 1 + children.iter().map(|c| c.degree).sum::<usize>();
        Tree { label, degree, children }
    }

    pub fn label(&self) -> u32 {
        self.label
    }

    pub fn children(&self) -> &[Tree] {
        &self.children
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn depth(&self) -> usize {
        1 + self.children.iter().map(Tree::depth).max().unwrap_or(0)
    }

    pub fn max_label(&self) -> u32 {
        self.children.iter().map(Tree::max_label).fold(self.label, u32::max)
    }

    /// The forest obtained by removing the root.
    pub fn branches(&self) -> Forest {
        Forest { trees: self.children.clone() }
    }

    pub fn encoding(&self) -> String {
        if self.children.is_empty() {
            self.label.to_string()
        } else {
            let inner: Vec<String> = self.children.iter().map(Tree::encoding).collect();
            format!("{}({})", self.label, inner.join(" "))
        }
    }
}

impl Ord for Tree {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree
            .cmp(&other.degree)
            .then(self.label.cmp(&other.label))
            .then_with(|| self.children.cmp(&other.children))
    }
}

impl PartialOrd for Tree {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Tree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.encoding())
    }
}

/// A tree as given by a caller, children in arbitrary (planar) order.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawTree {
    pub label: u32,
    #[serde(default)]
    pub children: Vec<RawTree>,
}

impl RawTree {
    pub fn leaf(label: u32) -> RawTree {
        RawTree { label, children: Vec::new() }
    }

    pub fn node(label: u32, children: Vec<RawTree>) -> RawTree {
        RawTree { label, children }
    }
}

/// Canonical form of a raw tree with labels in `1..=d`.
pub fn canonicalize(raw: &RawTree, d: usize) -> Result<Tree> {
    if raw.label == 0 || raw.label as usize > d {
        return Err(Error::LabelOutOfRange { label: raw.label, d });
    }
    let children = raw.children.iter().map(|c| canonicalize(c, d)).collect::<Result<Vec<_>>>()?;
    Ok(Tree::new(raw.label, children))
}

#[derive(Clone, PartialEq, Eq, Hash, Debug, Default)]
pub struct Forest {
    trees: Vec<Tree>,
}

impl Forest {
    pub fn empty() -> Forest {
        Forest { trees: Vec::new() }
    }

    pub fn from_trees(mut trees: Vec<Tree>) -> Forest {
        trees.sort();
        Forest { trees }
    }

    pub fn leaf(label: u32) -> Forest {
        Forest { trees: vec![Tree::leaf(label)] }
    }

    pub fn trees(&self) -> &[Tree] {
        &self.trees
    }

    pub fn is_empty(&self) -> bool {
        self.trees.is_empty()
    }

    pub fn is_tree(&self) -> bool {
        self.trees.len() == 1
    }

    pub fn as_tree(&self) -> Option<&Tree> {
        if self.is_tree() {
            self.trees.first()
        } else {
            None
        }
    }

    pub fn degree(&self) -> usize {
        self.trees.iter().map(Tree::degree).sum()
    }

    pub fn depth(&self) -> usize {
        self.trees.iter().map(Tree::depth).max().unwrap_or(0)
    }

    pub fn max_label(&self) -> u32 {
        self.trees.iter().map(Tree::max_label).max().unwrap_or(0)
    }

    /// Commutative product (juxtaposition) of forests.
    pub fn mul(&self, other: &Forest) -> Forest {
        let mut trees = Vec::with_capacity(self.trees.len() + other.trees.len());
        let (mut i, mut j) = (0, 0);
        while i < self.trees.len() && j < other.trees.len() {
            if self.trees[i] <= other.trees[j] {
                trees.push(self.trees[i].clone());
                i += 1;
            } else {
                trees.push(other.trees[j].clone());
                j += 1;
            }
        }
        trees.extend_from_slice(&self.trees[i..]);
        trees.extend_from_slice(&other.trees[j..]);
        Forest { trees }
    }

    pub fn encoding(&self) -> String {
        let parts: Vec<String> = self.trees.iter().map(Tree::encoding).collect();
        parts.join(" ")
    }

    /// Parses the canonical text encoding; the input need not be sorted.
    pub fn parse(s: &str) -> Result<Forest> {
        let tokens = tokenize(s)?;
        let mut pos = 0;
        let trees = parse_forest(&tokens, &mut pos)?;
        if pos != tokens.len() {
            return Err(Error::Parse(format!("unexpected trailing input in {s:?}")));
        }
        Ok(Forest::from_trees(trees))
    }
}

impl Ord for Forest {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree().cmp(&other.degree()).then_with(|| self.trees.cmp(&other.trees))
    }
}

impl PartialOrd for Forest {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl From<Tree> for Forest {
    fn from(t: Tree) -> Forest {
        Forest { trees: vec![t] }
    }
}

impl fmt::Display for Forest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_empty() {
            f.write_str("ε")
        } else {
            f.write_str(&self.encoding())
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Num(u32),
    Open,
    Close,
}

fn tokenize(s: &str) -> Result<Vec<Token>> {
    let mut out = Vec::new();
    let mut chars = s.chars().peekable();
    while let Some(&c) = chars.peek() {
        match c {
            '(' => {
                out.push(Token::Open);
                chars.next();
            }
            ')' => {
                out.push(Token::Close);
                chars.next();
            }
            c if c.is_whitespace() => {
                chars.next();
            }
            c if c.is_ascii_digit() => {
                let mut n: u32 = 0;
                while let Some(&c) = chars.peek() {
                    let Some(digit) = c.to_digit(10) else { break };
                    n = n
                        .checked_mul(10)
                        .and_then(|n| n.checked_add(digit))
                        .ok_or_else(|| Error::Parse(format!("label too large in {s:?}")))?;
                    chars.next();
                }
                out.push(Token::Num(n));
            }
            other => return Err(Error::Parse(format!("unexpected character {other:?} in {s:?}"))),
        }
    }
    Ok(out)
}

fn parse_forest(tokens: &[Token], pos: &mut usize) -> Result<Vec<Tree>> {
    let mut trees = Vec::new();
    while let Some(Token::Num(label)) = tokens.get(*pos) {
        *pos += 1;
        if *label == 0 {
            return Err(Error::Parse("labels start at 1".into()));
        }
        let children = if tokens.get(*pos) == Some(&Token::Open) {
            *pos += 1;
            let inner = parse_forest(tokens, pos)?;
            if tokens.get(*pos) != Some(&Token::Close) {
                return Err(Error::Parse("unbalanced parenthesis".into()));
            }
            *pos += 1;
            if inner.is_empty() {
                return Err(Error::Parse("empty child list".into()));
            }
            inner
        } else {
            Vec::new()
        };
        trees.push(Tree::new(*label, children));
    }
    Ok(trees)
}

/// Trees and forests of degree `1..=n` over labels `1..=d`.
#[derive(Clone, Debug)]
pub struct Enumeration {
    /// All non-empty forests, canonical order.
    pub forests: Vec<Forest>,
    /// The trees among them, canonical order.
    pub trees: Vec<Tree>,
}

/// Exhaustive, duplicate-free enumeration of `F_d^n` and `T_d^n` (`n <= 3`).
pub fn enumerate_forests(d: usize, n: usize) -> Result<Enumeration> {
    if d == 0 {
        return Err(Error::InvalidParameter("d must be at least 1".into()));
    }
    if n == 0 {
        return Err(Error::InvalidParameter("n must be at least 1".into()));
    }
    if n > MAX_DEGREE {
        return Err(Error::DegreeCap { degree: n, cap: MAX_DEGREE });
    }
    let by_degree = forests_by_degree(d, n);
    let forests: Vec<Forest> = by_degree.into_iter().skip(1).flatten().collect();
    let trees = forests.iter().filter_map(|f| f.as_tree().cloned()).collect();
    Ok(Enumeration { forests, trees })
}

/// `out[k]` lists the forests of degree exactly `k`, canonically sorted.
fn forests_by_degree(d: usize, n: usize) -> Vec<Vec<Forest>> {
    let mut forests: Vec<Vec<Forest>> = vec![vec![Forest::empty()]];
    let mut trees: Vec<Vec<Tree>> = vec![Vec::new()];
    for k in 1..=n {
        let mut tk = Vec::new();
        for rho in &forests[k - 1] {
            for label in 1..=d as u32 {
                tk.push(Tree::new(label, rho.trees.clone()));
            }
        }
        tk.sort();
        tk.dedup();
        trees.push(tk);
        let mut fk = BTreeSet::new();
        for j in 1..=k {
            for t in &trees[j] {
                for rest in &forests[k - j] {
                    fk.insert(rest.mul(&Forest::from(t.clone())));
                }
            }
        }
        forests.push(fk.into_iter().collect());
    }
    forests
}

fn factorial(n: usize) -> u64 {
    (1..=n as u64).product()
}

/// Symmetry factor: `σ(τ₁^{n₁}⋯τ_l^{n_l}) = Π n_j! σ(τ_j)^{n_j}` with
/// `σ([ρ]_i) = σ(ρ)`; `σ(ε) = σ(•_i) = 1`.
pub fn symmetry_factor(rho: &Forest) -> u64 {
    sigma_of_trees(&rho.trees)
}

pub fn tree_symmetry_factor(tau: &Tree) -> u64 {
    sigma_of_trees(&tau.children)
}

fn sigma_of_trees(trees: &[Tree]) -> u64 {
    let mut out = 1u64;
    let mut i = 0;
    while i < trees.len() {
        let mut j = i;
        while j < trees.len() && trees[j] == trees[i] {
            j += 1;
        }
        let mult = j - i;
        out *= factorial(mult) * tree_symmetry_factor(&trees[i]).pow(mult as u32);
        i = j;
    }
    out
}

/// Tree factorial `τ! = |τ| Π τ_k!` over the branches `τ_k` of the root.
pub fn tree_factorial(tau: &Tree) -> u64 {
    tau.degree as u64 * tau.children.iter().map(tree_factorial).product::<u64>()
}

/// Vertex labels of a tree, root first.
pub fn vertex_labels(tau: &Tree) -> Vec<u32> {
    let mut out = vec![tau.label];
    for c in &tau.children {
        out.extend(vertex_labels(c));
    }
    out
}

/// `[ρ]_i`: graft every root of `ρ` onto a new root labelled `i`.
pub fn graft_root(rho: &Forest, label: u32) -> Tree {
    Tree::new(label, rho.trees.clone())
}

/// `ρ ≻ τ`: graft every root of `ρ` onto the root of `τ`.
pub fn graft_onto(rho: &Forest, tau: &Tree) -> Tree {
    let mut children = tau.children.clone();
    children.extend(rho.trees.iter().cloned());
    Tree::new(tau.label, children)
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct CoproductTerm {
    pub left: Forest,
    pub right: Forest,
    pub mult: u64,
}

/// Full admissible-cut coproduct, unit terms included.
///
/// Left factors are the pruned branches, right factors the trunks, so that
/// `(ab, ρ) = Σ (a, ρ₍₁₎)(b, ρ₍₂₎)` is the product of increments over
/// consecutive intervals.
pub fn coproduct(rho: &Forest) -> Result<Vec<CoproductTerm>> {
    if rho.degree() > MAX_DEGREE {
        return Err(Error::DegreeCap { degree: rho.degree(), cap: MAX_DEGREE });
    }
    Ok(coproduct_unchecked(rho))
}

pub(crate) fn coproduct_unchecked(rho: &Forest) -> Vec<CoproductTerm> {
    let mut acc: BTreeMap<(Forest, Forest), u64> = BTreeMap::new();
    acc.insert((Forest::empty(), Forest::empty()), 1);
    for tree in &rho.trees {
        let factor = tree_cuts(tree);
        let mut next = BTreeMap::new();
        for ((l1, r1), m1) in &acc {
            for ((l2, r2), m2) in &factor {
                *next.entry((l1.mul(l2), r1.mul(r2))).or_insert(0) += m1 * m2;
            }
        }
        acc = next;
    }
    acc.into_iter()
        .map(|((left, right), mult)| CoproductTerm { left, right, mult })
        .collect()
}

struct Flat {
    labels: Vec<u32>,
    parent: Vec<Option<usize>>,
    children: Vec<Vec<usize>>,
}

fn flatten(tree: &Tree) -> Flat {
    fn walk(t: &Tree, parent: Option<usize>, flat: &mut Flat) {
        let id = flat.labels.len();
        flat.labels.push(t.label);
        flat.parent.push(parent);
        flat.children.push(Vec::new());
        if let Some(p) = parent {
            flat.children[p].push(id);
        }
        for c in &t.children {
            walk(c, Some(id), flat);
        }
    }
    let mut flat = Flat { labels: Vec::new(), parent: Vec::new(), children: Vec::new() };
    walk(tree, None, &mut flat);
    flat
}

fn rebuild(flat: &Flat, v: usize, cut: u64) -> Tree {
    let children = flat.children[v]
        .iter()
        .filter(|&&c| cut & (1 << c) == 0)
        .map(|&c| rebuild(flat, c, cut))
        .collect();
    Tree::new(flat.labels[v], children)
}

/// Admissible cuts of one tree, by brute force over edge subsets. Edge `v`
/// joins vertex `v` to its parent; a subset is admissible when no chosen
/// vertex is a proper descendant of another chosen vertex.
fn tree_cuts(tree: &Tree) -> BTreeMap<(Forest, Forest), u64> {
    let flat = flatten(tree);
    let n = flat.labels.len();
    assert!(n < 64, "tree too large for edge-subset enumeration");
    let mut out = BTreeMap::new();
    out.insert((Forest::from(tree.clone()), Forest::empty()), 1);
    for mask in 0u64..(1u64 << (n - 1)) {
        let cut = mask << 1;
        let admissible = (1..n).filter(|&v| cut & (1 << v) != 0).all(|v| {
            let mut a = flat.parent[v];
            while let Some(u) = a {
                if cut & (1 << u) != 0 {
                    return false;
                }
                a = flat.parent[u];
            }
            true
        });
        if !admissible {
            continue;
        }
        let pruned = Forest::from_trees(
            (1..n).filter(|&v| cut & (1 << v) != 0).map(|v| rebuild(&flat, v, cut)).collect(),
        );
        let trunk = Forest::from(rebuild(&flat, 0, cut));
        *out.entry((pruned, trunk)).or_insert(0) += 1;
    }
    out
}

/// Finite linear combination of forests; zero coefficients are never stored.
#[derive(Clone, Debug, PartialEq)]
pub struct ForestLinComb<S: Scalar> {
    terms: BTreeMap<Forest, S>,
}

impl<S: Scalar> Default for ForestLinComb<S> {
    fn default() -> Self {
        ForestLinComb { terms: BTreeMap::new() }
    }
}

impl<S: Scalar> ForestLinComb<S> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn single(rho: Forest, c: S) -> Self {
        let mut out = Self::new();
        out.add_term(rho, c);
        out
    }

    pub fn add_term(&mut self, rho: Forest, c: S) {
        let sum = self.coefficient(&rho) + c;
        if sum.is_zero() {
            self.terms.remove(&rho);
        } else {
            self.terms.insert(rho, sum);
        }
    }

    pub fn coefficient(&self, rho: &Forest) -> S {
        self.terms.get(rho).cloned().unwrap_or_else(S::zero)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Forest, &S)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn scaled(&self, c: &S) -> Self {
        let mut out = Self::new();
        for (k, v) in &self.terms {
            out.add_term(k.clone(), v.clone() * c.clone());
        }
        out
    }

    pub fn add(&mut self, other: &Self) {
        for (k, v) in &other.terms {
            self.add_term(k.clone(), v.clone());
        }
    }
}

/// Grossman–Larson product `ρ₁ ⋆ ρ₂`.
///
/// The structure constants `(ρ₁⋆ρ₂, τ)` are the unique solution of the
/// duality identity
/// `Σ_{Δτ} (a,τ₍₁₎)(b,τ₍₂₎) = Σ σ(τ)/(σ(ρ₁)σ(ρ₂)) (ρ₁⋆ρ₂,τ)(a,ρ₁)(b,ρ₂)`
/// for all characters `a`, `b`. Forests are in bijection with monomials in
/// the tree values of a character, so matching the coefficient of
/// `(a,ρ₁)(b,ρ₂)` for every candidate `τ` gives a square system which is
/// solved exactly.
pub fn gl_product(rho1: &Forest, rho2: &Forest) -> Result<ForestLinComb<BigRational>> {
    let n = rho1.degree() + rho2.degree();
    if n > MAX_DEGREE {
        return Err(Error::DegreeCap { degree: n, cap: MAX_DEGREE });
    }
    if n == 0 {
        return Ok(ForestLinComb::single(Forest::empty(), BigRational::one()));
    }
    let d = rho1.max_label().max(rho2.max_label()) as usize;
    let candidates: Vec<Forest> = forests_by_degree(d, n).swap_remove(n);
    gl_solve(rho1, rho2, &candidates)
}

fn gl_solve(
    rho1: &Forest,
    rho2: &Forest,
    candidates: &[Forest],
) -> Result<ForestLinComb<BigRational>> {
    let s1 = symmetry_factor(rho1) as i64;
    let s2 = symmetry_factor(rho2) as i64;
    let m = candidates.len();
    let mut matrix = vec![vec![BigRational::zero(); m]; m];
    let mut rhs = vec![BigRational::zero(); m];
    for (row, tau) in candidates.iter().enumerate() {
        // equation: coefficient of the monomial (a,ρ₁)(b,ρ₂) in the τ-identity
        let weight = BigRational::from_i64(symmetry_factor(tau) as i64) / BigRational::from_i64(s1 * s2);
        matrix[row][row] = weight;
        let mult: u64 = coproduct_unchecked(tau)
            .into_iter()
            .filter(|t| &t.left == rho1 && &t.right == rho2)
            .map(|t| t.mult)
            .sum();
        rhs[row] = BigRational::from_i64(mult as i64);
    }
    let x = linalg::solve_unique(&matrix, &rhs)?;
    let mut out = ForestLinComb::new();
    for (tau, c) in candidates.iter().zip(x) {
        out.add_term(tau.clone(), c);
    }
    Ok(out)
}

/// Bilinear extension of [`gl_product`].
pub fn gl_product_lin(
    a: &ForestLinComb<BigRational>,
    b: &ForestLinComb<BigRational>,
) -> Result<ForestLinComb<BigRational>> {
    let mut out = ForestLinComb::new();
    for (r1, c1) in a.iter() {
        for (r2, c2) in b.iter() {
            let prod = gl_product(r1, r2)?;
            out.add(&prod.scaled(&(c1.clone() * c2.clone())));
        }
    }
    Ok(out)
}

/// Indexed view of `F_d^n ∪ {ε}` with precomputed structure tables.
///
/// Index 0 is always `ε`; forests are sorted canonically (so by degree).
#[derive(Clone, Debug)]
pub struct ForestBasis {
    d: usize,
    n: usize,
    forests: Vec<Forest>,
    index: HashMap<Forest, usize>,
    degree: Vec<usize>,
    sigma: Vec<u64>,
    trees: Vec<usize>,
    tree_pos: Vec<Option<usize>>,
    factors: Vec<Vec<usize>>,
    coproduct: Vec<Vec<(usize, usize, u64)>>,
    product: Vec<Vec<Option<usize>>>,
    graft: Vec<Vec<Option<usize>>>,
    graft_root: Vec<Vec<Option<usize>>>,
    degree_start: Vec<usize>,
}

impl ForestBasis {
    pub fn new(d: usize, n: usize) -> Result<ForestBasis> {
        if d == 0 {
            return Err(Error::InvalidParameter("d must be at least 1".into()));
        }
        if n == 0 || n > MAX_DEGREE {
            return Err(Error::DegreeCap { degree: n, cap: MAX_DEGREE });
        }
        let by_degree = forests_by_degree(d, n);
        let mut degree_start = Vec::with_capacity(n + 2);
        let mut forests = Vec::new();
        for layer in by_degree {
            degree_start.push(forests.len());
            forests.extend(layer);
        }
        degree_start.push(forests.len());
        let index: HashMap<Forest, usize> =
            forests.iter().enumerate().map(|(i, f)| (f.clone(), i)).collect();
        let degree: Vec<usize> = forests.iter().map(Forest::degree).collect();
        let sigma = forests.iter().map(symmetry_factor).collect();
        let trees: Vec<usize> = (0..forests.len()).filter(|&i| forests[i].is_tree()).collect();
        let mut tree_pos = vec![None; forests.len()];
        for (k, &i) in trees.iter().enumerate() {
            tree_pos[i] = Some(k);
        }
        let factors = forests
            .iter()
            .map(|f| {
                f.trees()
                    .iter()
                    .map(|t| tree_pos[index[&Forest::from(t.clone())]].expect("factor is a tree"))
                    .collect()
            })
            .collect();
        let coproduct = forests
            .iter()
            .map(|f| {
                coproduct_unchecked(f)
                    .into_iter()
                    .map(|t| (index[&t.left], index[&t.right], t.mult))
                    .collect()
            })
            .collect();
        let lookup = |f: Forest| -> Option<usize> {
            if f.degree() <= n {
                index.get(&f).copied()
            } else {
                None
            }
        };
        let product = forests
            .iter()
            .map(|a| forests.iter().map(|b| lookup(a.mul(b))).collect())
            .collect();
        let graft = forests
            .iter()
            .map(|rho| {
                trees
                    .iter()
                    .map(|&t| lookup(Forest::from(graft_onto(rho, forests[t].as_tree().unwrap()))))
                    .collect()
            })
            .collect();
        let graft_root = forests
            .iter()
            .map(|rho| (1..=d as u32).map(|i| lookup(Forest::from(graft_root(rho, i)))).collect())
            .collect();
        Ok(ForestBasis {
            d,
            n,
            forests,
            index,
            degree,
            sigma,
            trees,
            tree_pos,
            factors,
            coproduct,
            product,
            graft,
            graft_root,
            degree_start,
        })
    }

    /// Process-wide shared basis for `(d, n)`; built once, then cloned cheaply.
    pub fn shared(d: usize, n: usize) -> Result<Arc<ForestBasis>> {
        static CACHE: OnceLock<Mutex<HashMap<(usize, usize), Arc<ForestBasis>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        if let Some(b) = cache.lock().expect("basis cache poisoned").get(&(d, n)) {
            return Ok(b.clone());
        }
        let built = Arc::new(ForestBasis::new(d, n)?);
        let mut guard = cache.lock().expect("basis cache poisoned");
        Ok(guard.entry((d, n)).or_insert(built).clone())
    }

    pub fn d(&self) -> usize {
        self.d
    }

    /// Truncation level.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.forests.len()
    }

    pub fn is_empty(&self) -> bool {
        self.forests.is_empty()
    }

    pub fn forests(&self) -> &[Forest] {
        &self.forests
    }

    pub fn forest(&self, i: usize) -> &Forest {
        &self.forests[i]
    }

    pub fn index_of(&self, f: &Forest) -> Option<usize> {
        self.index.get(f).copied()
    }

    pub fn degree(&self, i: usize) -> usize {
        self.degree[i]
    }

    pub fn sigma(&self, i: usize) -> u64 {
        self.sigma[i]
    }

    /// Forest indices of the trees, canonical order.
    pub fn trees(&self) -> &[usize] {
        &self.trees
    }

    pub fn n_trees(&self) -> usize {
        self.trees.len()
    }

    /// Position among [`Self::trees`] of forest `i`, if it is a tree.
    pub fn tree_pos(&self, i: usize) -> Option<usize> {
        self.tree_pos[i]
    }

    /// Tree positions of the factors of forest `i`.
    pub fn factors(&self, i: usize) -> &[usize] {
        &self.factors[i]
    }

    /// Full coproduct of forest `i` as `(left, right, multiplicity)`.
    pub fn coproduct(&self, i: usize) -> &[(usize, usize, u64)] {
        &self.coproduct[i]
    }

    /// Index of `forest_i · forest_j` when its degree is within the truncation.
    pub fn product(&self, i: usize, j: usize) -> Option<usize> {
        self.product[i][j]
    }

    /// Index of `forest_i ≻ tree_k` (`k` a tree position).
    pub fn graft(&self, i: usize, k: usize) -> Option<usize> {
        self.graft[i][k]
    }

    /// Index of `[forest_i]_label`.
    pub fn graft_root(&self, i: usize, label: u32) -> Option<usize> {
        self.graft_root[i][label as usize - 1]
    }

    /// Index of the single-vertex tree `•_label`.
    pub fn leaf(&self, label: u32) -> usize {
        self.index[&Forest::leaf(label)]
    }

    /// Indices of the forests of exactly degree `k`.
    pub fn degree_range(&self, k: usize) -> std::ops::Range<usize> {
        if k > self.n {
            return self.forests.len()..self.forests.len();
        }
        self.degree_start[k]..self.degree_start[k + 1]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f(s: &str) -> Forest {
        Forest::parse(s).unwrap()
    }

    fn t(s: &str) -> Tree {
        f(s).as_tree().unwrap().clone()
    }

    fn permutations(raw: &RawTree) -> Vec<RawTree> {
        let child_options: Vec<Vec<RawTree>> = raw.children.iter().map(permutations).collect();
        let mut order: Vec<usize> = (0..raw.children.len()).collect();
        let mut out = Vec::new();
        permute(&mut order, 0, &mut |perm| {
            let mut combos: Vec<Vec<RawTree>> = vec![Vec::new()];
            for &i in perm {
                combos = combos
                    .into_iter()
                    .flat_map(|c| {
                        child_options[i].iter().map(move |o| {
                            let mut c = c.clone();
                            c.push(o.clone());
                            c
                        })
                    })
                    .collect();
            }
            for children in combos {
                out.push(RawTree::node(raw.label, children));
            }
        });
        out
    }

    fn permute(v: &mut Vec<usize>, k: usize, visit: &mut dyn FnMut(&[usize])) {
        if k == v.len() {
            visit(v);
            return;
        }
        for i in k..v.len() {
            v.swap(k, i);
            permute(v, k + 1, visit);
            v.swap(k, i);
        }
    }

    #[test]
    fn canonicalize_commutes_children() {
        let a = RawTree::node(3, vec![RawTree::leaf(2), RawTree::leaf(1)]);
        let b = RawTree::node(3, vec![RawTree::leaf(1), RawTree::leaf(2)]);
        assert_eq!(canonicalize(&a, 3).unwrap(), canonicalize(&b, 3).unwrap());
        assert_eq!(canonicalize(&RawTree::leaf(1), 1).unwrap(), Tree::leaf(1));
        let c = canonicalize(&a, 3).unwrap();
        let raw_again = RawTree::node(3, vec![RawTree::leaf(1), RawTree::leaf(2)]);
        assert_eq!(canonicalize(&raw_again, 3).unwrap(), c);
    }

    #[test]
    fn all_planar_layouts_share_an_encoding() {
        // [•₁ [•₂]₁]₃
        let raw = RawTree::node(3, vec![RawTree::leaf(1), RawTree::node(1, vec![RawTree::leaf(2)])]);
        let layouts = permutations(&raw);
        assert_eq!(layouts.len(), 2);
        let encodings: BTreeSet<String> =
            layouts.iter().map(|r| canonicalize(r, 3).unwrap().encoding()).collect();
        assert_eq!(encodings.len(), 1);
        assert_eq!(encodings.into_iter().next().unwrap(), "3(1 1(2))");
    }

    #[test]
    fn canonicalize_rejects_bad_labels() {
        assert_eq!(
            canonicalize(&RawTree::node(1, vec![RawTree::leaf(3)]), 2),
            Err(Error::LabelOutOfRange { label: 3, d: 2 })
        );
        assert!(canonicalize(&RawTree::leaf(0), 2).is_err());
    }

    #[test]
    fn encoding_roundtrip_and_order() {
        assert_eq!(f("2(1) 1").encoding(), "1 2(1)");
        assert_eq!(f("").degree(), 0);
        assert_eq!(f("3(2 1)").encoding(), "3(1 2)");
        for s in ["1", "2(1)", "1 2(1)", "1(1(1))", "12(3 4)"] {
            assert_eq!(f(s).encoding(), s);
        }
        assert!(Forest::parse("1(").is_err());
        assert!(Forest::parse("1()").is_err());
        assert!(Forest::parse("a").is_err());
    }

    #[test]
    fn enumeration_small_cases() {
        let e = enumerate_forests(1, 1).unwrap();
        assert_eq!(e.forests, vec![f("1")]);
        let e = enumerate_forests(1, 2).unwrap();
        assert_eq!(e.trees, vec![t("1"), t("1(1)")]);
        assert_eq!(e.forests, vec![f("1"), f("1 1"), f("1(1)")]);
        let e = enumerate_forests(2, 2).unwrap();
        let deg2_trees: Vec<_> = e.trees.iter().filter(|t| t.degree() == 2).collect();
        assert_eq!(deg2_trees.len(), 4);
        let deg2_forests: Vec<_> =
            e.forests.iter().filter(|f| f.degree() == 2 && !f.is_tree()).collect();
        assert_eq!(deg2_forests.len(), 3);
        assert!(matches!(enumerate_forests(2, 4), Err(Error::DegreeCap { .. })));
    }

    #[test]
    fn enumeration_is_duplicate_free_and_canonical() {
        let e = enumerate_forests(2, 3).unwrap();
        let set: BTreeSet<_> = e.forests.iter().cloned().collect();
        assert_eq!(set.len(), e.forests.len());
        assert_eq!(e.forests.len(), 2 + 7 + 26);
        assert_eq!(e.trees.len(), 2 + 4 + 14);
        for rho in &e.forests {
            assert_eq!(&Forest::parse(&rho.encoding()).unwrap(), rho);
        }
    }

    #[test]
    fn symmetry_factor_examples() {
        assert_eq!(symmetry_factor(&f("")), 1);
        assert_eq!(symmetry_factor(&f("1")), 1);
        assert_eq!(symmetry_factor(&f("1 1")), 2);
        assert_eq!(symmetry_factor(&f("2(1 1)")), 2);
        assert_eq!(symmetry_factor(&f("1 2")), 1);
        assert_eq!(symmetry_factor(&f("1(1) 1(1) 2")), 2);
        assert_eq!(symmetry_factor(&f("1(1 1) 1(1 1)")), 8);
    }

    #[test]
    fn tree_factorial_examples() {
        assert_eq!(tree_factorial(&t("1")), 1);
        assert_eq!(tree_factorial(&t("1(1)")), 2);
        assert_eq!(tree_factorial(&t("1(1 1)")), 3);
        assert_eq!(tree_factorial(&t("1(1(1))")), 6);
        assert_eq!(vertex_labels(&t("3(1 2)")), vec![3, 1, 2]);
    }

    #[test]
    fn grafting_examples() {
        assert_eq!(graft_root(&f(""), 1), t("1"));
        assert_eq!(graft_root(&f("2"), 1), t("1(2)"));
        assert_eq!(graft_root(&f("1 2"), 3), t("3(1 2)"));
        assert_eq!(graft_onto(&f(""), &t("1")), t("1"));
        assert_eq!(graft_onto(&f("2"), &t("1")), graft_root(&f("2"), 1));
        assert_eq!(graft_onto(&f("1"), &t("1(2)")), t("1(1 2)"));
        assert_eq!(graft_onto(&f("1 2(1)"), &t("3")).degree(), 4);
    }

    fn as_set(terms: Vec<CoproductTerm>) -> BTreeSet<(String, String, u64)> {
        terms.into_iter().map(|t| (t.left.encoding(), t.right.encoding(), t.mult)).collect()
    }

    fn set(items: &[(&str, &str, u64)]) -> BTreeSet<(String, String, u64)> {
        items.iter().map(|(a, b, m)| (a.to_string(), b.to_string(), *m)).collect()
    }

    #[test]
    fn coproduct_examples() {
        assert_eq!(as_set(coproduct(&f("1")).unwrap()), set(&[("1", "", 1), ("", "1", 1)]));
        assert_eq!(
            as_set(coproduct(&f("2(1)")).unwrap()),
            set(&[("2(1)", "", 1), ("", "2(1)", 1), ("1", "2", 1)])
        );
        assert_eq!(
            as_set(coproduct(&f("1 2")).unwrap()),
            set(&[("1 2", "", 1), ("1", "2", 1), ("2", "1", 1), ("", "1 2", 1)])
        );
        assert_eq!(
            as_set(coproduct(&f("2(1 1)")).unwrap()),
            set(&[("2(1 1)", "", 1), ("", "2(1 1)", 1), ("1", "2(1)", 2), ("1 1", "2", 1)])
        );
        assert!(coproduct(&f("1(1(1(1)))")).is_err());
    }

    /// `Δ[ρ]_j = [ρ]_j ⊗ 1 + Σ ρ₍₁₎ ⊗ [ρ₍₂₎]_j`, checked against the cut enumeration.
    #[test]
    fn coproduct_matches_root_recursion() {
        for rho in std::iter::once(Forest::empty()).chain(enumerate_forests(2, 2).unwrap().forests) {
            for j in 1..=2 {
                let tree = graft_root(&rho, j);
                let mut expected: BTreeMap<(Forest, Forest), u64> = BTreeMap::new();
                expected.insert((Forest::from(tree.clone()), Forest::empty()), 1);
                for term in coproduct(&rho).unwrap() {
                    *expected
                        .entry((term.left, Forest::from(graft_root(&term.right, j))))
                        .or_insert(0) += term.mult;
                }
                let got: BTreeMap<(Forest, Forest), u64> = coproduct(&Forest::from(tree))
                    .unwrap()
                    .into_iter()
                    .map(|t| ((t.left, t.right), t.mult))
                    .collect();
                assert_eq!(got, expected, "rho = {rho}, j = {j}");
            }
        }
    }

    #[test]
    fn gl_product_low_degree() {
        let one = BigRational::one();
        assert_eq!(gl_product(&f(""), &f("2(1)")).unwrap(), ForestLinComb::single(f("2(1)"), one.clone()));
        let p = gl_product(&f("1"), &f("2")).unwrap();
        assert_eq!(p.len(), 2);
        assert_eq!(p.coefficient(&f("1 2")), one);
        // •₁ is attached into •₂
        assert_eq!(p.coefficient(&f("2(1)")), one);
        assert!(p.coefficient(&f("1(2)")).is_zero());
        let q = gl_product(&f("1"), &f("1")).unwrap();
        assert_eq!(q.coefficient(&f("1 1")), one);
        assert_eq!(q.coefficient(&f("1(1)")), one);
        assert!(matches!(gl_product(&f("1 1"), &f("1 1")), Err(Error::DegreeCap { .. })));
    }

    #[test]
    fn basis_tables_are_consistent() {
        let b = ForestBasis::new(2, 3).unwrap();
        assert_eq!(b.len(), 36);
        assert_eq!(b.n_trees(), 20);
        assert_eq!(b.forest(0), &Forest::empty());
        for i in 0..b.len() {
            let prod: Forest = b
                .factors(i)
                .iter()
                .fold(Forest::empty(), |acc, &k| acc.mul(b.forest(b.trees()[k])));
            assert_eq!(&prod, b.forest(i));
        }
        let i = b.index_of(&f("1")).unwrap();
        let j = b.index_of(&f("2(1)")).unwrap();
        assert_eq!(b.product(i, j), b.index_of(&f("1 2(1)")));
        let k = b.tree_pos(b.index_of(&f("2")).unwrap()).unwrap();
        assert_eq!(b.graft(i, k), b.index_of(&f("2(1)")));
        assert_eq!(b.graft_root(i, 2), b.index_of(&f("2(1)")));
        assert_eq!(b.degree_range(2).len(), 7);
    }
}
