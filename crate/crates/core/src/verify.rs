//! Invariant suites with machine-readable pass/fail detail.

use std::collections::BTreeMap;
use std::sync::Arc;

use num::{BigRational, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::character::{is_character, Character};
use crate::effect::{full_integral, integral_path, IntegrationOptions};
use crate::error::{Error, Result};
use crate::forest::{coproduct, gl_product, graft_onto, graft_root, Forest, ForestBasis, ForestLinComb};
use crate::one_form::{Polynomial, PolynomialOneForm};
use crate::pi::{compare_first_levels_with, compute_generators, shuffle_defect, PiRoughPath};
use crate::rough_path::{stride_indices, BranchedRoughPath};
use crate::scalar::Scalar;
use crate::stats::loglog_slope;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub measured: f64,
    pub threshold: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl Check {
    pub fn at_most(name: &str, measured: f64, threshold: f64) -> Check {
        Check { name: name.into(), passed: measured <= threshold, measured, threshold, note: None }
    }

    pub fn at_least(name: &str, measured: f64, threshold: f64) -> Check {
        Check { name: name.into(), passed: measured >= threshold, measured, threshold, note: None }
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Check {
        self.note = Some(note.into());
        self
    }

    fn failed(name: &str, err: &Error) -> Check {
        Check { name: name.into(), passed: false, measured: f64::NAN, threshold: f64::NAN, note: Some(err.to_string()) }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub suite: String,
    pub passed: bool,
    pub checks: Vec<Check>,
}

impl SuiteReport {
    fn new(suite: &str, checks: Vec<Check>) -> SuiteReport {
        SuiteReport { suite: suite.into(), passed: checks.iter().all(|c| c.passed), checks }
    }
}

type Tensor2 = BTreeMap<(Forest, Forest), u64>;

fn as_map(terms: Vec<crate::forest::CoproductTerm>) -> Tensor2 {
    let mut out = Tensor2::new();
    for t in terms {
        *out.entry((t.left, t.right)).or_insert(0) += t.mult;
    }
    out
}

/// Forests whose coassociativity fails.
fn coassociativity_failures(basis: &ForestBasis) -> usize {
    (0..basis.len())
        .filter(|&i| {
            let mut left: BTreeMap<(usize, usize, usize), u64> = BTreeMap::new();
            let mut right = left.clone();
            for &(a, b, m) in basis.coproduct(i) {
                for &(x, y, m2) in basis.coproduct(a) {
                    *left.entry((x, y, b)).or_insert(0) += m * m2;
                }
                for &(x, y, m2) in basis.coproduct(b) {
                    *right.entry((a, x, y)).or_insert(0) += m * m2;
                }
            }
            left != right
        })
        .count()
}

fn counit_failures(basis: &ForestBasis) -> usize {
    (1..basis.len())
        .filter(|&i| {
            let cp = basis.coproduct(i);
            !(cp.contains(&(i, 0, 1)) && cp.contains(&(0, i, 1)))
        })
        .count()
}

/// `Δ[ρ]_j = [ρ]_j ⊗ 1 + Σ ρ₍₁₎ ⊗ [ρ₍₂₎]_j`.
fn root_graft_failures(basis: &ForestBasis) -> Result<usize> {
    let mut failures = 0;
    for i in 0..basis.len() {
        if basis.degree(i) + 1 > basis.n() {
            continue;
        }
        let rho = basis.forest(i);
        for j in 1..=basis.d() as u32 {
            let tree: Forest = graft_root(rho, j).into();
            let mut expected = Tensor2::new();
            expected.insert((tree.clone(), Forest::empty()), 1);
            for t in coproduct(rho)? {
                *expected.entry((t.left, graft_root(&t.right, j).into())).or_insert(0) += t.mult;
            }
            if as_map(coproduct(&tree)?) != expected {
                failures += 1;
            }
        }
    }
    Ok(failures)
}

/// `Δ(ρ≻τ) = (ρ≻τ) ⊗ 1 + Σ_{|τ₍₂₎| >= 1} ρ₍₁₎τ₍₁₎ ⊗ (ρ₍₂₎ ≻ τ₍₂₎)`.
fn graft_onto_failures(basis: &ForestBasis) -> Result<usize> {
    let mut failures = 0;
    for i in 0..basis.len() {
        for &ti in basis.trees() {
            if basis.degree(i) + basis.degree(ti) > basis.n() {
                continue;
            }
            let rho = basis.forest(i);
            let tau = basis.forest(ti).as_tree().expect("tree");
            let grafted: Forest = graft_onto(rho, tau).into();
            let mut expected = Tensor2::new();
            expected.insert((grafted.clone(), Forest::empty()), 1);
            let cp_rho = coproduct(rho)?;
            for t2 in coproduct(&tau.clone().into())? {
                let Some(trunk) = t2.right.as_tree() else { continue };
                for t1 in &cp_rho {
                    let key = (t1.left.mul(&t2.left), graft_onto(&t1.right, trunk).into());
                    *expected.entry(key).or_insert(0) += t1.mult * t2.mult;
                }
            }
            if as_map(coproduct(&grafted)?) != expected {
                failures += 1;
            }
        }
    }
    Ok(failures)
}

fn random_ratio(rng: &mut ChaCha8Rng) -> BigRational {
    BigRational::new(rng.gen_range(-9i64..=9).into(), rng.gen_range(1i64..=5).into())
}

pub fn random_character(basis: &Arc<ForestBasis>, rng: &mut ChaCha8Rng) -> Character<BigRational> {
    let trees = (0..basis.n_trees()).map(|_| random_ratio(rng)).collect();
    Character::from_tree_values(basis.clone(), trees).expect("sizes match")
}

/// A polynomial one-form with a few random rational terms of degree <= 3.
pub fn random_one_form(d: usize, e: usize, gamma: f64, rng: &mut ChaCha8Rng) -> Result<PolynomialOneForm> {
    let components = (0..d)
        .map(|_| {
            (0..e)
                .map(|_| {
                    let mut terms = BTreeMap::new();
                    for _ in 0..rng.gen_range(1..=4) {
                        let exps: Vec<u32> = (0..d).map(|_| rng.gen_range(0..=2)).collect();
                        if exps.iter().sum::<u32>() <= 3 {
                            terms.insert(exps, random_ratio(rng));
                        }
                    }
                    Polynomial::from_terms(d, terms.into_iter().filter(|(_, c)| !c.is_zero()).collect())
                })
                .collect()
        })
        .collect();
    PolynomialOneForm::new(d, e, gamma, components)
}

/// `(ρ₁ ⋆ ρ₂)` for every basis pair within the truncation.
fn gl_table(basis: &ForestBasis) -> Result<Vec<(usize, usize, ForestLinComb<BigRational>)>> {
    let mut out = Vec::new();
    for i in 0..basis.len() {
        for j in 0..basis.len() {
            if basis.degree(i) + basis.degree(j) <= basis.n() {
                out.push((i, j, gl_product(basis.forest(i), basis.forest(j))?));
            }
        }
    }
    Ok(out)
}

/// Exact algebraic identities at `(d, n)` with `instances` random rational
/// characters and one-forms drawn from `seed`.
pub fn algebra_suite(d: usize, n: usize, instances: usize, seed: u64) -> Result<SuiteReport> {
    let basis = ForestBasis::shared(d, n)?;
    let mut checks = vec![
        Check::at_most("coassociativity", coassociativity_failures(&basis) as f64, 0.0),
        Check::at_most("counit", counit_failures(&basis) as f64, 0.0),
        Check::at_most("coproduct_root_graft", root_graft_failures(&basis)? as f64, 0.0),
        Check::at_most("coproduct_graft_onto", graft_onto_failures(&basis)? as f64, 0.0),
    ];

    let table = gl_table(&basis)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut closure, mut inverse, mut assoc, mut duality, mut b_eq_c) = (0, 0, 0, 0, 0);
    let gamma = n as f64 + 1.5;
    for _ in 0..instances {
        let a = random_character(&basis, &mut rng);
        let b = random_character(&basis, &mut rng);
        let c = random_character(&basis, &mut rng);
        let ab = a.group_product(&b)?;
        if !is_character(&basis, ab.forest_values(), 0.0) {
            closure += 1;
        }
        if a.group_product(&a.inverse())? != Character::identity(basis.clone()) {
            inverse += 1;
        }
        if ab.group_product(&c)? != a.group_product(&b.group_product(&c)?)? {
            assoc += 1;
        }
        let mut via_gl = vec![BigRational::zero(); basis.len()];
        for (i, j, prod) in &table {
            let base = a.value(*i).clone() * b.value(*j).clone()
                / BigRational::from_i64((basis.sigma(*i) * basis.sigma(*j)) as i64);
            for (tau, coeff) in prod.iter() {
                let k = basis.index_of(tau).expect("within truncation");
                via_gl[k] += base.clone() * coeff * BigRational::from_i64(basis.sigma(k) as i64);
            }
        }
        if via_gl.as_slice() != ab.forest_values() {
            duality += 1;
        }
        let f = random_one_form(d, 1, gamma, &mut rng)?;
        let x: Vec<BigRational> = (0..d).map(|_| random_ratio(&mut rng)).collect();
        let bs = f.b_sum(&x, &a, &b);
        if bs != f.c_sum_direct(&x, &a, &b)? || bs != f.c_sum_gl(&x, &a, &b)? {
            b_eq_c += 1;
        }
    }
    let note = format!("{instances} random rational instances, exact arithmetic");
    for (name, fails) in [
        ("character_product_closure", closure),
        ("character_inverse", inverse),
        ("group_associativity", assoc),
        ("gl_ck_duality", duality),
        ("taylor_equals_translation", b_eq_c),
    ] {
        checks.push(Check::at_most(name, fails as f64, 0.0).with_note(note.clone()));
    }
    Ok(SuiteReport::new("algebra", checks))
}

/// `max_{i,j} |(X,•_i)(X,•_j) − (X,[•_i]_j) − (X,[•_j]_i)|`, zero for geometric increments.
pub fn geometric_defect(x: &Character<f64>) -> f64 {
    let basis = x.basis();
    if basis.n() < 2 {
        return 0.0;
    }
    let mut worst = 0.0f64;
    for i in 1..=basis.d() as u32 {
        for j in 1..=basis.d() as u32 {
            let ij = basis.graft_root(basis.leaf(i), j).expect("degree 2");
            let ji = basis.graft_root(basis.leaf(j), i).expect("degree 2");
            let lhs = x.value(basis.leaf(i)) * x.value(basis.leaf(j));
            worst = worst.max((lhs - x.value(ij) - x.value(ji)).abs());
        }
    }
    worst
}

/// A driver, a one-form and the refinement rules.
#[derive(Clone, Debug)]
pub struct Scenario {
    pub path: BranchedRoughPath,
    pub form: PolynomialOneForm,
    pub opts: IntegrationOptions,
}

/// Largest Chen defect `|X_{s,u} X_{u,t} − X_{s,t}|` over all triples of at
/// most `max_points` evenly strided grid points.
pub fn lift_chen_defect(x: &BranchedRoughPath, max_points: usize) -> Result<f64> {
    let stride = (x.len() - 1).div_ceil(max_points.max(2) - 1).max(1);
    let idx = stride_indices(x.len(), stride);
    let mut worst = 0.0f64;
    for (a, &s) in idx.iter().enumerate() {
        for (b, &u) in idx.iter().enumerate().skip(a + 1) {
            let xsu = x.increment_idx(s, u);
            for &t in &idx[b + 1..] {
                let lhs = xsu.group_product(&x.increment_idx(u, t))?;
                worst = worst.max(lhs.max_abs_diff(&x.increment_idx(s, t)));
            }
        }
    }
    Ok(worst)
}

/// Quarter-point triples `s < u < t` of a grid with `len` points.
pub fn fixture_triples(len: usize) -> Vec<(usize, usize, usize)> {
    let m = len - 1;
    let q: Vec<usize> = (0..=4).map(|k| k * m / 4).collect();
    let mut out = Vec::new();
    for a in 0..q.len() {
        for b in a + 1..q.len() {
            for c in b + 1..q.len() {
                if q[a] < q[b] && q[b] < q[c] {
                    out.push((q[a], q[b], q[c]));
                }
            }
        }
    }
    out
}

/// Per-forest Chen defect of the integral on [`fixture_triples`], using the
/// finest compensated sums.
pub fn integral_chen_defect(sc: &Scenario) -> Result<f64> {
    // only the finest sums are compared, so no convergence gate here
    let opts = IntegrationOptions { fail_tol: f64::INFINITY, ..sc.opts.clone() };
    let mut worst = 0.0f64;
    for (s, u, t) in fixture_triples(sc.path.len()) {
        let ysu = full_integral(&sc.form, &sc.path, s, u, &opts)?.raw;
        let yut = full_integral(&sc.form, &sc.path, u, t, &opts)?.raw;
        let yst = full_integral(&sc.form, &sc.path, s, t, &opts)?.raw;
        worst = worst.max(ysu.group_product(&yut)?.max_abs_diff(&yst));
    }
    Ok(worst)
}

fn lift_checks(x: &BranchedRoughPath) -> Vec<Check> {
    let bad = x.values().iter().filter(|v| !is_character(x.basis(), v.forest_values(), 1e-8)).count();
    let mut out = vec![Check::at_most("lift_is_character", bad as f64, 0.0)];
    out.push(match lift_chen_defect(x, 33) {
        Ok(v) => Check::at_most("lift_chen", v, 1e-8),
        Err(e) => Check::failed("lift_chen", &e),
    });
    out
}

/// Lift validity, convergence, Chen for the integral and finiteness of its
/// p-variation.
pub fn analysis_suite(sc: &Scenario) -> Result<SuiteReport> {
    let mut checks = lift_checks(&sc.path);
    let last = sc.path.len() - 1;
    checks.push(match full_integral(&sc.form, &sc.path, 0, last, &sc.opts) {
        Ok(y) => Check::at_most("integral_refinement_gap", y.gap, sc.opts.fail_tol),
        Err(e) => Check::failed("integral_refinement_gap", &e),
    });
    checks.push(match integral_chen_defect(sc) {
        Ok(v) => Check::at_most("integral_chen", v, 1e-6),
        Err(e) => Check::failed("integral_chen", &e),
    });
    checks.push(match integral_path(&sc.form, &sc.path) {
        Ok(y) => {
            let stride = last.div_ceil(256).max(1);
            let sub = y.subsample(stride)?;
            let v = sub.total_p_variation();
            Check { name: "integral_p_variation_finite".into(), passed: v.is_finite(), measured: v, threshold: f64::INFINITY, note: None }
        }
        Err(e) => Check::failed("integral_p_variation_finite", &e),
    });
    Ok(SuiteReport::new("analysis", checks))
}

/// `θ = (γ ∧ ([p]+1)) / p`.
pub fn theta(gamma: f64, p: f64) -> f64 {
    gamma.min(p.floor() + 1.0) / p
}

/// Generator rank identities, shuffle law of the companion path, and the
/// first-level coincidence with its termwise Taylor check.
pub fn pi_suite(sc: &Scenario, max_gap: f64) -> Result<SuiteReport> {
    let x = &sc.path;
    let gens = Arc::new(compute_generators(x.d(), x.p_floor())?);
    let rank_failures = gens.ranks().iter().filter(|r| r.new_generators != r.dimension - r.product_rank).count();
    let mut checks = vec![Check::at_most("generator_rank_identity", rank_failures as f64, 0.0)
        .with_note(format!("K = {}", gens.k()))];
    let z = match PiRoughPath::build(x, gens.clone()) {
        Ok(z) => z,
        Err(e) => {
            checks.push(Check::failed("shuffle_law", &e));
            return Ok(SuiteReport::new("pi", checks));
        }
    };
    let shuffle = (0..z.len()).map(|k| shuffle_defect(&gens, z.values(k)).0).fold(0.0, f64::max);
    checks.push(Check::at_most("shuffle_law", shuffle, crate::pi::SHUFFLE_TOL));
    match compare_first_levels_with(&sc.form, x, &z, 0, x.len() - 1, &sc.opts) {
        Ok(cmp) => {
            checks.push(Check::at_most("first_level_gap", cmp.gap, max_gap));
            checks.push(taylor_check(&cmp.taylor, theta(sc.form.gamma(), x.p()), &cmp.branched.value));
        }
        Err(e) => checks.push(Check::failed("first_level_gap", &e)),
    }
    Ok(SuiteReport::new("pi", checks))
}

/// Termwise Taylor residuals pass when they sit at rounding level for every
/// scale, or else decay against `ω` with slope at least `θ − 0.1`.
pub fn taylor_check(rows: &[crate::pi::TaylorRow], theta: f64, scale_of: &[f64]) -> Check {
    let size = 1.0 + scale_of.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let worst = rows.iter().map(|r| r.residual).fold(0.0, f64::max);
    if worst <= 1e-12 * size {
        return Check::at_most("taylor_termwise", worst, 1e-12 * size)
            .with_note("residual at rounding level on every scale");
    }
    let omega: Vec<f64> = rows.iter().map(|r| r.omega).collect();
    let res: Vec<f64> = rows.iter().map(|r| r.residual).collect();
    let slope = loglog_slope(&omega, &res).unwrap_or(f64::NAN);
    Check::at_least("taylor_termwise_rate", slope, theta - 0.1)
}
