//! One PASS/FAIL line per acceptance criterion; exits nonzero if any fails.

use std::path::PathBuf;
use std::process::Command;
use std::time::Instant;

use brp_core::character::is_character;
use brp_core::effect::{full_integral, integral_path, local_error_report};
use brp_core::fixtures::{ito_corrections, uniform_times, Generator};
use brp_core::pi::{compare_first_levels, compute_generators};
use brp_core::rough_path::dp_metric;
use brp_core::scalar::ratio;
use brp_core::stats::{loglog_slope, median};
use brp_core::verify::{
    algebra_suite, geometric_defect, integral_chen_defect, lift_chen_defect, taylor_check, theta, Scenario,
};
use brp_core::{BranchedRoughPath, Forest, IntegrationOptions, Polynomial, PolynomialOneForm};

type Verdict = Result<String, String>;

fn verdict(ok: bool, detail: String) -> Verdict {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn form(gamma: f64) -> PolynomialOneForm {
    let cfg = format!(
        r#"{{"d":2,"e":1,"gamma":{gamma},"components":[
        [{{"monomial":[0,0],"coeff":1}},{{"monomial":[0,1],"coeff":"1/2"}},{{"monomial":[2,0],"coeff":"-1/3"}}],
        [{{"monomial":[1,0],"coeff":"1/2"}},{{"monomial":[1,1],"coeff":"1/4"}}]]}}"#
    );
    PolynomialOneForm::from_config(&serde_json::from_str(&cfg).unwrap()).unwrap()
}

const SMOOTH: Generator = Generator::SmoothRandom { d: 2, modes: 2, seed: 11 };

fn fixtures() -> Vec<(&'static str, Generator)> {
    vec![
        ("linear", Generator::Linear { velocity: vec![1.0, -2.0], start: None }),
        ("monomial", Generator::Monomial { d: 2 }),
        ("zigzag", Generator::Zigzag { d: 2, teeth: 3, amplitude: 0.5 }),
        ("smooth", SMOOTH),
    ]
}

fn lifts(gen: &Generator, steps: usize, p: f64) -> [(&'static str, BranchedRoughPath); 2] {
    let times = uniform_times(steps, 1.0);
    let pts = gen.sample(&times).unwrap();
    [
        ("canonical", BranchedRoughPath::canonical_lift(&times, &pts, p).unwrap()),
        ("ito", BranchedRoughPath::ito_like_lift(&times, &pts, p, &ito_corrections(gen.d(), &times, 1.0)).unwrap()),
    ]
}

fn criterion_1() -> Verdict {
    let report = algebra_suite(2, 3, 100, 2024).map_err(|e| e.to_string())?;
    let failed: Vec<_> = report.checks.iter().filter(|c| !c.passed).map(|c| c.name.clone()).collect();
    verdict(
        report.passed,
        format!("{} exact checks, 100 rational instances, d=2, degree<=3, failed: {:?}", report.checks.len(), failed),
    )
}

fn criterion_2() -> Verdict {
    let mut worst_chen = 0.0f64;
    let mut non_characters = 0;
    let mut min_ito_defect = f64::INFINITY;
    for (_, gen) in fixtures() {
        for (kind, x) in lifts(&gen, 64, 2.5) {
            non_characters += x.values().iter().filter(|v| !is_character(x.basis(), v.forest_values(), 1e-8)).count();
            worst_chen = worst_chen.max(lift_chen_defect(&x, 65).map_err(|e| e.to_string())?);
            if kind == "ito" {
                min_ito_defect = min_ito_defect.min(geometric_defect(&x.increment_idx(0, 64)));
            }
        }
    }
    verdict(
        non_characters == 0 && worst_chen <= 1e-8 && min_ito_defect > 1e-3,
        format!("non-characters {non_characters}, max Chen defect {worst_chen:.2e} (<= 1e-8), min Ito shuffle defect {min_ito_defect:.3}"),
    )
}

fn criterion_3() -> Verdict {
    let opts = IntegrationOptions::default();
    let times = uniform_times(2048, 1.0);
    let pts: Vec<Vec<f64>> = times.iter().map(|&t| vec![t]).collect();
    let mut worst_young = 0.0f64;
    for p in [1.0, 1.5, 1.9] {
        let x = BranchedRoughPath::canonical_lift(&times, &pts, p).unwrap();
        let f = PolynomialOneForm::new(1, 1, p + 0.5, vec![vec![Polynomial::variable(1, 1)]]).unwrap();
        let y = full_integral(&f, &x, 0, 2048, &opts).map_err(|e| e.to_string())?;
        worst_young = worst_young.max((y.y.tree_values()[0] - 0.5).abs());
    }
    // a degree-two tree needs [p] >= 2
    let x = BranchedRoughPath::canonical_lift(&times, &pts, 2.0).unwrap();
    let one = PolynomialOneForm::new(1, 1, 2.5, vec![vec![Polynomial::constant(1, ratio(1, 1))]]).unwrap();
    let y = full_integral(&one, &x, 0, 2048, &opts).map_err(|e| e.to_string())?;
    let t11 = y.y.basis().index_of(&Forest::parse("1(1)").unwrap()).unwrap();
    let cherry = (y.y.value(t11) - 0.5).abs();
    verdict(
        worst_young <= 1e-6 && cherry <= 1e-6,
        format!("level-1 error {worst_young:.2e} for p in {{1, 1.5, 1.9}}, (Y,[1]1) error {cherry:.2e} at p=2 (both <= 1e-6)"),
    )
}

fn criterion_4() -> Verdict {
    let times = uniform_times(2048, 1.0);
    let pts = SMOOTH.sample(&times).unwrap();
    // the local error table compares single dyadic windows, so the gate is looser
    let opts = IntegrationOptions { fail_tol: 1e-2, ..Default::default() };
    let scales = [512, 256, 128, 64, 32, 16];
    let mut ok = true;
    let mut parts = Vec::new();
    for (p, gamma) in [(2.0, 2.5), (1.5, 2.0)] {
        let x = BranchedRoughPath::canonical_lift(&times, &pts, p).unwrap();
        let rows = local_error_report(&form(gamma), &x, &scales, 16, &opts).map_err(|e| e.to_string())?;
        let omega: Vec<f64> = rows.iter().map(|r| r.omega).collect();
        let rem: Vec<f64> = rows.iter().map(|r| r.remainder).collect();
        let yerr: Vec<f64> = rows.iter().map(|r| r.y_error).collect();
        let s_rem = loglog_slope(&omega, &rem).unwrap_or(f64::NAN);
        let s_y = loglog_slope(&omega, &yerr).unwrap_or(f64::NAN);
        let (need_rem, need_y) = (theta(gamma, p) - 0.1, gamma / p - 0.1);
        ok &= s_rem >= need_rem && s_y >= need_y;
        parts.push(format!(
            "(p,gamma)=({p},{gamma}): remainder slope {s_rem:.3} >= {need_rem:.3}, Y-Ytilde slope {s_y:.3} >= {need_y:.3}"
        ));
    }
    verdict(ok, format!("{} scales; {}", scales.len(), parts.join("; ")))
}

fn criterion_5() -> Verdict {
    let mut worst = 0.0f64;
    for (_, gen) in fixtures() {
        for (_, x) in lifts(&gen, 256, 2.0) {
            let sc = Scenario { path: x, form: form(2.5), opts: IntegrationOptions::default() };
            worst = worst.max(integral_chen_defect(&sc).map_err(|e| e.to_string())?);
        }
    }
    verdict(worst <= 1e-6, format!("max per-forest Chen defect {worst:.2e} over 8 lifted fixtures (<= 1e-6)"))
}

fn path_box(x: &BranchedRoughPath) -> Vec<(f64, f64)> {
    (0..x.d())
        .map(|i| {
            let (lo, hi) = (0..x.len()).map(|k| x.position(k)[i]).fold((0.0f64, 0.0f64), |(a, b), v| (a.min(v), b.max(v)));
            (lo, hi)
        })
        .collect()
}

fn criterion_6() -> Verdict {
    let (p, gamma) = (2.0, 2.5);
    let times = uniform_times(256, 1.0);
    let pts = SMOOTH.sample(&times).unwrap();
    let raw = BranchedRoughPath::canonical_lift(&times, &pts, p).unwrap();
    let base = raw.dilate(1.0 / raw.total_p_variation());
    let f = form(gamma);
    let mut ratios = Vec::new();
    for lambda in [1.0, 0.5, 0.25, 0.125, 0.0625] {
        let x = base.dilate(lambda);
        let y = integral_path(&f, &x).map_err(|e| e.to_string())?;
        let ynorm = y.total_p_variation();
        let lip = f.lip_norm_estimate(gamma - 1.0, &path_box(&x), 33).map_err(|e| e.to_string())?;
        let xnorm = x.total_p_variation();
        ratios.push(ynorm / (lip * xnorm.max(xnorm.powf(p))));
    }
    let med = median(&ratios).unwrap();
    let ok = ratios.iter().all(|r| r / med <= 2.0 && med / r <= 2.0);
    let shown: Vec<String> = ratios.iter().map(|r| format!("{r:.4}")).collect();
    verdict(ok, format!("ratios [{}] vs median {med:.4} (factor 2 band), unit p-variation base path", shown.join(", ")))
}

fn criterion_7() -> Verdict {
    let (p, gamma) = (2.0, 2.5);
    let times = uniform_times(256, 1.0);
    let pts = SMOOTH.sample(&times).unwrap();
    let f = form(gamma);
    let x = BranchedRoughPath::canonical_lift(&times, &pts, p).unwrap();
    let y = integral_path(&f, &x).map_err(|e| e.to_string())?;
    let mut dx = Vec::new();
    let mut dy = Vec::new();
    for k in 0..7 {
        let eps = 1e-3 * 0.25f64.powi(k);
        let xn = BranchedRoughPath::ito_like_lift(&times, &pts, p, &ito_corrections(2, &times, eps)).unwrap();
        let yn = integral_path(&f, &xn).map_err(|e| e.to_string())?;
        dx.push(dp_metric(&xn, &x).map_err(|e| e.to_string())?);
        dy.push(dp_metric(&yn, &y).map_err(|e| e.to_string())?);
    }
    let halving = dx.windows(2).all(|w| (w[1] / w[0] - 0.5).abs() <= 0.05);
    let monotone = dy.windows(2).all(|w| w[1] <= w[0]);
    let last = *dy.last().unwrap();
    let fmt = |v: &[f64]| v.iter().map(|a| format!("{a:.2e}")).collect::<Vec<_>>().join(", ");
    verdict(
        halving && monotone && last < 1e-3,
        format!("d_p(Xn,X) [{}]; d_p(Yn,Y) [{}], nonincreasing {monotone}, final < 1e-3", fmt(&dx), fmt(&dy)),
    )
}

fn criterion_8() -> Verdict {
    let (p, gamma) = (2.0, 2.5);
    let mut ok = true;
    let mut parts = Vec::new();
    for (kind, x) in lifts(&SMOOTH, 1024, p) {
        let cmp = compare_first_levels(&form(gamma), &x, 0, 1024, &IntegrationOptions::default()).map_err(|e| e.to_string())?;
        let taylor = taylor_check(&cmp.taylor, theta(gamma, p), &cmp.branched.value);
        ok &= cmp.gap <= 1e-4 && taylor.passed;
        parts.push(format!("{kind}: gap {:.2e} (<= 1e-4), {} {:.2e}", cmp.gap, taylor.name, taylor.measured));
    }
    verdict(ok, parts.join("; "))
}

fn criterion_9() -> Verdict {
    let mut ok = true;
    let mut parts = Vec::new();
    for (d, p_floor, want) in [(1, 1, 1), (1, 2, 2), (2, 2, 5)] {
        let k = compute_generators(d, p_floor).map_err(|e| e.to_string())?.k();
        ok &= k == want;
        parts.push(format!("K(d={d},[p]={p_floor})={k}"));
    }
    for d in [1, 2] {
        let gens = compute_generators(d, 3).map_err(|e| e.to_string())?;
        let r = gens.ranks().iter().find(|r| r.degree == 3).unwrap();
        ok &= r.new_generators == r.dimension - r.product_rank;
        parts.push(format!("d={d} degree 3: {} = {} - {}", r.new_generators, r.dimension, r.product_rank));
    }
    verdict(ok, parts.join(", "))
}

fn criterion_10() -> Verdict {
    let scenarios = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios");
    let mut identical = 0;
    let mut runs = 0;
    for (cmd, cfg) in [
        (vec!["lift"], "zigzag.json"),
        (vec!["integrate"], "smooth.json"),
        (vec!["integrate"], "ito.json"),
        (vec!["verify", "--suite", "pi"], "smooth.json"),
        (vec!["verify", "--suite", "algebra"], "smooth.json"),
    ] {
        let cfg = scenarios.join(cfg);
        let run = || {
            let out = Command::new(env!("CARGO_BIN_EXE_brp"))
                .args(&cmd)
                .arg("--config")
                .arg(&cfg)
                .args(["--seed", "11"])
                .output()
                .expect("spawn brp");
            (out.status.code(), out.stdout)
        };
        let (a, b) = (run(), run());
        runs += 1;
        if a == b && a.0 == Some(0) && !a.1.is_empty() {
            identical += 1;
        }
    }
    verdict(identical == runs, format!("{identical}/{runs} commands gave byte-identical reports on rerun"))
}

fn main() {
    let criteria: [(&str, fn() -> Verdict); 10] = [
        ("algebra exactness", criterion_1),
        ("lift validity", criterion_2),
        ("Young sanity", criterion_3),
        ("remainder exponents", criterion_4),
        ("Chen for the integral", criterion_5),
        ("integral bound under dilation", criterion_6),
        ("d_p continuity", criterion_7),
        ("first-level coincidence", criterion_8),
        ("generators", criterion_9),
        ("CLI determinism", criterion_10),
    ];
    let mut failures = 0;
    for (n, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = run();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS criterion {}: {name}: {detail} [{secs:.1}s]", n + 1),
            Err(detail) => {
                failures += 1;
                println!("FAIL criterion {}: {name}: {detail} [{secs:.1}s]", n + 1);
            }
        }
    }
    println!("acceptance: {}/{} criteria passed", criteria.len() - failures, criteria.len());
    if failures > 0 {
        std::process::exit(1);
    }
}
