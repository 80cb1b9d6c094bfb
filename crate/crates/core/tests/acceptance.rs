//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails. Defaults: kappa 1, dim 2, admissible
//! radius 0.7, seed 42.

use std::f64::consts::PI;
use std::path::Path;
use std::process::ExitCode;
use std::time::Instant;

use nalgebra::DVector;
use serde_json::json;

use sphere_prox::algorithms::{minimize, proximal_point, resolvent_curve, splitting_proximal_point, RunSettings, Schedule};
use sphere_prox::cli::{cmd_compare, cmd_run, EXIT_OK};
use sphere_prox::diagnostics::{
    check_fejer, check_fixed_point_inequality, check_lemma_inequality, check_lemma_inequality_sharp,
    check_monotone_values, check_nonspreading, check_rate_bound, check_sequence_lemma, check_splitting_step_bound,
    rate_bound_start, splitting_sequence, standard_anchors, standard_ball, standard_frechet, standard_median,
};
use sphere_prox::geometry::polar_point;
use sphere_prox::objectives::grid_minimize;
use sphere_prox::penalties::{penalty_gradient, penalty_value, psi1, psi2, uniform_convexity_gap};
use sphere_prox::resolvent::{resolve, resolve_oracle};
use sphere_prox::{Objective, PenaltyKind, PointSampler, ResolventParams, Result, SpaceConfig, SpherePoint, TangentVector};

const SEED: u64 = 42;
const LAMBDAS: [f64; 3] = [0.1, 1.0, 10.0];
const TIME_LIMIT_SECS: f64 = 30.0;

type Criterion = fn() -> Result<Outcome>;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Result<Outcome> {
    Ok(Outcome { pass, detail })
}

fn worst(values: impl IntoIterator<Item = f64>) -> f64 {
    values.into_iter().fold(f64::INFINITY, f64::min)
}

fn largest(values: impl IntoIterator<Item = f64>) -> f64 {
    values.into_iter().fold(0.0, f64::max)
}

fn cfg() -> SpaceConfig {
    SpaceConfig::default()
}

fn comparison_equality() -> Result<Outcome> {
    let cfg = cfg();
    let mut rng = PointSampler::new(SEED);
    let mut max_abs = 0.0f64;
    let mut n = 0;
    while n < 1000 {
        let (y, z, x) = (rng.admissible(&cfg), rng.admissible(&cfg), rng.admissible(&cfg));
        let t = rng.uniform(0.0, 1.0);
        if cfg.distance(&y, &z) < 1e-12 {
            continue;
        }
        max_abs = max_abs.max(cfg.cat_comparison_residual(&y, &z, &x, t)?.abs());
        n += 1;
    }
    outcome(max_abs <= 1e-10, format!("max |residual| = {max_abs:.3e} over {n} samples (tol 1e-10)"))
}

fn penalty_identities() -> Result<Outcome> {
    let cfg = cfg();
    let mut rng = PointSampler::new(SEED);
    let mut split_err = 0.0f64;
    let mut closed_err = 0.0f64;
    for _ in 0..1000 {
        let (x, y) = (rng.admissible(&cfg), rng.admissible(&cfg));
        let full = penalty_value(PenaltyKind::Full, &x, &y, &cfg)?;
        let theta = cfg.sqrt_kappa() * cfg.distance(&x, &y);
        split_err = split_err.max((full - psi1(&x, &y, &cfg)? - psi2(&x, &y, &cfg)?).abs());
        closed_err = closed_err.max((full - theta.sin().powi(2) / (cfg.kappa() * theta.cos())).abs());
    }
    // Nearly flat space: d(x, y) = d exactly by placing x, y symmetric about the base.
    let flat = SpaceConfig::with_kappa(1e-6)?;
    let r = flat.admissible_radius();
    let mut flat_err = 0.0f64;
    for d in [0.1, 0.5, 1.0] {
        let d = d * (2.0 * r).min(1.0);
        let x = polar_point(&flat, flat.base(), d / 2.0, 0.0)?;
        let y = polar_point(&flat, flat.base(), d / 2.0, PI)?;
        let dist = flat.distance(&x, &y);
        let psi = penalty_value(PenaltyKind::Full, &x, &y, &flat)?;
        flat_err = flat_err.max((psi - dist * dist).abs() / (dist * dist));
        flat_err = flat_err.max((dist - d).abs() / d);
    }
    outcome(
        split_err <= 1e-12 && closed_err <= 1e-12 && flat_err <= 1e-6,
        format!(
            "|Psi - Psi1 - Psi2| = {split_err:.3e}, |Psi - closed form| = {closed_err:.3e} (tol 1e-12); \
             kappa=1e-6 relative error vs d^2 = {flat_err:.3e} (tol 1e-6)"
        ),
    )
}

fn uniform_convexity() -> Result<Outcome> {
    let cfg = cfg();
    let mut rng = PointSampler::new(SEED);
    let mut w = f64::INFINITY;
    let mut n = 0;
    while n < 1000 {
        let (x, y, z) = (rng.admissible(&cfg), rng.admissible(&cfg), rng.admissible(&cfg));
        let dyz = cfg.distance(&y, &z);
        if dyz < 1e-12 {
            continue;
        }
        w = w.min(uniform_convexity_gap(&x, &y, &z, &cfg)? - dyz * dyz / 32.0);
        n += 1;
    }
    outcome(w >= -1e-10, format!("min(gap - d^2/32) = {w:.3e} over {n} triples (tol -1e-10)"))
}

/// Central differences of `f` along each tangent basis direction at `y`,
/// walking along geodesics.
fn fd_gradient<F: Fn(&SpherePoint) -> f64>(cfg: &SpaceConfig, y: &SpherePoint, f: F) -> Result<DVector<f64>> {
    let h = 1e-5;
    let mut g = DVector::zeros(y.ambient_dim());
    for e in cfg.tangent_basis(y) {
        let plus = cfg.exp(&TangentVector::new(y.clone(), &e * h))?;
        let minus = cfg.exp(&TangentVector::new(y.clone(), &e * -h))?;
        g += &e * ((f(&plus) - f(&minus)) / (2.0 * h));
    }
    Ok(g)
}

fn gradient_checks() -> Result<Outcome> {
    let cfg = cfg();
    let mut rng = PointSampler::new(SEED);
    let objectives = [
        standard_median(&cfg),
        standard_frechet(&cfg),
        Objective::cosine_distance(standard_anchors(&cfg)[1].clone()),
    ];
    let anchors = standard_anchors(&cfg);
    let mut rel = 0.0f64;
    let mut n = 0;
    while n < 100 {
        let (x, y) = (rng.admissible(&cfg), rng.admissible(&cfg));
        // Smooth points only: away from the anchors and from x.
        if cfg.distance(&x, &y) < 1e-2 || anchors.iter().any(|a| cfg.distance(a, &y) < 1e-2) {
            continue;
        }
        for kind in [PenaltyKind::Full, PenaltyKind::PsiOne, PenaltyKind::PsiTwo, PenaltyKind::SquaredDistance] {
            let g = penalty_gradient(kind, &x, &y, &cfg)?;
            let fd = fd_gradient(&cfg, &y, |p| penalty_value(kind, &x, p, &cfg).unwrap())?;
            rel = rel.max((g.vector() - fd).norm() / g.norm());
        }
        for f in &objectives {
            let g = f.subgradient(&y, &cfg)?;
            let fd = fd_gradient(&cfg, &y, |p| f.value(p, &cfg).to_f64())?;
            rel = rel.max((g.vector() - fd).norm() / g.norm());
        }
        n += 1;
    }
    outcome(rel <= 1e-5, format!("max relative error = {rel:.3e} over {n} points (tol 1e-5)"))
}

fn resolvent_vs_oracle() -> Result<Outcome> {
    let cfg = cfg();
    let f = standard_median(&cfg);
    let mut rng = PointSampler::new(SEED);
    let mut d = 0.0f64;
    for _ in 0..20 {
        let x = rng.admissible(&cfg);
        for lambda in LAMBDAS {
            let j = resolve(&f, &x, &ResolventParams::new(lambda), &cfg)?.point;
            let o = resolve_oracle(&f, &x, lambda, PenaltyKind::Full, 2e-3, &cfg)?;
            d = d.max(cfg.distance(&j, &o));
        }
    }
    outcome(d <= 5e-3, format!("max d(resolve, oracle) = {d:.3e} over 60 cases (tol 5e-3)"))
}

fn indicator_projection() -> Result<Outcome> {
    let cfg = cfg();
    let ball = standard_ball(&cfg);
    let f = Objective::indicator_ball(ball.clone());
    let mut rng = PointSampler::new(SEED);
    let (mut to_proj, mut spread) = (0.0f64, 0.0f64);
    let mut n = 0;
    while n < 50 {
        let x = rng.admissible(&cfg);
        if ball.contains(&x, &cfg) {
            continue;
        }
        let p = cfg.project_to_ball(&x, &ball)?;
        let js = LAMBDAS
            .iter()
            .map(|&l| resolve(&f, &x, &ResolventParams::new(l), &cfg).map(|r| r.point))
            .collect::<Result<Vec<_>>>()?;
        for j in &js {
            to_proj = to_proj.max(cfg.distance(j, &p));
            spread = spread.max(cfg.distance(j, &js[0]));
        }
        n += 1;
    }
    outcome(
        to_proj <= 1e-6 && spread <= 1e-6,
        format!("max d(J x, P x) = {to_proj:.3e}, max spread across lambda = {spread:.3e} (tol 1e-6)"),
    )
}

fn lemma_inequality() -> Result<Outcome> {
    let cfg = cfg();
    let objectives = [standard_median(&cfg), standard_frechet(&cfg)];
    let mut rng = PointSampler::new(SEED);
    let (mut stated, mut sharp) = (Vec::new(), Vec::new());
    for k in 0..1000 {
        let f = &objectives[k % 2];
        let params = ResolventParams::new(*rng.pick(&LAMBDAS));
        let (x, z) = (rng.admissible(&cfg), rng.admissible(&cfg));
        stated.push(check_lemma_inequality(f, &x, &z, &params, &cfg)?);
        sharp.push(check_lemma_inequality_sharp(f, &x, &z, &params, &cfg)?);
    }
    let mut equality = 0.0f64;
    for k in 0..100 {
        let f = &objectives[k % 2];
        let params = ResolventParams::new(*rng.pick(&LAMBDAS));
        let x = rng.admissible(&cfg);
        let j = resolve(f, &x, &params, &cfg)?.point;
        equality = equality.max(check_lemma_inequality(f, &x, &j, &params, &cfg)?.abs());
    }
    let w = worst(stated.iter().copied());
    let violations = stated.iter().filter(|r| **r < -1e-7).count();
    let w_sharp = worst(sharp.iter().copied());
    outcome(
        w >= -1e-7 && equality <= 1e-9,
        format!(
            "min residual = {w:.3e} ({violations}/1000 below -1e-7); z = J x: max |residual| = {equality:.3e} (tol 1e-9); \
             with factor c/sin c in place of 2: min residual = {w_sharp:.3e}"
        ),
    )
}

fn nonspreading_and_fixed_point() -> Result<Outcome> {
    let cfg = cfg();
    let ball = standard_ball(&cfg);
    let objectives = [
        standard_median(&cfg),
        standard_frechet(&cfg),
        Objective::indicator_ball(ball.clone()),
    ];
    let minimizers = [
        minimize(&objectives[0], cfg.base(), &cfg)?,
        minimize(&objectives[1], cfg.base(), &cfg)?,
    ];
    let mut rng = PointSampler::new(SEED);
    let (mut ns, mut fp) = (f64::INFINITY, f64::INFINITY);
    for k in 0..1000 {
        let f = &objectives[k % 3];
        let params = ResolventParams::new(*rng.pick(&LAMBDAS));
        let (x, z) = (rng.admissible(&cfg), rng.admissible(&cfg));
        ns = ns.min(check_nonspreading(f, &x, &z, &params, &cfg)?);
    }
    for k in 0..1000 {
        let f = &objectives[k % 3];
        let params = ResolventParams::new(*rng.pick(&LAMBDAS));
        let x = rng.admissible(&cfg);
        let z = match k % 3 {
            2 => rng.sample_in_ball(&cfg, &ball.center, ball.radius)?,
            i => minimizers[i].clone(),
        };
        fp = fp.min(check_fixed_point_inequality(f, &x, &z, &params, &cfg)?);
    }
    outcome(
        ns >= -1e-7 && fp >= -1e-7,
        format!("min nonspreading residual = {ns:.3e}, min fixed-point residual = {fp:.3e} (tol -1e-7)"),
    )
}

fn ppa_convergence() -> Result<Outcome> {
    let cfg = cfg();
    let a = cfg.base().clone();
    let f = Objective::geometric_median(vec![a.clone()])?;
    let x0 = polar_point(&cfg, &a, 0.6, 2.0)?;
    let trace = proximal_point(&f, &x0, &Schedule::constant(1.0, 50)?, &RunSettings::default(), &cfg)?;
    let d = cfg.distance(trace.final_point(), &a);
    let fejer = check_fejer(&trace, &a, &cfg);
    let mono = check_monotone_values(&trace);
    let rate = check_rate_bound(&trace, 0.0, &cfg);
    outcome(
        d <= 1e-3 && fejer >= -1e-8 && mono >= -1e-9 && rate >= -1e-7,
        format!(
            "d(x_final, a) = {d:.3e} after {} steps (tol 1e-3); Fejer {fejer:.3e} (tol -1e-8); \
             monotone {mono:.3e} (tol -1e-9); rate bound {rate:.3e} from n0 = {} (tol -1e-7)",
            trace.steps(),
            rate_bound_start(&trace, &cfg)
        ),
    )
}

/// Golden-section search for the minimum of `g` on `[0, 1]`.
fn golden<G: Fn(f64) -> f64>(g: G) -> f64 {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let (mut lo, mut hi) = (0.0, 1.0);
    while hi - lo > 1e-12 {
        let (m1, m2) = (hi - r * (hi - lo), lo + r * (hi - lo));
        if g(m1) <= g(m2) {
            hi = m2;
        } else {
            lo = m1;
        }
    }
    0.5 * (lo + hi)
}

fn resolvent_curve_limit() -> Result<Outcome> {
    let cfg = cfg();
    let settings = RunSettings::default();
    let lambdas = [1.0, 10.0, 100.0, 1000.0];
    let f = standard_frechet(&cfg);
    let z_star = minimize(&f, cfg.base(), &cfg)?;
    let x = polar_point(&cfg, cfg.base(), 0.65, 2.8)?;
    let d: Vec<f64> = resolvent_curve(&f, &x, &lambdas, &settings, &cfg)?
        .iter()
        .map(|(_, p)| cfg.distance(p, &z_star))
        .collect();
    let decreasing = d.windows(2).all(|w| w[1] < w[0]);

    let a1 = polar_point(&cfg, cfg.base(), 0.4, 0.0)?;
    let a2 = polar_point(&cfg, cfg.base(), 0.4, PI)?;
    let seg = Objective::geometric_median(vec![a1.clone(), a2.clone()])?;
    let x = polar_point(&cfg, cfg.base(), 0.5, 1.2)?;
    let along = |t: f64| cfg.geodesic_point(&a1, &a2, t).unwrap();
    let nearest = along(golden(|t| cfg.distance(&x, &along(t))));
    let limit = &resolvent_curve(&seg, &x, &[1000.0], &settings, &cfg)?[0].1;
    let seg_err = cfg.distance(limit, &nearest);
    outcome(
        decreasing && d[3] <= 1e-2 && seg_err <= 2e-2,
        format!(
            "d(J x, z*) = [{}] strictly decreasing: {decreasing}, last <= 1e-2; segment limit vs nearest point = {seg_err:.3e} (tol 2e-2)",
            d.iter().map(|v| format!("{v:.3e}")).collect::<Vec<_>>().join(", ")
        ),
    )
}

fn composite_config(out: &Path, algorithm: &str, cycles: usize) -> serde_json::Value {
    let cfg = cfg();
    let components: Vec<_> = standard_anchors(&cfg)
        .iter()
        .map(|a| json!({"kind": "distance_sum", "anchors": [a.coords()]}))
        .collect();
    json!({
        "space": {"kappa": 1.0, "dim": 2},
        "objective": {"kind": "composite", "components": components},
        "algorithm": algorithm,
        "schedule": {"kind": "harmonic", "parameters": [1.0], "length": cycles},
        "seed": SEED,
        "output_path": out,
        "reference": "oracle"
    })
}

fn splitting_ppa() -> Result<Outcome> {
    let cfg = cfg();
    let anchors = standard_anchors(&cfg);
    let median = standard_median(&cfg);
    let parts: Vec<Objective> = Objective::split_distance_sum(&anchors, &[1.0; 3])?
        .components()
        .into_iter()
        .cloned()
        .collect();
    let x0 = PointSampler::new(SEED).admissible(&cfg);
    let sched = Schedule::harmonic(1.0, 300)?;
    let trace = splitting_proximal_point(&parts, &x0, &sched, 300, &RunSettings::default(), true, &cfg)?;
    let oracle = grid_minimize(&median, &cfg.admissible_ball(), 2e-3, &cfg)?;
    let f_gap = (trace.final_value() - median.value(&oracle, &cfg).to_f64()).abs();

    let lip = largest(parts.iter().map(|p| p.lipschitz_bound(&cfg).unwrap_or(f64::INFINITY)));
    let step = check_splitting_step_bound(&trace, lip, &sched, &cfg)?;
    let z_star = minimize(&median, &oracle, &cfg)?;
    let (a, b, j0) = splitting_sequence(&trace, &z_star, &cfg)?;
    let seq = check_sequence_lemma(&a, &b, j0)?;

    let dir = tempfile::tempdir().expect("temporary directory");
    let config = dir.path().join("compare.json");
    std::fs::write(&config, composite_config(&dir.path().join("compare.csv"), "splitting", 300).to_string()).unwrap();
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = cmd_compare(&config, None, &mut out, &mut err);
    let first = String::from_utf8_lossy(&out).lines().next().unwrap_or_default().to_string();
    let fields: Vec<f64> = first
        .split_whitespace()
        .filter_map(|kv| kv.split_once('=').and_then(|(_, v)| v.parse().ok()))
        .collect();
    let agree = if code == EXIT_OK && fields.len() == 3 {
        (fields[1] - fields[2]).abs()
    } else {
        f64::INFINITY
    };
    outcome(
        f_gap <= 1e-2 && step >= -1e-8 && seq >= -1e-10 && agree <= 1e-2,
        format!(
            "|f_final - f_oracle| = {f_gap:.3e} (tol 1e-2); step bound {step:.3e} with L = {lip}; \
             sequence lemma {seq:.3e} from j0 = {j0}; compare |f_ppa - f_splitting| = {agree:.3e} (tol 1e-2)"
        ),
    )
}

fn determinism() -> Result<Outcome> {
    let dir = tempfile::tempdir().expect("temporary directory");
    let mut identical = true;
    let mut runs = 0;
    for algorithm in ["ppa", "picard", "splitting", "resolvent-curve"] {
        let mut bytes = Vec::new();
        for k in 0..2 {
            let csv = dir.path().join(format!("{algorithm}-{k}.csv"));
            let mut value = composite_config(&csv, algorithm, 40);
            if algorithm == "picard" {
                value["schedule"] = json!({"kind": "constant", "parameters": [0.5], "length": 40});
            }
            if algorithm == "resolvent-curve" {
                value["schedule"] = json!({"kind": "explicit", "parameters": [1.0, 10.0, 100.0, 1000.0]});
            }
            let config = dir.path().join(format!("{algorithm}-{k}.json"));
            std::fs::write(&config, value.to_string()).unwrap();
            let (mut out, mut err) = (Vec::new(), Vec::new());
            if cmd_run(&config, None, &mut out, &mut err) != EXIT_OK {
                return outcome(false, format!("{algorithm}: {}", String::from_utf8_lossy(&err).trim()));
            }
            bytes.push(std::fs::read(&csv).unwrap());
        }
        identical &= bytes[0] == bytes[1];
        runs += 1;
    }
    outcome(identical, format!("{runs} configurations run twice each, CSV byte-identical: {identical}"))
}

fn main() -> ExitCode {
    let criteria: [(&str, Criterion); 12] = [
        ("comparison equality", comparison_equality),
        ("penalty identities", penalty_identities),
        ("uniform convexity", uniform_convexity),
        ("gradient checks", gradient_checks),
        ("resolvent vs oracle", resolvent_vs_oracle),
        ("indicator resolvent = projection", indicator_projection),
        ("lemma inequality", lemma_inequality),
        ("nonspreading and fixed point", nonspreading_and_fixed_point),
        ("proximal point convergence", ppa_convergence),
        ("resolvent curve limit", resolvent_curve_limit),
        ("splitting proximal point", splitting_ppa),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let started = Instant::now();
        let result = run();
        let secs = started.elapsed().as_secs_f64();
        let (pass, detail) = match result {
            Ok(o) => (o.pass && secs <= TIME_LIMIT_SECS, o.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        failed += usize::from(!pass);
        println!(
            "{} {:>2} {name}: {detail} [{secs:.2}s]",
            if pass { "PASS" } else { "FAIL" },
            i + 1
        );
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
