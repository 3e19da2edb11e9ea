//! End-to-end acceptance checks, one line per criterion.
//!
//!     cargo test --release --test acceptance

use std::f64::consts::PI;
use std::fs;
use std::num::NonZeroUsize;
use std::path::Path;
use std::time::{Duration, Instant};

use gauss_quad::GaussLegendre;
use neumann_sieve::cell::{radial_capacity, scan_ell_continuity, scan_lipschitz, scan_upper_bound, solve_phi, CellProblemSpec, CellRegime};
use neumann_sieve::cli::{execute, ExperimentConfig, RunOptions};
use neumann_sieve::energy::EnergyDensity;
use neumann_sieve::mesh::{build_annulus_mesh, BoundaryTag};
use neumann_sieve::regime::{
    classify, gamma_trend, poincare_check, LimitValue, Profile, RegimeLabel, RegimeSequences, Sequence, Shape, TrendOptions,
};
use neumann_sieve::solver::{minimize, BoundaryCondition, SolveOptions};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn within(t: Instant, budget: Duration, what: &str) -> Result<(), String> {
    let took = t.elapsed();
    if took > budget {
        return Err(format!("{what} took {took:.1?}, budget {budget:?}"));
    }
    Ok(())
}

fn err(e: neumann_sieve::Error) -> String {
    e.to_string()
}

/// `|S^{d-1}| / (∫_1^R s^{-(d-1)/(p-1)} ds)^{p-1}` by Gauss-Legendre.
fn quadrature_capacity(d: usize, p: f64, r: f64) -> f64 {
    let sphere = [2.0 * PI, 4.0 * PI, 2.0 * PI * PI][d - 2];
    let a = (d as f64 - 1.0) / (p - 1.0);
    let gl = GaussLegendre::new(NonZeroUsize::new(40).unwrap());
    // s = 1/t maps (1, R) onto (1/R, 1) with integrand t^{a-2}
    let lo = if r.is_infinite() { 0.0 } else { 1.0 / r };
    let integral = gl.integrate(lo, 1.0, |t| t.powf(a - 2.0));
    sphere / integral.powf(p - 1.0)
}

fn c1_radial_capacity() -> Outcome {
    let t = Instant::now();
    let two = radial_capacity(3, 2.0, 1.0, 2.0).map_err(err)?;
    let inf = radial_capacity(3, 2.0, 1.0, f64::INFINITY).map_err(err)?;
    let mut worst = ((two - 8.0 * PI) / (8.0 * PI)).abs().max(((inf - 4.0 * PI) / (4.0 * PI)).abs());
    for (d, p, r) in [(3, 2.0, 2.0), (3, 2.0, f64::INFINITY), (3, 1.5, 4.0), (4, 2.5, f64::INFINITY), (2, 1.5, 3.0)] {
        let oracle = quadrature_capacity(d, p, r);
        let c = radial_capacity(d, p, 1.0, r).map_err(err)?;
        worst = worst.max(((c - oracle) / oracle).abs());
    }
    within(t, Duration::from_secs(1), "capacity")?;
    check(worst < 1e-10, format!("8π and 4π reproduced, worst rel. error vs quadrature {worst:.1e}"))
}

fn c2_shell_capacity() -> Outcome {
    let bc = BoundaryCondition::new().with(BoundaryTag::Inner, vec![1.0]).map_err(err)?.with(BoundaryTag::Outer, vec![0.0]).map_err(err)?;
    let mut parts = Vec::new();
    let mut ok = true;
    for p in [1.5, 2.0] {
        let t = Instant::now();
        let w = EnergyDensity::power(1, 3, p).map_err(err)?;
        let exact = radial_capacity(3, p, 1.0, 2.0).map_err(err)?;
        let mut e = Vec::new();
        for h in [0.1, 0.05] {
            let mesh = build_annulus_mesh(3, 1.0, 2.0, h, 1.0).map_err(err)?;
            let (_, diag) = minimize(&mesh, &w, &bc, 1.0, &SolveOptions::default()).map_err(err)?;
            e.push(diag.final_energy);
        }
        let rich = e[1] + (e[1] - e[0]) / 3.0;
        let rel = (rich - exact).abs() / exact;
        within(t, Duration::from_secs(120), &format!("shell p = {p}"))?;
        ok &= rel < 0.01;
        parts.push(format!("p = {p}: rel. error {rel:.1e}"));
    }
    check(ok, parts.join(", "))
}

fn c3_membrane_phi() -> Outcome {
    let t = Instant::now();
    let w = EnergyDensity::power(1, 4, 2.0).map_err(err)?;
    let spec = CellProblemSpec::new(CellRegime::Infinite, vec![1.0], 3, w)
        .and_then(|s| s.with_truncations(vec![4.0, 8.0, 16.0, 32.0]))
        .map_err(err)?;
    let r = solve_phi(&spec).map_err(err)?;
    let rel = (r.phi_extrapolated - 2.0 * PI).abs() / (2.0 * PI);
    within(t, Duration::from_secs(600), "membrane φ")?;
    check(rel < 0.03, format!("φ → {:.5} vs 2π, rel. error {rel:.1e}", r.phi_extrapolated))
}

fn c4_homogeneity() -> Outcome {
    let t = Instant::now();
    let p = 2.0;
    let w = EnergyDensity::power(1, 4, p).map_err(err)?;
    let solver = SolveOptions::default();
    let tol = 2.0 * solver.grad_tol;
    let mut worst: f64 = 0.0;
    let mut parts = Vec::new();
    for regime in [CellRegime::Finite { ell: 1.0 }, CellRegime::Infinite, CellRegime::Zero] {
        let spec = CellProblemSpec::new(regime, vec![1.0], 3, w.clone()).map_err(err)?;
        let one = solve_phi(&spec).map_err(err)?;
        for lambda in [0.5, 2.0] {
            let r = solve_phi(&spec.clone().with_z(vec![lambda]).map_err(err)?).map_err(err)?;
            let s = lambda.powf(p);
            for (a, b) in r.phi_by_n.iter().zip(&one.phi_by_n) {
                worst = worst.max((a - s * b).abs() / (s * b));
            }
            worst = worst.max((r.phi_extrapolated - s * one.phi_extrapolated).abs() / (s * one.phi_extrapolated));
        }
        let zero = solve_phi(&spec.clone().with_z(vec![0.0]).map_err(err)?).map_err(err)?;
        if zero.phi_extrapolated != 0.0 || zero.phi_by_n.iter().any(|v| *v != 0.0) {
            return Err(format!("{}: φ(0) = {}", regime.label(), zero.phi_extrapolated));
        }
        if one.phi_by_n.windows(2).any(|v| v[1] > v[0]) {
            return Err(format!("{}: φ_N increases: {:?}", regime.label(), one.phi_by_n));
        }
        parts.push(format!("{} φ(1) = {:.4}", regime.label(), one.phi_extrapolated));
    }
    within(t, Duration::from_secs(1800), "homogeneity")?;
    check(worst <= tol, format!("worst homogeneity defect {worst:.1e} (tol {tol:.1e}), φ(0) = 0, φ_N non-increasing; {}", parts.join(", ")))
}

fn c5_estimates() -> Outcome {
    let t = Instant::now();
    let w = EnergyDensity::power(1, 4, 2.0).map_err(err)?;
    // 20 jumps spread over two decades, and 20 pairs of neighbours among 21
    let zs: Vec<Vec<f64>> = (0..20).map(|k| vec![0.1 * 100f64.powf(k as f64 / 19.0)]).collect();
    let chain: Vec<f64> = (0..21).map(|k| -2.0 + 4.0 * k as f64 / 20.0 + 0.013).collect();
    let pairs: Vec<(Vec<f64>, Vec<f64>)> = chain.windows(2).map(|v| (vec![v[0]], vec![v[1]])).collect();
    let mut parts = Vec::new();
    let mut ok = true;
    for regime in [CellRegime::Finite { ell: 1.0 }, CellRegime::Infinite, CellRegime::Zero] {
        let mut constants = Vec::new();
        for (h, n_list) in [(0.5, vec![3.0, 6.0, 12.0]), (0.25, vec![2.0, 4.0, 8.0])] {
            let spec = CellProblemSpec::new(regime, vec![1.0], 3, w.clone())
                .and_then(|s| s.with_truncations(n_list))
                .and_then(|s| s.with_mesh(h, 1.15))
                .map_err(err)?;
            let ub = scan_upper_bound(&spec, &zs).map_err(err)?;
            let lip = scan_lipschitz(&spec, &pairs).map_err(err)?;
            if !(ub.passed && lip.finite && ub.empirical_c.is_finite()) {
                ok = false;
                let bad: Vec<String> = ub
                    .rows
                    .iter()
                    .filter(|r| !r.pass)
                    .map(|r| format!("|z| = {:.3}: φ {:.4e} > {:.4e}", r.z_norm, r.phi, r.bound + r.margin))
                    .collect();
                parts.push(format!("{} h = {h}: lipschitz finite {}, violations {bad:?}", regime.label(), lip.finite));
            }
            constants.push((ub.empirical_c, lip.worst));
        }
        let stable = |a: f64, b: f64| a.max(b) <= 2.0 * a.min(b);
        let (coarse, fine) = (constants[0], constants[1]);
        ok &= stable(coarse.0, fine.0) && stable(coarse.1, fine.1);
        parts.push(format!("{}: c {:.3}/{:.3}, L {:.3}/{:.3}", regime.label(), coarse.0, fine.0, coarse.1, fine.1));
    }
    within(t, Duration::from_secs(3600), "estimate scans")?;
    check(ok, format!("two meshes (h = 0.5/0.25); {}", parts.join("; ")))
}

fn c6_regimes() -> Outcome {
    let t = Instant::now();
    let seq = |d: f64, r: f64| RegimeSequences {
        eps: Sequence::power(2.0, -1.0),
        delta: Sequence::power(2.0, -d),
        r: Sequence::power(2.0, -r),
        n: 3,
        p: 1.5,
    };
    let inf = classify(&seq(5.0, 4.0)).map_err(err)?;
    let fin = classify(&seq(4.0, 4.0)).map_err(err)?;
    let zero = classify(&seq(1.5, 7.0 / 3.0)).map_err(err)?;
    let one = LimitValue::Finite(1.0);
    let mut ok = inf.ell == LimitValue::Infinite && inf.r_ell == one && inf.label == RegimeLabel::Infinite;
    ok &= fin.ell == one && fin.r_ell == one && fin.r_zero == one && fin.label == RegimeLabel::Finite;
    ok &= zero.ell == LimitValue::Zero && zero.r_zero == one && zero.label == RegimeLabel::Zero;
    // R0 = ℓ Rℓ with ℓ = 3, Rℓ = 1/3 after rescaling r by 3
    let scaled = RegimeSequences { r: Sequence::Exponent { coef: 3.0, base: 2.0, exponent: -4.0 }, ..seq(4.0, 4.0) };
    let s = classify(&scaled).map_err(err)?;
    let identity = match (s.ell, s.r_ell, s.r_zero) {
        (LimitValue::Finite(l), LimitValue::Finite(re), LimitValue::Finite(rz)) => ((rz - l * re) / rz).abs(),
        _ => f64::INFINITY,
    };
    ok &= identity < 1e-9 && fin.consistency == Some(0.0);
    within(t, Duration::from_secs(1), "classify")?;
    check(ok, format!("ℓ = ∞/1/0 with R = 1; R0 = ℓ·Rℓ to {identity:.1e}"))
}

fn c7_ell_continuity() -> Outcome {
    let t = Instant::now();
    let w = EnergyDensity::power(1, 4, 2.0).map_err(err)?;
    let spec = CellProblemSpec::new(CellRegime::Infinite, vec![1.0], 3, w).map_err(err)?;
    let ells: Vec<CellRegime> = [1.0, 2.0, 4.0, 8.0, 16.0].iter().map(|&ell| CellRegime::Finite { ell }).collect();
    let rows = scan_ell_continuity(&spec, &ells, 8.0).map_err(err)?;
    let gaps: Vec<f64> = rows.iter().map(|r| r.gap).collect();
    within(t, Duration::from_secs(3600), "ℓ continuity")?;
    let last = *gaps.last().unwrap();
    check(
        gaps.windows(2).all(|g| g[1] < g[0]) && last < 0.10,
        format!("gaps {:?} at N = 8", gaps.iter().map(|g| format!("{g:.4}")).collect::<Vec<_>>()),
    )
}

fn c8_poincare() -> Outcome {
    let t = Instant::now();
    let scales = [1.0, 1e-1, 1e-2, 1e-3];
    let rep = poincare_check(Shape::Square, 2.0, &scales, &scales, &[Profile::Linear], 16).map_err(err)?;
    let dev = rep.rows.iter().map(|r| (r.ratio - 1.0 / 12.0).abs() * 12.0).fold(0.0, f64::max);
    let mixed = poincare_check(Shape::Pair, 1.5, &scales, &scales, &[Profile::Linear, Profile::Mixed], 16).map_err(err)?;
    within(t, Duration::from_secs(60), "Poincaré")?;
    check(
        dev < 1e-10 && rep.variation < 0.05 && mixed.variation < 0.05,
        format!("x₁ ratio 1/12 to {dev:.1e}, variation {:.1e} (square), {:.1e} (pair, mixed)", rep.variation, mixed.variation),
    )
}

fn c9_gamma_trend() -> Outcome {
    let t = Instant::now();
    let w = EnergyDensity::power(1, 3, 1.5).map_err(err)?;
    let two = |e: f64| Sequence::power(2.0, e);
    let seq = |delta, r| RegimeSequences { eps: two(-1.0), delta, r, n: 3, p: 1.5 };
    let opts = TrendOptions::default();
    let inf = gamma_trend(&seq(two(-5.0), two(-4.0)), &[1, 2, 3], (1.0, 0.0), &w, &opts).map_err(err)?;
    let sub = gamma_trend(&seq(two(-7.0), two(-6.0)), &[1, 2, 3], (1.0, 0.0), &w, &opts).map_err(err)?;
    within(t, Duration::from_secs(7200), "Γ-trend")?;
    let gaps: Vec<String> = inf.rows.iter().map(|r| format!("{:.4}", r.gap)).collect();
    let films: Vec<String> = sub.rows.iter().map(|r| format!("{:.3}", r.film)).collect();
    check(inf.passed && sub.passed, format!("membrane gaps {gaps:?}, sub-critical film energies {films:?}"))
}

fn outputs(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.is_file() && p.file_name().unwrap() != "manifest.json")
        .map(|p| (p.file_name().unwrap().to_string_lossy().to_string(), fs::read(&p).unwrap()))
        .collect();
    files.sort();
    files
}

fn stripped_manifest(dir: &Path) -> serde_json::Value {
    let mut v: serde_json::Value = serde_json::from_slice(&fs::read(dir.join("manifest.json")).unwrap()).unwrap();
    let obj = v.as_object_mut().unwrap();
    obj.remove("timestamp");
    obj.remove("timing");
    v
}

fn c10_determinism() -> Outcome {
    let root = concat!(env!("CARGO_MANIFEST_DIR"), "/configs");
    let mut names: Vec<String> = fs::read_dir(root)
        .map_err(|e| e.to_string())?
        .map(|e| e.unwrap().file_name().to_string_lossy().to_string())
        .filter(|n| n.ends_with(".toml") && !n.starts_with("bad_"))
        .collect();
    names.sort();
    let mut files = 0;
    for name in &names {
        let cfg = ExperimentConfig::load(Path::new(root).join(name).as_path()).map_err(err)?;
        let runs: Vec<tempfile::TempDir> = (0..2).map(|_| tempfile::tempdir().unwrap()).collect();
        for dir in &runs {
            execute(&cfg, &RunOptions { out: Some(dir.path().to_path_buf()), no_cache: true, ..Default::default() }).map_err(err)?;
        }
        let (a, b) = (outputs(runs[0].path()), outputs(runs[1].path()));
        if a != b {
            return Err(format!("{name}: outputs differ"));
        }
        if stripped_manifest(runs[0].path()) != stripped_manifest(runs[1].path()) {
            return Err(format!("{name}: manifests differ"));
        }
        files += a.len();
    }
    Ok(format!("{} configs, {files} output files byte-identical across re-runs", names.len()))
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("radial capacity oracle", c1_radial_capacity),
        ("FEM shell capacity", c2_shell_capacity),
        ("membrane interfacial density", c3_membrane_phi),
        ("homogeneity and positivity", c4_homogeneity),
        ("estimate compliance", c5_estimates),
        ("regime algebra", c6_regimes),
        ("continuity in ℓ", c7_ell_continuity),
        ("Poincaré scale invariance", c8_poincare),
        ("Γ-trend", c9_gamma_trend),
        ("determinism", c10_determinism),
    ];
    let only: Option<usize> = std::env::var("ACCEPTANCE_ONLY").ok().and_then(|v| v.parse().ok());
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        if only.is_some_and(|k| k != i + 1) {
            continue;
        }
        let t = Instant::now();
        let outcome = run();
        let secs = t.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS {:>2} {name} ({secs:.1} s): {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {:>2} {name} ({secs:.1} s): {detail}", i + 1);
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
