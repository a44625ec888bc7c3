//! Acceptance suite. Runs every criterion at full size, prints one
//! PASS/FAIL line per criterion and exits non-zero if any fails.

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use serde_json::{json, Value};

use sdl_core::estimates::*;
use sdl_core::report::ExperimentReport;

// Tolerances.
const BROWNIAN_SE: f64 = 3.0;
const BROWNIAN_BUDGET: Duration = Duration::from_secs(30);
const HEAT_L1: f64 = 1e-10;
const OSEEN_L1: f64 = 1e-5;
const OSEEN_BUDGET: Duration = Duration::from_secs(60);
const PARTICLE_L1: f64 = 0.05;
const PARTICLE_NOISE_SE: f64 = 2.0;
const ARONSON_SPREAD: f64 = 2.0;
const ARONSON_EXACT: f64 = 0.01;
const KRYLOV_GROWTH: f64 = 2.0;
const PLANE_SE: f64 = 3.0;
const GAP_SE: f64 = 5.0;
const CONE_PROBABILITY: f64 = 0.3;
const NONUNIQUENESS_BUDGET: Duration = Duration::from_secs(20 * 60);
const DECAY_FLAT: f64 = 0.05;
const DECAY_FACTOR: f64 = 10.0;
const FLOW_L1: f64 = 1e-4;
const DILATION: f64 = 1e-8;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: String) -> Verdict {
    Verdict { pass, detail }
}

fn value(r: &ExperimentReport, name: &str) -> f64 {
    r.value(name).unwrap_or_else(|| panic!("{}: missing result {name}", r.experiment))
}

fn c1_brownian() -> Verdict {
    let t = Instant::now();
    let r = brownian_baseline(&BrownianConfig { paths: 100_000, horizon: 1.0, ..Default::default() }).unwrap();
    let elapsed = t.elapsed();
    let mut ok = elapsed < BROWNIAN_BUDGET;
    let mut parts = Vec::new();
    for a in 0..2 {
        let Some(sdl_core::report::ResultValue::Ci { estimate, lower, upper, .. }) = r.result(&format!("variance[{a}]")).cloned() else {
            panic!("variance result must carry an interval")
        };
        // The interval is estimate ± 3 SE.
        let se = (upper - lower) / (2.0 * 3.0);
        let z = (estimate - 2.0) / se;
        ok &= z.abs() <= BROWNIAN_SE;
        parts.push(format!("var[{a}]={estimate:.4} ({z:+.2} SE)"));
    }
    verdict(ok, format!("{}, {:.1}s", parts.join(", "), elapsed.as_secs_f64()))
}

fn c2_heat() -> Verdict {
    let r = heat_sanity(&HeatConfig::default()).unwrap();
    let l1 = value(&r, "l1_vs_analytic");
    verdict(l1 <= HEAT_L1, format!("L1 = {l1:.2e} (tol {HEAT_L1:e})"))
}

fn c3_oseen() -> Verdict {
    let t = Instant::now();
    let cfg = OseenConfig::default();
    assert_eq!(cfg.times, vec![0.25, 0.5, 1.0]);
    let r = oseen_reduction(&cfg).unwrap();
    let elapsed = t.elapsed();
    let ls: Vec<f64> = cfg.times.iter().map(|t| value(&r, &format!("l1[t={}]", sdl_core::report::fmt_f64(*t)))).collect();
    let ok = ls.iter().all(|l| *l <= OSEEN_L1) && elapsed < OSEEN_BUDGET;
    verdict(ok, format!("L1 = {:.2e}/{:.2e}/{:.2e} at t = 0.25/0.5/1, M=512, {:.1}s", ls[0], ls[1], ls[2], elapsed.as_secs_f64()))
}

fn c4_particles() -> Verdict {
    let cfg = ParticlePdeConfig::default();
    let r = particle_pde_consistency(&cfg).unwrap();
    let pooled: Vec<f64> = cfg.particle_counts.iter().map(|n| value(&r, &format!("pooled_l1[N={n}]"))).collect();
    let se: Vec<f64> = cfg
        .particle_counts
        .iter()
        .map(|n| match r.result(&format!("seed_l1[N={n}]")) {
            Some(sdl_core::report::ResultValue::Ci { estimate, lower, .. }) => {
                // 99% normal interval half-width.
                (estimate - lower) / 2.5758293035489004
            }
            other => panic!("seed_l1 must be an interval, got {other:?}"),
        })
        .collect();
    let finest = *pooled.last().unwrap();
    let monotone = (1..pooled.len()).all(|i| pooled[i] <= pooled[i - 1] + PARTICLE_NOISE_SE * se[i].hypot(se[i - 1]));
    verdict(
        finest < PARTICLE_L1 && monotone,
        format!("L1 = {} along N = {:?}, {} seeds", pooled.iter().map(|v| format!("{v:.4}")).collect::<Vec<_>>().join(" > "), cfg.particle_counts, cfg.seeds),
    )
}

fn c5_aronson() -> Verdict {
    let cfg = AronsonConfig::default();
    let r = aronson_experiment(&cfg).unwrap();
    let get = |name: &str| -> Vec<f64> { cfg.levels.iter().map(|n| r.value(&format!("{name}[n={n}]")).unwrap_or(f64::INFINITY)).collect() };
    let (up, lo) = (get("C_upper"), get("C_lower"));
    let spread = |v: &[f64]| v.iter().cloned().fold(0.0, f64::max) / v.iter().cloned().fold(f64::INFINITY, f64::min);
    let (b0u, b0l) = (value(&r, "C_upper[b=0]"), value(&r, "C_lower[b=0]"));
    let ok = spread(&up) < ARONSON_SPREAD
        && spread(&lo) < ARONSON_SPREAD
        && (b0u - 1.0).abs() <= ARONSON_EXACT
        && (b0l - 1.0).abs() <= ARONSON_EXACT;
    verdict(
        ok,
        format!(
            "C_upper {:?} (spread {:.2}), C_lower {:?} (spread {:.2}), b=0: {:.4}/{:.4}",
            up.iter().map(|v| (v * 100.0).round() / 100.0).collect::<Vec<_>>(),
            spread(&up),
            lo.iter().map(|v| (v * 100.0).round() / 100.0).collect::<Vec<_>>(),
            spread(&lo),
            b0u,
            b0l
        ),
    )
}

fn c6_krylov() -> Verdict {
    let cfg = KrylovConfig::default();
    let r = krylov_scan(&cfg).unwrap();
    let first = cfg.levels[0];
    let last = *cfg.levels.last().unwrap();
    let mut ok = (first, last) == (2, 8);
    let mut parts = Vec::new();
    for (p, q) in &cfg.pairs {
        let tag = format!("{},{}", sdl_core::report::fmt_f64(*p), sdl_core::report::fmt_f64(*q));
        let a = value(&r, &format!("max_ratio[{tag};n={first}]"));
        let b = value(&r, &format!("max_ratio[{tag};n={last}]"));
        ok &= b <= KRYLOV_GROWTH * a;
        parts.push(format!("({tag}): {a:.3} -> {b:.3}"));
    }
    verdict(ok, parts.join(", "))
}

fn c7_nonuniqueness() -> Verdict {
    let cfg = NonuniquenessConfig::default();
    assert_eq!((cfg.d, cfg.p, cfg.kappa, cfg.paths), (3, 2.0, 1.2, 200_000));
    assert_eq!(cfg.deltas, vec![0.5, 0.25, 0.125]);
    let t = Instant::now();
    let rep = nonuniqueness_experiment(&cfg).unwrap();
    let elapsed = t.elapsed();
    let mut ok = elapsed < NONUNIQUENESS_BUDGET;
    let mut parts = vec![format!("N = {}", rep.amplitude)];
    // The pilot certifies the cone probability at the chosen amplitude.
    let chosen = rep.pilot.iter().find(|p| p.amplitude == rep.amplitude).expect("pilot row for chosen N");
    ok &= chosen.interval.0 >= CONE_PROBABILITY;
    for r in &rep.rungs {
        ok &= (r.epsilon - r.delta / 10.0).abs() < 1e-15;
        let plane_z = r.plane.mean / r.plane.std_error;
        let gap_z = (r.axis.mean - r.plane.mean) / r.axis.std_error.hypot(r.plane.std_error);
        ok &= plane_z.abs() <= PLANE_SE && gap_z >= GAP_SE;
        parts.push(format!("δ={}: axis {:.3}, plane {:+.1} SE, gap {:.0} SE", r.delta, r.axis.mean, plane_z, gap_z));
    }
    parts.push(format!("{:.0}s", elapsed.as_secs_f64()));
    verdict(ok, parts.join("; "))
}

fn c8_decay() -> Verdict {
    let cfg = DecayConfig::default();
    assert!((cfg.times[0] - 1e-3).abs() < 1e-15 && (cfg.times.last().unwrap() - 1e-1).abs() < 1e-12);
    let r = decay_experiment(&cfg).unwrap();
    let flat = value(&r, "atom_flatness");
    let factor = value(&r, "smooth_decay_factor");
    verdict(flat <= DECAY_FLAT && factor >= DECAY_FACTOR, format!("atom spread {flat:.1e}, smooth factor {factor:.1} over t ∈ [1e-3, 1e-1], r = {}", cfg.r))
}

fn c9_duhamel() -> Verdict {
    let cfg = DuhamelConfig::default();
    let r = duhamel_experiment(&cfg).unwrap();
    let ratios: Vec<f64> =
        cfg.masses.iter().map(|m| value(&r, &format!("contraction_ratio[m={}]", sdl_core::report::fmt_f64(*m)))).collect();
    let ok = ratios[0] < 1.0 && ratios.windows(2).all(|w| w[1] > w[0]);
    verdict(ok, format!("ratios {:?} at masses {:?}", ratios.iter().map(|v| format!("{v:.2e}")).collect::<Vec<_>>(), cfg.masses))
}

fn c10_flow() -> Verdict {
    let r = flow_experiment(&FlowConfig::default()).unwrap();
    let d = value(&r, "distance");
    verdict(d < FLOW_L1, format!("restart distance {d:.2e}, splitting error {:.2e}", value(&r, "splitting_error")))
}

fn c11_inequalities() -> Verdict {
    let cfg = InequalitiesConfig::default();
    assert_eq!(cfg.trials, 200);
    let r = inequalities_experiment(&cfg).unwrap();
    let mut ok = true;
    let mut parts = Vec::new();
    for kind in sdl_core::lorentz::InequalityKind::ALL {
        let n = kind.name();
        let violations = value(&r, &format!("{n}.violations"));
        let dev = value(&r, &format!("{n}.max_dilation_deviation"));
        let c = value(&r, &format!("{n}.fitted_C"));
        ok &= violations == 0.0 && dev <= DILATION && c.is_finite();
        parts.push(format!("{n} {:.3}/{:.3}", value(&r, &format!("{n}.max_ratio")), c));
    }
    verdict(ok, format!("max ratio/C: {}", parts.join(", ")))
}

fn run_cli(cfg: &Path, out: &Path, threads: usize) -> Option<i32> {
    Command::new(env!("CARGO_BIN_EXE_sdl-lab"))
        .args(["run", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()])
        .env("SDL_LAB_THREADS", threads.to_string())
        .output()
        .expect("sdl-lab runs")
        .status
        .code()
}

/// Every file except `header.json`, by name.
fn payload(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap())
        .filter(|e| e.file_name() != "header.json")
        .map(|e| (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap()))
        .collect();
    v.sort();
    v
}

/// Reduced configs for every registered experiment, each run three times:
/// twice with one worker and once with four.
fn c12_determinism() -> Verdict {
    let configs: Vec<Value> = vec![
        json!({"experiment": "heat-sanity", "heat": {"modes": 64}}),
        json!({"experiment": "brownian-baseline", "master_seed": 7, "brownian": {"paths": 4000}}),
        json!({"experiment": "oseen", "oseen": {"modes": 128, "times": [0.1]}}),
        json!({"experiment": "particle-pde", "particles": {"particle_counts": [200, 400], "seeds": 2, "modes": 64}}),
        json!({"experiment": "aronson", "aronson": {"modes": 64, "half_width": 4.0, "levels": [2, 4]}}),
        json!({"experiment": "krylov-scan", "krylov": {"paths": 400, "levels": [2, 4], "modes": 48}}),
        json!({"experiment": "holder", "holder": {"paths": 400, "levels": [2]}}),
        json!({"experiment": "nonuniqueness", "nonuniqueness": {"paths": 600, "pilot_paths": 600, "pilot_ladder": [1.0, 4.0], "deltas": [0.5, 0.25], "horizon": 1.0, "dt": 0.02}}),
        json!({"experiment": "decay", "decay": {"modes": 128}}),
        json!({"experiment": "duhamel", "duhamel": {"modes": 32, "intervals": 8}}),
        json!({"experiment": "flow", "flow": {"modes": 32, "half_width": 6.0, "horizon": 0.1, "r_mid": 0.05}}),
        json!({"experiment": "inequalities", "inequalities": {"trials": 4}}),
    ];
    let tmp = tempfile::tempdir().unwrap();
    let mut bad = Vec::new();
    for (i, cfg) in configs.iter().enumerate() {
        let id = cfg["experiment"].as_str().unwrap();
        let path = tmp.path().join(format!("{i}.json"));
        std::fs::write(&path, cfg.to_string()).unwrap();
        let runs: Vec<_> = [(1, "a"), (1, "b"), (4, "c")]
            .iter()
            .map(|(threads, tag)| {
                let out = tmp.path().join(format!("{i}{tag}"));
                let code = run_cli(&path, &out, *threads);
                (code, payload(&out))
            })
            .collect();
        if runs.iter().any(|(c, _)| !matches!(c, Some(0..=2))) {
            bad.push(format!("{id} errored {:?}", runs.iter().map(|r| r.0).collect::<Vec<_>>()));
        } else if runs[0].1 != runs[1].1 || runs[0].1 != runs[2].1 {
            bad.push(format!("{id} differs"));
        }
    }
    let n = configs.len();
    if bad.is_empty() {
        verdict(true, format!("{n} experiments byte-identical across reruns and 1/4 workers"))
    } else {
        verdict(false, bad.join("; "))
    }
}

fn main() {
    // `cargo test -- --list` and filtered runs probe the binary; only a
    // plain invocation runs the suite.
    let args: Vec<String> = std::env::args().skip(1).collect();
    if args.iter().any(|a| a == "--list") {
        println!("acceptance: test");
        return;
    }
    let criteria: [(&str, fn() -> Verdict); 12] = [
        ("1 brownian baseline", c1_brownian),
        ("2 heat-kernel identity", c2_heat),
        ("3 oseen radial reduction", c3_oseen),
        ("4 particle-pde consistency", c4_particles),
        ("5 aronson stability", c5_aronson),
        ("6 krylov-class stability", c6_krylov),
        ("7 non-uniqueness gap", c7_nonuniqueness),
        ("8 decay diagnostic", c8_decay),
        ("9 duhamel contraction", c9_duhamel),
        ("10 flow property", c10_flow),
        ("11 inequality suites", c11_inequalities),
        ("12 determinism", c12_determinism),
    ];
    let mut failed = 0;
    for (name, f) in criteria {
        let t = Instant::now();
        let v = f();
        if !v.pass {
            failed += 1;
        }
        println!("{} criterion {name}: {} [{:.1}s]", if v.pass { "PASS" } else { "FAIL" }, v.detail, t.elapsed().as_secs_f64());
    }
    println!("acceptance: {} passed, {failed} failed", 12 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
