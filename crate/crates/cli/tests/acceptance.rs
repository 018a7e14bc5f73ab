//! Acceptance gate. Runs every criterion, prints one PASS/FAIL line each and
//! exits nonzero if any criterion fails.

use std::path::Path;
use std::process::{Command, Output};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use weakrand_qkd::channel::simulate_link;
use weakrand_qkd::flaw::{binary_entropy, BoundMethod, RandomnessFlaw};
use weakrand_qkd::ingest::TemperatureKey;
use weakrand_qkd::keyrate::{
    biased_sps_rate, biased_wps_rate, sps_rate, wps_rate, BasisSplit, BiasedBasisInputs,
};
use weakrand_qkd::oracle::{
    bell_errors, build_state, closed_form_errors, jensen_check, verify_bounds, EveStrategy,
    HiddenVariableModel, PauliMixture,
};
use weakrand_qkd::search::{self, SweepSpec, SweepVariable};
use weakrand_qkd::{ChannelParams, Error, SourceSpec};

const BIN: &str = env!("CARGO_BIN_EXE_weakrand");

// Tolerances and budgets, one per criterion.
const C1_TOL: f64 = 0.001;
const C1_BUDGET: Duration = Duration::from_secs(1);
const C2_TOL: f64 = 0.005;
const C3_TOL_KM: f64 = 2.0;
const C3_BUDGET: Duration = Duration::from_secs(1);
const C4_TOL: f64 = 0.0015;
const C4_BUDGET: Duration = Duration::from_secs(1);
const C5_EQUIV_TOL: f64 = 1e-12;
const C5_RANDOM_STRATEGIES: usize = 10_000;
const C5_STEP: f64 = 0.05;
const C5_BUDGET: Duration = Duration::from_secs(30);
const C6_TOL: f64 = 1e-12;
const C6_THRESHOLD: f64 = 0.1100;
const C6_THRESHOLD_TOL: f64 = 0.0005;
const C7_MODELS: usize = 1_000;
const C7_BUDGET: Duration = Duration::from_secs(5);

/// Reference degradation table: (T °C, ε1, γ_SPS@3/5/7 %, γ_WPS@10/50/100 km).
type GammaRow = (f64, f64, [f64; 6]);

const REFERENCE_GAMMA: [GammaRow; 5] = [
    (-5.0, 0.0253, [0.0259, 0.0521, 0.1017, 0.0445, 0.0454, 0.0548]),
    (18.0, 0.0235, [0.0239, 0.0482, 0.0941, 0.0411, 0.0420, 0.0507]),
    (25.0, 0.0250, [0.0255, 0.0514, 0.1004, 0.0438, 0.0448, 0.0541]),
    (40.0, 0.0274, [0.0281, 0.0566, 0.1105, 0.0483, 0.0493, 0.0596]),
    (70.0, 0.0275, [0.0282, 0.0567, 0.1108, 0.0484, 0.0495, 0.0597]),
];

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn within_budget(start: Instant, budget: Duration) -> Result<Duration, String> {
    let t = start.elapsed();
    ensure(t < budget, format!("took {t:?}, budget {budget:?}"))?;
    Ok(t)
}

fn run_cli(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("run weakrand")
}

fn stdout_value(out: &Output, key: &str) -> Option<f64> {
    String::from_utf8_lossy(&out.stdout)
        .lines()
        .find_map(|l| l.strip_prefix(key)?.trim().parse().ok())
}

fn flaw(e0: f64, e1: f64) -> RandomnessFlaw {
    RandomnessFlaw::new(e0, e1).unwrap()
}

fn criterion_1() -> Check {
    let f = flaw(0.1, 0.1);
    let start = Instant::now();
    let orig = search::max_tolerable_error(&f, BoundMethod::Original).map_err(|e| e.to_string())?;
    let tight = search::max_tolerable_error(&f, BoundMethod::Tight).map_err(|e| e.to_string())?;
    let t = within_budget(start, C1_BUDGET)?;
    ensure((orig - 0.034).abs() <= C1_TOL, format!("original {orig}"))?;
    ensure((tight - 0.085).abs() <= C1_TOL, format!("tight {tight}"))?;

    for (method, expected) in [("original", 0.034), ("tight", 0.085)] {
        let start = Instant::now();
        let out = run_cli(&["tolerable-error", "--eps0", "0.1", "--eps1", "0.1", "--method", method]);
        within_budget(start, C1_BUDGET)?;
        ensure(out.status.success(), format!("cli exit {:?}", out.status))?;
        let v = stdout_value(&out, "max_tolerable_error:").ok_or("cli printed no value")?;
        ensure((v - expected).abs() <= C1_TOL, format!("cli {method} {v}"))?;
    }
    Ok(format!("original {orig:.5}, tight {tight:.5} ({t:?})"))
}

fn criterion_2() -> Check {
    let r = sps_rate(0.034, &flaw(0.1, 0.1), BoundMethod::Tight).map_err(|e| e.to_string())?;
    ensure((r.rate() - 0.454).abs() <= C2_TOL, format!("rate {}", r.rate()))?;
    let out = run_cli(&[
        "keyrate", "--source", "sps", "--ebit", "0.034", "--eps0", "0.1", "--eps1", "0.1",
        "--method", "tight",
    ]);
    ensure(out.status.success(), "cli failed")?;
    let v = stdout_value(&out, "rate:").ok_or("cli printed no rate")?;
    ensure((v - 0.454).abs() <= C2_TOL, format!("cli rate {v}"))?;
    Ok(format!("R = {:.5}", r.rate()))
}

fn criterion_3() -> Check {
    let f = flaw(0.1, 0.1);
    let (src, p) = (SourceSpec::gys(), ChannelParams::GYS);
    let start = Instant::now();
    let l = search::max_distance(&f, BoundMethod::Tight, &src, &p).map_err(|e| e.to_string())?;
    let none = search::max_distance(&f, BoundMethod::Original, &src, &p);
    let t = within_budget(start, C3_BUDGET)?;
    ensure((l - 132.0).abs() <= C3_TOL_KM, format!("tight reach {l} km"))?;
    ensure(
        matches!(none, Err(Error::NoPositiveRate(_))),
        format!("original gave {none:?}"),
    )?;
    // No key at any distance, checked pointwise every 0.5 km.
    for k in 0..=1000 {
        let obs = simulate_link(0.5 * k as f64, &src, &p).unwrap();
        let r = wps_rate(&obs, &f, BoundMethod::Original, &p).unwrap();
        ensure(!r.has_key(), format!("original key at {} km", 0.5 * k as f64))?;
    }

    let out = run_cli(&["max-distance", "--preset", "gys", "--eps0", "0.1", "--eps1", "0.1", "--method", "tight"]);
    let v = stdout_value(&out, "max_distance_km:").ok_or("cli printed no distance")?;
    ensure((v - 132.0).abs() <= C3_TOL_KM, format!("cli {v}"))?;
    let out = run_cli(&["max-distance", "--preset", "gys", "--eps0", "0.1", "--eps1", "0.1", "--method", "original"]);
    ensure(out.status.success(), "cli original failed")?;
    ensure(
        String::from_utf8_lossy(&out.stdout).contains("no key"),
        "cli original did not report no key",
    )?;
    Ok(format!("tight {l:.2} km, original: no key ({t:?})"))
}

fn criterion_4() -> Check {
    let eps: Vec<_> = REFERENCE_GAMMA
        .iter()
        .map(|&(t, e, _)| (TemperatureKey::from_celsius(t), e))
        .collect();
    let start = Instant::now();
    let rows = search::table1(&eps, &SourceSpec::gys(), &ChannelParams::GYS)
        .map_err(|e| e.to_string())?;
    let t = within_budget(start, C4_BUDGET)?;
    let mut worst = 0.0f64;
    for (row, &(temp, _, expected)) in rows.iter().zip(&REFERENCE_GAMMA) {
        let ours = row.sps.iter().chain(&row.wps);
        for (k, (&g, &p)) in ours.zip(&expected).enumerate() {
            let d = (g - p).abs();
            worst = worst.max(d);
            ensure(d <= C4_TOL, format!("T={temp} column {k}: {g:.5} vs {p}"))?;
        }
    }
    ensure(rows.len() * 6 == 30, "expected 30 entries")?;
    ensure((rows[1].sps[0] - 0.0239).abs() < 5e-5, "T=18 SPS@3% spot check")?;
    ensure((rows[2].sps[2] - 0.1004).abs() < 5e-5, "T=25 SPS@7% spot check")?;

    // same numbers through the CLI and a CSV input file
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let input = dir.path().join("table1_eps.csv");
    let mut csv = String::from("temperature_c,epsilon1\n");
    for &(t, e, _) in &REFERENCE_GAMMA {
        csv.push_str(&format!("{t},{e}\n"));
    }
    std::fs::write(&input, csv).map_err(|e| e.to_string())?;
    let out = run_cli(&["table1", "--eps1-file", input.to_str().unwrap(), "--preset", "gys"]);
    ensure(out.status.success(), "cli table1 failed")?;
    let text = String::from_utf8_lossy(&out.stdout);
    for (line, &(_, _, expected)) in text.lines().skip(1).zip(&REFERENCE_GAMMA) {
        let vals: Vec<f64> = line.split(',').skip(2).map(|v| v.parse().unwrap()).collect();
        for (g, p) in vals.iter().zip(expected) {
            ensure((g - p).abs() <= C4_TOL, format!("cli entry {g} vs {p}"))?;
        }
    }
    Ok(format!("30/30 entries, max |Δγ| = {worst:.5} ({t:?})"))
}

fn random_mixture(rng: &mut impl Rng) -> PauliMixture {
    let raw: [f64; 4] = std::array::from_fn(|_| rng.gen::<f64>());
    let s: f64 = raw.iter().sum();
    PauliMixture {
        q00: raw[0] / s,
        q01: raw[1] / s,
        q10: raw[2] / s,
        q11: (1.0 - (raw[0] + raw[1] + raw[2]) / s).max(0.0),
    }
}

fn criterion_5() -> Check {
    let start = Instant::now();
    let mut checked = 0;
    for e0 in [0.0, 0.05, 0.1, 0.2, 0.3] {
        for e1 in [0.0, 0.05, 0.1, 0.2, 0.45] {
            let cert = verify_bounds(&flaw(e0, e1), C5_STEP).map_err(|e| e.to_string())?;
            ensure(
                cert.passed(),
                format!("{} counterexamples at ε0={e0}, ε1={e1}", cert.counterexamples.len()),
            )?;
            checked += cert.checked;
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(20240501);
    let mut gap = 0.0f64;
    for _ in 0..C5_RANDOM_STRATEGIES {
        let s = EveStrategy::new(random_mixture(&mut rng), rng.gen(), rng.gen())
            .map_err(|e| e.to_string())?;
        let m = bell_errors(&build_state(&s).map_err(|e| e.to_string())?);
        let c = closed_form_errors(&s);
        gap = gap.max((m.bit - c.bit).abs()).max((m.phase - c.phase).abs());
    }
    ensure(gap <= C5_EQUIV_TOL, format!("matrix vs closed form gap {gap:e}"))?;
    let t = within_budget(start, C5_BUDGET)?;

    let out = run_cli(&["verify-bounds", "--eps0", "0.1", "--eps1", "0.1", "--step", "0.05"]);
    ensure(out.status.success(), "cli verify-bounds failed")?;
    ensure(
        String::from_utf8_lossy(&out.stdout).contains(" 0 counterexamples"),
        "cli summary missing",
    )?;
    Ok(format!(
        "{checked} grid strategies, 0 counterexamples; max equivalence gap {gap:.1e} ({t:?})"
    ))
}

fn criterion_6() -> Check {
    let h = |x: f64| binary_entropy(x).unwrap();
    let p = ChannelParams::GYS;
    let mut worst = 0.0f64;
    for k in 0..=500 {
        let e = 0.5 * k as f64 / 500.0;
        let textbook = 1.0 - 2.0 * h(e);
        for m in BoundMethod::ALL {
            let r = sps_rate(e, &RandomnessFlaw::NONE, m).unwrap().raw_rate;
            worst = worst.max((r - textbook).abs());
        }
        let biased = BiasedBasisInputs::new(BasisSplit::even(), e, e);
        let r = biased_sps_rate(&biased, &RandomnessFlaw::NONE).unwrap().raw_rate;
        worst = worst.max((r - textbook).abs());
    }
    for k in 0..=200 {
        let obs = simulate_link(k as f64, &SourceSpec::gys(), &p).unwrap();
        let textbook = -obs.gain * p.ec_efficiency * h(obs.error_rate)
            + obs.single_photon_gain * (1.0 - h(obs.single_photon_error));
        for m in BoundMethod::ALL {
            let r = wps_rate(&obs, &RandomnessFlaw::NONE, m, &p).unwrap().raw_rate;
            worst = worst.max((r - textbook).abs());
        }
        let biased = BiasedBasisInputs::new(BasisSplit::even(), obs, obs);
        let r = biased_wps_rate(&biased, &RandomnessFlaw::NONE, &p).unwrap().raw_rate;
        worst = worst.max((r - textbook).abs());
    }
    ensure(worst <= C6_TOL, format!("max deviation {worst:e}"))?;
    let thr = search::max_tolerable_error(&RandomnessFlaw::NONE, BoundMethod::Tight)
        .map_err(|e| e.to_string())?;
    ensure((thr - C6_THRESHOLD).abs() <= C6_THRESHOLD_TOL, format!("threshold {thr}"))?;
    Ok(format!("max deviation {worst:.1e}, threshold {thr:.5}"))
}

fn random_model(rng: &mut impl Rng) -> (HiddenVariableModel, Vec<Vec<PauliMixture>>) {
    let eps0 = rng.gen_range(0.0..0.5);
    let eps1 = rng.gen_range(0.0..0.5);
    let mut side = |eps: f64| -> Vec<(f64, f64)> {
        let n = rng.gen_range(1..=4);
        let raw: Vec<f64> = (0..n).map(|_| rng.gen_range(0.01..1.0)).collect();
        let total: f64 = raw.iter().sum();
        let mut w: Vec<(f64, f64)> = raw
            .iter()
            .map(|x| (x / total, 0.5 + rng.gen_range(-eps..=eps)))
            .collect();
        // put rounding residue on the last weight so the sum is exact to 1e-12
        let head: f64 = w[..n - 1].iter().map(|(x, _)| x).sum();
        w[n - 1].0 = 1.0 - head;
        w
    };
    let bit = side(eps0);
    let basis = side(eps1);
    let mixtures = (0..bit.len())
        .map(|_| (0..basis.len()).map(|_| random_mixture(rng)).collect())
        .collect();
    (HiddenVariableModel { bit, basis }, mixtures)
}

fn criterion_7() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let start = Instant::now();
    let mut min_gap = f64::INFINITY;
    for _ in 0..C7_MODELS {
        let (model, mixtures) = random_model(&mut rng);
        let r = jensen_check(&model, &mixtures).map_err(|e| e.to_string())?;
        ensure(r.is_conservative(), format!("violated: {r:?}"))?;
        min_gap = min_gap.min(r.gap());
    }
    let t = within_budget(start, C7_BUDGET)?;
    Ok(format!("{C7_MODELS} models, min gap {min_gap:.2e} ({t:?})"))
}

fn criterion_8() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut outputs = Vec::new();
    for variable in ["bit-error", "distance"] {
        let (lo, hi) = if variable == "distance" { ("0", "180") } else { ("0", "0.12") };
        let mut reference: Option<Vec<u8>> = None;
        for threads in ["1", "2", "3", "8", "0", "1"] {
            let path = dir.path().join(format!("{variable}-{threads}.csv"));
            let out = run_cli(&[
                "sweep", "--variable", variable, "--lo", lo, "--hi", hi, "--steps", "241",
                "--eps0", "0.1", "--eps1", "0.1", "--threads", threads,
                "--output", path.to_str().unwrap(),
            ]);
            ensure(out.status.success(), format!("sweep exit {:?}", out.status))?;
            let bytes = std::fs::read(&path).map_err(|e| e.to_string())?;
            match &reference {
                None => reference = Some(bytes),
                Some(r) => ensure(*r == bytes, format!("{variable} differs at {threads} threads"))?,
            }
        }
        // library path with the same sweep writes the same bytes
        let spec = SweepSpec {
            variable: if variable == "distance" {
                SweepVariable::DistanceKm
            } else {
                SweepVariable::BitError
            },
            lo: 0.0,
            hi: hi.parse().unwrap(),
            steps: 241,
            flaw: flaw(0.1, 0.1),
            source: if variable == "distance" { SourceSpec::gys() } else { SourceSpec::Sps },
            params: ChannelParams::GYS,
        };
        let mut buf = Vec::new();
        weakrand_qkd::report::write_sweep_csv(&mut buf, &search::sweep(&spec).unwrap())
            .map_err(|e| e.to_string())?;
        ensure(Some(&buf) == reference.as_ref(), "library and CLI bytes differ")?;
        outputs.push(buf.len());
    }
    Ok(format!("byte-identical across 1/2/3/8/default threads ({outputs:?} bytes)"))
}

fn main() {
    assert!(Path::new(BIN).exists(), "binary missing: {BIN}");

    let criteria: [(&str, fn() -> Check); 8] = [
        ("1 tolerable-error thresholds", criterion_1),
        ("2 key-rate point R(0.034)", criterion_2),
        ("3 WPS max distance", criterion_3),
        ("4 degradation table γ", criterion_4),
        ("5 bound certification", criterion_5),
        ("6 flawless reductions", criterion_6),
        ("7 Jensen conservativeness", criterion_7),
        ("8 sweep determinism", criterion_8),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        match check() {
            Ok(detail) => println!("PASS  criterion {name}: {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL  criterion {name}: {why}");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
