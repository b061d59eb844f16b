//! End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
//! exits nonzero if any fails.

use std::time::{Duration, Instant};

use qre_core::code::CecMode;
use qre_core::experiment::{default_grid, fit_rows, run_point, run_sweep, SweepSpec, SweepVar};
use qre_core::network::{z_profile, ProtocolSettings, SimConfig, Topology, T_LINK};
use qre_core::noise::HardwareProfile;
use qre_core::protocol::RunRecord;
use qre_core::validate::{self, oracle::oracle_equivalence};

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn within(elapsed: Duration, limit_s: u64) -> bool {
    elapsed <= Duration::from_secs(limit_s)
}

fn oracle() -> Outcome {
    let start = Instant::now();
    let s = oracle_equivalence(200, 10_000, 2024).map_err(|e| e.to_string())?;
    let t = start.elapsed();
    check(
        s.failures.is_empty() && within(t, 300),
        format!(
            "{} circuits, {} mismatched, max |z| {:.2}, {:.0} s",
            s.circuits,
            s.failures.len(),
            s.max_abs_z,
            t.as_secs_f64()
        ),
    )
}

fn soundness() -> Outcome {
    let start = Instant::now();
    let s = validate::zero_noise_soundness(&[2, 3, 5, 10], 100, 20.0).map_err(|e| e.to_string())?;
    let t = start.elapsed();
    check(
        s.bad.is_empty() && within(t, 120),
        format!("{} episodes, {} imperfect, {:.1} s", s.episodes, s.bad.len(), t.as_secs_f64()),
    )
}

fn single_faults() -> Outcome {
    let start = Instant::now();
    let f = validate::single_fault_injection(0, CecMode::Cec).map_err(|e| e.to_string())?;
    let t = start.elapsed();
    check(
        f.failures.is_empty() && within(t, 600),
        format!(
            "{} stages, {} injections, {} uncorrected, {:.1} s",
            f.stages,
            f.injections,
            f.failures.len(),
            t.as_secs_f64()
        ),
    )
}

fn suppression() -> Outcome {
    let start = Instant::now();
    let mut ok = true;
    let mut parts = Vec::new();
    for var in [SweepVar::F2q, SweepVar::Fm, SweepVar::Fphys] {
        let mut spec = SweepSpec::new(var, default_grid(var).expect("grid"), 20_000);
        spec.links = 2;
        spec.link_km = 20.0;
        let rows = run_sweep(&spec).map_err(|e| e.to_string())?;
        match fit_rows(&rows, var, CecMode::Cec) {
            Ok(f) => {
                ok &= f.points.len() >= 5 && (1.7..=2.3).contains(&f.slope) && f.r_squared >= 0.98;
                parts.push(format!("{var} slope {:.3} R2 {:.4} ({} pts)", f.slope, f.r_squared, f.points.len()));
            }
            Err(e) => {
                ok = false;
                parts.push(format!("{var} no fit: {e}"));
            }
        }
    }
    let t = start.elapsed();
    ok &= within(t, 3600);
    check(ok, format!("{}, {:.0} s", parts.join("; "), t.as_secs_f64()))
}

fn mean_fidelity(records: &[RunRecord]) -> f64 {
    records.iter().map(|r| r.fidelity).sum::<f64>() / records.len() as f64
}

fn chain(links: usize, link_km: f64, hw: &HardwareProfile, mode: CecMode) -> Result<SimConfig, String> {
    let protocol = ProtocolSettings {
        cec_mode: mode,
        ..Default::default()
    };
    let topology = Topology::chain(links, link_km).map_err(|e| e.to_string())?;
    SimConfig::new(topology, hw.clone(), protocol).map_err(|e| e.to_string())
}

const TABLE: [(f64, [f64; 5], f64); 8] = [
    (0.00, [0.999000, 0.999100, 0.996000, 0.990000, 0.965000], 2.000),
    (0.25, [0.999250, 0.999325, 0.997000, 0.992500, 0.973750], 2.669),
    (0.50, [0.999500, 0.999550, 0.998000, 0.995000, 0.982500], 4.008),
    (0.65, [0.999650, 0.999685, 0.998600, 0.996500, 0.987750], 5.728),
    (0.80, [0.999800, 0.999820, 0.999200, 0.998000, 0.993000], 10.030),
    (0.90, [0.999900, 0.999910, 0.999600, 0.999000, 0.996500], 20.068),
    (0.95, [0.999950, 0.999955, 0.999800, 0.999500, 0.998250], 40.144),
    (1.00, [1.0; 5], 199.99),
];

fn z_endpoints() -> Outcome {
    let base = HardwareProfile::baseline();
    for (z, f, t2) in TABLE {
        let p = z_profile(z, &base, T_LINK).map_err(|e| e.to_string())?;
        let got = [p.f_1q, p.f_2q, p.f_m, p.f_init, p.f_phys];
        if got.iter().zip(f).any(|(g, e)| (g - e).abs() > 5e-7) || (p.t2 - t2).abs() > 5e-4 {
            return Err(format!("hardware table row z={z} differs: {got:?}, T2 {}", p.t2));
        }
    }
    let run = |links, z: f64| -> Result<f64, String> {
        let hw = z_profile(z, &base, T_LINK).map_err(|e| e.to_string())?;
        let cfg = chain(links, 20.0, &hw, CecMode::Cec)?;
        Ok(mean_fidelity(&run_point(&cfg, 10_000, 5).map_err(|e| e.to_string())?))
    };
    let (one, five) = (run(1, 0.0)?, run(5, 0.0)?);
    let (one_clean, five_clean) = (run(1, 1.0)?, run(5, 1.0)?);
    check(
        (one - 0.953).abs() <= 0.015 && (five - 0.72).abs() <= 0.03 && one_clean == 1.0 && five_clean == 1.0,
        format!("table ok; z=0: 1 link {one:.4}, 5 links {five:.4}; z=1: {one_clean}, {five_clean}"),
    )
}

struct ModePair {
    cec: f64,
    none: f64,
    latency_cec: f64,
    latency_matched: bool,
}

fn compare_modes(links: usize, link_km: f64, hw: &HardwareProfile, runs: u32) -> Result<ModePair, String> {
    let a = run_point(&chain(links, link_km, hw, CecMode::Cec)?, runs, 6).map_err(|e| e.to_string())?;
    let b = run_point(&chain(links, link_km, hw, CecMode::None)?, runs, 6).map_err(|e| e.to_string())?;
    Ok(ModePair {
        cec: mean_fidelity(&a),
        none: mean_fidelity(&b),
        latency_cec: a.iter().map(|r| r.latency_s).sum::<f64>() / a.len() as f64,
        latency_matched: a.iter().zip(&b).all(|(x, y)| x.latency_s == y.latency_s),
    })
}

fn scale(long: &ModePair) -> Outcome {
    let start = Instant::now();
    let hw = z_profile(0.9, &HardwareProfile::baseline(), T_LINK).map_err(|e| e.to_string())?;
    let dense = compare_modes(100, 1.0, &hw, 2_000)?;
    let t = start.elapsed();
    check(
        (dense.none - 0.25).abs() <= 0.03
            && dense.cec >= 0.88
            && (long.cec - 0.91).abs() <= 0.03
            && (long.none - 0.24).abs() <= 0.04
            && dense.latency_matched
            && long.latency_matched
            && within(t, 7200),
        format!(
            "100 km/100 links: cec {:.4} none {:.4}; 2000 km/100 links: cec {:.4} none {:.4}; latencies matched {}",
            dense.cec,
            dense.none,
            long.cec,
            long.none,
            dense.latency_matched && long.latency_matched
        ),
    )
}

fn resources() -> Outcome {
    let rows = validate::resource_accounting(&[2, 3, 5, 10], 0).map_err(|e| e.to_string())?;
    let bad: Vec<_> = rows.iter().filter(|r| !r.matches()).map(|r| r.nodes).collect();
    check(
        bad.is_empty(),
        rows.iter()
            .map(|r| format!("N={} {:?}", r.nodes, r.counted))
            .collect::<Vec<_>>()
            .join(", "),
    )
}

fn decoder() -> Outcome {
    let start = Instant::now();
    let d = validate::decoder_exhaustive();
    let t = start.elapsed();
    check(
        d.bad_inputs.is_empty() && d.bad_corrections.is_empty() && within(t, 1),
        format!("{} inputs, {} single-bit corrections", d.inputs, d.corrections_checked),
    )
}

fn latency(long: &ModePair) -> Outcome {
    let hw = z_profile(0.9, &HardwareProfile::baseline(), T_LINK).map_err(|e| e.to_string())?;
    let mut points = Vec::new();
    for km in [100.0, 400.0, 1000.0] {
        let links = (km / 20.0) as usize;
        let recs = run_point(&chain(links, 20.0, &hw, CecMode::Cec)?, 2_000, 6).map_err(|e| e.to_string())?;
        points.push((km, recs.iter().map(|r| r.latency_s).sum::<f64>() / recs.len() as f64));
    }
    points.push((2000.0, long.latency_cec));
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let syy: f64 = points.iter().map(|p| (p.1 - my).powi(2)).sum();
    let r2 = sxy * sxy / (sxx * syy);
    let in_band = points.first().unwrap().1 >= 0.0075 && points.last().unwrap().1 <= 0.090;
    check(
        r2 > 0.95 && sxy > 0.0 && in_band,
        format!(
            "latency ms {}; R2 {r2:.3}",
            points
                .iter()
                .map(|(km, l)| format!("{km:.0} km {:.1}", l * 1e3))
                .collect::<Vec<_>>()
                .join(", ")
        ),
    )
}

fn main() {
    let mut failed = 0;
    let mut report = |id: u32, name: &str, outcome: Outcome| {
        match &outcome {
            Ok(d) => println!("[{id}] PASS {name}: {d}"),
            Err(d) => {
                failed += 1;
                println!("[{id}] FAIL {name}: {d}");
            }
        }
    };
    report(1, "oracle equivalence", oracle());
    report(2, "zero-noise soundness", soundness());
    report(3, "single-fault correctability", single_faults());
    report(4, "second-order suppression", suppression());
    report(5, "z-sweep endpoints", z_endpoints());
    let hw = z_profile(0.9, &HardwareProfile::baseline(), T_LINK).expect("z=0.9 profile");
    let long = compare_modes(100, 20.0, &hw, 2_000);
    match &long {
        Ok(long) => report(6, "scale comparison", scale(long)),
        Err(e) => report(6, "scale comparison", Err(e.clone())),
    }
    report(7, "resource accounting", resources());
    report(8, "decoder exhaustiveness", decoder());
    match &long {
        Ok(long) => report(9, "latency linearity", latency(long)),
        Err(e) => report(9, "latency linearity", Err(e.clone())),
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
    println!("all acceptance criteria passed");
}
