//! Acceptance suite. Each test prints one `ACCEPTANCE <id> PASS|FAIL` line
//! with the evidence, then asserts.
//!
//! Run with `cargo test -p lorasg-cli --test acceptance -- --nocapture --test-threads 1`.

use std::process::Command;

use lorasg_cli::commands::{self, NodeRange, SweepKind};
use lorasg_cli::default_config;
use lorasg_core::analytic::{
    equalize_sensitivities, homogeneous_equivalent, reception_probabilities, Scenario,
    REFERENCE_SENSITIVITY_DBM,
};
use lorasg_core::channel::{dbm_to_mw, fading_moment, sample_fading};
use lorasg_core::lora_phy::packet_airtime;
use lorasg_core::montecarlo::{simulate_class_spatial, validate_power_law};
use lorasg_core::reproduce::compare_with_published;
use lorasg_core::{FadingModel, RadioConfig, SimConfig, SimEstimate};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn report(id: u32, title: &str, pass: bool, detail: &str) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    println!("ACCEPTANCE {id} {verdict} {title}: {detail}");
}

fn base(n_nodes: f64) -> Scenario {
    default_config().scenario.with_nodes(n_nodes)
}

fn sim(replications: u64) -> SimConfig {
    SimConfig {
        replications,
        seed: 0,
        tail_epsilon: 1e-7,
        disk_truncation_m: None,
    }
}

/// Ordinary z-score, falling back to the null-hypothesis form when every
/// replication agreed and the sample spread is zero.
fn z_of(est: &SimEstimate, reference: f64) -> f64 {
    est.z_score(reference)
        .unwrap_or_else(|| est.null_z(reference))
}

#[test]
fn criterion_1_equalization_round_trip() {
    let mut worst = 0.0f64;
    for n_nodes in [500.0, 1000.0, 2000.0] {
        let scn = base(n_nodes);
        for target in [0.9, 0.95, 0.99] {
            let thresholds = equalize_sensitivities(&scn, target).unwrap();
            let eq = scn.with_sensitivities_mw(&thresholds).unwrap();
            for r in reception_probabilities(&eq).unwrap() {
                worst = worst.max((r.pi - target).abs());
            }
        }
    }
    let pass = worst <= 1e-9;
    report(
        1,
        "equalization round trip",
        pass,
        &format!("max |pi - target| = {worst:.3e} over 9 cells x 7 classes (tol 1e-9)"),
    );
    assert!(pass);
}

#[test]
fn criterion_2_spatial_monte_carlo_agreement() {
    let mut within3 = 0;
    let mut max_abs = 0.0f64;
    let mut cells = Vec::new();
    for n_nodes in [500.0, 1000.0, 2000.0] {
        let scn = base(n_nodes);
        for r in reception_probabilities(&scn).unwrap() {
            let est = simulate_class_spatial(&scn, r.index_n, &sim(100_000)).unwrap();
            let z = z_of(&est, r.pi);
            if z.abs() <= 3.0 {
                within3 += 1;
            }
            max_abs = max_abs.max(z.abs());
            cells.push(format!("N{}/SF{}:{z:+.2}", n_nodes, r.sf));
        }
    }
    let pass = within3 >= 20 && max_abs <= 4.0;
    report(
        2,
        "spatial MC vs closed form",
        pass,
        &format!(
            "{within3}/21 cells with |z|<=3, max |z| = {max_abs:.2} [{}]",
            cells.join(" ")
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_3_power_law_counts() {
    let thresholds: Vec<f64> = REFERENCE_SENSITIVITY_DBM
        .iter()
        .map(|&(_, d)| dbm_to_mw(d))
        .collect();
    let mut max_abs = 0.0f64;
    let mut all = true;
    for alpha in [0.0, -0.2] {
        let scn = base(1000.0).with_alpha(alpha);
        for c in validate_power_law(&scn, &thresholds, 1.0, &sim(100_000)).unwrap() {
            max_abs = max_abs.max(c.z.abs());
            all &= c.z.abs() <= 3.0;
        }
    }
    report(
        3,
        "power-law tail counts",
        all,
        &format!("alpha in {{0, -0.2}}, 7 thresholds, 1e5 windows, max |z| = {max_abs:.2}"),
    );
    assert!(all);
}

#[test]
fn criterion_4_inhomogeneous_equivalence() {
    let mut max_gap = 0.0f64;
    let mut max_z = 0.0f64;
    let mut cells = 0;
    for alpha in [-0.2, -1.0, 0.5] {
        let scn = base(1000.0).with_alpha(alpha);
        let inhom = reception_probabilities(&scn).unwrap();
        let hom = reception_probabilities(&homogeneous_equivalent(&scn).unwrap()).unwrap();
        for (a, b) in inhom.iter().zip(&hom) {
            max_gap = max_gap.max((a.pi - b.pi).abs());
            let est = simulate_class_spatial(&scn, a.index_n, &sim(100_000)).unwrap();
            max_z = max_z
                .max(z_of(&est, a.pi).abs())
                .max(z_of(&est, b.pi).abs());
            cells += 1;
        }
    }
    let pass = max_gap <= 1e-12 && max_z <= 3.0;
    report(
        4,
        "inhomogeneous equivalence",
        pass,
        &format!("max analytic gap {max_gap:.2e} (tol 1e-12), max MC |z| = {max_z:.2} over {cells} cells"),
    );
    assert!(pass);
}

/// Adaptive Simpson on `[a, b]`.
fn integrate(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    let half = |lo: f64, hi: f64| {
        let mid = 0.5 * (lo + hi);
        (hi - lo) / 6.0 * (f(lo) + 4.0 * f(mid) + f(hi))
    };
    let (left, right) = (half(a, m), half(m, b));
    if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
        return left + right + (left + right - whole) / 15.0;
    }
    integrate(f, a, m, tol / 2.0, depth - 1) + integrate(f, m, b, tol / 2.0, depth - 1)
}

fn moment_by_quadrature(model: FadingModel, s: f64) -> f64 {
    match model {
        FadingModel::NoFading => 1.0,
        FadingModel::Rayleigh => {
            let f = move |x: f64| {
                if x == 0.0 {
                    0.0
                } else {
                    x.powf(s) * (-x).exp()
                }
            };
            integrate(&f, 0.0, 1.0, 1e-14, 50) + integrate(&f, 1.0, 60.0, 1e-14, 50)
        }
        FadingModel::LogNormal { sigma_db } => {
            let sigma = sigma_db * std::f64::consts::LN_10 / 10.0;
            let f = move |z: f64| {
                (s * (-sigma * sigma / 2.0 + sigma * z)).exp() * (-z * z / 2.0).exp()
                    / (2.0 * std::f64::consts::PI).sqrt()
            };
            integrate(&f, -14.0, 14.0, 1e-14, 50)
        }
    }
}

#[test]
fn criterion_5_fading_ordering() {
    let cfg = default_config();
    let out = commands::sweep(&cfg, SweepKind::Figure3, &NodeRange::FIGURE_DEFAULT).unwrap();
    let mut rows = 0;
    let mut ordered = true;
    for line in out.text.lines().filter(|l| !l.starts_with('#')).skip(1) {
        let cells: Vec<f64> = line.split(',').map(|c| c.parse().unwrap()).collect();
        let (none, rayleigh, lognormal) = (cells[3], cells[4], cells[5]);
        ordered &= rayleigh >= none && lognormal >= none;
        rows += 1;
    }

    let s = 2.0 / 3.5;
    let mut moments_ok = true;
    let mut max_quad_err = 0.0f64;
    let mut max_sample_z = 0.0f64;
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    for model in [
        FadingModel::NoFading,
        FadingModel::Rayleigh,
        FadingModel::LogNormal { sigma_db: 2.0 },
    ] {
        let closed = fading_moment(&model, s).unwrap();
        let err = (closed - moment_by_quadrature(model, s)).abs();
        max_quad_err = max_quad_err.max(err);
        moments_ok &= err <= 1e-9 && closed <= 1.0;

        let n = 400_000;
        let xs: Vec<f64> = (0..n)
            .map(|_| sample_fading(&model, &mut rng).powf(s))
            .collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let se = (var / n as f64).sqrt();
        if se > 0.0 {
            let z = (mean - closed) / se;
            max_sample_z = max_sample_z.max(z.abs());
            moments_ok &= z.abs() <= 4.0;
        } else {
            moments_ok &= mean == closed;
        }
    }
    let pass = rows == 20 && ordered && moments_ok;
    report(
        5,
        "fading ordering",
        pass,
        &format!(
            "{rows} density rows ordered={ordered}; E[F^(2/3.5)] <= 1, quadrature error {max_quad_err:.1e} (tol 1e-9), sampling max |z| = {max_sample_z:.2}"
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_6_airtime_fixtures() {
    // (sf, preamble, payload symbols, payload, total), hand-evaluated.
    let fixtures: [(u8, f64, u32, f64, f64); 7] = [
        (12, 0.335872, 28, 0.917504, 1.253376),
        (11, 0.167936, 28, 0.458752, 0.626688),
        (10, 0.083968, 33, 0.270336, 0.354304),
        (9, 0.041984, 33, 0.135168, 0.177152),
        (8, 0.020992, 38, 0.077824, 0.098816),
        (7, 0.010496, 43, 0.044032, 0.054528),
        (6, 0.005248, 48, 0.024576, 0.029824),
    ];
    let radio = RadioConfig::default();
    let mut mismatches = Vec::new();
    for (sf, pre, sym, pay, total) in fixtures {
        let at = packet_airtime(sf, &radio).unwrap();
        if at.preamble_s != pre
            || at.payload_symbols != sym
            || at.payload_s != pay
            || at.total_s != total
        {
            mismatches.push(format!("SF{sf}: {at:?}"));
        }
    }
    let pass = mismatches.is_empty();
    report(
        6,
        "airtime fixtures",
        pass,
        &if pass {
            "SF6..SF12 exact".to_string()
        } else {
            mismatches.join("; ")
        },
    );
    assert!(pass);
}

#[test]
fn criterion_7_published_table_structure() {
    let cfg = default_config();
    let out = commands::equalize(&cfg, 0.95, true, 2000.0).unwrap();
    let delta_rows = out
        .text
        .lines()
        .filter(|l| l.starts_with("infinite-plane,") || l.starts_with("finite-disk,"))
        .count();
    println!("{}", out.text.trim_end());

    let cmp = compare_with_published(&cfg.scenario, 0.95, 2000.0).unwrap();
    let summary: Vec<String> = cmp
        .domains
        .iter()
        .map(|d| {
            let s = d.structure;
            format!(
                "{}: feasible={} increasing={} legal_range={} weakest_lowest={}",
                d.domain.name(),
                s.feasible,
                s.increasing,
                s.within_legal_range,
                s.weakest_lowest
            )
        })
        .collect();
    let both_modes = cmp.domains.len() == 2 && delta_rows == 14;
    let pass = both_modes && cmp.any_domain_holds();
    report(
        7,
        "published equalized table, qualitative structure",
        pass,
        &format!("delta report rows={delta_rows}; {}", summary.join("; ")),
    );
    assert!(pass);
}

fn run_simulate(threads: Option<&str>) -> Vec<u8> {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_lorasg"));
    cmd.args(["simulate", "--replications", "20000", "--seed", "42"]);
    match threads {
        Some(t) => cmd.env("LORASG_THREADS", t),
        None => cmd.env_remove("LORASG_THREADS"),
    };
    let out = cmd.output().expect("run lorasg");
    assert!(
        out.status.success(),
        "simulate failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out.stdout
}

#[test]
fn criterion_8_determinism() {
    let first = run_simulate(None);
    let again = run_simulate(None);
    let one = run_simulate(Some("1"));
    let eight = run_simulate(Some("8"));
    let pass = !first.is_empty() && first == again && first == one && first == eight;
    report(
        8,
        "deterministic simulate output",
        pass,
        &format!(
            "{} bytes; rerun equal={}, threads 1 equal={}, threads 8 equal={}",
            first.len(),
            first == again,
            first == one,
            first == eight
        ),
    );
    assert!(pass);
}
