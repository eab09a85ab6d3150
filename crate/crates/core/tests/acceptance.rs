//! Acceptance report: one PASS or FAIL line per criterion.
//!
//! Seeds are fixed in advance. Red criteria stay red; the binary only exits
//! nonzero when `ACCEPTANCE_STRICT=1` so that the regular test run still
//! shows the report without aborting the workspace.

mod common;

use std::time::Instant;

use runtumble::config::{AnalysisSection, RunConfig};
use runtumble::io::write_outputs;
use runtumble::limit_theory::{
    c1_closed_form, compute_b0_with, compute_c1, solve_fractional_heat, FractionalField,
    LimitConvention, Rule,
};
use runtumble::pathway::levy_regime_check;
use runtumble::pipeline::{analyze, run_simulation, short, AnalysisReport};
use runtumble::sde::Scheme;
use runtumble::simulator::{simulate, Case, MsdSeries, SimulationOutput};
use runtumble::statistics::{fit_msd_exponent, ks_distance};
use statrs::distribution::{Beta, ContinuousCDF};

const SEEDS: [u64; 3] = [1, 2, 3];

struct Report {
    failed: usize,
}

impl Report {
    fn line(&mut self, id: u32, name: &str, ok: bool, detail: String) {
        if !ok {
            self.failed += 1;
        }
        let tag = if ok { "PASS" } else { "FAIL" };
        println!("{tag} {id:>2} {name}: {detail}");
    }
}

fn desk_config(case: Case, seed: u64, total_time: f64) -> RunConfig {
    let mut cfg = RunConfig::preset(case);
    cfg.sim.particles = 10_000;
    cfg.sim.dt = 0.1;
    cfg.sim.total_time = total_time;
    cfg.sim.seed = seed;
    cfg
}

fn run(cfg: &RunConfig) -> SimulationOutput {
    run_simulation(cfg, false).expect("simulation runs").0
}

fn seed_averaged(case: Case) -> (MsdSeries, Vec<SimulationOutput>) {
    let outs: Vec<SimulationOutput> = SEEDS
        .iter()
        .map(|&s| run(&desk_config(case, s, 300.0)))
        .collect();
    let series: Vec<MsdSeries> = outs.iter().map(|o| o.msd.clone()).collect();
    (MsdSeries::average(&series).unwrap(), outs)
}

fn slope(m: &MsdSeries, window: (f64, f64)) -> f64 {
    fit_msd_exponent(m, window).unwrap().slope
}

fn pld(out: &SimulationOutput) -> AnalysisReport {
    analyze(&out.ledger, None, &AnalysisSection::default(), 300.0).unwrap()
}

fn main() {
    let mut r = Report { failed: 0 };
    let start = Instant::now();

    // 1 and 2: seed-averaged MSD exponents at desk scale.
    let (msd_one, outs_one) = seed_averaged(Case::I);
    let power = 2.0 / slope(&msd_one, (30.0, 300.0));
    let per_seed: Vec<String> = outs_one
        .iter()
        .map(|o| format!("{:.4}", 2.0 / slope(&o.msd, (30.0, 300.0))))
        .collect();
    let late = 2.0 / slope(&msd_one, (100.0, 300.0));
    r.line(
        1,
        "Case I fractional power over [30, 300] s",
        (1.35..=1.55).contains(&power),
        format!(
            "2/slope = {power:.4} (target 1.45 +/- 0.10; per seed {}; over [100, 300] s {late:.4})",
            per_seed.join(", ")
        ),
    );

    let (msd_two, outs_two) = seed_averaged(Case::II);
    let s2 = slope(&msd_two, (30.0, 300.0));
    r.line(
        2,
        "Case II MSD slope over [30, 300] s",
        (s2 - 1.0).abs() <= 0.1,
        format!("slope = {s2:.4} (target 1.0 +/- 0.1)"),
    );

    // 3: long horizon, one seed, run lengths not needed.
    let mut long = desk_config(Case::I, SEEDS[0], 5000.0);
    long.sim.msd_interval = 10.0;
    let mut long_sim = long.validate().unwrap();
    long_sim.record_run_lengths = false;
    let long_out = simulate(&long_sim).unwrap();
    let early = slope(&long_out.msd, (30.0, 300.0));
    let tail = slope(&long_out.msd, (1000.0, 5000.0));
    r.line(
        3,
        "Case I crossover at T = 5000 s",
        tail <= 1.2 && tail < early,
        format!("slope {early:.4} over [30, 300] s, {tail:.4} over [1000, 5000] s (late <= 1.2 and decreasing)"),
    );

    // 4: classification of the seed-1 ledgers.
    let one = pld(&outs_one[0]);
    let two = pld(&outs_two[0]);
    let three = pld(&run(&desk_config(Case::III, SEEDS[0], 300.0)));
    let r2 = |a: &AnalysisReport| (a.pld.loglog.r_squared, a.pld.semilog.r_squared);
    let (l1, e1) = r2(&one);
    let (l2, e2) = r2(&two);
    let (l3, e3) = r2(&three);
    r.line(
        4,
        "path length classification",
        one.classification() == "levywalk" && l1 > e1 && two.classification() == "brownian" && e2 > l2,
        format!(
            "I {} (r2 {l1:.4} vs {e1:.4}, alpha {}), II {} (r2 {l2:.4} vs {e2:.4}), III {} (r2 {l3:.4} vs {e3:.4}, any verdict)",
            one.classification(),
            one.pld.alpha.map_or("-".into(), |a| format!("{a:.3}")),
            two.classification(),
            three.classification(),
        ),
    );

    // 5: coefficient identity.
    let (worst, worst_d) = common::residual_sweep(100, 1000, 5);
    r.line(
        5,
        "coefficient identity",
        worst < 1e-10 && worst_d <= 4.0 * f64::EPSILON,
        format!("max relative residual {worst:.3e}, max |D - S^2/2|/D {worst_d:.3e}"),
    );

    // 6: strong order.
    let mil = common::strong_order(Scheme::Milstein, 2000, 6);
    let em = common::strong_order(Scheme::EulerMaruyama, 2000, 6);
    r.line(
        6,
        "strong order",
        (0.8..=1.2).contains(&mil.order) && (0.35..=0.65).contains(&em.order),
        format!(
            "Milstein {:.3} (in [0.8, 1.2]), Euler-Maruyama {:.3} (in [0.35, 0.65])",
            mil.order, em.order
        ),
    );

    // 7: equilibrium preservation.
    let f = common::case_one();
    let horizon = 10.0 * f.adaptation_time;
    let samples = common::evolve_from_equilibrium(&f, 10_000, horizon, 0.1, 7);
    let q0 = Beta::new(f.theta + 1.0, f.theta + 1.0).unwrap();
    let ks = ks_distance(&samples, |a| q0.cdf(a));
    r.line(
        7,
        "equilibrium preservation",
        ks < 0.02,
        format!("KS = {ks:.4} after {horizon} s, 10000 samples (below 0.02)"),
    );

    // 8: limit constants.
    let mut c1_gap: f64 = 0.0;
    for mu in [0.1, 0.45, 0.9] {
        let alpha = 1.0 + f.beta * (1.0 - mu);
        c1_gap =
            c1_gap.max((compute_c1(alpha, f.beta).unwrap() - c1_closed_form(alpha, f.beta)).abs());
    }
    let conv = LimitConvention::default();
    let gk = compute_b0_with(&f, conv, Rule::GaussKronrod).unwrap();
    let ts = compute_b0_with(&f, conv, Rule::TanhSinh).unwrap();
    let b0_gap = (gk - ts).abs() / gk.abs();
    let regime = levy_regime_check(&f);
    let ulp = |x: f64, y: f64| (x - y).abs() <= 2.0 * f64::EPSILON * y.abs();
    let exact = ulp(regime.mu, 0.45)
        && ulp(regime.s_interval.0, 1.25)
        && ulp(regime.s_interval.1, 1.45)
        && short(regime.mu) == "0.45"
        && short(regime.s_interval.0) == "1.25"
        && short(regime.s_interval.1) == "1.45";
    r.line(
        8,
        "limit constants",
        c1_gap < 1e-8 && b0_gap < 1e-6 && exact,
        format!(
            "c1 gap {c1_gap:.3e}, B0 = {gk:.10} relative gap {b0_gap:.3e}, mu = {}, s in ({}, {})",
            short(regime.mu),
            short(regime.s_interval.0),
            short(regime.s_interval.1)
        ),
    );

    // 9: fractional solver.
    let init = FractionalField::gaussian(50.0, 4096, 0.0, 2.0).unwrap();
    let peak = init.values.iter().cloned().fold(0.0, f64::max);
    let (mut mass_gap, mut semi_gap): (f64, f64) = (0.0, 0.0);
    for mu in [0.2, 0.45, 1.0] {
        let a = solve_fractional_heat(&init, 0.7, mu, 1.3).unwrap();
        let ab = solve_fractional_heat(&a, 0.7, mu, 2.1).unwrap();
        let direct = solve_fractional_heat(&init, 0.7, mu, 3.4).unwrap();
        mass_gap = mass_gap.max((direct.mass() - init.mass()).abs() / init.mass());
        for (x, y) in ab.values.iter().zip(&direct.values) {
            semi_gap = semi_gap.max((x - y).abs() / peak);
        }
    }
    let (nu, t, var0) = (0.8, 2.5, 1.5);
    let g0 = FractionalField::gaussian(60.0, 8192, 0.0, var0).unwrap();
    let heat = solve_fractional_heat(&g0, nu, 1.0, t).unwrap();
    let exact_heat = FractionalField::gaussian(60.0, 8192, 0.0, var0 + 2.0 * nu * t).unwrap();
    let gauss_gap = heat
        .values
        .iter()
        .zip(&exact_heat.values)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max);
    let width = common::width_exponent(0.45);
    let width_rel = (width * 1.45 - 1.0).abs();
    r.line(
        9,
        "fractional solver",
        mass_gap < 1e-12 && semi_gap < 1e-12 && gauss_gap < 1e-6 && width_rel < 0.01,
        format!(
            "mass {mass_gap:.2e}, semigroup {semi_gap:.2e}, Gaussian {gauss_gap:.2e}, width exponent {width:.5} vs {:.5}",
            1.0 / 1.45
        ),
    );

    // 10: byte-identical outputs across worker counts.
    let mut files = Vec::new();
    for workers in [1usize, 2, 8] {
        let mut cfg = desk_config(Case::I, SEEDS[0], 300.0);
        cfg.sim.workers = Some(workers);
        let (out, manifest) = run_simulation(&cfg, false).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let written = write_outputs(dir.path(), &out, &manifest).unwrap();
        files.push((
            std::fs::read(&written.runs).unwrap(),
            std::fs::read(&written.msd).unwrap(),
        ));
    }
    let same = files.windows(2).all(|w| w[0] == w[1]);
    r.line(
        10,
        "determinism across 1, 2 and 8 workers",
        same,
        format!(
            "runs.csv {} bytes, msd.csv {} bytes",
            files[0].0.len(),
            files[0].1.len()
        ),
    );

    println!(
        "acceptance: {} of 10 criteria pass ({:.1} s)",
        10 - r.failed,
        start.elapsed().as_secs_f64()
    );
    if r.failed > 0 && std::env::var("ACCEPTANCE_STRICT").as_deref() == Ok("1") {
        std::process::exit(1);
    }
}
