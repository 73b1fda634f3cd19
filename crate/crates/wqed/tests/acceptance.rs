//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

use std::process::ExitCode;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use wqed::model::{
    assemble_density_matrix, wootters_concurrence, x_state_concurrence, PhysicalParams, QubitBasisPopulations,
    WavepacketSpec, C64,
};
use wqed::oracle::OracleTrace;
use wqed::scenarios::{
    configure_threads, default_xi_grid, oracle_detection_p_rr, run_detection, run_generation, run_manipulation, Engine,
    GenerationResult, ManipulationResult, ScenarioConfig, ENGINE_TOLERANCE,
};
use wqed::two_ex::{
    detection_ratio, run_identity_suite, run_jump_suite, ConcurrenceTrace, DEFAULT_DETECTION_FRONT,
    DEFAULT_GRID2_NODES,
};
use wqed::Result;

type Verdict = Result<(bool, String)>;

const DETECTION_MU: f64 = 1.0 / 3000.0;

/// Runs shared between criteria.
#[derive(Default)]
struct Shared {
    /// Criterion 1 configuration with both engines.
    generation: Option<GenerationResult>,
    /// Δ = 0 with both engines.
    delta_zero: Option<ManipulationResult>,
    /// Default Δ scan, analytic.
    scan: Option<ManipulationResult>,
    peak_half: f64,
}

fn c1(sh: &mut Shared) -> Verdict {
    let t = Instant::now();
    let r = run_generation(&ScenarioConfig::generation_default())?;
    let secs = t.elapsed().as_secs_f64();
    let p = r.peaks();
    let (half, fast, slow) = (p[0].1, p[1].1, p[2].1);
    sh.peak_half = half;
    let ok = (half - 0.27).abs() <= 0.02 && fast < half && slow < half && secs < 30.0;
    Ok((
        ok,
        format!("peak C: μ=γ/2 {half:.4}, μ=2γ {fast:.4}, μ=γ/15 {slow:.4}; {secs:.1}s"),
    ))
}

fn max_trace_diff(a: &ConcurrenceTrace, b: &ConcurrenceTrace) -> f64 {
    wqed::scenarios::trace_deviation(a, b)
}

fn c2() -> Verdict {
    let base = |gamma: f64| -> ScenarioConfig {
        let mut c = ScenarioConfig::generation_default();
        c.params = PhysicalParams::natural(gamma).unwrap();
        c.pulse.mu = gamma / 2.0;
        c.mus = vec![gamma / 2.0, 2.0 * gamma];
        c.samples = 401;
        c
    };
    let mut worst: f64 = 0.0;
    let reference = run_generation(&base(0.01))?;
    for s in [0.5, 2.0] {
        let r = run_generation(&base(0.01 * s))?;
        for ((_, a), (_, b)) in reference.traces.iter().zip(&r.traces) {
            worst = worst.max(max_trace_diff(&a.trace, &b.trace));
        }
    }
    // two photons, Δ = 5 v_g/γ
    let two = |gamma: f64| -> Result<ConcurrenceTrace> {
        let mut c = ScenarioConfig::manipulation_default();
        c.params = PhysicalParams::natural(gamma).unwrap();
        c.pulse.mu = gamma / 2.0;
        c.deltas = vec![5.0 / gamma];
        c.samples = 201;
        Ok(run_manipulation(&c)?.rows.remove(0).trace.trace)
    };
    let a = two(0.01)?;
    let b = two(0.02)?;
    worst = worst.max(max_trace_diff(&a, &b));
    Ok((worst <= 1e-3, format!("max deviation under (γ,μ,t) → (sγ,sμ,t/s): {worst:.2e}")))
}

fn c3(sh: &mut Shared) -> Verdict {
    let mut c = ScenarioConfig::manipulation_default();
    c.deltas = vec![0.0];
    c.engine = Engine::Both;
    c.samples = 201;
    let r = run_manipulation(&c)?;
    let row = &r.rows[0];
    let analytic = row.trace.trace.peak();
    let oracle = row.trace.oracle.as_ref().map_or(f64::INFINITY, |o| o.trace.peak());
    sh.delta_zero = Some(r);
    Ok((
        analytic <= 2e-3 && oracle <= 2e-3,
        format!("max C at Δ=0: analytic {analytic:.2e}, oracle {oracle:.2e}"),
    ))
}

fn c4(sh: &mut Shared) -> Verdict {
    let c = ScenarioConfig::manipulation_default();
    let r = run_manipulation(&c)?;
    let g = c.params.gamma / c.params.v_g;
    let revive: Vec<f64> = r
        .rows
        .iter()
        .filter(|x| !x.report.death_intervals.is_empty() && x.report.revival)
        .map(|x| x.delta * g)
        .collect();
    let no_revive: Vec<f64> = r
        .rows
        .iter()
        .filter(|x| !x.report.death_intervals.is_empty() && !x.report.revival)
        .map(|x| x.delta * g)
        .collect();
    let ok = !revive.is_empty() && !no_revive.is_empty();
    let fmt = |v: &[f64]| v.iter().map(|d| format!("{d:.3}")).collect::<Vec<_>>().join(" ");
    sh.scan = Some(r);
    Ok((
        ok,
        format!("Δγ/v with death+revival: [{}]; death only: [{}]", fmt(&revive), fmt(&no_revive)),
    ))
}

fn c5(sh: &mut Shared) -> Verdict {
    let scan = match &sh.scan {
        Some(s) => s,
        None => return Ok((false, "Δ scan unavailable".into())),
    };
    let c = ScenarioConfig::manipulation_default();
    let row = scan
        .rows
        .iter()
        .find(|r| (r.delta * c.params.gamma / c.params.v_g - 20.0).abs() < 1e-9);
    let Some(row) = row else {
        return Ok((false, "Δ = 20 v_g/γ not in the scan".into()));
    };
    let peaks = &row.report.peak_values;
    let reference = sh.peak_half;
    let ok = peaks.len() == 2 && peaks.iter().all(|p| (p / reference - 1.0).abs() <= 0.05);
    Ok((ok, format!("peaks {peaks:?} vs single-photon peak {reference:.4}")))
}

fn detection_params(gamma_over_mu: f64) -> (PhysicalParams, WavepacketSpec) {
    let p = PhysicalParams::natural(gamma_over_mu * DETECTION_MU).unwrap();
    let photon = WavepacketSpec::rightward(DETECTION_MU, 1.0, DEFAULT_DETECTION_FRONT / p.gamma);
    (p, photon)
}

fn c6() -> Verdict {
    let mut xis = default_xi_grid();
    xis.push(C64::new(0.0, 1.0));
    let mut worst: f64 = 0.0;
    let mut at_i: f64 = 0.0;
    for ratio in [0.5, 2.0] {
        let (p, photon) = detection_params(ratio);
        for row in detection_ratio(&p, &photon, &xis)? {
            worst = worst.max(row.residual());
            if row.xi == C64::new(0.0, 1.0) {
                at_i = at_i.max((row.ratio - 1.0).abs());
            }
        }
    }
    Ok((
        worst <= 1e-3 && at_i <= 1e-3,
        format!("max |ratio-1-2ξ/(1+ξ²)| {worst:.2e}; |ratio(i)-1| {at_i:.2e} (γ=μ/2, 2μ)"),
    ))
}

fn c7() -> Verdict {
    let t = Instant::now();
    let c = ScenarioConfig::detection_default();
    let r = run_detection(&c)?;
    let Some(best) = r.best_gamma else {
        return Ok((false, "empty γ grid".into()));
    };
    let step = (c.gamma_grid[1] / c.gamma_grid[0]).ln();
    let off = (best / (0.5 * c.pulse.mu)).ln().abs();
    Ok((
        off <= step * (1.0 + 1e-9),
        format!(
            "argmax γ/μ = {:.4} ({:.2} grid steps from 1/2); {:.0}s",
            best / c.pulse.mu,
            off / step,
            t.elapsed().as_secs_f64()
        ),
    ))
}

fn c8() -> Verdict {
    let mut ok = true;
    let mut worst_jump: f64 = 0.0;
    let mut worst_id: f64 = 0.0;
    let mut broken = true;
    for p in [PhysicalParams::natural(0.01)?, detection_params(0.5).0] {
        let j = run_jump_suite(&p, 24, 11, true);
        ok &= j.passed();
        worst_jump = j.relations.iter().map(|r| r.max_residual).fold(worst_jump, f64::max);
        let id = run_identity_suite(&p, 24, 13, DEFAULT_GRID2_NODES)?;
        ok &= id.passed();
        worst_id = worst_id.max(id.max_residual);
        broken &= !run_jump_suite(&p, 24, 11, false).passed();
    }
    Ok((
        ok && broken,
        format!(
            "jump residual {worst_jump:.2e}, t=0 identity {worst_id:.2e} (24 samples x 2); \
             without bound term the suite {}",
            if broken { "fails" } else { "still passes" }
        ),
    ))
}

fn c9(sh: &mut Shared) -> Verdict {
    let mut c = ScenarioConfig::generation_default();
    c.engine = Engine::Both;
    let g = run_generation(&c)?;
    let gen_dev = g
        .traces
        .iter()
        .map(|(_, t)| t.deviation.unwrap_or(f64::INFINITY))
        .fold(0.0, f64::max);
    sh.generation = Some(g);
    let zero_dev = sh
        .delta_zero
        .as_ref()
        .and_then(|r| r.rows[0].trace.deviation)
        .unwrap_or(f64::INFINITY);
    // detection at γ = 2μ, where the oracle is affordable
    let (p, photon) = detection_params(2.0);
    let xis = [C64::new(0.0, 0.0), C64::new(1.0, 0.0), C64::new(0.0, 1.0)];
    let analytic = detection_ratio(&p, &photon, &xis)?;
    let mut det_dev: f64 = 0.0;
    for (row, xi) in analytic.iter().zip(xis) {
        let o = oracle_detection_p_rr(&p, &photon, xi)?;
        det_dev = det_dev.max((row.p_rr - o).abs());
    }
    let ok = gen_dev <= ENGINE_TOLERANCE && zero_dev <= ENGINE_TOLERANCE && det_dev <= ENGINE_TOLERANCE;
    Ok((
        ok,
        format!("max |analytic-oracle|: generation {gen_dev:.2e}, Δ=0 {zero_dev:.2e}, P_RR (γ=2μ) {det_dev:.2e}"),
    ))
}

fn trace_sum_error(t: &ConcurrenceTrace) -> f64 {
    t.pops.iter().map(|p| (p.sum() - 1.0).abs()).fold(0.0, f64::max)
}

fn c10(sh: &mut Shared) -> Verdict {
    let mut oracles: Vec<&OracleTrace> = Vec::new();
    let mut traces: Vec<&ConcurrenceTrace> = Vec::new();
    if let Some(g) = &sh.generation {
        for (_, t) in &g.traces {
            traces.push(&t.trace);
            oracles.extend(t.oracle.as_ref());
        }
    }
    for r in [&sh.delta_zero, &sh.scan].into_iter().flatten() {
        for row in &r.rows {
            traces.push(&row.trace.trace);
            oracles.extend(row.trace.oracle.as_ref());
        }
    }
    if oracles.is_empty() || traces.is_empty() {
        return Ok((false, "no runs to inspect".into()));
    }
    let drift = oracles.iter().map(|o| o.norm_drift).fold(0.0, f64::max);
    let sums = traces
        .iter()
        .copied()
        .chain(oracles.iter().map(|o| &o.trace))
        .map(trace_sum_error)
        .fold(0.0, f64::max);

    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let w: [f64; 3] = [rng.gen(), rng.gen(), rng.gen()];
        let e: Vec<f64> = w.iter().map(|x: &f64| -(1.0 - x).ln()).collect();
        let s: f64 = e.iter().sum();
        let pops = QubitBasisPopulations {
            rho_gs: e[0] / s,
            rho_plus: e[1] / s,
            rho_minus: 0.0,
            rho_beta: e[2] / s,
            coh_pm: C64::new(0.0, 0.0),
        };
        let wc = wootters_concurrence(&assemble_density_matrix(&pops)?);
        worst = worst.max((wc - x_state_concurrence(&pops)?).abs());
    }
    Ok((
        drift <= 1e-6 && sums <= 1e-6 && worst <= 1e-10,
        format!(
            "oracle norm drift {drift:.2e} ({} runs); |Σρ-1| {sums:.2e} ({} traces); Wootters vs X-state {worst:.2e}",
            oracles.len(),
            traces.len() + oracles.len()
        ),
    ))
}

fn main() -> ExitCode {
    configure_threads();
    let mut sh = Shared::default();
    let mut failed = 0;
    let mut report = |id: u32, name: &str, v: Verdict, t: Instant| {
        let secs = t.elapsed().as_secs_f64();
        let (ok, detail) = v.unwrap_or_else(|e| (false, format!("error: {e}")));
        if !ok {
            failed += 1;
        }
        println!(
            "criterion {id:>2} {}: {name}: {detail} [{secs:.1}s]",
            if ok { "PASS" } else { "FAIL" }
        );
    };
    let t = Instant::now();
    report(1, "single-photon concurrence peak", c1(&mut sh), t);
    let t = Instant::now();
    report(2, "(γ, μ) scaling", c2(), t);
    let t = Instant::now();
    report(3, "no entanglement at Δ = 0", c3(&mut sh), t);
    let t = Instant::now();
    report(4, "sudden death with and without revival", c4(&mut sh), t);
    let t = Instant::now();
    report(5, "two peaks at Δ = 20 v_g/γ", c5(&mut sh), t);
    let t = Instant::now();
    report(6, "P_RR ratio against 2ξ/(1+ξ²)", c6(), t);
    let t = Instant::now();
    report(7, "P_RR maximum at γ = μ/2", c7(), t);
    let t = Instant::now();
    report(8, "jump relations and t = 0 identity", c8(), t);
    let t = Instant::now();
    report(9, "analytic vs oracle", c9(&mut sh), t);
    let t = Instant::now();
    report(10, "norm, trace and concurrence invariants", c10(&mut sh), t);
    if failed == 0 {
        println!("acceptance: all criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {failed} criteria failed");
        ExitCode::FAILURE
    }
}
