//! Drivers for the three studies: entanglement generation by one photon,
//! manipulation by a delayed second photon, and detection through two-photon
//! statistics. Also the sudden-death / revival classifier.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Result, WqedError};
use crate::model::{Direction, PhysicalParams, Pulse, WavepacketSpec, C64};
use crate::oracle::{auto_model, oracle_evolve, oracle_n1_trace, oracle_two_photon_probabilities, OracleTrace};
use crate::single_ex::{default_kgrid, n1_evolve_trace, n1_project};
use crate::two_ex::{
    detection_ratio, n2_concurrence_trace, n2_project, two_photon_probabilities, ConcurrenceTrace, DetectionRow,
    default_t_end, InitialStateN2, SectorEvolution, DEFAULT_DETECTION_FRONT, DEFAULT_GRID2_NODES,
};

pub const DEFAULT_THRESHOLD: f64 = 0.01;
pub const DEFAULT_SAMPLES: usize = 801;
/// Largest engine disagreement accepted by the cross-check.
pub const ENGINE_TOLERANCE: f64 = 1e-2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scenario {
    Generation,
    Manipulation,
    Detection,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Engine {
    Analytic,
    Oracle,
    Both,
}

impl Engine {
    pub fn analytic(self) -> bool {
        matches!(self, Engine::Analytic | Engine::Both)
    }

    pub fn oracle(self) -> bool {
        matches!(self, Engine::Oracle | Engine::Both)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioConfig {
    pub params: PhysicalParams,
    pub scenario: Scenario,
    /// Reference photon. Generation: μ is replaced by each entry of `mus`.
    pub pulse: WavepacketSpec,
    /// Generation: one trace per envelope rate.
    pub mus: Vec<f64>,
    /// Manipulation: delays of the second photon (lengths).
    pub deltas: Vec<f64>,
    #[serde(skip)]
    pub xi_grid: Vec<C64>,
    /// Detection: ξ values also run through the oracle.
    #[serde(skip)]
    pub oracle_xi: Vec<C64>,
    /// Detection: qubit linewidths to scan.
    pub gamma_grid: Vec<f64>,
    pub engine: Engine,
    pub samples: usize,
    /// Trace length after the first arrival, in units of 1/γ; None picks one from the pulses.
    pub span_gamma: Option<f64>,
    /// Nodes of the spectral grid.
    pub grid: usize,
    pub threshold: f64,
}

fn log_space(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..n).map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp()).collect()
}

/// Δ = 0 plus 15 log-spaced values in [0.1, 20] v_g/γ.
pub fn default_delta_scan(params: &PhysicalParams) -> Vec<f64> {
    let unit = params.v_g / params.gamma;
    let mut v = vec![0.0];
    v.extend(log_space(0.1 * unit, 20.0 * unit, 15));
    v
}

/// 24 log-spaced linewidths in [μ/8, 8μ].
pub fn default_gamma_grid(mu: f64) -> Vec<f64> {
    log_space(mu / 8.0, 8.0 * mu, 24)
}

/// Real ξ from −4 to 4 in steps of 1/2.
pub fn default_xi_grid() -> Vec<C64> {
    (0..17).map(|i| C64::new(-4.0 + 0.5 * i as f64, 0.0)).collect()
}

impl ScenarioConfig {
    fn base(params: PhysicalParams, scenario: Scenario, pulse: WavepacketSpec) -> Self {
        ScenarioConfig {
            params,
            scenario,
            pulse,
            mus: Vec::new(),
            deltas: Vec::new(),
            xi_grid: Vec::new(),
            oracle_xi: Vec::new(),
            gamma_grid: Vec::new(),
            engine: Engine::Analytic,
            samples: DEFAULT_SAMPLES,
            span_gamma: None,
            grid: DEFAULT_GRID2_NODES,
            threshold: DEFAULT_THRESHOLD,
        }
    }

    /// γ = Ω/100, resonant photons 200 wavelengths away, μ ∈ {γ/2, 2γ, γ/15}.
    pub fn generation_default() -> Self {
        let params = PhysicalParams::natural(0.01).expect("valid defaults");
        let g = params.gamma;
        let front = 200.0 * params.wavelength();
        let mut c = Self::base(params, Scenario::Generation, WavepacketSpec::rightward(g / 2.0, params.omega_q, front));
        c.mus = vec![g / 2.0, 2.0 * g, g / 15.0];
        c
    }

    /// Two resonant photons with μ = γ/2, default Δ scan.
    pub fn manipulation_default() -> Self {
        let params = PhysicalParams::natural(0.01).expect("valid defaults");
        let g = params.gamma;
        let front = 200.0 * params.wavelength();
        let mut c = Self::base(params, Scenario::Manipulation, WavepacketSpec::rightward(g / 2.0, params.omega_q, front));
        c.deltas = default_delta_scan(&params);
        c
    }

    /// μ = Ω/3000, γ = μ/2, γx₀/v_g = 10⁻³, real ξ grid and the default γ scan.
    pub fn detection_default() -> Self {
        let mu = 1.0 / 3000.0;
        let params = PhysicalParams::natural(mu / 2.0).expect("valid defaults");
        let front = DEFAULT_DETECTION_FRONT * params.v_g / params.gamma;
        let mut c = Self::base(params, Scenario::Detection, WavepacketSpec::rightward(mu, params.omega_q, front));
        c.xi_grid = default_xi_grid();
        c.oracle_xi = vec![C64::new(0.0, 0.0), C64::new(1.0, 0.0)];
        c.gamma_grid = default_gamma_grid(mu);
        c
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        self.pulse.validate()?;
        if self.samples < 2 {
            return Err(WqedError::param("samples", "need at least 2"));
        }
        if let Some(s) = self.span_gamma {
            if !(s.is_finite() && s > 0.0) {
                return Err(WqedError::param("span_gamma", "must be > 0"));
            }
        }
        if !(self.threshold.is_finite() && self.threshold > 0.0) {
            return Err(WqedError::param("threshold", "must be > 0"));
        }
        match self.scenario {
            Scenario::Generation => {
                if self.mus.is_empty() {
                    return Err(WqedError::param("mus", "generation needs at least one μ"));
                }
                for m in &self.mus {
                    if !(m.is_finite() && *m > 0.0) {
                        return Err(WqedError::param("mus", "entries must be > 0"));
                    }
                }
            }
            Scenario::Manipulation => {
                if self.deltas.is_empty() {
                    return Err(WqedError::param("deltas", "manipulation needs at least one Δ"));
                }
                if self.deltas.iter().any(|d| !(d.is_finite() && *d >= 0.0)) {
                    return Err(WqedError::param("deltas", "entries must be ≥ 0"));
                }
            }
            Scenario::Detection => {
                if self.xi_grid.is_empty() {
                    return Err(WqedError::param("xi", "detection needs at least one ξ"));
                }
                if self.xi_grid.iter().chain(&self.oracle_xi).any(|x| !x.re.is_finite() || !x.im.is_finite()) {
                    return Err(WqedError::param("xi", "entries must be finite"));
                }
                if self.gamma_grid.iter().any(|g| !(g.is_finite() && *g > 0.0)) {
                    return Err(WqedError::param("gamma_grid", "entries must be > 0"));
                }
                if self.pulse.direction != Direction::Rightward {
                    return Err(WqedError::param("direction", "detection uses a rightward photon"));
                }
            }
        }
        Ok(())
    }
}

/// Caps the global worker pool at `WQED_THREADS` when set. Only the first call has an effect.
pub fn configure_threads() {
    if let Some(n) = std::env::var("WQED_THREADS").ok().and_then(|v| v.trim().parse::<usize>().ok()) {
        if n > 0 {
            if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
                log::debug!("thread pool already configured: {e}");
            }
        }
    }
}

/// Unit of the reported time axis: 1/γ, or 1/μ for uncoupled qubits.
pub fn time_unit(params: &PhysicalParams, mu: f64) -> f64 {
    if params.gamma > 0.0 {
        1.0 / params.gamma
    } else {
        1.0 / mu
    }
}

/// Equally spaced times from the first arrival over `span` time units.
fn sample_times(unit: f64, first: f64, span: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| first + unit * span * i as f64 / (n - 1) as f64).collect()
}

/// max(20/γ, 10/(2μ)) in time units.
fn wait_units(params: &PhysicalParams, mu: f64) -> f64 {
    (20.0f64).max(10.0 / (2.0 * mu * time_unit(params, mu)))
}

/// Largest |a − b| over populations and concurrence of two traces on the same times.
pub fn trace_deviation(a: &ConcurrenceTrace, b: &ConcurrenceTrace) -> f64 {
    let mut d: f64 = 0.0;
    for ((pa, pb), (ca, cb)) in a.pops.iter().zip(&b.pops).zip(a.concurrence.iter().zip(&b.concurrence)) {
        d = d
            .max((pa.rho_gs - pb.rho_gs).abs())
            .max((pa.rho_plus - pb.rho_plus).abs())
            .max((pa.rho_minus - pb.rho_minus).abs())
            .max((pa.rho_beta - pb.rho_beta).abs())
            .max((ca - cb).abs());
    }
    d
}

/// One trace of a run, with its reported time origin.
#[derive(Debug, Clone, Serialize)]
pub struct LabelledTrace {
    pub label: String,
    /// Simulation time of the first photon arrival.
    pub t_first: f64,
    /// Analytic trace unless the run used only the oracle.
    pub trace: ConcurrenceTrace,
    pub oracle: Option<OracleTrace>,
    /// Max-abs deviation between engines when both ran.
    pub deviation: Option<f64>,
}

impl LabelledTrace {
    /// (t − t_first) in units of [`time_unit`] for each sample.
    pub fn t_gamma(&self, unit: f64) -> Vec<f64> {
        self.trace.times.iter().map(|t| (t - self.t_first) / unit).collect()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct GenerationResult {
    pub traces: Vec<(f64, LabelledTrace)>,
}

impl GenerationResult {
    pub fn peaks(&self) -> Vec<(f64, f64)> {
        self.traces.iter().map(|(mu, t)| (*mu, t.trace.peak())).collect()
    }
}

fn combine(
    label: String,
    t_first: f64,
    engine: Engine,
    analytic: Option<ConcurrenceTrace>,
    oracle: Option<OracleTrace>,
) -> LabelledTrace {
    let deviation = match (&analytic, &oracle) {
        (Some(a), Some(o)) => Some(trace_deviation(a, &o.trace)),
        _ => None,
    };
    let trace = match (engine, analytic, &oracle) {
        (_, Some(a), _) => a,
        (_, None, Some(o)) => o.trace.clone(),
        _ => ConcurrenceTrace::default(),
    };
    LabelledTrace {
        label,
        t_first,
        trace,
        oracle,
        deviation,
    }
}

/// Single photon on qubits in the ground state, one trace per μ.
///
/// Photons are moved so the front arrives at t = 0; the dynamics only depend
/// on the time since arrival.
pub fn run_generation(config: &ScenarioConfig) -> Result<GenerationResult> {
    config.validate()?;
    let params = config.params;
    let traces = config
        .mus
        .par_iter()
        .map(|&mu| -> Result<(f64, LabelledTrace)> {
            let spec = WavepacketSpec { mu, front: 0.0, ..config.pulse };
            let span = config.span_gamma.unwrap_or_else(|| wait_units(&params, mu));
            let times = sample_times(time_unit(&params, mu), 0.0, span, config.samples);
            let analytic = if config.engine.analytic() {
                let grid = default_kgrid(&params, &[mu], config.grid)?;
                let state = n1_project(&params, &spec, &grid)?;
                Some(n1_evolve_trace(&params, &state, &times))
            } else {
                None
            };
            let oracle = if config.engine.oracle() {
                let model = auto_model(&params, &[Pulse::from_spec(&params, &spec)], *times.last().unwrap(), 1.0)?;
                Some(oracle_n1_trace(&model, &spec, &times)?)
            } else {
                None
            };
            Ok((mu, combine(format!("mu={mu}"), 0.0, config.engine, analytic, oracle)))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(GenerationResult { traces })
}

/// Death intervals (C = 0 while ρ₊ ≥ threshold after entanglement appeared),
/// whether C comes back above the threshold, and the local maxima of C.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeathRevivalReport {
    pub death_intervals: Vec<(f64, f64)>,
    pub revival: bool,
    pub peak_values: Vec<f64>,
    /// C never exceeded the threshold.
    pub never_entangled: bool,
}

const ZERO_C: f64 = 1e-12;

pub fn detect_death_revival(trace: &ConcurrenceTrace, threshold: f64) -> DeathRevivalReport {
    let c = &trace.concurrence;
    let peak_values = trace.peaks_above(threshold).into_iter().map(|p| p.1).collect();
    let Some(first) = c.iter().position(|v| *v > threshold) else {
        return DeathRevivalReport {
            death_intervals: Vec::new(),
            revival: false,
            peak_values,
            never_entangled: true,
        };
    };
    // (first index, last index) of each run of dead samples
    let mut runs: Vec<(usize, usize)> = Vec::new();
    for i in first..c.len() {
        let rho_plus = trace.pops.get(i).map_or(0.0, |p| p.rho_plus);
        if c[i] <= ZERO_C && rho_plus >= threshold {
            match runs.last_mut() {
                Some(r) if r.1 + 1 == i => r.1 = i,
                _ => runs.push((i, i)),
            }
        }
    }
    let revival = runs
        .first()
        .is_some_and(|r| c[r.1 + 1..].iter().any(|v| *v > threshold));
    DeathRevivalReport {
        death_intervals: runs.iter().map(|r| (trace.times[r.0], trace.times[r.1])).collect(),
        revival,
        peak_values,
        never_entangled: false,
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ManipulationRow {
    pub delta: f64,
    pub trace: LabelledTrace,
    pub report: DeathRevivalReport,
}

#[derive(Debug, Clone, Serialize)]
pub struct ManipulationResult {
    pub rows: Vec<ManipulationRow>,
}

/// The two-photon state for delay Δ: a rightward photon arriving first, a
/// leftward one Δ/v_g later.
pub fn manipulation_state(config: &ScenarioConfig, delta: f64) -> InitialStateN2 {
    let p = config.pulse;
    InitialStateN2::TwoPhotons {
        a: WavepacketSpec { front: 0.0, direction: Direction::Rightward, ..p },
        b: WavepacketSpec { front: delta, direction: Direction::Leftward, ..p },
    }
}

pub fn run_manipulation(config: &ScenarioConfig) -> Result<ManipulationResult> {
    config.validate()?;
    let params = config.params;
    let rows = config
        .deltas
        .par_iter()
        .map(|&delta| -> Result<ManipulationRow> {
            let state = manipulation_state(config, delta);
            let unit = time_unit(&params, config.pulse.mu);
            let span = config
                .span_gamma
                .unwrap_or_else(|| delta / params.v_g / unit + wait_units(&params, config.pulse.mu));
            let times = sample_times(unit, 0.0, span, config.samples);
            let analytic = if config.engine.analytic() {
                let spectral = n2_project(&params, &state, config.grid)?;
                Some(n2_concurrence_trace(&spectral, &times)?)
            } else {
                None
            };
            let oracle = if config.engine.oracle() {
                let sectors = state.sectors(&params)?;
                let pulses: Vec<Pulse> = sectors.pulses().collect();
                let model = auto_model(&params, &pulses, *times.last().unwrap(), 1.0)?;
                Some(oracle_evolve(&model, &sectors, &times)?)
            } else {
                None
            };
            let trace = combine(format!("delta={delta}"), 0.0, config.engine, analytic, oracle);
            let report = detect_death_revival(&trace.trace, config.threshold);
            Ok(ManipulationRow { delta, trace, report })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ManipulationResult { rows })
}

/// max over ξ of P_RR at one linewidth.
#[derive(Debug, Clone, Serialize)]
pub struct GammaRow {
    pub gamma: f64,
    pub p_rr: Vec<f64>,
    pub max_p_rr: f64,
    pub argmax_xi: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct DetectionResult {
    /// Ratio table at the configured γ.
    pub rows: Vec<DetectionRow>,
    /// P_RR(γ, ξ) over the γ grid (empty when no grid is configured).
    pub gamma_scan: Vec<GammaRow>,
    /// γ of the largest max_ξ P_RR.
    pub best_gamma: Option<f64>,
    /// P_RR grows with C(ξ) over the sampled real ξ ≥ 0.
    pub monotone: bool,
    /// (ξ, analytic P_RR, oracle P_RR) for each oracle ξ when the oracle ran.
    pub oracle_rows: Vec<(C64, f64, f64)>,
    pub deviation: Option<f64>,
}

fn photon_for(config: &ScenarioConfig, params: &PhysicalParams) -> WavepacketSpec {
    // keep γx₀/v_g fixed when γ changes
    let scale = config.params.gamma / params.gamma;
    WavepacketSpec { front: config.pulse.front * scale, ..config.pulse }
}

/// Oracle P_RR for a photon on qubits prepared with ξ.
pub fn oracle_detection_p_rr(params: &PhysicalParams, photon: &WavepacketSpec, xi: C64) -> Result<f64> {
    let sectors = InitialStateN2::PhotonOnQubits { photon: *photon, xi }.sectors(params)?;
    let t_end = default_t_end(params, &sectors);
    let pulses: Vec<Pulse> = sectors.pulses().collect();
    let model = auto_model(params, &pulses, t_end, 1.0)?;
    Ok(oracle_two_photon_probabilities(&model, &sectors, t_end)?.p_rr)
}

pub fn run_detection(config: &ScenarioConfig) -> Result<DetectionResult> {
    config.validate()?;
    let params = config.params;
    let rows = detection_ratio(&params, &config.pulse, &config.xi_grid)?;
    let gamma_scan = config
        .gamma_grid
        .par_iter()
        .map(|&gamma| -> Result<GammaRow> {
            let p = PhysicalParams::new(params.omega_q, gamma, params.v_g)?;
            let r = detection_ratio(&p, &photon_for(config, &p), &config.xi_grid)?;
            let p_rr: Vec<f64> = r.iter().map(|x| x.p_rr).collect();
            let (i, max) = p_rr
                .iter()
                .enumerate()
                .fold((0, f64::NEG_INFINITY), |acc, (i, v)| if *v > acc.1 { (i, *v) } else { acc });
            Ok(GammaRow {
                gamma,
                p_rr,
                max_p_rr: max,
                argmax_xi: config.xi_grid[i].re,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let best_gamma = gamma_scan
        .iter()
        .fold(None::<&GammaRow>, |b, r| match b {
            Some(x) if x.max_p_rr >= r.max_p_rr => Some(x),
            _ => Some(r),
        })
        .map(|r| r.gamma);
    let monotone = is_monotone(&rows);
    let (oracle_rows, deviation) = if config.engine.oracle() && !config.oracle_xi.is_empty() {
        let analytic = detection_ratio(&params, &config.pulse, &config.oracle_xi)?;
        let o = config
            .oracle_xi
            .par_iter()
            .map(|&xi| oracle_detection_p_rr(&params, &config.pulse, xi))
            .collect::<Result<Vec<f64>>>()?;
        let table: Vec<(C64, f64, f64)> = analytic.iter().zip(&o).map(|(r, o)| (r.xi, r.p_rr, *o)).collect();
        let dev = table.iter().map(|r| (r.1 - r.2).abs()).fold(0.0, f64::max);
        (table, Some(dev))
    } else {
        (Vec::new(), None)
    };
    Ok(DetectionResult {
        rows,
        gamma_scan,
        best_gamma,
        monotone,
        oracle_rows,
        deviation,
    })
}

/// Sorted by C(ξ), P_RR never decreases (real ξ ≥ 0 only).
fn is_monotone(rows: &[DetectionRow]) -> bool {
    let mut pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.xi.im == 0.0 && r.xi.re >= 0.0)
        .map(|r| (r.concurrence, r.p_rr))
        .collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    pts.windows(2).all(|w| w[1].1 >= w[0].1 * (1.0 - 1e-6) - 1e-12)
}

/// P_RR + P_RL + P_LL for a two-photon state; unitarity check for reports.
pub fn two_photon_total(params: &PhysicalParams, state: &InitialStateN2) -> Result<f64> {
    let sectors = state.sectors(params)?;
    let t_end = default_t_end(params, &sectors);
    let ev = SectorEvolution::new(params, &sectors, t_end);
    Ok(two_photon_probabilities(&ev, t_end).total())
}
