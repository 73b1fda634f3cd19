//! Projection of two-excitation states on the eigenbasis of each sector.
//!
//! Coefficients live on a tensor tangent grid in q = k − Ω/v_g. They are used
//! for normalization and t = 0 checks and for spectral cross-checks of the
//! populations; the production populations come from [`SectorEvolution`], which
//! evaluates the same time evolution without truncating the spectral sums.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Result, WqedError};
use crate::model::{PhysicalParams, Pulse, QubitBasisPopulations, WavepacketSpec, C64};
use crate::quadrature::TangentGrid;
use crate::single_ex::{n1_eigenstate_qubit_amplitude, COVERAGE_TOLERANCE};

use super::causal::SectorEvolution;
use super::eigen::{cpm, eigen_beta, PmSign};
use super::state::{InitialStateN2, Sectors, Source};
use super::ConcurrenceTrace;

pub const DEFAULT_GRID2_NODES: usize = 1024;

/// One-dimensional grid used on both photon axes.
#[derive(Debug, Clone, PartialEq)]
pub struct KGrid2 {
    pub grid: TangentGrid,
}

impl KGrid2 {
    /// Scale set by the qubit linewidth and the farthest pulse edge |d| + μ.
    pub fn for_sectors(params: &PhysicalParams, sectors: &Sectors, nodes: usize) -> Result<Self> {
        let mut scale = params.half_gamma();
        for p in sectors.pulses() {
            scale = scale.max(p.detuning.abs() + p.mu);
        }
        Ok(KGrid2 {
            grid: TangentGrid::new(0.0, scale / params.v_g, nodes)?,
        })
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }
}

/// Sector coefficients on the grid. Matrices are row-major, index i·n + j for (k₁ᵢ, k₂ⱼ).
#[derive(Debug, Clone)]
pub struct SpectralStateN2 {
    pub params: PhysicalParams,
    pub sectors: Sectors,
    pub kgrid: KGrid2,
    /// even-even, on the interacting eigenstates
    pub f5: Vec<C64>,
    /// even (single-excitation eigenstate k₁) ⊗ odd photon k₂
    pub f1: Vec<C64>,
    /// two odd photons
    pub f4: Vec<C64>,
    /// even photon with |−⟩
    pub f2: Vec<C64>,
    /// odd photon with |−⟩
    pub f3: Vec<C64>,
}

/// Observables evaluated directly from the spectral sums.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureObservables {
    pub norm: f64,
    /// Captured norm of each piece: even-even, even-odd, odd-odd, dark.
    pub sector_norms: [f64; 4],
    pub rho_beta: f64,
    /// |+⟩ population carried by the even-odd piece.
    pub rho_plus_even_odd: f64,
    pub rho_minus: f64,
}

const W_EE: f64 = 1.0 / (32.0 * PI * PI);
const W_EO: f64 = 1.0 / (4.0 * PI * PI);
const W_DARK: f64 = 1.0 / (2.0 * PI);

fn photon_ft(params: &PhysicalParams, p: &Pulse, q: f64) -> C64 {
    p.spectrum(params.v_g * q) * params.v_g.sqrt()
}

/// Pulse spectra tabulated on the grid, looked up by value.
struct Table {
    pulses: Vec<Pulse>,
    values: Vec<Vec<C64>>,
}

impl Table {
    fn new(params: &PhysicalParams, sectors: &Sectors, q: &[f64]) -> Self {
        let mut pulses: Vec<Pulse> = Vec::new();
        for p in sectors.pulses() {
            if !pulses.contains(&p) {
                pulses.push(p);
            }
        }
        let values = pulses
            .iter()
            .map(|p| q.iter().map(|&x| photon_ft(params, p, x)).collect())
            .collect();
        Table { pulses, values }
    }

    fn get(&self, p: &Pulse) -> &[C64] {
        let i = self.pulses.iter().position(|x| x == p).expect("tabulated pulse");
        &self.values[i]
    }
}

/// Projects a sector decomposition; fails if the grid misses more than the coverage tolerance.
pub fn n2_project_sectors(params: &PhysicalParams, sectors: &Sectors, kgrid: &KGrid2) -> Result<SpectralStateN2> {
    params.validate()?;
    if sectors.pulses().any(|p| p.arrival < 0.0) {
        return Err(WqedError::Unsupported(
            "photon already overlapping the qubits at t = 0 (front < 0)".into(),
        ));
    }
    let q = kgrid.grid.nodes();
    let n = q.len();
    let k0 = params.omega_q / params.v_g;
    let tab = Table::new(params, sectors, q);
    let e1: Vec<C64> = q.iter().map(|&x| n1_eigenstate_qubit_amplitude(params, k0 + x)).collect();
    let inv_cp: Vec<C64> = q
        .iter()
        .map(|&x| 1.0 / cpm(params, k0 + x, PmSign::Plus).conj())
        .collect();
    let sgv = 2.0 * (params.gamma / params.v_g).sqrt();

    let row = |i: usize, j: usize| -> (C64, C64, C64) {
        let mut f5 = C64::new(0.0, 0.0);
        for (c, a, b) in &sectors.even_even {
            f5 += c * match (a, b) {
                (Source::Photon(p), Source::Photon(r)) => {
                    let (fp, fr) = (tab.get(p), tab.get(r));
                    2.0 * (fp[i] * fr[j] + fr[i] * fp[j])
                }
                (Source::Photon(p), Source::Qubit) | (Source::Qubit, Source::Photon(p)) => {
                    let fp = tab.get(p);
                    sgv * (fp[i] * inv_cp[j] + fp[j] * inv_cp[i])
                }
                (Source::Qubit, Source::Qubit) => C64::new(0.0, 0.0),
            };
        }
        let mut f1 = C64::new(0.0, 0.0);
        for (c, a, r) in &sectors.even_odd {
            let even = match a {
                Source::Photon(p) => tab.get(p)[i],
                Source::Qubit => e1[i].conj(),
            };
            f1 += c * even * tab.get(r)[j];
        }
        let mut f4 = C64::new(0.0, 0.0);
        for (c, p, r) in &sectors.odd_odd {
            let (fp, fr) = (tab.get(p), tab.get(r));
            f4 += c * 2.0 * (fp[i] * fr[j] + fr[i] * fp[j]);
        }
        (f5, f1, f4)
    };
    let rows: Vec<Vec<(C64, C64, C64)>> = (0..n)
        .into_par_iter()
        .map(|i| (0..n).map(|j| row(i, j)).collect())
        .collect();
    let mut f5 = Vec::with_capacity(n * n);
    let mut f1 = Vec::with_capacity(n * n);
    let mut f4 = Vec::with_capacity(n * n);
    for r in rows {
        for (a, b, c) in r {
            f5.push(a);
            f1.push(b);
            f4.push(c);
        }
    }
    let dark = |list: &[(C64, Pulse)]| -> Vec<C64> {
        (0..n)
            .map(|i| list.iter().map(|(c, p)| c * tab.get(p)[i]).sum())
            .collect()
    };
    let state = SpectralStateN2 {
        params: *params,
        sectors: sectors.clone(),
        kgrid: kgrid.clone(),
        f5,
        f1,
        f4,
        f2: dark(&sectors.even_dark),
        f3: dark(&sectors.odd_dark),
    };
    let expected = sectors.norm_sqr();
    let captured = state.captured_norms().iter().sum::<f64>();
    if captured < expected * (1.0 - COVERAGE_TOLERANCE) {
        return Err(WqedError::Coverage {
            captured: captured / expected,
            required: 1.0 - COVERAGE_TOLERANCE,
        });
    }
    Ok(state)
}

/// Normalizes and projects an initial state on a grid sized for its pulses.
pub fn n2_project(params: &PhysicalParams, initial: &InitialStateN2, nodes: usize) -> Result<SpectralStateN2> {
    let sectors = initial.sectors(params)?;
    let grid = KGrid2::for_sectors(params, &sectors, nodes)?;
    n2_project_sectors(params, &sectors, &grid)
}

impl SpectralStateN2 {
    fn weighted_sum(&self, m: &[C64], f: impl Fn(usize, usize, C64) -> C64 + Sync) -> C64 {
        let w = self.kgrid.grid.weights();
        let n = w.len();
        let rows: Vec<C64> = (0..n)
            .into_par_iter()
            .map(|i| (0..n).map(|j| w[i] * w[j] * f(i, j, m[i * n + j])).sum())
            .collect();
        rows.iter().sum()
    }

    /// Captured norm per piece: even-even, even-odd, odd-odd, dark.
    pub fn captured_norms(&self) -> [f64; 4] {
        let sq = |m: &[C64]| self.weighted_sum(m, |_, _, v| C64::new(v.norm_sqr(), 0.0)).re;
        let w = self.kgrid.grid.weights();
        let dark: f64 = (0..w.len())
            .map(|i| w[i] * (self.f2[i].norm_sqr() + self.f3[i].norm_sqr()))
            .sum();
        [
            W_EE * sq(&self.f5),
            W_EO * sq(&self.f1),
            W_EE * sq(&self.f4),
            W_DARK * dark,
        ]
    }

    /// Doubly excited amplitude at time t from the spectral sum.
    pub fn beta_quadrature(&self, t: f64) -> C64 {
        let q = self.kgrid.grid.nodes();
        let k0 = self.params.omega_q / self.params.v_g;
        let vg = self.params.v_g;
        let ph: Vec<C64> = q.iter().map(|&x| C64::from_polar(1.0, -vg * x * t)).collect();
        W_EE * self.weighted_sum(&self.f5, |i, j, v| {
            v * eigen_beta(&self.params, k0 + q[i], k0 + q[j]) * ph[i] * ph[j]
        })
    }

    pub fn quadrature_observables(&self, t: f64) -> QuadratureObservables {
        let sector_norms = self.captured_norms();
        let q = self.kgrid.grid.nodes();
        let w = self.kgrid.grid.weights();
        let n = q.len();
        let k0 = self.params.omega_q / self.params.v_g;
        let vg = self.params.v_g;
        let a: Vec<C64> = q
            .iter()
            .map(|&x| n1_eigenstate_qubit_amplitude(&self.params, k0 + x) * C64::from_polar(1.0, -vg * x * t))
            .collect();
        let rho_plus_even_odd: f64 = (0..n)
            .into_par_iter()
            .map(|j| {
                let s: C64 = (0..n).map(|i| w[i] * self.f1[i * n + j] * a[i]).sum::<C64>() / (2.0 * PI);
                w[j] * s.norm_sqr()
            })
            .collect::<Vec<f64>>()
            .iter()
            .sum::<f64>()
            / (2.0 * PI);
        let rho_minus = W_DARK * (0..n).map(|i| w[i] * self.f2[i].norm_sqr()).sum::<f64>()
            + W_DARK * (0..n).map(|i| w[i] * self.f3[i].norm_sqr()).sum::<f64>();
        QuadratureObservables {
            norm: sector_norms.iter().sum(),
            sector_norms,
            rho_beta: self.beta_quadrature(t).norm_sqr(),
            rho_plus_even_odd,
            rho_minus,
        }
    }

    /// Exact evolution of the projected state up to `horizon`.
    pub fn evolution(&self, horizon: f64) -> SectorEvolution {
        SectorEvolution::new(&self.params, &self.sectors, horizon)
    }
}

/// Populations at a single time.
pub fn n2_populations(spectral: &SpectralStateN2, t: f64) -> QubitBasisPopulations {
    spectral.evolution(t).populations(t)
}

/// Populations and concurrence at each time (times in the simulation clock).
pub fn n2_concurrence_trace(spectral: &SpectralStateN2, times: &[f64]) -> Result<ConcurrenceTrace> {
    let horizon = times.iter().copied().fold(0.0, f64::max);
    let ev = spectral.evolution(horizon);
    Ok(trace_from_evolution(&ev, times))
}

pub(crate) fn trace_from_evolution(ev: &SectorEvolution, times: &[f64]) -> ConcurrenceTrace {
    let pops: Vec<QubitBasisPopulations> = times.par_iter().map(|&t| ev.populations(t)).collect();
    ConcurrenceTrace::from_pops(times.to_vec(), pops)
}

/// Largest allowed t = 0 identity residual.
pub const IDENTITY_THRESHOLD: f64 = 1e-6;

#[derive(Debug, Clone, Serialize)]
pub struct IdentityReport {
    pub samples: usize,
    pub nodes: usize,
    pub max_residual: f64,
    /// Sample index with the largest residual.
    pub worst: usize,
}

impl IdentityReport {
    pub fn passed(&self) -> bool {
        self.max_residual <= IDENTITY_THRESHOLD
    }
}

fn random_state(params: &PhysicalParams, rng: &mut ChaCha8Rng, two_photons: bool) -> InitialStateN2 {
    let g = params.gamma.max(1e-12);
    let mu = g * 4f64.powf(rng.gen_range(-1.0..1.0));
    let omega = params.omega_q + rng.gen_range(-1.0..1.0) * g;
    if two_photons {
        let mu2 = g * 4f64.powf(rng.gen_range(-1.0..1.0));
        InitialStateN2::TwoPhotons {
            a: WavepacketSpec::rightward(mu, omega, 0.0),
            b: WavepacketSpec::leftward(mu2, params.omega_q, 0.0),
        }
    } else {
        InitialStateN2::PhotonOnQubits {
            photon: WavepacketSpec::rightward(mu, omega, 0.0),
            xi: C64::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)),
        }
    }
}

/// Largest t = 0 mismatch between the spectral sums and direct evaluation:
/// captured norms, ρ_β, ρ₋ and the |+⟩ weight of the even-odd piece.
fn identity_residual(params: &PhysicalParams, initial: &InitialStateN2, nodes: usize) -> Result<f64> {
    let sectors = initial.sectors(params)?;
    let grid = KGrid2::for_sectors(params, &sectors, nodes)?;
    let s = match n2_project_sectors(params, &sectors, &grid) {
        Ok(s) => s,
        Err(WqedError::Coverage { captured, .. }) => return Ok((1.0 - captured).abs()),
        Err(e) => return Err(e),
    };
    let qo = s.quadrature_observables(0.0);
    let direct = s.evolution(0.0).populations(0.0);
    let want = sectors.norms();
    let mut res = (qo.norm - want.iter().sum::<f64>()).abs();
    res = res.max((qo.rho_beta - direct.rho_beta).abs());
    res = res.max((qo.rho_minus - direct.rho_minus).abs());
    let mut eo = C64::new(0.0, 0.0);
    for (ca, sa, pa) in &sectors.even_odd {
        for (cb, sb, pb) in &sectors.even_odd {
            if (*sa, *sb) == (Source::Qubit, Source::Qubit) {
                eo += ca.conj() * cb * pa.overlap(pb);
            }
        }
    }
    Ok(res.max((qo.rho_plus_even_odd - eo.re).abs()))
}

/// t = 0 identity over random single-photon-on-qubits and two-photon states.
pub fn run_identity_suite(params: &PhysicalParams, samples: usize, seed: u64, nodes: usize) -> Result<IdentityReport> {
    params.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let states: Vec<InitialStateN2> = (0..samples).map(|i| random_state(params, &mut rng, i % 2 == 1)).collect();
    let res = states
        .par_iter()
        .map(|st| identity_residual(params, st, nodes))
        .collect::<Result<Vec<f64>>>()?;
    let (worst, max_residual) = res
        .iter()
        .enumerate()
        .fold((0, 0.0), |acc, (i, &r)| if r > acc.1 { (i, r) } else { acc });
    Ok(IdentityReport {
        samples,
        nodes,
        max_residual,
        worst,
    })
}

/// Narrow pulse detuned by three linewidths, the hardest default case for the grid.
pub fn drift_probe_state(params: &PhysicalParams) -> InitialStateN2 {
    let g = params.gamma.max(1e-12);
    InitialStateN2::PhotonOnQubits {
        photon: WavepacketSpec::rightward(g / 8.0, params.omega_q + 3.0 * g, 0.0),
        xi: C64::new(1.0, 0.5),
    }
}

/// Change of the t = 0 identity residual when the grid grows by half.
pub fn grid_drift(params: &PhysicalParams, initial: &InitialStateN2, nodes: usize) -> Result<f64> {
    let a = identity_residual(params, initial, nodes)?;
    let b = identity_residual(params, initial, nodes + nodes / 2)?;
    Ok((a - b).abs().max(a))
}
