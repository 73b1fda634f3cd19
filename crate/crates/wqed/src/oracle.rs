//! Brute-force reference engine.
//!
//! The even photon channel is replaced by M uniformly spaced modes of detuning
//! δₙ = −W + (n + ½)Δω, each coupled to σ_e with g = sqrt(γΔω/2π). The
//! Schrödinger equation is integrated directly in the rotating frame with a
//! Chebyshev propagator. Odd photons and |−⟩ are free and are carried along
//! as mode amplitudes with trivial phases.
//!
//! Two-excitation layout: the symmetric two-photon amplitude ψ(n, m) of
//! ½ Σ ψ(n,m) a_n† a_m† |0⟩ on the upper triangle n ≤ m (row-major, norm
//! Σ_{n<m} |ψ|² + ½ Σ_n |ψ(n,n)|²), then |n⟩ ⊗ |+⟩ for each n, then |ee⟩.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Result, WqedError};
use crate::model::{PhysicalParams, Pulse, QubitBasisPopulations, WavepacketSpec, C64, I};
use crate::single_ex::{photon_components, N1Component};
use crate::two_ex::{ConcurrenceTrace, Sectors, Source, TwoPhotonProbabilities};

pub const MIN_MODES: usize = 256;
/// Smallest fraction of the initial norm the mode window has to hold.
pub const MIN_CAPTURED: f64 = 0.95;
/// Chebyshev terms are dropped once below this.
const CHEB_TOL: f64 = 1e-15;
/// Largest r·dt per propagation step.
const CHEB_STEP: f64 = 40.0;

#[derive(Debug, Clone, Serialize)]
pub struct DiscretizedModel {
    pub params: PhysicalParams,
    /// Mode detunings from Ω.
    pub mode_freqs: Vec<f64>,
    /// Mode–σ_e couplings.
    pub couplings: Vec<f64>,
    pub spacing: f64,
    pub window: f64,
}

/// M modes covering detunings [−window, window].
pub fn build_discretized(params: &PhysicalParams, m: usize, window: f64) -> Result<DiscretizedModel> {
    params.validate()?;
    if m < MIN_MODES {
        return Err(WqedError::param("modes", format!("need at least {MIN_MODES}")));
    }
    if !(window.is_finite() && window > 0.0) {
        return Err(WqedError::param("window", "must be > 0"));
    }
    let spacing = 2.0 * window / m as f64;
    if params.gamma > 0.0 && spacing > params.gamma / 10.0 {
        return Err(WqedError::Resolution {
            spacing,
            required: params.gamma / 10.0,
        });
    }
    let g = (params.gamma * spacing / (2.0 * PI)).sqrt();
    Ok(DiscretizedModel {
        params: *params,
        mode_freqs: (0..m).map(|n| -window + (n as f64 + 0.5) * spacing).collect(),
        couplings: vec![g; m],
        spacing,
        window,
    })
}

/// Window 40·max(γ, μ) and a spacing that resolves every linewidth and keeps
/// the recurrence time 2π/Δω beyond `horizon` plus the slowest pulse tail.
/// `refine` divides the spacing (1 for the default model).
pub fn auto_model(params: &PhysicalParams, pulses: &[Pulse], horizon: f64, refine: f64) -> Result<DiscretizedModel> {
    let mut width = params.gamma;
    let mut slow = f64::INFINITY;
    for p in pulses {
        width = width.max(p.mu).max(p.detuning.abs() + p.mu);
        slow = slow.min(p.mu);
    }
    if width <= 0.0 {
        return Err(WqedError::param("pulses", "need a pulse or a nonzero γ"));
    }
    let window = 40.0 * width;
    let mut spacing = f64::INFINITY;
    if params.gamma > 0.0 {
        spacing = spacing.min(params.gamma / 10.0);
    }
    if slow.is_finite() {
        spacing = spacing.min(2.0 * slow / 10.0);
        spacing = spacing.min(2.0 * PI / (horizon + 5.0 / slow));
    } else {
        spacing = spacing.min(2.0 * PI / horizon.max(1e-300));
    }
    let m = ((2.0 * window / spacing * refine).ceil() as usize).max(MIN_MODES);
    build_discretized(params, m, window)
}

impl DiscretizedModel {
    pub fn modes(&self) -> usize {
        self.mode_freqs.len()
    }

    /// Time after which the discretized continuum repeats itself.
    pub fn recurrence_time(&self) -> f64 {
        2.0 * PI / self.spacing
    }

    fn g(&self) -> f64 {
        self.couplings[0]
    }

    pub fn pair_count(&self) -> usize {
        let m = self.modes();
        m * (m + 1) / 2
    }

    /// Slot of ψ(n, m) = ψ(m, n).
    pub fn pair_index(&self, n: usize, m: usize) -> usize {
        let (a, b) = if n <= m { (n, m) } else { (m, n) };
        self.row_start(a) + (b - a)
    }

    fn row_start(&self, n: usize) -> usize {
        n * self.modes() - n * n.saturating_sub(1) / 2
    }

    fn pair_norm_sqr(&self, v: &[C64]) -> f64 {
        let diag: f64 = (0..self.modes()).map(|n| v[self.row_start(n)].norm_sqr()).sum();
        norm_sqr(&v[..self.pair_count()]) - 0.5 * diag
    }

    /// Mode amplitudes of a pulse, u_n = f̂(δ_n) sqrt(Δω/2π).
    pub fn pulse_modes(&self, p: &Pulse) -> Vec<C64> {
        let s = (self.spacing / (2.0 * PI)).sqrt();
        self.mode_freqs.iter().map(|&d| p.spectrum(d) * s).collect()
    }

    /// One excitation: modes then |+⟩.
    fn apply_n1(&self, x: &[C64], y: &mut [C64]) {
        let m = self.modes();
        let g = self.g();
        let mut qubit = C64::new(0.0, 0.0);
        for n in 0..m {
            y[n] = self.mode_freqs[n] * x[n] + g * x[m];
            qubit += g * x[n];
        }
        y[m] = qubit;
    }

    fn bound_n1(&self) -> (f64, f64) {
        let v = self.g() * (self.modes() as f64).sqrt();
        (0.0, self.window + v + 1e-12)
    }

    pub fn two_excitation_dim(&self) -> usize {
        self.pair_count() + self.modes() + 1
    }

    fn apply_n2(&self, x: &[C64], y: &mut [C64]) {
        let m = self.modes();
        let np = self.pair_count();
        let g = self.g();
        let d = &self.mode_freqs;
        let (xp, xr) = x.split_at(np);
        let (xb, xe) = xr.split_at(m);
        let beta = xe[0];
        let (yp, yr) = y.split_at_mut(np);
        let (yb, ye) = yr.split_at_mut(m);
        // Σ_n ψ(n, j): row j from the diagonal on, plus column j above it
        let mut sums = vec![C64::new(0.0, 0.0); m];
        let mut start = 0;
        for n in 0..m {
            let len = m - n;
            let (xrow, yrow) = (&xp[start..start + len], &mut yp[start..start + len]);
            let (dn, bn) = (d[n], xb[n]);
            let mut row = C64::new(0.0, 0.0);
            for (i, (yv, &xv)) in yrow.iter_mut().zip(xrow).enumerate() {
                let k = n + i;
                *yv = (dn + d[k]) * xv + g * (bn + xb[k]);
                row += xv;
            }
            for (sk, &xv) in sums[n + 1..].iter_mut().zip(&xrow[1..]) {
                *sk += xv;
            }
            sums[n] += row;
            start += len;
        }
        let mut total = C64::new(0.0, 0.0);
        for j in 0..m {
            yb[j] = d[j] * xb[j] + g * sums[j] + g * beta;
            total += xb[j];
        }
        ye[0] = g * total;
    }

    fn bound_n2(&self) -> (f64, f64) {
        let mf = self.modes() as f64;
        let v = self.g() * ((2.0 * mf).sqrt() + mf.sqrt());
        (0.0, 2.0 * self.window + v + 1e-12)
    }
}

/// J_0(x) ... J_n(x) by Miller's backward recurrence.
fn bessel_j_seq(n: usize, x: f64) -> Vec<f64> {
    if x == 0.0 {
        let mut v = vec![0.0; n + 1];
        v[0] = 1.0;
        return v;
    }
    let start = n + 20 + x.abs() as usize + 10 * ((x.abs().max(1.0)).ln().ceil() as usize + 1);
    let start = start + start % 2;
    let mut out = vec![0.0; start + 2];
    let (mut jp1, mut j) = (0.0f64, 1e-300f64);
    let mut norm = 0.0;
    for k in (0..=start).rev() {
        out[k] = j;
        if k % 2 == 0 {
            norm += if k == 0 { j } else { 2.0 * j };
        }
        let jm1 = 2.0 * k as f64 / x * j - jp1;
        jp1 = j;
        j = jm1;
        if j.abs() > 1e250 {
            // rescale to avoid overflow
            for v in out.iter_mut().skip(k) {
                *v *= 1e-250;
            }
            jp1 *= 1e-250;
            j *= 1e-250;
            norm *= 1e-250;
        }
    }
    out.truncate(n + 1);
    for v in out.iter_mut() {
        *v /= norm;
    }
    out
}

/// ψ ← exp(−i H dt) ψ for H with spectrum inside center ± radius.
fn cheb_step(
    apply: &(dyn Fn(&[C64], &mut [C64]) + Sync),
    psi: &mut [C64],
    dt: f64,
    (center, radius): (f64, f64),
) -> Result<()> {
    let x = radius * dt;
    let mut kmax = (x.abs() + 10.0) as usize;
    let coeffs = loop {
        let j = bessel_j_seq(kmax + 10, x);
        if let Some(k) = (x as usize..j.len()).find(|&k| j[k].abs() < CHEB_TOL && k > x as usize) {
            break j[..=k].to_vec();
        }
        kmax *= 2;
        if kmax > 100_000 {
            return Err(WqedError::StepFailure("Chebyshev series did not converge".into()));
        }
    };
    let n = psi.len();
    let scale = |src: &[C64], dst: &mut [C64]| {
        apply(src, dst);
        dst.par_iter_mut().zip(src.par_iter()).for_each(|(d, s)| *d = (*d - center * s) / radius);
    };
    let mut v0 = psi.to_vec();
    let mut v1 = vec![C64::new(0.0, 0.0); n];
    scale(&v0, &mut v1);
    let mut acc: Vec<C64> = v0.iter().map(|v| coeffs[0] * v).collect();
    let mut ik = -I;
    let c1 = 2.0 * coeffs[1] * ik;
    acc.par_iter_mut().zip(v1.par_iter()).for_each(|(a, v)| *a += c1 * v);
    let mut tmp = vec![C64::new(0.0, 0.0); n];
    for &jk in &coeffs[2..] {
        ik *= -I;
        scale(&v1, &mut tmp);
        let ck = 2.0 * jk * ik;
        tmp.par_iter_mut()
            .zip(v0.par_iter())
            .zip(acc.par_iter_mut())
            .for_each(|((t, v), a)| {
                *t = 2.0 * *t - v;
                *a += ck * *t;
            });
        std::mem::swap(&mut v0, &mut v1);
        std::mem::swap(&mut v1, &mut tmp);
    }
    let ph = C64::from_polar(1.0, -center * dt);
    psi.par_iter_mut().zip(acc.par_iter()).for_each(|(p, a)| *p = ph * a);
    Ok(())
}

fn propagate(
    apply: &(dyn Fn(&[C64], &mut [C64]) + Sync),
    bounds: (f64, f64),
    psi: &mut [C64],
    from: f64,
    to: f64,
) -> Result<()> {
    let span = to - from;
    if span <= 0.0 {
        return Ok(());
    }
    let steps = (span * bounds.1 / CHEB_STEP).ceil().max(1.0) as usize;
    let dt = span / steps as f64;
    for _ in 0..steps {
        cheb_step(apply, psi, dt, bounds)?;
    }
    Ok(())
}

fn norm_sqr(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum()
}

fn inner(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn check_times(model: &DiscretizedModel, times: &[f64]) -> Result<()> {
    if times.iter().any(|t| !t.is_finite() || *t < 0.0) || times.windows(2).any(|w| w[1] < w[0]) {
        return Err(WqedError::param("times", "must be finite, ≥ 0 and ascending"));
    }
    if let Some(&last) = times.last() {
        if last >= model.recurrence_time() {
            return Err(WqedError::Resolution {
                spacing: model.spacing,
                required: 2.0 * PI / last,
            });
        }
    }
    Ok(())
}

/// Populations plus the bookkeeping that makes the run trustworthy.
#[derive(Debug, Clone, Serialize)]
pub struct OracleTrace {
    pub trace: ConcurrenceTrace,
    /// Largest |‖ψ(t)‖² − ‖ψ(0)‖²| over the run.
    pub norm_drift: f64,
    /// Fraction of the initial norm inside the mode window.
    pub captured: f64,
    pub modes: usize,
}

/// Single photon on qubits in the ground state.
pub fn oracle_n1_trace(model: &DiscretizedModel, photon: &WavepacketSpec, times: &[f64]) -> Result<OracleTrace> {
    photon.validate()?;
    check_times(model, times)?;
    let m = model.modes();
    let params = &model.params;
    let mut psi = vec![C64::new(0.0, 0.0); m + 1];
    let mut odd = vec![C64::new(0.0, 0.0); m];
    for (c, comp) in photon_components(params, photon, C64::new(1.0, 0.0)) {
        match comp {
            N1Component::EvenPhoton(p) => {
                for (a, u) in psi.iter_mut().zip(model.pulse_modes(&p)) {
                    *a += c * u;
                }
            }
            N1Component::OddPhoton(p) => {
                for (a, u) in odd.iter_mut().zip(model.pulse_modes(&p)) {
                    *a += c * u;
                }
            }
            _ => {}
        }
    }
    let captured = norm_sqr(&psi) + norm_sqr(&odd);
    check_captured(captured)?;
    let s = 1.0 / captured.sqrt();
    psi.iter_mut().for_each(|v| *v *= s);
    let n0 = norm_sqr(&psi);
    let apply = |x: &[C64], y: &mut [C64]| model.apply_n1(x, y);
    let mut t = 0.0;
    let mut drift: f64 = 0.0;
    let mut pops = Vec::with_capacity(times.len());
    for &target in times {
        propagate(&apply, model.bound_n1(), &mut psi, t, target)?;
        t = target;
        drift = drift.max((norm_sqr(&psi) - n0).abs());
        let rho_plus = psi[m].norm_sqr();
        pops.push(QubitBasisPopulations {
            rho_gs: 1.0 - rho_plus,
            rho_plus,
            rho_minus: 0.0,
            rho_beta: 0.0,
            coh_pm: C64::new(0.0, 0.0),
        });
    }
    Ok(OracleTrace {
        trace: ConcurrenceTrace::from_pops(times.to_vec(), pops),
        norm_drift: drift,
        captured,
        modes: m,
    })
}

fn check_captured(captured: f64) -> Result<()> {
    if captured < MIN_CAPTURED {
        return Err(WqedError::Coverage {
            captured,
            required: MIN_CAPTURED,
        });
    }
    Ok(())
}

/// Mode-space form of each piece of a sector decomposition, normalized together.
struct Discretized {
    /// even-even: pairs, |n,+⟩, |ee⟩
    ee: Vec<C64>,
    /// even-odd: (coefficient, even source as modes + |+⟩, odd photon modes)
    eo: Vec<(C64, Vec<C64>, Vec<C64>)>,
    oo: Vec<(C64, Vec<C64>, Vec<C64>)>,
    even_dark: Vec<C64>,
    odd_dark: Vec<C64>,
    captured: f64,
}

fn discretize(model: &DiscretizedModel, sectors: &Sectors) -> Result<Discretized> {
    let m = model.modes();
    let np = model.pair_count();
    let zero = C64::new(0.0, 0.0);
    let mut ee = vec![zero; model.two_excitation_dim()];
    for (c, a, b) in &sectors.even_even {
        match (a, b) {
            (Source::Photon(p), Source::Photon(q)) => {
                let (u, v) = (model.pulse_modes(p), model.pulse_modes(q));
                let mut i = 0;
                for n in 0..m {
                    for k in n..m {
                        ee[i] += c * (u[n] * v[k] + u[k] * v[n]);
                        i += 1;
                    }
                }
            }
            (Source::Photon(p), Source::Qubit) | (Source::Qubit, Source::Photon(p)) => {
                for (n, u) in model.pulse_modes(p).into_iter().enumerate() {
                    ee[np + n] += c * u;
                }
            }
            (Source::Qubit, Source::Qubit) => {
                return Err(WqedError::Unsupported("doubly excited qubits".into()));
            }
        }
    }
    let eo = sectors
        .even_odd
        .iter()
        .map(|(c, s, q)| {
            let mut even = vec![zero; m + 1];
            match s {
                Source::Photon(p) => even[..m].copy_from_slice(&model.pulse_modes(p)),
                Source::Qubit => even[m] = C64::new(1.0, 0.0),
            }
            (*c, even, model.pulse_modes(q))
        })
        .collect::<Vec<_>>();
    let oo = sectors
        .odd_odd
        .iter()
        .map(|(c, p, q)| (*c, model.pulse_modes(p), model.pulse_modes(q)))
        .collect::<Vec<_>>();
    let dark = |list: &[(C64, Pulse)]| -> Vec<C64> {
        let mut v = vec![zero; m];
        for (c, p) in list {
            for (a, u) in v.iter_mut().zip(model.pulse_modes(p)) {
                *a += c * u;
            }
        }
        v
    };
    let mut d = Discretized {
        ee,
        eo,
        oo,
        even_dark: dark(&sectors.even_dark),
        odd_dark: dark(&sectors.odd_dark),
        captured: 0.0,
    };
    let captured = d.norm_sqr(model);
    check_captured(captured)?;
    let s = 1.0 / captured.sqrt();
    d.ee.iter_mut().for_each(|v| *v *= s);
    for (c, _, _) in d.eo.iter_mut().chain(d.oo.iter_mut()) {
        *c *= s;
    }
    d.even_dark.iter_mut().chain(d.odd_dark.iter_mut()).for_each(|v| *v *= s);
    d.captured = captured;
    Ok(d)
}

impl Discretized {
    fn eo_amp(&self, i: usize) -> Vec<C64> {
        let (c, even, _) = &self.eo[i];
        even.iter().map(|v| c * v).collect()
    }

    fn norm_sqr(&self, model: &DiscretizedModel) -> f64 {
        model.pair_norm_sqr(&self.ee)
            + norm_sqr(&self.ee[model.pair_count()..])
            + eo_norm(&self.eo)
            + oo_norm(&self.oo)
            + norm_sqr(&self.even_dark)
            + norm_sqr(&self.odd_dark)
    }
}

/// Norm of Σ c x ⊗ y with distinguishable factors.
fn eo_norm(list: &[(C64, Vec<C64>, Vec<C64>)]) -> f64 {
    let mut s = C64::new(0.0, 0.0);
    for (ca, xa, ya) in list {
        for (cb, xb, yb) in list {
            s += ca.conj() * cb * inner(xa, xb) * inner(ya, yb);
        }
    }
    s.re
}

/// Norm of Σ c (p ⊗ q + q ⊗ p) with bosonic normalization.
fn oo_norm(list: &[(C64, Vec<C64>, Vec<C64>)]) -> f64 {
    let mut s = C64::new(0.0, 0.0);
    for (ca, pa, qa) in list {
        for (cb, pb, qb) in list {
            s += ca.conj() * cb * (inner(pa, pb) * inner(qa, qb) + inner(pa, qb) * inner(qa, pb));
        }
    }
    s.re
}

/// Evolves every piece; calls `visit` at each requested time with the current state.
fn run_sectors(
    model: &DiscretizedModel,
    d: &mut Discretized,
    times: &[f64],
    mut visit: impl FnMut(f64, &Discretized),
) -> Result<f64> {
    let apply2 = |x: &[C64], y: &mut [C64]| model.apply_n2(x, y);
    let apply1 = |x: &[C64], y: &mut [C64]| model.apply_n1(x, y);
    let n0 = d.norm_sqr(model);
    let mut t = 0.0;
    let mut drift: f64 = 0.0;
    let m = model.modes();
    let d_freqs = &model.mode_freqs;
    for &target in times {
        let dt = target - t;
        if d.ee.iter().any(|v| *v != C64::new(0.0, 0.0)) {
            propagate(&apply2, model.bound_n2(), &mut d.ee, t, target)?;
        }
        for (_, even, odd) in d.eo.iter_mut() {
            propagate(&apply1, model.bound_n1(), even, t, target)?;
            for (v, f) in odd.iter_mut().zip(d_freqs) {
                *v *= C64::from_polar(1.0, -f * dt);
            }
        }
        for (_, p, q) in d.oo.iter_mut() {
            for n in 0..m {
                let ph = C64::from_polar(1.0, -d_freqs[n] * dt);
                p[n] *= ph;
                q[n] *= ph;
            }
        }
        for v in [&mut d.even_dark, &mut d.odd_dark] {
            for (a, f) in v.iter_mut().zip(d_freqs) {
                *a *= C64::from_polar(1.0, -f * dt);
            }
        }
        t = target;
        drift = drift.max((d.norm_sqr(model) - n0).abs());
        visit(t, d);
    }
    Ok(drift)
}

fn populations(model: &DiscretizedModel, d: &Discretized) -> QubitBasisPopulations {
    let m = model.modes();
    let np = model.pair_count();
    let rho_beta = d.ee[np + m].norm_sqr();
    let mut rho_plus = norm_sqr(&d.ee[np..np + m]);
    let plus_eo: Vec<(C64, &Vec<C64>)> = d
        .eo
        .iter()
        .enumerate()
        .map(|(i, (_, _, odd))| (d.eo_amp(i)[m], odd))
        .collect();
    for (a, oa) in &plus_eo {
        for (b, ob) in &plus_eo {
            rho_plus += (a.conj() * b * inner(oa, ob)).re;
        }
    }
    let rho_minus = norm_sqr(&d.even_dark) + norm_sqr(&d.odd_dark);
    let mut coh = inner(&d.even_dark, &d.ee[np..np + m]);
    for (b, ob) in &plus_eo {
        coh += b * inner(&d.odd_dark, ob);
    }
    QubitBasisPopulations {
        rho_gs: 1.0 - rho_plus - rho_minus - rho_beta,
        rho_plus,
        rho_minus,
        rho_beta,
        coh_pm: coh,
    }
}

/// Populations of a two-excitation state at the requested (ascending) times.
pub fn oracle_evolve(model: &DiscretizedModel, sectors: &Sectors, times: &[f64]) -> Result<OracleTrace> {
    check_times(model, times)?;
    let mut d = discretize(model, sectors)?;
    let mut pops = Vec::with_capacity(times.len());
    let drift = run_sectors(model, &mut d, times, |_, d| pops.push(populations(model, d)))?;
    Ok(OracleTrace {
        trace: ConcurrenceTrace::from_pops(times.to_vec(), pops),
        norm_drift: drift,
        captured: d.captured,
        modes: model.modes(),
    })
}

/// P_RR, P_RL and P_LL from the mode amplitudes at `t_end`.
pub fn oracle_two_photon_probabilities(
    model: &DiscretizedModel,
    sectors: &Sectors,
    t_end: f64,
) -> Result<TwoPhotonProbabilities> {
    check_times(model, &[t_end])?;
    let mut d = discretize(model, sectors)?;
    run_sectors(model, &mut d, &[t_end], |_, _| {})?;
    let m = model.modes();
    let eo: Vec<(Vec<C64>, &Vec<C64>)> = d
        .eo
        .iter()
        .enumerate()
        .map(|(i, (_, _, odd))| (d.eo_amp(i), odd))
        .collect();
    let ee = &d.ee;
    let rows: Vec<[f64; 3]> = (0..m)
        .into_par_iter()
        .map(|n| {
            let mut acc = [0.0; 3];
            for k in 0..m {
                let a = ee[model.pair_index(n, k)];
                let e_nk: C64 = eo.iter().map(|(e, o)| e[n] * o[k]).sum();
                let e_kn: C64 = eo.iter().map(|(e, o)| e[k] * o[n]).sum();
                let oo: C64 = d.oo.iter().map(|(c, p, q)| c * (p[n] * q[k] + q[n] * p[k])).sum();
                let rr = 0.5 * (a + e_nk + e_kn + oo);
                let ll = 0.5 * (a - e_nk - e_kn + oo);
                let rl = 0.5 * (a - e_nk + e_kn - oo);
                acc[0] += 0.5 * rr.norm_sqr();
                acc[1] += rl.norm_sqr();
                acc[2] += 0.5 * ll.norm_sqr();
            }
            acc
        })
        .collect();
    let mut tot = [0.0; 3];
    for r in rows {
        for k in 0..3 {
            tot[k] += r[k];
        }
    }
    Ok(TwoPhotonProbabilities {
        p_rr: tot[0],
        p_rl: tot[1],
        p_ll: tot[2],
        t_end,
    })
}
