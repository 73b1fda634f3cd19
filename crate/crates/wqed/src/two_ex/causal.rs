//! Exact time evolution of the sector pieces, evaluated in passage-time coordinates.
//!
//! A photon that passes the qubits at time s is labelled by s; incoming photons
//! (s > t) are simply the initial pulses, outgoing ones (s ≤ t) carry the
//! scattered amplitude. For the even-even piece with sources (1, 2):
//!
//! * β(t) = ∫₀ᵗ e^{−γ(t−s)/2} (−i√γ) D(s) ds, with D = w₁e₂ + w₂e₁ the amplitude of
//!   one incoming photon at the qubits while the other excitation sits in |+⟩
//! * α_t(s > t) = w₁(s) e₂(t) + w₂(s) e₁(t)
//! * α_t(s ≤ t) = e^{−γ(t−s)/2} α_s(0⁺) + o₁(s) E₂(s,t) + o₂(s) E₁(s,t),
//!   α_s(0⁺) = D(s) − i√γ β(s), E_j(s,t) = e_j(t) − e^{−γ(t−s)/2} e_j(s)
//!
//! where w_j, e_j and o_j = w_j − i√γ e_j are the incoming flux, the σ_e amplitude
//! and the outgoing flux of source j evolving alone. These follow from the same
//! jump conditions that define the eigenstates, integrated along characteristics.

use crate::model::{PhysicalParams, QubitBasisPopulations, C64, I};
use crate::quadrature::{gauss_legendre, panel_rule, panels, Rule};
use crate::single_ex::pulse_qubit_amplitude;

use super::state::{Sectors, Source};

const BETA_ORDER: usize = 16;
const RHO_ORDER: usize = 12;

/// (w, e, o) of one source at time t.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct Vals {
    pub w: C64,
    pub e: C64,
    pub o: C64,
}

pub(crate) fn source_vals(params: &PhysicalParams, s: &Source, t: f64) -> Vals {
    let sg = params.gamma.sqrt();
    match s {
        Source::Photon(p) => {
            let w = p.flux(t);
            let e = pulse_qubit_amplitude(params, p, t);
            Vals { w, e, o: w - I * sg * e }
        }
        Source::Qubit => {
            let e = C64::new((-params.half_gamma() * t.max(0.0)).exp(), 0.0);
            Vals {
                w: C64::new(0.0, 0.0),
                e,
                o: -I * sg * e,
            }
        }
    }
}

/// Everything the even-even amplitudes need at one time.
#[derive(Debug, Clone)]
pub(crate) struct Point {
    pub t: f64,
    pub v1: Vec<Vals>,
    pub v2: Vec<Vals>,
    pub alpha0p: C64,
}

/// Time evolution of the interacting even-even piece.
#[derive(Debug, Clone)]
pub struct EvenEvenEvolution {
    params: PhysicalParams,
    terms: Vec<(C64, Source, Source)>,
    arrivals: Vec<f64>,
    max_step: f64,
    breaks: Vec<f64>,
    beta_breaks: Vec<C64>,
    gl: (Vec<f64>, Vec<f64>),
}

/// Largest panel width that keeps every exponential well resolved.
pub(crate) fn max_step(params: &PhysicalParams, pulses: impl Iterator<Item = (f64, f64)>) -> f64 {
    let mut rate = params.half_gamma();
    for (mu, d) in pulses {
        rate = rate.max(mu + d.abs()).max(params.half_gamma() + d.abs());
    }
    if rate > 0.0 {
        0.5 / rate
    } else {
        f64::INFINITY
    }
}

impl EvenEvenEvolution {
    /// Precomputes β on panel boundaries up to `horizon`.
    pub fn new(params: &PhysicalParams, terms: &[(C64, Source, Source)], horizon: f64) -> Self {
        let mut arrivals = Vec::new();
        let mut rates = Vec::new();
        for (_, a, b) in terms {
            for s in [a, b] {
                if let Source::Photon(p) = s {
                    arrivals.push(p.arrival);
                    rates.push((p.mu, p.detuning));
                }
            }
        }
        arrivals.sort_by(f64::total_cmp);
        arrivals.dedup();
        let h = max_step(params, rates.into_iter());
        let mut ev = EvenEvenEvolution {
            params: *params,
            terms: terms.to_vec(),
            arrivals,
            max_step: h,
            breaks: vec![0.0],
            beta_breaks: vec![C64::new(0.0, 0.0)],
            gl: gauss_legendre(BETA_ORDER),
        };
        if !terms.is_empty() && horizon > 0.0 {
            let mut br: Vec<f64> = vec![0.0, horizon];
            br.extend(ev.arrivals.iter().copied().filter(|a| *a > 0.0 && *a < horizon));
            let pans = panels(&br, h.min(horizon));
            let mut beta = C64::new(0.0, 0.0);
            for (a, b) in pans {
                beta = ev.beta_step(a, beta, b);
                ev.breaks.push(b);
                ev.beta_breaks.push(beta);
            }
        }
        ev
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn params(&self) -> &PhysicalParams {
        &self.params
    }

    pub fn arrivals(&self) -> &[f64] {
        &self.arrivals
    }

    pub fn max_step(&self) -> f64 {
        self.max_step
    }

    /// Incoming amplitude D(t) at the qubits with the other excitation in |+⟩.
    pub fn drive(&self, t: f64) -> C64 {
        self.terms
            .iter()
            .map(|(c, a, b)| {
                let va = source_vals(&self.params, a, t);
                let vb = source_vals(&self.params, b, t);
                c * (va.w * vb.e + vb.w * va.e)
            })
            .sum()
    }

    /// One smooth step: β(b) from β(a); no arrival may lie strictly inside (a, b).
    fn beta_step(&self, a: f64, beta_a: C64, b: f64) -> C64 {
        if b <= a {
            return beta_a;
        }
        let g = self.params.half_gamma();
        let sg = self.params.gamma.sqrt();
        let half = 0.5 * (b - a);
        let mid = 0.5 * (b + a);
        let (x, w) = &self.gl;
        let mut acc = C64::new(0.0, 0.0);
        for (xi, wi) in x.iter().zip(w) {
            let s = mid + half * xi;
            acc += wi * (-g * (b - s)).exp() * self.drive(s);
        }
        (-g * (b - a)).exp() * beta_a - I * sg * half * acc
    }

    /// Doubly excited amplitude ⟨e₁e₂|Ψ(t)⟩ of this piece.
    pub fn beta(&self, t: f64) -> C64 {
        if t <= 0.0 || self.terms.is_empty() {
            return C64::new(0.0, 0.0);
        }
        let k = self.breaks.partition_point(|b| *b <= t) - 1;
        let (s0, b0) = (self.breaks[k], self.beta_breaks[k]);
        if t == s0 {
            return b0;
        }
        let mut br = vec![s0, t];
        br.extend(self.arrivals.iter().copied().filter(|a| *a > s0 && *a < t));
        let mut beta = b0;
        for (a, b) in panels(&br, self.max_step) {
            beta = self.beta_step(a, beta, b);
        }
        beta
    }

    pub(crate) fn point(&self, t: f64) -> Point {
        let mut v1 = Vec::with_capacity(self.terms.len());
        let mut v2 = Vec::with_capacity(self.terms.len());
        let mut d = C64::new(0.0, 0.0);
        for (c, a, b) in &self.terms {
            let va = source_vals(&self.params, a, t);
            let vb = source_vals(&self.params, b, t);
            d += c * (va.w * vb.e + vb.w * va.e);
            v1.push(va);
            v2.push(vb);
        }
        let alpha0p = d - I * self.params.gamma.sqrt() * self.beta(t);
        Point { t, v1, v2, alpha0p }
    }

    /// α_t at passage time s ≤ t (photon already outgoing).
    pub(crate) fn alpha_out(&self, at_s: &Point, at_t: &Point) -> C64 {
        let dec = (-self.params.half_gamma() * (at_t.t - at_s.t)).exp();
        let mut a = dec * at_s.alpha0p;
        for (i, (c, _, _)) in self.terms.iter().enumerate() {
            let e1 = at_t.v1[i].e - dec * at_s.v1[i].e;
            let e2 = at_t.v2[i].e - dec * at_s.v2[i].e;
            a += c * (at_s.v1[i].o * e2 + at_s.v2[i].o * e1);
        }
        a
    }

    /// Amplitude of one incoming photon at passage time s > t, other excitation in |+⟩:
    /// a list of (coefficient, pulse) whose flux sum gives α_t(s).
    pub(crate) fn alpha_incoming(&self, at_t: &Point) -> Vec<(C64, crate::model::Pulse)> {
        let mut out = Vec::new();
        for (i, (c, a, b)) in self.terms.iter().enumerate() {
            if let Source::Photon(p) = a {
                out.push((c * at_t.v2[i].e, *p));
            }
            if let Source::Photon(p) = b {
                out.push((c * at_t.v1[i].e, *p));
            }
        }
        out
    }

    /// Two-photon amplitude ⟨0|c_e(s₁) c_e(s₂)|Ψ⟩ with both photons outgoing, s₁ ≤ s₂.
    pub(crate) fn two_photon(&self, p1: &Point, p2: &Point) -> C64 {
        let sg = self.params.gamma.sqrt();
        let dec = (-self.params.half_gamma() * (p2.t - p1.t)).exp();
        let mut a = -I * sg * dec * p1.alpha0p;
        for (i, (c, _, _)) in self.terms.iter().enumerate() {
            let (a1, b1) = (&p1.v1[i], &p1.v2[i]);
            let (a2, b2) = (&p2.v1[i], &p2.v2[i]);
            let e1 = a2.e - dec * a1.e;
            let e2 = b2.e - dec * b1.e;
            a += c * (a1.o * b2.w + b1.o * a2.w - I * sg * (a1.o * e2 + b1.o * e1));
        }
        a
    }

    /// Rule on [0, t] with panels split at arrivals.
    pub(crate) fn rule_until(&self, t: f64, order: usize) -> Rule {
        let mut br = vec![0.0, t];
        br.extend(self.arrivals.iter().copied().filter(|a| *a > 0.0 && *a < t));
        panel_rule(&panels(&br, self.max_step), order)
    }
}

/// Time evolution of all five pieces of a normalized initial state.
#[derive(Debug, Clone)]
pub struct SectorEvolution {
    pub sectors: Sectors,
    pub ee: EvenEvenEvolution,
    params: PhysicalParams,
}

impl SectorEvolution {
    pub fn new(params: &PhysicalParams, sectors: &Sectors, horizon: f64) -> Self {
        SectorEvolution {
            sectors: sectors.clone(),
            ee: EvenEvenEvolution::new(params, &sectors.even_even, horizon),
            params: *params,
        }
    }

    pub fn params(&self) -> &PhysicalParams {
        &self.params
    }

    /// σ_e amplitudes of the even-odd piece: (coefficient × e(t), odd pulse).
    fn even_odd_qubit(&self, t: f64) -> Vec<(C64, crate::model::Pulse)> {
        self.sectors
            .even_odd
            .iter()
            .map(|(c, s, q)| (c * source_vals(&self.params, s, t).e, *q))
            .collect()
    }

    /// Populations and the (+, −) coherence at time t.
    pub fn populations(&self, t: f64) -> QubitBasisPopulations {
        let sectors = &self.sectors;
        let t = t.max(0.0);
        let beta = self.ee.beta(t);

        // odd photon with |+⟩
        let eo = self.even_odd_qubit(t);
        let mut rho_plus_eo = C64::new(0.0, 0.0);
        for (ca, pa) in &eo {
            for (cb, pb) in &eo {
                rho_plus_eo += ca.conj() * cb * pa.overlap(pb);
            }
        }
        let mut coh = C64::new(0.0, 0.0);
        for (cd, pd) in &sectors.odd_dark {
            for (cb, pb) in &eo {
                coh += cd.conj() * cb * pd.overlap(pb);
            }
        }

        // even photon with |+⟩: incoming tail plus outgoing part
        let mut rho_plus_ee = 0.0;
        if !self.ee.is_empty() {
            let at_t = self.ee.point(t);
            let inc = self.ee.alpha_incoming(&at_t);
            let mut tail = C64::new(0.0, 0.0);
            for (ca, pa) in &inc {
                for (cb, pb) in &inc {
                    tail += ca.conj() * cb * pa.tail_overlap(pb, t);
                }
                for (cd, pd) in &sectors.even_dark {
                    coh += cd.conj() * ca * pd.tail_overlap(pa, t);
                }
            }
            rho_plus_ee += tail.re;
            if t > 0.0 {
                let rule = self.ee.rule_until(t, RHO_ORDER);
                for (s, w) in rule.nodes.iter().zip(&rule.weights) {
                    let at_s = self.ee.point(*s);
                    let a = self.ee.alpha_out(&at_s, &at_t);
                    rho_plus_ee += w * a.norm_sqr();
                    if !sectors.even_dark.is_empty() {
                        let dark: C64 = sectors.even_dark.iter().map(|(c, p)| c * p.flux(*s)).sum();
                        coh += w * dark.conj() * a;
                    }
                }
            }
        }

        let rho_plus = rho_plus_ee + rho_plus_eo.re;
        let rho_minus = sectors.dark_norm();
        let rho_beta = beta.norm_sqr();
        QubitBasisPopulations {
            rho_gs: 1.0 - rho_plus - rho_minus - rho_beta,
            rho_plus,
            rho_minus,
            rho_beta,
            coh_pm: coh,
        }
    }

    /// Total two-photon probability at time t, integrated over incoming and outgoing
    /// photons independently of the populations (unitarity check).
    pub fn two_photon_weight(&self, t: f64) -> f64 {
        two_photon_weight(self, t)
    }
}

fn two_photon_weight(ev: &SectorEvolution, t: f64) -> f64 {
    let params = ev.params;
    let sectors = &ev.sectors;
    let ee = &ev.ee;
    let step = max_step(&params, sectors.pulses().map(|p| (p.mu, p.detuning)));
    let mut last = t;
    let mut slow = f64::INFINITY;
    for p in sectors.pulses() {
        last = last.max(p.arrival);
        slow = slow.min(p.mu);
    }
    // incoming photons live on (t, end], with end past every pulse tail
    let end = last + 40.0 / slow.max(1e-300);
    let split = |lo: f64, hi: f64| {
        let mut br = vec![lo, hi];
        br.extend(sectors.pulses().map(|p| p.arrival).filter(|a| *a > lo && *a < hi));
        panels(&br, step)
    };
    let pans_in = split(t, end);
    let rule_in = panel_rule(&pans_in, RHO_ORDER);
    let pans_out = if t > 0.0 { split(0.0, t) } else { Vec::new() };
    let rule_out = panel_rule(&pans_out, RHO_ORDER);

    let mut total = sectors.norms()[2];

    // even-odd: the odd photon is free, the even one is incoming (w) or outgoing (o)
    for (rule, incoming) in [(&rule_out, false), (&rule_in, true)] {
        for (s, w) in rule.nodes.iter().zip(&rule.weights) {
            let amps: Vec<C64> = sectors
                .even_odd
                .iter()
                .map(|(c, src, _)| {
                    let v = source_vals(&params, src, *s);
                    c * if incoming { v.w } else { v.o }
                })
                .collect();
            for (i, (_, _, qi)) in sectors.even_odd.iter().enumerate() {
                for (j, (_, _, qj)) in sectors.even_odd.iter().enumerate() {
                    total += w * (amps[i].conj() * amps[j] * qi.overlap(qj)).re;
                }
            }
        }
    }

    if ee.is_empty() {
        return total;
    }
    // both outgoing
    let [both_out] = crate::quadrature::triangle_sum(&pans_out, RHO_ORDER, |s| ee.point(s), |a, b| {
        [ee.two_photon(a, b).norm_sqr()]
    });
    total += both_out;
    // one outgoing at s₁ ≤ t, one incoming at s₂ > t
    let incoming_w = |s: f64| -> Vec<(C64, C64)> {
        ee.terms
            .iter()
            .map(|(_, x, y)| (source_vals(&params, x, s).w, source_vals(&params, y, s).w))
            .collect()
    };
    let inc: Vec<Vec<(C64, C64)>> = rule_in.nodes.iter().map(|s| incoming_w(*s)).collect();
    for (s1, w1) in rule_out.nodes.iter().zip(&rule_out.weights) {
        let p1 = ee.point(*s1);
        for (j, w2) in rule_in.weights.iter().enumerate() {
            let mut a = C64::new(0.0, 0.0);
            for (k, (c, _, _)) in ee.terms.iter().enumerate() {
                a += c * (p1.v1[k].o * inc[j][k].1 + p1.v2[k].o * inc[j][k].0);
            }
            total += w1 * w2 * a.norm_sqr();
        }
    }
    // both incoming, symmetric amplitude over the full square with weight 1/2
    for (i, wi) in rule_in.weights.iter().enumerate() {
        for (j, wj) in rule_in.weights.iter().enumerate() {
            let mut a = C64::new(0.0, 0.0);
            for (k, (c, _, _)) in ee.terms.iter().enumerate() {
                a += c * (inc[i][k].0 * inc[j][k].1 + inc[i][k].1 * inc[j][k].0);
            }
            total += 0.5 * wi * wj * a.norm_sqr();
        }
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Pulse, WavepacketSpec};
    use crate::two_ex::InitialStateN2;

    fn params() -> PhysicalParams {
        PhysicalParams::natural(0.01).unwrap()
    }

    #[test]
    fn beta_matches_rk4() {
        // two resonant even photons, ODE for β with the known drive
        let p = params();
        let f = Pulse { mu: 0.005, detuning: 0.0, arrival: 0.0 };
        let g = Pulse { mu: 0.005, detuning: 0.001, arrival: 150.0 };
        let terms = vec![(C64::new(0.5, 0.0), Source::Photon(f), Source::Photon(g))];
        let ev = EvenEvenEvolution::new(&p, &terms, 2000.0);
        let dt = 0.05;
        let mut b = C64::new(0.0, 0.0);
        let mut t = 0.0;
        let rhs = |t: f64, b: C64| -0.005 * b - I * 0.1 * ev.drive(t);
        while t < 1000.0 - 1e-9 {
            // split the step at the second arrival
            let k1 = rhs(t, b);
            let k2 = rhs(t + dt / 2.0, b + k1 * (dt / 2.0));
            let k3 = rhs(t + dt / 2.0, b + k2 * (dt / 2.0));
            let k4 = rhs(t + dt, b + k3 * dt);
            b += (k1 + 2.0 * k2 + 2.0 * k3 + k4) * (dt / 6.0);
            t += dt;
        }
        assert!((b - ev.beta(1000.0)).norm() < 1e-6, "{b} {}", ev.beta(1000.0));
        // β between cached breaks agrees with the cache
        assert!((ev.beta(777.7) - ev.beta(777.7)).norm() == 0.0);
    }

    #[test]
    fn populations_sum_and_unitarity() {
        let p = params();
        let st = InitialStateN2::TwoPhotons {
            a: WavepacketSpec::rightward(0.005, 1.0, 0.0),
            b: WavepacketSpec::leftward(0.005, 1.0, 80.0),
        };
        let s = st.sectors(&p).unwrap();
        let ev = SectorEvolution::new(&p, &s, 3000.0);
        for t in [0.0, 60.0, 150.0, 400.0] {
            let pops = ev.populations(t);
            assert!((pops.sum() - 1.0).abs() < 1e-12);
            let two = ev.two_photon_weight(t);
            let direct = 1.0 - pops.rho_plus - pops.rho_beta - pops.rho_minus;
            assert!((two - direct).abs() < 1e-8, "t={t}: {two} vs {direct}");
        }
    }

    #[test]
    fn simultaneous_photons_never_entangle() {
        let p = params();
        let st = InitialStateN2::TwoPhotons {
            a: WavepacketSpec::rightward(0.005, 1.0, 0.0),
            b: WavepacketSpec::leftward(0.005, 1.0, 0.0),
        };
        let s = st.sectors(&p).unwrap();
        let ev = SectorEvolution::new(&p, &s, 3000.0);
        for t in [50.0, 200.0, 500.0, 1500.0] {
            let pops = ev.populations(t);
            let c = crate::model::x_state_concurrence(&pops).unwrap();
            assert!(c < 1e-9, "t={t}: {pops:?}");
        }
    }

    #[test]
    fn detection_state_populations() {
        let p = params();
        let xi = C64::new(0.4, 0.0);
        let st = InitialStateN2::PhotonOnQubits {
            photon: WavepacketSpec::rightward(0.003, 1.0, 0.1),
            xi,
        };
        let s = st.sectors(&p).unwrap();
        let ev = SectorEvolution::new(&p, &s, 5000.0);
        let expect = (1.0 - xi).norm_sqr() / (2.0 * (1.0 + xi.norm_sqr()));
        for t in [0.0, 100.0, 900.0] {
            let pops = ev.populations(t);
            assert!((pops.rho_minus - expect).abs() < 1e-12);
        }
        // at t = 0 the qubits hold the whole excitation with coherence (1+ξ)(1−ξ)*/2(1+|ξ|²)
        let p0 = ev.populations(0.0);
        let coh = (1.0 + xi) * (1.0 - xi).conj() / (2.0 * (1.0 + xi.norm_sqr()));
        assert!((p0.coh_pm - coh).norm() < 1e-10, "{} {}", p0.coh_pm, coh);
        assert!((p0.rho_plus - (1.0 + xi).norm_sqr() / (2.0 * (1.0 + xi.norm_sqr()))).abs() < 1e-10);
    }
}
