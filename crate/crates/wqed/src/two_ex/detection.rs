//! Two-photon detection after all photons have left the qubits.
//!
//! Outgoing photons are labelled by the time they passed the qubits. With the
//! even-even amplitude A, the even-odd amplitude eo(s_e, s_o) and the odd-odd
//! amplitude oo, the amplitudes for the detected directions at τ₁ < τ₂ are
//!
//! * RR = (A + eo(τ₁,τ₂) + eo(τ₂,τ₁) + oo)/2, LL = (A − eo(τ₁,τ₂) − eo(τ₂,τ₁) + oo)/2
//! * R at τ₁, L at τ₂: (A − eo(τ₁,τ₂) + eo(τ₂,τ₁) − oo)/2, and the mirror with signs swapped.

use serde::Serialize;

use crate::error::{Result, WqedError};
use crate::model::{xi_concurrence, PhysicalParams, WavepacketSpec, C64};
use crate::quadrature::{panels, triangle_sum};

use super::causal::{max_step, source_vals, Point, SectorEvolution};
use super::state::{InitialStateN2, Sectors};

/// Default γ x₀ / v_g of the detection photon: the front sits at the qubits.
pub const DEFAULT_DETECTION_FRONT: f64 = 1e-3;

/// Relative change of P_RR between T and 2T that still counts as converged.
pub const DETECTION_CONVERGENCE: f64 = 1e-3;

const ORDER: usize = 12;

/// Outer panels are this many causal steps wide; the integrand only holds
/// smooth decays at this point.
const PANEL_FACTOR: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TwoPhotonProbabilities {
    pub p_rr: f64,
    pub p_rl: f64,
    pub p_ll: f64,
    pub t_end: f64,
}

impl TwoPhotonProbabilities {
    pub fn total(&self) -> f64 {
        self.p_rr + self.p_rl + self.p_ll
    }
}

struct DPoint {
    ee: Option<Point>,
    even: Vec<C64>,
    odd: Vec<C64>,
    oo: Vec<(C64, C64)>,
}

/// Integration end: last arrival plus max(20/γ, 10/(2μ)) for the narrowest pulse.
pub fn default_t_end(params: &PhysicalParams, sectors: &Sectors) -> f64 {
    let mut last: f64 = 0.0;
    let mut slow = f64::INFINITY;
    for p in sectors.pulses() {
        last = last.max(p.arrival);
        slow = slow.min(p.mu);
    }
    let mut wait = if params.gamma > 0.0 { 20.0 / params.gamma } else { 0.0 };
    if slow.is_finite() {
        wait = wait.max(10.0 / (2.0 * slow));
    }
    last + wait
}

/// P_RR, P_RL and P_LL with both photons detected before `t_end`.
pub fn two_photon_probabilities(ev: &SectorEvolution, t_end: f64) -> TwoPhotonProbabilities {
    let step = max_step(ev.params(), ev.sectors.pulses().map(|p| (p.mu, p.detuning)));
    probabilities_with_step(ev, t_end, PANEL_FACTOR * step)
}

fn probabilities_with_step(ev: &SectorEvolution, t_end: f64, step: f64) -> TwoPhotonProbabilities {
    let params = *ev.params();
    let sectors = &ev.sectors;
    let mut br = vec![0.0, t_end];
    br.extend(sectors.pulses().map(|p| p.arrival).filter(|a| *a > 0.0 && *a < t_end));
    let pans = panels(&br, step);
    let make = |s: f64| DPoint {
        ee: (!ev.ee.is_empty()).then(|| ev.ee.point(s)),
        even: sectors
            .even_odd
            .iter()
            .map(|(c, src, _)| c * source_vals(&params, src, s).o)
            .collect(),
        odd: sectors.even_odd.iter().map(|(_, _, q)| q.flux(s)).collect(),
        oo: sectors.odd_odd.iter().map(|(_, p, q)| (p.flux(s), q.flux(s))).collect(),
    };
    let eo = |a: &DPoint, b: &DPoint| -> C64 { a.even.iter().zip(&b.odd).map(|(x, y)| x * y).sum() };
    let [rr, rl, ll] = triangle_sum(&pans, ORDER, make, |p1, p2| {
        let a = match (&p1.ee, &p2.ee) {
            (Some(x), Some(y)) => ev.ee.two_photon(x, y),
            _ => C64::new(0.0, 0.0),
        };
        let e12 = eo(p1, p2);
        let e21 = eo(p2, p1);
        let oo: C64 = sectors
            .odd_odd
            .iter()
            .zip(p1.oo.iter().zip(&p2.oo))
            .map(|((c, _, _), (x, y))| c * (x.0 * y.1 + x.1 * y.0))
            .sum();
        let rr = 0.5 * (a + e12 + e21 + oo);
        let ll = 0.5 * (a - e12 - e21 + oo);
        let rl = 0.5 * (a - e12 + e21 - oo);
        let lr = 0.5 * (a + e12 - e21 - oo);
        [rr.norm_sqr(), rl.norm_sqr() + lr.norm_sqr(), ll.norm_sqr()]
    });
    TwoPhotonProbabilities {
        p_rr: rr,
        p_rl: rl,
        p_ll: ll,
        t_end,
    }
}

/// P_RR at the default end time, checked against doubling it.
pub fn two_photon_rr_probability(params: &PhysicalParams, sectors: &Sectors) -> Result<f64> {
    let t_end = default_t_end(params, sectors);
    let ev = SectorEvolution::new(params, sectors, 2.0 * t_end);
    let p1 = two_photon_probabilities(&ev, t_end).p_rr;
    let p2 = two_photon_probabilities(&ev, 2.0 * t_end).p_rr;
    let scale = p2.abs().max(1e-12);
    if (p1 - p2).abs() > DETECTION_CONVERGENCE * scale {
        return Err(WqedError::Convergence(format!(
            "P_RR changed from {p1} to {p2} when doubling the end time {t_end}"
        )));
    }
    Ok(p2)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DetectionRow {
    #[serde(skip)]
    pub xi: C64,
    pub xi_re: f64,
    pub xi_im: f64,
    pub p_rr: f64,
    /// P_RR(ξ) / P_RR(ξ = 0)
    pub ratio: f64,
    /// 2 Re ξ / (1 + |ξ|²)
    pub bound: f64,
    pub concurrence: f64,
}

impl DetectionRow {
    /// |ratio − 1 − bound|.
    pub fn residual(&self) -> f64 {
        (self.ratio - 1.0 - self.bound).abs()
    }
}

/// P_RR for a rightward photon hitting qubits prepared with ξ, normalized by ξ = 0.
pub fn detection_ratio(params: &PhysicalParams, photon: &WavepacketSpec, xis: &[C64]) -> Result<Vec<DetectionRow>> {
    params.validate()?;
    photon.validate()?;
    let front = params.gamma * photon.front / params.v_g;
    if front > DEFAULT_DETECTION_FRONT * (1.0 + 1e-9) {
        return Err(WqedError::Precondition(format!(
            "detection needs the photon front at the qubits (γx₀/v_g = {front} > {DEFAULT_DETECTION_FRONT})"
        )));
    }
    let p_rr = |xi: C64| -> Result<f64> {
        let sectors = InitialStateN2::PhotonOnQubits { photon: *photon, xi }.sectors(params)?;
        two_photon_rr_probability(params, &sectors)
    };
    let p0 = p_rr(C64::new(0.0, 0.0))?;
    if p0 < 1e-12 {
        return Err(WqedError::Precondition(format!(
            "P_RR at ξ = 0 is {p0}, too small to normalize by"
        )));
    }
    xis.iter()
        .map(|&xi| {
            let p = if xi == C64::new(0.0, 0.0) { p0 } else { p_rr(xi)? };
            Ok(DetectionRow {
                xi,
                xi_re: xi.re,
                xi_im: xi.im,
                p_rr: p,
                ratio: p / p0,
                bound: 2.0 * xi.re / (1.0 + xi.norm_sqr()),
                concurrence: xi_concurrence(xi),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> PhysicalParams {
        PhysicalParams::natural(0.01).unwrap()
    }

    #[test]
    fn probabilities_add_to_one() {
        let p = params();
        let st = InitialStateN2::TwoPhotons {
            a: WavepacketSpec::rightward(0.005, 1.0, 0.0),
            b: WavepacketSpec::leftward(0.005, 1.0, 100.0),
        };
        let s = st.sectors(&p).unwrap();
        let t = default_t_end(&p, &s);
        let ev = SectorEvolution::new(&p, &s, t);
        let pr = two_photon_probabilities(&ev, t);
        assert!((pr.total() - 1.0).abs() < 1e-6, "{pr:?}");
    }

    #[test]
    fn wide_panels_match_fine_panels() {
        let p = params();
        let photon = WavepacketSpec::rightward(0.02, 1.0, 0.0);
        let s = InitialStateN2::PhotonOnQubits { photon, xi: C64::new(0.3, 0.4) }
            .sectors(&p)
            .unwrap();
        let t = default_t_end(&p, &s);
        let ev = SectorEvolution::new(&p, &s, t);
        let step = max_step(&p, s.pulses().map(|q| (q.mu, q.detuning)));
        let wide = two_photon_probabilities(&ev, t);
        let fine = probabilities_with_step(&ev, t, 0.5 * step);
        assert!((wide.p_rr - fine.p_rr).abs() < 1e-9, "{wide:?} {fine:?}");
        assert!((wide.p_rl - fine.p_rl).abs() < 1e-9, "{wide:?} {fine:?}");
    }

    #[test]
    fn free_photons_keep_their_directions() {
        let p = PhysicalParams::natural(0.0).unwrap();
        let st = InitialStateN2::TwoPhotons {
            a: WavepacketSpec::rightward(0.005, 1.0, 0.0),
            b: WavepacketSpec::leftward(0.005, 1.0, 0.0),
        };
        let s = st.sectors(&p).unwrap();
        let ev = SectorEvolution::new(&p, &s, 3000.0);
        let pr = two_photon_probabilities(&ev, 3000.0);
        assert!((pr.p_rl - 1.0).abs() < 1e-9, "{pr:?}");
    }

    #[test]
    fn ratio_follows_superposition_phase() {
        let p = params();
        let mu = 3.0 * 0.01;
        let photon = WavepacketSpec::rightward(mu, 1.0, 0.0);
        let xis = [C64::new(1.0, 0.0), C64::new(-0.5, 0.0), C64::new(0.0, 1.0)];
        let rows = detection_ratio(&p, &photon, &xis).unwrap();
        for r in rows {
            assert!(r.residual() < 1e-3, "{r:?}");
        }
    }

    #[test]
    fn front_far_from_qubits_rejected() {
        let p = params();
        let photon = WavepacketSpec::rightward(0.005, 1.0, 10.0);
        assert!(matches!(
            detection_ratio(&p, &photon, &[C64::new(1.0, 0.0)]),
            Err(WqedError::Precondition(_))
        ));
    }
}
