//! One excitation in the even sector: scattering eigenstates, projection of a
//! single-photon pulse and the qubit response that drives entanglement generation.
//!
//! Time evolution is evaluated in closed form. Driving the even qubit mode
//! σ_e = (σ₁+σ₂)/√2 with an incoming flux w(t) gives
//! ė = −(γ/2) e − i√γ w(t), which for an exponential pulse integrates exactly.

use rayon::prelude::*;

use crate::error::{Result, WqedError};
use crate::model::{PhysicalParams, Pulse, WavepacketSpec, C64, I};
use crate::quadrature::TangentGrid;
use crate::two_ex::{cpm, ConcurrenceTrace, PmSign};

/// Required share of the norm captured by a momentum grid.
pub const COVERAGE_TOLERANCE: f64 = 1e-6;

pub fn n1_transmission(params: &PhysicalParams, k: f64) -> C64 {
    cpm(params, k, PmSign::Minus) / cpm(params, k, PmSign::Plus)
}

/// σ_e amplitude of the even eigenstate whose photon part is
/// e^{ikx}[θ(−x) + t_k θ(x)].
pub fn n1_eigenstate_qubit_amplitude(params: &PhysicalParams, k: f64) -> C64 {
    params.coupling() / C64::new(params.v_g * k - params.omega_q, params.half_gamma())
}

/// ∫₀^τ e^{−a(τ−s)} e^{−b s} ds, stable when a ≈ b.
pub fn exp_conv(a: C64, b: C64, tau: f64) -> C64 {
    if tau <= 0.0 {
        return C64::new(0.0, 0.0);
    }
    let z = (a - b) * tau;
    if z.norm() < 1e-3 {
        // τ e^{−aτ} (e^z − 1)/z by its series
        let mut term = C64::new(1.0, 0.0);
        let mut sum = term;
        for n in 1..8 {
            term *= z / (n as f64 + 1.0);
            sum += term;
        }
        tau * (-(a * tau)).exp() * sum
    } else {
        ((-(b * tau)).exp() - (-(a * tau)).exp()) / (a - b)
    }
}

/// σ_e amplitude at time t when a unit-norm even-channel pulse meets both qubits
/// in the ground state.
pub fn pulse_qubit_amplitude(params: &PhysicalParams, pulse: &Pulse, t: f64) -> C64 {
    if t < pulse.arrival {
        return C64::new(0.0, 0.0);
    }
    let g = C64::new(params.half_gamma(), 0.0);
    let pre = -I * params.gamma.sqrt() * (2.0 * pulse.mu).sqrt()
        * C64::from_polar(1.0, -pulse.detuning * pulse.arrival);
    pre * exp_conv(g, pulse.kappa(), t - pulse.arrival)
}

/// One term of a one-excitation state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum N1Component {
    EvenPhoton(Pulse),
    OddPhoton(Pulse),
    /// σ_e†|0⟩, i.e. |+⟩.
    EvenQubit,
    /// σ_o†|0⟩, i.e. |−⟩.
    OddQubit,
}

/// A one-excitation state over the even eigenbasis, free odd photons and |−⟩.
///
/// Coefficients live on the wavevector offsets q = k − Ω/v_g of `kgrid`.
/// The analytic components are kept alongside so the time evolution can be
/// evaluated in closed form.
#[derive(Debug, Clone)]
pub struct SpectralStateN1 {
    pub kgrid: TangentGrid,
    pub even_coeffs: Vec<C64>,
    pub odd_photon_coeffs: Vec<C64>,
    pub odd_qubit_amp: C64,
    pub components: Vec<(C64, N1Component)>,
}

/// Grid wide enough for the given pulses: centered on Ω/v_g, scale set by the
/// slowest of the qubit and pulse linewidths.
pub fn default_kgrid(params: &PhysicalParams, mus: &[f64], nodes: usize) -> Result<TangentGrid> {
    let mut scale = params.half_gamma();
    for &m in mus {
        scale = scale.max(m);
    }
    TangentGrid::new(0.0, scale / params.v_g, nodes)
}

impl SpectralStateN1 {
    pub fn norm_sqr(&self) -> f64 {
        let w = self.kgrid.weights();
        let photons: f64 = (0..w.len())
            .map(|j| w[j] * (self.even_coeffs[j].norm_sqr() + self.odd_photon_coeffs[j].norm_sqr()))
            .sum::<f64>()
            / (2.0 * std::f64::consts::PI);
        photons + self.odd_qubit_amp.norm_sqr()
    }

    /// Closed-form σ_e and σ_o amplitudes at time t.
    pub fn qubit_amplitudes(&self, params: &PhysicalParams, t: f64) -> (C64, C64) {
        let g = params.half_gamma();
        let mut even = C64::new(0.0, 0.0);
        let mut odd = C64::new(0.0, 0.0);
        for (c, comp) in &self.components {
            match comp {
                N1Component::EvenPhoton(p) => even += c * pulse_qubit_amplitude(params, p, t),
                N1Component::EvenQubit => even += c * (-g * t).exp(),
                N1Component::OddQubit => odd += c,
                N1Component::OddPhoton(_) => {}
            }
        }
        (even, odd)
    }

    /// σ_e amplitude from the eigenbasis sum (1/2π) Σ w c(q) e_q e^{−i v_g q t}.
    /// Only a cross-check: the sharp wavefront makes this converge slowly.
    pub fn even_qubit_amplitude_quadrature(&self, params: &PhysicalParams, t: f64) -> C64 {
        let k0 = params.omega_q / params.v_g;
        let q = self.kgrid.nodes();
        let w = self.kgrid.weights();
        let s: C64 = (0..q.len())
            .map(|j| {
                w[j] * self.even_coeffs[j]
                    * n1_eigenstate_qubit_amplitude(params, k0 + q[j])
                    * C64::from_polar(1.0, -params.v_g * q[j] * t)
            })
            .sum();
        s / (2.0 * std::f64::consts::PI)
    }
}

/// Projects a general one-excitation state; photon fronts must not have passed x = 0.
pub fn n1_project_components(
    params: &PhysicalParams,
    components: &[(C64, N1Component)],
    kgrid: &TangentGrid,
) -> Result<SpectralStateN1> {
    for (_, c) in components {
        if let N1Component::EvenPhoton(p) | N1Component::OddPhoton(p) = c {
            if p.arrival < 0.0 {
                return Err(WqedError::Unsupported(
                    "photon already overlapping the qubits at t = 0 (front < 0)".into(),
                ));
            }
        }
    }
    let k0 = params.omega_q / params.v_g;
    let vg = params.v_g;
    let coeffs: Vec<(C64, C64)> = kgrid
        .nodes()
        .par_iter()
        .map(|&q| {
            let mut even = C64::new(0.0, 0.0);
            let mut odd = C64::new(0.0, 0.0);
            for (c, comp) in components {
                match comp {
                    // position-space transform ψ̃(k) = sqrt(v_g) f̂(v_g q)
                    N1Component::EvenPhoton(p) => even += c * p.spectrum(vg * q) * vg.sqrt(),
                    N1Component::OddPhoton(p) => odd += c * p.spectrum(vg * q) * vg.sqrt(),
                    N1Component::EvenQubit => {
                        even += c * n1_eigenstate_qubit_amplitude(params, k0 + q).conj()
                    }
                    N1Component::OddQubit => {}
                }
            }
            (even, odd)
        })
        .collect();
    let odd_qubit_amp = components
        .iter()
        .filter(|(_, c)| matches!(c, N1Component::OddQubit))
        .map(|(a, _)| *a)
        .sum();
    let state = SpectralStateN1 {
        kgrid: kgrid.clone(),
        even_coeffs: coeffs.iter().map(|c| c.0).collect(),
        odd_photon_coeffs: coeffs.iter().map(|c| c.1).collect(),
        odd_qubit_amp,
        components: components.to_vec(),
    };
    let expected = n1_direct_norm(components);
    let captured = state.norm_sqr();
    if expected > 0.0 && captured < expected * (1.0 - COVERAGE_TOLERANCE) {
        return Err(WqedError::Coverage {
            captured: captured / expected,
            required: 1.0 - COVERAGE_TOLERANCE,
        });
    }
    Ok(state)
}

/// Norm of a component list from closed-form overlaps.
pub fn n1_direct_norm(components: &[(C64, N1Component)]) -> f64 {
    let mut s = C64::new(0.0, 0.0);
    for (ca, a) in components {
        for (cb, b) in components {
            let ov = match (a, b) {
                (N1Component::EvenPhoton(p), N1Component::EvenPhoton(q))
                | (N1Component::OddPhoton(p), N1Component::OddPhoton(q)) => p.overlap(q),
                (N1Component::EvenQubit, N1Component::EvenQubit)
                | (N1Component::OddQubit, N1Component::OddQubit) => C64::new(1.0, 0.0),
                _ => C64::new(0.0, 0.0),
            };
            s += ca.conj() * cb * ov;
        }
    }
    s.re
}

/// Splits one photon into even and odd channels and projects it.
pub fn n1_project(
    params: &PhysicalParams,
    photon: &WavepacketSpec,
    kgrid: &TangentGrid,
) -> Result<SpectralStateN1> {
    photon.validate()?;
    n1_project_components(params, &photon_components(params, photon, C64::new(1.0, 0.0)), kgrid)
}

/// c_R†(ψ) = (e† + o†)/√2 and c_L†(ψ) = (e† − o†)/√2 in even/odd coordinates.
pub fn photon_components(
    params: &PhysicalParams,
    photon: &WavepacketSpec,
    amp: C64,
) -> Vec<(C64, N1Component)> {
    let pulse = Pulse::from_spec(params, photon);
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let sign = match photon.direction {
        crate::model::Direction::Rightward => 1.0,
        crate::model::Direction::Leftward => -1.0,
    };
    vec![
        (amp * h, N1Component::EvenPhoton(pulse)),
        (amp * (sign * h), N1Component::OddPhoton(pulse)),
    ]
}

/// Populations and concurrence over time.
///
/// With both qubits initially in the ground state only |+⟩ is ever excited,
/// so C(t) = ρ₊(t).
pub fn n1_evolve_trace(
    params: &PhysicalParams,
    state: &SpectralStateN1,
    times: &[f64],
) -> ConcurrenceTrace {
    let pops = times
        .par_iter()
        .map(|&t| {
            let (plus, minus) = state.qubit_amplitudes(params, t);
            let rho_plus = plus.norm_sqr();
            let rho_minus = minus.norm_sqr();
            crate::model::QubitBasisPopulations {
                rho_gs: (1.0 - rho_plus - rho_minus).max(0.0),
                rho_plus,
                rho_minus,
                rho_beta: 0.0,
                coh_pm: plus * minus.conj(),
            }
        })
        .collect();
    ConcurrenceTrace::from_pops(times.to_vec(), pops)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::{panel_rule, panels};

    fn params() -> PhysicalParams {
        PhysicalParams::natural(0.01).unwrap()
    }

    #[test]
    fn transmission_examples() {
        let p = params();
        assert!((n1_transmission(&p, 1.0) + 1.0).norm() < 1e-15);
        assert!((n1_transmission(&p, 1.005) - C64::new(0.0, -1.0)).norm() < 1e-12);
        for k in [0.3, 0.99, 1.0001, 2.5] {
            assert!((n1_transmission(&p, k).norm() - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn qubit_amplitude_examples() {
        let p = params();
        let res = n1_eigenstate_qubit_amplitude(&p, 1.0);
        assert!((res - C64::new(0.0, -2.0 / 0.1)).norm() < 1e-12);
        let off = PhysicalParams::natural(1e-12).unwrap();
        assert!(n1_eigenstate_qubit_amplitude(&off, 1.1).norm() < 1e-5);
        // FWHM γ of |e_k|² in v_g k
        let peak = res.norm_sqr();
        let half = n1_eigenstate_qubit_amplitude(&p, 1.0 + 0.005).norm_sqr();
        assert!((half / peak - 0.5).abs() < 1e-12);
    }

    #[test]
    fn eigenstate_residual() {
        // −i v_g u' = E u off the origin, i v_g [u] = V e_k, Ω e_k + V u(0) = E e_k
        let p = PhysicalParams::new(1.0, 0.02, 0.8).unwrap();
        let v = p.coupling();
        for j in 0..24 {
            let k = 1.25 + 0.05 * ((j as f64) * 0.77).sin();
            let e = p.v_g * k;
            let t = n1_transmission(&p, k);
            let ek = n1_eigenstate_qubit_amplitude(&p, k);
            let u = |x: f64| {
                let pw = C64::from_polar(1.0, k * x);
                if x < 0.0 { pw } else { t * pw }
            };
            let h = 1e-4;
            for x in [-3.0, 2.0] {
                let d = (u(x + h) - u(x - h)) / (2.0 * h);
                let r = (-I * p.v_g * d - e * u(x)).norm() / (e * u(x)).norm();
                assert!(r < 1e-6, "bulk residual {r}");
            }
            let jump = I * p.v_g * (u(0.0) - u(-1e-300)) - v * ek;
            assert!(jump.norm() / (v * ek).norm() < 1e-12);
            let avg = 0.5 * (u(0.0) + u(-1e-300));
            let q = p.omega_q * ek + v * avg - e * ek;
            assert!(q.norm() / (e * ek).norm() < 1e-12);
        }
    }

    #[test]
    fn exp_conv_branches_agree() {
        let a = C64::new(0.005, 0.0);
        for db in [0.0, 1e-9, 1e-6, 3e-5, 1e-3, 0.02] {
            let b = C64::new(0.005 + db, 0.5 * db);
            let tau = 80.0;
            // brute force with composite Gauss–Legendre
            let r = panel_rule(&panels(&[0.0, tau], 1.0), 12);
            let bf: C64 = r
                .nodes
                .iter()
                .zip(&r.weights)
                .map(|(s, w)| w * (-(a * (tau - s))).exp() * (-(b * s)).exp())
                .sum();
            assert!((exp_conv(a, b, tau) - bf).norm() < 1e-12 * bf.norm().max(1.0));
        }
    }

    #[test]
    fn closed_form_matches_ode() {
        // RK4 on ė = −g e − i√γ w(t)
        let p = params();
        let pulse = Pulse { mu: 0.007, detuning: 0.002, arrival: 10.0 };
        let g = p.half_gamma();
        let dt = 0.01;
        let mut e = C64::new(0.0, 0.0);
        let mut t = pulse.arrival;
        let f = |t: f64, e: C64| -g * e - I * p.gamma.sqrt() * pulse.flux(t.max(pulse.arrival));
        while t < 400.0 - 1e-9 {
            let k1 = f(t, e);
            let k2 = f(t + dt / 2.0, e + k1 * (dt / 2.0));
            let k3 = f(t + dt / 2.0, e + k2 * (dt / 2.0));
            let k4 = f(t + dt, e + k3 * dt);
            e += (k1 + 2.0 * k2 + 2.0 * k3 + k4) * (dt / 6.0);
            t += dt;
        }
        assert!((e - pulse_qubit_amplitude(&p, &pulse, t)).norm() < 1e-9);
    }

    #[test]
    fn even_channel_unitarity() {
        // incoming tail + qubit + outgoing flux = 1 at any time
        let p = params();
        let pulse = Pulse { mu: 0.005, detuning: 0.0, arrival: 0.0 };
        let out = |s: f64| pulse.flux(s) - I * p.gamma.sqrt() * pulse_qubit_amplitude(&p, &pulse, s);
        for t in [30.0, 200.0, 900.0] {
            let r = panel_rule(&panels(&[0.0, t], 2.0), 12);
            let outgoing = r.integrate(|s| out(s).norm_sqr());
            let total = pulse.tail_overlap(&pulse, t).re
                + pulse_qubit_amplitude(&p, &pulse, t).norm_sqr()
                + outgoing;
            assert!((total - 1.0).abs() < 1e-10, "t={t}: {total}");
        }
    }

    #[test]
    fn peak_generation_value() {
        // μ = γ/2: ρ₊ = 2 (γτ/2)² e^{−γτ}/... peaks at 2e^{−2} when τ = 2/γ
        let p = params();
        let spec = WavepacketSpec::rightward(0.005, 1.0, 0.0);
        let grid = default_kgrid(&p, &[spec.mu], 1024).unwrap();
        let st = n1_project(&p, &spec, &grid).unwrap();
        let tr = n1_evolve_trace(&p, &st, &[200.0]);
        assert!((tr.concurrence[0] - 2.0 * (-2.0f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn projection_norm_and_split() {
        let p = params();
        let spec = WavepacketSpec::rightward(0.004, 1.001, 3.0);
        let grid = default_kgrid(&p, &[spec.mu], 4096).unwrap();
        let st = n1_project(&p, &spec, &grid).unwrap();
        assert!((st.norm_sqr() - 1.0).abs() < 1e-8);
        let w = grid.weights();
        let odd: f64 = (0..w.len()).map(|j| w[j] * st.odd_photon_coeffs[j].norm_sqr()).sum::<f64>()
            / (2.0 * std::f64::consts::PI);
        assert!((odd - 0.5).abs() < 1e-8);
        let zero = n1_project_components(&p, &[], &grid).unwrap();
        assert_eq!(zero.norm_sqr(), 0.0);
    }

    #[test]
    fn coverage_error_on_narrow_grid() {
        let p = params();
        let spec = WavepacketSpec::rightward(0.004, 1.3, 0.0);
        // 16 nodes cannot resolve a Lorentzian sitting far out in the tail
        let grid = TangentGrid::new(0.0, 1e-4, 16).unwrap();
        assert!(matches!(
            n1_project(&p, &spec, &grid),
            Err(WqedError::Coverage { .. })
        ));
    }

    #[test]
    fn quadrature_tracks_closed_form() {
        let p = params();
        let spec = WavepacketSpec::rightward(0.005, 1.0, 0.0);
        let grid = default_kgrid(&p, &[spec.mu], 4096).unwrap();
        let st = n1_project(&p, &spec, &grid).unwrap();
        for t in [50.0, 200.0, 600.0] {
            let exact = st.qubit_amplitudes(&p, t).0;
            let quad = st.even_qubit_amplitude_quadrature(&p, t);
            assert!((exact - quad).norm() < 5e-3, "t={t}: {exact} vs {quad}");
        }
    }

    #[test]
    fn zero_before_arrival() {
        let p = params();
        let spec = WavepacketSpec::rightward(0.005, 1.0, 500.0);
        let grid = default_kgrid(&p, &[spec.mu], 256).unwrap();
        let st = n1_project(&p, &spec, &grid).unwrap();
        let tr = n1_evolve_trace(&p, &st, &[0.0, 250.0, 499.999]);
        assert!(tr.concurrence.iter().all(|c| c.abs() < 1e-6));
    }

    #[test]
    fn leftward_photon_splits_with_sign() {
        let p = params();
        let spec = WavepacketSpec::leftward(0.005, 1.0, 0.0);
        let comps = photon_components(&p, &spec, C64::new(1.0, 0.0));
        assert!((comps[0].0 + comps[1].0).norm() < 1e-15);
    }
}
