//! Domain types, wavepacket mathematics and concurrence formulas.
//!
//! Internal conventions: the qubit frequency and group velocity default to one,
//! time runs in units of 1/Ω and positions in units of v_g/Ω. Two-qubit states are
//! always written in the ordered basis {|g₁g₂⟩, |+⟩, |−⟩, |e₁e₂⟩}.

use nalgebra::{Matrix4, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Result, WqedError};

pub type C64 = Complex64;

pub const I: C64 = C64::new(0.0, 1.0);

/// Waveguide and qubit constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalParams {
    pub omega_q: f64,
    pub gamma: f64,
    pub v_g: f64,
}

impl PhysicalParams {
    pub fn new(omega_q: f64, gamma: f64, v_g: f64) -> Result<Self> {
        let p = PhysicalParams { omega_q, gamma, v_g };
        p.validate()?;
        Ok(p)
    }

    /// Ω = v_g = 1 with the given coupling.
    pub fn natural(gamma: f64) -> Result<Self> {
        Self::new(1.0, gamma, 1.0)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.omega_q.is_finite() && self.omega_q > 0.0) {
            return Err(WqedError::param("omega_q", "must be finite and > 0"));
        }
        // gamma = 0 is allowed: it decouples the qubits and is a useful limit.
        if !(self.gamma.is_finite() && self.gamma >= 0.0) {
            return Err(WqedError::param("gamma", "must be finite and >= 0"));
        }
        if self.gamma >= self.omega_q {
            return Err(WqedError::param(
                "gamma",
                "must be below omega_q (weak coupling)",
            ));
        }
        if !(self.v_g.is_finite() && self.v_g > 0.0) {
            return Err(WqedError::param("v_g", "must be finite and > 0"));
        }
        Ok(())
    }

    /// Coupling constant V = sqrt(γ v_g).
    pub fn coupling(&self) -> f64 {
        (self.gamma * self.v_g).sqrt()
    }

    pub fn wavelength(&self) -> f64 {
        2.0 * std::f64::consts::PI * self.v_g / self.omega_q
    }

    /// Amplitude decay rate of |+⟩ (and of |e₁e₂⟩ towards |+⟩): γ/2.
    pub fn half_gamma(&self) -> f64 {
        0.5 * self.gamma
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Rightward,
    Leftward,
}

/// Exponential single-photon pulse with a sharp wavefront.
///
/// A rightward packet occupies x ≤ −front; a leftward one is its mirror image.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WavepacketSpec {
    pub mu: f64,
    pub omega: f64,
    pub front: f64,
    pub direction: Direction,
}

impl WavepacketSpec {
    pub fn rightward(mu: f64, omega: f64, front: f64) -> Self {
        WavepacketSpec {
            mu,
            omega,
            front,
            direction: Direction::Rightward,
        }
    }

    pub fn leftward(mu: f64, omega: f64, front: f64) -> Self {
        WavepacketSpec {
            mu,
            omega,
            front,
            direction: Direction::Leftward,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mu.is_finite() && self.mu > 0.0) {
            return Err(WqedError::param("mu", "must be finite and > 0"));
        }
        if !self.omega.is_finite() {
            return Err(WqedError::param("omega", "must be finite"));
        }
        if !self.front.is_finite() {
            return Err(WqedError::param("front", "must be finite"));
        }
        Ok(())
    }
}

/// ψ(x; a) in position space, θ(0) = 1 at the wavefront.
pub fn wavepacket_amplitude(params: &PhysicalParams, spec: &WavepacketSpec, x: f64) -> C64 {
    let x = match spec.direction {
        Direction::Rightward => x,
        Direction::Leftward => -x,
    };
    if x > -spec.front {
        return C64::new(0.0, 0.0);
    }
    let vg = params.v_g;
    let norm = (2.0 * spec.mu / vg).sqrt();
    // μa + μx ≤ 0 on the support, so this never overflows
    let env = (spec.mu * (spec.front + x) / vg).exp();
    norm * env * C64::from_polar(1.0, spec.omega * x / vg)
}

/// ψ̃(k) = ∫ dx ψ(x; a) e^{−ikx}.
pub fn wavepacket_momentum_amplitude(params: &PhysicalParams, spec: &WavepacketSpec, k: f64) -> C64 {
    let k = match spec.direction {
        Direction::Rightward => k,
        Direction::Leftward => -k,
    };
    let vg = params.v_g;
    let q = spec.omega / vg - k;
    let norm = (2.0 * spec.mu / vg).sqrt();
    norm * C64::from_polar(1.0, -q * spec.front) / C64::new(spec.mu / vg, q)
}

/// A packet seen as a time signal at the coupling point, in the frame rotating at Ω.
///
/// `flux(t) = sqrt(2μ) e^{−(μ + i d)(t − t_a)} e^{−i d t_a}` for t ≥ t_a and zero before,
/// normalized so that ∫|flux|² dt = 1. Direction does not matter here: after the
/// even/odd change of variables both kinds of packets arrive from the left.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pulse {
    pub mu: f64,
    pub detuning: f64,
    pub arrival: f64,
}

impl Pulse {
    pub fn from_spec(params: &PhysicalParams, spec: &WavepacketSpec) -> Self {
        Pulse {
            mu: spec.mu,
            detuning: spec.omega - params.omega_q,
            arrival: spec.front / params.v_g,
        }
    }

    /// Complex decay rate κ = μ + i d.
    pub fn kappa(&self) -> C64 {
        C64::new(self.mu, self.detuning)
    }

    pub fn flux(&self, t: f64) -> C64 {
        if t < self.arrival {
            return C64::new(0.0, 0.0);
        }
        let tau = t - self.arrival;
        (2.0 * self.mu).sqrt()
            * (-(self.kappa() * tau) - I * (self.detuning * self.arrival)).exp()
    }

    /// ∫_{from}^∞ conj(self(s)) other(s) ds in closed form.
    pub fn tail_overlap(&self, other: &Pulse, from: f64) -> C64 {
        let s = from.max(self.arrival).max(other.arrival);
        let rate = self.kappa().conj() + other.kappa();
        self.flux(s).conj() * other.flux(s) / rate
    }

    pub fn overlap(&self, other: &Pulse) -> C64 {
        self.tail_overlap(other, f64::NEG_INFINITY)
    }

    /// Spectrum f̂(δ) = ∫ flux(t) e^{iδt} dt, δ a detuning from Ω.
    pub fn spectrum(&self, delta: f64) -> C64 {
        (2.0 * self.mu).sqrt() * C64::from_polar(1.0, (delta - self.detuning) * self.arrival)
            / (self.kappa() - I * delta)
    }
}

/// 4×4 density matrix in the basis {gg, +, −, ee}.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoQubitDensityMatrix {
    entries: Matrix4<C64>,
}

impl TwoQubitDensityMatrix {
    pub fn new(entries: Matrix4<C64>) -> Result<Self> {
        let herm = (entries - entries.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
        if herm > 1e-10 {
            return Err(WqedError::InvalidDensityMatrix(format!(
                "not Hermitian (max deviation {herm:.3e})"
            )));
        }
        let tr = entries.trace();
        if (tr - C64::new(1.0, 0.0)).norm() > 1e-12 {
            return Err(WqedError::InvalidDensityMatrix(format!(
                "trace {tr} differs from 1"
            )));
        }
        let min_eig = SymmetricEigen::new(hermitize(&entries))
            .eigenvalues
            .min();
        if min_eig < -1e-10 {
            return Err(WqedError::InvalidDensityMatrix(format!(
                "negative eigenvalue {min_eig:.3e}"
            )));
        }
        Ok(TwoQubitDensityMatrix { entries })
    }

    pub fn entries(&self) -> &Matrix4<C64> {
        &self.entries
    }
}

fn hermitize(m: &Matrix4<C64>) -> Matrix4<C64> {
    (m + m.adjoint()) * C64::new(0.5, 0.0)
}

/// Qubit-basis populations plus the single coherence the scenarios can produce.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct QubitBasisPopulations {
    pub rho_gs: f64,
    pub rho_plus: f64,
    pub rho_minus: f64,
    pub rho_beta: f64,
    #[serde(skip)]
    pub coh_pm: C64,
}

impl QubitBasisPopulations {
    pub fn sum(&self) -> f64 {
        self.rho_gs + self.rho_plus + self.rho_minus + self.rho_beta
    }

    pub fn validate(&self, tol: f64) -> Result<()> {
        for (name, v) in [
            ("rho_gs", self.rho_gs),
            ("rho_plus", self.rho_plus),
            ("rho_minus", self.rho_minus),
            ("rho_beta", self.rho_beta),
        ] {
            if !(v.is_finite() && v >= -tol && v <= 1.0 + tol) {
                return Err(WqedError::param(name, format!("{v} outside [0, 1]")));
            }
        }
        if (self.sum() - 1.0).abs() > tol {
            return Err(WqedError::param(
                "populations",
                format!("sum {} differs from 1", self.sum()),
            ));
        }
        if self.coh_pm.norm_sqr() > self.rho_plus * self.rho_minus + tol {
            return Err(WqedError::param(
                "coh_pm",
                "coherence exceeds sqrt(rho_plus rho_minus)",
            ));
        }
        Ok(())
    }
}

/// Diagonal matrix in {gg, +, −, ee} with the (+, −) coherence pair.
pub fn assemble_density_matrix(pops: &QubitBasisPopulations) -> Result<TwoQubitDensityMatrix> {
    pops.validate(1e-9)?;
    let mut m = Matrix4::<C64>::zeros();
    m[(0, 0)] = pops.rho_gs.into();
    m[(1, 1)] = pops.rho_plus.into();
    m[(2, 2)] = pops.rho_minus.into();
    m[(3, 3)] = pops.rho_beta.into();
    m[(1, 2)] = pops.coh_pm;
    m[(2, 1)] = pops.coh_pm.conj();
    // absorb the validation slack so the trace check is exact
    let tr = m.trace().re;
    TwoQubitDensityMatrix::new(m / C64::new(tr, 0.0))
}

/// Orthogonal map from {gg, +, −, ee} to the computational basis {gg, ge, eg, ee}.
fn to_computational() -> Matrix4<C64> {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    #[rustfmt::skip]
    let s = Matrix4::new(
        1.0, 0.0, 0.0, 0.0,
        0.0,   h,  -h, 0.0,
        0.0,   h,   h, 0.0,
        0.0, 0.0, 0.0, 1.0,
    );
    s.map(|v| C64::new(v, 0.0))
}

/// General Wootters concurrence.
///
/// The λᵢ are computed as singular values of τ = Bᵀ (σ_y⊗σ_y) B with ρ = B B†,
/// which has the same spectrum as sqrt(ρ ρ̃) but avoids square roots of
/// eigenvalues that are zero up to rounding.
pub fn wootters_concurrence(rho: &TwoQubitDensityMatrix) -> f64 {
    let s = to_computational();
    let rc = hermitize(&(s * rho.entries * s.adjoint()));
    let eig = SymmetricEigen::new(rc);
    let scale = rc.trace().re.abs().max(f64::MIN_POSITIVE);
    let mut b = eig.eigenvectors;
    for j in 0..4 {
        let p = eig.eigenvalues[j];
        let root = if p > 1e-14 * scale { p.sqrt() } else { 0.0 };
        for i in 0..4 {
            b[(i, j)] *= root;
        }
    }
    #[rustfmt::skip]
    let flip = Matrix4::new(
         0.0, 0.0, 0.0, -1.0,
         0.0, 0.0, 1.0,  0.0,
         0.0, 1.0, 0.0,  0.0,
        -1.0, 0.0, 0.0,  0.0,
    )
    .map(|v| C64::new(v, 0.0));
    let tau = b.transpose() * flip * b;
    let mut sv: Vec<f64> = tau.singular_values().iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    (sv[0] - sv[1] - sv[2] - sv[3]).clamp(0.0, 1.0)
}

/// max(0, ρ₊ − 2 sqrt(ρ_β ρ_GS)); only valid when ρ₋ and the coherence vanish.
pub fn x_state_concurrence(pops: &QubitBasisPopulations) -> Result<f64> {
    if pops.rho_minus.abs() > 1e-9 || pops.coh_pm.norm() > 1e-9 {
        return Err(WqedError::Precondition(format!(
            "X-state formula needs rho_minus = 0 and no coherence (got {:.3e}, {:.3e})",
            pops.rho_minus,
            pops.coh_pm.norm()
        )));
    }
    Ok((pops.rho_plus - competitor(pops)).clamp(0.0, 1.0))
}

/// 2 sqrt(ρ_β ρ_GS).
pub fn competitor(pops: &QubitBasisPopulations) -> f64 {
    2.0 * (pops.rho_beta.max(0.0) * pops.rho_gs.max(0.0)).sqrt()
}

/// Concurrence of (σ₁† + ξσ₂†)|0⟩/sqrt(1+|ξ|²); ξ = ∞ gives 0.
pub fn xi_concurrence(xi: C64) -> f64 {
    let r = xi.norm();
    if !r.is_finite() {
        return 0.0;
    }
    if r == 0.0 {
        return 0.0;
    }
    2.0 / (r + 1.0 / r)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pops(gs: f64, plus: f64, minus: f64, beta: f64) -> QubitBasisPopulations {
        QubitBasisPopulations {
            rho_gs: gs,
            rho_plus: plus,
            rho_minus: minus,
            rho_beta: beta,
            coh_pm: C64::new(0.0, 0.0),
        }
    }

    fn p() -> PhysicalParams {
        PhysicalParams::natural(0.01).unwrap()
    }

    #[test]
    fn amplitude_support_and_front() {
        let s = WavepacketSpec::rightward(0.005, 1.0, 30.0);
        assert_eq!(wavepacket_amplitude(&p(), &s, -29.0), C64::new(0.0, 0.0));
        let front = wavepacket_amplitude(&p(), &s, -30.0);
        assert!((front.norm() - (0.01f64).sqrt()).abs() < 1e-15);
        let l = WavepacketSpec::leftward(0.005, 1.0, 30.0);
        assert!((wavepacket_amplitude(&p(), &l, 30.0).norm() - front.norm()).abs() < 1e-15);
        assert_eq!(wavepacket_amplitude(&p(), &l, -40.0), C64::new(0.0, 0.0));
    }

    #[test]
    fn amplitude_normalized() {
        // trapezoid on the decaying support, step small against 1/μ
        let params = p();
        let lambda = params.wavelength();
        let s = WavepacketSpec::rightward(0.005, 1.0, 200.0 * lambda);
        let h = 0.05;
        let mut sum = 0.0;
        let x0 = -s.front;
        let n = (8000.0 / h) as usize;
        for j in 0..=n {
            let w = if j == 0 || j == n { 0.5 } else { 1.0 };
            sum += w * wavepacket_amplitude(&params, &s, x0 - j as f64 * h).norm_sqr();
        }
        // end correction for the jump at the front: trapezoid error is O(h²)
        assert!((sum * h - 1.0).abs() < 1e-6, "{}", sum * h);
    }

    #[test]
    fn momentum_amplitude_matches_direct_integral() {
        // integrate ψ(x) e^{-ikx} analytically segment by segment via midpoint refinement
        let params = p();
        let s = WavepacketSpec::rightward(0.3, 1.1, 2.0);
        for &k in &[1.1, 0.7, 1.6] {
            let h = 1e-3;
            let mut acc = C64::new(0.0, 0.0);
            let mut x = -s.front - 0.5 * h;
            while x > -s.front - 80.0 {
                acc += wavepacket_amplitude(&params, &s, x) * C64::from_polar(1.0, -k * x) * h;
                x -= h;
            }
            let exact = wavepacket_momentum_amplitude(&params, &s, k);
            assert!((acc - exact).norm() < 1e-5, "k={k}: {acc} vs {exact}");
        }
        // at the carrier: sqrt(2/μ) times the front phase
        let on = wavepacket_momentum_amplitude(&params, &s, 1.1);
        assert!((on.norm() - (2.0 / 0.3f64).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn momentum_peak_at_carrier() {
        let params = p();
        let s = WavepacketSpec::rightward(0.02, 0.97, 5.0);
        let at = wavepacket_momentum_amplitude(&params, &s, 0.97).norm();
        for dk in [-0.1, -0.01, 0.001, 0.05] {
            assert!(wavepacket_momentum_amplitude(&params, &s, 0.97 + dk).norm() < at);
        }
    }

    #[test]
    fn parseval_on_dense_grid() {
        // substitute k = ω + μ tan θ, where |ψ̃|² dk becomes 2 dθ
        let params = p();
        let s = WavepacketSpec::rightward(0.004, 1.0, 10.0);
        let n = 20000;
        let mut sum = 0.0;
        for j in 0..n {
            let th = -std::f64::consts::FRAC_PI_2 + (j as f64 + 0.5) * std::f64::consts::PI / n as f64;
            let k = 1.0 + s.mu * th.tan();
            let jac = s.mu / th.cos().powi(2);
            sum += wavepacket_momentum_amplitude(&params, &s, k).norm_sqr() * jac;
        }
        sum *= std::f64::consts::PI / n as f64 / (2.0 * std::f64::consts::PI);
        assert!((sum - 1.0).abs() < 1e-6, "{sum}");
    }

    #[test]
    fn pulse_flux_is_normalized_and_consistent() {
        let params = p();
        let spec = WavepacketSpec::rightward(0.005, 1.002, 40.0);
        let pulse = Pulse::from_spec(&params, &spec);
        assert!((pulse.overlap(&pulse).re - 1.0).abs() < 1e-14);
        // flux at the coupling point is the field profile swept past x = 0
        let t = 55.0;
        let field = wavepacket_amplitude(&params, &spec, -t) * C64::from_polar(1.0, t);
        assert!((field - pulse.flux(t)).norm() < 1e-12);
    }

    #[test]
    fn pulse_spectrum_matches_momentum_amplitude() {
        let params = p();
        let spec = WavepacketSpec::rightward(0.007, 0.99, 12.0);
        let pulse = Pulse::from_spec(&params, &spec);
        for d in [-0.02, 0.0, 0.013] {
            let a = pulse.spectrum(d);
            let b = wavepacket_momentum_amplitude(&params, &spec, 1.0 + d);
            assert!((a - b).norm() < 1e-12, "{a} {b}");
        }
    }

    #[test]
    fn wootters_basic_states() {
        let plus = assemble_density_matrix(&pops(0.0, 1.0, 0.0, 0.0)).unwrap();
        assert!((wootters_concurrence(&plus) - 1.0).abs() < 1e-12);
        let gg = assemble_density_matrix(&pops(1.0, 0.0, 0.0, 0.0)).unwrap();
        assert!(wootters_concurrence(&gg).abs() < 1e-12);
        let half = assemble_density_matrix(&pops(0.5, 0.5, 0.0, 0.0)).unwrap();
        assert!((wootters_concurrence(&half) - 0.5).abs() < 1e-12);
        let flat = assemble_density_matrix(&pops(0.25, 0.25, 0.25, 0.25)).unwrap();
        assert!(wootters_concurrence(&flat).abs() < 1e-12);
        let minus = assemble_density_matrix(&pops(0.0, 0.0, 1.0, 0.0)).unwrap();
        assert!((wootters_concurrence(&minus) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn wootters_brute_force_reference() {
        // ½|+⟩⟨+| + ½|gg⟩⟨gg| against the textbook route: eigenvalues of ρρ̃
        let rho = assemble_density_matrix(&pops(0.5, 0.5, 0.0, 0.0)).unwrap();
        let s = to_computational();
        let rc = s * rho.entries() * s.adjoint();
        let y = Matrix4::new(
            0.0, 0.0, 0.0, -1.0, 0.0, 0.0, 1.0, 0.0, 0.0, 1.0, 0.0, 0.0, -1.0, 0.0, 0.0, 0.0,
        )
        .map(|v| C64::new(v, 0.0));
        let rt = y * rc.conjugate() * y;
        let prod = rc * rt;
        // every entry is real for this state
        let mut lam: Vec<f64> = prod
            .map(|z| z.re)
            .complex_eigenvalues()
            .iter()
            .map(|z| z.re.max(0.0).sqrt())
            .collect();
        lam.sort_by(|a, b| b.total_cmp(a));
        let c = (lam[0] - lam[1] - lam[2] - lam[3]).max(0.0);
        assert!((c - 0.5).abs() < 1e-7);
        assert!((wootters_concurrence(&rho) - c).abs() < 1e-7);
    }

    #[test]
    fn x_state_examples() {
        assert_eq!(x_state_concurrence(&pops(1.0, 0.0, 0.0, 0.0)).unwrap(), 0.0);
        assert!((x_state_concurrence(&pops(0.5, 0.5, 0.0, 0.0)).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(x_state_concurrence(&pops(0.4, 0.2, 0.0, 0.4)).unwrap(), 0.0);
        assert!(x_state_concurrence(&pops(0.4, 0.2, 0.4, 0.0)).is_err());
    }

    #[test]
    fn xi_examples() {
        assert!((xi_concurrence(C64::new(1.0, 0.0)) - 1.0).abs() < 1e-15);
        assert_eq!(xi_concurrence(C64::new(0.0, 0.0)), 0.0);
        assert!((xi_concurrence(C64::new(2.0, 0.0)) - 0.8).abs() < 1e-15);
        assert_eq!(xi_concurrence(C64::new(f64::INFINITY, 0.0)), 0.0);
        assert!((xi_concurrence(I) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn density_matrix_rejections() {
        let mut m = Matrix4::<C64>::zeros();
        m[(0, 0)] = 0.9.into();
        assert!(TwoQubitDensityMatrix::new(m).is_err());
        m[(0, 0)] = 1.0.into();
        m[(0, 1)] = C64::new(0.0, 0.3);
        assert!(TwoQubitDensityMatrix::new(m).is_err());
        let mut n = Matrix4::<C64>::zeros();
        n[(0, 0)] = 1.5.into();
        n[(1, 1)] = (-0.5).into();
        assert!(TwoQubitDensityMatrix::new(n).is_err());
    }

    #[test]
    fn params_validation() {
        assert!(PhysicalParams::new(1.0, -0.01, 1.0).is_err());
        assert!(PhysicalParams::new(1.0, 2.0, 1.0).is_err());
        assert!(PhysicalParams::new(0.0, 0.01, 1.0).is_err());
        let p = PhysicalParams::new(2.0, 0.04, 0.5).unwrap();
        assert!((p.coupling() - (0.02f64).sqrt()).abs() < 1e-15);
        assert!((p.wavelength() - std::f64::consts::PI / 2.0).abs() < 1e-15);
    }
}
