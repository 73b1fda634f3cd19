//! Even/odd decomposition of two-excitation initial states.
//!
//! With co-located qubits only the even photon channel and σ_e = (σ₁+σ₂)/√2
//! interact. A product of two single excitations therefore splits into five
//! mutually orthogonal, separately invariant pieces:
//!
//! * even ⊗ even: two even photons, or an even photon with |+⟩ (interacting)
//! * even ⊗ odd photon: the even part evolves as one excitation, the odd photon is free
//! * odd ⊗ odd: two free photons
//! * even photon ⊗ |−⟩ and odd photon ⊗ |−⟩: |−⟩ is dark, so these never evolve
//!   beyond free propagation

use crate::error::{Result, WqedError};
use crate::model::{PhysicalParams, Pulse, WavepacketSpec, C64};
use crate::single_ex::{photon_components, N1Component};

/// One even excitation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Source {
    Photon(Pulse),
    /// σ_e†, i.e. the qubit pair in |+⟩.
    Qubit,
}

impl Source {
    fn overlap(&self, other: &Source) -> C64 {
        match (self, other) {
            (Source::Photon(p), Source::Photon(q)) => p.overlap(q),
            (Source::Qubit, Source::Qubit) => C64::new(1.0, 0.0),
            _ => C64::new(0.0, 0.0),
        }
    }
}

/// Coefficient lists of the five invariant pieces.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Sectors {
    pub even_even: Vec<(C64, Source, Source)>,
    pub even_odd: Vec<(C64, Source, Pulse)>,
    pub odd_odd: Vec<(C64, Pulse, Pulse)>,
    pub even_dark: Vec<(C64, Pulse)>,
    pub odd_dark: Vec<(C64, Pulse)>,
}

/// Initial two-excitation states supported by the projection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitialStateN2 {
    /// Two photons, both qubits in the ground state.
    TwoPhotons { a: WavepacketSpec, b: WavepacketSpec },
    /// One photon and the qubits in (σ₁† + ξσ₂†)|0⟩/sqrt(1+|ξ|²). An infinite ξ means σ₂†|0⟩.
    PhotonOnQubits { photon: WavepacketSpec, xi: C64 },
}

fn pair_overlap(a: (&Source, &Source), b: (&Source, &Source)) -> C64 {
    a.0.overlap(b.0) * a.1.overlap(b.1) + a.0.overlap(b.1) * a.1.overlap(b.0)
}

fn pulse_pair_overlap(a: (&Pulse, &Pulse), b: (&Pulse, &Pulse)) -> C64 {
    a.0.overlap(b.0) * a.1.overlap(b.1) + a.0.overlap(b.1) * a.1.overlap(b.0)
}

impl Sectors {
    /// Norms of (even-even, even-odd, odd-odd, dark) from closed-form overlaps.
    pub fn norms(&self) -> [f64; 4] {
        let mut ee = C64::new(0.0, 0.0);
        for (ca, a1, a2) in &self.even_even {
            for (cb, b1, b2) in &self.even_even {
                ee += ca.conj() * cb * pair_overlap((a1, a2), (b1, b2));
            }
        }
        let mut eo = C64::new(0.0, 0.0);
        for (ca, ea, qa) in &self.even_odd {
            for (cb, eb, qb) in &self.even_odd {
                eo += ca.conj() * cb * ea.overlap(eb) * qa.overlap(qb);
            }
        }
        let mut oo = C64::new(0.0, 0.0);
        for (ca, a1, a2) in &self.odd_odd {
            for (cb, b1, b2) in &self.odd_odd {
                oo += ca.conj() * cb * pulse_pair_overlap((a1, a2), (b1, b2));
            }
        }
        [ee.re, eo.re, oo.re, self.dark_norm()]
    }

    pub fn norm_sqr(&self) -> f64 {
        self.norms().iter().sum()
    }

    /// Population of |−⟩; constant in time.
    pub fn dark_norm(&self) -> f64 {
        let mut s = C64::new(0.0, 0.0);
        for list in [&self.even_dark, &self.odd_dark] {
            for (ca, p) in list.iter() {
                for (cb, q) in list.iter() {
                    s += ca.conj() * cb * p.overlap(q);
                }
            }
        }
        s.re
    }

    pub fn scale(&mut self, f: f64) {
        self.even_even.iter_mut().for_each(|t| t.0 *= f);
        self.even_odd.iter_mut().for_each(|t| t.0 *= f);
        self.odd_odd.iter_mut().for_each(|t| t.0 *= f);
        self.even_dark.iter_mut().for_each(|t| t.0 *= f);
        self.odd_dark.iter_mut().for_each(|t| t.0 *= f);
    }

    /// Earliest photon arrival, if any photon is present.
    pub fn first_arrival(&self) -> Option<f64> {
        self.pulses().map(|p| p.arrival).reduce(f64::min)
    }

    pub fn pulses(&self) -> impl Iterator<Item = Pulse> + '_ {
        let src = |s: &Source| match s {
            Source::Photon(p) => Some(*p),
            Source::Qubit => None,
        };
        self.even_even
            .iter()
            .flat_map(move |(_, a, b)| [src(a), src(b)])
            .chain(self.even_odd.iter().flat_map(move |(_, a, q)| [src(a), Some(*q)]))
            .chain(self.odd_odd.iter().flat_map(|(_, a, b)| [Some(*a), Some(*b)]))
            .chain(self.even_dark.iter().map(|(_, p)| Some(*p)))
            .chain(self.odd_dark.iter().map(|(_, p)| Some(*p)))
            .flatten()
    }

    fn push(&mut self, c: C64, a: &N1Component, b: &N1Component) -> Result<()> {
        use N1Component::*;
        match (a, b) {
            (EvenPhoton(p), EvenPhoton(q)) => {
                self.even_even.push((c, Source::Photon(*p), Source::Photon(*q)))
            }
            (EvenPhoton(p), EvenQubit) | (EvenQubit, EvenPhoton(p)) => {
                self.even_even.push((c, Source::Photon(*p), Source::Qubit))
            }
            (EvenPhoton(p), OddPhoton(q)) | (OddPhoton(q), EvenPhoton(p)) => {
                self.even_odd.push((c, Source::Photon(*p), *q))
            }
            (EvenQubit, OddPhoton(q)) | (OddPhoton(q), EvenQubit) => {
                self.even_odd.push((c, Source::Qubit, *q))
            }
            (OddPhoton(p), OddPhoton(q)) => self.odd_odd.push((c, *p, *q)),
            (EvenPhoton(p), OddQubit) | (OddQubit, EvenPhoton(p)) => self.even_dark.push((c, *p)),
            (OddPhoton(p), OddQubit) | (OddQubit, OddPhoton(p)) => self.odd_dark.push((c, *p)),
            // σ_e†σ_o†|0⟩ = 0 for two-level emitters
            (EvenQubit, OddQubit) | (OddQubit, EvenQubit) => {}
            (EvenQubit, EvenQubit) | (OddQubit, OddQubit) => {
                return Err(WqedError::Unsupported(
                    "doubly excited qubits in the initial state".into(),
                ))
            }
        }
        Ok(())
    }

    /// Product of two single-excitation component lists.
    pub fn from_product(a: &[(C64, N1Component)], b: &[(C64, N1Component)]) -> Result<Self> {
        let mut s = Sectors::default();
        for (ca, x) in a {
            for (cb, y) in b {
                s.push(ca * cb, x, y)?;
            }
        }
        Ok(s)
    }
}

/// (1+ξ)/sqrt(2(1+|ξ|²)) σ_e† + (1−ξ)/sqrt(2(1+|ξ|²)) σ_o†.
pub fn qubit_components(xi: C64) -> Vec<(C64, N1Component)> {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    if !(xi.re.is_finite() && xi.im.is_finite()) {
        return vec![
            (C64::new(h, 0.0), N1Component::EvenQubit),
            (C64::new(-h, 0.0), N1Component::OddQubit),
        ];
    }
    let n = h / (1.0 + xi.norm_sqr()).sqrt();
    vec![
        ((1.0 + xi) * n, N1Component::EvenQubit),
        ((1.0 - xi) * n, N1Component::OddQubit),
    ]
}

impl InitialStateN2 {
    /// Sector decomposition, normalized to unit norm.
    pub fn sectors(&self, params: &PhysicalParams) -> Result<Sectors> {
        let one = C64::new(1.0, 0.0);
        let mut s = match self {
            InitialStateN2::TwoPhotons { a, b } => {
                a.validate()?;
                b.validate()?;
                Sectors::from_product(
                    &photon_components(params, a, one),
                    &photon_components(params, b, one),
                )?
            }
            InitialStateN2::PhotonOnQubits { photon, xi } => {
                photon.validate()?;
                Sectors::from_product(&photon_components(params, photon, one), &qubit_components(*xi))?
            }
        };
        for p in s.pulses() {
            if p.arrival < 0.0 {
                return Err(WqedError::Unsupported(
                    "photon already overlapping the qubits at t = 0 (front < 0)".into(),
                ));
            }
        }
        let n = s.norm_sqr();
        if !(n > 0.0 && n.is_finite()) {
            return Err(WqedError::Unsupported("initial state has zero norm".into()));
        }
        s.scale(1.0 / n.sqrt());
        Ok(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p() -> PhysicalParams {
        PhysicalParams::natural(0.01).unwrap()
    }

    #[test]
    fn counter_propagating_sector_weights() {
        let st = InitialStateN2::TwoPhotons {
            a: WavepacketSpec::rightward(0.005, 1.0, 0.0),
            b: WavepacketSpec::leftward(0.005, 1.0, 40.0),
        };
        let s = st.sectors(&p()).unwrap();
        let n = s.norms();
        // the two photons are in orthogonal channels, so no renormalization:
        // even-even and odd-odd carry (1 + |⟨f|g⟩|²)/4, even-odd the rest
        let Source::Photon(f) = s.even_even[0].1 else { panic!() };
        let Source::Photon(g) = s.even_even[0].2 else { panic!() };
        let o2 = f.overlap(&g).norm_sqr();
        assert!((n[0] - (1.0 + o2) / 4.0).abs() < 1e-12);
        assert!((n[1] - (1.0 - o2) / 2.0).abs() < 1e-12);
        assert!((n.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert_eq!(n[3], 0.0);
    }

    #[test]
    fn xi_minus_one_is_all_dark() {
        let st = InitialStateN2::PhotonOnQubits {
            photon: WavepacketSpec::rightward(0.001, 1.0, 0.1),
            xi: C64::new(-1.0, 0.0),
        };
        let s = st.sectors(&p()).unwrap();
        let n = s.norms();
        assert!(n[0].abs() < 1e-15 && n[1].abs() < 1e-15 && n[2] == 0.0);
        assert!((n[3] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn xi_one_has_no_dark_part() {
        let st = InitialStateN2::PhotonOnQubits {
            photon: WavepacketSpec::rightward(0.001, 1.0, 0.1),
            xi: C64::new(1.0, 0.0),
        };
        let s = st.sectors(&p()).unwrap();
        assert!(s.dark_norm() < 1e-15);
        let general = InitialStateN2::PhotonOnQubits {
            photon: WavepacketSpec::rightward(0.001, 1.0, 0.1),
            xi: C64::new(0.3, -2.0),
        };
        let xi = C64::new(0.3, -2.0);
        let s = general.sectors(&p()).unwrap();
        let expect = (1.0 - xi).norm_sqr() / (2.0 * (1.0 + xi.norm_sqr()));
        assert!((s.dark_norm() - expect).abs() < 1e-12);
    }

    #[test]
    fn rejects_front_past_origin() {
        let st = InitialStateN2::TwoPhotons {
            a: WavepacketSpec::rightward(0.005, 1.0, -1.0),
            b: WavepacketSpec::leftward(0.005, 1.0, 0.0),
        };
        assert!(st.sectors(&p()).is_err());
    }
}
