//! Two excitations: eigenstate families, projection of two-photon and
//! photon-plus-excited-qubit states, time evolution and detection probabilities.

mod causal;
mod detection;
mod eigen;
mod spectral;
mod state;

pub use causal::{EvenEvenEvolution, SectorEvolution};
pub use detection::{
    default_t_end, detection_ratio, two_photon_probabilities, two_photon_rr_probability, DetectionRow,
    TwoPhotonProbabilities, DEFAULT_DETECTION_FRONT,
};
pub use eigen::{
    cpm, eigen_alpha, eigen_alpha_side, eigen_beta, eigen_phi, eigen_phi_edge, eigen_phi_with,
    run_jump_suite, JumpRelation, JumpSuiteReport, PmSign, Side,
};
pub use spectral::{
    drift_probe_state, grid_drift, n2_concurrence_trace, n2_populations, n2_project, n2_project_sectors, run_identity_suite,
    IdentityReport, KGrid2, QuadratureObservables, SpectralStateN2, DEFAULT_GRID2_NODES, IDENTITY_THRESHOLD,
};
pub use state::{InitialStateN2, Sectors, Source};

use serde::Serialize;

use crate::model::{
    assemble_density_matrix, competitor, wootters_concurrence, x_state_concurrence,
    QubitBasisPopulations,
};

/// Populations, the competing term 2 sqrt(ρ_β ρ_GS) and the concurrence over time.
#[derive(Debug, Clone, Default, Serialize)]
pub struct ConcurrenceTrace {
    pub times: Vec<f64>,
    pub pops: Vec<QubitBasisPopulations>,
    pub concurrence: Vec<f64>,
    pub competitor: Vec<f64>,
}

impl ConcurrenceTrace {
    /// Uses the X-state formula when ρ₋ and the (+,−) coherence vanish, the
    /// general Wootters construction otherwise.
    pub fn from_pops(times: Vec<f64>, pops: Vec<QubitBasisPopulations>) -> Self {
        let competitor_v: Vec<f64> = pops.iter().map(competitor).collect();
        let concurrence = pops.iter().map(concurrence_of).collect();
        ConcurrenceTrace {
            times,
            pops,
            concurrence,
            competitor: competitor_v,
        }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn peak(&self) -> f64 {
        self.concurrence.iter().copied().fold(0.0, f64::max)
    }

    pub fn rho_plus(&self) -> Vec<f64> {
        self.pops.iter().map(|p| p.rho_plus).collect()
    }

    /// Local maxima of C above `floor`, in time order.
    pub fn peaks_above(&self, floor: f64) -> Vec<(f64, f64)> {
        let c = &self.concurrence;
        let mut out = Vec::new();
        for i in 0..c.len() {
            let left = if i == 0 { f64::NEG_INFINITY } else { c[i - 1] };
            let right = if i + 1 == c.len() { f64::NEG_INFINITY } else { c[i + 1] };
            if c[i] > floor && c[i] >= left && c[i] > right {
                out.push((self.times[i], c[i]));
            }
        }
        out
    }
}

fn concurrence_of(p: &QubitBasisPopulations) -> f64 {
    if let Ok(c) = x_state_concurrence(p) {
        return c;
    }
    let clamped = QubitBasisPopulations {
        rho_gs: p.rho_gs.max(0.0),
        rho_plus: p.rho_plus.max(0.0),
        rho_minus: p.rho_minus.max(0.0),
        rho_beta: p.rho_beta.max(0.0),
        coh_pm: p.coh_pm,
    };
    match assemble_density_matrix(&clamped) {
        Ok(rho) => wootters_concurrence(&rho),
        Err(e) => {
            log::warn!("concurrence of invalid populations {p:?}: {e}");
            f64::NAN
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trace_uses_general_formula_off_x_regime() {
        let p = QubitBasisPopulations {
            rho_gs: 0.0,
            rho_plus: 0.0,
            rho_minus: 1.0,
            rho_beta: 0.0,
            coh_pm: Default::default(),
        };
        let t = ConcurrenceTrace::from_pops(vec![0.0], vec![p]);
        assert!((t.concurrence[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn peaks_are_local_maxima() {
        let mut t = ConcurrenceTrace::default();
        t.times = (0..7).map(|i| i as f64).collect();
        t.concurrence = vec![0.0, 0.2, 0.1, 0.0, 0.05, 0.3, 0.1];
        assert_eq!(t.peaks_above(0.01), vec![(1.0, 0.2), (5.0, 0.3)]);
    }
}
