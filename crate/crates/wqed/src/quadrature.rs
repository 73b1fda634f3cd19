//! Gauss–Legendre rules, panel rules on the time axis and the tangent-mapped
//! detuning grid used for spectral sums.

use std::f64::consts::PI;

use crate::error::{Result, WqedError};

/// Nodes and weights of the n-point Gauss–Legendre rule on [−1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "rule needs at least one node");
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Tricomi initial guess, then Newton on P_n
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, z);
        dp = if d != 0.0 { d } else { dp };
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

fn legendre(n: usize, z: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = z;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}

/// A composite rule: nodes and weights ready to be summed against.
#[derive(Debug, Clone, PartialEq)]
pub struct Rule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Rule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }
}

/// Panels between sorted breakpoints, each split so no panel is wider than `max_width`.
pub fn panels(breaks: &[f64], max_width: f64) -> Vec<(f64, f64)> {
    let mut b: Vec<f64> = breaks.iter().copied().filter(|v| v.is_finite()).collect();
    b.sort_by(f64::total_cmp);
    b.dedup_by(|a, c| (*a - *c).abs() <= 1e-12 * a.abs().max(1.0));
    let mut out = Vec::new();
    for pair in b.windows(2) {
        let (lo, hi) = (pair[0], pair[1]);
        let pieces = ((hi - lo) / max_width).ceil().max(1.0) as usize;
        let h = (hi - lo) / pieces as f64;
        for j in 0..pieces {
            let a = lo + j as f64 * h;
            let c = if j + 1 == pieces { hi } else { a + h };
            out.push((a, c));
        }
    }
    out
}

/// Gauss–Legendre of the given order on each panel.
pub fn panel_rule(panels: &[(f64, f64)], order: usize) -> Rule {
    let (x, w) = gauss_legendre(order);
    let mut nodes = Vec::with_capacity(panels.len() * order);
    let mut weights = Vec::with_capacity(panels.len() * order);
    for &(a, b) in panels {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (b + a);
        for (xi, wi) in x.iter().zip(&w) {
            nodes.push(mid + half * xi);
            weights.push(half * wi);
        }
    }
    Rule { nodes, weights }
}

/// Detuning grid δ = s·tan θ with composite Gauss–Legendre in θ ∈ (−π/2, π/2).
///
/// Lorentzian factors 1/(κ − iδ) become smooth bounded functions of θ, so the
/// grid captures the full norm of a pulse instead of truncating its tails.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentGrid {
    pub center: f64,
    pub scale: f64,
    pub rule: Rule,
}

pub const TANGENT_PANEL_ORDER: usize = 16;

impl TangentGrid {
    /// `n` nodes (rounded up to a multiple of the panel order) around `center`.
    pub fn new(center: f64, scale: f64, n: usize) -> Result<Self> {
        if !(scale.is_finite() && scale > 0.0) {
            return Err(WqedError::param("grid scale", "must be > 0"));
        }
        if n < TANGENT_PANEL_ORDER {
            return Err(WqedError::param(
                "grid",
                format!("need at least {TANGENT_PANEL_ORDER} nodes"),
            ));
        }
        let npan = n.div_ceil(TANGENT_PANEL_ORDER);
        let h = PI / npan as f64;
        let pans: Vec<(f64, f64)> = (0..npan)
            .map(|j| (-0.5 * PI + j as f64 * h, -0.5 * PI + (j + 1) as f64 * h))
            .collect();
        let theta = panel_rule(&pans, TANGENT_PANEL_ORDER);
        let mut nodes = Vec::with_capacity(theta.len());
        let mut weights = Vec::with_capacity(theta.len());
        for (&t, &w) in theta.nodes.iter().zip(&theta.weights) {
            let c = t.cos();
            nodes.push(center + scale * t.tan());
            weights.push(w * scale / (c * c));
        }
        Ok(TangentGrid {
            center,
            scale,
            rule: Rule { nodes, weights },
        })
    }

    pub fn len(&self) -> usize {
        self.rule.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rule.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.rule.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.rule.weights
    }
}

/// ∫∫ over s₁ < s₂ of f(s₁, s₂), with both variables on the given panels.
///
/// Pairs of distinct panels use the tensor rule on precomputed node data; each
/// diagonal panel is mapped to the square (Duffy) so a kink on s₁ = s₂ never sits
/// inside a tensor cell. Rows are reduced in a fixed order for reproducibility.
pub fn triangle_sum<P, M, F, const N: usize>(pans: &[(f64, f64)], order: usize, make: M, f: F) -> [f64; N]
where
    P: Send + Sync,
    M: Fn(f64) -> P + Sync,
    F: Fn(&P, &P) -> [f64; N] + Sync,
{
    use rayon::prelude::*;
    let (x, w) = gauss_legendre(order);
    let pts: Vec<Vec<(f64, P)>> = pans
        .par_iter()
        .map(|&(a, b)| {
            let h = 0.5 * (b - a);
            x.iter()
                .zip(&w)
                .map(|(xi, wi)| (wi * h, make(a + h * (xi + 1.0))))
                .collect()
        })
        .collect();
    let n = pans.len();
    let rows: Vec<[f64; N]> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut s = [0.0; N];
            for (wi, pi) in &pts[i] {
                let mut r = [0.0; N];
                for row in &pts[i + 1..] {
                    for (wj, pj) in row {
                        let v = f(pi, pj);
                        for k in 0..N {
                            r[k] += wj * v[k];
                        }
                    }
                }
                for k in 0..N {
                    s[k] += wi * r[k];
                }
            }
            let (a, b) = pans[i];
            let ha = 0.5 * (b - a);
            for (xi, wi) in x.iter().zip(&w) {
                let s1 = a + ha * (xi + 1.0);
                let p1 = make(s1);
                let hb = 0.5 * (b - s1);
                let mut r = [0.0; N];
                for (yj, wj) in x.iter().zip(&w) {
                    let v = f(&p1, &make(s1 + hb * (yj + 1.0)));
                    for k in 0..N {
                        r[k] += wj * hb * v[k];
                    }
                }
                for k in 0..N {
                    s[k] += wi * ha * r[k];
                }
            }
            s
        })
        .collect();
    let mut total = [0.0; N];
    for r in rows {
        for k in 0..N {
            total[k] += r[k];
        }
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gl_exact_for_polynomials() {
        for n in [1usize, 2, 5, 12, 16, 33] {
            let (x, w) = gauss_legendre(n);
            for p in 0..(2 * n) {
                let got: f64 = x.iter().zip(&w).map(|(xi, wi)| wi * xi.powi(p as i32)).sum();
                let exact = if p % 2 == 1 { 0.0 } else { 2.0 / (p as f64 + 1.0) };
                assert!((got - exact).abs() < 1e-13, "n={n} p={p}: {got}");
            }
        }
    }

    #[test]
    fn gl_nodes_sorted_inside_interval() {
        let (x, w) = gauss_legendre(20);
        assert!(x.windows(2).all(|p| p[0] < p[1]));
        assert!(x.iter().all(|v| v.abs() < 1.0));
        assert!(w.iter().all(|v| *v > 0.0));
    }

    #[test]
    fn panels_respect_breaks_and_width() {
        let p = panels(&[0.0, 3.0, 3.0, 1.0, 10.0], 2.0);
        assert_eq!(p.first().unwrap().0, 0.0);
        assert_eq!(p.last().unwrap().1, 10.0);
        assert!(p.iter().all(|(a, b)| b - a <= 2.0 + 1e-12 && b > a));
        assert!(p.iter().any(|(a, _)| *a == 1.0));
        assert!(p.iter().any(|(a, _)| *a == 3.0));
    }

    #[test]
    fn panel_rule_integrates_exponential() {
        let r = panel_rule(&panels(&[0.0, 50.0], 1.0), 10);
        let got = r.integrate(|t| (-0.3 * t).exp());
        let exact = (1.0 - (-15.0f64).exp()) / 0.3;
        assert!((got - exact).abs() < 1e-13);
    }

    #[test]
    fn triangle_sum_handles_diagonal_kink() {
        // |s₂ − s₁| e^{−s₁−s₂} over s₁ < s₂ on [0, ∞) is 1/4 · ... computed exactly below
        let pans = panels(&[0.0, 60.0], 0.7);
        let [got] = triangle_sum(&pans, 10, |s| s, |a, b| [(b - a).abs() * (-(a + b)).exp()]);
        // ∫₀^∞ ds₁ ∫_{s₁}^∞ (s₂−s₁) e^{−s₁−s₂} ds₂ = ∫ e^{−2s₁} ds₁ = 1/2
        assert!((got - 0.5).abs() < 1e-12, "{got}");
    }

    #[test]
    fn tangent_grid_integrates_lorentzian_norm() {
        // off-center Lorentzian with a width unrelated to the grid scale
        let g = TangentGrid::new(0.0, 0.01, 512).unwrap();
        let mu = 0.003;
        let d = 0.02;
        let s: f64 = g
            .nodes()
            .iter()
            .zip(g.weights())
            .map(|(x, w)| w * 2.0 * mu / (mu * mu + (x - d) * (x - d)))
            .sum();
        assert!((s / (2.0 * PI) - 1.0).abs() < 1e-10, "{}", s / (2.0 * PI));
        assert!(g.nodes().windows(2).all(|p| p[0] < p[1]));
    }
}
