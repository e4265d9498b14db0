//! One-dimensional quadrature grids and compensated summation.

use crate::error::{Error, Result};
use crate::special::gauss_legendre;

/// Quadrature nodes and positive weights along one angular axis.
///
/// A grid is a union of disjoint uniform patches, each integrated with the
/// composite trapezoid rule. A single patch is the ordinary uniform grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid1D {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    patches: Vec<(f64, f64)>,
}

impl Grid1D {
    /// Uniform trapezoid grid with `n` points on `[min, max]`.
    pub fn uniform(min: f64, max: f64, n: usize) -> Result<Self> {
        Self::composite(&[(min, max)], n)
    }

    /// Union of uniform patches. Overlapping or touching intervals are merged
    /// first; `n_total` points are then shared out in proportion to length
    /// (at least 2 per patch).
    pub fn composite(intervals: &[(f64, f64)], n_total: usize) -> Result<Self> {
        if intervals.is_empty() {
            return Err(Error::invalid("grid needs at least one interval"));
        }
        for &(lo, hi) in intervals {
            if !(lo.is_finite() && hi.is_finite() && hi > lo) {
                return Err(Error::invalid(format!("bad grid interval [{lo}, {hi}]")));
            }
        }
        let mut sorted = intervals.to_vec();
        sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut patches: Vec<(f64, f64)> = Vec::new();
        for (lo, hi) in sorted {
            match patches.last_mut() {
                Some(last) if lo <= last.1 => last.1 = last.1.max(hi),
                _ => patches.push((lo, hi)),
            }
        }
        if n_total < 2 * patches.len() {
            return Err(Error::invalid(format!(
                "{n_total} points cannot cover {} patches",
                patches.len()
            )));
        }
        let total_len: f64 = patches.iter().map(|p| p.1 - p.0).sum();
        let mut counts: Vec<usize> = patches
            .iter()
            .map(|p| (((p.1 - p.0) / total_len) * n_total as f64).floor().max(2.0) as usize)
            .collect();
        // hand out the remainder from the first patch on
        let mut assigned: usize = counts.iter().sum();
        let mut i = 0;
        let n_patches = counts.len();
        while assigned < n_total {
            counts[i % n_patches] += 1;
            assigned += 1;
            i += 1;
        }
        while assigned > n_total {
            let j = counts.iter().enumerate().max_by_key(|c| *c.1).map(|c| c.0).unwrap();
            counts[j] -= 1;
            assigned -= 1;
        }

        let mut nodes = Vec::with_capacity(n_total);
        let mut weights = Vec::with_capacity(n_total);
        for (&(lo, hi), &n) in patches.iter().zip(&counts) {
            let h = (hi - lo) / (n - 1) as f64;
            for k in 0..n {
                nodes.push(if k == n - 1 { hi } else { lo + k as f64 * h });
                weights.push(if k == 0 || k == n - 1 { 0.5 * h } else { h });
            }
        }
        Ok(Self { nodes, weights, patches })
    }

    /// Symmetric uniform grid `[-half_width, half_width]`.
    pub fn symmetric(half_width: f64, n: usize) -> Result<Self> {
        Self::uniform(-half_width, half_width, n)
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn patches(&self) -> &[(f64, f64)] {
        &self.patches
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn min(&self) -> f64 {
        self.nodes[0]
    }

    pub fn max(&self) -> f64 {
        self.nodes[self.nodes.len() - 1]
    }

    /// Total covered length (sum of patch lengths); equals the weight sum.
    pub fn covered_length(&self) -> f64 {
        self.patches.iter().map(|p| p.1 - p.0).sum()
    }

    /// Largest node spacing inside any patch.
    pub fn max_spacing(&self) -> f64 {
        let same_patch = |a: f64, b: f64| self.patches.iter().any(|p| a >= p.0 && b <= p.1);
        self.nodes
            .windows(2)
            .filter(|x| same_patch(x[0], x[1]))
            .map(|x| x[1] - x[0])
            .fold(0.0, f64::max)
    }

    /// Same patch layout with twice the number of intervals in each patch.
    pub fn refined(&self) -> Self {
        let mut nodes = Vec::new();
        let mut weights = Vec::new();
        let mut start = 0;
        for &(lo, hi) in &self.patches {
            let n = self.nodes[start..].iter().take_while(|&&x| x <= hi).count();
            start += n;
            let m = 2 * (n - 1) + 1;
            let h = (hi - lo) / (m - 1) as f64;
            for k in 0..m {
                nodes.push(if k == m - 1 { hi } else { lo + k as f64 * h });
                weights.push(if k == 0 || k == m - 1 { 0.5 * h } else { h });
            }
        }
        Self { nodes, weights, patches: self.patches.clone() }
    }

    /// `Σ wᵢ f(i)` for values already tabulated on the nodes.
    pub fn integrate_indexed(&self, f: impl Fn(usize) -> f64) -> f64 {
        compensated_sum(self.weights.iter().enumerate().map(|(i, &w)| w * f(i)))
    }

    /// ∫ f over the grid.
    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        compensated_sum(self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)))
    }
}

/// Neumaier-compensated sum; independent of how the caller chunked the work
/// as long as the iteration order is fixed.
pub fn compensated_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut comp = 0.0;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Composite Gauss–Legendre rule over the given breakpoints.
pub(crate) fn integrate_panels(breaks: &[f64], order: usize, f: impl Fn(f64) -> f64) -> f64 {
    let (x, w) = gauss_legendre(order);
    compensated_sum(breaks.windows(2).flat_map(|p| {
        let mid = 0.5 * (p[0] + p[1]);
        let half = 0.5 * (p[1] - p[0]);
        let f = &f;
        x.iter().zip(&w).map(move |(xi, wi)| wi * half * f(mid + half * xi))
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_weights_sum_to_length() {
        let g = Grid1D::uniform(-1.0, 3.0, 101).unwrap();
        assert_eq!(g.len(), 101);
        assert!((g.weights().iter().sum::<f64>() - 4.0).abs() < 1e-14);
        assert!(g.weights().iter().all(|w| *w > 0.0));
        assert_eq!(g.min(), -1.0);
        assert_eq!(g.max(), 3.0);
    }

    #[test]
    fn composite_merges_overlapping_patches() {
        let g = Grid1D::composite(&[(0.0, 1.0), (0.5, 2.0), (5.0, 6.0)], 300).unwrap();
        assert_eq!(g.patches(), &[(0.0, 2.0), (5.0, 6.0)]);
        assert_eq!(g.len(), 300);
        assert!((g.weights().iter().sum::<f64>() - 3.0).abs() < 1e-13);
        assert!((g.covered_length() - 3.0).abs() < 1e-15);
        assert!(g.nodes().windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn rejects_degenerate_intervals() {
        assert!(Grid1D::uniform(1.0, 1.0, 10).is_err());
        assert!(Grid1D::uniform(0.0, f64::NAN, 10).is_err());
        assert!(Grid1D::uniform(0.0, 1.0, 1).is_err());
    }

    #[test]
    fn trapezoid_is_spectral_for_gaussians() {
        let g = Grid1D::symmetric(10.0, 81).unwrap();
        let v = g.integrate(|x| (-x * x).exp());
        assert!((v - std::f64::consts::PI.sqrt()).abs() < 1e-13);
    }

    #[test]
    fn refinement_halves_spacing() {
        let g = Grid1D::composite(&[(-2.0, -1.0), (1.0, 2.0)], 22).unwrap();
        let r = g.refined();
        assert_eq!(r.len(), 2 * (g.len() - 2) + 2);
        assert!((r.max_spacing() - 0.5 * g.max_spacing()).abs() < 1e-15);
        assert!((r.weights().iter().sum::<f64>() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let v = [1e16, 1.0, -1e16, 1.0];
        assert_eq!(compensated_sum(v), 2.0);
    }

    #[test]
    fn panels_integrate_oscillatory_function() {
        let breaks: Vec<f64> = (0..=40).map(|k| k as f64 * std::f64::consts::FRAC_PI_2).collect();
        let v = integrate_panels(&breaks, 12, |x| x.sin().powi(2));
        assert!((v - 10.0 * std::f64::consts::PI).abs() < 1e-12);
    }
}
