use std::collections::VecDeque;

use nalgebra::DMatrix;

use super::lsq::solve_constrained_ls;
use super::AcceleratorConfig;
use crate::error::{Result, SchwarzError};

/// Sliding window of iterates `g_i`, images `T(g_i)` and residuals
/// `f_i = T(g_i) - g_i`, oldest first.
#[derive(Clone, Debug, PartialEq)]
pub struct ResidualHistory {
    g_history: VecDeque<Vec<f64>>,
    t_history: VecDeque<Vec<f64>>,
    f_history: VecDeque<Vec<f64>>,
    capacity: usize,
}

impl ResidualHistory {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity >= 1);
        Self {
            g_history: VecDeque::with_capacity(capacity),
            t_history: VecDeque::with_capacity(capacity),
            f_history: VecDeque::with_capacity(capacity),
            capacity,
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.g_history.len()
    }

    pub fn is_empty(&self) -> bool {
        self.g_history.is_empty()
    }

    pub fn clear(&mut self) {
        self.g_history.clear();
        self.t_history.clear();
        self.f_history.clear();
    }

    /// Appends `(g, T(g))`, evicting the oldest entry when full.
    pub fn push(&mut self, g: &[f64], tg: &[f64]) -> Result<()> {
        if g.len() != tg.len() {
            return Err(SchwarzError::LayoutMismatch {
                expected: g.len(),
                got: tg.len(),
            });
        }
        if let Some(first) = self.g_history.front() {
            if first.len() != g.len() {
                return Err(SchwarzError::LayoutMismatch {
                    expected: first.len(),
                    got: g.len(),
                });
            }
        }
        if self.len() == self.capacity {
            self.g_history.pop_front();
            self.t_history.pop_front();
            self.f_history.pop_front();
        }
        self.g_history.push_back(g.to_vec());
        self.t_history.push_back(tg.to_vec());
        self.f_history
            .push_back(tg.iter().zip(g).map(|(t, x)| t - x).collect());
        Ok(())
    }

    pub fn g(&self, i: usize) -> &[f64] {
        &self.g_history[i]
    }

    pub fn f(&self, i: usize) -> &[f64] {
        &self.f_history[i]
    }

    /// Residual matrix of the newest `cols` entries, oldest column first.
    pub fn residual_matrix(&self, cols: usize) -> DMatrix<f64> {
        let start = self.len() - cols;
        let n = self.f_history.front().map_or(0, |f| f.len());
        DMatrix::from_fn(n, cols, |r, c| self.f_history[start + c][r])
    }
}

/// Anderson mixing over the newest `m_k + 1` entries (fewer if the history is short).
///
/// Returns the new iterate and the mixing coefficients, oldest first.
pub fn update_anderson(
    history: &ResidualHistory,
    rho: f64,
    m_k: usize,
) -> Result<(Vec<f64>, Vec<f64>)> {
    if history.is_empty() {
        return Err(SchwarzError::Accelerator("empty Anderson history".into()));
    }
    let cols = (m_k + 1).min(history.len());
    let start = history.len() - cols;
    let alpha = solve_constrained_ls(&history.residual_matrix(cols))?;

    let n = history.g(start).len();
    let mut g_mix = vec![0.0; n];
    let mut t_mix = vec![0.0; n];
    for (c, a) in alpha.iter().enumerate() {
        let g = &history.g_history[start + c];
        let t = &history.t_history[start + c];
        for i in 0..n {
            g_mix[i] += a * g[i];
            t_mix[i] += a * t[i];
        }
    }
    let next = g_mix
        .iter()
        .zip(&t_mix)
        .map(|(g, t)| (1.0 - rho) * g + rho * t)
        .collect();
    Ok((next, alpha.iter().cloned().collect()))
}

/// Memory depth for iteration `k`: shrink to `m_bar` once the relative error
/// has stagnated, otherwise grow with `k` up to `m_and`.
pub fn adapt_memory(
    k: usize,
    e_rel_curr: f64,
    e_rel_prev: f64,
    config: &AcceleratorConfig,
) -> usize {
    if k > 2 && (e_rel_curr - e_rel_prev).abs() < config.eps_and {
        config.m_bar.min(config.m_and)
    } else {
        k.min(config.m_and)
    }
}

/// Geometric weights `|l|^j / sum_i |l|^i` for `j = 0..=m_k`.
pub fn predict_geometric_alpha(ell_max: f64, m_k: usize) -> Vec<f64> {
    let l = ell_max.abs();
    let w: Vec<f64> = (0..=m_k).map(|j| l.powi(j as i32)).collect();
    let s: f64 = w.iter().sum();
    w.into_iter().map(|v| v / s).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::accel::update_classical;
    use approx::assert_relative_eq;

    #[test]
    fn single_column_is_classical() {
        let mut h = ResidualHistory::new(4);
        h.push(&[0.3, -1.0], &[0.7, 2.0]).unwrap();
        let (next, alpha) = update_anderson(&h, 0.35, 0).unwrap();
        assert_eq!(alpha, vec![1.0]);
        assert_eq!(next, update_classical(&[0.3, -1.0], &[0.7, 2.0], 0.35));
        // a short history caps the column count as well
        let (next, _) = update_anderson(&h, 0.35, 5).unwrap();
        assert_eq!(next, update_classical(&[0.3, -1.0], &[0.7, 2.0], 0.35));
    }

    #[test]
    fn affine_map_solved_in_one_mixing_step() {
        for &x in &[0.1, 0.5, 0.7, 0.9] {
            let t = |g: f64| (1.0 - 1.0 / x) * g + 1.0;
            let mut h = ResidualHistory::new(2);
            let g1 = 0.3;
            h.push(&[g1], &[t(g1)]).unwrap();
            let (g2, _) = update_anderson(&h, 1.0, 1).unwrap();
            h.push(&g2, &[t(g2[0])]).unwrap();
            let (g3, alpha) = update_anderson(&h, 1.0, 1).unwrap();
            assert_relative_eq!(g3[0], x, epsilon = 1e-12);
            assert_relative_eq!(alpha[0], (g2[0] - x) / (g2[0] - g1), epsilon = 1e-10);
        }
    }

    #[test]
    fn fixed_point_history_is_stable() {
        let mut h = ResidualHistory::new(3);
        for _ in 0..3 {
            h.push(&[0.5, 0.25], &[0.5, 0.25]).unwrap();
        }
        let (next, _) = update_anderson(&h, 0.6, 2).unwrap();
        assert_relative_eq!(next[0], 0.5, epsilon = 1e-15);
        assert_relative_eq!(next[1], 0.25, epsilon = 1e-15);
    }

    #[test]
    fn eviction_keeps_newest() {
        let mut h = ResidualHistory::new(2);
        for i in 0..5 {
            h.push(&[i as f64], &[0.0]).unwrap();
        }
        assert_eq!(h.len(), 2);
        assert_eq!(h.g(0), &[3.0]);
        assert_eq!(h.g(1), &[4.0]);
        assert!(h.push(&[1.0, 2.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn memory_rule() {
        let mut c = AcceleratorConfig::anderson(1.0, 20);
        c.memory_adaptation = true;
        c.m_bar = 3;
        c.eps_and = 1e-5;
        assert_eq!(adapt_memory(5, 1e-3, 1e-3 + 1e-7, &c), 3);
        assert_eq!(adapt_memory(2, 1e-3, 1e-3, &c), 2);
        assert_eq!(adapt_memory(10, 1e-1, 9e-2, &c), 10);
        assert_eq!(adapt_memory(30, 1.0, 0.0, &c), 20);
    }

    #[test]
    fn geometric_weights() {
        let a = predict_geometric_alpha(1.0, 2);
        for v in a {
            assert_relative_eq!(v, 1.0 / 3.0, epsilon = 1e-15);
        }
        let a = predict_geometric_alpha(0.5, 1);
        assert_relative_eq!(a[0], 2.0 / 3.0, epsilon = 1e-15);
        assert_relative_eq!(a[1], 1.0 / 3.0, epsilon = 1e-15);
        assert_eq!(predict_geometric_alpha(0.3, 0), vec![1.0]);
    }
}
