use serde::Deserialize;

use crate::error::{invalid, Error, Result};

/// Per-pool weights of the quadratic cost: `q` on levels, `r` on flows,
/// `rho` on flow increments.
#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct CostWeights {
    pub q: Vec<f64>,
    pub r: Vec<f64>,
    pub rho: Vec<f64>,
}

impl CostWeights {
    /// `q_i = q`, reservoir weight `r_n`, everything else zero.
    pub fn reservoir_only(n: usize, q: f64, r_n: f64) -> Self {
        let mut r = vec![0.0; n];
        if let Some(last) = r.last_mut() {
            *last = r_n;
        }
        Self {
            q: vec![q; n],
            r,
            rho: vec![0.0; n],
        }
    }

    pub fn len(&self) -> usize {
        self.q.len()
    }

    pub fn is_empty(&self) -> bool {
        self.q.is_empty()
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if self.q.len() != n || self.r.len() != n || self.rho.len() != n {
            return Err(Error::Dimension(format!(
                "weights have lengths q={}, r={}, rho={} for {n} pools",
                self.q.len(),
                self.r.len(),
                self.rho.len()
            )));
        }
        let all = self.q.iter().chain(&self.r).chain(&self.rho);
        if all.clone().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(invalid("weights", "must be finite and non-negative"));
        }
        Ok(())
    }

    /// Whether the weights fit the structured controller: only the
    /// reservoir flow is penalized and flow increments are free.
    pub fn structured_compatible(&self) -> Result<()> {
        let n = self.len();
        if self.rho.iter().any(|&w| w != 0.0) {
            return Err(invalid("rho", "the structured controller requires rho_i = 0"));
        }
        if self.r[..n.saturating_sub(1)].iter().any(|&w| w != 0.0) {
            return Err(invalid("r", "the structured controller requires r_i = 0 for i < N"));
        }
        if self.q.iter().any(|&w| w <= 0.0) || self.r.last().is_none_or(|&w| w <= 0.0) {
            return Err(invalid("q/r", "q_i and r_N must be positive"));
        }
        Ok(())
    }
}
