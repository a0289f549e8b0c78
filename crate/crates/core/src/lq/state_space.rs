use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::plant::{NetworkModel, Plant, ThirdOrderPoolParams};
use crate::weights::CostWeights;

/// Location of one pool's states inside the stacked vector.
///
/// Each block holds the three states of the observable canonical form of
/// the level recursion followed by `tau` register states `u_i[t-1..t-tau]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PoolBlock {
    pub offset: usize,
    pub tau: usize,
}

impl PoolBlock {
    pub fn size(&self) -> usize {
        3 + self.tau
    }

    pub fn level_index(&self) -> usize {
        self.offset
    }
}

/// `x[t+1] = A x[t] + B u[t] + E d[t]`, `y = C x`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateSpaceModel {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub c: DMatrix<f64>,
    pub e: DMatrix<f64>,
    pub blocks: Vec<PoolBlock>,
    /// Offset of the `u[t-1]` states, when augmented.
    pub delta_u: Option<usize>,
    pools: Vec<ThirdOrderPoolParams>,
}

/// Quadratic cost `x'Qx + u'Ru + 2x'Nu`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticCost {
    pub q: DMatrix<f64>,
    pub r: DMatrix<f64>,
    pub n: DMatrix<f64>,
}

struct Coeffs {
    a: [f64; 3],
    b_in: [f64; 3],
    b_out: [f64; 3],
}

fn coeffs(p: &ThirdOrderPoolParams) -> Coeffs {
    let [a1, a2] = p.alpha;
    Coeffs {
        a: [1.0 + a1 + a2, -(2.0 * a1 + a2), a1],
        b_in: [p.b[0], -p.b[1], p.b[2]],
        b_out: [-p.c[0], p.c[1], -p.c[2]],
    }
}

/// Stacks the third-order pools into one state-space model and builds the
/// matching cost. Flow increments `(u_i[t] - u_i[t-1])^2` are expressed by
/// appending `u[t-1]` to the state when `include_delta_u` is set.
pub fn assemble_state_space(
    network: &NetworkModel,
    include_delta_u: bool,
    weights: &CostWeights,
) -> Result<(StateSpaceModel, QuadraticCost)> {
    let pools = network.third_order_pools()?;
    let n = pools.len();
    weights.validate(n)?;
    if !include_delta_u && weights.rho.iter().any(|&w| w != 0.0) {
        return Err(Error::Dimension(
            "nonzero rho needs the u[t-1] augmentation".into(),
        ));
    }
    let mut blocks = Vec::with_capacity(n);
    let mut offset = 0;
    for p in &pools {
        blocks.push(PoolBlock { offset, tau: p.tau });
        offset += 3 + p.tau;
    }
    let delta_u = include_delta_u.then_some(offset);
    let nx = offset + if include_delta_u { n } else { 0 };

    let mut a = DMatrix::zeros(nx, nx);
    let mut b = DMatrix::zeros(nx, n);
    let mut c = DMatrix::zeros(n, nx);
    let mut e = DMatrix::zeros(nx, n);
    for (i, (p, blk)) in pools.iter().zip(&blocks).enumerate() {
        let k = coeffs(p);
        let o = blk.offset;
        c[(i, o)] = 1.0;
        for row in 0..3 {
            a[(o + row, o)] = k.a[row];
            if row < 2 {
                a[(o + row, o + row + 1)] = 1.0;
            }
            if p.tau == 0 {
                b[(o + row, i)] += k.b_in[row];
            } else {
                a[(o + row, o + 2 + p.tau)] += k.b_in[row];
            }
            if i > 0 {
                b[(o + row, i - 1)] = k.b_out[row];
            }
            e[(o + row, i)] = -k.b_out[row];
        }
        if p.tau > 0 {
            b[(o + 3, i)] = 1.0;
            for j in 1..p.tau {
                a[(o + 3 + j, o + 2 + j)] = 1.0;
            }
        }
    }
    let mut q = DMatrix::zeros(nx, nx);
    let mut r = DMatrix::from_diagonal(&DVector::from_column_slice(&weights.r));
    let mut cross = DMatrix::zeros(nx, n);
    for (i, blk) in blocks.iter().enumerate() {
        q[(blk.offset, blk.offset)] = weights.q[i];
    }
    if let Some(du) = delta_u {
        for i in 0..n {
            b[(du + i, i)] = 1.0;
            let rho = weights.rho[i];
            q[(du + i, du + i)] = rho;
            r[(i, i)] += rho;
            cross[(du + i, i)] = -rho;
        }
    }
    Ok((
        StateSpaceModel {
            a,
            b,
            c,
            e,
            blocks,
            delta_u,
            pools,
        },
        QuadraticCost { q, r, n: cross },
    ))
}

impl StateSpaceModel {
    pub fn n_states(&self) -> usize {
        self.a.nrows()
    }

    pub fn n_inputs(&self) -> usize {
        self.b.ncols()
    }

    pub fn step(&self, x: &DVector<f64>, u: &DVector<f64>, d: &DVector<f64>) -> DVector<f64> {
        &self.a * x + &self.b * u + &self.e * d
    }

    pub fn output(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.c * x
    }

    /// Disturbance injection `v = E d`.
    pub fn injection(&self, d: &DVector<f64>) -> DVector<f64> {
        &self.e * d
    }

    /// State vector equivalent to the histories held by `plant`.
    pub fn state_from_plant(&self, plant: &Plant) -> Result<DVector<f64>> {
        let states = plant.states();
        if states.len() != self.blocks.len() {
            return Err(Error::Dimension(format!(
                "plant has {} pools, model {}",
                states.len(),
                self.blocks.len()
            )));
        }
        let mut x = DVector::zeros(self.n_states());
        for (i, ((s, blk), p)) in states.iter().zip(&self.blocks).zip(&self.pools).enumerate() {
            let k = coeffs(p);
            let o = blk.offset;
            let y = |lag: usize| s.level.lag(lag);
            let ue = |lag: usize| s.inflow.lag(p.tau + lag - 1);
            let w = |lag: usize| -> Result<f64> { Ok(s.outflow.lag(lag - 1)? - s.offtake.lag(lag - 1)?) };
            x[o] = y(0)?;
            x[o + 1] = k.a[1] * y(1)? + k.a[2] * y(2)? + k.b_in[1] * ue(1)? + k.b_in[2] * ue(2)?
                + k.b_out[1] * w(1)?
                + k.b_out[2] * w(2)?;
            x[o + 2] = k.a[2] * y(1)? + k.b_in[2] * ue(1)? + k.b_out[2] * w(1)?;
            for j in 0..p.tau {
                x[o + 3 + j] = s.inflow.lag(j)?;
            }
            if let Some(du) = self.delta_u {
                x[du + i] = s.inflow.lag(0)?;
            }
        }
        Ok(x)
    }
}
