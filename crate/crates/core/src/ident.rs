//! Delay fitting of the first-order synthesis model against the low-pass
//! filtered third-order pools.

use std::io::Write;
use std::ops::RangeInclusive;

use crate::error::{invalid, Result};
use crate::filters::{IirCoeffs, IirFilter};
use crate::plant::{step_third_order, DesignDelays, ParamTable, PoolModel, PoolSimState, ThirdOrderPoolParams};

/// Switch times of the empty-then-fill test signal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Deserialize)]
pub struct TestSignal {
    pub t1: usize,
    pub t2: usize,
    pub t3: usize,
    pub length: usize,
}

impl Default for TestSignal {
    fn default() -> Self {
        Self {
            t1: 100,
            t2: 300,
            t3: 400,
            length: 600,
        }
    }
}

impl TestSignal {
    pub fn samples(&self) -> Result<Vec<f64>> {
        make_test_signal(self.t1, self.t2, self.t3, self.length)
    }
}

/// `1` before `t1`, `0` until `t2`, `-1` until `t3`, then `0`.
pub fn make_test_signal(t1: usize, t2: usize, t3: usize, length: usize) -> Result<Vec<f64>> {
    if !(0 < t1 && t1 < t2 && t2 < t3 && t3 <= length) {
        return Err(invalid(
            "test signal",
            format!("need 0 < t1 < t2 < t3 <= length, got {t1}, {t2}, {t3}, {length}"),
        ));
    }
    Ok((0..length)
        .map(|t| match t {
            t if t < t1 => 1.0,
            t if t < t2 => 0.0,
            t if t < t3 => -1.0,
            _ => 0.0,
        })
        .collect())
}

/// Level of a third-order pool from rest, `y[0..len)`.
pub fn third_order_response(p: &ThirdOrderPoolParams, inflow: &[f64], outflow: &[f64]) -> Result<Vec<f64>> {
    let len = inflow.len().max(outflow.len());
    let mut state = PoolSimState::for_third_order(p, 0.0);
    let mut y = Vec::with_capacity(len);
    for t in 0..len {
        y.push(state.y());
        let u_in = inflow.get(t).copied().unwrap_or(0.0);
        let u_out = outflow.get(t).copied().unwrap_or(0.0);
        step_third_order(&mut state, p, u_in, u_out, 0.0)?;
    }
    Ok(y)
}

/// `y[t+1] = y[t] + b u_in[t - lag_in] - c u_out[t - lag_out]` from rest.
pub fn first_order_response(b: f64, c: f64, lag_in: usize, lag_out: usize, inflow: &[f64], outflow: &[f64]) -> Vec<f64> {
    let len = inflow.len().max(outflow.len());
    let at = |x: &[f64], t: usize, lag: usize| if t >= lag { x.get(t - lag).copied().unwrap_or(0.0) } else { 0.0 };
    let mut y = Vec::with_capacity(len);
    let mut level = 0.0;
    for t in 0..len {
        y.push(level);
        level += b * at(inflow, t, lag_in) - c * at(outflow, t, lag_out);
    }
    y
}

pub fn low_pass(coeffs: &IirCoeffs, x: &[f64]) -> Vec<f64> {
    IirFilter::new(coeffs.clone()).filter(x)
}

/// Squared error over the reference, divided by the reference energy.
pub fn normalized_sse(reference: &[f64], model: &[f64]) -> f64 {
    let err: f64 = reference.iter().zip(model).map(|(a, b)| (a - b) * (a - b)).sum();
    let energy: f64 = reference.iter().map(|a| a * a).sum();
    if energy == 0.0 {
        err
    } else {
        err / energy
    }
}

/// Objective value of every candidate delay and the minimizer.
#[derive(Debug, Clone, PartialEq)]
pub struct DelayFit {
    pub best: usize,
    pub errors: Vec<(usize, f64)>,
}

impl DelayFit {
    pub fn objective(&self, delay: usize) -> Option<f64> {
        self.errors.iter().find(|(d, _)| *d == delay).map(|&(_, e)| e)
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "delay,error")?;
        for (d, e) in &self.errors {
            writeln!(out, "{d},{e:e}")?;
        }
        Ok(())
    }
}

/// Exhaustive search; ties go to the smaller delay.
pub fn fit_delay<F>(candidates: RangeInclusive<usize>, mut objective: F) -> Result<DelayFit>
where
    F: FnMut(usize) -> Result<f64>,
{
    if candidates.is_empty() {
        return Err(invalid("candidates", "empty delay range"));
    }
    let mut errors = Vec::new();
    let mut best = (usize::MAX, f64::INFINITY);
    for d in candidates {
        let e = objective(d)?;
        if e < best.1 {
            best = (d, e);
        }
        errors.push((d, e));
    }
    if best.0 == usize::MAX {
        return Err(invalid("objective", "no candidate produced a finite error"));
    }
    Ok(DelayFit { best: best.0, errors })
}

/// Third-order reference together with the first-order gains fitted to it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdentPool {
    pub third: ThirdOrderPoolParams,
    pub b: f64,
    pub c: f64,
}

/// Common filter delay: outflow test on every pool, per-pool normalized
/// errors summed.
pub fn fit_common_delay(
    pools: &[IdentPool],
    filter: &IirCoeffs,
    signal: &[f64],
    candidates: RangeInclusive<usize>,
) -> Result<DelayFit> {
    let filtered = low_pass(filter, signal);
    let zeros = vec![0.0; signal.len()];
    let refs = pools
        .iter()
        .map(|p| third_order_response(&p.third, &zeros, &filtered))
        .collect::<Result<Vec<_>>>()?;
    fit_delay(candidates, |tau_bar| {
        Ok(pools
            .iter()
            .zip(&refs)
            .map(|(p, r)| normalized_sse(r, &first_order_response(p.b, p.c, 0, tau_bar, &zeros, signal)))
            .sum())
    })
}

/// Transport delay of one pool with `tau_bar` fixed: inflow test.
pub fn fit_pool_delay(
    pool: &IdentPool,
    tau_bar: usize,
    filter: &IirCoeffs,
    signal: &[f64],
    candidates: RangeInclusive<usize>,
) -> Result<DelayFit> {
    let filtered = low_pass(filter, signal);
    let zeros = vec![0.0; signal.len()];
    let reference = third_order_response(&pool.third, &filtered, &zeros)?;
    fit_delay(candidates, |tau| {
        Ok(normalized_sse(
            &reference,
            &first_order_response(pool.b, pool.c, tau + tau_bar, 0, signal, &zeros),
        ))
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct IdentResult {
    pub common: DelayFit,
    pub pools: Vec<(PoolModel, DelayFit)>,
}

impl IdentResult {
    pub fn delays(&self) -> DesignDelays {
        let tau = |m| self.pools.iter().find(|(p, _)| *p == m).map_or(0, |(_, f)| f.best);
        DesignDelays {
            tau_bar: self.common.best,
            tau_one: tau(PoolModel::One),
            tau_two: tau(PoolModel::Two),
        }
    }
}

/// Two-stage fit of both pool models in `table`.
pub fn identify(
    table: &ParamTable,
    filter: &IirCoeffs,
    signal: &TestSignal,
    candidates: RangeInclusive<usize>,
) -> Result<IdentResult> {
    let samples = signal.samples()?;
    let pools = [PoolModel::One, PoolModel::Two]
        .into_iter()
        .map(|m| {
            let f = table.first_order_raw(m, 0)?;
            Ok((
                m,
                IdentPool {
                    third: table.third_order(m)?,
                    b: f.b,
                    c: f.c,
                },
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    let all: Vec<IdentPool> = pools.iter().map(|(_, p)| *p).collect();
    let common = fit_common_delay(&all, filter, &samples, candidates.clone())?;
    let fits = pools
        .iter()
        .map(|(m, p)| Ok((*m, fit_pool_delay(p, common.best, filter, &samples, candidates.clone())?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(IdentResult { common, pools: fits })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn signal_shape() {
        let s = make_test_signal(100, 300, 400, 600).unwrap();
        assert_eq!(s.len(), 600);
        assert!(s[..100].iter().all(|&x| x == 1.0));
        assert!(s[100..300].iter().all(|&x| x == 0.0));
        assert!(s[300..400].iter().all(|&x| x == -1.0));
        assert!(s[400..].iter().all(|&x| x == 0.0));
        assert_eq!(s[..400].iter().sum::<f64>(), 100.0 - 100.0);
        let short = make_test_signal(1, 5, 9, 12).unwrap();
        assert_eq!(short.iter().sum::<f64>(), 1.0 - 4.0);
        assert_eq!(short[0], 1.0);
        assert_eq!(short[1], 0.0);
    }

    #[test]
    fn unordered_times_rejected() {
        assert!(make_test_signal(0, 2, 3, 5).is_err());
        assert!(make_test_signal(3, 2, 4, 5).is_err());
        assert!(make_test_signal(1, 2, 6, 5).is_err());
    }

    #[test]
    fn self_fit_recovers_delay() {
        let s = make_test_signal(40, 90, 120, 200).unwrap();
        let z = vec![0.0; s.len()];
        let reference = first_order_response(0.1, 0.05, 7, 0, &s, &z);
        let fit = fit_delay(0..=20, |d| Ok(normalized_sse(&reference, &first_order_response(0.1, 0.05, d, 0, &s, &z)))).unwrap();
        assert_eq!(fit.best, 7);
        assert_eq!(fit.objective(7), Some(0.0));
    }

    #[test]
    fn shift_moves_the_fit() {
        let s = make_test_signal(40, 90, 120, 300).unwrap();
        let filter = IirCoeffs::default_design();
        let z = vec![0.0; s.len()];
        let pool = ParamTable::default().third_order(PoolModel::One).unwrap();
        let base = third_order_response(&pool, &low_pass(&filter, &s), &z).unwrap();
        let fit_for = |shift: usize| {
            let mut reference = vec![0.0; shift];
            reference.extend_from_slice(&base[..base.len() - shift]);
            fit_delay(0..=40, |d| Ok(normalized_sse(&reference, &first_order_response(0.069, 0.063, d, 0, &s, &z))))
                .unwrap()
                .best
        };
        let zero = fit_for(0);
        for k in [1, 3, 8] {
            assert_eq!(fit_for(k), zero + k);
        }
    }

    #[test]
    fn optimum_is_exhaustive() {
        let fit = fit_delay(0..=9, |d| Ok(((d as f64) - 4.4).powi(2))).unwrap();
        assert_eq!(fit.best, 4);
        assert!(fit.errors.iter().all(|&(_, e)| e >= fit.objective(4).unwrap()));
    }

    #[test]
    fn ties_go_to_smaller_delay() {
        let fit = fit_delay(0..=9, |d| Ok(((d as f64) - 4.5).abs())).unwrap();
        assert_eq!(fit.best, 4);
    }

    #[test]
    fn empty_range_rejected() {
        #[allow(clippy::reversed_empty_ranges)]
        let r = 5..=4;
        assert!(fit_delay(r, |_| Ok(0.0)).is_err());
    }

    #[test]
    fn csv_has_one_row_per_candidate() {
        let fit = fit_delay(0..=3, |d| Ok(d as f64)).unwrap();
        let mut buf = Vec::new();
        fit.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 5);
    }
}
