use std::f64::consts::PI;
use std::fmt::Write as _;

use num_complex::Complex64;

use crate::error::{invalid, Error, Result};

/// Cutoff used for every gate, rad/s.
pub const DEFAULT_CUTOFF: f64 = 3e-3;
/// One-minute sample period, s.
pub const SAMPLE_PERIOD: f64 = 60.0;

/// Transfer-function coefficients in powers of `z^-1`, `a[0] == 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct IirCoeffs {
    pub b: Vec<f64>,
    pub a: Vec<f64>,
    /// rad/s
    pub cutoff: f64,
    /// s
    pub sample_period: f64,
}

/// Digital Butterworth low-pass by the bilinear transform, pre-warped so the
/// analog prototype's -3 dB point lands on `cutoff`.
pub fn design_butterworth(order: usize, cutoff: f64, sample_period: f64) -> Result<IirCoeffs> {
    if order == 0 {
        return Err(invalid("order", "must be at least 1"));
    }
    if !(sample_period > 0.0 && sample_period.is_finite()) {
        return Err(invalid("sample_period", "must be positive"));
    }
    let nyquist = PI / sample_period;
    if !(cutoff > 0.0 && cutoff < nyquist) {
        return Err(invalid(
            "cutoff",
            format!("{cutoff} rad/s is outside (0, {nyquist}) rad/s"),
        ));
    }
    let half_t = sample_period / 2.0;
    let warped = half_t.recip() * (cutoff * half_t).tan();
    let n = order as f64;
    let poles: Vec<Complex64> = (0..order)
        .map(|k| {
            let theta = PI * (2.0 * k as f64 + n + 1.0) / (2.0 * n);
            let s = Complex64::from_polar(warped, theta);
            (1.0 + s * half_t) / (1.0 - s * half_t)
        })
        .collect();

    let a = real_poly_from_roots(&poles);
    let binom = binomial_row(order);
    let gain = a.iter().sum::<f64>() / binom.iter().sum::<f64>();
    let b = binom.iter().map(|c| gain * c).collect();
    Ok(IirCoeffs {
        b,
        a,
        cutoff,
        sample_period,
    })
}

/// Coefficients of `prod (1 - r z^-1)`; conjugate pairs make them real.
fn real_poly_from_roots(roots: &[Complex64]) -> Vec<f64> {
    let mut poly = vec![Complex64::new(1.0, 0.0)];
    for &r in roots {
        let mut next = vec![Complex64::new(0.0, 0.0); poly.len() + 1];
        for (i, &c) in poly.iter().enumerate() {
            next[i] += c;
            next[i + 1] -= c * r;
        }
        poly = next;
    }
    poly.into_iter().map(|c| c.re).collect()
}

fn binomial_row(n: usize) -> Vec<f64> {
    let mut row = vec![1.0];
    for k in 0..n {
        let prev = *row.last().unwrap();
        row.push(prev * (n - k) as f64 / (k + 1) as f64);
    }
    row
}

impl IirCoeffs {
    pub fn default_design() -> Self {
        design_butterworth(3, DEFAULT_CUTOFF, SAMPLE_PERIOD).expect("default cutoff below Nyquist")
    }

    pub fn order(&self) -> usize {
        self.a.len() - 1
    }

    pub fn dc_gain(&self) -> f64 {
        self.b.iter().sum::<f64>() / self.a.iter().sum::<f64>()
    }

    /// Frequency response at `omega` rad/s.
    pub fn response(&self, omega: f64) -> Complex64 {
        let w = omega * self.sample_period;
        let eval = |c: &[f64]| {
            c.iter()
                .enumerate()
                .map(|(k, &v)| v * Complex64::from_polar(1.0, -(k as f64) * w))
                .sum::<Complex64>()
        };
        eval(&self.b) / eval(&self.a)
    }

    pub fn magnitude_db(&self, omega: f64) -> f64 {
        20.0 * self.response(omega).norm().log10()
    }

    /// Plain-text form with 17 significant digits per coefficient.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "cutoff {:.16e}", self.cutoff);
        let _ = writeln!(s, "sample_period {:.16e}", self.sample_period);
        for (key, coeffs) in [("b", &self.b), ("a", &self.a)] {
            s.push_str(key);
            for c in coeffs.iter() {
                let _ = write!(s, " {c:.16e}");
            }
            s.push('\n');
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let (mut b, mut a, mut cutoff, mut period) = (None, None, None, None);
        for line in text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#')) {
            let mut parts = line.split_whitespace();
            let key = parts.next().unwrap_or_default();
            let values = parts
                .map(|p| p.parse::<f64>().map_err(|e| Error::Parse(format!("`{p}`: {e}"))))
                .collect::<Result<Vec<_>>>()?;
            match key {
                "b" => b = Some(values),
                "a" => a = Some(values),
                "cutoff" => cutoff = values.first().copied(),
                "sample_period" => period = values.first().copied(),
                other => return Err(Error::Parse(format!("unknown key `{other}`"))),
            }
        }
        let missing = |k: &str| Error::Parse(format!("missing `{k}`"));
        let coeffs = Self {
            b: b.ok_or_else(|| missing("b"))?,
            a: a.ok_or_else(|| missing("a"))?,
            cutoff: cutoff.ok_or_else(|| missing("cutoff"))?,
            sample_period: period.ok_or_else(|| missing("sample_period"))?,
        };
        if coeffs.a.len() != coeffs.b.len() || coeffs.a.is_empty() || coeffs.a[0] != 1.0 {
            return Err(Error::Parse("need equal-length b and a with a[0] = 1".into()));
        }
        Ok(coeffs)
    }
}

/// Direct-form II transposed realization.
#[derive(Debug, Clone, PartialEq)]
pub struct IirFilter {
    coeffs: IirCoeffs,
    state: Vec<f64>,
}

impl IirFilter {
    pub fn new(coeffs: IirCoeffs) -> Self {
        Self::at_rest(coeffs, 0.0)
    }

    /// Filter whose input and output have been `value` forever.
    pub fn at_rest(coeffs: IirCoeffs, value: f64) -> Self {
        let n = coeffs.order();
        let mut state = vec![0.0; n];
        let y = value * coeffs.dc_gain();
        for i in (0..n).rev() {
            let carry = if i + 1 < n { state[i + 1] } else { 0.0 };
            state[i] = coeffs.b[i + 1] * value - coeffs.a[i + 1] * y + carry;
        }
        Self { coeffs, state }
    }

    pub fn coeffs(&self) -> &IirCoeffs {
        &self.coeffs
    }

    pub fn step(&mut self, x: f64) -> f64 {
        let IirCoeffs { b, a, .. } = &self.coeffs;
        let n = self.state.len();
        let y = b[0] * x + self.state.first().copied().unwrap_or(0.0);
        for i in 0..n {
            let carry = if i + 1 < n { self.state[i + 1] } else { 0.0 };
            self.state[i] = b[i + 1] * x - a[i + 1] * y + carry;
        }
        y
    }

    pub fn filter(&mut self, xs: &[f64]) -> Vec<f64> {
        xs.iter().map(|&x| self.step(x)).collect()
    }
}
