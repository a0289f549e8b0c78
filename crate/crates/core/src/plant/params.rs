use serde::Deserialize;

use crate::error::{invalid, Error, Result};

/// Coefficients of the third-order pool recursion.
///
/// `b` multiplies the delayed inflow, `c` the outflow net of the off-take,
/// `alpha` the wave terms. Signs follow the printed recursion: `b[1]` and
/// `c[1]` enter with the opposite sign of their neighbours.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThirdOrderPoolParams {
    pub b: [f64; 3],
    pub c: [f64; 3],
    pub alpha: [f64; 2],
    /// Transport delay in samples.
    pub tau: usize,
}

impl ThirdOrderPoolParams {
    pub fn validate(&self) -> Result<()> {
        let all = self.b.iter().chain(&self.c).chain(&self.alpha);
        if all.clone().any(|v| !v.is_finite()) {
            return Err(invalid("third-order coefficients", "must be finite"));
        }
        Ok(())
    }
}

/// Integrator-with-delay model used for controller synthesis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FirstOrderPoolParams {
    pub b: f64,
    pub c: f64,
    pub tau: usize,
    /// Extra delay shared by every pool, standing in for the low-pass filter.
    pub tau_bar: usize,
}

impl FirstOrderPoolParams {
    pub fn new(b: f64, c: f64, tau: usize, tau_bar: usize) -> Result<Self> {
        let p = Self { b, c, tau, tau_bar };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.b > 0.0 && self.b.is_finite()) {
            return Err(invalid("b", format!("must be positive, got {}", self.b)));
        }
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(invalid("c", format!("must be positive, got {}", self.c)));
        }
        Ok(())
    }
}

/// The two measured pools the networks are built from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PoolModel {
    One,
    Two,
}

impl PoolModel {
    pub fn number(self) -> u8 {
        match self {
            PoolModel::One => 1,
            PoolModel::Two => 2,
        }
    }
}

/// Delays of the first-order synthesis model, as produced by the delay fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DesignDelays {
    pub tau_bar: usize,
    pub tau_one: usize,
    pub tau_two: usize,
}

impl Default for DesignDelays {
    fn default() -> Self {
        Self {
            tau_bar: 10,
            tau_one: 2,
            tau_two: 15,
        }
    }
}

impl DesignDelays {
    pub fn tau(&self, model: PoolModel) -> usize {
        match model {
            PoolModel::One => self.tau_one,
            PoolModel::Two => self.tau_two,
        }
    }
}

/// One row of the parameter table. First-order rows leave the higher
/// coefficients empty.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TableRow {
    pub pool: u8,
    pub order: u8,
    pub b1: f64,
    pub b2: Option<f64>,
    pub b3: Option<f64>,
    pub c1: f64,
    pub c2: Option<f64>,
    pub c3: Option<f64>,
    pub alpha1: Option<f64>,
    pub alpha2: Option<f64>,
    pub tau: usize,
}

#[derive(Debug, Deserialize)]
struct TableFile {
    row: Vec<TableRow>,
}

/// Bundled coefficients for the two pools, first and third order.
pub const DEFAULT_TABLE: &str = r#"# pool models: first- and third-order coefficients, 1 minute sample time
[[row]]
pool = 1
order = 1
b1 = 0.069
c1 = 0.063
tau = 3

[[row]]
pool = 1
order = 3
b1 = 0.137
b2 = 0.155
b3 = 0.053
c1 = 0.190
c2 = 0.333
c3 = 0.175
alpha1 = 0.978
alpha2 = 0.468
tau = 3

[[row]]
pool = 2
order = 1
b1 = 0.0213
c1 = 0.0156
tau = 14

[[row]]
pool = 2
order = 3
b1 = 0.134
b2 = 0.244
b3 = 0.114
c1 = 0.101
c2 = 0.185
c3 = 0.087
alpha1 = 0.314
alpha2 = 0.814
tau = 16
"#;

/// Parameter table keyed by pool and model order.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamTable {
    rows: Vec<TableRow>,
}

impl Default for ParamTable {
    fn default() -> Self {
        Self::parse(DEFAULT_TABLE).expect("bundled table parses")
    }
}

impl ParamTable {
    pub fn parse(text: &str) -> Result<Self> {
        let file: TableFile = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        let table = Self { rows: file.row };
        for model in [PoolModel::One, PoolModel::Two] {
            table.third_order(model)?;
            table.row(model, 1)?;
        }
        Ok(table)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn rows(&self) -> &[TableRow] {
        &self.rows
    }

    fn row(&self, model: PoolModel, order: u8) -> Result<&TableRow> {
        self.rows
            .iter()
            .find(|r| r.pool == model.number() && r.order == order)
            .ok_or_else(|| {
                Error::Config(format!(
                    "no order-{order} row for pool {}",
                    model.number()
                ))
            })
    }

    pub fn third_order(&self, model: PoolModel) -> Result<ThirdOrderPoolParams> {
        let r = self.row(model, 3)?;
        let need = |v: Option<f64>, key: &str| {
            v.ok_or_else(|| {
                Error::Config(format!("pool {} order 3 is missing `{key}`", r.pool))
            })
        };
        let p = ThirdOrderPoolParams {
            b: [r.b1, need(r.b2, "b2")?, need(r.b3, "b3")?],
            c: [r.c1, need(r.c2, "c2")?, need(r.c3, "c3")?],
            alpha: [need(r.alpha1, "alpha1")?, need(r.alpha2, "alpha2")?],
            tau: r.tau,
        };
        p.validate()?;
        Ok(p)
    }

    /// First-order coefficients with the delays as printed in the table.
    pub fn first_order_raw(&self, model: PoolModel, tau_bar: usize) -> Result<FirstOrderPoolParams> {
        let r = self.row(model, 1)?;
        FirstOrderPoolParams::new(r.b1, r.c1, r.tau, tau_bar)
    }

    /// First-order synthesis model: table `b`, `c` with fitted delays.
    pub fn design(&self, model: PoolModel, delays: &DesignDelays) -> Result<FirstOrderPoolParams> {
        let r = self.row(model, 1)?;
        FirstOrderPoolParams::new(r.b1, r.c1, delays.tau(model), delays.tau_bar)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_rows_load_exactly() {
        let t = ParamTable::default();
        let one = t.third_order(PoolModel::One).unwrap();
        assert_eq!(one.b, [0.137, 0.155, 0.053]);
        assert_eq!(one.c, [0.190, 0.333, 0.175]);
        assert_eq!(one.alpha, [0.978, 0.468]);
        assert_eq!(one.tau, 3);
        let two = t.third_order(PoolModel::Two).unwrap();
        assert_eq!(two.b, [0.134, 0.244, 0.114]);
        assert_eq!(two.c, [0.101, 0.185, 0.087]);
        assert_eq!(two.alpha, [0.314, 0.814]);
        assert_eq!(two.tau, 16);
        let f1 = t.first_order_raw(PoolModel::One, 0).unwrap();
        assert_eq!((f1.b, f1.c, f1.tau), (0.069, 0.063, 3));
        let f2 = t.first_order_raw(PoolModel::Two, 0).unwrap();
        assert_eq!((f2.b, f2.c, f2.tau), (0.0213, 0.0156, 14));
    }

    #[test]
    fn design_model_uses_fitted_delays() {
        let t = ParamTable::default();
        let d = t.design(PoolModel::Two, &DesignDelays::default()).unwrap();
        assert_eq!((d.tau, d.tau_bar), (15, 10));
    }

    #[test]
    fn missing_third_order_key_is_reported() {
        let text = DEFAULT_TABLE.replace("alpha2 = 0.814\n", "");
        let err = ParamTable::parse(&text).unwrap_err();
        assert!(err.to_string().contains("alpha2"), "{err}");
    }

    #[test]
    fn nonpositive_first_order_coefficients_rejected() {
        assert!(FirstOrderPoolParams::new(0.0, 1.0, 1, 0).is_err());
        assert!(FirstOrderPoolParams::new(1.0, -1.0, 1, 0).is_err());
    }
}
