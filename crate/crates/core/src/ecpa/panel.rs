use crate::error::{Error, Result};

/// Aligned proxy, forecast and auxiliary series for one forecast comparison.
///
/// Rows are aligned by position. `timestamps` are carried along but never
/// used for joining.
#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationPanel {
    timestamps: Option<Vec<String>>,
    proxy: Vec<f64>,
    forecast1: Vec<f64>,
    forecast2: Vec<f64>,
    extras: Vec<(String, Vec<f64>)>,
    horizon: usize,
}

fn check_finite(name: &str, v: &[f64]) -> Result<()> {
    if let Some(i) = v.iter().position(|x| !x.is_finite()) {
        return Err(Error::Data {
            row: i + 1,
            column: name.to_string(),
            message: format!("non-finite value {}", v[i]),
        });
    }
    Ok(())
}

impl EvaluationPanel {
    pub fn new(proxy: Vec<f64>, forecast1: Vec<f64>, forecast2: Vec<f64>) -> Result<Self> {
        let n = proxy.len();
        if n < 2 {
            return Err(Error::InsufficientData(format!("panel needs at least 2 rows, got {n}")));
        }
        for (name, s) in [("forecast1", &forecast1), ("forecast2", &forecast2)] {
            if s.len() != n {
                return Err(Error::Argument(format!(
                    "series '{name}' has length {}, expected {n}",
                    s.len()
                )));
            }
        }
        check_finite("proxy", &proxy)?;
        check_finite("forecast1", &forecast1)?;
        check_finite("forecast2", &forecast2)?;
        Ok(Self {
            timestamps: None,
            proxy,
            forecast1,
            forecast2,
            extras: Vec::new(),
            horizon: 1,
        })
    }

    pub fn with_extra(mut self, name: impl Into<String>, values: Vec<f64>) -> Result<Self> {
        let name = name.into();
        if values.len() != self.len() {
            return Err(Error::Argument(format!(
                "extra series '{name}' has length {}, expected {}",
                values.len(),
                self.len()
            )));
        }
        if self.extras.iter().any(|(n, _)| *n == name) {
            return Err(Error::Argument(format!("duplicate extra series '{name}'")));
        }
        check_finite(&name, &values)?;
        self.extras.push((name, values));
        Ok(self)
    }

    pub fn with_timestamps(mut self, ts: Vec<String>) -> Result<Self> {
        if ts.len() != self.len() {
            return Err(Error::Argument("timestamp column length mismatch".into()));
        }
        self.timestamps = Some(ts);
        Ok(self)
    }

    pub fn with_horizon(mut self, horizon: usize) -> Result<Self> {
        if horizon == 0 {
            return Err(Error::Argument("forecast horizon must be positive".into()));
        }
        self.horizon = horizon;
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.proxy.len()
    }

    pub fn is_empty(&self) -> bool {
        self.proxy.is_empty()
    }

    pub fn proxy(&self) -> &[f64] {
        &self.proxy
    }

    pub fn forecast1(&self) -> &[f64] {
        &self.forecast1
    }

    pub fn forecast2(&self) -> &[f64] {
        &self.forecast2
    }

    pub fn extras(&self) -> &[(String, Vec<f64>)] {
        &self.extras
    }

    pub fn extra(&self, name: &str) -> Option<&[f64]> {
        self.extras.iter().find(|(n, _)| n == name).map(|(_, v)| v.as_slice())
    }

    pub fn timestamps(&self) -> Option<&[String]> {
        self.timestamps.as_deref()
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    /// The same panel with the two forecasts exchanged.
    pub fn swapped(&self) -> Self {
        let mut p = self.clone();
        std::mem::swap(&mut p.forecast1, &mut p.forecast2);
        p
    }
}
