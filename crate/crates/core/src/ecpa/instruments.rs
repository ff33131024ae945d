//! Test functions h_{t-1}: predictable instrument series.

use super::panel::EvaluationPanel;
use crate::error::{Error, Result};
use crate::loss::Loss;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

/// Names under which the two proxies of an unbiasedness check are exposed to
/// instruments.
pub const PROXY_A: &str = "proxy_a";
pub const PROXY_B: &str = "proxy_b";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InstrumentKind {
    Constant,
    LaggedProxy { lag: usize },
    LaggedLossDiff { lag: usize },
    LaggedExtra { name: String, lag: usize },
    LaggedProxyDiff { a: String, b: String, lag: usize },
}

impl InstrumentKind {
    pub fn lag(&self) -> usize {
        match self {
            InstrumentKind::Constant => 0,
            InstrumentKind::LaggedProxy { lag }
            | InstrumentKind::LaggedLossDiff { lag }
            | InstrumentKind::LaggedExtra { lag, .. }
            | InstrumentKind::LaggedProxyDiff { lag, .. } => *lag,
        }
    }

    /// Parses `constant`, `lag_proxy(L)`, `lag_loss_diff(L)`,
    /// `lag_extra(name, L)` or `lag_proxy_diff(a, b, L)`. The lag may be
    /// omitted, in which case `default_lag` is used.
    pub fn parse_with_default(s: &str, default_lag: usize) -> Result<Self> {
        let s = s.trim();
        let (head, args) = match s.find('(') {
            Some(open) => {
                let close = s.rfind(')').filter(|&c| c > open && c == s.len() - 1).ok_or_else(|| {
                    Error::Argument(format!("unbalanced parentheses in instrument '{s}'"))
                })?;
                let inner: Vec<String> = s[open + 1..close]
                    .split(',')
                    .map(|a| a.trim().to_string())
                    .filter(|a| !a.is_empty())
                    .collect();
                (s[..open].trim(), inner)
            }
            None => (s, Vec::new()),
        };
        let lag_arg = |a: Option<&String>| -> Result<usize> {
            match a {
                None => Ok(default_lag),
                Some(v) => v
                    .parse::<usize>()
                    .map_err(|_| Error::Argument(format!("invalid lag '{v}' in instrument '{s}'"))),
            }
        };
        let arity = |max: usize| -> Result<()> {
            if args.len() > max {
                Err(Error::Argument(format!("too many arguments in instrument '{s}'")))
            } else {
                Ok(())
            }
        };
        match head {
            "constant" | "const" | "1" => {
                arity(0)?;
                Ok(InstrumentKind::Constant)
            }
            "lag_proxy" => {
                arity(1)?;
                Ok(InstrumentKind::LaggedProxy { lag: lag_arg(args.first())? })
            }
            "lag_loss_diff" => {
                arity(1)?;
                Ok(InstrumentKind::LaggedLossDiff { lag: lag_arg(args.first())? })
            }
            "lag_extra" => {
                arity(2)?;
                let name = args
                    .first()
                    .ok_or_else(|| Error::Argument(format!("lag_extra needs a column name: '{s}'")))?;
                Ok(InstrumentKind::LaggedExtra { name: name.clone(), lag: lag_arg(args.get(1))? })
            }
            "lag_proxy_diff" => {
                arity(3)?;
                if args.len() < 2 {
                    return Err(Error::Argument(format!(
                        "lag_proxy_diff needs two column names: '{s}'"
                    )));
                }
                Ok(InstrumentKind::LaggedProxyDiff {
                    a: args[0].clone(),
                    b: args[1].clone(),
                    lag: lag_arg(args.get(2))?,
                })
            }
            other => Err(Error::Argument(format!("unknown instrument kind '{other}'"))),
        }
    }
}

impl FromStr for InstrumentKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Self::parse_with_default(s, 1)
    }
}

impl fmt::Display for InstrumentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InstrumentKind::Constant => write!(f, "constant"),
            InstrumentKind::LaggedProxy { lag } => write!(f, "lag_proxy({lag})"),
            InstrumentKind::LaggedLossDiff { lag } => write!(f, "lag_loss_diff({lag})"),
            InstrumentKind::LaggedExtra { name, lag } => write!(f, "lag_extra({name},{lag})"),
            InstrumentKind::LaggedProxyDiff { a, b, lag } => write!(f, "lag_proxy_diff({a},{b},{lag})"),
        }
    }
}

/// Ordered list of instruments; q is its length.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstrumentSpec(pub Vec<InstrumentKind>);

impl InstrumentSpec {
    pub fn new(kinds: Vec<InstrumentKind>) -> Result<Self> {
        if kinds.is_empty() {
            return Err(Error::Argument("at least one instrument is required".into()));
        }
        Ok(Self(kinds))
    }

    pub fn constant() -> Self {
        Self(vec![InstrumentKind::Constant])
    }

    /// h_{t-1} = (1, Ŷ_{t-1})'.
    pub fn constant_and_lagged_proxy() -> Self {
        Self(vec![InstrumentKind::Constant, InstrumentKind::LaggedProxy { lag: 1 }])
    }

    /// Comma-separated list; commas inside parentheses belong to the item.
    pub fn parse(s: &str, default_lag: usize) -> Result<Self> {
        let mut items = Vec::new();
        let mut depth = 0i32;
        let mut start = 0;
        for (i, ch) in s.char_indices() {
            match ch {
                '(' => depth += 1,
                ')' => depth -= 1,
                ',' | ';' if depth == 0 => {
                    items.push(&s[start..i]);
                    start = i + 1;
                }
                _ => {}
            }
        }
        items.push(&s[start..]);
        let kinds = items
            .into_iter()
            .filter(|t| !t.trim().is_empty())
            .map(|t| InstrumentKind::parse_with_default(t, default_lag))
            .collect::<Result<Vec<_>>>()?;
        Self::new(kinds)
    }

    pub fn q(&self) -> usize {
        self.0.len()
    }

    pub fn kinds(&self) -> &[InstrumentKind] {
        &self.0
    }

    pub fn max_lag(&self) -> usize {
        self.0.iter().map(InstrumentKind::lag).max().unwrap_or(0)
    }

    pub fn names(&self) -> Vec<String> {
        self.0.iter().map(ToString::to_string).collect()
    }

    /// Lagged instruments must be dated at least `horizon` periods back.
    pub fn validate(&self, horizon: usize) -> Result<()> {
        if self.0.is_empty() {
            return Err(Error::Argument("at least one instrument is required".into()));
        }
        for k in &self.0 {
            if *k != InstrumentKind::Constant && k.lag() < horizon {
                return Err(Error::Argument(format!(
                    "instrument {k} uses lag {} but the forecast horizon is {horizon}",
                    k.lag()
                )));
            }
        }
        Ok(())
    }
}

impl fmt::Display for InstrumentSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.names().join(","))
    }
}

/// Series from which instruments are drawn.
pub(crate) struct InstrumentSource<'a> {
    pub proxy: &'a [f64],
    /// Moment base; the loss-difference series for forecast comparisons.
    pub base: &'a [f64],
    pub extras: &'a [(String, Vec<f64>)],
    pub horizon: usize,
}

impl InstrumentSource<'_> {
    fn extra(&self, name: &str) -> Result<&[f64]> {
        self.extras
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, v)| v.as_slice())
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    }
}

/// Instrument rows aligned with the trimmed moment base.
#[derive(Debug, Clone, PartialEq)]
pub struct InstrumentMatrix {
    /// n_eff × q
    pub values: DMatrix<f64>,
    /// Number of leading observations dropped; row r pairs with observation
    /// `offset + r`.
    pub offset: usize,
    pub names: Vec<String>,
}

impl InstrumentMatrix {
    pub fn n_effective(&self) -> usize {
        self.values.nrows()
    }
}

pub(crate) fn instrument_matrix(src: &InstrumentSource<'_>, spec: &InstrumentSpec) -> Result<InstrumentMatrix> {
    spec.validate(src.horizon)?;
    let n = src.base.len();
    let offset = spec.max_lag();
    if offset >= n {
        return Err(Error::InsufficientData(format!(
            "maximum instrument lag {offset} leaves no observations out of {n}"
        )));
    }
    let n_eff = n - offset;
    let mut values = DMatrix::zeros(n_eff, spec.q());
    for (j, kind) in spec.kinds().iter().enumerate() {
        let mut col = values.column_mut(j);
        match kind {
            InstrumentKind::Constant => col.fill(1.0),
            InstrumentKind::LaggedProxy { lag } => {
                for r in 0..n_eff {
                    col[r] = src.proxy[offset + r - lag];
                }
            }
            InstrumentKind::LaggedLossDiff { lag } => {
                for r in 0..n_eff {
                    col[r] = src.base[offset + r - lag];
                }
            }
            InstrumentKind::LaggedExtra { name, lag } => {
                let x = src.extra(name)?;
                for r in 0..n_eff {
                    col[r] = x[offset + r - lag];
                }
            }
            InstrumentKind::LaggedProxyDiff { a, b, lag } => {
                let (xa, xb) = (src.extra(a)?, src.extra(b)?);
                for r in 0..n_eff {
                    col[r] = xa[offset + r - lag] - xb[offset + r - lag];
                }
            }
        }
    }
    Ok(InstrumentMatrix { values, offset, names: spec.names() })
}

/// Loss differences d_t = L(Ŷ_t, x_1t) − L(Ŷ_t, x_2t) over the whole panel.
pub fn loss_differences(panel: &EvaluationPanel, loss: &Loss) -> Result<Vec<f64>> {
    panel
        .proxy()
        .iter()
        .zip(panel.forecast1().iter().zip(panel.forecast2()))
        .enumerate()
        .map(|(t, (&y, (&x1, &x2)))| {
            loss.difference(y, x1, x2).map_err(|e| match e {
                Error::Domain(msg) => Error::Domain(format!("row {}: {msg}", t + 1)),
                other => other,
            })
        })
        .collect()
}

/// Instrument matrix for a forecast-comparison panel. Observations consumed
/// by lags are trimmed from the front, so n_eff = n − max lag.
pub fn build_instruments(
    panel: &EvaluationPanel,
    spec: &InstrumentSpec,
    loss: &Loss,
) -> Result<InstrumentMatrix> {
    let d = loss_differences(panel, loss)?;
    let src = InstrumentSource {
        proxy: panel.proxy(),
        base: &d,
        extras: panel.extras(),
        horizon: panel.horizon(),
    };
    instrument_matrix(&src, spec)
}

/// The five instrument sets used to test conditional unbiasedness of one
/// proxy against another, in order: constant; + lagged proxy A; + lagged
/// proxy B; + lagged A−B; + lagged A and lagged A−B.
pub fn instrument_presets_proxycheck() -> Vec<InstrumentSpec> {
    let lag_a = InstrumentKind::LaggedExtra { name: PROXY_A.into(), lag: 1 };
    let lag_b = InstrumentKind::LaggedExtra { name: PROXY_B.into(), lag: 1 };
    let lag_diff = InstrumentKind::LaggedProxyDiff { a: PROXY_A.into(), b: PROXY_B.into(), lag: 1 };
    vec![
        InstrumentSpec(vec![InstrumentKind::Constant]),
        InstrumentSpec(vec![InstrumentKind::Constant, lag_a.clone()]),
        InstrumentSpec(vec![InstrumentKind::Constant, lag_b]),
        InstrumentSpec(vec![InstrumentKind::Constant, lag_diff.clone()]),
        InstrumentSpec(vec![InstrumentKind::Constant, lag_a, lag_diff]),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_only() {
        let p = EvaluationPanel::new(vec![1.0, 2.0, 3.0], vec![0.0; 3], vec![1.0; 3]).unwrap();
        let m = build_instruments(&p, &InstrumentSpec::constant(), &Loss::squared_error()).unwrap();
        assert_eq!(m.n_effective(), 3);
        assert!(m.values.iter().all(|&v| v == 1.0));
    }

    #[test]
    fn lagged_proxy_shift() {
        let p = EvaluationPanel::new(vec![5.0, 6.0, 7.0], vec![0.0; 3], vec![1.0; 3]).unwrap();
        let m = build_instruments(&p, &InstrumentSpec::constant_and_lagged_proxy(), &Loss::squared_error()).unwrap();
        assert_eq!(m.n_effective(), 2);
        assert_eq!(m.offset, 1);
        assert_eq!((m.values[(0, 0)], m.values[(0, 1)]), (1.0, 5.0));
        assert_eq!((m.values[(1, 0)], m.values[(1, 1)]), (1.0, 6.0));
    }

    #[test]
    fn lagged_loss_difference() {
        let p = EvaluationPanel::new(vec![1.0, 2.0], vec![0.0, 0.0], vec![2.0, 2.0]).unwrap();
        let se = Loss::squared_error();
        assert_eq!(loss_differences(&p, &se).unwrap(), vec![0.0, 4.0]);
        let spec = InstrumentSpec::new(vec![InstrumentKind::Constant, InstrumentKind::LaggedLossDiff { lag: 1 }]).unwrap();
        let m = build_instruments(&p, &spec, &se).unwrap();
        assert_eq!(m.n_effective(), 1);
        assert_eq!((m.values[(0, 0)], m.values[(0, 1)]), (1.0, 0.0));
    }

    #[test]
    fn lag_exhausting_sample() {
        let p = EvaluationPanel::new(vec![1.0, 2.0], vec![0.0; 2], vec![1.0; 2]).unwrap();
        let spec = InstrumentSpec(vec![InstrumentKind::LaggedProxy { lag: 2 }]);
        assert!(matches!(
            build_instruments(&p, &spec, &Loss::squared_error()),
            Err(Error::InsufficientData(_))
        ));
    }

    #[test]
    fn lag_below_horizon_rejected() {
        let p = EvaluationPanel::new(vec![1.0, 2.0, 3.0, 4.0], vec![0.0; 4], vec![1.0; 4])
            .unwrap()
            .with_horizon(2)
            .unwrap();
        let spec = InstrumentSpec::constant_and_lagged_proxy();
        assert!(matches!(
            build_instruments(&p, &spec, &Loss::squared_error()),
            Err(Error::Argument(_))
        ));
    }

    #[test]
    fn missing_extra_named() {
        let p = EvaluationPanel::new(vec![1.0, 2.0, 3.0], vec![0.0; 3], vec![1.0; 3]).unwrap();
        let spec = InstrumentSpec::parse("constant, lag_extra(spf, 1)", 1).unwrap();
        match build_instruments(&p, &spec, &Loss::squared_error()) {
            Err(Error::MissingColumn(c)) => assert_eq!(c, "spf"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn parse_round_trip() {
        let spec = InstrumentSpec::parse("constant,lag_proxy(1),lag_loss_diff,lag_extra(x, 2),lag_proxy_diff(a,b,3)", 4).unwrap();
        assert_eq!(spec.q(), 5);
        assert_eq!(spec.0[2], InstrumentKind::LaggedLossDiff { lag: 4 });
        let again = InstrumentSpec::parse(&spec.to_string(), 1).unwrap();
        assert_eq!(spec, again);
        assert!(InstrumentSpec::parse("bogus(1)", 1).is_err());
        assert!(InstrumentSpec::parse("", 1).is_err());
    }

    #[test]
    fn presets() {
        let p = instrument_presets_proxycheck();
        assert_eq!(p.len(), 5);
        assert_eq!(p[0], InstrumentSpec::constant());
        assert_eq!(
            p[3],
            InstrumentSpec(vec![
                InstrumentKind::Constant,
                InstrumentKind::LaggedProxyDiff { a: PROXY_A.into(), b: PROXY_B.into(), lag: 1 }
            ])
        );
        let qs: Vec<usize> = p.iter().map(InstrumentSpec::q).collect();
        assert_eq!(qs, vec![1, 2, 2, 2, 3]);
    }
}
