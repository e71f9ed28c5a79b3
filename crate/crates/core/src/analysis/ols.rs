//! Ordinary least squares over a small data frame with one-hot categorical
//! encoding, classical or HC1 standard errors, and averaged marginal effects.

use std::collections::{BTreeMap, BTreeSet};

use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};
use crate::scoring::ridge::factor;

pub const INTERCEPT: &str = "(Intercept)";
const Z95: f64 = 1.96;

#[derive(Debug, Clone, PartialEq)]
pub enum Column {
    Numeric(Vec<f64>),
    /// `order` lists the levels in presentation order.
    Categorical { values: Vec<String>, order: Vec<String> },
}

impl Column {
    fn len(&self) -> usize {
        match self {
            Column::Numeric(v) => v.len(),
            Column::Categorical { values, .. } => values.len(),
        }
    }
}

/// Named, equal-length columns.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Frame {
    len: usize,
    columns: BTreeMap<String, Column>,
}

impl Frame {
    pub fn new(len: usize) -> Frame {
        Frame {
            len,
            columns: BTreeMap::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn column(&self, name: &str) -> Option<&Column> {
        self.columns.get(name)
    }

    pub fn insert(&mut self, name: &str, column: Column) -> Result<()> {
        if column.len() != self.len {
            return Err(Error::InvalidInput(format!("column {name} has {} rows, frame has {}", column.len(), self.len)));
        }
        if let Column::Numeric(v) = &column {
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidInput(format!("column {name} has non-finite values")));
            }
        }
        if let Column::Categorical { values, order } = &column {
            let known: BTreeSet<&String> = order.iter().collect();
            if let Some(v) = values.iter().find(|v| !known.contains(v)) {
                return Err(Error::InvalidInput(format!("column {name}: level {v} missing from level order")));
            }
        }
        self.columns.insert(name.to_string(), column);
        Ok(())
    }

    pub fn numeric(&mut self, name: &str, values: Vec<f64>) -> Result<()> {
        self.insert(name, Column::Numeric(values))
    }

    /// Categorical column with levels sorted lexicographically.
    pub fn categorical(&mut self, name: &str, values: Vec<String>) -> Result<()> {
        let order = values.iter().cloned().collect::<BTreeSet<_>>().into_iter().collect();
        self.insert(name, Column::Categorical { values, order })
    }

    pub fn categorical_ordered(&mut self, name: &str, values: Vec<String>, order: Vec<String>) -> Result<()> {
        self.insert(name, Column::Categorical { values, order })
    }

    /// Copy of the frame with every row of a categorical column set to `level`.
    pub fn with_level(&self, name: &str, level: &str) -> Result<Frame> {
        let mut out = self.clone();
        match out.columns.get_mut(name) {
            Some(Column::Categorical { values, order }) => {
                if !order.iter().any(|l| l == level) {
                    return Err(Error::InvalidInput(format!("{name} has no level {level}")));
                }
                values.iter_mut().for_each(|v| *v = level.to_string());
                Ok(out)
            }
            Some(Column::Numeric(_)) => Err(Error::InvalidInput(format!("{name} is not categorical"))),
            None => Err(Error::UnknownVariable(name.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum VarKind {
    Continuous,
    Categorical,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegressionSpec {
    pub name: String,
    pub dependent: String,
    pub predictors: Vec<(String, VarKind)>,
    /// Categorical controls; a control with a single observed level is dropped.
    pub fixed_effects: Vec<String>,
    pub sample_filter: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SeKind {
    #[default]
    Classical,
    Hc1,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TermEstimate {
    pub term: String,
    pub coef: f64,
    pub se: f64,
    pub t: f64,
    pub p: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
}

#[derive(Debug, Clone, PartialEq)]
enum Encoding {
    Continuous { col: usize },
    /// Observed levels in order, the reference level, and the design column
    /// of every non-reference level.
    Categorical {
        levels: Vec<String>,
        reference: String,
        cols: Vec<(String, usize)>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegressionResult {
    pub spec_name: String,
    pub dependent: String,
    pub terms: Vec<TermEstimate>,
    pub n_obs: usize,
    pub r_squared: f64,
    pub df_resid: usize,
    pub se_kind: SeKind,
    /// (variable, reference level) for every categorical term.
    pub reference_levels: Vec<(String, String)>,
    pub notes: Vec<String>,
    design: DMatrix<f64>,
    coefs: DVector<f64>,
    cov: DMatrix<f64>,
    encodings: Vec<(String, Encoding)>,
}

impl RegressionResult {
    pub fn term(&self, name: &str) -> Option<&TermEstimate> {
        self.terms.iter().find(|t| t.term == name)
    }

    pub fn residuals(&self, y: &[f64]) -> Vec<f64> {
        let fitted = &self.design * &self.coefs;
        y.iter().zip(fitted.iter()).map(|(a, b)| a - b).collect()
    }

    pub fn design(&self) -> &DMatrix<f64> {
        &self.design
    }

    pub fn covariance(&self) -> &DMatrix<f64> {
        &self.cov
    }

    /// Linear predictions for the rows of `frame`, encoded as in the fit.
    pub fn predict(&self, frame: &Frame) -> Result<Vec<f64>> {
        let x = encode(frame, &self.encodings, self.coefs.len())?;
        Ok((x * &self.coefs).iter().copied().collect())
    }
}

fn column<'a>(frame: &'a Frame, name: &str) -> Result<&'a Column> {
    frame.column(name).ok_or_else(|| Error::UnknownVariable(name.to_string()))
}

fn observed_levels(values: &[String], order: &[String]) -> Vec<String> {
    let seen: BTreeSet<&String> = values.iter().collect();
    order.iter().filter(|l| seen.contains(l)).cloned().collect()
}

/// Most frequent level; ties go to the earliest level in order.
fn reference_level(values: &[String], levels: &[String]) -> String {
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for v in values {
        *counts.entry(v).or_default() += 1;
    }
    let mut best = &levels[0];
    for l in levels {
        if counts[l.as_str()] > counts[best.as_str()] {
            best = l;
        }
    }
    best.clone()
}

fn encode(frame: &Frame, encodings: &[(String, Encoding)], p: usize) -> Result<DMatrix<f64>> {
    let mut x = DMatrix::<f64>::zeros(frame.len(), p);
    x.column_mut(0).fill(1.0);
    for (name, enc) in encodings {
        match (enc, column(frame, name)?) {
            (Encoding::Continuous { col }, Column::Numeric(v)) => {
                for (i, val) in v.iter().enumerate() {
                    x[(i, *col)] = *val;
                }
            }
            (Encoding::Categorical { cols, .. }, Column::Categorical { values, .. }) => {
                for (i, val) in values.iter().enumerate() {
                    if let Some((_, c)) = cols.iter().find(|(l, _)| l == val) {
                        x[(i, *c)] = 1.0;
                    }
                }
            }
            _ => return Err(Error::InvalidInput(format!("column {name} changed kind since the fit"))),
        }
    }
    Ok(x)
}

/// Names of design columns that are linear combinations of earlier ones,
/// found by modified Gram-Schmidt.
fn collinear_columns(x: &DMatrix<f64>, names: &[String]) -> Vec<String> {
    let mut basis: Vec<DVector<f64>> = Vec::new();
    let mut out = Vec::new();
    for j in 0..x.ncols() {
        let mut v: DVector<f64> = x.column(j).into_owned();
        let norm0 = v.norm();
        for q in &basis {
            let proj = q.dot(&v);
            v.axpy(-proj, q, 1.0);
        }
        let norm = v.norm();
        if norm0 == 0.0 || norm <= 1e-9 * norm0 {
            out.push(names[j].clone());
        } else {
            basis.push(v / norm);
        }
    }
    out
}

pub fn ols_fit(frame: &Frame, spec: &RegressionSpec, se_kind: SeKind) -> Result<RegressionResult> {
    if spec.predictors.iter().any(|(n, _)| *n == spec.dependent) || spec.fixed_effects.contains(&spec.dependent) {
        return Err(Error::InvalidInput(format!("{}: dependent variable is also a predictor", spec.name)));
    }
    let y = match column(frame, &spec.dependent)? {
        Column::Numeric(v) => DVector::from_column_slice(v),
        Column::Categorical { .. } => return Err(Error::InvalidInput(format!("dependent {} must be numeric", spec.dependent))),
    };

    let mut names = vec![INTERCEPT.to_string()];
    let mut encodings = Vec::new();
    let mut reference_levels = Vec::new();
    let mut notes = Vec::new();
    let vars = spec
        .predictors
        .iter()
        .map(|(n, k)| (n, *k, false))
        .chain(spec.fixed_effects.iter().map(|n| (n, VarKind::Categorical, true)));
    for (name, kind, is_fe) in vars {
        match (kind, column(frame, name)?) {
            (VarKind::Continuous, Column::Numeric(_)) => {
                encodings.push((name.clone(), Encoding::Continuous { col: names.len() }));
                names.push(name.clone());
            }
            (VarKind::Categorical, Column::Categorical { values, order }) => {
                let levels = observed_levels(values, order);
                if levels.len() < 2 {
                    if is_fe {
                        notes.push(format!("fixed effect {name} dropped: single observed level"));
                        continue;
                    }
                    return Err(Error::InvalidInput(format!("{}: categorical predictor {name} has fewer than two observed levels", spec.name)));
                }
                let reference = reference_level(values, &levels);
                let mut cols = Vec::new();
                for l in levels.iter().filter(|l| **l != reference) {
                    cols.push((l.clone(), names.len()));
                    names.push(format!("{name}[{l}]"));
                }
                reference_levels.push((name.clone(), reference.clone()));
                encodings.push((name.clone(), Encoding::Categorical { levels, reference, cols }));
            }
            (kind, _) => return Err(Error::InvalidInput(format!("{name} does not hold {kind:?} data"))),
        }
    }

    let n = frame.len();
    let p = names.len();
    if n <= p {
        return Err(Error::Degenerate(format!("{}: {n} observations for {p} parameters", spec.name)));
    }
    let x = encode(frame, &encodings, p)?;
    let collinear = collinear_columns(&x, &names);
    if !collinear.is_empty() {
        return Err(Error::RankDeficient(collinear));
    }

    let xtx = x.transpose() * &x;
    let chol = factor(xtx, "OLS normal equations")?;
    let xtx_inv = chol.inverse();
    let beta = &xtx_inv * (x.transpose() * &y);
    let resid = &y - &x * &beta;
    let rss = resid.norm_squared();
    let df = n - p;
    let cov = match se_kind {
        SeKind::Classical => &xtx_inv * (rss / df as f64),
        SeKind::Hc1 => {
            let mut meat = DMatrix::<f64>::zeros(p, p);
            for i in 0..n {
                let row = x.row(i);
                meat += row.transpose() * row * resid[i].powi(2);
            }
            &xtx_inv * meat * &xtx_inv * (n as f64 / df as f64)
        }
    };
    let ybar = y.mean();
    let tss: f64 = y.iter().map(|v| (v - ybar).powi(2)).sum();
    let t_dist = StudentsT::new(0.0, 1.0, df as f64).map_err(|e| Error::Degenerate(e.to_string()))?;

    let terms = names
        .iter()
        .enumerate()
        .map(|(j, term)| {
            let coef = beta[j];
            let se = cov[(j, j)].max(0.0).sqrt();
            let t = coef / se;
            let p = if t.is_nan() { f64::NAN } else { 2.0 * t_dist.sf(t.abs()) };
            TermEstimate {
                term: term.clone(),
                coef,
                se,
                t,
                p,
                ci_lo: coef - Z95 * se,
                ci_hi: coef + Z95 * se,
            }
        })
        .collect();

    Ok(RegressionResult {
        spec_name: spec.name.clone(),
        dependent: spec.dependent.clone(),
        terms,
        n_obs: n,
        r_squared: if tss == 0.0 { f64::NAN } else { 1.0 - rss / tss },
        df_resid: df,
        se_kind,
        reference_levels,
        notes,
        design: x,
        coefs: beta,
        cov,
        encodings,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Margin {
    pub variable: String,
    /// Level name, or `dy/dx` for a continuous variable.
    pub level: String,
    pub margin: f64,
    pub se: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
}

pub const SLOPE_LEVEL: &str = "dy/dx";

/// Averaged predictions with every observation set to each level in turn,
/// or the slope for a continuous variable. Standard errors by the delta
/// method, which is exact for linear predictions.
pub fn marginal_effects(result: &RegressionResult, variable: &str) -> Result<Vec<Margin>> {
    let enc = result
        .encodings
        .iter()
        .find(|(n, _)| n == variable)
        .map(|(_, e)| e)
        .ok_or_else(|| Error::UnknownVariable(variable.to_string()))?;
    let margin = |level: String, grad: DVector<f64>| {
        let m = grad.dot(&result.coefs);
        let se = (grad.transpose() * &result.cov * &grad)[(0, 0)].max(0.0).sqrt();
        Margin {
            variable: variable.to_string(),
            level,
            margin: m,
            se,
            ci_lo: m - Z95 * se,
            ci_hi: m + Z95 * se,
        }
    };
    match enc {
        Encoding::Continuous { col } => {
            let mut grad = DVector::zeros(result.coefs.len());
            grad[*col] = 1.0;
            Ok(vec![margin(SLOPE_LEVEL.to_string(), grad)])
        }
        Encoding::Categorical { levels, cols, .. } => {
            let n = result.design.nrows() as f64;
            let mut mean_row: DVector<f64> = result.design.row_sum().transpose() / n;
            for (_, c) in cols {
                mean_row[*c] = 0.0;
            }
            Ok(levels
                .iter()
                .map(|level| {
                    let mut grad = mean_row.clone();
                    if let Some((_, c)) = cols.iter().find(|(l, _)| l == level) {
                        grad[*c] = 1.0;
                    }
                    margin(level.clone(), grad)
                })
                .collect())
        }
    }
}
