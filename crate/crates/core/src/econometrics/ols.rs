//! Ordinary least squares with dummy-encoded fixed effects.

use std::collections::{BTreeMap, BTreeSet};

use nalgebra::{DMatrix, DVector};
use statrs::distribution::{ContinuousCDF, FisherSnedecor, StudentsT};

use super::table::Table;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct DesignSpec {
    pub response: String,
    pub numeric_terms: Vec<String>,
    /// Categorical columns, one dummy per level except the baseline.
    pub fe_terms: Vec<String>,
    pub intercept: bool,
    /// Baseline level per fixed effect; the first sorted level otherwise.
    pub baselines: BTreeMap<String, String>,
}

impl DesignSpec {
    pub fn new(response: &str, numeric_terms: &[&str], fe_terms: &[&str]) -> Self {
        DesignSpec {
            response: response.to_string(),
            numeric_terms: numeric_terms.iter().map(|s| s.to_string()).collect(),
            fe_terms: fe_terms.iter().map(|s| s.to_string()).collect(),
            intercept: true,
            baselines: BTreeMap::new(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let mut seen = BTreeSet::new();
        for t in self.numeric_terms.iter().chain(&self.fe_terms) {
            if t == &self.response {
                return Err(Error::InvalidParameter(format!(
                    "response `{t}` also used as a term"
                )));
            }
            if !seen.insert(t) {
                return Err(Error::DuplicateTerm(t.clone()));
            }
        }
        Ok(())
    }

    /// Every column the spec reads, response first.
    pub fn columns(&self) -> impl Iterator<Item = &str> {
        std::iter::once(self.response.as_str())
            .chain(self.numeric_terms.iter().map(String::as_str))
            .chain(self.fe_terms.iter().map(String::as_str))
    }

    pub fn check_columns(&self, table: &Table) -> Result<()> {
        match self.columns().find(|c| !table.has(c)) {
            Some(missing) => Err(Error::MissingColumn(missing.to_string())),
            None => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegressionResult {
    pub terms: Vec<String>,
    pub coefficients: Vec<f64>,
    pub std_errors: Vec<f64>,
    pub t_stats: Vec<f64>,
    pub p_values: Vec<f64>,
    pub r2: f64,
    pub adj_r2: f64,
    pub residual_std_error: f64,
    pub f_stat: f64,
    pub f_p_value: f64,
    pub n_obs: usize,
    pub df_resid: usize,
    pub df_model: usize,
    pub fitted: Vec<f64>,
    /// Fixed effects that entered the design.
    pub fe_included: Vec<String>,
    /// Fixed effects dropped for having a single level.
    pub fe_dropped: Vec<String>,
}

impl RegressionResult {
    fn position(&self, term: &str) -> Option<usize> {
        self.terms.iter().position(|t| t == term)
    }

    pub fn coef(&self, term: &str) -> Option<f64> {
        self.position(term).map(|i| self.coefficients[i])
    }

    pub fn se(&self, term: &str) -> Option<f64> {
        self.position(term).map(|i| self.std_errors[i])
    }

    pub fn t(&self, term: &str) -> Option<f64> {
        self.position(term).map(|i| self.t_stats[i])
    }

    pub fn p(&self, term: &str) -> Option<f64> {
        self.position(term).map(|i| self.p_values[i])
    }
}

pub const INTERCEPT: &str = "(Intercept)";

pub fn dummy_name(term: &str, level: &str) -> String {
    format!("{term}[{level}]")
}

struct Design {
    x: DMatrix<f64>,
    y: DVector<f64>,
    names: Vec<String>,
    fe_included: Vec<String>,
    fe_dropped: Vec<String>,
}

fn build_design(table: &Table, spec: &DesignSpec) -> Result<Design> {
    spec.validate()?;
    spec.check_columns(table)?;
    let n = table.n_rows();
    let y = table.numeric(&spec.response)?;
    let mut cols: Vec<Vec<f64>> = Vec::new();
    let mut names = Vec::new();
    if spec.intercept {
        cols.push(vec![1.0; n]);
        names.push(INTERCEPT.to_string());
    }
    for t in &spec.numeric_terms {
        cols.push(table.numeric(t)?.to_vec());
        names.push(t.clone());
    }
    let mut fe_included = Vec::new();
    let mut fe_dropped = Vec::new();
    for t in &spec.fe_terms {
        let values = table.categorical(t)?;
        let levels: BTreeSet<&str> = values.iter().map(String::as_str).collect();
        if levels.len() < 2 {
            log::warn!("fixed effect `{t}` has a single level and is dropped");
            fe_dropped.push(t.clone());
            continue;
        }
        let baseline = match spec.baselines.get(t) {
            Some(b) if levels.contains(b.as_str()) => b.as_str(),
            Some(b) => {
                return Err(Error::InvalidParameter(format!(
                    "baseline `{b}` is not a level of `{t}`"
                )))
            }
            None => levels.iter().next().copied().expect("two levels"),
        };
        for level in levels.iter().filter(|l| **l != baseline) {
            cols.push(values.iter().map(|v| f64::from(v == level)).collect());
            names.push(dummy_name(t, level));
        }
        fe_included.push(t.clone());
    }
    if let Some(bad) = std::iter::once(y)
        .chain(cols.iter().map(Vec::as_slice))
        .position(|c| c.iter().any(|v| !v.is_finite()))
    {
        let name = if bad == 0 { &spec.response } else { &names[bad - 1] };
        return Err(Error::InvalidParameter(format!("non-finite value in `{name}`")));
    }
    let k = cols.len();
    if n <= k {
        return Err(Error::TooFewObservations {
            n_obs: n,
            n_params: k,
        });
    }
    Ok(Design {
        x: DMatrix::from_fn(n, k, |r, c| cols[c][r]),
        y: DVector::from_column_slice(y),
        names,
        fe_included,
        fe_dropped,
    })
}

const RANK_TOL: f64 = 1e-9;

/// Fits by Householder QR with classical standard errors.
pub fn ols_fit(table: &Table, spec: &DesignSpec) -> Result<RegressionResult> {
    let Design {
        x,
        y,
        names,
        fe_included,
        fe_dropped,
    } = build_design(table, spec)?;
    let (n, k) = x.shape();

    let col_norms: Vec<f64> = x.column_iter().map(|c| c.norm()).collect();
    let qr = x.clone().qr();
    let r = qr.r();
    let collinear: Vec<String> = (0..k)
        .filter(|&j| !(r[(j, j)].abs() > RANK_TOL * col_norms[j].max(1.0)))
        .map(|j| names[j].clone())
        .collect();
    if !collinear.is_empty() {
        return Err(Error::RankDeficient(collinear));
    }

    let mut qty = y.clone();
    qr.q_tr_mul(&mut qty);
    let qty_head = qty.rows(0, k).into_owned();
    let beta = r
        .solve_upper_triangular(&qty_head)
        .ok_or_else(|| Error::RankDeficient(names.clone()))?;
    let r_inv = r
        .solve_upper_triangular(&DMatrix::identity(k, k))
        .ok_or_else(|| Error::RankDeficient(names.clone()))?;

    let fitted = &x * &beta;
    let resid = &y - &fitted;
    let ssr = resid.norm_squared();
    let df_resid = n - k;
    let sigma2 = ssr / df_resid as f64;

    let std_errors: Vec<f64> = (0..k)
        .map(|j| (sigma2 * r_inv.row(j).norm_squared()).sqrt())
        .collect();
    let t_dist = StudentsT::new(0.0, 1.0, df_resid as f64).expect("df > 0");
    let (t_stats, p_values): (Vec<f64>, Vec<f64>) = beta
        .iter()
        .zip(&std_errors)
        .map(|(&b, &se)| {
            let t = b / se;
            let p = if t.is_nan() {
                1.0
            } else {
                2.0 * (1.0 - t_dist.cdf(t.abs()))
            };
            (t, p.clamp(0.0, 1.0))
        })
        .unzip();

    let sst = if spec.intercept {
        let mean = y.mean();
        y.iter().map(|v| (v - mean).powi(2)).sum::<f64>()
    } else {
        y.norm_squared()
    };
    let r2 = if sst > 0.0 { 1.0 - ssr / sst } else { f64::NAN };
    let offset = usize::from(spec.intercept);
    let adj_r2 = 1.0 - (1.0 - r2) * (n - offset) as f64 / df_resid as f64;
    let df_model = k - offset;
    let (f_stat, f_p_value) = if df_model == 0 {
        (f64::NAN, f64::NAN)
    } else {
        let f = ((sst - ssr) / df_model as f64) / sigma2;
        let p = FisherSnedecor::new(df_model as f64, df_resid as f64)
            .map(|d| if f.is_finite() { 1.0 - d.cdf(f) } else { 0.0 })
            .unwrap_or(f64::NAN);
        (f, p)
    };

    Ok(RegressionResult {
        terms: names,
        coefficients: beta.iter().copied().collect(),
        std_errors,
        t_stats,
        p_values,
        r2,
        adj_r2,
        residual_std_error: sigma2.sqrt(),
        f_stat,
        f_p_value,
        n_obs: n,
        df_resid,
        df_model,
        fitted: fitted.iter().copied().collect(),
        fe_included,
        fe_dropped,
    })
}

/// Column names shared by the regression tables and their specs.
pub mod columns {
    pub const DIST: &str = "dist_km";
    pub const PCI: &str = "pci";
    pub const D_ECI: &str = "d_eci";
    pub const D_DIVERSITY: &str = "d_diversity";
    pub const D_LABOR: &str = "d_labor_pop";
    pub const D_FLOATING: &str = "d_floating_pop";
    pub const D_RESIDENTIAL: &str = "d_residential_pop";
    pub const D_LAND_PRICE: &str = "d_land_price";
    pub const WARD: &str = "ward";
    pub const INDUSTRY: &str = "industry";
    pub const COUNT: &str = "count";
    pub const FEMALE: &str = "female";
    pub const AGE_GROUP: &str = "age_group";
    pub const PRODUCT: &str = "product_code";
    pub const CLUSTER_A: &str = "cluster_a";
    pub const CLUSTER_B: &str = "cluster_b";
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MarketVariant {
    /// PCI with controls and fixed effects.
    Base,
    /// Adds the ECI and diversity gaps between the two markets.
    WithComplexityGaps,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConsumerVariant {
    Base,
    /// Adds the purchase count.
    WithCount,
}

/// Minimum market distance on PCI (and optionally the ECI / diversity gaps),
/// population and land-price gaps, with ward and industry fixed effects.
pub fn spec_market_boundary(table: &Table, variant: MarketVariant) -> Result<DesignSpec> {
    use columns::*;
    let mut numeric = vec![PCI];
    if variant == MarketVariant::WithComplexityGaps {
        numeric.extend([D_ECI, D_DIVERSITY]);
    }
    numeric.extend([D_LABOR, D_FLOATING, D_RESIDENTIAL, D_LAND_PRICE]);
    let spec = DesignSpec::new(DIST, &numeric, &[WARD, INDUSTRY]);
    spec.check_columns(table)?;
    Ok(spec)
}

/// Consumer travel distance on PCI, gender (and optionally purchase count),
/// with age-group, home-ward and industry fixed effects.
pub fn spec_consumer(table: &Table, variant: ConsumerVariant) -> Result<DesignSpec> {
    use columns::*;
    let mut numeric = vec![PCI];
    if variant == ConsumerVariant::WithCount {
        numeric.push(COUNT);
    }
    numeric.push(FEMALE);
    let spec = DesignSpec::new(DIST, &numeric, &[AGE_GROUP, WARD, INDUSTRY]);
    spec.check_columns(table)?;
    Ok(spec)
}
