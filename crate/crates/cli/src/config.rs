//! Model configuration: JSON files plus command-line overrides.
//!
//! File schema:
//! `{"N": int, "m": int, "d": float, "nonlinearity": {"kind": string, "coefficients": [float]}}`
//! with kinds `cubic-quintic`, `normal-cubic`, `normal-fold`, and `poly`
//! (odd polynomial with explicit coefficients for `u³, u⁵, …`).

use anyhow::{anyhow, bail, Context, Result};
use ring_snake_core::model::{Nonlinearity, NonlinearityKind, RingModel};
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ModelConfig {
    #[serde(rename = "N")]
    pub n: usize,
    pub m: usize,
    pub d: f64,
    pub nonlinearity: NonlinearityConfig,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NonlinearityConfig {
    pub kind: String,
    #[serde(default)]
    pub coefficients: Vec<f64>,
}

impl NonlinearityConfig {
    pub fn to_nonlinearity(&self) -> Result<Nonlinearity> {
        match self.kind.as_str() {
            "cubic-quintic" => Ok(Nonlinearity::cubic_quintic()),
            "normal-cubic" => Ok(Nonlinearity::normal_form_cubic()),
            "normal-fold" => Ok(Nonlinearity::normal_form_fold()),
            "poly" => {
                if self.coefficients.is_empty() {
                    bail!("odd polynomial nonlinearity needs coefficients");
                }
                Ok(Nonlinearity::odd_polynomial(self.coefficients.clone()))
            }
            other => bail!("unknown nonlinearity kind '{other}'"),
        }
    }

    pub fn from_nonlinearity(nl: &Nonlinearity) -> Self {
        let (kind, coefficients) = match nl.kind {
            NonlinearityKind::CubicQuintic => ("cubic-quintic", vec![]),
            NonlinearityKind::NormalFormCubic => ("normal-cubic", vec![]),
            NonlinearityKind::NormalFormFold => ("normal-fold", vec![]),
            NonlinearityKind::CustomOddPolynomial => ("poly", nl.coefficients.clone()),
        };
        NonlinearityConfig {
            kind: kind.to_string(),
            coefficients,
        }
    }
}

/// Parse the `--nonlinearity` flag grammar:
/// `cubic-quintic | normal-cubic | normal-fold | poly:<c3,c5,...>`.
pub fn parse_nonlinearity_flag(s: &str) -> Result<Nonlinearity> {
    if let Some(rest) = s.strip_prefix("poly:") {
        let coeffs: Vec<f64> = rest
            .split(',')
            .map(|t| {
                t.trim()
                    .parse::<f64>()
                    .map_err(|_| anyhow!("bad coefficient '{t}' in '{s}'"))
            })
            .collect::<Result<_>>()?;
        if coeffs.is_empty() {
            bail!("poly: needs at least one coefficient");
        }
        return Ok(Nonlinearity::odd_polynomial(coeffs));
    }
    match s {
        "cubic-quintic" => Ok(Nonlinearity::cubic_quintic()),
        "normal-cubic" => Ok(Nonlinearity::normal_form_cubic()),
        "normal-fold" => Ok(Nonlinearity::normal_form_fold()),
        other => bail!("unknown nonlinearity '{other}' (expected cubic-quintic, normal-cubic, normal-fold, or poly:<coeffs>)"),
    }
}

/// Assemble the model from an optional config file and explicit flag
/// overrides; flags win over file values. Defaults echo the reference
/// computation: `N = 20`, `m = 1`, `d = 0.005`, cubic-quintic.
pub fn resolve_model(
    config_path: Option<&Path>,
    n: Option<usize>,
    m: Option<usize>,
    d: Option<f64>,
    nonlinearity: Option<&str>,
) -> Result<RingModel> {
    let file: Option<ModelConfig> = match config_path {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading config {}", path.display()))?;
            Some(serde_json::from_str(&text).context("parsing model config")?)
        }
        None => None,
    };
    let n = n.or(file.as_ref().map(|f| f.n)).unwrap_or(20);
    let m = m.or(file.as_ref().map(|f| f.m)).unwrap_or(1);
    let d = d.or(file.as_ref().map(|f| f.d)).unwrap_or(0.005);
    let nl = match nonlinearity {
        Some(flag) => parse_nonlinearity_flag(flag)?,
        None => match &file {
            Some(f) => f.nonlinearity.to_nonlinearity()?,
            None => Nonlinearity::cubic_quintic(),
        },
    };
    RingModel::new(n, m, d, nl).map_err(|e| anyhow!("{e}"))
}
