//! JSON model files.
//!
//! ```json
//! { "denominator": 2,
//!   "support": [[0, 0.25], [1, 0.5], [2, 0.25]],
//!   "support_exact": [[0, [1, 4]], [1, [1, 2]], [2, [1, 4]]] }
//! ```

use std::path::Path;

use num_bigint::BigInt;
use num_rational::BigRational;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::OutcomeModel;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub denominator: u32,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub support: Vec<(u32, f64)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub support_exact: Option<Vec<(u32, (i64, i64))>>,
}

impl ModelFile {
    pub fn into_model(self) -> Result<OutcomeModel> {
        match self.support_exact {
            Some(exact) => {
                let mut support = Vec::with_capacity(exact.len());
                for (m, (num, den)) in exact {
                    if den <= 0 {
                        return Err(Error::config(format!("exact weight {num}/{den} has a nonpositive denominator")));
                    }
                    support.push((m, BigRational::new(BigInt::from(num), BigInt::from(den))));
                }
                let model = OutcomeModel::from_exact(self.denominator, support)?;
                if !self.support.is_empty() {
                    let consistent = self.support.len() == model.support.len()
                        && self
                            .support
                            .iter()
                            .zip(&model.support)
                            .all(|(a, b)| a.0 == b.0 && (a.1 - b.1).abs() <= 1e-12);
                    if !consistent {
                        return Err(Error::config("support and support_exact disagree"));
                    }
                }
                Ok(model)
            }
            None => OutcomeModel::new(self.denominator, self.support),
        }
    }

    pub fn from_model(model: &OutcomeModel) -> Self {
        let support_exact = model.exact_weights().and_then(|w| {
            w.iter()
                .zip(&model.support)
                .map(|(r, &(m, _))| {
                    let num = i64::try_from(r.numer()).ok()?;
                    let den = i64::try_from(r.denom()).ok()?;
                    Some((m, (num, den)))
                })
                .collect()
        });
        ModelFile {
            denominator: model.denominator,
            support: model.support.clone(),
            support_exact,
        }
    }
}

/// Resolves a builtin name (`classical`, `chess`) or reads a model file.
pub fn load_model(spec: &str) -> Result<OutcomeModel> {
    match spec {
        "classical" => Ok(OutcomeModel::classical()),
        "chess" => Ok(OutcomeModel::chess()),
        path => {
            let text = std::fs::read_to_string(Path::new(path))
                .map_err(|e| Error::config(format!("cannot read model file {path}: {e}")))?;
            let file: ModelFile = serde_json::from_str(&text)
                .map_err(|e| Error::config(format!("model file {path}: {e}")))?;
            file.into_model()
        }
    }
}
