//! Column roles and run options read from a TOML file.
//!
//! ```toml
//! class = "class"
//! response = "mq4"
//! numeric = ["dagd", "cwt"]
//! classes = ["A1", "A2"]        # optional: declared classes
//! mask = "class"                # or "listwise"
//! response_range = [0, 100]     # optional, this is the default
//! thresholds = [40, 60, 80]     # optional star thresholds
//!
//! [categorical.sex]
//! levels = ["F", "M"]           # optional, default: observed values
//! reference = "F"               # optional, default: first level
//! ```

use std::collections::BTreeMap;
use std::path::Path;

use mcfuse_core::data::MaskPolicy;
use mcfuse_core::StarThresholds;
use serde::{Deserialize, Serialize};

use crate::error::{AppError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Schema {
    pub class: String,
    pub response: String,
    #[serde(default)]
    pub numeric: Vec<String>,
    #[serde(default)]
    pub categorical: BTreeMap<String, CategoricalSpec>,
    #[serde(default)]
    pub classes: Vec<String>,
    #[serde(default)]
    pub mask: MaskPolicy,
    #[serde(default = "default_range")]
    pub response_range: Option<[f64; 2]>,
    #[serde(default)]
    pub thresholds: Option<[f64; 3]>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CategoricalSpec {
    pub levels: Option<Vec<String>>,
    pub reference: Option<String>,
}

fn default_range() -> Option<[f64; 2]> {
    Some([0.0, 100.0])
}

impl Schema {
    pub fn load(path: &Path) -> Result<Schema> {
        let text = std::fs::read_to_string(path).map_err(|e| AppError::io(path, e))?;
        let schema: Schema =
            toml::from_str(&text).map_err(|e| AppError::Schema { path: path.into(), message: e.to_string() })?;
        schema.check().map_err(|message| AppError::Schema { path: path.into(), message })?;
        Ok(schema)
    }

    fn check(&self) -> std::result::Result<(), String> {
        let mut seen = vec![&self.class, &self.response];
        for name in self.numeric.iter().chain(self.categorical.keys()) {
            if seen.contains(&name) {
                return Err(format!("column `{name}` is declared twice"));
            }
            seen.push(name);
        }
        if let Some([lo, hi]) = self.response_range {
            if !(lo < hi) {
                return Err("response_range must be increasing".into());
            }
        }
        for (name, spec) in &self.categorical {
            if let (Some(levels), Some(r)) = (&spec.levels, &spec.reference) {
                if !levels.contains(r) {
                    return Err(format!("reference level `{r}` of `{name}` is not among its levels"));
                }
            }
        }
        Ok(())
    }

    pub fn thresholds(&self) -> Result<Option<StarThresholds>> {
        match self.thresholds {
            Some([a, b, c]) => Ok(Some(StarThresholds::new(a, b, c)?)),
            None => Ok(None),
        }
    }

    pub fn role(&self, column: &str) -> Option<Role> {
        if column == self.class {
            Some(Role::Class)
        } else if column == self.response {
            Some(Role::Response)
        } else if self.numeric.iter().any(|c| c == column) {
            Some(Role::Numeric)
        } else if self.categorical.contains_key(column) {
            Some(Role::Categorical)
        } else {
            None
        }
    }

    pub fn declared_columns(&self) -> impl Iterator<Item = &String> {
        [&self.class, &self.response].into_iter().chain(&self.numeric).chain(self.categorical.keys())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Class,
    Response,
    Numeric,
    Categorical,
}
