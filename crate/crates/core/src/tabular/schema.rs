use std::collections::HashSet;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VariableKind {
    Continuous,
    Binary,
    Categorical,
}

impl VariableKind {
    pub fn is_discrete(self) -> bool {
        !matches!(self, VariableKind::Continuous)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VariableSpec {
    pub name: String,
    pub kind: VariableKind,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub levels: Vec<String>,
}

impl VariableSpec {
    pub fn continuous(name: impl Into<String>) -> Self {
        VariableSpec {
            name: name.into(),
            kind: VariableKind::Continuous,
            levels: Vec::new(),
        }
    }

    pub fn binary(name: impl Into<String>, levels: [&str; 2]) -> Self {
        VariableSpec {
            name: name.into(),
            kind: VariableKind::Binary,
            levels: levels.iter().map(|s| s.to_string()).collect(),
        }
    }

    pub fn categorical<S: Into<String>>(name: impl Into<String>, levels: impl IntoIterator<Item = S>) -> Self {
        VariableSpec {
            name: name.into(),
            kind: VariableKind::Categorical,
            levels: levels.into_iter().map(Into::into).collect(),
        }
    }

    pub fn n_levels(&self) -> usize {
        self.levels.len()
    }

    pub fn level_index(&self, label: &str) -> Option<u32> {
        self.levels.iter().position(|l| l == label).map(|i| i as u32)
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Schema(format!("variable {:?}: {msg}", self.name)));
        match self.kind {
            VariableKind::Continuous if !self.levels.is_empty() => {
                return fail("continuous variables carry no levels".into())
            }
            VariableKind::Binary if self.levels.len() != 2 => {
                return fail(format!("binary variables need exactly 2 levels, got {}", self.levels.len()))
            }
            VariableKind::Categorical if self.levels.len() < 2 => {
                return fail(format!("categorical variables need at least 2 levels, got {}", self.levels.len()))
            }
            _ => {}
        }
        let mut seen = HashSet::new();
        for level in &self.levels {
            if !seen.insert(level.as_str()) {
                return fail(format!("duplicate level {level:?}"));
            }
        }
        Ok(())
    }
}

/// Ordered variable list. The order is the MICE visit order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Schema {
    pub variables: Vec<VariableSpec>,
}

impl Schema {
    pub fn new(variables: Vec<VariableSpec>) -> Result<Self> {
        let schema = Schema { variables };
        schema.validate()?;
        Ok(schema)
    }

    pub fn validate(&self) -> Result<()> {
        let mut names = HashSet::new();
        for var in &self.variables {
            var.validate()?;
            if !names.insert(var.name.as_str()) {
                return Err(Error::Schema(format!("duplicate variable name {:?}", var.name)));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.variables.len()
    }

    pub fn is_empty(&self) -> bool {
        self.variables.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.variables.iter().position(|v| v.name == name)
    }

    pub fn require(&self, name: &str) -> Result<usize> {
        self.index_of(name)
            .ok_or_else(|| Error::Schema(format!("unknown variable {name:?}")))
    }

    pub fn names(&self) -> Vec<String> {
        self.variables.iter().map(|v| v.name.clone()).collect()
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let schema: Schema = serde_json::from_str(text)?;
        schema.validate()?;
        Ok(schema)
    }

    pub fn load_json(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json_str(&text)
    }

    pub fn save_json(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let text = serde_json::to_string_pretty(self)?;
        fs::write(path, text).map_err(|e| Error::io(path, e))
    }
}
