use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ColumnRole {
    /// z-normalized with training-split statistics.
    Numeric,
    /// One-hot over the levels seen in the training split.
    Categorical,
    Label,
    Sensitive,
    Drop,
}

/// How raw label strings become class ids.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum LabelMapping {
    /// Values in the list map to class 1, everything else to class 0.
    Positive(Vec<String>),
    /// Ordered class names; class id is the position in the list.
    Classes(Vec<String>),
    /// Labels are already integers `0..k`.
    Integer,
}

/// Column roles for CSV ingestion.
///
/// Schema files are plain `key = value` lines; `#` starts a comment and list
/// values are comma separated:
///
/// ```text
/// label = income
/// label_positive = >50K, >50K.
/// sensitive = sex
/// sensitive_positive = Female
/// numeric = age, hours-per-week
/// categorical = workclass, occupation
/// drop = fnlwgt
/// ```
///
/// Every CSV column must be assigned a role. `label_classes` replaces
/// `label_positive` for multi-class labels; with neither, labels must already
/// be integers. `sensitive_as_feature = true` also appends the attribute as a
/// 0/1 feature.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TabularSchema {
    pub roles: Vec<(String, ColumnRole)>,
    pub label_mapping: LabelMapping,
    pub sensitive_positive: Vec<String>,
    pub sensitive_as_feature: bool,
}

fn split_list(value: &str) -> Vec<String> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(str::to_owned)
        .collect()
}

impl TabularSchema {
    pub fn parse(text: &str) -> Result<Self> {
        let mut roles: Vec<(String, ColumnRole)> = Vec::new();
        let mut label_positive = None;
        let mut label_classes = None;
        let mut sensitive_positive = Vec::new();
        let mut sensitive_as_feature = false;

        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("schema line {}: expected `key = value`", lineno + 1))
            })?;
            let (key, value) = (key.trim(), value.trim());
            let role = match key {
                "label" => Some(ColumnRole::Label),
                "sensitive" => Some(ColumnRole::Sensitive),
                "numeric" => Some(ColumnRole::Numeric),
                "categorical" => Some(ColumnRole::Categorical),
                "drop" => Some(ColumnRole::Drop),
                _ => None,
            };
            if let Some(role) = role {
                for name in split_list(value) {
                    if roles.iter().any(|(n, _)| *n == name) {
                        return Err(Error::Config(format!(
                            "column `{name}` is assigned more than one role"
                        )));
                    }
                    roles.push((name, role));
                }
                continue;
            }
            match key {
                "label_positive" => label_positive = Some(split_list(value)),
                "label_classes" => label_classes = Some(split_list(value)),
                "sensitive_positive" => sensitive_positive = split_list(value),
                "sensitive_as_feature" => {
                    sensitive_as_feature = value.parse().map_err(|_| {
                        Error::Config(format!("sensitive_as_feature `{value}` is not a bool"))
                    })?
                }
                other => {
                    return Err(Error::Config(format!(
                        "schema line {}: unknown key `{other}`",
                        lineno + 1
                    )))
                }
            }
        }

        let count = |role| roles.iter().filter(|(_, r)| *r == role).count();
        if count(ColumnRole::Label) != 1 {
            return Err(Error::Config("schema needs exactly one label column".into()));
        }
        if count(ColumnRole::Sensitive) > 1 {
            return Err(Error::Config("schema allows at most one sensitive column".into()));
        }
        if count(ColumnRole::Sensitive) == 1 && sensitive_positive.is_empty() {
            return Err(Error::Config(
                "sensitive column needs `sensitive_positive` values".into(),
            ));
        }
        let label_mapping = match (label_positive, label_classes) {
            (Some(_), Some(_)) => {
                return Err(Error::Config(
                    "use either label_positive or label_classes, not both".into(),
                ))
            }
            (Some(p), None) => LabelMapping::Positive(p),
            (None, Some(c)) => LabelMapping::Classes(c),
            (None, None) => LabelMapping::Integer,
        };
        Ok(TabularSchema {
            roles,
            label_mapping,
            sensitive_positive,
            sensitive_as_feature,
        })
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        TabularSchema::parse(&text)
    }

    pub fn role(&self, column: &str) -> Option<ColumnRole> {
        self.roles
            .iter()
            .find(|(n, _)| n == column)
            .map(|(_, r)| *r)
    }

    pub fn column_with(&self, role: ColumnRole) -> Option<&str> {
        self.roles
            .iter()
            .find(|(_, r)| *r == role)
            .map(|(n, _)| n.as_str())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_roles_and_mappings() {
        let s = TabularSchema::parse(
            "# toy\nlabel = y\nlabel_positive = yes\nsensitive = sex\nsensitive_positive = F\n\
             numeric = age, hours\ncategorical = job\ndrop = id\n",
        )
        .unwrap();
        assert_eq!(s.role("age"), Some(ColumnRole::Numeric));
        assert_eq!(s.role("job"), Some(ColumnRole::Categorical));
        assert_eq!(s.role("id"), Some(ColumnRole::Drop));
        assert_eq!(s.column_with(ColumnRole::Label), Some("y"));
        assert_eq!(s.label_mapping, LabelMapping::Positive(vec!["yes".into()]));
        assert!(!s.sensitive_as_feature);
    }

    #[test]
    fn rejects_bad_schemas() {
        assert!(TabularSchema::parse("numeric = a").is_err());
        assert!(TabularSchema::parse("label = y\nlabel = z").is_err());
        assert!(TabularSchema::parse("label = y\nnumeric = y").is_err());
        assert!(TabularSchema::parse("label = y\nsensitive = s").is_err());
        assert!(TabularSchema::parse("label = y\nwhat = 3").is_err());
        assert!(TabularSchema::parse("label = y\nlabel_positive = a\nlabel_classes = a,b").is_err());
        assert!(TabularSchema::parse("label y").is_err());
    }
}
