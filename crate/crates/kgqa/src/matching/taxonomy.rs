//! Hierarchical fine-grained type labels.
//!
//! Labels are slash-separated paths (`person/artist/music`); the first
//! segment is the coarse type. Every fine label must have all of its prefix
//! ancestors present in the set. The bundled inventory lives in
//! `assets/taxonomy.txt`, one label per line.

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;
use std::sync::OnceLock;

use crate::error::{Error, Result};

/// Root label assigned when no metadata and no backend inference apply.
pub const OTHER: &str = "other";

const BUILTIN: &str = include_str!("../../assets/taxonomy.txt");

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TypeTaxonomy {
    labels: BTreeSet<String>,
}

impl TypeTaxonomy {
    /// The inventory shipped with the crate (~90 hierarchical labels).
    pub fn builtin() -> &'static TypeTaxonomy {
        static INSTANCE: OnceLock<TypeTaxonomy> = OnceLock::new();
        INSTANCE.get_or_init(|| {
            TypeTaxonomy::parse(BUILTIN).expect("bundled taxonomy must be valid")
        })
    }

    pub fn parse(content: &str) -> Result<Self> {
        let mut labels = BTreeSet::new();
        for (i, line) in content.lines().enumerate() {
            let label = line.trim();
            if label.is_empty() {
                continue;
            }
            if !labels.insert(label.to_string()) {
                return Err(Error::Config(format!(
                    "duplicate taxonomy label at line {}: {label}",
                    i + 1
                )));
            }
        }
        let taxonomy = TypeTaxonomy { labels };
        taxonomy.validate()?;
        Ok(taxonomy)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let content = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&content)
    }

    fn validate(&self) -> Result<()> {
        for label in &self.labels {
            if label.split('/').any(str::is_empty) {
                return Err(Error::Config(format!(
                    "taxonomy label has empty segment: {label}"
                )));
            }
            let mut prefix = String::new();
            let segments: Vec<&str> = label.split('/').collect();
            for segment in &segments[..segments.len() - 1] {
                if !prefix.is_empty() {
                    prefix.push('/');
                }
                prefix.push_str(segment);
                if !self.labels.contains(&prefix) {
                    return Err(Error::Config(format!(
                        "taxonomy label {label} is missing ancestor {prefix}"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn contains(&self, label: &str) -> bool {
        self.labels.contains(label)
    }

    pub fn labels(&self) -> impl Iterator<Item = &str> {
        self.labels.iter().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

/// Coarse prefix of a label: everything before the first slash.
pub fn coarse(label: &str) -> &str {
    label.split('/').next().unwrap_or(label)
}

/// True when `descendant` equals `ancestor` or sits below it in the
/// slash hierarchy.
pub fn is_under(descendant: &str, ancestor: &str) -> bool {
    descendant == ancestor
        || (descendant.len() > ancestor.len()
            && descendant.starts_with(ancestor)
            && descendant.as_bytes()[ancestor.len()] == b'/')
}
