//! Demographic statistics over a partitioned, attributed interaction network.
//!
//! Operations here are pure functions over immutable inputs: an attribute
//! table, a submarket assignment, and either an undirected graph or a log of
//! directed first contacts.

mod demographics;
mod messaging;

pub use demographics::{
    age_quantiles, relative_minority_age, sex_ratio, AgeQuantileCell, AgeQuantiles,
    MinorityAgeCell, MinorityAgeTable, QuantileSummary, SexRatioCell, SexRatioTable,
};
pub use messaging::{
    age_gap_matrix, mixing_matrix, within_fraction, AgeGapCell, AgeGapTable, EdgeSource,
    MessageMatrix, Stage,
};

use serde::{Deserialize, Serialize};
use std::str::FromStr;

use crate::{Error, Result};

/// Cells with fewer members than this are flagged low-support.
pub const DEFAULT_MIN_MEMBERS: usize = 10;
/// Message cells with fewer sent messages than this are flagged low-support.
pub const DEFAULT_MIN_MESSAGES: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sex {
    #[serde(rename = "M")]
    Male,
    #[serde(rename = "F")]
    Female,
}

impl FromStr for Sex {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "M" | "m" => Ok(Sex::Male),
            "F" | "f" => Ok(Sex::Female),
            other => Err(Error::invalid(format!("unknown sex code {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Ethnicity {
    Asian,
    Black,
    Hispanic,
    White,
    Other,
}

impl Ethnicity {
    pub const ALL: [Ethnicity; 5] = [
        Ethnicity::Asian,
        Ethnicity::Black,
        Ethnicity::Hispanic,
        Ethnicity::White,
        Ethnicity::Other,
    ];

    /// Single-category strings map to their category; anything else
    /// (including multi-category strings) resolves to `Other`.
    pub fn parse_lenient(s: &str) -> Ethnicity {
        match s.trim().to_ascii_lowercase().as_str() {
            "asian" => Ethnicity::Asian,
            "black" => Ethnicity::Black,
            "hispanic" => Ethnicity::Hispanic,
            "white" => Ethnicity::White,
            _ => Ethnicity::Other,
        }
    }

    pub fn code(&self) -> &'static str {
        match self {
            Ethnicity::Asian => "Asian",
            Ethnicity::Black => "Black",
            Ethnicity::Hispanic => "Hispanic",
            Ethnicity::White => "White",
            Ethnicity::Other => "Other",
        }
    }
}

/// Per-node demographic attributes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeAttributes {
    pub sex: Sex,
    pub age: f64,
    pub ethnicity: Ethnicity,
    pub region: Option<String>,
}

/// Attribute rows indexed by node. Every node referenced by a partition or
/// log must have a row; ages must lie in `[18, 100]`.
#[derive(Debug, Clone)]
pub struct AttributeTable {
    rows: Vec<NodeAttributes>,
}

impl AttributeTable {
    pub fn new(rows: Vec<NodeAttributes>) -> Result<Self> {
        for (i, row) in rows.iter().enumerate() {
            if !(18.0..=100.0).contains(&row.age) {
                return Err(Error::invalid(format!(
                    "age {} of node {i} outside [18, 100]",
                    row.age
                )));
            }
        }
        Ok(AttributeTable { rows })
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn get(&self, i: usize) -> &NodeAttributes {
        &self.rows[i]
    }

    pub fn rows(&self) -> &[NodeAttributes] {
        &self.rows
    }
}

/// One directed first contact and whether it was answered.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Contact {
    pub sender: usize,
    pub receiver: usize,
    pub replied: bool,
}

/// First-contact records: no self-contacts, at most one per ordered pair.
#[derive(Debug, Clone, Default)]
pub struct ContactLog {
    records: Vec<Contact>,
}

impl ContactLog {
    pub fn new(records: Vec<Contact>) -> Result<Self> {
        let mut seen = std::collections::HashSet::new();
        for c in &records {
            if c.sender == c.receiver {
                return Err(Error::invalid(format!("self-contact on node {}", c.sender)));
            }
            if !seen.insert((c.sender, c.receiver)) {
                return Err(Error::invalid(format!(
                    "duplicate contact {} -> {}",
                    c.sender, c.receiver
                )));
            }
        }
        Ok(ContactLog { records })
    }

    pub fn records(&self) -> &[Contact] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Keep only contacts whose sender has the given sex (and the receiver the
    /// opposite one).
    pub fn restrict_direction(&self, attrs: &AttributeTable, sender_sex: Sex) -> ContactLog {
        let records = self
            .records
            .iter()
            .filter(|c| attrs.get(c.sender).sex == sender_sex && attrs.get(c.receiver).sex != sender_sex)
            .copied()
            .collect();
        ContactLog { records }
    }

    /// Keep only contacts that received a reply.
    pub fn replied_only(&self) -> ContactLog {
        ContactLog { records: self.records.iter().filter(|c| c.replied).copied().collect() }
    }
}

/// Node-to-submarket assignment.
#[derive(Debug, Clone)]
pub struct Submarkets {
    labels: Vec<usize>,
    count: usize,
}

impl Submarkets {
    pub fn new(labels: Vec<usize>) -> Self {
        let count = labels.iter().copied().max().map_or(0, |m| m + 1);
        Submarkets { labels, count }
    }

    pub fn with_count(labels: Vec<usize>, count: usize) -> Result<Self> {
        if let Some(&bad) = labels.iter().find(|&&s| s >= count) {
            return Err(Error::invalid(format!("submarket {bad} out of range")));
        }
        Ok(Submarkets { labels, count })
    }

    pub fn label(&self, node: usize) -> usize {
        self.labels[node]
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    /// Member lists per submarket, ascending.
    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut members = vec![Vec::new(); self.count];
        for (i, &s) in self.labels.iter().enumerate() {
            members[s].push(i);
        }
        members
    }
}
