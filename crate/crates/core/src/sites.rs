use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{bail, Result};

/// Ordered, pairwise distinct site labels on ℤ.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<i64>", into = "Vec<i64>")]
pub struct SiteSet {
    labels: Vec<i64>,
}

impl SiteSet {
    pub fn new(labels: Vec<i64>) -> Result<Self> {
        if labels.is_empty() {
            bail!(Domain, "a site set needs at least one site");
        }
        let mut sorted = labels.clone();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            bail!(Domain, "site labels must be pairwise distinct");
        }
        Ok(Self { labels })
    }

    /// Consecutive integers `from..=to`.
    pub fn range(from: i64, to: i64) -> Result<Self> {
        Self::new((from..=to).collect())
    }

    pub fn labels(&self) -> &[i64] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn index_of(&self, label: i64) -> Option<usize> {
        self.labels.iter().position(|&s| s == label)
    }

    pub fn shifted(&self, by: i64) -> Self {
        Self { labels: self.labels.iter().map(|s| s + by).collect() }
    }

    /// Sites picked by index, in the given order.
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        let mut labels = Vec::with_capacity(indices.len());
        for &i in indices {
            match self.labels.get(i) {
                Some(&s) => labels.push(s),
                None => bail!(Domain, "site index {i} out of range"),
            }
        }
        Self::new(labels)
    }
}

impl TryFrom<Vec<i64>> for SiteSet {
    type Error = crate::Error;

    fn try_from(labels: Vec<i64>) -> Result<Self> {
        Self::new(labels)
    }
}

impl From<SiteSet> for Vec<i64> {
    fn from(s: SiteSet) -> Vec<i64> {
        s.labels
    }
}
