use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::objective::{LabeledDataset, Objective};

/// One client of the federation.
///
/// `p` is the client's data normalized by the priority clients' total,
/// `D_k / Σ_{i∈P} D_i`, for priority and non-priority clients alike. The
/// priority weights therefore sum to one while the full roster generally
/// does not.
#[derive(Clone, Debug, PartialEq)]
pub struct ClientSpec {
    pub id: usize,
    pub dataset: LabeledDataset,
    pub is_priority: bool,
    pub p: f64,
}

/// The part of a [`ClientSpec`] that aggregation and diagnostics need.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClientWeight {
    pub p: f64,
    pub is_priority: bool,
}

impl ClientWeight {
    pub fn priority(p: f64) -> Self {
        Self { p, is_priority: true }
    }

    pub fn nonpriority(p: f64) -> Self {
        Self { p, is_priority: false }
    }
}

impl ClientSpec {
    /// Numbers the clients in order and assigns data fractions.
    pub fn roster(members: Vec<(LabeledDataset, bool)>) -> Result<Vec<ClientSpec>> {
        let priority_total: usize = members.iter().filter(|(_, prio)| *prio).map(|(ds, _)| ds.len()).sum();
        if priority_total == 0 {
            return Err(Error::Config("the federation needs at least one priority client".into()));
        }
        if let Some((first, _)) = members.first() {
            if members.iter().any(|(ds, _)| ds.shape() != first.shape()) {
                return Err(Error::Config("all clients must share feature and class dimensions".into()));
            }
        }
        Ok(members
            .into_iter()
            .enumerate()
            .map(|(id, (dataset, is_priority))| ClientSpec {
                id,
                p: dataset.len() as f64 / priority_total as f64,
                dataset,
                is_priority,
            })
            .collect())
    }

    pub fn weight(&self) -> ClientWeight {
        ClientWeight { p: self.p, is_priority: self.is_priority }
    }

    pub fn objective(&self, reg_lambda: f64) -> Objective<'_> {
        Objective::new(&self.dataset, reg_lambda)
    }
}

pub fn weights(clients: &[ClientSpec]) -> Vec<ClientWeight> {
    clients.iter().map(ClientSpec::weight).collect()
}

/// Checks ids, shapes and the priority normalization of a roster.
pub fn validate_roster(clients: &[ClientSpec]) -> Result<()> {
    let first = clients
        .first()
        .ok_or_else(|| Error::Config("the federation has no clients".into()))?;
    let mut priority_sum = 0.0;
    let mut any_priority = false;
    for (i, c) in clients.iter().enumerate() {
        if c.id != i {
            return Err(Error::Config(format!("client at position {i} has id {}", c.id)));
        }
        if c.dataset.shape() != first.dataset.shape() {
            return Err(Error::Config(format!("client {i} has a different model shape")));
        }
        if !(c.p >= 0.0 && c.p.is_finite()) {
            return Err(Error::Config(format!("client {i} has invalid data fraction {}", c.p)));
        }
        if c.is_priority {
            any_priority = true;
            priority_sum += c.p;
        }
    }
    if !any_priority {
        return Err(Error::Config("the federation needs at least one priority client".into()));
    }
    if (priority_sum - 1.0).abs() > 1e-12 {
        return Err(Error::Config(format!("priority data fractions sum to {priority_sum}, not 1")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ds(n: usize) -> LabeledDataset {
        LabeledDataset::new(vec![0.5; n], vec![0; n], 1, 2).unwrap()
    }

    #[test]
    fn fractions_are_normalized_by_priority_data() {
        let roster = ClientSpec::roster(vec![(ds(30), true), (ds(10), true), (ds(20), false)]).unwrap();
        assert_eq!(roster[0].p, 0.75);
        assert_eq!(roster[1].p, 0.25);
        assert_eq!(roster[2].p, 0.5);
        validate_roster(&roster).unwrap();
    }

    #[test]
    fn roster_without_priority_client_rejected() {
        assert!(ClientSpec::roster(vec![(ds(3), false)]).is_err());
    }
}
