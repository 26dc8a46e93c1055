//! Domain types shared by the bounds, the retrieval schemes and the
//! simulation engine.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::binary_entropy;

/// `M` messages of `L` bits each, replicated on every database.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MessageStore {
    length: usize,
    bits: Vec<Vec<u8>>,
}

impl MessageStore {
    pub fn new(bits: Vec<Vec<u8>>) -> Result<Self> {
        let length = bits.first().map_or(0, Vec::len);
        if bits.is_empty() || length == 0 {
            return Err(Error::Config("a store needs M >= 1 and L >= 1".into()));
        }
        for row in &bits {
            if row.len() != length {
                return Err(Error::LengthMismatch {
                    expected: length,
                    actual: row.len(),
                });
            }
            if row.iter().any(|&b| b > 1) {
                return Err(Error::Config("message symbols must be bits".into()));
            }
        }
        Ok(Self { length, bits })
    }

    pub fn zeros(messages: usize, length: usize) -> Result<Self> {
        Self::new(vec![vec![0; length]; messages])
    }

    /// Messages drawn uniformly from `GF(2)^L`.
    pub fn random<R: Rng + ?Sized>(messages: usize, length: usize, rng: &mut R) -> Result<Self> {
        Self::new(
            (0..messages)
                .map(|_| (0..length).map(|_| rng.gen_range(0..=1u8)).collect())
                .collect(),
        )
    }

    pub fn messages(&self) -> usize {
        self.bits.len()
    }

    pub fn length(&self) -> usize {
        self.length
    }

    pub fn message(&self, m: usize) -> &[u8] {
        &self.bits[m]
    }

    pub fn bit(&self, m: usize, position: usize) -> u8 {
        self.bits[m][position]
    }
}

/// Channel capacities sorted non-increasingly, with the map back to the
/// physical database order they were supplied in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CapacityVector {
    values: Vec<f64>,
    physical: Vec<usize>,
}

impl CapacityVector {
    /// Sorts `raw` non-increasingly; entries outside `[0, 1]` are rejected.
    pub fn new(raw: &[f64]) -> Result<Self> {
        if raw.is_empty() {
            return Err(Error::InvalidCapacity("no databases".into()));
        }
        if let Some(bad) = raw.iter().find(|c| !(0.0..=1.0).contains(*c)) {
            return Err(Error::InvalidCapacity(format!("{bad} is outside [0, 1]")));
        }
        let mut physical: Vec<usize> = (0..raw.len()).collect();
        // stable: equal capacities keep their physical order
        physical.sort_by(|&a, &b| raw[b].partial_cmp(&raw[a]).expect("finite"));
        let values = physical.iter().map(|&i| raw[i]).collect();
        Ok(Self { values, physical })
    }

    /// `C_n = 1 - H(p_n)` for crossover probabilities in `[0, 1/2]`.
    pub fn from_bsc(crossovers: &[f64]) -> Result<Self> {
        let raw = crossovers
            .iter()
            .map(|&p| {
                if !(0.0..=0.5).contains(&p) {
                    return Err(Error::Domain {
                        value: p,
                        domain: "[0, 1/2]",
                    });
                }
                Ok(1.0 - binary_entropy(p)?)
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(&raw)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Physical index of the database at sorted position `n`.
    pub fn physical_index(&self, n: usize) -> usize {
        self.physical[n]
    }

    pub fn physical_order(&self) -> &[usize] {
        &self.physical
    }

    pub fn scaled(&self, factor: f64) -> Result<Self> {
        let raw: Vec<f64> = self.values.iter().map(|c| c * factor).collect();
        Self::new(&raw)
    }
}

/// Fraction of the total download contributed by each database.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrafficVector(Vec<f64>);

impl TrafficVector {
    pub const SUM_TOLERANCE: f64 = 1e-12;

    pub fn new(ratios: Vec<f64>) -> Result<Self> {
        if ratios.iter().any(|&t| t < 0.0) {
            return Err(Error::InvalidTraffic("negative ratio".into()));
        }
        let total: f64 = ratios.iter().sum();
        if (total - 1.0).abs() > Self::SUM_TOLERANCE {
            return Err(Error::InvalidTraffic(format!("ratios sum to {total}")));
        }
        Ok(Self(ratios))
    }

    /// Clips round-off negatives to zero and renormalizes before validating;
    /// used on LP output.
    pub(crate) fn from_solver(raw: Vec<f64>) -> Result<Self> {
        let clipped: Vec<f64> = raw.into_iter().map(|t| t.max(0.0)).collect();
        let total: f64 = clipped.iter().sum();
        Self::new(clipped.into_iter().map(|t| t / total).collect())
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }
}

/// A monotone sequence `1 ≤ n_0 ≤ … ≤ n_{M-1} ≤ N` selecting a corner
/// point of the asymmetric-traffic scheme.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct GroupSequence(Vec<usize>);

impl GroupSequence {
    pub fn new(values: Vec<usize>, databases: usize) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidSequence("empty sequence".into()));
        }
        if values[0] < 1 {
            return Err(Error::InvalidSequence("n_0 must be at least 1".into()));
        }
        if values.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::InvalidSequence(format!(
                "{values:?} is not non-decreasing"
            )));
        }
        if *values.last().expect("non-empty") > databases {
            return Err(Error::InvalidSequence(format!(
                "{values:?} exceeds N = {databases}"
            )));
        }
        Ok(Self(values))
    }

    /// Every valid sequence of length `messages` over `1..=databases`, in
    /// lexicographic order.
    pub fn enumerate(messages: usize, databases: usize) -> Vec<GroupSequence> {
        fn extend(prefix: &mut Vec<usize>, len: usize, max: usize, out: &mut Vec<GroupSequence>) {
            if prefix.len() == len {
                out.push(GroupSequence(prefix.clone()));
                return;
            }
            let start = prefix.last().copied().unwrap_or(1);
            for v in start..=max {
                prefix.push(v);
                extend(prefix, len, max, out);
                prefix.pop();
            }
        }
        let mut out = Vec::new();
        if messages > 0 && databases > 0 {
            extend(&mut Vec::with_capacity(messages), messages, databases, &mut out);
        }
        out
    }

    pub fn values(&self) -> &[usize] {
        &self.0
    }

    /// Number of messages `M`.
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// `n_i`, with `n_{-1} = 0`.
    pub fn at(&self, i: isize) -> usize {
        if i < 0 {
            0
        } else {
            self.0[i as usize]
        }
    }

    /// Size of group `i`: `n_i - n_{i-1}`.
    pub fn group_size(&self, i: usize) -> usize {
        self.at(i as isize) - self.at(i as isize - 1)
    }

    /// The non-empty groups `{i ≥ 0 : n_i > n_{i-1}}`.
    pub fn groups(&self) -> Vec<usize> {
        (0..self.0.len()).filter(|&i| self.group_size(i) > 0).collect()
    }

    /// Group containing the (sorted, 0-based) database `n`, if it is used.
    pub fn group_of(&self, n: usize) -> Option<usize> {
        self.groups()
            .into_iter()
            .find(|&g| n >= self.at(g as isize - 1) && n < self.at(g as isize))
    }

    /// Number of databases the scheme talks to, `n_{M-1}`.
    pub fn used(&self) -> usize {
        *self.0.last().expect("non-empty")
    }
}

impl std::fmt::Display for GroupSequence {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|v| v.to_string()).collect();
        write!(f, "({})", parts.join(","))
    }
}

/// Outcome of one or more retrieval sessions.
///
/// `desired_index` is 1-based. `t_per_db` follows the physical database
/// order. `errors` counts wrongly recovered desired bits over all trials.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionReport {
    pub desired_index: usize,
    pub t_per_db: Vec<usize>,
    pub t_total: usize,
    #[serde(rename = "L")]
    pub message_length: usize,
    pub rate: f64,
    pub errors: usize,
    pub trials: usize,
    pub seed: u64,
    pub target_rate: f64,
    pub decode_failures: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub recovered: Option<String>,
}

impl SessionReport {
    pub fn succeeded(&self) -> bool {
        self.decode_failures == 0 && self.errors == 0
    }

    pub fn success_rate(&self) -> f64 {
        if self.trials == 0 {
            return 0.0;
        }
        1.0 - self.decode_failures as f64 / self.trials as f64
    }

    /// Associative merge of reports produced from the same configuration.
    pub fn merge(mut self, other: &SessionReport) -> Result<SessionReport> {
        if self.t_per_db != other.t_per_db || self.message_length != other.message_length {
            return Err(Error::Config(
                "cannot merge reports of different configurations".into(),
            ));
        }
        self.errors += other.errors;
        self.trials += other.trials;
        self.decode_failures += other.decode_failures;
        self.recovered = None;
        Ok(self)
    }
}

pub(crate) fn bits_to_string(bits: &[u8]) -> String {
    bits.iter().map(|&b| if b == 1 { '1' } else { '0' }).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn capacity_vector_sorts_and_remembers_physical_order() {
        let c = CapacityVector::new(&[0.5, 1.0]).unwrap();
        assert_eq!(c.values(), &[1.0, 0.5]);
        assert_eq!(c.physical_order(), &[1, 0]);
        let c = CapacityVector::new(&[1.0, 1.0, 1.0]).unwrap();
        assert_eq!(c.values(), &[1.0, 1.0, 1.0]);
        assert_eq!(c.physical_order(), &[0, 1, 2]);
        assert!(CapacityVector::new(&[1.2]).is_err());
        assert!(CapacityVector::new(&[-0.1, 0.3]).is_err());
    }

    #[test]
    fn capacities_from_crossovers() {
        let c = CapacityVector::from_bsc(&[0.0, 0.0]).unwrap();
        assert_eq!(c.values(), &[1.0, 1.0]);
        let c = CapacityVector::from_bsc(&[0.5]).unwrap();
        assert_eq!(c.values(), &[0.0]);
        // reference: 1 - H(0.1) = 0.53100440641..., 1 - H(0.2) = 0.27807190511...
        let c = CapacityVector::from_bsc(&[0.2, 0.1]).unwrap();
        assert!((c.values()[0] - 0.531_004_406_410_718_8).abs() < 1e-12);
        assert!((c.values()[1] - 0.278_071_905_112_637_7).abs() < 1e-12);
        assert_eq!(c.physical_order(), &[1, 0]);
        assert!(CapacityVector::from_bsc(&[0.6]).is_err());
        let already = CapacityVector::new(&[0.531, 0.278]).unwrap();
        assert_eq!(already.values(), &[0.531, 0.278]);
    }

    #[test]
    fn traffic_vector_lives_on_the_simplex() {
        assert!(TrafficVector::new(vec![0.25, 0.75]).is_ok());
        assert!(TrafficVector::new(vec![0.5, 0.6]).is_err());
        assert!(TrafficVector::new(vec![-0.5, 1.5]).is_err());
    }

    #[test]
    fn group_sequence_validation_and_groups() {
        assert!(GroupSequence::new(vec![2, 1], 2).is_err());
        assert!(GroupSequence::new(vec![0, 1], 2).is_err());
        assert!(GroupSequence::new(vec![1, 3], 2).is_err());
        let s = GroupSequence::new(vec![1, 2, 2], 2).unwrap();
        assert_eq!(s.groups(), vec![0, 1]);
        assert_eq!(s.group_of(0), Some(0));
        assert_eq!(s.group_of(1), Some(1));
        let s = GroupSequence::new(vec![1, 1, 2], 3).unwrap();
        assert_eq!(s.groups(), vec![0, 2]);
        assert_eq!(s.group_of(1), Some(2));
        assert_eq!(s.group_of(2), None);
    }

    #[test]
    fn enumeration_counts_multisets() {
        // binom(N + M - 1, M)
        assert_eq!(GroupSequence::enumerate(3, 2).len(), 4);
        assert_eq!(GroupSequence::enumerate(3, 3).len(), 10);
        assert_eq!(GroupSequence::enumerate(4, 4).len(), 35);
        assert_eq!(
            GroupSequence::enumerate(2, 2)
                .iter()
                .map(|s| s.values().to_vec())
                .collect::<Vec<_>>(),
            vec![vec![1, 1], vec![1, 2], vec![2, 2]]
        );
    }

    #[test]
    fn message_store_shape() {
        assert!(MessageStore::new(vec![vec![0, 1], vec![1]]).is_err());
        assert!(MessageStore::new(vec![]).is_err());
        assert!(MessageStore::new(vec![vec![2]]).is_err());
        let s = MessageStore::new(vec![vec![0, 1], vec![1, 1]]).unwrap();
        assert_eq!((s.messages(), s.length()), (2, 2));
    }

    #[test]
    fn report_json_field_names_are_stable() {
        let report = SessionReport {
            desired_index: 1,
            t_per_db: vec![4, 3],
            t_total: 7,
            message_length: 4,
            rate: 4.0 / 7.0,
            errors: 0,
            trials: 1,
            seed: 9,
            target_rate: 4.0 / 7.0,
            decode_failures: 0,
            recovered: None,
        };
        let json = serde_json::to_value(&report).unwrap();
        for key in [
            "desired_index",
            "t_per_db",
            "t_total",
            "L",
            "rate",
            "errors",
            "trials",
            "seed",
        ] {
            assert!(json.get(key).is_some(), "missing {key}");
        }
        let back: SessionReport = serde_json::from_value(json).unwrap();
        assert_eq!(back, report);
    }
}
