//! Capacity bounds for retrieval over orthogonal noisy links.
//!
//! The upper bound is a maximin over traffic ratios, solved as a linear
//! program. The lower bound enumerates the corner points of the
//! asymmetric-traffic scheme; each corner point is described by a
//! [`StageTable`] obtained from a system of difference equations.

use std::collections::BTreeMap;

use num_rational::BigRational;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{binary_entropy, solve_lp, LinearProgram, LpScalar, Sense};
use crate::types::{CapacityVector, GroupSequence, TrafficVector};

/// Tolerance used to report which inner-minimum sequences bind at the
/// optimum.
pub const BINDING_TOLERANCE: f64 = 1e-9;

pub fn binomial(n: usize, k: usize) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u64, |acc, i| acc * (n - i) as u64 / (i + 1) as u64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UpperBound {
    pub value: f64,
    pub traffic: TrafficVector,
    /// Inner-minimum sequences `(n_1, …, n_{M-1})` (1-based) whose
    /// constraint is tight at the optimal traffic split.
    pub binding: Vec<Vec<usize>>,
}

/// All `(n_1, …, n_{M-1}) ∈ {1..N}^{M-1}` in lexicographic order.
fn inner_sequences(messages: usize, databases: usize) -> Vec<Vec<usize>> {
    let len = messages.saturating_sub(1);
    let mut out = vec![Vec::with_capacity(len)];
    for _ in 0..len {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                (1..=databases).map(move |v| {
                    let mut s = prefix.clone();
                    s.push(v);
                    s
                })
            })
            .collect();
    }
    out
}

/// Coefficients of `τ_1..τ_N` in the ratio for one inner sequence.
fn ratio_coefficients<S: LpScalar>(sequence: &[usize], capacities: &[S]) -> Vec<S> {
    let mut products = Vec::with_capacity(sequence.len());
    let mut running = 1usize;
    for &n in sequence {
        running *= n;
        products.push(running);
    }
    let mut denominator = S::one();
    for &p in &products {
        denominator = denominator + S::one() / S::from_count(p);
    }
    capacities
        .iter()
        .enumerate()
        .map(|(idx, c)| {
            let database = idx + 1;
            let mut weight = S::one();
            for (&threshold, &p) in sequence.iter().zip(&products) {
                if database > threshold {
                    weight = weight + S::one() / S::from_count(p);
                }
            }
            c.clone() * weight / denominator.clone()
        })
        .collect()
}

fn maximin_program<S: LpScalar>(
    messages: usize,
    capacities: &[S],
) -> (LinearProgram<S>, Vec<Vec<usize>>, Vec<Vec<S>>) {
    let n = capacities.len();
    let mut objective = vec![S::zero(); n + 1];
    objective[n] = S::one();
    let mut lp = LinearProgram::new(objective);
    let sequences = inner_sequences(messages, n);
    let mut rows = Vec::with_capacity(sequences.len());
    for seq in &sequences {
        let coefficients = ratio_coefficients(seq, capacities);
        let mut row: Vec<S> = coefficients.iter().map(|c| -c.clone()).collect();
        row.push(S::one());
        lp.add_constraint(row, Sense::LessEq, S::zero());
        rows.push(coefficients);
    }
    let mut simplex_row = vec![S::one(); n];
    simplex_row.push(S::zero());
    lp.add_constraint(simplex_row, Sense::Equal, S::one());
    (lp, sequences, rows)
}

fn check_dimensions(messages: usize, capacities: &CapacityVector) -> Result<()> {
    if messages == 0 {
        return Err(Error::Config("M must be at least 1".into()));
    }
    if capacities.is_empty() {
        return Err(Error::InvalidCapacity("no databases".into()));
    }
    Ok(())
}

/// Maximin upper bound on the retrieval rate, with the maximizing traffic
/// split (lexicographically smallest among ties).
pub fn upper_bound(messages: usize, capacities: &CapacityVector) -> Result<UpperBound> {
    check_dimensions(messages, capacities)?;
    let (lp, sequences, rows) = maximin_program(messages, capacities.values());
    let solution = solve_lp(&lp)?;
    let n = capacities.len();
    let tau = solution.argument[..n].to_vec();
    let value = solution.optimum;
    let binding = sequences
        .into_iter()
        .zip(rows)
        .filter(|(_, row)| {
            let f: f64 = row.iter().zip(&tau).map(|(a, t)| a * t).sum();
            (f - value).abs() <= BINDING_TOLERANCE
        })
        .map(|(s, _)| s)
        .collect();
    Ok(UpperBound {
        value,
        traffic: TrafficVector::from_solver(tau)?,
        binding,
    })
}

/// The same bound in exact rational arithmetic.
pub fn upper_bound_exact(
    messages: usize,
    capacities: &[BigRational],
) -> Result<(BigRational, Vec<BigRational>)> {
    if messages == 0 || capacities.is_empty() {
        return Err(Error::Config("need M >= 1 and N >= 1".into()));
    }
    let (lp, _, _) = maximin_program(messages, capacities);
    let solution = solve_lp(&lp)?;
    let n = capacities.len();
    Ok((solution.optimum, solution.argument[..n].to_vec()))
}

/// Stage counts `y_ℓ[k]` of one corner point.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageTable {
    messages: usize,
    stages: BTreeMap<usize, Vec<u64>>,
    extra: BTreeMap<usize, u64>,
}

impl StageTable {
    pub fn messages(&self) -> usize {
        self.messages
    }

    pub fn groups(&self) -> Vec<usize> {
        self.stages.keys().copied().collect()
    }

    /// `y_ℓ[k]` for `k` in `1..=M`.
    pub fn get(&self, group: usize, round: usize) -> u64 {
        if round == 0 || round > self.messages {
            return 0;
        }
        self.stages.get(&group).map_or(0, |y| y[round - 1])
    }

    pub fn rounds(&self, group: usize) -> &[u64] {
        self.stages.get(&group).map_or(&[], Vec::as_slice)
    }

    /// Number of the group's stages in round `ℓ + 1` that draw their side
    /// information from round-1 downloads of group 0 (the forcing term).
    pub fn extra_stages(&self, group: usize) -> u64 {
        self.extra.get(&group).copied().unwrap_or(0)
    }
}

fn side_product(messages: usize, groups: &[usize], skip: Option<usize>) -> u64 {
    groups
        .iter()
        .filter(|&&s| s >= 1 && Some(s) != skip)
        .map(|&s| binomial(messages.saturating_sub(2), s - 1))
        .product()
}

/// Solves the difference equations for the stage counts of `sequence`.
///
/// Factors `binom(M-2, s-1)` are taken over groups `s ≥ 1` only, and the
/// initial conditions `y_j[k] = 0` for `k ≤ j` take precedence over the
/// recursion.
pub fn solve_stage_recursion(sequence: &GroupSequence) -> StageTable {
    let messages = sequence.len();
    let groups = sequence.groups();
    let n0 = sequence.at(0) as u64;
    let mut stages: BTreeMap<usize, Vec<u64>> =
        groups.iter().map(|&g| (g, vec![0u64; messages])).collect();
    let mut extra = BTreeMap::new();
    stages.get_mut(&0).expect("group 0 always present")[0] = side_product(messages, &groups, None);

    for k in 2..=messages {
        let previous: BTreeMap<usize, u64> = groups.iter().map(|&g| (g, stages[&g][k - 2])).collect();
        for &l in &groups {
            if k <= l {
                continue;
            }
            let own = (sequence.group_size(l) as u64 - 1) * previous[&l];
            let others: u64 = groups
                .iter()
                .filter(|&&j| j != l)
                .map(|&j| sequence.group_size(j) as u64 * previous[&j])
                .sum();
            let forcing = if l >= 2 && k == l + 1 {
                let f = n0 * side_product(messages, &groups, Some(l));
                extra.insert(l, f);
                f
            } else {
                0
            };
            stages.get_mut(&l).expect("group")[k - 1] = forcing + own + others;
        }
    }
    StageTable {
        messages,
        stages,
        extra,
    }
}

/// A corner point of the asymmetric-traffic scheme.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CornerPoint {
    pub sequence: GroupSequence,
    pub stage_table: StageTable,
    /// Uncoded downloads `D_n` per repetition for the used databases
    /// (sorted order, `n_{M-1}` entries).
    pub downloads: Vec<u64>,
    /// Desired symbols retrieved per repetition.
    pub lstar: u64,
}

impl CornerPoint {
    pub fn new(sequence: &GroupSequence) -> Self {
        let table = solve_stage_recursion(sequence);
        let (downloads, lstar) = downloads_per_db(&table, sequence);
        Self {
            sequence: sequence.clone(),
            stage_table: table,
            downloads,
            lstar,
        }
    }
}

/// `D_n = Σ_k binom(M, k) y_ℓ[k]` for the group `ℓ` of each used database,
/// and `L* = Σ_ℓ Σ_k binom(M-1, k-1) y_ℓ[k] (n_ℓ - n_{ℓ-1})`.
pub fn downloads_per_db(table: &StageTable, sequence: &GroupSequence) -> (Vec<u64>, u64) {
    let messages = sequence.len();
    let per_group: BTreeMap<usize, u64> = table
        .groups()
        .into_iter()
        .map(|g| {
            let d = (1..=messages)
                .map(|k| binomial(messages, k) * table.get(g, k))
                .sum();
            (g, d)
        })
        .collect();
    let downloads = (0..sequence.used())
        .map(|n| per_group[&sequence.group_of(n).expect("used database")])
        .collect();
    let lstar = table
        .groups()
        .into_iter()
        .map(|g| {
            let per_db: u64 = (1..=messages)
                .map(|k| binomial(messages - 1, k - 1) * table.get(g, k))
                .sum();
            per_db * sequence.group_size(g) as u64
        })
        .sum();
    (downloads, lstar)
}

/// Rate of the corner point selected by `sequence`.
pub fn achievable_rate(sequence: &GroupSequence, capacities: &CapacityVector) -> Result<f64> {
    if capacities.len() < sequence.used() {
        return Err(Error::Config(format!(
            "sequence uses {} databases but only {} capacities given",
            sequence.used(),
            capacities.len()
        )));
    }
    let corner = CornerPoint::new(sequence);
    let mut load = 0.0;
    for (n, &d) in corner.downloads.iter().enumerate() {
        let c = capacities.values()[n];
        if c <= 0.0 {
            return Err(Error::ZeroCapacity { database: n });
        }
        load += d as f64 / c;
    }
    Ok(corner.lstar as f64 / load)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LowerBound {
    pub value: f64,
    /// Maximizing sequence; `None` when every sequence touches a
    /// zero-capacity database.
    pub sequence: Option<GroupSequence>,
}

/// Best corner point over all monotone sequences. Ties keep the
/// lexicographically first sequence.
pub fn lower_bound(messages: usize, capacities: &CapacityVector) -> Result<LowerBound> {
    check_dimensions(messages, capacities)?;
    let mut best = LowerBound {
        value: 0.0,
        sequence: None,
    };
    for seq in GroupSequence::enumerate(messages, capacities.len()) {
        match achievable_rate(&seq, capacities) {
            Ok(rate) if best.sequence.is_none() || rate > best.value => {
                best = LowerBound {
                    value: rate,
                    sequence: Some(seq),
                }
            }
            Ok(_) | Err(Error::ZeroCapacity { .. }) => {}
            Err(e) => return Err(e),
        }
    }
    Ok(best)
}

/// `1 / (1 + 1/N + … + 1/N^{M-1})`.
pub fn classical_capacity(messages: usize, databases: usize) -> f64 {
    let n = databases as f64;
    let sum: f64 = (0..messages).map(|i| n.powi(-(i as i32))).sum();
    1.0 / sum
}

fn inverse_sum(capacities: &[f64], from: usize, to: usize, weight: f64) -> f64 {
    // Σ_{n=from+1}^{to} weight / C_n  (1-based), empty when to ≤ from
    (from..to.min(capacities.len()))
        .map(|i| weight / capacities[i])
        .sum()
}

/// Closed form for two messages, maximized over `(n_0, n_1) ∈ {1..N}^2`.
pub fn corner_capacity_m2(capacities: &CapacityVector) -> f64 {
    let c = capacities.values();
    let n = c.len();
    let mut best: f64 = 0.0;
    for n0 in 1..=n {
        for n1 in 1..=n {
            let denominator = inverse_sum(c, 0, n0, (n0 + 1) as f64)
                + inverse_sum(c, n0, n1, n0 as f64);
            let value = (n0 * n1) as f64 / denominator;
            if value.is_finite() {
                best = best.max(value);
            }
        }
    }
    best
}

/// Closed form for three messages, maximized over `(n_0, n_1, n_2) ∈ {1..N}^3`.
pub fn corner_capacity_m3(capacities: &CapacityVector) -> f64 {
    let c = capacities.values();
    let n = c.len();
    let mut best: f64 = 0.0;
    for n0 in 1..=n {
        for n1 in 1..=n {
            for n2 in 1..=n {
                let p = (n0 * n1) as f64;
                let denominator = inverse_sum(c, 0, n0, p + n0 as f64 + 1.0)
                    + inverse_sum(c, n0, n1, p + n0 as f64)
                    + inverse_sum(c, n1, n2, p);
                let value = (n0 * n1 * n2) as f64 / denominator;
                if value.is_finite() {
                    best = best.max(value);
                }
            }
        }
    }
    best
}

/// The three candidate rates for `M = 3`, `N = 2` with capacities
/// `c1 ≥ c2`: database 1 only, 3:1 traffic, 4:3 traffic.
pub fn m3n2_expressions(c1: f64, c2: f64) -> [f64; 3] {
    let harmonic = |a: f64, b: f64, num: f64| {
        if c1 <= 0.0 || c2 <= 0.0 {
            0.0
        } else {
            num / (a / c1 + b / c2)
        }
    };
    [c1 / 3.0, harmonic(3.0, 1.0, 2.0), harmonic(4.0, 3.0, 4.0)]
}

fn bsc_pair_capacities(p1: f64, p2: f64) -> Result<(f64, f64)> {
    for p in [p1, p2] {
        if !(0.0..=0.5).contains(&p) {
            return Err(Error::Domain {
                value: p,
                domain: "[0, 1/2]",
            });
        }
    }
    if p1 > p2 {
        return Err(Error::Config(format!("expected p1 <= p2, got {p1} > {p2}")));
    }
    Ok((1.0 - binary_entropy(p1)?, 1.0 - binary_entropy(p2)?))
}

/// Capacity for three messages over BSC(p1), BSC(p2), `p1 ≤ p2`.
pub fn bsc_m3n2_capacity(p1: f64, p2: f64) -> Result<f64> {
    let (c1, c2) = bsc_pair_capacities(p1, p2)?;
    Ok(m3n2_expressions(c1, c2).into_iter().fold(0.0, f64::max))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BscRegion {
    #[serde(rename = "DB1_ONLY")]
    Db1Only,
    #[serde(rename = "RATIO_3_1")]
    Ratio3To1,
    #[serde(rename = "RATIO_4_3")]
    Ratio4To3,
}

impl BscRegion {
    /// Index into [`m3n2_expressions`].
    pub fn expression_index(self) -> usize {
        match self {
            BscRegion::Db1Only => 0,
            BscRegion::Ratio3To1 => 1,
            BscRegion::Ratio4To3 => 2,
        }
    }
}

impl std::fmt::Display for BscRegion {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            BscRegion::Db1Only => "DB1_ONLY",
            BscRegion::Ratio3To1 => "RATIO_3_1",
            BscRegion::Ratio4To3 => "RATIO_4_3",
        })
    }
}

/// Active expression by the capacity ratio `r = C_1 / C_2`: above 3 only
/// database 1 is used, in `(2, 3]` the 3:1 split, otherwise the 4:3 split.
pub fn bsc_m3n2_region(p1: f64, p2: f64) -> Result<BscRegion> {
    let (c1, c2) = bsc_pair_capacities(p1, p2)?;
    if c2 <= 0.0 {
        // both zero: every expression vanishes; report the symmetric corner
        return Ok(if c1 > 0.0 {
            BscRegion::Db1Only
        } else {
            BscRegion::Ratio4To3
        });
    }
    let r = c1 / c2;
    Ok(if r > 3.0 {
        BscRegion::Db1Only
    } else if r > 2.0 {
        BscRegion::Ratio3To1
    } else {
        BscRegion::Ratio4To3
    })
}
