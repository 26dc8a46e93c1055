//! Privacy checks: the query a single database sees must have the same
//! distribution whichever message the user wants.
//!
//! Distributions are computed exactly by enumerating the user's
//! randomness. For scheme plans too large to enumerate, the view is
//! uniform on its orbit under relabelling of message positions (and of
//! query order), so two views are equally distributed exactly when they
//! lie in the same orbit; [`same_orbit`] decides that by backtracking.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::macpir::{additive_queries, boolean_databases, boolean_queries, format_boolean_query, BooleanMac};
use crate::scheme::{synthesize_logical_plan, KSumQuery, LogicalPlan, Term};
use crate::types::GroupSequence;

/// Largest randomness space enumerated exhaustively.
pub const ENUMERATION_LIMIT: u128 = 1 << 20;

/// Exact distribution over canonical query strings.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QueryDistribution {
    probabilities: BTreeMap<String, BigRational>,
}

impl QueryDistribution {
    /// Normalizes occurrence counts.
    pub fn from_counts(counts: BTreeMap<String, u128>) -> Result<Self> {
        let total: u128 = counts.values().sum();
        if total == 0 {
            return Err(Error::Config("empty distribution".into()));
        }
        let total = BigInt::from(total);
        Ok(Self {
            probabilities: counts
                .into_iter()
                .map(|(k, c)| (k, BigRational::new(BigInt::from(c), total.clone())))
                .collect(),
        })
    }

    pub fn point_mass(query: impl Into<String>) -> Self {
        Self {
            probabilities: BTreeMap::from([(query.into(), BigRational::one())]),
        }
    }

    pub fn probabilities(&self) -> &BTreeMap<String, BigRational> {
        &self.probabilities
    }

    pub fn support(&self) -> usize {
        self.probabilities.len()
    }

    pub fn probability(&self, query: &str) -> BigRational {
        self.probabilities.get(query).cloned().unwrap_or_else(BigRational::zero)
    }

    pub fn total(&self) -> BigRational {
        self.probabilities.values().fold(BigRational::zero(), |a, p| a + p)
    }
}

/// `½ Σ |d1 − d2|`, exactly.
pub fn total_variation(d1: &QueryDistribution, d2: &QueryDistribution) -> BigRational {
    let mut sum = BigRational::zero();
    for (k, p) in &d1.probabilities {
        sum += (p - d2.probability(k)).abs();
    }
    for (k, q) in &d2.probabilities {
        if !d1.probabilities.contains_key(k) {
            sum += q.clone();
        }
    }
    sum / BigRational::from_integer(BigInt::from(2))
}

/// A query generator whose randomness is a finite set of equally likely
/// choices `0..space_size`.
pub trait QueryGenerator: Sync {
    fn messages(&self) -> usize;
    fn databases(&self) -> usize;
    fn space_size(&self, desired: usize, database: usize) -> Result<u128>;
    /// Canonical query seen by `database` under choice `choice`.
    fn view(&self, desired: usize, database: usize, choice: u128) -> Result<String>;
}

/// Exact distribution of the query seen by `database` when the user wants
/// message `desired`.
pub fn enumerate_query_distribution<G: QueryGenerator + ?Sized>(
    generator: &G,
    desired: usize,
    database: usize,
) -> Result<QueryDistribution> {
    let size = generator.space_size(desired, database)?;
    if size > ENUMERATION_LIMIT {
        return Err(Error::EnumerationLimit {
            size,
            limit: ENUMERATION_LIMIT,
        });
    }
    let counts = (0..size as u64)
        .into_par_iter()
        .try_fold(BTreeMap::new, |mut acc: BTreeMap<String, u128>, r| {
            *acc.entry(generator.view(desired, database, r as u128)?).or_insert(0) += 1;
            Ok::<_, Error>(acc)
        })
        .try_reduce(BTreeMap::new, |mut a, b| {
            for (k, c) in b {
                *a.entry(k).or_insert(0) += c;
            }
            Ok(a)
        })?;
    QueryDistribution::from_counts(counts)
}

/// Additive MAC scheme, one symbol position: randomness is the mask `h`.
#[derive(Debug, Clone, Copy)]
pub struct AdditiveGenerator {
    pub messages: usize,
}

impl QueryGenerator for AdditiveGenerator {
    fn messages(&self) -> usize {
        self.messages
    }

    fn databases(&self) -> usize {
        2
    }

    fn space_size(&self, _: usize, _: usize) -> Result<u128> {
        Ok(1 << self.messages)
    }

    fn view(&self, desired: usize, database: usize, choice: u128) -> Result<String> {
        let h: Vec<u8> = (0..self.messages).map(|m| ((choice >> m) & 1) as u8).collect();
        let (q1, q2) = additive_queries(&h, desired);
        let q = if database == 0 { q1 } else { q2 };
        Ok(q.iter().map(|b| char::from(b'0' + b)).collect())
    }
}

/// Boolean MAC schemes: randomness is the negation pattern `Z`.
#[derive(Debug, Clone, Copy)]
pub struct BooleanGenerator {
    pub kind: BooleanMac,
    pub messages: usize,
    pub databases: usize,
}

impl QueryGenerator for BooleanGenerator {
    fn messages(&self) -> usize {
        self.messages
    }

    fn databases(&self) -> usize {
        self.databases
    }

    fn space_size(&self, _: usize, _: usize) -> Result<u128> {
        Ok(1 << self.messages)
    }

    fn view(&self, desired: usize, database: usize, choice: u128) -> Result<String> {
        let z: Vec<u8> = (0..self.messages).map(|m| ((choice >> m) & 1) as u8).collect();
        let queries = boolean_queries(self.messages, desired, &z, self.databases)?;
        Ok(format_boolean_query(self.kind, &queries[database]))
    }
}

/// Every database is asked for every symbol (fixed selection channel).
#[derive(Debug, Clone, Copy)]
pub struct DownloadAllGenerator {
    pub messages: usize,
    pub databases: usize,
}

impl QueryGenerator for DownloadAllGenerator {
    fn messages(&self) -> usize {
        self.messages
    }

    fn databases(&self) -> usize {
        self.databases
    }

    fn space_size(&self, _: usize, _: usize) -> Result<u128> {
        Ok(1)
    }

    fn view(&self, _: usize, _: usize, _: u128) -> Result<String> {
        Ok((1..=self.messages).map(|m| format!("W{m}[0]")).collect::<Vec<_>>().join(";"))
    }
}

/// Mutant that asks for the desired symbol alone. It is not private.
#[derive(Debug, Clone, Copy)]
pub struct BrokenGenerator {
    pub messages: usize,
}

impl QueryGenerator for BrokenGenerator {
    fn messages(&self) -> usize {
        self.messages
    }

    fn databases(&self) -> usize {
        1
    }

    fn space_size(&self, _: usize, _: usize) -> Result<u128> {
        Ok(1)
    }

    fn view(&self, desired: usize, _: usize, _: u128) -> Result<String> {
        Ok(format!("W{}[0]", desired + 1))
    }
}

/// Per-database layout of a logical plan: the logical symbols each
/// message contributes and the queries rewritten over compact indices.
#[derive(Debug, Clone)]
struct DatabaseLayout {
    used: Vec<usize>,
    queries: Vec<Vec<Term>>,
}

/// Scheme plans over one block of `L*` symbols. Randomness is the
/// per-message symbol permutation, restricted to the symbols this
/// database touches, and, when `ordered`, the order of its queries.
#[derive(Debug, Clone)]
pub struct SchemeGenerator {
    pub ordered: bool,
    plans: Vec<LogicalPlan>,
    layouts: Vec<Vec<DatabaseLayout>>,
}

impl SchemeGenerator {
    pub fn new(sequence: &GroupSequence, databases: usize, ordered: bool) -> Result<Self> {
        let messages = sequence.len();
        let plans: Vec<LogicalPlan> = (0..messages)
            .map(|i| synthesize_logical_plan(sequence, databases, i, 1))
            .collect::<Result<_>>()?;
        let layouts = plans
            .iter()
            .map(|plan| {
                plan.queries
                    .iter()
                    .map(|list| {
                        let mut maps: Vec<BTreeMap<usize, usize>> = vec![BTreeMap::new(); messages];
                        let queries = list
                            .iter()
                            .map(|q| {
                                q.query
                                    .terms
                                    .iter()
                                    .map(|t| {
                                        let next = maps[t.message].len();
                                        Term {
                                            message: t.message,
                                            index: *maps[t.message].entry(t.index).or_insert(next),
                                        }
                                    })
                                    .collect()
                            })
                            .collect();
                        DatabaseLayout {
                            used: maps.iter().map(BTreeMap::len).collect(),
                            queries,
                        }
                    })
                    .collect()
            })
            .collect();
        Ok(Self { ordered, plans, layouts })
    }

    pub fn message_length(&self) -> usize {
        self.plans[0].message_length
    }

    fn layout(&self, desired: usize, database: usize) -> Result<&DatabaseLayout> {
        self.layouts
            .get(desired)
            .and_then(|l| l.get(database))
            .ok_or(Error::OutOfRange {
                index: desired.max(database),
                bound: self.layouts.len(),
            })
    }

    /// Queries of `database` under identity randomness, as term lists.
    pub fn base_view(&self, desired: usize, database: usize) -> Result<Vec<Vec<Term>>> {
        Ok(self.layout(desired, database)?.queries.clone())
    }
}

fn falling_factorial(n: usize, k: usize) -> u128 {
    (0..k).fold(1u128, |acc, j| acc.saturating_mul((n - j) as u128))
}

/// Takes digit `choice % radix` and leaves the rest.
fn take_digit(choice: &mut u128, radix: usize) -> usize {
    let d = (*choice % radix as u128) as usize;
    *choice /= radix as u128;
    d
}

impl QueryGenerator for SchemeGenerator {
    fn messages(&self) -> usize {
        self.plans.len()
    }

    fn databases(&self) -> usize {
        self.plans[0].databases
    }

    fn space_size(&self, desired: usize, database: usize) -> Result<u128> {
        let layout = self.layout(desired, database)?;
        let l = self.message_length();
        let mut size = layout
            .used
            .iter()
            .fold(1u128, |acc, &u| acc.saturating_mul(falling_factorial(l, u)));
        if self.ordered {
            size = size.saturating_mul(falling_factorial(layout.queries.len(), layout.queries.len()));
        }
        Ok(size)
    }

    fn view(&self, desired: usize, database: usize, mut choice: u128) -> Result<String> {
        let layout = self.layout(desired, database)?;
        let l = self.message_length();
        let positions: Vec<Vec<usize>> = layout
            .used
            .iter()
            .map(|&u| {
                let mut free: Vec<usize> = (0..l).collect();
                (0..u).map(|j| free.remove(take_digit(&mut choice, l - j))).collect()
            })
            .collect();
        let mut queries: Vec<String> = layout
            .queries
            .iter()
            .map(|terms| {
                KSumQuery::new(
                    terms
                        .iter()
                        .map(|t| Term {
                            message: t.message,
                            index: positions[t.message][t.index],
                        })
                        .collect(),
                )
                .canonical()
            })
            .collect();
        if self.ordered {
            let mut pool = std::mem::take(&mut queries);
            let d = pool.len();
            queries = (0..d).map(|j| pool.remove(take_digit(&mut choice, d - j))).collect();
        } else {
            queries.sort();
        }
        Ok(queries.join(";"))
    }
}

/// Whether some relabelling of each message's symbol positions (and a
/// reordering of queries) maps view `a` onto view `b`.
pub fn same_orbit(a: &[Vec<Term>], b: &[Vec<Term>]) -> bool {
    fn shape(q: &[Term]) -> Vec<usize> {
        let mut s: Vec<usize> = q.iter().map(|t| t.message).collect();
        s.sort_unstable();
        s
    }
    if a.len() != b.len() {
        return false;
    }
    let mut sa: Vec<Vec<usize>> = a.iter().map(|q| shape(q)).collect();
    let mut sb: Vec<Vec<usize>> = b.iter().map(|q| shape(q)).collect();
    sa.sort();
    sb.sort();
    if sa != sb {
        return false;
    }
    let sorted = |q: &[Term]| {
        let mut q = q.to_vec();
        q.sort();
        q
    };
    let a: Vec<Vec<Term>> = a.iter().map(|q| sorted(q)).collect();
    let b: Vec<Vec<Term>> = b.iter().map(|q| sorted(q)).collect();

    type Map = BTreeMap<(usize, usize), usize>;
    fn extend(qa: &[Term], qb: &[Term], fwd: &mut Map, bwd: &mut Map, added: &mut Vec<(usize, usize, usize)>) -> bool {
        // Terms of a query have distinct messages, so sorted order pairs them up.
        for (x, y) in qa.iter().zip(qb) {
            if x.message != y.message {
                return false;
            }
            match (fwd.get(&(x.message, x.index)), bwd.get(&(y.message, y.index))) {
                (Some(&f), Some(&g)) if f == y.index && g == x.index => {}
                (None, None) => {
                    fwd.insert((x.message, x.index), y.index);
                    bwd.insert((y.message, y.index), x.index);
                    added.push((x.message, x.index, y.index));
                }
                _ => return false,
            }
        }
        true
    }
    fn search(a: &[Vec<Term>], b: &[Vec<Term>], k: usize, taken: &mut [bool], fwd: &mut Map, bwd: &mut Map) -> bool {
        if k == a.len() {
            return true;
        }
        for j in 0..b.len() {
            if taken[j] || b[j].len() != a[k].len() {
                continue;
            }
            let mut added = Vec::new();
            if extend(&a[k], &b[j], fwd, bwd, &mut added) {
                taken[j] = true;
                if search(a, b, k + 1, taken, fwd, bwd) {
                    return true;
                }
                taken[j] = false;
            }
            for (m, x, y) in added {
                fwd.remove(&(m, x));
                bwd.remove(&(m, y));
            }
        }
        false
    }
    search(&a, &b, 0, &mut vec![false; b.len()], &mut Map::new(), &mut Map::new())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Protocol {
    Scheme(GroupSequence),
    Additive,
    Conjunction,
    Disjunction,
    SelectionFixed,
    SelectionPerUse,
    BrokenDemo,
}

impl fmt::Display for Protocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Protocol::Scheme(seq) => write!(f, "scheme {seq}"),
            Protocol::Additive => f.write_str("additive"),
            Protocol::Conjunction => f.write_str("conjunction"),
            Protocol::Disjunction => f.write_str("disjunction"),
            Protocol::SelectionFixed => f.write_str("selection-fixed"),
            Protocol::SelectionPerUse => f.write_str("selection-per-use"),
            Protocol::BrokenDemo => f.write_str("broken-demo"),
        }
    }
}

/// Protocol names accepted by [`Protocol::parse`].
pub const PROTOCOL_NAMES: [&str; 7] = [
    "scheme",
    "additive",
    "conjunction",
    "disjunction",
    "selection-fixed",
    "selection-per-use",
    "broken-demo",
];

impl Protocol {
    /// Builds a protocol from its name. `scheme` needs a sequence;
    /// without one the symmetric sequence `(N, …, N)` is used.
    pub fn parse(name: &str, messages: usize, databases: usize, sequence: Option<GroupSequence>) -> Result<Self> {
        Ok(match name {
            "scheme" => Protocol::Scheme(match sequence {
                Some(s) => s,
                None => GroupSequence::new(vec![databases; messages], databases)?,
            }),
            "additive" => Protocol::Additive,
            "conjunction" => Protocol::Conjunction,
            "disjunction" => Protocol::Disjunction,
            "selection-fixed" => Protocol::SelectionFixed,
            "selection-per-use" => Protocol::SelectionPerUse,
            "broken-demo" => Protocol::BrokenDemo,
            other => return Err(Error::Config(format!("unknown protocol `{other}`"))),
        })
    }
}

impl FromStr for BooleanMac {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "conjunction" | "and" => Ok(BooleanMac::Conjunction),
            "disjunction" | "or" => Ok(BooleanMac::Disjunction),
            other => Err(Error::Config(format!("unknown Boolean channel `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Exhaustive,
    Orbit,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairResult {
    /// 1-based database index.
    pub database: usize,
    /// 1-based desired indices compared.
    pub first: usize,
    pub second: usize,
    pub ordered: bool,
    pub method: Method,
    /// Exact total variation, as a fraction string.
    pub tv: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrivacyReport {
    pub protocol: String,
    pub messages: usize,
    pub databases: usize,
    pub pairs: Vec<PairResult>,
    pub max_tv: String,
    pub passed: bool,
}

fn exhaustive_pairs<G: QueryGenerator>(generator: &G, ordered: bool, pairs: &mut Vec<PairResult>) -> Result<()> {
    for n in 0..generator.databases() {
        let dists: Vec<QueryDistribution> = (0..generator.messages())
            .map(|i| enumerate_query_distribution(generator, i, n))
            .collect::<Result<_>>()?;
        for i in 0..dists.len() {
            for j in i + 1..dists.len() {
                pairs.push(PairResult {
                    database: n + 1,
                    first: i + 1,
                    second: j + 1,
                    ordered,
                    method: Method::Exhaustive,
                    tv: total_variation(&dists[i], &dists[j]).to_string(),
                });
            }
        }
    }
    Ok(())
}

fn scheme_pairs(generator: &SchemeGenerator, pairs: &mut Vec<PairResult>) -> Result<()> {
    for n in 0..generator.databases() {
        let m = generator.messages();
        let exhaustive = (0..m).try_fold(true, |ok, i| {
            Ok::<_, Error>(ok && generator.space_size(i, n)? <= ENUMERATION_LIMIT)
        })?;
        if exhaustive {
            let dists: Vec<QueryDistribution> = (0..m)
                .map(|i| enumerate_query_distribution(generator, i, n))
                .collect::<Result<_>>()?;
            for i in 0..m {
                for j in i + 1..m {
                    pairs.push(PairResult {
                        database: n + 1,
                        first: i + 1,
                        second: j + 1,
                        ordered: generator.ordered,
                        method: Method::Exhaustive,
                        tv: total_variation(&dists[i], &dists[j]).to_string(),
                    });
                }
            }
        } else {
            let views: Vec<Vec<Vec<Term>>> = (0..m).map(|i| generator.base_view(i, n)).collect::<Result<_>>()?;
            for i in 0..m {
                for j in i + 1..m {
                    pairs.push(PairResult {
                        database: n + 1,
                        first: i + 1,
                        second: j + 1,
                        ordered: generator.ordered,
                        method: Method::Orbit,
                        tv: if same_orbit(&views[i], &views[j]) { "0" } else { "1" }.into(),
                    });
                }
            }
        }
    }
    Ok(())
}

/// Compares every database's query distribution across every pair of
/// desired indices. Scheme plans are checked with both sorted and
/// transmission-ordered views.
pub fn verify_protocol(protocol: &Protocol, messages: usize, databases: usize) -> Result<PrivacyReport> {
    if messages == 0 || messages > 8 {
        return Err(Error::Config("privacy checks support 1 <= M <= 8".into()));
    }
    if databases == 0 {
        return Err(Error::Config("at least one database is required".into()));
    }
    let mut pairs = Vec::new();
    match protocol {
        Protocol::Scheme(seq) => {
            if seq.len() != messages {
                return Err(Error::InvalidSequence(format!(
                    "sequence {seq} has {} entries, expected {messages}",
                    seq.len()
                )));
            }
            for ordered in [false, true] {
                scheme_pairs(&SchemeGenerator::new(seq, databases, ordered)?, &mut pairs)?;
            }
        }
        Protocol::SelectionPerUse => {
            let seq = GroupSequence::new(vec![databases; messages], databases)?;
            for ordered in [false, true] {
                scheme_pairs(&SchemeGenerator::new(&seq, databases, ordered)?, &mut pairs)?;
            }
        }
        Protocol::Additive => exhaustive_pairs(&AdditiveGenerator { messages }, false, &mut pairs)?,
        Protocol::Conjunction | Protocol::Disjunction => {
            let kind = if *protocol == Protocol::Conjunction {
                BooleanMac::Conjunction
            } else {
                BooleanMac::Disjunction
            };
            let generator = BooleanGenerator {
                kind,
                messages,
                databases: databases.max(boolean_databases(messages)),
            };
            if databases < boolean_databases(messages) {
                return Err(Error::Config(format!(
                    "{protocol} needs N >= 2^(M-1) = {}",
                    boolean_databases(messages)
                )));
            }
            exhaustive_pairs(&generator, false, &mut pairs)?
        }
        Protocol::SelectionFixed => exhaustive_pairs(&DownloadAllGenerator { messages, databases }, false, &mut pairs)?,
        Protocol::BrokenDemo => exhaustive_pairs(&BrokenGenerator { messages }, false, &mut pairs)?,
    }
    let max_tv = pairs
        .iter()
        .map(|p| p.tv.parse::<BigRational>().expect("fraction string"))
        .fold(BigRational::zero(), |a, b| if b > a { b } else { a });
    Ok(PrivacyReport {
        protocol: protocol.to_string(),
        messages,
        databases,
        pairs,
        passed: max_tv.is_zero(),
        max_tv: max_tv.to_string(),
    })
}
