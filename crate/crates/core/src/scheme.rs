//! Query-plan synthesis for the asymmetric-traffic retrieval scheme.
//!
//! A plan is first built over *logical* symbols (message, counter) in a
//! fixed order: repetition, round, database, stage, then message subsets in
//! lexicographic order. Realizing it applies one uniform permutation per
//! message and one uniform shuffle per database.
//!
//! Databases are indexed in sorted-capacity order throughout this module.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::bounds::{binomial, solve_stage_recursion, CornerPoint, StageTable};
use crate::error::{Error, Result};
use crate::types::{GroupSequence, MessageStore};

/// One message symbol referenced by a query: `(message, index)`. In a
/// logical plan the index is a counter; in a realized plan it is a
/// position in the stored message.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Term {
    pub message: usize,
    pub index: usize,
}

/// GF(2) sum of symbols from distinct messages; terms sorted by message.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct KSumQuery {
    pub terms: Vec<Term>,
}

impl KSumQuery {
    pub(crate) fn new(mut terms: Vec<Term>) -> Self {
        terms.sort();
        Self { terms }
    }

    pub fn order(&self) -> usize {
        self.terms.len()
    }

    pub fn messages(&self) -> Vec<usize> {
        self.terms.iter().map(|t| t.message).collect()
    }

    /// Canonical text form, e.g. `W1[3]+W3[0]` (1-based message labels).
    pub fn canonical(&self) -> String {
        let parts: Vec<String> = self
            .terms
            .iter()
            .map(|t| format!("W{}[{}]", t.message + 1, t.index))
            .collect();
        parts.join("+")
    }
}

/// Position of one answer bit: database `database`, entry `index` of its
/// uncoded answer vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct AnswerRef {
    pub database: usize,
    pub index: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LogicalQuery {
    pub query: KSumQuery,
    pub repetition: usize,
    pub round: usize,
}

/// How one desired symbol is recovered: XOR of the carrier answer with
/// the side-information answers.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Recovery {
    /// Logical counter in a logical plan, stored position once realized.
    pub symbol: usize,
    pub carrier: AnswerRef,
    pub side: Vec<AnswerRef>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LogicalPlan {
    pub messages: usize,
    pub databases: usize,
    pub sequence: GroupSequence,
    pub desired: usize,
    pub repetitions: usize,
    pub message_length: usize,
    pub stage_table: StageTable,
    pub queries: Vec<Vec<LogicalQuery>>,
    pub recoveries: Vec<Recovery>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryPlan {
    pub messages: usize,
    pub databases: usize,
    pub sequence: GroupSequence,
    pub repetitions: usize,
    pub message_length: usize,
    /// Queries sent to each database, in transmission order.
    pub queries: Vec<Vec<KSumQuery>>,
}

impl QueryPlan {
    pub fn downloads(&self) -> Vec<usize> {
        self.queries.iter().map(Vec::len).collect()
    }

    /// Canonical view of database `n`: the query strings, in order when
    /// `ordered`, otherwise sorted.
    pub fn view(&self, n: usize, ordered: bool) -> String {
        let mut parts: Vec<String> = self.queries[n].iter().map(KSumQuery::canonical).collect();
        if !ordered {
            parts.sort();
        }
        parts.join(";")
    }
}

/// User-side recovery instructions for a realized plan.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReconstructionMap {
    pub desired: usize,
    pub message_length: usize,
    pub recoveries: Vec<Recovery>,
}

/// Randomness that turns a logical plan into the transmitted one.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlanRandomness {
    /// `permutations[m][logical] = position`.
    pub permutations: Vec<Vec<usize>>,
    /// `shuffles[n][j]` is the logical query sent in slot `j`.
    pub shuffles: Vec<Vec<usize>>,
}

impl PlanRandomness {
    pub fn identity(plan: &LogicalPlan) -> Self {
        Self {
            permutations: vec![(0..plan.message_length).collect(); plan.messages],
            shuffles: plan.queries.iter().map(|q| (0..q.len()).collect()).collect(),
        }
    }

    pub fn sample<R: RngCore + ?Sized>(plan: &LogicalPlan, rng: &mut R) -> Self {
        let mut r = Self::identity(plan);
        for p in r.permutations.iter_mut().chain(r.shuffles.iter_mut()) {
            p.shuffle(rng);
        }
        r
    }
}

/// Message subset to the index of the query that downloads it.
type SubsetIndex = BTreeMap<Vec<usize>, usize>;

/// `k`-subsets of `0..m` in lexicographic order.
pub fn subsets(m: usize, k: usize) -> Vec<Vec<usize>> {
    fn go(start: usize, m: usize, k: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if prefix.len() == k {
            out.push(prefix.clone());
            return;
        }
        for v in start..m {
            prefix.push(v);
            go(v + 1, m, k, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    go(0, m, k, &mut Vec::with_capacity(k), &mut out);
    out
}

enum SideSource {
    Extra,
    Stage { database: usize, stage: usize },
}

/// Builds the logical plan for `sequence` over `databases` databases,
/// retrieving message `desired` (0-based) in `repetitions` blocks.
pub fn synthesize_logical_plan(
    sequence: &GroupSequence,
    databases: usize,
    desired: usize,
    repetitions: usize,
) -> Result<LogicalPlan> {
    let messages = sequence.len();
    if desired >= messages {
        return Err(Error::OutOfRange {
            index: desired,
            bound: messages,
        });
    }
    if repetitions == 0 {
        return Err(Error::Config("at least one repetition is required".into()));
    }
    if sequence.used() > databases {
        return Err(Error::InvalidSequence(format!(
            "{sequence} uses more than N = {databases} databases"
        )));
    }
    let table = solve_stage_recursion(sequence);
    let corner = CornerPoint::new(sequence);
    let used = sequence.used();
    let by_size: Vec<Vec<Vec<usize>>> = (0..=messages).map(|k| subsets(messages, k)).collect();

    let mut queries: Vec<Vec<LogicalQuery>> = vec![Vec::new(); databases];
    let mut recoveries = Vec::new();
    let mut desired_counter = 0usize;
    let mut undesired_counter = vec![0usize; messages];

    for repetition in 0..repetitions {
        // outputs[k-1][n][s]: undesired-only subset -> query index
        let mut outputs: Vec<Vec<Vec<SubsetIndex>>> = vec![vec![Vec::new(); used]; messages];
        let mut singles: Vec<Vec<AnswerRef>> = vec![Vec::new(); messages];

        for k in 1..=messages {
            for n in 0..used {
                let group = sequence.group_of(n).expect("used database");
                let count = table.get(group, k) as usize;
                if count == 0 {
                    continue;
                }
                let mut sources = Vec::new();
                if k > 1 {
                    if group >= 2 && k == group + 1 {
                        sources.extend((0..table.extra_stages(group)).map(|_| SideSource::Extra));
                    }
                    for other in (0..used).filter(|&o| o != n) {
                        sources.extend(
                            (0..outputs[k - 2][other].len()).map(|stage| SideSource::Stage { database: other, stage }),
                        );
                    }
                }
                if (k == 1 && !sources.is_empty()) || (k > 1 && sources.len() != count) {
                    return Err(Error::Plan(format!(
                        "database {n} round {k}: {count} stages but {} side-information sources",
                        sources.len()
                    )));
                }
                let mut cursor = vec![0usize; messages];
                for s in 0..count {
                    let source = sources.get(s);
                    let mut stage_map = BTreeMap::new();
                    for subset in &by_size[k] {
                        let index = queries[n].len();
                        if subset.contains(&desired) {
                            let rest: Vec<usize> = subset.iter().copied().filter(|&m| m != desired).collect();
                            let side: Vec<AnswerRef> = match source {
                                None => Vec::new(),
                                Some(SideSource::Stage { database, stage }) => {
                                    vec![AnswerRef {
                                        database: *database,
                                        index: outputs[k - 2][*database][*stage][&rest],
                                    }]
                                }
                                Some(SideSource::Extra) => rest
                                    .iter()
                                    .map(|&m| {
                                        let r = singles[m].get(cursor[m]).copied().ok_or_else(|| {
                                            Error::Plan(format!("database {n}: round-1 side information of message {m} exhausted"))
                                        })?;
                                        cursor[m] += 1;
                                        Ok(r)
                                    })
                                    .collect::<Result<_>>()?,
                            };
                            let mut terms = vec![Term {
                                message: desired,
                                index: desired_counter,
                            }];
                            for r in &side {
                                terms.extend(queries[r.database][r.index].query.terms.iter().copied());
                            }
                            queries[n].push(LogicalQuery {
                                query: KSumQuery::new(terms),
                                repetition,
                                round: k,
                            });
                            recoveries.push(Recovery {
                                symbol: desired_counter,
                                carrier: AnswerRef { database: n, index },
                                side,
                            });
                            desired_counter += 1;
                        } else {
                            let terms = subset
                                .iter()
                                .map(|&m| {
                                    let t = Term {
                                        message: m,
                                        index: undesired_counter[m],
                                    };
                                    undesired_counter[m] += 1;
                                    t
                                })
                                .collect();
                            queries[n].push(LogicalQuery {
                                query: KSumQuery::new(terms),
                                repetition,
                                round: k,
                            });
                            if k == 1 {
                                singles[subset[0]].push(AnswerRef { database: n, index });
                            }
                            stage_map.insert(subset.clone(), index);
                        }
                    }
                    outputs[k - 1][n].push(stage_map);
                }
            }
        }
    }

    let message_length = repetitions * corner.lstar as usize;
    for (n, &d) in corner.downloads.iter().enumerate() {
        if queries[n].len() != repetitions * d as usize {
            return Err(Error::Plan(format!(
                "database {n}: {} queries, expected {}",
                queries[n].len(),
                repetitions * d as usize
            )));
        }
    }
    if desired_counter != message_length || undesired_counter.iter().any(|&c| c > message_length) {
        return Err(Error::Plan("symbol budget does not match the message length".into()));
    }
    Ok(LogicalPlan {
        messages,
        databases,
        sequence: sequence.clone(),
        desired,
        repetitions,
        message_length,
        stage_table: table,
        queries,
        recoveries,
    })
}

impl LogicalPlan {
    /// Applies permutations and shuffles.
    pub fn realize(&self, randomness: &PlanRandomness) -> Result<(QueryPlan, ReconstructionMap)> {
        let l = self.message_length;
        if randomness.permutations.len() != self.messages
            || randomness.permutations.iter().any(|p| !is_permutation(p, l))
        {
            return Err(Error::Config(format!("need {} permutations of 0..{l}", self.messages)));
        }
        if randomness.shuffles.len() != self.databases
            || randomness
                .shuffles
                .iter()
                .zip(&self.queries)
                .any(|(s, q)| !is_permutation(s, q.len()))
        {
            return Err(Error::Config("need one query shuffle per database".into()));
        }
        let perms = &randomness.permutations;
        let queries: Vec<Vec<KSumQuery>> = self
            .queries
            .iter()
            .zip(&randomness.shuffles)
            .map(|(list, shuffle)| {
                shuffle
                    .iter()
                    .map(|&j| {
                        KSumQuery::new(
                            list[j]
                                .query
                                .terms
                                .iter()
                                .map(|t| Term {
                                    message: t.message,
                                    index: perms[t.message][t.index],
                                })
                                .collect(),
                        )
                    })
                    .collect()
            })
            .collect();
        let slots: Vec<Vec<usize>> = randomness
            .shuffles
            .iter()
            .map(|s| {
                let mut inv = vec![0; s.len()];
                for (slot, &j) in s.iter().enumerate() {
                    inv[j] = slot;
                }
                inv
            })
            .collect();
        let relocate = |r: &AnswerRef| AnswerRef {
            database: r.database,
            index: slots[r.database][r.index],
        };
        let recoveries = self
            .recoveries
            .iter()
            .map(|rec| Recovery {
                symbol: perms[self.desired][rec.symbol],
                carrier: relocate(&rec.carrier),
                side: rec.side.iter().map(relocate).collect(),
            })
            .collect();
        Ok((
            QueryPlan {
                messages: self.messages,
                databases: self.databases,
                sequence: self.sequence.clone(),
                repetitions: self.repetitions,
                message_length: l,
                queries,
            },
            ReconstructionMap {
                desired: self.desired,
                message_length: l,
                recoveries,
            },
        ))
    }

    /// Every side-information answer comes from a strictly earlier round
    /// of the same repetition.
    pub fn is_acyclic(&self) -> bool {
        self.recoveries.iter().all(|rec| {
            let carrier = &self.queries[rec.carrier.database][rec.carrier.index];
            rec.side.iter().all(|s| {
                let q = &self.queries[s.database][s.index];
                q.round < carrier.round && q.repetition == carrier.repetition
            })
        })
    }

    /// Multiset of query shapes (message subsets) per database, which does
    /// not depend on the desired index.
    pub fn shapes(&self) -> Vec<BTreeMap<Vec<usize>, usize>> {
        self.queries
            .iter()
            .map(|list| {
                let mut counts = BTreeMap::new();
                for q in list {
                    *counts.entry(q.query.messages()).or_insert(0) += 1;
                }
                counts
            })
            .collect()
    }

    /// Query table with one column per used database, symbols written as
    /// letters with 1-based counters (`a1`, `b2+c2`, …).
    pub fn format_table(&self) -> String {
        let label = |t: &Term| {
            if self.messages <= 26 {
                format!("{}{}", (b'a' + t.message as u8) as char, t.index + 1)
            } else {
                format!("W{}[{}]", t.message + 1, t.index + 1)
            }
        };
        let columns: Vec<Vec<String>> = self
            .queries
            .iter()
            .map(|list| {
                list.iter()
                    .map(|q| q.query.terms.iter().map(label).collect::<Vec<_>>().join("+"))
                    .collect()
            })
            .collect();
        let headers: Vec<String> = (1..=self.databases).map(|n| format!("DB{n}")).collect();
        let widths: Vec<usize> = columns
            .iter()
            .zip(&headers)
            .map(|(c, h)| c.iter().map(String::len).chain([h.len()]).max().unwrap_or(0))
            .collect();
        let rows = columns.iter().map(Vec::len).max().unwrap_or(0);
        let line = |cells: Vec<&str>| {
            cells
                .iter()
                .zip(&widths)
                .map(|(c, &w)| format!("{c:<w$}"))
                .collect::<Vec<_>>()
                .join(" | ")
                .trim_end()
                .to_string()
        };
        let mut out = String::new();
        let _ = writeln!(out, "{}", line(headers.iter().map(String::as_str).collect()));
        let _ = writeln!(
            out,
            "{}",
            widths.iter().map(|&w| "-".repeat(w)).collect::<Vec<_>>().join("-+-")
        );
        for r in 0..rows {
            let cells = columns.iter().map(|c| c.get(r).map_or("", String::as_str)).collect();
            let _ = writeln!(out, "{}", line(cells));
        }
        out
    }
}

fn is_permutation(p: &[usize], len: usize) -> bool {
    if p.len() != len {
        return false;
    }
    let mut seen = vec![false; len];
    p.iter().all(|&v| v < len && !std::mem::replace(&mut seen[v], true))
}

/// Samples permutations and shuffles and realizes the plan.
pub fn synthesize_query_plan<R: RngCore + ?Sized>(
    sequence: &GroupSequence,
    databases: usize,
    desired: usize,
    repetitions: usize,
    rng: &mut R,
) -> Result<(QueryPlan, ReconstructionMap)> {
    let logical = synthesize_logical_plan(sequence, databases, desired, repetitions)?;
    let randomness = PlanRandomness::sample(&logical, rng);
    logical.realize(&randomness)
}

/// Truthful uncoded answer of one database: each bit is the GF(2) sum of
/// the queried symbols.
pub fn answer_uncoded(store: &MessageStore, queries: &[KSumQuery]) -> Result<Vec<u8>> {
    queries
        .iter()
        .map(|q| {
            q.terms.iter().try_fold(0u8, |acc, t| {
                if t.message >= store.messages() {
                    return Err(Error::OutOfRange {
                        index: t.message,
                        bound: store.messages(),
                    });
                }
                if t.index >= store.length() {
                    return Err(Error::OutOfRange {
                        index: t.index,
                        bound: store.length(),
                    });
                }
                Ok(acc ^ store.bit(t.message, t.index))
            })
        })
        .collect()
}

/// Recovers the desired message from decoded answers.
pub fn reconstruct(map: &ReconstructionMap, answers: &[Vec<u8>]) -> Result<Vec<u8>> {
    let fetch = |r: &AnswerRef| -> Result<u8> {
        answers
            .get(r.database)
            .and_then(|a| a.get(r.index))
            .copied()
            .ok_or(Error::OutOfRange {
                index: r.index,
                bound: answers.get(r.database).map_or(0, Vec::len),
            })
    };
    let mut out = vec![None; map.message_length];
    for rec in &map.recoveries {
        let mut bit = fetch(&rec.carrier)?;
        for s in &rec.side {
            bit ^= fetch(s)?;
        }
        *out.get_mut(rec.symbol).ok_or(Error::OutOfRange {
            index: rec.symbol,
            bound: map.message_length,
        })? = Some(bit);
    }
    out.into_iter()
        .enumerate()
        .map(|(pos, b)| b.ok_or_else(|| Error::Plan(format!("desired position {pos} is never recovered"))))
        .collect()
}

/// Number of desired-containing `k`-subsets; equals the desired symbols
/// per stage in round `k`.
pub fn desired_per_stage(messages: usize, k: usize) -> u64 {
    binomial(messages - 1, k - 1)
}
