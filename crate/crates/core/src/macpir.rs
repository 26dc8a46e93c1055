//! Retrieval through a multiple-access channel: additive (XOR plus noise),
//! conjunction (AND), disjunction (OR) and selection channels.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::classical_capacity;
use crate::channels::{MacChannel, MacKind, RngStream};
use crate::engine::{coded_length, trial_seed, DEFAULT_SEGMENT_BITS};
use crate::error::{Error, Result};
use crate::gf2code::LinearCode;
use crate::numerics::binary_entropy;
use crate::types::{bits_to_string, MessageStore, SessionReport};

fn check_additive_noise(p: f64) -> Result<()> {
    if !(0.0..0.5).contains(&p) {
        return Err(Error::Domain {
            value: p,
            domain: "[0, 1/2)",
        });
    }
    Ok(())
}

fn random_bits<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Vec<u8> {
    (0..len).map(|_| rng.gen::<bool>() as u8).collect()
}

fn check_bits(bits: &[u8], messages: usize) -> Result<()> {
    if bits.len() != messages {
        return Err(Error::LengthMismatch {
            expected: messages,
            actual: bits.len(),
        });
    }
    if let Some(&symbol) = bits.iter().find(|&&b| b > 1) {
        return Err(Error::Alphabet { symbol, alphabet: 2 });
    }
    Ok(())
}

/// `Z`: bit `m` set when message `m`'s literal is complemented.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NegationPattern(Vec<u8>);

impl NegationPattern {
    pub fn new(bits: Vec<u8>, messages: usize) -> Result<Self> {
        check_bits(&bits, messages)?;
        Ok(Self(bits))
    }

    pub fn random<R: Rng + ?Sized>(messages: usize, rng: &mut R) -> Self {
        Self(random_bits(messages, rng))
    }

    pub fn bits(&self) -> &[u8] {
        &self.0
    }
}

/// `h`: the random mask behind the additive scheme's queries.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MaskVector(Vec<u8>);

impl MaskVector {
    pub fn new(bits: Vec<u8>, messages: usize) -> Result<Self> {
        check_bits(&bits, messages)?;
        Ok(Self(bits))
    }

    pub fn random<R: Rng + ?Sized>(messages: usize, rng: &mut R) -> Self {
        Self(random_bits(messages, rng))
    }

    pub fn bits(&self) -> &[u8] {
        &self.0
    }
}

/// `1 − H(p)`.
pub fn additive_mac_capacity(p: f64) -> Result<f64> {
    check_additive_noise(p)?;
    Ok(1.0 - binary_entropy(p)?)
}

/// Queries of the additive scheme for one symbol position: `h` to the
/// first database and `h ⊕ e_i` to the second.
pub fn additive_queries(mask: &[u8], desired: usize) -> (Vec<u8>, Vec<u8>) {
    let mut second = mask.to_vec();
    second[desired] ^= 1;
    (mask.to_vec(), second)
}

fn masked_sum(store: &MessageStore, query: &[u8], position: usize) -> u8 {
    query
        .iter()
        .enumerate()
        .fold(0, |acc, (m, &q)| acc ^ (q & store.bit(m, position)))
}

/// Additive-MAC retrieval with explicit masks (`masks[j]` is the mask for
/// symbol `j`). Both databases encode with the same seeded code, so the
/// channel delivers a noisy codeword of `U_1 ⊕ U_2 = W_i`.
pub fn additive_mac_session(
    store: &MessageStore,
    desired: usize,
    masks: &[MaskVector],
    p: f64,
    margin: f64,
    rng: &mut RngStream,
) -> Result<SessionReport> {
    check_additive_noise(p)?;
    let m = store.messages();
    let l = store.length();
    if desired >= m {
        return Err(Error::OutOfRange { index: desired, bound: m });
    }
    if masks.len() != l || masks.iter().any(|h| h.bits().len() != m) {
        return Err(Error::Config(format!("need {l} masks of length {m}")));
    }
    let (u1, u2): (Vec<u8>, Vec<u8>) = masks
        .iter()
        .enumerate()
        .map(|(j, h)| {
            let (q1, q2) = additive_queries(h.bits(), desired);
            (masked_sum(store, &q1, j), masked_sum(store, &q2, j))
        })
        .unzip();
    let channel = MacChannel::new(MacKind::Additive { p }, 2)?;
    let mut code_rng = rng.split(1);
    let mut noise_rng = rng.split(2);
    let mut recovered = Vec::with_capacity(l);
    let mut uses = 0;
    let mut failed = false;
    if p == 0.0 {
        recovered = channel.transmit(&[u1, u2], &mut noise_rng)?;
        uses = l;
    } else {
        let capacity = 1.0 - binary_entropy(p)?;
        for (a, b) in u1.chunks(DEFAULT_SEGMENT_BITS).zip(u2.chunks(DEFAULT_SEGMENT_BITS)) {
            let t = coded_length(a.len(), capacity, margin);
            let code = LinearCode::random(t, a.len(), &mut code_rng)?;
            let y = channel.transmit(&[code.encode(a)?, code.encode(b)?], &mut noise_rng)?;
            let (sum, _) = code.decode(&y)?;
            failed |= sum.iter().zip(a.iter().zip(b)).any(|(s, (x, y))| *s != x ^ y);
            recovered.extend(sum);
            uses += t;
        }
    }
    let errors = recovered
        .iter()
        .zip(store.message(desired))
        .filter(|(a, b)| a != b)
        .count();
    Ok(SessionReport {
        desired_index: desired + 1,
        t_per_db: vec![uses],
        t_total: uses,
        message_length: l,
        rate: l as f64 / uses as f64,
        errors,
        trials: 1,
        seed: rng.seed(),
        target_rate: 1.0 - binary_entropy(p)?,
        decode_failures: (failed || errors > 0) as usize,
        recovered: Some(bits_to_string(&recovered)),
    })
}

/// Additive-MAC retrieval with uniformly random masks.
pub fn additive_mac_retrieve(
    store: &MessageStore,
    desired: usize,
    p: f64,
    margin: f64,
    rng: &mut RngStream,
) -> Result<SessionReport> {
    let mut mask_rng = rng.split(0);
    let masks: Vec<MaskVector> = (0..store.length())
        .map(|_| MaskVector::random(store.messages(), &mut mask_rng))
        .collect();
    additive_mac_session(store, desired, &masks, p, margin, rng)
}

/// Independent additive-MAC sessions with random stores, merged.
pub fn additive_mac_trials(
    messages: usize,
    length: usize,
    desired: usize,
    p: f64,
    margin: f64,
    seed: u64,
    trials: usize,
) -> Result<SessionReport> {
    if trials == 0 {
        return Err(Error::Config("at least one trial is required".into()));
    }
    let reports: Vec<SessionReport> = (0..trials)
        .into_par_iter()
        .map(|j| {
            let mut rng = RngStream::new(trial_seed(seed, j as u64));
            let store = MessageStore::random(messages, length, &mut rng.split(u64::MAX))?;
            additive_mac_retrieve(&store, desired, p, margin, &mut rng)
        })
        .collect::<Result<_>>()?;
    let mut merged = reports[0].clone();
    for r in &reports[1..] {
        merged = merged.merge(r)?;
    }
    merged.seed = seed;
    Ok(merged)
}

/// Which Boolean channel a query family is built for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BooleanMac {
    /// AND channel; each database evaluates a disjunction of literals.
    Conjunction,
    /// OR channel; each database evaluates a conjunction of literals.
    Disjunction,
}

impl BooleanMac {
    fn mac_kind(self) -> MacKind {
        match self {
            BooleanMac::Conjunction => MacKind::Conjunction,
            BooleanMac::Disjunction => MacKind::Disjunction,
        }
    }
}

/// Databases needed to retrieve privately at rate 1 with `messages`
/// messages: `2^{M-1}`.
pub fn boolean_databases(messages: usize) -> usize {
    1 << (messages - 1)
}

/// Literal-negation vectors sent to each database for negation pattern
/// `z`. Entry `m` of a query is 1 when message `m` appears complemented.
///
/// Database 1 gets `z` itself; the others get `z` with the other messages'
/// literals flipped by every non-zero pattern, in Gray-code order. When
/// more databases are available than needed, the extra ones repeat the
/// first query, which leaves the channel output unchanged.
pub fn boolean_queries(messages: usize, desired: usize, z: &[u8], databases: usize) -> Result<Vec<Vec<u8>>> {
    if messages == 0 || messages > 16 {
        return Err(Error::Config("M must lie in 1..=16".into()));
    }
    if desired >= messages {
        return Err(Error::OutOfRange {
            index: desired,
            bound: messages,
        });
    }
    if z.len() != messages || z.iter().any(|&b| b > 1) {
        return Err(Error::Config(format!("negation pattern must be {messages} bits")));
    }
    let needed = boolean_databases(messages);
    if databases < needed {
        return Err(Error::Config(format!(
            "{databases} databases given; this scheme needs at least 2^(M-1) = {needed}"
        )));
    }
    let others: Vec<usize> = (0..messages).filter(|&m| m != desired).collect();
    let mut queries: Vec<Vec<u8>> = (0..needed)
        .map(|g| {
            let pattern = g ^ (g >> 1);
            let mut q = z.to_vec();
            for (bit, &m) in others.iter().enumerate() {
                q[m] ^= ((pattern >> bit) & 1) as u8;
            }
            q
        })
        .collect();
    while queries.len() < databases {
        queries.push(queries[0].clone());
    }
    Ok(queries)
}

/// Text form of a query, e.g. `W1 | !W2 | W3`.
pub fn format_boolean_query(kind: BooleanMac, query: &[u8]) -> String {
    let op = match kind {
        BooleanMac::Conjunction => " | ",
        BooleanMac::Disjunction => " & ",
    };
    query
        .iter()
        .enumerate()
        .map(|(m, &neg)| format!("{}W{}", if neg == 1 { "!" } else { "" }, m + 1))
        .collect::<Vec<_>>()
        .join(op)
}

fn evaluate(kind: BooleanMac, query: &[u8], bits: &[u8]) -> u8 {
    let literals = query.iter().zip(bits).map(|(q, b)| q ^ b);
    match kind {
        BooleanMac::Conjunction => literals.fold(0, |a, l| a | l),
        BooleanMac::Disjunction => literals.fold(1, |a, l| a & l),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BooleanTranscript {
    pub kind: BooleanMac,
    pub desired: usize,
    pub negation: Vec<u8>,
    pub queries: Vec<Vec<u8>>,
    pub expressions: Vec<String>,
    pub output: Vec<u8>,
    pub recovered: Vec<u8>,
    pub channel_uses: usize,
}

/// Retrieval over a Boolean MAC with an explicit negation pattern.
pub fn boolean_retrieve_with(
    kind: BooleanMac,
    store: &MessageStore,
    desired: usize,
    databases: usize,
    z: &[u8],
) -> Result<BooleanTranscript> {
    let m = store.messages();
    let queries = boolean_queries(m, desired, z, databases)?;
    let answers: Vec<Vec<u8>> = queries
        .iter()
        .map(|q| {
            (0..store.length())
                .map(|j| {
                    let column: Vec<u8> = (0..m).map(|k| store.bit(k, j)).collect();
                    evaluate(kind, q, &column)
                })
                .collect()
        })
        .collect();
    let channel = MacChannel::new(kind.mac_kind(), databases)?;
    // Boolean channels are deterministic; the stream is never drawn from.
    let output = channel.transmit(&answers, &mut RngStream::new(0))?;
    let recovered = output.iter().map(|&y| y ^ z[desired]).collect();
    Ok(BooleanTranscript {
        kind,
        desired,
        negation: z.to_vec(),
        expressions: queries.iter().map(|q| format_boolean_query(kind, q)).collect(),
        queries,
        channel_uses: output.len(),
        output,
        recovered,
    })
}

/// Retrieval over a Boolean MAC with a uniformly random negation pattern.
pub fn boolean_retrieve(
    kind: BooleanMac,
    store: &MessageStore,
    desired: usize,
    databases: usize,
    rng: &mut RngStream,
) -> Result<BooleanTranscript> {
    let z = NegationPattern::random(store.messages(), rng);
    boolean_retrieve_with(kind, store, desired, databases, z.bits())
}

pub fn conjunction_retrieve(
    store: &MessageStore,
    desired: usize,
    databases: usize,
    rng: &mut RngStream,
) -> Result<BooleanTranscript> {
    boolean_retrieve(BooleanMac::Conjunction, store, desired, databases, rng)
}

pub fn disjunction_retrieve(
    store: &MessageStore,
    desired: usize,
    databases: usize,
    rng: &mut RngStream,
) -> Result<BooleanTranscript> {
    boolean_retrieve(BooleanMac::Disjunction, store, desired, databases, rng)
}

impl BooleanTranscript {
    pub fn report(&self, store: &MessageStore, seed: u64) -> SessionReport {
        let errors = self
            .recovered
            .iter()
            .zip(store.message(self.desired))
            .filter(|(a, b)| a != b)
            .count();
        SessionReport {
            desired_index: self.desired + 1,
            t_per_db: vec![self.channel_uses],
            t_total: self.channel_uses,
            message_length: store.length(),
            rate: store.length() as f64 / self.channel_uses as f64,
            errors,
            trials: 1,
            seed,
            target_rate: 1.0,
            decode_failures: (errors > 0) as usize,
            recovered: Some(bits_to_string(&self.recovered)),
        }
    }
}

/// Smallest number of clauses (each a disjunction over a subset of the
/// `M` literals, possibly negated) whose conjunction equals `W_1`, found
/// by exhaustive search. With `full_clauses` every clause must mention all
/// messages, as it must for queries that look uniform to each database.
pub fn min_conjunction_cover(messages: usize, full_clauses: bool) -> Result<usize> {
    if messages == 0 || messages > 3 {
        return Err(Error::Config("the cover search supports 1 <= M <= 3".into()));
    }
    let assignments = 1usize << messages;
    // clause: per message 0 = absent, 1 = positive, 2 = negated
    let mut clauses: Vec<u32> = Vec::new();
    for code in 0..3usize.pow(messages as u32) {
        let mut digits = Vec::with_capacity(messages);
        let mut c = code;
        for _ in 0..messages {
            digits.push(c % 3);
            c /= 3;
        }
        if digits.iter().all(|&d| d == 0) || (full_clauses && digits.contains(&0)) {
            continue;
        }
        let mut truth = 0u32;
        for a in 0..assignments {
            let value = digits.iter().enumerate().any(|(m, &d)| {
                let bit = (a >> m) & 1;
                (d == 1 && bit == 1) || (d == 2 && bit == 0)
            });
            truth |= (value as u32) << a;
        }
        clauses.push(truth);
    }
    let target: u32 = (0..assignments).filter(|a| a & 1 == 1).map(|a| 1u32 << a).sum();
    let everything = (1u32 << assignments) - 1;
    for size in 1..=assignments {
        let mut stack = vec![(0usize, everything, 0usize)];
        while let Some((start, acc, depth)) = stack.pop() {
            if depth == size {
                if acc == target {
                    return Ok(size);
                }
                continue;
            }
            for (idx, &c) in clauses.iter().enumerate().skip(start) {
                let next = acc & c;
                if next & target == target {
                    stack.push((idx + 1, next, depth + 1));
                }
            }
        }
    }
    Err(Error::Plan("no clause family realizes the target".into()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SelectionVariant {
    /// One database is selected for the whole session.
    Fixed,
    /// A fresh database is selected at every channel use.
    PerUse,
}

pub fn selection_capacity(messages: usize, databases: usize, variant: SelectionVariant) -> f64 {
    match variant {
        SelectionVariant::Fixed => 1.0 / messages as f64,
        SelectionVariant::PerUse => classical_capacity(messages, databases),
    }
}

/// Selection channel fixed for the session: every database is asked for
/// all messages, and the one the channel picks delivers them. `t_per_db`
/// has one entry per database and is non-zero only for the selected one.
pub fn selection_fixed_retrieve(
    store: &MessageStore,
    desired: usize,
    databases: usize,
    rng: &mut RngStream,
) -> Result<SessionReport> {
    let m = store.messages();
    let l = store.length();
    if desired >= m {
        return Err(Error::OutOfRange { index: desired, bound: m });
    }
    let everything: Vec<u8> = (0..m).flat_map(|k| store.message(k).to_vec()).collect();
    let channel = MacChannel::new(MacKind::SelectionFixed, databases)?;
    let picks = channel.draw_selection(everything.len(), rng).expect("selection channel");
    let answers = vec![everything; databases];
    let output: Vec<u8> = picks.iter().enumerate().map(|(eta, &n)| answers[n][eta]).collect();
    let recovered = output[desired * l..(desired + 1) * l].to_vec();
    let mut t_per_db = vec![0; databases];
    t_per_db[picks[0]] = output.len();
    let errors = recovered
        .iter()
        .zip(store.message(desired))
        .filter(|(a, b)| a != b)
        .count();
    Ok(SessionReport {
        desired_index: desired + 1,
        t_per_db,
        t_total: output.len(),
        message_length: l,
        rate: l as f64 / output.len() as f64,
        errors,
        trials: 1,
        seed: rng.seed(),
        target_rate: selection_capacity(m, databases, SelectionVariant::Fixed),
        decode_failures: (errors > 0) as usize,
        recovered: Some(bits_to_string(&recovered)),
    })
}

/// Independent fixed-selection sessions with random stores. The merged
/// report counts channel uses per session in `t_per_db[0]`; the second
/// value counts how often each database was selected.
pub fn selection_fixed_trials(
    messages: usize,
    length: usize,
    desired: usize,
    databases: usize,
    seed: u64,
    trials: usize,
) -> Result<(SessionReport, Vec<usize>)> {
    if trials == 0 {
        return Err(Error::Config("at least one trial is required".into()));
    }
    let reports: Vec<SessionReport> = (0..trials)
        .into_par_iter()
        .map(|j| {
            let mut rng = RngStream::new(trial_seed(seed, j as u64));
            let store = MessageStore::random(messages, length, &mut rng.split(u64::MAX))?;
            selection_fixed_retrieve(&store, desired, databases, &mut rng)
        })
        .collect::<Result<_>>()?;
    let mut counts = vec![0; databases];
    let mut merged: Option<SessionReport> = None;
    for r in reports {
        let selected = r.t_per_db.iter().position(|&t| t > 0).expect("one selected database");
        counts[selected] += 1;
        let r = SessionReport {
            t_per_db: vec![r.t_total],
            ..r
        };
        merged = Some(match merged {
            None => r,
            Some(m) => m.merge(&r)?,
        });
    }
    let mut merged = merged.expect("at least one trial");
    merged.seed = seed;
    Ok((merged, counts))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stores(m: usize, l: usize) -> Vec<MessageStore> {
        (0..1u32 << (m * l))
            .map(|code| {
                MessageStore::new(
                    (0..m)
                        .map(|k| (0..l).map(|j| ((code >> (k * l + j)) & 1) as u8).collect())
                        .collect(),
                )
                .unwrap()
            })
            .collect()
    }

    fn all_bits(m: usize) -> Vec<Vec<u8>> {
        (0..1u32 << m).map(|v| (0..m).map(|k| ((v >> k) & 1) as u8).collect()).collect()
    }

    #[test]
    fn additive_capacity_values() {
        assert_eq!(additive_mac_capacity(0.0).unwrap(), 1.0);
        assert!(additive_mac_capacity(0.499).unwrap() < 0.01);
        assert!((additive_mac_capacity(0.11).unwrap() - 0.5).abs() < 1e-3);
        assert!(additive_mac_capacity(0.5).is_err());
    }

    #[test]
    fn noiseless_additive_is_exact_exhaustively() {
        for m in 1..=3 {
            for l in 1..=2 {
                for store in stores(m, l) {
                    for i in 0..m {
                        for h0 in all_bits(m) {
                            let masks = vec![MaskVector::new(h0.clone(), m).unwrap(); l];
                            let r = additive_mac_session(&store, i, &masks, 0.0, 0.0, &mut RngStream::new(1)).unwrap();
                            assert_eq!(r.errors, 0);
                            assert_eq!(r.rate, 1.0);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn additive_queries_are_marginally_uniform() {
        for m in 1..=3 {
            for i in 0..m {
                let mut first = std::collections::BTreeMap::new();
                let mut second = std::collections::BTreeMap::new();
                for h in all_bits(m) {
                    let (q1, q2) = additive_queries(&h, i);
                    *first.entry(q1).or_insert(0) += 1;
                    *second.entry(q2).or_insert(0) += 1;
                }
                assert_eq!(first.len(), 1 << m);
                assert_eq!(second.len(), 1 << m);
                assert!(first.values().chain(second.values()).all(|&c| c == 1));
            }
        }
    }

    #[test]
    fn noisy_additive_sessions_decode_sums() {
        let r = additive_mac_trials(3, 16, 1, 0.05, 0.5, 7, 50).unwrap();
        assert!(r.success_rate() > 0.8, "{}", r.success_rate());
        assert!(r.rate < additive_mac_capacity(0.05).unwrap());
    }

    #[test]
    fn worked_example_three_messages_four_databases() {
        // Z = 0: databases see W1|W2|W3, W1|!W2|W3, W1|!W2|!W3, W1|W2|!W3
        let queries = boolean_queries(3, 0, &[0, 0, 0], 4).unwrap();
        let text: Vec<String> = queries.iter().map(|q| format_boolean_query(BooleanMac::Conjunction, q)).collect();
        assert_eq!(text, ["W1 | W2 | W3", "W1 | !W2 | W3", "W1 | !W2 | !W3", "W1 | W2 | !W3"]);
        let store = MessageStore::new(vec![vec![1, 0, 1, 0, 1, 0, 1, 0], vec![1, 1, 0, 0, 1, 1, 0, 0], vec![1, 1, 1, 1, 0, 0, 0, 0]]).unwrap();
        let t = boolean_retrieve_with(BooleanMac::Conjunction, &store, 0, 4, &[0, 0, 0]).unwrap();
        assert_eq!(t.output, store.message(0));
        let t = boolean_retrieve_with(BooleanMac::Disjunction, &store, 0, 4, &[0, 0, 0]).unwrap();
        assert_eq!(t.output, store.message(0));
        assert_eq!(t.expressions[1], "W1 & !W2 & W3");
    }

    #[test]
    fn single_message_is_trivial() {
        let store = MessageStore::new(vec![vec![1, 0, 1]]).unwrap();
        for kind in [BooleanMac::Conjunction, BooleanMac::Disjunction] {
            for z in [0u8, 1] {
                let t = boolean_retrieve_with(kind, &store, 0, 1, &[z]).unwrap();
                assert_eq!(t.recovered, vec![1, 0, 1]);
            }
        }
    }

    #[test]
    fn boolean_truth_tables_exhaustive() {
        for kind in [BooleanMac::Conjunction, BooleanMac::Disjunction] {
            for m in 1..=3 {
                let n = boolean_databases(m);
                for store in stores(m, 1) {
                    for z in all_bits(m) {
                        for i in 0..m {
                            let t = boolean_retrieve_with(kind, &store, i, n, &z).unwrap();
                            assert_eq!(t.recovered, store.message(i));
                            assert_eq!(t.channel_uses, 1);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn extra_databases_repeat_a_query() {
        let store = MessageStore::new(vec![vec![0, 1], vec![1, 1]]).unwrap();
        let t = boolean_retrieve_with(BooleanMac::Conjunction, &store, 1, 5, &[1, 0]).unwrap();
        assert_eq!(t.queries.len(), 5);
        assert_eq!(t.recovered, vec![1, 1]);
        assert!(boolean_retrieve_with(BooleanMac::Conjunction, &store, 1, 1, &[1, 0]).is_err());
    }

    #[test]
    fn conjunction_queries_are_uniform_per_database() {
        for m in 1..=3 {
            let n = boolean_databases(m);
            for i in 0..m {
                for db in 0..n {
                    let mut seen = std::collections::BTreeSet::new();
                    for z in all_bits(m) {
                        seen.insert(boolean_queries(m, i, &z, n).unwrap()[db].clone());
                    }
                    assert_eq!(seen.len(), 1 << m);
                }
            }
        }
    }

    #[test]
    fn conjunction_of_clauses_is_the_literal() {
        // as Boolean functions over all assignments
        for m in 1..=4 {
            for i in 0..m {
                let queries = boolean_queries(m, i, &vec![0; m], boolean_databases(m)).unwrap();
                for a in all_bits(m) {
                    let and = queries.iter().fold(1, |acc, q| acc & evaluate(BooleanMac::Conjunction, q, &a));
                    assert_eq!(and, a[i]);
                }
            }
        }
    }

    #[test]
    fn cover_search() {
        assert_eq!(min_conjunction_cover(3, true).unwrap(), 4);
        assert_eq!(min_conjunction_cover(2, true).unwrap(), 2);
        assert_eq!(min_conjunction_cover(3, false).unwrap(), 1);
    }

    #[test]
    fn selection_capacities() {
        assert_eq!(selection_capacity(4, 3, SelectionVariant::Fixed), 0.25);
        assert!((selection_capacity(2, 2, SelectionVariant::PerUse) - 2.0 / 3.0).abs() < 1e-15);
        assert!((selection_capacity(3, 1, SelectionVariant::PerUse) - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn fixed_selection_downloads_everything() {
        let store = MessageStore::new(vec![vec![1, 0, 0, 1], vec![0, 1, 1, 1]]).unwrap();
        let r = selection_fixed_retrieve(&store, 1, 3, &mut RngStream::new(4)).unwrap();
        assert_eq!(r.t_total, 8);
        assert_eq!(r.rate, 0.5);
        assert_eq!(r.recovered.as_deref(), Some("0111"));
        assert_eq!(r.t_per_db.iter().filter(|&&t| t > 0).count(), 1);
    }

    #[test]
    fn fixed_selection_trials_count_selections() {
        let (r, counts) = selection_fixed_trials(2, 3, 0, 4, 9, 400).unwrap();
        assert_eq!(r.trials, 400);
        assert_eq!(r.errors, 0);
        assert_eq!(counts.iter().sum::<usize>(), 400);
        assert!(counts.iter().all(|&c| c > 50));
    }

    #[test]
    fn pattern_types_validate() {
        assert!(NegationPattern::new(vec![0, 1], 2).is_ok());
        assert!(NegationPattern::new(vec![0, 2], 2).is_err());
        assert!(MaskVector::new(vec![1], 2).is_err());
        assert_eq!(MaskVector::random(5, &mut RngStream::new(1)).bits().len(), 5);
    }
}
