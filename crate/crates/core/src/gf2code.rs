//! Binary linear block codes with exhaustive nearest-codeword decoding,
//! plus small random codebooks with maximum-likelihood decoding for
//! arbitrary discrete memoryless channels.

use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use crate::channels::{PointChannel, ERASURE};
use crate::error::{Error, Result};

/// Largest message length the exhaustive decoders accept.
pub const MAX_DECODE_BITS: usize = 24;

/// Largest message length for random codebooks.
pub const MAX_CODEBOOK_BITS: usize = 16;

const WORD: usize = 64;

fn words_for(bits: usize) -> usize {
    bits.div_ceil(WORD)
}

/// Dense GF(2) matrix, one packed `u64` slice per row.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Gf2Matrix {
    rows: usize,
    cols: usize,
    stride: usize,
    data: Vec<u64>,
}

impl Gf2Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        let stride = words_for(cols);
        Self {
            rows,
            cols,
            stride,
            data: vec![0; rows * stride],
        }
    }

    pub fn from_rows(rows: &[Vec<u8>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut m = Self::zeros(rows.len(), cols);
        for (i, r) in rows.iter().enumerate() {
            if r.len() != cols {
                return Err(Error::LengthMismatch {
                    expected: cols,
                    actual: r.len(),
                });
            }
            for (j, &b) in r.iter().enumerate() {
                if b > 1 {
                    return Err(Error::Alphabet { symbol: b, alphabet: 2 });
                }
                m.set(i, j, b);
            }
        }
        Ok(m)
    }

    pub fn random<R: RngCore + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> Self {
        let mut m = Self::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m.set(i, j, rng.gen::<bool>() as u8);
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> u8 {
        ((self.data[i * self.stride + j / WORD] >> (j % WORD)) & 1) as u8
    }

    pub fn set(&mut self, i: usize, j: usize, bit: u8) {
        let w = &mut self.data[i * self.stride + j / WORD];
        let mask = 1u64 << (j % WORD);
        if bit & 1 == 1 {
            *w |= mask;
        } else {
            *w &= !mask;
        }
    }

    pub fn row_words(&self, i: usize) -> &[u64] {
        &self.data[i * self.stride..(i + 1) * self.stride]
    }

    pub fn rank(&self) -> usize {
        let mut m = self.clone();
        let mut rank = 0;
        for col in 0..self.cols {
            let Some(pivot) = (rank..self.rows).find(|&r| m.get(r, col) == 1) else {
                continue;
            };
            if pivot != rank {
                for w in 0..self.stride {
                    m.data.swap(pivot * self.stride + w, rank * self.stride + w);
                }
            }
            for r in 0..self.rows {
                if r != rank && m.get(r, col) == 1 {
                    for w in 0..self.stride {
                        let v = m.data[rank * self.stride + w];
                        m.data[r * self.stride + w] ^= v;
                    }
                }
            }
            rank += 1;
            if rank == self.rows {
                break;
            }
        }
        rank
    }
}

fn pack(bits: &[u8]) -> Vec<u64> {
    let mut out = vec![0u64; words_for(bits.len())];
    for (j, &b) in bits.iter().enumerate() {
        out[j / WORD] |= ((b & 1) as u64) << (j % WORD);
    }
    out
}

fn unpack(words: &[u64], len: usize) -> Vec<u8> {
    (0..len).map(|j| ((words[j / WORD] >> (j % WORD)) & 1) as u8).collect()
}

/// A binary `[t, k]` linear code given by a full-rank `k × t` generator.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinearCode {
    generator: Gf2Matrix,
}

impl LinearCode {
    pub fn new(generator: Gf2Matrix) -> Result<Self> {
        if generator.rows() > generator.cols() {
            return Err(Error::Config(format!(
                "k = {} exceeds t = {}",
                generator.rows(),
                generator.cols()
            )));
        }
        if generator.rank() != generator.rows() {
            return Err(Error::Config("generator matrix is rank deficient".into()));
        }
        Ok(Self { generator })
    }

    /// Uniformly random full-rank generator (resampled until full rank).
    pub fn random<R: RngCore + ?Sized>(t: usize, k: usize, rng: &mut R) -> Result<Self> {
        if k > t {
            return Err(Error::Config(format!("k = {k} exceeds t = {t}")));
        }
        loop {
            let g = Gf2Matrix::random(k, t, rng);
            if g.rank() == k {
                return Ok(Self { generator: g });
            }
        }
    }

    pub fn repetition(t: usize) -> Self {
        Self::new(Gf2Matrix::from_rows(&[vec![1; t]]).expect("valid rows")).expect("full rank")
    }

    pub fn blocklength(&self) -> usize {
        self.generator.cols()
    }

    pub fn dimension(&self) -> usize {
        self.generator.rows()
    }

    pub fn rate(&self) -> f64 {
        self.dimension() as f64 / self.blocklength() as f64
    }

    pub fn generator(&self) -> &Gf2Matrix {
        &self.generator
    }

    fn encode_words(&self, u: &[u8]) -> Vec<u64> {
        let mut c = vec![0u64; words_for(self.blocklength())];
        for (i, &b) in u.iter().enumerate() {
            if b & 1 == 1 {
                for (w, g) in c.iter_mut().zip(self.generator.row_words(i)) {
                    *w ^= g;
                }
            }
        }
        c
    }

    /// `u · G` over GF(2).
    pub fn encode(&self, u: &[u8]) -> Result<Vec<u8>> {
        if u.len() != self.dimension() {
            return Err(Error::LengthMismatch {
                expected: self.dimension(),
                actual: u.len(),
            });
        }
        if let Some(&symbol) = u.iter().find(|&&b| b > 1) {
            return Err(Error::Alphabet { symbol, alphabet: 2 });
        }
        Ok(unpack(&self.encode_words(u), self.blocklength()))
    }

    fn check_decodable(&self, y: &[u8]) -> Result<()> {
        if y.len() != self.blocklength() {
            return Err(Error::LengthMismatch {
                expected: self.blocklength(),
                actual: y.len(),
            });
        }
        let k = self.dimension();
        if k > MAX_DECODE_BITS {
            return Err(Error::EnumerationLimit {
                size: 1u128 << k,
                limit: 1u128 << MAX_DECODE_BITS,
            });
        }
        Ok(())
    }

    /// Exhaustive search for the message whose codeword is closest to `y`
    /// in Hamming distance over the unmasked positions. Ties go to the
    /// smallest message value (bit `i` of the value is `u_i`).
    fn search(&self, y: &[u64], mask: &[u64]) -> (Vec<u8>, usize) {
        let k = self.dimension();
        let distance =
            |c: &[u64]| -> usize { c.iter().zip(y).zip(mask).map(|((a, b), m)| ((a ^ b) & m).count_ones() as usize).sum() };
        let mut codeword = vec![0u64; y.len()];
        let mut message = 0u64;
        let mut best = (distance(&codeword), 0u64);
        for step in 1u64..(1u64 << k) {
            let flip = step.trailing_zeros() as usize;
            message ^= 1 << flip;
            for (w, g) in codeword.iter_mut().zip(self.generator.row_words(flip)) {
                *w ^= g;
            }
            let d = distance(&codeword);
            if (d, message) < best {
                best = (d, message);
            }
        }
        let u = (0..k).map(|i| ((best.1 >> i) & 1) as u8).collect();
        (u, best.0)
    }

    /// Nearest-codeword decoding. Returns the message and the Hamming
    /// distance from `y` to its codeword.
    pub fn decode(&self, y: &[u8]) -> Result<(Vec<u8>, usize)> {
        self.check_decodable(y)?;
        if let Some(&symbol) = y.iter().find(|&&b| b > 1) {
            return Err(Error::Alphabet { symbol, alphabet: 2 });
        }
        let mask = pack(&vec![1u8; y.len()]);
        Ok(self.search(&pack(y), &mask))
    }

    /// Nearest-codeword decoding that ignores erased positions; this is
    /// maximum-likelihood decoding for the erasure channel up to ties.
    pub fn decode_erasures(&self, y: &[u8]) -> Result<(Vec<u8>, usize)> {
        self.check_decodable(y)?;
        if let Some(&symbol) = y.iter().find(|&&b| b > 1 && b != ERASURE) {
            return Err(Error::Alphabet { symbol, alphabet: 3 });
        }
        let mask: Vec<u8> = y.iter().map(|&b| (b != ERASURE) as u8).collect();
        let bits: Vec<u8> = y.iter().map(|&b| (b == 1) as u8).collect();
        Ok(self.search(&pack(&bits), &pack(&mask)))
    }

    /// Minimum Hamming weight over non-zero codewords.
    pub fn min_distance(&self) -> Result<usize> {
        let k = self.dimension();
        if k > MAX_DECODE_BITS {
            return Err(Error::EnumerationLimit {
                size: 1u128 << k,
                limit: 1u128 << MAX_DECODE_BITS,
            });
        }
        let mut codeword = vec![0u64; words_for(self.blocklength())];
        let mut best = usize::MAX;
        for step in 1u64..(1u64 << k) {
            let flip = step.trailing_zeros() as usize;
            for (w, g) in codeword.iter_mut().zip(self.generator.row_words(flip)) {
                *w ^= g;
            }
            best = best.min(codeword.iter().map(|w| w.count_ones() as usize).sum());
        }
        Ok(best)
    }
}

/// Monte-Carlo block error rate of nearest-codeword decoding over BSC(p)
/// for each `p` in `grid`.
pub fn block_error_curve<R: RngCore + ?Sized>(
    code: &LinearCode,
    grid: &[f64],
    trials: usize,
    rng: &mut R,
) -> Result<Vec<f64>> {
    grid.iter()
        .map(|&p| {
            let channel = PointChannel::bsc(p)?;
            let mut errors = 0usize;
            for _ in 0..trials {
                let u: Vec<u8> = (0..code.dimension()).map(|_| rng.gen::<bool>() as u8).collect();
                let y = channel.transmit(&code.encode(&u)?, rng)?;
                if code.decode(&y)?.0 != u {
                    errors += 1;
                }
            }
            Ok(errors as f64 / trials.max(1) as f64)
        })
        .collect()
}

/// Random codebook over a finite input alphabet with maximum-likelihood
/// decoding for a given transition table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Codebook {
    bits: usize,
    blocklength: usize,
    codewords: Vec<Vec<u8>>,
}

impl Codebook {
    /// `2^bits` codewords of length `blocklength`, each symbol drawn
    /// i.i.d. from `input` (a distribution over the input alphabet).
    pub fn random<R: RngCore + ?Sized>(
        bits: usize,
        blocklength: usize,
        input: &[f64],
        rng: &mut R,
    ) -> Result<Self> {
        if bits > MAX_CODEBOOK_BITS {
            return Err(Error::EnumerationLimit {
                size: 1u128 << bits,
                limit: 1u128 << MAX_CODEBOOK_BITS,
            });
        }
        if input.is_empty() || input.len() > 256 {
            return Err(Error::Config("input distribution must have 1..=256 symbols".into()));
        }
        let draw = |rng: &mut R| {
            let u: f64 = rng.gen();
            let mut acc = 0.0;
            for (x, &q) in input.iter().enumerate() {
                acc += q;
                if u < acc {
                    return x as u8;
                }
            }
            input.iter().rposition(|&q| q > 0.0).unwrap_or(0) as u8
        };
        let codewords = (0..1usize << bits)
            .map(|_| (0..blocklength).map(|_| draw(rng)).collect())
            .collect();
        Ok(Self {
            bits,
            blocklength,
            codewords,
        })
    }

    pub fn bits(&self) -> usize {
        self.bits
    }

    pub fn blocklength(&self) -> usize {
        self.blocklength
    }

    fn index(u: &[u8]) -> usize {
        u.iter().enumerate().map(|(i, &b)| (b as usize & 1) << i).sum()
    }

    pub fn encode(&self, u: &[u8]) -> Result<Vec<u8>> {
        if u.len() != self.bits {
            return Err(Error::LengthMismatch {
                expected: self.bits,
                actual: u.len(),
            });
        }
        Ok(self.codewords[Self::index(u)].clone())
    }

    /// Maximum-likelihood decoding; ties go to the smallest message value.
    pub fn decode(&self, y: &[u8], transition: &[Vec<f64>]) -> Result<Vec<u8>> {
        if y.len() != self.blocklength {
            return Err(Error::LengthMismatch {
                expected: self.blocklength,
                actual: y.len(),
            });
        }
        let width = transition.first().map_or(0, Vec::len);
        if let Some(&symbol) = y.iter().find(|&&s| s as usize >= width) {
            return Err(Error::Alphabet { symbol, alphabet: width });
        }
        let mut best = (f64::NEG_INFINITY, 0usize);
        for (m, c) in self.codewords.iter().enumerate() {
            let ll: f64 = c
                .iter()
                .zip(y)
                .map(|(&x, &s)| transition[x as usize][s as usize].ln())
                .sum();
            if ll > best.0 {
                best = (ll, m);
            }
        }
        Ok((0..self.bits).map(|i| ((best.1 >> i) & 1) as u8).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::RngStream;
    use proptest::prelude::*;
    use rand::Rng;

    fn bits(s: &str) -> Vec<u8> {
        s.bytes().map(|b| b - b'0').collect()
    }

    fn random_bits(n: usize, rng: &mut RngStream) -> Vec<u8> {
        (0..n).map(|_| rng.gen::<bool>() as u8).collect()
    }

    #[test]
    fn square_code_is_a_bijection() {
        let mut rng = RngStream::new(1);
        let code = LinearCode::random(6, 6, &mut rng).unwrap();
        let mut seen = std::collections::HashSet::new();
        for v in 0..64u32 {
            let u: Vec<u8> = (0..6).map(|i| ((v >> i) & 1) as u8).collect();
            assert!(seen.insert(code.encode(&u).unwrap()));
        }
    }

    #[test]
    fn repetition_code() {
        let code = LinearCode::repetition(3);
        assert_eq!(code.encode(&[1]).unwrap(), bits("111"));
        assert_eq!(code.min_distance().unwrap(), 3);
        assert_eq!(code.decode(&bits("101")).unwrap(), (vec![1], 1));
        assert_eq!(code.decode(&bits("100")).unwrap(), (vec![0], 1));
    }

    #[test]
    fn random_code_has_full_rank() {
        let code = LinearCode::random(8, 4, &mut RngStream::new(8)).unwrap();
        assert_eq!(code.generator().rank(), 4);
        assert!(LinearCode::random(3, 4, &mut RngStream::new(8)).is_err());
    }

    #[test]
    fn rank_of_known_matrices() {
        let m = Gf2Matrix::from_rows(&[bits("110"), bits("011"), bits("101")]).unwrap();
        assert_eq!(m.rank(), 2);
        assert!(LinearCode::new(m).is_err());
        let wide = Gf2Matrix::random(3, 130, &mut RngStream::new(2));
        assert_eq!(wide.cols(), 130);
        assert_eq!(wide.rank(), 3);
    }

    #[test]
    fn zero_and_round_trip() {
        let mut rng = RngStream::new(3);
        let code = LinearCode::random(20, 8, &mut rng).unwrap();
        assert_eq!(code.encode(&[0; 8]).unwrap(), vec![0; 20]);
        for _ in 0..50 {
            let u = random_bits(8, &mut rng);
            assert_eq!(code.decode(&code.encode(&u).unwrap()).unwrap(), (u, 0));
        }
        assert!(code.encode(&[0; 7]).is_err());
        assert!(code.decode(&[0; 19]).is_err());
    }

    #[test]
    fn decode_guard() {
        let code = LinearCode::random(30, 25, &mut RngStream::new(3)).unwrap();
        assert!(matches!(code.decode(&[0; 30]), Err(Error::EnumerationLimit { .. })));
    }

    #[test]
    fn ties_go_to_smallest_message() {
        // [2,1] repetition: 10 is equidistant from 00 and 11
        let code = LinearCode::repetition(2);
        assert_eq!(code.decode(&bits("10")).unwrap(), (vec![0], 1));
    }

    /// Brute-force oracle: explicit list of all codewords.
    fn brute_decode(code: &LinearCode, y: &[u8]) -> (Vec<u8>, usize) {
        let k = code.dimension();
        (0..1u32 << k)
            .map(|v| {
                let u: Vec<u8> = (0..k).map(|i| ((v >> i) & 1) as u8).collect();
                let c = code.encode(&u).unwrap();
                let d = c.iter().zip(y).filter(|(a, b)| a != b).count();
                (d, v, u)
            })
            .min_by_key(|(d, v, _)| (*d, *v))
            .map(|(d, _, u)| (u, d))
            .unwrap()
    }

    #[test]
    fn decoder_matches_explicit_codeword_list() {
        let mut rng = RngStream::new(12);
        let code = LinearCode::random(12, 4, &mut rng).unwrap();
        let channel = PointChannel::bsc(0.05).unwrap();
        for _ in 0..2000 {
            let u = random_bits(4, &mut rng);
            let y = channel.transmit(&code.encode(&u).unwrap(), &mut rng).unwrap();
            assert_eq!(code.decode(&y).unwrap(), brute_decode(&code, &y));
        }
    }

    #[test]
    fn corrects_below_half_minimum_distance() {
        let mut rng = RngStream::new(4);
        let code = LinearCode::random(12, 3, &mut rng).unwrap();
        let d = code.min_distance().unwrap();
        let radius = (d - 1) / 2;
        for v in 0..8u32 {
            let u: Vec<u8> = (0..3).map(|i| ((v >> i) & 1) as u8).collect();
            let c = code.encode(&u).unwrap();
            for e in 0..1u32 << 12 {
                if e.count_ones() as usize > radius {
                    continue;
                }
                let y: Vec<u8> = c.iter().enumerate().map(|(j, &b)| b ^ ((e >> j) & 1) as u8).collect();
                assert_eq!(code.decode(&y).unwrap().0, u);
            }
        }
    }

    #[test]
    fn erasure_decoding() {
        let mut rng = RngStream::new(6);
        let code = LinearCode::random(24, 8, &mut rng).unwrap();
        let channel = PointChannel::bec(0.2).unwrap();
        let mut ok = 0;
        for _ in 0..200 {
            let u = random_bits(8, &mut rng);
            let y = channel.transmit(&code.encode(&u).unwrap(), &mut rng).unwrap();
            let (uh, d) = code.decode_erasures(&y).unwrap();
            assert_eq!(d, 0);
            ok += (uh == u) as usize;
        }
        assert!(ok > 190, "{ok}");
    }

    #[test]
    fn sum_of_codewords_decodes_to_sum_of_messages() {
        let mut rng = RngStream::new(9);
        let code = LinearCode::random(40, 10, &mut rng).unwrap();
        for _ in 0..100 {
            let u1 = random_bits(10, &mut rng);
            let u2 = random_bits(10, &mut rng);
            let c1 = code.encode(&u1).unwrap();
            let c2 = code.encode(&u2).unwrap();
            let mut y: Vec<u8> = c1.iter().zip(&c2).map(|(a, b)| a ^ b).collect();
            y[3] ^= 1;
            let sum: Vec<u8> = u1.iter().zip(&u2).map(|(a, b)| a ^ b).collect();
            let (uh, _) = code.decode(&y).unwrap();
            if code.min_distance().unwrap() >= 3 {
                assert_eq!(uh, sum);
            }
        }
    }

    #[test]
    fn error_curve_endpoints() {
        let mut rng = RngStream::new(10);
        let code = LinearCode::random(10, 4, &mut rng).unwrap();
        let curve = block_error_curve(&code, &[0.0, 0.5], 4000, &mut rng).unwrap();
        assert_eq!(curve[0], 0.0);
        // output independent of input: success probability is 2^-k
        let expected = 1.0 - 2f64.powi(-4);
        let sigma = (expected * (1.0 - expected) / 4000.0).sqrt();
        assert!(curve[1] >= expected - 3.0 * sigma, "{}", curve[1]);
    }

    #[test]
    fn error_decreases_with_blocklength() {
        // ensemble average: a fresh random code every 10 trials
        let mut rng = RngStream::new(2024);
        let mut errors = Vec::new();
        for t in [8usize, 16, 24] {
            let mut total = 0.0;
            for _ in 0..1000 {
                let code = LinearCode::random(t, t / 2, &mut rng).unwrap();
                total += block_error_curve(&code, &[0.05], 10, &mut rng).unwrap()[0];
            }
            errors.push(total / 1000.0);
        }
        assert!(errors[0] > errors[1] && errors[1] > errors[2], "{errors:?}");
    }

    #[test]
    fn codebook_round_trip() {
        let transition = vec![vec![0.9, 0.1, 0.0], vec![0.0, 0.1, 0.9]];
        let mut rng = RngStream::new(5);
        let book = Codebook::random(4, 12, &[0.5, 0.5], &mut rng).unwrap();
        let ch = PointChannel::table(transition.clone()).unwrap();
        let mut ok = 0;
        for _ in 0..200 {
            let u = random_bits(4, &mut rng);
            let y = ch.transmit(&book.encode(&u).unwrap(), &mut rng).unwrap();
            ok += (book.decode(&y, &transition).unwrap() == u) as usize;
        }
        assert!(ok > 150, "{ok}");
        assert!(Codebook::random(17, 4, &[1.0], &mut rng).is_err());
    }

    proptest! {
        #[test]
        fn encoding_is_linear(seed in any::<u64>(), t in 4usize..80, kk in 1usize..12) {
            let mut rng = RngStream::new(seed);
            let k = kk.min(t);
            let code = LinearCode::random(t, k, &mut rng).unwrap();
            for _ in 0..100 {
                let u1 = random_bits(k, &mut rng);
                let u2 = random_bits(k, &mut rng);
                let s: Vec<u8> = u1.iter().zip(&u2).map(|(a, b)| a ^ b).collect();
                let lhs: Vec<u8> = code.encode(&u1).unwrap().iter().zip(code.encode(&u2).unwrap()).map(|(a, b)| a ^ b).collect();
                prop_assert_eq!(lhs, code.encode(&s).unwrap());
            }
        }
    }
}
