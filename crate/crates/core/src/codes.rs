//! Binary linear block codes, their coset encoders and small decoders.

use rand::Rng;

use crate::bits::{self, mask, mat_vec, row_combination, weight};
use crate::error::{Error, Result};

/// Block lengths up to this size get a full decoding table.
pub const TABLE_MAX_N: usize = 15;
/// Hard-decision brute force runs up to this block length.
pub const BRUTE_FORCE_MAX_N: usize = 20;
/// Soft-decision decoders enumerate at most `2^k` codewords with this `k`.
pub const BRUTE_FORCE_MAX_K: usize = 20;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinearCode {
    n: usize,
    k: usize,
    generator: Vec<u64>,
    parity_check: Vec<u64>,
    /// Pivot column of each reduced generator row.
    pivots: Vec<usize>,
    /// `reduced = transform · generator`; a codeword's pivot bits times
    /// `transform` give its message.
    transform: Vec<u64>,
}

impl LinearCode {
    pub fn new(n: usize, generator: Vec<u64>) -> Result<Self> {
        let k = generator.len();
        if n == 0 || n > bits::MAX_WORD_LEN || k > n {
            return Err(Error::DimensionMismatch(format!("code needs 1 <= n <= 64 and k <= n, got n = {n}, k = {k}")));
        }
        if generator.iter().any(|&r| r & !mask(n) != 0) {
            return Err(Error::DimensionMismatch(format!("generator row wider than {n} bits")));
        }
        if bits::rank(&generator) != k {
            return Err(Error::InvalidArgument("generator rows are linearly dependent".into()));
        }
        // Gauss-Jordan elimination, tracking the row operations
        let mut reduced = generator.clone();
        let mut transform: Vec<u64> = (0..k).map(|i| 1u64 << (k - 1 - i)).collect();
        let mut pivots = Vec::with_capacity(k);
        let mut row = 0;
        for col in 0..n {
            if row == k {
                break;
            }
            let Some(p) = (row..k).find(|&r| bits::bit(reduced[r], n, col) == 1) else {
                continue;
            };
            reduced.swap(row, p);
            transform.swap(row, p);
            for r in 0..k {
                if r != row && bits::bit(reduced[r], n, col) == 1 {
                    reduced[r] ^= reduced[row];
                    transform[r] ^= transform[row];
                }
            }
            pivots.push(col);
            row += 1;
        }
        let parity_check = (0..n)
            .filter(|c| !pivots.contains(c))
            .map(|c| {
                let mut h = 1u64 << (n - 1 - c);
                for (i, &p) in pivots.iter().enumerate() {
                    if bits::bit(reduced[i], n, c) == 1 {
                        h |= 1u64 << (n - 1 - p);
                    }
                }
                h
            })
            .collect();
        Ok(Self {
            n,
            k,
            generator,
            parity_check,
            pivots,
            transform,
        })
    }

    pub fn from_bit_rows(rows: &[Vec<bool>]) -> Result<Self> {
        let n = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::DimensionMismatch("generator rows differ in length".into()));
        }
        Self::new(n, rows.iter().map(|r| bits::bits_to_word(r)).collect::<Result<_>>()?)
    }

    /// The [7,4] Hamming code in systematic form.
    pub fn hamming74() -> Self {
        Self::new(7, vec![0b1000110, 0b0100101, 0b0010011, 0b0001111]).expect("valid generator")
    }

    /// Uniformly random full-rank generator, by rejection.
    pub fn random<R: Rng + ?Sized>(n: usize, k: usize, rng: &mut R) -> Result<Self> {
        if n == 0 || n > bits::MAX_WORD_LEN || k > n {
            return Err(Error::DimensionMismatch(format!("code needs 1 <= n <= 64 and k <= n, got n = {n}, k = {k}")));
        }
        loop {
            let rows: Vec<u64> = (0..k).map(|_| rng.random::<u64>() & mask(n)).collect();
            if bits::rank(&rows) == k {
                return Self::new(n, rows);
            }
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn generator(&self) -> &[u64] {
        &self.generator
    }

    pub fn parity_check(&self) -> &[u64] {
        &self.parity_check
    }

    pub fn redundancy(&self) -> usize {
        self.n - self.k
    }

    pub fn encode(&self, l: u64) -> u64 {
        row_combination(l, &self.generator)
    }

    pub fn syndrome(&self, y: u64) -> u64 {
        mat_vec(&self.parity_check, y)
    }

    /// Message of a codeword; garbage for non-codewords.
    pub fn message_of(&self, c: u64) -> u64 {
        let u = self.pivots.iter().fold(0u64, |acc, &p| (acc << 1) | bits::bit(c, self.n, p));
        row_combination(u, &self.transform)
    }

    pub fn generator_hex(&self) -> Vec<String> {
        self.generator.iter().map(|&r| bits::word_to_hex(r, self.n)).collect()
    }
}

/// Encoders `l ↦ l·G ⊕ leader(g)`, one per syndrome `g`.
#[derive(Debug, Clone)]
pub struct CosetEncoderFamily {
    code: LinearCode,
    leaders: Vec<u64>,
    /// Decoded message for every received word, when `n <= TABLE_MAX_N`.
    table: Option<Vec<u32>>,
}

impl CosetEncoderFamily {
    pub fn new(code: LinearCode) -> Result<Self> {
        let r = code.redundancy();
        if r > 30 {
            return Err(Error::TooLarge(format!("2^{r} cosets")));
        }
        let (leaders, table) = if code.n <= TABLE_MAX_N {
            let (leaders, table) = Self::standard_array(&code);
            (leaders, Some(table))
        } else {
            // the parity-check rows carry an identity on the non-pivot columns
            let free: Vec<usize> = (0..code.n).filter(|c| !code.pivots.contains(c)).collect();
            let leaders = (0..1u64 << r)
                .map(|g| {
                    free.iter()
                        .enumerate()
                        .filter(|&(j, _)| bits::bit(g, r, j) == 1)
                        .fold(0u64, |acc, (_, &c)| acc | 1u64 << (code.n - 1 - c))
                })
                .collect();
            (leaders, None)
        };
        Ok(Self { code, leaders, table })
    }

    fn standard_array(code: &LinearCode) -> (Vec<u64>, Vec<u32>) {
        let n = code.n;
        let mut words: Vec<u64> = (0..1u64 << n).collect();
        words.sort_by_key(|&w| (weight(w), w));
        let cosets = 1usize << code.redundancy();
        let mut leaders = vec![u64::MAX; cosets];
        let mut min_weight = vec![u32::MAX; cosets];
        let mut ties: Vec<Vec<u64>> = vec![Vec::new(); cosets];
        for &w in &words {
            let s = code.syndrome(w) as usize;
            if leaders[s] == u64::MAX {
                leaders[s] = w;
                min_weight[s] = weight(w);
            }
            if weight(w) == min_weight[s] {
                ties[s].push(w);
            }
        }
        let table = (0..1u64 << n)
            .map(|y| {
                ties[code.syndrome(y) as usize]
                    .iter()
                    .map(|&e| code.message_of(y ^ e))
                    .min()
                    .expect("every coset has a leader") as u32
            })
            .collect();
        (leaders, table)
    }

    pub fn code(&self) -> &LinearCode {
        &self.code
    }

    pub fn n(&self) -> usize {
        self.code.n
    }

    pub fn k(&self) -> usize {
        self.code.k
    }

    pub fn coset_count(&self) -> u64 {
        1 << self.code.redundancy()
    }

    pub fn leader(&self, g: u64) -> u64 {
        self.leaders[g as usize]
    }

    fn check(&self, g: u64, l: u64) -> Result<()> {
        if g >= self.coset_count() || l > mask(self.code.k) {
            return Err(Error::DimensionMismatch(format!(
                "syndrome {g} or message {l} out of range for a [{}, {}] code",
                self.code.n, self.code.k
            )));
        }
        Ok(())
    }

    pub fn encode(&self, g: u64, l: u64) -> Result<u64> {
        self.check(g, l)?;
        Ok(self.code.encode(l) ^ self.leaders[g as usize])
    }

    /// Nearest codeword in Hamming distance; ties go to the smallest message.
    pub fn decode_hard(&self, g: u64, y: u64) -> Result<u64> {
        self.check(g, 0)?;
        if y > mask(self.code.n) {
            return Err(Error::DimensionMismatch(format!("received word wider than {} bits", self.code.n)));
        }
        let shifted = y ^ self.leaders[g as usize];
        if let Some(table) = &self.table {
            return Ok(table[shifted as usize] as u64);
        }
        if self.code.n > BRUTE_FORCE_MAX_N {
            return Err(Error::TooLarge(format!("hard decoding of n = {}", self.code.n)));
        }
        Ok(self.best_message(|c| -(weight(c ^ shifted) as f64)))
    }

    /// Maximizes `Σ_i score[i][t_i]` over the coset codewords `t`; ties go to
    /// the smallest message.
    pub fn decode_scores(&self, g: u64, scores: &[[f64; 2]]) -> Result<u64> {
        self.check(g, 0)?;
        if scores.len() != self.code.n {
            return Err(Error::DimensionMismatch(format!(
                "{} scores for block length {}",
                scores.len(),
                self.code.n
            )));
        }
        if self.code.k > BRUTE_FORCE_MAX_K {
            return Err(Error::TooLarge(format!("soft decoding of k = {}", self.code.k)));
        }
        let n = self.code.n;
        let leader = self.leaders[g as usize];
        Ok(self.best_message(
            |c| {
                let t = c ^ leader;
                (0..n).map(|i| scores[i][bits::bit(t, n, i) as usize]).sum()
            },
        ))
    }

    /// Minimum Euclidean distance between `y` and the modulated coset
    /// codewords, symbol `t` sent as `points[t]`.
    pub fn decode_euclidean(&self, g: u64, y: &[f64], points: [f64; 2]) -> Result<u64> {
        let scores: Vec<[f64; 2]> = y
            .iter()
            .map(|&v| [-(v - points[0]).powi(2), -(v - points[1]).powi(2)])
            .collect();
        self.decode_scores(g, &scores)
    }

    fn best_message(&self, score: impl Fn(u64) -> f64) -> u64 {
        let mut best = (0, f64::NEG_INFINITY);
        for l in 0..1u64 << self.code.k {
            let v = score(self.code.encode(l));
            if v > best.1 {
                best = (l, v);
            }
        }
        best.0
    }
}
