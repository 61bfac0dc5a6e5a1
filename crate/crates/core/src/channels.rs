//! Memoryless channels: finite conditional-probability matrices and additive
//! Gaussian channels with finite input constellations.

use rand::Rng;
use rand_distr::{Distribution as _, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const STOCHASTIC_TOL: f64 = 1e-12;

/// A row-stochastic matrix `Q(z|t)` over finite alphabets, stored row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteChannel {
    inputs: usize,
    outputs: usize,
    matrix: Vec<f64>,
}

impl DiscreteChannel {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let inputs = rows.len();
        if inputs == 0 {
            return Err(Error::DimensionMismatch("channel has no input rows".into()));
        }
        let outputs = rows[0].len();
        if outputs == 0 {
            return Err(Error::DimensionMismatch("channel has no outputs".into()));
        }
        let mut matrix = Vec::with_capacity(inputs * outputs);
        for (t, row) in rows.into_iter().enumerate() {
            if row.len() != outputs {
                return Err(Error::DimensionMismatch(format!(
                    "row {t} has {} entries, expected {outputs}",
                    row.len()
                )));
            }
            matrix.extend(row);
        }
        Self::from_flat(inputs, outputs, matrix)
    }

    pub fn from_flat(inputs: usize, outputs: usize, matrix: Vec<f64>) -> Result<Self> {
        if inputs == 0 || outputs == 0 || matrix.len() != inputs * outputs {
            return Err(Error::DimensionMismatch(format!(
                "{} entries for a {inputs}x{outputs} matrix",
                matrix.len()
            )));
        }
        for &v in &matrix {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidProbability {
                    value: v,
                    context: "channel entry".into(),
                });
            }
        }
        for (row, chunk) in matrix.chunks(outputs).enumerate() {
            let sum: f64 = chunk.iter().sum();
            if (sum - 1.0).abs() > STOCHASTIC_TOL {
                return Err(Error::NotStochastic { row, sum });
            }
        }
        Ok(Self {
            inputs,
            outputs,
            matrix,
        })
    }

    /// Binary symmetric channel with crossover probability `p`.
    pub fn bsc(p: f64) -> Result<Self> {
        check_probability(p, "bsc crossover")?;
        Self::new(vec![vec![1.0 - p, p], vec![p, 1.0 - p]])
    }

    /// Binary erasure channel; outputs are `0`, `1`, erasure.
    pub fn bec(e: f64) -> Result<Self> {
        check_probability(e, "bec erasure")?;
        Self::new(vec![vec![1.0 - e, 0.0, e], vec![0.0, 1.0 - e, e]])
    }

    pub fn identity(size: usize) -> Result<Self> {
        Self::new(
            (0..size)
                .map(|t| (0..size).map(|z| if t == z { 1.0 } else { 0.0 }).collect())
                .collect(),
        )
    }

    pub fn input_size(&self) -> usize {
        self.inputs
    }

    pub fn output_size(&self) -> usize {
        self.outputs
    }

    pub fn row(&self, t: usize) -> &[f64] {
        &self.matrix[t * self.outputs..(t + 1) * self.outputs]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.matrix.chunks(self.outputs)
    }

    pub fn prob(&self, t: usize, z: usize) -> f64 {
        self.matrix[t * self.outputs + z]
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.rows().map(<[f64]>::to_vec).collect()
    }

    /// Product channel on pairs; pair `(a, b)` maps to index `a * |B| + b`.
    pub fn product(&self, other: &DiscreteChannel) -> DiscreteChannel {
        let inputs = self.inputs * other.inputs;
        let outputs = self.outputs * other.outputs;
        let mut matrix = Vec::with_capacity(inputs * outputs);
        for a in 0..self.inputs {
            for b in 0..other.inputs {
                for za in self.row(a) {
                    for zb in other.row(b) {
                        matrix.push(za * zb);
                    }
                }
            }
        }
        DiscreteChannel {
            inputs,
            outputs,
            matrix,
        }
    }

    /// `n`-fold memoryless extension; words index inputs and outputs with the
    /// first symbol most significant.
    pub fn power(&self, n: usize) -> DiscreteChannel {
        let mut acc = DiscreteChannel {
            inputs: 1,
            outputs: 1,
            matrix: vec![1.0],
        };
        for _ in 0..n {
            acc = acc.product(self);
        }
        acc
    }

    /// Relabels outputs: new output `perm[z]` receives old output `z`.
    pub fn permute_outputs(&self, perm: &[usize]) -> Result<DiscreteChannel> {
        let mut seen = vec![false; self.outputs];
        if perm.len() != self.outputs {
            return Err(Error::DimensionMismatch("permutation length".into()));
        }
        for &p in perm {
            if p >= self.outputs || std::mem::replace(&mut seen[p], true) {
                return Err(Error::InvalidArgument("not a permutation".into()));
            }
        }
        let mut matrix = vec![0.0; self.matrix.len()];
        for t in 0..self.inputs {
            for z in 0..self.outputs {
                matrix[t * self.outputs + perm[z]] = self.prob(t, z);
            }
        }
        Ok(DiscreteChannel {
            inputs: self.inputs,
            outputs: self.outputs,
            matrix,
        })
    }

    /// Coarsens the output alphabet: old output `z` is reported as `groups[z]`.
    pub fn merge_outputs(&self, groups: &[usize]) -> Result<DiscreteChannel> {
        if groups.len() != self.outputs {
            return Err(Error::DimensionMismatch("group map length".into()));
        }
        let outputs = groups.iter().max().map_or(0, |m| m + 1);
        let mut matrix = vec![0.0; self.inputs * outputs];
        for t in 0..self.inputs {
            for (z, &g) in groups.iter().enumerate() {
                matrix[t * outputs + g] += self.prob(t, z);
            }
        }
        DiscreteChannel::from_flat(self.inputs, outputs, matrix)
    }

    /// Draws one output per input symbol.
    pub fn sample<R: Rng + ?Sized>(&self, input: &[usize], rng: &mut R) -> Result<Vec<usize>> {
        input
            .iter()
            .map(|&t| {
                if t >= self.inputs {
                    return Err(Error::SymbolOutOfRange {
                        symbol: t,
                        size: self.inputs,
                    });
                }
                Ok(self.sample_symbol(t, rng))
            })
            .collect()
    }

    pub(crate) fn sample_symbol<R: Rng + ?Sized>(&self, t: usize, rng: &mut R) -> usize {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let row = self.row(t);
        for (z, &p) in row.iter().enumerate() {
            acc += p;
            if u < acc {
                return z;
            }
        }
        // rounding left u above the final partial sum: last positive entry
        row.iter().rposition(|&p| p > 0.0).unwrap_or(row.len() - 1)
    }
}

fn check_probability(p: f64, context: &str) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidProbability {
            value: p,
            context: context.into(),
        });
    }
    Ok(())
}

/// Artificial channel `Q(x|t)` applied by the encoder before transmission.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrefixChannel(DiscreteChannel);

impl PrefixChannel {
    pub fn new(matrix: DiscreteChannel) -> Self {
        PrefixChannel(matrix)
    }

    pub fn identity(size: usize) -> Result<Self> {
        Ok(PrefixChannel(DiscreteChannel::identity(size)?))
    }

    pub fn matrix(&self) -> &DiscreteChannel {
        &self.0
    }

    pub fn is_identity(&self) -> bool {
        let m = &self.0;
        m.input_size() == m.output_size()
            && (0..m.input_size())
                .all(|t| (0..m.output_size()).all(|x| m.prob(t, x) == if t == x { 1.0 } else { 0.0 }))
    }
}

/// Composes a prefix with a channel: `Q(z|t) = sum_x Q(x|t) Q(z|x)`.
pub fn concatenate_prefix(prefix: &PrefixChannel, ch: &DiscreteChannel) -> Result<DiscreteChannel> {
    let p = prefix.matrix();
    if p.output_size() != ch.input_size() {
        return Err(Error::DimensionMismatch(format!(
            "prefix emits {} symbols, channel accepts {}",
            p.output_size(),
            ch.input_size()
        )));
    }
    let mut matrix = vec![0.0; p.input_size() * ch.output_size()];
    for t in 0..p.input_size() {
        for x in 0..p.output_size() {
            let w = p.prob(t, x);
            if w == 0.0 {
                continue;
            }
            for z in 0..ch.output_size() {
                matrix[t * ch.output_size() + z] += w * ch.prob(x, z);
            }
        }
    }
    DiscreteChannel::from_flat(p.input_size(), ch.output_size(), matrix)
}

/// Additive Gaussian noise on a finite real constellation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianChannel {
    constellation: Vec<f64>,
    sigma: f64,
}

impl GaussianChannel {
    pub fn new(constellation: Vec<f64>, sigma: f64) -> Result<Self> {
        if constellation.is_empty() {
            return Err(Error::InvalidArgument("empty constellation".into()));
        }
        if constellation.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidArgument("non-finite constellation point".into()));
        }
        for (i, a) in constellation.iter().enumerate() {
            if constellation[i + 1..].contains(a) {
                return Err(Error::InvalidArgument(format!("duplicate constellation point {a}")));
            }
        }
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::InvalidArgument(format!("sigma must be positive, got {sigma}")));
        }
        Ok(Self {
            constellation,
            sigma,
        })
    }

    /// Antipodal signalling `{-1, +1}`.
    pub fn bpsk(sigma: f64) -> Result<Self> {
        Self::new(vec![-1.0, 1.0], sigma)
    }

    pub fn constellation(&self) -> &[f64] {
        &self.constellation
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn input_size(&self) -> usize {
        self.constellation.len()
    }

    pub fn ln_density(&self, z: f64, x: usize) -> f64 {
        let d = (z - self.constellation[x]) / self.sigma;
        -0.5 * d * d - self.sigma.ln() - 0.5 * (2.0 * std::f64::consts::PI).ln()
    }

    pub fn sample<R: Rng + ?Sized>(&self, input: &[usize], rng: &mut R) -> Result<Vec<f64>> {
        let noise = Normal::new(0.0, self.sigma).expect("sigma validated at construction");
        input
            .iter()
            .map(|&x| {
                if x >= self.constellation.len() {
                    return Err(Error::SymbolOutOfRange {
                        symbol: x,
                        size: self.constellation.len(),
                    });
                }
                Ok(self.constellation[x] + noise.sample(rng))
            })
            .collect()
    }

    /// Quantizes the output onto `bins` equal cells of `[grid_min, grid_max]`;
    /// mass below/above the grid is folded into the first/last cell.
    pub fn discretize(&self, grid_min: f64, grid_max: f64, bins: usize) -> Result<DiscreteChannel> {
        if !(grid_min < grid_max) || !grid_min.is_finite() || !grid_max.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "grid [{grid_min}, {grid_max}] is empty"
            )));
        }
        if bins < 2 {
            return Err(Error::InvalidArgument("discretize needs at least 2 bins".into()));
        }
        let width = (grid_max - grid_min) / bins as f64;
        let mut matrix = Vec::with_capacity(self.input_size() * bins);
        for &x in &self.constellation {
            let edge = |j: usize| (grid_min + j as f64 * width - x) / self.sigma;
            let mut row: Vec<f64> = (0..bins)
                .map(|j| {
                    let lo = if j == 0 { f64::NEG_INFINITY } else { edge(j) };
                    let hi = if j == bins - 1 { f64::INFINITY } else { edge(j + 1) };
                    normal_mass(lo, hi)
                })
                .collect();
            let total: f64 = row.iter().sum();
            row.iter_mut().for_each(|p| *p /= total);
            matrix.extend(row);
        }
        DiscreteChannel::from_flat(self.input_size(), bins, matrix)
    }
}

fn upper_tail(x: f64) -> f64 {
    0.5 * libm::erfc(x / std::f64::consts::SQRT_2)
}

/// Standard normal mass of `[lo, hi)`, evaluated on the side of the
/// distribution that avoids cancellation.
fn normal_mass(lo: f64, hi: f64) -> f64 {
    if lo >= 0.0 {
        upper_tail(lo) - upper_tail(hi)
    } else if hi <= 0.0 {
        upper_tail(-hi) - upper_tail(-lo)
    } else {
        1.0 - upper_tail(-lo) - upper_tail(hi)
    }
}

/// A Gaussian channel seen through a prefix: input `t` emits constellation
/// point `x` with probability `weights(x|t)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianMixtureChannel {
    pub weights: DiscreteChannel,
    pub base: GaussianChannel,
}

impl GaussianMixtureChannel {
    pub fn discretize(&self, grid_min: f64, grid_max: f64, bins: usize) -> Result<DiscreteChannel> {
        concatenate_prefix(
            &PrefixChannel::new(self.weights.clone()),
            &self.base.discretize(grid_min, grid_max, bins)?,
        )
    }
}

/// Any channel the library can evaluate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Channel {
    Discrete(DiscreteChannel),
    Gaussian(GaussianChannel),
    GaussianMixture(GaussianMixtureChannel),
}

/// Output of a channel use.
#[derive(Debug, Clone, PartialEq)]
pub enum ChannelOutput {
    Symbols(Vec<usize>),
    Reals(Vec<f64>),
}

impl Channel {
    pub fn input_size(&self) -> usize {
        match self {
            Channel::Discrete(c) => c.input_size(),
            Channel::Gaussian(c) => c.input_size(),
            Channel::GaussianMixture(c) => c.weights.input_size(),
        }
    }

    pub fn as_discrete(&self) -> Option<&DiscreteChannel> {
        match self {
            Channel::Discrete(c) => Some(c),
            _ => None,
        }
    }

    /// The composed channel `T -> X -> Z`.
    pub fn with_prefix(&self, prefix: &PrefixChannel) -> Result<Channel> {
        if prefix.matrix().output_size() != self.input_size() {
            return Err(Error::DimensionMismatch(format!(
                "prefix emits {} symbols, channel accepts {}",
                prefix.matrix().output_size(),
                self.input_size()
            )));
        }
        if prefix.is_identity() {
            return Ok(self.clone());
        }
        Ok(match self {
            Channel::Discrete(c) => Channel::Discrete(concatenate_prefix(prefix, c)?),
            Channel::Gaussian(c) => Channel::GaussianMixture(GaussianMixtureChannel {
                weights: prefix.matrix().clone(),
                base: c.clone(),
            }),
            Channel::GaussianMixture(c) => Channel::GaussianMixture(GaussianMixtureChannel {
                weights: concatenate_prefix(prefix, &c.weights)?,
                base: c.base.clone(),
            }),
        })
    }

    pub fn sample<R: Rng + ?Sized>(&self, input: &[usize], rng: &mut R) -> Result<ChannelOutput> {
        match self {
            Channel::Discrete(c) => c.sample(input, rng).map(ChannelOutput::Symbols),
            Channel::Gaussian(c) => c.sample(input, rng).map(ChannelOutput::Reals),
            Channel::GaussianMixture(c) => {
                let points = c.weights.sample(input, rng)?;
                c.base.sample(&points, rng).map(ChannelOutput::Reals)
            }
        }
    }
}

impl From<DiscreteChannel> for Channel {
    fn from(c: DiscreteChannel) -> Self {
        Channel::Discrete(c)
    }
}

impl From<GaussianChannel> for Channel {
    fn from(c: GaussianChannel) -> Self {
        Channel::Gaussian(c)
    }
}
