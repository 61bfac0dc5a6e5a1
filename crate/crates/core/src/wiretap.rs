//! The randomized and deterministic wiretap constructions: hash, coset
//! encoder and prefix channel in sequence, with simulation and leakage bounds.

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::bits::{self, mask};
use crate::channels::{Channel, ChannelOutput, DiscreteChannel, GaussianMixtureChannel, PrefixChannel};
use crate::codes::CosetEncoderFamily;
use crate::error::{Error, Result};
use crate::hashing::ToeplitzHash;
use crate::optimize::{construction_bound, Construction, SearchMethod};
use crate::rng;

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

#[derive(Debug, Clone)]
pub struct WiretapCode {
    construction: Construction,
    family: CosetEncoderFamily,
    hash: ToeplitzHash,
    prefix: PrefixChannel,
    g: u64,
}

impl WiretapCode {
    pub fn new(
        construction: Construction,
        family: CosetEncoderFamily,
        hash: ToeplitzHash,
        prefix: PrefixChannel,
        g: u64,
    ) -> Result<Self> {
        if hash.l_dim() != family.k() {
            return Err(Error::DimensionMismatch(format!(
                "hash takes {} bits but the code carries {}",
                hash.l_dim(),
                family.k()
            )));
        }
        if prefix.matrix().input_size() != 2 {
            return Err(Error::DimensionMismatch(format!(
                "prefix must accept binary code symbols, accepts {}",
                prefix.matrix().input_size()
            )));
        }
        if g >= family.coset_count() {
            return Err(Error::DimensionMismatch(format!("syndrome {g} out of range")));
        }
        if construction == Construction::Deterministic && g != 0 {
            return Err(Error::InvalidArgument("the deterministic construction uses g = 0".into()));
        }
        Ok(Self {
            construction,
            family,
            hash,
            prefix,
            g,
        })
    }

    pub fn deterministic(family: CosetEncoderFamily, hash: ToeplitzHash, prefix: PrefixChannel) -> Result<Self> {
        Self::new(Construction::Deterministic, family, hash, prefix, 0)
    }

    /// Draws the coset index uniformly from `rng`.
    pub fn randomized<R: Rng + ?Sized>(
        family: CosetEncoderFamily,
        hash: ToeplitzHash,
        prefix: PrefixChannel,
        rng: &mut R,
    ) -> Result<Self> {
        let g = rng.random::<u64>() & (family.coset_count() - 1);
        Self::new(Construction::Randomized, family, hash, prefix, g)
    }

    pub fn construction(&self) -> Construction {
        self.construction
    }

    pub fn family(&self) -> &CosetEncoderFamily {
        &self.family
    }

    pub fn hash(&self) -> &ToeplitzHash {
        &self.hash
    }

    pub fn prefix(&self) -> &PrefixChannel {
        &self.prefix
    }

    pub fn g(&self) -> u64 {
        self.g
    }

    pub fn n(&self) -> usize {
        self.family.n()
    }

    /// Secret message bits.
    pub fn message_bits(&self) -> usize {
        self.hash.k_dim()
    }

    /// Channel-code message bits.
    pub fn code_bits(&self) -> usize {
        self.hash.l_dim()
    }

    /// Channel-code message and codeword for secret `m`.
    pub fn encode_codeword<R: Rng + ?Sized>(&self, m: u64, rng: &mut R) -> Result<(u64, u64)> {
        if m > mask(self.hash.k_dim()) {
            return Err(Error::DimensionMismatch(format!(
                "message {m} wider than {} bits",
                self.hash.k_dim()
            )));
        }
        let l = self.hash.sample_preimage(m, rng);
        Ok((l, self.family.encode(self.g, l)?))
    }

    /// Transmitted symbols after the prefix channel.
    pub fn encode<R: Rng + ?Sized>(&self, m: u64, rng: &mut R) -> Result<Vec<usize>> {
        let (_, t) = self.encode_codeword(m, rng)?;
        self.apply_prefix(t, rng)
    }

    fn apply_prefix<R: Rng + ?Sized>(&self, t: u64, rng: &mut R) -> Result<Vec<usize>> {
        let symbols = bits::word_to_symbols(t, self.n());
        if self.prefix.is_identity() {
            Ok(symbols)
        } else {
            self.prefix.matrix().sample(&symbols, rng)
        }
    }

    /// Decoder for Bob's channel `bob`, which takes the prefix output.
    pub fn decoder(&self, bob: &Channel) -> Result<Decoder> {
        Decoder::for_channel(&bob.with_prefix(&self.prefix)?)
    }

    /// Channel-code message estimate.
    pub fn decode_codeword(&self, decoder: &Decoder, y: &ChannelOutput) -> Result<u64> {
        decoder.decode(&self.family, self.g, y)
    }

    pub fn decode(&self, decoder: &Decoder, y: &ChannelOutput) -> Result<u64> {
        Ok(self.hash.apply(self.decode_codeword(decoder, y)?))
    }
}

/// How Bob turns a received block into a channel-code message.
#[derive(Debug, Clone)]
pub enum Decoder {
    /// Nearest codeword in Hamming distance (binary symmetric channels).
    Hard,
    /// Maximum likelihood over a discrete channel, `ln W(y|t)` per output.
    Discrete(Vec<[f64; 2]>),
    /// Minimum Euclidean distance to the two constellation points.
    Euclidean([f64; 2]),
    /// Maximum likelihood over a Gaussian channel behind a prefix.
    Mixture(GaussianMixtureChannel),
}

fn is_bsc(ch: &DiscreteChannel) -> bool {
    ch.input_size() == 2
        && ch.output_size() == 2
        && ch.prob(0, 1) == ch.prob(1, 0)
        && ch.prob(0, 1) <= 0.5
}

impl Decoder {
    pub fn for_channel(ch: &Channel) -> Result<Self> {
        if ch.input_size() != 2 {
            return Err(Error::DimensionMismatch(format!(
                "decoding needs a binary-input channel, got {} inputs",
                ch.input_size()
            )));
        }
        Ok(match ch {
            Channel::Discrete(d) if is_bsc(d) => Decoder::Hard,
            Channel::Discrete(d) => Decoder::Discrete(
                (0..d.output_size())
                    .map(|y| [d.prob(0, y).ln(), d.prob(1, y).ln()])
                    .collect(),
            ),
            Channel::Gaussian(g) => Decoder::Euclidean([g.constellation()[0], g.constellation()[1]]),
            Channel::GaussianMixture(m) => Decoder::Mixture(m.clone()),
        })
    }

    pub fn decode(&self, family: &CosetEncoderFamily, g: u64, y: &ChannelOutput) -> Result<u64> {
        let n = family.n();
        let len = match y {
            ChannelOutput::Symbols(s) => s.len(),
            ChannelOutput::Reals(r) => r.len(),
        };
        if len != n {
            return Err(Error::DimensionMismatch(format!("received {len} symbols, block length is {n}")));
        }
        match (self, y) {
            (Decoder::Hard, ChannelOutput::Symbols(s)) => {
                let word = s.iter().try_fold(0u64, |acc, &b| {
                    if b > 1 {
                        Err(Error::SymbolOutOfRange { symbol: b, size: 2 })
                    } else {
                        Ok((acc << 1) | b as u64)
                    }
                })?;
                family.decode_hard(g, word)
            }
            (Decoder::Discrete(table), ChannelOutput::Symbols(s)) => {
                let scores = s
                    .iter()
                    .map(|&z| {
                        table
                            .get(z)
                            .copied()
                            .ok_or(Error::SymbolOutOfRange { symbol: z, size: table.len() })
                    })
                    .collect::<Result<Vec<_>>>()?;
                family.decode_scores(g, &scores)
            }
            (Decoder::Euclidean(points), ChannelOutput::Reals(r)) => family.decode_euclidean(g, r, *points),
            (Decoder::Mixture(m), ChannelOutput::Reals(r)) => {
                let scores: Vec<[f64; 2]> = r
                    .iter()
                    .map(|&z| {
                        let score = |t: usize| {
                            let terms = (0..m.weights.output_size())
                                .filter(|&x| m.weights.prob(t, x) > 0.0)
                                .map(|x| m.weights.prob(t, x).ln() + m.base.ln_density(z, x));
                            crate::infofunc::log_sum_exp(terms)
                        };
                        [score(0), score(1)]
                    })
                    .collect();
                family.decode_scores(g, &scores)
            }
            _ => Err(Error::InvalidArgument("channel output does not match the decoder".into())),
        }
    }
}

/// Seeds behind one simulation, all derived from the master seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SimulationSeeds {
    pub master: u64,
    pub noise: u64,
}

impl SimulationSeeds {
    pub fn from_master(master: u64) -> Self {
        Self {
            master,
            noise: rng::derive_seed(master, "noise"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SimulationConfig {
    pub trials: u64,
    pub seed: u64,
    /// Worker threads; 0 uses the global pool.
    pub workers: usize,
    pub trace: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct TrialRecord {
    pub trial: u64,
    pub m: u64,
    pub l: u64,
    pub l_hat: u64,
    pub m_hat: u64,
    pub channel_error: bool,
    pub wiretap_error: bool,
}

/// Wilson score interval at 95%.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

pub fn wilson95(errors: u64, trials: u64) -> Interval {
    let n = trials as f64;
    let p = errors as f64 / n;
    let z2 = Z95 * Z95;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = Z95 * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    Interval {
        lo: if errors == 0 { 0.0 } else { (center - half).max(0.0) },
        hi: if errors == trials { 1.0 } else { (center + half).min(1.0) },
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationReport {
    pub trials: u64,
    pub wiretap_errors: u64,
    pub channel_code_errors: u64,
    pub wiretap_ci95: Interval,
    pub channel_ci95: Interval,
    pub seeds: SimulationSeeds,
    #[serde(skip)]
    pub trace: Option<Vec<TrialRecord>>,
}

fn run_trial(wt: &WiretapCode, bob: &Channel, decoder: &Decoder, noise: u64, trial: u64) -> Result<TrialRecord> {
    let mut stream = rng::substream(noise, trial);
    let m = stream.random::<u64>() & mask(wt.message_bits());
    let (l, t) = wt.encode_codeword(m, &mut stream)?;
    let x = wt.apply_prefix(t, &mut stream)?;
    let y = bob.sample(&x, &mut stream)?;
    let l_hat = wt.decode_codeword(decoder, &y)?;
    let m_hat = wt.hash.apply(l_hat);
    Ok(TrialRecord {
        trial,
        m,
        l,
        l_hat,
        m_hat,
        channel_error: l_hat != l,
        wiretap_error: m_hat != m,
    })
}

/// Coupled trials: one noise realization per trial feeds both the bare
/// channel-code decision and the hashed one.
pub fn simulate(wt: &WiretapCode, bob: &Channel, config: &SimulationConfig) -> Result<SimulationReport> {
    if config.trials == 0 {
        return Err(Error::InvalidArgument("at least one trial is needed".into()));
    }
    let decoder = wt.decoder(bob)?;
    let seeds = SimulationSeeds::from_master(config.seed);
    let work = || -> Result<(u64, u64, Option<Vec<TrialRecord>>)> {
        if config.trace {
            let records = (0..config.trials)
                .into_par_iter()
                .map(|i| run_trial(wt, bob, &decoder, seeds.noise, i))
                .collect::<Result<Vec<_>>>()?;
            let c = records.iter().filter(|r| r.channel_error).count() as u64;
            let w = records.iter().filter(|r| r.wiretap_error).count() as u64;
            Ok((c, w, Some(records)))
        } else {
            let (c, w) = (0..config.trials)
                .into_par_iter()
                .map(|i| run_trial(wt, bob, &decoder, seeds.noise, i).map(|r| (r.channel_error as u64, r.wiretap_error as u64)))
                .try_reduce(|| (0, 0), |a, b| Ok((a.0 + b.0, a.1 + b.1)))?;
            Ok((c, w, None))
        }
    };
    let (channel, wiretap, trace) = if config.workers == 0 {
        work()?
    } else {
        rayon::ThreadPoolBuilder::new()
            .num_threads(config.workers)
            .build()
            .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?
            .install(work)?
    };
    Ok(SimulationReport {
        trials: config.trials,
        wiretap_errors: wiretap,
        channel_code_errors: channel,
        wiretap_ci95: wilson95(wiretap, config.trials),
        channel_ci95: wilson95(channel, config.trials),
        seeds,
        trace,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LeakageReport {
    pub construction: Construction,
    /// Block length the bound is evaluated at.
    pub n: usize,
    /// Block length of the code itself.
    pub code_n: usize,
    pub ln_l: f64,
    pub ln_m: f64,
    pub s_star: f64,
    pub exponent: f64,
    pub log_bound: f64,
    pub bound: f64,
    pub method: SearchMethod,
    pub epsilon: Option<f64>,
    pub within_epsilon: Option<bool>,
    /// `ε₁`: the bound divided by it holds for all but a fraction `ε₁` of
    /// hash and coset choices.
    pub confidence: Option<f64>,
    pub log_selection_bound: Option<f64>,
}

/// Bound on the leakage to `eve` at block length `n_scale`, with the code's
/// rates `k_L/n` and `k_M/n` per symbol.
pub fn leakage_report(
    wt: &WiretapCode,
    eve: &Channel,
    n_scale: usize,
    epsilon: Option<f64>,
    confidence: Option<f64>,
) -> Result<LeakageReport> {
    if n_scale == 0 {
        return Err(Error::InvalidArgument("block length must be positive".into()));
    }
    if let Some(e1) = confidence {
        if !(e1 > 0.0 && e1 <= 1.0) {
            return Err(Error::InvalidArgument(format!("confidence must lie in (0, 1], got {e1}")));
        }
    }
    let through = eve.with_prefix(&wt.prefix)?;
    let scale = n_scale as f64 / wt.n() as f64;
    let ln_l = wt.code_bits() as f64 * std::f64::consts::LN_2 * scale;
    let ln_m = wt.message_bits() as f64 * std::f64::consts::LN_2 * scale;
    let plan = construction_bound(wt.construction, &through, ln_l, ln_m, n_scale)?;
    let log_selection_bound = confidence.map(|e1| plan.log_bound - e1.ln());
    Ok(LeakageReport {
        construction: wt.construction,
        n: n_scale,
        code_n: wt.n(),
        ln_l,
        ln_m,
        s_star: plan.s_star,
        exponent: plan.exponent,
        log_bound: plan.log_bound,
        bound: plan.bound(),
        method: plan.method,
        epsilon,
        within_epsilon: epsilon.map(|e| plan.log_bound <= e.ln()),
        confidence,
        log_selection_bound,
    })
}
