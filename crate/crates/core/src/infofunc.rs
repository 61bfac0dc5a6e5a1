//! Entropic functionals of a channel and an input distribution: mutual
//! information, the privacy-amplification exponent ψ, the Gallager-type
//! exponent φ and Gallager's E₀. All values are in nats.
//!
//! Every functional is evaluated on a [`Kernel`]: conditional densities
//! `q(z|t)` on a finite set of output points together with a measure on
//! those points. A discrete channel is its own kernel with unit measure; a
//! Gaussian channel becomes Gauss–Hermite nodes around every constellation
//! point, weighted so that sums over the nodes approximate integrals over the
//! real line. Sums are carried out in the log domain.

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::channels::{Channel, DiscreteChannel, GaussianChannel};
use crate::error::{Error, Result};
use crate::quadrature::{GaussHermite, DEFAULT_NODES};

pub const DISTRIBUTION_TOL: f64 = 1e-12;

/// Probability vector on a finite alphabet.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Distribution {
    probs: Vec<f64>,
}

impl Distribution {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::DimensionMismatch("empty distribution".into()));
        }
        if let Some(&v) = probs.iter().find(|&&p| !(p >= 0.0 && p <= 1.0 + DISTRIBUTION_TOL)) {
            return Err(Error::InvalidProbability {
                value: v,
                context: "distribution entry".into(),
            });
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > DISTRIBUTION_TOL {
            return Err(Error::InvalidProbability {
                value: sum,
                context: "distribution total".into(),
            });
        }
        Ok(Self { probs })
    }

    pub fn uniform(size: usize) -> Result<Self> {
        if size == 0 {
            return Err(Error::DimensionMismatch("empty distribution".into()));
        }
        Ok(Self {
            probs: vec![1.0 / size as f64; size],
        })
    }

    pub fn point(size: usize, at: usize) -> Result<Self> {
        if at >= size {
            return Err(Error::SymbolOutOfRange { symbol: at, size });
        }
        let mut probs = vec![0.0; size];
        probs[at] = 1.0;
        Ok(Self { probs })
    }

    /// `lambda * a + (1 - lambda) * b`.
    pub fn mixture(lambda: f64, a: &Distribution, b: &Distribution) -> Result<Self> {
        if a.len() != b.len() {
            return Err(Error::DimensionMismatch("mixture of different alphabets".into()));
        }
        if !(0.0..=1.0).contains(&lambda) {
            return Err(Error::InvalidProbability {
                value: lambda,
                context: "mixture weight".into(),
            });
        }
        Ok(Self {
            probs: a
                .probs
                .iter()
                .zip(&b.probs)
                .map(|(x, y)| lambda * x + (1.0 - lambda) * y)
                .collect(),
        })
    }

    /// Product distribution on pairs, indexed `i * |b| + j`.
    pub fn product(&self, other: &Distribution) -> Distribution {
        Distribution {
            probs: self
                .probs
                .iter()
                .flat_map(|a| other.probs.iter().map(move |b| a * b))
                .collect(),
        }
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub(crate) fn from_simplex_point(probs: Vec<f64>) -> Self {
        Distribution { probs }
    }
}

/// Which exponent a bound is built from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExponentKind {
    Psi,
    Phi,
}

impl ExponentKind {
    /// Right end of the admissible `s` interval.
    pub fn s_max(self) -> f64 {
        match self {
            ExponentKind::Psi => 1.0,
            ExponentKind::Phi => 0.5,
        }
    }

    pub fn check_s(self, s: f64) -> Result<()> {
        if s > 0.0 && s <= self.s_max() {
            Ok(())
        } else {
            Err(Error::SOutOfRange { s, max: self.s_max() })
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ExponentKind::Psi => "psi",
            ExponentKind::Phi => "phi",
        }
    }
}

/// An exponent evaluated at an admissible `s`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExponentValue {
    pub s: f64,
    pub value: f64,
    pub kind: ExponentKind,
}

impl ExponentValue {
    pub fn evaluate(kind: ExponentKind, s: f64, p: &Distribution, ch: &Channel) -> Result<Self> {
        let kernel = Kernel::from_channel(ch)?;
        let value = match kind {
            ExponentKind::Psi => kernel.psi(s, p)?,
            ExponentKind::Phi => kernel.phi(s, p)?,
        };
        Ok(Self { s, value, kind })
    }
}

/// Conditional densities on a finite set of output points with a measure.
#[derive(Debug, Clone)]
pub struct Kernel {
    inputs: usize,
    outputs: usize,
    /// `ln q(z|t)`, row-major by input; `-inf` where the density vanishes.
    ln_q: Vec<f64>,
    /// `ln` of the measure attached to each output point.
    ln_measure: Vec<f64>,
}

fn default_rule() -> &'static GaussHermite {
    static RULE: OnceLock<GaussHermite> = OnceLock::new();
    RULE.get_or_init(|| GaussHermite::new(DEFAULT_NODES).expect("default rule converges"))
}

pub(crate) fn log_sum_exp<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let values: Vec<f64> = values.into_iter().collect();
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

impl Kernel {
    pub fn from_channel(ch: &Channel) -> Result<Self> {
        match ch {
            Channel::Discrete(c) => Ok(Self::from_discrete(c)),
            Channel::Gaussian(_) | Channel::GaussianMixture(_) => {
                Self::from_channel_with_rule(ch, default_rule())
            }
        }
    }

    pub fn from_channel_with_rule(ch: &Channel, rule: &GaussHermite) -> Result<Self> {
        match ch {
            Channel::Discrete(c) => Ok(Self::from_discrete(c)),
            Channel::Gaussian(g) => {
                let identity = DiscreteChannel::identity(g.input_size())?;
                Ok(Self::gaussian(&identity, g, rule))
            }
            Channel::GaussianMixture(m) => Ok(Self::gaussian(&m.weights, &m.base, rule)),
        }
    }

    pub fn from_discrete(ch: &DiscreteChannel) -> Self {
        Kernel {
            inputs: ch.input_size(),
            outputs: ch.output_size(),
            ln_q: ch.rows().flatten().map(|p| p.ln()).collect(),
            ln_measure: vec![0.0; ch.output_size()],
        }
    }

    /// Output points are `x + sqrt(2) sigma u_i` for every constellation point
    /// `x` and Hermite node `u_i`; the measure divides the Hermite weight by the
    /// equal-weight constellation mixture density, so the kernel integrates
    /// correctly for every input distribution.
    fn gaussian(weights: &DiscreteChannel, base: &GaussianChannel, rule: &GaussHermite) -> Self {
        let points = base.input_size();
        let sigma = base.sigma();
        let ln_points = (points as f64).ln();
        let half_ln_pi = 0.5 * std::f64::consts::PI.ln();
        let mut zs = Vec::with_capacity(points * rule.len());
        let mut ln_measure = Vec::with_capacity(points * rule.len());
        for &x in base.constellation() {
            for (&u, &w) in rule.nodes().iter().zip(rule.weights()) {
                let z = x + std::f64::consts::SQRT_2 * sigma * u;
                let ln_mix = log_sum_exp((0..points).map(|k| base.ln_density(z, k))) - ln_points;
                zs.push(z);
                ln_measure.push(w.ln() - half_ln_pi - ln_points - ln_mix);
            }
        }
        let inputs = weights.input_size();
        let mut ln_q = Vec::with_capacity(inputs * zs.len());
        for t in 0..inputs {
            for &z in &zs {
                ln_q.push(log_sum_exp(
                    weights
                        .row(t)
                        .iter()
                        .enumerate()
                        .map(|(k, &wk)| wk.ln() + base.ln_density(z, k)),
                ));
            }
        }
        Kernel {
            inputs,
            outputs: zs.len(),
            ln_q,
            ln_measure,
        }
    }

    pub fn input_size(&self) -> usize {
        self.inputs
    }

    pub fn output_size(&self) -> usize {
        self.outputs
    }

    #[inline]
    fn ln_q(&self, t: usize, z: usize) -> f64 {
        self.ln_q[t * self.outputs + z]
    }

    fn check_input(&self, p: &Distribution) -> Result<Vec<f64>> {
        if p.len() != self.inputs {
            return Err(Error::DimensionMismatch(format!(
                "distribution has {} entries, channel has {} inputs",
                p.len(),
                self.inputs
            )));
        }
        Ok(p.probs().iter().map(|x| x.ln()).collect())
    }

    fn ln_marginal(&self, ln_p: &[f64]) -> Vec<f64> {
        (0..self.outputs)
            .map(|z| log_sum_exp((0..self.inputs).map(|t| ln_p[t] + self.ln_q(t, z))))
            .collect()
    }

    /// `I(P, Q) = Σ_t Σ_z P(t) q(z|t) ln(q(z|t) / PQ(z))`.
    pub fn mutual_information(&self, p: &Distribution) -> Result<f64> {
        let ln_p = self.check_input(p)?;
        let ln_pz = self.ln_marginal(&ln_p);
        let mut total = 0.0;
        for z in 0..self.outputs {
            for t in 0..self.inputs {
                let lq = self.ln_q(t, z);
                if ln_p[t] == f64::NEG_INFINITY || lq == f64::NEG_INFINITY {
                    continue;
                }
                total += (self.ln_measure[z] + ln_p[t] + lq).exp() * (lq - ln_pz[z]);
            }
        }
        Ok(total.max(0.0))
    }

    /// Log-domain terms `ln[μ(z) P(t) q^{1+s} / PQ(z)^s]` and `ln(q / PQ)`.
    fn psi_terms(&self, s: f64, p: &Distribution) -> Result<Vec<(f64, f64)>> {
        ExponentKind::Psi.check_s(s)?;
        let ln_p = self.check_input(p)?;
        let ln_pz = self.ln_marginal(&ln_p);
        let mut terms = Vec::with_capacity(self.inputs * self.outputs);
        for z in 0..self.outputs {
            for t in 0..self.inputs {
                let lq = self.ln_q(t, z);
                if ln_p[t] == f64::NEG_INFINITY || lq == f64::NEG_INFINITY {
                    continue;
                }
                if ln_pz[z] == f64::NEG_INFINITY {
                    return Err(Error::ZeroMarginal { output: z });
                }
                terms.push((
                    self.ln_measure[z] + ln_p[t] + (1.0 + s) * lq - s * ln_pz[z],
                    lq - ln_pz[z],
                ));
            }
        }
        Ok(terms)
    }

    /// `ψ(s, P) = ln Σ_z Σ_t P(t) q(z|t)^{1+s} / PQ(z)^s`, `0 < s <= 1`.
    pub fn psi(&self, s: f64, p: &Distribution) -> Result<f64> {
        Ok(log_sum_exp(self.psi_terms(s, p)?.into_iter().map(|(a, _)| a)))
    }

    /// `dψ/ds`: the mean log-likelihood ratio under the tilted law.
    pub fn psi_derivative(&self, s: f64, p: &Distribution) -> Result<f64> {
        let terms = self.psi_terms(s, p)?;
        let norm = log_sum_exp(terms.iter().map(|&(a, _)| a));
        Ok(terms.iter().map(|&(a, llr)| (a - norm).exp() * llr).sum())
    }

    /// `ln A_z` with `A_z = Σ_t P(t) q(z|t)^{1/(1-s)}`.
    fn phi_inner(&self, s: f64, ln_p: &[f64]) -> Vec<f64> {
        let a = 1.0 / (1.0 - s);
        (0..self.outputs)
            .map(|z| log_sum_exp((0..self.inputs).map(|t| ln_p[t] + a * self.ln_q(t, z))))
            .collect()
    }

    /// `φ(s, Q, P) = ln Σ_z (Σ_t P(t) q(z|t)^{1/(1-s)})^{1-s}`, `0 < s <= 1/2`.
    pub fn phi(&self, s: f64, p: &Distribution) -> Result<f64> {
        ExponentKind::Phi.check_s(s)?;
        let ln_p = self.check_input(p)?;
        let inner = self.phi_inner(s, &ln_p);
        Ok(log_sum_exp(
            inner
                .iter()
                .zip(&self.ln_measure)
                .map(|(&ln_a, &ln_mu)| ln_mu + (1.0 - s) * ln_a),
        ))
    }

    /// `dφ/ds` at fixed `P`.
    pub fn phi_derivative(&self, s: f64, p: &Distribution) -> Result<f64> {
        ExponentKind::Phi.check_s(s)?;
        let ln_p = self.check_input(p)?;
        let a = 1.0 / (1.0 - s);
        let inner = self.phi_inner(s, &ln_p);
        let outer: Vec<f64> = (0..self.outputs)
            .map(|z| self.ln_measure[z] + (1.0 - s) * inner[z])
            .collect();
        let norm = log_sum_exp(outer.iter().copied());
        let mut total = 0.0;
        for z in 0..self.outputs {
            if inner[z] == f64::NEG_INFINITY {
                continue;
            }
            // mean of ln q under the weights P(t) q^a / A_z
            let mut mean_ln_q = 0.0;
            for t in 0..self.inputs {
                let lq = self.ln_q(t, z);
                if ln_p[t] == f64::NEG_INFINITY || lq == f64::NEG_INFINITY {
                    continue;
                }
                mean_ln_q += (ln_p[t] + a * lq - inner[z]).exp() * lq;
            }
            total += (outer[z] - norm).exp() * (a * mean_ln_q - inner[z]);
        }
        Ok(total)
    }

    /// `exp φ(s, Q, P)` and its gradient in `P`.
    pub fn exp_phi_with_gradient(&self, s: f64, p: &Distribution) -> Result<(f64, Vec<f64>)> {
        ExponentKind::Phi.check_s(s)?;
        let ln_p = self.check_input(p)?;
        let a = 1.0 / (1.0 - s);
        let inner = self.phi_inner(s, &ln_p);
        let value = log_sum_exp(
            inner
                .iter()
                .zip(&self.ln_measure)
                .map(|(&ln_a, &ln_mu)| ln_mu + (1.0 - s) * ln_a),
        )
        .exp();
        let mut grad = vec![0.0; self.inputs];
        for (t, g) in grad.iter_mut().enumerate() {
            let mut acc = 0.0;
            for z in 0..self.outputs {
                let lq = self.ln_q(t, z);
                if lq == f64::NEG_INFINITY {
                    continue;
                }
                if inner[z] == f64::NEG_INFINITY {
                    // no current mass reaches z: the derivative is unbounded
                    acc = f64::MAX / 4.0;
                    break;
                }
                acc += (self.ln_measure[z] + a * lq - s * inner[z]).exp();
            }
            *g = (1.0 - s) * acc;
        }
        Ok((value, grad))
    }

    /// Hessian of `exp φ(s, Q, P)` restricted to the inputs in `support`.
    pub(crate) fn exp_phi_hessian(&self, s: f64, p: &Distribution, support: &[usize]) -> Result<Vec<Vec<f64>>> {
        ExponentKind::Phi.check_s(s)?;
        let ln_p = self.check_input(p)?;
        let a = 1.0 / (1.0 - s);
        let inner = self.phi_inner(s, &ln_p);
        let scale = -s * (1.0 - s);
        let mut hessian = vec![vec![0.0; support.len()]; support.len()];
        for (i, &t) in support.iter().enumerate() {
            for (j, &u) in support.iter().enumerate().skip(i) {
                let mut acc = 0.0;
                for z in 0..self.outputs {
                    let (lt, lu) = (self.ln_q(t, z), self.ln_q(u, z));
                    if lt == f64::NEG_INFINITY || lu == f64::NEG_INFINITY {
                        continue;
                    }
                    acc += (self.ln_measure[z] + a * (lt + lu) - (s + 1.0) * inner[z]).exp();
                }
                hessian[i][j] = scale * acc;
                hessian[j][i] = scale * acc;
            }
        }
        Ok(hessian)
    }

    /// Gallager's `E₀(ρ, P) = -ln Σ_z (Σ_t P(t) q(z|t)^{1/(1+ρ)})^{1+ρ}`, `ρ > -1`.
    pub fn gallager_e0(&self, rho: f64, p: &Distribution) -> Result<f64> {
        if !(rho > -1.0 && rho.is_finite()) {
            return Err(Error::InvalidArgument(format!("rho must exceed -1, got {rho}")));
        }
        let ln_p = self.check_input(p)?;
        let b = 1.0 / (1.0 + rho);
        Ok(-log_sum_exp((0..self.outputs).map(|z| {
            self.ln_measure[z]
                + (1.0 + rho) * log_sum_exp((0..self.inputs).map(|t| ln_p[t] + b * self.ln_q(t, z)))
        })))
    }
}

pub fn mutual_information(p: &Distribution, ch: &Channel) -> Result<f64> {
    Kernel::from_channel(ch)?.mutual_information(p)
}

pub fn psi(s: f64, p: &Distribution, ch: &Channel) -> Result<f64> {
    Kernel::from_channel(ch)?.psi(s, p)
}

pub fn phi(s: f64, ch: &Channel, p: &Distribution) -> Result<f64> {
    Kernel::from_channel(ch)?.phi(s, p)
}

/// `φ̄(s, Q)`: φ with the uniform input distribution.
pub fn phi_bar(s: f64, ch: &Channel) -> Result<f64> {
    phi(s, ch, &Distribution::uniform(ch.input_size())?)
}

pub fn gallager_e0(rho: f64, p: &Distribution, ch: &Channel) -> Result<f64> {
    Kernel::from_channel(ch)?.gallager_e0(rho, p)
}

/// Step used by the `s -> 0` limit helpers.
pub const LIMIT_STEP: f64 = 1e-4;

/// Two-point Richardson extrapolation of `f(s)/s` to `s = 0`, from `s` and `s/2`.
pub fn richardson_rate_limit<F: Fn(f64) -> Result<f64>>(f: F, s: f64) -> Result<f64> {
    let full = f(s)? / s;
    let half = f(s / 2.0)? / (s / 2.0);
    Ok(2.0 * half - full)
}

/// `lim_{s->0} ψ(s)/s`, which equals `I(P, Q)`.
pub fn psi_rate_limit(p: &Distribution, ch: &Channel) -> Result<f64> {
    let kernel = Kernel::from_channel(ch)?;
    richardson_rate_limit(|s| kernel.psi(s, p), LIMIT_STEP)
}

/// `lim_{s->0} φ(s)/s`, which equals `I(P, Q)`.
pub fn phi_rate_limit(p: &Distribution, ch: &Channel) -> Result<f64> {
    let kernel = Kernel::from_channel(ch)?;
    richardson_rate_limit(|s| kernel.phi(s, p), LIMIT_STEP)
}
