//! Minimization of the log leakage bound over `s` and rate planning.
//!
//! For a bound of the form `(|M|/|L|)^s exp(n ξ(s)) / s` the objective is
//!
//! ```text
//! J(s) = s (ln|M| − ln|L|) + n ξ(s) − ln s
//! ```
//!
//! where `ξ(s)` is `ψ(s, P, Q)` for the randomized construction and
//! `max_P φ(s, Q, P)` for the deterministic one. `J` is convex, so its
//! minimizer is found by bisection on `J'`.

use std::cell::RefCell;
use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::simplex::{max_phi_on_kernel, MaximizerConfig};
use crate::channels::Channel;
use crate::error::{Error, Result};
use crate::infofunc::{Distribution, ExponentKind, Kernel};

pub const BISECTION_TOL: f64 = 1e-9;
pub const BISECTION_MAX_STEPS: usize = 200;
pub const FALLBACK_GRID_POINTS: usize = 10_000;
pub const RATE_GRID_STEP: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Construction {
    Randomized,
    Deterministic,
}

impl Construction {
    pub fn exponent_kind(self) -> ExponentKind {
        match self {
            Construction::Randomized => ExponentKind::Psi,
            Construction::Deterministic => ExponentKind::Phi,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Construction::Randomized => "randomized",
            Construction::Deterministic => "deterministic",
        }
    }
}

impl std::str::FromStr for Construction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "randomized" => Ok(Construction::Randomized),
            "deterministic" => Ok(Construction::Deterministic),
            other => Err(Error::InvalidArgument(format!("unknown construction {other:?}"))),
        }
    }
}

/// Input law entering the exponent.
#[derive(Debug, Clone, PartialEq)]
pub enum InputLaw {
    Fixed(Distribution),
    /// Maximize `exp φ` over the simplex at every `s`.
    Maximize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SearchMethod {
    Bisection,
    RightEndpoint,
    GridFallback,
}

/// Outcome of minimizing the log bound at fixed rates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatePlan {
    pub construction: Construction,
    pub n: usize,
    pub ln_l: f64,
    pub ln_m: f64,
    pub s_star: f64,
    /// Single-letter exponent `ξ(s*)` in nats.
    pub exponent: f64,
    /// `ln` of the leakage bound (bound in nats).
    pub log_bound: f64,
    pub method: SearchMethod,
    /// Input law attaining `ξ(s*)`.
    pub input: Distribution,
}

impl RatePlan {
    pub fn bound(&self) -> f64 {
        self.log_bound.exp()
    }
}

#[derive(Debug, Clone, Copy)]
struct CurvePoint {
    value: f64,
    slope: f64,
}

/// `s ↦ ξ(s)` with its derivative, memoized per `s`.
pub struct ExponentCurve {
    kernel: Kernel,
    kind: ExponentKind,
    input: InputLaw,
    cache: RefCell<HashMap<u64, (CurvePoint, Distribution)>>,
}

impl ExponentCurve {
    pub fn new(kind: ExponentKind, ch: &Channel, input: InputLaw) -> Result<Self> {
        let kernel = Kernel::from_channel(ch)?;
        if let InputLaw::Fixed(p) = &input {
            if p.len() != kernel.input_size() {
                return Err(Error::DimensionMismatch(format!(
                    "distribution has {} entries, channel has {} inputs",
                    p.len(),
                    kernel.input_size()
                )));
            }
        }
        if kind == ExponentKind::Psi && input == InputLaw::Maximize {
            return Err(Error::InvalidArgument(
                "input maximization is only defined for the phi exponent".into(),
            ));
        }
        Ok(Self {
            kernel,
            kind,
            input,
            cache: RefCell::new(HashMap::new()),
        })
    }

    pub fn kind(&self) -> ExponentKind {
        self.kind
    }

    fn point(&self, s: f64) -> Result<(CurvePoint, Distribution)> {
        if let Some(hit) = self.cache.borrow().get(&s.to_bits()) {
            return Ok(hit.clone());
        }
        self.kind.check_s(s)?;
        let p = match &self.input {
            InputLaw::Fixed(p) => p.clone(),
            InputLaw::Maximize => max_phi_on_kernel(&self.kernel, s, &MaximizerConfig::default())?.p_opt,
        };
        // at a maximizer the envelope theorem gives d/ds max_P φ = ∂φ/∂s
        let point = match self.kind {
            ExponentKind::Psi => CurvePoint {
                value: self.kernel.psi(s, &p)?,
                slope: self.kernel.psi_derivative(s, &p)?,
            },
            ExponentKind::Phi => CurvePoint {
                value: self.kernel.phi(s, &p)?,
                slope: self.kernel.phi_derivative(s, &p)?,
            },
        };
        self.cache.borrow_mut().insert(s.to_bits(), (point, p.clone()));
        Ok((point, p))
    }

    pub fn value(&self, s: f64) -> Result<f64> {
        Ok(self.point(s)?.0.value)
    }

    pub fn slope(&self, s: f64) -> Result<f64> {
        Ok(self.point(s)?.0.slope)
    }

    pub fn input_at(&self, s: f64) -> Result<Distribution> {
        Ok(self.point(s)?.1)
    }
}

/// `J(s) = s (ln_m − ln_l) + n ξ(s) − ln s`.
pub struct BoundObjective<'a> {
    curve: &'a ExponentCurve,
    ln_l: f64,
    ln_m: f64,
    n: usize,
}

impl<'a> BoundObjective<'a> {
    pub fn new(curve: &'a ExponentCurve, ln_l: f64, ln_m: f64, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("block length must be at least 1".into()));
        }
        if !(ln_m > 0.0 && ln_l.is_finite() && ln_m <= ln_l + 1e-12) {
            return Err(Error::InvalidArgument(format!(
                "need 0 < ln|M| <= ln|L|, got ln|M| = {ln_m}, ln|L| = {ln_l}"
            )));
        }
        Ok(Self { curve, ln_l, ln_m, n })
    }

    pub fn value(&self, s: f64) -> Result<f64> {
        let v = s * (self.ln_m - self.ln_l) + self.n as f64 * self.curve.value(s)? - s.ln();
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::NonFinite { s })
        }
    }

    pub fn slope(&self, s: f64) -> Result<f64> {
        let d = (self.ln_m - self.ln_l) + self.n as f64 * self.curve.slope(s)? - 1.0 / s;
        if d.is_finite() {
            Ok(d)
        } else {
            Err(Error::NonFinite { s })
        }
    }

    fn locate_by_bisection(&self) -> Result<(f64, SearchMethod)> {
        let s_max = self.curve.kind().s_max();
        if self.slope(s_max)? <= 0.0 {
            return Ok((s_max, SearchMethod::RightEndpoint));
        }
        // J' -> -inf as s -> 0, so halving finds a left bracket
        let mut hi = s_max;
        let mut lo = s_max / 2.0;
        while self.slope(lo)? > 0.0 {
            hi = lo;
            lo /= 2.0;
            if lo < 1e-300 {
                return Err(Error::NonFinite { s: lo });
            }
        }
        for _ in 0..BISECTION_MAX_STEPS {
            if hi - lo <= BISECTION_TOL * hi {
                break;
            }
            let mid = 0.5 * (lo + hi);
            if self.slope(mid)? > 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Ok((0.5 * (lo + hi), SearchMethod::Bisection))
    }

    /// Nonnegative second differences around `s` at a few scales.
    fn locally_convex(&self, s: f64) -> Result<bool> {
        let s_max = self.curve.kind().s_max();
        for h in [1e-2 * s_max, 1e-3 * s_max, 0.25 * s] {
            let center = if s + h > s_max {
                s_max - h
            } else if s - h <= 0.0 {
                2.0 * h
            } else {
                s
            };
            if center + h > s_max || center - h <= 0.0 {
                continue;
            }
            let d2 = self.value(center - h)? - 2.0 * self.value(center)? + self.value(center + h)?;
            if d2 < -1e-9 {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Dense-grid minimizer over `s_i = i s_max / points`; ties go to the smaller `s`.
    pub fn grid_minimum(&self, points: usize) -> Result<(f64, f64)> {
        let s_max = self.curve.kind().s_max();
        let mut best = (f64::NAN, f64::INFINITY);
        for i in 1..=points {
            let s = s_max * i as f64 / points as f64;
            let v = self.value(s)?;
            if v < best.1 {
                best = (s, v);
            }
        }
        Ok(best)
    }

    pub fn minimize(&self, construction: Construction) -> Result<RatePlan> {
        let (mut s_star, mut method) = self.locate_by_bisection()?;
        if !self.locally_convex(s_star)? {
            log::warn!(
                "log bound is not convex near s = {s_star:.6}; falling back to a {FALLBACK_GRID_POINTS}-point grid"
            );
            s_star = self.grid_minimum(FALLBACK_GRID_POINTS)?.0;
            method = SearchMethod::GridFallback;
        }
        Ok(RatePlan {
            construction,
            n: self.n,
            ln_l: self.ln_l,
            ln_m: self.ln_m,
            s_star,
            exponent: self.curve.value(s_star)?,
            log_bound: self.value(s_star)?,
            method,
            input: self.curve.input_at(s_star)?,
        })
    }
}

fn default_input(construction: Construction, ch: &Channel) -> Result<InputLaw> {
    Ok(match construction {
        Construction::Randomized => InputLaw::Fixed(Distribution::uniform(ch.input_size())?),
        Construction::Deterministic => InputLaw::Maximize,
    })
}

/// Minimizes `ln[(|M|/|L|)^s exp(n ξ(s)) / s]` over the admissible `s`.
pub fn min_log_bound_over_s(
    kind: ExponentKind,
    ch: &Channel,
    input: InputLaw,
    ln_l: f64,
    ln_m: f64,
    n: usize,
) -> Result<RatePlan> {
    let construction = match kind {
        ExponentKind::Psi => Construction::Randomized,
        ExponentKind::Phi => Construction::Deterministic,
    };
    let curve = ExponentCurve::new(kind, ch, input)?;
    BoundObjective::new(&curve, ln_l, ln_m, n)?.minimize(construction)
}

/// The bound each construction carries: ψ with uniform input for the
/// randomized construction, `max_P φ` for the deterministic one.
pub fn construction_bound(construction: Construction, ch: &Channel, ln_l: f64, ln_m: f64, n: usize) -> Result<RatePlan> {
    let curve = ExponentCurve::new(construction.exponent_kind(), ch, default_input(construction, ch)?)?;
    BoundObjective::new(&curve, ln_l, ln_m, n)?.minimize(construction)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum PlanOutcome {
    Feasible(RatePlan),
    /// Even the smallest grid rate misses the target.
    Infeasible {
        construction: Construction,
        n: usize,
        ln_l: f64,
        epsilon: f64,
        smallest_ln_m: f64,
        log_bound: f64,
    },
}

/// Largest `ln|M|` on the grid `ln|L| − j·0.01` whose minimized bound is at
/// most `epsilon` nats.
pub fn plan_rates(construction: Construction, ch: &Channel, rate_l: f64, n: usize, epsilon: f64) -> Result<PlanOutcome> {
    if !(rate_l > 0.0 && rate_l.is_finite()) || n == 0 {
        return Err(Error::InvalidArgument(format!(
            "need R_L * n > 0, got R_L = {rate_l}, n = {n}"
        )));
    }
    if !(epsilon > 0.0) {
        return Err(Error::InvalidArgument(format!("epsilon must be positive, got {epsilon}")));
    }
    let ln_l = rate_l * n as f64;
    let curve = ExponentCurve::new(construction.exponent_kind(), ch, default_input(construction, ch)?)?;
    let ln_eps = epsilon.ln();
    let ln_m_at = |j: usize| ln_l - RATE_GRID_STEP * j as f64;
    let plan_at = |j: usize| BoundObjective::new(&curve, ln_l, ln_m_at(j), n)?.minimize(construction);

    let mut j_max = (ln_l / RATE_GRID_STEP).ceil() as usize;
    while j_max > 0 && ln_m_at(j_max) <= 1e-9 {
        j_max -= 1;
    }
    let smallest = plan_at(j_max)?;
    if smallest.log_bound > ln_eps {
        return Ok(PlanOutcome::Infeasible {
            construction,
            n,
            ln_l,
            epsilon,
            smallest_ln_m: smallest.ln_m,
            log_bound: smallest.log_bound,
        });
    }
    // the bound grows with ln|M|: find the smallest feasible j
    let (mut lo, mut hi) = (0usize, j_max);
    let mut best = smallest;
    while lo < hi {
        let mid = (lo + hi) / 2;
        let plan = plan_at(mid)?;
        if plan.log_bound <= ln_eps {
            hi = mid;
            best = plan;
        } else {
            lo = mid + 1;
        }
    }
    if best.ln_m != ln_m_at(lo) {
        best = plan_at(lo)?;
    }
    Ok(PlanOutcome::Feasible(best))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::DiscreteChannel;
    use crate::infofunc::mutual_information;

    fn bsc(p: f64) -> Channel {
        DiscreteChannel::bsc(p).unwrap().into()
    }

    fn flat() -> Channel {
        DiscreteChannel::new(vec![vec![0.3, 0.7], vec![0.3, 0.7]]).unwrap().into()
    }

    #[test]
    fn independent_channel_minimizes_at_right_endpoint() {
        let ln_l = 10.0 * 2f64.ln();
        let plan = construction_bound(Construction::Randomized, &flat(), ln_l, ln_l, 10).unwrap();
        assert_eq!(plan.s_star, 1.0);
        assert!(plan.log_bound.abs() < 1e-12);
        let plan = construction_bound(Construction::Deterministic, &flat(), ln_l, ln_l, 10).unwrap();
        assert_eq!(plan.s_star, 0.5);
        assert!((plan.log_bound - 2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn bound_decays_with_block_length() {
        let u = Distribution::uniform(2).unwrap();
        let i = mutual_information(&u, &bsc(0.1)).unwrap();
        let at = |n: usize| {
            let ln_l = n as f64 * 2f64.ln();
            let ln_m = n as f64 * (2f64.ln() - i - 0.05);
            construction_bound(Construction::Randomized, &bsc(0.1), ln_l, ln_m, n).unwrap()
        };
        let (b100, b200, b400, b1000) = (at(100), at(200), at(400), at(1000));
        assert!(b1000.log_bound < b400.log_bound && b400.log_bound < b200.log_bound);
        // still above zero at n = 100; the sign flips before n = 1000
        assert!((b100.log_bound - 1.310074039).abs() < 1e-6, "{}", b100.log_bound);
        assert!((b400.log_bound - 0.646118649).abs() < 1e-6, "{}", b400.log_bound);
        assert!((b1000.log_bound + 1.124200578).abs() < 1e-6, "{}", b1000.log_bound);
        // grid oracle for the bisection
        let curve = ExponentCurve::new(ExponentKind::Psi, &bsc(0.1), InputLaw::Fixed(u)).unwrap();
        let obj = BoundObjective::new(&curve, b100.ln_l, b100.ln_m, 100).unwrap();
        let (_, grid_min) = obj.grid_minimum(10_000).unwrap();
        assert!(b100.log_bound <= grid_min + 1e-12);
        assert!(grid_min - b100.log_bound < 1e-6);
    }

    #[test]
    fn equal_rates_on_noisy_channel_give_positive_floor() {
        let n = 100;
        let ln_l = n as f64 * 2f64.ln();
        let plan = construction_bound(Construction::Randomized, &bsc(0.1), ln_l, ln_l, n).unwrap();
        assert!(plan.log_bound > 0.0);
    }

    #[test]
    fn rejects_bad_rates() {
        let curve = ExponentCurve::new(ExponentKind::Psi, &bsc(0.1), InputLaw::Fixed(Distribution::uniform(2).unwrap()))
            .unwrap();
        assert!(BoundObjective::new(&curve, 1.0, 2.0, 10).is_err());
        assert!(BoundObjective::new(&curve, 1.0, 0.5, 0).is_err());
        assert!(ExponentCurve::new(ExponentKind::Psi, &bsc(0.1), InputLaw::Maximize).is_err());
    }

    #[test]
    fn plan_noiseless_eavesdropper_is_infeasible() {
        let id: Channel = DiscreteChannel::identity(2).unwrap().into();
        for c in [Construction::Randomized, Construction::Deterministic] {
            let out = plan_rates(c, &id, 2f64.ln(), 50, 1e-3).unwrap();
            assert!(matches!(out, PlanOutcome::Infeasible { .. }), "{out:?}");
        }
    }

    #[test]
    fn plan_independent_eavesdropper_keeps_full_rate() {
        let n = 40;
        // floors: 1 nat at s = 1 (psi), 2 nats at s = 1/2 (phi)
        for (c, eps) in [(Construction::Randomized, 1.0), (Construction::Deterministic, 2.0)] {
            match plan_rates(c, &flat(), 2f64.ln(), n, eps + 1e-9).unwrap() {
                PlanOutcome::Feasible(plan) => assert_eq!(plan.ln_m, 2f64.ln() * n as f64),
                other => panic!("{other:?}"),
            }
        }
    }

    #[test]
    fn plan_bsc_rate_near_secrecy_gap() {
        let u = Distribution::uniform(2).unwrap();
        let i = mutual_information(&u, &bsc(0.1)).unwrap();
        let n = 1000;
        match plan_rates(Construction::Randomized, &bsc(0.1), 2f64.ln(), n, 1e-6).unwrap() {
            PlanOutcome::Feasible(plan) => {
                let rate = plan.ln_m / n as f64;
                assert!(rate < 2f64.ln() - i - 0.1);
                // largest feasible point of the ln M grid, from a dense sweep over s
                assert!((plan.ln_m - (plan.ln_l - 0.01 * 47256.0)).abs() < 1e-9, "rate {rate}");
                assert!(plan.log_bound <= 1e-6f64.ln());
                // one grid step more rate breaks the target
                let next = BoundObjective::new(
                    &ExponentCurve::new(ExponentKind::Psi, &bsc(0.1), InputLaw::Fixed(u)).unwrap(),
                    plan.ln_l,
                    plan.ln_m + RATE_GRID_STEP,
                    n,
                )
                .unwrap()
                .minimize(Construction::Randomized)
                .unwrap();
                assert!(next.log_bound > 1e-6f64.ln());
            }
            other => panic!("{other:?}"),
        }
    }
}
