//! Unit-tagged numbers for machine-readable output. Values are computed in
//! nats; the bits display converts information quantities on the way out.

use std::f64::consts::LN_2;

use serde::Serialize;

use crate::optimize::{Construction, RatePlan, SearchMethod};
use crate::wiretap::{Interval, LeakageReport, SimulationReport, WiretapCode};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Unit {
    #[serde(rename = "nats")]
    Nats,
    #[serde(rename = "bits")]
    Bits,
    #[serde(rename = "nats/symbol")]
    NatsPerSymbol,
    #[serde(rename = "bits/symbol")]
    BitsPerSymbol,
    /// Natural log of a quantity measured in nats.
    #[serde(rename = "ln(nats)")]
    LnNats,
    #[serde(rename = "log2(bits)")]
    Log2Bits,
    #[serde(rename = "symbols")]
    Symbols,
    #[serde(rename = "count")]
    Count,
    #[serde(rename = "probability")]
    Probability,
    #[serde(rename = "dimensionless")]
    Dimensionless,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Value {
    Int(u64),
    Real(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Quantity {
    pub value: Value,
    pub unit: Unit,
}

impl Quantity {
    pub fn real(value: f64, unit: Unit) -> Self {
        Self {
            value: Value::Real(value),
            unit,
        }
    }

    pub fn int(value: u64, unit: Unit) -> Self {
        Self {
            value: Value::Int(value),
            unit,
        }
    }
}

/// Output convention: nats (default) or bits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Units {
    pub bits: bool,
}

impl Units {
    pub fn info(self, nats: f64) -> Quantity {
        if self.bits {
            Quantity::real(nats / LN_2, Unit::Bits)
        } else {
            Quantity::real(nats, Unit::Nats)
        }
    }

    pub fn rate(self, nats: f64) -> Quantity {
        if self.bits {
            Quantity::real(nats / LN_2, Unit::BitsPerSymbol)
        } else {
            Quantity::real(nats, Unit::NatsPerSymbol)
        }
    }

    /// `ln B` for an information amount `B` in nats; as `log2` of `B` in bits.
    pub fn log_info(self, ln_nats: f64) -> Quantity {
        if self.bits {
            Quantity::real((ln_nats - LN_2.ln()) / LN_2, Unit::Log2Bits)
        } else {
            Quantity::real(ln_nats, Unit::LnNats)
        }
    }
}

pub fn symbols(n: usize) -> Quantity {
    Quantity::int(n as u64, Unit::Symbols)
}

pub fn count(c: u64) -> Quantity {
    Quantity::int(c, Unit::Count)
}

pub fn probability(p: f64) -> Quantity {
    Quantity::real(p, Unit::Probability)
}

pub fn dimensionless(x: f64) -> Quantity {
    Quantity::real(x, Unit::Dimensionless)
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct Seeds {
    pub hash: Option<String>,
    pub code: Option<String>,
    #[serde(rename = "G")]
    pub g: Option<String>,
    pub noise: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ErrorCounts {
    pub wiretap: Quantity,
    pub channel: Quantity,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IntervalOut {
    pub lo: Quantity,
    pub hi: Quantity,
}

impl From<Interval> for IntervalOut {
    fn from(i: Interval) -> Self {
        Self {
            lo: probability(i.lo),
            hi: probability(i.hi),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Intervals {
    pub wiretap: IntervalOut,
    pub channel: IntervalOut,
}

/// The report layout shared by `bound`, `plan` and `simulate`; fields that
/// do not apply are null.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub construction: String,
    pub n: Quantity,
    #[serde(rename = "ln_L")]
    pub ln_l: Quantity,
    #[serde(rename = "ln_M")]
    pub ln_m: Quantity,
    pub s_star: Option<Quantity>,
    pub exponent: Option<Quantity>,
    pub log_bound_nats: Option<Quantity>,
    pub bound_nats: Option<Quantity>,
    pub method: Option<String>,
    pub seeds: Seeds,
    pub trials: Option<Quantity>,
    pub errors: Option<ErrorCounts>,
    pub ci95: Option<Intervals>,
    /// Coset index actually used by the encoder.
    pub coset: Option<Quantity>,
    /// Block length of the code, when the bound is scaled to another `n`.
    pub code_n: Option<Quantity>,
    pub epsilon: Option<Quantity>,
    pub within_epsilon: Option<bool>,
    pub confidence: Option<Quantity>,
    pub log_selection_bound: Option<Quantity>,
}

fn method_name(m: SearchMethod) -> String {
    serde_json::to_value(m)
        .ok()
        .and_then(|v| v.as_str().map(str::to_owned))
        .unwrap_or_default()
}

impl Report {
    fn blank(construction: Construction, n: usize, ln_l: f64, ln_m: f64, units: Units) -> Self {
        Self {
            construction: construction.name().into(),
            n: symbols(n),
            ln_l: units.info(ln_l),
            ln_m: units.info(ln_m),
            s_star: None,
            exponent: None,
            log_bound_nats: None,
            bound_nats: None,
            method: None,
            seeds: Seeds::default(),
            trials: None,
            errors: None,
            ci95: None,
            coset: None,
            code_n: None,
            epsilon: None,
            within_epsilon: None,
            confidence: None,
            log_selection_bound: None,
        }
    }

    pub fn from_plan(plan: &RatePlan, units: Units) -> Self {
        Self {
            s_star: Some(dimensionless(plan.s_star)),
            exponent: Some(units.rate(plan.exponent)),
            log_bound_nats: Some(units.log_info(plan.log_bound)),
            bound_nats: Some(units.info(plan.bound())),
            method: Some(method_name(plan.method)),
            ..Self::blank(plan.construction, plan.n, plan.ln_l, plan.ln_m, units)
        }
    }

    pub fn from_leakage(rep: &LeakageReport, units: Units) -> Self {
        Self {
            s_star: Some(dimensionless(rep.s_star)),
            exponent: Some(units.rate(rep.exponent)),
            log_bound_nats: Some(units.log_info(rep.log_bound)),
            bound_nats: Some(units.info(rep.bound)),
            method: Some(method_name(rep.method)),
            code_n: Some(symbols(rep.code_n)),
            ..Self::blank(rep.construction, rep.n, rep.ln_l, rep.ln_m, units)
        }
        .with_targets(rep.log_bound, rep.epsilon, rep.confidence, units)
    }

    /// Rates of the code itself, no bound.
    pub fn from_code(wt: &WiretapCode, units: Units) -> Self {
        let ln_l = wt.code_bits() as f64 * LN_2;
        let ln_m = wt.message_bits() as f64 * LN_2;
        Self {
            code_n: Some(symbols(wt.n())),
            ..Self::blank(wt.construction(), wt.n(), ln_l, ln_m, units)
        }
    }

    /// Fills the target fields from the bound's log value.
    pub fn with_targets(mut self, log_bound: f64, epsilon: Option<f64>, confidence: Option<f64>, units: Units) -> Self {
        self.epsilon = epsilon.map(|e| units.info(e));
        self.within_epsilon = epsilon.map(|e| log_bound <= e.ln());
        self.confidence = confidence.map(probability);
        self.log_selection_bound = confidence.map(|e1| units.log_info(log_bound - e1.ln()));
        self
    }

    pub fn with_seeds(mut self, seeds: Seeds, coset: u64) -> Self {
        self.seeds = seeds;
        self.coset = Some(count(coset));
        self
    }

    pub fn with_simulation(mut self, sim: &SimulationReport) -> Self {
        self.trials = Some(count(sim.trials));
        self.errors = Some(ErrorCounts {
            wiretap: count(sim.wiretap_errors),
            channel: count(sim.channel_code_errors),
        });
        self.ci95 = Some(Intervals {
            wiretap: sim.wiretap_ci95.into(),
            channel: sim.channel_ci95.into(),
        });
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_conversion() {
        let u = Units { bits: true };
        assert_eq!(u.info(LN_2), Quantity::real(1.0, Unit::Bits));
        // a bound of ln 2 nats is one bit, whose log2 is zero
        match u.log_info(LN_2.ln()).value {
            Value::Real(v) => assert!(v.abs() < 1e-15),
            Value::Int(_) => unreachable!(),
        }
        assert_eq!(Units::default().info(0.5).unit, Unit::Nats);
    }

    #[test]
    fn serialized_shape() {
        let q = serde_json::to_string(&Quantity::real(0.25, Unit::NatsPerSymbol)).unwrap();
        assert_eq!(q, r#"{"value":0.25,"unit":"nats/symbol"}"#);
        assert_eq!(serde_json::to_string(&symbols(7)).unwrap(), r#"{"value":7,"unit":"symbols"}"#);
    }
}
