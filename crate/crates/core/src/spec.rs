//! JSON descriptions of channels, prefixes, hashes and codes.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::bits;
use crate::channels::{Channel, DiscreteChannel, GaussianChannel, PrefixChannel};
use crate::codes::LinearCode;
use crate::error::{Error, Result};
use crate::hashing::ToeplitzHash;
use crate::rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum ChannelSpec {
    Dmc { matrix: Vec<Vec<f64>> },
    Bsc { p: f64 },
    Bec { e: f64 },
    Awgn { constellation: Vec<f64>, sigma: f64 },
}

impl ChannelSpec {
    pub fn build(&self) -> Result<Channel> {
        Ok(match self {
            ChannelSpec::Dmc { matrix } => DiscreteChannel::new(matrix.clone())?.into(),
            ChannelSpec::Bsc { p } => DiscreteChannel::bsc(*p)?.into(),
            ChannelSpec::Bec { e } => DiscreteChannel::bec(*e)?.into(),
            ChannelSpec::Awgn { constellation, sigma } => GaussianChannel::new(constellation.clone(), *sigma)?.into(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum PrefixSpec {
    Prefix { matrix: Vec<Vec<f64>> },
}

impl PrefixSpec {
    pub fn build(&self) -> Result<PrefixChannel> {
        let PrefixSpec::Prefix { matrix } = self;
        Ok(PrefixChannel::new(DiscreteChannel::new(matrix.clone())?))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HashSpecKind {
    Toeplitz,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HashSpec {
    pub kind: HashSpecKind,
    pub l: usize,
    pub k: usize,
    /// Diagonal bits, MSB-first hex. Drawn from `fallback_seed` when absent.
    #[serde(default)]
    pub seed_hex: Option<String>,
}

impl HashSpec {
    pub fn build(&self, fallback_seed: u64) -> Result<ToeplitzHash> {
        match &self.seed_hex {
            Some(hex) => ToeplitzHash::from_seed_hex(self.l, self.k, hex),
            None => ToeplitzHash::random(self.l, self.k, &mut rng::stream(fallback_seed)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum CodeSpec {
    Hamming74,
    Random {
        n: usize,
        k: usize,
        #[serde(default)]
        seed_hex: Option<String>,
    },
    Explicit {
        generator_rows_hex: Vec<String>,
        /// Block length; defaults to eight bits per hex byte.
        #[serde(default)]
        n: Option<usize>,
    },
}

impl CodeSpec {
    /// Builds the code; a random code without `seed_hex` uses `fallback_seed`.
    /// Returns the seed actually used, if any.
    pub fn build(&self, fallback_seed: u64) -> Result<(LinearCode, Option<u64>)> {
        match self {
            CodeSpec::Hamming74 => Ok((LinearCode::hamming74(), None)),
            CodeSpec::Random { n, k, seed_hex } => {
                let seed = match seed_hex {
                    Some(h) => bits::parse_seed_hex(h)?,
                    None => fallback_seed,
                };
                Ok((LinearCode::random(*n, *k, &mut rng::stream(seed))?, Some(seed)))
            }
            CodeSpec::Explicit { generator_rows_hex, n } => {
                let first = generator_rows_hex
                    .first()
                    .ok_or_else(|| Error::Spec("explicit code needs at least one row".into()))?;
                let n = n.unwrap_or(first.trim_start_matches("0x").len() / 2 * 8);
                let rows = generator_rows_hex
                    .iter()
                    .map(|h| bits::hex_to_word(h, n))
                    .collect::<Result<Vec<_>>>()?;
                Ok((LinearCode::new(n, rows)?, None))
            }
        }
    }
}

pub fn parse<T: for<'de> Deserialize<'de>>(text: &str, what: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::Spec(format!("{what}: {e}")))
}

pub fn load<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Spec(format!("{}: {e}", path.display())))?;
    parse(&text, &path.display().to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn channel_specs() {
        let c: ChannelSpec = parse(r#"{"type":"bsc","p":0.1}"#, "t").unwrap();
        assert_eq!(c.build().unwrap(), DiscreteChannel::bsc(0.1).unwrap().into());
        let c: ChannelSpec = parse(r#"{"type":"bec","e":0.2}"#, "t").unwrap();
        assert_eq!(c.build().unwrap(), DiscreteChannel::bec(0.2).unwrap().into());
        let c: ChannelSpec = parse(r#"{"type":"dmc","matrix":[[0.5,0.5],[0.1,0.9]]}"#, "t").unwrap();
        assert_eq!(c.build().unwrap().input_size(), 2);
        let c: ChannelSpec = parse(r#"{"type":"awgn","constellation":[1,-1],"sigma":0.8}"#, "t").unwrap();
        assert!(matches!(c.build().unwrap(), Channel::Gaussian(_)));
    }

    #[test]
    fn malformed_specs_are_rejected() {
        assert!(parse::<ChannelSpec>(r#"{"type":"bsc"}"#, "t").is_err());
        assert!(parse::<ChannelSpec>(r#"{"type":"bsc","p":0.1,"q":1}"#, "t").is_err());
        let c: ChannelSpec = parse(r#"{"type":"dmc","matrix":[[0.5,0.5],[0.1]]}"#, "t").unwrap();
        assert!(c.build().is_err());
        assert!(parse::<CodeSpec>(r#"{"type":"golay"}"#, "t").is_err());
    }

    #[test]
    fn prefix_spec() {
        let p: PrefixSpec = parse(r#"{"type":"prefix","matrix":[[0.9,0.1],[0,1]]}"#, "t").unwrap();
        assert!(!p.build().unwrap().is_identity());
    }

    #[test]
    fn hash_spec() {
        let h: HashSpec = parse(r#"{"kind":"toeplitz","l":16,"k":8,"seed_hex":"a002"}"#, "t").unwrap();
        let built = h.build(0).unwrap();
        assert_eq!(built.seed_hex(), "a002");
        assert_eq!((built.l_dim(), built.k_dim()), (16, 8));
        let h: HashSpec = parse(r#"{"kind":"toeplitz","l":4,"k":2}"#, "t").unwrap();
        assert_eq!(h.build(5).unwrap(), h.build(5).unwrap());
    }

    #[test]
    fn code_specs() {
        let c: CodeSpec = parse(r#"{"type":"hamming74"}"#, "t").unwrap();
        assert_eq!(c.build(0).unwrap().0, LinearCode::hamming74());
        let c: CodeSpec = parse(r#"{"type":"random","n":10,"k":5,"seed_hex":"00000000000000ff"}"#, "t").unwrap();
        let (a, seed) = c.build(0).unwrap();
        assert_eq!(seed, Some(0xff));
        assert_eq!(a, c.build(1).unwrap().0);
        // rows of the Hamming generator, seven bits MSB-first
        let c: CodeSpec = parse(
            r#"{"type":"explicit","n":7,"generator_rows_hex":["8c","4a","26","1e"]}"#,
            "t",
        )
        .unwrap();
        assert_eq!(c.build(0).unwrap().0, LinearCode::hamming74());
        let c: CodeSpec = parse(r#"{"type":"explicit","generator_rows_hex":["f0","0f"]}"#, "t").unwrap();
        assert_eq!(c.build(0).unwrap().0.n(), 8);
    }
}
