//! Two-universal hash families over F2.
//!
//! Maps are `k × l` bit matrices acting on words as in [`crate::bits`]:
//! component `i` of the output is the parity of row `i` against the input.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bits::{self, mask, mat_vec};
use crate::error::{Error, Result};

/// Largest seed space the exhaustive checks will walk.
pub const ENUMERATION_LIMIT_LOG2: u32 = 24;

fn check_dims(l_dim: usize, k_dim: usize) -> Result<()> {
    if k_dim == 0 || k_dim > l_dim || l_dim > bits::MAX_WORD_LEN {
        return Err(Error::DimensionMismatch(format!(
            "hash needs 1 <= k <= l <= 64, got l = {l_dim}, k = {k_dim}"
        )));
    }
    Ok(())
}

/// A linear map F2^l -> F2^k given by its rows.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinearMap {
    l_dim: usize,
    rows: Vec<u64>,
}

impl LinearMap {
    pub fn new(l_dim: usize, rows: Vec<u64>) -> Result<Self> {
        check_dims(l_dim, rows.len())?;
        if rows.iter().any(|&r| r & !mask(l_dim) != 0) {
            return Err(Error::DimensionMismatch(format!("row wider than {l_dim} bits")));
        }
        Ok(Self { l_dim, rows })
    }

    pub fn l_dim(&self) -> usize {
        self.l_dim
    }

    pub fn k_dim(&self) -> usize {
        self.rows.len()
    }

    pub fn rows(&self) -> &[u64] {
        &self.rows
    }

    pub fn is_surjective(&self) -> bool {
        bits::rank(&self.rows) == self.rows.len()
    }

    pub fn apply(&self, x: u64) -> u64 {
        mat_vec(&self.rows, x)
    }
}

/// `[I_k | T]` with `T` a `k × (l−k)` Toeplitz matrix; `T[i][j]` is diagonal
/// bit `j − i + k − 1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ToeplitzHash {
    l_dim: usize,
    k_dim: usize,
    /// `l − 1` diagonal bits, bit 0 most significant.
    diag: u64,
    tail_rows: Vec<u64>,
    map: LinearMap,
}

impl ToeplitzHash {
    pub fn new(l_dim: usize, k_dim: usize, diag: u64) -> Result<Self> {
        check_dims(l_dim, k_dim)?;
        let diag_len = l_dim - 1;
        if diag & !mask(diag_len) != 0 {
            return Err(Error::DimensionMismatch(format!("diagonal seed wider than {diag_len} bits")));
        }
        let tail = l_dim - k_dim;
        let tail_rows: Vec<u64> = (0..k_dim)
            .map(|i| {
                (0..tail).fold(0u64, |acc, j| (acc << 1) | bits::bit(diag, diag_len, j + k_dim - 1 - i))
            })
            .collect();
        let rows = tail_rows
            .iter()
            .enumerate()
            .map(|(i, &t)| (1u64 << (l_dim - 1 - i)) | t)
            .collect();
        Ok(Self {
            l_dim,
            k_dim,
            diag,
            tail_rows,
            map: LinearMap { l_dim, rows },
        })
    }

    pub fn identity(l_dim: usize) -> Result<Self> {
        Self::new(l_dim, l_dim, 0)
    }

    pub fn random<R: Rng + ?Sized>(l_dim: usize, k_dim: usize, rng: &mut R) -> Result<Self> {
        check_dims(l_dim, k_dim)?;
        Self::new(l_dim, k_dim, rng.random::<u64>() & mask(l_dim - 1))
    }

    pub fn from_diag_bits(l_dim: usize, k_dim: usize, diag: &[bool]) -> Result<Self> {
        if diag.len() + 1 != l_dim {
            return Err(Error::DimensionMismatch(format!(
                "{} diagonal bits for l = {l_dim}",
                diag.len()
            )));
        }
        Self::new(l_dim, k_dim, bits::bits_to_word(diag)?)
    }

    /// Parses the MSB-first hex encoding of the diagonal bits.
    pub fn from_seed_hex(l_dim: usize, k_dim: usize, hex: &str) -> Result<Self> {
        check_dims(l_dim, k_dim)?;
        Self::new(l_dim, k_dim, bits::hex_to_word(hex, l_dim - 1)?)
    }

    pub fn seed_hex(&self) -> String {
        bits::word_to_hex(self.diag, self.l_dim - 1)
    }

    pub fn l_dim(&self) -> usize {
        self.l_dim
    }

    pub fn k_dim(&self) -> usize {
        self.k_dim
    }

    pub fn diag(&self) -> u64 {
        self.diag
    }

    pub fn diag_bits(&self) -> Vec<bool> {
        bits::word_to_bits(self.diag, self.l_dim - 1)
    }

    pub fn linear_map(&self) -> &LinearMap {
        &self.map
    }

    pub fn apply(&self, x: u64) -> u64 {
        self.map.apply(x)
    }

    pub fn apply_bits(&self, x: &[bool]) -> Result<Vec<bool>> {
        if x.len() != self.l_dim {
            return Err(Error::DimensionMismatch(format!(
                "hash input has {} bits, expected {}",
                x.len(),
                self.l_dim
            )));
        }
        Ok(bits::word_to_bits(self.apply(bits::bits_to_word(x)?), self.k_dim))
    }

    /// The preimage of `m` indexed by the free tail `r`: `(m ⊕ T r, r)`.
    pub fn preimage(&self, m: u64, r: u64) -> u64 {
        let tail = self.l_dim - self.k_dim;
        let head = m ^ mat_vec(&self.tail_rows, r);
        if tail == 0 {
            head
        } else {
            (head << tail) | r
        }
    }

    pub fn preimages(&self, m: u64) -> impl Iterator<Item = u64> + '_ {
        (0..1u64 << (self.l_dim - self.k_dim)).map(move |r| self.preimage(m, r))
    }

    pub fn sample_preimage<R: Rng + ?Sized>(&self, m: u64, rng: &mut R) -> u64 {
        let r = rng.random::<u64>() & mask(self.l_dim - self.k_dim);
        self.preimage(m, r)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HashKind {
    Toeplitz,
    AllLinearSurjections,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HashFamily {
    pub kind: HashKind,
    pub l_dim: usize,
    pub k_dim: usize,
}

/// Worst case of the seed-averaged collision count, kept as integers so the
/// comparison with `2^{-k}` is exact.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct CollisionProfile {
    pub max_collisions: u64,
    pub members: u64,
    /// A difference `x₁ ⊕ x₂` attaining the maximum.
    pub worst_difference: u64,
}

impl CollisionProfile {
    pub fn probability(&self) -> f64 {
        self.max_collisions as f64 / self.members as f64
    }

    pub fn within(&self, k_dim: usize) -> bool {
        (self.max_collisions as u128) << k_dim <= self.members as u128
    }
}

impl HashFamily {
    pub fn new(kind: HashKind, l_dim: usize, k_dim: usize) -> Result<Self> {
        check_dims(l_dim, k_dim)?;
        Ok(Self { kind, l_dim, k_dim })
    }

    /// log2 of the number of seeds (matrices for the surjection family,
    /// counted before the rank filter).
    pub fn seed_space_log2(&self) -> u32 {
        match self.kind {
            HashKind::Toeplitz => (self.l_dim - 1) as u32,
            HashKind::AllLinearSurjections => (self.l_dim * self.k_dim) as u32,
        }
    }

    pub fn enumerable(&self) -> bool {
        self.seed_space_log2() <= ENUMERATION_LIMIT_LOG2
    }

    pub fn members(&self) -> Result<Vec<LinearMap>> {
        if !self.enumerable() {
            return Err(Error::TooLarge(format!(
                "family has 2^{} seeds, limit is 2^{ENUMERATION_LIMIT_LOG2}",
                self.seed_space_log2()
            )));
        }
        let (l, k) = (self.l_dim, self.k_dim);
        match self.kind {
            HashKind::Toeplitz => (0..1u64 << (l - 1))
                .map(|d| ToeplitzHash::new(l, k, d).map(|h| h.map))
                .collect(),
            HashKind::AllLinearSurjections => Ok((0..1u64 << (l * k))
                .map(|code| (0..k).map(|i| (code >> ((k - 1 - i) * l)) & mask(l)).collect::<Vec<_>>())
                .filter(|rows| bits::rank(rows) == k)
                .map(|rows| LinearMap { l_dim: l, rows })
                .collect()),
        }
    }

    pub fn toeplitz_members(&self) -> Result<Vec<ToeplitzHash>> {
        if self.kind != HashKind::Toeplitz || !self.enumerable() {
            return Err(Error::InvalidArgument("not an enumerable Toeplitz family".into()));
        }
        (0..1u64 << (self.l_dim - 1))
            .map(|d| ToeplitzHash::new(self.l_dim, self.k_dim, d))
            .collect()
    }

    /// Number of members mapping the difference `d` to zero, i.e. colliding on
    /// every pair with `x₁ ⊕ x₂ = d`.
    pub fn collision_count(members: &[LinearMap], d: u64) -> u64 {
        members.iter().filter(|f| f.apply(d) == 0).count() as u64
    }
}

/// Exact maximum over distinct input pairs of the collision probability under
/// a uniformly drawn member. For linear maps a pair collides iff its
/// difference lies in the kernel, so the maximum runs over nonzero `d`.
pub fn verify_two_universal(family: &HashFamily) -> Result<CollisionProfile> {
    let members = family.members()?;
    let mut profile = CollisionProfile {
        max_collisions: 0,
        members: members.len() as u64,
        worst_difference: 1,
    };
    for d in 1..1u64 << family.l_dim {
        let c = HashFamily::collision_count(&members, d);
        if c > profile.max_collisions {
            profile.max_collisions = c;
            profile.worst_difference = d;
        }
    }
    Ok(profile)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    #[test]
    fn small_example_by_hand() {
        let h = ToeplitzHash::from_diag_bits(3, 1, &[true, false]).unwrap();
        assert_eq!(h.linear_map().rows(), &[0b110]);
        assert_eq!(h.apply_bits(&[true, true, false]).unwrap(), vec![false]);
        assert_eq!(h.apply_bits(&[true, false, true]).unwrap(), vec![true]);
        assert_eq!(h.apply(0), 0);
    }

    #[test]
    fn toeplitz_structure() {
        // l = 5, k = 2: T is 2 x 3 with T[i][j] = d[j - i + 1]
        let h = ToeplitzHash::from_diag_bits(5, 2, &[true, false, true, true]).unwrap();
        // row 0: d1 d2 d3 = 0 1 1; row 1: d0 d1 d2 = 1 0 1
        assert_eq!(h.linear_map().rows(), &[0b10011, 0b01101]);
    }

    #[test]
    fn identity_hash() {
        let h = ToeplitzHash::identity(4).unwrap();
        for x in 0..16 {
            assert_eq!(h.apply(x), x);
            assert_eq!(h.preimages(x).collect::<Vec<_>>(), vec![x]);
        }
    }

    #[test]
    fn preimages_are_uniform_and_exact() {
        for l in 1..=6 {
            for k in 1..=l {
                for h in HashFamily::new(HashKind::Toeplitz, l, k).unwrap().toeplitz_members().unwrap() {
                    let mut hits = vec![0u32; 1 << l];
                    for m in 0..1u64 << k {
                        for x in h.preimages(m) {
                            assert_eq!(h.apply(x), m);
                            hits[x as usize] += 1;
                        }
                    }
                    assert!(hits.iter().all(|&c| c == 1));
                }
            }
        }
    }

    #[test]
    fn sampled_preimages_map_back() {
        let mut rng = rng::stream(7);
        let h = ToeplitzHash::random(16, 8, &mut rng).unwrap();
        for _ in 0..1000 {
            let m = rng.random::<u64>() & 0xff;
            assert_eq!(h.apply(h.sample_preimage(m, &mut rng)), m);
        }
    }

    #[test]
    fn seed_hex_round_trip() {
        let h = ToeplitzHash::new(16, 8, 0b101_0000_0000_0001).unwrap();
        assert_eq!(h.seed_hex(), "a002");
        assert_eq!(ToeplitzHash::from_seed_hex(16, 8, "a002").unwrap(), h);
        assert!(ToeplitzHash::from_seed_hex(16, 8, "a003").is_err());
    }

    #[test]
    fn rejects_bad_dimensions() {
        assert!(ToeplitzHash::new(3, 4, 0).is_err());
        assert!(ToeplitzHash::new(3, 0, 0).is_err());
        assert!(ToeplitzHash::new(3, 1, 0b100).is_err());
        let h = ToeplitzHash::new(3, 1, 0).unwrap();
        assert!(h.apply_bits(&[true]).is_err());
    }

    #[test]
    fn surjections_on_two_bits() {
        let fam = HashFamily::new(HashKind::AllLinearSurjections, 2, 1).unwrap();
        assert_eq!(fam.members().unwrap().len(), 3);
        let p = verify_two_universal(&fam).unwrap();
        assert_eq!((p.max_collisions, p.members), (1, 3));
    }

    #[test]
    fn toeplitz_four_two() {
        let p = verify_two_universal(&HashFamily::new(HashKind::Toeplitz, 4, 2).unwrap()).unwrap();
        assert_eq!(p.members, 8);
        assert!(p.within(2));
        assert_eq!(p.probability(), 0.25);
    }

    #[test]
    fn collision_pattern() {
        for l in 1..=6 {
            for k in 1..=l {
                let fam = HashFamily::new(HashKind::Toeplitz, l, k).unwrap();
                let members = fam.members().unwrap();
                for d in 1..1u64 << l {
                    let expected = if d & mask(l - k) == 0 { 0 } else { members.len() as u64 >> k };
                    assert_eq!(HashFamily::collision_count(&members, d), expected, "l={l} k={k} d={d}");
                }
            }
        }
    }

    #[test]
    fn large_family_is_not_enumerable() {
        let fam = HashFamily::new(HashKind::AllLinearSurjections, 8, 4).unwrap();
        assert!(!fam.enumerable());
        assert!(verify_two_universal(&fam).is_err());
    }
}
