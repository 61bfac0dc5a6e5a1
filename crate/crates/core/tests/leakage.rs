//! Exact leakage cross-checked against a plain summation written out here.

use proptest::prelude::*;
use wiretap_core::channels::{DiscreteChannel, PrefixChannel};
use wiretap_core::optimize::Construction;
use wiretap_core::oracle::exact_leakage;
use wiretap_core::{CosetEncoderFamily, LinearCode, ToeplitzHash, WiretapCode};

const G0: u64 = 0b1011;
const G1: u64 = 0b0101;

fn toy(g: u64, diag: u64) -> WiretapCode {
    let family = CosetEncoderFamily::new(LinearCode::new(4, vec![G0, G1]).unwrap()).unwrap();
    let hash = ToeplitzHash::new(2, 1, diag).unwrap();
    WiretapCode::new(Construction::Randomized, family, hash, PrefixChannel::identity(2).unwrap(), g).unwrap()
}

/// I(M;Z) with M = l0 xor d*l1 and codeword l0*G0 xor l1*G1 xor leader,
/// summed directly over messages and all 16 outputs.
fn direct(eve: &[[f64; 2]; 2], leader: u64, diag: u64) -> f64 {
    let mut p_zm = [[0.0f64; 16]; 2];
    for l in 0u64..4 {
        let (l0, l1) = (l >> 1, l & 1);
        let m = (l0 ^ (diag & l1)) as usize;
        let x = (if l0 == 1 { G0 } else { 0 }) ^ (if l1 == 1 { G1 } else { 0 }) ^ leader;
        for z in 0..16u64 {
            let mut p = 1.0;
            for i in 0..4 {
                let xi = ((x >> (3 - i)) & 1) as usize;
                let zi = ((z >> (3 - i)) & 1) as usize;
                p *= eve[xi][zi];
            }
            // two preimages per message, each with probability 1/2
            p_zm[m][z as usize] += p / 2.0;
        }
    }
    let mut info = 0.0;
    for z in 0..16 {
        let pz = (p_zm[0][z] + p_zm[1][z]) / 2.0;
        for row in &p_zm {
            if row[z] > 0.0 {
                info += 0.5 * row[z] * (row[z] / pz).ln();
            }
        }
    }
    info
}

#[test]
fn four_two_code_over_bsc02() {
    let eve = [[0.8, 0.2], [0.2, 0.8]];
    let ch = DiscreteChannel::new(eve.iter().map(|r| r.to_vec()).collect()).unwrap();
    for diag in 0..2 {
        for g in 0..4 {
            let wt = toy(g, diag);
            let got = exact_leakage(&wt, &ch).unwrap().value;
            let want = direct(&eve, wt.family().leader(g), diag);
            assert!((got - want).abs() < 1e-14, "g = {g}, d = {diag}: {got} vs {want}");
            assert!(got > 0.0 && got < std::f64::consts::LN_2);
        }
    }
}

fn bsc_rows(p: f64) -> [[f64; 2]; 2] {
    [[1.0 - p, p], [p, 1.0 - p]]
}

proptest! {
    #[test]
    fn matches_direct_sum(p in 0.0f64..0.5, g in 0u64..4, diag in 0u64..2) {
        let eve = bsc_rows(p);
        let ch = DiscreteChannel::bsc(p).unwrap();
        let wt = toy(g, diag);
        let got = exact_leakage(&wt, &ch).unwrap().value;
        prop_assert!((got - direct(&eve, wt.family().leader(g), diag)).abs() < 1e-12);
    }

    #[test]
    fn output_relabeling_and_merging(a in 0.01f64..0.99, b in 0.01f64..0.99, c in 0.01f64..0.99, g in 0u64..4) {
        let rows = vec![vec![a, 1.0 - a, 0.0], vec![0.0, b * c, 1.0 - b * c]];
        let ch = DiscreteChannel::new(rows).unwrap();
        let wt = toy(g, 1);
        let base = exact_leakage(&wt, &ch).unwrap().value;
        let permuted = exact_leakage(&wt, &ch.permute_outputs(&[2, 0, 1]).unwrap()).unwrap().value;
        prop_assert!((base - permuted).abs() < 1e-12);
        let merged = exact_leakage(&wt, &ch.merge_outputs(&[0, 1, 1]).unwrap()).unwrap().value;
        prop_assert!(merged <= base + 1e-12);
        prop_assert!(base >= -1e-15 && base <= std::f64::consts::LN_2 + 1e-12);
    }
}
