//! Emulated binary16 and bfloat16 rounding against independent references.
//!
//! Two oracles: a nearest-neighbour search over the 2^16 encodings with
//! exact midpoint comparisons (any `f64` input), and the `half` crate's
//! `f32` conversions (inputs that are exact `f32` values; its `f64` entry
//! points round through narrower intermediates and are not used).

use half::{bf16, f16};
use mpbal_core::fpemu::{round_scalar, BF16, FP16};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Positive finite binary16 values in encoding order.
fn positive_values() -> Vec<f64> {
    (0u16..=0x7bff).map(|b| f16::from_bits(b).to_f64()).collect()
}

/// Round to nearest, ties to the even encoding, by bracketing `|x|`
/// between consecutive values. Midpoints of binary16 neighbours are exact
/// in `f64`.
fn nearest16(table: &[f64], x: f64) -> f64 {
    if x.is_nan() {
        return x;
    }
    let a = x.abs();
    let r = if a >= 65520.0 {
        f64::INFINITY
    } else if a >= 65504.0 {
        65504.0
    } else {
        let hi = table.partition_point(|&v| v <= a);
        let lo = hi - 1;
        let mid = 0.5 * (table[lo] + table[hi]);
        if a < mid || (a == mid && lo % 2 == 0) {
            table[lo]
        } else {
            table[hi]
        }
    };
    r.copysign(x)
}

fn same(a: f64, b: f64) -> bool {
    a.to_bits() == b.to_bits() || (a.is_nan() && b.is_nan())
}

/// Midpoints between neighbouring binary16 values and their `f64`
/// neighbours, from the subnormal range up to the overflow threshold.
fn ties(table: &[f64]) -> Vec<f64> {
    let mut out = vec![];
    for w in table.windows(2) {
        let mid = 0.5 * (w[0] + w[1]);
        out.extend([mid, -mid, mid.next_up(), mid.next_down()]);
    }
    out.extend([65504.0, 65519.99, 65520.0, 65520f64.next_down(), 65536.0, 2f64.powi(-25), 2f64.powi(-26)]);
    out
}

#[test]
fn oracles_agree_on_f32_inputs() {
    let table = positive_values();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..100_000 {
        let x = f32::from_bits(rng.gen::<u32>());
        if !x.is_finite() {
            continue;
        }
        let h = f16::from_f32(x).to_f64();
        assert!(same(nearest16(&table, x as f64), h), "x = {x:e}");
    }
}

#[test]
fn every_binary16_tie_and_neighbour() {
    let table = positive_values();
    for x in ties(&table) {
        assert!(same(round_scalar(x, FP16), nearest16(&table, x)), "x = {x:e}");
    }
}

#[test]
fn every_binary16_value_is_fixed() {
    for bits in 0u16..=u16::MAX {
        let v = f16::from_bits(bits).to_f64();
        assert!(same(round_scalar(v, FP16), v), "bits = {bits:#06x}");
    }
}

#[test]
fn million_sampled_reals() {
    let table = positive_values();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut mismatches = 0;
    for i in 0..1_000_000 {
        let x = match i % 4 {
            // Log-uniform over subnormals, normals and past overflow.
            0 | 1 => {
                let e: f64 = rng.gen_range(-30.0..17.0);
                rng.gen_range(1.0..2.0) * 2f64.powf(e)
            }
            // Exact ties.
            2 => {
                let k = rng.gen_range(0..table.len() - 1);
                0.5 * (table[k] + table[k + 1])
            }
            // Around the overflow boundary.
            _ => rng.gen_range(65000.0..66000.0),
        };
        let x = if rng.gen_bool(0.5) { -x } else { x };
        if !same(round_scalar(x, FP16), nearest16(&table, x)) {
            mismatches += 1;
        }
    }
    assert_eq!(mismatches, 0);
}

#[test]
fn bfloat16_on_f32_inputs() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..200_000 {
        let x = f32::from_bits(rng.gen::<u32>());
        if !x.is_finite() {
            continue;
        }
        let expect = bf16::from_f32(x).to_f64();
        assert!(same(round_scalar(x as f64, BF16), expect), "x = {x:e}");
    }
}

proptest! {
    #[test]
    fn agrees_with_half_on_f32(x in proptest::num::f32::NORMAL | proptest::num::f32::SUBNORMAL | proptest::num::f32::ZERO) {
        prop_assert!(same(round_scalar(x as f64, FP16), f16::from_f32(x).to_f64()));
    }

    #[test]
    fn idempotent(x in -7e4f64..7e4) {
        let r = round_scalar(x, FP16);
        prop_assert!(same(round_scalar(r, FP16), r));
    }

    #[test]
    fn monotone(a in -7e4f64..7e4, b in -7e4f64..7e4) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(round_scalar(lo, FP16) <= round_scalar(hi, FP16));
    }

    #[test]
    fn odd_symmetric(x in -7e4f64..7e4) {
        prop_assert!(same(round_scalar(-x, FP16), -round_scalar(x, FP16)));
    }

    #[test]
    fn relative_error_in_normal_range(m in 1.0f64..2.0, e in -14i32..16) {
        let x = m * 2f64.powi(e);
        let r = round_scalar(x, FP16);
        prop_assert!(((r - x) / x).abs() <= 2f64.powi(-11));
    }
}
