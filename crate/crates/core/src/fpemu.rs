//! Software emulation of low-precision floating-point formats.
//!
//! A value "in format f" is an `f64` that is exactly representable in f.
//! [`round_scalar`] maps any `f64` to the nearest such value under
//! round-to-nearest, ties-to-even, with IEEE overflow and gradual underflow.

use crate::error::{Error, Result};
use std::fmt;

/// A binary floating-point format described by its field widths.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FloatFormat {
    pub name: &'static str,
    pub exponent_bits: u32,
    /// Explicitly stored significand bits (the implicit leading one excluded).
    pub significand_bits: u32,
    pub supports_subnormals: bool,
    /// Width quoted for the format in hardware tables; tf32 is a 19-bit
    /// format held in 32-bit registers.
    pub storage_bits: u32,
    /// Largest finite value when the format reserves encodings beyond the
    /// IEEE pattern (fp8-e4m3 keeps only one NaN pattern and tops out at 448).
    max_finite_override: Option<f64>,
    /// Dense tensor-core throughput on an H100, display metadata only.
    pub tflops: u32,
}

pub const FP64: FloatFormat = FloatFormat::ieee("fp64", 11, 52, 64, 67);
pub const FP32: FloatFormat = FloatFormat::ieee("fp32", 8, 23, 32, 989);
pub const TF32: FloatFormat = FloatFormat::ieee("tf32", 8, 10, 19, 989);
pub const FP16: FloatFormat = FloatFormat::ieee("fp16", 5, 10, 16, 1979);
pub const BF16: FloatFormat = FloatFormat::ieee("bf16", 8, 7, 16, 1979);
pub const FP8_E5M2: FloatFormat = FloatFormat::ieee("fp8-e5m2", 5, 2, 8, 3958);
pub const FP8_E4M3: FloatFormat = FloatFormat {
    max_finite_override: Some(448.0),
    ..FloatFormat::ieee("fp8-e4m3", 4, 3, 8, 3958)
};

/// The seven formats of the H100 format table, widest first.
pub fn builtin_formats() -> Vec<FloatFormat> {
    vec![FP64, FP32, TF32, FP16, BF16, FP8_E5M2, FP8_E4M3]
}

impl FloatFormat {
    const fn ieee(
        name: &'static str,
        exponent_bits: u32,
        significand_bits: u32,
        storage_bits: u32,
        tflops: u32,
    ) -> Self {
        FloatFormat {
            name,
            exponent_bits,
            significand_bits,
            supports_subnormals: true,
            storage_bits,
            max_finite_override: None,
            tflops,
        }
    }

    /// Looks up a built-in format by name (case-insensitive; `half`,
    /// `single`, `double` are accepted as aliases).
    pub fn by_name(name: &str) -> Result<FloatFormat> {
        let key = name.trim().to_ascii_lowercase();
        let key = match key.as_str() {
            "double" => "fp64",
            "single" => "fp32",
            "half" => "fp16",
            "fp8" | "e4m3" => "fp8-e4m3",
            "e5m2" => "fp8-e5m2",
            other => other,
        };
        builtin_formats()
            .into_iter()
            .find(|f| f.name == key)
            .ok_or_else(|| Error::UnknownFormat(name.to_string()))
    }

    /// Parses a comma-separated list of format names.
    pub fn parse_list(list: &str) -> Result<Vec<FloatFormat>> {
        list.split(',')
            .filter(|s| !s.trim().is_empty())
            .map(FloatFormat::by_name)
            .collect()
    }

    /// `u = 2^-(t+1)` for `t` stored significand bits.
    pub fn unit_roundoff(&self) -> f64 {
        pow2(-(self.significand_bits as i32 + 1))
    }

    /// Exponent bias, `2^(e-1) - 1`.
    pub fn exponent_offset(&self) -> i32 {
        (1i32 << (self.exponent_bits - 1)) - 1
    }

    /// Exponent of the smallest normal number.
    pub fn emin(&self) -> i32 {
        1 - self.exponent_offset()
    }

    pub fn min_normal(&self) -> f64 {
        pow2(self.emin())
    }

    pub fn min_subnormal(&self) -> f64 {
        pow2(self.emin() - self.significand_bits as i32)
    }

    pub fn max_finite(&self) -> f64 {
        match self.max_finite_override {
            Some(m) => m,
            None => {
                let t = self.significand_bits as i32;
                // (2 - 2^-t) * 2^offset, written to stay finite for fp64.
                (2.0 - pow2(-t)) * pow2(self.exponent_offset() - 1) * 2.0
            }
        }
    }

    /// The host format; rounding to it is the identity.
    pub fn is_native(&self) -> bool {
        self.exponent_bits == 11 && self.significand_bits == 52
    }

    /// Decimal order of magnitude of the representable range, `10^±d`, as
    /// quoted in format tables (taken from the smallest normal number).
    pub fn range_decades(&self) -> i32 {
        -self.min_normal().log10().floor() as i32
    }
}

impl fmt::Display for FloatFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name)
    }
}

/// Smallest normal and largest finite magnitude of `fmt`.
pub fn format_range(fmt: FloatFormat) -> (f64, f64) {
    (fmt.min_normal(), fmt.max_finite())
}

#[inline]
fn pow2(e: i32) -> f64 {
    debug_assert!((-1022..=1023).contains(&e));
    f64::from_bits(((e + 1023) as u64) << 52)
}

/// Result of rounding one value, with the range events it triggered.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rounded {
    pub value: f64,
    /// A finite input became infinite.
    pub overflow: bool,
    /// A nonzero input became zero.
    pub underflow: bool,
}

/// Rounds `x` to the nearest value of `fmt`, ties to even.
#[inline]
pub fn round_scalar(x: f64, fmt: FloatFormat) -> f64 {
    if fmt.is_native() {
        return x;
    }
    if fmt.exponent_bits == 8 && fmt.significand_bits == 23 {
        // The host conversion is a correctly rounded IEEE narrowing.
        return x as f32 as f64;
    }
    round_generic(x, fmt)
}

/// Round-half-even to an integer for `|y| < 2^52`, which always holds
/// after the scaling below. Adding and removing `2^52` makes the host's
/// own rounding do the work without a libm call.
#[inline(always)]
fn rint(y: f64) -> f64 {
    const MAGIC: f64 = 4503599627370496.0;
    let a = y.abs();
    ((a + MAGIC) - MAGIC).copysign(y)
}

#[inline]
fn round_generic(x: f64, fmt: FloatFormat) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    let biased = ((x.to_bits() >> 52) & 0x7ff) as i32;
    // floor(log2|x|); host subnormals sit far below every emulated emin.
    let e = if biased == 0 { -1023 } else { biased - 1023 };
    let emin = fmt.emin();
    let r = if e >= emin {
        // Normal range: round the bit pattern to t fraction bits. A carry
        // out of the fraction correctly bumps the exponent.
        let drop = 52 - fmt.significand_bits;
        let bits = x.to_bits();
        let half = (1u64 << (drop - 1)) - 1 + ((bits >> drop) & 1);
        f64::from_bits((bits + half) & !((1u64 << drop) - 1))
    } else {
        // Scale so the spacing of fmt around x is exactly 1, round, scale back.
        let shift = fmt.significand_bits as i32 - emin;
        rint(x * pow2(shift)) * pow2(-shift)
    };
    if r.abs() > fmt.max_finite() {
        return f64::INFINITY.copysign(x);
    }
    if !fmt.supports_subnormals && r.abs() < fmt.min_normal() {
        return 0.0f64.copysign(x);
    }
    // Keep the sign of values that round to zero.
    if r == 0.0 {
        0.0f64.copysign(x)
    } else {
        r
    }
}

/// [`round_scalar`] with overflow/underflow flags.
pub fn round_scalar_flagged(x: f64, fmt: FloatFormat) -> Rounded {
    let value = round_scalar(x, fmt);
    Rounded {
        value,
        overflow: x.is_finite() && value.is_infinite(),
        underflow: x != 0.0 && value == 0.0,
    }
}

/// Counts of range events raised while rounding a collection.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RoundingEvents {
    pub overflow: usize,
    pub underflow: usize,
}

impl RoundingEvents {
    #[inline]
    pub fn record(&mut self, before: f64, after: f64) {
        if before.is_finite() && after.is_infinite() {
            self.overflow += 1;
        }
        if before != 0.0 && after == 0.0 {
            self.underflow += 1;
        }
    }

    pub fn merge(&mut self, other: RoundingEvents) {
        self.overflow += other.overflow;
        self.underflow += other.underflow;
    }

    pub fn is_clean(&self) -> bool {
        self.overflow == 0 && self.underflow == 0
    }
}

/// Rounds every element in place and reports range events.
pub fn round_slice(values: &mut [f64], fmt: FloatFormat) -> RoundingEvents {
    let mut events = RoundingEvents::default();
    if fmt.is_native() {
        return events;
    }
    for v in values.iter_mut() {
        let r = round_scalar(*v, fmt);
        events.record(*v, r);
        *v = r;
    }
    events
}

/// Containers whose entries can be rounded elementwise.
pub trait Roundable: Sized {
    fn rounded(&self, fmt: FloatFormat) -> (Self, RoundingEvents);
}

impl Roundable for Vec<f64> {
    fn rounded(&self, fmt: FloatFormat) -> (Self, RoundingEvents) {
        let mut out = self.clone();
        let events = round_slice(&mut out, fmt);
        (out, events)
    }
}

/// Elementwise rounding of a dense or sparse matrix (sparsity is kept,
/// including entries that underflow to zero).
pub fn round_matrix<M: Roundable>(m: &M, fmt: FloatFormat) -> (M, RoundingEvents) {
    m.rounded(fmt)
}

/// The precision attached to a computation: every arithmetic result is
/// rounded to `fmt`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrecisionContext {
    pub fmt: FloatFormat,
}

impl PrecisionContext {
    pub const fn new(fmt: FloatFormat) -> Self {
        PrecisionContext { fmt }
    }

    pub const fn fp64() -> Self {
        PrecisionContext { fmt: FP64 }
    }

    #[inline]
    pub fn is_native(&self) -> bool {
        self.fmt.is_native()
    }

    #[inline]
    pub fn u(&self) -> f64 {
        self.fmt.unit_roundoff()
    }

    #[inline]
    pub fn round(&self, x: f64) -> f64 {
        round_scalar(x, self.fmt)
    }

    #[inline]
    pub fn add(&self, a: f64, b: f64) -> f64 {
        self.round(a + b)
    }

    #[inline]
    pub fn sub(&self, a: f64, b: f64) -> f64 {
        self.round(a - b)
    }

    #[inline]
    pub fn mul(&self, a: f64, b: f64) -> f64 {
        self.round(a * b)
    }

    #[inline]
    pub fn div(&self, a: f64, b: f64) -> f64 {
        self.round(a / b)
    }

    #[inline]
    pub fn sqrt(&self, a: f64) -> f64 {
        self.round(a.sqrt())
    }

    /// `acc + a*b` with the product and the sum each rounded (no fused
    /// multiply-add).
    #[inline]
    pub fn mul_add(&self, acc: f64, a: f64, b: f64) -> f64 {
        self.round(acc + self.round(a * b))
    }

    /// Sequential left-to-right dot product.
    pub fn dot(&self, x: &[f64], y: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), y.len());
        if self.is_native() {
            return x.iter().zip(y).fold(0.0, |acc, (a, b)| acc + a * b);
        }
        x.iter().zip(y).fold(0.0, |acc, (&a, &b)| self.mul_add(acc, a, b))
    }

    /// Euclidean norm with every operation rounded.
    pub fn norm2(&self, x: &[f64]) -> f64 {
        self.sqrt(self.dot(x, x))
    }

    /// `y <- y + alpha*x`.
    pub fn axpy(&self, alpha: f64, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), y.len());
        if self.is_native() {
            for (yi, xi) in y.iter_mut().zip(x) {
                *yi += alpha * xi;
            }
        } else {
            for (yi, &xi) in y.iter_mut().zip(x) {
                *yi = self.mul_add(*yi, alpha, xi);
            }
        }
    }

    /// `x <- alpha*x`.
    pub fn scale(&self, alpha: f64, x: &mut [f64]) {
        for xi in x.iter_mut() {
            *xi = self.mul(alpha, *xi);
        }
    }

    /// Rounds every element of `x` to the context format.
    pub fn round_vec(&self, x: &[f64]) -> Vec<f64> {
        x.iter().map(|&v| self.round(v)).collect()
    }
}

impl From<FloatFormat> for PrecisionContext {
    fn from(fmt: FloatFormat) -> Self {
        PrecisionContext::new(fmt)
    }
}
