//! Log-scaled nonnegative values, a deterministic PRNG, and small hashing
//! utilities shared across the crate.
//!
//! Return probabilities decay like λⁿ and underflow plain doubles for large
//! n, so every user-facing probability is carried as a mantissa together
//! with an explicit log-scale factor.

/// A nonnegative quantity stored as `mantissa · exp(log_scale)`.
///
/// `mantissa == 0.0` represents exact zero regardless of the scale.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LogValue {
    pub mantissa: f64,
    pub log_scale: f64,
}

impl LogValue {
    pub const ZERO: LogValue = LogValue {
        mantissa: 0.0,
        log_scale: 0.0,
    };

    pub fn new(mantissa: f64, log_scale: f64) -> Self {
        debug_assert!(mantissa >= 0.0);
        LogValue {
            mantissa,
            log_scale,
        }
    }

    pub fn from_f64(value: f64) -> Self {
        debug_assert!(value >= 0.0);
        LogValue {
            mantissa: value,
            log_scale: 0.0,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.mantissa == 0.0
    }

    /// Collapses to a plain double; underflows to 0 when the scale is very
    /// negative, which is exactly the failure mode lookups avoid by keeping
    /// the pair around.
    pub fn value(&self) -> f64 {
        self.mantissa * self.log_scale.exp()
    }

    /// Natural log; `-inf` for zero.
    pub fn ln(&self) -> f64 {
        if self.is_zero() {
            f64::NEG_INFINITY
        } else {
            self.mantissa.ln() + self.log_scale
        }
    }

    /// Base-10 log; `-inf` for zero. This is the form reports carry.
    pub fn log10(&self) -> f64 {
        self.ln() / std::f64::consts::LN_10
    }

    /// Ratio of two log-scaled values as a plain double.
    pub fn ratio(num: LogValue, den: LogValue) -> f64 {
        if num.is_zero() {
            return 0.0;
        }
        (num.ln() - den.ln()).exp()
    }
}

/// Streaming log-sum-exp accumulator: Σ exp(term) held as
/// `running_sum · exp(max_log)` so arbitrarily large or small log-terms add
/// without overflow.
#[derive(Clone, Copy, Debug)]
pub struct LogSumExp {
    max_log: f64,
    sum: f64,
}

impl LogSumExp {
    pub fn new() -> Self {
        LogSumExp {
            max_log: f64::NEG_INFINITY,
            sum: 0.0,
        }
    }

    pub fn add_log_term(&mut self, log_term: f64) {
        if log_term == f64::NEG_INFINITY {
            return;
        }
        if log_term <= self.max_log {
            self.sum += (log_term - self.max_log).exp();
        } else {
            self.sum = self.sum * (self.max_log - log_term).exp() + 1.0;
            self.max_log = log_term;
        }
    }

    /// log of the accumulated sum; `-inf` when nothing was added.
    pub fn ln(&self) -> f64 {
        if self.sum == 0.0 {
            f64::NEG_INFINITY
        } else {
            self.max_log + self.sum.ln()
        }
    }

    pub fn to_log_value(&self) -> LogValue {
        if self.sum == 0.0 {
            LogValue::ZERO
        } else {
            LogValue::new(self.sum, self.max_log)
        }
    }
}

impl Default for LogSumExp {
    fn default() -> Self {
        Self::new()
    }
}

/// SplitMix64: the fixed, documented generator behind every seeded draw in
/// the crate. Output is identical on all platforms; streams are reproducible
/// from the seed alone.
#[derive(Clone, Debug)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64 { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform in [0, 1) with 53 bits of precision.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in [-1, 1).
    pub fn next_symmetric(&mut self) -> f64 {
        2.0 * self.next_f64() - 1.0
    }
}

/// FNV-1a 64-bit hash; used for cache keys and config content hashes.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x0000_0100_0000_01B3);
    }
    hash
}

/// Lowercase hex of a byte string.
pub fn to_hex(bytes: &[u8]) -> String {
    let mut s = String::with_capacity(bytes.len() * 2);
    for &b in bytes {
        s.push(char::from_digit((b >> 4) as u32, 16).unwrap());
        s.push(char::from_digit((b & 0xf) as u32, 16).unwrap());
    }
    s
}

/// Inverse of [`to_hex`]; `None` on odd length or non-hex characters.
pub fn from_hex(s: &str) -> Option<Vec<u8>> {
    if !s.len().is_multiple_of(2) {
        return None;
    }
    let digits: Option<Vec<u8>> = s.chars().map(|c| c.to_digit(16).map(|d| d as u8)).collect();
    let digits = digits?;
    Some(digits.chunks(2).map(|p| (p[0] << 4) | p[1]).collect())
}

/// Ordinary least squares fit y = intercept + slope·x.
///
/// Returns `(intercept, slope)`; `None` when fewer than two distinct x.
pub fn least_squares(points: &[(f64, f64)]) -> Option<(f64, f64)> {
    let n = points.len() as f64;
    if points.len() < 2 {
        return None;
    }
    let mean_x = points.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mean_x).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = points.iter().map(|p| (p.0 - mean_x) * (p.1 - mean_y)).sum();
    let slope = sxy / sxx;
    Some((mean_y - slope * mean_x, slope))
}
