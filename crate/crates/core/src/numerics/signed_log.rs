/// A real number stored as `sign * exp(log_magnitude)`.
///
/// Zero is represented by `sign == 0` together with `log_magnitude == -inf`;
/// the constructors keep the two in step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignedLogValue {
    log_magnitude: f64,
    sign: i8,
}

impl SignedLogValue {
    pub const ZERO: Self = Self {
        log_magnitude: f64::NEG_INFINITY,
        sign: 0,
    };

    pub const ONE: Self = Self {
        log_magnitude: 0.0,
        sign: 1,
    };

    /// Builds a value from a sign (any sign of `sign` counts) and a log
    /// magnitude. A zero sign or a `-inf` magnitude both give zero.
    pub fn new(sign: i8, log_magnitude: f64) -> Self {
        if sign == 0 || log_magnitude == f64::NEG_INFINITY {
            Self::ZERO
        } else {
            Self {
                log_magnitude,
                sign: sign.signum(),
            }
        }
    }

    pub fn positive(log_magnitude: f64) -> Self {
        Self::new(1, log_magnitude)
    }

    pub fn from_f64(x: f64) -> Self {
        if x == 0.0 {
            Self::ZERO
        } else {
            Self::new(if x > 0.0 { 1 } else { -1 }, x.abs().ln())
        }
    }

    pub fn to_f64(self) -> f64 {
        f64::from(self.sign) * self.log_magnitude.exp()
    }

    pub fn log_magnitude(self) -> f64 {
        self.log_magnitude
    }

    pub fn sign(self) -> i8 {
        self.sign
    }

    pub fn is_zero(self) -> bool {
        self.sign == 0
    }

    /// Multiplies by `exp(log_factor)`.
    pub fn scale_log(self, log_factor: f64) -> Self {
        Self::new(self.sign, self.log_magnitude + log_factor)
    }
}

impl std::ops::Mul for SignedLogValue {
    type Output = Self;

    fn mul(self, other: Self) -> Self {
        Self::new(
            self.sign * other.sign,
            self.log_magnitude + other.log_magnitude,
        )
    }
}

impl std::ops::Neg for SignedLogValue {
    type Output = Self;

    fn neg(self) -> Self {
        Self::new(-self.sign, self.log_magnitude)
    }
}

/// Streaming log-sum-exp for one sign.
#[derive(Debug, Clone, Copy)]
struct OneSided {
    max: f64,
    scaled_sum: f64,
}

impl OneSided {
    const EMPTY: Self = Self {
        max: f64::NEG_INFINITY,
        scaled_sum: 0.0,
    };

    fn add(&mut self, l: f64) {
        if l <= self.max {
            self.scaled_sum += (l - self.max).exp();
        } else {
            self.scaled_sum = self.scaled_sum * (self.max - l).exp() + 1.0;
            self.max = l;
        }
    }

    fn ln(&self) -> f64 {
        if self.max == f64::NEG_INFINITY {
            f64::NEG_INFINITY
        } else {
            self.max + self.scaled_sum.ln()
        }
    }
}

/// Accumulates signed terms in the log domain; positive and negative parts
/// are summed separately and combined once on [`value`](Self::value).
#[derive(Debug, Clone, Copy)]
pub struct SignedLogAccumulator {
    pos: OneSided,
    neg: OneSided,
}

impl Default for SignedLogAccumulator {
    fn default() -> Self {
        Self::new()
    }
}

impl SignedLogAccumulator {
    pub fn new() -> Self {
        Self {
            pos: OneSided::EMPTY,
            neg: OneSided::EMPTY,
        }
    }

    pub fn add(&mut self, term: SignedLogValue) {
        match term.sign {
            1 => self.pos.add(term.log_magnitude),
            -1 => self.neg.add(term.log_magnitude),
            _ => {}
        }
    }

    pub fn value(&self) -> SignedLogValue {
        let lp = self.pos.ln();
        let ln = self.neg.ln();
        if lp == ln {
            return SignedLogValue::ZERO;
        }
        if lp > ln {
            SignedLogValue::new(1, lp + (-(ln - lp).exp()).ln_1p())
        } else {
            SignedLogValue::new(-1, ln + (-(lp - ln).exp()).ln_1p())
        }
    }
}

/// Sum of signed log-domain terms. The result is zero only for empty input
/// or exact cancellation.
pub fn signed_log_sum<I>(terms: I) -> SignedLogValue
where
    I: IntoIterator<Item = SignedLogValue>,
{
    let mut acc = SignedLogAccumulator::new();
    for t in terms {
        acc.add(t);
    }
    acc.value()
}
