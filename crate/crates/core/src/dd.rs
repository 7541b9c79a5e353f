//! Double-double arithmetic: each value is an unevaluated sum `hi + lo` of two
//! f64 words with `|lo| <= ulp(hi)/2`, giving roughly 106 bits of significand.
//!
//! This is the reference-precision substrate used by the accuracy sweeps and
//! the noise experiments. Only the operations those callers need are provided,
//! and every transcendental is restricted to an argument range where its error
//! stays below ~2^-100 relative. Nothing here is performance critical.

/// Unevaluated sum of two floats, `hi + lo`, normalized so that
/// `hi = fl(hi + lo)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Dd {
    pub hi: f64,
    pub lo: f64,
}

/// Knuth two-sum: exact error of a floating-point addition.
#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    let err = (a - (s - bb)) + (b - bb);
    (s, err)
}

/// Fast two-sum, valid when `|a| >= |b|` or either is zero.
#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let err = b - (s - a);
    (s, err)
}

/// Exact product via fused multiply-add.
#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    let err = a.mul_add(b, -p);
    (p, err)
}

/// ln(2) to double-double precision.
pub const LN2: Dd = Dd {
    hi: 0.693_147_180_559_945_3,
    lo: 2.319_046_813_846_299_6e-17,
};

impl Dd {
    pub const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };
    pub const ONE: Dd = Dd { hi: 1.0, lo: 0.0 };

    #[inline]
    pub fn from_f64(x: f64) -> Dd {
        Dd { hi: x, lo: 0.0 }
    }

    #[inline]
    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    #[inline]
    pub fn new(hi: f64, lo: f64) -> Dd {
        let (s, e) = quick_two_sum(hi, lo);
        Dd { hi: s, lo: e }
    }

    #[inline]
    pub fn neg(self) -> Dd {
        Dd { hi: -self.hi, lo: -self.lo }
    }

    #[inline]
    pub fn abs(self) -> Dd {
        if self.hi < 0.0 || (self.hi == 0.0 && self.lo < 0.0) {
            self.neg()
        } else {
            self
        }
    }

    pub fn add(self, other: Dd) -> Dd {
        let (s1, s2) = two_sum(self.hi, other.hi);
        let (t1, t2) = two_sum(self.lo, other.lo);
        let s2 = s2 + t1;
        let (s1, s2) = quick_two_sum(s1, s2);
        let s2 = s2 + t2;
        let (hi, lo) = quick_two_sum(s1, s2);
        Dd { hi, lo }
    }

    #[inline]
    pub fn sub(self, other: Dd) -> Dd {
        self.add(other.neg())
    }

    #[inline]
    pub fn add_f64(self, other: f64) -> Dd {
        self.add(Dd::from_f64(other))
    }

    pub fn mul(self, other: Dd) -> Dd {
        let (p1, p2) = two_prod(self.hi, other.hi);
        let p2 = p2 + self.hi * other.lo + self.lo * other.hi;
        let (hi, lo) = quick_two_sum(p1, p2);
        Dd { hi, lo }
    }

    #[inline]
    pub fn mul_f64(self, other: f64) -> Dd {
        let (p1, p2) = two_prod(self.hi, other);
        let p2 = p2 + self.lo * other;
        let (hi, lo) = quick_two_sum(p1, p2);
        Dd { hi, lo }
    }

    pub fn div(self, other: Dd) -> Dd {
        let q1 = self.hi / other.hi;
        let r = self.sub(other.mul_f64(q1));
        let q2 = r.hi / other.hi;
        let r = r.sub(other.mul_f64(q2));
        let q3 = r.hi / other.hi;
        let (s, e) = quick_two_sum(q1, q2);
        Dd::new(s, e + q3)
    }

    #[inline]
    pub fn recip(self) -> Dd {
        Dd::ONE.div(self)
    }

    /// Multiply by an exact power of two. Exact while both words stay normal.
    pub fn scale2(self, k: i32) -> Dd {
        let f = exact_pow2(k);
        Dd { hi: self.hi * f, lo: self.lo * f }
    }

    #[inline]
    pub fn is_positive(self) -> bool {
        self.hi > 0.0 || (self.hi == 0.0 && self.lo > 0.0)
    }

    /// e^self for |self| <= 709, via 2^n * e^r with |r| <= ln2/2 and a Taylor
    /// tail on r. Relative error stays near 2^-104.
    pub fn exp(self) -> Dd {
        if self.hi == 0.0 && self.lo == 0.0 {
            return Dd::ONE;
        }
        debug_assert!(self.hi.abs() <= 709.8, "exp argument out of supported range");
        let n = (self.hi / LN2.hi).round();
        let r = self.sub(LN2.mul_f64(n));
        let mut sum = Dd::ONE.add(r);
        let mut term = r;
        let mut k = 2.0f64;
        loop {
            term = term.mul(r).div(Dd::from_f64(k));
            sum = sum.add(term);
            if term.hi.abs() <= sum.hi.abs() * 1e-35 {
                break;
            }
            k += 1.0;
            debug_assert!(k < 60.0);
        }
        sum.scale2(n as i32)
    }

    /// e^self - 1 for |self| <= 0.75, by direct Taylor series, preserving
    /// relative accuracy near zero.
    pub fn expm1(self) -> Dd {
        debug_assert!(self.hi.abs() <= 0.75, "expm1 argument out of supported range");
        if self.hi == 0.0 && self.lo == 0.0 {
            return Dd::ZERO;
        }
        let mut sum = self;
        let mut term = self;
        let mut k = 2.0f64;
        loop {
            term = term.mul(self).div(Dd::from_f64(k));
            sum = sum.add(term);
            if term.hi.abs() <= sum.hi.abs() * 1e-35 {
                break;
            }
            k += 1.0;
            debug_assert!(k < 60.0);
        }
        sum
    }

    /// Natural log of a positive value: exponent split plus the atanh series
    /// ln(m) = 2 atanh((m-1)/(m+1)) on the mantissa in [1, 2).
    pub fn ln(self) -> Dd {
        assert!(self.hi > 0.0, "ln of non-positive value");
        let e = exponent_of(self.hi);
        let m = self.scale2(-e);
        // m in [1, 2)
        let z = m.sub(Dd::ONE).div(m.add(Dd::ONE));
        let z2 = z.mul(z);
        let mut sum = z;
        let mut term = z;
        let mut k = 3.0f64;
        loop {
            term = term.mul(z2);
            let contrib = term.div(Dd::from_f64(k));
            sum = sum.add(contrib);
            if contrib.hi.abs() <= sum.hi.abs() * 1e-35 {
                break;
            }
            k += 2.0;
            debug_assert!(k < 130.0);
        }
        sum.scale2(1).add(LN2.mul_f64(e as f64))
    }

    /// ln(1 + self) for self in [0, 1], keeping relative accuracy for tiny
    /// arguments via the atanh form.
    pub fn ln1p(self) -> Dd {
        debug_assert!(self.hi >= 0.0 && self.hi <= 1.0);
        if self.hi == 0.0 && self.lo == 0.0 {
            return Dd::ZERO;
        }
        if self.hi > 0.5 {
            return Dd::ONE.add(self).ln();
        }
        let z = self.div(self.add_f64(2.0));
        let z2 = z.mul(z);
        let mut sum = z;
        let mut term = z;
        let mut k = 3.0f64;
        loop {
            term = term.mul(z2);
            let contrib = term.div(Dd::from_f64(k));
            sum = sum.add(contrib);
            if contrib.hi.abs() <= sum.hi.abs() * 1e-35 {
                break;
            }
            k += 2.0;
            debug_assert!(k < 80.0);
        }
        sum.scale2(1)
    }
}

/// 2^k as an exact f64 for |k| <= 1023, composed for the wider range the
/// scaled callers need.
fn exact_pow2(k: i32) -> f64 {
    if (-1022..=1023).contains(&k) {
        f64::from_bits(((1023 + k) as u64) << 52)
    } else if k > 0 {
        let half = exact_pow2(k / 2);
        half * exact_pow2(k - k / 2)
    } else {
        let half = exact_pow2(k / 2);
        half * exact_pow2(k - k / 2)
    }
}

/// Unbiased binary exponent of a positive normal f64.
fn exponent_of(x: f64) -> i32 {
    debug_assert!(x > 0.0 && x.is_normal());
    ((x.to_bits() >> 52) & 0x7ff) as i32 - 1023
}
