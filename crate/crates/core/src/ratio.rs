//! Exact non-negative rationals. Success probabilities and expected attempt
//! counts are ratios of superposition weights, so they stay exact; floats
//! only appear at the reporting boundary.

use core::cmp::Ordering;
use core::fmt;

/// A reduced non-negative rational with a positive denominator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Ratio {
    num: u128,
    den: u128,
}

fn gcd(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

impl Ratio {
    pub const ZERO: Ratio = Ratio { num: 0, den: 1 };
    pub const ONE: Ratio = Ratio { num: 1, den: 1 };

    pub fn new(num: u128, den: u128) -> Ratio {
        assert!(den != 0, "zero denominator");
        if num == 0 {
            return Ratio::ZERO;
        }
        let g = gcd(num, den);
        Ratio {
            num: num / g,
            den: den / g,
        }
    }

    pub fn from_int(n: u64) -> Ratio {
        Ratio {
            num: n as u128,
            den: 1,
        }
    }

    pub fn num(&self) -> u128 {
        self.num
    }

    pub fn den(&self) -> u128 {
        self.den
    }

    pub fn is_zero(&self) -> bool {
        self.num == 0
    }

    /// Multiplicative inverse. Panics on zero.
    pub fn recip(&self) -> Ratio {
        assert!(self.num != 0, "reciprocal of zero");
        Ratio {
            num: self.den,
            den: self.num,
        }
    }

    pub fn add(&self, other: Ratio) -> Ratio {
        Ratio::new(
            self.num * other.den + other.num * self.den,
            self.den * other.den,
        )
    }

    pub fn mul(&self, other: Ratio) -> Ratio {
        // Cross-reduce before multiplying to keep intermediates small.
        let g1 = gcd(self.num, other.den).max(1);
        let g2 = gcd(other.num, self.den).max(1);
        Ratio::new(
            (self.num / g1) * (other.num / g2),
            (self.den / g2) * (other.den / g1),
        )
    }

    pub fn mul_int(&self, n: u64) -> Ratio {
        self.mul(Ratio::from_int(n))
    }

    pub fn add_int(&self, n: u64) -> Ratio {
        self.add(Ratio::from_int(n))
    }

    pub fn to_f64(&self) -> f64 {
        self.num as f64 / self.den as f64
    }

    /// Smallest integer >= the ratio.
    pub fn ceil(&self) -> u128 {
        self.num.div_ceil(self.den)
    }
}

impl PartialOrd for Ratio {
    fn partial_cmp(&self, other: &Ratio) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Ratio {
    fn cmp(&self, other: &Ratio) -> Ordering {
        // Reduced forms keep these products well inside u128 for the weight
        // magnitudes this crate produces.
        (self.num * other.den).cmp(&(other.num * self.den))
    }
}

impl fmt::Display for Ratio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den == 1 {
            write!(f, "{}", self.num)
        } else {
            write!(f, "{}/{}", self.num, self.den)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reduces_on_construction() {
        assert_eq!(Ratio::new(3, 32), Ratio::new(6, 64));
        assert_eq!(Ratio::new(8, 32), Ratio::new(1, 4));
        assert_eq!(Ratio::new(0, 5), Ratio::ZERO);
    }

    #[test]
    fn arithmetic() {
        let a = Ratio::new(1, 4);
        let b = Ratio::new(1, 2);
        assert_eq!(a.add(b), Ratio::new(3, 4));
        assert_eq!(a.mul(b), Ratio::new(1, 8));
        assert_eq!(Ratio::new(32, 3).ceil(), 11);
        assert_eq!(Ratio::new(3, 32).recip(), Ratio::new(32, 3));
    }

    #[test]
    fn ordering() {
        assert!(Ratio::new(3, 32) < Ratio::new(1, 4));
        assert!(Ratio::new(1, 2) > Ratio::new(127, 256));
    }
}
