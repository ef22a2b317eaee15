//! Polynomials over a prime field `F_p` with `p < 2^32`.

use super::rational::Rational;
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{ToPrimitive, Zero};

/// Primes just below 2^31 used in order by the degree probe.
pub const PRIMES: [u64; 4] = [2_147_483_647, 2_147_483_629, 2_147_483_587, 2_147_483_579];

pub fn pow_mod(mut b: u64, mut e: u64, p: u64) -> u64 {
    let mut r = 1 % p;
    b %= p;
    while e > 0 {
        if e & 1 == 1 {
            r = r * b % p;
        }
        b = b * b % p;
        e >>= 1;
    }
    r
}

pub fn inv_mod(a: u64, p: u64) -> u64 {
    debug_assert!(!a.is_multiple_of(p));
    pow_mod(a, p - 2, p)
}

/// Reduction of a rational mod `p`; `None` when `p` divides the denominator.
pub fn reduce(r: &Rational, p: u64) -> Option<u64> {
    let pb = BigInt::from(p);
    let n = r.numer().mod_floor(&pb).to_u64().unwrap();
    let d = r.denom().mod_floor(&pb).to_u64().unwrap();
    if d.is_zero() {
        None
    } else {
        Some(n * inv_mod(d, p) % p)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PolyFp {
    p: u64,
    c: Vec<u64>,
}

impl PolyFp {
    pub fn new(p: u64, mut c: Vec<u64>) -> Self {
        for v in c.iter_mut() {
            *v %= p;
        }
        while c.last() == Some(&0) {
            c.pop();
        }
        PolyFp { p, c }
    }

    pub fn constant(p: u64, v: u64) -> Self {
        PolyFp::new(p, vec![v])
    }

    /// The indeterminate `t`.
    pub fn t(p: u64) -> Self {
        PolyFp::new(p, vec![0, 1])
    }

    pub fn modulus(&self) -> u64 {
        self.p
    }

    pub fn is_zero(&self) -> bool {
        self.c.is_empty()
    }

    pub fn degree(&self) -> Option<usize> {
        self.c.len().checked_sub(1)
    }

    pub fn add(&self, o: &Self) -> Self {
        let n = self.c.len().max(o.c.len());
        let v = (0..n)
            .map(|i| {
                (self.c.get(i).copied().unwrap_or(0) + o.c.get(i).copied().unwrap_or(0)) % self.p
            })
            .collect();
        PolyFp::new(self.p, v)
    }

    pub fn sub(&self, o: &Self) -> Self {
        let n = self.c.len().max(o.c.len());
        let p = self.p;
        let v = (0..n)
            .map(|i| {
                (self.c.get(i).copied().unwrap_or(0) + p - o.c.get(i).copied().unwrap_or(0)) % p
            })
            .collect();
        PolyFp::new(p, v)
    }

    pub fn scale(&self, k: u64) -> Self {
        PolyFp::new(
            self.p,
            self.c.iter().map(|v| v * (k % self.p) % self.p).collect(),
        )
    }

    pub fn mul(&self, o: &Self) -> Self {
        if self.is_zero() || o.is_zero() {
            return PolyFp::new(self.p, Vec::new());
        }
        let p = self.p;
        let mut v = vec![0u64; self.c.len() + o.c.len() - 1];
        for (i, a) in self.c.iter().enumerate() {
            if *a == 0 {
                continue;
            }
            for (j, b) in o.c.iter().enumerate() {
                v[i + j] = (v[i + j] + a * b) % p;
            }
        }
        PolyFp::new(p, v)
    }

    pub fn divrem(&self, d: &Self) -> (Self, Self) {
        let p = self.p;
        let dd = d.degree().expect("division by zero polynomial");
        let inv = inv_mod(d.c[dd], p);
        let mut r = self.c.clone();
        if r.len() <= dd {
            return (PolyFp::new(p, Vec::new()), self.clone());
        }
        let mut qv = vec![0u64; r.len() - dd];
        for k in (0..qv.len()).rev() {
            let c = r[k + dd] * inv % p;
            if c != 0 {
                for (j, dj) in d.c.iter().enumerate() {
                    r[k + j] = (r[k + j] + p - c * dj % p) % p;
                }
            }
            qv[k] = c;
        }
        r.truncate(dd);
        (PolyFp::new(p, qv), PolyFp::new(p, r))
    }

    /// Leading coefficient (0 for the zero polynomial).
    pub fn lc(&self) -> u64 {
        self.c.last().copied().unwrap_or(0)
    }

    pub fn monic(&self) -> Self {
        match self.c.last() {
            None => self.clone(),
            Some(&l) => self.scale(inv_mod(l, self.p)),
        }
    }

    pub fn gcd(a: &Self, b: &Self) -> Self {
        let (mut x, mut y) = (a.clone(), b.clone());
        while !y.is_zero() {
            let r = x.divrem(&y).1;
            x = y;
            y = r;
        }
        x.monic()
    }

    pub fn exact_div(&self, d: &Self) -> Self {
        let (qt, r) = self.divrem(d);
        debug_assert!(r.is_zero());
        qt
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::rational::q;

    #[test]
    fn rational_reduction() {
        let p = PRIMES[0];
        let h = reduce(&q(1, 2), p).unwrap();
        assert_eq!(h * 2 % p, 1);
        assert_eq!(reduce(&q(3, p as i64), p), None);
        assert_eq!(reduce(&q(-1, 1), p), Some(p - 1));
    }

    #[test]
    fn gcd_over_fp() {
        let p = 101;
        let a = PolyFp::new(p, vec![p - 1, 0, 1]); // t^2 - 1
        let b = PolyFp::new(p, vec![1, 1]); // t + 1
        assert_eq!(PolyFp::gcd(&a, &b.mul(&b)), b);
        assert_eq!(a.exact_div(&b), PolyFp::new(p, vec![p - 1, 1]));
    }
}
