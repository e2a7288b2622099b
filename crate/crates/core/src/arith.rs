//! Modular arithmetic, factorization of square-free moduli, and the classical
//! multiplicative functions.
//!
//! Residues are normalized to `[0, q-1]` everywhere; one canonical form keeps
//! sign conventions out of the exponential sums built on top of this module.

use crate::error::{Error, Result};

/// A square-free modulus together with its prime factorization.
///
/// Invariants: `primes` is strictly increasing, the product of `primes` equals
/// `q`, `phi = prod (p - 1)`, `omega = primes.len()`. The unit modulus `q = 1`
/// carries an empty prime list, `phi = 1`, `omega = 0`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SquarefreeModulus {
    q: u64,
    primes: Vec<u64>,
    phi: u64,
    omega: u32,
}

impl SquarefreeModulus {
    /// Factors `n` by trial division, rejecting non-square-free input.
    pub fn new(n: u64) -> Result<Self> {
        factor_squarefree(n)
    }

    pub fn q(&self) -> u64 {
        self.q
    }

    pub fn primes(&self) -> &[u64] {
        &self.primes
    }

    pub fn phi(&self) -> u64 {
        self.phi
    }

    pub fn omega(&self) -> u32 {
        self.omega
    }

    pub fn is_prime(&self) -> bool {
        self.omega == 1
    }

    /// True when `gcd(r, q) = 1`.
    pub fn is_unit(&self, r: u64) -> bool {
        gcd(r % self.q, self.q) == 1
    }

    /// Units of `Z/qZ` in increasing order.
    pub fn units(&self) -> Vec<u64> {
        if self.q == 1 {
            return vec![0];
        }
        (1..self.q).filter(|&r| self.is_unit(r)).collect()
    }
}

/// Factors a square-free `n >= 1` by trial division up to `sqrt(n)`.
///
/// Returns [`Error::NotSquarefree`] as soon as a repeated prime factor is
/// found.
pub fn factor_squarefree(n: u64) -> Result<SquarefreeModulus> {
    assert!(n >= 1, "modulus must be positive");
    let mut rest = n;
    let mut primes = Vec::new();
    let mut phi = 1u64;
    let mut p = 2u64;
    while p * p <= rest {
        if rest % p == 0 {
            rest /= p;
            if rest % p == 0 {
                return Err(Error::NotSquarefree(n));
            }
            primes.push(p);
            phi *= p - 1;
        }
        p += if p == 2 { 1 } else { 2 };
    }
    if rest > 1 {
        primes.push(rest);
        phi *= rest - 1;
    }
    let omega = primes.len() as u32;
    Ok(SquarefreeModulus { q: n, primes, phi, omega })
}

pub fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Inverse of `x` mod `q`, normalized to `[1, q-1]`. Requires `q >= 2`.
pub fn inv_mod(x: i64, q: u64) -> Result<u64> {
    assert!(q >= 2, "inv_mod needs q >= 2");
    let x0 = x.rem_euclid(q as i64) as u64;
    // extended Euclid on (x0, q)
    let (mut old_r, mut r) = (x0 as i64, q as i64);
    let (mut old_s, mut s) = (1i64, 0i64);
    while r != 0 {
        let quot = old_r / r;
        (old_r, r) = (r, old_r - quot * r);
        (old_s, s) = (s, old_s - quot * s);
    }
    if old_r != 1 {
        return Err(Error::NotInvertible { x, q });
    }
    Ok(old_s.rem_euclid(q as i64) as u64)
}

/// Modular exponentiation `b^e mod q` (q may be 1).
pub fn pow_mod(b: u64, e: u64, q: u64) -> u64 {
    if q == 1 {
        return 0;
    }
    let mut acc = 1u128;
    let mut base = (b % q) as u128;
    let mut e = e;
    let q = q as u128;
    while e > 0 {
        if e & 1 == 1 {
            acc = acc * base % q;
        }
        base = base * base % q;
        e >>= 1;
    }
    acc as u64
}

/// Combines `r1 mod q1` and `r2 mod q2` into the unique residue mod `q1*q2`.
pub fn crt_combine(
    r1: u64,
    q1: &SquarefreeModulus,
    r2: u64,
    q2: &SquarefreeModulus,
) -> Result<u64> {
    if gcd(q1.q(), q2.q()) != 1 {
        return Err(Error::ModuliNotCoprime { q1: q1.q(), q2: q2.q() });
    }
    let (m1, m2) = (q1.q(), q2.q());
    if m1 == 1 {
        return Ok(r2 % m2.max(1));
    }
    if m2 == 1 {
        return Ok(r1 % m1);
    }
    // r = r1 + q1 * ((r2 - r1) * q1^{-1} mod q2)
    let inv = inv_mod(m1 as i64, m2)? as u128;
    let r1 = (r1 % m1) as u128;
    let r2 = (r2 % m2) as u128;
    let m1 = m1 as u128;
    let m2 = m2 as u128;
    let diff = (r2 + m2 - r1 % m2) % m2;
    let t = diff * inv % m2;
    Ok((r1 + m1 * t) as u64)
}

/// Exact values of `d(n)`, `d_3(n)`, `mu(n)`, `sigma(n)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MultFunctions {
    pub d: u64,
    pub d3: u64,
    pub mu: i32,
    pub sigma: u64,
}

/// Computes the four classical multiplicative functions at `n >= 1` from the
/// prime factorization (general `n`, not necessarily square-free).
pub fn mult_functions(n: u64) -> MultFunctions {
    assert!(n >= 1);
    let mut rest = n;
    let mut d = 1u64;
    let mut d3 = 1u64;
    let mut mu = 1i32;
    let mut sigma = 1u64;
    let mut p = 2u64;
    while p * p <= rest {
        if rest % p == 0 {
            let mut e = 0u64;
            let mut pe = 1u64;
            while rest % p == 0 {
                rest /= p;
                e += 1;
                pe *= p;
            }
            d *= e + 1;
            d3 *= (e + 1) * (e + 2) / 2;
            mu = if e >= 2 { 0 } else { -mu };
            sigma *= (pe * p - 1) / (p - 1);
        }
        p += if p == 2 { 1 } else { 2 };
    }
    if rest > 1 {
        d *= 2;
        d3 *= 3;
        mu = -mu;
        sigma *= rest + 1;
    }
    MultFunctions { d, d3, mu, sigma }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn factor_30() {
        let m = factor_squarefree(30).unwrap();
        assert_eq!(m.primes(), &[2, 3, 5]);
        assert_eq!(m.phi(), 8);
        assert_eq!(m.omega(), 3);
    }

    #[test]
    fn factor_one() {
        let m = factor_squarefree(1).unwrap();
        assert!(m.primes().is_empty());
        assert_eq!(m.phi(), 1);
        assert_eq!(m.omega(), 0);
    }

    #[test]
    fn factor_rejects_square() {
        assert_eq!(factor_squarefree(12), Err(Error::NotSquarefree(12)));
        assert_eq!(factor_squarefree(49), Err(Error::NotSquarefree(49)));
    }

    #[test]
    fn factorization_invariants_to_1e4() {
        for q in 1..=10_000u64 {
            match factor_squarefree(q) {
                Ok(m) => {
                    assert_eq!(m.primes().iter().product::<u64>(), q);
                    // brute-force unit count
                    let phi = (1..=q).filter(|&r| gcd(r, q) == 1).count() as u64;
                    assert_eq!(m.phi(), phi, "phi mismatch at q={q}");
                    let mut sorted = m.primes().to_vec();
                    sorted.sort_unstable();
                    sorted.dedup();
                    assert_eq!(sorted.as_slice(), m.primes());
                }
                Err(_) => {
                    assert!(
                        (2..=q).any(|p| p * p <= q && q % (p * p) == 0),
                        "q={q} flagged non-square-free but no square divides it"
                    );
                }
            }
        }
    }

    #[test]
    fn inv_mod_basics() {
        assert_eq!(inv_mod(3, 7).unwrap(), 5);
        assert_eq!(inv_mod(1, 97).unwrap(), 1);
        assert_eq!(inv_mod(2, 4), Err(Error::NotInvertible { x: 2, q: 4 }));
    }

    #[test]
    fn inv_mod_round_trip_random() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0);
        let mut done = 0;
        while done < 10_000 {
            let q = rng.gen_range(2..=1_000_000u64);
            let x = rng.gen_range(1..q) as i64;
            if gcd(x as u64, q) != 1 {
                continue;
            }
            let y = inv_mod(x, q).unwrap();
            assert!(y >= 1 && y < q);
            assert_eq!((x as u128 * y as u128 % q as u128) as u64, 1);
            done += 1;
        }
    }

    #[test]
    fn crt_examples() {
        let q3 = factor_squarefree(3).unwrap();
        let q5 = factor_squarefree(5).unwrap();
        assert_eq!(crt_combine(1, &q3, 2, &q5).unwrap(), 7);
        assert_eq!(crt_combine(0, &q3, 0, &q5).unwrap(), 0);
        let q6 = factor_squarefree(6).unwrap();
        let q10 = factor_squarefree(10).unwrap();
        assert_eq!(
            crt_combine(2, &q6, 1, &q10),
            Err(Error::ModuliNotCoprime { q1: 6, q2: 10 })
        );
    }

    #[test]
    fn mult_functions_examples() {
        let m = mult_functions(12);
        assert_eq!((m.d, m.d3, m.mu, m.sigma), (6, 18, 0, 28));
        let m = mult_functions(1);
        assert_eq!((m.d, m.d3, m.mu, m.sigma), (1, 1, 1, 1));
        assert_eq!(mult_functions(30).mu, -1);
    }

    #[test]
    fn d3_is_divisor_convolution_of_d() {
        for n in 1..=10_000u64 {
            let mut conv = 0u64;
            let mut dd = 1;
            while dd * dd <= n {
                if n % dd == 0 {
                    conv += mult_functions(n / dd).d;
                    if dd != n / dd {
                        conv += mult_functions(dd).d;
                    }
                }
                dd += 1;
            }
            assert_eq!(mult_functions(n).d3, conv, "n={n}");
        }
    }
}
