//! Elementary arithmetic functions: Möbius function, tuple gcd, the
//! generalized totient `phi_r`, `zeta(r)` for integer `r >= 2`, the
//! coprime-restricted Möbius series and primality.

use std::sync::OnceLock;

use crate::error::{Error, Result};

/// Limit of the process-wide cache returned by [`ArithCache::shared`].
pub const DEFAULT_CACHE_LIMIT: usize = 1_000_000;

/// Möbius and smallest-prime-factor tables for `1..=limit`, built by a
/// linear sieve.
#[derive(Debug, Clone)]
pub struct ArithCache {
    limit: usize,
    moebius: Vec<i8>,
    smallest_prime_factor: Vec<u32>,
    primes: Vec<u32>,
}

impl ArithCache {
    pub fn new(limit: usize) -> Self {
        let limit = limit.max(1);
        let mut moebius = vec![0i8; limit + 1];
        let mut spf = vec![0u32; limit + 1];
        let mut primes: Vec<u32> = Vec::new();
        moebius[1] = 1;
        for i in 2..=limit {
            if spf[i] == 0 {
                spf[i] = i as u32;
                moebius[i] = -1;
                primes.push(i as u32);
            }
            for &q in &primes {
                let q = q as usize;
                let composite = i * q;
                if q > spf[i] as usize || composite > limit {
                    break;
                }
                spf[composite] = q as u32;
                moebius[composite] = if i % q == 0 { 0 } else { -moebius[i] };
            }
        }
        Self {
            limit,
            moebius,
            smallest_prime_factor: spf,
            primes,
        }
    }

    /// Process-wide cache up to [`DEFAULT_CACHE_LIMIT`], built on first use.
    pub fn shared() -> &'static ArithCache {
        static SHARED: OnceLock<ArithCache> = OnceLock::new();
        SHARED.get_or_init(|| ArithCache::new(DEFAULT_CACHE_LIMIT))
    }

    pub fn limit(&self) -> usize {
        self.limit
    }

    fn check(&self, k: u64) -> Result<usize> {
        if k == 0 {
            return Err(Error::Domain("argument must be at least 1".into()));
        }
        if k > self.limit as u64 {
            return Err(Error::Domain(format!(
                "{k} exceeds the arithmetic cache limit {}",
                self.limit
            )));
        }
        Ok(k as usize)
    }

    pub fn moebius(&self, k: u64) -> Result<i8> {
        self.check(k).map(|k| self.moebius[k])
    }

    pub fn smallest_prime_factor(&self, k: u64) -> Result<u64> {
        let k = self.check(k)?;
        Ok(if k == 1 { 1 } else { self.smallest_prime_factor[k] as u64 })
    }

    /// Primes up to the cache limit, ascending.
    pub fn primes(&self) -> &[u32] {
        &self.primes
    }

    /// Overwrites one Möbius entry. Only used to inject faults into the
    /// self-test; never call this on a cache used for real counts.
    #[doc(hidden)]
    pub fn with_moebius_override(mut self, k: usize, value: i8) -> Self {
        if (1..=self.limit).contains(&k) {
            self.moebius[k] = value;
        }
        self
    }
}

/// μ(k) from the shared cache.
pub fn moebius(k: u64) -> Result<i8> {
    ArithCache::shared().moebius(k)
}

pub fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

/// Gcd of a tuple with `gcd(0, x) = x`; the all-zero tuple gives 0.
pub fn gcd_tuple(xs: &[u64]) -> Result<u64> {
    if xs.is_empty() {
        return Err(Error::Domain("gcd of an empty tuple".into()));
    }
    let mut g = 0;
    for &x in xs {
        g = gcd(g, x);
        if g == 1 {
            break;
        }
    }
    Ok(g)
}

/// Distinct prime factors of `a`, ascending, by trial division.
pub fn prime_factors(mut a: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut q = 2u64;
    while q.saturating_mul(q) <= a {
        if a % q == 0 {
            out.push(q);
            while a % q == 0 {
                a /= q;
            }
        }
        q += if q == 2 { 1 } else { 2 };
    }
    if a > 1 {
        out.push(a);
    }
    out
}

/// `a^r · ∏_{q | a} (1 - q^{-r})`, the number of residue tuples
/// `b ∈ [0, a)^r` with `gcd(b_1, …, b_r, a) = 1`.
pub fn phi_r(a: u64, r: u32) -> Result<u64> {
    if a == 0 || r == 0 {
        return Err(Error::Domain("phi_r needs a >= 1 and r >= 1".into()));
    }
    let overflow = || Error::Overflow(format!("phi_r({a}, {r})"));
    let mut acc = a.checked_pow(r).ok_or_else(overflow)?;
    for q in prime_factors(a) {
        // q^r <= a^r, so this cannot overflow once a^r fits.
        let qr = q.pow(r);
        acc = (acc / qr).checked_mul(qr - 1).ok_or_else(overflow)?;
    }
    Ok(acc)
}

/// `ζ(r)` for integer `r >= 2`.
///
/// Sums `k^{-r}` for `k <= K` in descending order and adds the
/// Euler–Maclaurin tail `K^{1-r}/(r-1) - K^{-r}/2 + r K^{-r-1}/12`. `K` is
/// chosen so the first omitted correction `r(r+1)(r+2) / (720 K^{r+3})`,
/// which bounds the remainder for this completely monotone summand, is
/// below `tol / 2`.
pub fn zeta(r: u32, tol: f64) -> Result<f64> {
    if r < 2 {
        return Err(Error::Domain(format!(
            "zeta({r}) diverges; need r >= 2"
        )));
    }
    if !(tol > 0.0) {
        return Err(Error::Domain("tolerance must be positive".into()));
    }
    let rf = r as f64;
    let remainder = |k: f64| rf * (rf + 1.0) * (rf + 2.0) / (720.0 * k.powf(rf + 3.0));
    let mut cutoff: u64 = 16;
    while remainder(cutoff as f64) >= tol / 2.0 {
        cutoff *= 2;
    }
    let kf = cutoff as f64;
    let mut sum = kf.powf(1.0 - rf) / (rf - 1.0) - 0.5 * kf.powf(-rf) + rf / 12.0 * kf.powf(-rf - 1.0);
    for k in (1..=cutoff).rev() {
        sum += (k as f64).powi(-(r as i32));
    }
    Ok(sum)
}

/// `Σ_{k >= 1, gcd(k, a) = 1} μ(k) / k^r`, evaluated through its Euler
/// product `ζ(r)^{-1} · ∏_{q | a} (1 - q^{-r})^{-1}`.
pub fn coprime_moebius_sum(a: u64, r: u32, tol: f64) -> Result<f64> {
    if a == 0 {
        return Err(Error::Domain("modulus must be at least 1".into()));
    }
    if r < 2 {
        return Err(Error::Domain(format!(
            "series over k^-{r} diverges; need r >= 2"
        )));
    }
    // The local factor is at most ζ(r) and 1/ζ has Lipschitz constant 1 on
    // [1, ∞), so ζ to tol/2 keeps the product within tol.
    let z = zeta(r, tol / 2.0)?;
    let mut local = 1.0;
    for q in prime_factors(a) {
        local /= 1.0 - (q as f64).powi(-(r as i32));
    }
    Ok(local / z)
}

/// Deterministic primality test by trial division; fine for `n < 2^32`.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    if n < 4 {
        return true;
    }
    if n % 2 == 0 || n % 3 == 0 {
        return false;
    }
    let mut q = 5u64;
    while q * q <= n {
        if n % q == 0 || n % (q + 2) == 0 {
            return false;
        }
        q += 6;
    }
    true
}

/// Primes in the closed range `[lo, hi]`.
pub fn primes_between(lo: u64, hi: u64) -> Vec<u64> {
    if hi < 2 || lo > hi {
        return Vec::new();
    }
    let mut composite = vec![false; (hi + 1) as usize];
    let mut out = Vec::new();
    for i in 2..=hi as usize {
        if composite[i] {
            continue;
        }
        if i as u64 >= lo {
            out.push(i as u64);
        }
        let mut j = i * i;
        while j <= hi as usize {
            composite[j] = true;
            j += i;
        }
    }
    out
}

/// `(a^e) mod m` by repeated squaring; `m < 2^32`.
pub fn pow_mod(mut base: u64, mut exp: u64, m: u64) -> u64 {
    if m == 1 {
        return 0;
    }
    let mut acc = 1u64;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = acc * base % m;
        }
        base = base * base % m;
        exp >>= 1;
    }
    acc
}

/// Inverse of `a` modulo `m`, if it exists.
pub fn inv_mod(a: u64, m: u64) -> Option<u64> {
    let (mut old_r, mut r) = (a as i64 % m as i64, m as i64);
    let (mut old_s, mut s) = (1i64, 0i64);
    while r != 0 {
        let q = old_r / r;
        (old_r, r) = (r, old_r - q * r);
        (old_s, s) = (s, old_s - q * s);
    }
    if old_r != 1 {
        return None;
    }
    Some(old_s.rem_euclid(m as i64) as u64)
}
