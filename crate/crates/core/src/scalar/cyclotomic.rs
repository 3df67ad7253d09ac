//! Exact arithmetic in the cyclotomic field Q(ζ_L).
//!
//! Elements are stored in the power basis `1, ζ, …, ζ^{φ(L)-1}` modulo the
//! cyclotomic polynomial Φ_L, so two elements over the same order are equal
//! exactly when their coefficient vectors are equal.

use std::collections::HashMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::{Mutex, OnceLock};

use num_bigint::BigInt;
use num_complex::Complex64;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Largest root-of-unity order accepted by the field cache.
pub const MAX_ORDER: u32 = 4096;

/// Precomputed data for one cyclotomic field.
#[derive(Debug)]
pub struct CycField {
    order: u32,
    phi: usize,
    /// Φ_L, low degree first. Monic with integer coefficients.
    cyclotomic: Vec<i64>,
    /// `pow_table[m]` is x^m reduced modulo Φ_L, for `m` in `0..L`.
    pow_table: Vec<Vec<i64>>,
    /// Exponents `k` in `1..L` with gcd(k, L) = 1, excluding 1.
    galois: Vec<u32>,
}

impl CycField {
    fn build(order: u32) -> CycField {
        let cyclotomic = cyclotomic_polynomial(order);
        let phi = cyclotomic.len() - 1;
        let l = order as usize;
        let mut pow_table = Vec::with_capacity(l);
        let mut cur = vec![0i64; phi];
        cur[0] = 1;
        for _ in 0..l {
            pow_table.push(cur.clone());
            // multiply by x and reduce
            let top = cur[phi - 1];
            let mut next = vec![0i64; phi];
            for k in (1..phi).rev() {
                next[k] = cur[k - 1];
            }
            if phi > 0 {
                next[0] = 0;
            }
            for k in 0..phi {
                next[k] -= top * cyclotomic[k];
            }
            cur = next;
        }
        let galois = (2..order.max(2))
            .filter(|&k| k.gcd(&order) == 1)
            .collect();
        CycField {
            order,
            phi,
            cyclotomic,
            pow_table,
            galois,
        }
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    /// Degree of the field over Q.
    pub fn degree(&self) -> usize {
        self.phi
    }

    pub fn cyclotomic_polynomial(&self) -> &[i64] {
        &self.cyclotomic
    }

    fn reduce_into(&self, acc: &[BigRational]) -> Vec<BigRational> {
        let mut out: Vec<BigRational> = vec![BigRational::zero(); self.phi];
        for (m, c) in acc.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            if m < self.phi {
                out[m] += c;
                continue;
            }
            for (k, &t) in self.pow_table[m].iter().enumerate() {
                if t != 0 {
                    out[k] += c * BigRational::from_integer(BigInt::from(t));
                }
            }
        }
        out
    }
}

/// Returns the shared field data for Q(ζ_order).
pub fn field(order: u32) -> Result<&'static CycField> {
    if order == 0 || order > MAX_ORDER {
        return Err(Error::InvalidOrder(format!(
            "root-of-unity order {order} outside 1..={MAX_ORDER}"
        )));
    }
    static CACHE: OnceLock<Mutex<HashMap<u32, &'static CycField>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().expect("field cache poisoned");
    Ok(*guard
        .entry(order)
        .or_insert_with(|| Box::leak(Box::new(CycField::build(order)))))
}

fn field_unchecked(order: u32) -> &'static CycField {
    field(order).expect("invalid cyclotomic order")
}

/// Φ_n by dividing x^n - 1 by Φ_d for every proper divisor d of n.
pub fn cyclotomic_polynomial(n: u32) -> Vec<i64> {
    let mut num = vec![0i64; n as usize + 1];
    num[0] = -1;
    num[n as usize] = 1;
    for d in 1..n {
        if n.is_multiple_of(d) {
            num = div_monic(&num, &cyclotomic_polynomial(d));
        }
    }
    num
}

fn div_monic(num: &[i64], den: &[i64]) -> Vec<i64> {
    let mut rem = num.to_vec();
    let dd = den.len() - 1;
    let nd = num.len() - 1;
    let mut q = vec![0i64; nd - dd + 1];
    for i in (0..=nd - dd).rev() {
        let c = rem[i + dd];
        q[i] = c;
        if c != 0 {
            for (j, &b) in den.iter().enumerate() {
                rem[i + j] -= c * b;
            }
        }
    }
    debug_assert!(rem.iter().all(|&r| r == 0), "inexact cyclotomic division");
    q
}

/// Euler's totient.
pub fn totient(n: u32) -> usize {
    (1..=n).filter(|k| k.gcd(&n) == 1).count()
}

/// An exact element of Q(ζ_L).
#[derive(Clone)]
pub struct CycNumber {
    field: &'static CycField,
    coeffs: Vec<BigRational>,
}

impl CycNumber {
    pub fn zero(order: u32) -> CycNumber {
        let field = field_unchecked(order);
        CycNumber {
            field,
            coeffs: vec![BigRational::zero(); field.phi],
        }
    }

    pub fn one(order: u32) -> CycNumber {
        CycNumber::from_rational(BigRational::one(), order)
    }

    pub fn from_rational(value: BigRational, order: u32) -> CycNumber {
        let mut out = CycNumber::zero(order);
        out.coeffs[0] = value;
        out
    }

    pub fn from_int(value: i64, order: u32) -> CycNumber {
        CycNumber::from_rational(BigRational::from_integer(value.into()), order)
    }

    pub fn from_frac(num: i64, den: i64, order: u32) -> CycNumber {
        CycNumber::from_rational(BigRational::new(num.into(), den.into()), order)
    }

    /// Builds an element from power-basis coefficients; `coeffs` must have
    /// exactly φ(order) entries.
    pub fn from_coeffs(order: u32, coeffs: Vec<BigRational>) -> Result<CycNumber> {
        let field = field(order)?;
        if coeffs.len() != field.phi {
            return Err(Error::InvalidScalar(format!(
                "order {order} needs {} coefficients, got {}",
                field.phi,
                coeffs.len()
            )));
        }
        Ok(CycNumber { field, coeffs })
    }

    /// ζ_L^k for any integer `k`.
    pub fn zeta_power(k: i64, order: u32) -> CycNumber {
        let field = field_unchecked(order);
        let e = k.rem_euclid(order as i64) as usize;
        let coeffs = field.pow_table[e]
            .iter()
            .map(|&t| BigRational::from_integer(t.into()))
            .collect();
        CycNumber { field, coeffs }
    }

    pub fn order(&self) -> u32 {
        self.field.order
    }

    pub fn coeffs(&self) -> &[BigRational] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(Zero::is_zero)
    }

    pub fn is_one(&self) -> bool {
        self.coeffs[0].is_one() && self.coeffs[1..].iter().all(Zero::is_zero)
    }

    /// True when the element lies in Q.
    pub fn is_rational(&self) -> bool {
        self.coeffs[1..].iter().all(Zero::is_zero)
    }

    pub fn as_rational(&self) -> Option<&BigRational> {
        self.is_rational().then(|| &self.coeffs[0])
    }

    fn check_order(&self, other: &CycNumber) {
        assert_eq!(
            self.field.order, other.field.order,
            "cyclotomic order mismatch"
        );
    }

    fn scale(&self, r: &BigRational) -> CycNumber {
        CycNumber {
            field: self.field,
            coeffs: self.coeffs.iter().map(|c| c * r).collect(),
        }
    }

    /// Applies the automorphism ζ ↦ ζ^k (k coprime to L).
    pub fn galois(&self, k: u32) -> CycNumber {
        if self.is_rational() {
            return self.clone();
        }
        let l = self.field.order as u64;
        let mut acc = vec![BigRational::zero(); l as usize];
        for (j, c) in self.coeffs.iter().enumerate() {
            if !c.is_zero() {
                acc[((j as u64 * k as u64) % l) as usize] += c;
            }
        }
        CycNumber {
            field: self.field,
            coeffs: self.field.reduce_into(&acc),
        }
    }

    /// Complex conjugate, the Galois map ζ ↦ ζ^{L-1}.
    pub fn conj(&self) -> CycNumber {
        let l = self.field.order;
        if l <= 2 {
            return self.clone();
        }
        self.galois(l - 1)
    }

    /// |x|², an element of the real subfield.
    pub fn norm_sqr(&self) -> CycNumber {
        self * &self.conj()
    }

    pub fn inv(&self) -> Result<CycNumber> {
        if self.is_zero() {
            return Err(Error::DivisionByZero);
        }
        if let Some(r) = self.as_rational() {
            return Ok(CycNumber::from_rational(r.recip(), self.order()));
        }
        // x^{-1} = (Π_{σ≠1} σ(x)) / N(x), where N(x) is rational.
        let mut others = CycNumber::one(self.order());
        for &k in &self.field.galois {
            others = &others * &self.galois(k);
        }
        let norm = self * &others;
        let n = norm
            .as_rational()
            .expect("field norm must be rational")
            .clone();
        Ok(others.scale(&n.recip()))
    }

    pub fn div(&self, other: &CycNumber) -> Result<CycNumber> {
        Ok(self * &other.inv()?)
    }

    /// Re-expresses the element in Q(ζ_M) for a multiple M of the order.
    pub fn promote(&self, order: u32) -> Result<CycNumber> {
        let l = self.field.order;
        if order == l {
            return Ok(self.clone());
        }
        if !order.is_multiple_of(l) {
            return Err(Error::InvalidOrder(format!(
                "cannot promote from order {l} to {order}"
            )));
        }
        let target = field(order)?;
        let step = (order / l) as usize;
        let mut acc = vec![BigRational::zero(); order as usize];
        for (j, c) in self.coeffs.iter().enumerate() {
            acc[(j * step) % order as usize] += c;
        }
        Ok(CycNumber {
            field: target,
            coeffs: target.reduce_into(&acc),
        })
    }

    /// Smallest order `m` dividing L such that the element lies in Q(ζ_m).
    pub fn minimal_order(&self) -> u32 {
        let l = self.order();
        let mut divisors: Vec<u32> = (1..=l).filter(|d| l.is_multiple_of(*d)).collect();
        divisors.sort_unstable();
        for d in divisors {
            if d == l {
                return l;
            }
            // x lies in Q(ζ_d) iff it is fixed by every automorphism fixing ζ_d.
            let fixed = self
                .field
                .galois
                .iter()
                .filter(|&&k| (k as u64 % d as u64) == 1 % d as u64)
                .all(|&k| self.galois(k) == *self);
            if fixed {
                return d;
            }
        }
        l
    }

    /// Numeric value at ζ_L = e^{2πi/L}.
    pub fn to_c64(&self) -> Complex64 {
        let l = self.field.order as f64;
        let mut out = Complex64::new(0.0, 0.0);
        for (k, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let v = c.to_f64().unwrap_or(f64::NAN);
            let angle = 2.0 * std::f64::consts::PI * k as f64 / l;
            out += Complex64::from_polar(v, angle);
        }
        out
    }

    /// Multiplies by ζ^k.
    pub fn mul_zeta(&self, k: i64) -> CycNumber {
        self * &CycNumber::zeta_power(k, self.order())
    }
}

/// w_n^k embedded in Q(ζ_L). Requires `n | L`.
pub fn embed_root(n: u32, k: i64, order: u32) -> Result<CycNumber> {
    if n == 0 || !order.is_multiple_of(n) {
        return Err(Error::InvalidOrder(format!(
            "root order {n} does not divide field order {order}"
        )));
    }
    field(order)?;
    Ok(CycNumber::zeta_power(k * (order / n) as i64, order))
}

impl PartialEq for CycNumber {
    fn eq(&self, other: &Self) -> bool {
        self.field.order == other.field.order && self.coeffs == other.coeffs
    }
}

impl Eq for CycNumber {}

impl fmt::Debug for CycNumber {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for CycNumber {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (k, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            match k {
                0 => write!(f, "{c}")?,
                1 => write!(f, "({c})·z{}", self.field.order)?,
                _ => write!(f, "({c})·z{}^{k}", self.field.order)?,
            }
        }
        Ok(())
    }
}

impl<'a> Add<&'a CycNumber> for &'a CycNumber {
    type Output = CycNumber;
    fn add(self, rhs: &CycNumber) -> CycNumber {
        self.check_order(rhs);
        CycNumber {
            field: self.field,
            coeffs: self
                .coeffs
                .iter()
                .zip(&rhs.coeffs)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }
}

impl<'a> Sub<&'a CycNumber> for &'a CycNumber {
    type Output = CycNumber;
    fn sub(self, rhs: &CycNumber) -> CycNumber {
        self.check_order(rhs);
        CycNumber {
            field: self.field,
            coeffs: self
                .coeffs
                .iter()
                .zip(&rhs.coeffs)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }
}

impl<'a> Mul<&'a CycNumber> for &'a CycNumber {
    type Output = CycNumber;
    fn mul(self, rhs: &CycNumber) -> CycNumber {
        self.check_order(rhs);
        if let Some(r) = rhs.as_rational() {
            return self.scale(r);
        }
        if let Some(r) = self.as_rational() {
            return rhs.scale(r);
        }
        let l = self.field.order as usize;
        let mut acc = vec![BigRational::zero(); l];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in rhs.coeffs.iter().enumerate() {
                if !b.is_zero() {
                    acc[(i + j) % l] += a * b;
                }
            }
        }
        CycNumber {
            field: self.field,
            coeffs: self.field.reduce_into(&acc),
        }
    }
}

impl Neg for &CycNumber {
    type Output = CycNumber;
    fn neg(self) -> CycNumber {
        CycNumber {
            field: self.field,
            coeffs: self.coeffs.iter().map(|c| -c).collect(),
        }
    }
}

impl Add for CycNumber {
    type Output = CycNumber;
    fn add(self, rhs: CycNumber) -> CycNumber {
        &self + &rhs
    }
}

impl Sub for CycNumber {
    type Output = CycNumber;
    fn sub(self, rhs: CycNumber) -> CycNumber {
        &self - &rhs
    }
}

impl Mul for CycNumber {
    type Output = CycNumber;
    fn mul(self, rhs: CycNumber) -> CycNumber {
        &self * &rhs
    }
}

impl Neg for CycNumber {
    type Output = CycNumber;
    fn neg(self) -> CycNumber {
        -&self
    }
}

/// Parses "p", "-p" or "p/q" into a rational in lowest terms.
pub fn parse_rational(s: &str) -> Result<BigRational> {
    let s = s.trim();
    let bad = || Error::InvalidScalar(format!("bad rational literal {s:?}"));
    match s.split_once('/') {
        Some((p, q)) => {
            let p: BigInt = p.trim().parse().map_err(|_| bad())?;
            let q: BigInt = q.trim().parse().map_err(|_| bad())?;
            if q.is_zero() {
                return Err(bad());
            }
            Ok(BigRational::new(p, q))
        }
        None => Ok(BigRational::from_integer(s.parse().map_err(|_| bad())?)),
    }
}

/// Lowest-terms rendering, "p" for integers and "p/q" otherwise.
pub fn format_rational(r: &BigRational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else if r.denom().is_negative() {
        format!("{}/{}", -r.numer(), -r.denom())
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}
