//! Elements of the cyclotomic field `Q(ζ_m)`, stored as coordinate vectors in
//! the power basis of `Q[x]/Φ_m(x)`.
//!
//! Elements of different orders combine in the compositum `Q(ζ_lcm)`; an
//! element whose irrational coordinates all vanish is demoted to order 1.

use std::fmt;
use std::sync::{Arc, OnceLock};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use super::Rat;

const TABLE_SIZE: u32 = 128;

fn cyclotomic_table() -> &'static Vec<Arc<Vec<i64>>> {
    static TABLE: OnceLock<Vec<Arc<Vec<i64>>>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut table: Vec<Arc<Vec<i64>>> = vec![Arc::new(vec![])];
        for m in 1..=TABLE_SIZE {
            let phi = compute_cyclotomic(m, |d| table[d as usize].clone());
            table.push(Arc::new(phi));
        }
        table
    })
}

/// Integer coefficients of the `m`-th cyclotomic polynomial, lowest degree first.
pub fn cyclotomic_poly(m: u32) -> Arc<Vec<i64>> {
    assert!(m >= 1, "cyclotomic order must be positive");
    if m <= TABLE_SIZE {
        return cyclotomic_table()[m as usize].clone();
    }
    Arc::new(compute_cyclotomic(m, cyclotomic_poly))
}

fn compute_cyclotomic(m: u32, lower: impl Fn(u32) -> Arc<Vec<i64>>) -> Vec<i64> {
    // x^m - 1 divided by every Φ_d with d | m, d < m.
    let mut num = vec![0i64; m as usize + 1];
    num[0] = -1;
    num[m as usize] = 1;
    for d in 1..m {
        if m % d == 0 {
            num = div_monic_exact(&num, &lower(d));
        }
    }
    num
}

fn div_monic_exact(num: &[i64], den: &[i64]) -> Vec<i64> {
    let mut rem = num.to_vec();
    let dd = den.len() - 1;
    let nd = num.len() - 1;
    let mut quot = vec![0i64; nd - dd + 1];
    for k in (0..=nd - dd).rev() {
        let c = rem[k + dd];
        quot[k] = c;
        if c != 0 {
            for (i, &di) in den.iter().enumerate() {
                rem[k + i] -= c * di;
            }
        }
    }
    debug_assert!(rem.iter().all(|&r| r == 0));
    quot
}

/// Euler's totient.
pub fn euler_phi(m: u32) -> usize {
    cyclotomic_poly(m).len() - 1
}

#[derive(Clone)]
pub struct CycElem {
    order: u32,
    coeffs: Vec<Rat>,
}

impl CycElem {
    pub fn from_rat(r: Rat) -> Self {
        CycElem {
            order: 1,
            coeffs: vec![r],
        }
    }

    pub fn from_int(n: i64) -> Self {
        Self::from_rat(Rat::from_integer(BigInt::from(n)))
    }

    pub fn zero() -> Self {
        Self::from_int(0)
    }

    pub fn one() -> Self {
        Self::from_int(1)
    }

    /// The primitive root `ζ_m = x mod Φ_m`.
    pub fn zeta(order: u32) -> Self {
        Self::zeta_power(order, 1)
    }

    /// `ζ_m^k` for any integer `k`.
    pub fn zeta_power(order: u32, k: i64) -> Self {
        let e = k.rem_euclid(order as i64) as usize;
        let mut dense = vec![Rat::zero(); e + 1];
        dense[e] = Rat::one();
        Self::from_dense(order, dense)
    }

    /// Builds an element from the coordinates of any polynomial in ζ, reducing modulo Φ_m.
    pub fn from_dense(order: u32, dense: Vec<Rat>) -> Self {
        let coeffs = reduce_mod_phi(dense, &cyclotomic_poly(order));
        CycElem { order, coeffs }.demote()
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    /// Power-basis coordinates; length is φ(order).
    pub fn coords(&self) -> &[Rat] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(Zero::is_zero)
    }

    pub fn is_one(&self) -> bool {
        self.order == 1 && self.coeffs[0].is_one()
    }

    pub fn as_rational(&self) -> Option<&Rat> {
        if self.order == 1 {
            Some(&self.coeffs[0])
        } else {
            None
        }
    }

    fn demote(mut self) -> Self {
        if self.order != 1 && self.coeffs[1..].iter().all(Zero::is_zero) {
            let c = std::mem::take(&mut self.coeffs[0]);
            return Self::from_rat(c);
        }
        self
    }

    /// Re-expresses `self` in `Q(ζ_target)`; `target` must be a multiple of the order.
    pub fn lift(&self, target: u32) -> Self {
        assert!(target % self.order == 0, "cannot lift order {} into {}", self.order, target);
        if target == self.order {
            return self.clone();
        }
        let step = (target / self.order) as usize;
        let mut dense = vec![Rat::zero(); (self.coeffs.len().max(1) - 1) * step + 1];
        for (k, c) in self.coeffs.iter().enumerate() {
            dense[k * step] = c.clone();
        }
        let coeffs = reduce_mod_phi(dense, &cyclotomic_poly(target));
        CycElem {
            order: target,
            coeffs,
        }
    }

    fn common(a: &Self, b: &Self) -> (Self, Self, u32) {
        let l = a.order.lcm(&b.order);
        (a.lift(l), b.lift(l), l)
    }

    fn zip_with(&self, other: &Self, f: impl Fn(&Rat, &Rat) -> Rat) -> Self {
        if self.order == other.order {
            let coeffs = self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| f(a, b)).collect();
            return CycElem { order: self.order, coeffs }.demote();
        }
        let (a, b, l) = Self::common(self, other);
        let coeffs = a.coeffs.iter().zip(&b.coeffs).map(|(x, y)| f(x, y)).collect();
        CycElem { order: l, coeffs }.demote()
    }

    pub fn add(&self, other: &Self) -> Self {
        if self.order == 1 && other.order == 1 {
            return Self::from_rat(&self.coeffs[0] + &other.coeffs[0]);
        }
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Self {
        if self.order == 1 && other.order == 1 {
            return Self::from_rat(&self.coeffs[0] - &other.coeffs[0]);
        }
        self.zip_with(other, |a, b| a - b)
    }

    pub fn neg(&self) -> Self {
        CycElem {
            order: self.order,
            coeffs: self.coeffs.iter().map(|c| -c).collect(),
        }
    }

    pub fn mul(&self, other: &Self) -> Self {
        if self.order == 1 && other.order == 1 {
            return Self::from_rat(&self.coeffs[0] * &other.coeffs[0]);
        }
        if other.order == 1 {
            return self.scale(&other.coeffs[0]);
        }
        if self.order == 1 {
            return other.scale(&self.coeffs[0]);
        }
        let (a, b, l) = if self.order == other.order {
            (self.clone(), other.clone(), self.order)
        } else {
            Self::common(self, other)
        };
        let mut dense = vec![Rat::zero(); a.coeffs.len() + b.coeffs.len() - 1];
        for (i, x) in a.coeffs.iter().enumerate() {
            if x.is_zero() {
                continue;
            }
            for (j, y) in b.coeffs.iter().enumerate() {
                if !y.is_zero() {
                    dense[i + j] += x * y;
                }
            }
        }
        Self::from_dense(l, dense)
    }

    pub fn scale(&self, r: &Rat) -> Self {
        CycElem {
            order: self.order,
            coeffs: self.coeffs.iter().map(|c| c * r).collect(),
        }
        .demote()
    }

    /// Multiplicative inverse; `None` for zero.
    pub fn inv(&self) -> Option<Self> {
        if self.is_zero() {
            return None;
        }
        if self.order == 1 {
            return Some(Self::from_rat(self.coeffs[0].recip()));
        }
        let phi: Vec<Rat> = cyclotomic_poly(self.order)
            .iter()
            .map(|&c| Rat::from_integer(BigInt::from(c)))
            .collect();
        let s = inverse_mod(&self.coeffs, &phi)?;
        Some(Self::from_dense(self.order, s))
    }

    pub fn pow(&self, mut e: u64) -> Self {
        let mut base = self.clone();
        let mut acc = Self::one();
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.mul(&base);
            }
        }
        acc
    }

    /// Sign of the first nonzero coordinate; zero for zero.
    pub fn leading_sign(&self) -> i32 {
        for c in &self.coeffs {
            if c.is_positive() {
                return 1;
            }
            if c.is_negative() {
                return -1;
            }
        }
        0
    }
}

impl PartialEq for CycElem {
    fn eq(&self, other: &Self) -> bool {
        if self.order == other.order {
            return self.coeffs == other.coeffs;
        }
        let (a, b, _) = Self::common(self, other);
        a.coeffs == b.coeffs
    }
}

impl Eq for CycElem {}

impl fmt::Debug for CycElem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for CycElem {
    /// Written as a polynomial in `zeta`, highest power first.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(r) = self.as_rational() {
            return write!(f, "{r}");
        }
        let mut first = true;
        for (k, c) in self.coeffs.iter().enumerate().rev() {
            if c.is_zero() {
                continue;
            }
            let mag = c.abs();
            let body = match (k, mag.is_one()) {
                (0, _) => format!("{mag}"),
                (1, true) => "zeta".to_string(),
                (1, false) => format!("{mag}*zeta"),
                (_, true) => format!("zeta^{k}"),
                (_, false) => format!("{mag}*zeta^{k}"),
            };
            if first {
                if c.is_negative() {
                    let explicit = super::mpoly::first_factor_has_power(&body);
                    write!(f, "{}", if explicit { "-1*" } else { "-" })?;
                }
                first = false;
            } else if c.is_negative() {
                write!(f, " - ")?;
            } else {
                write!(f, " + ")?;
            }
            write!(f, "{body}")?;
        }
        Ok(())
    }
}

fn reduce_mod_phi(mut dense: Vec<Rat>, phi: &[i64]) -> Vec<Rat> {
    let deg = phi.len() - 1;
    if dense.len() > deg {
        for d in (deg..dense.len()).rev() {
            let c = std::mem::take(&mut dense[d]);
            if c.is_zero() {
                continue;
            }
            let shift = d - deg;
            for (i, &p) in phi[..deg].iter().enumerate() {
                if p != 0 {
                    dense[shift + i] -= &c * Rat::from_integer(BigInt::from(p));
                }
            }
        }
    }
    dense.resize(deg, Rat::zero());
    dense
}

fn trim(mut p: Vec<Rat>) -> Vec<Rat> {
    while p.last().is_some_and(Zero::is_zero) {
        p.pop();
    }
    p
}

fn poly_divrem(a: &[Rat], b: &[Rat]) -> (Vec<Rat>, Vec<Rat>) {
    let b = trim(b.to_vec());
    let mut r = trim(a.to_vec());
    if r.len() < b.len() {
        return (vec![], r);
    }
    let lead = b.last().unwrap().clone();
    let mut q = vec![Rat::zero(); r.len() - b.len() + 1];
    while r.len() >= b.len() && !r.is_empty() {
        let shift = r.len() - b.len();
        let c = r.last().unwrap() / &lead;
        for (i, bi) in b.iter().enumerate() {
            r[shift + i] -= &c * bi;
        }
        q[shift] = c;
        r = trim(r);
    }
    (q, r)
}

fn poly_mul(a: &[Rat], b: &[Rat]) -> Vec<Rat> {
    if a.is_empty() || b.is_empty() {
        return vec![];
    }
    let mut out = vec![Rat::zero(); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    trim(out)
}

fn poly_sub(a: &[Rat], b: &[Rat]) -> Vec<Rat> {
    let n = a.len().max(b.len());
    let mut out = vec![Rat::zero(); n];
    for (i, x) in a.iter().enumerate() {
        out[i] += x;
    }
    for (i, y) in b.iter().enumerate() {
        out[i] -= y;
    }
    trim(out)
}

// Extended Euclid: s with s·a ≡ 1 (mod m).
fn inverse_mod(a: &[Rat], m: &[Rat]) -> Option<Vec<Rat>> {
    let (mut r0, mut r1) = (trim(m.to_vec()), trim(a.to_vec()));
    let (mut s0, mut s1): (Vec<Rat>, Vec<Rat>) = (vec![], vec![Rat::one()]);
    while !r1.is_empty() {
        let (q, r) = poly_divrem(&r0, &r1);
        let s = poly_sub(&s0, &poly_mul(&q, &s1));
        r0 = std::mem::replace(&mut r1, r);
        s0 = std::mem::replace(&mut s1, s);
    }
    if r0.len() != 1 {
        return None;
    }
    let c = r0[0].recip();
    Some(s0.into_iter().map(|x| x * &c).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_cyclotomic_polynomials() {
        assert_eq!(*cyclotomic_poly(1), vec![-1, 1]);
        assert_eq!(*cyclotomic_poly(2), vec![1, 1]);
        assert_eq!(*cyclotomic_poly(3), vec![1, 1, 1]);
        assert_eq!(*cyclotomic_poly(4), vec![1, 0, 1]);
        assert_eq!(*cyclotomic_poly(6), vec![1, -1, 1]);
        assert_eq!(*cyclotomic_poly(12), vec![1, 0, -1, 0, 1]);
        assert_eq!(euler_phi(7), 6);
        assert_eq!(euler_phi(200), 80);
    }

    #[test]
    fn zeta_cubed_is_one() {
        let z = CycElem::zeta(3);
        assert_eq!(z.mul(&z).mul(&z), CycElem::one());
        assert!(!z.mul(&z).is_one());
        assert_eq!(CycElem::zeta(2), CycElem::from_int(-1));
    }

    #[test]
    fn inverse_and_mixed_orders() {
        let a = CycElem::zeta(5).add(&CycElem::from_int(3));
        let inv = a.inv().unwrap();
        assert_eq!(a.mul(&inv), CycElem::one());
        // ζ_6^2 = ζ_3 in the compositum.
        let z6sq = CycElem::zeta(6).pow(2);
        assert_eq!(z6sq, CycElem::zeta(3));
        assert_eq!(CycElem::zeta_power(4, -1).mul(&CycElem::zeta(4)), CycElem::one());
    }

    #[test]
    fn display() {
        let a = CycElem::zeta(5).pow(2).sub(&CycElem::zeta(5)).add(&CycElem::from_int(2));
        assert_eq!(a.to_string(), "zeta^2 - zeta + 2");
        assert_eq!(CycElem::zeta(3).neg().to_string(), "-zeta");
    }
}
