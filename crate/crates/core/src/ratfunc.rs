//! Canonical rational functions: reduced fraction, monic denominator.
//!
//! Equal values have identical representations, which makes "residual is
//! exactly zero" a structural check everywhere above this module.

use crate::error::{Error, Result};
use crate::poly::{poly_gcd, Poly};
use crate::rat::Rat;
use crate::symbol::Symbol;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

#[derive(Clone, PartialEq, Eq)]
pub struct RatFunc {
    num: Poly,
    den: Poly,
}

impl RatFunc {
    /// Canonical form of `num/den`. Errors on a zero denominator.
    pub fn new(num: Poly, den: Poly) -> Result<Self> {
        if den.is_zero() {
            return Err(Error::DivisionByZero);
        }
        Ok(Self::normalize(num, den))
    }

    fn normalize(num: Poly, den: Poly) -> Self {
        debug_assert!(!den.is_zero());
        if num.is_zero() {
            return RatFunc { num: Poly::zero(), den: Poly::one() };
        }
        let g = poly_gcd(&num, &den);
        let (num, den) = if g.is_one() { (num, den) } else { (num.div_exact(&g), den.div_exact(&g)) };
        let lc = den.leading_coeff();
        if lc.is_one() {
            RatFunc { num, den }
        } else {
            let inv = lc.recip();
            RatFunc { num: num.scale(&inv), den: den.scale(&inv) }
        }
    }

    pub fn zero() -> Self {
        RatFunc { num: Poly::zero(), den: Poly::one() }
    }

    pub fn one() -> Self {
        RatFunc { num: Poly::one(), den: Poly::one() }
    }

    pub fn from_poly(p: Poly) -> Self {
        RatFunc { num: p, den: Poly::one() }
    }

    pub fn from_rat(r: Rat) -> Self {
        RatFunc::from_poly(Poly::constant(r))
    }

    pub fn from_int(n: i64) -> Self {
        RatFunc::from_rat(Rat::from_int(n))
    }

    pub fn var(s: Symbol) -> Self {
        RatFunc::from_poly(Poly::var(s))
    }

    pub fn num(&self) -> &Poly {
        &self.num
    }

    pub fn den(&self) -> &Poly {
        &self.den
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.num.is_one() && self.den.is_one()
    }

    pub fn is_constant(&self) -> bool {
        self.num.is_constant() && self.den.is_constant()
    }

    pub fn as_rat(&self) -> Option<Rat> {
        match (self.num.as_constant(), self.den.as_constant()) {
            (Some(n), Some(d)) => Some(&n / &d),
            _ => None,
        }
    }

    /// The numerator when the denominator is 1.
    pub fn as_poly(&self) -> Option<&Poly> {
        if self.den.is_one() {
            Some(&self.num)
        } else {
            None
        }
    }

    /// All variables occurring in numerator or denominator.
    pub fn vars(&self) -> Vec<Symbol> {
        let mut vs: Vec<Symbol> = self.num.vars().iter().chain(self.den.vars()).cloned().collect();
        vs.sort();
        vs.dedup();
        vs
    }

    pub fn contains_var(&self, v: &Symbol) -> bool {
        self.num.contains_var(v) || self.den.contains_var(v)
    }

    pub fn recip(&self) -> Result<Self> {
        if self.is_zero() {
            return Err(Error::DivisionByZero);
        }
        Ok(Self::normalize(self.den.clone(), self.num.clone()))
    }

    pub fn pow(&self, exp: i64) -> Self {
        if exp == 0 {
            return RatFunc::one();
        }
        let base = if exp < 0 {
            self.recip().expect("zero raised to a negative power")
        } else {
            self.clone()
        };
        let e = exp.unsigned_abs() as u32;
        RatFunc { num: base.num.pow(e), den: base.den.pow(e) }
    }

    pub fn try_div(&self, rhs: &RatFunc) -> Result<Self> {
        if rhs.is_zero() {
            return Err(Error::DivisionByZero);
        }
        Ok(self / rhs)
    }

    /// Applies the substitution `map` (identity for `None`) as a field
    /// homomorphism. Errors if the image denominator vanishes identically.
    pub fn substitute(&self, map: &dyn Fn(&Symbol) -> Option<RatFunc>) -> Result<Self> {
        let num = eval_poly(&self.num, map);
        let den = eval_poly(&self.den, map);
        if den.is_zero() {
            return Err(Error::DivisionByZero);
        }
        Ok(&num / &den)
    }

    /// Extends the per-variable derivation `rule` to the whole fraction via
    /// linearity, Leibniz and the quotient rule.
    pub fn derive_with(&self, rule: &dyn Fn(&Symbol) -> RatFunc) -> Self {
        let dn = poly_derive(&self.num, rule);
        if self.den.is_one() {
            return dn;
        }
        let dd = poly_derive(&self.den, rule);
        let den_rf = RatFunc::from_poly(self.den.clone());
        let num_rf = RatFunc::from_poly(self.num.clone());
        &(&(&dn * &den_rf) - &(&num_rf * &dd)) / &(&den_rf * &den_rf)
    }

    pub fn eval_f64(&self, values: &dyn Fn(&Symbol) -> f64) -> Result<f64> {
        let n = self.num.eval_f64(values);
        let d = self.den.eval_f64(values);
        if d == 0.0 {
            return Err(Error::Eval("pole at evaluation point".into()));
        }
        Ok(n / d)
    }

    /// Deterministic text form; `(num)/(den)` when the denominator is not 1.
    pub fn format_with(&self, fmt_var: &dyn Fn(&Symbol) -> String) -> String {
        if self.den.is_one() {
            self.num.format_with(fmt_var)
        } else {
            format!("({})/({})", self.num.format_with(fmt_var), self.den.format_with(fmt_var))
        }
    }
}

fn poly_derive(p: &Poly, rule: &dyn Fn(&Symbol) -> RatFunc) -> RatFunc {
    let mut acc = RatFunc::zero();
    for v in p.vars().to_vec() {
        let dv = rule(&v);
        if dv.is_zero() {
            continue;
        }
        let partial = p.partial(&v);
        if partial.is_zero() {
            continue;
        }
        acc = &acc + &(&RatFunc::from_poly(partial) * &dv);
    }
    acc
}

fn eval_poly(p: &Poly, map: &dyn Fn(&Symbol) -> Option<RatFunc>) -> RatFunc {
    let images: Vec<Option<RatFunc>> = p.vars().iter().map(map).collect();
    if images.iter().all(|i| i.is_none()) {
        return RatFunc::from_poly(p.clone());
    }
    let vars = p.vars().to_vec();
    let mut acc = RatFunc::zero();
    for (m, c) in p.terms() {
        let mut term = RatFunc::from_rat(c.clone());
        for (i, &e) in m.0.iter().enumerate() {
            if e == 0 {
                continue;
            }
            let factor = match &images[i] {
                Some(img) => img.clone(),
                None => RatFunc::var(vars[i].clone()),
            };
            term = &term * &factor.pow(e as i64);
        }
        acc = &acc + &term;
    }
    acc
}

impl Add for &RatFunc {
    type Output = RatFunc;
    fn add(self, rhs: &RatFunc) -> RatFunc {
        if self.is_zero() {
            return rhs.clone();
        }
        if rhs.is_zero() {
            return self.clone();
        }
        let num = &(&self.num * &rhs.den) + &(&rhs.num * &self.den);
        let den = &self.den * &rhs.den;
        RatFunc::normalize(num, den)
    }
}

impl Sub for &RatFunc {
    type Output = RatFunc;
    fn sub(self, rhs: &RatFunc) -> RatFunc {
        self + &(-rhs)
    }
}

impl Neg for &RatFunc {
    type Output = RatFunc;
    fn neg(self) -> RatFunc {
        RatFunc { num: -&self.num, den: self.den.clone() }
    }
}

impl Mul for &RatFunc {
    type Output = RatFunc;
    fn mul(self, rhs: &RatFunc) -> RatFunc {
        if self.is_zero() || rhs.is_zero() {
            return RatFunc::zero();
        }
        RatFunc::normalize(&self.num * &rhs.num, &self.den * &rhs.den)
    }
}

impl Div for &RatFunc {
    type Output = RatFunc;
    fn div(self, rhs: &RatFunc) -> RatFunc {
        assert!(!rhs.is_zero(), "division by zero rational function");
        RatFunc::normalize(&self.num * &rhs.den, &self.den * &rhs.num)
    }
}

impl fmt::Display for RatFunc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.format_with(&|s: &Symbol| s.as_str().to_string()))
    }
}

impl fmt::Debug for RatFunc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn x() -> Poly {
        Poly::var(Symbol::new("x"))
    }

    #[test]
    fn cancellation() {
        // (x^2-1)/(x-1) -> x+1
        let num = &x().pow(2) - &Poly::one();
        let den = &x() - &Poly::one();
        let r = RatFunc::new(num, den).unwrap();
        assert_eq!(r, RatFunc::from_poly(&x() + &Poly::one()));
    }

    #[test]
    fn content_removal() {
        // (2x)/4 -> x/2 with denominator 1
        let num = x().scale(&Rat::from_int(2));
        let den = Poly::from_int(4);
        let r = RatFunc::new(num, den).unwrap();
        assert_eq!(r, RatFunc::from_poly(x().scale(&Rat::new(1, 2))));
        assert!(r.den().is_one());
    }

    #[test]
    fn scaled_cancellation() {
        // (x^2-1)/(2x-2) -> (x+1)/2; cross-multiplication oracle.
        let num = &x().pow(2) - &Poly::one();
        let den = (&x() - &Poly::one()).scale(&Rat::from_int(2));
        let r = RatFunc::new(num.clone(), den.clone()).unwrap();
        let expect = RatFunc::from_poly((&x() + &Poly::one()).scale(&Rat::new(1, 2)));
        assert_eq!(r, expect);
        // r * den == num exactly
        let back = &r * &RatFunc::from_poly(den);
        assert_eq!(back, RatFunc::from_poly(num));
    }

    #[test]
    fn normalize_is_idempotent() {
        let num = &x().pow(3) + &x();
        let den = x().scale(&Rat::from_int(-3));
        let r = RatFunc::new(num, den).unwrap();
        let again = RatFunc::new(r.num().clone(), r.den().clone()).unwrap();
        assert_eq!(r, again);
    }

    #[test]
    fn zero_denominator_rejected() {
        assert!(RatFunc::new(Poly::one(), Poly::zero()).is_err());
    }

    #[test]
    fn substitution_is_homomorphic() {
        // f = (x+1)/x at x -> 1/y gives (1/y+1)/(1/y) = 1+y
        let f = RatFunc::new(&x() + &Poly::one(), x()).unwrap();
        let y = Symbol::new("y");
        let img = RatFunc::new(Poly::one(), Poly::var(y.clone())).unwrap();
        let sub = f
            .substitute(&move |s: &Symbol| if s.as_str() == "x" { Some(img.clone()) } else { None })
            .unwrap();
        assert_eq!(sub, RatFunc::from_poly(&Poly::var(y) + &Poly::one()));
    }
}
