//! Rational parameter assignments for numeric evaluation.

use crate::error::{Error, Result};
use crate::rat::Rat;
use crate::symbol::Symbol;
use std::collections::BTreeMap;

/// Maps parameter symbols to exact rationals.
///
/// `C3 = exp(-r*C2/a)` is transcendental, so that relation is not (and cannot
/// be) stored here; numeric evaluation derives the `C3` value from `r`, `C2`
/// and `a` via [`ParamAssignment::f64_values_with_c3`].
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ParamAssignment {
    values: BTreeMap<Symbol, Rat>,
}

impl ParamAssignment {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_pairs(pairs: &[(&str, Rat)]) -> Self {
        let mut p = Self::new();
        for (name, value) in pairs {
            p.set(Symbol::new(name), value.clone());
        }
        p
    }

    /// Parses `a=1,b=2/3,r=-1` style CLI input.
    pub fn parse(text: &str) -> Result<Self> {
        let mut p = Self::new();
        for item in text.split(',') {
            let item = item.trim();
            if item.is_empty() {
                continue;
            }
            let (name, value) = item
                .split_once('=')
                .ok_or_else(|| Error::InvalidParams(format!("expected k=v, got `{item}`")))?;
            let rat: Rat = value
                .trim()
                .parse()
                .map_err(|e| Error::InvalidParams(format!("bad value for `{name}`: {e}")))?;
            p.set(Symbol::new(name.trim()), rat);
        }
        Ok(p)
    }

    pub fn set(&mut self, sym: Symbol, value: Rat) {
        self.values.insert(sym, value);
    }

    pub fn get(&self, sym: &Symbol) -> Option<&Rat> {
        self.values.get(sym)
    }

    pub fn get_named(&self, name: &str) -> Option<&Rat> {
        self.values.get(&Symbol::new(name))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Symbol, &Rat)> {
        self.values.iter()
    }

    /// Requires every listed symbol to be assigned a value.
    pub fn require(&self, syms: &[Symbol]) -> Result<()> {
        for s in syms {
            if !self.values.contains_key(s) {
                return Err(Error::InvalidParams(format!("parameter `{s}` not assigned")));
            }
        }
        Ok(())
    }

    pub fn f64_values(&self) -> BTreeMap<Symbol, f64> {
        self.values.iter().map(|(s, r)| (s.clone(), r.to_f64())).collect()
    }

    /// Float values with the `C3 = exp(-r*C2/a)` relation enforced.
    /// Any explicitly assigned `C3` is overridden by the derived value.
    pub fn f64_values_with_c3(&self) -> Result<BTreeMap<Symbol, f64>> {
        let mut vals = self.f64_values();
        let a = self
            .get_named("a")
            .ok_or_else(|| Error::InvalidParams("parameter `a` not assigned".into()))?;
        if a.is_zero() {
            return Err(Error::InvalidParams("a must be nonzero".into()));
        }
        let r = self
            .get_named("r")
            .ok_or_else(|| Error::InvalidParams("parameter `r` not assigned".into()))?;
        let c2 = self
            .get_named("C2")
            .ok_or_else(|| Error::InvalidParams("parameter `C2` not assigned".into()))?;
        let c3 = (-(r.to_f64() * c2.to_f64()) / a.to_f64()).exp();
        vals.insert(Symbol::new("C3"), c3);
        Ok(vals)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_lookup() {
        let p = ParamAssignment::parse("a=1, b = 2/3 ,r=-2").unwrap();
        assert_eq!(p.get_named("b"), Some(&Rat::new(2, 3)));
        assert_eq!(p.get_named("r"), Some(&Rat::from_int(-2)));
        assert!(p.get_named("z").is_none());
    }

    #[test]
    fn c3_relation_enforced() {
        let p = ParamAssignment::parse("a=1,b=2,r=1,C2=1,C3=99").unwrap();
        let vals = p.f64_values_with_c3().unwrap();
        let c3 = vals[&Symbol::new("C3")];
        assert!((c3 - (-1.0f64).exp()).abs() < 1e-15);
    }
}
