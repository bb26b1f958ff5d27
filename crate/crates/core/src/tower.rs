//! Differential-field towers: a base variable, parameters (constants), and
//! generators of exponential, logarithmic or primitive kind, each carrying
//! its derivation rule.
//!
//! Towers are immutable; extension returns a new tower sharing the lower
//! levels, and elements of a prefix tower combine freely with elements of
//! any extension of it.

use crate::error::{Error, Result};
use crate::quad::adaptive_simpson;
use crate::rat::Rat;
use crate::ratfunc::RatFunc;
use crate::symbol::Symbol;
use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::sync::Arc;

/// Derivation rule of a tower generator.
#[derive(Clone, PartialEq)]
pub enum GenKind {
    /// The independent variable; derivative 1.
    Base,
    /// theta' = arg' * theta (informally theta = exp(arg)).
    Exp { arg: RatFunc },
    /// theta' = arg'/arg (informally theta = log(arg)).
    Log { arg: RatFunc },
    /// theta' = integrand, theta(0) = 0 (an unevaluated integral from 0).
    Primitive { integrand: RatFunc },
    /// w = t * theta for an exponential generator theta with argument u;
    /// w' = theta + u' * w. Carries the sigma-action on t*e^{-at} without
    /// mapping the base variable itself.
    TimesBase { exp_gen: Symbol },
}

impl GenKind {
    pub fn kind_name(&self) -> &'static str {
        match self {
            GenKind::Base => "base",
            GenKind::Exp { .. } => "exponential",
            GenKind::Log { .. } => "logarithmic",
            GenKind::Primitive { .. } => "primitive",
            GenKind::TimesBase { .. } => "times_base",
        }
    }
}

/// Extension request passed to [`Tower::extend`].
pub enum ExtensionKind {
    Exponential(TowerElem),
    Logarithmic(TowerElem),
    Primitive(TowerElem),
    TimesBase(Symbol),
}

#[derive(Clone, PartialEq)]
pub struct TowerGen {
    name: Symbol,
    kind: GenKind,
    /// Precomputed derivative, a rational function in the tower variables.
    deriv: RatFunc,
}

impl TowerGen {
    pub fn name(&self) -> &Symbol {
        &self.name
    }

    pub fn kind(&self) -> &GenKind {
        &self.kind
    }

    pub fn deriv(&self) -> &RatFunc {
        &self.deriv
    }
}

struct TowerInner {
    base: Symbol,
    params: Vec<Symbol>,
    gens: Vec<TowerGen>,
}

/// An immutable differential-field tower.
#[derive(Clone)]
pub struct Tower(Arc<TowerInner>);

impl Tower {
    /// The rational base field Q(params)(base) with d(base)/d(base) = 1.
    pub fn base_field(base: &str, params: &[&str]) -> Tower {
        let base = Symbol::new(base);
        let mut ps: Vec<Symbol> = params.iter().map(|p| Symbol::new(p)).collect();
        ps.sort();
        ps.dedup();
        assert!(!ps.contains(&base), "base variable listed as parameter");
        let base_gen = TowerGen { name: base.clone(), kind: GenKind::Base, deriv: RatFunc::one() };
        Tower(Arc::new(TowerInner { base, params: ps, gens: vec![base_gen] }))
    }

    pub fn base(&self) -> &Symbol {
        &self.0.base
    }

    pub fn params(&self) -> &[Symbol] {
        &self.0.params
    }

    pub fn gens(&self) -> &[TowerGen] {
        &self.0.gens
    }

    pub fn gen_named(&self, name: &str) -> Option<&TowerGen> {
        let sym = Symbol::new(name);
        self.0.gens.iter().find(|g| g.name == sym)
    }

    fn name_in_use(&self, name: &Symbol) -> bool {
        self.0.params.contains(name) || self.0.gens.iter().any(|g| &g.name == name)
    }

    fn is_param(&self, name: &Symbol) -> bool {
        self.0.params.contains(name)
    }

    /// Checks that every variable of `rf` is a parameter or a generator.
    fn check_vars(&self, rf: &RatFunc) -> Result<()> {
        for v in rf.vars() {
            if !self.name_in_use(&v) {
                return Err(Error::Tower(format!("variable `{v}` is not in the tower")));
            }
        }
        Ok(())
    }

    /// Wraps a rational function in the tower variables as an element.
    pub fn elem(&self, value: RatFunc) -> Result<TowerElem> {
        self.check_vars(&value)?;
        Ok(TowerElem { tower: self.clone(), value })
    }

    pub fn constant(&self, r: Rat) -> TowerElem {
        TowerElem { tower: self.clone(), value: RatFunc::from_rat(r) }
    }

    pub fn int(&self, n: i64) -> TowerElem {
        self.constant(Rat::from_int(n))
    }

    pub fn zero(&self) -> TowerElem {
        self.int(0)
    }

    pub fn one(&self) -> TowerElem {
        self.int(1)
    }

    /// The parameter `name` as an element (derivative zero).
    pub fn param(&self, name: &str) -> TowerElem {
        let sym = Symbol::new(name);
        assert!(self.is_param(&sym), "`{name}` is not a declared parameter");
        TowerElem { tower: self.clone(), value: RatFunc::var(sym) }
    }

    /// The base variable as an element.
    pub fn base_elem(&self) -> TowerElem {
        TowerElem { tower: self.clone(), value: RatFunc::var(self.0.base.clone()) }
    }

    /// The generator `name` as an element.
    pub fn gen(&self, name: &str) -> Result<TowerElem> {
        let sym = Symbol::new(name);
        if !self.0.gens.iter().any(|g| g.name == sym) {
            return Err(Error::Tower(format!("no generator named `{name}`")));
        }
        Ok(TowerElem { tower: self.clone(), value: RatFunc::var(sym) })
    }

    /// Adds one generator. The argument must live over the existing tower.
    pub fn extend(&self, name: &str, kind: ExtensionKind) -> Result<Tower> {
        let sym = Symbol::new(name);
        if self.name_in_use(&sym) {
            return Err(Error::Tower(format!("generator name `{name}` already in use")));
        }
        let theta = RatFunc::var(sym.clone());
        let (kind, deriv) = match kind {
            ExtensionKind::Exponential(arg) => {
                let arg = arg.promote(self)?;
                let d_arg = arg.derive();
                let deriv = &d_arg.value * &theta;
                (GenKind::Exp { arg: arg.value }, deriv)
            }
            ExtensionKind::Logarithmic(arg) => {
                let arg = arg.promote(self)?;
                if arg.value.is_zero() {
                    return Err(Error::Tower("logarithm of zero".into()));
                }
                let d_arg = arg.derive();
                let deriv = &d_arg.value / &arg.value;
                (GenKind::Log { arg: arg.value }, deriv)
            }
            ExtensionKind::Primitive(integrand) => {
                let integrand = integrand.promote(self)?;
                (GenKind::Primitive { integrand: integrand.value.clone() }, integrand.value)
            }
            ExtensionKind::TimesBase(exp_name) => {
                let gen = self
                    .0
                    .gens
                    .iter()
                    .find(|g| g.name == exp_name)
                    .ok_or_else(|| Error::Tower(format!("no generator named `{exp_name}`")))?;
                let GenKind::Exp { arg } = &gen.kind else {
                    return Err(Error::Tower(format!("`{exp_name}` is not exponential")));
                };
                let u_prime = self.derive_rf(arg);
                let deriv = &RatFunc::var(exp_name.clone()) + &(&u_prime * &theta);
                (GenKind::TimesBase { exp_gen: exp_name }, deriv)
            }
        };
        let mut gens = self.0.gens.clone();
        gens.push(TowerGen { name: sym, kind, deriv });
        Ok(Tower(Arc::new(TowerInner {
            base: self.0.base.clone(),
            params: self.0.params.clone(),
            gens,
        })))
    }

    /// Derivation of a raw rational function in this tower's variables.
    fn derive_rf(&self, rf: &RatFunc) -> RatFunc {
        rf.derive_with(&|v: &Symbol| {
            for g in &self.0.gens {
                if &g.name == v {
                    return g.deriv.clone();
                }
            }
            RatFunc::zero() // parameters are constants
        })
    }

    /// True if `self` and `other` are the same tower or one extends the other.
    pub fn compatible(&self, other: &Tower) -> bool {
        self.join(other).is_some()
    }

    fn join(&self, other: &Tower) -> Option<Tower> {
        if Arc::ptr_eq(&self.0, &other.0) {
            return Some(self.clone());
        }
        if self.0.base != other.0.base || self.0.params != other.0.params {
            return None;
        }
        let (small, large) =
            if self.0.gens.len() <= other.0.gens.len() { (self, other) } else { (other, self) };
        if large.0.gens[..small.0.gens.len()] == small.0.gens[..] {
            Some(large.clone())
        } else {
            None
        }
    }
}

impl fmt::Debug for Tower {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Tower(Q({:?})({}", self.0.params, self.0.base)?;
        for g in &self.0.gens[1..] {
            write!(f, ", {}:{}", g.name, g.kind.kind_name())?;
        }
        write!(f, "))")
    }
}

/// An element of a tower: a rational function in the tower generators with
/// coefficients in the parametric constant field.
#[derive(Clone)]
pub struct TowerElem {
    tower: Tower,
    value: RatFunc,
}

impl TowerElem {
    pub fn tower(&self) -> &Tower {
        &self.tower
    }

    pub fn value(&self) -> &RatFunc {
        &self.value
    }

    pub fn into_value(self) -> RatFunc {
        self.value
    }

    pub fn is_zero(&self) -> bool {
        self.value.is_zero()
    }

    /// Reinterprets over an extension of the element's tower.
    pub fn promote(&self, to: &Tower) -> Result<TowerElem> {
        let joined = self
            .tower
            .join(to)
            .ok_or_else(|| Error::Tower("element belongs to an incompatible tower".into()))?;
        // `to` must be the larger of the two.
        if joined.0.gens.len() != to.0.gens.len() {
            return Err(Error::Tower("element uses generators outside the target tower".into()));
        }
        Ok(TowerElem { tower: to.clone(), value: self.value.clone() })
    }

    /// Exact derivation extending d/d(base) by the generator rules.
    pub fn derive(&self) -> TowerElem {
        TowerElem { tower: self.tower.clone(), value: self.tower.derive_rf(&self.value) }
    }

    /// True iff the derivative is exactly zero. Sound and complete while the
    /// generators are algebraically independent over the constants.
    pub fn is_constant(&self) -> bool {
        self.derive().value.is_zero()
    }

    pub fn pow(&self, exp: i64) -> TowerElem {
        TowerElem { tower: self.tower.clone(), value: self.value.pow(exp) }
    }

    pub fn scale(&self, r: &Rat) -> TowerElem {
        TowerElem {
            tower: self.tower.clone(),
            value: &self.value * &RatFunc::from_rat(r.clone()),
        }
    }

    fn binop(&self, rhs: &TowerElem, op: impl Fn(&RatFunc, &RatFunc) -> RatFunc) -> TowerElem {
        let tower = self
            .tower
            .join(&rhs.tower)
            .expect("operands belong to incompatible towers");
        TowerElem { tower, value: op(&self.value, &rhs.value) }
    }
}

impl PartialEq for TowerElem {
    fn eq(&self, other: &Self) -> bool {
        self.tower.compatible(&other.tower) && self.value == other.value
    }
}

impl Add for &TowerElem {
    type Output = TowerElem;
    fn add(self, rhs: &TowerElem) -> TowerElem {
        self.binop(rhs, |a, b| a + b)
    }
}

impl Sub for &TowerElem {
    type Output = TowerElem;
    fn sub(self, rhs: &TowerElem) -> TowerElem {
        self.binop(rhs, |a, b| a - b)
    }
}

impl Mul for &TowerElem {
    type Output = TowerElem;
    fn mul(self, rhs: &TowerElem) -> TowerElem {
        self.binop(rhs, |a, b| a * b)
    }
}

impl Div for &TowerElem {
    type Output = TowerElem;
    fn div(self, rhs: &TowerElem) -> TowerElem {
        self.binop(rhs, |a, b| a / b)
    }
}

impl Neg for &TowerElem {
    type Output = TowerElem;
    fn neg(self) -> TowerElem {
        TowerElem { tower: self.tower.clone(), value: -&self.value }
    }
}

impl fmt::Debug for TowerElem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(&self.value, f)
    }
}

/// A differential endomorphism fixing the constants and every unmapped
/// generator. Commutation with the derivation is checked at construction.
pub struct SigmaSpec {
    tower: Tower,
    images: BTreeMap<Symbol, TowerElem>,
}

impl SigmaSpec {
    pub fn new(tower: &Tower, images: Vec<(&str, TowerElem)>) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (name, img) in images {
            let sym = Symbol::new(name);
            if !tower.0.gens.iter().any(|g| g.name == sym && g.kind != GenKind::Base) {
                return Err(Error::Tower(format!(
                    "sigma may only map non-base generators, `{name}` is not one"
                )));
            }
            let img = img.promote(tower)?;
            map.insert(sym, img);
        }
        let sigma = SigmaSpec { tower: tower.clone(), images: map };
        // The induced map commutes with the derivation iff it does on every
        // generator.
        for g in &tower.0.gens {
            let image = sigma.apply_rf(&RatFunc::var(g.name.clone()))?;
            let lhs = tower.derive_rf(&image);
            let rhs = sigma.apply_rf(&g.deriv)?;
            if lhs != rhs {
                return Err(Error::Tower(format!(
                    "sigma does not commute with the derivation on `{}`",
                    g.name
                )));
            }
        }
        Ok(sigma)
    }

    fn apply_rf(&self, rf: &RatFunc) -> Result<RatFunc> {
        rf.substitute(&|v: &Symbol| self.images.get(v).map(|e| e.value.clone()))
    }

    pub fn apply(&self, e: &TowerElem) -> Result<TowerElem> {
        let e = e.promote(&self.tower)?;
        Ok(TowerElem { tower: self.tower.clone(), value: self.apply_rf(&e.value)? })
    }
}

/// Numeric evaluation of tower elements at a time point, with primitives
/// handled by adaptive quadrature from their lower limit 0.
pub struct NumericEval {
    tower: Tower,
    param_values: BTreeMap<Symbol, f64>,
    prec: f64,
}

impl NumericEval {
    /// Parameters are looked up lazily; a missing value only errors when the
    /// evaluated element actually mentions it.
    pub fn new(tower: &Tower, param_values: BTreeMap<Symbol, f64>, prec: f64) -> Result<Self> {
        Ok(NumericEval { tower: tower.clone(), param_values, prec: prec.max(1e-14) })
    }

    pub fn eval(&self, e: &TowerElem, t: f64) -> Result<f64> {
        let e = e.promote(&self.tower)?;
        let mut memo: HashMap<(usize, u64, u64), f64> = HashMap::new();
        self.eval_rf(&e.value, t, self.prec, &mut memo)
    }

    fn eval_rf(
        &self,
        rf: &RatFunc,
        t: f64,
        tol: f64,
        memo: &mut HashMap<(usize, u64, u64), f64>,
    ) -> Result<f64> {
        // Resolve every variable first so generator errors surface cleanly.
        let mut values: BTreeMap<Symbol, f64> = BTreeMap::new();
        for v in rf.vars() {
            let val = self.var_value(&v, t, tol, memo)?;
            values.insert(v, val);
        }
        rf.eval_f64(&|s: &Symbol| values[s])
    }

    fn var_value(
        &self,
        v: &Symbol,
        t: f64,
        tol: f64,
        memo: &mut HashMap<(usize, u64, u64), f64>,
    ) -> Result<f64> {
        if let Some(val) = self.param_values.get(v) {
            return Ok(*val);
        }
        let idx = self
            .tower
            .0
            .gens
            .iter()
            .position(|g| &g.name == v)
            .ok_or_else(|| Error::Eval(format!("variable `{v}` has no numeric value")))?;
        let key = (idx, t.to_bits(), tol.to_bits());
        if let Some(&val) = memo.get(&key) {
            return Ok(val);
        }
        let g = &self.tower.0.gens[idx];
        let val = match &g.kind {
            GenKind::Base => t,
            GenKind::Exp { arg } => self.eval_rf(arg, t, tol, memo)?.exp(),
            GenKind::Log { arg } => {
                let a = self.eval_rf(arg, t, tol, memo)?;
                if a <= 0.0 {
                    return Err(Error::Eval(format!("log of non-positive value {a}")));
                }
                a.ln()
            }
            GenKind::Primitive { integrand } => {
                // Per-level error budget: half the remaining tolerance.
                let inner_tol = 0.5 * tol;
                let integrand = integrand.clone();
                let mut f = |tau: f64| self.eval_rf(&integrand, tau, inner_tol, memo);
                adaptive_simpson(&mut f, 0.0, t, inner_tol)?
            }
            GenKind::TimesBase { exp_gen } => {
                let e = self.var_value(&exp_gen.clone(), t, tol, memo)?;
                t * e
            }
        };
        memo.insert(key, val);
        Ok(val)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seir_base() -> Tower {
        Tower::base_field("t", &["a", "b", "r", "C2", "C3", "c"])
    }

    /// Q(params)(t, ea = exp(-a t)).
    fn tower_ea() -> Tower {
        let t0 = seir_base();
        let arg = -&(&t0.param("a") * &t0.base_elem());
        t0.extend("ea", ExtensionKind::Exponential(arg)).unwrap()
    }

    #[test]
    fn exponential_rule() {
        let tw = tower_ea();
        let ea = tw.gen("ea").unwrap();
        // (ea^2)' = -2a ea^2
        let d = ea.pow(2).derive();
        let expect = &(&ea.pow(2) * &tw.param("a")).scale(&Rat::from_int(-2));
        assert_eq!(&d, expect);
    }

    #[test]
    fn product_rule_with_base() {
        let tw = tower_ea();
        let ea = tw.gen("ea").unwrap();
        let t = tw.base_elem();
        // (t ea)' = ea - a t ea
        let d = (&t * &ea).derive();
        let expect = &ea - &(&(&tw.param("a") * &t) * &ea);
        assert_eq!(d, expect);
    }

    #[test]
    fn constants_have_zero_derivative() {
        let tw = tower_ea();
        assert!(tw.constant(Rat::new(5, 7)).is_constant());
        assert!(tw.param("a").is_constant());
        assert!(!tw.gen("ea").unwrap().is_constant());
        // ea * ea^{-1} = 1 is constant after canonicalization
        let e = &tw.gen("ea").unwrap() * &tw.gen("ea").unwrap().pow(-1);
        assert!(e.is_constant());
        assert!(e.value().is_one());
    }

    #[test]
    fn log_rule() {
        let t0 = Tower::base_field("x", &[]);
        let tw = t0.extend("th2", ExtensionKind::Logarithmic(t0.base_elem())).unwrap();
        let d = tw.gen("th2").unwrap().derive();
        let expect = &tw.one() / &tw.base_elem();
        assert_eq!(d, expect);
    }

    #[test]
    fn xbar_extension_matches_derivation() {
        // thX = exp((r C2 / a) ea) has thX' = -r C2 ea thX
        let tw = tower_ea();
        let coeff = &(&tw.param("r") * &tw.param("C2")) / &tw.param("a");
        let arg = &coeff * &tw.gen("ea").unwrap();
        let tw2 = tw.extend("thX", ExtensionKind::Exponential(arg)).unwrap();
        let d = tw2.gen("thX").unwrap().derive();
        let expect = -&(&(&(&tw2.param("r") * &tw2.param("C2")) * &tw2.gen("ea").unwrap())
            * &tw2.gen("thX").unwrap());
        assert_eq!(d, expect);
    }

    #[test]
    fn dependency_and_duplicates_rejected() {
        let tw = tower_ea();
        // duplicate name
        assert!(tw.extend("ea", ExtensionKind::Exponential(tw.base_elem())).is_err());
        // argument from an unrelated tower
        let other = Tower::base_field("x", &[]);
        assert!(tw.extend("bad", ExtensionKind::Exponential(other.base_elem())).is_err());
        // log of zero
        assert!(tw.extend("lz", ExtensionKind::Logarithmic(tw.zero())).is_err());
    }

    #[test]
    fn sigma_scales_exponential() {
        // sigma(eb) = c eb fixes ea and commutes with the derivation.
        let tw = tower_ea();
        let arg = -&(&tw.param("b") * &tw.base_elem());
        let tw = tw.extend("eb", ExtensionKind::Exponential(arg)).unwrap();
        let image = &tw.param("c") * &tw.gen("eb").unwrap();
        let sigma = SigmaSpec::new(&tw, vec![("eb", image)]).unwrap();
        let eb = tw.gen("eb").unwrap();
        assert_eq!(sigma.apply(&eb).unwrap(), &tw.param("c") * &eb);
        let ea = tw.gen("ea").unwrap();
        assert_eq!(sigma.apply(&ea).unwrap(), ea);
    }

    #[test]
    fn sigma_rejects_noncommuting_map() {
        let tw = tower_ea();
        // ea -> ea + 1 does not commute with the derivation.
        let bad = &tw.gen("ea").unwrap() + &tw.one();
        assert!(SigmaSpec::new(&tw, vec![("ea", bad)]).is_err());
    }

    #[test]
    fn numeric_exponential_and_primitive() {
        let tw = tower_ea();
        // J(t) = int_0^t ea dtau; with a = 1, J(1) = 1 - e^{-1}.
        let integrand = tw.gen("ea").unwrap();
        let tw2 = tw.extend("J", ExtensionKind::Primitive(integrand)).unwrap();
        let mut vals = BTreeMap::new();
        for (k, v) in
            [("a", 1.0), ("b", 2.0), ("r", 1.0), ("C2", 1.0), ("C3", 1.0), ("c", 1.0)]
        {
            vals.insert(Symbol::new(k), v);
        }
        let ev = NumericEval::new(&tw2, vals, 1e-10).unwrap();
        let ea = tw2.gen("ea").unwrap();
        assert!((ev.eval(&ea, 0.0).unwrap() - 1.0).abs() < 1e-12);
        let j = tw2.gen("J").unwrap();
        let expect = 1.0 - (-1.0f64).exp();
        assert!((ev.eval(&j, 1.0).unwrap() - expect).abs() < 1e-9);
    }
}
