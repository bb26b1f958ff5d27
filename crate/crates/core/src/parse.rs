//! Expression grammar, parser, and pretty-printer.
//!
//! ```text
//! expr     := term (("+" | "-") term)*
//! term     := unary (("*" | "/") unary)*
//! unary    := "-" unary | factor
//! factor   := base ("^" int)?
//! base     := rational | ident | "(" expr ")" | ("exp" | "log") "(" expr ")"
//! rational := int ("/" int)?
//! ```
//!
//! Whitespace is insignificant, exponents are literal integers, and there is
//! no implicit multiplication. The same grammar is the text format for CLI
//! inputs and for `name = expr` catalog files.

use crate::error::{Error, Result};
use crate::rat::Rat;
use crate::symbol::Symbol;
use crate::tower::{ExtensionKind, GenKind, Tower, TowerElem};

#[derive(Clone, Debug, PartialEq)]
pub enum Ast {
    Number(Rat),
    Symbol(Symbol),
    Add(Box<Ast>, Box<Ast>),
    Sub(Box<Ast>, Box<Ast>),
    Mul(Box<Ast>, Box<Ast>),
    Div(Box<Ast>, Box<Ast>),
    Pow(Box<Ast>, i64),
    Exp(Box<Ast>),
    Log(Box<Ast>),
    Neg(Box<Ast>),
}

/// Declared names, used to reject unknown identifiers at parse time.
/// Names are unique across the three categories.
#[derive(Clone, Debug, Default)]
pub struct SymbolTable {
    params: Vec<Symbol>,
    states: Vec<Symbol>,
    gens: Vec<Symbol>,
}

impl SymbolTable {
    pub fn new() -> Self {
        Self::default()
    }

    fn check_fresh(&self, s: &Symbol) {
        assert!(!self.contains(s), "name `{s}` declared twice");
    }

    pub fn declare_param(&mut self, name: &str) {
        let s = Symbol::new(name);
        self.check_fresh(&s);
        self.params.push(s);
    }

    pub fn declare_state(&mut self, name: &str) {
        let s = Symbol::new(name);
        self.check_fresh(&s);
        self.states.push(s);
    }

    pub fn declare_gen(&mut self, name: &str) {
        let s = Symbol::new(name);
        self.check_fresh(&s);
        self.gens.push(s);
    }

    pub fn with_params(mut self, names: &[&str]) -> Self {
        for n in names {
            self.declare_param(n);
        }
        self
    }

    pub fn with_states(mut self, names: &[&str]) -> Self {
        for n in names {
            self.declare_state(n);
        }
        self
    }

    /// Declares the tower's parameters, base variable and generators.
    pub fn with_tower(mut self, tower: &Tower) -> Self {
        for p in tower.params() {
            if !self.contains(p) {
                self.params.push(p.clone());
            }
        }
        for g in tower.gens() {
            if !self.contains(g.name()) {
                self.gens.push(g.name().clone());
            }
        }
        self
    }

    pub fn contains(&self, s: &Symbol) -> bool {
        self.params.contains(s) || self.states.contains(s) || self.gens.contains(s)
    }

    pub fn states(&self) -> &[Symbol] {
        &self.states
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Int(String),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
}

fn tokenize(text: &str) -> Result<Vec<(Tok, usize)>> {
    let bytes = text.as_bytes();
    let mut toks = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        match c {
            ' ' | '\t' | '\r' | '\n' => i += 1,
            '+' => {
                toks.push((Tok::Plus, i));
                i += 1;
            }
            '-' => {
                toks.push((Tok::Minus, i));
                i += 1;
            }
            '*' => {
                toks.push((Tok::Star, i));
                i += 1;
            }
            '/' => {
                toks.push((Tok::Slash, i));
                i += 1;
            }
            '^' => {
                toks.push((Tok::Caret, i));
                i += 1;
            }
            '(' => {
                toks.push((Tok::LParen, i));
                i += 1;
            }
            ')' => {
                toks.push((Tok::RParen, i));
                i += 1;
            }
            '0'..='9' => {
                let start = i;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
                toks.push((Tok::Int(text[start..i].to_string()), start));
            }
            'a'..='z' | 'A'..='Z' | '_' => {
                let start = i;
                while i < bytes.len()
                    && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_')
                {
                    i += 1;
                }
                toks.push((Tok::Ident(text[start..i].to_string()), start));
            }
            _ => {
                return Err(Error::Parse { pos: i, msg: format!("unexpected character `{c}`") });
            }
        }
    }
    Ok(toks)
}

struct Parser<'a> {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    end: usize,
    syms: &'a SymbolTable,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _)| t)
    }

    fn peek2(&self) -> Option<&Tok> {
        self.toks.get(self.pos + 1).map(|(t, _)| t)
    }

    fn here(&self) -> usize {
        self.toks.get(self.pos).map(|&(_, p)| p).unwrap_or(self.end)
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|(t, _)| t.clone());
        self.pos += 1;
        t
    }

    fn expect(&mut self, t: Tok) -> Result<()> {
        let pos = self.here();
        match self.bump() {
            Some(got) if got == t => Ok(()),
            got => Err(Error::Parse { pos, msg: format!("expected {t:?}, found {got:?}") }),
        }
    }

    fn expr(&mut self) -> Result<Ast> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Some(Tok::Plus) => {
                    self.bump();
                    lhs = Ast::Add(Box::new(lhs), Box::new(self.term()?));
                }
                Some(Tok::Minus) => {
                    self.bump();
                    lhs = Ast::Sub(Box::new(lhs), Box::new(self.term()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Ast> {
        let mut lhs = self.unary()?;
        loop {
            match self.peek() {
                Some(Tok::Star) => {
                    self.bump();
                    lhs = Ast::Mul(Box::new(lhs), Box::new(self.unary()?));
                }
                Some(Tok::Slash) => {
                    self.bump();
                    lhs = Ast::Div(Box::new(lhs), Box::new(self.unary()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn unary(&mut self) -> Result<Ast> {
        if self.peek() == Some(&Tok::Minus) {
            self.bump();
            return Ok(Ast::Neg(Box::new(self.unary()?)));
        }
        self.factor()
    }

    fn factor(&mut self) -> Result<Ast> {
        let base = self.base()?;
        if self.peek() != Some(&Tok::Caret) {
            return Ok(base);
        }
        self.bump();
        let neg = if self.peek() == Some(&Tok::Minus) {
            self.bump();
            true
        } else {
            false
        };
        let pos = self.here();
        match self.bump() {
            Some(Tok::Int(digits)) => {
                let n: i64 = digits
                    .parse()
                    .map_err(|_| Error::Parse { pos, msg: "exponent out of range".into() })?;
                Ok(Ast::Pow(Box::new(base), if neg { -n } else { n }))
            }
            _ => Err(Error::Parse { pos, msg: "exponent must be a literal integer".into() }),
        }
    }

    fn base(&mut self) -> Result<Ast> {
        let pos = self.here();
        match self.bump() {
            Some(Tok::Int(digits)) => {
                // rational := int ("/" int)?
                if self.peek() == Some(&Tok::Slash) {
                    if let Some(Tok::Int(_)) = self.peek2() {
                        self.bump();
                        let Some(Tok::Int(den)) = self.bump() else { unreachable!() };
                        let r: Rat = format!("{digits}/{den}")
                            .parse()
                            .map_err(|e| Error::Parse { pos, msg: e })?;
                        return Ok(Ast::Number(r));
                    }
                }
                let r: Rat = digits.parse().map_err(|e| Error::Parse { pos, msg: e })?;
                Ok(Ast::Number(r))
            }
            Some(Tok::Ident(name)) if name == "exp" || name == "log" => {
                self.expect(Tok::LParen)?;
                let arg = self.expr()?;
                self.expect(Tok::RParen)?;
                Ok(if name == "exp" {
                    Ast::Exp(Box::new(arg))
                } else {
                    Ast::Log(Box::new(arg))
                })
            }
            Some(Tok::Ident(name)) => {
                let sym = Symbol::new(&name);
                if !self.syms.contains(&sym) {
                    return Err(Error::UnknownIdentifier(name));
                }
                Ok(Ast::Symbol(sym))
            }
            Some(Tok::LParen) => {
                let inner = self.expr()?;
                self.expect(Tok::RParen)?;
                Ok(inner)
            }
            got => Err(Error::Parse { pos, msg: format!("expected expression, found {got:?}") }),
        }
    }
}

pub fn parse_expr(text: &str, syms: &SymbolTable) -> Result<Ast> {
    let toks = tokenize(text)?;
    let mut p = Parser { toks, pos: 0, end: text.len(), syms };
    let ast = p.expr()?;
    if p.pos != p.toks.len() {
        return Err(Error::Parse { pos: p.here(), msg: "trailing input".into() });
    }
    Ok(ast)
}

/// Parses a `name = expr` catalog file: one binding per line, `#` comments,
/// blank lines ignored. Expressions are returned unparsed-name + AST.
pub fn parse_bindings(text: &str, syms: &SymbolTable) -> Result<Vec<(String, Ast)>> {
    let mut out = Vec::new();
    for line in text.lines() {
        let line = match line.find('#') {
            Some(i) => &line[..i],
            None => line,
        };
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let (name, rhs) = line
            .split_once('=')
            .ok_or_else(|| Error::Invalid(format!("expected `name = expr`, got `{line}`")))?;
        let name = name.trim();
        if name.is_empty() || !name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
            return Err(Error::Invalid(format!("bad binding name `{name}`")));
        }
        out.push((name.to_string(), parse_expr(rhs, syms)?));
    }
    Ok(out)
}

/// Lowers ASTs into tower elements, optionally auto-registering new
/// exponential/logarithmic generators for unmatched `exp`/`log` arguments.
pub struct Lowerer {
    tower: Tower,
    auto_extend: bool,
}

impl Lowerer {
    pub fn new(tower: &Tower, auto_extend: bool) -> Self {
        Lowerer { tower: tower.clone(), auto_extend }
    }

    /// The tower after lowering (it grows in auto-extend mode).
    pub fn tower(&self) -> &Tower {
        &self.tower
    }

    pub fn lower(&mut self, ast: &Ast) -> Result<TowerElem> {
        match ast {
            Ast::Number(r) => Ok(self.tower.constant(r.clone())),
            Ast::Symbol(s) => {
                if s == self.tower.base() {
                    Ok(self.tower.base_elem())
                } else if self.tower.params().contains(s) {
                    Ok(self.tower.param(s.as_str()))
                } else {
                    self.tower.gen(s.as_str())
                }
            }
            Ast::Add(a, b) => Ok(&self.lower(a)? + &self.lower(b)?),
            Ast::Sub(a, b) => Ok(&self.lower(a)? - &self.lower(b)?),
            Ast::Mul(a, b) => Ok(&self.lower(a)? * &self.lower(b)?),
            Ast::Div(a, b) => {
                let num = self.lower(a)?;
                let den = self.lower(b)?;
                if den.is_zero() {
                    return Err(Error::DivisionByZero);
                }
                Ok(&num / &den)
            }
            Ast::Neg(a) => Ok(-&self.lower(a)?),
            Ast::Pow(a, e) => {
                let base = self.lower(a)?;
                if *e < 0 && base.is_zero() {
                    return Err(Error::DivisionByZero);
                }
                Ok(base.pow(*e))
            }
            Ast::Exp(a) => {
                let arg = self.lower(a)?;
                self.lower_exp(arg)
            }
            Ast::Log(a) => {
                let arg = self.lower(a)?;
                self.lower_log(arg)
            }
        }
    }

    /// Matches `exp(u)` to an existing exponential generator when `u` is an
    /// integer multiple of its argument; otherwise auto-extends or errors.
    fn lower_exp(&mut self, arg: TowerElem) -> Result<TowerElem> {
        if arg.is_zero() {
            return Ok(self.tower.one());
        }
        let arg = arg.promote(&self.tower)?;
        for g in self.tower.gens() {
            let GenKind::Exp { arg: gen_arg } = g.kind() else { continue };
            if gen_arg.is_zero() {
                continue;
            }
            let ratio = arg.value() / gen_arg;
            if let Some(k) = ratio.as_rat().and_then(|r| r.to_integer()) {
                return self.tower.gen(g.name().as_str()).map(|e| e.pow(k));
            }
        }
        if !self.auto_extend {
            return Err(Error::NotRepresentable(format!(
                "exp({}) does not match any exponential generator (enable auto-extend to register it)",
                arg.value()
            )));
        }
        let name = self.fresh_name();
        self.tower = self.tower.extend(&name, ExtensionKind::Exponential(arg))?;
        self.tower.gen(&name)
    }

    fn lower_log(&mut self, arg: TowerElem) -> Result<TowerElem> {
        if arg.is_zero() {
            return Err(Error::Invalid("log of zero".into()));
        }
        let arg = arg.promote(&self.tower)?;
        if arg.value().is_one() {
            return Ok(self.tower.zero());
        }
        for g in self.tower.gens() {
            let GenKind::Log { arg: gen_arg } = g.kind() else { continue };
            if gen_arg == arg.value() {
                return self.tower.gen(g.name().as_str());
            }
        }
        if !self.auto_extend {
            return Err(Error::NotRepresentable(format!(
                "log({}) does not match any logarithmic generator (enable auto-extend to register it)",
                arg.value()
            )));
        }
        let name = self.fresh_name();
        self.tower = self.tower.extend(&name, ExtensionKind::Logarithmic(arg))?;
        self.tower.gen(&name)
    }

    fn fresh_name(&self) -> String {
        let mut n = self.tower.gens().len();
        loop {
            let name = format!("th{n}");
            if self.tower.gen_named(&name).is_none()
                && !self.tower.params().contains(&Symbol::new(&name))
            {
                return name;
            }
            n += 1;
        }
    }
}

/// Convenience wrapper: parse + lower against a fixed tower.
pub fn lower_expr(text: &str, tower: &Tower, auto_extend: bool) -> Result<(TowerElem, Tower)> {
    let syms = SymbolTable::new().with_tower(tower);
    let ast = parse_expr(text, &syms)?;
    let mut lw = Lowerer::new(tower, auto_extend);
    let elem = lw.lower(&ast)?;
    Ok((elem, lw.tower().clone()))
}

/// Deterministic text form of a tower element. Exponential and logarithmic
/// generators print as `exp(...)`/`log(...)`; primitive and product
/// generators print by name (they are declared in the symbol table).
pub fn pretty_print(e: &TowerElem) -> String {
    let tower = e.tower().clone();
    e.value().format_with(&move |s: &Symbol| print_var(&tower, s))
}

fn print_var(tower: &Tower, s: &Symbol) -> String {
    match tower.gen_named(s.as_str()).map(|g| g.kind().clone()) {
        Some(GenKind::Exp { arg }) => {
            format!("exp({})", arg.format_with(&|v: &Symbol| print_var(tower, v)))
        }
        Some(GenKind::Log { arg }) => {
            format!("log({})", arg.format_with(&|v: &Symbol| print_var(tower, v)))
        }
        _ => s.as_str().to_string(),
    }
}

/// Precedence-aware printer for raw ASTs.
pub fn print_ast(ast: &Ast) -> String {
    fn go(ast: &Ast, parent_prec: u8) -> String {
        let (s, prec) = match ast {
            Ast::Number(r) => (r.to_string(), if r.is_negative() { 1 } else { 4 }),
            Ast::Symbol(s) => (s.as_str().to_string(), 4),
            Ast::Add(a, b) => (format!("{}+{}", go(a, 1), go(b, 2)), 1),
            Ast::Sub(a, b) => (format!("{}-{}", go(a, 1), go(b, 2)), 1),
            Ast::Mul(a, b) => (format!("{}*{}", go(a, 2), go(b, 3)), 2),
            Ast::Div(a, b) => (format!("{}/{}", go(a, 2), go(b, 3)), 2),
            Ast::Neg(a) => (format!("-{}", go(a, 3)), 1),
            Ast::Pow(a, e) => {
                let base = go(a, 4);
                (format!("{base}^{e}"), 3)
            }
            Ast::Exp(a) => (format!("exp({})", go(a, 0)), 4),
            Ast::Log(a) => (format!("log({})", go(a, 0)), 4),
        };
        if prec < parent_prec {
            format!("({s})")
        } else {
            s
        }
    }
    go(ast, 0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::Poly;
    use crate::rat::Rat;
    use crate::ratfunc::RatFunc;

    fn sei_syms() -> SymbolTable {
        SymbolTable::new().with_params(&["r", "a", "b"]).with_states(&["S", "E", "I"])
    }

    #[test]
    fn parses_f2() {
        let ast = parse_expr("S*exp(-(r/a)*(S+E+I))", &sei_syms()).unwrap();
        match ast {
            Ast::Mul(lhs, rhs) => {
                assert_eq!(*lhs, Ast::Symbol(Symbol::new("S")));
                assert!(matches!(*rhs, Ast::Exp(_)));
            }
            other => panic!("unexpected shape {other:?}"),
        }
    }

    #[test]
    fn parses_rational_literal() {
        let ast = parse_expr("1/2", &SymbolTable::new()).unwrap();
        assert_eq!(ast, Ast::Number(Rat::new(1, 2)));
    }

    #[test]
    fn rejects_symbolic_exponent() {
        let syms = SymbolTable::new().with_states(&["x", "y"]);
        let err = parse_expr("x^y", &syms).unwrap_err();
        assert!(matches!(err, Error::Parse { .. }));
    }

    #[test]
    fn rejects_unknown_identifier() {
        let err = parse_expr("Q+1", &SymbolTable::new()).unwrap_err();
        assert!(matches!(err, Error::UnknownIdentifier(_)));
    }

    #[test]
    fn rejects_implicit_multiplication() {
        let syms = SymbolTable::new().with_states(&["x"]);
        assert!(parse_expr("2x", &syms).is_err());
    }

    fn tower_with_ea() -> Tower {
        let t0 = Tower::base_field("t", &["a", "b", "r", "C2"]);
        let arg = -&(&t0.param("a") * &t0.base_elem());
        t0.extend("ea", ExtensionKind::Exponential(arg)).unwrap()
    }

    #[test]
    fn lowers_generator_match_and_powers() {
        let tw = tower_with_ea();
        let (e, _) = lower_expr("exp(-a*t)", &tw, false).unwrap();
        assert_eq!(e, tw.gen("ea").unwrap());
        // integer multiple detection; oracle: derivatives agree
        let (sq, _) = lower_expr("exp(-2*a*t)", &tw, false).unwrap();
        assert_eq!(sq, tw.gen("ea").unwrap().pow(2));
        let d = sq.derive();
        let expect = (&tw.param("a") * &tw.gen("ea").unwrap().pow(2)).scale(&Rat::from_int(-2));
        assert_eq!(d, expect);
    }

    #[test]
    fn lowers_product_with_base() {
        let tw = tower_with_ea();
        let (e, _) = lower_expr("t*exp(-a*t)", &tw, false).unwrap();
        let expect = &tw.base_elem() * &tw.gen("ea").unwrap();
        assert_eq!(e, expect);
    }

    #[test]
    fn fractional_multiple_requires_auto_extend() {
        let tw = tower_with_ea();
        assert!(lower_expr("exp(-1/2*a*t)", &tw, false).is_err());
        let (e, grown) = lower_expr("exp(-1/2*a*t)", &tw, true).unwrap();
        assert_eq!(grown.gens().len(), tw.gens().len() + 1);
        // The new generator satisfies th' = -(a/2) th.
        let d = e.derive();
        let expect = &(-&e).scale(&Rat::new(1, 2)) * &grown.param("a");
        assert_eq!(d, expect);
    }

    #[test]
    fn pretty_print_round_trip() {
        let tw = tower_with_ea();
        let ea = tw.gen("ea").unwrap();
        let half_x = RatFunc::from_poly(Poly::var(Symbol::new("t")).scale(&Rat::new(1, 2)));
        let e = &(&ea.pow(2) + &tw.param("r")) * &tw.elem(half_x).unwrap();
        let printed = pretty_print(&e);
        let (back, _) = lower_expr(&printed, &tw, false).unwrap();
        assert_eq!(back, e);
    }

    #[test]
    fn pretty_print_exponential_power() {
        let tw = tower_with_ea();
        assert_eq!(pretty_print(&tw.gen("ea").unwrap().pow(2)), "exp(-a*t)^2");
    }

    #[test]
    fn bindings_file() {
        let syms = SymbolTable::new().with_params(&["r", "a"]).with_states(&["S", "I"]);
        let text = "# simple system\nS = -r*S*I\nI = r*S*I - a*I\n";
        let bs = parse_bindings(text, &syms).unwrap();
        assert_eq!(bs.len(), 2);
        assert_eq!(bs[0].0, "S");
    }

    #[test]
    fn ast_print_round_trip() {
        let syms = sei_syms();
        let text = "S*exp(-(r/a)*(S+E+I))";
        let ast = parse_expr(text, &syms).unwrap();
        let printed = print_ast(&ast);
        let again = parse_expr(&printed, &syms).unwrap();
        assert_eq!(ast, again);
    }
}
