//! Vector-field calculus over state variables: the SIR/SEIR system catalog,
//! Jacobians, Lie brackets, first-integral residuals, and verification of
//! particular solutions against a tower.
//!
//! Scalar expressions such as S*exp(-(r/a)(S+E+I)) carry one layer of formal
//! exponentials over the state variables; the chain rule for that layer is
//! the only non-rational ingredient needed here.

use crate::error::{Error, Result};
use crate::params::ParamAssignment;
use crate::parse::{parse_bindings, parse_expr, Ast, SymbolTable};
use crate::rat::Rat;
use crate::ratfunc::RatFunc;
use crate::symbol::Symbol;
use crate::tower::TowerElem;
use std::collections::BTreeMap;

/// Formal exponentials over the state-variable field: a generator `g` with
/// argument `u` differentiates as dg/dx = (du/dx) g.
#[derive(Clone, Debug, Default)]
pub struct ExpLayer {
    gens: Vec<(Symbol, RatFunc)>,
}

impl ExpLayer {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn gens(&self) -> &[(Symbol, RatFunc)] {
        &self.gens
    }

    pub fn arg_of(&self, s: &Symbol) -> Option<&RatFunc> {
        self.gens.iter().find(|(g, _)| g == s).map(|(_, a)| a)
    }

    /// Returns `exp(arg)` as a rational function over the layer, reusing an
    /// existing generator when `arg` is an integer multiple of its argument.
    pub fn exp(&mut self, arg: RatFunc) -> Result<RatFunc> {
        if arg.is_zero() {
            return Ok(RatFunc::one());
        }
        if arg.vars().iter().any(|v| self.arg_of(v).is_some()) {
            return Err(Error::NotRepresentable("nested exp in state expression".into()));
        }
        for (name, gen_arg) in &self.gens {
            let ratio = &arg / gen_arg;
            if let Some(k) = ratio.as_rat().and_then(|r| r.to_integer()) {
                return Ok(RatFunc::var(name.clone()).pow(k));
            }
        }
        let name = Symbol::new(&format!("_exp{}", self.gens.len() + 1));
        self.gens.push((name.clone(), arg));
        Ok(RatFunc::var(name))
    }

    /// Partial derivative of `e` w.r.t. the state `x`, extending the formal
    /// rules of this layer.
    pub fn partial(&self, e: &RatFunc, x: &Symbol) -> RatFunc {
        e.derive_with(&|v: &Symbol| {
            if v == x {
                return RatFunc::one();
            }
            match self.arg_of(v) {
                Some(arg) => {
                    let du = self.partial(arg, x);
                    &du * &RatFunc::var(v.clone())
                }
                None => RatFunc::zero(),
            }
        })
    }
}

/// A scalar expression over states, parameters and one exponential layer.
#[derive(Clone, Debug)]
pub struct StateExpr {
    pub layer: ExpLayer,
    pub value: RatFunc,
}

impl StateExpr {
    pub fn rational(value: RatFunc) -> Self {
        StateExpr { layer: ExpLayer::empty(), value }
    }

    pub fn is_zero(&self) -> bool {
        self.value.is_zero()
    }

    /// Substitutes parameter symbols (in both the value and the exponential
    /// arguments); errors on a resulting zero denominator.
    pub fn substitute_params(&self, map: &dyn Fn(&Symbol) -> Option<RatFunc>) -> Result<Self> {
        let mut layer = ExpLayer::empty();
        for (name, arg) in &self.layer.gens {
            layer.gens.push((name.clone(), arg.substitute(map)?));
        }
        Ok(StateExpr { layer, value: self.value.substitute(map)? })
    }

    /// Deterministic text form with layer generators printed as `exp(...)`.
    pub fn render(&self) -> String {
        let layer = self.layer.clone();
        self.value.format_with(&move |s: &Symbol| match layer.arg_of(s) {
            Some(arg) => format!("exp({})", arg.format_with(&|v: &Symbol| v.to_string())),
            None => s.to_string(),
        })
    }

    pub fn eval_f64(&self, values: &BTreeMap<Symbol, f64>) -> Result<f64> {
        let layer = &self.layer;
        let lookup = |s: &Symbol| -> Result<f64> {
            if let Some(v) = values.get(s) {
                return Ok(*v);
            }
            match layer.arg_of(s) {
                Some(arg) => Ok(arg.eval_f64(&|v: &Symbol| values[v])?.exp()),
                None => Err(Error::Eval(format!("no value for `{s}`"))),
            }
        };
        let mut resolved = BTreeMap::new();
        for v in self.value.vars() {
            resolved.insert(v.clone(), lookup(&v)?);
        }
        self.value.eval_f64(&|s: &Symbol| resolved[s])
    }
}

/// An autonomous vector field: one rational component per state variable.
#[derive(Clone, Debug, PartialEq)]
pub struct VectorField {
    states: Vec<Symbol>,
    comps: Vec<RatFunc>,
}

impl VectorField {
    pub fn new(states: Vec<Symbol>, comps: Vec<RatFunc>) -> Result<Self> {
        if states.len() != comps.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} states but {} components",
                states.len(),
                comps.len()
            )));
        }
        Ok(VectorField { states, comps })
    }

    pub fn states(&self) -> &[Symbol] {
        &self.states
    }

    pub fn comps(&self) -> &[RatFunc] {
        &self.comps
    }

    pub fn dim(&self) -> usize {
        self.states.len()
    }

    pub fn substitute_params(&self, map: &dyn Fn(&Symbol) -> Option<RatFunc>) -> Result<Self> {
        let comps = self
            .comps
            .iter()
            .map(|c| c.substitute(map))
            .collect::<Result<Vec<_>>>()?;
        Ok(VectorField { states: self.states.clone(), comps })
    }
}

fn sym(s: &str) -> Symbol {
    Symbol::new(s)
}

fn v(s: &str) -> RatFunc {
    RatFunc::var(sym(s))
}

/// The model catalog, with symbolic parameters r, a, b.
pub fn catalog(name: &str) -> Result<VectorField> {
    let r = v("r");
    let a = v("a");
    let b = v("b");
    let s = v("S");
    let e = v("E");
    let i = v("I");
    let x = v("X");
    let y = v("Y");
    let z = v("Z");
    let rsi = &(&r * &s) * &i;
    match name {
        "si" => VectorField::new(
            vec![sym("S"), sym("I")],
            vec![-&rsi, &rsi - &(&a * &i)],
        ),
        "sir" => VectorField::new(
            vec![sym("S"), sym("I"), sym("R")],
            vec![-&rsi, &rsi - &(&a * &i), &a * &i],
        ),
        "sei" => VectorField::new(
            vec![sym("S"), sym("E"), sym("I")],
            vec![-&rsi, &rsi - &(&b * &e), &(&b * &e) - &(&a * &i)],
        ),
        "seir" => VectorField::new(
            vec![sym("S"), sym("E"), sym("I"), sym("R")],
            vec![-&rsi, &rsi - &(&b * &e), &(&b * &e) - &(&a * &i), &a * &i],
        ),
        "seir_ext" => VectorField::new(
            vec![sym("S"), sym("E"), sym("I"), sym("X"), sym("Y"), sym("Z")],
            vec![
                -&rsi,
                &rsi - &(&b * &e),
                &(&b * &e) - &(&a * &i),
                -&(&(&r * &i) * &x),
                -&(&(&(&r * &b) / &a) * &(&e * &y)),
                -&(&(&(&r * &r) / &a) * &(&(&s * &i) * &z)),
            ],
        ),
        other => Err(Error::UnknownSystem(other.to_string())),
    }
}

/// The three auxiliary fields commuting with the extended system.
pub fn aux_fields() -> Vec<VectorField> {
    let states = catalog("seir_ext").unwrap().states().to_vec();
    let zero = RatFunc::zero();
    let mk = |idx: usize, var: &str| {
        let mut comps = vec![zero.clone(); 6];
        comps[idx] = v(var);
        VectorField::new(states.clone(), comps).unwrap()
    };
    vec![mk(3, "X"), mk(4, "Y"), mk(5, "Z")]
}

/// Entry (i, j) = d f_i / d x_j.
pub fn jacobian(f: &VectorField) -> Vec<Vec<RatFunc>> {
    let layer = ExpLayer::empty();
    f.comps
        .iter()
        .map(|c| f.states.iter().map(|x| layer.partial(c, x)).collect())
        .collect()
}

/// Lie bracket [f, g] = Dg f - Df g.
pub fn lie_bracket(f: &VectorField, g: &VectorField) -> Result<VectorField> {
    if f.states != g.states {
        return Err(Error::DimensionMismatch("vector fields over different states".into()));
    }
    let df = jacobian(f);
    let dg = jacobian(g);
    let n = f.dim();
    let mut comps = Vec::with_capacity(n);
    for i in 0..n {
        let mut acc = RatFunc::zero();
        for j in 0..n {
            acc = &acc + &(&dg[i][j] * &f.comps[j]);
            acc = &acc - &(&df[i][j] * &g.comps[j]);
        }
        comps.push(acc);
    }
    VectorField::new(f.states.clone(), comps)
}

/// The exact expression DF . f; zero iff F is a first integral of f.
pub fn first_integral_residual(f_expr: &StateExpr, field: &VectorField) -> StateExpr {
    let mut acc = RatFunc::zero();
    for (x, fx) in field.states.iter().zip(&field.comps) {
        let d = f_expr.layer.partial(&f_expr.value, x);
        acc = &acc + &(&d * fx);
    }
    StateExpr { layer: f_expr.layer.clone(), value: acc }
}

/// Lowers a parsed expression over states/parameters, registering exp
/// arguments in the layer. Logarithms are not supported here.
pub fn lower_state_ast(ast: &Ast, layer: &mut ExpLayer) -> Result<RatFunc> {
    match ast {
        Ast::Number(r) => Ok(RatFunc::from_rat(r.clone())),
        Ast::Symbol(s) => Ok(RatFunc::var(s.clone())),
        Ast::Add(a, b) => Ok(&lower_state_ast(a, layer)? + &lower_state_ast(b, layer)?),
        Ast::Sub(a, b) => Ok(&lower_state_ast(a, layer)? - &lower_state_ast(b, layer)?),
        Ast::Mul(a, b) => Ok(&lower_state_ast(a, layer)? * &lower_state_ast(b, layer)?),
        Ast::Div(a, b) => {
            let num = lower_state_ast(a, layer)?;
            let den = lower_state_ast(b, layer)?;
            num.try_div(&den)
        }
        Ast::Neg(a) => Ok(-&lower_state_ast(a, layer)?),
        Ast::Pow(a, e) => {
            let base = lower_state_ast(a, layer)?;
            if *e < 0 && base.is_zero() {
                return Err(Error::DivisionByZero);
            }
            Ok(base.pow(*e))
        }
        Ast::Exp(a) => {
            let arg = lower_state_ast(a, layer)?;
            layer.exp(arg)
        }
        Ast::Log(_) => Err(Error::NotRepresentable("log in state expression".into())),
    }
}

/// Parses a scalar expression over the given states and parameters.
pub fn parse_state_expr(text: &str, states: &[Symbol], params: &[&str]) -> Result<StateExpr> {
    let mut syms = SymbolTable::new().with_params(params);
    for s in states {
        syms.declare_state(s.as_str());
    }
    let ast = parse_expr(text, &syms)?;
    let mut layer = ExpLayer::empty();
    let value = lower_state_ast(&ast, &mut layer)?;
    Ok(StateExpr { layer, value })
}

/// Loads a user-defined system from `name = expr` bindings. Components must
/// be rational in the states and parameters.
pub fn load_system(text: &str, params: &[&str]) -> Result<VectorField> {
    // First pass: state names, in file order.
    let names: Vec<String> = text
        .lines()
        .filter_map(|l| {
            let l = match l.find('#') {
                Some(i) => &l[..i],
                None => l,
            };
            l.split_once('=').map(|(n, _)| n.trim().to_string())
        })
        .collect();
    let mut syms = SymbolTable::new().with_params(params);
    for n in &names {
        syms.declare_state(n);
    }
    let bindings = parse_bindings(text, &syms)?;
    let mut states = Vec::new();
    let mut comps = Vec::new();
    for (name, ast) in bindings {
        let mut layer = ExpLayer::empty();
        let c = lower_state_ast(&ast, &mut layer)?;
        if !layer.gens().is_empty() {
            return Err(Error::NotRepresentable(
                "vector-field components must be rational in the states".into(),
            ));
        }
        states.push(Symbol::new(&name));
        comps.push(c);
    }
    VectorField::new(states, comps)
}

/// The linear first integral S+E+I(+R): the sum of all states.
pub fn integral_state_sum(f: &VectorField) -> StateExpr {
    let mut acc = RatFunc::zero();
    for s in &f.states {
        acc = &acc + &RatFunc::var(s.clone());
    }
    StateExpr::rational(acc)
}

/// F2 = S exp(-(r/a) * (sum of S, E, I present in the system)).
pub fn integral_f2(f: &VectorField) -> Result<StateExpr> {
    let mut sum = RatFunc::zero();
    for s in &f.states {
        if matches!(s.as_str(), "S" | "E" | "I") {
            sum = &sum + &RatFunc::var(s.clone());
        }
    }
    let coeff = -&(&v("r") / &v("a"));
    let mut layer = ExpLayer::empty();
    let e = layer.exp(&coeff * &sum)?;
    Ok(StateExpr { layer, value: &v("S") * &e })
}

/// F3 exactly as printed: -(a/r)S + (1/2)aI^2 - (a+1)(S+E+I) + (1/2)(S+E+I)^2.
pub fn integral_f3_printed() -> StateExpr {
    let a = v("a");
    let r = v("r");
    let total = &(&v("S") + &v("E")) + &v("I");
    let half = RatFunc::from_rat(Rat::new(1, 2));
    let term1 = -&(&(&a / &r) * &v("S"));
    let term2 = &(&half * &a) * &v("I").pow(2);
    let term3 = -&(&(&a + &RatFunc::one()) * &total);
    let term4 = &half * &total.pow(2);
    StateExpr::rational(&(&(&term1 + &term2) + &term3) + &term4)
}

/// A particular solution: every state mapped to an element of one tower.
#[derive(Clone)]
pub struct ParticularSolution {
    assign: BTreeMap<Symbol, TowerElem>,
}

impl ParticularSolution {
    pub fn new(assign: Vec<(&str, TowerElem)>) -> Self {
        ParticularSolution {
            assign: assign.into_iter().map(|(s, e)| (Symbol::new(s), e)).collect(),
        }
    }

    pub fn get(&self, s: &Symbol) -> Option<&TowerElem> {
        self.assign.get(s)
    }
}

/// Component-wise residual d(sol_i)/dt - f_i(sol); the all-zero vector iff
/// the solution satisfies the system.
pub fn verify_particular_solution(
    sol: &ParticularSolution,
    f: &VectorField,
) -> Result<Vec<TowerElem>> {
    let mut tower: Option<crate::tower::Tower> = None;
    for s in &f.states {
        let e = sol
            .get(s)
            .ok_or_else(|| Error::Invalid(format!("state `{s}` not assigned in solution")))?;
        tower = Some(match tower {
            None => e.tower().clone(),
            Some(t) => {
                if !t.compatible(e.tower()) {
                    return Err(Error::Tower("solution components in incompatible towers".into()));
                }
                if e.tower().gens().len() > t.gens().len() {
                    e.tower().clone()
                } else {
                    t
                }
            }
        });
    }
    let tower = tower.ok_or_else(|| Error::Invalid("empty system".into()))?;
    let assign = &sol.assign;
    let mut residuals = Vec::with_capacity(f.dim());
    for (s, comp) in f.states.iter().zip(&f.comps) {
        let lhs = assign[s].promote(&tower)?.derive();
        let substituted =
            comp.substitute(&|x: &Symbol| assign.get(x).map(|e| e.value().clone()))?;
        let rhs = tower.elem(substituted)?;
        residuals.push(&lhs - &rhs);
    }
    Ok(residuals)
}

/// Exact rank of the matrix whose rows are the fields evaluated at a
/// rational point (states and parameters all assigned).
pub fn fields_rank_at(fields: &[&VectorField], point: &ParamAssignment) -> Result<usize> {
    let mut rows: Vec<Vec<Rat>> = Vec::new();
    for f in fields {
        let mut row = Vec::with_capacity(f.dim());
        for c in f.comps() {
            let val = c.substitute(&|s: &Symbol| {
                point.get(s).map(|r| RatFunc::from_rat(r.clone()))
            })?;
            let r = val
                .as_rat()
                .ok_or_else(|| Error::Eval(format!("unassigned symbol in `{c}`")))?;
            row.push(r);
        }
        rows.push(row);
    }
    Ok(rat_rank(rows))
}

fn rat_rank(mut rows: Vec<Vec<Rat>>) -> usize {
    let nrows = rows.len();
    if nrows == 0 {
        return 0;
    }
    let ncols = rows[0].len();
    let mut rank = 0;
    let mut col = 0;
    while rank < nrows && col < ncols {
        let Some(pivot) = (rank..nrows).find(|&i| !rows[i][col].is_zero()) else {
            col += 1;
            continue;
        };
        rows.swap(rank, pivot);
        let inv = rows[rank][col].recip();
        for j in col..ncols {
            rows[rank][j] = &rows[rank][j] * &inv;
        }
        for i in 0..nrows {
            if i != rank && !rows[i][col].is_zero() {
                let factor = rows[i][col].clone();
                for j in col..ncols {
                    let delta = &factor * &rows[rank][j];
                    rows[i][j] = &rows[i][j] - &delta;
                }
            }
        }
        rank += 1;
        col += 1;
    }
    rank
}
