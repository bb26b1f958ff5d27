//! Adaptive embedded Runge-Kutta integration and the numeric cross-checks:
//! conservation drift along trajectories, the numeric fundamental matrix of
//! the variational equation, and the Wronskian/Abel identity.

use crate::dynsys::{StateExpr, VectorField};
use crate::error::{Error, Result};
use crate::params::ParamAssignment;
use crate::ratfunc::RatFunc;
use crate::symbol::Symbol;
use crate::tower::NumericEval;
use crate::variational::{CaseTag, LinearSystem};
use std::collections::BTreeMap;

#[derive(Clone, Copy, Debug)]
pub struct ToleranceConfig {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
}

impl Default for ToleranceConfig {
    fn default() -> Self {
        ToleranceConfig { rtol: 1e-8, atol: 1e-10, max_steps: 2_000_000 }
    }
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub steps: usize,
    pub rejected: usize,
}

impl Trajectory {
    pub fn last(&self) -> (&f64, &[f64]) {
        (self.times.last().unwrap(), self.states.last().unwrap())
    }

    pub fn to_csv(&self, header: &[String]) -> String {
        let mut out = String::new();
        out.push_str("t,");
        out.push_str(&header.join(","));
        out.push('\n');
        for (t, y) in self.times.iter().zip(&self.states) {
            out.push_str(&format!("{t:.17e}"));
            for v in y {
                out.push_str(&format!(",{v:.17e}"));
            }
            out.push('\n');
        }
        out
    }
}

// Dormand-Prince 5(4) tableau.
const A: [[f64; 6]; 6] = [
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const C: [f64; 6] = [1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
// Difference between the 5th- and embedded 4th-order weights.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// Integrates dy/dt = f(t, y) with the embedded 5(4) pair and a
/// proportional-integral step controller (safety factor 0.9).
pub fn integrate_raw(
    f: &mut dyn FnMut(f64, &[f64], &mut [f64]) -> Result<()>,
    y0: &[f64],
    t0: f64,
    t1: f64,
    tol: &ToleranceConfig,
) -> Result<Trajectory> {
    if t1 <= t0 {
        return Err(Error::Invalid("t1 must exceed t0".into()));
    }
    let n = y0.len();
    let mut t = t0;
    let mut y = y0.to_vec();
    let mut k: Vec<Vec<f64>> = vec![vec![0.0; n]; 7];
    f(t, &y, &mut k[0])?;

    let span = t1 - t0;
    let mut h = (span * 1e-3).min(span);
    let mut traj = Trajectory {
        times: vec![t0],
        states: vec![y.clone()],
        steps: 0,
        rejected: 0,
    };

    const SAFETY: f64 = 0.9;
    const BETA: f64 = 0.04;
    const EXPO1: f64 = 0.2 - BETA * 0.75;
    const FAC_MIN: f64 = 0.2; // max step shrink per step
    const FAC_MAX: f64 = 10.0; // max step growth per step
    let mut fac_old: f64 = 1e-4;
    let mut last_rejected = false;

    while t < t1 {
        if traj.steps + traj.rejected >= tol.max_steps {
            return Err(Error::ResourceLimit(format!("max steps ({}) exceeded", tol.max_steps)));
        }
        if h < 16.0 * f64::EPSILON * t.abs().max(1.0) {
            return Err(Error::Integration(format!("step size underflow at t = {t}")));
        }
        if t + h > t1 {
            h = t1 - t;
        }

        // Stages 2..7 (k[0] is FSAL from the previous step).
        let mut y_stage = vec![0.0; n];
        for s in 0..6 {
            for i in 0..n {
                let mut acc = 0.0;
                for (j, kj) in k.iter().enumerate().take(s + 1) {
                    let a = A[s][j];
                    if a != 0.0 {
                        acc += a * kj[i];
                    }
                }
                y_stage[i] = y[i] + h * acc;
            }
            let ts = t + C[s] * h;
            let (head, tail) = k.split_at_mut(s + 1);
            let _ = head;
            f(ts, &y_stage, &mut tail[0])?;
        }
        // 5th-order solution is the last stage state (FSAL).
        let y_new = y_stage;

        let mut err_sq = 0.0;
        for i in 0..n {
            let mut e = 0.0;
            for (j, kj) in k.iter().enumerate() {
                if E[j] != 0.0 {
                    e += E[j] * kj[i];
                }
            }
            let sc = tol.atol + tol.rtol * y[i].abs().max(y_new[i].abs());
            let ratio = h * e / sc;
            err_sq += ratio * ratio;
        }
        let err = (err_sq / n as f64).sqrt();

        if !err.is_finite() || y_new.iter().any(|v| !v.is_finite()) {
            return Err(Error::Eval(format!("non-finite state at t = {t}")));
        }

        if err <= 1.0 {
            t += h;
            y = y_new;
            k[0] = k[6].clone(); // FSAL
            traj.times.push(t);
            traj.states.push(y.clone());
            traj.steps += 1;
            let fac11 = err.max(1e-16).powf(EXPO1);
            let mut fac = fac11 / fac_old.powf(BETA);
            fac = (fac / SAFETY).clamp(1.0 / FAC_MAX, 1.0 / FAC_MIN);
            let mut h_new = h / fac;
            if last_rejected {
                h_new = h_new.min(h);
            }
            h = h_new;
            fac_old = err.max(1e-4);
            last_rejected = false;
        } else {
            traj.rejected += 1;
            let fac11 = err.powf(EXPO1);
            h /= (fac11 / SAFETY).min(1.0 / FAC_MIN);
            last_rejected = true;
        }
    }
    Ok(traj)
}

/// A rational function compiled to index-based f64 evaluation.
struct Compiled {
    num: Vec<(f64, Vec<(usize, u32)>)>,
    den: Vec<(f64, Vec<(usize, u32)>)>,
}

impl Compiled {
    fn build(rf: &RatFunc, index_of: &dyn Fn(&Symbol) -> Result<usize>) -> Result<Self> {
        let compile_poly = |p: &crate::poly::Poly| -> Result<Vec<(f64, Vec<(usize, u32)>)>> {
            let idx: Vec<usize> =
                p.vars().iter().map(index_of).collect::<Result<Vec<_>>>()?;
            let mut terms = Vec::with_capacity(p.num_terms());
            for (m, c) in p.terms() {
                let powers: Vec<(usize, u32)> = m
                    .0
                    .iter()
                    .enumerate()
                    .filter(|&(_, &e)| e > 0)
                    .map(|(i, &e)| (idx[i], e))
                    .collect();
                terms.push((c.to_f64(), powers));
            }
            Ok(terms)
        };
        Ok(Compiled { num: compile_poly(rf.num())?, den: compile_poly(rf.den())? })
    }

    fn eval(&self, vals: &[f64]) -> Result<f64> {
        let eval_terms = |terms: &[(f64, Vec<(usize, u32)>)]| -> f64 {
            let mut acc = 0.0;
            for (c, powers) in terms {
                let mut t = *c;
                for &(i, e) in powers {
                    t *= vals[i].powi(e as i32);
                }
                acc += t;
            }
            acc
        };
        let den = if self.den.is_empty() { 1.0 } else { eval_terms(&self.den) };
        if den == 0.0 {
            return Err(Error::Eval("pole during numeric evaluation".into()));
        }
        Ok(eval_terms(&self.num) / den)
    }
}

/// Compiles a vector field with fixed parameter values into a fast
/// right-hand side over the state vector.
pub fn compile_field(
    f: &VectorField,
    params: &ParamAssignment,
) -> Result<impl FnMut(f64, &[f64], &mut [f64]) -> Result<()>> {
    let states = f.states().to_vec();
    let mut compiled = Vec::with_capacity(f.dim());
    for comp in f.comps() {
        let substituted = comp.substitute(&|s: &Symbol| {
            params.get(s).map(|r| RatFunc::from_rat(r.clone()))
        })?;
        let index_of = |s: &Symbol| -> Result<usize> {
            states
                .iter()
                .position(|st| st == s)
                .ok_or_else(|| Error::InvalidParams(format!("no value for `{s}`")))
        };
        compiled.push(Compiled::build(&substituted, &index_of)?);
    }
    Ok(move |_t: f64, y: &[f64], dy: &mut [f64]| -> Result<()> {
        for (i, c) in compiled.iter().enumerate() {
            dy[i] = c.eval(y)?;
        }
        Ok(())
    })
}

/// Integrates a catalog/user system from `y0` over `[t0, t1]`.
pub fn integrate(
    f: &VectorField,
    params: &ParamAssignment,
    y0: &[f64],
    t0: f64,
    t1: f64,
    tol: &ToleranceConfig,
) -> Result<Trajectory> {
    if y0.len() != f.dim() {
        return Err(Error::DimensionMismatch(format!(
            "initial state has {} entries, system is {}-dimensional",
            y0.len(),
            f.dim()
        )));
    }
    let mut rhs = compile_field(f, params)?;
    integrate_raw(&mut rhs, y0, t0, t1, tol)
}

/// Max over samples of |F(y(t)) - F(y(t0))|.
pub fn conservation_drift(
    f_expr: &StateExpr,
    traj: &Trajectory,
    states: &[Symbol],
    params: &ParamAssignment,
) -> Result<f64> {
    let mut values: BTreeMap<Symbol, f64> = params.f64_values();
    let eval_at = |values: &mut BTreeMap<Symbol, f64>, y: &[f64]| -> Result<f64> {
        for (s, v) in states.iter().zip(y) {
            values.insert(s.clone(), *v);
        }
        f_expr.eval_f64(values)
    };
    let f0 = eval_at(&mut values, &traj.states[0])?;
    let mut drift: f64 = 0.0;
    for y in &traj.states[1..] {
        let fi = eval_at(&mut values, y)?;
        drift = drift.max((fi - f0).abs());
    }
    Ok(drift)
}

fn check_case_params(case: CaseTag, params: &ParamAssignment) -> Result<()> {
    let a = params
        .get_named("a")
        .ok_or_else(|| Error::InvalidParams("parameter `a` not assigned".into()))?;
    let b = params
        .get_named("b")
        .ok_or_else(|| Error::InvalidParams("parameter `b` not assigned".into()))?;
    if a.is_zero() {
        return Err(Error::InvalidParams("a must be nonzero".into()));
    }
    match case {
        CaseTag::ANeB if a == b => {
            Err(Error::InvalidParams("case a_ne_b requires a != b".into()))
        }
        CaseTag::AEqB if a != b => {
            Err(Error::InvalidParams("case a_eq_b requires a = b".into()))
        }
        _ => Ok(()),
    }
}

/// Integrates the VE with identity initial condition and returns Phi(t1).
/// The C3 relation is enforced on the parameter values.
pub fn numeric_fundamental(
    sys: &LinearSystem,
    params: &ParamAssignment,
    t1: f64,
    tol: &ToleranceConfig,
) -> Result<Vec<Vec<f64>>> {
    check_case_params(sys.case, params)?;
    let n = sys.dim();
    let values = params.f64_values_with_c3()?;
    let ev = NumericEval::new(&sys.tower, values, 1e-13)?;
    // Column-major flattening: 36-dimensional linear system Phi' = M(t) Phi.
    let mut m_flat = vec![0.0; n * n];
    let mut rhs = |t: f64, y: &[f64], dy: &mut [f64]| -> Result<()> {
        for i in 0..n {
            for j in 0..n {
                m_flat[i * n + j] = ev.eval(&sys.matrix[i][j], t)?;
            }
        }
        for col in 0..n {
            for i in 0..n {
                let mut acc = 0.0;
                for j in 0..n {
                    acc += m_flat[i * n + j] * y[col * n + j];
                }
                dy[col * n + i] = acc;
            }
        }
        Ok(())
    };
    let mut y0 = vec![0.0; n * n];
    for col in 0..n {
        y0[col * n + col] = 1.0;
    }
    if t1 == 0.0 {
        let mut out = vec![vec![0.0; n]; n];
        for (i, row) in out.iter_mut().enumerate() {
            row[i] = 1.0;
        }
        return Ok(out);
    }
    let traj = integrate_raw(&mut rhs, &y0, 0.0, t1, tol)?;
    let (_, last) = traj.last();
    let mut out = vec![vec![0.0; n]; n];
    for col in 0..n {
        for i in 0..n {
            out[i][col] = last[col * n + i];
        }
    }
    Ok(out)
}

/// LU determinant with partial pivoting.
pub fn det_f64(matrix: &[Vec<f64>]) -> f64 {
    let n = matrix.len();
    let mut m: Vec<Vec<f64>> = matrix.to_vec();
    let mut det = 1.0;
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| m[i][col].abs().partial_cmp(&m[j][col].abs()).unwrap())
            .unwrap();
        if m[piv][col] == 0.0 {
            return 0.0;
        }
        if piv != col {
            m.swap(piv, col);
            det = -det;
        }
        det *= m[col][col];
        for i in (col + 1)..n {
            let factor = m[i][col] / m[col][col];
            for j in col..n {
                m[i][j] -= factor * m[col][j];
            }
        }
    }
    det
}

/// Abel's identity for the VE: det Phi(t) = exp(-(2 r C2 / a)(1 - e^{-a t})
/// - (a + b) t), from trace M = -2 r Ibar - a - b.
pub fn abel_determinant(case: CaseTag, params: &ParamAssignment, t: f64) -> Result<f64> {
    check_case_params(case, params)?;
    let a = params.get_named("a").unwrap().to_f64();
    let b = match case {
        CaseTag::ANeB => params.get_named("b").unwrap().to_f64(),
        CaseTag::AEqB => a,
    };
    let r = params
        .get_named("r")
        .ok_or_else(|| Error::InvalidParams("parameter `r` not assigned".into()))?
        .to_f64();
    let c2 = params
        .get_named("C2")
        .ok_or_else(|| Error::InvalidParams("parameter `C2` not assigned".into()))?
        .to_f64();
    Ok((-(2.0 * r * c2 / a) * (1.0 - (-a * t).exp()) - (a + b) * t).exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynsys::catalog;
    use crate::rat::Rat;

    fn params_ra(r: i64, a: i64) -> ParamAssignment {
        ParamAssignment::from_pairs(&[
            ("r", Rat::from_int(r)),
            ("a", Rat::from_int(a)),
            ("b", Rat::from_int(1)),
        ])
    }

    #[test]
    fn zero_field_is_constant() {
        let mut f = |_t: f64, _y: &[f64], dy: &mut [f64]| -> Result<()> {
            dy.fill(0.0);
            Ok(())
        };
        let traj = integrate_raw(&mut f, &[1.0, -2.0], 0.0, 5.0, &ToleranceConfig::default())
            .unwrap();
        let (_, last) = traj.last();
        assert_eq!(last, &[1.0, -2.0]);
    }

    #[test]
    fn sir_phase_plane_behavior() {
        // With (r, a) = (1, 1) and S+I starting above 1, S decreases and the
        // infection dies out.
        let sir = catalog("sir").unwrap();
        let traj = integrate(
            &sir,
            &params_ra(1, 1),
            &[2.0, 0.1, 0.0],
            0.0,
            20.0,
            &ToleranceConfig::default(),
        )
        .unwrap();
        let s: Vec<f64> = traj.states.iter().map(|y| y[0]).collect();
        assert!(s.windows(2).all(|w| w[1] <= w[0] + 1e-12), "S must be non-increasing");
        let (_, last) = traj.last();
        assert!(last[1] < 1e-3, "I should decay, got {}", last[1]);
    }

    #[test]
    fn seir_matches_fixed_step_reference() {
        // Self-convergence oracle: classical RK4 at small fixed steps.
        let sei = catalog("seir").unwrap();
        let params = ParamAssignment::parse("r=1,a=1,b=1").unwrap();
        let y0 = [2.0, 0.05, 0.1, 0.0];
        let tol = ToleranceConfig { rtol: 1e-10, atol: 1e-12, max_steps: 1_000_000 };
        let traj = integrate(&sei, &params, &y0, 0.0, 10.0, &tol).unwrap();
        let (_, last) = traj.last();

        let mut rhs = compile_field(&sei, &params).unwrap();
        let mut y = y0.to_vec();
        let steps = 40_000usize;
        let h = 10.0 / steps as f64;
        let n = y.len();
        let mut k1 = vec![0.0; n];
        let mut k2 = vec![0.0; n];
        let mut k3 = vec![0.0; n];
        let mut k4 = vec![0.0; n];
        let mut tmp = vec![0.0; n];
        for s in 0..steps {
            let t = s as f64 * h;
            rhs(t, &y, &mut k1).unwrap();
            for i in 0..n {
                tmp[i] = y[i] + 0.5 * h * k1[i];
            }
            rhs(t + 0.5 * h, &tmp, &mut k2).unwrap();
            for i in 0..n {
                tmp[i] = y[i] + 0.5 * h * k2[i];
            }
            rhs(t + 0.5 * h, &tmp, &mut k3).unwrap();
            for i in 0..n {
                tmp[i] = y[i] + h * k3[i];
            }
            rhs(t + h, &tmp, &mut k4).unwrap();
            for i in 0..n {
                y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
        }
        for i in 0..n {
            assert!(
                (last[i] - y[i]).abs() < 1e-8,
                "component {i}: adaptive {} vs reference {}",
                last[i],
                y[i]
            );
        }
    }

    #[test]
    fn drift_behaviour() {
        use crate::dynsys::{integral_f2, integral_state_sum};
        let seir = catalog("seir").unwrap();
        let params = ParamAssignment::parse("r=1,a=1,b=2").unwrap();
        let tol = ToleranceConfig { rtol: 1e-10, atol: 1e-12, max_steps: 2_000_000 };
        let traj =
            integrate(&seir, &params, &[2.0, 0.05, 0.1, 0.0], 0.0, 20.0, &tol).unwrap();
        let f1 = integral_state_sum(&seir);
        let d1 = conservation_drift(&f1, &traj, seir.states(), &params).unwrap();
        assert!(d1 < 1e-8, "F1 drift {d1}");
        let f2 = integral_f2(&seir).unwrap();
        let d2 = conservation_drift(&f2, &traj, seir.states(), &params).unwrap();
        assert!(d2 < 1e-8, "F2 drift {d2}");
        // Negative control: S itself moves by O(1).
        let s_expr = StateExpr::rational(RatFunc::var(Symbol::new("S")));
        let ds = conservation_drift(&s_expr, &traj, seir.states(), &params).unwrap();
        assert!(ds > 0.1, "S drift {ds}");
    }

    #[test]
    fn fundamental_identity_at_zero() {
        let sys = crate::variational::seir_linear_system(CaseTag::ANeB).unwrap();
        let params = ParamAssignment::parse("a=1,b=2,r=1,C2=1").unwrap();
        let m = numeric_fundamental(&sys, &params, 0.0, &ToleranceConfig::default()).unwrap();
        for i in 0..6 {
            for j in 0..6 {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert_eq!(m[i][j], expect);
            }
        }
    }

    #[test]
    fn case_constraint_enforced() {
        let sys = crate::variational::seir_linear_system(CaseTag::ANeB).unwrap();
        let bad = ParamAssignment::parse("a=1,b=1,r=1,C2=1").unwrap();
        assert!(numeric_fundamental(&sys, &bad, 1.0, &ToleranceConfig::default()).is_err());
    }

    #[test]
    fn determinant_of_triangular() {
        let m = vec![
            vec![2.0, 1.0, 0.0],
            vec![0.0, 3.0, 5.0],
            vec![0.0, 0.0, 4.0],
        ];
        assert!((det_f64(&m) - 24.0).abs() < 1e-12);
    }

    #[test]
    fn symbolic_columns_evaluate_to_identity_at_zero() {
        use crate::variational::fundamental_columns;
        for (case, pstr) in
            [(CaseTag::ANeB, "a=1,b=2,r=1,C2=1"), (CaseTag::AEqB, "a=1,b=1,r=1,C2=1")]
        {
            let params = ParamAssignment::parse(pstr).unwrap();
            let set = fundamental_columns(case).unwrap();
            let values = params.f64_values_with_c3().unwrap();
            let ev = crate::tower::NumericEval::new(&set.tower, values, 1e-13).unwrap();
            for (j, col) in set.columns.iter().enumerate() {
                for (i, entry) in col.iter().enumerate() {
                    let got = ev.eval(entry, 0.0).unwrap();
                    let expect = if i == j { 1.0 } else { 0.0 };
                    assert!(
                        (got - expect).abs() < 1e-12,
                        "case {case:?} entry ({i},{j}): {got}"
                    );
                }
            }
        }
    }

    #[test]
    fn halving_rtol_halves_the_error() {
        let seir = catalog("seir").unwrap();
        let params = ParamAssignment::parse("r=1,a=1,b=2").unwrap();
        let y0 = [2.0, 0.05, 0.1, 0.0];
        let reference = {
            let tol = ToleranceConfig { rtol: 1e-13, atol: 1e-14, max_steps: 2_000_000 };
            integrate(&seir, &params, &y0, 0.0, 10.0, &tol).unwrap().last().1.to_vec()
        };
        let err_at = |rtol: f64| -> f64 {
            let tol = ToleranceConfig { rtol, atol: rtol * 1e-2, max_steps: 2_000_000 };
            let traj = integrate(&seir, &params, &y0, 0.0, 10.0, &tol).unwrap();
            let (_, last) = traj.last();
            last.iter()
                .zip(&reference)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0f64, f64::max)
        };
        let coarse = err_at(1e-6);
        let fine = err_at(5e-7);
        assert!(
            fine * 2.0 <= coarse,
            "halving rtol: error {coarse} -> {fine} (improvement below 2x)"
        );
    }
}
