//! The variational equation of the extended system along its invariant-plane
//! solutions, the six-column fundamental set, and the sigma-action identities
//! on it.
//!
//! Every integral appearing in the first fundamental column is adjoined as a
//! primitive generator whose derivation is the integrand, so all column
//! verifications reduce to exact derivation identities. The system has an
//! irregular singularity at infinity; nothing here depends on singularity
//! classification.

use crate::dynsys::{catalog, jacobian, verify_particular_solution, ParticularSolution, VectorField};
use crate::error::{Error, Result};
use crate::parse::pretty_print;
use crate::ratfunc::RatFunc;
use crate::symbol::Symbol;
use crate::tower::{ExtensionKind, SigmaSpec, Tower, TowerElem};
use serde::Serialize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum CaseTag {
    #[serde(rename = "a_ne_b")]
    ANeB,
    #[serde(rename = "a_eq_b")]
    AEqB,
}

impl CaseTag {
    pub fn as_str(&self) -> &'static str {
        match self {
            CaseTag::ANeB => "a_ne_b",
            CaseTag::AEqB => "a_eq_b",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "a_ne_b" => Ok(CaseTag::ANeB),
            "a_eq_b" => Ok(CaseTag::AEqB),
            other => Err(Error::Invalid(format!("unknown case `{other}`"))),
        }
    }
}

const PARAMS: [&str; 7] = ["C1", "C2", "C3", "a", "b", "c", "r"];

/// The towers for one case: `sigma_tower` holds t, the exponentials and (for
/// a = b) the product generator w = t e^{-at}; `tower` extends it with the
/// five primitive generators J1..J5 used by the first fundamental column.
pub struct VeSetting {
    pub case: CaseTag,
    pub sigma_tower: Tower,
    pub tower: Tower,
}

pub fn ve_setting(case: CaseTag) -> Result<VeSetting> {
    let t0 = Tower::base_field("t", &PARAMS);
    let minus_at = -&(&t0.param("a") * &t0.base_elem());
    let tw = t0.extend("ea", ExtensionKind::Exponential(minus_at))?;

    let tw = match case {
        CaseTag::ANeB => {
            let minus_bt = -&(&tw.param("b") * &tw.base_elem());
            tw.extend("eb", ExtensionKind::Exponential(minus_bt))?
        }
        CaseTag::AEqB => tw,
    };

    // thX = exp((r C2 / a) e^{-at}), the X component of the solution.
    let coeff = &(&tw.param("r") * &tw.param("C2")) / &tw.param("a");
    let x_arg = &coeff * &tw.gen("ea")?;
    let tw = tw.extend("thX", ExtensionKind::Exponential(x_arg))?;

    let sigma_tower = match case {
        CaseTag::ANeB => tw,
        CaseTag::AEqB => tw.extend("w", ExtensionKind::TimesBase(Symbol::new("ea")))?,
    };

    // Primitive generators for the nested integrals of the first column.
    let p = |tower: &Tower, name: &str| tower.param(name);
    let rc2c3 = |tw: &Tower| &(&p(tw, "r") * &p(tw, "C2")) * &p(tw, "C3");
    let tower = {
        let tw = sigma_tower.clone();
        let ea = tw.gen("ea")?;
        let thx = tw.gen("thX")?;
        // J1' = e^{-(a-b)t} thX  (thX for a = b)
        let j1_int = match case {
            CaseTag::ANeB => &(&ea * &tw.gen("eb")?.pow(-1)) * &thx,
            CaseTag::AEqB => thx.clone(),
        };
        let tw = tw.extend("J1", ExtensionKind::Primitive(j1_int))?;
        // J2' = deltaE e^{at}
        let j2_int = match case {
            CaseTag::ANeB => &(&rc2c3(&tw) * &(&tw.gen("eb")? / &tw.gen("ea")?)) * &tw.gen("J1")?,
            CaseTag::AEqB => &rc2c3(&tw) * &tw.gen("J1")?,
        };
        let tw = tw.extend("J2", ExtensionKind::Primitive(j2_int))?;
        // J3' = deltaI
        let decay = match case {
            CaseTag::ANeB => p(&tw, "b"),
            CaseTag::AEqB => p(&tw, "a"),
        };
        let j3_int = &(&decay * &tw.gen("ea")?) * &tw.gen("J2")?;
        let tw = tw.extend("J3", ExtensionKind::Primitive(j3_int))?;
        // J4' = deltaE
        let j4_int = match case {
            CaseTag::ANeB => &(&rc2c3(&tw) * &tw.gen("eb")?) * &tw.gen("J1")?,
            CaseTag::AEqB => &(&rc2c3(&tw) * &tw.gen("ea")?) * &tw.gen("J1")?,
        };
        let tw = tw.extend("J4", ExtensionKind::Primitive(j4_int))?;
        // J5' = e^{-at} thX
        let j5_int = &tw.gen("ea")? * &tw.gen("thX")?;
        tw.extend("J5", ExtensionKind::Primitive(j5_int))?
    };

    Ok(VeSetting { case, sigma_tower, tower })
}

/// The extended vector field for the case (b replaced by a when a = b).
pub fn seir_ext_field(case: CaseTag) -> Result<VectorField> {
    let f = catalog("seir_ext")?;
    match case {
        CaseTag::ANeB => Ok(f),
        CaseTag::AEqB => {
            f.substitute_params(&|s: &Symbol| (s.as_str() == "b").then(|| RatFunc::var(Symbol::new("a"))))
        }
    }
}

/// The SEIR field restricted to three states, for invariant-plane checks.
pub fn sei_field(case: CaseTag) -> Result<VectorField> {
    let f = catalog("sei")?;
    match case {
        CaseTag::ANeB => Ok(f),
        CaseTag::AEqB => {
            f.substitute_params(&|s: &Symbol| (s.as_str() == "b").then(|| RatFunc::var(Symbol::new("a"))))
        }
    }
}

/// The solution (S,E,I,X,Y,Z) = (0, 0, C2 e^{-at}, thX, 1, 1) with C1 = 0.
pub fn extended_solution(setting: &VeSetting) -> Result<ParticularSolution> {
    let tw = &setting.sigma_tower;
    let ibar = &tw.param("C2") * &tw.gen("ea")?;
    Ok(ParticularSolution::new(vec![
        ("S", tw.zero()),
        ("E", tw.zero()),
        ("I", ibar),
        ("X", tw.gen("thX")?),
        ("Y", tw.one()),
        ("Z", tw.one()),
    ]))
}

/// The invariant-plane solutions with general C1, C2 over (S,E,I).
pub fn invariant_plane_solution(setting: &VeSetting) -> Result<ParticularSolution> {
    let tw = &setting.sigma_tower;
    let (a, c1, c2) = (tw.param("a"), tw.param("C1"), tw.param("C2"));
    let ea = tw.gen("ea")?;
    match setting.case {
        CaseTag::ANeB => {
            let b = tw.param("b");
            let eb = tw.gen("eb")?;
            let coef = &(&b * &c1) / &(&a - &b);
            let ibar = &(&coef * &eb) + &(&(&c2 - &coef) * &ea);
            Ok(ParticularSolution::new(vec![
                ("S", tw.zero()),
                ("E", &c1 * &eb),
                ("I", ibar),
            ]))
        }
        CaseTag::AEqB => {
            let w = tw.gen("w")?;
            let ibar = &(&(&a * &c1) * &w) + &(&c2 * &ea);
            Ok(ParticularSolution::new(vec![
                ("S", tw.zero()),
                ("E", &c1 * &ea),
                ("I", ibar),
            ]))
        }
    }
}

/// Coefficient matrix of the variational equation along a verified solution:
/// the Jacobian with the solution substituted.
pub fn build_ve(f: &VectorField, sol: &ParticularSolution) -> Result<Vec<Vec<TowerElem>>> {
    let residuals = verify_particular_solution(sol, f)?;
    if residuals.iter().any(|r| !r.is_zero()) {
        return Err(Error::Invalid(
            "solution does not satisfy the system (nonzero residual)".into(),
        ));
    }
    let jac = jacobian(f);
    let mut tower: Option<Tower> = None;
    for s in f.states() {
        let e = sol.get(s).unwrap();
        tower = Some(match tower {
            None => e.tower().clone(),
            Some(t) if e.tower().gens().len() > t.gens().len() => e.tower().clone(),
            Some(t) => t,
        });
    }
    let tower = tower.ok_or_else(|| Error::Invalid("empty system".into()))?;
    let mut matrix = Vec::with_capacity(f.dim());
    for row in jac {
        let mut out = Vec::with_capacity(f.dim());
        for entry in row {
            let substituted = entry
                .substitute(&|x: &Symbol| sol.get(x).map(|e| e.value().clone()))?;
            out.push(tower.elem(substituted)?);
        }
        matrix.push(out);
    }
    Ok(matrix)
}

/// The VE (with its case tag) of the extended system along the solution.
pub struct LinearSystem {
    pub case: CaseTag,
    pub tower: Tower,
    pub matrix: Vec<Vec<TowerElem>>,
}

impl LinearSystem {
    pub fn dim(&self) -> usize {
        self.matrix.len()
    }

    pub fn trace(&self) -> TowerElem {
        let mut acc = self.tower.zero();
        for i in 0..self.dim() {
            acc = &acc + &self.matrix[i][i];
        }
        acc
    }
}

pub fn seir_linear_system(case: CaseTag) -> Result<LinearSystem> {
    let setting = ve_setting(case)?;
    let f = seir_ext_field(case)?;
    let sol = extended_solution(&setting)?;
    let matrix = build_ve(&f, &sol)?;
    Ok(LinearSystem { case, tower: setting.sigma_tower, matrix })
}

/// The six fundamental columns, exactly as displayed, in the tower with
/// primitive extensions.
pub struct FundamentalSet {
    pub case: CaseTag,
    pub tower: Tower,
    pub columns: Vec<Vec<TowerElem>>,
}

pub fn fundamental_columns(case: CaseTag) -> Result<FundamentalSet> {
    let setting = ve_setting(case)?;
    let tw = &setting.tower;
    let mut columns = vec![column_phi1(tw, case)?];
    for j in 2..=6 {
        columns.push(column_phi_upper(tw, case, j)?);
    }
    Ok(FundamentalSet { case, tower: tw.clone(), columns })
}

fn column_phi1(tw: &Tower, case: CaseTag) -> Result<Vec<TowerElem>> {
    let (a, r, c2, c3) = (tw.param("a"), tw.param("r"), tw.param("C2"), tw.param("C3"));
    let ea = tw.gen("ea")?;
    let thx = tw.gen("thX")?;
    let rc2c3 = &(&r * &c2) * &c3;
    let e_decay = match case {
        CaseTag::ANeB => tw.gen("eb")?,
        CaseTag::AEqB => ea.clone(),
    };
    let b_or_a = match case {
        CaseTag::ANeB => tw.param("b"),
        CaseTag::AEqB => a.clone(),
    };
    Ok(vec![
        &c3 * &thx,
        &(&rc2c3 * &e_decay) * &tw.gen("J1")?,
        &(&b_or_a * &ea) * &tw.gen("J2")?,
        -&(&(&r * &thx) * &tw.gen("J3")?),
        -&(&(&(&r * &b_or_a) / &a) * &tw.gen("J4")?),
        -&(&(&(&(&(&r * &r) * &c2) * &c3) / &a) * &tw.gen("J5")?),
    ])
}

/// Columns 2..6. Column 2 is case-dependent; 3..6 are shared.
fn column_phi_upper(tw: &Tower, case: CaseTag, j: usize) -> Result<Vec<TowerElem>> {
    let (a, r, c3) = (tw.param("a"), tw.param("r"), tw.param("C3"));
    let ea = tw.gen("ea")?;
    let thx = tw.gen("thX")?;
    let r_over_a = &r / &a;
    let zero = tw.zero();
    let one = tw.one();
    Ok(match j {
        2 => match case {
            CaseTag::ANeB => {
                let b = tw.param("b");
                let eb = tw.gen("eb")?;
                // gamma = b/(a-b); gamma+1 = a/(a-b)
                let gamma = &b / &(&a - &b);
                let gamma1p = &(&gamma + &one);
                let d_i = &gamma * &(&eb - &ea);
                let d_x = &(&r_over_a
                    * &(&(&(gamma1p * &eb) - &(&gamma * &ea)) - &one))
                    * &thx;
                let d_y = &r_over_a * &(&eb - &one);
                vec![zero.clone(), eb, d_i, d_x, d_y, zero]
            }
            CaseTag::AEqB => {
                let w = tw.gen("w")?;
                let d_i = &a * &w;
                let d_x = &(&r_over_a * &(&(&(&a * &w) + &ea) - &one)) * &thx;
                let d_y = &r_over_a * &(&ea - &one);
                vec![zero.clone(), ea, d_i, d_x, d_y, zero]
            }
        },
        3 => {
            let d_x = &(&r_over_a * &(&ea - &one)) * &thx;
            vec![zero.clone(), zero.clone(), ea, d_x, zero.clone(), zero]
        }
        4 => {
            let d_x = &c3 * &thx;
            vec![zero.clone(), zero.clone(), zero.clone(), d_x, zero.clone(), zero]
        }
        5 => vec![zero.clone(), zero.clone(), zero.clone(), zero.clone(), one, zero],
        6 => vec![zero.clone(), zero.clone(), zero.clone(), zero.clone(), zero, one],
        _ => return Err(Error::Invalid(format!("column index {j} out of range"))),
    })
}

/// Residual d(col)/dt - M col; the zero vector iff the column solves the VE.
pub fn verify_ve_column(col: &[TowerElem], sys: &LinearSystem) -> Result<Vec<TowerElem>> {
    if col.len() != sys.dim() {
        return Err(Error::DimensionMismatch(format!(
            "column has {} entries, system is {}-dimensional",
            col.len(),
            sys.dim()
        )));
    }
    let mut out = Vec::with_capacity(col.len());
    for i in 0..sys.dim() {
        let mut rhs: Option<TowerElem> = None;
        for j in 0..sys.dim() {
            let term = &sys.matrix[i][j] * &col[j];
            rhs = Some(match rhs {
                None => term,
                Some(acc) => &acc + &term,
            });
        }
        let rhs = rhs.unwrap();
        out.push(&col[i].derive() - &rhs);
    }
    Ok(out)
}

/// The fundamental matrix evaluated symbolically at t = 0: generators take
/// their initial values (thX(0) = 1/C3 by the defining relation of C3).
pub fn fundamental_at_zero(case: CaseTag) -> Result<Vec<Vec<RatFunc>>> {
    let set = fundamental_columns(case)?;
    let c3_inv = RatFunc::var(Symbol::new("C3")).pow(-1);
    let at_zero = |e: &TowerElem| -> Result<RatFunc> {
        e.value().substitute(&|s: &Symbol| match s.as_str() {
            "t" | "w" | "J1" | "J2" | "J3" | "J4" | "J5" => Some(RatFunc::zero()),
            "ea" | "eb" => Some(RatFunc::one()),
            "thX" => Some(c3_inv.clone()),
            _ => None,
        })
    };
    let mut rows = vec![vec![RatFunc::zero(); 6]; 6];
    for (j, col) in set.columns.iter().enumerate() {
        for (i, entry) in col.iter().enumerate() {
            rows[i][j] = at_zero(entry)?;
        }
    }
    Ok(rows)
}

/// Verdict of the sigma-action identities on the fundamental set.
#[derive(Serialize)]
pub struct SigmaActionReport {
    pub case: CaseTag,
    /// Claimed coefficients of sigma(Phi_2) in the basis Phi_1..Phi_6.
    pub combination: Vec<String>,
    /// Component-wise residual of sigma(Phi_2) minus the combination.
    pub residual: Vec<String>,
    /// Residuals of sigma(Phi_j) - Phi_j for j = 3..6.
    pub fixed_residuals: Vec<Vec<String>>,
    pub pass: bool,
}

/// Verifies the displayed action of sigma on the fundamental set with
/// symbolic c: sigma scales e^{-bt} by c (a != b) or shifts w = t e^{-at} by
/// c e^{-at} (a = b), fixing the base field.
pub fn sigma_action_check(case: CaseTag) -> Result<SigmaActionReport> {
    let setting = ve_setting(case)?;
    let tw = &setting.sigma_tower;
    let c = tw.param("c");
    let sigma = match case {
        CaseTag::ANeB => {
            let image = &c * &tw.gen("eb")?;
            SigmaSpec::new(tw, vec![("eb", image)])?
        }
        CaseTag::AEqB => {
            let image = &tw.gen("w")? + &(&c * &tw.gen("ea")?);
            SigmaSpec::new(tw, vec![("w", image)])?
        }
    };

    let columns: Vec<Vec<TowerElem>> =
        (2..=6).map(|j| column_phi_upper(tw, case, j)).collect::<Result<Vec<_>>>()?;
    let phi = |j: usize| -> &Vec<TowerElem> { &columns[j - 2] };

    // Claimed combination coefficients for sigma(Phi_2).
    let (a, r, c3) = (tw.param("a"), tw.param("r"), tw.param("C3"));
    let one = tw.one();
    let coeffs: Vec<TowerElem> = match case {
        CaseTag::ANeB => {
            let b = tw.param("b");
            let gamma = &b / &(&a - &b);
            let gamma_p1 = &gamma + &one;
            let c_m1 = &c - &one;
            vec![
                tw.zero(),
                c.clone(),
                &gamma * &c_m1,
                &(&(&gamma_p1 * &c_m1) * &r) / &(&a * &c3),
                &(&c_m1 * &r) / &a,
                tw.zero(),
            ]
        }
        CaseTag::AEqB => vec![
            tw.zero(),
            one.clone(),
            &a * &c,
            &(&r * &c) / &c3,
            tw.zero(),
            tw.zero(),
        ],
    };

    // sigma(Phi_2) - sum_j coeff_j Phi_j (the Phi_1 coefficient is zero, so
    // the combination stays within the primitive-free tower).
    let mut residual = Vec::with_capacity(6);
    for i in 0..6 {
        let lhs = sigma.apply(&phi(2)[i])?;
        let mut rhs = tw.zero();
        for j in 2..=6 {
            rhs = &rhs + &(&coeffs[j - 1] * &phi(j)[i]);
        }
        residual.push(&lhs - &rhs);
    }

    let mut fixed_residuals = Vec::new();
    for j in 3..=6 {
        let mut rs = Vec::with_capacity(6);
        for i in 0..6 {
            rs.push(&sigma.apply(&phi(j)[i])? - &phi(j)[i]);
        }
        fixed_residuals.push(rs);
    }

    let pass = residual.iter().all(|r| r.is_zero())
        && fixed_residuals.iter().flatten().all(|r| r.is_zero());
    Ok(SigmaActionReport {
        case,
        combination: coeffs.iter().map(pretty_print).collect(),
        residual: residual.iter().map(pretty_print).collect(),
        fixed_residuals: fixed_residuals
            .iter()
            .map(|rs| rs.iter().map(pretty_print).collect())
            .collect(),
        pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ve_matrix_matches_displayed_entries() {
        let sys = seir_linear_system(CaseTag::ANeB).unwrap();
        let tw = &sys.tower;
        let (r, c2) = (tw.param("r"), tw.param("C2"));
        let ea = tw.gen("ea").unwrap();
        let thx = tw.gen("thX").unwrap();
        // (deltaX row, deltaI col) = -r thX
        assert_eq!(sys.matrix[3][2], -&(&r * &thx));
        // (deltaS row, deltaS col) = -r C2 e^{-at}
        assert_eq!(sys.matrix[0][0], -&(&(&r * &c2) * &ea));
        // (deltaY row, deltaS col) = 0; deltaY depends only on deltaE
        assert!(sys.matrix[4][0].is_zero());
        assert!(!sys.matrix[4][1].is_zero());
    }

    #[test]
    fn all_columns_verify_in_both_cases() {
        for case in [CaseTag::ANeB, CaseTag::AEqB] {
            let sys = seir_linear_system(case).unwrap();
            let set = fundamental_columns(case).unwrap();
            for (j, col) in set.columns.iter().enumerate() {
                let res = verify_ve_column(col, &sys).unwrap();
                for (i, r) in res.iter().enumerate() {
                    assert!(r.is_zero(), "case {case:?} column {} row {} residual {:?}", j + 1, i, r);
                }
            }
        }
    }

    #[test]
    fn perturbed_column_fails() {
        // Column 3 with the deltaX coefficient r/a replaced by r.
        let case = CaseTag::ANeB;
        let sys = seir_linear_system(case).unwrap();
        let set = fundamental_columns(case).unwrap();
        let tw = &set.tower;
        let mut col = set.columns[2].clone();
        col[3] = &(&tw.param("r")
            * &(&tw.gen("ea").unwrap() - &tw.one()))
            * &tw.gen("thX").unwrap();
        let res = verify_ve_column(&col, &sys).unwrap();
        assert!(res.iter().any(|r| !r.is_zero()));
    }

    #[test]
    fn identity_at_zero() {
        for case in [CaseTag::ANeB, CaseTag::AEqB] {
            let m = fundamental_at_zero(case).unwrap();
            for i in 0..6 {
                for j in 0..6 {
                    let expect = if i == j { RatFunc::one() } else { RatFunc::zero() };
                    assert_eq!(m[i][j], expect, "case {case:?} entry ({i},{j})");
                }
            }
        }
    }

    #[test]
    fn sigma_action_verifies_for_symbolic_c() {
        for case in [CaseTag::ANeB, CaseTag::AEqB] {
            let report = sigma_action_check(case).unwrap();
            assert!(report.pass, "case {case:?}: residual {:?}", report.residual);
        }
    }

    #[test]
    fn sigma_is_identity_at_fixed_point() {
        // c = 1 (a != b) and c = 0 (a = b) make sigma the identity on Phi_2.
        let setting = ve_setting(CaseTag::ANeB).unwrap();
        let tw = &setting.sigma_tower;
        let image = tw.gen("eb").unwrap();
        let sigma = SigmaSpec::new(tw, vec![("eb", image)]).unwrap();
        let col = column_phi_upper(tw, CaseTag::ANeB, 2).unwrap();
        for e in &col {
            assert_eq!(&sigma.apply(e).unwrap(), e);
        }

        let setting = ve_setting(CaseTag::AEqB).unwrap();
        let tw = &setting.sigma_tower;
        let image = tw.gen("w").unwrap();
        let sigma = SigmaSpec::new(tw, vec![("w", image)]).unwrap();
        let col = column_phi_upper(tw, CaseTag::AEqB, 2).unwrap();
        for e in &col {
            assert_eq!(&sigma.apply(e).unwrap(), e);
        }
    }

    #[test]
    fn invariant_plane_solutions_verify_with_general_c1() {
        for case in [CaseTag::ANeB, CaseTag::AEqB] {
            let setting = ve_setting(case).unwrap();
            let sol = invariant_plane_solution(&setting).unwrap();
            let f = sei_field(case).unwrap();
            let res = verify_particular_solution(&sol, &f).unwrap();
            assert!(res.iter().all(|r| r.is_zero()), "case {case:?}");
        }
    }

    #[test]
    fn extended_solution_verifies() {
        for case in [CaseTag::ANeB, CaseTag::AEqB] {
            let setting = ve_setting(case).unwrap();
            let sol = extended_solution(&setting).unwrap();
            let f = seir_ext_field(case).unwrap();
            let res = verify_particular_solution(&sol, &f).unwrap();
            assert!(res.iter().all(|r| r.is_zero()), "case {case:?}");
        }
    }

    #[test]
    fn build_ve_rejects_unverified_solution() {
        let setting = ve_setting(CaseTag::ANeB).unwrap();
        let tw = &setting.sigma_tower;
        let bad = ParticularSolution::new(vec![
            ("S", tw.one()),
            ("E", tw.zero()),
            ("I", tw.one()),
            ("X", tw.one()),
            ("Y", tw.one()),
            ("Z", tw.one()),
        ]);
        let f = seir_ext_field(CaseTag::ANeB).unwrap();
        assert!(build_ve(&f, &bad).is_err());
    }
}
