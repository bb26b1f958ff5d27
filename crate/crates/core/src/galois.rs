//! The 6x6 matrices representing sigma on the fundamental set, their exact
//! powers against the displayed closed forms, and non-commutativity
//! certificates for the displayed identity-component families.
//!
//! Entries live in the parametric constant field Q(c, alpha1..alpha5,
//! gamma, gamma1, gamma2); the gammas are free here, with their defining
//! expressions in a, b, r, C3 housed in the variational module.

use crate::error::{Error, Result};
use crate::rat::Rat;
use crate::ratfunc::RatFunc;
use crate::symbol::Symbol;
use crate::variational::CaseTag;
use serde::Serialize;

const N: usize = 6;

/// Parameter values (symbolic by default) for matrix construction.
#[derive(Clone)]
pub struct GaloisParams {
    pub c: RatFunc,
    pub alpha: [RatFunc; 5],
    pub gamma: RatFunc,
    pub gamma1: RatFunc,
    pub gamma2: RatFunc,
}

fn var(name: &str) -> RatFunc {
    RatFunc::var(Symbol::new(name))
}

impl GaloisParams {
    pub fn symbolic() -> Self {
        GaloisParams {
            c: var("c"),
            alpha: [var("alpha1"), var("alpha2"), var("alpha3"), var("alpha4"), var("alpha5")],
            gamma: var("gamma"),
            gamma1: var("gamma1"),
            gamma2: var("gamma2"),
        }
    }

    pub fn from_rats(c: Rat, alpha: [Rat; 5], gamma: Rat, gamma1: Rat, gamma2: Rat) -> Self {
        GaloisParams {
            c: RatFunc::from_rat(c),
            alpha: alpha.map(RatFunc::from_rat),
            gamma: RatFunc::from_rat(gamma),
            gamma1: RatFunc::from_rat(gamma1),
            gamma2: RatFunc::from_rat(gamma2),
        }
    }
}

/// A 6x6 matrix over the parametric constant field.
#[derive(Clone, PartialEq)]
pub struct GaloisMatrix {
    pub case: CaseTag,
    entries: Vec<Vec<RatFunc>>,
}

impl GaloisMatrix {
    pub fn identity(case: CaseTag) -> Self {
        let mut entries = vec![vec![RatFunc::zero(); N]; N];
        for (i, row) in entries.iter_mut().enumerate() {
            row[i] = RatFunc::one();
        }
        GaloisMatrix { case, entries }
    }

    pub fn from_rows(case: CaseTag, entries: Vec<Vec<RatFunc>>) -> Self {
        assert_eq!(entries.len(), N);
        assert!(entries.iter().all(|r| r.len() == N));
        GaloisMatrix { case, entries }
    }

    pub fn entry(&self, i: usize, j: usize) -> &RatFunc {
        &self.entries[i][j]
    }

    pub fn mul(&self, rhs: &GaloisMatrix) -> GaloisMatrix {
        let mut out = vec![vec![RatFunc::zero(); N]; N];
        for i in 0..N {
            for j in 0..N {
                let mut acc = RatFunc::zero();
                for (k, rhs_row) in rhs.entries.iter().enumerate() {
                    let a = &self.entries[i][k];
                    let b = &rhs_row[j];
                    if a.is_zero() || b.is_zero() {
                        continue;
                    }
                    acc = &acc + &(a * b);
                }
                out[i][j] = acc;
            }
        }
        GaloisMatrix { case: self.case, entries: out }
    }

    pub fn sub(&self, rhs: &GaloisMatrix) -> GaloisMatrix {
        let entries = self
            .entries
            .iter()
            .zip(&rhs.entries)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x - y).collect())
            .collect();
        GaloisMatrix { case: self.case, entries }
    }

    pub fn commutator(&self, rhs: &GaloisMatrix) -> GaloisMatrix {
        self.mul(rhs).sub(&rhs.mul(self))
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().flatten().all(|e| e.is_zero())
    }

    /// Cofactor expansion along the first row (exact).
    pub fn det(&self) -> RatFunc {
        fn go(m: &[Vec<RatFunc>]) -> RatFunc {
            let n = m.len();
            if n == 1 {
                return m[0][0].clone();
            }
            let mut acc = RatFunc::zero();
            for j in 0..n {
                if m[0][j].is_zero() {
                    continue;
                }
                let minor: Vec<Vec<RatFunc>> = m[1..]
                    .iter()
                    .map(|row| {
                        row.iter()
                            .enumerate()
                            .filter(|&(k, _)| k != j)
                            .map(|(_, e)| e.clone())
                            .collect()
                    })
                    .collect();
                let term = &m[0][j] * &go(&minor);
                acc = if j % 2 == 0 { &acc + &term } else { &acc - &term };
            }
            acc
        }
        go(&self.entries)
    }

    pub fn to_strings(&self) -> Vec<Vec<String>> {
        self.entries.iter().map(|r| r.iter().map(|e| e.to_string()).collect()).collect()
    }
}

impl std::fmt::Debug for GaloisMatrix {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for row in &self.entries {
            writeln!(f, "{row:?}")?;
        }
        Ok(())
    }
}

/// The matrix of sigma on (Phi_1..Phi_6). The first displayed row is
/// completed to (1,0,0,0,0,0), the unique completion consistent with the
/// squared and k-th power displays.
pub fn build_matrix(case: CaseTag, p: &GaloisParams) -> GaloisMatrix {
    let mut m = GaloisMatrix::identity(case);
    let one = RatFunc::one();
    for i in 0..5 {
        m.entries[i + 1][0] = p.alpha[i].clone();
    }
    match case {
        CaseTag::ANeB => {
            let c_m1 = &p.c - &one;
            m.entries[1][1] = p.c.clone();
            m.entries[2][1] = &p.gamma * &c_m1;
            m.entries[3][1] = &p.gamma1 * &c_m1;
            m.entries[4][1] = &p.gamma2 * &c_m1;
        }
        CaseTag::AEqB => {
            m.entries[2][1] = p.c.clone();
            m.entries[3][1] = &p.gamma1 * &p.c;
        }
    }
    m
}

/// A^k by k-1 exact multiplications; the oracle for the closed form.
pub fn power_iterative(case: CaseTag, p: &GaloisParams, k: u32) -> GaloisMatrix {
    assert!(k >= 1, "k must be a positive integer");
    let a = build_matrix(case, p);
    let mut acc = a.clone();
    for _ in 1..k {
        acc = acc.mul(&a);
    }
    acc
}

/// 1 + c + ... + c^{k-1}, the (c^k - 1)/(c - 1) entries in a form valid for
/// every c.
fn geometric_sum(c: &RatFunc, k: u32) -> RatFunc {
    let mut acc = RatFunc::zero();
    let mut pow = RatFunc::one();
    for _ in 0..k {
        acc = &acc + &pow;
        pow = &pow * c;
    }
    acc
}

/// The closed form of A^k (the corrected induction, equal to the iterative
/// power for every k).
pub fn power_closed_form(case: CaseTag, p: &GaloisParams, k: u32) -> GaloisMatrix {
    assert!(k >= 1, "k must be a positive integer");
    let mut m = GaloisMatrix::identity(case);
    let kq = RatFunc::from_rat(Rat::from_int(k as i64));
    match case {
        CaseTag::ANeB => {
            let geom = geometric_sum(&p.c, k);
            let ck = p.c.pow(k as i64);
            let ck_m1 = &ck - &RatFunc::one();
            let geom_minus_k = &geom - &kq;
            m.entries[1][0] = &p.alpha[0] * &geom;
            m.entries[1][1] = ck;
            for (row, g, a_low) in [
                (2usize, &p.gamma, &p.alpha[1]),
                (3, &p.gamma1, &p.alpha[2]),
                (4, &p.gamma2, &p.alpha[3]),
            ] {
                m.entries[row][0] =
                    &(&(g * &p.alpha[0]) * &geom_minus_k) + &(&kq * a_low);
                m.entries[row][1] = g * &ck_m1;
            }
            m.entries[5][0] = &kq * &p.alpha[4];
        }
        CaseTag::AEqB => {
            // sum_{j<k} j = k(k-1)/2
            let tri = RatFunc::from_rat(Rat::new((k as i64) * (k as i64 - 1), 2));
            m.entries[1][0] = &kq * &p.alpha[0];
            m.entries[2][0] = &(&(&tri * &p.c) * &p.alpha[0]) + &(&kq * &p.alpha[1]);
            m.entries[2][1] = &kq * &p.c;
            m.entries[3][0] =
                &(&(&(&tri * &p.gamma1) * &p.c) * &p.alpha[0]) + &(&kq * &p.alpha[2]);
            m.entries[3][1] = &(&kq * &p.gamma1) * &p.c;
            m.entries[4][0] = &kq * &p.alpha[3];
            m.entries[5][0] = &kq * &p.alpha[4];
        }
    }
    m
}

/// The printed A^2 display, transcribed verbatim (including any typos).
pub fn printed_a2(case: CaseTag, p: &GaloisParams) -> GaloisMatrix {
    let mut m = GaloisMatrix::identity(case);
    let one = RatFunc::one();
    let two = RatFunc::from_int(2);
    match case {
        CaseTag::ANeB => {
            let c_m1 = &p.c - &one;
            let c2 = p.c.pow(2);
            let c2_m1 = &c2 - &one;
            m.entries[1][0] = &p.alpha[0] * &(&p.c + &one);
            m.entries[1][1] = c2;
            m.entries[2][0] = &(&(&p.gamma * &p.alpha[0]) * &c_m1) + &(&two * &p.alpha[1]);
            m.entries[2][1] = &p.gamma * &c2_m1;
            m.entries[3][0] = &(&(&p.gamma1 * &p.alpha[0]) * &c_m1) + &(&two * &p.alpha[2]);
            m.entries[3][1] = &p.gamma1 * &c2_m1;
            // The display repeats 2 alpha_3 in the gamma_2 row.
            m.entries[4][0] = &(&(&p.gamma2 * &p.alpha[0]) * &c_m1) + &(&two * &p.alpha[2]);
            m.entries[4][1] = &p.gamma2 * &c2_m1;
            m.entries[5][0] = &two * &p.alpha[4];
        }
        CaseTag::AEqB => {
            m.entries[1][0] = &two * &p.alpha[0];
            m.entries[2][0] = &(&p.alpha[0] * &p.c) + &(&two * &p.alpha[1]);
            m.entries[2][1] = &two * &p.c;
            // The display drops the factor c from gamma_1 alpha_1.
            m.entries[3][0] = &(&p.gamma1 * &p.alpha[0]) + &(&two * &p.alpha[2]);
            m.entries[3][1] = &(&two * &p.gamma1) * &p.c;
            m.entries[4][0] = &two * &p.alpha[3];
            m.entries[5][0] = &two * &p.alpha[4];
        }
    }
    m
}

/// The printed A^k display instantiated at a concrete k, transcribed
/// verbatim (including any typos).
pub fn printed_power(case: CaseTag, p: &GaloisParams, k: u32) -> GaloisMatrix {
    assert!(k >= 1);
    let mut m = GaloisMatrix::identity(case);
    let one = RatFunc::one();
    let kq = RatFunc::from_rat(Rat::from_int(k as i64));
    match case {
        CaseTag::ANeB => {
            // (c^k - 1)/(c - 1): exact division for symbolic c.
            let ck = p.c.pow(k as i64);
            let ck_m1 = &ck - &one;
            let ratio = geometric_sum(&p.c, k); // equals (c^k-1)/(c-1)
            m.entries[1][0] = &p.alpha[0] * &ratio;
            m.entries[1][1] = ck;
            m.entries[2][0] = &(&(&p.gamma * &p.alpha[0]) * &ratio)
                + &(&kq * &(&p.alpha[1] - &(&p.gamma * &p.alpha[0])));
            m.entries[2][1] = &p.gamma * &ck_m1;
            m.entries[3][0] = &(&(&p.gamma1 * &p.alpha[0]) * &ratio)
                + &(&kq * &(&p.alpha[2] - &(&p.gamma1 * &p.alpha[0])));
            m.entries[3][1] = &p.gamma1 * &ck_m1;
            // The display repeats alpha_3 in the gamma_2 row.
            m.entries[4][0] = &(&(&p.gamma2 * &p.alpha[0]) * &ratio)
                + &(&kq * &(&p.alpha[2] - &(&p.gamma2 * &p.alpha[0])));
            m.entries[4][1] = &p.gamma2 * &ck_m1;
            m.entries[5][0] = &kq * &p.alpha[4];
        }
        CaseTag::AEqB => {
            let tri = RatFunc::from_rat(Rat::new((k as i64) * (k as i64 - 1), 2));
            m.entries[1][0] = &kq * &p.alpha[0];
            m.entries[2][0] = &(&(&tri * &p.alpha[0]) * &p.c) + &(&kq * &p.alpha[1]);
            m.entries[2][1] = &kq * &p.c;
            // The display shows row 3 with its unit in column 4.
            m.entries[2][2] = RatFunc::zero();
            m.entries[2][3] = one.clone();
            // The display repeats k alpha_2 in the gamma_1 row.
            m.entries[3][0] =
                &(&(&(&tri * &p.alpha[0]) * &p.gamma1) * &p.c) + &(&kq * &p.alpha[1]);
            m.entries[3][1] = &(&kq * &p.gamma1) * &p.c;
            m.entries[4][0] = &kq * &p.alpha[3];
            m.entries[5][0] = &kq * &p.alpha[4];
        }
    }
    m
}

#[derive(Clone, Debug, Serialize)]
pub struct EntryMismatch {
    pub row: usize,
    pub col: usize,
    pub computed: String,
    pub printed: String,
}

fn diff_entries(computed: &GaloisMatrix, printed: &GaloisMatrix) -> Vec<EntryMismatch> {
    let mut out = Vec::new();
    for i in 0..N {
        for j in 0..N {
            if computed.entry(i, j) != printed.entry(i, j) {
                out.push(EntryMismatch {
                    row: i + 1,
                    col: j + 1,
                    computed: computed.entry(i, j).to_string(),
                    printed: printed.entry(i, j).to_string(),
                });
            }
        }
    }
    out
}

/// Entry-by-entry comparison of the exact A^2 against the printed display,
/// with symbolic parameters.
pub fn compare_a2(case: CaseTag) -> Vec<EntryMismatch> {
    let p = GaloisParams::symbolic();
    diff_entries(&power_iterative(case, &p, 2), &printed_a2(case, &p))
}

/// Entry-by-entry comparison of the exact A^k against the printed k-th
/// power display, with symbolic parameters.
pub fn compare_printed_power(case: CaseTag, k: u32) -> Vec<EntryMismatch> {
    let p = GaloisParams::symbolic();
    diff_entries(&power_iterative(case, &p, k), &printed_power(case, &p, k))
}

/// One member specification inside a displayed identity-component family:
/// variant 1 has a zero alpha1 slot, variant 2 a nonzero one.
#[derive(Clone, Debug, Serialize)]
pub struct FamilySpec {
    pub variant: u8,
    pub c: Rat,
    pub alpha1: Rat,
}

/// Exact non-commutativity witness for the displayed families (asterisk
/// entries instantiated as zero).
#[derive(Clone, Serialize)]
pub struct NoncommutativityCertificate {
    pub case: CaseTag,
    pub gamma: Rat,
    pub gamma1: Rat,
    pub gamma2: Rat,
    pub m1_spec: FamilySpec,
    pub m2_spec: FamilySpec,
    pub m1: Vec<Vec<String>>,
    pub m2: Vec<Vec<String>>,
    pub commutator: Vec<Vec<String>>,
    /// 1-based indices of a nonzero commutator entry.
    pub witness_entry: (usize, usize),
    pub witness_value: Rat,
}

fn family_member(
    case: CaseTag,
    spec: &FamilySpec,
    gamma: &Rat,
    gamma1: &Rat,
    gamma2: &Rat,
) -> GaloisMatrix {
    // Variant 1 zeroes the alpha1 slot; in variant 2 the slot carries
    // alpha1 (c-1) for a != b and alpha1 c for a = b.
    let slot = match (case, spec.variant) {
        (_, 1) => Rat::zero(),
        (CaseTag::ANeB, _) => &spec.alpha1 * &(&spec.c - &Rat::one()),
        (CaseTag::AEqB, _) => &spec.alpha1 * &spec.c,
    };
    let p = GaloisParams::from_rats(
        spec.c.clone(),
        [slot, Rat::zero(), Rat::zero(), Rat::zero(), Rat::zero()],
        gamma.clone(),
        gamma1.clone(),
        gamma2.clone(),
    );
    // The family displays share the shape of A with the alpha1 slot as
    // above; asterisks (rows 3..6 of the first column) are zero here.
    build_matrix(case, &p)
}

/// Finds two members of the displayed families with a nonzero commutator by
/// a small exact grid search, and packages the witness.
pub fn noncommutativity_certificate(case: CaseTag) -> Result<NoncommutativityCertificate> {
    let gamma = Rat::from_int(2);
    let gamma1 = Rat::from_int(3);
    let gamma2 = Rat::from_int(5);
    let grid: Vec<Rat> = (-3..=3).map(Rat::from_int).collect();
    for c1 in &grid {
        let m1_spec = FamilySpec { variant: 1, c: c1.clone(), alpha1: Rat::zero() };
        let m1 = family_member(case, &m1_spec, &gamma, &gamma1, &gamma2);
        for c2 in &grid {
            let m2_spec = FamilySpec { variant: 2, c: c2.clone(), alpha1: Rat::one() };
            let m2 = family_member(case, &m2_spec, &gamma, &gamma1, &gamma2);
            let comm = m1.commutator(&m2);
            let Some((i, j)) = (0..N)
                .flat_map(|i| (0..N).map(move |j| (i, j)))
                .find(|&(i, j)| !comm.entry(i, j).is_zero())
            else {
                continue;
            };
            let value = comm.entry(i, j).as_rat().expect("rational entries");
            return Ok(NoncommutativityCertificate {
                case,
                gamma,
                gamma1,
                gamma2,
                m1_spec,
                m2_spec,
                m1: m1.to_strings(),
                m2: m2.to_strings(),
                commutator: comm.to_strings(),
                witness_entry: (i + 1, j + 1),
                witness_value: value,
            });
        }
    }
    Err(Error::Invalid("no non-commuting pair found on the grid".into()))
}

/// Re-verifies a certificate from scratch: rebuilds both members from their
/// family specs, recomputes the commutator, and checks the cited entry.
pub fn verify_noncommutativity(cert: &NoncommutativityCertificate) -> bool {
    let m1 = family_member(cert.case, &cert.m1_spec, &cert.gamma, &cert.gamma1, &cert.gamma2);
    let m2 = family_member(cert.case, &cert.m2_spec, &cert.gamma, &cert.gamma1, &cert.gamma2);
    if m1.to_strings() != cert.m1 || m2.to_strings() != cert.m2 {
        return false;
    }
    let comm = m1.commutator(&m2);
    if comm.to_strings() != cert.commutator {
        return false;
    }
    let (i, j) = cert.witness_entry;
    if !(1..=N).contains(&i) || !(1..=N).contains(&j) {
        return false;
    }
    let entry = comm.entry(i - 1, j - 1);
    !entry.is_zero() && entry.as_rat().as_ref() == Some(&cert.witness_value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn k1_is_the_matrix_itself() {
        for case in [CaseTag::ANeB, CaseTag::AEqB] {
            let p = GaloisParams::symbolic();
            assert_eq!(power_closed_form(case, &p, 1), build_matrix(case, &p));
            assert_eq!(power_iterative(case, &p, 1), build_matrix(case, &p));
        }
    }

    #[test]
    fn closed_form_equals_iterative_symbolically() {
        for case in [CaseTag::ANeB, CaseTag::AEqB] {
            let p = GaloisParams::symbolic();
            for k in 1..=6 {
                assert_eq!(
                    power_closed_form(case, &p, k),
                    power_iterative(case, &p, k),
                    "case {case:?} k={k}"
                );
            }
        }
    }

    #[test]
    fn closed_form_equals_iterative_random_rationals() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for case in [CaseTag::ANeB, CaseTag::AEqB] {
            for _ in 0..3 {
                let mut r = || Rat::new(rng.gen_range(-9i64..=9), rng.gen_range(1i64..=4));
                let p = GaloisParams::from_rats(
                    r(),
                    [r(), r(), r(), r(), r()],
                    r(),
                    r(),
                    r(),
                );
                for k in [5u32, 12, 20] {
                    assert_eq!(power_closed_form(case, &p, k), power_iterative(case, &p, k));
                }
            }
        }
    }

    #[test]
    fn a2_display_mismatches_are_exactly_the_typos() {
        let m = compare_a2(CaseTag::ANeB);
        assert_eq!(m.len(), 1);
        assert_eq!((m[0].row, m[0].col), (5, 1)); // 2 alpha_3 vs 2 alpha_4
        let m = compare_a2(CaseTag::AEqB);
        assert_eq!(m.len(), 1);
        assert_eq!((m[0].row, m[0].col), (4, 1)); // missing factor c
    }

    #[test]
    fn determinant_invariants() {
        let p = GaloisParams::symbolic();
        let det = build_matrix(CaseTag::ANeB, &p).det();
        assert_eq!(det, var("c"));
        let det = build_matrix(CaseTag::AEqB, &p).det();
        assert!(det.is_one());
    }

    #[test]
    fn alpha_zero_members_multiply_inside_the_family() {
        // M(c1) M(c2) with all alpha = 0 has the family shape with c1 c2.
        let mk = |c: RatFunc| {
            let p = GaloisParams {
                c,
                alpha: [
                    RatFunc::zero(),
                    RatFunc::zero(),
                    RatFunc::zero(),
                    RatFunc::zero(),
                    RatFunc::zero(),
                ],
                gamma: var("gamma"),
                gamma1: var("gamma1"),
                gamma2: var("gamma2"),
            };
            build_matrix(CaseTag::ANeB, &p)
        };
        let c1 = var("c");
        let c2 = var("d");
        let prod = mk(c1.clone()).mul(&mk(c2.clone()));
        let expect = mk(&c1 * &c2);
        assert_eq!(prod, expect);
    }

    #[test]
    fn certificates_verify_in_both_cases() {
        for case in [CaseTag::ANeB, CaseTag::AEqB] {
            let cert = noncommutativity_certificate(case).unwrap();
            assert!(verify_noncommutativity(&cert), "case {case:?}");
            // sanity: a member commutes with itself
            let m = family_member(case, &cert.m1_spec, &cert.gamma, &cert.gamma1, &cert.gamma2);
            assert!(m.commutator(&m).is_zero());
        }
    }

    #[test]
    fn tampered_certificate_rejected() {
        let mut cert = noncommutativity_certificate(CaseTag::ANeB).unwrap();
        cert.witness_value = Rat::zero();
        assert!(!verify_noncommutativity(&cert));
    }
}
