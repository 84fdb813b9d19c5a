//! Explicit witnesses for tree properties and definability, with finite
//! verifiers.
//!
//! The TP2 array uses `φ(x; y, z) := E(y·x) = z` and
//! `ψ(y₁ z₁, y₂ z₂) := y₁ = y₂ ∧ z₁ ≠ z₂`. Consistency along a branch is
//! established by actually solving the branch system in a free extension.

use std::collections::BTreeMap;
use std::fmt;

use num_integer::Integer;
use num_traits::{One, Signed};
use rayon::prelude::*;
use thiserror::Error;

use crate::efield::{
    e_eval, eval_system, extend_graph, realize_system, EEvalResult, EFieldError, EFieldPresentation, SolveOptions,
};
use crate::exactalg::linalg::linear_relations;
use crate::exactalg::{CycElem, FieldElem, Rat, Symbol};
use crate::exprlang::{parse_system, Atom, ESystem, ETerm};
use crate::variety::{additive_freeness, Verdict};

pub const MAX_SOP1_DEPTH: usize = 12;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TreeError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("unsupported shape: {0}")]
    UnsupportedShape(String),
    #[error("the presentation has cyclotomic order {order}, which is not divisible by {m}")]
    CyclotomicOrderMismatch { order: u32, m: u32 },
    #[error("`{0}` is not a transcendental of the presentation")]
    NotTranscendental(String),
    #[error("integer multiplier {0}: every integer stabilizes the kernel")]
    IntegerMultiplier(String),
    #[error("assignment {assignment} gives E(x^{n}) the value 0")]
    ZeroValue { assignment: usize, n: u32 },
    #[error(transparent)]
    EField(#[from] EFieldError),
}

/// A formula `φ(x; ȳ)` and an inconsistency witness `ψ(ȳ₁; ȳ₂)`.
///
/// Parameter names of `ψ` are those of `φ` with suffixes `1` and `2`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Templates {
    pub phi: ESystem,
    pub psi: ESystem,
    pub params: Vec<Symbol>,
}

impl Templates {
    pub fn builtin() -> Self {
        Templates {
            phi: parse_system("E(y*x) = z").expect("valid template"),
            psi: parse_system("y1 = y2 & z1 != z2").expect("valid template"),
            params: vec![Symbol::new("y"), Symbol::new("z")],
        }
    }

    pub fn is_builtin(&self) -> bool {
        *self == Templates::builtin()
    }

    fn validate(&self) -> Result<(), TreeError> {
        let phi_syms = self.phi.symbols();
        if let Some(p) = self.params.iter().find(|p| !phi_syms.contains(*p)) {
            return Err(TreeError::UnsupportedShape(format!("parameter `{p}` does not occur in φ")));
        }
        let allowed: Vec<Symbol> = (1..=2).flat_map(|k| self.psi_names(k)).collect();
        if let Some(s) = self.psi.symbols().into_iter().find(|s| !allowed.contains(s)) {
            return Err(TreeError::UnsupportedShape(format!("`{s}` in ψ is not a suffixed parameter")));
        }
        Ok(())
    }

    fn psi_names(&self, k: usize) -> Vec<Symbol> {
        self.params.iter().map(|p| Symbol::new(&format!("{p}{k}"))).collect()
    }

    /// `φ(x; a)` as a system in the object variables.
    pub fn instantiate(&self, a: &[FieldElem]) -> Result<ESystem, TreeError> {
        let map = self.param_terms(&self.params, a)?;
        Ok(ESystem {
            atoms: self
                .phi
                .atoms
                .iter()
                .map(|at| Atom { lhs: at.lhs.substitute(&map), rel: at.rel, rhs: at.rhs.substitute(&map), line: at.line })
                .collect(),
        })
    }

    fn param_terms(&self, names: &[Symbol], a: &[FieldElem]) -> Result<BTreeMap<Symbol, ETerm>, TreeError> {
        if a.len() != names.len() {
            return Err(TreeError::InvalidInput(format!("parameter tuple of length {}, expected {}", a.len(), names.len())));
        }
        names
            .iter()
            .zip(a)
            .map(|(n, e)| {
                let t = if e.denom().is_one() { ETerm::from_poly(e.numer()) } else { None };
                t.map(|t| (n.clone(), t))
                    .ok_or_else(|| TreeError::UnsupportedShape(format!("parameter {e} is not a polynomial over Q")))
            })
            .collect()
    }

    /// Whether `ψ(a; b)` holds in `f`.
    pub fn psi_holds(&self, f: &EFieldPresentation, a: &[FieldElem], b: &[FieldElem]) -> bool {
        let env: BTreeMap<Symbol, FieldElem> = self
            .psi_names(1)
            .into_iter()
            .zip(a.iter().cloned())
            .chain(self.psi_names(2).into_iter().zip(b.iter().cloned()))
            .collect();
        eval_system(f, &self.psi, &env).unwrap_or(false)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TP2Witness {
    pub n: usize,
    pub j: usize,
    pub f: EFieldPresentation,
    pub b: Vec<FieldElem>,
    pub c: Vec<FieldElem>,
    pub templates: Templates,
}

impl TP2Witness {
    /// Parameters `a[i][j] = (b_i, c_j)`, zero-based.
    pub fn param(&self, i: usize, j: usize) -> Vec<FieldElem> {
        vec![self.b[i].clone(), self.c[j].clone()]
    }

    /// `1, b_1, …, b_n` are Q-linearly independent.
    pub fn arguments_independent(&self) -> bool {
        let mut gens = vec![FieldElem::one()];
        gens.extend(self.b.iter().cloned());
        linear_relations(&gens).is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SOP1Candidate {
    pub depth: usize,
    pub f: EFieldPresentation,
    /// Binary strings of length below `depth` to parameter tuples.
    pub tree: BTreeMap<String, Vec<FieldElem>>,
    pub templates: Templates,
}

impl SOP1Candidate {
    pub fn validate(&self) -> Result<(), TreeError> {
        if self.depth > MAX_SOP1_DEPTH {
            return Err(TreeError::InvalidInput(format!("depth {} exceeds {MAX_SOP1_DEPTH}", self.depth)));
        }
        for key in self.tree.keys() {
            if key.len() >= self.depth || !key.chars().all(|ch| ch == '0' || ch == '1') {
                return Err(TreeError::InvalidInput(format!("node `{key}` is not a binary string below depth {}", self.depth)));
            }
        }
        let expected = (1usize << self.depth) - 1;
        if self.tree.len() != expected {
            return Err(TreeError::InvalidInput(format!("tree has {} nodes, a complete tree has {expected}", self.tree.len())));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Candidate {
    Tp2(TP2Witness),
    Sop1(SOP1Candidate),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Pass,
    Fail,
    Unverified,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Pass => "pass",
            Status::Fail => "fail",
            Status::Unverified => "unverified",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConditionReport {
    pub status: Status,
    pub checked: usize,
    pub counterexamples: Vec<String>,
    pub note: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BranchResult {
    pub branch: Vec<usize>,
    pub freeness: Option<Verdict>,
    /// Values of the object variables at the realized point.
    pub point: Option<BTreeMap<Symbol, FieldElem>>,
    pub error: Option<String>,
}

impl BranchResult {
    pub fn realized(&self) -> bool {
        self.point.is_some()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VerifyReport {
    pub condition_i: ConditionReport,
    pub condition_ii: ConditionReport,
    pub condition_iii: ConditionReport,
    pub branches: Vec<BranchResult>,
    /// Extension realizing the first branch.
    pub realizing_extension: Option<EFieldPresentation>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        [&self.condition_i, &self.condition_ii, &self.condition_iii].iter().all(|c| c.status == Status::Pass)
    }
}

const MAX_COUNTEREXAMPLES: usize = 10;

fn tp2_base(n: usize) -> EFieldPresentation {
    EFieldPresentation::new("tp2_base", 1, (1..=n as u64).map(|i| Symbol::indexed("b", i)).collect())
}

/// The TP2 array with `c_j = j`, checked along the branch `sigma` (values in `1..=J`).
pub fn tp2_witness(n: usize, j: usize, sigma: &[usize]) -> Result<(TP2Witness, VerifyReport), TreeError> {
    let c = (1..=j as i64).map(FieldElem::from_int).collect();
    tp2_witness_with_values(n, c, sigma)
}

pub fn tp2_witness_with_values(n: usize, c: Vec<FieldElem>, sigma: &[usize]) -> Result<(TP2Witness, VerifyReport), TreeError> {
    if n == 0 || c.is_empty() {
        return Err(TreeError::InvalidInput("n and J must be at least 1".into()));
    }
    if c.iter().any(FieldElem::is_zero) {
        return Err(TreeError::InvalidInput("the values c_j must be nonzero".into()));
    }
    for a in 0..c.len() {
        if c[a + 1..].contains(&c[a]) {
            return Err(TreeError::InvalidInput("the values c_j must be distinct".into()));
        }
    }
    let f = tp2_base(n);
    if let Some(e) = c.iter().find(|e| !f.contains(e) || e.coefficient_order() != 1) {
        return Err(TreeError::InvalidInput(format!("value {e} is not in the base field")));
    }
    let b = f.transcendentals.iter().map(|s| FieldElem::var(s.clone())).collect();
    let w = TP2Witness { n, j: c.len(), f, b, c, templates: Templates::builtin() };
    let report = verify_finite_witness(&Candidate::Tp2(w.clone()), &[sigma.to_vec()])?;
    Ok((w, report))
}

/// All branches `σ ∈ J^n`, one-based.
pub fn all_sigmas(n: usize, j: usize) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    for _ in 0..n {
        out = out.into_iter().flat_map(|s| (1..=j).map(move |v| [s.clone(), vec![v]].concat())).collect();
    }
    out
}

fn branch_system(cand: &Candidate, branch: &[usize]) -> Result<(EFieldPresentation, ESystem), TreeError> {
    let (f, t, params): (&EFieldPresentation, &Templates, Vec<Vec<FieldElem>>) = match cand {
        Candidate::Tp2(w) => {
            if branch.len() != w.n || branch.iter().any(|&s| s == 0 || s > w.j) {
                return Err(TreeError::InvalidInput(format!("branch {branch:?} is not in {{1..{}}}^{}", w.j, w.n)));
            }
            (&w.f, &w.templates, branch.iter().enumerate().map(|(i, &s)| w.param(i, s - 1)).collect())
        }
        Candidate::Sop1(c) => {
            if branch.len() != c.depth || branch.iter().any(|&s| s > 1) {
                return Err(TreeError::InvalidInput(format!("branch {branch:?} is not a binary string of length {}", c.depth)));
            }
            let path: String = branch.iter().map(|d| if *d == 0 { '0' } else { '1' }).collect();
            (&c.f, &c.templates, (0..c.depth).map(|k| c.tree[&path[..k]].clone()).collect())
        }
    };
    let mut atoms = Vec::new();
    for a in &params {
        atoms.extend(t.instantiate(a)?.atoms);
    }
    Ok((f.clone(), ESystem { atoms }))
}

fn check_branch(cand: &Candidate, branch: &[usize]) -> BranchResult {
    let failed = |freeness, error: String| BranchResult { branch: branch.to_vec(), freeness, point: None, error: Some(error) };
    let (f, system) = match branch_system(cand, branch) {
        Ok(x) => x,
        Err(e) => return failed(None, e.to_string()),
    };
    if system.atoms.is_empty() {
        return BranchResult { branch: branch.to_vec(), freeness: Some(Verdict::Free), point: Some(BTreeMap::new()), error: None };
    }
    match realize_system(&f, &system, SolveOptions::default()) {
        Ok(r) => BranchResult {
            branch: branch.to_vec(),
            freeness: Some(additive_freeness(&r.variety).verdict),
            point: Some(r.env),
            error: None,
        },
        Err(EFieldError::NotAdditivelyFree(cert)) => failed(Some(cert.verdict), "the branch variety is not additively free".into()),
        Err(e) => failed(None, e.to_string()),
    }
}

fn condition_iii(cand: &Candidate) -> ConditionReport {
    let mut checked = 0;
    let mut bad = Vec::new();
    let mut record = |ok: bool, what: String| {
        checked += 1;
        if !ok && bad.len() < MAX_COUNTEREXAMPLES {
            bad.push(what);
        }
    };
    let note;
    match cand {
        Candidate::Tp2(w) => {
            for i in 0..w.n {
                for a in 0..w.j {
                    for b in 0..w.j {
                        if a != b {
                            let ok = w.templates.psi_holds(&w.f, &w.param(i, a), &w.param(i, b));
                            record(ok, format!("ψ(a[{}][{}], a[{}][{}]) fails", i + 1, a + 1, i + 1, b + 1));
                        }
                    }
                }
            }
            note = "all pairs j ≠ k in every row; pairs with j = k are not applicable".to_string();
        }
        Candidate::Sop1(c) => {
            for (eta, _) in c.tree.iter().filter(|(k, _)| k.len() + 1 < c.depth) {
                let left = format!("{eta}1");
                let zero = format!("{eta}0");
                for (nu, a_nu) in c.tree.range(zero.clone()..).take_while(|(k, _)| k.starts_with(&zero)) {
                    let ok = c.templates.psi_holds(&c.f, &c.tree[&left], a_nu);
                    record(ok, format!("ψ(a_{left}, a_{nu}) fails"));
                }
            }
            note = "all η, ν with η⌢0 ⪯ ν inside the tree".to_string();
        }
    }
    let status = if bad.is_empty() { Status::Pass } else { Status::Fail };
    ConditionReport { status, checked, counterexamples: bad, note }
}

fn condition_ii(t: &Templates) -> ConditionReport {
    if t.is_builtin() {
        ConditionReport {
            status: Status::Pass,
            checked: 1,
            counterexamples: vec![],
            note: "ψ forces y₁ = y₂ and z₁ ≠ z₂, so φ(x; y₁z₁) ∧ φ(x; y₂z₂) asks E(y₁x) to take two values".into(),
        }
    } else {
        ConditionReport {
            status: Status::Unverified,
            checked: 0,
            counterexamples: vec![],
            note: "inconsistency is only machine-checked for the built-in templates".into(),
        }
    }
}

/// Checks the three conditions of a finite witness; consistency is checked on
/// the supplied branches only.
pub fn verify_finite_witness(cand: &Candidate, branches: &[Vec<usize>]) -> Result<VerifyReport, TreeError> {
    let templates = match cand {
        Candidate::Tp2(w) => &w.templates,
        Candidate::Sop1(c) => {
            c.validate()?;
            &c.templates
        }
    };
    templates.validate()?;
    let results: Vec<BranchResult> = branches.par_iter().map(|b| check_branch(cand, b)).collect();
    let bad: Vec<String> = results
        .iter()
        .filter(|r| !r.realized())
        .take(MAX_COUNTEREXAMPLES)
        .map(|r| format!("branch {:?}: {}", r.branch, r.error.as_deref().unwrap_or("not realized")))
        .collect();
    let condition_i = ConditionReport {
        status: if bad.is_empty() { Status::Pass } else { Status::Fail },
        checked: results.len(),
        counterexamples: bad,
        note: format!("consistency established on the {} supplied branches only", results.len()),
    };
    let realizing_extension = results.first().filter(|r| r.realized()).and_then(|r| {
        let (f, system) = branch_system(cand, &r.branch).ok()?;
        if system.atoms.is_empty() {
            return Some(f);
        }
        realize_system(&f, &system, SolveOptions::default()).ok().map(|x| x.outcome.presentation)
    });
    Ok(VerifyReport {
        condition_i,
        condition_ii: condition_ii(templates),
        condition_iii: condition_iii(cand),
        branches: results,
        realizing_extension,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ZMode {
    Rational,
    Transcendental(FieldElem),
}

/// `E(a) = 1` while `E(c·a) ≠ 1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ZWitness {
    pub c: FieldElem,
    pub a: FieldElem,
    pub ca: FieldElem,
    pub e_ca: FieldElem,
}

impl ZWitness {
    pub fn verify(&self, f: &EFieldPresentation) -> bool {
        self.ca == self.c.mul(&self.a)
            && e_eval(f, &self.a) == EEvalResult::Value(FieldElem::one())
            && !self.e_ca.is_one()
            && e_eval(f, &self.ca) == EEvalResult::Value(self.e_ca.clone())
    }
}

fn fresh_unknown(f: &EFieldPresentation, name: &str) -> Symbol {
    let mut s = name.to_string();
    while f.transcendentals.iter().any(|t| t.as_str() == s) {
        s.push('_');
    }
    Symbol::new(&s)
}

/// Extends `f` by a point witnessing that `c` does not stabilize the kernel of `E`.
pub fn z_stabilizer_witness(f: &EFieldPresentation, c: &FieldElem, mode: &ZMode) -> Result<(EFieldPresentation, ZWitness), TreeError> {
    match mode {
        ZMode::Rational => {
            let q = c.as_rational().ok_or_else(|| TreeError::InvalidInput(format!("{c} is not rational")))?;
            if q.is_integer() {
                return Err(TreeError::IntegerMultiplier(q.to_string()));
            }
            let m: u32 = q
                .denom()
                .try_into()
                .map_err(|_| TreeError::InvalidInput(format!("denominator of {q} is too large")))?;
            if f.cyclotomic_order % m != 0 {
                return Err(TreeError::CyclotomicOrderMismatch { order: f.cyclotomic_order, m });
            }
            let b = f.fresh_symbol("_b", 0);
            let zeta = FieldElem::from_cyc(CycElem::zeta_power(f.cyclotomic_order, (f.cyclotomic_order / m) as i64));
            let out = extend_graph(f, &[(FieldElem::var(b.clone()), zeta)])?;
            let a = FieldElem::var(b).scale_int(q.denom());
            let ca = c.mul(&a);
            let e_ca = e_eval(&out, &ca).value().ok_or_else(|| TreeError::InvalidInput("E(c·a) is undefined".into()))?;
            Ok((out, ZWitness { c: c.clone(), a, ca, e_ca }))
        }
        ZMode::Transcendental(d) => {
            let Some(t) = c.as_var().filter(|t| f.transcendentals.contains(t)) else {
                return Err(TreeError::NotTranscendental(c.to_string()));
            };
            if d.is_zero() || d.is_one() || !f.contains(d) {
                return Err(TreeError::InvalidInput(format!("d = {d} must be an element of the field other than 0 and 1")));
            }
            let d_term = Some(d)
                .filter(|d| d.denom().is_one())
                .and_then(|d| ETerm::from_poly(d.numer()))
                .ok_or_else(|| TreeError::UnsupportedShape(format!("d = {d} is not a polynomial over Q")))?;
            let x1 = fresh_unknown(f, "x1");
            let x2 = fresh_unknown(f, "x2");
            let (v1, v2) = (ETerm::Var(x1.clone()), ETerm::Var(x2.clone()));
            let system = ESystem {
                atoms: vec![
                    Atom::eq(ETerm::mul(ETerm::Var(t.clone()), v1.clone()), v2.clone()),
                    Atom::eq(ETerm::exp(v1), ETerm::int(1)),
                    Atom::eq(ETerm::exp(v2), d_term),
                ],
            };
            let r = realize_system(f, &system, SolveOptions::default())?;
            let a = r.env[&x1].clone();
            let ca = r.env[&x2].clone();
            Ok((r.outcome.presentation, ZWitness { c: c.clone(), a, ca, e_ca: d.clone() }))
        }
    }
}

/// Least `n` on which two assignments give `E(xⁿ)` different values.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Distinction {
    pub left: usize,
    pub right: usize,
    pub n: u32,
    pub left_value: FieldElem,
    pub right_value: FieldElem,
}

impl Distinction {
    pub fn verify(&self, fam: &TypeFamily) -> bool {
        let arg = FieldElem::var(fam.x.clone()).pow(self.n);
        let (Some(l), Some(r)) = (fam.presentations.get(self.left), fam.presentations.get(self.right)) else {
            return false;
        };
        self.left_value != self.right_value
            && e_eval(l, &arg) == EEvalResult::Value(self.left_value.clone())
            && e_eval(r, &arg) == EEvalResult::Value(self.right_value.clone())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TypeFamily {
    pub x: Symbol,
    pub presentations: Vec<EFieldPresentation>,
    pub certificates: Vec<Distinction>,
    /// Pairs that agree wherever both are defined.
    pub compatible: Vec<(usize, usize)>,
}

/// Adjoins a transcendental `x` with `E(xⁿ) = v_n` for each assignment.
pub fn type_family(f: &EFieldPresentation, assignments: &[BTreeMap<u32, FieldElem>]) -> Result<TypeFamily, TreeError> {
    let x = if f.transcendentals.iter().any(|t| t.as_str() == "x") { f.fresh_symbol("x", 0) } else { Symbol::new("x") };
    let mut presentations = Vec::with_capacity(assignments.len());
    for (k, asg) in assignments.iter().enumerate() {
        let mut pairs = Vec::new();
        for (&n, v) in asg {
            if n == 0 {
                return Err(TreeError::InvalidInput(format!("assignment {k} uses the exponent 0")));
            }
            if v.is_zero() {
                return Err(TreeError::ZeroValue { assignment: k, n });
            }
            if !f.contains(v) {
                return Err(TreeError::InvalidInput(format!("value {v} is not in the base field")));
            }
            pairs.push((FieldElem::var(x.clone()).pow(n), v.clone()));
        }
        let mut p = EFieldPresentation::new(&format!("type_{k}"), f.cyclotomic_order, f.transcendentals.clone());
        p.egraph = f.egraph.clone();
        p.transcendentals.push(x.clone());
        presentations.push(extend_graph(&p, &pairs)?);
    }
    let mut certificates = Vec::new();
    let mut compatible = Vec::new();
    for l in 0..assignments.len() {
        for r in l + 1..assignments.len() {
            let hit = assignments[l]
                .iter()
                .find(|(n, v)| assignments[r].get(n).is_some_and(|w| w != *v));
            match hit {
                Some((&n, v)) => certificates.push(Distinction {
                    left: l,
                    right: r,
                    n,
                    left_value: v.clone(),
                    right_value: assignments[r][&n].clone(),
                }),
                None => compatible.push((l, r)),
            }
        }
    }
    Ok(TypeFamily { x, presentations, certificates, compatible })
}

/// Rationals `n/m` in lowest terms with `m ≥ 2`, as used for the stabilizer sweep.
pub fn proper_fractions(max_n: i64, max_m: i64) -> Vec<Rat> {
    let mut out = Vec::new();
    for m in 2..=max_m {
        for n in 1..=max_n {
            if n.gcd(&m).is_one() {
                out.push(Rat::new(n.into(), m.into()));
            }
        }
    }
    out.retain(|q| !q.is_negative());
    out
}
