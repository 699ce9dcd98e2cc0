//! Checkers and compilers for the knowledge-compilation normal forms:
//! modulo-tameness, PSyNF (semantic) and PSySyNF (syntactic).
//!
//! A formula is `y`-modulo-tame when, inside each maximal conjunctive
//! subformula (bare leaves under `∨` count as singleton conjunctions), all
//! modulo atoms mentioning `y` have the exact shape `y ≡ r (mod M)` for a
//! single shared `M`. PSyNF additionally requires, for every proper prefix
//! of the output ordering, that locally quantifying the suffix (replacing
//! its atoms by ⊤) is no weaker than really quantifying it. PSySyNF is the
//! syntactic form that embeds explicit affine Skolem candidates and a joint
//! residue constraint into every maximal conjunct.

use crate::error::{Error, Result};
use crate::exactnum::{lcm_all, math_mod, rat_int, Int, Rat};
use crate::formula::{
    disjunctive_units, maximal_conjunctive_subformulas, to_dnf, Atom, Formula, LinExpr, ModAtom,
    SpecFormula, Var,
};
use crate::oracle::IntBox;
use crate::qelim::{canonicalize_atom, eliminate_block, eliminate_one, local_exists};
use crate::synth::general::{generate_affine_candidates, AffineCandidate, RatExpr};
use crate::Budgets;
use num_integer::Integer;
use num_traits::{One, Zero};
use std::collections::{BTreeMap, BTreeSet};

// ---------------------------------------------------------------------------
// Modulo-tameness
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum UnitTameness {
    /// All `y`-modulo atoms in the unit share this modulus; `residues`
    /// lists the distinct residues that appear (empty when there are none,
    /// in which case the modulus is 1).
    Tame { modulus: Int, residues: Vec<Int> },
    /// The first offending atom and why it breaks tameness.
    Offending { atom: Atom, reason: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModuloTameReport {
    pub var: Var,
    pub units: Vec<UnitTameness>,
}

impl ModuloTameReport {
    pub fn is_tame(&self) -> bool {
        self.units.iter().all(|u| matches!(u, UnitTameness::Tame { .. }))
    }

    pub fn first_offender(&self) -> Option<&Atom> {
        self.units.iter().find_map(|u| match u {
            UnitTameness::Offending { atom, .. } => Some(atom),
            _ => None,
        })
    }
}

/// Check `y`-modulo-tameness per disjunctive unit.
pub fn check_modulo_tame(f: &Formula, y: Var) -> ModuloTameReport {
    let mut units = vec![];
    for unit in disjunctive_units(f) {
        let mut modulus: Option<Int> = None;
        let mut residues: Vec<Int> = vec![];
        let mut offender: Option<(Atom, String)> = None;
        unit.visit_atoms(&mut |a| {
            if offender.is_some() {
                return;
            }
            if let Atom::Mod(m) = a {
                if !m.expr.mentions(y) {
                    return;
                }
                if m.differs {
                    offender = Some((a.clone(), "negated modulo constraint on the output".into()));
                    return;
                }
                if m.expr.coeffs.len() != 1 || !m.expr.coeff(y).is_one() {
                    offender =
                        Some((a.clone(), "modulo constraint is not of the form y ≡ r".into()));
                    return;
                }
                match &modulus {
                    None => modulus = Some(m.modulus.clone()),
                    Some(prev) if *prev != m.modulus => {
                        offender = Some((
                            a.clone(),
                            format!("mixed moduli {prev} and {} in one conjunct", m.modulus),
                        ));
                        return;
                    }
                    _ => {}
                }
                if !residues.contains(&m.residue) {
                    residues.push(m.residue.clone());
                }
            }
        });
        units.push(match offender {
            Some((atom, reason)) => UnitTameness::Offending { atom, reason },
            None => {
                UnitTameness::Tame { modulus: modulus.unwrap_or_else(Int::one), residues }
            }
        });
    }
    ModuloTameReport { var: y, units }
}

/// Rewrite one modulo atom `a·y + t ⋈ b (mod M)` against a target modulus
/// `M^ψ` (a multiple of `M`):
/// `⋁_{r ∈ [0,M^ψ)} (y ≡ r (mod M^ψ)) ∧ (μ·t ⋈ μ(b − a·r) (mod M^ψ))`
/// with `μ = M^ψ/M`.
fn rewrite_mod_atom(m: &ModAtom, y: Var, big: &Int) -> Formula {
    let a = m.expr.coeff(y);
    let mut t = m.expr.clone();
    t.coeffs.remove(&y);
    let mu = big / &m.modulus;
    let mut branches = vec![];
    let mut r = Int::zero();
    while r < *big {
        let class =
            ModAtom::new(LinExpr::var(y), r.clone(), big.clone(), false).expect("modulus >= 1");
        let res = math_mod(&(&mu * (&m.residue - &a * &r)), big);
        let rest =
            ModAtom::new(t.scale(&mu), res, big.clone(), m.differs).expect("modulus >= 1");
        branches.push(Formula::And(vec![
            Formula::Leaf(Atom::Mod(class)),
            Formula::Leaf(Atom::Mod(rest)),
        ]));
        r += 1;
    }
    Formula::or(branches)
}

/// Construct an equivalent `y`-modulo-tame formula: inside each unit, every
/// modulo atom mentioning `y` is replaced by its residue disjunction with
/// respect to the unit's lcm modulus. Already-tame input is returned
/// unchanged.
pub fn make_modulo_tame(f: &Formula, y: Var, budgets: &Budgets) -> Result<Formula> {
    fn rewrite_unit(unit: &Formula, y: Var, budgets: &Budgets) -> Result<Formula> {
        let mut moduli: Vec<Int> = vec![];
        let mut needs_work = false;
        unit.visit_atoms(&mut |a| {
            if let Atom::Mod(m) = a {
                if m.expr.mentions(y) {
                    moduli.push(m.modulus.clone());
                    if m.differs || m.expr.coeffs.len() != 1 || !m.expr.coeff(y).is_one() {
                        needs_work = true;
                    }
                }
            }
        });
        let distinct: BTreeSet<&Int> = moduli.iter().collect();
        if distinct.len() > 1 {
            needs_work = true;
        }
        if !needs_work {
            return Ok(unit.clone());
        }
        let big = lcm_all(moduli.iter());
        if big > Int::from(budgets.tame_lcm) {
            return Err(Error::resource("modulo-tame lcm", budgets.tame_lcm));
        }
        Ok(unit.map_atoms(&mut |a| match a {
            Atom::Mod(m) if m.expr.mentions(y) => {
                let tame_already = !m.differs
                    && m.expr.coeffs.len() == 1
                    && m.expr.coeff(y).is_one()
                    && m.modulus == big;
                if tame_already {
                    Formula::Leaf(a.clone())
                } else {
                    rewrite_mod_atom(m, y, &big)
                }
            }
            other => Formula::Leaf(other.clone()),
        }))
    }
    fn rebuild(f: &Formula, y: Var, budgets: &Budgets) -> Result<Formula> {
        match f {
            Formula::Or(cs) => {
                let children: Result<Vec<Formula>> =
                    cs.iter().map(|c| rebuild(c, y, budgets)).collect();
                Ok(Formula::Or(children?))
            }
            unit => rewrite_unit(unit, y, budgets),
        }
    }
    let out = rebuild(f, y, budgets)?;
    debug_assert!(check_modulo_tame(&out, y).is_tame());
    Ok(out)
}

/// Tameness closure over all outputs against a per-unit product modulus;
/// used by the PSyNF compiler. Atoms mentioning several outputs are
/// rewritten one output at a time until every output-mentioning modulo
/// atom has the tame shape with the unit's shared modulus.
fn make_all_outputs_tame(f: &Formula, outputs: &[Var], budgets: &Budgets) -> Result<Formula> {
    fn unit_modulus(unit: &Formula, outputs: &[Var]) -> Int {
        let mut distinct: BTreeSet<Int> = BTreeSet::new();
        unit.visit_atoms(&mut |a| {
            if let Atom::Mod(m) = a {
                if m.expr.coeffs.keys().any(|v| outputs.contains(v)) {
                    distinct.insert(m.modulus.clone());
                }
            }
        });
        let p: Int = distinct.into_iter().product();
        p.max(Int::one())
    }
    fn tame_shape(m: &ModAtom, outputs: &[Var], big: &Int) -> bool {
        let mentioned: Vec<Var> =
            m.expr.coeffs.keys().copied().filter(|v| outputs.contains(v)).collect();
        if mentioned.is_empty() {
            return true;
        }
        mentioned.len() == 1
            && m.expr.coeffs.len() == 1
            && m.expr.coeff(mentioned[0]).is_one()
            && !m.differs
            && m.modulus == *big
    }
    fn rewrite_unit(unit: &Formula, outputs: &[Var], budgets: &Budgets) -> Result<Formula> {
        let big = unit_modulus(unit, outputs);
        if big > Int::from(budgets.tame_lcm) {
            return Err(Error::resource("modulo-tame lcm", budgets.tame_lcm));
        }
        let mut cur = unit.clone();
        loop {
            let mut changed = false;
            cur = cur.map_atoms(&mut |a| match a {
                Atom::Mod(m) if !tame_shape(m, outputs, &big) => {
                    let y = *m
                        .expr
                        .coeffs
                        .keys()
                        .find(|v| outputs.contains(v))
                        .expect("non-tame atom mentions an output");
                    changed = true;
                    rewrite_mod_atom(m, y, &big)
                }
                other => Formula::Leaf(other.clone()),
            });
            if cur.node_count() > budgets.qe_nodes {
                return Err(Error::resource("formula nodes", budgets.qe_nodes as u64));
            }
            if !changed {
                return Ok(cur);
            }
        }
    }
    match f {
        Formula::Or(cs) => {
            let children: Result<Vec<Formula>> =
                cs.iter().map(|c| make_all_outputs_tame(c, outputs, budgets)).collect();
            Ok(Formula::Or(children?))
        }
        unit => rewrite_unit(unit, outputs, budgets),
    }
}

// ---------------------------------------------------------------------------
// PSyNF
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct PsynfReport {
    /// Per-output tameness results, in output order.
    pub tame: Vec<(Var, bool)>,
    /// Results of the suffix conditions for prefix lengths `i ∈ [1, m−1]`.
    pub conditions: Vec<(usize, bool)>,
    /// The additional `i = 0` (pure-input prefix) condition; reported
    /// separately and not part of the verdict.
    pub prefix_condition: Option<bool>,
    pub verdict: bool,
    /// Prefix length and point witnessing the first failed condition.
    pub counterexample: Option<(usize, Vec<Int>)>,
}

impl PsynfReport {
    pub fn summary(&self) -> String {
        let mut parts = vec![];
        for (v, ok) in &self.tame {
            if !ok {
                parts.push(format!("output #{v} not modulo-tame"));
            }
        }
        for (i, ok) in &self.conditions {
            if !ok {
                parts.push(format!("suffix condition fails at prefix length {i}"));
            }
        }
        if parts.is_empty() {
            "in PSyNF".into()
        } else {
            parts.join("; ")
        }
    }
}

/// Check PSyNF with respect to the declared output ordering: per-output
/// modulo-tameness plus, for `i = m−1` down to `1`, the decision of
/// `∀x̄ y₁..yᵢ: (∃^local y_{i+1..m}: φ) → ∃y_{i+1}: ∃^local y_{i+2..m}: φ`
/// by exact quantifier elimination. On failure a counterexample point is
/// extracted by bounded search when one exists in the search box.
pub fn check_psynf(spec: &SpecFormula, budgets: &Budgets) -> Result<PsynfReport> {
    let outputs: Vec<Var> = spec.vars.outputs().collect();
    let m = outputs.len();
    let tame: Vec<(Var, bool)> =
        outputs.iter().map(|y| (*y, check_modulo_tame(&spec.body, *y).is_tame())).collect();

    let check_condition = |i: usize| -> Result<(bool, Option<Vec<Int>>)> {
        let lhs = local_exists(&spec.body, &outputs[i..]);
        let inner = local_exists(&spec.body, &outputs[i + 1..]);
        let rhs = eliminate_one(&inner, outputs[i], budgets)?;
        let bad = Formula::and(vec![lhs.clone(), rhs.negate()]).simplify();
        let prefix_vars: Vec<Var> = (0..spec.vars.num_inputs() + i).collect();
        let ground = eliminate_block(&bad, &prefix_vars, budgets)?;
        if !ground.vars().is_empty() {
            return Err(Error::Invalid("elimination left free variables".into()));
        }
        let holds = !ground.eval(&vec![Int::zero(); spec.vars.len()]);
        if holds {
            return Ok((true, None));
        }
        let bad2 = Formula::and(vec![lhs, rhs.negate()]);
        let fixed = vec![Int::zero(); spec.vars.len()];
        let witness = if prefix_vars.is_empty() {
            if bad2.eval(&fixed) {
                Some(vec![])
            } else {
                None
            }
        } else {
            let bx = IntBox::uniform(prefix_vars.len(), -10, 10);
            crate::oracle::bounded_exists(&bad2, &fixed, &prefix_vars, &bx, budgets.oracle_points)?
        };
        Ok((false, witness))
    };

    let mut conditions = vec![];
    let mut counterexample = None;
    for i in (1..m).rev() {
        let (ok, cex) = check_condition(i)?;
        conditions.push((i, ok));
        if !ok && counterexample.is_none() {
            counterexample = cex.map(|p| (i, p));
        }
    }
    conditions.reverse();
    let prefix_condition = if m >= 1 { Some(check_condition(0)?.0) } else { None };
    let verdict = tame.iter().all(|(_, ok)| *ok) && conditions.iter().all(|(_, ok)| *ok);
    Ok(PsynfReport { tame, conditions, prefix_condition, verdict, counterexample })
}

/// Compile an arbitrary specification into an equivalent PSyNF one:
/// conjoin quantifier-free equivalents of every suffix projection, then
/// run the tameness closure with the per-unit product modulus.
pub fn compile_psynf(spec: &SpecFormula, budgets: &Budgets) -> Result<SpecFormula> {
    let outputs: Vec<Var> = spec.vars.outputs().collect();
    let m = outputs.len();
    let mut conj = vec![spec.body.clone()];
    for i in 1..m {
        conj.push(eliminate_block(&spec.body, &outputs[i..], budgets)?);
    }
    let eta = Formula::and(conj);
    let tame = make_all_outputs_tame(&eta, &outputs, budgets)?.simplify();
    Ok(SpecFormula { vars: spec.vars.clone(), body: tame })
}

/// The polynomial one-output compiler for classes with fast projection:
/// `φ* = ⋁ᵢ (φᵢ ∧ φ̃)` where `φ̃` is the projection `∃y: φ` computed by
/// `project` and `φᵢ` ranges over the disjunctive units.
pub fn compile_psynf_one_output_optimal(
    spec: &SpecFormula,
    project: &dyn Fn(&Formula, Var) -> Result<Formula>,
) -> Result<SpecFormula> {
    if spec.vars.num_outputs() != 1 {
        return Err(Error::Precondition("one-output compiler needs one output".into()));
    }
    let y = spec.vars.outputs().next().unwrap();
    if !check_modulo_tame(&spec.body, y).is_tame() {
        return Err(Error::Precondition("input must be modulo-tame".into()));
    }
    let tilde = project(&spec.body, y)?;
    let units = disjunctive_units(&spec.body);
    let body = Formula::or(
        units.into_iter().map(|u| Formula::and(vec![u.clone(), tilde.clone()])).collect(),
    );
    Ok(SpecFormula { vars: spec.vars.clone(), body })
}

// ---------------------------------------------------------------------------
// PSySyNF
// ---------------------------------------------------------------------------

/// Rational affine map: one expression per target component, over the
/// source variables.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AffineMapQ {
    pub rows: Vec<RatExpr>,
}

impl AffineMapQ {
    /// Evaluate at an integer point; `None` when a component comes out
    /// non-integral.
    fn eval_integral(&self, point: &[Int]) -> Option<Vec<Int>> {
        let mut out = vec![];
        for r in &self.rows {
            let v: Rat = r.eval(point);
            if !v.denom().is_one() {
                return None;
            }
            out.push(v.to_integer());
        }
        Some(out)
    }
}

/// Certificate for one maximal conjunctive subformula.
#[derive(Debug, Clone)]
pub struct BlockCert {
    pub modulus: Int,
    /// Residue per variable (declaration order, all `n + m` variables).
    pub residues: Vec<Int>,
    /// `maps[i]` is `A_i : (x̄, y_1..y_i) → (y_{i+1}, …, y_m)`.
    pub maps: Vec<AffineMapQ>,
}

#[derive(Debug, Clone)]
pub struct PsysynfCert {
    pub blocks: Vec<BlockCert>,
}

#[derive(Debug, Clone)]
pub enum PsysynfOutcome {
    Accepted(PsysynfCert),
    Rejected(String),
}

impl PsysynfOutcome {
    pub fn is_accepted(&self) -> bool {
        matches!(self, PsysynfOutcome::Accepted(_))
    }
}

/// Substitute the map `A_i` into an atom: outputs `y_{i+1..m}` are replaced
/// by the map's rows, denominators are cleared (inequalities scale by the
/// positive lcm; modulo atoms scale modulus and residue).
fn substitute_atom(a: &Atom, outputs_i: &[Var], map: &AffineMapQ) -> Atom {
    let subst_expr = |e: &LinExpr| -> RatExpr {
        let mut out = RatExpr::from_lin(e);
        for (idx, v) in outputs_i.iter().enumerate() {
            out = out.subst(*v, &map.rows[idx]);
        }
        out
    };
    match a {
        Atom::Ge(e) => {
            let (cleared, _q) = subst_expr(e).clear_denominators();
            Atom::Ge(cleared)
        }
        Atom::Mod(m) => {
            let (cleared, q) = subst_expr(&m.expr).clear_denominators();
            Atom::Mod(
                ModAtom::new(cleared, &m.residue * &q, &m.modulus * &q, m.differs)
                    .expect("modulus >= 1"),
            )
        }
    }
}

fn flatten_and(f: &Formula) -> Vec<&Formula> {
    let mut out = vec![];
    fn walk<'a>(f: &'a Formula, out: &mut Vec<&'a Formula>) {
        match f {
            Formula::And(cs) => cs.iter().for_each(|c| walk(c, out)),
            other => out.push(other),
        }
    }
    walk(f, &mut out);
    out
}

/// Read off an equality group `ȳ^i = A_i(x̄^i)` rendered as conjoined
/// inequality pairs `M·y_w − p ≥ 0 ∧ −(M·y_w − p) ≥ 0`. Returns the prefix
/// length `i` and the map.
fn parse_eq_group(
    f: &Formula,
    n: usize,
    m: usize,
    modulus: &Int,
) -> std::result::Result<(usize, AffineMapQ), String> {
    let leaves = flatten_and(f);
    let mut exprs: Vec<&LinExpr> = vec![];
    for l in &leaves {
        match l {
            Formula::Leaf(Atom::Ge(e)) => exprs.push(e),
            _ => return Err("equality group contains a non-inequality".into()),
        }
    }
    if exprs.len() % 2 != 0 {
        return Err("equality group has an odd number of inequalities".into());
    }
    let mut rows: BTreeMap<Var, RatExpr> = BTreeMap::new();
    let mut used = vec![false; exprs.len()];
    for a in 0..exprs.len() {
        if used[a] {
            continue;
        }
        let neg = exprs[a].neg();
        let Some(bpos) = (a + 1..exprs.len()).find(|&b| !used[b] && *exprs[b] == neg) else {
            return Err("unpaired inequality in equality group".into());
        };
        used[a] = true;
        used[bpos] = true;
        // the equality's output carries coefficient ±M
        let mut found: Option<(Var, bool)> = None;
        for (v, c) in &exprs[a].coeffs {
            if *v >= n && (c == modulus || *c == -modulus.clone()) {
                found = Some((*v, c == modulus));
                break;
            }
        }
        let Some((w, positive)) = found else {
            return Err("no output with coefficient ±M in equality".into());
        };
        // M·y_w − p = 0 ⇒ y_w = p/M
        let mut p = if positive { exprs[a].neg() } else { exprs[a].clone() };
        p.coeffs.remove(&w);
        let row = RatExpr::from_lin(&p).scale(&(Rat::one() / rat_int(modulus.clone())));
        if rows.insert(w, row).is_some() {
            return Err("duplicate equality for one output".into());
        }
    }
    let covered: Vec<Var> = rows.keys().copied().collect();
    let lo = *covered.first().ok_or("empty equality group")?;
    let i = lo - n;
    let expect: Vec<Var> = (lo..n + m).collect();
    if covered != expect {
        return Err(format!("equality group covers outputs {covered:?}, expected a full suffix"));
    }
    for (w, row) in &rows {
        if row.coeffs.keys().any(|v| *v >= n + i) {
            return Err(format!("equality for output #{w} mentions non-prefix variables"));
        }
    }
    Ok((i, AffineMapQ { rows: rows.into_values().collect() }))
}

/// Structural PSySyNF checker. Accepts the canonical rendering produced by
/// [`compile_psysynf`]: each maximal conjunctive subformula must be a
/// single building block
/// `⋀_k [(ψ_k ∨ ⋁ᵢ ȳ^i = A_i(x̄^i)) ∧ ψ_k ∧ ⋀ᵢ ψ_k(x̄^i, A_i(x̄^i))]`
/// conjoined with one residue atom per variable, with shared maps across
/// the `k`'s, denominators dividing `M`, and `A_i(r̄^i)` integral.
pub fn check_psysynf(spec: &SpecFormula) -> PsysynfOutcome {
    let n = spec.vars.num_inputs();
    let m = spec.vars.num_outputs();
    for y in spec.vars.outputs() {
        if !check_modulo_tame(&spec.body, y).is_tame() {
            return PsysynfOutcome::Rejected(format!(
                "not modulo-tame for output {}",
                spec.vars.name(y)
            ));
        }
    }
    let mut blocks = vec![];
    for conj in maximal_conjunctive_subformulas(&spec.body) {
        match parse_block(conj, n, m) {
            Ok(cert) => blocks.push(cert),
            Err(reason) => return PsysynfOutcome::Rejected(reason),
        }
    }
    PsysynfOutcome::Accepted(PsysynfCert { blocks })
}

fn parse_block(conj: &Formula, n: usize, m: usize) -> std::result::Result<BlockCert, String> {
    let children = flatten_and(conj);
    // 1. residue atoms: one unit-coefficient ≡-atom per variable, one
    //    shared modulus
    let mut residue_atoms: BTreeMap<Var, (Int, Int)> = BTreeMap::new();
    let mut others: Vec<&Formula> = vec![];
    let mut or_children: Vec<&Formula> = vec![];
    for c in &children {
        match c {
            Formula::Leaf(Atom::Mod(ma)) if !ma.differs && ma.expr.coeffs.len() == 1 => {
                let (v, coeff) = ma.expr.coeffs.iter().next().unwrap();
                if coeff.is_one() && !residue_atoms.contains_key(v) {
                    residue_atoms.insert(*v, (ma.residue.clone(), ma.modulus.clone()));
                    continue;
                }
                others.push(c);
            }
            Formula::Or(_) => or_children.push(c),
            other => others.push(other),
        }
    }
    if residue_atoms.len() != n + m {
        return Err(format!(
            "joint residue constraint incomplete: {} of {} variables pinned",
            residue_atoms.len(),
            n + m
        ));
    }
    let moduli: BTreeSet<&Int> = residue_atoms.values().map(|(_, m)| m).collect();
    if moduli.len() != 1 {
        return Err("residue atoms use mixed moduli".into());
    }
    let modulus = (*moduli.iter().next().unwrap()).clone();
    let residues: Vec<Int> = (0..n + m).map(|v| residue_atoms[&v].0.clone()).collect();

    // 2. each Or-child is (ψ_k ∨ equality groups); read ψ's and maps
    if or_children.is_empty() {
        return Err("no building-block disjunction found".into());
    }
    let mut maps: Option<Vec<AffineMapQ>> = None;
    let mut psis: Vec<Atom> = vec![];
    for oc in &or_children {
        let Formula::Or(items) = oc else { unreachable!() };
        let mut psi: Option<Atom> = None;
        let mut these: Vec<Option<AffineMapQ>> = vec![None; m];
        for item in items {
            match item {
                Formula::Leaf(a) => {
                    if psi.replace(a.clone()).is_some() {
                        return Err("building block has two bare atoms in its disjunction".into());
                    }
                }
                Formula::And(_) => {
                    let (i, map) = parse_eq_group(item, n, m, &modulus)?;
                    if these[i].replace(map).is_some() {
                        return Err(format!("two equality groups for prefix length {i}"));
                    }
                }
                Formula::Or(_) => return Err("nested disjunction in building block".into()),
            }
        }
        let psi = psi.ok_or("building block misses its atom")?;
        let these: Vec<AffineMapQ> = (0..m)
            .map(|i| these[i].clone().ok_or(format!("missing equality group for prefix {i}")))
            .collect::<std::result::Result<_, String>>()?;
        match &maps {
            None => maps = Some(these),
            Some(prev) if *prev != these => {
                return Err("building blocks disagree on the affine maps".into())
            }
            _ => {}
        }
        psis.push(psi);
    }
    let maps = maps.unwrap();

    // 3. side conditions
    for (i, map) in maps.iter().enumerate() {
        for row in &map.rows {
            let (_, q) = row.clear_denominators();
            if !math_mod(&modulus, &q).is_zero() {
                return Err(format!("denominator {q} of A_{i} does not divide {modulus}"));
            }
        }
        if map.eval_integral(&residues).is_none() {
            return Err(format!("A_{i} is not integral at the block residues"));
        }
    }

    // 4. remaining conjuncts are exactly the bare atoms plus the predicted
    //    substituted atoms
    let mut expected: BTreeSet<Formula> = BTreeSet::new();
    for psi in &psis {
        expected.insert(Formula::Leaf(psi.clone()));
        for (i, map) in maps.iter().enumerate() {
            let outs_i: Vec<Var> = (n + i..n + m).collect();
            let sub = substitute_atom(psi, &outs_i, map);
            if sub == *psi {
                continue;
            }
            match canonicalize_atom(&sub) {
                Formula::Leaf(a) if a.const_value() == Some(true) => continue,
                _ => {}
            }
            expected.insert(Formula::Leaf(sub));
        }
    }
    let mut present: BTreeSet<Formula> = BTreeSet::new();
    for o in others {
        present.insert(o.clone());
    }
    if present != expected {
        let missing = expected.difference(&present).count();
        let extra = present.difference(&expected).count();
        return Err(format!(
            "substituted-atom set mismatch: {missing} missing, {extra} unexpected"
        ));
    }
    Ok(BlockCert { modulus, residues, maps })
}

/// Compile into PSySyNF by the affine-candidate construction: per DNF
/// conjunct, candidate maps for every prefix length, a product assignment
/// per conjunct, and one building block per surviving residue vector.
pub fn compile_psysynf(spec: &SpecFormula, budgets: &Budgets) -> Result<SpecFormula> {
    let n = spec.vars.num_inputs();
    let m = spec.vars.num_outputs();
    let outputs: Vec<Var> = spec.vars.outputs().collect();
    let dnf = to_dnf(&spec.body, budgets)?;
    let mut blocks: Vec<Formula> = vec![];

    for conj in &dnf {
        // candidate maps per prefix length
        let mut cands_per_i: Vec<Vec<AffineCandidate>> = vec![];
        let mut feasible = true;
        for i in 0..m {
            let outs_i: Vec<Var> = outputs[i..].to_vec();
            let mut rows = vec![];
            let mut congruences = vec![];
            for a in conj {
                match a {
                    Atom::Ge(e) => {
                        let mut out = BTreeMap::new();
                        let mut rhs = e.clone();
                        for v in &outs_i {
                            if let Some(c) = e.coeffs.get(v) {
                                out.insert(*v, -c.clone());
                                rhs.coeffs.remove(v);
                            }
                        }
                        rows.push((out, rhs));
                    }
                    Atom::Mod(ma) => {
                        if ma.differs {
                            continue;
                        }
                        let mentioned: Vec<Var> = ma
                            .expr
                            .coeffs
                            .keys()
                            .copied()
                            .filter(|v| outs_i.contains(v))
                            .collect();
                        if mentioned.len() == 1 && ma.expr.coeffs.len() == 1 {
                            if let Some((r, l)) = crate::exactnum::solve_congruence(
                                &ma.expr.coeff(mentioned[0]),
                                &ma.residue,
                                &ma.modulus,
                            ) {
                                congruences.push((mentioned[0], r, l));
                            }
                        }
                    }
                }
            }
            let gen = generate_affine_candidates(
                &rows,
                &outs_i,
                &congruences,
                budgets.offset_radius,
                budgets.candidates_per_disjunct,
            )?;
            if gen.candidates.is_empty() {
                feasible = false;
                break;
            }
            cands_per_i.push(gen.candidates);
        }
        if m > 0 && !feasible {
            continue;
        }

        // product assignment over the per-i candidate lists
        let mut pick = vec![0usize; m];
        'assignments: loop {
            let maps: Vec<AffineMapQ> = (0..m)
                .map(|i| AffineMapQ { rows: cands_per_i[i][pick[i]].rows.clone() })
                .collect();
            emit_blocks_for(conj, &maps, n, m, budgets, &mut blocks)?;
            if blocks.len() > budgets.psysynf_blocks {
                return Err(Error::resource("psysynf blocks", budgets.psysynf_blocks as u64));
            }
            if m == 0 {
                break;
            }
            let mut i = 0;
            loop {
                if i == m {
                    break 'assignments;
                }
                pick[i] += 1;
                if pick[i] < cands_per_i[i].len() {
                    break;
                }
                pick[i] = 0;
                i += 1;
            }
        }
    }
    let body = Formula::or(blocks);
    Ok(SpecFormula { vars: spec.vars.clone(), body })
}

fn emit_blocks_for(
    conj: &[Atom],
    maps: &[AffineMapQ],
    n: usize,
    m: usize,
    budgets: &Budgets,
    blocks: &mut Vec<Formula>,
) -> Result<()> {
    // M_f: all conjunct moduli times all map denominators, so that every
    // substituted modulo atom is residue-determined
    let mut mod_lcm = Int::one();
    for a in conj {
        if let Atom::Mod(ma) = a {
            mod_lcm = mod_lcm.lcm(&ma.modulus);
        }
    }
    let mut den_lcm = Int::one();
    for map in maps {
        for row in &map.rows {
            let (_, q) = row.clear_denominators();
            den_lcm = den_lcm.lcm(&q);
        }
    }
    let big = &mod_lcm * &den_lcm;
    if big > Int::from(budgets.tame_lcm) {
        return Err(Error::resource("psysynf modulus", budgets.tame_lcm));
    }
    let big_i64: i64 = (&big)
        .try_into()
        .map_err(|_| Error::resource("psysynf modulus", budgets.tame_lcm))?;
    let combos = (big_i64 as u128).checked_pow((n + m) as u32);
    if combos.is_none() || combos.unwrap() > (budgets.psysynf_blocks as u128) * 64 {
        return Err(Error::resource("psysynf residue vectors", budgets.psysynf_blocks as u64));
    }

    let mut residues = vec![0i64; n + m];
    'vectors: loop {
        let point: Vec<Int> = residues.iter().map(|&r| Int::from(r)).collect();
        if let Some(block) = build_block(conj, maps, n, m, &big, &point) {
            blocks.push(block);
            if blocks.len() > budgets.psysynf_blocks {
                return Err(Error::resource("psysynf blocks", budgets.psysynf_blocks as u64));
            }
        }
        let mut i = 0;
        loop {
            if i == n + m {
                break 'vectors;
            }
            residues[i] += 1;
            if residues[i] < big_i64 {
                break;
            }
            residues[i] = 0;
            i += 1;
        }
    }
    Ok(())
}

fn build_block(
    conj: &[Atom],
    maps: &[AffineMapQ],
    n: usize,
    m: usize,
    big: &Int,
    residues: &[Int],
) -> Option<Formula> {
    // conjunct modulo atoms must hold at the residue vector (their moduli
    // divide the block modulus, so they are residue-determined)
    for a in conj {
        if let Atom::Mod(ma) = a {
            if !ma.holds(residues) {
                return None;
            }
        }
    }
    for map in maps {
        map.eval_integral(residues)?;
    }
    let mut children: Vec<Formula> = vec![];
    // equality groups, shared by all atoms of the block
    let mut groups: Vec<Formula> = vec![];
    for (i, map) in maps.iter().enumerate() {
        let mut pairs = vec![];
        for (idx, w) in (n + i..n + m).enumerate() {
            let scaled = map.rows[idx].scale(&rat_int(big.clone()));
            let (p, q) = scaled.clear_denominators();
            debug_assert!(q.is_one(), "denominators divide the block modulus");
            let mut e = LinExpr::var(w).scale(big);
            for (v, c) in &p.coeffs {
                e.add_term(*v, -c.clone());
            }
            e.constant -= &p.constant;
            pairs.push(Formula::Leaf(Atom::Ge(e.clone())));
            pairs.push(Formula::Leaf(Atom::Ge(e.neg())));
        }
        groups.push(Formula::And(pairs));
    }
    for a in conj {
        match a {
            Atom::Ge(_) => {
                let mut items: Vec<Formula> = vec![Formula::Leaf(a.clone())];
                items.extend(groups.iter().cloned());
                children.push(Formula::Or(items));
                children.push(Formula::Leaf(a.clone()));
                for (i, map) in maps.iter().enumerate() {
                    let outs_i: Vec<Var> = (n + i..n + m).collect();
                    let sub = substitute_atom(a, &outs_i, map);
                    if sub == *a {
                        continue;
                    }
                    match canonicalize_atom(&sub) {
                        Formula::Leaf(f) if f.const_value() == Some(true) => continue,
                        Formula::Leaf(f) if f.const_value() == Some(false) => return None,
                        _ => children.push(Formula::Leaf(sub)),
                    }
                }
            }
            Atom::Mod(_) => {
                // implied by the joint residue constraint (checked above)
            }
        }
    }
    for v in 0..n + m {
        children.push(Formula::Leaf(Atom::Mod(
            ModAtom::new(LinExpr::var(v), residues[v].clone(), big.clone(), false)
                .expect("modulus >= 1"),
        )));
    }
    Some(Formula::And(children))
}

/// First point (scanning a uniform box in declaration order) where two
/// formulas over the same variables disagree; the incompleteness diagnostic
/// for the compilers.
pub fn equivalence_gap_on_box(
    f1: &Formula,
    f2: &Formula,
    nvars: usize,
    lo: i64,
    hi: i64,
) -> Option<Vec<Int>> {
    if nvars == 0 {
        return if f1.eval(&[]) == f2.eval(&[]) { None } else { Some(vec![]) };
    }
    let mut point = vec![Int::from(lo); nvars];
    loop {
        if f1.eval(&point) != f2.eval(&point) {
            return Some(point);
        }
        let mut i = 0;
        loop {
            if i == nvars {
                return None;
            }
            point[i] += 1;
            if point[i] <= Int::from(hi) {
                break;
            }
            point[i] = Int::from(lo);
            i += 1;
        }
    }
}
