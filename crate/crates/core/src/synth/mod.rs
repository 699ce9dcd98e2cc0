//! Skolem-circuit synthesis.
//!
//! Three entry points:
//!
//! * [`synth_one_output`] — the polynomial pipeline for a `y`-modulo-tame
//!   single-output specification: split each maximal conjunct by the
//!   residues of its `y`-modulo constraints, build an interval-computing
//!   circuit for each residue-resolved, `y`-modulo-free piece, pick the
//!   first point of the right residue class in the first available
//!   interval, and combine the pieces with [`combine_disjunction`].
//! * [`synth_multi_output`] — the sequential driver for specifications in
//!   PSyNF: synthesize `y_i` from `∃^local`-projected formulas from the
//!   last output backwards, then compose the circuits.
//! * [`synth_general`] — the general algorithm over affine candidates
//!   (in [`general`]), applicable to any quantifier-free specification.

pub mod general;
pub mod interval;

pub use general::{
    detect_candidate_gaps, generate_affine_candidates, AffineCandidate, CandidateGen, RatExpr,
};
pub use interval::{cands_network, icomp, intersect_lists, interval_circuit, pick_in_bundle};

use crate::circuit::{Builder, Circuit, WireId};
use crate::error::{Error, Result};
use crate::exactnum::Int;
use crate::formula::{
    disjunctive_units, Atom, Formula, ModAtom, SpecFormula, Var, VarSet,
};
use crate::normal_forms::{check_modulo_tame, UnitTameness};
use crate::qelim::local_exists;
use crate::Budgets;
use num_traits::{One, Zero};

/// Combine per-disjunct Skolem circuits `f_i` for `φ_i` into one for
/// `⋁ φ_i`, on wires inside a builder:
/// `γ = Σᵢ wᵢ·ξ_{φᵢ}(x̄, fᵢ(x̄))` with powers-of-two weights descending in
/// `i`, then the telescoping sum `f = Σᵢ C(2wᵢ − 1 − γ, fᵢ − fᵢ₋₁)` with
/// `f₀ = 0`. The smallest satisfied index `i*` carries the dominant
/// weight, so `w_{i*} ≤ γ < 2·w_{i*}`; the guard `γ < 2wᵢ` then fires
/// exactly on the prefix `i ≤ i*` and the sum telescopes to `f_{i*}`.
fn combine_disjunction_wires(
    b: &mut Builder,
    branches: &[(Formula, WireId)],
    binding: &[WireId],
    y: Var,
) -> WireId {
    assert!(!branches.is_empty());
    if branches.len() == 1 {
        return branches[0].1;
    }
    let k = branches.len();
    let weight_of = |i: usize| {
        let mut w = Int::from(1);
        for _ in 0..(k - i) {
            w *= 2;
        }
        w
    };
    let mut gamma_terms: Vec<(WireId, Int)> = vec![];
    for (i, (phi, f)) in branches.iter().enumerate() {
        let mut bind = binding.to_vec();
        bind[y] = *f;
        let xi = b.characteristic(phi, &bind);
        gamma_terms.push((xi, weight_of(i)));
    }
    let gamma = b.lin(&gamma_terms, Int::zero());
    let mut f_terms: Vec<(WireId, Int)> = vec![];
    let mut prev: WireId = b.konst(0);
    for (i, (_, f)) in branches.iter().enumerate() {
        // fires iff γ ≤ 2·wᵢ − 1, i.e. γ < 2·wᵢ
        let cond = b.lin(&[(gamma, Int::from(-1))], weight_of(i) * 2 - 1);
        let diff = b.sub(*f, prev);
        let picked = b.c_gate(cond, diff);
        f_terms.push((picked, Int::one()));
        prev = *f;
    }
    b.lin(&f_terms, Int::zero())
}

/// Combine Skolem circuits for the disjuncts of a one-output specification
/// into a Skolem circuit for the disjunction.
pub fn combine_disjunction(
    vars: &VarSet,
    branches: &[(Formula, Circuit)],
) -> Result<Circuit> {
    if vars.num_outputs() != 1 {
        return Err(Error::Precondition("combine_disjunction needs one output".into()));
    }
    if branches.is_empty() {
        return Err(Error::Precondition("no disjuncts".into()));
    }
    let n = vars.num_inputs();
    let mut b = Builder::new(n);
    let inputs: Vec<WireId> = (0..n).map(|j| b.input(j)).collect();
    let mut wires = vec![];
    for (phi, c) in branches {
        if c.n_inputs != n || c.outputs.len() != 1 {
            return Err(Error::Dimension("branch circuit arity".into()));
        }
        let outs = b.inline(c, &inputs);
        wires.push((phi.clone(), outs[0]));
    }
    let zero = b.konst(0);
    let mut binding = inputs;
    binding.push(zero); // y slot, replaced per branch
    let y = vars.outputs().next().unwrap();
    let out = combine_disjunction_wires(&mut b, &wires, &binding, y);
    Ok(b.finish(vec![out]))
}

/// Resolve the `y`-modulo atoms of a unit against a chosen residue class
/// `y ≡ r (mod M)`: consistent atoms become ⊤, inconsistent ones ⊥.
/// With `r = None` every `y`-modulo atom becomes ⊥ (the class outside all
/// mentioned residues).
fn resolve_y_mods(unit: &Formula, y: Var, r: Option<&Int>) -> Formula {
    unit.map_atoms(&mut |a| match a {
        Atom::Mod(m) if m.expr.mentions(y) => match r {
            Some(r) if *r == m.residue => Formula::top(),
            _ => Formula::bottom(),
        },
        other => Formula::Leaf(other.clone()),
    })
    .simplify()
}

/// Skolem circuit for a `y`-modulo-tame one-output specification.
///
/// Per disjunctive unit and per residue `r` appearing in its `y`-modulo
/// constraints (plus the complement class, where every `y`-modulo atom is
/// false), the unit is resolved to a `y`-modulo-free formula, compiled to
/// an interval-computing circuit, and a value `≡ r (mod M)` is picked from
/// the first available interval. The branches are then combined by the
/// disjunction lemma, which selects the first branch whose candidate
/// actually satisfies it.
pub fn synth_one_output(spec: &SpecFormula, budgets: &Budgets) -> Result<Circuit> {
    let _ = budgets;
    if spec.vars.num_outputs() != 1 {
        return Err(Error::Precondition(format!(
            "synth_one_output needs exactly one output, got {}",
            spec.vars.num_outputs()
        )));
    }
    let y = spec.vars.outputs().next().unwrap();
    let report = check_modulo_tame(&spec.body, y);
    if !report.is_tame() {
        return Err(Error::Precondition(format!(
            "specification is not modulo-tame for {}",
            spec.vars.name(y)
        )));
    }
    let n = spec.vars.num_inputs();
    let mut b = Builder::new(n);
    let inputs: Vec<WireId> = (0..n).map(|j| b.input(j)).collect();
    let zero = b.konst(0);
    let mut binding = inputs.clone();
    binding.push(zero);

    let units = disjunctive_units(&spec.body);
    let mut branches: Vec<(Formula, WireId)> = vec![];
    for (unit, info) in units.iter().zip(&report.units) {
        let UnitTameness::Tame { modulus, residues } = info else { unreachable!() };
        for r in residues {
            let resolved = resolve_y_mods(unit, y, Some(r));
            if matches!(&resolved, Formula::Leaf(a) if a.const_value() == Some(false)) {
                continue;
            }
            let bundle = interval::interval_circuit(&mut b, &resolved, y, &binding);
            let value = interval::pick_in_bundle(&mut b, &bundle, modulus, r);
            let class = Formula::Leaf(Atom::Mod(
                ModAtom::new(crate::formula::LinExpr::var(y), r.clone(), modulus.clone(), false)
                    .expect("modulus >= 1"),
            ));
            let phi = Formula::and(vec![resolved, class]);
            branches.push((phi, value));
        }
        // the complement class: every y-modulo atom false
        let resolved = resolve_y_mods(unit, y, None);
        if !matches!(&resolved, Formula::Leaf(a) if a.const_value() == Some(false)) {
            let bundle = interval::interval_circuit(&mut b, &resolved, y, &binding);
            let value = interval::pick_in_bundle(&mut b, &bundle, &Int::one(), &Int::zero());
            branches.push((resolved, value));
        }
    }
    if branches.is_empty() {
        // unsatisfiable everywhere: any output will do
        let z = b.konst(0);
        return Ok(b.finish(vec![z]));
    }
    let out = combine_disjunction_wires(&mut b, &branches, &binding, y);
    Ok(b.finish(vec![out]))
}

/// Sequential multi-output synthesis for specifications in PSyNF.
///
/// For `i = m` down to `1`, `y_i` is synthesized from
/// `∃^local y_{i+1..m}: φ` (sound because PSyNF makes local and global
/// suffix quantification agree), treating `x̄, y_1..y_{i−1}` as inputs;
/// the circuits are then composed front-to-back.
pub fn synth_multi_output(spec: &SpecFormula, budgets: &Budgets) -> Result<Circuit> {
    let report = crate::normal_forms::check_psynf(spec, budgets)?;
    if !report.verdict {
        return Err(Error::Precondition(format!(
            "specification is not in PSyNF: {}",
            report.summary()
        )));
    }
    synth_multi_output_unchecked(spec, budgets)
}

/// The PSyNF pipeline without re-running the checker (the caller vouches).
pub fn synth_multi_output_unchecked(spec: &SpecFormula, budgets: &Budgets) -> Result<Circuit> {
    let n = spec.vars.num_inputs();
    let m = spec.vars.num_outputs();
    let outputs: Vec<Var> = spec.vars.outputs().collect();
    let mut stage_circuits: Vec<Circuit> = Vec::with_capacity(m);
    for (i, yi) in outputs.iter().enumerate() {
        let suffix: Vec<Var> = outputs[i + 1..].to_vec();
        let projected = local_exists(&spec.body, &suffix).simplify();
        let sub_inputs: Vec<String> =
            (0..n + i).map(|v| spec.vars.name(v).to_string()).collect();
        let sub_vars = VarSet::new(sub_inputs, vec![spec.vars.name(*yi).to_string()])?;
        let sub = SpecFormula { vars: sub_vars, body: projected };
        stage_circuits.push(synth_one_output(&sub, budgets)?);
    }
    // compose: feed each stage the inputs plus all earlier outputs
    let mut b = Builder::new(n);
    let mut wires: Vec<WireId> = (0..n).map(|j| b.input(j)).collect();
    let mut outs = vec![];
    for c in &stage_circuits {
        let o = b.inline(c, &wires);
        outs.push(o[0]);
        wires.push(o[0]);
    }
    Ok(b.finish(outs))
}

pub use general::synth_general;

/// Exact, unbounded Skolem check for small arities:
/// `∀x̄: (∃ȳ: φ) → φ(x̄, f(x̄))`, decided by encoding the circuit's
/// evaluation trace as an existential formula and running quantifier
/// elimination on `∃x̄ ∃ȳ ∃ḡ: φ(x̄,ȳ) ∧ trace(x̄,ḡ) ∧ ¬φ(x̄, out(ḡ))`.
/// Returns `true` iff no counterexample input exists.
pub fn exact_skolem_check(
    spec: &SpecFormula,
    circuit: &Circuit,
    budgets: &Budgets,
) -> Result<bool> {
    let n = spec.vars.num_inputs();
    let m = spec.vars.num_outputs();
    if circuit.n_inputs != n || circuit.outputs.len() != m {
        return Err(Error::Dimension("circuit arity does not match the spec".into()));
    }
    let simplified = circuit.simplify();
    let mut vars = spec.vars.clone();
    let (gate_vars, trace) = crate::circuit::to_existential_formula(&simplified, &mut vars);
    // φ with the outputs replaced by the circuit's output gate variables
    let mut not_phi = spec.body.clone();
    for (k, y) in spec.vars.outputs().enumerate() {
        let gv = gate_vars[simplified.outputs[k]];
        not_phi = not_phi.subst(y, &crate::formula::LinExpr::var(gv));
    }
    let bad = Formula::and(vec![spec.body.clone(), trace, not_phi.negate()]).simplify();
    // eliminate gate vars first, in forward topological order so that case
    // guards become constraints over the inputs and prune each other; then
    // the witness outputs, then the inputs
    let mut order: Vec<Var> = (0..n).collect();
    order.extend(spec.vars.outputs());
    order.extend(gate_vars.iter().rev().copied());
    let ground = crate::qelim::eliminate_block(&bad, &order, budgets)?;
    if !ground.vars().is_empty() {
        return Err(Error::Invalid("elimination left free variables".into()));
    }
    Ok(!ground.eval(&vec![Int::zero(); vars.len()]))
}

#[test]
fn dbg_exact_general() {
    use crate::Budgets;
    let b = Budgets::default();
    for (name, text) in [
        ("psi2", "(spec (inputs x) (outputs y) (and (>= (+ y (* -1 x) -1) 0) (>= (+ x 4 (* -1 y)) 0) (mod= y 0 4)))"),
        ("fig1", "(spec (inputs x) (outputs y) (or (and (>= (+ (* 3 x) -2) 0) (mod= (+ (* 4 x) (* 5 y)) 2 3)) (and (>= (+ (* -2 x) (* 5 y) 7) 0) (mod= y 5 6))))"),
        ("divlike", "(spec (inputs x) (outputs y) (and (>= (+ x (* -2 y)) 0) (>= (+ (* 2 y) (* -1 x) 1) 0)))"),
        ("mix", "(spec (inputs x) (outputs y) (or (and (mod= x 0 2) (= (+ y (* -1 x) -1) 0)) (and (mod!= x 0 2) (>= (+ y (* -3 x)) 0) (>= (+ (* 3 x) 2 (* -1 y)) 0))))"),
    ] {
        let s = crate::formula::parse(text).unwrap();
        let c = synth_general(&s, &b).unwrap();
        let simp = c.simplify();
        let nonlin = simp.gates.iter().filter(|g| !matches!(g, crate::circuit::Gate::Lin{..} | crate::circuit::Gate::Input(_))).count();
        let t0 = std::time::Instant::now();
        let res = exact_skolem_check(&s, &c, &b);
        eprintln!("{name}: gates={} nonlin={} exact={:?} in {:?}", simp.gates.len(), nonlin, res.map_err(|e| e.to_string()), t0.elapsed());
    }
}

#[test]
fn dbg_exact_sizes() {
    use crate::synth::*;
    use crate::Budgets;
    let b = Budgets::default();
    let s = crate::formula::parse(
        "(spec (inputs x) (outputs y) (and (>= (+ y (* -1 x) -1) 0) (>= (+ x 4 (* -1 y)) 0) (mod= y 0 4)))",
    ).unwrap();
    let c = synth_one_output(&s, &b).unwrap();
    let simp = c.simplify();
    let st = simp.stats();
    let nonlin = simp.gates.iter().filter(|g| !matches!(g, crate::circuit::Gate::Lin{..} | crate::circuit::Gate::Input(_))).count();
    eprintln!("psi2 one-output: gates={} nonlin={} divs={} depth={}", st.gate_count, nonlin, st.div_gate_count, st.depth);
    let g = synth_general(&s, &b).unwrap().simplify();
    let st = g.stats();
    let nonlin = g.gates.iter().filter(|gg| !matches!(gg, crate::circuit::Gate::Lin{..} | crate::circuit::Gate::Input(_))).count();
    eprintln!("psi2 general: gates={} nonlin={} divs={} depth={}", st.gate_count, nonlin, st.div_gate_count, st.depth);
}
