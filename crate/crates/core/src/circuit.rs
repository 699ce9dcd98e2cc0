//! Arithmetic circuits over the gate basis {linear combination, max, E, div_m}.
//!
//! Gates reference strictly earlier gates, so the gate list is a topological
//! order and acyclicity is impossible to violate by construction. `E(x,y)`
//! is the zero conditional (`y` if `x = 0`, else `0`) and `div_m` is floor
//! division toward −∞ — not truncation, which matters on negative inputs.
//!
//! The builder hash-conses identical gates and folds constants, and offers
//! the standard sugar: `C(x,y) = E(min(max(x+1,0),1)−1, y)` (which computes
//! `y` if `x ≥ 0`, else `0`), `min(x,y) = −max(−x,−y)`, the `ite` family,
//! and characteristic circuits `ξ_φ` of formulas.
//!
//! Text format (one gate per line, topologically ordered, bit-exact):
//!
//! ```text
//! circuit n=2 m=1
//! g0 = input 0
//! g1 = lin -3 (2 g0)
//! g2 = div 5 g1
//! g3 = max g1 g2
//! g4 = eq0 g3 g1
//! outputs g2
//! ```

use crate::error::{Error, Result};
use crate::exactnum::Int;
use crate::formula::{Atom, Formula, LinExpr, SpecFormula, Var, VarSet};
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;

pub type WireId = usize;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Gate {
    /// The j-th circuit input.
    Input(usize),
    /// `konst + Σ coeff·wire`; wires strictly increasing.
    Lin { coeffs: Vec<(WireId, Int)>, konst: Int },
    Max(WireId, WireId),
    /// `E(cond, val)`: `val` if `cond = 0`, else `0`.
    E(WireId, WireId),
    /// `⌊arg / m⌋` with `m ≥ 1`, floor toward −∞.
    Div { m: Int, arg: WireId },
}

impl Gate {
    fn wires(&self) -> Vec<WireId> {
        match self {
            Gate::Input(_) => vec![],
            Gate::Lin { coeffs, .. } => coeffs.iter().map(|(w, _)| *w).collect(),
            Gate::Max(a, b) | Gate::E(a, b) => vec![*a, *b],
            Gate::Div { arg, .. } => vec![*arg],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Circuit {
    pub n_inputs: usize,
    pub gates: Vec<Gate>,
    pub outputs: Vec<WireId>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CircuitStats {
    pub gate_count: usize,
    pub div_gate_count: usize,
    pub div_moduli: BTreeSet<Int>,
    pub max_coeff_bits: u64,
    pub depth: usize,
}

impl Circuit {
    pub fn n_outputs(&self) -> usize {
        self.outputs.len()
    }

    /// Evaluate on a full-precision input vector.
    pub fn eval(&self, input: &[Int]) -> Vec<Int> {
        assert_eq!(input.len(), self.n_inputs, "input arity mismatch");
        if let Some(out) = self.eval_i64(input) {
            return out;
        }
        let mut vals: Vec<Int> = Vec::with_capacity(self.gates.len());
        for g in &self.gates {
            let v = match g {
                Gate::Input(j) => input[*j].clone(),
                Gate::Lin { coeffs, konst } => {
                    let mut acc = konst.clone();
                    for (w, c) in coeffs {
                        acc += c * &vals[*w];
                    }
                    acc
                }
                Gate::Max(a, b) => vals[*a].clone().max(vals[*b].clone()),
                Gate::E(c, v) => {
                    if vals[*c].is_zero() {
                        vals[*v].clone()
                    } else {
                        Int::zero()
                    }
                }
                Gate::Div { m, arg } => vals[*arg].div_floor(m),
            };
            vals.push(v);
        }
        self.outputs.iter().map(|w| vals[*w].clone()).collect()
    }

    /// Machine-word fast path; `None` on any overflow risk.
    fn eval_i64(&self, input: &[Int]) -> Option<Vec<Int>> {
        let mut small_in = Vec::with_capacity(input.len());
        for v in input {
            small_in.push(v.to_i64()?);
        }
        let mut vals: Vec<i64> = Vec::with_capacity(self.gates.len());
        for g in &self.gates {
            let v: i64 = match g {
                Gate::Input(j) => small_in[*j],
                Gate::Lin { coeffs, konst } => {
                    let mut acc: i128 = konst.to_i128()?;
                    for (w, c) in coeffs {
                        acc = acc.checked_add((c.to_i128()?).checked_mul(vals[*w] as i128)?)?;
                    }
                    i64::try_from(acc).ok()?
                }
                Gate::Max(a, b) => vals[*a].max(vals[*b]),
                Gate::E(c, v) => {
                    if vals[*c] == 0 {
                        vals[*v]
                    } else {
                        0
                    }
                }
                Gate::Div { m, arg } => Integer::div_floor(&vals[*arg], &m.to_i64()?),
            };
            vals.push(v);
        }
        Some(self.outputs.iter().map(|w| Int::from(vals[*w])).collect())
    }

    pub fn stats(&self) -> CircuitStats {
        let mut div_moduli = BTreeSet::new();
        let mut div_gate_count = 0usize;
        let mut max_coeff_bits = 1u64;
        let mut depth = vec![0usize; self.gates.len()];
        let mut max_depth = 0usize;
        for (i, g) in self.gates.iter().enumerate() {
            match g {
                Gate::Div { m, .. } => {
                    div_gate_count += 1;
                    div_moduli.insert(m.clone());
                    max_coeff_bits = max_coeff_bits.max(m.bits().max(1));
                }
                Gate::Lin { coeffs, konst } => {
                    max_coeff_bits = max_coeff_bits.max(konst.bits().max(1));
                    for (_, c) in coeffs {
                        max_coeff_bits = max_coeff_bits.max(c.bits().max(1));
                    }
                }
                _ => {}
            }
            let d = g.wires().iter().map(|w| depth[*w] + 1).max().unwrap_or(0);
            depth[i] = d;
            max_depth = max_depth.max(d);
        }
        CircuitStats {
            gate_count: self.gates.len(),
            div_gate_count,
            div_moduli,
            max_coeff_bits,
            depth: max_depth,
        }
    }

    /// Dead-gate elimination plus constant folding and re-consing.
    /// Semantics are preserved exactly.
    pub fn simplify(&self) -> Circuit {
        let mut b = Builder::new(self.n_inputs);
        let inputs: Vec<WireId> = (0..self.n_inputs).map(|j| b.input(j)).collect();
        let outs = b.inline(self, &inputs);
        b.finish(outs)
    }
}

// ---------------------------------------------------------------------------
// Builder
// ---------------------------------------------------------------------------

/// Single-threaded circuit builder with hash-consing and peephole constant
/// folding. Wires are indices into the growing gate list.
pub struct Builder {
    n_inputs: usize,
    gates: Vec<Gate>,
    cache: HashMap<Gate, WireId>,
    consts: HashMap<WireId, Int>,
}

impl Builder {
    pub fn new(n_inputs: usize) -> Self {
        Builder { n_inputs, gates: vec![], cache: HashMap::new(), consts: HashMap::new() }
    }

    pub fn gate_count(&self) -> usize {
        self.gates.len()
    }

    fn push(&mut self, g: Gate) -> WireId {
        if let Some(&w) = self.cache.get(&g) {
            return w;
        }
        let w = self.gates.len();
        self.gates.push(g.clone());
        self.cache.insert(g, w);
        w
    }

    fn const_of(&self, w: WireId) -> Option<&Int> {
        self.consts.get(&w)
    }

    pub fn input(&mut self, j: usize) -> WireId {
        assert!(j < self.n_inputs);
        self.push(Gate::Input(j))
    }

    pub fn konst(&mut self, k: impl Into<Int>) -> WireId {
        let k = k.into();
        let w = self.push(Gate::Lin { coeffs: vec![], konst: k.clone() });
        self.consts.insert(w, k);
        w
    }

    /// Affine combination; constant wires are folded into the constant term.
    pub fn lin(&mut self, terms: &[(WireId, Int)], konst: Int) -> WireId {
        let mut acc: HashMap<WireId, Int> = HashMap::new();
        let mut k = konst;
        for (w, c) in terms {
            if c.is_zero() {
                continue;
            }
            if let Some(cv) = self.const_of(*w) {
                k += c * cv;
            } else {
                *acc.entry(*w).or_insert_with(Int::zero) += c;
            }
        }
        let mut coeffs: Vec<(WireId, Int)> =
            acc.into_iter().filter(|(_, c)| !c.is_zero()).collect();
        coeffs.sort_by_key(|(w, _)| *w);
        if coeffs.is_empty() {
            return self.konst(k);
        }
        if coeffs.len() == 1 && coeffs[0].1.is_one() && k.is_zero() {
            return coeffs[0].0;
        }
        self.push(Gate::Lin { coeffs, konst: k })
    }

    pub fn add(&mut self, a: WireId, b: WireId) -> WireId {
        self.lin(&[(a, Int::one()), (b, Int::one())], Int::zero())
    }

    pub fn sub(&mut self, a: WireId, b: WireId) -> WireId {
        self.lin(&[(a, Int::one()), (b, Int::from(-1))], Int::zero())
    }

    pub fn neg(&mut self, a: WireId) -> WireId {
        self.lin(&[(a, Int::from(-1))], Int::zero())
    }

    pub fn add_const(&mut self, a: WireId, k: impl Into<Int>) -> WireId {
        self.lin(&[(a, Int::one())], k.into())
    }

    pub fn max(&mut self, a: WireId, b: WireId) -> WireId {
        if a == b {
            return a;
        }
        if let (Some(x), Some(y)) = (self.const_of(a), self.const_of(b)) {
            let v = x.clone().max(y.clone());
            return self.konst(v);
        }
        self.push(Gate::Max(a.min(b), a.max(b)))
    }

    pub fn min(&mut self, a: WireId, b: WireId) -> WireId {
        let na = self.neg(a);
        let nb = self.neg(b);
        let m = self.max(na, nb);
        self.neg(m)
    }

    pub fn e(&mut self, cond: WireId, val: WireId) -> WireId {
        if let Some(c) = self.const_of(cond) {
            return if c.is_zero() { val } else { self.konst(0) };
        }
        if let Some(v) = self.const_of(val) {
            if v.is_zero() {
                return self.konst(0);
            }
        }
        self.push(Gate::E(cond, val))
    }

    pub fn div(&mut self, m: impl Into<Int>, arg: WireId) -> WireId {
        let m = m.into();
        assert!(m.is_positive(), "div modulus must be >= 1");
        if m.is_one() {
            return arg;
        }
        if let Some(v) = self.const_of(arg) {
            let q = v.div_floor(&m);
            return self.konst(q);
        }
        self.push(Gate::Div { m, arg })
    }

    /// `C(x,y)`: `y` if `x ≥ 0` else `0`, via the exact desugaring
    /// `E(min(max(x+1,0),1)−1, y)`.
    pub fn c_gate(&mut self, x: WireId, y: WireId) -> WireId {
        if let Some(v) = self.const_of(x) {
            let v = v.clone();
            return if !v.is_negative() { y } else { self.konst(0) };
        }
        let x1 = self.add_const(x, 1);
        let zero = self.konst(0);
        let mx = self.max(x1, zero);
        let one = self.konst(1);
        let mn = self.min(mx, one);
        let cond = self.add_const(mn, -1);
        self.e(cond, y)
    }

    /// `ite(cond_wire = 0, then, else)` on built wires: `E(c, t−e) + e`.
    pub fn ite_zero(&mut self, cond: WireId, then_w: WireId, else_w: WireId) -> WireId {
        if let Some(c) = self.const_of(cond) {
            return if c.is_zero() { then_w } else { else_w };
        }
        let diff = self.sub(then_w, else_w);
        let picked = self.e(cond, diff);
        self.add(picked, else_w)
    }

    /// `ite(f1 = f2, f3, f4) = E(f1−f2, f3−f4) + f4`.
    pub fn ite_eq(&mut self, f1: WireId, f2: WireId, f3: WireId, f4: WireId) -> WireId {
        let c = self.sub(f1, f2);
        self.ite_zero(c, f3, f4)
    }

    /// `ite(f1 ≥ f2, f3, f4) = C(f1−f2, f3−f4) + f4`.
    pub fn ite_ge(&mut self, f1: WireId, f2: WireId, f3: WireId, f4: WireId) -> WireId {
        let c = self.sub(f1, f2);
        if let Some(v) = self.const_of(c) {
            return if !v.is_negative() { f3 } else { f4 };
        }
        let diff = self.sub(f3, f4);
        let picked = self.c_gate(c, diff);
        self.add(picked, f4)
    }

    /// Characteristic wire `ξ_φ ∈ {0,1}` of an NNF formula whose variables
    /// are bound to wires.
    pub fn characteristic(&mut self, f: &Formula, binding: &[WireId]) -> WireId {
        match f {
            Formula::Leaf(a) => self.characteristic_atom(a, binding),
            Formula::And(cs) => {
                let mut acc = self.characteristic(&cs[0], binding);
                for c in &cs[1..] {
                    let xi = self.characteristic(c, binding);
                    // C(ξ₁ − 1, ξ₂)
                    let c1 = self.add_const(acc, -1);
                    acc = self.c_gate(c1, xi);
                }
                acc
            }
            Formula::Or(cs) => {
                let mut acc = self.characteristic(&cs[0], binding);
                for c in &cs[1..] {
                    let xi = self.characteristic(c, binding);
                    // 1 − C(−ξ₁, 1 − ξ₂)
                    let n1 = self.neg(acc);
                    let one_minus = self.lin(&[(xi, Int::from(-1))], Int::one());
                    let inner = self.c_gate(n1, one_minus);
                    acc = self.lin(&[(inner, Int::from(-1))], Int::one());
                }
                acc
            }
        }
    }

    pub fn expr_wire(&mut self, e: &LinExpr, binding: &[WireId]) -> WireId {
        let terms: Vec<(WireId, Int)> =
            e.coeffs.iter().map(|(v, c)| (binding[*v], c.clone())).collect();
        self.lin(&terms, e.constant.clone())
    }

    fn characteristic_atom(&mut self, a: &Atom, binding: &[WireId]) -> WireId {
        let one = self.konst(1);
        match a {
            // ξ_{t ≥ 0} = C(t, 1)
            Atom::Ge(e) => {
                let t = self.expr_wire(e, binding);
                self.c_gate(t, one)
            }
            Atom::Mod(m) => {
                let t = self.expr_wire(&m.expr, binding);
                if !m.differs {
                    // E(div_M(t−r) − div_M(t−r−1) − 1, 1)
                    let tr = self.lin(&[(t, Int::one())], -m.residue.clone());
                    let tr1 = self.add_const(tr, -1);
                    let d1 = self.div(m.modulus.clone(), tr);
                    let d2 = self.div(m.modulus.clone(), tr1);
                    let cond =
                        self.lin(&[(d1, Int::one()), (d2, Int::from(-1))], Int::from(-1));
                    self.e(cond, one)
                } else {
                    // 1 − E(t−r − M·div_M(t−r), 1)
                    let tr = self.lin(&[(t, Int::one())], -m.residue.clone());
                    let d = self.div(m.modulus.clone(), tr);
                    let rem = self.lin(&[(tr, Int::one()), (d, -m.modulus.clone())], Int::zero());
                    let hit = self.e(rem, one);
                    self.lin(&[(hit, Int::from(-1))], Int::one())
                }
            }
        }
    }

    /// `ite(φ, f1, f2) = E(1−ξ_φ, f1) + E(ξ_φ, f2)` on wire vectors.
    pub fn ite_formula(
        &mut self,
        f: &Formula,
        binding: &[WireId],
        then_w: &[WireId],
        else_w: &[WireId],
    ) -> Vec<WireId> {
        assert_eq!(then_w.len(), else_w.len());
        let xi = self.characteristic(f, binding);
        let one_minus = self.lin(&[(xi, Int::from(-1))], Int::one());
        then_w
            .iter()
            .zip(else_w)
            .map(|(&t, &e)| {
                let a = self.e(one_minus, t);
                let b = self.e(xi, e);
                self.add(a, b)
            })
            .collect()
    }

    /// Splice another circuit in, mapping its inputs to `input_wires`.
    pub fn inline(&mut self, c: &Circuit, input_wires: &[WireId]) -> Vec<WireId> {
        assert_eq!(input_wires.len(), c.n_inputs);
        let mut map: Vec<WireId> = Vec::with_capacity(c.gates.len());
        for g in &c.gates {
            let w = match g {
                Gate::Input(j) => input_wires[*j],
                Gate::Lin { coeffs, konst } => {
                    let terms: Vec<(WireId, Int)> =
                        coeffs.iter().map(|(w, c)| (map[*w], c.clone())).collect();
                    self.lin(&terms, konst.clone())
                }
                Gate::Max(a, b) => self.max(map[*a], map[*b]),
                Gate::E(a, b) => self.e(map[*a], map[*b]),
                Gate::Div { m, arg } => self.div(m.clone(), map[*arg]),
            };
            map.push(w);
        }
        c.outputs.iter().map(|w| map[*w]).collect()
    }

    pub fn finish(self, outputs: Vec<WireId>) -> Circuit {
        let full = Circuit { n_inputs: self.n_inputs, gates: self.gates, outputs };
        prune_dead(&full)
    }
}

/// Drop gates unreachable from the outputs, renumbering wires.
fn prune_dead(c: &Circuit) -> Circuit {
    let mut live = vec![false; c.gates.len()];
    let mut stack: Vec<WireId> = c.outputs.clone();
    while let Some(w) = stack.pop() {
        if live[w] {
            continue;
        }
        live[w] = true;
        stack.extend(c.gates[w].wires());
    }
    let mut remap = vec![usize::MAX; c.gates.len()];
    let mut gates = vec![];
    for (i, g) in c.gates.iter().enumerate() {
        if !live[i] {
            continue;
        }
        let g = match g {
            Gate::Input(j) => Gate::Input(*j),
            Gate::Lin { coeffs, konst } => Gate::Lin {
                coeffs: coeffs.iter().map(|(w, c)| (remap[*w], c.clone())).collect(),
                konst: konst.clone(),
            },
            Gate::Max(a, b) => Gate::Max(remap[*a], remap[*b]),
            Gate::E(a, b) => Gate::E(remap[*a], remap[*b]),
            Gate::Div { m, arg } => Gate::Div { m: m.clone(), arg: remap[*arg] },
        };
        remap[i] = gates.len();
        gates.push(g);
    }
    Circuit {
        n_inputs: c.n_inputs,
        gates,
        outputs: c.outputs.iter().map(|w| remap[*w]).collect(),
    }
}

/// Circuit computing the characteristic function `ξ_φ` of a formula, with
/// one input per declared variable (inputs then outputs, declaration order).
pub fn characteristic_circuit(spec: &SpecFormula) -> Circuit {
    let n = spec.vars.len();
    let mut b = Builder::new(n);
    let binding: Vec<WireId> = (0..n).map(|j| b.input(j)).collect();
    let xi = b.characteristic(&spec.body, &binding);
    b.finish(vec![xi])
}

// ---------------------------------------------------------------------------
// Composite-divisor rewriting
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DivRewrite {
    /// Replace each `div_{k·ℓ}` gate by the `{E, div_k, div_ℓ}` construction.
    ExpandComposite,
    /// Replace each `div_k` gate by the construction over `div_{k·ℓ}`.
    LiftToComposite,
}

/// Rewrite division gates through the composite-divisor identities
/// (both preserve the computed function exactly):
///
/// * `div_{kℓ}(x) = Σ_{r∈[0,kℓ)} E(div_ℓ(div_k(x−r))·kℓ − (x−r), div_ℓ(div_k(x−r)))`
/// * `div_k(x)   = Σ_{r∈[0,kℓ)} E(div_{kℓ}(x)·kℓ − (x−r), div_{kℓ}(x)·ℓ + div_k(r))`
pub fn rewrite_div_composite(c: &Circuit, k: &Int, l: &Int, dir: DivRewrite) -> Circuit {
    assert!(k.is_positive() && l.is_positive());
    let kl = k * l;
    let mut b = Builder::new(c.n_inputs);
    let mut map: Vec<WireId> = Vec::with_capacity(c.gates.len());
    for g in &c.gates {
        let w = match g {
            Gate::Input(j) => b.input(*j),
            Gate::Lin { coeffs, konst } => {
                let terms: Vec<(WireId, Int)> =
                    coeffs.iter().map(|(w, c)| (map[*w], c.clone())).collect();
                b.lin(&terms, konst.clone())
            }
            Gate::Max(x, y) => b.max(map[*x], map[*y]),
            Gate::E(x, y) => b.e(map[*x], map[*y]),
            Gate::Div { m, arg } => {
                let x = map[*arg];
                match dir {
                    DivRewrite::ExpandComposite if *m == kl => {
                        let mut terms: Vec<(WireId, Int)> = vec![];
                        let mut r = Int::zero();
                        while r < kl {
                            let xr = b.lin(&[(x, Int::one())], -r.clone());
                            let dk = b.div(k.clone(), xr);
                            let dkl = b.div(l.clone(), dk);
                            let cond =
                                b.lin(&[(dkl, kl.clone()), (xr, Int::from(-1))], Int::zero());
                            let term = b.e(cond, dkl);
                            terms.push((term, Int::one()));
                            r += 1;
                        }
                        b.lin(&terms, Int::zero())
                    }
                    DivRewrite::LiftToComposite if m == k => {
                        let dkl = b.div(kl.clone(), x);
                        let mut terms: Vec<(WireId, Int)> = vec![];
                        let mut r = Int::zero();
                        while r < kl {
                            let cond =
                                b.lin(&[(dkl, kl.clone()), (x, Int::from(-1))], r.clone());
                            let val = b.lin(&[(dkl, l.clone())], r.div_floor(k));
                            let term = b.e(cond, val);
                            terms.push((term, Int::one()));
                            r += 1;
                        }
                        b.lin(&terms, Int::zero())
                    }
                    _ => b.div(m.clone(), x),
                }
            }
        };
        map.push(w);
    }
    let outputs = c.outputs.iter().map(|w| map[*w]).collect();
    b.finish(outputs)
}

// ---------------------------------------------------------------------------
// Back-translation to existential formulas
// ---------------------------------------------------------------------------

/// Encode a circuit's evaluation relation as a quantifier-free formula with
/// one fresh variable per gate: satisfying assignments over the gate
/// variables are exactly the circuit's evaluation traces.
///
/// `vars` must already contain the circuit's inputs as its first `n_inputs`
/// entries; gate variables are appended and returned.
pub fn to_existential_formula(c: &Circuit, vars: &mut VarSet) -> (Vec<Var>, Formula) {
    let mut gate_vars: Vec<Var> = Vec::with_capacity(c.gates.len());
    let mut constraints: Vec<Formula> = vec![];
    let eq = |lhs: LinExpr| -> Formula {
        Formula::And(vec![
            Formula::Leaf(Atom::Ge(lhs.clone())),
            Formula::Leaf(Atom::Ge(lhs.neg())),
        ])
    };
    for (i, g) in c.gates.iter().enumerate() {
        let gv = vars.push_output(&format!("g{i}"));
        gate_vars.push(gv);
        match g {
            Gate::Input(j) => {
                let mut e = LinExpr::var(gv);
                e.add_term(*j, Int::from(-1));
                constraints.push(eq(e));
            }
            Gate::Lin { coeffs, konst } => {
                let mut e = LinExpr::var(gv);
                for (w, c) in coeffs {
                    e.add_term(gate_vars[*w], -c.clone());
                }
                e.constant = -konst.clone();
                constraints.push(eq(e));
            }
            Gate::Max(a, b) => {
                let (va, vb) = (gate_vars[*a], gate_vars[*b]);
                let ge = |x: Var, y: Var| {
                    let mut e = LinExpr::var(x);
                    e.add_term(y, Int::from(-1));
                    Formula::Leaf(Atom::Ge(e))
                };
                constraints.push(Formula::And(vec![
                    ge(gv, va),
                    ge(gv, vb),
                    Formula::Or(vec![ge(va, gv), ge(vb, gv)]),
                ]));
            }
            Gate::E(cond, val) => {
                let (vc, vv) = (gate_vars[*cond], gate_vars[*val]);
                // (c = 0 ∧ g = v) ∨ (c ≠ 0 ∧ g = 0)
                let c_zero = eq(LinExpr::var(vc));
                let mut gv_eq_v = LinExpr::var(gv);
                gv_eq_v.add_term(vv, Int::from(-1));
                let c_pos = {
                    let mut e = LinExpr::var(vc);
                    e.constant = Int::from(-1);
                    Formula::Leaf(Atom::Ge(e)) // c >= 1
                };
                let c_neg = {
                    let mut e = LinExpr::var(vc).neg();
                    e.constant = Int::from(-1);
                    Formula::Leaf(Atom::Ge(e)) // -c >= 1
                };
                let g_zero = eq(LinExpr::var(gv));
                constraints.push(Formula::Or(vec![
                    Formula::And(vec![c_zero, eq(gv_eq_v)]),
                    Formula::And(vec![Formula::Or(vec![c_pos, c_neg]), g_zero]),
                ]));
            }
            Gate::Div { m, arg } => {
                let va = gate_vars[*arg];
                // a − m·g ≥ 0 ∧ m·g + m − 1 − a ≥ 0
                let mut lo = LinExpr::var(va);
                lo.add_term(gv, -m.clone());
                let mut hi = LinExpr::var(gv).scale(m);
                hi.constant = m - Int::one();
                hi.add_term(va, Int::from(-1));
                constraints.push(Formula::And(vec![
                    Formula::Leaf(Atom::Ge(lo)),
                    Formula::Leaf(Atom::Ge(hi)),
                ]));
            }
        }
    }
    (gate_vars, Formula::and(constraints))
}

// ---------------------------------------------------------------------------
// Text format
// ---------------------------------------------------------------------------

pub fn serialize(c: &Circuit) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "circuit n={} m={}", c.n_inputs, c.outputs.len());
    for (i, g) in c.gates.iter().enumerate() {
        match g {
            Gate::Input(j) => {
                let _ = writeln!(out, "g{i} = input {j}");
            }
            Gate::Lin { coeffs, konst } => {
                let mut line = format!("g{i} = lin {konst}");
                for (w, c) in coeffs {
                    let _ = write!(line, " ({c} g{w})");
                }
                let _ = writeln!(out, "{line}");
            }
            Gate::Max(a, b) => {
                let _ = writeln!(out, "g{i} = max g{a} g{b}");
            }
            Gate::E(a, b) => {
                let _ = writeln!(out, "g{i} = eq0 g{a} g{b}");
            }
            Gate::Div { m, arg } => {
                let _ = writeln!(out, "g{i} = div {m} g{arg}");
            }
        }
    }
    let mut line = String::from("outputs");
    for w in &c.outputs {
        let _ = write!(line, " g{w}");
    }
    out.push_str(&line);
    out.push('\n');
    out
}

pub fn deserialize(text: &str) -> Result<Circuit> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let err = |ln: usize, msg: String| Error::parse(ln + 1, 1, msg);
    let (ln, header) = lines.next().ok_or_else(|| Error::parse(1, 1, "empty circuit file"))?;
    let header = header.trim();
    let (n, m) = parse_header(header).ok_or_else(|| err(ln, format!("bad header: {header}")))?;
    let mut gates: Vec<Gate> = vec![];
    let mut outputs: Option<Vec<WireId>> = None;
    let wire = |tok: &str, ln: usize, limit: usize| -> Result<WireId> {
        let idx = tok
            .strip_prefix('g')
            .and_then(|s| s.parse::<usize>().ok())
            .ok_or_else(|| err(ln, format!("bad wire {tok}")))?;
        if idx >= limit {
            return Err(err(ln, format!("wire {tok} references a later gate")));
        }
        Ok(idx)
    };
    for (ln, raw) in lines {
        let line = raw.trim();
        if let Some(rest) = line.strip_prefix("outputs") {
            if outputs.is_some() {
                return Err(err(ln, "duplicate outputs line".into()));
            }
            let mut outs = vec![];
            for tok in rest.split_whitespace() {
                outs.push(wire(tok, ln, gates.len())?);
            }
            outputs = Some(outs);
            continue;
        }
        if outputs.is_some() {
            return Err(err(ln, "gate after outputs line".into()));
        }
        let (lhs, rhs) =
            line.split_once('=').ok_or_else(|| err(ln, format!("bad gate line: {line}")))?;
        let idx = lhs
            .trim()
            .strip_prefix('g')
            .and_then(|s| s.parse::<usize>().ok())
            .ok_or_else(|| err(ln, format!("bad gate name {lhs}")))?;
        if idx != gates.len() {
            return Err(err(ln, format!("expected g{} on this line", gates.len())));
        }
        let toks: Vec<&str> = rhs.split_whitespace().collect();
        if toks.is_empty() {
            return Err(err(ln, "empty gate definition".into()));
        }
        let g = match toks[0] {
            "input" => {
                let j = toks
                    .get(1)
                    .and_then(|s| s.parse::<usize>().ok())
                    .ok_or_else(|| err(ln, "bad input index".into()))?;
                if j >= n {
                    return Err(err(ln, format!("input {j} out of range (n={n})")));
                }
                Gate::Input(j)
            }
            "lin" => {
                let konst: Int = toks
                    .get(1)
                    .and_then(|s| s.parse().ok())
                    .ok_or_else(|| err(ln, "bad lin constant".into()))?;
                let rest = rhs.trim().strip_prefix("lin").unwrap().trim_start();
                let rest = rest.strip_prefix(&konst.to_string()).unwrap_or("").trim();
                let mut coeffs = vec![];
                if !rest.is_empty() {
                    for part in rest.split(')') {
                        let part = part.trim();
                        if part.is_empty() {
                            continue;
                        }
                        let part = part
                            .strip_prefix('(')
                            .ok_or_else(|| err(ln, format!("bad lin term: {part}")))?;
                        let (cs, ws) = part
                            .split_once(' ')
                            .ok_or_else(|| err(ln, format!("bad lin term: {part}")))?;
                        let c: Int =
                            cs.trim().parse().map_err(|_| err(ln, format!("bad coeff {cs}")))?;
                        let w = wire(ws.trim(), ln, gates.len())?;
                        coeffs.push((w, c));
                    }
                }
                Gate::Lin { coeffs, konst }
            }
            "max" | "eq0" => {
                let a = wire(toks.get(1).copied().unwrap_or(""), ln, gates.len())?;
                let b = wire(toks.get(2).copied().unwrap_or(""), ln, gates.len())?;
                if toks[0] == "max" {
                    Gate::Max(a, b)
                } else {
                    Gate::E(a, b)
                }
            }
            "div" => {
                let m: Int = toks
                    .get(1)
                    .and_then(|s| s.parse().ok())
                    .ok_or_else(|| err(ln, "bad div modulus".into()))?;
                if !m.is_positive() {
                    return Err(err(ln, format!("div modulus {m} must be >= 1")));
                }
                let a = wire(toks.get(2).copied().unwrap_or(""), ln, gates.len())?;
                Gate::Div { m, arg: a }
            }
            other => return Err(err(ln, format!("unknown gate kind {other}"))),
        };
        gates.push(g);
    }
    let outputs = outputs.ok_or_else(|| Error::Invalid("missing outputs line".into()))?;
    if outputs.len() != m {
        return Err(Error::Invalid(format!(
            "header declares m={m} but outputs line has {}",
            outputs.len()
        )));
    }
    Ok(Circuit { n_inputs: n, gates, outputs })
}

fn parse_header(line: &str) -> Option<(usize, usize)> {
    let rest = line.strip_prefix("circuit")?.trim();
    let mut n = None;
    let mut m = None;
    for tok in rest.split_whitespace() {
        if let Some(v) = tok.strip_prefix("n=") {
            n = v.parse().ok();
        } else if let Some(v) = tok.strip_prefix("m=") {
            m = v.parse().ok();
        } else {
            return None;
        }
    }
    Some((n?, m?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::parse;

    fn ints(vs: &[i64]) -> Vec<Int> {
        vs.iter().map(|&v| Int::from(v)).collect()
    }

    #[test]
    fn eval_div_floor() {
        let mut b = Builder::new(1);
        let x = b.input(0);
        let d = b.div(5, x);
        let c = b.finish(vec![d]);
        assert_eq!(c.eval(&ints(&[13])), ints(&[2]));
        assert_eq!(c.eval(&ints(&[-13])), ints(&[-3]));
    }

    #[test]
    fn eval_e_and_max() {
        let mut b = Builder::new(2);
        let x = b.input(0);
        let y = b.input(1);
        let e = b.e(x, y);
        let m = b.max(x, y);
        let c = b.finish(vec![e, m]);
        assert_eq!(c.eval(&ints(&[0, 7])), ints(&[7, 7]));
        assert_eq!(c.eval(&ints(&[3, 7])), ints(&[0, 7]));
        assert_eq!(c.eval(&ints(&[-2, 5])), ints(&[0, 5]));
    }

    #[test]
    fn bigint_fallback_matches() {
        let mut b = Builder::new(1);
        let x = b.input(0);
        let big = b.lin(&[(x, Int::from(i64::MAX))], Int::from(i64::MAX));
        let c = b.finish(vec![big]);
        let huge = Int::from(i64::MAX);
        let expect = &huge * &huge + &huge;
        assert_eq!(c.eval(&[huge]), vec![expect]);
    }

    #[test]
    fn c_gate_semantics() {
        let mut b = Builder::new(2);
        let x = b.input(0);
        let y = b.input(1);
        let c = b.c_gate(x, y);
        let circ = b.finish(vec![c]);
        assert_eq!(circ.eval(&ints(&[-1, 5])), ints(&[0]));
        assert_eq!(circ.eval(&ints(&[0, 5])), ints(&[5]));
        assert_eq!(circ.eval(&ints(&[7, -3])), ints(&[-3]));
        // the desugaring uses no div gates
        assert_eq!(circ.stats().div_gate_count, 0);
    }

    #[test]
    fn ite_helpers() {
        let mut b = Builder::new(1);
        let x = b.input(0);
        let zero = b.konst(0);
        let one = b.konst(1);
        let w = b.ite_ge(x, zero, one, zero); // ite(x >= 0, 1, 0)
        let c = b.finish(vec![w]);
        assert_eq!(c.eval(&ints(&[3])), ints(&[1]));
        assert_eq!(c.eval(&ints(&[-1])), ints(&[0]));
    }

    #[test]
    fn ite_formula_mod() {
        let spec = parse("(spec (inputs) (outputs y) (mod= y 5 6))").unwrap();
        let mut b = Builder::new(1);
        let y = b.input(0);
        let zero = b.konst(0);
        let outs = b.ite_formula(&spec.body, &[y], &[y], &[zero]);
        let c = b.finish(outs);
        assert_eq!(c.eval(&ints(&[11])), ints(&[11]));
        assert_eq!(c.eval(&ints(&[10])), ints(&[0]));
    }

    #[test]
    fn characteristic_matches_eval_exhaustively() {
        let specs = [
            parse("(spec (inputs x) (outputs) (>= (+ (* 3 x) -2) 0))").unwrap(),
            parse("(spec (inputs) (outputs y) (mod= y 5 6))").unwrap(),
            crate::formula::fig1(),
            parse("(spec (inputs x y z) (outputs) (or (and (>= (+ x (* -1 y)) 0) (mod!= z 1 3)) (>= (+ z y -4) 0)))").unwrap(),
        ];
        for s in &specs {
            let c = characteristic_circuit(s);
            let nv = s.vars.len();
            let mut pt = vec![-6i64; nv];
            'points: loop {
                let pti = ints(&pt);
                let want = if s.body.eval(&pti) { 1 } else { 0 };
                assert_eq!(c.eval(&pti), ints(&[want]), "at {pt:?}");
                let mut i = 0;
                loop {
                    if i == nv {
                        break 'points;
                    }
                    pt[i] += 1;
                    if pt[i] <= 6 {
                        break;
                    }
                    pt[i] = -6;
                    i += 1;
                }
            }
        }
    }

    #[test]
    fn characteristic_examples() {
        let s = parse("(spec (inputs x) (outputs) (>= (+ (* 3 x) -2) 0))").unwrap();
        let c = characteristic_circuit(&s);
        assert_eq!(c.eval(&ints(&[1])), ints(&[1]));
        assert_eq!(c.eval(&ints(&[0])), ints(&[0]));
        let fig = crate::formula::fig1();
        let c = characteristic_circuit(&fig);
        assert_eq!(c.eval(&ints(&[2, 5])), ints(&[1]));
        assert_eq!(c.eval(&ints(&[1, 1])), ints(&[0]));
    }

    #[test]
    fn div_rewrite_both_directions() {
        // div_6 expanded over {div_2, div_3}
        let mut b = Builder::new(1);
        let x = b.input(0);
        let d = b.div(6, x);
        let c6 = b.finish(vec![d]);
        let expanded =
            rewrite_div_composite(&c6, &2.into(), &3.into(), DivRewrite::ExpandComposite);
        assert!(expanded
            .stats()
            .div_moduli
            .iter()
            .all(|m| *m == Int::from(2) || *m == Int::from(3)));
        for x in -20..=20i64 {
            assert_eq!(expanded.eval(&ints(&[x])), ints(&[x.div_euclid(6)]), "x={x}");
        }
        // div_2 via div_6
        let mut b = Builder::new(1);
        let x = b.input(0);
        let d = b.div(2, x);
        let c2 = b.finish(vec![d]);
        let lifted = rewrite_div_composite(&c2, &2.into(), &3.into(), DivRewrite::LiftToComposite);
        assert!(lifted.stats().div_moduli.contains(&Int::from(6)));
        assert!(!lifted.stats().div_moduli.contains(&Int::from(2)));
        for x in -20..=20i64 {
            assert_eq!(lifted.eval(&ints(&[x])), ints(&[x.div_euclid(2)]), "x={x}");
        }
    }

    #[test]
    fn div_rewrite_k1_identity() {
        let mut b = Builder::new(1);
        let x = b.input(0);
        let d = b.div(3, x);
        let c = b.finish(vec![d]);
        let r = rewrite_div_composite(&c, &1.into(), &3.into(), DivRewrite::ExpandComposite);
        for x in -10..=10i64 {
            assert_eq!(r.eval(&ints(&[x])), c.eval(&ints(&[x])));
        }
    }

    #[test]
    fn stats_and_moduli() {
        let mut b = Builder::new(1);
        let x = b.input(0);
        let d = b.div(2, x);
        let out = b.lin(&[(x, 1.into()), (d, (-2).into())], 0.into());
        let c = b.finish(vec![out]);
        let st = c.stats();
        assert_eq!(st.div_gate_count, 1);
        assert!(st.div_moduli.contains(&Int::from(2)));
    }

    #[test]
    fn serialize_roundtrip_random() {
        // deterministic pseudo-random 50-gate circuit
        let mut b = Builder::new(2);
        let mut wires = vec![b.input(0), b.input(1)];
        let mut state = 0xdeadbeefu64;
        let mut rnd = move |n: u64| {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            state % n
        };
        while b.gate_count() < 50 {
            let a = wires[rnd(wires.len() as u64) as usize];
            let c = wires[rnd(wires.len() as u64) as usize];
            let w = match rnd(4) {
                0 => b.lin(
                    &[(a, Int::from(rnd(9) as i64 - 4)), (c, Int::from(rnd(9) as i64 - 4))],
                    Int::from(rnd(5) as i64),
                ),
                1 => b.max(a, c),
                2 => b.e(a, c),
                _ => b.div(Int::from(rnd(5) as i64 + 1), a),
            };
            wires.push(w);
        }
        let outs = vec![*wires.last().unwrap(), wires[2]];
        let c = b.finish(outs);
        let text = serialize(&c);
        let back = deserialize(&text).unwrap();
        assert_eq!(back, c);
        assert_eq!(serialize(&back), text);
    }

    #[test]
    fn deserialize_rejects_malformed() {
        assert!(deserialize("").is_err());
        assert!(deserialize("circuit n=1 m=1\ng0 = input 0\noutputs g5\n").is_err());
        assert!(deserialize("circuit n=1 m=1\ng0 = frob 1\noutputs g0\n").is_err());
        assert!(deserialize("circuit n=1 m=1\ng0 = input 0\ng1 = div 0 g0\noutputs g1\n").is_err());
    }

    #[test]
    fn to_existential_formula_div() {
        // single Div(2) circuit: formula forces q = floor(x/2)
        let mut b = Builder::new(1);
        let x = b.input(0);
        let d = b.div(2, x);
        let c = b.finish(vec![d]);
        let mut vars = VarSet::new(vec!["x".into()], vec![]).unwrap();
        let (gvars, f) = to_existential_formula(&c, &mut vars);
        assert_eq!(gvars.len(), c.gates.len());
        // at x = 5 the unique solution for the gate variables is (5, 2)
        let mut sols = vec![];
        for g0 in -10..=10i64 {
            for g1 in -10..=10i64 {
                let pt = ints(&[5, g0, g1]);
                if f.eval(&pt) {
                    sols.push((g0, g1));
                }
            }
        }
        assert_eq!(sols, vec![(5, 2)]);
    }

    #[test]
    fn to_existential_formula_trace_unique() {
        let mut b = Builder::new(2);
        let x = b.input(0);
        let y = b.input(1);
        let m = b.max(x, y);
        let c = b.finish(vec![m]);
        let mut vars = VarSet::new(vec!["x".into(), "y".into()], vec![]).unwrap();
        let (gvars, f) = to_existential_formula(&c, &mut vars);
        assert_eq!(c.eval(&ints(&[3, 7])), ints(&[7]));
        let mut count = 0;
        for a in 2..=8i64 {
            for bb in 2..=8i64 {
                for mm in 2..=8i64 {
                    let pt = ints(&[3, 7, a, bb, mm]);
                    if f.eval(&pt) {
                        count += 1;
                        assert_eq!((a, bb, mm), (3, 7, 7));
                    }
                }
            }
        }
        assert_eq!(count, 1);
        assert_eq!(gvars.len(), 3);
    }

    #[test]
    fn simplify_preserves_semantics() {
        let fig = crate::formula::fig1();
        let c = characteristic_circuit(&fig);
        let s = c.simplify();
        assert!(s.gates.len() <= c.gates.len());
        for x in -8..=8i64 {
            for y in -8..=8i64 {
                assert_eq!(c.eval(&ints(&[x, y])), s.eval(&ints(&[x, y])));
            }
        }
    }
}
