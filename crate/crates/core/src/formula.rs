//! Quantifier-free Presburger formulas in negation normal form.
//!
//! A formula is a tree of `and`/`or` nodes over two kinds of atoms:
//! linear inequalities `Σ aᵢvᵢ + b ≥ 0` and modulo constraints
//! `Σ aᵢvᵢ ≡ r (mod M)` (or `≢`), with `M ≥ 1` and `0 ≤ r < M`.
//! Negation lives only in atom polarity: `¬(t ≥ 0)` is stored as
//! `−t−1 ≥ 0` and `¬(≡)` as `≢`.
//!
//! The surface syntax is an s-expression format:
//!
//! ```text
//! (spec (inputs x1 x2) (outputs y1 y2) <body>)
//! body ::= (and f…) | (or f…) | (not f)
//!        | (>= t 0) | (> t 0) | (= t 0)
//!        | (mod= t r M) | (mod!= t r M)
//! t    ::= (+ t…) | (* k v) | integer | variable
//! ```
//!
//! `>` and `=` are sugar (`t − 1 ≥ 0` and `t ≥ 0 ∧ −t ≥ 0`); `not` is
//! eliminated during parsing. The printer is canonical and bit-exact:
//! coefficients in declared-variable order, minimal integer text.

use crate::error::{Error, Result};
use crate::exactnum::{math_mod, Int};
use crate::Budgets;
use num_traits::{One, Signed, Zero};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

pub type Var = usize;

/// Declared variables: inputs first, then outputs in their synthesis order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VarSet {
    names: Vec<String>,
    inputs: usize,
}

impl VarSet {
    pub fn new(inputs: Vec<String>, outputs: Vec<String>) -> Result<Self> {
        let n = inputs.len();
        let names: Vec<String> = inputs.into_iter().chain(outputs).collect();
        for (i, a) in names.iter().enumerate() {
            for b in names.iter().skip(i + 1) {
                if a == b {
                    return Err(Error::Invalid(format!("duplicate variable {a}")));
                }
            }
        }
        Ok(VarSet { names, inputs: n })
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn num_inputs(&self) -> usize {
        self.inputs
    }

    pub fn num_outputs(&self) -> usize {
        self.names.len() - self.inputs
    }

    pub fn inputs(&self) -> std::ops::Range<Var> {
        0..self.inputs
    }

    pub fn outputs(&self) -> std::ops::Range<Var> {
        self.inputs..self.names.len()
    }

    pub fn is_output(&self, v: Var) -> bool {
        v >= self.inputs
    }

    pub fn name(&self, v: Var) -> &str {
        &self.names[v]
    }

    pub fn lookup(&self, name: &str) -> Option<Var> {
        self.names.iter().position(|n| n == name)
    }

    /// Append a fresh output variable, avoiding name collisions.
    pub fn push_output(&mut self, hint: &str) -> Var {
        let mut name = hint.to_string();
        let mut k = 0usize;
        while self.names.iter().any(|n| *n == name) {
            name = format!("{hint}_{k}");
            k += 1;
        }
        self.names.push(name);
        self.names.len() - 1
    }
}

/// Linear expression `Σ coeffs[v]·v + constant` with nonzero coefficients.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct LinExpr {
    pub coeffs: BTreeMap<Var, Int>,
    pub constant: Int,
}

impl LinExpr {
    pub fn constant(c: impl Into<Int>) -> Self {
        LinExpr { coeffs: BTreeMap::new(), constant: c.into() }
    }

    pub fn var(v: Var) -> Self {
        let mut coeffs = BTreeMap::new();
        coeffs.insert(v, Int::one());
        LinExpr { coeffs, constant: Int::zero() }
    }

    pub fn from_terms(terms: Vec<(Var, Int)>, constant: Int) -> Self {
        let mut e = LinExpr::constant(constant);
        for (v, c) in terms {
            e.add_term(v, c);
        }
        e
    }

    pub fn add_term(&mut self, v: Var, c: Int) {
        if c.is_zero() {
            return;
        }
        let entry = self.coeffs.entry(v).or_insert_with(Int::zero);
        *entry += c;
        if entry.is_zero() {
            self.coeffs.remove(&v);
        }
    }

    pub fn add(&self, other: &LinExpr) -> LinExpr {
        let mut out = self.clone();
        out.constant += &other.constant;
        for (v, c) in &other.coeffs {
            out.add_term(*v, c.clone());
        }
        out
    }

    pub fn scale(&self, k: &Int) -> LinExpr {
        if k.is_zero() {
            return LinExpr::constant(0);
        }
        LinExpr {
            coeffs: self.coeffs.iter().map(|(v, c)| (*v, c * k)).collect(),
            constant: &self.constant * k,
        }
    }

    pub fn neg(&self) -> LinExpr {
        self.scale(&Int::from(-1))
    }

    pub fn coeff(&self, v: Var) -> Int {
        self.coeffs.get(&v).cloned().unwrap_or_else(Int::zero)
    }

    pub fn mentions(&self, v: Var) -> bool {
        self.coeffs.contains_key(&v)
    }

    pub fn is_constant(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn eval(&self, point: &[Int]) -> Int {
        let mut acc = self.constant.clone();
        for (v, c) in &self.coeffs {
            acc += c * &point[*v];
        }
        acc
    }

    /// Substitute `v := replacement` (an integer-coefficient expression).
    pub fn subst(&self, v: Var, replacement: &LinExpr) -> LinExpr {
        match self.coeffs.get(&v) {
            None => self.clone(),
            Some(c) => {
                let c = c.clone();
                let mut out = self.clone();
                out.coeffs.remove(&v);
                out.add(&replacement.scale(&c))
            }
        }
    }
}

/// Modulo constraint `expr ≡ residue (mod modulus)` (or `≢` when `differs`).
/// The expression carries no constant: it is folded into the residue.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ModAtom {
    pub expr: LinExpr,
    pub residue: Int,
    pub modulus: Int,
    pub differs: bool,
}

impl ModAtom {
    pub fn new(mut expr: LinExpr, residue: Int, modulus: Int, differs: bool) -> Result<Self> {
        if !modulus.is_positive() {
            return Err(Error::Invalid(format!("modulus {modulus} must be >= 1")));
        }
        let residue = math_mod(&(residue - &expr.constant), &modulus);
        expr.constant = Int::zero();
        Ok(ModAtom { expr, residue, modulus, differs })
    }

    pub fn holds(&self, point: &[Int]) -> bool {
        let v = self.expr.eval(point);
        let ok = math_mod(&(v - &self.residue), &self.modulus).is_zero();
        ok != self.differs
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Atom {
    /// `expr >= 0`
    Ge(LinExpr),
    Mod(ModAtom),
}

impl Atom {
    pub fn top() -> Atom {
        Atom::Ge(LinExpr::constant(0))
    }

    pub fn bottom() -> Atom {
        Atom::Ge(LinExpr::constant(-1))
    }

    /// Integer negation: `¬(t ≥ 0)` is `−t−1 ≥ 0`; `¬(≡)` flips to `≢`.
    pub fn negate(&self) -> Atom {
        match self {
            Atom::Ge(e) => {
                let mut n = e.neg();
                n.constant -= 1;
                Atom::Ge(n)
            }
            Atom::Mod(m) => Atom::Mod(ModAtom { differs: !m.differs, ..m.clone() }),
        }
    }

    pub fn holds(&self, point: &[Int]) -> bool {
        match self {
            Atom::Ge(e) => !e.eval(point).is_negative(),
            Atom::Mod(m) => m.holds(point),
        }
    }

    pub fn mentions(&self, v: Var) -> bool {
        match self {
            Atom::Ge(e) => e.mentions(v),
            Atom::Mod(m) => m.expr.mentions(v),
        }
    }

    pub fn mentions_any(&self, vs: &[Var]) -> bool {
        vs.iter().any(|v| self.mentions(*v))
    }

    pub fn vars(&self) -> Vec<Var> {
        match self {
            Atom::Ge(e) => e.coeffs.keys().copied().collect(),
            Atom::Mod(m) => m.expr.coeffs.keys().copied().collect(),
        }
    }

    /// Truth value if the atom is variable-free.
    pub fn const_value(&self) -> Option<bool> {
        match self {
            Atom::Ge(e) if e.is_constant() => Some(!e.constant.is_negative()),
            Atom::Mod(m) if m.expr.is_constant() => {
                let hit = math_mod(&-&m.residue, &m.modulus).is_zero();
                Some(hit != m.differs)
            }
            _ => None,
        }
    }

    pub fn subst(&self, v: Var, replacement: &LinExpr) -> Atom {
        match self {
            Atom::Ge(e) => Atom::Ge(e.subst(v, replacement)),
            Atom::Mod(m) => {
                let e = m.expr.subst(v, replacement);
                ModAtom::new(e, m.residue.clone(), m.modulus.clone(), m.differs)
                    .map(Atom::Mod)
                    .expect("modulus unchanged")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Formula {
    Leaf(Atom),
    And(Vec<Formula>),
    Or(Vec<Formula>),
}

impl Formula {
    pub fn top() -> Formula {
        Formula::Leaf(Atom::top())
    }

    pub fn bottom() -> Formula {
        Formula::Leaf(Atom::bottom())
    }

    pub fn and(children: Vec<Formula>) -> Formula {
        match children.len() {
            0 => Formula::top(),
            1 => children.into_iter().next().unwrap(),
            _ => Formula::And(children),
        }
    }

    pub fn or(children: Vec<Formula>) -> Formula {
        match children.len() {
            0 => Formula::bottom(),
            1 => children.into_iter().next().unwrap(),
            _ => Formula::Or(children),
        }
    }

    /// De Morgan negation staying in NNF.
    pub fn negate(&self) -> Formula {
        match self {
            Formula::Leaf(a) => Formula::Leaf(a.negate()),
            Formula::And(cs) => Formula::Or(cs.iter().map(Formula::negate).collect()),
            Formula::Or(cs) => Formula::And(cs.iter().map(Formula::negate).collect()),
        }
    }

    pub fn eval(&self, point: &[Int]) -> bool {
        match self {
            Formula::Leaf(a) => a.holds(point),
            Formula::And(cs) => cs.iter().all(|c| c.eval(point)),
            Formula::Or(cs) => cs.iter().any(|c| c.eval(point)),
        }
    }

    pub fn node_count(&self) -> usize {
        match self {
            Formula::Leaf(_) => 1,
            Formula::And(cs) | Formula::Or(cs) => {
                1 + cs.iter().map(Formula::node_count).sum::<usize>()
            }
        }
    }

    pub fn atoms(&self) -> Vec<&Atom> {
        let mut out = vec![];
        self.visit_atoms(&mut |a| out.push(a));
        out
    }

    pub fn visit_atoms<'a>(&'a self, f: &mut impl FnMut(&'a Atom)) {
        match self {
            Formula::Leaf(a) => f(a),
            Formula::And(cs) | Formula::Or(cs) => cs.iter().for_each(|c| c.visit_atoms(f)),
        }
    }

    pub fn map_atoms(&self, f: &mut impl FnMut(&Atom) -> Formula) -> Formula {
        match self {
            Formula::Leaf(a) => f(a),
            Formula::And(cs) => Formula::And(cs.iter().map(|c| c.map_atoms(f)).collect()),
            Formula::Or(cs) => Formula::Or(cs.iter().map(|c| c.map_atoms(f)).collect()),
        }
    }

    pub fn mentions(&self, v: Var) -> bool {
        match self {
            Formula::Leaf(a) => a.mentions(v),
            Formula::And(cs) | Formula::Or(cs) => cs.iter().any(|c| c.mentions(v)),
        }
    }

    pub fn vars(&self) -> Vec<Var> {
        let mut set = std::collections::BTreeSet::new();
        self.visit_atoms(&mut |a| set.extend(a.vars()));
        set.into_iter().collect()
    }

    pub fn subst(&self, v: Var, replacement: &LinExpr) -> Formula {
        self.map_atoms(&mut |a| Formula::Leaf(a.subst(v, replacement)))
    }

    /// Constant folding and flattening; keeps NNF and atom identity.
    pub fn simplify(&self) -> Formula {
        match self {
            Formula::Leaf(a) => match a.const_value() {
                Some(true) => Formula::top(),
                Some(false) => Formula::bottom(),
                None => Formula::Leaf(a.clone()),
            },
            Formula::And(cs) => {
                let mut out: Vec<Formula> = vec![];
                for c in cs {
                    match c.simplify() {
                        Formula::Leaf(a) if a.const_value() == Some(true) => {}
                        Formula::Leaf(a) if a.const_value() == Some(false) => {
                            return Formula::bottom()
                        }
                        Formula::And(inner) => {
                            for f in inner {
                                if !out.contains(&f) {
                                    out.push(f);
                                }
                            }
                        }
                        other => {
                            if !out.contains(&other) {
                                out.push(other)
                            }
                        }
                    }
                }
                match prune_conjunction(out) {
                    Some(children) => Formula::and(children),
                    None => Formula::bottom(),
                }
            }
            Formula::Or(cs) => {
                let mut out: Vec<Formula> = vec![];
                for c in cs {
                    match c.simplify() {
                        Formula::Leaf(a) if a.const_value() == Some(false) => {}
                        Formula::Leaf(a) if a.const_value() == Some(true) => {
                            return Formula::top()
                        }
                        Formula::Or(inner) => {
                            for f in inner {
                                if !out.contains(&f) {
                                    out.push(f);
                                }
                            }
                        }
                        other => {
                            if !out.contains(&other) {
                                out.push(other)
                            }
                        }
                    }
                }
                Formula::or(out)
            }
        }
    }
}

/// Tighten the leaf atoms of a conjunction: inequalities over the same
/// linear term keep only the strongest lower/upper bound (detecting empty
/// sandwiches), modulo atoms over the same term and modulus merge or
/// contradict. Returns `None` when the conjunction is unsatisfiable by
/// these local rules alone.
fn prune_conjunction(children: Vec<Formula>) -> Option<Vec<Formula>> {
    use std::collections::btree_map::Entry;
    // key: coefficient map with the leading coefficient made positive;
    // bool = direction flipped
    let norm_key = |coeffs: &BTreeMap<Var, Int>| -> (BTreeMap<Var, Int>, bool) {
        let flip = coeffs.values().next().map(Int::is_negative).unwrap_or(false);
        if flip {
            (coeffs.iter().map(|(v, c)| (*v, -c)).collect(), true)
        } else {
            (coeffs.clone(), false)
        }
    };
    // per normalized term: (max lower bound, min upper bound) for t in
    // [lower, upper]
    let mut bounds: BTreeMap<BTreeMap<Var, Int>, (Option<Int>, Option<Int>)> = BTreeMap::new();
    // per (term, modulus): forced residue and excluded residues
    let mut mods: BTreeMap<(LinExpr, Int), (Option<Int>, BTreeSet<Int>)> = BTreeMap::new();
    let mut rest: Vec<Formula> = vec![];
    for c in children {
        match &c {
            Formula::Leaf(Atom::Ge(e)) if !e.is_constant() => {
                let (key, flipped) = norm_key(&e.coeffs);
                let slot = bounds.entry(key).or_insert((None, None));
                if flipped {
                    // −t + b ≥ 0 ⟺ t ≤ b
                    let b = e.constant.clone();
                    slot.1 = Some(match slot.1.take() {
                        Some(prev) => prev.min(b),
                        None => b,
                    });
                } else {
                    // t + b ≥ 0 ⟺ t ≥ −b
                    let l = -e.constant.clone();
                    slot.0 = Some(match slot.0.take() {
                        Some(prev) => prev.max(l),
                        None => l,
                    });
                }
            }
            Formula::Leaf(Atom::Mod(m)) => {
                let key = (m.expr.clone(), m.modulus.clone());
                match mods.entry(key) {
                    Entry::Vacant(v) => {
                        if m.differs {
                            v.insert((None, BTreeSet::from([m.residue.clone()])));
                        } else {
                            v.insert((Some(m.residue.clone()), BTreeSet::new()));
                        }
                    }
                    Entry::Occupied(mut o) => {
                        let (forced, excluded) = o.get_mut();
                        if m.differs {
                            if forced.as_ref() == Some(&m.residue) {
                                return None;
                            }
                            excluded.insert(m.residue.clone());
                        } else {
                            match forced {
                                Some(r) if *r != m.residue => return None,
                                _ => {
                                    if excluded.contains(&m.residue) {
                                        return None;
                                    }
                                    *forced = Some(m.residue.clone());
                                }
                            }
                        }
                    }
                }
            }
            _ => rest.push(c),
        }
    }
    // an atom impossible under the collected bounds/residues?
    let contradicts = |a: &Atom| -> bool {
        match a {
            Atom::Ge(e) if !e.is_constant() => {
                let (key, flipped) = norm_key(&e.coeffs);
                let Some((lower, upper)) = bounds.get(&key) else { return false };
                if flipped {
                    // t ≤ b impossible when the forced lower bound exceeds b
                    matches!(lower, Some(l) if *l > e.constant)
                } else {
                    // t ≥ −b impossible when the forced upper bound is below
                    matches!(upper, Some(u) if -&e.constant > *u)
                }
            }
            Atom::Mod(m) => {
                let Some((forced, excluded)) = mods.get(&(m.expr.clone(), m.modulus.clone()))
                else {
                    return false;
                };
                if m.differs {
                    forced.as_ref() == Some(&m.residue)
                } else {
                    excluded.contains(&m.residue)
                        || matches!(forced, Some(r) if *r != m.residue)
                }
            }
            _ => false,
        }
    };
    // constraint propagation into disjunctive children: drop impossible
    // leaf disjuncts, fail the conjunction when a disjunction dies
    let mut propagated: Vec<Formula> = vec![];
    for c in rest {
        match c {
            Formula::Or(items) => {
                let kept: Vec<Formula> = items
                    .into_iter()
                    .filter(|it| match it {
                        Formula::Leaf(a) => !contradicts(a),
                        _ => true,
                    })
                    .collect();
                if kept.is_empty() {
                    return None;
                }
                propagated.push(Formula::or(kept));
            }
            other => propagated.push(other),
        }
    }
    let rest = propagated;

    let mut out = vec![];
    for (key, (lower, upper)) in &bounds {
        if let (Some(l), Some(u)) = (lower, upper) {
            if l > u {
                return None;
            }
        }
        if let Some(l) = lower {
            out.push(Formula::Leaf(Atom::Ge(LinExpr { coeffs: key.clone(), constant: -l })));
        }
        if let Some(u) = upper {
            let coeffs: BTreeMap<Var, Int> = key.iter().map(|(v, c)| (*v, -c)).collect();
            out.push(Formula::Leaf(Atom::Ge(LinExpr { coeffs, constant: u.clone() })));
        }
    }
    for ((expr, modulus), (forced, excluded)) in mods {
        match forced {
            Some(r) => {
                // consistent exclusions are implied and dropped
                out.push(Formula::Leaf(Atom::Mod(ModAtom {
                    expr,
                    residue: r,
                    modulus,
                    differs: false,
                })));
            }
            None => {
                if Int::from(excluded.len() as u64) >= modulus {
                    return None; // every residue excluded
                }
                for r in excluded {
                    out.push(Formula::Leaf(Atom::Mod(ModAtom {
                        expr: expr.clone(),
                        residue: r,
                        modulus: modulus.clone(),
                        differs: true,
                    })));
                }
            }
        }
    }
    out.extend(rest);
    Some(out)
}

/// A formula together with its declared input/output variables.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpecFormula {
    pub vars: VarSet,
    pub body: Formula,
}

/// Size metric: tree nodes + distinct variables + total bit-length of the
/// constants in the leaves.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SizeMetric {
    pub node_count: usize,
    pub var_count: usize,
    pub const_bits: usize,
}

impl SizeMetric {
    pub fn total(&self) -> usize {
        self.node_count + self.var_count + self.const_bits
    }
}

fn bits(x: &Int) -> usize {
    (x.bits() as usize).max(1)
}

pub fn size(f: &Formula) -> SizeMetric {
    let mut const_bits = 0usize;
    f.visit_atoms(&mut |a| match a {
        Atom::Ge(e) => {
            const_bits += bits(&e.constant);
            const_bits += e.coeffs.values().map(bits).sum::<usize>();
        }
        Atom::Mod(m) => {
            const_bits += bits(&m.residue) + bits(&m.modulus);
            const_bits += m.expr.coeffs.values().map(bits).sum::<usize>();
        }
    });
    SizeMetric { node_count: f.node_count(), var_count: f.vars().len(), const_bits }
}

/// Subtrees rooted at ∧-nodes with no ∧-labeled ancestor.
pub fn maximal_conjunctive_subformulas(f: &Formula) -> Vec<&Formula> {
    let mut out = vec![];
    fn walk<'a>(f: &'a Formula, out: &mut Vec<&'a Formula>) {
        match f {
            Formula::And(_) => out.push(f),
            Formula::Or(cs) => cs.iter().for_each(|c| walk(c, out)),
            Formula::Leaf(_) => {}
        }
    }
    walk(f, &mut out);
    out
}

/// The ∨-decomposition of a formula into units whose root is not ∨: each
/// unit is either a maximal conjunctive subformula or a bare leaf. The
/// tameness checker and the one-output synthesizer treat a bare leaf as a
/// singleton conjunction.
pub fn disjunctive_units(f: &Formula) -> Vec<&Formula> {
    let mut out = vec![];
    fn walk<'a>(f: &'a Formula, out: &mut Vec<&'a Formula>) {
        match f {
            Formula::Or(cs) => cs.iter().for_each(|c| walk(c, out)),
            other => out.push(other),
        }
    }
    walk(f, &mut out);
    out
}

/// DNF expansion: a list of conjunctions of atoms, semantically equivalent
/// to `f`. Trivially false conjuncts are dropped; the disjunct budget turns
/// the worst-case exponential blowup into a resource error.
pub fn to_dnf(f: &Formula, budgets: &Budgets) -> Result<Vec<Vec<Atom>>> {
    fn go(f: &Formula, budget: usize) -> Result<Vec<Vec<Atom>>> {
        match f {
            Formula::Leaf(a) => match a.const_value() {
                Some(false) => Ok(vec![]),
                Some(true) => Ok(vec![vec![]]),
                None => Ok(vec![vec![a.clone()]]),
            },
            Formula::Or(cs) => {
                let mut out = vec![];
                for c in cs {
                    out.extend(go(c, budget)?);
                    if out.len() > budget {
                        return Err(Error::resource("dnf disjuncts", budget as u64));
                    }
                }
                Ok(out)
            }
            Formula::And(cs) => {
                let mut acc: Vec<Vec<Atom>> = vec![vec![]];
                for c in cs {
                    let rhs = go(c, budget)?;
                    let mut next = Vec::with_capacity(acc.len() * rhs.len().max(1));
                    for a in &acc {
                        for b in &rhs {
                            let mut merged = a.clone();
                            for atom in b {
                                if !merged.contains(atom) {
                                    merged.push(atom.clone());
                                }
                            }
                            if !conjunct_trivially_false(&merged) {
                                next.push(merged);
                            }
                            if next.len() > budget {
                                return Err(Error::resource("dnf disjuncts", budget as u64));
                            }
                        }
                    }
                    acc = next;
                }
                Ok(acc)
            }
        }
    }
    go(&f.simplify(), budgets.dnf_disjuncts)
}

fn conjunct_trivially_false(conj: &[Atom]) -> bool {
    for (i, a) in conj.iter().enumerate() {
        if a.const_value() == Some(false) {
            return true;
        }
        if let Atom::Mod(ma) = a {
            for b in conj.iter().skip(i + 1) {
                if let Atom::Mod(mb) = b {
                    if ma.expr == mb.expr && ma.modulus == mb.modulus {
                        let same = ma.residue == mb.residue;
                        let clash = match (ma.differs, mb.differs) {
                            (false, false) => !same,
                            (false, true) | (true, false) => same,
                            (true, true) => false,
                        };
                        if clash {
                            return true;
                        }
                    }
                }
            }
        }
    }
    false
}

/// Replace every modulo constraint that mentions an output variable by an
/// equality with a fresh output: `t ≡ r (mod M)` becomes `t = M·y' + r`,
/// rendered as the two inequalities `t − M·y' − r ≥ 0 ∧ −t + M·y' + r ≥ 0`.
/// A `≢` constraint is first expanded into the disjunction of its `M−1`
/// complementary residues. The returned formula has no output-mentioning
/// modulo constraints; fresh outputs are appended after the existing ones.
pub fn remove_output_modulos(spec: &SpecFormula) -> SpecFormula {
    let mut vars = spec.vars.clone();
    let outputs: Vec<Var> = spec.vars.outputs().collect();
    let mut counter = 0usize;
    let body = spec.body.map_atoms(&mut |a| match a {
        Atom::Mod(m) if m.expr.coeffs.keys().any(|v| outputs.contains(v)) => {
            let residues: Vec<Int> = if m.differs {
                let mut r = Int::zero();
                let mut out = vec![];
                while r < m.modulus {
                    if r != m.residue {
                        out.push(r.clone());
                    }
                    r += 1;
                }
                out
            } else {
                vec![m.residue.clone()]
            };
            let mut branches = vec![];
            for r in residues {
                let fresh = vars.push_output(&format!("q{counter}"));
                counter += 1;
                // t - M*fresh - r >= 0  and  -t + M*fresh + r >= 0
                let mut pos = m.expr.clone();
                pos.add_term(fresh, -m.modulus.clone());
                pos.constant -= &r;
                let neg = pos.neg();
                branches.push(Formula::And(vec![
                    Formula::Leaf(Atom::Ge(pos)),
                    Formula::Leaf(Atom::Ge(neg)),
                ]));
            }
            Formula::or(branches)
        }
        other => Formula::Leaf(other.clone()),
    });
    SpecFormula { vars, body }
}

// ---------------------------------------------------------------------------
// Parser
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
enum SExpr {
    Atom(String, usize, usize),
    List(Vec<SExpr>, usize, usize),
}

impl SExpr {
    fn pos(&self) -> (usize, usize) {
        match self {
            SExpr::Atom(_, l, c) | SExpr::List(_, l, c) => (*l, *c),
        }
    }
}

struct Lexer<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    line: usize,
    col: usize,
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Self {
        Lexer { chars: src.chars().peekable(), line: 1, col: 1 }
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next()?;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn skip_ws(&mut self) {
        while let Some(&c) = self.chars.peek() {
            if c == ';' {
                while let Some(c) = self.bump() {
                    if c == '\n' {
                        break;
                    }
                }
            } else if c.is_whitespace() {
                self.bump();
            } else {
                break;
            }
        }
    }

    fn parse_expr(&mut self) -> Result<SExpr> {
        self.skip_ws();
        let (line, col) = (self.line, self.col);
        match self.chars.peek() {
            None => Err(Error::parse(line, col, "unexpected end of input")),
            Some('(') => {
                self.bump();
                let mut items = vec![];
                loop {
                    self.skip_ws();
                    match self.chars.peek() {
                        Some(')') => {
                            self.bump();
                            return Ok(SExpr::List(items, line, col));
                        }
                        None => return Err(Error::parse(self.line, self.col, "missing ')'")),
                        _ => items.push(self.parse_expr()?),
                    }
                }
            }
            Some(')') => Err(Error::parse(line, col, "unexpected ')'")),
            Some(_) => {
                let mut tok = String::new();
                while let Some(&c) = self.chars.peek() {
                    if c.is_whitespace() || c == '(' || c == ')' || c == ';' {
                        break;
                    }
                    tok.push(c);
                    self.bump();
                }
                Ok(SExpr::Atom(tok, line, col))
            }
        }
    }

    fn finish(&mut self) -> Result<()> {
        self.skip_ws();
        if self.chars.peek().is_some() {
            return Err(Error::parse(self.line, self.col, "trailing input"));
        }
        Ok(())
    }
}

fn expect_atom(e: &SExpr) -> Result<&str> {
    match e {
        SExpr::Atom(s, _, _) => Ok(s),
        SExpr::List(_, l, c) => Err(Error::parse(*l, *c, "expected symbol")),
    }
}

fn parse_int(e: &SExpr) -> Result<Int> {
    let (l, c) = e.pos();
    let s = expect_atom(e)?;
    s.parse::<Int>().map_err(|_| Error::parse(l, c, format!("expected integer, got {s}")))
}

fn parse_term(e: &SExpr, vars: &VarSet, acc: &mut LinExpr) -> Result<()> {
    match e {
        SExpr::Atom(s, l, c) => {
            if let Ok(k) = s.parse::<Int>() {
                acc.constant += k;
            } else if let Some(v) = vars.lookup(s) {
                acc.add_term(v, Int::one());
            } else {
                return Err(Error::parse(*l, *c, format!("unknown variable {s}")));
            }
            Ok(())
        }
        SExpr::List(items, l, c) => {
            if items.is_empty() {
                return Err(Error::parse(*l, *c, "empty term"));
            }
            match expect_atom(&items[0])? {
                "+" => {
                    for it in &items[1..] {
                        parse_term(it, vars, acc)?;
                    }
                    Ok(())
                }
                "*" => {
                    if items.len() != 3 {
                        return Err(Error::parse(*l, *c, "(* k v) takes exactly two arguments"));
                    }
                    let k = parse_int(&items[1])?;
                    let name = expect_atom(&items[2])?;
                    let (vl, vc) = items[2].pos();
                    let v = vars
                        .lookup(name)
                        .ok_or_else(|| Error::parse(vl, vc, format!("unknown variable {name}")))?;
                    acc.add_term(v, k);
                    Ok(())
                }
                op => Err(Error::parse(*l, *c, format!("unknown term operator {op}"))),
            }
        }
    }
}

fn term_of(e: &SExpr, vars: &VarSet) -> Result<LinExpr> {
    let mut acc = LinExpr::constant(0);
    parse_term(e, vars, &mut acc)?;
    Ok(acc)
}

fn parse_body(e: &SExpr, vars: &VarSet, negate: bool) -> Result<Formula> {
    let (l, c) = e.pos();
    let items = match e {
        SExpr::List(items, _, _) if !items.is_empty() => items,
        _ => return Err(Error::parse(l, c, "expected formula")),
    };
    let head = expect_atom(&items[0])?;
    let args = &items[1..];
    let expect_zero = |e: &SExpr| -> Result<()> {
        let k = parse_int(e)?;
        if !k.is_zero() {
            let (l, c) = e.pos();
            return Err(Error::parse(l, c, "comparisons must be against 0"));
        }
        Ok(())
    };
    match head {
        "and" | "or" => {
            if args.is_empty() {
                return Err(Error::parse(l, c, format!("({head}) needs at least one child")));
            }
            let children: Result<Vec<Formula>> =
                args.iter().map(|a| parse_body(a, vars, negate)).collect();
            let children = children?;
            let conj = (head == "and") != negate;
            Ok(if conj { Formula::and(children) } else { Formula::or(children) })
        }
        "not" => {
            if args.len() != 1 {
                return Err(Error::parse(l, c, "(not f) takes exactly one argument"));
            }
            parse_body(&args[0], vars, !negate)
        }
        ">=" | ">" => {
            if args.len() != 2 {
                return Err(Error::parse(l, c, format!("({head} t 0) takes two arguments")));
            }
            expect_zero(&args[1])?;
            let mut t = term_of(&args[0], vars)?;
            if head == ">" {
                t.constant -= 1;
            }
            let atom = Atom::Ge(t);
            Ok(Formula::Leaf(if negate { atom.negate() } else { atom }))
        }
        "=" => {
            if args.len() != 2 {
                return Err(Error::parse(l, c, "(= t 0) takes two arguments"));
            }
            expect_zero(&args[1])?;
            let t = term_of(&args[0], vars)?;
            let a = Atom::Ge(t.clone());
            let b = Atom::Ge(t.neg());
            Ok(if negate {
                Formula::Or(vec![Formula::Leaf(a.negate()), Formula::Leaf(b.negate())])
            } else {
                Formula::And(vec![Formula::Leaf(a), Formula::Leaf(b)])
            })
        }
        "mod=" | "mod!=" => {
            if args.len() != 3 {
                return Err(Error::parse(l, c, format!("({head} t r M) takes three arguments")));
            }
            let t = term_of(&args[0], vars)?;
            let r = parse_int(&args[1])?;
            let m = parse_int(&args[2])?;
            if !m.is_positive() {
                let (ml, mc) = args[2].pos();
                return Err(Error::parse(ml, mc, format!("modulus {m} must be >= 1")));
            }
            if r.is_negative() || r >= m {
                let (rl, rc) = args[1].pos();
                return Err(Error::parse(rl, rc, format!("residue {r} out of [0,{m})")));
            }
            let differs = (head == "mod!=") != negate;
            let atom = Atom::Mod(ModAtom::new(t, r, m, differs).map_err(|e| match e {
                Error::Invalid(msg) => Error::parse(l, c, msg),
                other => other,
            })?);
            Ok(Formula::Leaf(atom))
        }
        op => Err(Error::parse(l, c, format!("unknown connective {op}"))),
    }
}

fn parse_name_list(e: &SExpr, expect_head: &str) -> Result<Vec<String>> {
    let (l, c) = e.pos();
    let items = match e {
        SExpr::List(items, _, _) if !items.is_empty() => items,
        _ => return Err(Error::parse(l, c, format!("expected ({expect_head} ...)"))),
    };
    if expect_atom(&items[0])? != expect_head {
        return Err(Error::parse(l, c, format!("expected ({expect_head} ...)")));
    }
    items[1..].iter().map(|n| expect_atom(n).map(str::to_string)).collect()
}

/// Parse the `(spec (inputs ...) (outputs ...) body)` surface syntax into an
/// NNF [`SpecFormula`]. Negation is eliminated during parsing by De Morgan
/// and atom flipping.
pub fn parse(text: &str) -> Result<SpecFormula> {
    let mut lx = Lexer::new(text);
    let top = lx.parse_expr()?;
    lx.finish()?;
    let (l, c) = top.pos();
    let items = match &top {
        SExpr::List(items, _, _) if items.len() == 4 => items,
        _ => return Err(Error::parse(l, c, "expected (spec (inputs ...) (outputs ...) body)")),
    };
    if expect_atom(&items[0])? != "spec" {
        return Err(Error::parse(l, c, "expected (spec ...)"));
    }
    let inputs = parse_name_list(&items[1], "inputs")?;
    let outputs = parse_name_list(&items[2], "outputs")?;
    let vars = VarSet::new(inputs, outputs).map_err(|e| match e {
        Error::Invalid(msg) => Error::parse(l, c, msg),
        other => other,
    })?;
    let body = parse_body(&items[3], &vars, false)?;
    Ok(SpecFormula { vars, body })
}

// ---------------------------------------------------------------------------
// Canonical printer
// ---------------------------------------------------------------------------

fn print_expr(e: &LinExpr, vars: &VarSet, with_constant: bool, out: &mut String) {
    let mut parts: Vec<String> = vec![];
    for (v, c) in &e.coeffs {
        if c.is_one() {
            parts.push(vars.name(*v).to_string());
        } else {
            parts.push(format!("(* {} {})", c, vars.name(*v)));
        }
    }
    if with_constant && (!e.constant.is_zero() || parts.is_empty()) {
        parts.push(e.constant.to_string());
    }
    if parts.is_empty() {
        parts.push("0".to_string());
    }
    if parts.len() == 1 {
        out.push_str(&parts[0]);
    } else {
        let _ = write!(out, "(+ {})", parts.join(" "));
    }
}

fn print_formula(f: &Formula, vars: &VarSet, out: &mut String) {
    match f {
        Formula::Leaf(Atom::Ge(e)) => {
            out.push_str("(>= ");
            print_expr(e, vars, true, out);
            out.push_str(" 0)");
        }
        Formula::Leaf(Atom::Mod(m)) => {
            let _ = write!(out, "({} ", if m.differs { "mod!=" } else { "mod=" });
            print_expr(&m.expr, vars, false, out);
            let _ = write!(out, " {} {})", m.residue, m.modulus);
        }
        Formula::And(cs) | Formula::Or(cs) => {
            out.push_str(if matches!(f, Formula::And(_)) { "(and" } else { "(or" });
            for c in cs {
                out.push(' ');
                print_formula(c, vars, out);
            }
            out.push(')');
        }
    }
}

/// Canonical bit-exact printer; `parse(print(f)) == f`.
pub fn print(spec: &SpecFormula) -> String {
    let mut out = String::from("(spec (inputs");
    for v in spec.vars.inputs() {
        let _ = write!(out, " {}", spec.vars.name(v));
    }
    out.push_str(") (outputs");
    for v in spec.vars.outputs() {
        let _ = write!(out, " {}", spec.vars.name(v));
    }
    out.push_str(") ");
    print_formula(&spec.body, &spec.vars, &mut out);
    out.push(')');
    out
}

/// Print a bare formula against a variable table (diagnostics).
pub fn print_body(f: &Formula, vars: &VarSet) -> String {
    let mut out = String::new();
    print_formula(f, vars, &mut out);
    out
}

#[cfg(test)]
pub(crate) fn fig1() -> SpecFormula {
    parse(
        "(spec (inputs x) (outputs y) \
         (or (and (>= (+ (* 3 x) -2) 0) (mod= (+ (* 4 x) (* 5 y)) 2 3)) \
             (and (>= (+ (* -2 x) (* 5 y) 7) 0) (mod= y 5 6))))",
    )
    .unwrap()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_single_atom() {
        let s = parse("(spec (inputs x) (outputs) (>= (+ (* 3 x) -2) 0))").unwrap();
        match &s.body {
            Formula::Leaf(Atom::Ge(e)) => {
                assert_eq!(e.coeff(0), Int::from(3));
                assert_eq!(e.constant, Int::from(-2));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn parse_not_inequality() {
        let s = parse("(spec (inputs x) (outputs) (not (>= x 0)))").unwrap();
        // ¬(x ≥ 0) = −x−1 ≥ 0
        match &s.body {
            Formula::Leaf(Atom::Ge(e)) => {
                assert_eq!(e.coeff(0), Int::from(-1));
                assert_eq!(e.constant, Int::from(-1));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn fig1_shape_and_size() {
        let s = fig1();
        let m = size(&s.body);
        assert_eq!(m.node_count, 7);
        assert_eq!(m.var_count, 2);
        assert!(m.const_bits >= 1);
        // And(a,a) vs a: node count grows by 2 (tree, not DAG)
        let a = parse("(spec (inputs x) (outputs) (>= x 0))").unwrap();
        let aa = Formula::And(vec![a.body.clone(), a.body.clone()]);
        assert_eq!(aa.node_count(), a.body.node_count() + 2);
    }

    #[test]
    fn fig1_eval() {
        let s = fig1();
        assert!(s.body.eval(&[2.into(), 5.into()]));
        assert!(!s.body.eval(&[1.into(), 1.into()]));
    }

    #[test]
    fn mod_eval_negative_point() {
        let s = parse("(spec (inputs) (outputs y) (mod= y 5 6))").unwrap();
        assert!(s.body.eval(&[Int::from(-1)]));
        assert!(!s.body.eval(&[Int::from(0)]));
    }

    #[test]
    fn residue_range_checked() {
        assert!(parse("(spec (inputs x) (outputs) (mod= x 7 6))").is_err());
        assert!(parse("(spec (inputs x) (outputs) (mod= x -1 6))").is_err());
        assert!(parse("(spec (inputs x) (outputs) (mod= x 0 0))").is_err());
    }

    #[test]
    fn parse_errors_have_positions() {
        match parse("(spec (inputs x) (outputs)\n  (>= z 0))") {
            Err(Error::Parse { line: 2, .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn strict_and_equality_sugar() {
        let s = parse("(spec (inputs x) (outputs) (> x 0))").unwrap();
        match &s.body {
            Formula::Leaf(Atom::Ge(e)) => assert_eq!(e.constant, Int::from(-1)),
            other => panic!("unexpected {other:?}"),
        }
        let s = parse("(spec (inputs x) (outputs) (= x 0))").unwrap();
        assert!(matches!(&s.body, Formula::And(cs) if cs.len() == 2));
        assert!(s.body.eval(&[0.into()]));
        assert!(!s.body.eval(&[1.into()]));
    }

    #[test]
    fn roundtrip_fig1() {
        let s = fig1();
        let text = print(&s);
        let back = parse(&text).unwrap();
        assert_eq!(back, s);
        assert_eq!(print(&back), text);
    }

    #[test]
    fn polarity_flip_involution() {
        let s = fig1();
        for a in s.body.atoms() {
            assert_eq!(&a.negate().negate(), a);
        }
    }

    #[test]
    fn maximal_conjuncts() {
        let s = fig1();
        assert_eq!(maximal_conjunctive_subformulas(&s.body).len(), 2);
        let leaf = parse("(spec (inputs x) (outputs) (>= x 0))").unwrap();
        assert!(maximal_conjunctive_subformulas(&leaf.body).is_empty());
        // inner ∧ under an outer ∧ is not maximal
        let nested = parse(
            "(spec (inputs x) (outputs) (and (>= x 0) (or (>= (+ x -1) 0) (and (>= (+ x -2) 0) (> (+ x -3) 0)))))",
        )
        .unwrap();
        let ms = maximal_conjunctive_subformulas(&nested.body);
        assert_eq!(ms.len(), 1);
        assert_eq!(ms[0], &nested.body);
    }

    #[test]
    fn dnf_examples() {
        let b = Budgets::default();
        let s = parse("(spec (inputs x) (outputs) (or (>= x 0) (> x 0)))").unwrap();
        assert_eq!(to_dnf(&s.body, &b).unwrap().len(), 2);
        let s =
            parse("(spec (inputs x y) (outputs) (and (or (>= x 0) (>= y 0)) (>= (+ x y) 0)))")
                .unwrap();
        let d = to_dnf(&s.body, &b).unwrap();
        assert_eq!(d.len(), 2);
        assert!(d.iter().all(|c| c.len() == 2));
        let fig = fig1();
        assert_eq!(to_dnf(&fig.body, &b).unwrap().len(), 2);
    }

    #[test]
    fn dnf_budget() {
        let mut b = Budgets::default();
        b.dnf_disjuncts = 3;
        let s = parse(
            "(spec (inputs x y) (outputs) (and (or (>= x 0) (mod= x 1 2)) (or (>= (+ y -1) 0) (mod= y 1 3)) (or (>= (+ x -2) 0) (mod= y 0 5))))",
        )
        .unwrap();
        assert!(matches!(to_dnf(&s.body, &b), Err(Error::Resource { .. })));
    }

    #[test]
    fn dnf_eval_agreement_exhaustive() {
        let b = Budgets::default();
        let specs = [
            fig1(),
            parse("(spec (inputs x y) (outputs) (or (and (>= x 0) (mod= y 1 2)) (>= (+ x y -3) 0)))").unwrap(),
            parse("(spec (inputs x y z) (outputs) (and (or (>= (+ x (* -1 y)) 0) (mod!= z 0 3)) (or (>= z 0) (>= (+ y -2) 0))))").unwrap(),
        ];
        for s in &specs {
            let d = to_dnf(&s.body, &b).unwrap();
            let nvars = s.vars.len();
            let mut point = vec![Int::from(-5); nvars];
            'points: loop {
                let lhs = s.body.eval(&point);
                let rhs = d.iter().any(|conj| conj.iter().all(|a| a.holds(&point)));
                assert_eq!(lhs, rhs, "disagreement at {point:?}");
                let mut i = 0;
                loop {
                    if i == nvars {
                        break 'points;
                    }
                    point[i] += 1;
                    if point[i] <= Int::from(5) {
                        break;
                    }
                    point[i] = Int::from(-5);
                    i += 1;
                }
            }
        }
    }

    #[test]
    fn remove_output_modulos_equality_pair() {
        let s = parse("(spec (inputs) (outputs y) (mod= y 2 3))").unwrap();
        let out = remove_output_modulos(&s);
        assert_eq!(out.vars.num_outputs(), 2);
        // y − 3y′ − 2 ≥ 0 ∧ −y + 3y′ + 2 ≥ 0
        match &out.body {
            Formula::And(cs) => {
                assert_eq!(cs.len(), 2);
                match (&cs[0], &cs[1]) {
                    (Formula::Leaf(Atom::Ge(p)), Formula::Leaf(Atom::Ge(n))) => {
                        assert_eq!(p.coeff(0), Int::one());
                        assert_eq!(p.coeff(1), Int::from(-3));
                        assert_eq!(p.constant, Int::from(-2));
                        assert_eq!(n, &p.neg());
                    }
                    other => panic!("unexpected {other:?}"),
                }
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn remove_output_modulos_untouched_without_output_mods() {
        let s = parse("(spec (inputs x) (outputs y) (and (mod= x 1 2) (>= y 0)))").unwrap();
        let out = remove_output_modulos(&s);
        assert_eq!(out, s);
    }

    /// For each point over the original variables, the rewrite is satisfied
    /// by some fresh-output extension iff the original formula held.
    #[test]
    fn remove_output_modulos_projection_agreement() {
        for text in [
            "(spec (inputs x) (outputs y) (mod!= y 0 2))",
            "(spec (inputs x) (outputs y) (and (mod= y 1 3) (>= (+ y (* -1 x)) 0)))",
        ] {
            let s = parse(text).unwrap();
            let out = remove_output_modulos(&s);
            let fresh = out.vars.len() - s.vars.len();
            for x in -10..=10i64 {
                for y in -10..=10i64 {
                    let orig = s.body.eval(&[x.into(), y.into()]);
                    let (lo, hi) = (-12i64, 12i64);
                    let mut ext = vec![lo; fresh];
                    let mut found = false;
                    'scan: loop {
                        let mut point: Vec<Int> = vec![x.into(), y.into()];
                        point.extend(ext.iter().map(|&e| Int::from(e)));
                        if out.body.eval(&point) {
                            found = true;
                            break;
                        }
                        let mut i = 0;
                        loop {
                            if i == fresh {
                                break 'scan;
                            }
                            ext[i] += 1;
                            if ext[i] <= hi {
                                break;
                            }
                            ext[i] = lo;
                            i += 1;
                        }
                    }
                    assert_eq!(orig, found, "x={x} y={y}");
                }
            }
        }
    }

    #[test]
    fn simplify_folds_constants() {
        let s = parse("(spec (inputs x) (outputs) (and (>= 0 0) (>= x 0)))").unwrap();
        assert_eq!(s.body.simplify(), parse("(spec (inputs x) (outputs) (>= x 0))").unwrap().body);
        let s = parse("(spec (inputs x) (outputs) (or (>= 0 0) (>= x 0)))").unwrap();
        assert_eq!(s.body.simplify(), Formula::top());
    }
}
