//! Circuit analyses and the Boolean-synthesis reduction.
//!
//! * Modular assignments: a single-input circuit is compiled, gate by
//!   gate, into a piecewise representation `f(x) = (c·x + d)/m` selected by
//!   the residue of `x` mod `m` and an interval — the abstraction behind
//!   the period law `lcm(D)^e` for sets defined by circuits with `e`
//!   div-gates over moduli `D`.
//! * The Chinese-remainder encoding between Boolean Π₂ functional synthesis
//!   and one-input/one-output Presburger synthesis: Boolean assignments are
//!   coded in the residues of a single integer with respect to distinct
//!   primes.

use crate::circuit::{rewrite_div_composite, Circuit, DivRewrite, Gate};
use crate::error::{Error, Result};
use crate::exactnum::{lcm_all, math_mod, Int};
use crate::formula::{Atom, Formula, LinExpr, ModAtom, SpecFormula, VarSet};
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

// ---------------------------------------------------------------------------
// Modular assignments
// ---------------------------------------------------------------------------

/// Interval with optional endpoints (closed where present).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Span {
    pub lo: Option<Int>,
    pub hi: Option<Int>,
}

impl Span {
    pub fn all() -> Span {
        Span { lo: None, hi: None }
    }

    pub fn contains(&self, x: &Int) -> bool {
        self.lo.as_ref().is_none_or(|l| l <= x) && self.hi.as_ref().is_none_or(|h| x <= h)
    }

    fn is_empty(&self) -> bool {
        match (&self.lo, &self.hi) {
            (Some(l), Some(h)) => l > h,
            _ => false,
        }
    }

    fn intersect(&self, other: &Span) -> Span {
        let lo = match (&self.lo, &other.lo) {
            (Some(a), Some(b)) => Some(a.clone().max(b.clone())),
            (Some(a), None) => Some(a.clone()),
            (None, b) => b.clone(),
        };
        let hi = match (&self.hi, &other.hi) {
            (Some(a), Some(b)) => Some(a.clone().min(b.clone())),
            (Some(a), None) => Some(a.clone()),
            (None, b) => b.clone(),
        };
        Span { lo, hi }
    }
}

/// One entry of an `m`-modular assignment: on `x ≡ residue (mod m)` within
/// `span`, the function evaluates to `(c·x + d)/m`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AssignmentEntry {
    pub residue: Int,
    pub span: Span,
    pub c: Int,
    pub d: Int,
}

/// Piecewise representation of a single-input circuit: for every `x` the
/// first matching entry applies, and `(c·x + d)` is divisible by `m` on the
/// matched domain. Construction keeps the per-residue domains disjoint and
/// total, so the matching entry is in fact unique.
#[derive(Debug, Clone)]
pub struct ModularAssignment {
    pub modulus: Int,
    pub entries: Vec<AssignmentEntry>,
}

impl ModularAssignment {
    fn constant(m: &Int, value: Int) -> Self {
        let entries = residues(m)
            .map(|r| AssignmentEntry {
                residue: r,
                span: Span::all(),
                c: Int::zero(),
                d: &value * m,
            })
            .collect();
        ModularAssignment { modulus: m.clone(), entries }
    }

    pub fn eval(&self, x: &Int) -> Int {
        for e in &self.entries {
            if math_mod(x, &self.modulus) == e.residue && e.span.contains(x) {
                let num = &e.c * x + &e.d;
                debug_assert!(num.is_multiple_of(&self.modulus), "divisibility certificate");
                return num / &self.modulus;
            }
        }
        panic!("modular assignment is not total at {x}");
    }

    /// Lift to a larger modulus (a multiple of the current one).
    fn lift(&self, target: &Int) -> ModularAssignment {
        assert!(target.is_multiple_of(&self.modulus));
        let mu = target / &self.modulus;
        let mut entries = vec![];
        for e in &self.entries {
            let mut k = Int::zero();
            while k < mu {
                entries.push(AssignmentEntry {
                    residue: &e.residue + &k * &self.modulus,
                    span: e.span.clone(),
                    c: &e.c * &mu,
                    d: &e.d * &mu,
                });
                k += 1;
            }
        }
        ModularAssignment { modulus: target.clone(), entries }
    }

    /// Largest absolute finite endpoint; the horizon beyond which the
    /// piecewise description is purely residue-driven.
    pub fn horizon(&self) -> Int {
        let mut h = Int::zero();
        for e in &self.entries {
            for bound in [&e.span.lo, &e.span.hi] {
                if let Some(b) = bound {
                    h = h.max(b.abs());
                }
            }
        }
        h
    }
}

fn residues(m: &Int) -> impl Iterator<Item = Int> {
    let mut r = Int::zero();
    let m = m.clone();
    std::iter::from_fn(move || {
        if r < m {
            let out = r.clone();
            r += 1;
            Some(out)
        } else {
            None
        }
    })
}

/// Split a span by the sign of the linear numerator `c·x + d` (the value's
/// sign, since the modulus is positive): returns (negative, zero, positive)
/// sub-spans.
fn split_by_sign(span: &Span, c: &Int, d: &Int) -> (Span, Span, Span) {
    if c.is_zero() {
        let s = d.signum().to_i32().unwrap();
        return match s {
            -1 => (span.clone(), Span { lo: Some(Int::one()), hi: Some(Int::zero()) }, Span { lo: Some(Int::one()), hi: Some(Int::zero()) }),
            0 => (Span { lo: Some(Int::one()), hi: Some(Int::zero()) }, span.clone(), Span { lo: Some(Int::one()), hi: Some(Int::zero()) }),
            _ => (Span { lo: Some(Int::one()), hi: Some(Int::zero()) }, Span { lo: Some(Int::one()), hi: Some(Int::zero()) }, span.clone()),
        };
    }
    // c·x + d = 0 at x0 = −d/c (may be fractional)
    let zero_at = if d.is_multiple_of(c) { Some(-(d / c)) } else { None };
    // where is c·x + d < 0: x < −d/c for c > 0, x > −d/c for c < 0
    let floor_thr = (-d).div_floor(c); // largest x with c·x + d ≤ 0-ish, for c>0
    let ceil_thr = (-d).div_ceil(c);
    if c.is_positive() {
        let neg_hi = if zero_at.is_some() { floor_thr.clone() - 1 } else { floor_thr.clone() };
        let pos_lo = if zero_at.is_some() { ceil_thr.clone() + 1 } else { ceil_thr.clone() };
        let neg = span.intersect(&Span { lo: None, hi: Some(neg_hi) });
        let zero = match &zero_at {
            Some(x0) => span.intersect(&Span { lo: Some(x0.clone()), hi: Some(x0.clone()) }),
            None => Span { lo: Some(Int::one()), hi: Some(Int::zero()) },
        };
        let pos = span.intersect(&Span { lo: Some(pos_lo), hi: None });
        (neg, zero, pos)
    } else {
        let neg_lo = if zero_at.is_some() { ceil_thr.clone() + 1 } else { ceil_thr.clone() };
        let pos_hi = if zero_at.is_some() { floor_thr.clone() - 1 } else { floor_thr.clone() };
        let neg = span.intersect(&Span { lo: Some(neg_lo), hi: None });
        let zero = match &zero_at {
            Some(x0) => span.intersect(&Span { lo: Some(x0.clone()), hi: Some(x0.clone()) }),
            None => Span { lo: Some(Int::one()), hi: Some(Int::zero()) },
        };
        let pos = span.intersect(&Span { lo: None, hi: Some(pos_hi) });
        (neg, zero, pos)
    }
}

/// Compile a one-input/one-output circuit into a modular assignment with
/// modulus `lcm(D)^e` (`D` the div moduli, `e` the div-gate count).
///
/// Every div gate is first rewritten to the common modulus `M = lcm(D)`
/// through the composite-divisor identity; the per-gate construction then
/// follows the structural induction: `max` splits domains by which linear
/// piece dominates, `E` splits by sign, `div_M` raises the modulus level by
/// one and corrects the offset by `M^e·β`, and affine gates combine piece
/// by piece.
pub fn modular_assignment(c: &Circuit, max_entries: usize) -> Result<ModularAssignment> {
    if c.n_inputs != 1 || c.outputs.len() != 1 {
        return Err(Error::Precondition("modular_assignment needs 1 input, 1 output".into()));
    }
    let stats = c.stats();
    let big_m = lcm_all(stats.div_moduli.iter()).max(Int::one());
    // rewrite every div gate to modulus M
    let mut cur = c.clone();
    let moduli: Vec<Int> = stats.div_moduli.iter().cloned().collect();
    for m in &moduli {
        if *m != big_m {
            let l = &big_m / m;
            cur = rewrite_div_composite(&cur, m, &l, DivRewrite::LiftToComposite);
        }
    }
    debug_assert!(cur.stats().div_moduli.iter().all(|m| *m == big_m));

    // per-wire assignments; modulus of wire w is M^(levels[w])
    let mut assigns: Vec<ModularAssignment> = Vec::with_capacity(cur.gates.len());
    let budget_check = |a: &ModularAssignment, max_entries: usize| -> Result<()> {
        if a.entries.len() > max_entries {
            return Err(Error::resource("modular assignment entries", max_entries as u64));
        }
        Ok(())
    };

    for g in cur.gates.iter() {
        let a = match g {
            Gate::Input(_) => ModularAssignment {
                modulus: Int::one(),
                entries: vec![AssignmentEntry {
                    residue: Int::zero(),
                    span: Span::all(),
                    c: Int::one(),
                    d: Int::zero(),
                }],
            },
            Gate::Lin { coeffs, konst } => {
                // fold Σ coeff·wire + konst as sums of scaled assignments
                let mut acc = ModularAssignment::constant(&Int::one(), konst.clone());
                for (w, coef) in coeffs {
                    let scaled = scale_assignment(&assigns[*w], coef);
                    acc = combine(&acc, &scaled, &mut |c1, d1, c2, d2, _span| {
                        vec![(c1 + c2, d1 + d2, None)]
                    });
                    budget_check(&acc, max_entries)?;
                }
                acc
            }
            Gate::Max(u, v) => {
                let a = combine(&assigns[*u], &assigns[*v], &mut |c1, d1, c2, d2, span| {
                    // split by which linear numerator dominates
                    let (lo_piece, _zero, hi_piece) =
                        split_by_sign(span, &(&c1 - &c2), &(&d1 - &d2));
                    // where c1x+d1 − (c2x+d2) < 0 take (c2, d2); at 0 equal
                    vec![
                        (c2.clone(), d2.clone(), Some(lo_piece)),
                        (c1.clone(), d1.clone(), Some(span.intersect(&widen(&_zero)))),
                        (c1, d1, Some(hi_piece)),
                    ]
                });
                budget_check(&a, max_entries)?;
                a
            }
            Gate::E(u, v) => {
                let a = combine(&assigns[*u], &assigns[*v], &mut |c1, d1, c2, d2, span| {
                    let (neg, zero, pos) = split_by_sign(span, &c1, &d1);
                    vec![
                        (Int::zero(), Int::zero(), Some(neg)),
                        (c2, d2, Some(zero)),
                        (Int::zero(), Int::zero(), Some(pos)),
                    ]
                });
                budget_check(&a, max_entries)?;
                a
            }
            Gate::Div { m, arg } => {
                assert_eq!(*m, big_m);
                let inner = &assigns[*arg];
                // raise the level: modulus M^e → M^(e+1)
                let new_mod = &inner.modulus * &big_m;
                let mut entries = vec![];
                for r in residues(&new_mod) {
                    for e in &inner.entries {
                        if math_mod(&r, &inner.modulus) != e.residue {
                            continue;
                        }
                        // numerator value ≡ β·M^e + (0 mod M^{e+1}-part);
                        // β = the M-digit of (c·r + d)/M^e
                        let num_at_r = math_mod(&(&e.c * &r + &e.d), &new_mod);
                        debug_assert!(num_at_r.is_multiple_of(&inner.modulus));
                        let beta = &num_at_r / &inner.modulus;
                        entries.push(AssignmentEntry {
                            residue: r.clone(),
                            span: e.span.clone(),
                            c: e.c.clone(),
                            d: &e.d - &inner.modulus * beta,
                        });
                    }
                }
                let a = ModularAssignment { modulus: new_mod, entries };
                budget_check(&a, max_entries)?;
                a
            }
        };
        assigns.push(a);
    }
    let out = assigns[cur.outputs[0]].clone();
    // final lift so the reported modulus is exactly lcm(D)^e of the input
    let target_exp = c.stats().div_gate_count as u32;
    let target = num_traits::pow(big_m.clone(), target_exp as usize).max(Int::one());
    Ok(if target.is_multiple_of(&out.modulus) && target != out.modulus {
        out.lift(&target)
    } else {
        out
    })
}

fn widen(z: &Span) -> Span {
    z.clone()
}

fn scale_assignment(a: &ModularAssignment, k: &Int) -> ModularAssignment {
    ModularAssignment {
        modulus: a.modulus.clone(),
        entries: a
            .entries
            .iter()
            .map(|e| AssignmentEntry {
                residue: e.residue.clone(),
                span: e.span.clone(),
                c: &e.c * k,
                d: &e.d * k,
            })
            .collect(),
    }
}

/// Pairwise combination of two assignments over the lifted common modulus;
/// `merge` receives both numerator pairs and the common domain and returns
/// replacement pieces (`None` span = the whole common domain).
fn combine(
    a: &ModularAssignment,
    b: &ModularAssignment,
    merge: &mut dyn FnMut(Int, Int, Int, Int, &Span) -> Vec<(Int, Int, Option<Span>)>,
) -> ModularAssignment {
    let target = a.modulus.clone().lcm(&b.modulus);
    let a = if a.modulus == target { a.clone() } else { a.lift(&target) };
    let b = if b.modulus == target { b.clone() } else { b.lift(&target) };
    let mut entries = vec![];
    for ea in &a.entries {
        for eb in &b.entries {
            if ea.residue != eb.residue {
                continue;
            }
            let common = ea.span.intersect(&eb.span);
            if common.is_empty() {
                continue;
            }
            for (c, d, span) in merge(ea.c.clone(), ea.d.clone(), eb.c.clone(), eb.d.clone(), &common)
            {
                let s = span.unwrap_or_else(|| common.clone());
                if !s.is_empty() {
                    entries.push(AssignmentEntry { residue: ea.residue.clone(), span: s, c, d });
                }
            }
        }
    }
    ModularAssignment { modulus: target, entries }
}

// ---------------------------------------------------------------------------
// Period bounds
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct PeriodReport {
    /// `lcm(D)^e`, the certified period.
    pub bound: Int,
    /// Violations with `|x| ≤ horizon` (tolerated: the period law allows
    /// finitely many exceptions near interval boundaries).
    pub boundary_violations: Vec<Int>,
    /// Violations beyond the horizon; any entry is a hard failure.
    pub interior_violations: Vec<Int>,
    pub validated_range: (Int, Int),
}

/// Compute `lcm(D)^e` for a single-input circuit defining a {0,1} set and
/// validate it as a period on `[−N, N]` (default `N = 1000·bound`, capped
/// at 10⁶). Violations at `|x| ≤ horizon` are reported separately;
/// interior violations make the call fail.
pub fn period_bound(c: &Circuit, horizon: &Int, range: Option<Int>) -> Result<PeriodReport> {
    if c.n_inputs != 1 || c.outputs.len() != 1 {
        return Err(Error::Precondition("period_bound needs 1 input, 1 output".into()));
    }
    let stats = c.stats();
    let base = lcm_all(stats.div_moduli.iter()).max(Int::one());
    let bound = num_traits::pow(base, stats.div_gate_count).max(Int::one());
    let n = range.unwrap_or_else(|| (&bound * Int::from(1000)).min(Int::from(1_000_000)));
    let n: i64 = (&n).try_into().map_err(|_| Error::resource("period range", 1_000_000))?;
    let bound_i: i64 =
        (&bound).try_into().map_err(|_| Error::resource("period bound", 1_000_000))?;

    let member = |x: i64| -> Result<bool> {
        let out = &c.eval(&[Int::from(x)])[0];
        if out.is_zero() {
            Ok(false)
        } else if out.is_one() {
            Ok(true)
        } else {
            Err(Error::NonBooleanOutput(x.to_string()))
        }
    };

    let mut boundary = vec![];
    let mut interior = vec![];
    let mut x = -n;
    while x + bound_i <= n {
        if member(x)? != member(x + bound_i)? {
            let vx = Int::from(x);
            if vx.abs() <= *horizon || Int::from(x + bound_i).abs() <= *horizon {
                boundary.push(vx);
            } else {
                interior.push(vx);
            }
        }
        x += 1;
    }
    Ok(PeriodReport {
        bound,
        boundary_violations: boundary,
        interior_violations: interior,
        validated_range: (Int::from(-n), Int::from(n)),
    })
}

// ---------------------------------------------------------------------------
// Chinese-remainder reduction from Boolean Π₂ synthesis
// ---------------------------------------------------------------------------

/// A Boolean Π₂ specification in 3CNF: clause literals are variable indices
/// (1-based into inputs then outputs) with sign for negation.
#[derive(Debug, Clone)]
pub struct BoolSpec {
    pub num_inputs: usize,
    pub num_outputs: usize,
    /// Each clause is up to three nonzero literals; positive `k` is the
    /// k-th variable, negative is its negation. Inputs come first.
    pub clauses: Vec<Vec<i64>>,
}

impl BoolSpec {
    pub fn eval(&self, x: &[bool], y: &[bool]) -> bool {
        self.clauses.iter().all(|cl| {
            cl.iter().any(|&lit| {
                let idx = lit.unsigned_abs() as usize - 1;
                let v = if idx < self.num_inputs { x[idx] } else { y[idx - self.num_inputs] };
                v == (lit > 0)
            })
        })
    }

    /// DIMACS-like text with an input/output partition header.
    pub fn parse(text: &str) -> Result<BoolSpec> {
        let mut num_vars = 0usize;
        let mut inputs: Vec<usize> = vec![];
        let mut outputs: Vec<usize> = vec![];
        let mut clauses = vec![];
        for (ln, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('c') {
                continue;
            }
            let err = |msg: &str| Error::parse(ln + 1, 1, msg.to_string());
            if let Some(rest) = line.strip_prefix("p cnf") {
                let mut it = rest.split_whitespace();
                num_vars = it
                    .next()
                    .and_then(|s| s.parse().ok())
                    .ok_or_else(|| err("bad variable count"))?;
                continue;
            }
            if let Some(rest) = line.strip_prefix("i ") {
                inputs = rest
                    .split_whitespace()
                    .map(|s| s.parse::<usize>().map_err(|_| err("bad input index")))
                    .collect::<Result<_>>()?;
                continue;
            }
            if let Some(rest) = line.strip_prefix("o ") {
                outputs = rest
                    .split_whitespace()
                    .map(|s| s.parse::<usize>().map_err(|_| err("bad output index")))
                    .collect::<Result<_>>()?;
                continue;
            }
            let mut lits: Vec<i64> = vec![];
            for tok in line.split_whitespace() {
                let v: i64 = tok.parse().map_err(|_| err("bad literal"))?;
                if v == 0 {
                    break;
                }
                lits.push(v);
            }
            if lits.len() > 3 {
                return Err(err("clause has more than three literals"));
            }
            if !lits.is_empty() {
                clauses.push(lits);
            }
        }
        let n = inputs.len();
        let m = outputs.len();
        if n + m != num_vars {
            return Err(Error::Invalid(format!(
                "partition covers {} variables, header says {num_vars}",
                n + m
            )));
        }
        // expect inputs 1..n, outputs n+1..n+m
        let expect_in: Vec<usize> = (1..=n).collect();
        let expect_out: Vec<usize> = (n + 1..=n + m).collect();
        if inputs != expect_in || outputs != expect_out {
            return Err(Error::Invalid(
                "inputs must be variables 1..n and outputs n+1..n+m".into(),
            ));
        }
        Ok(BoolSpec { num_inputs: n, num_outputs: m, clauses })
    }
}

fn first_primes(k: usize) -> Vec<Int> {
    let mut out: Vec<u64> = vec![];
    let mut cand = 2u64;
    while out.len() < k {
        if out.iter().all(|p| cand % p != 0) {
            out.push(cand);
        }
        cand += 1;
    }
    out.into_iter().map(Int::from).collect()
}

/// The Chinese-remainder encoding of a Boolean Π₂ 3CNF specification into a
/// one-input/one-output Presburger specification.
#[derive(Debug, Clone)]
pub struct CrtEncoding {
    pub input_primes: Vec<Int>,
    pub output_primes: Vec<Int>,
    pub spec: SpecFormula,
}

/// Encode clause-wise: literal `x_k` becomes `a ≡ 0 (mod p_k)`, `¬x_k`
/// becomes `a ≢ 0 (mod p_k)`, and likewise `y_k` over `b` with `q_k`.
/// Primes are the first `n + m` primes, inputs first.
pub fn encode_bool_to_pa(spec: &BoolSpec) -> Result<CrtEncoding> {
    let primes = first_primes(spec.num_inputs + spec.num_outputs);
    let (input_primes, output_primes) = primes.split_at(spec.num_inputs);
    let vars = VarSet::new(vec!["a".into()], vec!["b".into()])?;
    let lit_atom = |lit: i64| -> Formula {
        let idx = lit.unsigned_abs() as usize - 1;
        let (var, modulus) = if idx < spec.num_inputs {
            (0usize, input_primes[idx].clone())
        } else {
            (1usize, output_primes[idx - spec.num_inputs].clone())
        };
        Formula::Leaf(Atom::Mod(
            ModAtom::new(LinExpr::var(var), Int::zero(), modulus, lit < 0)
                .expect("prime modulus"),
        ))
    };
    let clauses: Vec<Formula> = spec
        .clauses
        .iter()
        .map(|cl| Formula::or(cl.iter().map(|&l| lit_atom(l)).collect()))
        .collect();
    let body = Formula::and(clauses);
    Ok(CrtEncoding {
        input_primes: input_primes.to_vec(),
        output_primes: output_primes.to_vec(),
        spec: SpecFormula { vars, body },
    })
}

/// The smallest number in the coset of an assignment: the product of the
/// primes selected by the true variables (1 for the all-false assignment).
pub fn encode_assignment(assignment: &[bool], primes: &[Int]) -> Int {
    assignment
        .iter()
        .zip(primes)
        .filter(|(on, _)| **on)
        .map(|(_, p)| p.clone())
        .product::<Int>()
        .max(Int::one())
}

/// Decode an integer into an assignment by divisibility per prime.
pub fn decode_witness(value: &Int, primes: &[Int]) -> Vec<bool> {
    primes.iter().map(|p| value.is_multiple_of(p)).collect()
}

#[derive(Debug, Clone)]
pub struct BoolSkolemReport {
    /// Exhaustive verification over all 2ⁿ inputs: for each, whether the
    /// Boolean spec was satisfiable and what the decoded output was.
    pub cases: Vec<(Vec<bool>, bool, Vec<bool>)>,
    pub failures: Vec<Vec<bool>>,
}

impl BoolSkolemReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Run the decoded Boolean Skolem procedure for every input assignment:
/// encode the input, run the Presburger Skolem circuit, decode the output
/// by prime divisibility, and compare against brute-force satisfiability.
pub fn bool_skolem_via_pa(
    spec: &BoolSpec,
    enc: &CrtEncoding,
    pa_skolem: &Circuit,
) -> Result<BoolSkolemReport> {
    if spec.num_inputs > 20 {
        return Err(Error::resource("boolean inputs", 20));
    }
    let n = spec.num_inputs;
    let m = spec.num_outputs;
    let mut cases = vec![];
    let mut failures = vec![];
    for bits in 0u32..(1 << n) {
        let x: Vec<bool> = (0..n).map(|i| bits & (1 << i) != 0).collect();
        let sat = (0u32..(1 << m)).any(|ybits| {
            let y: Vec<bool> = (0..m).map(|i| ybits & (1 << i) != 0).collect();
            spec.eval(&x, &y)
        });
        let a = encode_assignment(&x, &enc.input_primes);
        let out = pa_skolem.eval(&[a]);
        let y = decode_witness(&out[0], &enc.output_primes);
        if sat && !spec.eval(&x, &y) {
            failures.push(x.clone());
        }
        cases.push((x, sat, y));
    }
    Ok(BoolSkolemReport { cases, failures })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::Builder as CB;
    use crate::Budgets;

    fn ints(vs: &[i64]) -> Vec<Int> {
        vs.iter().map(|&v| Int::from(v)).collect()
    }

    fn identity_circuit() -> Circuit {
        let mut b = CB::new(1);
        let x = b.input(0);
        b.finish(vec![x])
    }

    fn x_mod_2_circuit() -> Circuit {
        let mut b = CB::new(1);
        let x = b.input(0);
        let d = b.div(2, x);
        let out = b.lin(&[(x, 1.into()), (d, (-2).into())], 0.into());
        b.finish(vec![out])
    }

    #[test]
    fn assignment_identity() {
        let a = modular_assignment(&identity_circuit(), 100_000).unwrap();
        assert_eq!(a.modulus, Int::one());
        assert_eq!(a.entries.len(), 1);
        assert_eq!(a.entries[0].c, Int::one());
        assert_eq!(a.entries[0].d, Int::zero());
        for x in -20..=20i64 {
            assert_eq!(a.eval(&Int::from(x)), Int::from(x));
        }
    }

    #[test]
    fn assignment_x_mod_2() {
        let c = x_mod_2_circuit();
        let a = modular_assignment(&c, 100_000).unwrap();
        assert_eq!(a.modulus, Int::from(2));
        for x in -20..=20i64 {
            assert_eq!(a.eval(&Int::from(x)), Int::from(x.rem_euclid(2)), "x={x}");
        }
    }

    #[test]
    fn assignment_max_split() {
        let mut b = CB::new(1);
        let x = b.input(0);
        let zero = b.konst(0);
        let m = b.max(x, zero);
        let c = b.finish(vec![m]);
        let a = modular_assignment(&c, 100_000).unwrap();
        assert_eq!(a.modulus, Int::one());
        for x in -20..=20i64 {
            assert_eq!(a.eval(&Int::from(x)), Int::from(x.max(0)), "x={x}");
        }
    }

    #[test]
    fn assignment_agrees_with_eval_on_mixed_circuit() {
        // max(x − 2·div_2(x), div_3(x) − x) plus an E gate
        let mut b = CB::new(1);
        let x = b.input(0);
        let d2 = b.div(2, x);
        let p1 = b.lin(&[(x, 1.into()), (d2, (-2).into())], 0.into());
        let d3 = b.div(3, x);
        let p2 = b.lin(&[(d3, 1.into()), (x, (-1).into())], 0.into());
        let mx = b.max(p1, p2);
        let e = b.e(p1, mx);
        let c = b.finish(vec![e]);
        let a = modular_assignment(&c, 200_000).unwrap();
        for x in -200..=200i64 {
            assert_eq!(a.eval(&Int::from(x)), c.eval(&[Int::from(x)])[0], "x={x}");
        }
    }

    #[test]
    fn period_even_circuit() {
        // indicator of even numbers: 1 − (x mod 2)
        let mut b = CB::new(1);
        let x = b.input(0);
        let d = b.div(2, x);
        let m2 = b.lin(&[(x, 1.into()), (d, (-2).into())], 0.into());
        let out = b.lin(&[(m2, (-1).into())], 1.into());
        let c = b.finish(vec![out]);
        let rep = period_bound(&c, &Int::from(0), Some(Int::from(500))).unwrap();
        assert_eq!(rep.bound, Int::from(2));
        assert!(rep.interior_violations.is_empty());
        assert!(rep.boundary_violations.is_empty());
    }

    #[test]
    fn period_divfree_threshold() {
        // x ≥ 0 indicator: C(x, 1); period 1, one boundary violation at −1
        let mut b = CB::new(1);
        let x = b.input(0);
        let one = b.konst(1);
        let c0 = b.c_gate(x, one);
        let c = b.finish(vec![c0]);
        let rep = period_bound(&c, &Int::from(4), Some(Int::from(100))).unwrap();
        assert_eq!(rep.bound, Int::one());
        assert!(rep.interior_violations.is_empty());
        assert_eq!(rep.boundary_violations.len(), 1);
    }

    #[test]
    fn period_non_boolean_rejected() {
        let c = identity_circuit();
        assert!(matches!(
            period_bound(&c, &Int::from(0), Some(Int::from(50))),
            Err(Error::NonBooleanOutput(_))
        ));
    }

    #[test]
    fn crt_encode_smallest_primes() {
        let spec = BoolSpec { num_inputs: 1, num_outputs: 1, clauses: vec![vec![1, 2]] };
        let enc = encode_bool_to_pa(&spec).unwrap();
        assert_eq!(enc.input_primes, ints(&[2]));
        assert_eq!(enc.output_primes, ints(&[3]));
        // (x₁ ∨ y₁) → (a ≡ 0 (mod 2)) ∨ (b ≡ 0 (mod 3))
        let txt = crate::formula::print(&enc.spec);
        assert_eq!(
            txt,
            "(spec (inputs a) (outputs b) (or (mod= a 0 2) (mod= b 0 3)))"
        );
        // negative literal
        let spec = BoolSpec { num_inputs: 1, num_outputs: 0, clauses: vec![vec![-1]] };
        let enc = encode_bool_to_pa(&spec).unwrap();
        assert!(crate::formula::print(&enc.spec).contains("(mod!= a 0 2)"));
        // empty clause set encodes ⊤
        let spec = BoolSpec { num_inputs: 1, num_outputs: 1, clauses: vec![] };
        let enc = encode_bool_to_pa(&spec).unwrap();
        assert!(enc.spec.body.eval(&ints(&[5, 7])));
    }

    #[test]
    fn crt_assignment_roundtrip() {
        let primes = ints(&[2, 3, 5]);
        assert_eq!(encode_assignment(&[true, false, false], &primes), Int::from(2));
        assert_eq!(encode_assignment(&[false, false, false], &primes), Int::one());
        assert_eq!(decode_witness(&Int::from(15), &ints(&[3, 5])), vec![true, true]);
        // coset membership: decode(encode(X)) = X
        for bits in 0u32..8 {
            let x: Vec<bool> = (0..3).map(|i| bits & (1 << i) != 0).collect();
            assert_eq!(decode_witness(&encode_assignment(&x, &primes), &primes), x);
        }
    }

    #[test]
    fn bool_skolem_end_to_end_tiny() {
        // ψ = (x₁ ∨ y₁): decoded Skolem must satisfy it for both inputs
        let spec = BoolSpec { num_inputs: 1, num_outputs: 1, clauses: vec![vec![1, 2]] };
        let enc = encode_bool_to_pa(&spec).unwrap();
        let circuit = crate::synth::synth_general(&enc.spec, &Budgets::default()).unwrap();
        let rep = bool_skolem_via_pa(&spec, &enc, &circuit).unwrap();
        assert!(rep.passed(), "{:?}", rep.failures);
        // unsat spec: vacuous pass
        let spec = BoolSpec { num_inputs: 1, num_outputs: 1, clauses: vec![vec![2], vec![-2]] };
        let enc = encode_bool_to_pa(&spec).unwrap();
        let circuit = crate::synth::synth_general(&enc.spec, &Budgets::default()).unwrap();
        let rep = bool_skolem_via_pa(&spec, &enc, &circuit).unwrap();
        assert!(rep.passed());
    }

    #[test]
    fn dimacs_parse() {
        let text = "c example\np cnf 3 2\ni 1 2\no 3\n1 -2 3 0\n-1 0\n";
        let s = BoolSpec::parse(text).unwrap();
        assert_eq!(s.num_inputs, 2);
        assert_eq!(s.num_outputs, 1);
        assert_eq!(s.clauses, vec![vec![1, -2, 3], vec![-1]]);
        assert!(BoolSpec::parse("p cnf 2 1\ni 1\no 2\n1 2 3 4 0\n").is_err());
    }
}
