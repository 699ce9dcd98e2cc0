//! Cooper-style quantifier elimination and sentence decision for
//! quantifier-free Presburger formulas.
//!
//! `∃y` is eliminated by the classical divisibility-aware virtual
//! substitution: all coefficients of `y` are scaled to ±δ (δ the lcm), the
//! scaled variable is constrained by `y ≡ 0 (mod δ)`, and the quantifier is
//! replaced by the disjunction of the "−∞" copies and the lower-boundary
//! copies `φ[y := ℓ + j]` for every lower-bound term `ℓ` and
//! `j ∈ [0, m*)`, where `m*` is the lcm of all moduli on `y`. The
//! substitutions are leaf-wise, so arbitrary NNF trees are handled.
//!
//! Before the core procedure runs, two standard reductions keep the blowup
//! in check: miniscoping (`∃` distributes over `∨` and skips `y`-free
//! conjuncts) and equality substitution (a conjunct pair `y + t ≥ 0`,
//! `−y − t ≥ 0` pins `y = −t`). Output atoms are canonicalized
//! (gcd-reduced, residues reduced) so downstream modulo analysis sees clean
//! moduli. Worst-case exponential growth is caught by the node budget.

use crate::error::{Error, Result};
use crate::exactnum::{lcm_all, solve_congruence, Int};
use crate::formula::{Atom, Formula, LinExpr, ModAtom, SpecFormula, Var};
use crate::Budgets;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quantifier {
    Exists,
    Forall,
}

/// A prenex quantified formula over a spec's variable table.
#[derive(Debug, Clone)]
pub struct QuantifiedFormula {
    pub prefix: Vec<(Quantifier, Var)>,
    pub matrix: Formula,
}

/// gcd-reduce and normalize a single atom; may fold to ⊤/⊥.
pub fn canonicalize_atom(a: &Atom) -> Formula {
    match a {
        Atom::Ge(e) => {
            if e.is_constant() {
                return if e.constant.is_negative() { Formula::bottom() } else { Formula::top() };
            }
            let g = e.coeffs.values().fold(Int::zero(), |acc, c| acc.gcd(c));
            if g.is_one() {
                return Formula::Leaf(Atom::Ge(e.clone()));
            }
            let coeffs = e.coeffs.iter().map(|(v, c)| (*v, c / &g)).collect();
            let constant = e.constant.div_floor(&g);
            Formula::Leaf(Atom::Ge(LinExpr { coeffs, constant }))
        }
        Atom::Mod(m) => {
            if m.expr.is_constant() {
                return match a.const_value() {
                    Some(true) => Formula::top(),
                    _ => Formula::bottom(),
                };
            }
            let g = m.expr.coeffs.values().fold(Int::zero(), |acc, c| acc.gcd(c));
            // g·S ≡ r (mod M): solve for S
            match solve_congruence(&g, &m.residue, &m.modulus) {
                None => {
                    if m.differs {
                        Formula::top()
                    } else {
                        Formula::bottom()
                    }
                }
                Some((r2, m2)) => {
                    if m2.is_one() {
                        return if m.differs { Formula::bottom() } else { Formula::top() };
                    }
                    let coeffs = m.expr.coeffs.iter().map(|(v, c)| (*v, c / &g)).collect();
                    let expr = LinExpr { coeffs, constant: Int::zero() };
                    Formula::Leaf(Atom::Mod(
                        ModAtom::new(expr, r2, m2, m.differs).expect("modulus >= 1"),
                    ))
                }
            }
        }
    }
}

fn canonicalize(f: &Formula) -> Formula {
    f.map_atoms(&mut canonicalize_atom).simplify()
}

/// Quantifier-free equivalent of `∃y: φ` over the remaining variables.
pub fn eliminate_one(f: &Formula, y: Var, budgets: &Budgets) -> Result<Formula> {
    let out = eliminate_rec(&f.simplify(), y, budgets)?;
    Ok(canonicalize(&out))
}

fn eliminate_rec(f: &Formula, y: Var, budgets: &Budgets) -> Result<Formula> {
    if !f.mentions(y) {
        return Ok(f.clone());
    }
    match f {
        // ∃ distributes over ∨
        Formula::Or(cs) => {
            let children: Result<Vec<Formula>> =
                cs.iter().map(|c| eliminate_rec(c, y, budgets)).collect();
            Ok(Formula::or(children?).simplify())
        }
        Formula::And(cs) => {
            // miniscoping: hoist y-free conjuncts out of the quantifier
            let (with_y, without_y): (Vec<&Formula>, Vec<&Formula>) =
                cs.iter().partition(|c| c.mentions(y));
            if !without_y.is_empty() {
                let inner = Formula::and(with_y.into_iter().cloned().collect());
                let mut out: Vec<Formula> = without_y.into_iter().cloned().collect();
                out.push(eliminate_rec(&inner, y, budgets)?);
                return Ok(Formula::and(out).simplify());
            }
            if let Some(sub) = equality_substitution(cs, y) {
                return Ok(sub.simplify());
            }
            // distribute one y-mentioning Or-child: the branches usually
            // expose equality pairs (Max/E-style case splits), and dead
            // branches are pruned before recursing
            if let Some(pos) =
                cs.iter().position(|c| matches!(c, Formula::Or(_)) && c.mentions(y))
            {
                let Formula::Or(branches) = &cs[pos] else { unreachable!() };
                let rest: Vec<Formula> =
                    cs.iter().enumerate().filter(|(j, _)| *j != pos).map(|(_, c)| c.clone()).collect();
                let mut out = vec![];
                let mut total = 0usize;
                for br in branches {
                    let mut conj = rest.clone();
                    conj.push(br.clone());
                    let case = Formula::and(conj).simplify();
                    if matches!(&case, Formula::Leaf(a) if a.const_value() == Some(false)) {
                        continue;
                    }
                    let r = eliminate_rec(&case, y, budgets)?;
                    total += r.node_count();
                    if total > budgets.qe_nodes {
                        return Err(Error::resource("qe nodes", budgets.qe_nodes as u64));
                    }
                    out.push(r);
                }
                return Ok(Formula::or(out).simplify());
            }
            cooper_core(f, y, budgets)
        }
        Formula::Leaf(_) => cooper_core(f, y, budgets),
    }
}

/// Detect a conjunct equality `y = −t` (with unit coefficient) rendered as
/// the pair `±(y + t) ≥ 0` and substitute it through the conjunction.
fn equality_substitution(cs: &[Formula], y: Var) -> Option<Formula> {
    for (i, c) in cs.iter().enumerate() {
        let Formula::Leaf(Atom::Ge(e)) = c else { continue };
        let a = e.coeff(y);
        if !a.abs().is_one() {
            continue;
        }
        let neg = e.neg();
        if !cs.iter().any(|d| matches!(d, Formula::Leaf(Atom::Ge(e2)) if *e2 == neg)) {
            continue;
        }
        // e = ±y + t with e = 0 forced; y = ∓t
        let mut t = e.clone();
        t.coeffs.remove(&y);
        let replacement = if a.is_one() { t.neg() } else { t };
        let rest: Vec<Formula> = cs
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != i)
            .map(|(_, d)| d.subst(y, &replacement))
            .collect();
        return Some(Formula::and(rest));
    }
    None
}

/// Core Cooper step on an arbitrary NNF formula mentioning `y`.
fn cooper_core(f: &Formula, y: Var, budgets: &Budgets) -> Result<Formula> {
    // δ = lcm of |coefficients of y|
    let mut coefs: Vec<Int> = vec![];
    f.visit_atoms(&mut |a| {
        let e = match a {
            Atom::Ge(e) => e,
            Atom::Mod(m) => &m.expr,
        };
        if let Some(c) = e.coeffs.get(&y) {
            coefs.push(c.abs());
        }
    });
    let delta = lcm_all(coefs.iter());

    // scale every y-atom so that the coefficient of y is ±δ, then read the
    // formula as being over z = δ·y (coefficient ±1)
    let mut scaled = f.map_atoms(&mut |a| {
        let (e, modinfo) = match a {
            Atom::Ge(e) => (e, None),
            Atom::Mod(m) => (&m.expr, Some((m.residue.clone(), m.modulus.clone(), m.differs))),
        };
        let c = e.coeff(y);
        if c.is_zero() {
            return Formula::Leaf(a.clone());
        }
        let lambda = &delta / c.abs();
        let mut se = e.scale(&lambda);
        // ±δ·y becomes ±1·z (same variable id reused for z)
        let signed = se.coeff(y);
        se.coeffs.insert(y, if signed.is_positive() { Int::one() } else { -Int::one() });
        match modinfo {
            None => Formula::Leaf(Atom::Ge(se)),
            Some((r, m, differs)) => Formula::Leaf(Atom::Mod(
                ModAtom::new(se, r * &lambda, m * &lambda, differs).expect("modulus >= 1"),
            )),
        }
    });
    if !delta.is_one() {
        scaled = Formula::And(vec![
            scaled,
            Formula::Leaf(Atom::Mod(
                ModAtom::new(LinExpr::var(y), Int::zero(), delta.clone(), false)
                    .expect("delta >= 1"),
            )),
        ]);
    }

    // m* = lcm of all moduli on z
    let mut moduli: Vec<Int> = vec![];
    scaled.visit_atoms(&mut |a| {
        if let Atom::Mod(m) = a {
            if m.expr.mentions(y) {
                moduli.push(m.modulus.clone());
            }
        }
    });
    let mstar = lcm_all(moduli.iter());

    // lower-bound terms: z + t ≥ 0 gives z ≥ −t
    let mut lowers: Vec<LinExpr> = vec![];
    scaled.visit_atoms(&mut |a| {
        if let Atom::Ge(e) = a {
            if e.coeff(y).is_one() {
                let mut t = e.clone();
                t.coeffs.remove(&y);
                let l = t.neg();
                if !lowers.contains(&l) {
                    lowers.push(l);
                }
            }
        }
    });

    // the `m*` copy count can be large, but most copies die under
    // simplification; meter the post-simplification size as we go
    if &mstar * (lowers.len() as u64 + 1) > Int::from(budgets.qe_nodes as u64) {
        return Err(Error::resource("qe nodes", budgets.qe_nodes as u64));
    }

    // φ_{−∞}: lower-bound leaves false, upper-bound leaves true
    let minus_inf = scaled.map_atoms(&mut |a| match a {
        Atom::Ge(e) if e.coeff(y).is_one() => Formula::bottom(),
        Atom::Ge(e) if e.coeff(y) == -Int::one() => Formula::top(),
        other => Formula::Leaf(other.clone()),
    });

    let mut disjuncts: Vec<Formula> = vec![];
    let mut total_nodes = 0usize;
    let mut push = |disjuncts: &mut Vec<Formula>, total: &mut usize, c: Formula| -> Result<()> {
        let c = canonicalize(&c);
        if matches!(&c, Formula::Leaf(a) if a.const_value() == Some(false)) {
            return Ok(());
        }
        *total += c.node_count();
        if *total > budgets.qe_nodes {
            return Err(Error::resource("qe nodes", budgets.qe_nodes as u64));
        }
        disjuncts.push(c);
        Ok(())
    };
    let mut j = Int::zero();
    while j < mstar {
        let c = minus_inf.subst(y, &LinExpr::constant(j.clone()));
        push(&mut disjuncts, &mut total_nodes, c)?;
        j += 1;
    }
    for l in &lowers {
        let mut j = Int::zero();
        while j < mstar {
            let mut e = l.clone();
            e.constant += &j;
            let c = scaled.subst(y, &e);
            push(&mut disjuncts, &mut total_nodes, c)?;
            j += 1;
        }
    }
    Ok(Formula::or(disjuncts).simplify())
}

/// Fold [`eliminate_one`] right-to-left over a block of variables:
/// the result is a quantifier-free equivalent of `∃ ys: φ`.
pub fn eliminate_block(f: &Formula, ys: &[Var], budgets: &Budgets) -> Result<Formula> {
    let debug = std::env::var("PSYNTH_QE_TRACE").is_ok();
    let mut cur = f.clone();
    for y in ys.iter().rev() {
        let before = cur.node_count();
        let t0 = std::time::Instant::now();
        cur = eliminate_one(&cur, *y, budgets)?;
        if debug {
            eprintln!("qe: var {} nodes {} -> {} in {:?}", y, before, cur.node_count(), t0.elapsed());
        }
    }
    Ok(cur)
}

/// Replace every leaf whose atom mentions any of `vs` by the constant-true
/// atom `0 ≥ 0`. Purely syntactic, linear time; no simplification.
pub fn local_exists(f: &Formula, vs: &[Var]) -> Formula {
    f.map_atoms(&mut |a| {
        if a.mentions_any(vs) {
            Formula::top()
        } else {
            Formula::Leaf(a.clone())
        }
    })
}

/// Decide a closed prenex sentence. `∀` is handled by negation duality with
/// NNF re-normalization.
pub fn decide(qf: &QuantifiedFormula, total_vars: usize, budgets: &Budgets) -> Result<bool> {
    let mut matrix = qf.matrix.clone();
    for (q, v) in qf.prefix.iter().rev() {
        matrix = match q {
            Quantifier::Exists => eliminate_one(&matrix, *v, budgets)?,
            Quantifier::Forall => {
                let neg = matrix.negate();
                let elim = eliminate_one(&neg, *v, budgets)?;
                canonicalize(&elim.negate())
            }
        };
    }
    let vars = matrix.vars();
    if !vars.is_empty() {
        return Err(Error::Precondition(format!(
            "decide on a non-closed formula (free vars remain: {vars:?})"
        )));
    }
    Ok(matrix.eval(&vec![Int::zero(); total_vars]))
}

/// Decide the Π₂ sentence `∀ inputs ∃ outputs: φ` of a spec.
pub fn decide_forall_exists(spec: &SpecFormula, budgets: &Budgets) -> Result<bool> {
    let prefix: Vec<(Quantifier, Var)> = spec
        .vars
        .inputs()
        .map(|v| (Quantifier::Forall, v))
        .chain(spec.vars.outputs().map(|v| (Quantifier::Exists, v)))
        .collect();
    decide(&QuantifiedFormula { prefix, matrix: spec.body.clone() }, spec.vars.len(), budgets)
}

/// A per-instance witness bound for testing: if `∃y: φ(p, y)` holds at all,
/// a witness exists with `|y| ≤ bound(p)`. Derived from the Cooper analysis
/// (boundary terms shifted by at most `m*`).
pub fn witness_bound(f: &Formula, y: Var, point: &[Int]) -> Int {
    let mut bound = Int::one();
    let mut moduli: Vec<Int> = vec![Int::one()];
    f.visit_atoms(&mut |a| {
        let e = match a {
            Atom::Ge(e) => e,
            Atom::Mod(m) => {
                if m.expr.mentions(y) {
                    moduli.push(m.modulus.clone());
                }
                &m.expr
            }
        };
        if let Some(c) = e.coeffs.get(&y) {
            moduli.push(c.abs());
            // |value of the atom with y removed| / |c| rounded up, at `point`
            let mut t = e.clone();
            t.coeffs.remove(&y);
            let v = t.eval(point).abs();
            let q = v.div_ceil(&c.abs());
            if q > bound {
                bound = q;
            }
        }
    });
    let mstar = lcm_all(moduli.iter());
    bound + mstar + Int::one()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::parse;

    fn b() -> Budgets {
        Budgets::default()
    }

    fn ints(vs: &[i64]) -> Vec<Int> {
        vs.iter().map(|&v| Int::from(v)).collect()
    }

    /// Exact bounded check of `ψ(p) ⇔ ∃y ∈ [−B,B]: φ(p,y)` with B the
    /// instance's Cooper bound.
    fn check_elimination(spec: &SpecFormula, y: Var, lo: i64, hi: i64) {
        let psi = eliminate_one(&spec.body, y, &b()).unwrap();
        assert!(!psi.mentions(y));
        let rest: Vec<Var> = (0..spec.vars.len()).filter(|v| *v != y).collect();
        assert!(rest.len() <= 2, "test helper supports <= 2 remaining vars");
        let mut point = vec![Int::zero(); spec.vars.len()];
        let mut idx = vec![lo; rest.len()];
        'points: loop {
            for (i, v) in rest.iter().enumerate() {
                point[*v] = Int::from(idx[i]);
            }
            let bound = witness_bound(&spec.body, y, &point);
            let mut exists = false;
            let mut yv = -bound.clone();
            while yv <= bound {
                point[y] = yv.clone();
                if spec.body.eval(&point) {
                    exists = true;
                    break;
                }
                yv += 1;
            }
            point[y] = Int::zero();
            assert_eq!(psi.eval(&point), exists, "at {idx:?}");
            let mut i = 0;
            loop {
                if i == idx.len() {
                    break 'points;
                }
                idx[i] += 1;
                if idx[i] <= hi {
                    break;
                }
                idx[i] = lo;
                i += 1;
            }
        }
    }

    #[test]
    fn eliminate_sandwich_is_tautology() {
        // ∃y: (y − x ≥ 1) ∧ (x + 2 − y ≥ 1): y = x+1 always works
        let s = parse(
            "(spec (inputs x) (outputs y) (and (>= (+ y (* -1 x) -1) 0) (>= (+ x 2 (* -1 y) -1) 0)))",
        )
        .unwrap();
        check_elimination(&s, 1, -20, 20);
        let psi = eliminate_one(&s.body, 1, &b()).unwrap();
        for x in -20..=20i64 {
            assert!(psi.eval(&ints(&[x, 0])), "x={x}");
        }
    }

    #[test]
    fn eliminate_contradictory_residues() {
        let s = parse("(spec (inputs) (outputs y) (and (mod= y 0 2) (mod= y 1 2)))").unwrap();
        let psi = eliminate_one(&s.body, 0, &b()).unwrap();
        assert!(!psi.eval(&ints(&[0])));
    }

    #[test]
    fn eliminate_with_coefficient_scaling() {
        // ∃y: 2y = x  ⟺  x even
        let s = parse("(spec (inputs x) (outputs y) (= (+ (* 2 y) (* -1 x)) 0))").unwrap();
        let psi = eliminate_one(&s.body, 1, &b()).unwrap();
        for x in -15..=15i64 {
            assert_eq!(psi.eval(&ints(&[x, 0])), x % 2 == 0, "x={x}");
        }
        check_elimination(&s, 1, -12, 12);
    }

    #[test]
    fn eliminate_mixed_instances() {
        let cases = [
            "(spec (inputs x) (outputs y) (or (and (>= (+ y (* -1 x)) 0) (mod= y 2 3)) (>= (+ (* 2 x) (* -3 y) 1) 0)))",
            "(spec (inputs x z) (outputs y) (and (>= (+ (* 2 y) (* -1 x) z) 0) (>= (+ x (* -1 y) 4) 0)))",
            "(spec (inputs x) (outputs y) (and (mod= (+ (* 2 y) x) 1 4) (>= (+ y (* -1 x)) 0) (>= (+ (* 3 x) (* -1 y) 7) 0)))",
        ];
        for c in cases {
            let s = parse(c).unwrap();
            let y = s.vars.lookup("y").unwrap();
            check_elimination(&s, y, -8, 8);
        }
    }

    #[test]
    fn eliminate_block_examples() {
        // both outputs of a chain: ∃y1,y2: y1 = x ∧ y2 = y1 → ⊤
        let s = parse(
            "(spec (inputs x) (outputs y1 y2) (and (= (+ y1 (* -1 x)) 0) (= (+ y2 (* -1 y1)) 0)))",
        )
        .unwrap();
        let psi = eliminate_block(&s.body, &[1, 2], &b()).unwrap();
        for x in -10..=10i64 {
            assert!(psi.eval(&ints(&[x, 0, 0])));
        }
        // empty block is the identity
        let same = eliminate_block(&s.body, &[], &b()).unwrap();
        assert_eq!(same, s.body);
    }

    #[test]
    fn eliminate_fig1_output_matches_oracle() {
        let s = crate::formula::fig1();
        let psi = eliminate_one(&s.body, 1, &b()).unwrap();
        for x in -30..=30i64 {
            let point = ints(&[x, 0]);
            let bound = witness_bound(&s.body, 1, &point);
            let mut exists = false;
            let mut yv = -bound.clone();
            while yv <= bound {
                if s.body.eval(&[Int::from(x), yv.clone()]) {
                    exists = true;
                    break;
                }
                yv += 1;
            }
            assert_eq!(psi.eval(&point), exists, "x={x}");
        }
    }

    #[test]
    fn local_exists_is_syntactic() {
        let s = crate::formula::fig1();
        let le = local_exists(&s.body, &[1]);
        // atoms mentioning y become ⊤; (3x−2 ≥ 0) stays
        let tops = le.atoms().iter().filter(|a| a.const_value() == Some(true)).count();
        assert_eq!(tops, 3);
        assert_eq!(le.node_count(), s.body.node_count());
        // formula without the variables is unchanged
        let s2 = parse("(spec (inputs x) (outputs y) (>= x 0))").unwrap();
        assert_eq!(local_exists(&s2.body, &[1]), s2.body);
        // single leaf mentioning y
        let s3 = parse("(spec (inputs) (outputs y) (>= y 0))").unwrap();
        assert_eq!(local_exists(&s3.body, &[0]), Formula::top());
    }

    #[test]
    fn decide_pi2_sentences() {
        // ∀x∃y: y − x ≥ 1
        let s = parse("(spec (inputs x) (outputs y) (>= (+ y (* -1 x) -1) 0))").unwrap();
        assert!(decide_forall_exists(&s, &b()).unwrap());
        // ∀x∃y: y ≡ 0 (mod 2) ∧ y = x — fails at odd x
        let s = parse("(spec (inputs x) (outputs y) (and (mod= y 0 2) (= (+ y (* -1 x)) 0)))")
            .unwrap();
        assert!(!decide_forall_exists(&s, &b()).unwrap());
        // ∀x∃y: Ψ₃
        let s = parse(
            "(spec (inputs x) (outputs y) (and (>= (+ y (* -1 x) -1) 0) (>= (+ x 8 (* -1 y)) 0) (mod= y 0 8)))",
        )
        .unwrap();
        assert!(decide_forall_exists(&s, &b()).unwrap());
    }

    #[test]
    fn decide_requires_closed() {
        // x stays free after eliminating y
        let s = parse("(spec (inputs x) (outputs y) (and (>= x 0) (>= y 0)))").unwrap();
        let qf =
            QuantifiedFormula { prefix: vec![(Quantifier::Exists, 1)], matrix: s.body.clone() };
        assert!(matches!(decide(&qf, 2, &b()), Err(Error::Precondition(_))));
    }

    #[test]
    fn exists_implies_local_exists() {
        // paper-stated implication checked pointwise on a box
        let specs = [
            crate::formula::fig1(),
            parse("(spec (inputs x) (outputs y) (and (>= (+ y (* -1 x)) 0) (mod= y 1 4)))")
                .unwrap(),
        ];
        for s in &specs {
            let le = local_exists(&s.body, &[1]);
            for x in -10..=10i64 {
                let mut any = false;
                for y in -30..=30i64 {
                    if s.body.eval(&ints(&[x, y])) {
                        any = true;
                        break;
                    }
                }
                if any {
                    assert!(le.eval(&ints(&[x, 0])), "x={x}");
                }
            }
        }
    }

    #[test]
    fn qe_node_budget() {
        let mut tight = Budgets::default();
        tight.qe_nodes = 8;
        let s = parse(
            "(spec (inputs x) (outputs y) (and (mod= (+ (* 4 y) x) 1 6) (>= (+ y (* -1 x)) 0) (>= (+ (* 5 x) (* -2 y) 3) 0)))",
        )
        .unwrap();
        assert!(matches!(eliminate_one(&s.body, 1, &tight), Err(Error::Resource { .. })));
    }
}
