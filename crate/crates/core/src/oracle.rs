//! Bounded brute-force ground truth.
//!
//! Everything here is plain enumeration over integer boxes: no part of the
//! synthesis pipeline is reused, so these functions can serve as the
//! independent oracle for it. Witness selection follows a fixed well-order
//! on ℤ^m: orthants ordered by their sign pattern read as a binary number
//! (non-negative = 0, first coordinate most significant), ties inside an
//! orthant broken lexicographically by component-wise absolute values.
//!
//! Box scans have an i64 fast path with a precomputed overflow bound and a
//! BigInt fallback, and can be partitioned across threads; failure lists are
//! sorted so reports are order-independent.

use crate::circuit::Circuit;
use crate::error::{Error, Result};
use crate::exactnum::Int;
use crate::formula::{Atom, Formula, SpecFormula, Var};
use num_traits::{Signed, ToPrimitive, Zero};
use std::fmt::Write as _;

/// Per-variable inclusive integer ranges.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntBox {
    pub ranges: Vec<(Int, Int)>,
}

impl IntBox {
    pub fn new(ranges: Vec<(Int, Int)>) -> Result<Self> {
        for (lo, hi) in &ranges {
            if lo > hi {
                return Err(Error::Invalid(format!("empty range {lo}:{hi}")));
            }
        }
        Ok(IntBox { ranges })
    }

    pub fn uniform(dims: usize, lo: i64, hi: i64) -> Self {
        IntBox::new(vec![(Int::from(lo), Int::from(hi)); dims]).expect("lo <= hi")
    }

    pub fn dims(&self) -> usize {
        self.ranges.len()
    }

    pub fn volume(&self) -> Int {
        let mut v = Int::from(1);
        for (lo, hi) in &self.ranges {
            v *= hi - lo + 1;
        }
        v
    }

    pub fn to_text(&self) -> String {
        self.ranges
            .iter()
            .map(|(lo, hi)| format!("{lo}:{hi}"))
            .collect::<Vec<_>>()
            .join(",")
    }
}

fn check_budget(bx: &IntBox, budget: u64) -> Result<()> {
    if bx.volume() > Int::from(budget) {
        return Err(Error::resource("oracle box points", budget));
    }
    Ok(())
}

/// Well-order key for witness selection; smaller key = earlier witness.
pub fn well_order_key(y: &[Int]) -> (Int, Vec<Int>, Vec<bool>) {
    let mut orthant = Int::zero();
    let mut signs = Vec::with_capacity(y.len());
    for v in y {
        orthant = &orthant * 2 + Int::from(i32::from(v.is_negative()));
        signs.push(v.is_negative());
    }
    (orthant, y.iter().map(|v| v.abs()).collect(), signs)
}

/// Odometer over a box in raw lexicographic order (first variable slowest).
struct Odometer<'a> {
    bx: &'a IntBox,
    current: Vec<Int>,
}

impl<'a> Odometer<'a> {
    fn new(bx: &'a IntBox) -> Self {
        let current = bx.ranges.iter().map(|(lo, _)| lo.clone()).collect();
        Odometer { bx, current }
    }

    fn step(&mut self) -> bool {
        let mut i = self.bx.dims();
        loop {
            if i == 0 {
                return false;
            }
            i -= 1;
            self.current[i] += 1;
            if self.current[i] <= self.bx.ranges[i].1 {
                return true;
            }
            self.current[i] = self.bx.ranges[i].0.clone();
        }
    }
}

/// Internal scanner: evaluates `f` over all points of `bx` substituted into
/// the `free` positions of `base`, invoking `on_hit` for each satisfying
/// point. `on_hit` returning `false` stops the scan early.
fn scan(
    f: &Formula,
    base: &[Int],
    free: &[Var],
    bx: &IntBox,
    on_hit: &mut dyn FnMut(&[Int]) -> bool,
) {
    assert_eq!(free.len(), bx.dims());
    if scan_i64(f, base, free, bx, on_hit).is_some() {
        return;
    }
    // BigInt fallback
    let mut point: Vec<Int> = base.to_vec();
    if bx.dims() == 0 {
        if f.eval(&point) {
            on_hit(&[]);
        }
        return;
    }
    let mut odo = Odometer::new(bx);
    loop {
        for (i, v) in free.iter().enumerate() {
            point[*v] = odo.current[i].clone();
        }
        if f.eval(&point) && !on_hit(&odo.current) {
            return;
        }
        if !odo.step() {
            return;
        }
    }
}

/// i64 fast path with incremental atom values; `None` when overflow is
/// possible.
fn scan_i64(
    f: &Formula,
    base: &[Int],
    free: &[Var],
    bx: &IntBox,
    on_hit: &mut dyn FnMut(&[Int]) -> bool,
) -> Option<()> {
    const LIMIT: i128 = (i64::MAX / 4) as i128;

    #[derive(Clone)]
    enum Node {
        Leaf(usize),
        And(Vec<Node>),
        Or(Vec<Node>),
    }
    fn build(f: &Formula, atoms: &mut Vec<Atom>) -> Node {
        match f {
            Formula::Leaf(a) => {
                atoms.push(a.clone());
                Node::Leaf(atoms.len() - 1)
            }
            Formula::And(cs) => Node::And(cs.iter().map(|c| build(c, atoms)).collect()),
            Formula::Or(cs) => Node::Or(cs.iter().map(|c| build(c, atoms)).collect()),
        }
    }
    let mut atoms = vec![];
    let tree = build(f, &mut atoms);

    // per atom: value at the box's low corner + coefficient per free var
    let mut values: Vec<i64> = Vec::with_capacity(atoms.len());
    let mut coefs: Vec<Vec<i64>> = Vec::with_capacity(atoms.len());
    // (residue, modulus, is_mod, differs)
    let mut params: Vec<(i64, i64, bool, bool)> = Vec::with_capacity(atoms.len());
    for a in &atoms {
        let (expr, rmd) = match a {
            Atom::Ge(e) => (e, None),
            Atom::Mod(m) => {
                (&m.expr, Some((m.residue.to_i64()?, m.modulus.to_i64()?, m.differs)))
            }
        };
        let mut acc: i128 = expr.constant.to_i128()?;
        let mut bound: i128 = acc.abs();
        let mut cs = vec![0i64; free.len()];
        for (v, c) in &expr.coeffs {
            let c128 = c.to_i128()?;
            if let Some(pos) = free.iter().position(|fv| fv == v) {
                let lo = bx.ranges[pos].0.to_i128()?;
                let hi = bx.ranges[pos].1.to_i128()?;
                acc = acc.checked_add(c128.checked_mul(lo)?)?;
                bound = bound.checked_add(c128.abs().checked_mul(lo.abs().max(hi.abs()))?)?;
                cs[pos] = c.to_i64()?;
            } else {
                let xv = base[*v].to_i128()?;
                let term = c128.checked_mul(xv)?;
                acc = acc.checked_add(term)?;
                bound = bound.checked_add(term.abs())?;
            }
        }
        if bound >= LIMIT {
            return None;
        }
        values.push(i64::try_from(acc).ok()?);
        coefs.push(cs);
        match rmd {
            Some((r, m, d)) => params.push((r, m, true, d)),
            None => params.push((0, 0, false, false)),
        }
    }

    fn truth(values: &[i64], params: &[(i64, i64, bool, bool)], i: usize) -> bool {
        let (r, m, is_mod, differs) = params[i];
        if is_mod {
            let hit = (values[i] - r).rem_euclid(m) == 0;
            hit != differs
        } else {
            values[i] >= 0
        }
    }
    fn eval_tree(n: &Node, values: &[i64], params: &[(i64, i64, bool, bool)]) -> bool {
        match n {
            Node::Leaf(i) => truth(values, params, *i),
            Node::And(cs) => cs.iter().all(|c| eval_tree(c, values, params)),
            Node::Or(cs) => cs.iter().any(|c| eval_tree(c, values, params)),
        }
    }

    if free.is_empty() {
        if eval_tree(&tree, &values, &params) {
            on_hit(&[]);
        }
        return Some(());
    }

    let lows: Vec<i64> = bx.ranges.iter().map(|(lo, _)| lo.to_i64()).collect::<Option<_>>()?;
    let highs: Vec<i64> = bx.ranges.iter().map(|(_, hi)| hi.to_i64()).collect::<Option<_>>()?;
    let mut cur = lows.clone();
    loop {
        if eval_tree(&tree, &values, &params) {
            let big: Vec<Int> = cur.iter().map(|&v| Int::from(v)).collect();
            if !on_hit(&big) {
                return Some(());
            }
        }
        // odometer step, last variable fastest, updating atom values
        let mut i = free.len();
        loop {
            if i == 0 {
                return Some(());
            }
            i -= 1;
            if cur[i] < highs[i] {
                cur[i] += 1;
                for (a, cs) in coefs.iter().enumerate() {
                    values[a] += cs[i];
                }
                break;
            } else {
                let delta = lows[i] - highs[i];
                cur[i] = lows[i];
                for (a, cs) in coefs.iter().enumerate() {
                    values[a] += cs[i] * delta;
                }
            }
        }
    }
}

/// Exhaustive scan of the box: returns the smallest witness in the fixed
/// well-order restricted to the box, or `None`.
///
/// `fixed` is a full assignment template (length = total variables); the
/// `free` positions are overwritten during the scan.
pub fn bounded_exists(
    f: &Formula,
    fixed: &[Int],
    free: &[Var],
    bx: &IntBox,
    budget: u64,
) -> Result<Option<Vec<Int>>> {
    check_budget(bx, budget)?;
    let mut best: Option<(Vec<Int>, (Int, Vec<Int>, Vec<bool>))> = None;
    scan(f, fixed, free, bx, &mut |w| {
        let key = well_order_key(w);
        match &best {
            Some((_, k)) if *k <= key => {}
            _ => best = Some((w.to_vec(), key)),
        }
        true
    });
    Ok(best.map(|(w, _)| w))
}

/// Existence only, with early exit; same scan semantics as [`bounded_exists`].
pub fn bounded_sat(
    f: &Formula,
    fixed: &[Int],
    free: &[Var],
    bx: &IntBox,
    budget: u64,
) -> Result<bool> {
    check_budget(bx, budget)?;
    let mut found = false;
    scan(f, fixed, free, bx, &mut |_| {
        found = true;
        false
    });
    Ok(found)
}

/// The canonical Skolem reference: the well-order-smallest witness in the
/// box, or the all-zero vector when no witness exists there.
pub fn reference_skolem(
    spec: &SpecFormula,
    input: &[Int],
    bx: &IntBox,
    budget: u64,
) -> Result<Vec<Int>> {
    let outputs: Vec<Var> = spec.vars.outputs().collect();
    assert_eq!(input.len(), spec.vars.num_inputs());
    let mut fixed = input.to_vec();
    fixed.extend(std::iter::repeat(Int::zero()).take(outputs.len()));
    Ok(bounded_exists(&spec.body, &fixed, &outputs, bx, budget)?
        .unwrap_or_else(|| vec![Int::zero(); outputs.len()]))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Failure {
    pub input: Vec<Int>,
    pub oracle_witness: Vec<Int>,
    pub circuit_output: Vec<Int>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VerifyReport {
    pub points_checked: u64,
    pub failures: Vec<Failure>,
    pub input_box: IntBox,
    pub witness_box: IntBox,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }

    /// Line-based text form; one failure per line. The boxes are part of
    /// the report so that "pass" is explicitly scoped to them.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "verify status={} points={} failures={}",
            if self.passed() { "pass" } else { "fail" },
            self.points_checked,
            self.failures.len()
        );
        let _ = writeln!(out, "input_box {}", self.input_box.to_text());
        let _ = writeln!(out, "witness_box {}", self.witness_box.to_text());
        for f in &self.failures {
            let _ = writeln!(
                out,
                "fail input=({}) witness=({}) output=({})",
                join_ints(&f.input),
                join_ints(&f.oracle_witness),
                join_ints(&f.circuit_output)
            );
        }
        out
    }
}

fn join_ints(vs: &[Int]) -> String {
    vs.iter().map(Int::to_string).collect::<Vec<_>>().join(",")
}

/// Check a claimed Skolem circuit against the bounded oracle: for every
/// input point where the oracle finds any witness inside `witness_box`,
/// the circuit's output must satisfy the specification. The unbounded ∃ is
/// approximated by the witness box; the report records both boxes.
pub fn verify_skolem(
    spec: &SpecFormula,
    circuit: &Circuit,
    input_box: &IntBox,
    witness_box: &IntBox,
    budget: u64,
    jobs: usize,
) -> Result<VerifyReport> {
    let n = spec.vars.num_inputs();
    let m = spec.vars.num_outputs();
    if circuit.n_inputs != n || circuit.outputs.len() != m {
        return Err(Error::Dimension(format!(
            "circuit arity {}→{} does not match spec {}→{}",
            circuit.n_inputs,
            circuit.outputs.len(),
            n,
            m
        )));
    }
    if input_box.dims() != n || witness_box.dims() != m {
        return Err(Error::Dimension("box arity mismatch".into()));
    }
    check_budget(input_box, budget)?;

    let inputs: Vec<Vec<Int>> = {
        let mut out = vec![];
        if n == 0 {
            out.push(vec![]);
        } else {
            let mut odo = Odometer::new(input_box);
            loop {
                out.push(odo.current.clone());
                if !odo.step() {
                    break;
                }
            }
        }
        out
    };
    let outputs_vars: Vec<Var> = spec.vars.outputs().collect();

    let run_chunk = |chunk: &[Vec<Int>]| -> Result<Vec<Failure>> {
        let mut failures = vec![];
        for input in chunk {
            let mut fixed = input.clone();
            fixed.extend(std::iter::repeat(Int::zero()).take(m));
            let sat = bounded_sat(&spec.body, &fixed, &outputs_vars, witness_box, budget)?;
            if !sat {
                continue;
            }
            let out = circuit.eval(input);
            let mut point = input.clone();
            point.extend(out.iter().cloned());
            if !spec.body.eval(&point) {
                let witness =
                    bounded_exists(&spec.body, &fixed, &outputs_vars, witness_box, budget)?
                        .expect("sat implies witness");
                failures.push(Failure {
                    input: input.clone(),
                    oracle_witness: witness,
                    circuit_output: out,
                });
            }
        }
        Ok(failures)
    };

    let jobs = jobs.max(1).min(inputs.len().max(1));
    let mut failures: Vec<Failure> = if jobs <= 1 || inputs.len() < 2 {
        run_chunk(&inputs)?
    } else {
        let chunk_size = inputs.len().div_ceil(jobs);
        let chunks: Vec<&[Vec<Int>]> = inputs.chunks(chunk_size).collect();
        let results: Vec<Result<Vec<Failure>>> = std::thread::scope(|scope| {
            let handles: Vec<_> =
                chunks.into_iter().map(|ch| scope.spawn(move || run_chunk(ch))).collect();
            handles.into_iter().map(|h| h.join().expect("worker panicked")).collect()
        });
        let mut all = vec![];
        for r in results {
            all.extend(r?);
        }
        all
    };
    failures.sort_by(|a, b| a.input.cmp(&b.input));
    Ok(VerifyReport {
        points_checked: inputs.len() as u64,
        failures,
        input_box: input_box.clone(),
        witness_box: witness_box.clone(),
    })
}
