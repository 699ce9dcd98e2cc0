//! Interval-computing circuits and the coalesce-and-sort network.
//!
//! A bounded interval is a pair of wires `[lo, hi]` (empty when `lo > hi`;
//! the canonical empty is `[1,0]`). Unbounded parts are carried as a
//! 4-tuple `⟨lf, lb, uf, ub⟩`: the left ray `(−∞, lb]` is present when
//! `lf = 1` and the right ray `[ub, ∞)` when `uf = 1`.
//!
//! `icomp` is the interval comparator: given two intervals it either
//! orders them (empties first, then disjoint ascending) or coalesces them
//! into the high output. Two intervals are coalescable when
//! `α₂ ≤ β₁ + 1`, so the disjointness guard is the strict `β₁ + 1 < α₂`;
//! adjacent integer intervals like `[3,7]` and `[8,10]` merge to `[3,10]`.
//! `cands_network` chains comparators in bubble passes; every pass
//! preserves the union of the represented sets, so the network output is a
//! coalesced-and-sorted sequence with the same union.

use crate::circuit::{Builder, WireId};
use crate::exactnum::Int;
use crate::formula::{Atom, Formula, Var};
use num_traits::{One, Signed};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IntervalW {
    pub lo: WireId,
    pub hi: WireId,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RaysW {
    pub lf: WireId,
    pub lb: WireId,
    pub uf: WireId,
    pub ub: WireId,
}

/// Interval bundle: the set it denotes at an input point is
/// `(−∞,lb] ∪ ⋃ bounded ∪ [ub,∞)` with the rays gated by their flags.
#[derive(Debug, Clone)]
pub struct BundleW {
    pub bounded: Vec<IntervalW>,
    pub rays: RaysW,
}

/// Interval comparator. Returns `(low, high)`:
/// * any empty input → low = `[1,0]`, high = the other input;
/// * disjoint non-coalescable inputs → ordered ascending;
/// * otherwise → low = `[1,0]`, high = the coalesced interval.
pub fn icomp(b: &mut Builder, i1: IntervalW, i2: IntervalW) -> (IntervalW, IntervalW) {
    let one = b.konst(1);
    let zero = b.konst(0);
    let (a1, b1, a2, b2) = (i1.lo, i1.hi, i2.lo, i2.hi);
    let b1p1 = b.add_const(b1, 1);
    let b2p1 = b.add_const(b2, 1);
    // strict-greater conditions via ite(x ≥ y+1, ...)
    let ite_gt = |b: &mut Builder, x: WireId, y: WireId, t: WireId, e: WireId| {
        let y1 = b.add_const(y, 1);
        b.ite_ge(x, y1, t, e)
    };

    let min_a = b.min(a1, a2);
    let max_b = b.max(b1, b2);

    // λ_l / μ_l: empty checks first, then disjointness, else empty (coalesce)
    let lam_l = {
        let inner21 = ite_gt(b, a1, b2p1, a2, one); // β₂+1 < α₁ → α₂ else 1
        let inner12 = ite_gt(b, a2, b1p1, a1, inner21); // β₁+1 < α₂ → α₁
        let e2 = ite_gt(b, a2, b2, one, inner12); // I₂ empty → 1
        ite_gt(b, a1, b1, one, e2) // I₁ empty → 1
    };
    let mu_l = {
        let inner21 = ite_gt(b, a1, b2p1, b2, zero);
        let inner12 = ite_gt(b, a2, b1p1, b1, inner21);
        let e2 = ite_gt(b, a2, b2, zero, inner12);
        ite_gt(b, a1, b1, zero, e2)
    };
    let lam_h = {
        let inner21 = ite_gt(b, a1, b2p1, a1, min_a);
        let inner12 = ite_gt(b, a2, b1p1, a2, inner21);
        let e2 = ite_gt(b, a2, b2, a1, inner12);
        ite_gt(b, a1, b1, a2, e2)
    };
    let mu_h = {
        let inner21 = ite_gt(b, a1, b2p1, b1, max_b);
        let inner12 = ite_gt(b, a2, b1p1, b2, inner21);
        let e2 = ite_gt(b, a2, b2, b1, inner12);
        ite_gt(b, a1, b1, b2, e2)
    };
    (IntervalW { lo: lam_l, hi: mu_l }, IntervalW { lo: lam_h, hi: mu_h })
}

/// Coalesce-and-sort network: bubble passes of `icomp`. Output has the same
/// length and the same union at every evaluation point, is sorted ascending
/// with empties first, and adjacent non-empty outputs are non-coalescable.
pub fn cands_network(b: &mut Builder, intervals: &[IntervalW]) -> Vec<IntervalW> {
    let mut v = intervals.to_vec();
    let k = v.len();
    if k <= 1 {
        return v;
    }
    for _pass in 0..k {
        for i in 0..k - 1 {
            let (low, high) = icomp(b, v[i], v[i + 1]);
            v[i] = low;
            v[i + 1] = high;
        }
    }
    v
}

/// Intersection of two bounded-interval lists: pairwise intersections
/// `[max(α₁ᵢ,α₂ⱼ), min(β₁ᵢ,β₂ⱼ)]` through the coalesce-and-sort network,
/// keeping the top `s + t` outputs (each component of the intersection has
/// a distinct left endpoint drawn from the `s + t` input left endpoints, so
/// nothing non-empty is dropped).
pub fn intersect_lists(b: &mut Builder, l1: &[IntervalW], l2: &[IntervalW]) -> Vec<IntervalW> {
    if l1.is_empty() || l2.is_empty() {
        return vec![];
    }
    let mut prods = Vec::with_capacity(l1.len() * l2.len());
    for i in l1 {
        for j in l2 {
            let lo = b.max(i.lo, j.lo);
            let hi = b.min(i.hi, j.hi);
            prods.push(IntervalW { lo, hi });
        }
    }
    let sorted = cands_network(b, &prods);
    let keep = (l1.len() + l2.len()).min(sorted.len());
    sorted[sorted.len() - keep..].to_vec()
}

/// Clip a bounded interval against a ray set: up to two bounded pieces.
fn clip_against_rays(b: &mut Builder, iv: IntervalW, rays: RaysW) -> Vec<IntervalW> {
    let one = b.konst(1);
    let zero = b.konst(0);
    // piece inside the left ray (−∞, lb]: [lo, min(hi, lb)] when lf = 1
    let min_hilb = b.min(iv.hi, rays.lb);
    let lo_a = b.ite_eq(rays.lf, one, iv.lo, one);
    let hi_a = b.ite_eq(rays.lf, one, min_hilb, zero);
    // piece inside the right ray [ub, ∞): [max(lo, ub), hi] when uf = 1
    let max_loub = b.max(iv.lo, rays.ub);
    let lo_b = b.ite_eq(rays.uf, one, max_loub, one);
    let hi_b = b.ite_eq(rays.uf, one, iv.hi, zero);
    vec![IntervalW { lo: lo_a, hi: hi_a }, IntervalW { lo: lo_b, hi: hi_b }]
}

/// Build an interval-computing bundle for a `y`-modulo-free NNF formula:
/// at every input point, the bundle's set equals `{v : φ(x̄, v)}`.
///
/// Leaves that mention `y` are single rays with div-based rounding
/// (`b·y + t ≥ 0` gives `y ≥ ⌈−t/b⌉` for `b > 0`, computed as
/// `−div_b(t)`); leaves without `y` denote `ℤ` or `∅` through their
/// characteristic function on both ray flags. Disjunction merges lists and
/// flag-maxes the rays; conjunction intersects lists, clips them against
/// the opposite rays, adds the two bounded ray-cross pieces, and min/maxes
/// the surviving rays.
pub fn interval_circuit(
    b: &mut Builder,
    f: &Formula,
    y: Var,
    binding: &[WireId],
) -> BundleW {
    match f {
        Formula::Leaf(a) => leaf_bundle(b, a, y, binding),
        Formula::Or(cs) => {
            let mut acc = interval_circuit(b, &cs[0], y, binding);
            for c in &cs[1..] {
                let rhs = interval_circuit(b, c, y, binding);
                acc = merge_or(b, acc, rhs);
            }
            acc
        }
        Formula::And(cs) => {
            let mut acc = interval_circuit(b, &cs[0], y, binding);
            for c in &cs[1..] {
                let rhs = interval_circuit(b, c, y, binding);
                acc = merge_and(b, acc, rhs);
            }
            acc
        }
    }
}

fn leaf_bundle(b: &mut Builder, a: &Atom, y: Var, binding: &[WireId]) -> BundleW {
    let zero = b.konst(0);
    let one = b.konst(1);
    match a {
        Atom::Ge(e) if e.mentions(y) => {
            let coeff = e.coeff(y);
            let mut rest = e.clone();
            rest.coeffs.remove(&y);
            let t = b.expr_wire(&rest, binding);
            if coeff.is_positive() {
                // y ≥ ⌈−t/c⌉ = −⌊t/c⌋
                let d = b.div(coeff.clone(), t);
                let ub = b.neg(d);
                BundleW {
                    bounded: vec![],
                    rays: RaysW { lf: zero, lb: zero, uf: one, ub },
                }
            } else {
                // y ≤ ⌊t/(−c)⌋
                let d = b.div(-coeff.clone(), t);
                BundleW {
                    bounded: vec![],
                    rays: RaysW { lf: one, lb: d, uf: zero, ub: zero },
                }
            }
        }
        Atom::Mod(m) if m.expr.mentions(y) => {
            panic!("interval_circuit requires a y-modulo-free formula")
        }
        // y-free atom: ℤ when it holds, ∅ otherwise
        other => {
            let xi = b.characteristic(&Formula::Leaf(other.clone()), binding);
            BundleW { bounded: vec![], rays: RaysW { lf: xi, lb: zero, uf: xi, ub: zero } }
        }
    }
}

fn merge_or(b: &mut Builder, l: BundleW, r: BundleW) -> BundleW {
    let one = b.konst(1);
    let two = b.konst(2);
    let mut bounded = l.bounded;
    bounded.extend(r.bounded);
    let flag_sum = |b: &mut Builder, f1: WireId, f2: WireId| {
        let s = b.add(f1, f2);
        b.min(s, one)
    };
    let lf = flag_sum(b, l.rays.lf, r.rays.lf);
    let uf = flag_sum(b, l.rays.uf, r.rays.uf);
    // bound propagation: widest when both present, else from the live side
    let lsum = b.add(l.rays.lf, r.rays.lf);
    let lmax = b.max(l.rays.lb, r.rays.lb);
    let lone = b.ite_eq(l.rays.lf, one, l.rays.lb, r.rays.lb);
    let lb = b.ite_ge(lsum, two, lmax, lone);
    let usum = b.add(l.rays.uf, r.rays.uf);
    let umin = b.min(l.rays.ub, r.rays.ub);
    let uone = b.ite_eq(l.rays.uf, one, l.rays.ub, r.rays.ub);
    let ub = b.ite_ge(usum, two, umin, uone);
    BundleW { bounded, rays: RaysW { lf, lb, uf, ub } }
}

fn merge_and(b: &mut Builder, l: BundleW, r: BundleW) -> BundleW {
    let one = b.konst(1);
    let zero = b.konst(0);
    let two = b.konst(2);
    let (s, t) = (l.bounded.len(), r.bounded.len());

    let mut cands = intersect_lists(b, &l.bounded, &r.bounded);
    for iv in &l.bounded {
        cands.extend(clip_against_rays(b, *iv, r.rays));
    }
    for iv in &r.bounded {
        cands.extend(clip_against_rays(b, *iv, l.rays));
    }
    // ray crosses: K₁ ∩ I₂ = [ub₁, lb₂] when uf₁ ∧ lf₂, and symmetrically
    let cross = |b: &mut Builder, fa: WireId, fb: WireId, lo: WireId, hi: WireId| {
        let flags = b.add(fa, fb);
        let lo_w = b.ite_ge(flags, two, lo, one);
        let hi_w = b.ite_ge(flags, two, hi, zero);
        IntervalW { lo: lo_w, hi: hi_w }
    };
    cands.push(cross(b, l.rays.uf, r.rays.lf, l.rays.ub, r.rays.lb));
    cands.push(cross(b, r.rays.uf, l.rays.lf, r.rays.ub, l.rays.lb));

    let sorted = cands_network(b, &cands);
    let keep = (s + t + 2).min(sorted.len());
    let bounded = sorted[sorted.len() - keep..].to_vec();
    debug_assert!(bounded.len() <= s + t + 2);

    let lf = b.min(l.rays.lf, r.rays.lf);
    let uf = b.min(l.rays.uf, r.rays.uf);
    let lb = b.min(l.rays.lb, r.rays.lb);
    let ub = b.max(l.rays.ub, r.rays.ub);
    BundleW { bounded, rays: RaysW { lf, lb, uf, ub } }
}

/// Select the first available value `≡ r (mod M)` from a bundle:
/// left ray first, then right ray, then each bounded interval in order;
/// `0` when nothing is available.
pub fn pick_in_bundle(b: &mut Builder, bundle: &BundleW, modulus: &Int, residue: &Int) -> WireId {
    let one = b.konst(1);
    let zero = b.konst(0);
    let m = modulus.clone();
    // innermost-out: default 0, then bounded intervals in reverse, then rays
    let mut acc = zero;
    for iv in bundle.bounded.iter().rev() {
        // a = ⌈(lo − r)/M⌉ = −⌊(r − lo)/M⌋, candidate M·a + r; valid iff a ≤ ⌊(hi − r)/M⌋
        let neg_lo = b.lin(&[(iv.lo, Int::from(-1))], residue.clone());
        let fa = b.div(m.clone(), neg_lo);
        let a = b.neg(fa);
        let hi_r = b.lin(&[(iv.hi, Int::one())], -residue.clone());
        let bb = b.div(m.clone(), hi_r);
        let value = b.lin(&[(a, m.clone())], residue.clone());
        acc = b.ite_ge(bb, a, value, acc);
    }
    // right ray: d = ⌈(ub − r)/M⌉, value M·d + r, available whenever uf = 1
    let neg_ub = b.lin(&[(bundle.rays.ub, Int::from(-1))], residue.clone());
    let fd = b.div(m.clone(), neg_ub);
    let d = b.neg(fd);
    let dval = b.lin(&[(d, m.clone())], residue.clone());
    acc = b.ite_eq(bundle.rays.uf, one, dval, acc);
    // left ray: c = ⌊(lb − r)/M⌋, value M·c + r
    let lb_r = b.lin(&[(bundle.rays.lb, Int::one())], -residue.clone());
    let fc = b.div(m.clone(), lb_r);
    let cval = b.lin(&[(fc, m.clone())], residue.clone());
    acc = b.ite_eq(bundle.rays.lf, one, cval, acc);
    acc
}

/// Evaluate a bundle's set membership at a concrete point (test support).
pub fn bundle_contains(
    circuit: &crate::circuit::Circuit,
    bounded: &[(usize, usize)],
    rays: (usize, usize, usize, usize),
    outputs_of: &[Int],
    v: &Int,
) -> bool {
    let (lf, lb, uf, ub) = rays;
    if outputs_of[lf].is_one() && *v <= outputs_of[lb] {
        return true;
    }
    if outputs_of[uf].is_one() && *v >= outputs_of[ub] {
        return true;
    }
    let _ = circuit;
    bounded.iter().any(|(lo, hi)| outputs_of[*lo] <= *v && *v <= outputs_of[*hi])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::Circuit;

    fn ints(vs: &[i64]) -> Vec<Int> {
        vs.iter().map(|&v| Int::from(v)).collect()
    }

    /// Build a circuit computing icomp of two constant-input intervals.
    fn icomp_values(i1: (i64, i64), i2: (i64, i64)) -> ((i64, i64), (i64, i64)) {
        let mut b = Builder::new(4);
        let a1 = b.input(0);
        let b1 = b.input(1);
        let a2 = b.input(2);
        let b2 = b.input(3);
        let (low, high) =
            icomp(&mut b, IntervalW { lo: a1, hi: b1 }, IntervalW { lo: a2, hi: b2 });
        let c = b.finish(vec![low.lo, low.hi, high.lo, high.hi]);
        let out = c.eval(&ints(&[i1.0, i1.1, i2.0, i2.1]));
        let v: Vec<i64> = out.iter().map(|x| i64::try_from(x).unwrap()).collect();
        ((v[0], v[1]), (v[2], v[3]))
    }

    #[test]
    fn icomp_examples() {
        // adjacent intervals coalesce
        assert_eq!(icomp_values((3, 7), (8, 10)), ((1, 0), (3, 10)));
        // empty input propagates the other
        assert_eq!(icomp_values((1, 0), (2, 5)), ((1, 0), (2, 5)));
        // disjoint already-ordered with a gap stay put
        assert_eq!(icomp_values((1, 3), (6, 9)), ((1, 3), (6, 9)));
        // out-of-order disjoint get swapped
        assert_eq!(icomp_values((6, 9), (1, 3)), ((1, 3), (6, 9)));
        // overlap coalesces
        assert_eq!(icomp_values((3, 7), (5, 12)), ((1, 0), (3, 12)));
    }

    /// Value-level reference: sort non-empty intervals, sweep-merge
    /// coalescable ones, pad with [1,0] empties in front.
    pub(crate) fn reference_coalesce_sort(input: &[(i64, i64)]) -> Vec<(i64, i64)> {
        let mut live: Vec<(i64, i64)> = input.iter().copied().filter(|(l, h)| l <= h).collect();
        live.sort();
        let mut merged: Vec<(i64, i64)> = vec![];
        for (l, h) in live {
            match merged.last_mut() {
                Some((_, ph)) if l <= *ph + 1 => *ph = (*ph).max(h),
                _ => merged.push((l, h)),
            }
        }
        let mut out = vec![(1, 0); input.len() - merged.len()];
        out.extend(merged);
        out
    }

    fn network_circuit(k: usize) -> Circuit {
        let mut b = Builder::new(2 * k);
        let ivs: Vec<IntervalW> = (0..k)
            .map(|i| {
                let lo = b.input(2 * i);
                let hi = b.input(2 * i + 1);
                IntervalW { lo, hi }
            })
            .collect();
        let sorted = cands_network(&mut b, &ivs);
        let outs: Vec<WireId> = sorted.iter().flat_map(|iv| [iv.lo, iv.hi]).collect();
        b.finish(outs)
    }

    fn run_network(c: &Circuit, input: &[(i64, i64)]) -> Vec<(i64, i64)> {
        let flat: Vec<i64> = input.iter().flat_map(|&(l, h)| [l, h]).collect();
        let out = c.eval(&ints(&flat));
        out.chunks(2).map(|p| (i64::try_from(&p[0]).unwrap(), i64::try_from(&p[1]).unwrap())).collect()
    }

    fn union_set(ivs: &[(i64, i64)]) -> std::collections::BTreeSet<i64> {
        let mut s = std::collections::BTreeSet::new();
        for &(l, h) in ivs {
            for v in l..=h {
                s.insert(v);
            }
        }
        s
    }

    fn assert_coalesced_sorted(ivs: &[(i64, i64)]) {
        for i in 0..ivs.len() {
            for j in i + 1..ivs.len() {
                let (a1, b1) = ivs[i];
                let (a2, b2) = ivs[j];
                // I_i ≺ I_j: empty, or disjoint-noncoalescable below
                let empty1 = a1 > b1;
                let ok = empty1 || (a1 <= b1 && b1 < a2 && a2 <= b2 && a2 > b1 + 1);
                assert!(ok, "not sorted at {i},{j}: {ivs:?}");
            }
        }
    }

    #[test]
    fn network_paper_example() {
        let c = network_circuit(4);
        let out = run_network(&c, &[(3, 7), (8, 10), (1, 0), (12, 20)]);
        assert_eq!(union_set(&out), union_set(&[(3, 10), (12, 20)]));
        assert_coalesced_sorted(&out);
        // non-empty suffix is exactly the coalesced content
        let nonempty: Vec<_> = out.iter().copied().filter(|(l, h)| l <= h).collect();
        assert_eq!(nonempty, vec![(3, 10), (12, 20)]);
    }

    #[test]
    fn network_all_empty_and_idempotence() {
        let c = network_circuit(3);
        let out = run_network(&c, &[(1, 0), (5, 2), (9, 3)]);
        assert!(out.iter().all(|(l, h)| l > h));
        // already coalesced-sorted input is pointwise preserved as sets
        let sorted_in = [(1, 0), (2, 4), (7, 9)];
        let out = run_network(&c, &sorted_in);
        assert_eq!(union_set(&out), union_set(&sorted_in));
        assert_coalesced_sorted(&out);
    }

    #[test]
    fn network_matches_reference_exhaustively_small() {
        let c = network_circuit(3);
        for a in -3..=3i64 {
            for bb in -3..=3i64 {
                for cc in -3..=3i64 {
                    for d in -3..=3i64 {
                        let input = [(a, bb), (cc, d), (1, 0)];
                        let out = run_network(&c, &input);
                        let want = reference_coalesce_sort(&input);
                        assert_eq!(
                            union_set(&out),
                            union_set(&want),
                            "union mismatch on {input:?}"
                        );
                        assert_coalesced_sorted(&out);
                    }
                }
            }
        }
    }

    #[test]
    fn network_randomized() {
        let mut state = 0x1234_5678_9abc_def0u64;
        let mut rnd = move |n: i64| {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state % (n as u64)) as i64
        };
        for k in 2..=6usize {
            let c = network_circuit(k);
            for _ in 0..300 {
                let input: Vec<(i64, i64)> =
                    (0..k).map(|_| (rnd(41) - 20, rnd(41) - 20)).collect();
                let out = run_network(&c, &input);
                assert_eq!(union_set(&out), union_set(&input), "union on {input:?}");
                assert_coalesced_sorted(&out);
            }
        }
    }

    #[test]
    fn intersect_lists_examples() {
        // {[0,10]} ∩ {[3,5],[8,12]} = {3,4,5} ∪ {8,9,10}
        let mut b = Builder::new(0);
        let k = |b: &mut Builder, v: i64| b.konst(v);
        let l1 = vec![IntervalW { lo: k(&mut b, 0), hi: k(&mut b, 10) }];
        let l2 = vec![
            IntervalW { lo: k(&mut b, 3), hi: k(&mut b, 5) },
            IntervalW { lo: k(&mut b, 8), hi: k(&mut b, 12) },
        ];
        let out = intersect_lists(&mut b, &l1, &l2);
        let outs: Vec<WireId> = out.iter().flat_map(|iv| [iv.lo, iv.hi]).collect();
        let c = b.finish(outs);
        let vals = c.eval(&[]);
        let ivs: Vec<(i64, i64)> = vals
            .chunks(2)
            .map(|p| (i64::try_from(&p[0]).unwrap(), i64::try_from(&p[1]).unwrap()))
            .collect();
        assert_eq!(union_set(&ivs), union_set(&[(3, 5), (8, 10)]));

        // disjoint lists → all empty
        let mut b = Builder::new(0);
        let l1 = vec![IntervalW { lo: k(&mut b, 0), hi: k(&mut b, 2) }];
        let l2 = vec![IntervalW { lo: k(&mut b, 5), hi: k(&mut b, 9) }];
        let out = intersect_lists(&mut b, &l1, &l2);
        let outs: Vec<WireId> = out.iter().flat_map(|iv| [iv.lo, iv.hi]).collect();
        let c = b.finish(outs);
        let vals = c.eval(&[]);
        assert!(vals.chunks(2).all(|p| p[0] > p[1]));
    }

    #[test]
    fn intersect_needs_more_than_max_s_t() {
        // ([0,10] ∪ [20,30]) ∩ ([1,2] ∪ [5,25]) has three components
        let mut b = Builder::new(0);
        let k = |b: &mut Builder, v: i64| b.konst(v);
        let l1 = vec![
            IntervalW { lo: k(&mut b, 0), hi: k(&mut b, 10) },
            IntervalW { lo: k(&mut b, 20), hi: k(&mut b, 30) },
        ];
        let l2 = vec![
            IntervalW { lo: k(&mut b, 1), hi: k(&mut b, 2) },
            IntervalW { lo: k(&mut b, 5), hi: k(&mut b, 25) },
        ];
        let out = intersect_lists(&mut b, &l1, &l2);
        let outs: Vec<WireId> = out.iter().flat_map(|iv| [iv.lo, iv.hi]).collect();
        let c = b.finish(outs);
        let vals = c.eval(&[]);
        let ivs: Vec<(i64, i64)> = vals
            .chunks(2)
            .map(|p| (i64::try_from(&p[0]).unwrap(), i64::try_from(&p[1]).unwrap()))
            .collect();
        assert_eq!(union_set(&ivs), union_set(&[(1, 2), (5, 10), (20, 25)]));
    }
}
