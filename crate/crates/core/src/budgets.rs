//! Resource budgets for the worst-case-exponential operations.
//!
//! Every budget can be overridden by an environment variable (`PSYNTH_*`)
//! and, in the CLI, by a flag. Desk-scale inputs must fail loudly rather
//! than hang.

/// Tunable limits for compilation and synthesis.
#[derive(Debug, Clone)]
pub struct Budgets {
    /// Maximum number of disjuncts a DNF expansion may produce.
    pub dnf_disjuncts: usize,
    /// Maximum node count of any formula produced by quantifier elimination.
    pub qe_nodes: usize,
    /// Maximum number of points a single oracle box scan may visit.
    pub oracle_points: u64,
    /// Maximum lcm of moduli accepted by the modulo-tameness rewrite.
    pub tame_lcm: u64,
    /// Maximum number of affine candidates per DNF disjunct.
    pub candidates_per_disjunct: usize,
    /// Offset radius knob for affine candidate generation.
    pub offset_radius: u32,
    /// Maximum number of building blocks emitted by the PSySyNF compiler.
    pub psysynf_blocks: usize,
    /// Maximum number of entries in a modular assignment.
    pub assignment_entries: usize,
    /// Maximum gate count of any constructed circuit.
    pub gates: usize,
}

impl Default for Budgets {
    fn default() -> Self {
        Budgets {
            dnf_disjuncts: 1 << 16,
            qe_nodes: 1_000_000,
            oracle_points: 10_000_000,
            tame_lcm: 1 << 16,
            candidates_per_disjunct: 2048,
            offset_radius: 2,
            psysynf_blocks: 1 << 16,
            assignment_entries: 200_000,
            gates: 4_000_000,
        }
    }
}

impl Budgets {
    /// Default budgets with environment-variable overrides applied.
    pub fn from_env() -> Self {
        let mut b = Budgets::default();
        fn get<T: std::str::FromStr>(name: &str, into: &mut T) {
            if let Ok(v) = std::env::var(name) {
                if let Ok(parsed) = v.parse::<T>() {
                    *into = parsed;
                }
            }
        }
        get("PSYNTH_DNF_BUDGET", &mut b.dnf_disjuncts);
        get("PSYNTH_QE_NODE_BUDGET", &mut b.qe_nodes);
        get("PSYNTH_ORACLE_POINT_BUDGET", &mut b.oracle_points);
        get("PSYNTH_TAME_LCM_BUDGET", &mut b.tame_lcm);
        get("PSYNTH_CANDIDATE_BUDGET", &mut b.candidates_per_disjunct);
        get("PSYNTH_OFFSET_RADIUS", &mut b.offset_radius);
        get("PSYNTH_PSYSYNF_BLOCK_BUDGET", &mut b.psysynf_blocks);
        get("PSYNTH_ASSIGNMENT_BUDGET", &mut b.assignment_entries);
        get("PSYNTH_GATE_BUDGET", &mut b.gates);
        b
    }
}
