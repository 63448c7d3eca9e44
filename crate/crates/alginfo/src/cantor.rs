//! Measures on infinite binary sequences via additive cell functions,
//! finite-depth monotone information approximation, and random
//! transitions with conservation-gap measurement.
//!
//! A measure is represented by `F(x)` = mass of the cylinder of sequences
//! starting with `x`, with `F(x) = F(x0) + F(x1)`. Information between
//! two measures is approximated from below by the depth-`d` sum
//! `log2 Σ 2^{oI(x,y)} F_P(x) F_Q(y)` over cells `x, y` of length `d`.
//! The depth-indexed values are reported as-is; no limit is extrapolated.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bits::Bits;
use crate::oracle::{GapReport, InfoValue, Oracle};

pub const ADDITIVITY_REL_TOL: f64 = 1e-9;
pub const ROW_STABILITY_TOL: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum CantorError {
    #[error("depth {depth} exceeds the measure's depth cap {cap}")]
    DepthExceedsCap { depth: u32, cap: u32 },
    #[error("additivity violated at \"{cell}\": F = {parent}, children sum to {children}")]
    AdditivityViolation {
        cell: Bits,
        parent: f64,
        children: f64,
    },
    #[error("transition row for targets of length {target_len} not stable within {tol} at the depth cap {cap}")]
    NonConvergentRow {
        target_len: u32,
        tol: f64,
        cap: u32,
    },
}

type Eval = Arc<dyn Fn(&Bits) -> f64 + Send + Sync>;

/// A (semi-)measure on infinite sequences, given by its cylinder masses.
#[derive(Clone)]
pub struct CantorMeasure {
    pub name: String,
    pub encoding: Option<String>,
    pub depth_cap: u32,
    eval: Eval,
}

impl std::fmt::Debug for CantorMeasure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CantorMeasure")
            .field("name", &self.name)
            .field("depth_cap", &self.depth_cap)
            .finish()
    }
}

/// Serialized form: leaf-cell masses at a fixed depth.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DepthTable {
    pub depth: u32,
    pub cells: BTreeMap<String, f64>,
}

impl CantorMeasure {
    pub fn from_fn<F>(name: &str, depth_cap: u32, eval: F) -> Self
    where
        F: Fn(&Bits) -> f64 + Send + Sync + 'static,
    {
        CantorMeasure {
            name: name.to_string(),
            encoding: None,
            depth_cap,
            eval: Arc::new(eval),
        }
    }

    pub fn with_encoding(mut self, encoding: &str) -> Self {
        self.encoding = Some(encoding.to_string());
        self
    }

    /// Point measure on `prefix 0 0 0 ...`.
    pub fn point_on_extended(prefix: &Bits) -> Self {
        let prefix = prefix.clone();
        let name = format!("point({}0*)", prefix);
        CantorMeasure::from_fn(&name, 64, move |x| {
            let matches = x.iter().enumerate().all(|(i, b)| {
                let expected = prefix.get(i).unwrap_or(false);
                b == expected
            });
            if matches {
                1.0
            } else {
                0.0
            }
        })
    }

    /// Uniform measure over sequences starting with `prefix`.
    pub fn cylinder_uniform(prefix: &Bits) -> Self {
        let prefix = prefix.clone();
        let name = format!("cylinder({})", prefix);
        CantorMeasure::from_fn(&name, 64, move |x| {
            if x.len() <= prefix.len() {
                if x.is_prefix_of(&prefix) {
                    1.0
                } else {
                    0.0
                }
            } else if prefix.is_prefix_of(x) {
                (-((x.len() - prefix.len()) as f64)).exp2()
            } else {
                0.0
            }
        })
    }

    pub fn uniform() -> Self {
        CantorMeasure::from_fn("uniform", 64, |x| (-(x.len() as f64)).exp2())
    }

    /// Measure from explicit cylinder masses at every node up to a depth.
    /// Missing nodes have mass 0.
    pub fn from_node_table(name: &str, depth_cap: u32, nodes: BTreeMap<Bits, f64>) -> Self {
        let nodes = Arc::new(nodes);
        CantorMeasure::from_fn(name, depth_cap, move |x| {
            nodes.get(x).copied().unwrap_or(0.0)
        })
    }

    /// Measure from leaf-cell masses at one depth; internal nodes are the
    /// sums of their leaves and each leaf continues as the uniform
    /// measure on its cylinder, so additivity holds at every depth.
    pub fn from_depth_table(name: &str, table: &DepthTable) -> Self {
        let leaf_depth = table.depth as usize;
        let mut nodes: BTreeMap<Bits, f64> = BTreeMap::new();
        for (cell, mass) in &table.cells {
            let cell: Bits = cell.parse().expect("cell bitstring");
            for i in (0..=cell.len()).rev() {
                *nodes.entry(cell.prefix(i)).or_insert(0.0) += mass;
            }
        }
        let nodes = Arc::new(nodes);
        CantorMeasure::from_fn(name, 64, move |x| {
            if x.len() <= leaf_depth {
                return nodes.get(x).copied().unwrap_or(0.0);
            }
            match nodes.get(&x.prefix(leaf_depth)) {
                Some(leaf) => leaf * (-((x.len() - leaf_depth) as f64)).exp2(),
                None => 0.0,
            }
        })
    }

    /// Exact mixture `Σ wᵢ Pᵢ` of cylinder masses.
    pub fn mixture(name: &str, parts: Vec<(f64, CantorMeasure)>) -> Self {
        let depth_cap = parts
            .iter()
            .map(|(_, p)| p.depth_cap)
            .min()
            .unwrap_or(0);
        let parts = Arc::new(parts);
        CantorMeasure::from_fn(name, depth_cap, move |x| {
            parts.iter().map(|(w, p)| w * p.mass(x)).sum()
        })
    }

    pub fn mass(&self, x: &Bits) -> f64 {
        (self.eval)(x)
    }

    pub fn total(&self) -> f64 {
        self.mass(&Bits::empty())
    }

    /// Nonzero cells at an exact depth, additivity-checked along the way.
    /// Zero-mass subtrees are pruned (additive nonnegative F).
    pub fn cells_at_depth(&self, depth: u32) -> Result<Vec<(Bits, f64)>, CantorError> {
        if depth > self.depth_cap {
            return Err(CantorError::DepthExceedsCap {
                depth,
                cap: self.depth_cap,
            });
        }
        let mut out = Vec::new();
        let mut stack = vec![(Bits::empty(), self.total())];
        while let Some((cell, mass)) = stack.pop() {
            if mass == 0.0 {
                continue;
            }
            if cell.len() == depth as usize {
                out.push((cell, mass));
                continue;
            }
            let mut zero = cell.clone();
            zero.push(false);
            let mut one = cell.clone();
            one.push(true);
            let m0 = self.mass(&zero);
            let m1 = self.mass(&one);
            let children = m0 + m1;
            if (children - mass).abs() > ADDITIVITY_REL_TOL * mass.abs() + 1e-12 {
                return Err(CantorError::AdditivityViolation {
                    cell,
                    parent: mass,
                    children,
                });
            }
            stack.push((one, m1));
            stack.push((zero, m0));
        }
        out.sort_by(|a, b| a.0.cmp(&b.0));
        Ok(out)
    }

    pub fn check_additivity(&self, depth: u32) -> Result<(), CantorError> {
        self.cells_at_depth(depth).map(|_| ())
    }

    pub fn to_depth_table(&self, depth: u32) -> Result<DepthTable, CantorError> {
        let cells = self
            .cells_at_depth(depth)?
            .into_iter()
            .map(|(c, m)| (c.to_string(), m))
            .collect();
        Ok(DepthTable { depth, cells })
    }
}

/// `log2 Σ_{x,y ∈ {0,1}^d} 2^{oI(x,y)} F_P(x) F_Q(y)`: the depth-`d`
/// lower approximation to the information between P and Q.
pub fn depth_info(
    p: &CantorMeasure,
    q: &CantorMeasure,
    depth: u32,
    oracle: &Oracle,
) -> Result<InfoValue, CantorError> {
    let up = aggregate_om(p, depth, oracle)?;
    let uq = aggregate_om(q, depth, oracle)?;
    let parts = oracle.info_product(&up, &uq);
    Ok(oracle.wrap_product(parts))
}

fn aggregate_om(
    p: &CantorMeasure,
    depth: u32,
    oracle: &Oracle,
) -> Result<crate::oracle::OmVector, CantorError> {
    let mut u = crate::oracle::OmVector::zero();
    for (cell, mass) in p.cells_at_depth(depth)? {
        let v = oracle.om_vector(&cell);
        u.accumulate(&v, mass);
    }
    Ok(u)
}

/// A random transition: a row evaluator `(conditioning cell, target) ↦
/// Λ(target-cylinder | cell)` together with its declared modulus of
/// uniformity (the conditioning depth at which rows of a given target
/// length are exact).
#[derive(Clone)]
pub struct Transition {
    pub name: String,
    pub encoding: Option<String>,
    row: Arc<dyn Fn(&Bits, &Bits) -> f64 + Send + Sync>,
    modulus: Arc<dyn Fn(u32) -> u32 + Send + Sync>,
}

impl std::fmt::Debug for Transition {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Transition").field("name", &self.name).finish()
    }
}

impl Transition {
    pub fn new<R, M>(name: &str, row: R, modulus: M) -> Self
    where
        R: Fn(&Bits, &Bits) -> f64 + Send + Sync + 'static,
        M: Fn(u32) -> u32 + Send + Sync + 'static,
    {
        Transition {
            name: name.to_string(),
            encoding: None,
            row: Arc::new(row),
            modulus: Arc::new(modulus),
        }
    }

    pub fn row_mass(&self, conditioning: &Bits, target: &Bits) -> f64 {
        (self.row)(conditioning, target)
    }

    pub fn modulus(&self, target_len: u32) -> u32 {
        (self.modulus)(target_len)
    }

    /// Rows are point masses at the conditioning sequence.
    pub fn identity() -> Self {
        Transition::new(
            "identity",
            |c, x| {
                if x.is_prefix_of(c) {
                    1.0
                } else {
                    0.0
                }
            },
            |len| len,
        )
    }

    /// Every row is the same fixed measure.
    pub fn constant(r: CantorMeasure) -> Self {
        let name = format!("constant({})", r.name);
        Transition::new(&name, move |_, x| r.mass(x), |_| 0)
    }

    /// Rows are point masses at `0β` for conditioning sequence `β`.
    pub fn bit_prepend() -> Self {
        Transition::new(
            "bit-prepend",
            |c, x| {
                if x.is_empty() {
                    1.0
                } else if x.get(0) == Some(true) {
                    0.0
                } else {
                    let u = x.slice(1, x.len());
                    if u.is_prefix_of(c) {
                        1.0
                    } else {
                        0.0
                    }
                }
            },
            |len| len.saturating_sub(1),
        )
    }

    /// Finite-table transition: the row depends on the conditioning
    /// sequence only through its first `k` bits.
    pub fn block_table(k: u32, rows: BTreeMap<Bits, CantorMeasure>) -> Self {
        let name = format!("block-table(depth {k})");
        Transition::new(
            &name,
            move |c, x| {
                let block = c.prefix(k as usize);
                rows.get(&block).map(|r| r.mass(x)).unwrap_or(0.0)
            },
            move |_| k,
        )
    }
}

/// `(ΛP)(x) = Σ_cells Λ(x | cell) P(cell)`, with the conditioning cells
/// refined past the declared modulus until values stabilize.
pub fn apply_transition(
    transition: &Transition,
    p: &CantorMeasure,
    depth: u32,
) -> Result<CantorMeasure, CantorError> {
    let mut nodes: BTreeMap<Bits, f64> = BTreeMap::new();
    let mut cells_cache: BTreeMap<u32, Vec<(Bits, f64)>> = BTreeMap::new();
    for len in 0..=depth {
        let targets: Vec<Bits> = if len == 0 {
            vec![Bits::empty()]
        } else {
            // children of nonzero nodes only
            nodes
                .iter()
                .filter(|(n, m)| n.len() == (len - 1) as usize && **m != 0.0)
                .flat_map(|(n, _)| {
                    let mut a = n.clone();
                    a.push(false);
                    let mut b = n.clone();
                    b.push(true);
                    [a, b]
                })
                .collect()
        };
        for target in targets {
            let value = stabilized_row_sum(transition, p, &target, &mut cells_cache)?;
            nodes.insert(target, value);
        }
    }
    // the result must itself be additive
    let name = format!("{}({})", transition.name, p.name);
    let out = CantorMeasure::from_node_table(&name, depth, nodes);
    out.check_additivity(depth)?;
    Ok(out)
}

fn stabilized_row_sum(
    transition: &Transition,
    p: &CantorMeasure,
    target: &Bits,
    cells_cache: &mut BTreeMap<u32, Vec<(Bits, f64)>>,
) -> Result<f64, CantorError> {
    let mut m = transition.modulus(target.len() as u32).min(p.depth_cap);
    let mut value = row_sum_at(transition, p, target, m, cells_cache)?;
    loop {
        if m >= p.depth_cap {
            return Err(CantorError::NonConvergentRow {
                target_len: target.len() as u32,
                tol: ROW_STABILITY_TOL,
                cap: p.depth_cap,
            });
        }
        let refined = row_sum_at(transition, p, target, m + 1, cells_cache)?;
        if (refined - value).abs() <= ROW_STABILITY_TOL {
            return Ok(refined.max(value)); // declared-modulus value, refined check passed
        }
        m += 1;
        value = refined;
    }
}

fn row_sum_at(
    transition: &Transition,
    p: &CantorMeasure,
    target: &Bits,
    conditioning_depth: u32,
    cells_cache: &mut BTreeMap<u32, Vec<(Bits, f64)>>,
) -> Result<f64, CantorError> {
    if !cells_cache.contains_key(&conditioning_depth) {
        cells_cache.insert(conditioning_depth, p.cells_at_depth(conditioning_depth)?);
    }
    let cells = &cells_cache[&conditioning_depth];
    Ok(cells
        .iter()
        .map(|(cell, mass)| transition.row_mass(cell, target) * mass)
        .sum())
}

/// `I(P:Q) − I(ΛP:Q)` at one depth.
pub fn transition_conservation_gap(
    transition: &Transition,
    p: &CantorMeasure,
    q: &CantorMeasure,
    depth: u32,
    oracle: &Oracle,
) -> Result<GapReport, CantorError> {
    let before = depth_info(p, q, depth, oracle)?;
    let lp = apply_transition(transition, p, depth)?;
    let after = depth_info(&lp, q, depth, oracle)?;
    Ok(GapReport::between(before, after))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bits::bits;
    use crate::codec::encode_self_delimiting;
    use crate::fixtures;
    use crate::machine::DEFAULT_BUDGET;

    fn oracle() -> Oracle {
        Oracle::new(fixtures::m2(), 16, DEFAULT_BUDGET).unwrap()
    }

    #[test]
    fn point_measure_depth_info_is_single_cell() {
        let o = oracle();
        let p = CantorMeasure::point_on_extended(&Bits::empty());
        let d = 4u32;
        let got = depth_info(&p, &p, d, &o).unwrap();
        let cell = Bits::zeros(d as usize);
        let single = o.bounded_info(&cell, &cell);
        assert_eq!(got.finite().unwrap(), single.finite().unwrap());
    }

    #[test]
    fn cylinder_masses() {
        let p = CantorMeasure::cylinder_uniform(&bits("10"));
        assert_eq!(p.mass(&Bits::empty()), 1.0);
        assert_eq!(p.mass(&bits("1")), 1.0);
        assert_eq!(p.mass(&bits("0")), 0.0);
        assert_eq!(p.mass(&bits("10")), 1.0);
        assert_eq!(p.mass(&bits("101")), 0.5);
        assert_eq!(p.mass(&bits("1011")), 0.25);
        p.check_additivity(8).unwrap();
    }

    #[test]
    fn additivity_violation_detected() {
        let bogus = CantorMeasure::from_fn("bogus", 8, |_| 1.0);
        let o = oracle();
        assert!(matches!(
            depth_info(&bogus, &bogus, 3, &o),
            Err(CantorError::AdditivityViolation { .. })
        ));
    }

    #[test]
    fn depth_cap_enforced() {
        let p = CantorMeasure::from_fn("shallow", 2, |x| (-(x.len() as f64)).exp2());
        assert!(matches!(
            p.cells_at_depth(3),
            Err(CantorError::DepthExceedsCap { .. })
        ));
    }

    #[test]
    fn identity_transition_is_exact() {
        let p = CantorMeasure::cylinder_uniform(&bits("1"));
        let lp = apply_transition(&Transition::identity(), &p, 6).unwrap();
        for x in Bits::all_up_to_length(6) {
            assert!((lp.mass(&x) - p.mass(&x)).abs() < 1e-9);
        }
    }

    #[test]
    fn constant_transition_gives_row_times_total() {
        let r = CantorMeasure::cylinder_uniform(&bits("0"));
        let p = CantorMeasure::cylinder_uniform(&bits("11"));
        let lp = apply_transition(&Transition::constant(r.clone()), &p, 5).unwrap();
        for x in Bits::all_up_to_length(5) {
            assert!((lp.mass(&x) - r.mass(&x) * p.total()).abs() < 1e-12);
        }
    }

    #[test]
    fn bit_prepend_shifts_masses() {
        let p = CantorMeasure::cylinder_uniform(&bits("10"));
        let lp = apply_transition(&Transition::bit_prepend(), &p, 6).unwrap();
        for x in Bits::all_up_to_length(5) {
            let mut zero_x = bits("0");
            zero_x.extend_from(&x);
            assert!((lp.mass(&zero_x) - p.mass(&x)).abs() < 1e-12, "cell {x}");
            let mut one_x = bits("1");
            one_x.extend_from(&x);
            assert_eq!(lp.mass(&one_x), 0.0);
        }
    }

    #[test]
    fn identity_gap_is_exactly_zero() {
        let o = oracle();
        let p = CantorMeasure::cylinder_uniform(&bits("1"));
        let q = CantorMeasure::point_on_extended(&bits("0"));
        let report =
            transition_conservation_gap(&Transition::identity(), &p, &q, 5, &o).unwrap();
        assert_eq!(report.gap, Some(0.0));
    }

    #[test]
    fn depth_monotonicity_small() {
        let o = oracle();
        let pairs = [
            (
                CantorMeasure::cylinder_uniform(&bits("1")),
                CantorMeasure::cylinder_uniform(&bits("1")),
            ),
            (
                CantorMeasure::point_on_extended(&bits("10")),
                CantorMeasure::uniform(),
            ),
            (CantorMeasure::uniform(), CantorMeasure::uniform()),
        ];
        for (p, q) in pairs {
            let mut prev = f64::NEG_INFINITY;
            for d in 1..=6 {
                let v = depth_info(&p, &q, d, &o).unwrap().finite().unwrap();
                assert!(
                    v >= prev - 1e-9,
                    "depth_info({}, {}) fell from {prev} to {v} at depth {d}",
                    p.name,
                    q.name
                );
                prev = v;
            }
        }
    }

    #[test]
    fn mixture_bilinearity() {
        let o = oracle();
        let p1 = CantorMeasure::cylinder_uniform(&bits("0"));
        let p2 = CantorMeasure::cylinder_uniform(&bits("11"));
        let q = CantorMeasure::uniform();
        let mix = CantorMeasure::mixture(
            "mix",
            vec![(0.25, p1.clone()), (0.75, p2.clone())],
        );
        let d = 5;
        let lhs = depth_info(&mix, &q, d, &o).unwrap().finite().unwrap().exp2();
        let a = depth_info(&p1, &q, d, &o).unwrap().finite().unwrap().exp2();
        let b = depth_info(&p2, &q, d, &o).unwrap().finite().unwrap().exp2();
        let rhs = 0.25 * a + 0.75 * b;
        assert!((lhs - rhs).abs() <= 1e-9 * rhs.abs());
    }

    #[test]
    fn embedded_string_decodes_from_its_cell() {
        // the machine can reconstruct x from the cell <x>000..., which is
        // what makes point measures on <x>0^∞ carry i(x:y)-level information
        let o = oracle();
        let x = bits("101");
        let cell = encode_self_delimiting(&x).concat(&Bits::zeros(3));
        let om = o.om_vector(&cell);
        let w = om
            .extra
            .iter()
            .find(|(b, _)| b == &x)
            .map(|(_, w)| *w)
            .unwrap_or(0.0);
        assert!(w >= 0.125, "aux-decode must reach x with a 3-bit program");
    }

    #[test]
    fn depth_table_round_trip() {
        let p = CantorMeasure::cylinder_uniform(&bits("01"));
        let table = p.to_depth_table(4).unwrap();
        let q = CantorMeasure::from_depth_table("again", &table);
        for x in Bits::all_up_to_length(4) {
            assert!((p.mass(&x) - q.mass(&x)).abs() < 1e-12);
        }
        let json = serde_json::to_string(&table).unwrap();
        let parsed: DepthTable = serde_json::from_str(&json).unwrap();
        assert_eq!(parsed.cells, table.cells);
    }
}
