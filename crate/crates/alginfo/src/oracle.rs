//! The information oracle: algorithmic probability, prefix complexity,
//! mutual information and the read-bounded extension, all exact for a
//! fixed machine and resource bounds, with memoized enumerations.
//!
//! Values are reported as [`InfoValue`] so that no number escapes without
//! the machine name and bounds it was computed under. Terms the bounded
//! enumeration cannot resolve are excluded and accounted for in
//! `resolved_mass`, never silently treated as 0 or ∞.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use serde::Serialize;

use crate::bits::Bits;
use crate::codec::pair_encode;
use crate::logdomain::{log2_rational, pow2};
use crate::machine::{HaltingProgram, MachineError, MachineSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ResourceBounds {
    pub max_len: u32,
    pub budget: u64,
}

/// A log2-domain information value. `Unresolved` means the bounded
/// enumeration found no witnessing program at all; it is distinct from a
/// legitimate empty sum (−∞).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum LogValue {
    Finite(f64),
    NegInf,
    Unresolved,
}

impl LogValue {
    pub fn finite(self) -> Option<f64> {
        match self {
            LogValue::Finite(v) => Some(v),
            _ => None,
        }
    }

    pub fn is_unresolved(self) -> bool {
        matches!(self, LogValue::Unresolved)
    }

    /// Numeric view with −∞ for empty sums; `None` only when unresolved.
    pub fn as_f64(self) -> Option<f64> {
        match self {
            LogValue::Finite(v) => Some(v),
            LogValue::NegInf => Some(f64::NEG_INFINITY),
            LogValue::Unresolved => None,
        }
    }
}

/// An information value together with its provenance.
#[derive(Debug, Clone, Serialize)]
pub struct InfoValue {
    pub value: LogValue,
    pub bounds: ResourceBounds,
    pub machine: String,
    /// Fraction of the relevant weight resting on oracle-resolved terms.
    pub resolved_mass: f64,
}

impl InfoValue {
    pub fn is_partial(&self) -> bool {
        self.resolved_mass < 1.0 - 1e-12
    }

    pub fn finite(&self) -> Option<f64> {
        self.value.finite()
    }
}

/// Before/after information around one randomized-processing step.
#[derive(Debug, Clone, Serialize)]
pub struct GapReport {
    pub before: InfoValue,
    pub after: InfoValue,
    /// `before − after`; conservation says this stays above a machine
    /// constant `−c`. `None` when either side is unresolved.
    pub gap: Option<f64>,
}

impl GapReport {
    pub fn between(before: InfoValue, after: InfoValue) -> Self {
        let gap = match (before.value, after.value) {
            (LogValue::Finite(b), LogValue::Finite(a)) => Some(b - a),
            (LogValue::NegInf, LogValue::NegInf) => Some(0.0),
            (LogValue::Finite(_), LogValue::NegInf) => Some(f64::INFINITY),
            (LogValue::NegInf, LogValue::Finite(_)) => Some(f64::NEG_INFINITY),
            _ => None,
        };
        GapReport { before, after, gap }
    }
}

/// One enumeration: the halting programs under a fixed conditioning
/// string, grouped by output.
pub struct EnumTable {
    pub programs: Vec<HaltingProgram>,
    by_output: HashMap<Bits, OutputStats>,
    /// Σ 2^(−|p|) over all halting programs.
    pub total_mass: BigRational,
}

#[derive(Clone)]
struct OutputStats {
    prob: BigRational,
    min_len: u32,
}

impl EnumTable {
    fn build(programs: Vec<HaltingProgram>) -> Self {
        let mut by_output: HashMap<Bits, OutputStats> = HashMap::new();
        let mut total = BigRational::zero();
        for h in &programs {
            let w = pow2(-(h.program.len() as i64));
            total += &w;
            by_output
                .entry(h.output.clone())
                .and_modify(|s| {
                    s.prob += &w;
                    s.min_len = s.min_len.min(h.program.len() as u32);
                })
                .or_insert(OutputStats {
                    prob: w,
                    min_len: h.program.len() as u32,
                });
        }
        EnumTable {
            programs,
            by_output,
            total_mass: total,
        }
    }

    pub fn prob(&self, x: &Bits) -> BigRational {
        self.by_output
            .get(x)
            .map(|s| s.prob.clone())
            .unwrap_or_else(BigRational::zero)
    }

    pub fn min_len(&self, x: &Bits) -> Option<u32> {
        self.by_output.get(x).map(|s| s.min_len)
    }

    pub fn outputs(&self) -> impl Iterator<Item = (&Bits, &BigRational)> {
        self.by_output.iter().map(|(k, v)| (k, &v.prob))
    }
}

/// Sparse view of a read-bounded output distribution: `base` scales the
/// shared auxiliary-free part, `extra` holds the aux-dependent terms.
#[derive(Debug, Clone)]
pub struct OmVector {
    pub base: f64,
    pub extra: Vec<(Bits, f64)>,
}

impl OmVector {
    pub fn zero() -> Self {
        OmVector {
            base: 0.0,
            extra: Vec::new(),
        }
    }

    /// `self += weight · other`, merging sparse entries.
    pub fn accumulate(&mut self, other: &OmVector, weight: f64) {
        self.base += weight * other.base;
        for (bits, v) in &other.extra {
            match self.extra.iter_mut().find(|(b, _)| b == bits) {
                Some((_, cur)) => *cur += weight * v,
                None => self.extra.push((bits.clone(), weight * v)),
            }
        }
    }
}

/// Exact sum pieces from the rational (slow-path) information product.
pub struct ExactParts {
    /// Σ over resolved pairs of `2^{i(a:b)} · w_a · w_b`.
    pub resolved_sum: BigRational,
    pub resolved_mass: BigRational,
    pub total_mass: BigRational,
}

pub struct ProductParts {
    pub resolved_sum: f64,
    pub unresolved_mass: f64,
    pub total_mass: f64,
}

/// Dense pair-information machinery over the auxiliary-free output set.
struct InfoCore {
    ids: HashMap<Bits, u32>,
    v0: Vec<f64>,
    v0_total: f64,
    n: usize,
    /// 2^{i(a:b)} row-major; 0 where unresolved.
    matrix: Vec<f64>,
    resolved: Vec<bool>,
    /// Every enumerated output that decodes as a pair, with its K.
    pair_outputs: Vec<(Bits, Bits, i64)>,
    /// Σ_b M[a][b]·v0[b] and the unresolved v0-mass per row.
    row_sum: Vec<f64>,
    row_unres: Vec<f64>,
    col_sum: Vec<f64>,
    col_unres: Vec<f64>,
    s00: f64,
    u00: f64,
}

/// Pair sums of one off-core output against the whole core.
struct DeltaRow {
    row_sum: f64,
    row_unres: f64,
    col_sum: f64,
    col_unres: f64,
}

struct Inner {
    tables: HashMap<Bits, Arc<EnumTable>>,
    core: Option<Arc<InfoCore>>,
    delta_rows: HashMap<Bits, Arc<DeltaRow>>,
    pair_memo: HashMap<(Bits, Bits), Option<i64>>,
}

/// Oracle configuration and memo for one machine under fixed bounds.
///
/// `ambient_aux` is the conditioning string under which plain complexities
/// and mutual informations are taken (empty by default); the read-bounded
/// operations condition their output distributions explicitly.
pub struct Oracle {
    machine: Arc<MachineSpec>,
    bounds: ResourceBounds,
    ambient_aux: Bits,
    inner: Mutex<Inner>,
}

impl Oracle {
    pub fn new(machine: MachineSpec, max_len: u32, budget: u64) -> Result<Self, MachineError> {
        Self::with_ambient_aux(machine, max_len, budget, Bits::empty())
    }

    pub fn with_ambient_aux(
        machine: MachineSpec,
        max_len: u32,
        budget: u64,
        ambient_aux: Bits,
    ) -> Result<Self, MachineError> {
        if max_len > machine.hard_cap {
            return Err(MachineError::BoundTooLarge {
                bound: max_len,
                cap: machine.hard_cap,
            });
        }
        if budget == 0 {
            return Err(MachineError::ZeroBudget);
        }
        Ok(Oracle {
            machine: Arc::new(machine),
            bounds: ResourceBounds { max_len, budget },
            ambient_aux,
            inner: Mutex::new(Inner {
                tables: HashMap::new(),
                core: None,
                delta_rows: HashMap::new(),
                pair_memo: HashMap::new(),
            }),
        })
    }

    pub fn machine(&self) -> &MachineSpec {
        &self.machine
    }

    pub fn machine_name(&self) -> &str {
        &self.machine.name
    }

    pub fn bounds(&self) -> ResourceBounds {
        self.bounds
    }

    pub fn ambient_aux(&self) -> &Bits {
        &self.ambient_aux
    }

    pub fn info_value(&self, value: LogValue, resolved_mass: f64) -> InfoValue {
        InfoValue {
            value,
            bounds: self.bounds,
            machine: self.machine.name.clone(),
            resolved_mass,
        }
    }

    /// Memoized enumeration under a conditioning string.
    pub fn table_for(&self, aux: &Bits) -> Arc<EnumTable> {
        let inner = self.inner.lock().unwrap();
        if let Some(t) = inner.tables.get(aux) {
            return Arc::clone(t);
        }
        drop(inner);
        let programs = self
            .machine
            .enumerate(self.bounds.max_len, self.bounds.budget, aux)
            .expect("bounds validated at construction");
        let table = Arc::new(EnumTable::build(programs));
        let mut inner = self.inner.lock().unwrap();
        inner
            .tables
            .entry(aux.clone())
            .or_insert_with(|| Arc::clone(&table));
        Arc::clone(inner.tables.get(aux).unwrap())
    }

    fn ambient_table(&self) -> Arc<EnumTable> {
        let aux = self.ambient_aux.clone();
        self.table_for(&aux)
    }

    /// Algorithmic probability: Σ 2^(−|p|) over halting programs with
    /// output `x` under `aux`. Exact dyadic rational.
    pub fn alg_prob(&self, x: &Bits, aux: &Bits) -> BigRational {
        self.table_for(aux).prob(x)
    }

    /// Prefix complexity: the shortest halting program for `x` under
    /// `aux`, or `None` within these bounds.
    pub fn complexity(&self, x: &Bits, aux: &Bits) -> Option<u32> {
        self.table_for(aux).min_len(x)
    }

    /// `K(x) + K(y) − K(<x><y>)` under the ambient conditioning, as an
    /// exact integer; `None` when any component is unresolved.
    pub fn mutual_info_raw(&self, x: &Bits, y: &Bits) -> Option<i64> {
        {
            let inner = self.inner.lock().unwrap();
            if let Some(v) = inner.pair_memo.get(&(x.clone(), y.clone())) {
                return *v;
            }
        }
        let table = self.ambient_table();
        let value = (|| {
            let kx = table.min_len(x)? as i64;
            let ky = table.min_len(y)? as i64;
            let kxy = table.min_len(&pair_encode(x, y))? as i64;
            Some(kx + ky - kxy)
        })();
        let mut inner = self.inner.lock().unwrap();
        inner.pair_memo.insert((x.clone(), y.clone()), value);
        value
    }

    pub fn mutual_info(&self, x: &Bits, y: &Bits) -> InfoValue {
        match self.mutual_info_raw(x, y) {
            Some(i) => self.info_value(LogValue::Finite(i as f64), 1.0),
            None => self.info_value(LogValue::Unresolved, 0.0),
        }
    }

    // -- read-bounded information ------------------------------------------

    /// Builds (or fetches) the dense pair machinery over the aux-free
    /// output set.
    fn core(&self) -> Arc<InfoCore> {
        {
            let inner = self.inner.lock().unwrap();
            if let Some(c) = &inner.core {
                return Arc::clone(c);
            }
        }
        let base = self.table_for(&Bits::empty());
        let ambient = self.ambient_table();
        let mut outputs: Vec<Bits> = base.by_output.keys().cloned().collect();
        outputs.sort();
        let n = outputs.len();
        let mut ids = HashMap::with_capacity(n);
        for (i, o) in outputs.iter().enumerate() {
            ids.insert(o.clone(), i as u32);
        }
        let v0: Vec<f64> = outputs
            .iter()
            .map(|o| base.prob(o).to_f64().unwrap_or(0.0))
            .collect();
        let v0_total: f64 = v0.iter().sum();
        let k: Vec<Option<i64>> = outputs
            .iter()
            .map(|o| ambient.min_len(o).map(|v| v as i64))
            .collect();
        // A pair (a,b) resolves exactly when pair_encode(a,b) is itself an
        // enumerated output, so walk the output set once and decode instead
        // of encoding all n² pairs.
        let mut pair_outputs = Vec::new();
        for (z, _) in ambient.outputs() {
            if let Ok((a, b)) = crate::codec::pair_decode(z) {
                pair_outputs.push((a, b, ambient.min_len(z).unwrap() as i64));
            }
        }
        pair_outputs.sort_by(|x, y| (&x.0, &x.1).cmp(&(&y.0, &y.1)));
        let mut matrix = vec![0.0f64; n * n];
        let mut resolved = vec![false; n * n];
        for (a, b, kab) in &pair_outputs {
            if let (Some(&ia), Some(&ib)) = (ids.get(a), ids.get(b)) {
                if let (Some(ka), Some(kb)) = (k[ia as usize], k[ib as usize]) {
                    let idx = ia as usize * n + ib as usize;
                    matrix[idx] = ((ka + kb - kab) as f64).exp2();
                    resolved[idx] = true;
                }
            }
        }
        let mut row_sum = vec![0.0; n];
        let mut row_unres = vec![0.0; n];
        let mut col_sum = vec![0.0; n];
        let mut col_unres = vec![0.0; n];
        let mut s00 = 0.0;
        let mut u00 = 0.0;
        for a in 0..n {
            for b in 0..n {
                let idx = a * n + b;
                if resolved[idx] {
                    let term = matrix[idx] * v0[b];
                    row_sum[a] += term;
                    col_sum[b] += matrix[idx] * v0[a];
                    s00 += matrix[idx] * v0[a] * v0[b];
                } else {
                    row_unres[a] += v0[b];
                    col_unres[b] += v0[a];
                    u00 += v0[a] * v0[b];
                }
            }
        }
        let core = Arc::new(InfoCore {
            ids,
            v0,
            v0_total,
            n,
            matrix,
            resolved,
            pair_outputs,
            row_sum,
            row_unres,
            col_sum,
            col_unres,
            s00,
            u00,
        });
        let mut inner = self.inner.lock().unwrap();
        inner.core.get_or_insert_with(|| Arc::clone(&core));
        Arc::clone(inner.core.as_ref().unwrap())
    }

    fn delta_row(&self, t: &Bits, core: &InfoCore) -> Arc<DeltaRow> {
        {
            let inner = self.inner.lock().unwrap();
            if let Some(r) = inner.delta_rows.get(t) {
                return Arc::clone(r);
            }
        }
        let ambient = self.ambient_table();
        let kt = ambient.min_len(t).map(|v| v as i64);
        let mut row = DeltaRow {
            row_sum: 0.0,
            row_unres: core.v0_total,
            col_sum: 0.0,
            col_unres: core.v0_total,
        };
        if let Some(kt) = kt {
            // only decoded pair outputs can resolve (t, ·) or (·, t)
            for (a, b, kab) in &core.pair_outputs {
                if a == t {
                    if let Some(&ib) = core.ids.get(b) {
                        if let Some(kb) = ambient.min_len(b) {
                            let v0b = core.v0[ib as usize];
                            row.row_sum += ((kt + kb as i64 - kab) as f64).exp2() * v0b;
                            row.row_unres -= v0b;
                        }
                    }
                }
                if b == t {
                    if let Some(&ia) = core.ids.get(a) {
                        if let Some(ka) = ambient.min_len(a) {
                            let v0a = core.v0[ia as usize];
                            row.col_sum += ((ka as i64 + kt - kab) as f64).exp2() * v0a;
                            row.col_unres -= v0a;
                        }
                    }
                }
            }
        }
        let row = Arc::new(row);
        let mut inner = self.inner.lock().unwrap();
        inner
            .delta_rows
            .entry(t.clone())
            .or_insert_with(|| Arc::clone(&row));
        Arc::clone(inner.delta_rows.get(t).unwrap())
    }

    /// The read-bounded output distribution under conditioning `cond`,
    /// in split base/extra form.
    pub fn om_vector(&self, cond: &Bits) -> OmVector {
        let table = self.table_for(cond);
        let mut extra: HashMap<Bits, f64> = HashMap::new();
        for h in &table.programs {
            if h.aux_bits_read > 0 {
                *extra.entry(h.output.clone()).or_insert(0.0) +=
                    (-(h.program.len() as f64)).exp2();
            }
        }
        let mut extra: Vec<(Bits, f64)> = extra.into_iter().collect();
        extra.sort_by(|a, b| a.0.cmp(&b.0));
        OmVector { base: 1.0, extra }
    }

    /// `Σ_{a,b} P(a) Q(b) 2^{i(a:b)}` over resolved pairs, with the
    /// unresolved and total weights, for split vectors P and Q.
    pub fn info_product(&self, p: &OmVector, q: &OmVector) -> ProductParts {
        let core = self.core();
        let mut sum = core.s00 * p.base * q.base;
        let mut unres = core.u00 * p.base * q.base;
        // extra(P) against core
        for (a, wa) in &p.extra {
            let (rs, ru) = match core.ids.get(a) {
                Some(&id) => (core.row_sum[id as usize], core.row_unres[id as usize]),
                None => {
                    let row = self.delta_row(a, &core);
                    (row.row_sum, row.row_unres)
                }
            };
            sum += wa * q.base * rs;
            unres += wa * q.base * ru;
        }
        // core against extra(Q)
        for (b, wb) in &q.extra {
            let (cs, cu) = match core.ids.get(b) {
                Some(&id) => (core.col_sum[id as usize], core.col_unres[id as usize]),
                None => {
                    let row = self.delta_row(b, &core);
                    (row.col_sum, row.col_unres)
                }
            };
            sum += p.base * wb * cs;
            unres += p.base * wb * cu;
        }
        // extra × extra
        for (a, wa) in &p.extra {
            for (b, wb) in &q.extra {
                match self.pair_pow2(a, b, &core) {
                    Some(m) => sum += wa * wb * m,
                    None => unres += wa * wb,
                }
            }
        }
        let p_total = p.base * core.v0_total + p.extra.iter().map(|(_, w)| w).sum::<f64>();
        let q_total = q.base * core.v0_total + q.extra.iter().map(|(_, w)| w).sum::<f64>();
        ProductParts {
            resolved_sum: sum,
            unresolved_mass: unres,
            total_mass: p_total * q_total,
        }
    }

    fn pair_pow2(&self, a: &Bits, b: &Bits, core: &InfoCore) -> Option<f64> {
        if let (Some(&ia), Some(&ib)) = (core.ids.get(a), core.ids.get(b)) {
            let idx = ia as usize * core.n + ib as usize;
            return if core.resolved[idx] {
                Some(core.matrix[idx])
            } else {
                None
            };
        }
        self.mutual_info_raw(a, b).map(|i| (i as f64).exp2())
    }

    /// Read-bounded mutual information `log2 Σ om(a|x) om(b|y) 2^{i(a:b)}`.
    pub fn bounded_info(&self, x: &Bits, y: &Bits) -> InfoValue {
        let p = self.om_vector(x);
        let q = self.om_vector(y);
        let parts = self.info_product(&p, &q);
        self.wrap_product(parts)
    }

    pub fn wrap_product(&self, parts: ProductParts) -> InfoValue {
        let ratio = if parts.total_mass > 0.0 {
            1.0 - parts.unresolved_mass / parts.total_mass
        } else {
            1.0
        };
        if parts.resolved_sum > 0.0 {
            self.info_value(LogValue::Finite(parts.resolved_sum.log2()), ratio)
        } else if parts.unresolved_mass > 0.0 {
            self.info_value(LogValue::Unresolved, ratio)
        } else {
            self.info_value(LogValue::NegInf, ratio)
        }
    }

    /// Exact rational variant of [`bounded_info`](Self::bounded_info);
    /// quadratic in the output supports, intended for table machines and
    /// cross-checks.
    pub fn bounded_info_exact(&self, x: &Bits, y: &Bits) -> ExactParts {
        let tx = self.table_for(x);
        let ty = self.table_for(y);
        let mut resolved_sum = BigRational::zero();
        let mut resolved_mass = BigRational::zero();
        let mut total_mass = BigRational::zero();
        let mut xs: Vec<(&Bits, &BigRational)> = tx.outputs().collect();
        let mut ys: Vec<(&Bits, &BigRational)> = ty.outputs().collect();
        xs.sort_by(|a, b| a.0.cmp(b.0));
        ys.sort_by(|a, b| a.0.cmp(b.0));
        for (a, wa) in &xs {
            for (b, wb) in &ys {
                let w = *wa * *wb;
                total_mass += &w;
                if let Some(i) = self.mutual_info_raw(a, b) {
                    resolved_sum += &w * pow2(i);
                    resolved_mass += &w;
                }
            }
        }
        ExactParts {
            resolved_sum,
            resolved_mass,
            total_mass,
        }
    }
}

impl ExactParts {
    pub fn to_log_value(&self) -> LogValue {
        match log2_rational(&self.resolved_sum) {
            Some(v) => LogValue::Finite(v),
            None => {
                if self.resolved_mass < self.total_mass {
                    LogValue::Unresolved
                } else {
                    LogValue::NegInf
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bits::bits;
    use crate::fixtures;
    use crate::machine::DEFAULT_BUDGET;
    use num_traits::One;

    fn oracle_m0() -> Oracle {
        Oracle::new(fixtures::m0(), 20, DEFAULT_BUDGET).unwrap()
    }

    fn oracle_m1() -> Oracle {
        Oracle::new(fixtures::m1(), 20, DEFAULT_BUDGET).unwrap()
    }

    fn oracle_m2(max_len: u32) -> Oracle {
        Oracle::new(fixtures::m2(), max_len, DEFAULT_BUDGET).unwrap()
    }

    #[test]
    fn alg_prob_m0_examples() {
        let o = oracle_m0();
        assert_eq!(o.alg_prob(&bits(""), &Bits::empty()), pow2(-1));
        assert_eq!(o.alg_prob(&bits("0"), &Bits::empty()), pow2(-2));
        // not in m0's range at any bound
        assert_eq!(
            o.alg_prob(&bits("000000"), &Bits::empty()),
            BigRational::zero()
        );
    }

    #[test]
    fn complexity_m0_examples() {
        let o = oracle_m0();
        assert_eq!(o.complexity(&bits(""), &Bits::empty()), Some(1));
        assert_eq!(o.complexity(&bits("1"), &Bits::empty()), Some(3));
        let tiny = Oracle::new(fixtures::m0(), 0, DEFAULT_BUDGET).unwrap();
        assert_eq!(tiny.complexity(&bits(""), &Bits::empty()), None);
    }

    #[test]
    fn mutual_info_empty_pair_on_m0() {
        let o = oracle_m0();
        // K("") = 1; pair("","") = "00" is the length-lex string of index 3,
        // so K("00") = 4 and i("":"") = 1 + 1 − 4 = −2.
        assert_eq!(o.mutual_info_raw(&bits(""), &bits("")), Some(-2));
        // strings without a pair program within bounds are unresolved
        assert!(o.mutual_info(&bits("0"), &bits("11")).value.is_unresolved());
    }

    #[test]
    fn self_info_identity_on_enumerated_range() {
        let o = oracle_m0();
        let table = o.table_for(&Bits::empty());
        let outputs: Vec<Bits> = table.outputs().map(|(b, _)| b.clone()).collect();
        for x in outputs {
            if let Some(i) = o.mutual_info_raw(&x, &x) {
                let k = o.complexity(&x, &Bits::empty()).unwrap() as i64;
                let kpair = o
                    .complexity(&pair_encode(&x, &x), &Bits::empty())
                    .unwrap() as i64;
                assert_eq!(i, 2 * k - kpair);
            }
        }
    }

    #[test]
    fn resource_monotonicity_grid() {
        // m never decreases and K never increases in (max_len, budget)
        let grid = [(6u32, 40u64), (8, 40), (10, 200), (14, 1000), (20, 100000)];
        let queries = Bits::all_up_to_length(3);
        let mut prev: Option<(Vec<BigRational>, Vec<Option<u32>>)> = None;
        for (max_len, budget) in grid {
            let o = Oracle::new(fixtures::m2(), max_len, budget).unwrap();
            let m: Vec<BigRational> = queries
                .iter()
                .map(|x| o.alg_prob(x, &Bits::empty()))
                .collect();
            let k: Vec<Option<u32>> = queries
                .iter()
                .map(|x| o.complexity(x, &Bits::empty()))
                .collect();
            if let Some((pm, pk)) = prev {
                for i in 0..queries.len() {
                    assert!(m[i] >= pm[i], "alg_prob must be monotone");
                    match (pk[i], k[i]) {
                        (Some(old), Some(new)) => assert!(new <= old),
                        (Some(_), None) => panic!("complexity lost under larger bounds"),
                        _ => {}
                    }
                }
            }
            prev = Some((m, k));
        }
    }

    #[test]
    fn complexity_consistent_with_alg_prob() {
        let o = oracle_m2(16);
        for x in Bits::all_up_to_length(4) {
            if let Some(k) = o.complexity(&x, &Bits::empty()) {
                assert!(pow2(-(k as i64)) <= o.alg_prob(&x, &Bits::empty()));
            }
        }
    }

    #[test]
    fn bounded_info_constant_on_aux_free_machine() {
        let o = oracle_m0();
        let v1 = o.bounded_info(&bits(""), &bits("")).value;
        let v2 = o.bounded_info(&bits("1011"), &bits("00")).value;
        assert_eq!(v1, v2);
    }

    #[test]
    fn bounded_info_fast_path_matches_exact_on_m1() {
        let o = oracle_m1();
        for x in ["", "1", "11", "01"] {
            for y in ["", "0", "11"] {
                let fast = o.bounded_info(&bits(x), &bits(y));
                let exact = o.bounded_info_exact(&bits(x), &bits(y));
                match (fast.value, exact.to_log_value()) {
                    (LogValue::Finite(a), LogValue::Finite(b)) => {
                        assert!((a - b).abs() < 1e-12, "{x} {y}: {a} vs {b}")
                    }
                    (a, b) => assert_eq!(a, b),
                }
            }
        }
    }

    #[test]
    fn bounded_info_prefix_monotone_on_m1() {
        let o = oracle_m1();
        let y = bits("1");
        for x in Bits::all_up_to_length(3) {
            for bit in [false, true] {
                let mut ext = x.clone();
                ext.push(bit);
                let shorter = o.bounded_info(&x, &y).value.as_f64().unwrap();
                let longer = o.bounded_info(&ext, &y).value.as_f64().unwrap();
                assert!(
                    longer >= shorter - 1e-12,
                    "oI must be monotone under prefix extension"
                );
            }
        }
    }

    #[test]
    fn bounded_info_m1_brute_force_value() {
        // om(·|"11") on m1 includes every entry; evaluate the double sum
        // by hand over the table and compare.
        let o = oracle_m1();
        let got = o.bounded_info(&bits("11"), &bits("11"));
        let exact = o.bounded_info_exact(&bits("11"), &bits("11"));
        assert!((got.finite().unwrap() - exact.to_log_value().finite().unwrap()).abs() < 1e-12);
        // pairs whose components are themselves pair encodings have no
        // program on m1, so the sum is honestly partial
        assert!(exact.resolved_mass > BigRational::zero());
        assert!(exact.resolved_mass < exact.total_mass);
        assert!(got.is_partial());
        let exact_ratio = (&exact.resolved_mass / &exact.total_mass)
            .to_f64()
            .unwrap();
        assert!((got.resolved_mass - exact_ratio).abs() < 1e-12);
    }

    #[test]
    fn ambient_aux_changes_complexities() {
        // "000111" is not a pair encoding and its literal program
        // (2·6+4 bits) is over the length bound, so only the aux-decode
        // mode (3 bits) reaches it
        let x = bits("000111");
        let aux = crate::codec::encode_self_delimiting(&x);
        let with = Oracle::with_ambient_aux(fixtures::m2(), 14, DEFAULT_BUDGET, aux).unwrap();
        let without = oracle_m2(14);
        let aux = with.ambient_aux().clone();
        assert_eq!(with.complexity(&x, &aux), Some(3));
        assert_eq!(without.complexity(&x, &Bits::empty()), None);
    }

    #[test]
    fn kraft_total_mass_at_most_one() {
        let o = oracle_m2(14);
        for aux in ["", "1011", "000111"] {
            let t = o.table_for(&bits(aux));
            assert!(t.total_mass <= BigRational::one());
        }
    }
}
