//! Prefix-free reference machines: explicit code tables and a small
//! deterministic bit-reading interpreter, with exhaustive enumeration of
//! halting programs up to a length bound.
//!
//! A program "halts" only when the machine consumed exactly the supplied
//! bits; supplying extra bits past a halting prefix is an input error.
//! That convention makes the halting domain prefix-free by construction.

use std::collections::HashMap;

use num_rational::BigRational;
use num_traits::Zero;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bits::Bits;
use crate::codec::{encode_self_delimiting, pair_encode};
use crate::logdomain::pow2;

pub const DEFAULT_HARD_CAP: u32 = 24;
pub const DEFAULT_BUDGET: u64 = 1_000_000;

#[derive(Debug, Error)]
pub enum MachineError {
    #[error("machine spec error: programs \"{0}\" and \"{1}\" are prefix-comparable")]
    PrefixViolation(Bits, Bits),
    #[error("machine spec error: {0}")]
    BadSpec(String),
    #[error("machine document parse error: {0}")]
    Format(String),
    #[error("program of length {len} exceeds the machine hard cap {cap}")]
    ProgramTooLong { len: usize, cap: u32 },
    #[error("length bound {bound} exceeds the machine hard cap {cap}")]
    BoundTooLarge { bound: u32, cap: u32 },
    #[error("step budget must be at least 1")]
    ZeroBudget,
    #[error(
        "program not in the prefix-free domain: halts after {consumed} of {supplied} bits (halting prefix \"{prefix}\")"
    )]
    NotInDomain {
        prefix: Bits,
        consumed: usize,
        supplied: usize,
    },
}

/// One row of an explicit code table.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TableEntry {
    pub program: Bits,
    pub output: Bits,
    #[serde(rename = "auxReads", default)]
    pub aux_reads: usize,
}

impl TableEntry {
    pub fn new(program: &str, output: &str, aux_reads: usize) -> Self {
        TableEntry {
            program: program.parse().unwrap(),
            output: output.parse().unwrap(),
            aux_reads,
        }
    }
}

/// A catalog row grafted into the interpreter: a short tag selects a
/// fixed payload bitstring (used for canonical measure encodings).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CatalogProgram {
    pub tag: Bits,
    pub payload: Bits,
}

/// A disjoint-open-set selector embedded in the interpreter. Scanning the
/// auxiliary tape, the first 1-bit at a witnessed basis index resolves to
/// the element index of the set it certifies.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SelectorFamily {
    pub tag: Bits,
    /// (element, basis) pairs, both 1-based.
    pub witnesses: Vec<(usize, usize)>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "interpreter", rename_all = "kebab-case")]
pub enum InterpreterSpec {
    /// The "coder" machine. Program-prefix modes:
    ///
    /// - `000`      read a self-delimiting `<x>` from aux, output `x`
    /// - `001 <u>`  output the first `lengthlex(u)` aux bits
    /// - `010 <f>`  selector for family tagged `f`: scan aux for a
    ///              witnessed 1-bit, output `<u_i>` for its element `i`
    /// - `011`      diverges
    /// - `100 <x>`  output `x`
    /// - `101 <x>`  output `pair(x, x)`
    /// - `1100 <x><y>` output `pair(x, y)`
    /// - `1101 <u>` output the catalog payload tagged `u`
    /// - `1110 <u>` output `pair(payload, payload)`
    /// - `1111 <u><v>` output `pair(payload_u, payload_v)`
    Coder {
        #[serde(default)]
        catalog: Vec<CatalogProgram>,
        #[serde(default)]
        families: Vec<SelectorFamily>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum MachineKind {
    Table {
        table: Vec<TableEntry>,
    },
    Programmatic {
        #[serde(rename = "programDescription")]
        program_description: InterpreterSpec,
    },
}

fn default_hard_cap() -> u32 {
    DEFAULT_HARD_CAP
}

/// The concrete prefix-free reference machine with auxiliary input.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MachineSpec {
    pub name: String,
    #[serde(flatten)]
    pub kind: MachineKind,
    #[serde(rename = "hardCap", default = "default_hard_cap")]
    pub hard_cap: u32,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RunStatus {
    Halted { output: Bits, aux_bits_read: usize },
    BudgetExhausted,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunOutcome {
    pub status: RunStatus,
    pub steps_used: u64,
}

impl RunOutcome {
    pub fn is_halted(&self) -> bool {
        matches!(self.status, RunStatus::Halted { .. })
    }

    pub fn output(&self) -> Option<&Bits> {
        match &self.status {
            RunStatus::Halted { output, .. } => Some(output),
            RunStatus::BudgetExhausted => None,
        }
    }
}

/// A halting program found by enumeration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HaltingProgram {
    pub program: Bits,
    pub output: Bits,
    pub aux_bits_read: usize,
}

impl MachineSpec {
    pub fn table(name: &str, entries: Vec<TableEntry>) -> Result<Self, MachineError> {
        let spec = MachineSpec {
            name: name.to_string(),
            kind: MachineKind::Table { table: entries },
            hard_cap: DEFAULT_HARD_CAP,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn coder(
        name: &str,
        catalog: Vec<CatalogProgram>,
        families: Vec<SelectorFamily>,
    ) -> Result<Self, MachineError> {
        let spec = MachineSpec {
            name: name.to_string(),
            kind: MachineKind::Programmatic {
                program_description: InterpreterSpec::Coder { catalog, families },
            },
            hard_cap: DEFAULT_HARD_CAP,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Parses and validates a machine document.
    pub fn load(document: &str) -> Result<Self, MachineError> {
        let spec: MachineSpec =
            serde_json::from_str(document).map_err(|e| MachineError::Format(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_document(&self) -> String {
        serde_json::to_string_pretty(self).expect("machine spec serializes")
    }

    /// Checks prefix-freeness: exhaustively for tables, over the enumerated
    /// halting set up to the hard cap for programmatic machines.
    pub fn validate(&self) -> Result<(), MachineError> {
        match &self.kind {
            MachineKind::Table { table } => {
                for e in table {
                    if e.program.len() > self.hard_cap as usize {
                        return Err(MachineError::ProgramTooLong {
                            len: e.program.len(),
                            cap: self.hard_cap,
                        });
                    }
                }
                check_prefix_free(table.iter().map(|e| &e.program))
            }
            MachineKind::Programmatic {
                program_description,
            } => {
                let InterpreterSpec::Coder { catalog, families } = program_description;
                let mut tags = HashMap::new();
                for c in catalog {
                    if tags.insert(c.tag.clone(), ()).is_some() {
                        return Err(MachineError::BadSpec(format!(
                            "duplicate catalog tag \"{}\"",
                            c.tag
                        )));
                    }
                }
                for f in families {
                    let mut seen = HashMap::new();
                    for &(element, basis) in &f.witnesses {
                        if element == 0 || basis == 0 {
                            return Err(MachineError::BadSpec(
                                "selector witnesses are 1-based".into(),
                            ));
                        }
                        if let Some(prev) = seen.insert(basis, element) {
                            if prev != element {
                                return Err(MachineError::BadSpec(format!(
                                    "family \"{}\": basis {} witnesses both elements {} and {}",
                                    f.tag, basis, prev, element
                                )));
                            }
                        }
                    }
                }
                // sample a few auxiliary tapes; the halting domain must be
                // prefix-free under each of them
                let auxes = [
                    Bits::empty(),
                    Bits::zeros(12),
                    Bits::ones(12),
                    "101100111000".parse().unwrap(),
                ];
                for aux in &auxes {
                    let found = self.enumerate(self.hard_cap, DEFAULT_BUDGET, aux)?;
                    check_prefix_free(found.iter().map(|h| &h.program))?;
                }
                Ok(())
            }
        }
    }

    /// Runs one program to completion, self-delimiting: the supplied bits
    /// must be consumed exactly.
    pub fn run(&self, program: &Bits, aux: &Bits, budget: u64) -> Result<RunOutcome, MachineError> {
        if budget == 0 {
            return Err(MachineError::ZeroBudget);
        }
        if program.len() > self.hard_cap as usize {
            return Err(MachineError::ProgramTooLong {
                len: program.len(),
                cap: self.hard_cap,
            });
        }
        let mut exec = Executor::new(self, aux, budget);
        let mut fed = 0usize;
        loop {
            match exec.poll() {
                Poll::NeedProgramBit => {
                    if fed < program.len() {
                        exec.feed(program.get(fed).unwrap());
                        fed += 1;
                    } else {
                        // blocked waiting for program bits that never come
                        return Ok(RunOutcome {
                            status: RunStatus::BudgetExhausted,
                            steps_used: exec.steps(),
                        });
                    }
                }
                Poll::Halted {
                    output,
                    aux_bits_read,
                } => {
                    if fed == program.len() {
                        return Ok(RunOutcome {
                            status: RunStatus::Halted {
                                output,
                                aux_bits_read,
                            },
                            steps_used: exec.steps(),
                        });
                    }
                    return Err(MachineError::NotInDomain {
                        prefix: program.prefix(fed),
                        consumed: fed,
                        supplied: program.len(),
                    });
                }
                Poll::Dead => {
                    return Ok(RunOutcome {
                        status: RunStatus::BudgetExhausted,
                        steps_used: exec.steps(),
                    });
                }
                Poll::OutOfBudget => {
                    return Ok(RunOutcome {
                        status: RunStatus::BudgetExhausted,
                        steps_used: budget,
                    });
                }
            }
        }
    }

    /// Exactly the halting programs of length at most `max_len` under the
    /// step budget, sorted by (length, lexicographic). The walk branches
    /// only at program-bit requests, so dead subtrees are never visited.
    pub fn enumerate(
        &self,
        max_len: u32,
        budget: u64,
        aux: &Bits,
    ) -> Result<Vec<HaltingProgram>, MachineError> {
        if max_len > self.hard_cap {
            return Err(MachineError::BoundTooLarge {
                bound: max_len,
                cap: self.hard_cap,
            });
        }
        if budget == 0 {
            return Err(MachineError::ZeroBudget);
        }
        let mut found = Vec::new();
        let exec = Executor::new(self, aux, budget);
        let mut path = Bits::empty();
        visit(exec, &mut path, max_len as usize, &mut found);
        found.sort_by(|a, b| a.program.cmp(&b.program));
        Ok(found)
    }

    /// Kraft sum `Σ 2^(−|p|)` over halting programs of length ≤ `max_len`.
    pub fn kraft_sum(
        &self,
        max_len: u32,
        budget: u64,
        aux: &Bits,
    ) -> Result<BigRational, MachineError> {
        let found = self.enumerate(max_len, budget, aux)?;
        Ok(found
            .iter()
            .fold(BigRational::zero(), |acc, h| {
                acc + pow2(-(h.program.len() as i64))
            }))
    }
}

fn visit(mut exec: Executor<'_>, path: &mut Bits, max_len: usize, found: &mut Vec<HaltingProgram>) {
    match exec.poll() {
        Poll::Halted {
            output,
            aux_bits_read,
        } => {
            found.push(HaltingProgram {
                program: path.clone(),
                output,
                aux_bits_read,
            });
            // extensions of a halting program never halt
        }
        Poll::Dead | Poll::OutOfBudget => {}
        Poll::NeedProgramBit => {
            if path.len() == max_len {
                return;
            }
            for bit in [false, true] {
                let mut child = exec.clone();
                child.feed(bit);
                path.push(bit);
                visit(child, path, max_len, found);
                path.pop();
            }
        }
    }
}

/// Sorting lexicographically (prefix-first) makes any prefix pair adjacent.
fn check_prefix_free<'a, I: Iterator<Item = &'a Bits>>(programs: I) -> Result<(), MachineError> {
    let mut sorted: Vec<&Bits> = programs.collect();
    sorted.sort_by(|a, b| a.iter().map(|x| x as u8).cmp(b.iter().map(|x| x as u8)));
    for w in sorted.windows(2) {
        if w[0] == w[1] {
            return Err(MachineError::BadSpec(format!(
                "duplicate program \"{}\"",
                w[0]
            )));
        }
        if w[0].is_prefix_of(w[1]) {
            return Err(MachineError::PrefixViolation(w[0].clone(), w[1].clone()));
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Executors
// ---------------------------------------------------------------------------

#[derive(Debug)]
enum Poll {
    NeedProgramBit,
    Halted { output: Bits, aux_bits_read: usize },
    /// No extension of the consumed prefix halts (blocked or invalid).
    Dead,
    OutOfBudget,
}

#[derive(Clone)]
enum Executor<'m> {
    Table(TableExec<'m>),
    Coder(CoderExec<'m>),
}

impl<'m> Executor<'m> {
    fn new(spec: &'m MachineSpec, aux: &'m Bits, budget: u64) -> Self {
        match &spec.kind {
            MachineKind::Table { table } => Executor::Table(TableExec {
                entries: table,
                aux_len: aux.len(),
                consumed: Bits::empty(),
                budget,
                steps: 0,
            }),
            MachineKind::Programmatic {
                program_description,
            } => {
                let InterpreterSpec::Coder { catalog, families } = program_description;
                Executor::Coder(CoderExec {
                    catalog,
                    families,
                    aux,
                    budget,
                    steps: 0,
                    aux_read: 0,
                    state: CoderState::Mode { val: 0, n: 0 },
                })
            }
        }
    }

    fn poll(&mut self) -> Poll {
        match self {
            Executor::Table(t) => t.poll(),
            Executor::Coder(c) => c.poll(),
        }
    }

    fn feed(&mut self, bit: bool) {
        match self {
            Executor::Table(t) => t.feed(bit),
            Executor::Coder(c) => c.feed(bit),
        }
    }

    fn steps(&self) -> u64 {
        match self {
            Executor::Table(t) => t.steps,
            Executor::Coder(c) => c.steps,
        }
    }
}

#[derive(Clone)]
struct TableExec<'m> {
    entries: &'m [TableEntry],
    aux_len: usize,
    consumed: Bits,
    budget: u64,
    steps: u64,
}

impl TableExec<'_> {
    fn poll(&mut self) -> Poll {
        if let Some(entry) = self.entries.iter().find(|e| e.program == self.consumed) {
            if entry.aux_reads > self.aux_len {
                return Poll::Dead; // blocked on a missing auxiliary bit
            }
            let required = self.consumed.len() as u64 + entry.aux_reads as u64 + 1;
            if required > self.budget {
                return Poll::OutOfBudget;
            }
            self.steps = required;
            return Poll::Halted {
                output: entry.output.clone(),
                aux_bits_read: entry.aux_reads,
            };
        }
        let extendable = self
            .entries
            .iter()
            .any(|e| self.consumed.is_prefix_of(&e.program));
        if !extendable {
            return Poll::Dead;
        }
        if self.consumed.len() as u64 + 1 > self.budget {
            return Poll::OutOfBudget;
        }
        Poll::NeedProgramBit
    }

    fn feed(&mut self, bit: bool) {
        self.consumed.push(bit);
        self.steps = self.consumed.len() as u64;
    }
}

#[derive(Clone)]
enum SdPhase {
    Unary,
    Payload { remaining: usize },
}

#[derive(Clone)]
enum SdPurpose {
    AuxTake,
    AuxSelect,
    Literal,
    Dup,
    PairFirst,
    PairSecond { first: Bits },
    CatSingle,
    CatDup,
    CatPairFirst,
    CatPairSecond { first_payload: Bits },
}

#[derive(Clone)]
enum Term {
    Halted(Bits, usize),
    Dead,
    OutOfBudget,
}

#[derive(Clone)]
enum CoderState {
    /// Collecting the mode prefix; `val` holds the bits read so far.
    Mode { val: u8, n: u8 },
    /// Reading a self-delimiting block from the program tape.
    Sd {
        phase: SdPhase,
        buf: Bits,
        purpose: SdPurpose,
    },
    /// Output computed; the emit cost is charged on the next poll.
    PendingHalt(Bits),
    AuxDecode,
    Terminal(Term),
}

#[derive(Clone)]
struct CoderExec<'m> {
    catalog: &'m [CatalogProgram],
    families: &'m [SelectorFamily],
    aux: &'m Bits,
    budget: u64,
    steps: u64,
    aux_read: usize,
    state: CoderState,
}

impl CoderExec<'_> {
    fn read_aux(&mut self) -> Option<bool> {
        let bit = self.aux.get(self.aux_read)?;
        self.aux_read += 1;
        Some(bit)
    }

    fn lookup_catalog(&self, tag: &Bits) -> Option<Bits> {
        self.catalog
            .iter()
            .find(|c| &c.tag == tag)
            .map(|c| c.payload.clone())
    }

    fn poll(&mut self) -> Poll {
        loop {
            match &self.state {
                CoderState::Terminal(Term::Halted(output, aux_read)) => {
                    return Poll::Halted {
                        output: output.clone(),
                        aux_bits_read: *aux_read,
                    };
                }
                CoderState::Terminal(Term::Dead) => return Poll::Dead,
                CoderState::Terminal(Term::OutOfBudget) => return Poll::OutOfBudget,
                CoderState::Mode { .. } | CoderState::Sd { .. } => {
                    if self.steps + 1 > self.budget {
                        return Poll::OutOfBudget;
                    }
                    return Poll::NeedProgramBit;
                }
                CoderState::PendingHalt(output) => {
                    let output = output.clone();
                    self.steps += output.len() as u64 + 1;
                    if self.steps > self.budget {
                        self.state = CoderState::Terminal(Term::OutOfBudget);
                    } else {
                        self.state =
                            CoderState::Terminal(Term::Halted(output, self.aux_read));
                    }
                }
                CoderState::AuxDecode => {
                    // entirely auxiliary-tape driven; no program bits
                    let mut count = 0usize;
                    let term = loop {
                        self.steps += 1;
                        if self.steps > self.budget {
                            break Some(Term::OutOfBudget);
                        }
                        match self.read_aux() {
                            None => break Some(Term::Dead),
                            Some(true) => count += 1,
                            Some(false) => break None,
                        }
                    };
                    if let Some(t) = term {
                        self.state = CoderState::Terminal(t);
                        continue;
                    }
                    let mut payload = Bits::empty();
                    let mut term = None;
                    for _ in 0..count {
                        self.steps += 1;
                        if self.steps > self.budget {
                            term = Some(Term::OutOfBudget);
                            break;
                        }
                        match self.read_aux() {
                            None => {
                                term = Some(Term::Dead);
                                break;
                            }
                            Some(bit) => payload.push(bit),
                        }
                    }
                    self.state = match term {
                        Some(t) => CoderState::Terminal(t),
                        None => CoderState::PendingHalt(payload),
                    };
                }
            }
        }
    }

    fn feed(&mut self, bit: bool) {
        self.steps += 1;
        let state = std::mem::replace(&mut self.state, CoderState::Terminal(Term::Dead));
        match state {
            CoderState::Mode { val, n } => {
                let val = (val << 1) | bit as u8;
                let n = n + 1;
                self.state = match (n, val) {
                    (3, 0b000) => CoderState::AuxDecode,
                    (3, 0b001) => sd(SdPurpose::AuxTake),
                    (3, 0b010) => sd(SdPurpose::AuxSelect),
                    (3, 0b011) => CoderState::Terminal(Term::Dead),
                    (3, 0b100) => sd(SdPurpose::Literal),
                    (3, 0b101) => sd(SdPurpose::Dup),
                    (4, 0b1100) => sd(SdPurpose::PairFirst),
                    (4, 0b1101) => sd(SdPurpose::CatSingle),
                    (4, 0b1110) => sd(SdPurpose::CatDup),
                    (4, 0b1111) => sd(SdPurpose::CatPairFirst),
                    _ => CoderState::Mode { val, n },
                };
            }
            CoderState::Sd {
                phase,
                mut buf,
                purpose,
            } => match phase {
                SdPhase::Unary => {
                    if bit {
                        buf.push(true); // reuse buf to count the unary run
                        self.state = CoderState::Sd {
                            phase: SdPhase::Unary,
                            buf,
                            purpose,
                        };
                    } else {
                        let count = buf.len();
                        if count == 0 {
                            self.complete_sd(Bits::empty(), purpose);
                        } else {
                            self.state = CoderState::Sd {
                                phase: SdPhase::Payload { remaining: count },
                                buf: Bits::empty(),
                                purpose,
                            };
                        }
                    }
                }
                SdPhase::Payload { remaining } => {
                    buf.push(bit);
                    if remaining == 1 {
                        self.complete_sd(buf, purpose);
                    } else {
                        self.state = CoderState::Sd {
                            phase: SdPhase::Payload {
                                remaining: remaining - 1,
                            },
                            buf,
                            purpose,
                        };
                    }
                }
            },
            other => self.state = other, // terminal states ignore input
        }
    }

    /// A self-delimiting block finished; act on its purpose.
    fn complete_sd(&mut self, buf: Bits, purpose: SdPurpose) {
        match purpose {
            SdPurpose::Literal => self.state = CoderState::PendingHalt(buf),
            SdPurpose::Dup => {
                self.state = CoderState::PendingHalt(pair_encode(&buf, &buf));
            }
            SdPurpose::PairFirst => {
                self.state = sd(SdPurpose::PairSecond { first: buf });
            }
            SdPurpose::PairSecond { first } => {
                self.state = CoderState::PendingHalt(pair_encode(&first, &buf));
            }
            SdPurpose::AuxTake => {
                if buf.len() > 62 {
                    self.state = CoderState::Terminal(Term::Dead);
                    return;
                }
                let n = buf.lengthlex_index() as usize;
                let mut out = Bits::empty();
                for _ in 0..n {
                    self.steps += 1;
                    if self.steps > self.budget {
                        self.state = CoderState::Terminal(Term::OutOfBudget);
                        return;
                    }
                    match self.read_aux() {
                        None => {
                            self.state = CoderState::Terminal(Term::Dead);
                            return;
                        }
                        Some(bit) => out.push(bit),
                    }
                }
                self.state = CoderState::PendingHalt(out);
            }
            SdPurpose::AuxSelect => {
                let family = match self.families.iter().find(|f| f.tag == buf) {
                    Some(f) => f,
                    None => {
                        self.state = CoderState::Terminal(Term::Dead);
                        return;
                    }
                };
                let mut basis = 0usize;
                loop {
                    basis += 1;
                    self.steps += 1;
                    if self.steps > self.budget {
                        self.state = CoderState::Terminal(Term::OutOfBudget);
                        return;
                    }
                    match self.read_aux() {
                        None => {
                            self.state = CoderState::Terminal(Term::Dead);
                            return;
                        }
                        Some(true) => {
                            if let Some(&(element, _)) =
                                family.witnesses.iter().find(|&&(_, b)| b == basis)
                            {
                                let index = Bits::from_lengthlex_index(element as u64).unwrap();
                                self.state = CoderState::PendingHalt(encode_self_delimiting(&index));
                                return;
                            }
                        }
                        Some(false) => {}
                    }
                }
            }
            SdPurpose::CatSingle => {
                self.state = match self.lookup_catalog(&buf) {
                    Some(payload) => CoderState::PendingHalt(payload),
                    None => CoderState::Terminal(Term::Dead),
                };
            }
            SdPurpose::CatDup => {
                self.state = match self.lookup_catalog(&buf) {
                    Some(payload) => CoderState::PendingHalt(pair_encode(&payload, &payload)),
                    None => CoderState::Terminal(Term::Dead),
                };
            }
            SdPurpose::CatPairFirst => {
                self.state = match self.lookup_catalog(&buf) {
                    Some(payload) => sd(SdPurpose::CatPairSecond {
                        first_payload: payload,
                    }),
                    None => CoderState::Terminal(Term::Dead),
                };
            }
            SdPurpose::CatPairSecond { first_payload } => {
                self.state = match self.lookup_catalog(&buf) {
                    Some(payload) => CoderState::PendingHalt(pair_encode(&first_payload, &payload)),
                    None => CoderState::Terminal(Term::Dead),
                };
            }
        }
    }
}

fn sd(purpose: SdPurpose) -> CoderState {
    CoderState::Sd {
        phase: SdPhase::Unary,
        buf: Bits::empty(),
        purpose,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bits::bits;
    use crate::fixtures;
    use num_traits::One;
    use proptest::prelude::*;

    #[test]
    fn m0_run_examples() {
        let m0 = fixtures::m0();
        let out = m0.run(&bits("0"), &Bits::empty(), 10).unwrap();
        assert_eq!(
            out.status,
            RunStatus::Halted {
                output: Bits::empty(),
                aux_bits_read: 0
            }
        );
        let out = m0.run(&bits("10"), &Bits::empty(), 10).unwrap();
        assert_eq!(out.output().unwrap(), &bits("0"));

        // "0" halts after one bit, so "01" is outside the prefix-free domain
        match m0.run(&bits("01"), &Bits::empty(), 10) {
            Err(MachineError::NotInDomain { prefix, .. }) => assert_eq!(prefix, bits("0")),
            other => panic!("expected NotInDomain, got {:?}", other.map(|o| o.status)),
        }
    }

    #[test]
    fn m0_enumerate_prefix() {
        let m0 = fixtures::m0();
        let found = m0.enumerate(3, 100, &Bits::empty()).unwrap();
        let shown: Vec<(String, String)> = found
            .iter()
            .map(|h| (h.program.to_string(), h.output.to_string()))
            .collect();
        assert_eq!(
            shown,
            vec![
                ("0".into(), "".into()),
                ("10".into(), "0".into()),
                ("110".into(), "1".into())
            ]
        );
        assert!(m0.enumerate(0, 100, &Bits::empty()).unwrap().is_empty());
    }

    #[test]
    fn m0_kraft_exact() {
        let m0 = fixtures::m0();
        let kraft = m0.kraft_sum(20, DEFAULT_BUDGET, &Bits::empty()).unwrap();
        assert_eq!(kraft, BigRational::one() - pow2(-20));
    }

    #[test]
    fn load_rejects_prefix_violation() {
        let doc = r#"{"kind":"table","name":"bad","table":[
            {"program":"0","output":"","auxReads":0},
            {"program":"01","output":"1","auxReads":0}]}"#;
        match MachineSpec::load(doc) {
            Err(MachineError::PrefixViolation(a, b)) => {
                assert_eq!((a, b), (bits("0"), bits("01")));
            }
            other => panic!("expected prefix violation, got {:?}", other.is_ok()),
        }
    }

    #[test]
    fn load_rejects_garbage() {
        assert!(matches!(
            MachineSpec::load("not json"),
            Err(MachineError::Format(_))
        ));
    }

    #[test]
    fn table_aux_blocking() {
        let m1 = fixtures::m1();
        // entry "011" reads 2 aux bits; with a 1-bit aux it must not halt
        let r = m1.run(&bits("011"), &bits("1"), 100).unwrap();
        assert!(!r.is_halted());
        let r = m1.run(&bits("011"), &bits("11"), 100).unwrap();
        assert_eq!(r.output().unwrap(), &bits("1"));
        match &r.status {
            RunStatus::Halted { aux_bits_read, .. } => assert_eq!(*aux_bits_read, 2),
            _ => unreachable!(),
        }
    }

    #[test]
    fn coder_literal_and_pair_modes() {
        let m2 = fixtures::m2();
        // literal: 100 <x> with x = "01" -> <x> = 11001
        let p = bits("100").concat(&encode_self_delimiting(&bits("01")));
        let r = m2.run(&p, &Bits::empty(), 1000).unwrap();
        assert_eq!(r.output().unwrap(), &bits("01"));

        // dup: 101 <x> -> pair(x, x)
        let p = bits("101").concat(&encode_self_delimiting(&bits("1")));
        let r = m2.run(&p, &Bits::empty(), 1000).unwrap();
        assert_eq!(r.output().unwrap(), &pair_encode(&bits("1"), &bits("1")));

        // pair: 1100 <x><y>
        let p = bits("1100")
            .concat(&encode_self_delimiting(&bits("0")))
            .concat(&encode_self_delimiting(&bits("11")));
        let r = m2.run(&p, &Bits::empty(), 1000).unwrap();
        assert_eq!(r.output().unwrap(), &pair_encode(&bits("0"), &bits("11")));
    }

    #[test]
    fn coder_aux_modes() {
        let m2 = fixtures::m2();
        // aux-decode: aux = <"10"> padded with zeros
        let aux = encode_self_delimiting(&bits("10")).concat(&Bits::zeros(4));
        let r = m2.run(&bits("000"), &aux, 1000).unwrap();
        assert_eq!(r.output().unwrap(), &bits("10"));
        match &r.status {
            RunStatus::Halted { aux_bits_read, .. } => assert_eq!(*aux_bits_read, 5),
            _ => unreachable!(),
        }

        // aux-decode blocks without a complete block on the aux tape
        let r = m2.run(&bits("000"), &bits("111"), 1000).unwrap();
        assert!(!r.is_halted());

        // aux-take: 001 <u> with u = "1" (lengthlex index 2) takes 2 bits
        let p = bits("001").concat(&encode_self_delimiting(&bits("1")));
        let r = m2.run(&p, &bits("0110"), 1000).unwrap();
        assert_eq!(r.output().unwrap(), &bits("01"));

        // aux-take with u = "" takes zero bits and halts on any aux
        let p = bits("001").concat(&encode_self_delimiting(&Bits::empty()));
        let r = m2.run(&p, &Bits::empty(), 1000).unwrap();
        assert_eq!(r.output().unwrap(), &Bits::empty());
    }

    #[test]
    fn coder_enumeration_is_prefix_free_and_deterministic() {
        let m2 = fixtures::m2();
        let aux = bits("1101");
        let a = m2.enumerate(14, DEFAULT_BUDGET, &aux).unwrap();
        let b = m2.enumerate(14, DEFAULT_BUDGET, &aux).unwrap();
        assert_eq!(a, b);
        assert!(!a.is_empty());
        check_prefix_free(a.iter().map(|h| &h.program)).unwrap();
        let kraft = m2.kraft_sum(14, DEFAULT_BUDGET, &aux).unwrap();
        assert!(kraft <= BigRational::one());
    }

    #[test]
    fn budget_monotonicity_on_fixtures() {
        let m2 = fixtures::m2();
        let aux = bits("10");
        let small = m2.enumerate(10, 12, &aux).unwrap();
        let large = m2.enumerate(10, DEFAULT_BUDGET, &aux).unwrap();
        for h in &small {
            assert!(large.contains(h), "halting set must grow with budget");
        }
        assert!(small.len() <= large.len());
    }

    #[test]
    fn enumerate_rejects_bound_over_cap() {
        let m0 = fixtures::m0();
        assert!(matches!(
            m0.enumerate(25, 100, &Bits::empty()),
            Err(MachineError::BoundTooLarge { .. })
        ));
    }

    #[test]
    fn spec_document_round_trip() {
        for spec in [fixtures::m0(), fixtures::m1(), fixtures::m2()] {
            let doc = spec.to_document();
            let again = MachineSpec::load(&doc).unwrap();
            assert_eq!(spec, again);
        }
    }

    fn arb_prefix_free_table() -> impl Strategy<Value = Vec<TableEntry>> {
        // random subset of leaves of a fixed-depth binary tree is prefix-free
        proptest::collection::vec((0u8..16, any::<u8>(), 0usize..3), 1..10).prop_map(|raw| {
            let mut seen = std::collections::HashSet::new();
            raw.into_iter()
                .filter_map(|(leaf, out, aux)| {
                    if !seen.insert(leaf) {
                        return None;
                    }
                    let mut program = Bits::empty();
                    for i in (0..4).rev() {
                        program.push((leaf >> i) & 1 == 1);
                    }
                    Some(TableEntry {
                        program,
                        output: Bits::from_lengthlex_index(out as u64).unwrap(),
                        aux_reads: aux,
                    })
                })
                .collect()
        })
    }

    proptest! {
        #[test]
        fn random_tables_validate_and_round_trip(entries in arb_prefix_free_table()) {
            let spec = MachineSpec::table("prop", entries).unwrap();
            let doc = spec.to_document();
            prop_assert_eq!(MachineSpec::load(&doc).unwrap(), spec);
        }

        #[test]
        fn kraft_never_exceeds_one(entries in arb_prefix_free_table()) {
            let spec = MachineSpec::table("prop", entries).unwrap();
            let kraft = spec.kraft_sum(20, 1000, &Bits::empty()).unwrap();
            prop_assert!(kraft <= BigRational::one());
        }
    }
}
