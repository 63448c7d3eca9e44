//! Shipped fixture machines.
//!
//! - `m0`: pure code table, program `1^k 0` outputs the k-th string in
//!   length-lexicographic order. Every information quantity on it is
//!   brute-forceable by scanning the table.
//! - `m1`: code table exercising auxiliary reads; outputs cover the
//!   strings {"", "0", "1"} and all nine of their pair encodings so that
//!   read-bounded information sums resolve fully.
//! - `m2`: the "coder" interpreter (self-delimiting literal, duplicate
//!   and pair modes plus auxiliary decode/take/select modes).
//!
//! The JSON documents under `fixtures/machines/` are the serialized forms
//! of these builders; `machine_documents_match_builders` guards drift.

use crate::bits::Bits;
use crate::codec::pair_encode;
use crate::machine::{MachineSpec, TableEntry};

pub const M0_JSON: &str = include_str!("../fixtures/machines/m0.json");
pub const M1_JSON: &str = include_str!("../fixtures/machines/m1.json");
pub const M2_JSON: &str = include_str!("../fixtures/machines/m2.json");

/// Baselines recorded on the certified run (see the freeze command).
pub const FROZEN_JSON: &str = include_str!("../fixtures/frozen.json");

/// `None` until a certified freeze run has been committed.
pub fn frozen_baselines() -> Option<crate::suites::FrozenBaselines> {
    crate::suites::FrozenBaselines::from_json(FROZEN_JSON).ok()
}

pub fn m0() -> MachineSpec {
    let mut entries = Vec::new();
    for k in 0u64..24 {
        let mut program = Bits::ones(k as usize);
        program.push(false);
        entries.push(TableEntry {
            program,
            output: Bits::from_lengthlex_index(k).unwrap(),
            aux_reads: 0,
        });
    }
    MachineSpec::table("m0", entries).expect("m0 is prefix-free")
}

pub fn m1() -> MachineSpec {
    let b = |s: &str| -> String { s.to_string() };
    let _ = b;
    let pair = |x: &str, y: &str| -> String {
        pair_encode(&x.parse::<Bits>().unwrap(), &y.parse::<Bits>().unwrap()).to_string()
    };
    let mut entries = vec![
        TableEntry::new("00", "", 0),
        TableEntry::new("010", "0", 1),
        TableEntry::new("011", "1", 2),
        TableEntry::new("1000", "0", 0),
        TableEntry::new("1001", "1", 0),
        TableEntry::new("1010", &pair("", ""), 0),
        TableEntry::new("1011", &pair("", "0"), 0),
        TableEntry::new("11000", &pair("", "1"), 0),
        TableEntry::new("11001", &pair("0", ""), 0),
        TableEntry::new("11010", &pair("1", ""), 0),
        TableEntry::new("11011", &pair("0", "0"), 0),
        TableEntry::new("11100", &pair("0", "1"), 0),
        TableEntry::new("11101", &pair("1", "0"), 0),
        TableEntry::new("11110", &pair("1", "1"), 0),
    ];
    // one deeper aux entry so the read-bound filter has a 2-step ladder
    entries.push(TableEntry::new("111110", "", 1));
    MachineSpec::table("m1", entries).expect("m1 is prefix-free")
}

pub fn m2() -> MachineSpec {
    MachineSpec::coder("m2", Vec::new(), Vec::new()).expect("m2 validates")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fixture_path(name: &str) -> std::path::PathBuf {
        std::path::Path::new(env!("CARGO_MANIFEST_DIR"))
            .join("fixtures/machines")
            .join(name)
    }

    #[test]
    fn machine_documents_match_builders() {
        let specs = [("m0.json", m0()), ("m1.json", m1()), ("m2.json", m2())];
        if std::env::var("ALGINFO_REGEN_FIXTURES").is_ok() {
            for (name, spec) in &specs {
                std::fs::write(fixture_path(name), spec.to_document()).unwrap();
            }
        }
        for (name, spec) in &specs {
            let doc = std::fs::read_to_string(fixture_path(name)).unwrap();
            assert_eq!(&MachineSpec::load(&doc).unwrap(), spec, "{name} drifted");
        }
    }

    #[test]
    fn catalog_and_povm_documents_match_builders() {
        let basis = crate::space::DyadicBasis::default();
        let catalog = crate::bounds::standard_catalog();
        let povm = crate::quantum::Povm::basis(2);
        let root = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures");
        if std::env::var("ALGINFO_REGEN_FIXTURES").is_ok() {
            std::fs::write(root.join("catalog.json"), catalog.to_json(&basis)).unwrap();
            std::fs::write(root.join("povm/basis2q.json"), povm.to_document()).unwrap();
        }
        let loaded = crate::bounds::MeasureCatalog::from_json(
            &std::fs::read_to_string(root.join("catalog.json")).unwrap(),
        )
        .unwrap();
        assert_eq!(loaded.entries().len(), catalog.entries().len());
        for (a, b) in loaded.entries().iter().zip(catalog.entries()) {
            assert_eq!(a.encoding(), b.encoding(), "catalog entry {} drifted", a.name);
        }
        let loaded = crate::quantum::Povm::load(
            &std::fs::read_to_string(root.join("povm/basis2q.json")).unwrap(),
        )
        .unwrap();
        assert_eq!(loaded, povm);
    }
}
