//! Reference states shipped with the crate.

use crate::format::parse_state;
use crate::state::StateVector;

/// A named state file embedded at build time.
#[derive(Debug, Clone, Copy)]
pub struct Fixture {
    pub name: &'static str,
    pub n: usize,
    /// Expected to pass the threshold-entanglement check.
    pub threshold_entangled: bool,
    pub json: &'static str,
}

impl Fixture {
    pub fn state(&self) -> StateVector {
        parse_state(self.json).expect("embedded fixture parses")
    }
}

pub const FIXTURES: &[Fixture] = &[
    Fixture {
        name: "phi4",
        n: 4,
        threshold_entangled: true,
        json: include_str!("../fixtures/phi4.json"),
    },
    Fixture {
        name: "cycle5",
        n: 5,
        threshold_entangled: true,
        json: include_str!("../fixtures/cycle5.json"),
    },
    Fixture {
        name: "ame6",
        n: 6,
        threshold_entangled: true,
        json: include_str!("../fixtures/ame6.json"),
    },
    Fixture {
        name: "te7",
        n: 7,
        threshold_entangled: true,
        json: include_str!("../fixtures/te7.json"),
    },
    Fixture {
        name: "zero4",
        n: 4,
        threshold_entangled: false,
        json: include_str!("../fixtures/zero4.json"),
    },
];

pub fn fixture(name: &str) -> Option<&'static Fixture> {
    FIXTURES.iter().find(|f| f.name == name)
}

/// Fixtures on `n` qubits expected to be threshold-entangled.
pub fn te_fixtures(n: usize) -> impl Iterator<Item = &'static Fixture> {
    FIXTURES.iter().filter(move |f| f.n == n && f.threshold_entangled)
}
