//! The `tesh-state-v1` JSON state file.
//!
//! Amplitudes are written with shortest round-trip float formatting and
//! parsed with correctly rounded decoding, so a write/read cycle reproduces
//! every bit of every amplitude.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Result, TeshError};
use crate::state::{StateVector, C64, MAX_QUBITS};

pub const STATE_FORMAT: &str = "tesh-state-v1";

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct StateFile {
    format: String,
    n: usize,
    amplitudes: Vec<[f64; 2]>,
}

pub fn state_to_json(psi: &StateVector) -> String {
    let file = StateFile {
        format: STATE_FORMAT.to_string(),
        n: psi.num_qubits(),
        amplitudes: psi.amplitudes().iter().map(|a| [a.re, a.im]).collect(),
    };
    serde_json::to_string(&file).expect("state serializes")
}

/// Parses a state file. Every failure, including an unnormalized or
/// wrongly sized amplitude list, is reported as a format error.
pub fn parse_state(text: &str) -> Result<StateVector> {
    let file: StateFile =
        serde_json::from_str(text).map_err(|e| TeshError::Format(format!("state file: {e}")))?;
    if file.format != STATE_FORMAT {
        return Err(TeshError::Format(format!(
            "unknown format tag {:?}, expected {STATE_FORMAT:?}",
            file.format
        )));
    }
    if file.n == 0 || file.n > MAX_QUBITS {
        return Err(TeshError::Format(format!("qubit count {} out of range", file.n)));
    }
    let amps = file.amplitudes.iter().map(|&[re, im]| C64::new(re, im)).collect();
    StateVector::new(file.n, amps).map_err(|e| TeshError::Format(e.to_string()))
}

pub fn read_state(path: impl AsRef<Path>) -> Result<StateVector> {
    parse_state(&fs::read_to_string(path)?)
}

pub fn write_state(path: impl AsRef<Path>, psi: &StateVector) -> Result<()> {
    fs::write(path, state_to_json(psi) + "\n")?;
    Ok(())
}
