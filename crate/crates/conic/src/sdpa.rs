//! SDPA sparse format (`.dat-s`).
//!
//! SDPA's dual form is `max F₀ • Y  s.t. F_i • Y = c_i, Y ⪰ 0`. A
//! [`ConicProblem`] `min C • X  s.t. A_i • X = b_i` maps onto it with
//! `F₀ = −C`, `F_i = A_i`, `c_i = b_i`, so the SDPA dual optimum is the
//! negated optimum of the problem. Orthant blocks are written with a
//! negative size.

use std::io::{BufRead, Write};

use crate::error::{ConicError, Result};
use crate::problem::{ConicProblem, Cone, SparseSym};

/// Refuse headers that would allocate absurd amounts of memory.
const MAX_CONSTRAINTS: usize = 1 << 20;
const MAX_BLOCKS: usize = 1 << 16;
const MAX_BLOCK_SIDE: usize = 1 << 16;

/// Writes `problem` in SDPA sparse format. Entries are written in canonical
/// order with shortest round-trip float formatting.
pub fn write_sdpa<W: Write>(problem: &ConicProblem, mut out: W) -> Result<()> {
    problem.validate()?;
    let mut p = problem.clone();
    p.canonicalize();
    writeln!(out, "* SDPA sparse format written by tesh-conic")?;
    writeln!(out, "{}", p.num_constraints())?;
    writeln!(out, "{}", p.cones.len())?;
    let sizes: Vec<String> = p
        .cones
        .iter()
        .map(|c| match c {
            Cone::Psd(d) => format!("{d}"),
            Cone::NonNeg(k) => format!("-{k}"),
        })
        .collect();
    writeln!(out, "{}", sizes.join(" "))?;
    let rhs: Vec<String> = p.rhs.iter().map(|v| format!("{v:e}")).collect();
    writeln!(out, "{}", rhs.join(" "))?;
    for e in &p.objective.entries {
        writeln!(
            out,
            "0 {} {} {} {:e}",
            e.block + 1,
            e.row + 1,
            e.col + 1,
            -e.value
        )?;
    }
    for (i, a) in p.constraints.iter().enumerate() {
        for e in &a.entries {
            writeln!(
                out,
                "{} {} {} {} {:e}",
                i + 1,
                e.block + 1,
                e.row + 1,
                e.col + 1,
                e.value
            )?;
        }
    }
    Ok(())
}

/// Writes `problem` to a file path.
pub fn export_sdpa(problem: &ConicProblem, path: impl AsRef<std::path::Path>) -> Result<()> {
    let file = std::fs::File::create(path)?;
    let mut w = std::io::BufWriter::new(file);
    write_sdpa(problem, &mut w)?;
    w.flush()?;
    Ok(())
}

/// Reads an SDPA sparse file.
pub fn read_sdpa<R: BufRead>(input: R) -> Result<ConicProblem> {
    let mut text = String::new();
    let mut input = input;
    input.read_to_string(&mut text)?;
    parse_sdpa(&text)
}

pub fn import_sdpa(path: impl AsRef<std::path::Path>) -> Result<ConicProblem> {
    let file = std::fs::File::open(path)?;
    read_sdpa(std::io::BufReader::new(file))
}

fn err(line: usize, message: impl Into<String>) -> ConicError {
    ConicError::Parse {
        line,
        message: message.into(),
    }
}

/// Splits a line on whitespace and the punctuation SDPA tolerates.
fn tokens(line: &str) -> impl Iterator<Item = &str> {
    line.split(|c: char| c.is_whitespace() || matches!(c, ',' | '{' | '}' | '(' | ')'))
        .filter(|t| !t.is_empty())
}

fn parse_usize(tok: &str, line: usize, what: &str) -> Result<usize> {
    tok.parse::<usize>()
        .map_err(|_| err(line, format!("expected {what}, found {tok:?}")))
}

fn parse_f64(tok: &str, line: usize) -> Result<f64> {
    let v = tok
        .parse::<f64>()
        .map_err(|_| err(line, format!("expected number, found {tok:?}")))?;
    if !v.is_finite() {
        return Err(err(line, "non-finite number"));
    }
    Ok(v)
}

/// Parses SDPA sparse text. Never panics on malformed input.
pub fn parse_sdpa(text: &str) -> Result<ConicProblem> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l))
        .skip_while(|(_, l)| {
            let t = l.trim_start();
            t.starts_with('"') || t.starts_with('*')
        })
        .filter(|(_, l)| !l.trim().is_empty());

    // Header values may wrap across lines, so tokens are read lazily.
    // Text after the numbers on a header line (`2 = nBLOCK`) is an
    // annotation and is dropped; a line starting with text is kept whole so
    // that it fails to parse.
    let mut pending: Vec<(usize, String)> = Vec::new();
    let mut next_token = |lines: &mut dyn Iterator<Item = (usize, &str)>| -> Option<(usize, String)> {
        loop {
            if !pending.is_empty() {
                return Some(pending.remove(0));
            }
            let (no, l) = lines.next()?;
            let all: Vec<&str> = tokens(l).collect();
            let numeric = all.iter().take_while(|t| t.parse::<f64>().is_ok()).count();
            let keep = if numeric == 0 { all.len() } else { numeric };
            pending = all[..keep].iter().map(|t| (no, t.to_string())).collect();
        }
    };

    let (no, tok) = next_token(&mut lines).ok_or_else(|| err(0, "missing constraint count"))?;
    let m = parse_usize(&tok, no, "constraint count")?;
    if m > MAX_CONSTRAINTS {
        return Err(err(no, format!("constraint count {m} too large")));
    }
    let (no, tok) = next_token(&mut lines).ok_or_else(|| err(no, "missing block count"))?;
    let nblocks = parse_usize(&tok, no, "block count")?;
    if nblocks == 0 || nblocks > MAX_BLOCKS {
        return Err(err(no, format!("invalid block count {nblocks}")));
    }
    let mut cones = Vec::with_capacity(nblocks);
    for _ in 0..nblocks {
        let (no, tok) = next_token(&mut lines).ok_or_else(|| err(no, "missing block size"))?;
        let size: i64 = tok
            .parse()
            .map_err(|_| err(no, format!("expected block size, found {tok:?}")))?;
        let side = size.unsigned_abs() as usize;
        if side == 0 || side > MAX_BLOCK_SIDE {
            return Err(err(no, format!("invalid block size {size}")));
        }
        cones.push(if size < 0 {
            Cone::NonNeg(side)
        } else {
            Cone::Psd(side)
        });
    }
    let mut rhs = Vec::with_capacity(m);
    for _ in 0..m {
        let (no, tok) = next_token(&mut lines).ok_or_else(|| err(no, "missing objective entry"))?;
        rhs.push(parse_f64(&tok, no)?);
    }
    if let Some((no, tok)) = pending.first() {
        return Err(err(*no, format!("unexpected token {tok:?} after header")));
    }

    let mut objective = SparseSym::new();
    let mut constraints = vec![SparseSym::new(); m];
    for (no, line) in lines {
        let toks: Vec<&str> = tokens(line).collect();
        if toks.len() != 5 {
            return Err(err(no, format!("expected 5 fields, found {}", toks.len())));
        }
        let mat = parse_usize(toks[0], no, "matrix number")?;
        let blk = parse_usize(toks[1], no, "block number")?;
        let i = parse_usize(toks[2], no, "row")?;
        let j = parse_usize(toks[3], no, "column")?;
        let v = parse_f64(toks[4], no)?;
        if mat > m {
            return Err(err(no, format!("matrix number {mat} exceeds {m}")));
        }
        if blk == 0 || blk > nblocks {
            return Err(err(no, format!("block number {blk} out of range")));
        }
        let cone = cones[blk - 1];
        if i == 0 || j == 0 || i > cone.side() || j > cone.side() {
            return Err(err(no, format!("index ({i}, {j}) outside block {blk}")));
        }
        if matches!(cone, Cone::NonNeg(_)) && i != j {
            return Err(err(no, "off-diagonal entry in diagonal block"));
        }
        if mat == 0 {
            objective.push(blk - 1, i - 1, j - 1, -v);
        } else {
            constraints[mat - 1].push(blk - 1, i - 1, j - 1, v);
        }
    }
    let mut p = ConicProblem {
        cones,
        objective,
        constraints,
        rhs,
    };
    p.canonicalize();
    Ok(p)
}
