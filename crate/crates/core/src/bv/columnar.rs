//! Plain-text columnar format for grid functions and measures.
//!
//! ```text
//! # grid-function
//! # tail_left <offset> <coef> <exponent>
//! # tail_right <offset> <coef> <exponent>
//! <x> <value> <left_limit>
//! ...
//! ```
//!
//! Measures use `# measure`, the same tail lines (describing the density
//! beyond the breaks), and rows `<x> <atom_mass> <density_start>
//! <density_mid> <density_end>` where the density columns describe the
//! segment starting at `x` (zero on the last row). A signed measure is a
//! `# signed-measure` header followed by a `# part positive` and a
//! `# part negative` measure block. Numbers round-trip exactly.

use std::fmt::Write as _;

use super::grid::GridFunction;
use super::measure::{Measure, Quadratic, SignedMeasure};
use super::tail::Tail;
use crate::error::{invalid, Error, Result};

fn tail_line(name: &str, t: &Tail) -> String {
    format!("# {name} {} {} {}\n", t.offset, t.coef, t.exponent)
}

pub fn write_grid_function(f: &GridFunction) -> String {
    let mut out = String::from("# grid-function\n");
    out += &tail_line("tail_left", f.tail_left());
    out += &tail_line("tail_right", f.tail_right());
    for ((x, v), l) in f.grid().iter().zip(f.values()).zip(f.left_limits()) {
        let _ = writeln!(out, "{x} {v} {l}");
    }
    out
}

fn write_measure_body(m: &Measure, out: &mut String) {
    *out += &tail_line("tail_left", m.tail_left());
    *out += &tail_line("tail_right", m.tail_right());
    let segs = m.density_segments();
    for (i, (x, a)) in m.breaks().iter().zip(m.atom_masses()).enumerate() {
        let q = segs.get(i).copied().unwrap_or_default();
        let _ = writeln!(out, "{x} {a} {} {} {}", q.start, q.mid, q.end);
    }
}

pub fn write_measure(m: &Measure) -> String {
    let mut out = String::from("# measure\n");
    write_measure_body(m, &mut out);
    out
}

pub fn write_signed_measure(m: &SignedMeasure) -> String {
    let mut out = String::from("# signed-measure\n# part positive\n");
    write_measure_body(&m.positive, &mut out);
    out += "# part negative\n";
    write_measure_body(&m.negative, &mut out);
    out
}

fn parse_f64(tok: &str, line: usize) -> Result<f64> {
    tok.parse::<f64>().map_err(|_| invalid(format!("line {line}: cannot parse number {tok:?}")))
}

struct Block {
    tail_left: Tail,
    tail_right: Tail,
    rows: Vec<Vec<f64>>,
}

fn parse_blocks(text: &str, kind: &str, columns: usize) -> Result<Vec<Block>> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    match lines.next() {
        Some((_, l)) if l.trim() == format!("# {kind}") => {}
        _ => return Err(invalid(format!("expected a '# {kind}' header"))),
    }
    let mut blocks: Vec<Block> = Vec::new();
    let new_block = || Block { tail_left: Tail::ZERO, tail_right: Tail::ZERO, rows: Vec::new() };
    if kind != "signed-measure" {
        blocks.push(new_block());
    }
    for (n, line) in lines {
        let n = n + 1;
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks[0] == "#" {
            match toks.get(1).copied() {
                Some("part") => blocks.push(new_block()),
                Some(side @ ("tail_left" | "tail_right")) => {
                    if toks.len() != 5 {
                        return Err(invalid(format!("line {n}: tail needs offset, coef and exponent")));
                    }
                    let t = Tail {
                        offset: parse_f64(toks[2], n)?,
                        coef: parse_f64(toks[3], n)?,
                        exponent: parse_f64(toks[4], n)?,
                    };
                    let b = blocks.last_mut().ok_or_else(|| invalid(format!("line {n}: tail before '# part'")))?;
                    if side == "tail_left" {
                        b.tail_left = t;
                    } else {
                        b.tail_right = t;
                    }
                }
                _ => {}
            }
            continue;
        }
        if toks.len() != columns {
            return Err(invalid(format!("line {n}: expected {columns} columns, found {}", toks.len())));
        }
        let row = toks.iter().map(|t| parse_f64(t, n)).collect::<Result<Vec<_>>>()?;
        blocks.last_mut().ok_or_else(|| invalid(format!("line {n}: row before '# part'")))?.rows.push(row);
    }
    Ok(blocks)
}

pub fn read_grid_function(text: &str) -> Result<GridFunction> {
    let b = parse_blocks(text, "grid-function", 3)?.remove(0);
    let col = |k: usize| b.rows.iter().map(|r| r[k]).collect::<Vec<_>>();
    GridFunction::new(col(0), col(1), col(2), b.tail_left, b.tail_right)
}

fn block_to_measure(b: &Block) -> Result<Measure> {
    let breaks: Vec<f64> = b.rows.iter().map(|r| r[0]).collect();
    let atoms: Vec<f64> = b.rows.iter().map(|r| r[1]).collect();
    let segs = b.rows.len().saturating_sub(1);
    let density = b.rows[..segs].iter().map(|r| Quadratic { start: r[2], mid: r[3], end: r[4] }).collect();
    Measure::new(breaks, atoms, density, b.tail_left, b.tail_right)
}

pub fn read_measure(text: &str) -> Result<Measure> {
    block_to_measure(&parse_blocks(text, "measure", 5)?[0])
}

pub fn read_signed_measure(text: &str) -> Result<SignedMeasure> {
    let blocks = parse_blocks(text, "signed-measure", 5)?;
    if blocks.len() != 2 {
        return Err(Error::InvalidInput("a signed measure needs exactly two parts".into()));
    }
    Ok(SignedMeasure::from_parts(block_to_measure(&blocks[0])?, block_to_measure(&blocks[1])?))
}
