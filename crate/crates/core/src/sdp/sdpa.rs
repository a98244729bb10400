//! Sparse SDPA text format.
//!
//! Layout: optional comment lines starting with `"` or `*`, then the number of constraints,
//! the number of blocks, the block sizes (negative for diagonal blocks), the right-hand side
//! `b`, and one `matno blkno i j value` line per upper-triangle entry with 1-based indices.
//! Matrix 0 is the objective `C`; matrix `i` is `A_i`. Values use 17 significant digits so
//! that export followed by import is exact.

use std::fmt::Write as _;

use super::problem::{BlockKind, BlockSpec, ConicSdp, SparseSym};
use super::SdpError;

pub fn to_sdpa(sdp: &ConicSdp) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{}", sdp.num_constraints());
    let _ = writeln!(out, "{}", sdp.blocks.len());
    let sizes: Vec<String> = sdp
        .blocks
        .iter()
        .map(|b| match b.kind {
            BlockKind::Psd => b.size.to_string(),
            BlockKind::Diag => format!("-{}", b.size),
        })
        .collect();
    let _ = writeln!(out, "{}", sizes.join(" "));
    let bs: Vec<String> = sdp.b.iter().map(|&v| num(v)).collect();
    let _ = writeln!(out, "{}", bs.join(" "));
    let mut emit = |matno: usize, blk: usize, m: &SparseSym| {
        for &(i, j, v) in m.entries() {
            let _ = writeln!(out, "{} {} {} {} {}", matno, blk + 1, i + 1, j + 1, num(v));
        }
    };
    for (k, c) in sdp.c.iter().enumerate() {
        emit(0, k, c);
    }
    for (i, con) in sdp.constraints.iter().enumerate() {
        for (k, a) in &con.parts {
            emit(i + 1, *k, a);
        }
    }
    out
}

fn num(v: f64) -> String {
    format!("{v:.16e}")
}

struct Tok<'a> {
    line: usize,
    col: usize,
    text: &'a str,
}

fn tokens(line_no: usize, line: &str) -> Vec<Tok<'_>> {
    let mut out = Vec::new();
    let mut start = None;
    let sep = |c: char| c.is_whitespace() || ",{}()=".contains(c);
    for (pos, c) in line.char_indices() {
        match (sep(c), start) {
            (true, Some(s)) => {
                out.push(Tok { line: line_no, col: s + 1, text: &line[s..pos] });
                start = None;
            }
            (false, None) => start = Some(pos),
            _ => {}
        }
    }
    if let Some(s) = start {
        out.push(Tok { line: line_no, col: s + 1, text: &line[s..] });
    }
    out
}

fn err(line: usize, column: usize, msg: impl Into<String>) -> SdpError {
    SdpError::Parse { line, column, msg: msg.into() }
}

fn parse_int(t: &Tok) -> Result<i64, SdpError> {
    t.text
        .parse::<i64>()
        .or_else(|_| match t.text.parse::<f64>() {
            Ok(v) if v.fract() == 0.0 && v.abs() < 1e15 => Ok(v as i64),
            _ => Err(()),
        })
        .map_err(|_| err(t.line, t.col, format!("expected an integer, found `{}`", t.text)))
}

fn parse_f64(t: &Tok) -> Result<f64, SdpError> {
    let v = t
        .text
        .parse::<f64>()
        .map_err(|_| err(t.line, t.col, format!("expected a number, found `{}`", t.text)))?;
    if !v.is_finite() {
        return Err(err(t.line, t.col, "non-finite value"));
    }
    Ok(v)
}

pub fn from_sdpa(text: &str) -> Result<ConicSdp, SdpError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l))
        .filter(|(_, l)| !l.trim().is_empty())
        .skip_while(|(_, l)| {
            let t = l.trim_start();
            t.starts_with('"') || t.starts_with('*')
        });
    let mut header = |what: &str| -> Result<(usize, &str), SdpError> {
        lines
            .next()
            .ok_or_else(|| err(text.lines().count() + 1, 1, format!("missing {what}")))
    };

    let (ln, l) = header("constraint count")?;
    let toks = tokens(ln, l);
    let t = toks.first().ok_or_else(|| err(ln, 1, "missing constraint count"))?;
    let m = parse_int(t)?;
    if m < 0 {
        return Err(err(ln, t.col, "negative constraint count"));
    }
    let m = m as usize;

    let (ln, l) = header("block count")?;
    let toks = tokens(ln, l);
    let t = toks.first().ok_or_else(|| err(ln, 1, "missing block count"))?;
    let nb = parse_int(t)?;
    if nb <= 0 {
        return Err(err(ln, t.col, "block count must be positive"));
    }
    let nb = nb as usize;

    let (ln, l) = header("block sizes")?;
    let toks = tokens(ln, l);
    if toks.len() < nb {
        return Err(err(ln, l.len() + 1, format!("expected {nb} block sizes, found {}", toks.len())));
    }
    let mut blocks = Vec::with_capacity(nb);
    for t in &toks[..nb] {
        let s = parse_int(t)?;
        if s == 0 {
            return Err(err(t.line, t.col, "block size 0"));
        }
        blocks.push(BlockSpec {
            size: s.unsigned_abs() as usize,
            kind: if s > 0 { BlockKind::Psd } else { BlockKind::Diag },
        });
    }

    // b may wrap over several lines
    let mut b = Vec::with_capacity(m);
    while b.len() < m {
        let (ln, l) = header("right-hand side")?;
        for t in tokens(ln, l) {
            if b.len() == m {
                return Err(err(t.line, t.col, "too many right-hand side values"));
            }
            b.push(parse_f64(&t)?);
        }
    }

    let mut c: Vec<Vec<(usize, usize, f64)>> = vec![Vec::new(); nb];
    let mut a: Vec<Vec<Vec<(usize, usize, f64)>>> = vec![vec![Vec::new(); nb]; m];
    for (ln, l) in lines {
        let toks = tokens(ln, l);
        if toks.len() < 5 {
            return Err(err(ln, l.len() + 1, "entry needs `matno blkno i j value`"));
        }
        let matno = parse_int(&toks[0])?;
        if matno < 0 || matno as usize > m {
            return Err(err(ln, toks[0].col, format!("matrix number {matno} outside 0..={m}")));
        }
        let blk = parse_int(&toks[1])?;
        if blk < 1 || blk as usize > nb {
            return Err(err(ln, toks[1].col, format!("block number {blk} outside 1..={nb}")));
        }
        let blk = blk as usize - 1;
        let size = blocks[blk].size as i64;
        let i = parse_int(&toks[2])?;
        let j = parse_int(&toks[3])?;
        for (v, t) in [(i, &toks[2]), (j, &toks[3])] {
            if v < 1 || v > size {
                return Err(err(ln, t.col, format!("index {v} outside block of size {size}")));
            }
        }
        if blocks[blk].kind == BlockKind::Diag && i != j {
            return Err(err(ln, toks[3].col, "off-diagonal entry in a diagonal block"));
        }
        let v = parse_f64(&toks[4])?;
        let e = (i as usize - 1, j as usize - 1, v);
        if matno == 0 {
            c[blk].push(e);
        } else {
            a[matno as usize - 1][blk].push(e);
        }
    }

    let mut sdp = ConicSdp::new(blocks);
    sdp.c = c.into_iter().map(SparseSym::from_triplets).collect();
    for (parts, bi) in a.into_iter().zip(b) {
        let parts = parts
            .into_iter()
            .enumerate()
            .map(|(k, t)| (k, SparseSym::from_triplets(t)))
            .collect();
        sdp.add_constraint(parts, bi);
    }
    Ok(sdp)
}
