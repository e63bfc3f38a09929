//! Sparse SDPA (`.dat-s`) text format.
//!
//! Layout: `*`-prefixed comments, `mDIM`, `nBLOCK`, block sizes (negative for
//! diagonal blocks), the objective row, then one `k b i j v` line per nonzero
//! upper-triangular entry of `F_k` with 1-based block and matrix indices.

use std::fmt::Write as _;

use nalgebra::DMatrix;

use super::{to_sdpa, SdpaProblem};
use crate::error::{Error, Module, Result};
use crate::lmi::AffineLmiSystem;

fn fmt_value(v: f64) -> String {
    if v.fract() == 0.0 && v.abs() < 1e15 {
        format!("{}", v as i64)
    } else if (1e-4..1e15).contains(&v.abs()) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

/// Writes the slack-maximization problem for `system`.
pub fn export_sdpa(system: &AffineLmiSystem) -> String {
    let problem = to_sdpa(system);
    let mut out = String::new();
    out.push_str("* stringlmi SDPA export\n");
    let _ = writeln!(
        out,
        "* variables: {} decision entries then the common slack t; objective minimizes -t; margin {}",
        system.n_vars,
        fmt_value(system.margin)
    );
    if system.blocks.is_empty() {
        out.push_str("* no constraints\n");
        return out;
    }
    write_problem(&problem, &mut out);
    out
}

pub fn write_problem(problem: &SdpaProblem, out: &mut String) {
    let _ = writeln!(out, "{} = mDIM", problem.m);
    let _ = writeln!(out, "{} = nBLOCK", problem.block_sizes.len());
    let sizes: Vec<String> = problem.block_sizes.iter().map(|s| s.to_string()).collect();
    let _ = writeln!(out, "{}", sizes.join(" "));
    let costs: Vec<String> = problem.c.iter().map(|&v| fmt_value(v)).collect();
    let _ = writeln!(out, "{}", costs.join(" "));
    let mut write_matrix = |k: usize, b: usize, m: &DMatrix<f64>, diagonal: bool| {
        for i in 0..m.nrows() {
            for j in i..m.ncols() {
                if diagonal && i != j {
                    continue;
                }
                let v = m[(i, j)];
                if v != 0.0 {
                    let _ = writeln!(out, "{k} {} {} {} {}", b + 1, i + 1, j + 1, fmt_value(v));
                }
            }
        }
    };
    for (b, m) in problem.f0.iter().enumerate() {
        write_matrix(0, b, m, problem.block_sizes[b] < 0);
    }
    for (i, terms) in problem.f.iter().enumerate() {
        let mut terms: Vec<_> = terms.iter().collect();
        terms.sort_by_key(|(b, _)| *b);
        for (b, m) in terms {
            write_matrix(i + 1, *b, m, problem.block_sizes[*b] < 0);
        }
    }
}

fn numbers(line: &str) -> Vec<f64> {
    line.split(|c: char| c.is_whitespace() || matches!(c, ',' | '{' | '}' | '(' | ')'))
        .map_while(|tok| if tok.is_empty() { Some(None) } else { tok.parse::<f64>().ok().map(Some) })
        .flatten()
        .collect()
}

/// Reads a sparse SDPA file. The entry section may list `(i, j)` in either
/// triangle; both are mirrored into a symmetric matrix.
pub fn parse_sdpa(text: &str) -> Result<SdpaProblem> {
    let bad = |msg: &str| Error::domain(Module::Sdp, format!("malformed SDPA input: {msg}"));
    let mut lines = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('*') && !l.starts_with('"'));

    let m = *numbers(lines.next().ok_or_else(|| bad("missing mDIM"))?).first().ok_or_else(|| bad("mDIM"))? as usize;
    let nblock = *numbers(lines.next().ok_or_else(|| bad("missing nBLOCK"))?).first().ok_or_else(|| bad("nBLOCK"))? as usize;
    let mut sizes = Vec::new();
    while sizes.len() < nblock {
        sizes.extend(numbers(lines.next().ok_or_else(|| bad("missing block sizes"))?));
    }
    let block_sizes: Vec<isize> = sizes.iter().take(nblock).map(|&v| v as isize).collect();
    if block_sizes.contains(&0) {
        return Err(bad("zero block size"));
    }
    let mut c = Vec::new();
    while c.len() < m {
        c.extend(numbers(lines.next().ok_or_else(|| bad("missing objective"))?));
    }
    c.truncate(m);

    let dims: Vec<usize> = block_sizes.iter().map(|s| s.unsigned_abs()).collect();
    let mut f0: Vec<DMatrix<f64>> = dims.iter().map(|&d| DMatrix::zeros(d, d)).collect();
    let mut dense: Vec<Vec<Option<DMatrix<f64>>>> = vec![vec![None; nblock]; m];
    for line in lines {
        let v = numbers(line);
        if v.len() < 5 {
            return Err(bad(&format!("entry line '{line}'")));
        }
        let (k, b, i, j) = (v[0] as usize, v[1] as usize, v[2] as usize, v[3] as usize);
        if k > m || b == 0 || b > nblock || i == 0 || j == 0 || i > dims[b - 1] || j > dims[b - 1] {
            return Err(bad(&format!("index out of range in '{line}'")));
        }
        let target = if k == 0 {
            &mut f0[b - 1]
        } else {
            dense[k - 1][b - 1].get_or_insert_with(|| DMatrix::zeros(dims[b - 1], dims[b - 1]))
        };
        target[(i - 1, j - 1)] = v[4];
        target[(j - 1, i - 1)] = v[4];
    }
    let f = dense
        .into_iter()
        .map(|per_block| per_block.into_iter().enumerate().filter_map(|(b, m)| m.map(|m| (b, m))).collect())
        .collect();
    Ok(SdpaProblem { m, block_sizes, c, f0, f })
}
