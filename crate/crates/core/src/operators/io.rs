//! Sparse triplet serialization.
//!
//! Layout: the first line is `#` followed by a JSON [`TripletHeader`]; each
//! following line is `row col re im` for one nonzero matrix entry. When a
//! grading is present, a line `# grading` is followed by its nonzero entries
//! in the same form.

use super::{GeometryTag, Grading, GradedOperator};
use crate::error::{Error, Result};
use crate::linalg::{CMat, C64};
use faer::Mat;
use serde::{Deserialize, Serialize};
use std::io::{BufRead, Write};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TripletHeader {
    pub dim: usize,
    pub geometry_tag: GeometryTag,
    pub has_grading: bool,
    pub chiral_flag: bool,
    pub hermiticity_residual: f64,
    pub anticommutator_residual: Option<f64>,
}

fn write_entries<W: Write>(w: &mut W, m: &CMat) -> std::io::Result<()> {
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            let z = m[(i, j)];
            if z.re != 0.0 || z.im != 0.0 {
                writeln!(w, "{i} {j} {:?} {:?}", z.re, z.im)?;
            }
        }
    }
    Ok(())
}

pub fn write_triplets<W: Write>(op: &GradedOperator, mut w: W) -> Result<()> {
    let header = TripletHeader {
        dim: op.dim(),
        geometry_tag: op.geometry_tag.clone(),
        has_grading: op.grading.is_some(),
        chiral_flag: op.chiral_flag,
        hermiticity_residual: op.hermiticity_residual(),
        anticommutator_residual: op.grading.as_ref().map(|_| op.anticommutator_residual()),
    };
    let io = |e: std::io::Error| Error::Parse(e.to_string());
    let json = serde_json::to_string(&header).map_err(|e| Error::Parse(e.to_string()))?;
    writeln!(w, "#{json}").map_err(io)?;
    write_entries(&mut w, &op.matrix).map_err(io)?;
    if let Some(g) = &op.grading {
        writeln!(w, "# grading").map_err(io)?;
        write_entries(&mut w, &g.to_matrix()).map_err(io)?;
    }
    Ok(())
}

fn parse_entry(line: &str, dim: usize) -> Result<(usize, usize, C64)> {
    let bad = || Error::Parse(format!("malformed triplet line `{line}`"));
    let mut it = line.split_whitespace();
    let i: usize = it.next().ok_or_else(bad)?.parse().map_err(|_| bad())?;
    let j: usize = it.next().ok_or_else(bad)?.parse().map_err(|_| bad())?;
    let re: f64 = it.next().ok_or_else(bad)?.parse().map_err(|_| bad())?;
    let im: f64 = it.next().ok_or_else(bad)?.parse().map_err(|_| bad())?;
    if i >= dim || j >= dim || it.next().is_some() {
        return Err(bad());
    }
    Ok((i, j, C64::new(re, im)))
}

/// Reads an operator written by [`write_triplets`]. Diagonal gradings are
/// restored as diagonal.
pub fn read_triplets<R: BufRead>(r: R) -> Result<GradedOperator> {
    let mut lines = r.lines();
    let first = lines
        .next()
        .ok_or_else(|| Error::Parse("empty input".into()))?
        .map_err(|e| Error::Parse(e.to_string()))?;
    let json = first.strip_prefix('#').ok_or_else(|| Error::Parse("missing header".into()))?;
    let header: TripletHeader = serde_json::from_str(json).map_err(|e| Error::Parse(e.to_string()))?;
    let n = header.dim;
    let mut m: CMat = Mat::zeros(n, n);
    let mut g: Option<CMat> = None;
    for line in lines {
        let line = line.map_err(|e| Error::Parse(e.to_string()))?;
        if line.trim() == "# grading" {
            g = Some(Mat::zeros(n, n));
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let (i, j, z) = parse_entry(&line, n)?;
        match g.as_mut() {
            Some(gm) => gm[(i, j)] = z,
            None => m[(i, j)] = z,
        }
    }
    if header.has_grading != g.is_some() {
        return Err(Error::Parse("grading section does not match the header".into()));
    }
    let grading = g.map(|gm| {
        let diagonal = (0..n).all(|i| (0..n).all(|j| i == j || gm[(i, j)] == C64::new(0.0, 0.0)))
            && (0..n).all(|i| gm[(i, i)].im == 0.0);
        if diagonal {
            Grading::Diagonal((0..n).map(|i| gm[(i, i)].re).collect())
        } else {
            Grading::Dense(gm)
        }
    });
    GradedOperator::new(m, grading, header.geometry_tag)
}
