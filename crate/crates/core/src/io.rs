//! Text formats: field files, solver traces and replacement reports.
//!
//! A field file starts with `# key=value` header lines followed by a CSV
//! table `i,j,z1,z2,z3,z4,z5` with one row per in-domain node in row-major
//! order. Values are written with 17 significant digits, which round-trips
//! every `f64` exactly.
//!
//! ```text
//! # qtensor-field v1
//! # nx=64
//! # ny=64
//! # h=3.2258064516129031e-2
//! # origin=-1.0161290322580645e0,-1.0161290322580645e0
//! # mask=disk
//! # center=0e0,0e0
//! # radius=1e0
//! i,j,z1,z2,z3,z4,z5
//! ```

use std::collections::HashMap;
use std::io::{BufRead, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::field::{Grid2D, QField, Shape};
use crate::minimizer::SolveTrace;
use crate::replacement::{ReplacementReport, ReplacementSpec};

pub const FIELD_MAGIC: &str = "# qtensor-field v1";

fn parse_err(msg: impl Into<String>) -> Error {
    Error::Parse(msg.into())
}

/// `{:.16e}`: 17 significant digits, exact round trip.
pub fn fmt_num(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_field<W: Write>(mut w: W, field: &QField) -> Result<()> {
    let g = field.grid();
    writeln!(w, "{FIELD_MAGIC}")?;
    writeln!(w, "# nx={}", g.nx())?;
    writeln!(w, "# ny={}", g.ny())?;
    writeln!(w, "# h={}", fmt_num(g.h()))?;
    writeln!(w, "# origin={},{}", fmt_num(g.origin()[0]), fmt_num(g.origin()[1]))?;
    match g.shape() {
        Shape::Rectangle => writeln!(w, "# mask=rectangle")?,
        Shape::Disk { center, radius } => {
            writeln!(w, "# mask=disk")?;
            writeln!(w, "# center={},{}", fmt_num(center[0]), fmt_num(center[1]))?;
            writeln!(w, "# radius={}", fmt_num(radius))?;
        }
    }
    writeln!(w, "i,j,z1,z2,z3,z4,z5")?;
    for k in 0..g.len() {
        if !g.in_domain(k) {
            continue;
        }
        let (i, j) = g.ij(k);
        let z = field.z(k);
        writeln!(w, "{i},{j},{},{},{},{},{}", fmt_num(z[0]), fmt_num(z[1]), fmt_num(z[2]), fmt_num(z[3]), fmt_num(z[4]))?;
    }
    Ok(())
}

fn pair(s: &str) -> Result<[f64; 2]> {
    let mut it = s.split(',').map(|v| v.trim().parse::<f64>());
    match (it.next(), it.next(), it.next()) {
        (Some(Ok(a)), Some(Ok(b)), None) => Ok([a, b]),
        _ => Err(parse_err(format!("expected two comma-separated numbers, got {s:?}"))),
    }
}

pub fn read_field<R: BufRead>(r: R) -> Result<QField> {
    let mut lines = r.lines();
    let first = lines.next().transpose()?.unwrap_or_default();
    if first.trim() != FIELD_MAGIC {
        return Err(parse_err("missing field file header"));
    }
    let mut header = HashMap::new();
    let mut rows = Vec::new();
    let mut seen_columns = false;
    for line in lines {
        let line = line?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            let (k, v) = rest.split_once('=').ok_or_else(|| parse_err(format!("bad header line {line:?}")))?;
            header.insert(k.trim().to_string(), v.trim().to_string());
        } else if !seen_columns {
            if line != "i,j,z1,z2,z3,z4,z5" {
                return Err(parse_err(format!("unexpected column header {line:?}")));
            }
            seen_columns = true;
        } else {
            rows.push(line.to_string());
        }
    }
    let get = |k: &str| header.get(k).ok_or_else(|| parse_err(format!("missing header key {k}")));
    let nx: usize = get("nx")?.parse().map_err(|_| parse_err("bad nx"))?;
    let ny: usize = get("ny")?.parse().map_err(|_| parse_err("bad ny"))?;
    let h: f64 = get("h")?.parse().map_err(|_| parse_err("bad h"))?;
    let origin = pair(get("origin")?)?;
    let grid = match get("mask")?.as_str() {
        "rectangle" => {
            let g = Grid2D::rectangle(nx, ny, h)?;
            if origin != [0.0, 0.0] {
                return Err(parse_err("rectangle fields have their origin at zero"));
            }
            g
        }
        "disk" => {
            let center = pair(get("center")?)?;
            let radius: f64 = get("radius")?.parse().map_err(|_| parse_err("bad radius"))?;
            Grid2D::disk_mask(nx, ny, h, origin, center, radius)?
        }
        other => return Err(parse_err(format!("unknown mask {other:?}"))),
    };
    let mut z = vec![[0.0; 5]; grid.len()];
    let mut filled = vec![false; grid.len()];
    for row in rows {
        let cols: Vec<&str> = row.split(',').collect();
        if cols.len() != 7 {
            return Err(parse_err(format!("expected 7 columns, got {row:?}")));
        }
        let i: usize = cols[0].trim().parse().map_err(|_| parse_err(format!("bad index in {row:?}")))?;
        let j: usize = cols[1].trim().parse().map_err(|_| parse_err(format!("bad index in {row:?}")))?;
        if i >= nx || j >= ny {
            return Err(parse_err(format!("node ({i}, {j}) outside the grid")));
        }
        let k = grid.index(i, j);
        for m in 0..5 {
            z[k][m] = cols[2 + m].trim().parse().map_err(|_| parse_err(format!("bad value in {row:?}")))?;
        }
        filled[k] = true;
    }
    if let Some(k) = (0..grid.len()).find(|&k| grid.in_domain(k) && !filled[k]) {
        return Err(parse_err(format!("no value for node {k}")));
    }
    QField::from_values(grid, z)
}

pub fn save_field(path: &Path, field: &QField) -> Result<()> {
    let f = std::fs::File::create(path)?;
    let mut w = std::io::BufWriter::new(f);
    write_field(&mut w, field)?;
    w.flush()?;
    Ok(())
}

pub fn load_field(path: &Path) -> Result<QField> {
    read_field(std::io::BufReader::new(std::fs::File::open(path)?))
}

pub const TRACE_HEADER: &str = "iter,total,elastic,bulk,grad_norm,min_margin,step";

pub fn write_trace<W: Write>(mut w: W, trace: &SolveTrace) -> Result<()> {
    writeln!(w, "{TRACE_HEADER}")?;
    for r in &trace.records {
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            r.iter,
            fmt_num(r.total),
            fmt_num(r.elastic),
            fmt_num(r.bulk),
            fmt_num(r.grad_norm),
            fmt_num(r.min_margin),
            fmt_num(r.step)
        )?;
    }
    Ok(())
}

pub const DIAGNOSTICS_HEADER: &str = "center_x,center_y,radius,operator,energy_before,energy_after,mv_lhs,mv_rhs,max_margin_violation,residual";

pub fn write_diagnostics_header<W: Write>(mut w: W) -> Result<()> {
    writeln!(w, "{DIAGNOSTICS_HEADER}")?;
    Ok(())
}

pub fn write_diagnostics_row<W: Write>(mut w: W, spec: &ReplacementSpec, report: &ReplacementReport) -> Result<()> {
    writeln!(
        w,
        "{},{},{},{},{},{},{},{},{},{}",
        fmt_num(spec.center[0]),
        fmt_num(spec.center[1]),
        fmt_num(spec.radius),
        spec.operator.name(),
        fmt_num(report.energy_before),
        fmt_num(report.energy_after),
        fmt_num(report.mean_value_lhs),
        fmt_num(report.mean_value_rhs),
        fmt_num(report.max_margin_violation),
        fmt_num(report.solver_residual)
    )?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::make_defect_bc;
    use crate::minimizer::harmonic_initial;

    #[test]
    fn field_round_trip_is_exact() {
        let g = Grid2D::disk(21, 1.0).unwrap();
        let bc = make_defect_bc(&g, 0.3, 1).unwrap();
        let f = harmonic_initial(&QField::new(g, &bc).unwrap()).unwrap();
        let mut buf = Vec::new();
        write_field(&mut buf, &f).unwrap();
        let back = read_field(buf.as_slice()).unwrap();
        assert_eq!(back, f);

        let r = Grid2D::rectangle(5, 4, 0.1).unwrap();
        let f = QField::from_fn(r, |p| [p[0] / 3.0, p[1] / 7.0, 0.0, 0.1, -0.01]).unwrap();
        let mut buf = Vec::new();
        write_field(&mut buf, &f).unwrap();
        assert_eq!(read_field(buf.as_slice()).unwrap(), f);
    }

    #[test]
    fn malformed_files_are_rejected() {
        assert!(read_field("nonsense\n".as_bytes()).is_err());
        let text = format!("{FIELD_MAGIC}\n# nx=3\n# ny=3\n# h=1\n# origin=0,0\n# mask=rectangle\ni,j,z1,z2,z3,z4,z5\n0,0,0,0,0,0,0\n");
        assert!(matches!(read_field(text.as_bytes()), Err(Error::Parse(_))));
    }

    #[test]
    fn trace_csv_has_header_and_rows() {
        let mut t = SolveTrace::default();
        t.records.push(crate::minimizer::TraceRecord { iter: 0, total: 1.0, elastic: 0.5, bulk: 0.5, grad_norm: 2.0, min_margin: 0.1, step: 0.0 });
        let mut buf = Vec::new();
        write_trace(&mut buf, &t).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert_eq!(s.lines().next(), Some(TRACE_HEADER));
        assert_eq!(s.lines().count(), 2);
    }
}
