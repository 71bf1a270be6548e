//! Snapshot output of a discrete field at the Gauss–Lobatto nodes of each
//! active cell.
//!
//! CSV files have the header `cell,x,y,value`. VTK files are legacy ASCII
//! unstructured grids with one vertex per node and a point scalar `u`.

use crate::basis::FESpace;
use crate::error::{Error, Result};
use std::io::Write;
use std::path::Path;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SnapshotFormat {
    Csv,
    Vtk,
}

impl std::str::FromStr for SnapshotFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(SnapshotFormat::Csv),
            "vtk" => Ok(SnapshotFormat::Vtk),
            _ => Err(Error::Parse(format!("unknown snapshot format '{s}'"))),
        }
    }
}

fn nodal_values(space: &FESpace, free: &[f64]) -> Vec<(usize, [f64; 2], f64)> {
    let raw = space.expand(free);
    let mesh = space.mesh();
    let h = mesh.h();
    let mut out = Vec::new();
    for &cell in space.classification().active_cells() {
        let basis = space.cell_basis(cell);
        let lower = mesh.cell_lower(cell);
        for (l, v) in space.local_coefficients(&raw, cell).into_iter().enumerate() {
            let xi = basis.node(l);
            let x = [lower[0] + 0.5 * h * (xi[0] + 1.0), lower[1] + 0.5 * h * (xi[1] + 1.0)];
            out.push((cell, x, v));
        }
    }
    out
}

/// Writes the field with free coefficients `free` to `path`.
pub fn write_snapshot(space: &FESpace, free: &[f64], t: f64, path: &Path, format: SnapshotFormat) -> Result<()> {
    if free.len() != space.num_dofs() {
        return Err(Error::DimensionMismatch {
            expected: space.num_dofs(),
            found: free.len(),
        });
    }
    let nodes = nodal_values(space, free);
    match format {
        SnapshotFormat::Csv => {
            let mut w = csv::Writer::from_path(path)?;
            w.write_record(["cell", "x", "y", "value"])?;
            for (cell, x, v) in nodes {
                w.write_record(&[cell.to_string(), x[0].to_string(), x[1].to_string(), v.to_string()])?;
            }
            w.flush()?;
        }
        SnapshotFormat::Vtk => {
            let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
            writeln!(w, "# vtk DataFile Version 3.0")?;
            writeln!(w, "wave field at t = {t}")?;
            writeln!(w, "ASCII\nDATASET UNSTRUCTURED_GRID")?;
            writeln!(w, "POINTS {} double", nodes.len())?;
            for (_, x, _) in &nodes {
                writeln!(w, "{} {} 0", x[0], x[1])?;
            }
            writeln!(w, "CELLS {} {}", nodes.len(), 2 * nodes.len())?;
            for i in 0..nodes.len() {
                writeln!(w, "1 {i}")?;
            }
            writeln!(w, "CELL_TYPES {}", nodes.len())?;
            for _ in 0..nodes.len() {
                writeln!(w, "1")?;
            }
            writeln!(w, "POINT_DATA {}\nSCALARS u double 1\nLOOKUP_TABLE default", nodes.len())?;
            for (_, _, v) in &nodes {
                writeln!(w, "{v}")?;
            }
            w.flush()?;
        }
    }
    Ok(())
}
