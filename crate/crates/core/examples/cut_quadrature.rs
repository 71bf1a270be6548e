//! Area and perimeter of the unit disk and the star from cut-cell
//! quadrature, for the exact and the projected level set.
//!
//!     cargo run --release --example cut_quadrature

use cutwave::forms::CutGeometry;
use cutwave::geometry::{project_levelset, LevelSet};
use cutwave::grid::{classify_cells, BackgroundMesh};

fn measure(levelset: &LevelSet, mesh: &BackgroundMesh, p: usize) -> cutwave::Result<(f64, f64)> {
    let cls = classify_cells(mesh, levelset, p)?;
    let geom = CutGeometry::build(mesh, &cls, levelset, p + 1)?;
    let h = mesh.h();
    let (mut area, mut length) = (0.0, 0.0);
    for &cell in cls.active_cells() {
        match geom.rule(cell) {
            Some(q) => {
                area += q.volume_weight_sum();
                length += q.surface_weight_sum();
            }
            None => area += h * h,
        }
    }
    Ok((area, length))
}

fn main() -> cutwave::Result<()> {
    let pi = std::f64::consts::PI;
    let disk = LevelSet::circle([0.0, 0.0], 1.0);
    for p in 1..=3 {
        for h in [0.2, 0.1, 0.05] {
            let mesh = BackgroundMesh::new([-1.5, -1.5], [3.0, 3.0], h)?;
            let (a, l) = measure(&disk, &mesh, p)?;
            let (ap, lp) = measure(&project_levelset(&disk, &mesh, p)?, &mesh, p)?;
            println!(
                "p={p} h={h:<5} exact: area {:+.2e} length {:+.2e}   projected: area {:+.2e} length {:+.2e}",
                a - pi,
                l - 2.0 * pi,
                ap - pi,
                lp - 2.0 * pi
            );
        }
    }
    let mesh = BackgroundMesh::new([-1.5, -1.5], [3.0, 3.0], 0.05)?;
    let (a, l) = measure(&LevelSet::star(), &mesh, 3)?;
    println!("star exterior: area {a:.8} (box minus star), boundary length {l:.8}");
    Ok(())
}
