//! Nearest point on each kind of quadratic constraint set: passband
//! (nonconvex exterior), stopband, per-antenna power, SINR (indefinite) and
//! an arbitrary Hermitian matrix with the eigendecomposition path.
//!
//! cargo run --example project_constraint

use nalgebra::DMatrix;
use sparse_dfrc::array::{steering_vector, ArrayGeometry};
use sparse_dfrc::qcqp::{project, project_generic};
use sparse_dfrc::{Complex64, QuadraticConstraint};

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn main() -> sparse_dfrc::Result<()> {
    let (m, geometry) = (2, ArrayGeometry::new(3, 0.5)?);
    let a0 = steering_vector(&geometry, 0.0)?.entries;
    let a40 = steering_vector(&geometry, 40.0)?.entries;
    let h = steering_vector(&geometry, -30.0)?.entries;
    let target = vec![c(0.3, 0.1), c(-0.2, 0.4), c(0.5, 0.0), c(0.1, -0.3), c(0.6, 0.2), c(-0.4, 0.1)];

    let rows = [
        QuadraticConstraint::passband(&a0, 0.0, 10.0, m)?,
        QuadraticConstraint::stopband(&a40, 40.0, 0.05, m)?,
        QuadraticConstraint::antenna_power(2, 0.1, m, 3)?,
        QuadraticConstraint::sinr(&h, 10.0, 1.0, 0, m)?,
    ];
    for row in &rows {
        let r = project(row, &target)?;
        println!(
            "{:<18} slack {:>9.3e} -> {:>9.3e}  mu {:.4}  moved {:.4}  kkt {:.1e}",
            row.label(),
            row.slack(&target),
            row.slack(&r.point),
            r.multiplier,
            r.distance_sqr(&target).sqrt(),
            r.kkt_residual
        );
    }

    let f = DMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 2.0), c(0.0, -2.0), c(-1.0, 0.0)]);
    let r = project_generic(&f, -1.0, &[c(0.5, 0.0), c(0.0, 0.0)])?;
    println!("indefinite 2x2     mu {:.4}  point {:?}  kkt {:.1e}", r.multiplier, r.point, r.kkt_residual);
    Ok(())
}
