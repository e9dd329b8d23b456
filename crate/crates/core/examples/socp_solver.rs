//! The in-crate SOCP solver on a small max-min power problem:
//! maximize the common margin t of two streams under one amplitude budget.
//!
//!     cargo run --example socp_solver

use cellfree_isac::socp::{solve, solve_feasibility, SocpProblem, Tolerances};
use nalgebra::{DMatrix, DVector};

fn main() -> cellfree_isac::Result<()> {
    // variables (a1, a2, t): amplitudes of two streams and the common margin
    let mut p = SocpProblem::new(3);
    p.set_objective(DVector::from_row_slice(&[0.0, 0.0, -1.0]))?;
    // ‖(a1, a2)‖ ≤ 1
    p.add_soc(
        DMatrix::from_row_slice(2, 3, &[1.0, 0.0, 0.0, 0.0, 1.0, 0.0]),
        DVector::zeros(2),
        DVector::zeros(3),
        1.0,
    )?;
    // t ≤ 2 a1 and t ≤ a2: the weaker user needs more amplitude
    p.add_linear(DVector::from_row_slice(&[-2.0, 0.0, 1.0]), 0.0)?;
    p.add_linear(DVector::from_row_slice(&[0.0, -1.0, 1.0]), 0.0)?;
    p.set_nonneg(0);
    p.set_nonneg(1);
    print!("{}", p.to_text());

    let tol = Tolerances::default();
    let sol = solve(&p, &tol)?;
    println!(
        "{:?} after {} iterations: a = ({:.6}, {:.6}), t = {:.6} (exact 2/sqrt(5) = {:.6}), KKT {:.1e}",
        sol.status,
        sol.iterations,
        sol.x[0],
        sol.x[1],
        sol.x[2],
        2.0 / 5f64.sqrt(),
        sol.kkt_residual
    );

    // demand t ≥ 1, which the budget cannot meet
    p.add_linear(DVector::from_row_slice(&[0.0, 0.0, -1.0]), -1.0)?;
    let f = solve_feasibility(&p, &tol)?;
    println!("with t >= 1: {:?}, smallest uniform relaxation {:.4}", f.status, f.slack.unwrap_or(f64::NAN));
    Ok(())
}
