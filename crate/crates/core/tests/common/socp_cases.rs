use cellfree_isac::socp::SocpProblem;
use nalgebra::{DMatrix, DVector};

pub fn v(x: &[f64]) -> DVector<f64> {
    DVector::from_row_slice(x)
}

pub fn m(rows: usize, cols: usize, x: &[f64]) -> DMatrix<f64> {
    DMatrix::from_row_slice(rows, cols, x)
}

/// `‖A x + b‖ ≤ c^T x + d` with `A` given row-major.
pub fn cone(p: &mut SocpProblem, a: &[f64], b: &[f64], c: &[f64], d: f64) {
    let n = p.n_vars();
    p.add_soc(m(b.len(), n, a), v(b), v(c), d).unwrap();
}

pub fn lin(p: &mut SocpProblem, g: &[f64], h: f64) {
    p.add_linear(v(g), h).unwrap();
}

pub fn problem(c: &[f64]) -> SocpProblem {
    let mut p = SocpProblem::new(c.len());
    p.set_objective(v(c)).unwrap();
    p
}

/// Hand-derived instances with their optimal values.
pub fn regression_set() -> Vec<(&'static str, SocpProblem, f64)> {
    let s2 = 2f64.sqrt();
    let mut out = Vec::new();

    let mut p = problem(&[1.0]);
    cone(&mut p, &[1.0], &[0.0], &[0.0], 1.0);
    lin(&mut p, &[-1.0], 1.0);
    out.push(("one-dimensional cone", p, -1.0));

    let mut p = problem(&[-1.0, -1.0]);
    cone(&mut p, &[1.0, 0.0, 0.0, 1.0], &[0.0, 0.0], &[0.0, 0.0], s2);
    p.set_all_nonneg();
    out.push(("symmetric disc corner", p, -2.0));

    let mut p = problem(&[1.0, 2.0]);
    lin(&mut p, &[-1.0, -1.0], -2.0);
    lin(&mut p, &[1.0, 0.0], 1.0);
    p.set_all_nonneg();
    out.push(("lp with bound", p, 3.0));

    // distance from (3,4) to the unit disc
    let mut p = problem(&[0.0, 0.0, 1.0]);
    cone(&mut p, &[1.0, 0.0, 0.0, 0.0, 1.0, 0.0], &[-3.0, -4.0], &[0.0, 0.0, 1.0], 0.0);
    cone(&mut p, &[1.0, 0.0, 0.0, 0.0, 1.0, 0.0], &[0.0, 0.0], &[0.0, 0.0, 0.0], 1.0);
    out.push(("point to disc distance", p, 4.0));

    // t ≥ x² written as ‖(2x, t−1)‖ ≤ t+1, x ≥ 2
    let mut p = problem(&[0.0, 1.0]);
    cone(&mut p, &[2.0, 0.0, 0.0, 1.0], &[0.0, -1.0], &[0.0, 1.0], 1.0);
    lin(&mut p, &[-1.0, 0.0], -2.0);
    out.push(("rotated cone square", p, 4.0));

    let mut p = problem(&[-1.0, -1.0]);
    lin(&mut p, &[1.0, 2.0], 4.0);
    lin(&mut p, &[3.0, 1.0], 6.0);
    p.set_all_nonneg();
    out.push(("lp vertex", p, -2.8));

    let mut p = problem(&[1.0, 2.0]);
    cone(&mut p, &[1.0, 0.0, 0.0, 1.0], &[0.0, 0.0], &[0.0, 0.0], 1.0);
    out.push(("linear over disc", p, -(5f64.sqrt())));

    // distance from (1,1,1) to the plane x+y+z = 0
    let mut p = problem(&[0.0, 0.0, 0.0, 1.0]);
    cone(
        &mut p,
        &[1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0],
        &[-1.0, -1.0, -1.0],
        &[0.0, 0.0, 0.0, 1.0],
        0.0,
    );
    lin(&mut p, &[1.0, 1.0, 1.0, 0.0], 0.0);
    lin(&mut p, &[-1.0, -1.0, -1.0, 0.0], 0.0);
    out.push(("projection onto plane", p, 3f64.sqrt()));

    // max t with t² ≤ x y, x + y ≤ 4
    let mut p = problem(&[0.0, 0.0, -1.0]);
    cone(&mut p, &[0.0, 0.0, 2.0, 1.0, -1.0, 0.0], &[0.0, 0.0], &[1.0, 1.0, 0.0], 0.0);
    lin(&mut p, &[1.0, 1.0, 0.0], 4.0);
    out.push(("geometric mean", p, -2.0));

    // min y with ‖x‖ ≤ y − 1
    let mut p = problem(&[0.0, 1.0]);
    cone(&mut p, &[1.0, 0.0], &[0.0], &[0.0, 1.0], -1.0);
    out.push(("negative offset cone", p, 1.0));

    let mut p = problem(&[1.0]);
    lin(&mut p, &[1.0], 1.0);
    lin(&mut p, &[-1.0], -1.0);
    out.push(("equality from two half-spaces", p, 1.0));

    // min ‖(x,y)‖ on x + y = 2
    let mut p = problem(&[0.0, 0.0, 1.0]);
    cone(&mut p, &[1.0, 0.0, 0.0, 0.0, 1.0, 0.0], &[0.0, 0.0], &[0.0, 0.0, 1.0], 0.0);
    lin(&mut p, &[1.0, 1.0, 0.0], 2.0);
    lin(&mut p, &[-1.0, -1.0, 0.0], -2.0);
    out.push(("minimum norm on a line", p, s2));

    // ‖x‖ + ‖x − (2,0)‖
    let mut p = problem(&[0.0, 0.0, 1.0, 1.0]);
    cone(&mut p, &[1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0], &[0.0, 0.0], &[0.0, 0.0, 1.0, 0.0], 0.0);
    cone(&mut p, &[1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0], &[-2.0, 0.0], &[0.0, 0.0, 0.0, 1.0], 0.0);
    out.push(("sum of norms", p, 2.0));

    // max min(x, y) with x + y ≤ −1
    let mut p = problem(&[0.0, 0.0, -1.0]);
    lin(&mut p, &[-1.0, 0.0, 1.0], 0.0);
    lin(&mut p, &[0.0, -1.0, 1.0], 0.0);
    lin(&mut p, &[1.0, 1.0, 0.0], -1.0);
    out.push(("max-min", p, 0.5));

    // ‖(1, x)‖ ≤ 2
    let mut p = problem(&[1.0]);
    cone(&mut p, &[0.0, 1.0], &[1.0, 0.0], &[0.0], 2.0);
    out.push(("constant inside norm", p, -(3f64.sqrt())));

    let mut p = problem(&[-1.0]);
    lin(&mut p, &[1.0], 3.0);
    lin(&mut p, &[1.0], 5.0);
    lin(&mut p, &[2.0], 10.0);
    out.push(("redundant half-spaces", p, -3.0));

    // min t with ‖(x1−1, x2+2)‖ ≤ t, x1 ≤ 0
    let mut p = problem(&[0.0, 0.0, 1.0]);
    cone(&mut p, &[1.0, 0.0, 0.0, 0.0, 1.0, 0.0], &[-1.0, 2.0], &[0.0, 0.0, 1.0], 0.0);
    lin(&mut p, &[1.0, 0.0, 0.0], 0.0);
    out.push(("distance to half-plane", p, 1.0));

    // min t with t at the cone apex
    let mut p = problem(&[0.0, 0.0, 1.0]);
    cone(&mut p, &[1.0, 0.0, 0.0, 0.0, 1.0, 0.0], &[-1.0, 2.0], &[0.0, 0.0, 1.0], 0.0);
    out.push(("cone apex", p, 0.0));

    // (x−3)² + (y+1)² over x + y ≤ 1
    let mut p = problem(&[0.0, 0.0, 1.0]);
    cone(
        &mut p,
        &[2.0, 0.0, 0.0, 0.0, 2.0, 0.0, 0.0, 0.0, 1.0],
        &[-6.0, 2.0, -1.0],
        &[0.0, 0.0, 1.0],
        1.0,
    );
    lin(&mut p, &[1.0, 1.0, 0.0], 1.0);
    out.push(("least squares on half-plane", p, 0.5));

    // max x with ‖0.5 x‖ ≤ 3 − x
    let mut p = problem(&[-1.0]);
    cone(&mut p, &[0.5], &[0.0], &[-1.0], 3.0);
    out.push(("robust bound", p, -2.0));

    // min x + y with x y ≥ 1
    let mut p = problem(&[1.0, 1.0]);
    cone(&mut p, &[0.0, 0.0, 1.0, -1.0], &[2.0, 0.0], &[1.0, 1.0], 0.0);
    p.set_all_nonneg();
    out.push(("hyperbolic constraint", p, 2.0));

    // max 3x + 4y on the disc of radius 2 centred at (1,1)
    let mut p = problem(&[-3.0, -4.0]);
    cone(&mut p, &[1.0, 0.0, 0.0, 1.0], &[-1.0, -1.0], &[0.0, 0.0], 2.0);
    out.push(("shifted disc", p, -17.0));

    out
}


/// Instances without a feasible point.
pub fn infeasible_set() -> Vec<(&'static str, SocpProblem)> {
    let mut out = Vec::new();

    let mut p = problem(&[1.0]);
    lin(&mut p, &[-1.0], -1.0);
    lin(&mut p, &[1.0], 0.0);
    out.push(("x >= 1 and x <= 0", p));

    let mut p = problem(&[0.0, 0.0]);
    cone(&mut p, &[1.0, 0.0, 0.0, 1.0], &[0.0, 0.0], &[0.0, 0.0], 1.0);
    lin(&mut p, &[-1.0, 0.0], -2.0);
    out.push(("unit disc with x >= 2", p));

    let mut p = problem(&[0.0, 0.0]);
    cone(&mut p, &[1.0, 0.0, 0.0, 1.0], &[0.0, 0.0], &[0.0, 0.0], 1.0);
    cone(&mut p, &[1.0, 0.0, 0.0, 1.0], &[-3.0, 0.0], &[0.0, 0.0], 1.0);
    out.push(("disjoint unit discs", p));

    out
}
