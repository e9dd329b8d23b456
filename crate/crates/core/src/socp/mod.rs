//! Small dense second-order-cone programs.
//!
//! ```text
//! minimize    c^T x
//! subject to  ‖A_j x + b_j‖ ≤ c_j^T x + d_j     (second-order cones)
//!             g_l^T x ≤ h_l                     (half-spaces)
//!             x_i ≥ 0                           (for flagged variables)
//! ```
//!
//! Solved by a primal-dual interior-point method on the homogeneous
//! self-dual embedding, so infeasible and unbounded problems terminate
//! with a certificate instead of stalling.

mod ipm;

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// `‖A x + b‖ ≤ c^T x + d`.
#[derive(Debug, Clone, PartialEq)]
pub struct SocConstraint {
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
    pub c: DVector<f64>,
    pub d: f64,
}

impl SocConstraint {
    /// `(c^T x + d) − ‖A x + b‖`; nonnegative when satisfied.
    pub fn margin(&self, x: &DVector<f64>) -> f64 {
        self.c.dot(x) + self.d - (&self.a * x + &self.b).norm()
    }
}

/// `g^T x ≤ h`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearInequality {
    pub g: DVector<f64>,
    pub h: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SocpProblem {
    n_vars: usize,
    pub objective: DVector<f64>,
    pub soc_constraints: Vec<SocConstraint>,
    pub linear_inequalities: Vec<LinearInequality>,
    pub nonneg_mask: Vec<bool>,
}

impl SocpProblem {
    /// Problem in `n_vars` unconstrained variables with zero objective.
    pub fn new(n_vars: usize) -> Self {
        Self {
            n_vars,
            objective: DVector::zeros(n_vars),
            soc_constraints: Vec::new(),
            linear_inequalities: Vec::new(),
            nonneg_mask: vec![false; n_vars],
        }
    }

    pub fn n_vars(&self) -> usize {
        self.n_vars
    }

    pub fn set_objective(&mut self, c: DVector<f64>) -> Result<()> {
        self.check_len("objective", c.len())?;
        if c.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical("non-finite objective coefficient".into()));
        }
        self.objective = c;
        Ok(())
    }

    pub fn add_soc(&mut self, a: DMatrix<f64>, b: DVector<f64>, c: DVector<f64>, d: f64) -> Result<()> {
        self.check_len("cone A", a.ncols())?;
        self.check_len("cone c", c.len())?;
        if a.nrows() != b.len() {
            return Err(Error::Dimension(format!(
                "cone A has {} rows but b has {} entries",
                a.nrows(),
                b.len()
            )));
        }
        if a.iter().chain(b.iter()).chain(c.iter()).any(|v| !v.is_finite()) || !d.is_finite() {
            return Err(Error::Numerical("non-finite cone data".into()));
        }
        self.soc_constraints.push(SocConstraint { a, b, c, d });
        Ok(())
    }

    pub fn add_linear(&mut self, g: DVector<f64>, h: f64) -> Result<()> {
        self.check_len("half-space g", g.len())?;
        if g.iter().any(|v| !v.is_finite()) || !h.is_finite() {
            return Err(Error::Numerical("non-finite half-space data".into()));
        }
        self.linear_inequalities.push(LinearInequality { g, h });
        Ok(())
    }

    pub fn set_nonneg(&mut self, i: usize) {
        self.nonneg_mask[i] = true;
    }

    pub fn set_all_nonneg(&mut self) {
        self.nonneg_mask.iter_mut().for_each(|f| *f = true);
    }

    fn check_len(&self, what: &str, len: usize) -> Result<()> {
        if len != self.n_vars {
            return Err(Error::Dimension(format!(
                "{what} has length {len}, problem has {} variables",
                self.n_vars
            )));
        }
        Ok(())
    }

    /// Full dimension check, for problems assembled through the public fields.
    pub fn validate(&self) -> Result<()> {
        self.check_len("objective", self.objective.len())?;
        self.check_len("nonneg mask", self.nonneg_mask.len())?;
        for cone in &self.soc_constraints {
            self.check_len("cone A", cone.a.ncols())?;
            self.check_len("cone c", cone.c.len())?;
            if cone.a.nrows() != cone.b.len() {
                return Err(Error::Dimension("cone A and b disagree".into()));
            }
        }
        for lin in &self.linear_inequalities {
            self.check_len("half-space g", lin.g.len())?;
        }
        Ok(())
    }

    pub fn objective_value(&self, x: &DVector<f64>) -> f64 {
        self.objective.dot(x)
    }

    /// Largest constraint violation at `x` (0 when feasible).
    pub fn max_violation(&self, x: &DVector<f64>) -> f64 {
        let mut v: f64 = 0.0;
        for cone in &self.soc_constraints {
            v = v.max(-cone.margin(x));
        }
        for lin in &self.linear_inequalities {
            v = v.max(lin.g.dot(x) - lin.h);
        }
        for (i, &flag) in self.nonneg_mask.iter().enumerate() {
            if flag {
                v = v.max(-x[i]);
            }
        }
        v.max(0.0)
    }

    /// Plain-text dump for cross-checking with other solvers.
    ///
    /// ```text
    /// socp <n_vars>
    /// objective <c_1> … <c_n>
    /// nonneg <i> …
    /// linear <g_1> … <g_n> <= <h>
    /// cone <rows> d <d>
    /// c <c_1> … <c_n>
    /// row <a_1> … <a_n> b <b>       (one line per row of A)
    /// ```
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let join = |v: &DVector<f64>| {
            v.iter().map(|x| format!("{x:e}")).collect::<Vec<_>>().join(" ")
        };
        let _ = writeln!(out, "socp {}", self.n_vars);
        let _ = writeln!(out, "objective {}", join(&self.objective));
        let nn: Vec<String> = self
            .nonneg_mask
            .iter()
            .enumerate()
            .filter(|(_, f)| **f)
            .map(|(i, _)| i.to_string())
            .collect();
        let _ = writeln!(out, "nonneg {}", nn.join(" "));
        for lin in &self.linear_inequalities {
            let _ = writeln!(out, "linear {} <= {:e}", join(&lin.g), lin.h);
        }
        for cone in &self.soc_constraints {
            let _ = writeln!(out, "cone {} d {:e}", cone.a.nrows(), cone.d);
            let _ = writeln!(out, "c {}", join(&cone.c));
            for r in 0..cone.a.nrows() {
                let row = cone.a.row(r).transpose();
                let _ = writeln!(out, "row {} b {:e}", join(&row), cone.b[r]);
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Allowed constraint violation of returned points, and the slack level
    /// separating feasible from infeasible in [`solve_feasibility`].
    pub feas_tol: f64,
    /// Relative primal/dual residual and duality-gap target of the
    /// interior-point iterations.
    pub ipm_tol: f64,
    /// When the iterations stall before reaching `ipm_tol`, the best iterate
    /// is still reported optimal if its KKT residual is below this.
    pub stall_tol: f64,
    pub max_iters: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            feas_tol: 1e-7,
            ipm_tol: 1e-9,
            stall_tol: 1e-6,
            max_iters: 100,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    /// The objective is unbounded below on the feasible set.
    Unbounded,
    MaxIterations,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SocpSolution {
    pub status: SolveStatus,
    pub x: DVector<f64>,
    pub objective_value: f64,
    pub max_violation: f64,
    /// Relative KKT residual (primal, dual, complementarity) of the final
    /// iterate; meaningful for optimal solutions.
    pub kkt_residual: f64,
    pub iterations: usize,
    /// Optimal uniform relaxation, set by [`solve_feasibility`].
    pub slack: Option<f64>,
}

impl SocpSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == SolveStatus::Optimal
    }
}

/// Minimizes the objective.
pub fn solve(problem: &SocpProblem, tol: &Tolerances) -> Result<SocpSolution> {
    problem.validate()?;
    let mut sol = ipm::solve(problem, tol)?;
    sol.max_violation = problem.max_violation(&sol.x);
    sol.objective_value = problem.objective_value(&sol.x);
    Ok(sol)
}

/// Finds a point of the constraint set, ignoring the objective.
///
/// Every cone and half-space is relaxed by one shared slack `s ≥ 0`
/// (`‖Ax+b‖ ≤ c^T x + d + s`, `g^T x ≤ h + s`; sign constraints are kept)
/// and `s` is minimized. The problem is declared feasible when the optimal
/// slack is at most `feas_tol`, in which case the returned point is checked
/// against the original constraints.
pub fn solve_feasibility(problem: &SocpProblem, tol: &Tolerances) -> Result<SocpSolution> {
    problem.validate()?;
    let n = problem.n_vars();
    let mut relaxed = SocpProblem::new(n + 1);
    let mut c = DVector::zeros(n + 1);
    c[n] = 1.0;
    relaxed.objective = c;
    let extend = |v: &DVector<f64>, last: f64| {
        let mut e = DVector::zeros(n + 1);
        e.rows_mut(0, n).copy_from(v);
        e[n] = last;
        e
    };
    for cone in &problem.soc_constraints {
        let mut a = DMatrix::zeros(cone.a.nrows(), n + 1);
        a.columns_mut(0, n).copy_from(&cone.a);
        relaxed.soc_constraints.push(SocConstraint {
            a,
            b: cone.b.clone(),
            c: extend(&cone.c, 1.0),
            d: cone.d,
        });
    }
    for lin in &problem.linear_inequalities {
        relaxed.linear_inequalities.push(LinearInequality {
            g: extend(&lin.g, -1.0),
            h: lin.h,
        });
    }
    relaxed.nonneg_mask[..n].copy_from_slice(&problem.nonneg_mask);
    relaxed.nonneg_mask[n] = true;

    let inner = ipm::solve(&relaxed, tol)?;
    let x = inner.x.rows(0, n).into_owned();
    let slack = inner.x[n].max(0.0);
    let max_violation = problem.max_violation(&x);
    let status = match inner.status {
        SolveStatus::Optimal if slack <= tol.feas_tol && max_violation <= tol.feas_tol => {
            SolveStatus::Optimal
        }
        SolveStatus::Optimal => SolveStatus::Infeasible,
        // Sign constraints alone contradict each other only when a nonneg
        // variable is also forced negative, which the slack cannot relax.
        SolveStatus::Infeasible => SolveStatus::Infeasible,
        other => other,
    };
    Ok(SocpSolution {
        status,
        objective_value: problem.objective_value(&x),
        x,
        max_violation,
        kkt_residual: inner.kkt_residual,
        iterations: inner.iterations,
        slack: Some(slack),
    })
}
