//! Power control: the uniform baseline, the joint QoS-constrained designs
//! (bisection over SCA/SOCP feasibility subproblems) and the orthogonal
//! time-sharing designs.

mod constraints;
mod layout;

pub use constraints::{budget_cones, build_soc_c3, sca_linearize, Affine};
pub use layout::{Var, VariableLayout};

use nalgebra::DVector;

use crate::comm::{achievable_rate, closed_form_sinr, PowerAllocation, SinrCoefficients};
use crate::error::{Error, Result};
use crate::network::Network;
use crate::scenario::Scenario;
use crate::socp::{self, SocpProblem, SolveStatus, Tolerances};

/// Relative slack of the a-posteriori constraint checks.
pub const VERIFY_TOL: f64 = 1e-6;

/// Bisection probes before giving up.
const MAX_PROBES: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Maximize the minimum SINR subject to an effective-SNR floor.
    CommPrioritized,
    /// Maximize the minimum effective SNR subject to an SINR floor.
    SensingPrioritized,
    /// Maximize the minimum SINR over `ζ` alone, sensing beams off.
    CommOnly,
    /// Maximize the minimum effective SNR over `ν` alone.
    SensingOnly,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Settings {
    /// Relative width of the final bisection bracket.
    pub bisection_tol: f64,
    /// Relative objective change that stops the SCA iterations.
    pub sca_tol: f64,
    pub sca_max_iters: usize,
    pub solver: Tolerances,
}

impl Default for Settings {
    fn default() -> Self {
        Self {
            bisection_tol: 1e-3,
            sca_tol: 1e-4,
            sca_max_iters: 30,
            solver: Tolerances::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QosProblemSpec {
    pub mode: Mode,
    /// SINR floor (linear), sensing-prioritized mode only.
    pub gamma0: Option<f64>,
    /// Effective-SNR floor (linear), communication-prioritized mode only.
    pub gamma_bar0: Option<f64>,
    /// Sensing time fraction `T`, orthogonal modes only.
    pub time_share: Option<f64>,
    pub settings: Settings,
}

impl QosProblemSpec {
    pub fn comm_prioritized(gamma_bar0: f64) -> Self {
        Self {
            mode: Mode::CommPrioritized,
            gamma0: None,
            gamma_bar0: Some(gamma_bar0),
            time_share: None,
            settings: Settings::default(),
        }
    }

    pub fn sensing_prioritized(gamma0: f64) -> Self {
        Self {
            mode: Mode::SensingPrioritized,
            gamma0: Some(gamma0),
            gamma_bar0: None,
            time_share: None,
            settings: Settings::default(),
        }
    }

    pub fn comm_only(time_share: f64) -> Self {
        Self {
            mode: Mode::CommOnly,
            gamma0: None,
            gamma_bar0: None,
            time_share: Some(time_share),
            settings: Settings::default(),
        }
    }

    pub fn sensing_only(time_share: f64) -> Self {
        Self {
            mode: Mode::SensingOnly,
            time_share: Some(time_share),
            ..Self::comm_only(time_share)
        }
    }

    pub fn with_settings(mut self, settings: Settings) -> Self {
        self.settings = settings;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let (g, gb, t) = (self.gamma0.is_some(), self.gamma_bar0.is_some(), self.time_share.is_some());
        let expected = match self.mode {
            Mode::CommPrioritized => (false, true, false),
            Mode::SensingPrioritized => (true, false, false),
            Mode::CommOnly | Mode::SensingOnly => (false, false, true),
        };
        if (g, gb, t) != expected {
            return Err(Error::Config(format!(
                "{:?} takes exactly its own thresholds (gamma0 {g}, gamma_bar0 {gb}, T {t})",
                self.mode
            )));
        }
        for v in [self.gamma0, self.gamma_bar0].into_iter().flatten() {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::Domain(format!("threshold {v} must be finite and nonnegative")));
            }
        }
        if let Some(t) = self.time_share {
            if !(0.0..=1.0).contains(&t) {
                return Err(Error::Domain(format!("time share {t} outside [0, 1]")));
            }
        }
        let s = &self.settings;
        if !(s.bisection_tol > 0.0 && s.sca_tol > 0.0 && s.sca_max_iters > 0) {
            return Err(Error::Config("tolerances and iteration caps must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum OptimizationStatus {
    Optimal,
    InfeasibleAtThreshold,
    NotConverged,
}

impl OptimizationStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Optimal => "optimal",
            Self::InfeasibleAtThreshold => "infeasible_at_threshold",
            Self::NotConverged => "not_converged",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizationResult {
    pub allocation: PowerAllocation,
    /// Minimum SINR or minimum effective SNR of `allocation`, by mode.
    pub objective: f64,
    pub status: OptimizationStatus,
    /// Verified objective after every accepted SCA iterate or bisection probe.
    pub trace: Vec<f64>,
    /// Smallest level the search found unreachable (upper end of the final
    /// bisection bracket).
    pub unreachable_level: f64,
}

/// Uniform power control: half of each AP budget to its served UEs and half
/// to its illuminated regions, each half split equally. An AP with one of
/// the two sets empty gives the whole budget to the other.
pub fn upc(scenario: &Scenario) -> PowerAllocation {
    upc_restricted(scenario, true, true)
}

fn upc_restricted(scenario: &Scenario, comm: bool, sensing: bool) -> PowerAllocation {
    let mut alloc = PowerAllocation::for_scenario(scenario);
    for t in 0..scenario.num_tx() {
        let ues: &[usize] = if comm { &scenario.users.served_by[t] } else { &[] };
        let regions: &[usize] = if sensing { &scenario.targets.beams[t] } else { &[] };
        let p = scenario.power_budget(t);
        let (pc, ps) = match (ues.is_empty(), regions.is_empty()) {
            (false, false) => (p / 2.0, p / 2.0),
            (false, true) => (p, 0.0),
            (true, false) => (0.0, p),
            (true, true) => (0.0, 0.0),
        };
        for &k in ues {
            alloc.set_zeta(k, t, (pc / ues.len() as f64).sqrt());
        }
        for &i in regions {
            alloc.set_nu(i, t, (ps / regions.len() as f64).sqrt());
        }
    }
    alloc
}

/// Constraint set and objective of one optimization, with the a-posteriori
/// verification against the exact (nonconvex) constraints.
struct Design<'a> {
    net: &'a Network,
    coefficients: &'a SinrCoefficients,
    layout: VariableLayout,
    settings: Settings,
}

#[derive(Debug)]
struct ScaRun {
    /// Best verified point; `None` when no point meets the SINR floor.
    best: Option<(PowerAllocation, f64)>,
    reached: bool,
}

impl<'a> Design<'a> {
    fn min_sinr(&self, alloc: &PowerAllocation) -> f64 {
        closed_form_sinr(alloc, self.coefficients)
            .into_iter()
            .fold(f64::INFINITY, f64::min)
    }

    fn min_snr(&self, alloc: &PowerAllocation) -> f64 {
        self.net
            .sensing_snr(alloc)
            .into_iter()
            .fold(f64::INFINITY, f64::min)
    }

    /// Budgets exactly, SINR and effective-SNR floors within [`VERIFY_TOL`].
    fn verify(&self, alloc: &PowerAllocation, sinr_floor: f64, snr_floor: f64) -> bool {
        alloc.check(&self.net.scenario, 1e-9).is_ok()
            && (sinr_floor <= 0.0 || self.min_sinr(alloc) >= sinr_floor * (1.0 - VERIFY_TOL))
            && (snr_floor <= 0.0 || self.min_snr(alloc) >= snr_floor * (1.0 - VERIFY_TOL))
    }

    /// Solver point to allocation: clip, then scale any AP back onto its budget.
    fn clean(&self, x: &DVector<f64>) -> PowerAllocation {
        let mut alloc = self.layout.allocation(&x.rows(0, self.layout.len()).into_owned());
        alloc.project_budgets(&self.net.scenario);
        alloc
    }

    fn base_problem(&self, extra: usize, sinr_floor: f64) -> Result<SocpProblem> {
        let n = self.layout.len() + extra;
        let mut p = SocpProblem::new(n);
        for cone in budget_cones(&self.net.scenario, &self.layout, extra) {
            p.add_soc(cone.a, cone.b, cone.c, cone.d)?;
        }
        if sinr_floor > 0.0 {
            for k in 0..self.coefficients.n_ues() {
                let cone = build_soc_c3(self.coefficients, &self.layout, k, sinr_floor, extra)?;
                p.add_soc(cone.a, cone.b, cone.c, cone.d)?;
            }
        }
        for v in 0..self.layout.len() {
            p.set_nonneg(v);
        }
        Ok(p)
    }

    /// Convex probe without sensing floor: is `min γ_k ≥ level` reachable?
    fn comm_probe(&self, level: f64) -> Result<Option<PowerAllocation>> {
        let p = self.base_problem(0, level)?;
        let sol = socp::solve_feasibility(&p, &self.settings.solver)?;
        if sol.status != SolveStatus::Optimal {
            return Ok(None);
        }
        let alloc = self.clean(&sol.x);
        Ok(self.verify(&alloc, level, 0.0).then_some(alloc))
    }

    /// SCA on `max min_i γ̄_i` under the budgets and the SINR floor, started
    /// at `start`. Each iteration maximizes the smallest linearized effective
    /// SNR; the true objective of the iterates is non-decreasing. Stops early
    /// once the verified objective reaches `target`.
    fn sca(&self, start: &PowerAllocation, sinr_floor: f64, target: f64, trace: &mut Vec<f64>) -> Result<ScaRun> {
        let n = self.layout.len();
        let quadratic = &self.net.sensing;
        let norm = quadratic.normalization();
        let mut prev = self.layout.restrict(start);
        let mut best: Option<(PowerAllocation, f64)> = None;
        if self.verify(&prev, sinr_floor, 0.0) {
            let obj = self.min_snr(&prev);
            trace.push(obj);
            if obj >= target {
                return Ok(ScaRun {
                    best: Some((prev, obj)),
                    reached: true,
                });
            }
            best = Some((prev.clone(), obj));
        }
        let mut last = best.as_ref().map(|b| b.1);
        for _ in 0..self.settings.sca_max_iters {
            let mut p = self.base_problem(1, sinr_floor)?;
            let mut obj = DVector::zeros(n + 1);
            obj[n] = -1.0;
            p.set_objective(obj)?;
            for i in 0..quadratic.n_regions() {
                // t ≤ (g^T x + c) / norm
                let lin = sca_linearize(quadratic, &self.layout, i, &prev);
                let mut row = DVector::zeros(n + 1);
                row.rows_mut(0, n).copy_from(&(-&lin.g / norm));
                row[n] = 1.0;
                p.add_linear(row, lin.c / norm)?;
            }
            let sol = socp::solve(&p, &self.settings.solver)?;
            match sol.status {
                SolveStatus::Optimal => {}
                SolveStatus::Infeasible if best.is_none() => {
                    return Ok(ScaRun {
                        best: None,
                        reached: false,
                    })
                }
                _ => break,
            }
            let alloc = self.clean(&sol.x);
            if !self.verify(&alloc, sinr_floor, 0.0) {
                break;
            }
            let value = self.min_snr(&alloc);
            if best.as_ref().is_none_or(|b| value >= b.1) {
                best = Some((alloc.clone(), value));
            }
            let current = best.as_ref().map(|b| b.1).unwrap_or(value);
            trace.push(current);
            if current >= target {
                return Ok(ScaRun {
                    best,
                    reached: true,
                });
            }
            if let Some(l) = last {
                if (current - l).abs() <= self.settings.sca_tol * l.abs().max(f64::MIN_POSITIVE) {
                    break;
                }
            }
            last = Some(current);
            prev = alloc;
        }
        Ok(ScaRun {
            best,
            reached: false,
        })
    }
}

/// Geometric bisection between a verified level `lo` and an unreachable
/// `hi`; `probe` returns the verified point and objective when the level is
/// reachable. Failed probes may still return an improved point.
fn bisect(
    mut lo: f64,
    mut hi: f64,
    tol: f64,
    mut best: (PowerAllocation, f64),
    trace: &mut Vec<f64>,
    mut probe: impl FnMut(f64, &PowerAllocation, &mut Vec<f64>) -> Result<(bool, Option<(PowerAllocation, f64)>)>,
) -> Result<OptimizationResult> {
    let floor = hi * 1e-9;
    let mut probes = 0;
    while hi > lo.max(floor) * (1.0 + tol) {
        if probes == MAX_PROBES {
            return Ok(OptimizationResult {
                objective: best.1,
                allocation: best.0,
                status: OptimizationStatus::NotConverged,
                trace: std::mem::take(trace),
                unreachable_level: hi,
            });
        }
        probes += 1;
        let level = (lo.max(floor) * hi).sqrt();
        let (ok, point) = probe(level, &best.0, trace)?;
        if let Some((alloc, value)) = point {
            if value > best.1 {
                best = (alloc, value);
                lo = lo.max(value);
            }
        }
        if ok {
            lo = lo.max(level);
        } else {
            hi = level;
        }
        if lo >= hi {
            // a failed probe found a point above its own level
            hi = lo * (1.0 + tol);
        }
    }
    Ok(OptimizationResult {
        objective: best.1,
        allocation: best.0,
        status: OptimizationStatus::Optimal,
        trace: std::mem::take(trace),
        unreachable_level: hi,
    })
}

fn infeasible(alloc: PowerAllocation, objective: f64, trace: Vec<f64>) -> OptimizationResult {
    OptimizationResult {
        allocation: alloc,
        objective,
        status: OptimizationStatus::InfeasibleAtThreshold,
        trace,
        unreachable_level: 0.0,
    }
}

/// Upper bound of `min_k γ_k` over the budgets: full power on the useful
/// term, noise-only denominator.
fn sinr_upper_bound(net: &Network, coefficients: &SinrCoefficients) -> f64 {
    (0..coefficients.n_ues())
        .map(|k| {
            let amp: f64 = coefficients
                .serving(k)
                .iter()
                .map(|&t| net.scenario.power_budget(t).sqrt() * coefficients.useful(k, t))
                .sum();
            amp * amp / coefficients.noise()
        })
        .fold(f64::INFINITY, f64::min)
}

fn snr_upper_bound(net: &Network) -> f64 {
    let budgets: Vec<f64> = (0..net.scenario.num_tx()).map(|t| net.scenario.power_budget(t)).collect();
    (0..net.scenario.num_regions())
        .map(|i| net.sensing.snr_upper_bound(i, &budgets))
        .fold(f64::INFINITY, f64::min)
}

/// Runs the design selected by `spec.mode`.
pub fn optimize(net: &Network, spec: &QosProblemSpec) -> Result<OptimizationResult> {
    spec.validate()?;
    match spec.mode {
        Mode::CommPrioritized | Mode::SensingPrioritized => jopc(net, spec),
        Mode::CommOnly => {
            let coefficients = net.sinr_without_sensing()?;
            max_min_sinr(net, &coefficients, VariableLayout::new(&net.scenario, true, false), 0.0, spec.settings)
        }
        Mode::SensingOnly => max_min_snr(net, VariableLayout::new(&net.scenario, false, true), 0.0, spec.settings),
    }
}

/// Joint design in either prioritization.
pub fn jopc(net: &Network, spec: &QosProblemSpec) -> Result<OptimizationResult> {
    spec.validate()?;
    let layout = VariableLayout::new(&net.scenario, true, true);
    match spec.mode {
        Mode::CommPrioritized => max_min_sinr(net, &net.sinr, layout, spec.gamma_bar0.unwrap_or(0.0), spec.settings),
        Mode::SensingPrioritized => max_min_snr(net, layout, spec.gamma0.unwrap_or(0.0), spec.settings),
        other => Err(Error::Config(format!("{other:?} is not a joint design"))),
    }
}

/// `max min_k γ_k` subject to the budgets and `min_i γ̄_i ≥ snr_floor`.
fn max_min_sinr(
    net: &Network,
    coefficients: &SinrCoefficients,
    layout: VariableLayout,
    snr_floor: f64,
    settings: Settings,
) -> Result<OptimizationResult> {
    let design = Design {
        net,
        coefficients,
        layout,
        settings,
    };
    let comm = design.layout.vars().iter().any(|v| matches!(v, Var::Zeta { .. }));
    let sensing = design.layout.vars().iter().any(|v| matches!(v, Var::Nu { .. }));
    let start = upc_restricted(&net.scenario, comm, sensing);
    let mut trace = Vec::new();

    let (start, start_value) = if design.verify(&start, 0.0, snr_floor) {
        let v = design.min_sinr(&start);
        (start, v)
    } else {
        // find any point meeting the sensing floor
        let run = design.sca(&start, 0.0, snr_floor, &mut Vec::new())?;
        match run.best {
            Some((alloc, _)) if run.reached => {
                let v = design.min_sinr(&alloc);
                (alloc, v)
            }
            other => {
                let alloc = other.map(|b| b.0).unwrap_or(start);
                let v = design.min_sinr(&alloc);
                return Ok(infeasible(alloc, v, trace));
            }
        }
    };
    trace.push(start_value);
    let hi = sinr_upper_bound(net, coefficients);
    bisect(
        start_value,
        hi,
        settings.bisection_tol,
        (start, start_value),
        &mut trace,
        |level, best, trace| {
            let point = if snr_floor > 0.0 {
                let run = design.sca(best, level, snr_floor, &mut Vec::new())?;
                if run.reached { run.best } else { None }
            } else {
                design.comm_probe(level)?.map(|a| {
                    let v = design.min_snr(&a);
                    (a, v)
                })
            };
            let point = point.map(|(a, _)| {
                let v = design.min_sinr(&a);
                (a, v)
            });
            if let Some((_, v)) = &point {
                trace.push(*v);
            }
            Ok((point.is_some(), point))
        },
    )
}

/// `max min_i γ̄_i` subject to the budgets and `min_k γ_k ≥ sinr_floor`.
fn max_min_snr(net: &Network, layout: VariableLayout, sinr_floor: f64, settings: Settings) -> Result<OptimizationResult> {
    let design = Design {
        net,
        coefficients: &net.sinr,
        layout,
        settings,
    };
    let comm = design.layout.vars().iter().any(|v| matches!(v, Var::Zeta { .. }));
    let sensing = design.layout.vars().iter().any(|v| matches!(v, Var::Nu { .. }));
    let start = upc_restricted(&net.scenario, comm, sensing);
    let hi = snr_upper_bound(net);
    let mut trace = Vec::new();
    // first probe at the upper bound: a full SCA run
    let run = design.sca(&start, sinr_floor, f64::INFINITY, &mut trace)?;
    let Some(best) = run.best else {
        let v = design.min_snr(&start);
        return Ok(infeasible(start, v, trace));
    };
    bisect(best.1, hi, settings.bisection_tol, best, &mut trace, |level, best, trace| {
        let run = design.sca(best, sinr_floor, level, trace)?;
        Ok((run.reached, run.best))
    })
}

/// Orthogonal time sharing: a fraction `T` of the block senses, the rest
/// communicates, each with the whole budget.
#[derive(Debug, Clone, PartialEq)]
pub struct SopcResult {
    pub time_share: f64,
    pub comm: OptimizationResult,
    pub sensing: OptimizationResult,
}

impl SopcResult {
    /// Downlink rates scaled by the communication share `1 − T`.
    pub fn rates(&self, net: &Network) -> Result<Vec<f64>> {
        let cfg = &net.scenario.config;
        let coefficients = net.sinr_without_sensing()?;
        Ok(closed_form_sinr(&self.comm.allocation, &coefficients)
            .into_iter()
            .map(|g| (1.0 - self.time_share) * achievable_rate(g, cfg.tau_c, cfg.tau_p, cfg.bandwidth))
            .collect())
    }

    /// Sensing rates `T B log2(1 + γ̄_i)`, i.e. with `τ_s = T τ_c`.
    pub fn sensing_rates(&self, net: &Network) -> Vec<f64> {
        let b = net.scenario.config.bandwidth;
        net.sensing_snr(&self.sensing.allocation)
            .into_iter()
            .map(|g| self.time_share * b * (1.0 + g.max(0.0)).log2())
            .collect()
    }
}

/// Independent communication-only and sensing-only designs for time share `T`.
pub fn sopc(net: &Network, time_share: f64, settings: &Settings) -> Result<SopcResult> {
    if !(0.0..=1.0).contains(&time_share) {
        return Err(Error::Domain(format!("time share {time_share} outside [0, 1]")));
    }
    let idle = |trace: Vec<f64>| OptimizationResult {
        allocation: net.empty_allocation(),
        objective: 0.0,
        status: OptimizationStatus::Optimal,
        trace,
        unreachable_level: 0.0,
    };
    let comm = if time_share < 1.0 {
        optimize(net, &QosProblemSpec::comm_only(time_share).with_settings(*settings))?
    } else {
        idle(Vec::new())
    };
    let sensing = if time_share > 0.0 {
        optimize(net, &QosProblemSpec::sensing_only(time_share).with_settings(*settings))?
    } else {
        idle(Vec::new())
    };
    Ok(SopcResult {
        time_share,
        comm,
        sensing,
    })
}
