//! Downlink communication metrics: power allocations, sensing-beam leakage
//! covariance, the closed-form use-and-then-forget SINR and its Monte Carlo
//! counterpart.

use nalgebra::DVector;
use rand::Rng;

use crate::channels::ChannelSampler;
use crate::error::{Error, Result};
use crate::estimation::{sensing_beamformer, EstimationMatrices, PilotAssignment};
use crate::channels::SpatialCorrelation;
use crate::linalg::{trace_product, CMatrix, C64};
use crate::scenario::{Position, Rect, Scenario, UniformLinearArray};

/// Amplitude coefficients `ζ_{k,m} = sqrt(η_{k,m})` and `ν_{i,m} = sqrt(μ_{i,m})`.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerAllocation {
    n_ues: usize,
    n_regions: usize,
    n_tx: usize,
    zeta: Vec<f64>,
    nu: Vec<f64>,
}

impl PowerAllocation {
    pub fn zeros(n_ues: usize, n_regions: usize, n_tx: usize) -> Self {
        Self {
            n_ues,
            n_regions,
            n_tx,
            zeta: vec![0.0; n_ues * n_tx],
            nu: vec![0.0; n_regions * n_tx],
        }
    }

    pub fn for_scenario(scenario: &Scenario) -> Self {
        Self::zeros(scenario.num_ues(), scenario.num_regions(), scenario.num_tx())
    }

    pub fn n_ues(&self) -> usize {
        self.n_ues
    }

    pub fn n_regions(&self) -> usize {
        self.n_regions
    }

    pub fn n_tx(&self) -> usize {
        self.n_tx
    }

    pub fn zeta(&self, k: usize, t: usize) -> f64 {
        self.zeta[k * self.n_tx + t]
    }

    pub fn nu(&self, i: usize, t: usize) -> f64 {
        self.nu[i * self.n_tx + t]
    }

    pub fn set_zeta(&mut self, k: usize, t: usize, v: f64) {
        self.zeta[k * self.n_tx + t] = v;
    }

    pub fn set_nu(&mut self, i: usize, t: usize, v: f64) {
        self.nu[i * self.n_tx + t] = v;
    }

    /// `η_{k,m}`.
    pub fn eta(&self, k: usize, t: usize) -> f64 {
        self.zeta(k, t).powi(2)
    }

    /// `μ_{i,m}`.
    pub fn mu(&self, i: usize, t: usize) -> f64 {
        self.nu(i, t).powi(2)
    }

    /// Total transmit power of AP `t`.
    pub fn ap_power(&self, t: usize) -> f64 {
        (0..self.n_ues).map(|k| self.eta(k, t)).sum::<f64>()
            + (0..self.n_regions).map(|i| self.mu(i, t)).sum::<f64>()
    }

    /// `b_m = (ζ_{1,m}, …, ζ_{K,m}, ν_{1,m}, …, ν_{S,m})`.
    pub fn ap_vector(&self, t: usize) -> DVector<f64> {
        DVector::from_iterator(
            self.n_ues + self.n_regions,
            (0..self.n_ues)
                .map(|k| self.zeta(k, t))
                .chain((0..self.n_regions).map(|i| self.nu(i, t))),
        )
    }

    /// Stacked vector `b = (b_1, …, b_{|M^tx|})`.
    pub fn stacked(&self) -> DVector<f64> {
        let block = self.n_ues + self.n_regions;
        let mut b = DVector::zeros(block * self.n_tx);
        for t in 0..self.n_tx {
            b.rows_mut(t * block, block).copy_from(&self.ap_vector(t));
        }
        b
    }

    pub fn from_stacked(n_ues: usize, n_regions: usize, n_tx: usize, b: &DVector<f64>) -> Result<Self> {
        let block = n_ues + n_regions;
        if b.len() != block * n_tx {
            return Err(Error::Dimension(format!(
                "stacked allocation has length {}, expected {}",
                b.len(),
                block * n_tx
            )));
        }
        let mut out = Self::zeros(n_ues, n_regions, n_tx);
        for t in 0..n_tx {
            for k in 0..n_ues {
                out.set_zeta(k, t, b[t * block + k]);
            }
            for i in 0..n_regions {
                out.set_nu(i, t, b[t * block + n_ues + i]);
            }
        }
        Ok(out)
    }

    /// Multiplies every amplitude by `c`.
    pub fn scaled(&self, c: f64) -> Self {
        let mut out = self.clone();
        out.zeta.iter_mut().for_each(|z| *z *= c);
        out.nu.iter_mut().for_each(|z| *z *= c);
        out
    }

    /// Sets every sensing amplitude to zero.
    pub fn without_sensing(&self) -> Self {
        let mut out = self.clone();
        out.nu.iter_mut().for_each(|z| *z = 0.0);
        out
    }

    /// Sets every communication amplitude to zero.
    pub fn without_communication(&self) -> Self {
        let mut out = self.clone();
        out.zeta.iter_mut().for_each(|z| *z = 0.0);
        out
    }

    /// Scales down any AP exceeding its budget so that `‖b_m‖² ≤ P_m`.
    pub fn project_budgets(&mut self, scenario: &Scenario) {
        for t in 0..self.n_tx {
            let p = self.ap_power(t);
            let budget = scenario.power_budget(t);
            if p > budget {
                let s = (budget / p).sqrt();
                for k in 0..self.n_ues {
                    self.zeta[k * self.n_tx + t] *= s;
                }
                for i in 0..self.n_regions {
                    self.nu[i * self.n_tx + t] *= s;
                }
            }
        }
    }

    /// Nonnegativity, structural zeros and per-AP budgets (absolute slack `tol`).
    pub fn check(&self, scenario: &Scenario, tol: f64) -> Result<()> {
        for t in 0..self.n_tx {
            for k in 0..self.n_ues {
                let z = self.zeta(k, t);
                if z < 0.0 || !z.is_finite() {
                    return Err(Error::Domain(format!("zeta[{k}][{t}] = {z} is invalid")));
                }
                if z != 0.0 && !scenario.users.served_by[t].contains(&k) {
                    return Err(Error::Domain(format!(
                        "AP {t} does not serve UE {k} but zeta = {z}"
                    )));
                }
            }
            for i in 0..self.n_regions {
                let v = self.nu(i, t);
                if v < 0.0 || !v.is_finite() {
                    return Err(Error::Domain(format!("nu[{i}][{t}] = {v} is invalid")));
                }
                if v != 0.0 && !scenario.targets.beams[t].contains(&i) {
                    return Err(Error::Domain(format!(
                        "AP {t} does not illuminate region {i} but nu = {v}"
                    )));
                }
            }
            let p = self.ap_power(t);
            if p > scenario.power_budget(t) + tol {
                return Err(Error::Domain(format!(
                    "AP {t} uses {p} W of a {} W budget",
                    scenario.power_budget(t)
                )));
            }
        }
        Ok(())
    }
}

/// Long-term distribution of the inspected position of a region: uniform
/// over the rectangle and over the height range.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellDistribution {
    pub region: Rect,
    pub height: [f64; 2],
}

impl CellDistribution {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Position {
        let r = &self.region;
        let u: [f64; 3] = [rng.random(), rng.random(), rng.random()];
        Position::new(
            r.x_min + u[0] * (r.x_max - r.x_min),
            r.y_min + u[1] * (r.y_max - r.y_min),
            self.height[0] + u[2] * (self.height[1] - self.height[0]),
        )
    }

    pub fn for_region(scenario: &Scenario, i: usize) -> Self {
        Self {
            region: scenario.regions[i],
            height: scenario.config.target_height,
        }
    }
}

/// `W = E[w_0 w_0^H]` estimated with `n_mc` positions.
pub fn sensing_beam_covariance<R: Rng + ?Sized>(
    array: &UniformLinearArray,
    ap: &Position,
    cells: &CellDistribution,
    n_mc: usize,
    rng: &mut R,
) -> CMatrix {
    let n = array.elements;
    let mut acc = CMatrix::zeros(n, n);
    for _ in 0..n_mc.max(1) {
        let w = sensing_beamformer(array, ap, &cells.sample(rng));
        acc += &w * w.adjoint();
    }
    acc / C64::new(n_mc.max(1) as f64, 0.0)
}

/// `W_{i,m}` for every (region, transmit AP).
#[derive(Debug, Clone)]
pub struct SensingBeamCovariance {
    n_tx: usize,
    w: Vec<CMatrix>,
}

impl SensingBeamCovariance {
    pub fn build<R: Rng + ?Sized>(scenario: &Scenario, n_mc: usize, rng: &mut R) -> Self {
        let array = scenario.array();
        let mut w = Vec::with_capacity(scenario.num_regions() * scenario.num_tx());
        for i in 0..scenario.num_regions() {
            let dist = CellDistribution::for_region(scenario, i);
            for t in 0..scenario.num_tx() {
                w.push(sensing_beam_covariance(
                    &array,
                    &scenario.tx_position(t),
                    &dist,
                    n_mc,
                    rng,
                ));
            }
        }
        Self {
            n_tx: scenario.num_tx(),
            w,
        }
    }

    pub fn get(&self, i: usize, t: usize) -> &CMatrix {
        &self.w[i * self.n_tx + t]
    }
}

/// Breakdown of one UE's SINR.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SinrTerms {
    /// `|Σ_m sqrt(η tr Φ)|²`.
    pub numerator: f64,
    pub beamforming_uncertainty: f64,
    pub pilot_contamination: f64,
    pub sensing_leakage: f64,
    pub noise: f64,
}

impl SinrTerms {
    pub fn denominator(&self) -> f64 {
        self.beamforming_uncertainty + self.pilot_contamination + self.sensing_leakage + self.noise
    }

    pub fn sinr(&self) -> f64 {
        self.numerator / self.denominator()
    }
}

/// Statistical coefficients entering the closed-form SINR. All tables are
/// computed once per drop and reused by the SINR evaluation and by the
/// second-order-cone form of the SINR constraint.
#[derive(Debug, Clone)]
pub struct SinrCoefficients {
    n_ues: usize,
    n_regions: usize,
    n_tx: usize,
    pub(crate) serving: Vec<Vec<usize>>,
    pub(crate) beams: Vec<Vec<usize>>,
    copilots: Vec<Vec<usize>>,
    /// `sqrt(tr Φ_{k,m})`, `[k * n_tx + t]`.
    useful: Vec<f64>,
    /// `tr(C_{k,m} Φ_{j,m}) / tr Φ_{j,m}`, `[(k * K + j) * n_tx + t]`.
    uncertainty: Vec<f64>,
    /// `overlap(j,k) tr(C_{k,m} Λ_{j,m}) / sqrt(tr Φ_{j,m})`, same layout.
    coherent: Vec<C64>,
    /// `tr(C_{k,m} W_{i,m})`, `[(k * S + i) * n_tx + t]`.
    leakage: Vec<f64>,
    noise: f64,
}

impl SinrCoefficients {
    /// `beams = None` models slots without sensing beams (no leakage term).
    pub fn new(
        scenario: &Scenario,
        correlation: &SpatialCorrelation,
        estimation: &EstimationMatrices,
        pilots: &PilotAssignment,
        beams: Option<&SensingBeamCovariance>,
        noise_power: f64,
    ) -> Result<Self> {
        let (kk, ss, n_tx) = (scenario.num_ues(), scenario.num_regions(), scenario.num_tx());
        let serving = scenario.users.serving.clone();
        for (j, set) in serving.iter().enumerate() {
            for &t in set {
                if !(estimation.tr_phi(j, t) > 0.0) {
                    return Err(Error::DegenerateLink { ue: j, ap: t });
                }
            }
        }
        let mut useful = vec![0.0; kk * n_tx];
        for k in 0..kk {
            for t in 0..n_tx {
                useful[k * n_tx + t] = estimation.tr_phi(k, t).max(0.0).sqrt();
            }
        }
        let mut uncertainty = vec![0.0; kk * kk * n_tx];
        let mut coherent = vec![C64::new(0.0, 0.0); kk * kk * n_tx];
        for k in 0..kk {
            for j in 0..kk {
                let overlap = pilots.overlap(j, k);
                for &t in &serving[j] {
                    let c = correlation.get(k, t);
                    let tr = estimation.tr_phi(j, t);
                    let idx = (k * kk + j) * n_tx + t;
                    uncertainty[idx] = trace_product(c, estimation.phi(j, t)).re / tr;
                    if j != k && overlap != 0.0 {
                        coherent[idx] =
                            trace_product(c, estimation.lambda(j, t)) * (overlap / tr.sqrt());
                    }
                }
            }
        }
        let mut leakage = vec![0.0; kk * ss * n_tx];
        if let Some(w) = beams {
            for k in 0..kk {
                for i in 0..ss {
                    for t in 0..n_tx {
                        leakage[(k * ss + i) * n_tx + t] =
                            trace_product(correlation.get(k, t), w.get(i, t)).re.max(0.0);
                    }
                }
            }
        }
        Ok(Self {
            n_ues: kk,
            n_regions: ss,
            n_tx,
            serving,
            beams: scenario.targets.beams.clone(),
            copilots: (0..kk).map(|k| pilots.copilots(k)).collect(),
            useful,
            uncertainty,
            coherent,
            leakage,
            noise: noise_power,
        })
    }

    pub fn n_ues(&self) -> usize {
        self.n_ues
    }

    pub fn n_tx(&self) -> usize {
        self.n_tx
    }

    pub fn noise(&self) -> f64 {
        self.noise
    }

    pub fn useful(&self, k: usize, t: usize) -> f64 {
        self.useful[k * self.n_tx + t]
    }

    pub fn uncertainty(&self, k: usize, j: usize, t: usize) -> f64 {
        self.uncertainty[(k * self.n_ues + j) * self.n_tx + t]
    }

    pub fn coherent(&self, k: usize, j: usize, t: usize) -> C64 {
        self.coherent[(k * self.n_ues + j) * self.n_tx + t]
    }

    pub fn leakage(&self, k: usize, i: usize, t: usize) -> f64 {
        self.leakage[(k * self.n_regions + i) * self.n_tx + t]
    }

    /// Copilots of `k` other than `k`.
    pub fn interfering_copilots(&self, k: usize) -> impl Iterator<Item = usize> + '_ {
        self.copilots[k].iter().copied().filter(move |&j| j != k)
    }

    pub fn serving(&self, k: usize) -> &[usize] {
        &self.serving[k]
    }

    pub fn beams(&self, t: usize) -> &[usize] {
        &self.beams[t]
    }

    pub fn terms(&self, alloc: &PowerAllocation, k: usize) -> SinrTerms {
        let amp: f64 = self.serving[k]
            .iter()
            .map(|&t| alloc.zeta(k, t) * self.useful(k, t))
            .sum();
        let mut uncertainty = 0.0;
        for j in 0..self.n_ues {
            for &t in &self.serving[j] {
                uncertainty += alloc.eta(j, t) * self.uncertainty(k, j, t);
            }
        }
        let mut contamination = 0.0;
        for j in self.interfering_copilots(k) {
            let s: C64 = self.serving[j]
                .iter()
                .map(|&t| self.coherent(k, j, t) * alloc.zeta(j, t))
                .sum();
            contamination += s.norm_sqr();
        }
        let mut leakage = 0.0;
        for t in 0..self.n_tx {
            for &i in &self.beams[t] {
                leakage += alloc.mu(i, t) * self.leakage(k, i, t);
            }
        }
        SinrTerms {
            numerator: amp * amp,
            beamforming_uncertainty: uncertainty,
            pilot_contamination: contamination,
            sensing_leakage: leakage,
            noise: self.noise,
        }
    }
}

/// Closed-form SINR of every UE.
pub fn closed_form_sinr(alloc: &PowerAllocation, coefficients: &SinrCoefficients) -> Vec<f64> {
    (0..coefficients.n_ues())
        .map(|k| coefficients.terms(alloc, k).sinr())
        .collect()
}

/// `((τ_c − τ_p)/τ_c) B log2(1 + γ)` in bit/s.
pub fn achievable_rate(sinr: f64, tau_c: usize, tau_p: usize, bandwidth: f64) -> f64 {
    let pre_log = (tau_c.saturating_sub(tau_p)) as f64 / tau_c as f64;
    pre_log * bandwidth * (1.0 + sinr.max(0.0)).log2()
}

/// Empirical use-and-then-forget SINR from simulated coherence blocks.
///
/// Each block draws channels and estimates through the pilot phase, builds
/// normalized MRT precoders, points every sensing beam at a fresh position
/// from its region's distribution, and accumulates the effective gains
/// `Σ_m ζ_{j,m} h_{k,m}^H w_{j,m}`. Symbols are unit-variance and mutually
/// independent, so their contribution is taken in expectation.
#[allow(clippy::too_many_arguments)]
pub fn uatf_monte_carlo_oracle<R: Rng + ?Sized>(
    scenario: &Scenario,
    alloc: &PowerAllocation,
    sampler: &ChannelSampler,
    estimation: &EstimationMatrices,
    noise_power: f64,
    include_sensing: bool,
    n_blocks: usize,
    rng: &mut R,
) -> Vec<f64> {
    let kk = scenario.num_ues();
    let n_tx = scenario.num_tx();
    let array = scenario.array();
    let dists: Vec<CellDistribution> = (0..scenario.num_regions())
        .map(|i| CellDistribution::for_region(scenario, i))
        .collect();
    let mut mean_useful = vec![C64::new(0.0, 0.0); kk];
    let mut power_useful = vec![0.0; kk];
    let mut power_interference = vec![0.0; kk];
    let mut power_leakage = vec![0.0; kk];
    let n_blocks = n_blocks.max(1);
    for _ in 0..n_blocks {
        let (h, h_hat) = sampler.sample_channels(rng);
        for j in 0..kk {
            // w_{j,m} for every serving AP of j
            let precoders: Vec<(usize, nalgebra::DVector<C64>)> = scenario.users.serving[j]
                .iter()
                .map(|&t| {
                    let w = &h_hat[j * n_tx + t] / C64::new(estimation.tr_phi(j, t).sqrt(), 0.0);
                    (t, w)
                })
                .collect();
            for k in 0..kk {
                let mut g = C64::new(0.0, 0.0);
                for (t, w) in &precoders {
                    g += h[k * n_tx + t].dotc(w) * alloc.zeta(j, *t);
                }
                if j == k {
                    mean_useful[k] += g;
                    power_useful[k] += g.norm_sqr();
                } else {
                    power_interference[k] += g.norm_sqr();
                }
            }
        }
        if include_sensing {
            for t in 0..n_tx {
                let ap = scenario.tx_position(t);
                for &i in &scenario.targets.beams[t] {
                    let mu = alloc.mu(i, t);
                    if mu == 0.0 {
                        continue;
                    }
                    let w0 = sensing_beamformer(&array, &ap, &dists[i].sample(rng));
                    for k in 0..kk {
                        power_leakage[k] += mu * h[k * n_tx + t].dotc(&w0).norm_sqr();
                    }
                }
            }
        }
    }
    let n = n_blocks as f64;
    (0..kk)
        .map(|k| {
            let m = mean_useful[k] / n;
            let var_useful = (power_useful[k] / n - m.norm_sqr()).max(0.0);
            let denom = var_useful + power_interference[k] / n + power_leakage[k] / n + noise_power;
            m.norm_sqr() / denom
        })
        .collect()
}
