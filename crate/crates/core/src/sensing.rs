//! Multi-static target detection: observation synthesis, the subspace GLRT,
//! receive sensing SNR and the effective-SNR quadratic form used for power
//! control.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use statrs::function::gamma::gamma_ur;

use crate::channels::{ChannelRealization, ChannelSampler, TargetGeometry};
use crate::comm::PowerAllocation;
use crate::error::{Error, Result};
use crate::estimation::{mrt_precoder, sensing_beamformer, EstimationMatrices};
use crate::linalg::{cn_scalar, cn_vector, CMatrix, CVector, C64};
use crate::scenario::Scenario;

/// Transmitted blocks `S_t = [s_t[1], …, s_t[τ_s]]` of every transmit AP.
#[derive(Debug, Clone)]
pub struct TransmitSignals {
    /// `N × τ_s` per tx AP.
    pub blocks: Vec<CMatrix>,
}

impl TransmitSignals {
    /// MRT data streams plus one sensing beam per illuminated region, with
    /// independent `CN(0,1)` symbols (sensing symbols independent across APs).
    pub fn generate<R: Rng + ?Sized>(
        scenario: &Scenario,
        alloc: &PowerAllocation,
        realization: &ChannelRealization,
        estimation: &EstimationMatrices,
        tau_s: usize,
        rng: &mut R,
    ) -> Result<Self> {
        let n = scenario.antennas();
        let n_tx = scenario.num_tx();
        let array = scenario.array();
        let data: Vec<Vec<C64>> = (0..scenario.num_ues())
            .map(|_| (0..tau_s).map(|_| cn_scalar(rng)).collect())
            .collect();
        let mut blocks = Vec::with_capacity(n_tx);
        for t in 0..n_tx {
            let mut s = CMatrix::zeros(n, tau_s);
            for &k in &scenario.users.served_by[t] {
                let zeta = alloc.zeta(k, t);
                if zeta == 0.0 {
                    continue;
                }
                let w = mrt_precoder(realization.h_hat(k, t), estimation.tr_phi(k, t))?
                    * C64::new(zeta, 0.0);
                for (col, x) in data[k].iter().enumerate() {
                    s.column_mut(col).axpy(*x, &w, C64::new(1.0, 0.0));
                }
            }
            let ap = scenario.tx_position(t);
            for &i in &scenario.targets.beams[t] {
                let nu = alloc.nu(i, t);
                if nu == 0.0 {
                    continue;
                }
                let w0 = sensing_beamformer(&array, &ap, &scenario.radar_cells[i])
                    * C64::new(nu, 0.0);
                for col in 0..tau_s {
                    let x = cn_scalar(rng);
                    s.column_mut(col).axpy(x, &w0, C64::new(1.0, 0.0));
                }
            }
            blocks.push(s);
        }
        Ok(Self { blocks })
    }

    pub fn tau_s(&self) -> usize {
        self.blocks.first().map_or(0, |b| b.ncols())
    }
}

/// `D̈_{i,r}` for every receive AP `r ∈ M_{p_i}^rx`, in that order.
///
/// Column `t` stacks `sqrt(β_{i,r,t}) a_r a_t^H s_t[τ]` over the `τ_s`
/// samples; every transmit AP contributes.
pub fn target_channel_stack(
    scenario: &Scenario,
    geometry: &TargetGeometry,
    signals: &TransmitSignals,
    region: usize,
) -> Vec<CMatrix> {
    let n = scenario.antennas();
    let tau_s = signals.tau_s();
    let n_tx = scenario.num_tx();
    scenario.targets.rx[region]
        .iter()
        .map(|&r| {
            let a_r = geometry.rx_steering(region, r);
            let mut d = CMatrix::zeros(n * tau_s, n_tx);
            for t in 0..n_tx {
                let amp = geometry.beta(region, r, t).sqrt();
                let proj = geometry.tx_steering(region, t).adjoint() * &signals.blocks[t];
                for tau in 0..tau_s {
                    let g = proj[(0, tau)] * amp;
                    for a in 0..n {
                        d[(tau * n + a, t)] = a_r[a] * g;
                    }
                }
            }
            d
        })
        .collect()
}

/// `ÿ = b(p) D̈ α + z̈`, `z̈ ~ CN(0, σ² I)`.
pub fn synthesize_observation<R: Rng + ?Sized>(
    stack: &CMatrix,
    alpha: &CVector,
    present: bool,
    noise_power: f64,
    rng: &mut R,
) -> CVector {
    let mut y = cn_vector(rng, stack.nrows()) * C64::new(noise_power.sqrt(), 0.0);
    if present {
        y += stack * alpha;
    }
    y
}

/// Whitened subspace bases of the receive APs of one region.
#[derive(Debug, Clone)]
pub struct GlrtWorkspace {
    noise_power: f64,
    /// Orthonormal basis of `span(D̈_{i,r})`, one per receive AP.
    pub bases: Vec<CMatrix>,
    /// `Ξ = U^H D̈ / σ`.
    pub xi: Vec<CMatrix>,
}

/// Singular values below this fraction of the largest count as zero.
pub const RANK_TOLERANCE: f64 = 1e-10;

impl GlrtWorkspace {
    /// `Ψ = σ² I`, so the whitening is a scalar and `U` spans `D̈`.
    pub fn new(stacks: &[CMatrix], noise_power: f64) -> Result<Self> {
        if !(noise_power > 0.0) {
            return Err(Error::Domain("noise power must be positive".into()));
        }
        let scale = C64::new(1.0 / noise_power.sqrt(), 0.0);
        let mut bases = Vec::with_capacity(stacks.len());
        let mut xi = Vec::with_capacity(stacks.len());
        for d in stacks {
            let dw = d * scale;
            let basis = column_space(&dw)?;
            xi.push(basis.adjoint() * &dw);
            bases.push(basis);
        }
        Ok(Self {
            noise_power,
            bases,
            xi,
        })
    }

    /// `r_{i,r}` per receive AP.
    pub fn ranks(&self) -> Vec<usize> {
        self.bases.iter().map(|u| u.ncols()).collect()
    }

    /// `r_i`.
    pub fn total_rank(&self) -> usize {
        self.ranks().iter().sum()
    }

    /// `T = Σ_r ‖U_r^H ÿ_r‖² / σ²`.
    pub fn statistic(&self, observations: &[CVector]) -> Result<f64> {
        if observations.len() != self.bases.len() {
            return Err(Error::Dimension(format!(
                "{} observations for {} receive APs",
                observations.len(),
                self.bases.len()
            )));
        }
        let mut t = 0.0;
        for (u, y) in self.bases.iter().zip(observations) {
            if u.nrows() != y.len() {
                return Err(Error::Dimension("observation length mismatch".into()));
            }
            t += (u.adjoint() * y).norm_squared();
        }
        Ok(t / self.noise_power)
    }

    /// `(1/r_i) Σ_r tr(Ξ R Ξ^H)`.
    pub fn receive_snr(&self, rcs_covariance: &DMatrix<f64>) -> Result<f64> {
        let r = self.total_rank();
        if r == 0 {
            return Err(Error::Domain(
                "receive SNR undefined: no transmit energy reaches the region".into(),
            ));
        }
        let rc = rcs_covariance.map(|x| C64::new(x, 0.0));
        let total: f64 = self
            .xi
            .iter()
            .map(|xi| crate::linalg::trace_re(&(xi * &rc * xi.adjoint())))
            .sum();
        Ok(total / r as f64)
    }
}

/// Orthonormal basis for the column space (thin SVD with relative rank cut).
fn column_space(m: &CMatrix) -> Result<CMatrix> {
    if m.ncols() == 0 || m.nrows() == 0 {
        return Ok(CMatrix::zeros(m.nrows(), 0));
    }
    let svd = m.clone().svd(true, false);
    let u = svd
        .u
        .ok_or_else(|| Error::Numerical("SVD did not return left singular vectors".into()))?;
    let sv = &svd.singular_values;
    if sv.iter().any(|s| !s.is_finite()) {
        return Err(Error::Numerical("non-finite singular value".into()));
    }
    let max = sv.iter().cloned().fold(0.0, f64::max);
    if max == 0.0 {
        return Ok(CMatrix::zeros(m.nrows(), 0));
    }
    let keep: Vec<usize> = (0..sv.len()).filter(|&j| sv[j] > RANK_TOLERANCE * max).collect();
    Ok(CMatrix::from_fn(m.nrows(), keep.len(), |a, c| u[(a, keep[c])]))
}

/// Threshold `δ` with `P(Gamma(r,1) > δ) = p_fa`.
pub fn glrt_threshold(rank: usize, p_fa: f64) -> Result<f64> {
    if !(p_fa > 0.0) || p_fa.is_nan() {
        return Err(Error::Domain(format!("false-alarm probability {p_fa} must be in (0, 1]")));
    }
    if p_fa >= 1.0 || rank == 0 {
        return Ok(0.0);
    }
    let a = rank as f64;
    let tail = |x: f64| gamma_ur(a, x);
    let mut hi = a.max(1.0);
    while tail(hi) > p_fa {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if tail(mid) > p_fa {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-13 * hi {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Builds the GLRT workspace of `region` for one channel/symbol realization.
pub fn region_workspace<R: Rng + ?Sized>(
    scenario: &Scenario,
    geometry: &TargetGeometry,
    estimation: &EstimationMatrices,
    alloc: &PowerAllocation,
    realization: &ChannelRealization,
    region: usize,
    tau_s: usize,
    noise_power: f64,
    rng: &mut R,
) -> Result<(Vec<CMatrix>, GlrtWorkspace)> {
    let signals = TransmitSignals::generate(scenario, alloc, realization, estimation, tau_s, rng)?;
    let stacks = target_channel_stack(scenario, geometry, &signals, region);
    let ws = GlrtWorkspace::new(&stacks, noise_power)?;
    Ok((stacks, ws))
}

/// Empirical detection outcome of [`simulate_detection`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectionRates {
    pub detection: f64,
    pub false_alarm: f64,
    pub mean_receive_snr: f64,
}

/// Monte Carlo detection and false-alarm probabilities of the GLRT for
/// `region` at false-alarm target `p_fa`. Each trial draws fresh channels,
/// symbols, RCS and noise.
#[allow(clippy::too_many_arguments)]
pub fn simulate_detection<R: Rng + ?Sized>(
    scenario: &Scenario,
    geometry: &TargetGeometry,
    estimation: &EstimationMatrices,
    sampler: &ChannelSampler,
    alloc: &PowerAllocation,
    region: usize,
    p_fa: f64,
    trials: usize,
    rng: &mut R,
) -> Result<DetectionRates> {
    let tau_s = scenario.config.tau_s;
    let noise = scenario.config.noise_power();
    let n_rx = scenario.num_rx();
    let mut detections = 0usize;
    let mut false_alarms = 0usize;
    let mut snr_sum = 0.0;
    let mut snr_count = 0usize;
    let rcs = geometry.rcs_covariance(region, 0);
    for _ in 0..trials {
        let present = vec![true; scenario.num_regions()];
        let real = sampler.sample(&present, rng);
        let (stacks, ws) = region_workspace(
            scenario, geometry, estimation, alloc, &real, region, tau_s, noise, rng,
        )?;
        let delta = glrt_threshold(ws.total_rank(), p_fa)?;
        if ws.total_rank() > 0 {
            snr_sum += ws.receive_snr(rcs)?;
            snr_count += 1;
        }
        let mut h1 = Vec::with_capacity(stacks.len());
        let mut h0 = Vec::with_capacity(stacks.len());
        for (d, &r) in stacks.iter().zip(&scenario.targets.rx[region]) {
            let alpha = &real.alpha[region * n_rx + r];
            h1.push(synthesize_observation(d, alpha, true, noise, rng));
            h0.push(synthesize_observation(d, alpha, false, noise, rng));
        }
        if ws.statistic(&h1)? > delta {
            detections += 1;
        }
        if ws.statistic(&h0)? > delta {
            false_alarms += 1;
        }
    }
    let n = trials.max(1) as f64;
    Ok(DetectionRates {
        detection: detections as f64 / n,
        false_alarm: false_alarms as f64 / n,
        mean_receive_snr: if snr_count > 0 {
            snr_sum / snr_count as f64
        } else {
            0.0
        },
    })
}

/// Effective-SNR matrices `F̄_{i,t}` of every region and transmit AP.
///
/// `F̄_{i,t}` is `(K+S) × (K+S)` in the ordering of `b_t`. Precoders of
/// different APs are independent and zero-mean, and sensing symbols are
/// independent across APs, so the expected echo energy separates per
/// transmit AP and every cross term inside an AP averages out, leaving
///
/// ```text
/// F̄_{i,t}[k,k]   = τ_s N Σ_r β_{i,r,t} R_i[t,t] a_t^H Φ_{k,t} a_t / tr Φ_{k,t}   (k ∈ K_t)
/// F̄_{i,t}[K+j,K+j] = τ_s N Σ_r β_{i,r,t} R_i[t,t] |a_t^H w_{0,t}(p_j)|²         (j ∈ S_t)
/// ```
///
/// with `a_t` the steering of AP `t` toward `p_i` and `r ∈ M_{p_i}^rx`.
#[derive(Debug, Clone)]
pub struct SensingQuadratic {
    n_ues: usize,
    n_regions: usize,
    n_tx: usize,
    antennas: usize,
    tau_s: usize,
    noise_power: f64,
    f: Vec<DMatrix<f64>>,
}

impl SensingQuadratic {
    pub fn build(
        scenario: &Scenario,
        geometry: &TargetGeometry,
        estimation: &EstimationMatrices,
        noise_power: f64,
    ) -> Result<Self> {
        let (kk, ss, n_tx) = (scenario.num_ues(), scenario.num_regions(), scenario.num_tx());
        let n = scenario.antennas();
        let tau_s = scenario.config.tau_s;
        let array = scenario.array();
        let mut f = Vec::with_capacity(ss * n_tx);
        for i in 0..ss {
            let rcs = geometry.rcs_covariance(i, 0);
            for t in 0..n_tx {
                let weight: f64 = scenario.targets.rx[i]
                    .iter()
                    .map(|&r| geometry.beta(i, r, t))
                    .sum::<f64>()
                    * rcs[(t, t)]
                    * (tau_s * n) as f64;
                let a_t = geometry.tx_steering(i, t);
                let mut m = DMatrix::zeros(kk + ss, kk + ss);
                for &k in &scenario.users.served_by[t] {
                    let tr = estimation.tr_phi(k, t);
                    if !(tr > 0.0) {
                        return Err(Error::DegenerateLink { ue: k, ap: t });
                    }
                    let q = (a_t.adjoint() * estimation.phi(k, t) * a_t)[(0, 0)].re;
                    m[(k, k)] = weight * q.max(0.0) / tr;
                }
                let ap = scenario.tx_position(t);
                for &j in &scenario.targets.beams[t] {
                    let w0 = sensing_beamformer(&array, &ap, &scenario.radar_cells[j]);
                    m[(kk + j, kk + j)] = weight * a_t.dotc(&w0).norm_sqr();
                }
                if m.iter().any(|x| !x.is_finite() || *x < 0.0) {
                    return Err(Error::Numerical(format!(
                        "effective-SNR matrix of region {i}, AP {t} is not PSD"
                    )));
                }
                f.push(m);
            }
        }
        Ok(Self {
            n_ues: kk,
            n_regions: ss,
            n_tx,
            antennas: n,
            tau_s,
            noise_power,
            f,
        })
    }

    pub fn matrix(&self, i: usize, t: usize) -> &DMatrix<f64> {
        &self.f[i * self.n_tx + t]
    }

    pub fn n_regions(&self) -> usize {
        self.n_regions
    }

    /// `N τ_s σ²`.
    pub fn normalization(&self) -> f64 {
        (self.antennas * self.tau_s) as f64 * self.noise_power
    }

    fn block(&self) -> usize {
        self.n_ues + self.n_regions
    }

    /// `Σ_t b_t^T F̄_{i,t} b_t` for a stacked `b`.
    pub fn energy_stacked(&self, i: usize, b: &DVector<f64>) -> f64 {
        let block = self.block();
        (0..self.n_tx)
            .map(|t| {
                let bt = b.rows(t * block, block);
                (bt.transpose() * self.matrix(i, t) * bt)[(0, 0)]
            })
            .sum()
    }

    pub fn energy(&self, i: usize, alloc: &PowerAllocation) -> f64 {
        self.energy_stacked(i, &alloc.stacked())
    }

    /// `γ̄_i`.
    pub fn snr(&self, i: usize, alloc: &PowerAllocation) -> f64 {
        self.energy(i, alloc) / self.normalization()
    }

    pub fn snr_all(&self, alloc: &PowerAllocation) -> Vec<f64> {
        let b = alloc.stacked();
        (0..self.n_regions)
            .map(|i| self.energy_stacked(i, &b) / self.normalization())
            .collect()
    }

    /// Gradient of the energy `2 F̄ b` with respect to the stacked `b`.
    pub fn gradient(&self, i: usize, b: &DVector<f64>) -> DVector<f64> {
        let block = self.block();
        let mut g = DVector::zeros(b.len());
        for t in 0..self.n_tx {
            let bt = b.rows(t * block, block);
            let gt = self.matrix(i, t) * bt * 2.0;
            g.rows_mut(t * block, block).copy_from(&gt);
        }
        g
    }

    /// First-order expansion of the energy around `b0`, a global
    /// under-estimator because the energy is a PSD quadratic.
    pub fn linearization(&self, i: usize, b: &DVector<f64>, b0: &DVector<f64>) -> f64 {
        self.energy_stacked(i, b0) + self.gradient(i, b0).dot(&(b - b0))
    }

    /// Upper bound of `γ̄_i` over the power budgets: the whole budget of every
    /// AP placed on the largest diagonal entry.
    pub fn snr_upper_bound(&self, i: usize, budgets: &[f64]) -> f64 {
        (0..self.n_tx)
            .map(|t| {
                let m = self.matrix(i, t);
                let top = m.diagonal().iter().cloned().fold(0.0, f64::max);
                budgets[t] * top
            })
            .sum::<f64>()
            / self.normalization()
    }
}

/// `R̄ = (τ_s/τ_c) B log2(1 + γ̄)`.
pub fn sensing_rate(snr: f64, tau_s: usize, tau_c: usize, bandwidth: f64) -> f64 {
    tau_s as f64 / tau_c as f64 * bandwidth * (1.0 + snr.max(0.0)).log2()
}

/// Monte Carlo estimate of `Σ_r E‖D̈_{i,r} α_{i,r}‖² / (N τ_s σ²)` from
/// simulated channels, estimates, symbols and reflectivities.
#[allow(clippy::too_many_arguments)]
pub fn effective_snr_monte_carlo<R: Rng + ?Sized>(
    scenario: &Scenario,
    geometry: &TargetGeometry,
    estimation: &EstimationMatrices,
    sampler: &ChannelSampler,
    alloc: &PowerAllocation,
    region: usize,
    samples: usize,
    rng: &mut R,
) -> Result<f64> {
    let tau_s = scenario.config.tau_s;
    let n_rx = scenario.num_rx();
    let present = vec![true; scenario.num_regions()];
    let mut acc = 0.0;
    for _ in 0..samples.max(1) {
        let real = sampler.sample(&present, rng);
        let signals = TransmitSignals::generate(scenario, alloc, &real, estimation, tau_s, rng)?;
        let stacks = target_channel_stack(scenario, geometry, &signals, region);
        for (d, &r) in stacks.iter().zip(&scenario.targets.rx[region]) {
            acc += (d * &real.alpha[region * n_rx + r]).norm_squared();
        }
    }
    let norm = (scenario.antennas() * tau_s) as f64 * scenario.config.noise_power();
    Ok(acc / samples.max(1) as f64 / norm)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_threshold() {
        let d = glrt_threshold(1, (-3.0f64).exp()).unwrap();
        assert!((d - 3.0).abs() < 1e-9);
        assert_eq!(glrt_threshold(4, 1.0).unwrap(), 0.0);
        assert!(glrt_threshold(4, 0.0).is_err());
    }

    #[test]
    fn threshold_matches_gamma_tail() {
        for r in [2usize, 5, 12, 40] {
            let d = glrt_threshold(r, 0.01).unwrap();
            assert!((gamma_ur(r as f64, d) - 0.01).abs() < 1e-10);
        }
    }

    #[test]
    fn rank_and_projection() {
        let d = CMatrix::from_fn(6, 3, |a, b| C64::new((a * (b + 1)) as f64, (a + b) as f64));
        let mut d2 = d.clone();
        let dep = d.column(0) * C64::new(2.0, -1.0);
        d2.set_column(2, &dep);
        let ws = GlrtWorkspace::new(&[d2.clone()], 1.0).unwrap();
        assert_eq!(ws.total_rank(), 2);
        let u = &ws.bases[0];
        let gram = u.adjoint() * u;
        assert!((gram - CMatrix::identity(2, 2)).norm() < 1e-12);
        let y = &d2 * CVector::from_vec(vec![C64::new(1.0, 0.5), C64::new(-2.0, 0.0), C64::new(0.3, 0.0)]);
        let t = ws.statistic(&[y.clone()]).unwrap();
        assert!((t - y.norm_squared()).abs() < 1e-9 * t);
    }

    #[test]
    fn zero_stack_has_rank_zero() {
        let ws = GlrtWorkspace::new(&[CMatrix::zeros(4, 2)], 1.0).unwrap();
        assert_eq!(ws.total_rank(), 0);
        assert!(ws.receive_snr(&DMatrix::identity(2, 2)).is_err());
    }

    #[test]
    fn rate_formula() {
        assert_eq!(sensing_rate(0.0, 50, 50, 1e6), 0.0);
        assert!((sensing_rate(1.0, 50, 50, 1e6) - 1e6).abs() < 1e-6);
    }
}
