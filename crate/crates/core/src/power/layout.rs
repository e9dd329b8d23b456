use nalgebra::DVector;

use crate::comm::PowerAllocation;
use crate::scenario::Scenario;

/// One optimization variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Var {
    Zeta { k: usize, t: usize },
    Nu { i: usize, t: usize },
}

/// Maps the structurally nonzero amplitudes of an allocation to a dense
/// variable vector. Amplitudes outside the layout are held at zero.
#[derive(Debug, Clone)]
pub struct VariableLayout {
    n_ues: usize,
    n_regions: usize,
    n_tx: usize,
    vars: Vec<Var>,
    zeta_index: Vec<Option<usize>>,
    nu_index: Vec<Option<usize>>,
    per_ap: Vec<Vec<usize>>,
}

impl VariableLayout {
    /// `ζ_{k,m}` for `k ∈ K_m` when `comm`, `ν_{i,m}` for `i ∈ S_m` when `sensing`.
    pub fn new(scenario: &Scenario, comm: bool, sensing: bool) -> Self {
        let (kk, ss, n_tx) = (scenario.num_ues(), scenario.num_regions(), scenario.num_tx());
        let mut vars = Vec::new();
        let mut zeta_index = vec![None; kk * n_tx];
        let mut nu_index = vec![None; ss * n_tx];
        let mut per_ap = vec![Vec::new(); n_tx];
        for t in 0..n_tx {
            if comm {
                let mut served = scenario.users.served_by[t].clone();
                served.sort_unstable();
                for k in served {
                    zeta_index[k * n_tx + t] = Some(vars.len());
                    per_ap[t].push(vars.len());
                    vars.push(Var::Zeta { k, t });
                }
            }
            if sensing {
                let mut beams = scenario.targets.beams[t].clone();
                beams.sort_unstable();
                for i in beams {
                    nu_index[i * n_tx + t] = Some(vars.len());
                    per_ap[t].push(vars.len());
                    vars.push(Var::Nu { i, t });
                }
            }
        }
        Self {
            n_ues: kk,
            n_regions: ss,
            n_tx,
            vars,
            zeta_index,
            nu_index,
            per_ap,
        }
    }

    pub fn len(&self) -> usize {
        self.vars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vars.is_empty()
    }

    pub fn vars(&self) -> &[Var] {
        &self.vars
    }

    pub fn zeta(&self, k: usize, t: usize) -> Option<usize> {
        self.zeta_index[k * self.n_tx + t]
    }

    pub fn nu(&self, i: usize, t: usize) -> Option<usize> {
        self.nu_index[i * self.n_tx + t]
    }

    /// Variables of transmit AP `t`.
    pub fn ap(&self, t: usize) -> &[usize] {
        &self.per_ap[t]
    }

    /// Position of variable `v` in [`PowerAllocation::stacked`].
    pub fn stacked_index(&self, v: usize) -> usize {
        let block = self.n_ues + self.n_regions;
        match self.vars[v] {
            Var::Zeta { k, t } => t * block + k,
            Var::Nu { i, t } => t * block + self.n_ues + i,
        }
    }

    /// Restriction of `alloc` to the layout.
    pub fn point(&self, alloc: &PowerAllocation) -> DVector<f64> {
        DVector::from_iterator(
            self.len(),
            self.vars.iter().map(|v| match *v {
                Var::Zeta { k, t } => alloc.zeta(k, t),
                Var::Nu { i, t } => alloc.nu(i, t),
            }),
        )
    }

    /// Allocation with the layout variables set from `x` (negative entries
    /// clipped to zero) and every other amplitude zero.
    pub fn allocation(&self, x: &DVector<f64>) -> PowerAllocation {
        let mut out = PowerAllocation::zeros(self.n_ues, self.n_regions, self.n_tx);
        for (v, &value) in self.vars.iter().zip(x.iter()) {
            let value = value.max(0.0);
            match *v {
                Var::Zeta { k, t } => out.set_zeta(k, t, value),
                Var::Nu { i, t } => out.set_nu(i, t, value),
            }
        }
        out
    }

    /// `alloc` with every amplitude outside the layout set to zero.
    pub fn restrict(&self, alloc: &PowerAllocation) -> PowerAllocation {
        self.allocation(&self.point(alloc))
    }
}
