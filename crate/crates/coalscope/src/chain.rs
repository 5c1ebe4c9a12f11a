//! Block-counting jump chain: path simulation, tree lengths and their
//! two approximations, mutation counts, and the Watterson-style
//! estimator.

use rand::Rng;
use rand_distr::{Distribution, Exp1, Poisson};

use crate::error::{CoalError, Result};
use crate::limits;
use crate::measures::{CoalescentMeasure, Family, RateTable};

/// One realization of the jump chain from `n0` blocks down to 1.
/// States are stored as jump sizes: `y_k = n0 - sum(x[..k])`, so a path
/// costs 12 bytes per jump (u32 jump + f64 exponential draw).
#[derive(Debug, Clone)]
pub struct JumpChainPath {
    pub n0: u64,
    /// jump sizes `x[k] = y_k - y_{k+1} >= 1`
    pub x: Vec<u32>,
    /// standard exponential draws; holding time in state `y_k` is
    /// `e[k] / g_{y_k}`
    pub e: Vec<f64>,
}

impl JumpChainPath {
    /// Number of coalescences `tau_n`.
    pub fn tau(&self) -> u64 {
        self.x.len() as u64
    }

    /// States `y_0 = n0 > y_1 > ... > y_{tau-1} >= 2`, i.e. the state
    /// occupied before each jump.
    pub fn states(&self) -> impl Iterator<Item = u64> + '_ {
        let mut y = self.n0;
        self.x.iter().map(move |&dx| {
            let cur = y;
            y -= dx as u64;
            cur
        })
    }

    /// Holding times `e[k] / g_{y_k}`.
    pub fn holding<'a>(&'a self, table: &'a RateTable) -> impl Iterator<Item = f64> + 'a {
        self.states().zip(&self.e).map(|(y, &e)| e / table.g(y))
    }
}

/// Simulate one path using prebuilt rate tables (the form used by
/// replicate loops, which share one table per (measure, n)).
pub fn sample_jump_chain_table<R: Rng + ?Sized>(
    table: &RateTable,
    n: u64,
    rng: &mut R,
) -> Result<JumpChainPath> {
    if n < 2 {
        return Err(CoalError::argument(format!(
            "sample_jump_chain requires n >= 2, got {n}"
        )));
    }
    if n > table.max_state() {
        return Err(CoalError::argument(format!(
            "rate table covers states up to {}, got n = {n}",
            table.max_state()
        )));
    }
    let mut x = Vec::new();
    let mut e = Vec::new();
    let mut y = n;
    while y > 1 {
        e.push(rng.sample::<f64, _>(Exp1));
        let l = table.invert_jump(y, rng.random::<f64>());
        debug_assert!((1..y).contains(&l));
        x.push(l as u32);
        y -= l;
    }
    Ok(JumpChainPath { n0: n, x, e })
}

/// Simulate one path from a measure directly (builds the rate table;
/// prefer `sample_jump_chain_table` inside replicate loops).
pub fn sample_jump_chain<R: Rng + ?Sized>(
    m: &CoalescentMeasure,
    n: u64,
    rng: &mut R,
) -> Result<JumpChainPath> {
    sample_jump_chain_table(&m.rate_table(n)?, n, rng)
}

/// Partial tree lengths and mutation counts along a time grid.
#[derive(Debug, Clone, serde::Serialize)]
pub struct TreeStatistics {
    /// grid times, strictly increasing in (0, gamma]
    pub grid: Vec<f64>,
    /// partial lengths `L_t = sum_{k<=cut(t)} (y_k / g_{y_k}) E_k`
    pub l_t: Vec<f64>,
    /// same with every `E_k` replaced by its mean 1
    pub l_tilde_t: Vec<f64>,
    /// power-sum approximation `sum y_k^{1-alpha}`
    pub l_hat_t: Vec<f64>,
    /// mutation counts, `K_t ~ Poisson(theta L_t)` coupled so that
    /// `K_t` is nondecreasing in t
    pub k_t: Vec<u64>,
    pub l_total: f64,
    pub t_mrca: f64,
    pub k_total: u64,
}

/// Compute partial sums per eq-style cutoffs `floor(nt) ^ (tau - 1)`
/// and coupled Poisson mutation counts. Grid points must be strictly
/// increasing, positive, and at most gamma; `t = gamma` means "run to
/// the last coalescence". `theta = 0` yields all-zero mutation counts.
pub fn tree_statistics<R: Rng + ?Sized>(
    table: &RateTable,
    path: &JumpChainPath,
    grid: &[f64],
    theta: f64,
    rng: &mut R,
) -> Result<TreeStatistics> {
    if theta < 0.0 {
        return Err(CoalError::argument(format!("theta must be >= 0, got {theta}")));
    }
    let gamma = table.measure().gamma();
    for w in grid.windows(2) {
        if w[0] >= w[1] {
            return Err(CoalError::argument("grid must be strictly increasing"));
        }
    }
    for &t in grid {
        if !(t > 0.0) || !(t <= gamma) {
            return Err(CoalError::argument(format!(
                "grid points must lie in (0, gamma] = (0, {gamma}], got {t}"
            )));
        }
    }
    let alpha = table.measure().alpha();
    let n = path.n0;
    let tau = path.tau();
    // inclusive cutoff index per grid point: floor(nt) ^ (tau - 1)
    let cutoff = |t: f64| -> u64 {
        if t >= gamma {
            tau - 1
        } else {
            ((n as f64 * t).floor() as u64).min(tau - 1)
        }
    };
    let cuts: Vec<u64> = grid.iter().map(|&t| cutoff(t)).collect();

    let mut l_t = vec![0.0; grid.len()];
    let mut l_tilde_t = vec![0.0; grid.len()];
    let mut l_hat_t = vec![0.0; grid.len()];
    let (mut l, mut l_tilde, mut l_hat, mut t_mrca) = (0.0, 0.0, 0.0, 0.0);
    let mut gi = 0; // next grid point whose cutoff we have not passed
    for (k, (y, &e)) in path.states().zip(&path.e).enumerate() {
        let yf = y as f64;
        let g = table.g(y);
        l += yf / g * e;
        l_tilde += yf / g;
        l_hat += yf.powf(1.0 - alpha);
        t_mrca += e / g;
        while gi < cuts.len() && cuts[gi] == k as u64 {
            l_t[gi] = l;
            l_tilde_t[gi] = l_tilde;
            l_hat_t[gi] = l_hat;
            gi += 1;
        }
    }
    // grid points whose cutoff exceeds tau-1 already saturated at totals
    for j in gi..cuts.len() {
        l_t[j] = l;
        l_tilde_t[j] = l_tilde;
        l_hat_t[j] = l_hat;
    }
    let l_total = l;

    // one Poisson realization over the whole tree, accumulated in
    // grid-increment slices so K_t is monotone in t
    let mut k_t = vec![0u64; grid.len()];
    let mut k_cum = 0u64;
    let mut l_prev = 0.0;
    if theta > 0.0 {
        for (j, &lt) in l_t.iter().enumerate() {
            k_cum += poisson_draw(theta * (lt - l_prev), rng);
            k_t[j] = k_cum;
            l_prev = lt;
        }
    }
    let k_total = if theta > 0.0 {
        k_cum + poisson_draw(theta * (l_total - l_prev), rng)
    } else {
        0
    };
    Ok(TreeStatistics {
        grid: grid.to_vec(),
        l_t,
        l_tilde_t,
        l_hat_t,
        k_t,
        l_total,
        t_mrca,
        k_total,
    })
}

fn poisson_draw<R: Rng + ?Sized>(lambda: f64, rng: &mut R) -> u64 {
    if lambda <= 0.0 {
        return 0;
    }
    Poisson::new(lambda).expect("positive finite lambda").sample(rng) as u64
}

/// Normalization used by `watterson_estimate`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ThetaMode {
    /// `theta = K / (2 sum_{k<n} 1/k)` (expected Kingman tree length)
    Kingman,
    /// `theta = K / (a(gamma) n^{2-alpha})` (first-order length of a
    /// power-tail coalescent tree)
    PowerTail,
}

/// Watterson-style mutation-rate estimate from a full-tree mutation
/// count.
pub fn watterson_estimate(
    k_total: u64,
    n: u64,
    m: &CoalescentMeasure,
    mode: ThetaMode,
) -> Result<f64> {
    if n < 2 {
        return Err(CoalError::argument("watterson_estimate requires n >= 2"));
    }
    match mode {
        ThetaMode::Kingman => {
            if m.family() != Family::Kingman {
                return Err(CoalError::unsupported(
                    m.family().to_string(),
                    "watterson_estimate (kingman mode)",
                ));
            }
            let h: f64 = (1..n).map(|k| 1.0 / k as f64).sum();
            Ok(k_total as f64 / (2.0 * h))
        }
        ThetaMode::PowerTail => {
            let tail = m.asymptotic_tail("watterson_estimate (power-tail mode)")?;
            let a_gamma = limits::a_of_t(m, tail.alpha - 1.0)?;
            Ok(k_total as f64 / (a_gamma * (n as f64).powf(2.0 - tail.alpha)))
        }
    }
}
