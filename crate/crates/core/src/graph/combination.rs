use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::Topology;
use crate::error::{Error, Result};
use crate::linalg::{max_abs, SymmetricEigen};

const STOCHASTIC_TOL: f64 = 1e-12;
const PSD_TOL: f64 = 1e-12;

/// Metropolis weights `a_sk = 1/max(n_s, n_k)` with `n_k = deg(k) + 1`;
/// the diagonal absorbs the remainder of each row.
pub fn metropolis(topology: &Topology) -> Result<DMatrix<f64>> {
    if !topology.is_connected() {
        return Err(Error::Disconnected);
    }
    let k = topology.num_agents();
    let n = |i: usize| (topology.degree(i) + 1) as f64;
    let mut a = DMatrix::zeros(k, k);
    for &(s, t) in topology.edges() {
        let w = 1.0 / n(s).max(n(t));
        a[(s, t)] = w;
        a[(t, s)] = w;
    }
    for i in 0..k {
        let off: f64 = (0..k).filter(|&j| j != i).map(|j| a[(i, j)]).sum();
        a[(i, i)] = 1.0 - off;
    }
    Ok(a)
}

/// Combination matrices `A`, `Ā = ½(I + A)` and the spectral data of the
/// consensus matrix `L` defined by `L² = I − Ā`.
#[derive(Debug, Clone)]
pub struct CombinationSet {
    a: DMatrix<f64>,
    abar: DMatrix<f64>,
    eigen: SymmetricEigen,
    neighbors: Vec<Vec<usize>>,
    l: Option<DMatrix<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CombinationReport {
    pub ok: bool,
    /// `λ_min(I − L²)`; must be strictly positive.
    pub min_eig_i_minus_l2: f64,
    /// `λ_min(I − L² − Ā²)`; must be nonnegative.
    pub min_eig_gap: f64,
    /// `L v = 0` exactly on consensus vectors.
    pub consensus_null_space: bool,
}

impl CombinationSet {
    pub fn new(a: DMatrix<f64>) -> Result<Self> {
        let k = a.nrows();
        if k == 0 || a.ncols() != k {
            return Err(Error::BadCombinationMatrix(format!(
                "expected a nonempty square matrix, got {}x{}",
                k,
                a.ncols()
            )));
        }
        let asym = max_abs(&(&a - a.transpose()));
        if asym > STOCHASTIC_TOL {
            return Err(Error::BadCombinationMatrix(format!(
                "not symmetric (max asymmetry {asym:e})"
            )));
        }
        if a.iter().any(|&v| v < 0.0 || !v.is_finite()) {
            return Err(Error::BadCombinationMatrix(
                "negative or non-finite entry".into(),
            ));
        }
        let row_err = (&a * DVector::from_element(k, 1.0)).add_scalar(-1.0).amax();
        if row_err > STOCHASTIC_TOL {
            return Err(Error::BadCombinationMatrix(format!(
                "rows do not sum to one (max error {row_err:e})"
            )));
        }

        let abar = (DMatrix::identity(k, k) + &a) * 0.5;
        let eigen = SymmetricEigen::new(&abar)?;
        if k > 1 && eigen.values[k - 2] >= 1.0 - STOCHASTIC_TOL {
            return Err(Error::BadCombinationMatrix(format!(
                "second eigenvalue of Abar is {:.15}; graph is effectively disconnected",
                eigen.values[k - 2]
            )));
        }
        let neighbors = (0..k)
            .map(|i| (0..k).filter(|&s| s == i || a[(s, i)] != 0.0).collect())
            .collect();
        Ok(Self {
            a,
            abar,
            eigen,
            neighbors,
            l: None,
        })
    }

    pub fn from_topology(topology: &Topology) -> Result<Self> {
        Self::new(metropolis(topology)?)
    }

    /// Same set with `L` materialized (needed by the general-form solver and
    /// fixed-point construction).
    pub fn with_l(mut self) -> Self {
        self.l = Some(self.materialize_l());
        self
    }

    pub fn num_agents(&self) -> usize {
        self.a.nrows()
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn abar(&self) -> &DMatrix<f64> {
        &self.abar
    }

    /// Eigenvalues of `Ā`, ascending.
    pub fn eig_abar(&self) -> &DVector<f64> {
        &self.eigen.values
    }

    /// Agents whose `z` agent `k` combines, including `k`.
    pub fn neighborhood(&self, k: usize) -> &[usize] {
        &self.neighbors[k]
    }

    /// Second-largest eigenvalue of `Ā`; `None` for a single agent.
    pub fn lambda2(&self) -> Option<f64> {
        let k = self.num_agents();
        (k > 1).then(|| self.eigen.values[k - 2])
    }

    /// Smallest nonzero singular value of `L`, `sqrt(1 − λ₂(Ā))`.
    pub fn sigma_min_l(&self) -> Option<f64> {
        self.lambda2().map(|l2| (1.0 - l2).sqrt())
    }

    /// `sqrt(1 − λ_min(Ā))`.
    pub fn sigma_max_l(&self) -> f64 {
        (1.0 - self.eigen.min()).max(0.0).sqrt()
    }

    pub fn l(&self) -> Option<&DMatrix<f64>> {
        self.l.as_ref()
    }

    /// Symmetric PSD square root of `I − Ā`. The top eigenpair (value 1,
    /// vector 𝟙/√K) is mapped to zero exactly and the result is projected
    /// onto the complement of 𝟙 so that `L𝟙 = 0` to rounding.
    pub fn materialize_l(&self) -> DMatrix<f64> {
        let top = self.num_agents() - 1;
        let l = self.eigen.map(|j, lam| {
            if j == top {
                0.0
            } else {
                (1.0 - lam).max(0.0).sqrt()
            }
        });
        self.project_off_consensus(&l)
    }

    /// Moore–Penrose pseudo-inverse of `L`.
    pub fn l_pseudo_inverse(&self) -> DMatrix<f64> {
        let top = self.num_agents() - 1;
        let lp = self.eigen.map(|j, lam| {
            let s = (1.0 - lam).max(0.0).sqrt();
            if j == top || s == 0.0 {
                0.0
            } else {
                1.0 / s
            }
        });
        self.project_off_consensus(&lp)
    }

    fn project_off_consensus(&self, m: &DMatrix<f64>) -> DMatrix<f64> {
        let k = self.num_agents();
        let p = DMatrix::identity(k, k) - DMatrix::from_element(k, k, 1.0 / k as f64);
        let out = &p * m * &p;
        (&out + out.transpose()) * 0.5
    }

    /// The combination conditions with `L² = I − Ā`, evaluated on the spectrum of `Ā`.
    pub fn check_combination(&self) -> CombinationReport {
        let mut report = check_combination_spectrum(self.eigen.values.as_slice());
        report.consensus_null_space = self.lambda2().is_none_or(|l2| l2 < 1.0);
        report.ok &= report.consensus_null_space;
        report
    }

    /// CSV dump (no header) of `A` or `Ā`.
    pub fn to_csv(&self, which: WhichMatrix) -> String {
        let m = match which {
            WhichMatrix::A => &self.a,
            WhichMatrix::Abar => &self.abar,
        };
        matrix_to_csv(m)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WhichMatrix {
    A,
    Abar,
}

pub fn matrix_to_csv(m: &DMatrix<f64>) -> String {
    let mut out = String::new();
    for i in 0..m.nrows() {
        let row: Vec<String> = m.row(i).iter().map(|v| v.to_string()).collect();
        let _ = writeln!(out, "{}", row.join(","));
    }
    out
}

/// The combination conditions for the choice `L² = I − Ā`, given the eigenvalues of `Ā`:
/// `I − L² = Ā ≻ 0` and `Ā² ≤ Ā`, i.e. every eigenvalue in `(0, 1]`.
pub fn check_combination_spectrum(eig_abar: &[f64]) -> CombinationReport {
    let min_eig_i_minus_l2 = eig_abar.iter().copied().fold(f64::INFINITY, f64::min);
    let min_eig_gap = eig_abar
        .iter()
        .map(|&l| l - l * l)
        .fold(f64::INFINITY, f64::min);
    CombinationReport {
        ok: min_eig_i_minus_l2 > 0.0 && min_eig_gap >= -PSD_TOL,
        min_eig_i_minus_l2,
        min_eig_gap,
        consensus_null_space: true,
    }
}

/// The combination conditions for an arbitrary symmetric pair `(Ā, L)`: `I − L² ≻ 0`,
/// `Ā² ≤ I − L²`, and `L v = 0 ⟺ v ∝ 𝟙`.
pub fn check_combination_general(
    abar: &DMatrix<f64>,
    l: &DMatrix<f64>,
) -> Result<CombinationReport> {
    let k = abar.nrows();
    if l.shape() != (k, k) || abar.ncols() != k {
        return Err(Error::InvalidInput(
            "Abar and L must be square of equal size".into(),
        ));
    }
    let id = DMatrix::<f64>::identity(k, k);
    let i_minus_l2 = &id - l * l;
    let gap = &i_minus_l2 - abar * abar;
    let min_eig_i_minus_l2 = SymmetricEigen::new(&i_minus_l2)?.min();
    let min_eig_gap = SymmetricEigen::new(&gap)?.min();

    let ones = DVector::from_element(k, 1.0);
    let scale = max_abs(l).max(1.0);
    let kills_ones = (l * &ones).amax() <= 1e-10 * scale;
    let l_eig = SymmetricEigen::new(&(l * l))?;
    let zero_count = l_eig
        .values
        .iter()
        .filter(|&&v| v.abs() <= 1e-10 * scale * scale)
        .count();
    let consensus_null_space = kills_ones && zero_count == 1;

    Ok(CombinationReport {
        ok: min_eig_i_minus_l2 > 0.0 && min_eig_gap >= -PSD_TOL && consensus_null_space,
        min_eig_i_minus_l2,
        min_eig_gap,
        consensus_null_space,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn approx(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn metropolis_examples() {
        let single = metropolis(&Topology::new(1, []).unwrap()).unwrap();
        assert_eq!(single, DMatrix::from_element(1, 1, 1.0));

        // Path 1–2–3: n = (2, 3, 2).
        let a = metropolis(&Topology::path(3).unwrap()).unwrap();
        let third = 1.0 / 3.0;
        let expected = DMatrix::from_row_slice(
            3,
            3,
            &[
                2.0 * third,
                third,
                0.0,
                third,
                third,
                third,
                0.0,
                third,
                2.0 * third,
            ],
        );
        assert!(max_abs(&(a - expected)) < 1e-15);

        let a = metropolis(&Topology::complete(4).unwrap()).unwrap();
        assert!(a.iter().all(|&v| approx(v, 0.25, 1e-15)));

        let disconnected = Topology::new(3, [(0, 1)]).unwrap();
        assert!(matches!(
            metropolis(&disconnected),
            Err(Error::Disconnected)
        ));
    }

    #[test]
    fn two_agent_complete_graph() {
        let cs = CombinationSet::new(DMatrix::from_element(2, 2, 0.5)).unwrap();
        let eig = cs.eig_abar();
        assert!(approx(eig[0], 0.5, 1e-15) && approx(eig[1], 1.0, 1e-15));
        assert!(approx(cs.lambda2().unwrap(), 0.5, 1e-15));
        assert!(approx(cs.sigma_min_l().unwrap(), 0.5f64.sqrt(), 1e-15));

        let l = cs.materialize_l();
        let ones = DVector::from_element(2, 1.0);
        assert!((&l * &ones).amax() < 1e-15);
        let diff = DVector::from_column_slice(&[1.0, -1.0]);
        // (1, −1) is an eigenvector with eigenvalue sqrt(½).
        assert!((&l * &diff - &diff * 0.5f64.sqrt()).amax() < 1e-14);
    }

    #[test]
    fn single_agent_is_flagged_but_valid() {
        let cs = CombinationSet::new(DMatrix::from_element(1, 1, 1.0)).unwrap();
        assert_eq!(cs.abar(), &DMatrix::from_element(1, 1, 1.0));
        assert_eq!(cs.lambda2(), None);
        assert_eq!(cs.sigma_min_l(), None);
        assert!(cs.check_combination().ok);
        assert_eq!(cs.materialize_l(), DMatrix::zeros(1, 1));
    }

    #[test]
    fn rejects_non_stochastic_and_disconnected() {
        assert!(CombinationSet::new(DMatrix::from_row_slice(2, 2, &[0.6, 0.5, 0.5, 0.5])).is_err());
        assert!(CombinationSet::new(DMatrix::from_row_slice(2, 2, &[0.5, 0.4, 0.6, 0.5])).is_err());
        assert!(
            CombinationSet::new(DMatrix::from_row_slice(2, 2, &[1.5, -0.5, -0.5, 1.5])).is_err()
        );
        assert!(matches!(
            CombinationSet::new(DMatrix::identity(2, 2)),
            Err(Error::BadCombinationMatrix(_))
        ));
    }

    #[test]
    fn combination_conditions_from_spectrum() {
        let r = check_combination_spectrum(&[0.3, 1.0]);
        assert!(r.ok);
        assert!(approx(r.min_eig_i_minus_l2, 0.3, 1e-15));
        // The consensus eigenvalue 1 contributes 1 − 1² = 0 to the gap;
        // the eigenvalue 0.3 contributes 0.3 − 0.09.
        assert!(approx(r.min_eig_gap, 0.0, 1e-15));
        let r = check_combination_spectrum(&[0.3]);
        assert!(approx(r.min_eig_gap, 0.21, 1e-15));

        assert!(check_combination_spectrum(&[1.0]).ok);

        let r = check_combination_spectrum(&[-0.1, 0.5, 1.0]);
        assert!(!r.ok);
        assert!(approx(r.min_eig_i_minus_l2, -0.1, 1e-15));
        assert!(approx(r.min_eig_gap, -0.11, 1e-15));
    }

    #[test]
    fn general_checker_agrees_with_spectral_route() {
        let cs = CombinationSet::from_topology(&Topology::ring(6).unwrap()).unwrap();
        let l = cs.materialize_l();
        let general = check_combination_general(cs.abar(), &l).unwrap();
        let spectral = cs.check_combination();
        assert!(general.ok && spectral.ok);
        assert!(approx(
            general.min_eig_i_minus_l2,
            spectral.min_eig_i_minus_l2,
            1e-10
        ));
        assert!(approx(general.min_eig_gap, spectral.min_eig_gap, 1e-10));

        // Using A itself (no ½(I+A) lift) on a bipartite ring fails: λ = −1.
        let a = cs.a().clone();
        let k = a.nrows();
        let eig = SymmetricEigen::new(&a).unwrap();
        let l_raw = eig.map(|_, lam| (1.0 - lam).max(0.0).sqrt());
        let raw = check_combination_general(&a, &l_raw).unwrap();
        assert!(!raw.ok, "{raw:?} for K = {k}");
    }

    #[test]
    fn l_is_square_root_with_consensus_kernel() {
        let cs = CombinationSet::from_topology(&Topology::erdos_renyi(12, 0.3, 9).unwrap())
            .unwrap()
            .with_l();
        let l = cs.l().unwrap();
        let k = cs.num_agents();
        let target = DMatrix::identity(k, k) - cs.abar();
        assert!(max_abs(&(l * l - target)) <= 1e-10);
        assert!((l * DVector::from_element(k, 1.0)).amax() <= 1e-12);
        let rank = SymmetricEigen::new(l)
            .unwrap()
            .values
            .iter()
            .filter(|v| v.abs() > 1e-10)
            .count();
        assert_eq!(rank, k - 1);
        assert!(cs.sigma_max_l() < 1.0);

        let lp = cs.l_pseudo_inverse();
        assert!(max_abs(&(l * &lp * l - l)) <= 1e-10);
    }

    #[test]
    fn csv_dump_has_k_rows() {
        let cs = CombinationSet::from_topology(&Topology::path(3).unwrap()).unwrap();
        let csv = cs.to_csv(WhichMatrix::Abar);
        assert_eq!(csv.lines().count(), 3);
        assert_eq!(csv.lines().next().unwrap().split(',').count(), 3);
    }
}
