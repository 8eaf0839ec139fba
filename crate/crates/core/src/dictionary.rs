//! ALD-maintained dictionaries and the Nyström feature maps built on them.
//!
//! A [`Dictionary`] stores the atoms `S = {x_{s_1}, …, x_{s_j}}` together with
//! their Gram matrix `K_S` and its inverse. The inverse is grown by the block
//! formula on every insertion (the Schur complement is exactly the ALD
//! projection error of the new atom) and refreshed from scratch every
//! [`REFRESH_INTERVAL`] insertions.
//!
//! The eigendecomposition `K_S = U Σ Uᵀ` is computed lazily by
//! [`Dictionary::feature_map`], which returns a [`FeatureMap`] evaluating
//! `φ_j(x) = Σ^{-1/2} Uᵀ (κ(x, s_i))_i`.

use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{self, Kernel};
use crate::numerics::{self, EigenDecomp, Matrix, SymMatrix, Vector};

/// Insertions between full re-inversions of the Gram matrix.
pub const REFRESH_INTERVAL: usize = 64;
/// Computed projection errors down to `-ALD_NEGATIVE_SLACK` are clamped to zero.
pub const ALD_NEGATIVE_SLACK: f64 = 1e-10;

/// Outcome of the approximate-linear-dependence test for one instance.
#[derive(Clone, Debug, PartialEq)]
pub struct AldResult {
    /// `β* = K_S⁻¹ k_x`; empty for an empty dictionary.
    pub beta: Vector,
    /// Squared RKHS distance from `κ(x, ·)` to the span of the atoms, clamped at zero.
    pub error: f64,
    /// `error ≤ α`.
    pub holds: bool,
    /// `k_x = (κ(x, s_i))_i`, reused by the learners.
    pub cross: Vector,
    /// `κ(x, x)`.
    pub self_similarity: f64,
}

#[derive(Clone, Debug)]
pub struct Dictionary {
    kernel: Kernel,
    threshold: f64,
    capacity: Option<usize>,
    atoms: Vec<Vec<f64>>,
    targets: Vec<f64>,
    gram: SymMatrix,
    gram_inv: SymMatrix,
    eigen: Option<EigenDecomp>,
    since_refresh: usize,
}

impl Dictionary {
    /// Creates an empty dictionary with ALD threshold `threshold`.
    pub fn new(kernel: Kernel, threshold: f64) -> Result<Self> {
        if !(threshold >= 0.0) || !threshold.is_finite() {
            return Err(Error::input(format!(
                "ALD threshold must be a finite non-negative number, got {threshold}"
            )));
        }
        Ok(Dictionary {
            kernel,
            threshold,
            capacity: None,
            atoms: Vec::new(),
            targets: Vec::new(),
            gram: SymMatrix::identity(0),
            gram_inv: SymMatrix::identity(0),
            eigen: None,
            since_refresh: 0,
        })
    }

    pub fn with_capacity(mut self, capacity: usize) -> Result<Self> {
        if capacity == 0 {
            return Err(Error::input("dictionary capacity must be at least 1"));
        }
        self.capacity = Some(capacity);
        Ok(self)
    }

    pub fn kernel(&self) -> &Kernel {
        &self.kernel
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn capacity(&self) -> Option<usize> {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.capacity.is_some_and(|c| self.len() >= c)
    }

    pub fn atoms(&self) -> &[Vec<f64>] {
        &self.atoms
    }

    pub fn targets(&self) -> &[f64] {
        &self.targets
    }

    pub fn gram(&self) -> &SymMatrix {
        &self.gram
    }

    pub fn gram_inv(&self) -> &SymMatrix {
        &self.gram_inv
    }

    /// `‖K_S K_S⁻¹ − I‖_F`.
    pub fn inverse_defect(&self) -> f64 {
        let n = self.len();
        (self.gram.as_matrix() * self.gram_inv.as_matrix() - Matrix::identity(n, n)).norm()
    }

    /// `(κ(x, s_i))_i`.
    pub fn cross(&self, x: &[f64]) -> Result<Vector> {
        if let Some(a) = self.atoms.first() {
            numerics::check_len(a.len(), x.len())?;
        }
        Ok(self.kernel.cross(&self.atoms, x))
    }

    /// Projection error of `κ(x, ·)` onto the span of the atoms.
    pub fn ald_test(&self, x: &[f64]) -> Result<AldResult> {
        let cross = self.cross(x)?;
        self.ald_test_with_cross(x, cross)
    }

    /// [`Dictionary::ald_test`] with a precomputed cross-kernel vector.
    pub fn ald_test_with_cross(&self, x: &[f64], cross: Vector) -> Result<AldResult> {
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::input("instance has non-finite features"));
        }
        numerics::check_len(self.len(), cross.len())?;
        let self_similarity = self.kernel.self_similarity(x);
        if self.is_empty() {
            // Empty span: β* = 0 and the error is the full κ(x, x) (= 1 when normalized).
            let error = self_similarity;
            return Ok(AldResult {
                beta: Vector::zeros(0),
                error,
                holds: error <= self.threshold,
                cross,
                self_similarity,
            });
        }
        let beta = self.gram_inv.mul_vec(&cross);
        let raw = self_similarity - cross.dot(&beta);
        if raw < -ALD_NEGATIVE_SLACK * self_similarity.max(1.0) {
            return Err(Error::numeric(format!(
                "ALD projection error {raw:e} is negative beyond tolerance; Gram inverse has drifted"
            )));
        }
        let error = raw.max(0.0);
        Ok(AldResult {
            beta,
            error,
            holds: error <= self.threshold,
            cross,
            self_similarity,
        })
    }

    /// Appends `(x, y)` using the ALD result computed for `x` against this dictionary.
    pub fn add_atom(&mut self, x: &[f64], y: f64, res: &AldResult) -> Result<()> {
        if let Some(cap) = self.capacity {
            if self.len() >= cap {
                return Err(Error::ResourceCap(format!("dictionary capacity {cap} reached")));
            }
        }
        if let Some(a) = self.atoms.first() {
            numerics::check_len(a.len(), x.len())?;
        }
        numerics::check_len(self.len(), res.cross.len())?;
        numerics::check_len(self.len(), res.beta.len())?;

        let n = self.len();
        let mean_diag = (self.gram.trace() + res.self_similarity) / (n as f64 + 1.0);
        let floor = numerics::JITTER_SCALE * mean_diag.abs().max(f64::MIN_POSITIVE);
        let mut schur = res.error;
        if schur < floor {
            warn!(
                "atom {n} is numerically dependent on the dictionary (schur complement {schur:e}); jittering to {floor:e}"
            );
            schur = floor;
        }

        let gram = self.gram.bordered(&res.cross, res.self_similarity)?;
        let inv = self.gram_inv.as_matrix();
        let beta = &res.beta;
        let gram_inv = SymMatrix::from_fn(n + 1, |i, j| match (i < n, j < n) {
            (true, true) => inv[(i, j)] + beta[i] * beta[j] / schur,
            (true, false) => -beta[i] / schur,
            (false, true) => -beta[j] / schur,
            (false, false) => 1.0 / schur,
        });

        self.atoms.push(x.to_vec());
        self.targets.push(y);
        self.gram = gram;
        self.gram_inv = gram_inv;
        self.eigen = None;
        self.since_refresh += 1;
        if self.since_refresh >= REFRESH_INTERVAL {
            self.refresh_inverse()?;
        }
        Ok(())
    }

    /// Inserts `(x, y)` regardless of the ALD outcome.
    pub fn push(&mut self, x: &[f64], y: f64) -> Result<AldResult> {
        let res = self.ald_test(x)?;
        self.add_atom(x, y, &res)?;
        Ok(res)
    }

    /// Replaces the incrementally maintained inverse with a fresh factorization.
    pub fn refresh_inverse(&mut self) -> Result<()> {
        self.gram_inv = numerics::inverse_spd(&self.gram)?;
        self.since_refresh = 0;
        Ok(())
    }

    /// Eigendecomposition of the Gram matrix, recomputed only when atoms were added.
    pub fn eigen(&mut self) -> Result<&EigenDecomp> {
        if self.eigen.is_none() {
            self.eigen = Some(numerics::eigh(&self.gram)?);
        }
        Ok(self.eigen.as_ref().expect("just populated"))
    }

    pub fn has_fresh_eigen(&self) -> bool {
        self.eigen.is_some()
    }

    /// Nyström feature map for the current atoms.
    pub fn feature_map(&mut self) -> Result<FeatureMap> {
        if self.is_empty() {
            return Err(Error::input("feature map of an empty dictionary"));
        }
        let operator = self.eigen()?.inv_sqrt_transform()?;
        Ok(FeatureMap {
            kernel: self.kernel,
            atoms: self.atoms.clone(),
            gram: self.gram.clone(),
            operator,
        })
    }

    pub fn snapshot(&self) -> DictionarySnapshot {
        DictionarySnapshot {
            kernel: self.kernel,
            threshold: self.threshold,
            capacity: self.capacity,
            atoms: self.atoms.clone(),
            targets: self.targets.clone(),
            gram: self.gram.clone(),
        }
    }

    /// Rebuilds a dictionary from a snapshot, checking the stored Gram matrix
    /// against the atoms.
    pub fn from_snapshot(snap: DictionarySnapshot) -> Result<Self> {
        if snap.atoms.len() != snap.targets.len() {
            return Err(Error::input("snapshot has mismatched atoms and targets"));
        }
        let mut dict = Dictionary::new(snap.kernel, snap.threshold)?;
        if let Some(cap) = snap.capacity {
            dict = dict.with_capacity(cap)?;
        }
        if snap.atoms.is_empty() {
            return Ok(dict);
        }
        let gram = kernels::gram(&snap.kernel, &snap.atoms)?;
        numerics::check_len(gram.dim(), snap.gram.dim())?;
        let drift = (gram.as_matrix() - snap.gram.as_matrix()).amax();
        if drift > 1e-12 {
            return Err(Error::input(format!(
                "snapshot Gram matrix disagrees with its atoms by {drift:e}"
            )));
        }
        dict.gram_inv = numerics::inverse_spd(&gram)?;
        dict.gram = gram;
        dict.atoms = snap.atoms;
        dict.targets = snap.targets;
        Ok(dict)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.snapshot())?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Self::from_snapshot(serde_json::from_str(s)?)
    }
}

/// Serializable dictionary contents.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DictionarySnapshot {
    pub kernel: Kernel,
    pub threshold: f64,
    pub capacity: Option<usize>,
    pub atoms: Vec<Vec<f64>>,
    pub targets: Vec<f64>,
    pub gram: SymMatrix,
}

/// Explicit Nyström feature map `φ_j(x) = Σ^{-1/2} Uᵀ k_x` for a fixed atom set.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureMap {
    kernel: Kernel,
    atoms: Vec<Vec<f64>>,
    gram: SymMatrix,
    operator: Matrix,
}

impl FeatureMap {
    /// Builds the map directly from a list of atoms.
    pub fn from_atoms(kernel: Kernel, atoms: Vec<Vec<f64>>) -> Result<Self> {
        let gram = kernels::gram(&kernel, &atoms)?;
        let operator = numerics::eigh(&gram)?.inv_sqrt_transform()?;
        Ok(FeatureMap {
            kernel,
            atoms,
            gram,
            operator,
        })
    }

    pub fn size(&self) -> usize {
        self.atoms.len()
    }

    pub fn atoms(&self) -> &[Vec<f64>] {
        &self.atoms
    }

    pub fn gram(&self) -> &SymMatrix {
        &self.gram
    }

    pub fn kernel(&self) -> &Kernel {
        &self.kernel
    }

    /// The `j x j` operator `Σ^{-1/2} Uᵀ`.
    pub fn operator(&self) -> &Matrix {
        &self.operator
    }

    pub fn apply(&self, x: &[f64]) -> Result<Vector> {
        numerics::check_len(self.atoms[0].len(), x.len())?;
        Ok(&self.operator * self.kernel.cross(&self.atoms, x))
    }

    /// Applies the map to a cross-kernel vector whose leading entries are
    /// `κ(x, s_i)` for this map's atoms. Longer vectors (against a dictionary
    /// that has since grown) are truncated to the prefix.
    pub fn apply_cross(&self, cross: &Vector) -> Result<Vector> {
        let j = self.size();
        if cross.len() < j {
            return Err(Error::DimensionMismatch {
                expected: j,
                got: cross.len(),
            });
        }
        Ok(&self.operator * cross.rows(0, j))
    }

    /// `Q = P^{1/2}_{new} (P^{1/2}_{old})ᵀ = Σ_new^{-1/2} U_newᵀ K_cross U_old Σ_old^{-1/2}`,
    /// where the old atoms must be a prefix of this map's atoms. An empty old
    /// map gives a `j x 0` matrix.
    pub fn transition_from(&self, old: Option<&FeatureMap>) -> Result<Matrix> {
        let Some(old) = old else {
            return Ok(Matrix::zeros(self.size(), 0));
        };
        let k = old.size();
        if k > self.size() || self.kernel != old.kernel || self.atoms[..k] != old.atoms[..] {
            return Err(Error::input("old dictionary is not a prefix of the new dictionary"));
        }
        let cross = self.gram.as_matrix().columns(0, k);
        Ok(&self.operator * cross * old.operator.transpose())
    }

    /// `φ̃_j = P^{1/2}_{S(j)} Φ_{S(r)} β`, where `β` is indexed against the first `r` atoms.
    pub fn tilde_feature(&self, beta: &Vector) -> Result<Vector> {
        let r = beta.len();
        if r > self.size() {
            return Err(Error::input(format!(
                "coefficient vector of length {r} exceeds dictionary size {}",
                self.size()
            )));
        }
        let cross = self.gram.as_matrix().columns(0, r) * beta;
        Ok(&self.operator * cross)
    }

    /// `‖K_P − GᵀG‖₂` where `G` stacks `φ_j(p)` for the given points.
    pub fn spectral_error_certificate(&self, points: &[Vec<f64>]) -> Result<f64> {
        if points.is_empty() {
            return Ok(0.0);
        }
        let k = kernels::gram(&self.kernel, points)?;
        let mut g = Matrix::zeros(self.size(), points.len());
        for (c, p) in points.iter().enumerate() {
            g.set_column(c, &self.apply(p)?);
        }
        let diff = SymMatrix::symmetrize(k.as_matrix() - g.transpose() * g)?;
        numerics::spectral_norm(&diff)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::testing::*;
    use rand::Rng;

    fn gaussian() -> Kernel {
        Kernel::gaussian(1.0).unwrap()
    }

    fn uniform_points(seed: u64, n: usize, d: usize) -> Vec<Vec<f64>> {
        let mut r = rng(seed);
        (0..n)
            .map(|_| (0..d).map(|_| r.random_range(-1.0..1.0)).collect())
            .collect()
    }

    fn grow(dict: &mut Dictionary, points: &[Vec<f64>]) -> Vec<AldResult> {
        points
            .iter()
            .map(|x| {
                let res = dict.ald_test(x).unwrap();
                if !res.holds {
                    dict.add_atom(x, 0.0, &res).unwrap();
                }
                res
            })
            .collect()
    }

    #[test]
    fn empty_dictionary_ald() {
        let d = Dictionary::new(gaussian(), 0.5).unwrap();
        let res = d.ald_test(&[0.2, 0.1]).unwrap();
        assert_eq!(res.beta.len(), 0);
        assert_eq!(res.error, 1.0);
        assert!(!res.holds);
        let d = Dictionary::new(gaussian(), 1.0).unwrap();
        assert!(d.ald_test(&[0.2, 0.1]).unwrap().holds);
    }

    #[test]
    fn atom_is_exactly_dependent() {
        let mut d = Dictionary::new(gaussian(), 0.1).unwrap();
        let x = [0.3, -0.4];
        let res = d.push(&x, 1.0).unwrap();
        assert_eq!(res.error, 1.0);
        assert_eq!(d.gram().get(0, 0), 1.0);
        let again = d.ald_test(&x).unwrap();
        assert!(again.error.abs() < 1e-15);
        assert!(again.holds);
    }

    #[test]
    fn singleton_normal_equation() {
        let k = gaussian();
        let mut d = Dictionary::new(k, 0.1).unwrap();
        let x1 = [0.0, 0.0];
        let x = [0.5, 0.7];
        d.push(&x1, 0.0).unwrap();
        let c = k.eval(&x1, &x).unwrap();
        let res = d.ald_test(&x).unwrap();
        assert!((res.beta[0] - c).abs() < 1e-15);
        assert!((res.error - (1.0 - c * c)).abs() < 1e-15);
    }

    #[test]
    fn incremental_inverse_matches_fresh_inverse() {
        let mut d = Dictionary::new(gaussian(), 1.0).unwrap();
        for x in uniform_points(21, 10, 3) {
            d.push(&x, 0.0).unwrap();
        }
        let fresh = d.gram().as_matrix().clone().try_inverse().unwrap();
        assert!(numerics::relative_frobenius(d.gram_inv().as_matrix(), &fresh) <= 1e-8);
    }

    #[test]
    fn inverse_defect_stays_bounded_over_300_insertions() {
        let k = Kernel::gaussian(0.4).unwrap();
        let mut d = Dictionary::new(k, 0.0).unwrap();
        let mut r = rng(22);
        let mut inserted = 0;
        while inserted < 300 {
            let x: Vec<f64> = (0..4).map(|_| r.random_range(-1.0..1.0)).collect();
            let res = d.ald_test(&x).unwrap();
            // Skip near-duplicates so the Gram matrix stays well posed.
            if res.error < 1e-3 {
                continue;
            }
            d.add_atom(&x, 0.0, &res).unwrap();
            inserted += 1;
            assert!(d.inverse_defect() <= 1e-6 * d.len() as f64, "size {}", d.len());
        }
    }

    #[test]
    fn capacity_is_enforced() {
        let mut d = Dictionary::new(gaussian(), 0.1).unwrap().with_capacity(1).unwrap();
        d.push(&[0.0], 0.0).unwrap();
        assert!(d.is_full());
        assert!(matches!(d.push(&[1.0], 0.0), Err(Error::ResourceCap(_))));
    }

    #[test]
    fn dependent_atom_is_jittered_not_rejected() {
        let mut d = Dictionary::new(gaussian(), 0.0).unwrap();
        d.push(&[0.5], 0.0).unwrap();
        d.push(&[0.5], 0.0).unwrap();
        assert_eq!(d.len(), 2);
        assert!(d.gram_inv().is_finite());
    }

    #[test]
    fn ald_rejects_non_finite_input() {
        let d = Dictionary::new(gaussian(), 0.1).unwrap();
        assert!(matches!(d.ald_test(&[f64::NAN]), Err(Error::Input(_))));
    }

    #[test]
    fn single_atom_feature_map() {
        let mut d = Dictionary::new(gaussian(), 0.1).unwrap();
        d.push(&[1.0, 2.0], 0.0).unwrap();
        let fm = d.feature_map().unwrap();
        let phi = fm.apply(&[1.0, 2.0]).unwrap();
        assert_eq!(phi.len(), 1);
        assert!((phi[0].abs() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn feature_norm_equals_projection() {
        let mut d = Dictionary::new(gaussian(), 0.2).unwrap();
        grow(&mut d, &uniform_points(23, 40, 2));
        let fm = d.feature_map().unwrap();
        for x in uniform_points(24, 20, 2) {
            let phi = fm.apply(&x).unwrap();
            let k = d.cross(&x).unwrap();
            let oracle = k.dot(&numerics::solve_spd(d.gram(), &k).unwrap());
            assert!((phi.norm_squared() - oracle).abs() < 1e-8);
            assert!(1.0 - phi.norm_squared() >= -1e-12);
        }
    }

    #[test]
    fn mapped_atoms_reproduce_gram() {
        let mut d = Dictionary::new(gaussian(), 0.05).unwrap();
        grow(&mut d, &uniform_points(25, 80, 2));
        let fm = d.feature_map().unwrap();
        let n = d.len();
        for i in 0..n {
            let pi = fm.apply(&d.atoms()[i]).unwrap();
            for j in 0..n {
                let pj = fm.apply(&d.atoms()[j]).unwrap();
                assert!((pi.dot(&pj) - d.gram().get(i, j)).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn pointwise_error_is_bounded_by_threshold() {
        let alpha = 0.05;
        let mut d = Dictionary::new(gaussian(), alpha).unwrap();
        grow(&mut d, &uniform_points(26, 100, 2));
        let fm = d.feature_map().unwrap();
        for x in uniform_points(27, 200, 2) {
            let res = d.ald_test(&x).unwrap();
            if res.holds {
                let gap = 1.0 - fm.apply(&x).unwrap().norm_squared();
                assert!(gap >= -1e-12 && gap <= alpha + 1e-9);
            }
        }
    }

    #[test]
    fn far_point_maps_to_zero() {
        let mut d = Dictionary::new(Kernel::gaussian(0.1).unwrap(), 0.1).unwrap();
        d.push(&[0.0, 0.0], 0.0).unwrap();
        d.push(&[0.5, 0.0], 0.0).unwrap();
        let fm = d.feature_map().unwrap();
        assert!(fm.apply(&[50.0, 50.0]).unwrap().norm() < 1e-12);
    }

    #[test]
    fn transition_operator_identity_and_orthonormality() {
        let mut d = Dictionary::new(gaussian(), 0.05).unwrap();
        let points = uniform_points(28, 60, 2);
        let mut maps = Vec::new();
        for x in &points {
            let res = d.ald_test(x).unwrap();
            if !res.holds {
                d.add_atom(x, 0.0, &res).unwrap();
                maps.push(d.feature_map().unwrap());
            }
        }
        let last = maps.last().unwrap();
        let q = last.transition_from(Some(last)).unwrap();
        assert!((q - Matrix::identity(last.size(), last.size())).norm() < 1e-8);

        let mut r = rng(29);
        for new in 1..maps.len() {
            for old in 0..new {
                let q = maps[new].transition_from(Some(&maps[old])).unwrap();
                assert!(numerics::orthonormality_defect(&q) <= 1e-8);
                let w = random_vector(&mut r, maps[old].size());
                let back = q.transpose() * (&q * &w);
                assert!((back - &w).norm() < 1e-8);
            }
        }
    }

    #[test]
    fn transition_rejects_non_prefix() {
        let a = FeatureMap::from_atoms(gaussian(), vec![vec![0.0], vec![1.0]]).unwrap();
        let b = FeatureMap::from_atoms(gaussian(), vec![vec![1.0]]).unwrap();
        assert!(a.transition_from(Some(&b)).is_err());
        assert_eq!(a.transition_from(None).unwrap().shape(), (2, 0));
    }

    #[test]
    fn tilde_feature_cases() {
        let mut d = Dictionary::new(gaussian(), 0.05).unwrap();
        grow(&mut d, &uniform_points(30, 50, 2));
        let fm = d.feature_map().unwrap();
        let j = fm.size();
        // indicator on an atom reproduces that atom's feature
        let mut e = Vector::zeros(j);
        e[2] = 1.0;
        let t = fm.tilde_feature(&e).unwrap();
        assert!((t - fm.apply(&d.atoms()[2]).unwrap()).norm() < 1e-10);

        // r = j with a duplicate atom (zero ALD error) reproduces φ_j(x)
        let x = d.atoms()[1].clone();
        let res = d.ald_test(&x).unwrap();
        let t = fm.tilde_feature(&res.beta).unwrap();
        assert!((t - fm.apply(&x).unwrap()).norm() < 1e-8);

        // random history against an older prefix: explicit RKHS inner products
        let r_size = j / 2;
        let mut r = rng(31);
        let beta = random_vector(&mut r, r_size);
        let t = fm.tilde_feature(&beta).unwrap();
        // ⟨φ̃, φ_j(s_i)⟩ must equal ⟨Φ_r β, P κ(s_i, ·)⟩ = Σ_k β_k κ(s_k, s_i)
        for i in 0..j {
            let phi_i = fm.apply(&d.atoms()[i]).unwrap();
            let oracle: f64 = (0..r_size).map(|k| beta[k] * d.gram().get(k, i)).sum();
            assert!((t.dot(&phi_i) - oracle).abs() < 1e-8);
        }
        // and ‖φ̃‖² = βᵀ K_r β, since Φ_r β already lies in the span
        let norm_oracle = beta.dot(&(d.gram().leading(r_size).mul_vec(&beta)));
        assert!((t.norm_squared() - norm_oracle).abs() < 1e-8);

        assert!(fm.tilde_feature(&Vector::zeros(j + 1)).is_err());
    }

    #[test]
    fn certificate_cases() {
        let alpha = 0.02;
        let mut d = Dictionary::new(gaussian(), alpha).unwrap();
        grow(&mut d, &uniform_points(32, 80, 2));
        let fm = d.feature_map().unwrap();
        assert!(fm.spectral_error_certificate(d.atoms()).unwrap() < 1e-8);

        let held: Vec<Vec<f64>> = uniform_points(33, 400, 2)
            .into_iter()
            .filter(|x| d.ald_test(x).unwrap().holds)
            .take(50)
            .collect();
        assert_eq!(held.len(), 50);
        let one = fm.spectral_error_certificate(&held[..1]).unwrap();
        let err = d.ald_test(&held[0]).unwrap().error;
        assert!((one - err).abs() < 1e-10 && one <= alpha + 1e-12);
        let cert = fm.spectral_error_certificate(&held).unwrap();
        assert!(cert <= 50.0 * alpha);
    }

    #[test]
    fn snapshot_round_trip() {
        let mut d = Dictionary::new(gaussian(), 0.1).unwrap().with_capacity(40).unwrap();
        grow(&mut d, &uniform_points(34, 30, 3));
        let json = d.to_json().unwrap();
        let back = Dictionary::from_json(&json).unwrap();
        assert_eq!(back.snapshot(), d.snapshot());
        assert!(numerics::relative_frobenius(back.gram_inv().as_matrix(), d.gram_inv().as_matrix()) < 1e-8);

        let mut snap = d.snapshot();
        snap.atoms[0][0] += 0.5;
        assert!(Dictionary::from_snapshot(snap).is_err());
    }

    #[test]
    fn growth_is_sublinear_on_a_smooth_stream() {
        let mut d = Dictionary::new(gaussian(), 0.01).unwrap();
        let points = uniform_points(35, 2000, 2);
        grow(&mut d, &points[..1000]);
        let at_t = d.len();
        grow(&mut d, &points[1000..]);
        let at_2t = d.len();
        assert!(at_2t as f64 <= 1.25 * at_t as f64, "{at_t} -> {at_2t}");
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(32))]

            #[test]
            fn ald_error_is_nonnegative_and_zero_on_atoms(seed in 0u64..10_000, bw in 0.3f64..3.0) {
                let mut d = Dictionary::new(Kernel::gaussian(bw).unwrap(), 0.05).unwrap();
                let points = uniform_points(seed, 40, 3);
                for res in grow(&mut d, &points) {
                    prop_assert!(res.error >= 0.0);
                }
                for a in d.atoms().to_vec() {
                    prop_assert!(d.ald_test(&a).unwrap().error < 1e-9);
                }
            }

            #[test]
            fn transitions_are_column_orthonormal(seed in 0u64..10_000) {
                let mut d = Dictionary::new(Kernel::gaussian(0.8).unwrap(), 0.03).unwrap();
                let mut prev: Option<FeatureMap> = None;
                for x in uniform_points(seed, 60, 2) {
                    let res = d.ald_test(&x).unwrap();
                    if !res.holds {
                        d.add_atom(&x, 0.0, &res).unwrap();
                        let fm = d.feature_map().unwrap();
                        let q = fm.transition_from(prev.as_ref()).unwrap();
                        prop_assert!(numerics::orthonormality_defect(&q) <= 1e-8);
                        prev = Some(fm);
                    }
                }
            }
        }
    }
}
