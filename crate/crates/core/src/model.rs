//! Coefficient models for the affine recursion `X_k = A_k X_{k-1} + B_k`.
//!
//! Scaling convention: [`CoefficientPair::h`] always holds the *unscaled*
//! summed matrix (`sum_i H_i` for `Symm`, `sum_i a_i a_i^T` for the rank-one
//! models), and the factor `xi = eta / b` is carried separately, so that
//! `A = I - xi * H` for every model.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{config, Error, Result};
use crate::linalg::Mat;

/// Largest supported dimension.
pub const MAX_DIM: usize = 32;

/// Tolerance on the total mass of a finite mixture.
pub const PROB_SUM_TOL: f64 = 1e-12;

/// Finite-support law: atoms with probabilities.
#[derive(Clone, Debug, PartialEq)]
pub struct Mixture<T> {
    atoms: Vec<T>,
    probs: Vec<f64>,
    cumulative: Vec<f64>,
}

impl<T> Mixture<T> {
    pub fn new(atoms: Vec<T>, probs: Vec<f64>) -> Result<Self> {
        if atoms.is_empty() {
            return config("mixture needs at least one atom");
        }
        if atoms.len() != probs.len() {
            return config(format!(
                "mixture has {} atoms but {} probabilities",
                atoms.len(),
                probs.len()
            ));
        }
        if probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return config("mixture probabilities must be finite and non-negative");
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > PROB_SUM_TOL {
            return config(format!("mixture probabilities sum to {total}, expected 1"));
        }
        let mut acc = 0.0;
        let cumulative = probs
            .iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect();
        Ok(Mixture { atoms, probs, cumulative })
    }

    /// Point mass.
    pub fn single(atom: T) -> Self {
        Mixture { atoms: vec![atom], probs: vec![1.0], cumulative: vec![1.0] }
    }

    pub fn atoms(&self) -> &[T] {
        &self.atoms
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Point masses consume no randomness.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> &T {
        if self.atoms.len() == 1 {
            return &self.atoms[0];
        }
        let u: f64 = rng.random();
        let idx = self.cumulative.partition_point(|&c| c <= u);
        &self.atoms[idx.min(self.atoms.len() - 1)]
    }
}

/// Law of each summand `H_i` in the `Symm` model.
#[derive(Clone, Debug, PartialEq)]
pub enum SymmLaw {
    /// `mean * I + scale * G`, with `G` from the Gaussian orthogonal ensemble
    /// (diagonal `N(0,1)`, off-diagonal `N(0,1/2)`).
    Goe { mean: f64, scale: f64 },
    Deterministic(Mat),
    Mixture(Mixture<Mat>),
}

/// Law of `B` in the `Symm` model.
#[derive(Clone, Debug, PartialEq)]
pub enum BLaw {
    /// Standard Gaussian vector.
    Gaussian,
    Mixture(Mixture<Vec<f64>>),
}

impl BLaw {
    pub fn constant(v: Vec<f64>) -> Self {
        BLaw::Mixture(Mixture::single(v))
    }
}

/// Law of the regressors `a_i` in the `Rank1` model.
#[derive(Clone, Debug, PartialEq)]
pub enum VectorLaw {
    Gaussian,
    Mixture(Mixture<Vec<f64>>),
}

/// Law of the responses `y_i` in the `Rank1` model.
#[derive(Clone, Debug, PartialEq)]
pub enum ScalarLaw {
    Gaussian,
    Mixture(Mixture<f64>),
}

#[derive(Clone, Debug, PartialEq)]
pub enum ModelKind {
    /// `A = I - xi * sum_i H_i` with i.i.d. symmetric `H_i`, arbitrary `B`.
    Symm { h_law: SymmLaw, b_law: BLaw },
    /// `A = I - xi * sum_i a_i a_i^T`, `B = xi * sum_i a_i y_i`.
    Rank1 { a_law: VectorLaw, y_law: ScalarLaw },
    /// `Rank1` with `a_i ~ N(0, I)` independent of `y_i ~ N(0, 1)`.
    Rank1Gauss,
}

impl ModelKind {
    pub fn name(&self) -> &'static str {
        match self {
            ModelKind::Symm { .. } => "symm",
            ModelKind::Rank1 { .. } => "rank1",
            ModelKind::Rank1Gauss => "rank1gauss",
        }
    }
}

/// One draw `(A, B)` together with the unscaled `H` such that `A = I - xi H`.
#[derive(Clone, Debug, PartialEq)]
pub struct CoefficientPair {
    pub a: Mat,
    pub b: Vec<f64>,
    pub h: Mat,
}

impl CoefficientPair {
    pub fn zeros(d: usize) -> Self {
        CoefficientPair { a: Mat::zeros(d), b: vec![0.0; d], h: Mat::zeros(d) }
    }

    /// Pair with a fixed `A` and `B`; `h` is set so that `A = I - xi h` with `xi = 1`.
    pub fn fixed(a: Mat, b: Vec<f64>) -> Self {
        let mut h = Mat::identity(a.dim());
        h.add_scaled(-1.0, &a);
        CoefficientPair { a, b, h }
    }
}

/// Model, dimension, batch size and step size.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelSpec {
    kind: ModelKind,
    d: usize,
    b: usize,
    eta: f64,
}

impl ModelSpec {
    pub fn new(kind: ModelKind, d: usize, b: usize, eta: f64) -> Result<Self> {
        if d == 0 || d > MAX_DIM {
            return config(format!("dimension d must be in 1..={MAX_DIM}, got {d}"));
        }
        if b == 0 {
            return config("batch size b must be at least 1");
        }
        if !(eta.is_finite() && eta > 0.0) {
            return config(format!("step size eta must be positive, got {eta}"));
        }
        validate_kind(&kind, d)?;
        Ok(ModelSpec { kind, d, b, eta })
    }

    pub fn rank1_gauss(d: usize, b: usize, eta: f64) -> Result<Self> {
        Self::new(ModelKind::Rank1Gauss, d, b, eta)
    }

    /// `Symm` with a deterministic `H_i = m` and fixed `B`.
    pub fn deterministic(m: Mat, b_vec: Vec<f64>, b: usize, eta: f64) -> Result<Self> {
        let d = m.dim();
        Self::new(
            ModelKind::Symm { h_law: SymmLaw::Deterministic(m), b_law: BLaw::constant(b_vec) },
            d,
            b,
            eta,
        )
    }

    pub fn kind(&self) -> &ModelKind {
        &self.kind
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn b(&self) -> usize {
        self.b
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    /// `xi = eta / b`, always derived.
    pub fn xi(&self) -> f64 {
        self.eta / self.b as f64
    }

    pub fn with_eta(&self, eta: f64) -> Result<Self> {
        Self::new(self.kind.clone(), self.d, self.b, eta)
    }

    pub fn with_b(&self, b: usize) -> Result<Self> {
        Self::new(self.kind.clone(), self.d, b, self.eta)
    }

    /// Whether the law of `H` is invariant under orthogonal conjugation.
    ///
    /// Finite laws count only when every atom is a multiple of the identity.
    pub fn is_rotation_invariant(&self) -> bool {
        if self.d == 1 {
            return true;
        }
        match &self.kind {
            ModelKind::Rank1Gauss => true,
            ModelKind::Rank1 { a_law, .. } => matches!(a_law, VectorLaw::Gaussian),
            ModelKind::Symm { h_law, .. } => match h_law {
                SymmLaw::Goe { .. } => true,
                SymmLaw::Deterministic(m) => m.is_scalar_multiple_of_identity(),
                SymmLaw::Mixture(mix) => mix.atoms().iter().all(Mat::is_scalar_multiple_of_identity),
            },
        }
    }

    /// Exact law of the summed `H` when it is finite with at most `max_atoms`
    /// atoms (atoms are not merged).
    pub fn h_support(&self, max_atoms: usize) -> Option<Vec<(f64, Mat)>> {
        let atoms: Vec<(f64, Mat)> = match &self.kind {
            ModelKind::Symm { h_law: SymmLaw::Deterministic(m), .. } => vec![(1.0, m.clone())],
            ModelKind::Symm { h_law: SymmLaw::Mixture(mix), .. } => {
                mix.probs().iter().copied().zip(mix.atoms().iter().cloned()).collect()
            }
            ModelKind::Rank1 { a_law: VectorLaw::Mixture(mix), .. } => mix
                .probs()
                .iter()
                .copied()
                .zip(mix.atoms().iter().map(|a| outer_product_sum(std::slice::from_ref(a))))
                .collect(),
            _ => return None,
        };
        let count = (atoms.len() as f64).powi(self.b as i32);
        if count > max_atoms as f64 {
            return None;
        }
        let mut support = vec![(1.0, Mat::zeros(self.d))];
        for _ in 0..self.b {
            let mut next = Vec::with_capacity(support.len() * atoms.len());
            for (p, s) in &support {
                for (q, m) in &atoms {
                    let mut t = s.clone();
                    t.add_scaled(1.0, m);
                    next.push((p * q, t));
                }
            }
            support = next;
        }
        Some(support)
    }

    /// One i.i.d. coefficient pair.
    pub fn sample_pair<R: Rng + ?Sized>(&self, rng: &mut R) -> CoefficientPair {
        let mut pair = CoefficientPair::zeros(self.d);
        self.sample_into(rng, &mut pair);
        pair
    }

    /// Allocation-free variant of [`sample_pair`](Self::sample_pair).
    ///
    /// Draw order per summand: `H_i` entries row-major over the upper
    /// triangle (Symm), or `a_i` components then `y_i` (rank-one); for Symm
    /// `B` is drawn last.
    pub fn sample_into<R: Rng + ?Sized>(&self, rng: &mut R, pair: &mut CoefficientPair) {
        let d = self.d;
        let xi = self.xi();
        pair.h.fill(0.0);
        match &self.kind {
            ModelKind::Symm { h_law, b_law } => {
                for _ in 0..self.b {
                    add_symm_draw(h_law, d, rng, &mut pair.h);
                }
                match b_law {
                    BLaw::Gaussian => pair.b.iter_mut().for_each(|x| *x = rng.sample(StandardNormal)),
                    BLaw::Mixture(mix) => pair.b.copy_from_slice(mix.sample(rng)),
                }
            }
            ModelKind::Rank1 { .. } | ModelKind::Rank1Gauss => {
                let mut a = [0.0f64; MAX_DIM];
                pair.b.iter_mut().for_each(|x| *x = 0.0);
                for _ in 0..self.b {
                    let y = self.draw_regressor(rng, &mut a[..d]);
                    add_outer(&mut pair.h, &a[..d]);
                    for (bk, ak) in pair.b.iter_mut().zip(&a[..d]) {
                        *bk += ak * y;
                    }
                }
                pair.b.iter_mut().for_each(|x| *x *= xi);
            }
        }
        let (av, hv) = (pair.a.as_mut_slice(), pair.h.as_slice());
        for i in 0..d {
            for j in 0..d {
                let delta = if i == j { 1.0 } else { 0.0 };
                av[i * d + j] = delta - xi * hv[i * d + j];
            }
        }
    }

    /// Unscaled `H = sum_i a_i a_i^T` for the rank-one models.
    pub fn sample_h_raw<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Mat> {
        match self.kind {
            ModelKind::Rank1 { .. } | ModelKind::Rank1Gauss => {
                let mut h = Mat::zeros(self.d);
                self.sample_h_into(rng, &mut h);
                Ok(h)
            }
            ModelKind::Symm { .. } => Err(Error::Unsupported(
                "sample_h_raw is defined for the rank-one models only".into(),
            )),
        }
    }

    /// Draws only the unscaled summed `H`, for any variant (no `B` or `y` draws).
    pub fn sample_h_into<R: Rng + ?Sized>(&self, rng: &mut R, h: &mut Mat) {
        h.fill(0.0);
        match &self.kind {
            ModelKind::Symm { h_law, .. } => {
                for _ in 0..self.b {
                    add_symm_draw(h_law, self.d, rng, h);
                }
            }
            ModelKind::Rank1 { .. } | ModelKind::Rank1Gauss => {
                let mut a = [0.0f64; MAX_DIM];
                for _ in 0..self.b {
                    self.draw_regressor(rng, &mut a[..self.d]);
                    add_outer(h, &a[..self.d]);
                }
            }
        }
    }

    /// Fills `a` with one regressor and returns the matching response.
    fn draw_regressor<R: Rng + ?Sized>(&self, rng: &mut R, a: &mut [f64]) -> f64 {
        match &self.kind {
            ModelKind::Rank1Gauss => {
                a.iter_mut().for_each(|x| *x = rng.sample(StandardNormal));
                rng.sample(StandardNormal)
            }
            ModelKind::Rank1 { a_law, y_law } => {
                match a_law {
                    VectorLaw::Gaussian => a.iter_mut().for_each(|x| *x = rng.sample(StandardNormal)),
                    VectorLaw::Mixture(mix) => a.copy_from_slice(mix.sample(rng)),
                }
                match y_law {
                    ScalarLaw::Gaussian => rng.sample(StandardNormal),
                    ScalarLaw::Mixture(mix) => *mix.sample(rng),
                }
            }
            ModelKind::Symm { .. } => unreachable!("regressors exist only in rank-one models"),
        }
    }
}

fn add_symm_draw<R: Rng + ?Sized>(law: &SymmLaw, d: usize, rng: &mut R, h: &mut Mat) {
    match law {
        SymmLaw::Goe { mean, scale } => {
            let off = std::f64::consts::FRAC_1_SQRT_2;
            for i in 0..d {
                for j in i..d {
                    let z: f64 = rng.sample(StandardNormal);
                    if i == j {
                        h.set(i, i, h.get(i, i) + mean + scale * z);
                    } else {
                        let v = scale * off * z;
                        h.set(i, j, h.get(i, j) + v);
                        h.set(j, i, h.get(j, i) + v);
                    }
                }
            }
        }
        SymmLaw::Deterministic(m) => h.add_scaled(1.0, m),
        SymmLaw::Mixture(mix) => h.add_scaled(1.0, mix.sample(rng)),
    }
}

fn add_outer(h: &mut Mat, a: &[f64]) {
    let d = a.len();
    let hv = h.as_mut_slice();
    for i in 0..d {
        for j in 0..d {
            hv[i * d + j] += a[i] * a[j];
        }
    }
}

/// `sum_i a_i a_i^T` for the given vectors.
pub fn outer_product_sum(vectors: &[Vec<f64>]) -> Mat {
    let d = vectors.first().map_or(0, Vec::len);
    let mut h = Mat::zeros(d);
    for a in vectors {
        add_outer(&mut h, a);
    }
    h
}

fn validate_kind(kind: &ModelKind, d: usize) -> Result<()> {
    let check_mat = |m: &Mat| -> Result<()> {
        if m.dim() != d {
            return config(format!("matrix is {0}x{0}, model dimension is {d}", m.dim()));
        }
        if !m.is_symmetric() {
            return config("H-law matrices must be symmetric");
        }
        if !m.is_finite() {
            return config("H-law matrices must be finite");
        }
        Ok(())
    };
    let check_vec = |v: &Vec<f64>| -> Result<()> {
        if v.len() != d {
            return config(format!("vector has length {}, model dimension is {d}", v.len()));
        }
        Ok(())
    };
    match kind {
        ModelKind::Symm { h_law, b_law } => {
            match h_law {
                SymmLaw::Goe { mean, scale } => {
                    if !(mean.is_finite() && scale.is_finite() && *scale >= 0.0) {
                        return config("GOE law needs finite mean and non-negative scale");
                    }
                }
                SymmLaw::Deterministic(m) => check_mat(m)?,
                SymmLaw::Mixture(mix) => mix.atoms().iter().try_for_each(check_mat)?,
            }
            if let BLaw::Mixture(mix) = b_law {
                mix.atoms().iter().try_for_each(check_vec)?;
            }
        }
        ModelKind::Rank1 { a_law, .. } => {
            if let VectorLaw::Mixture(mix) = a_law {
                mix.atoms().iter().try_for_each(check_vec)?;
            }
        }
        ModelKind::Rank1Gauss => {}
    }
    Ok(())
}

/// Law description read from a TOML file.
///
/// ```toml
/// [h_law]
/// kind = "mixture"              # "goe" | "deterministic" | "mixture"
/// matrices = [[[0.5]], [[2.5]]] # row lists
/// probs = [0.5, 0.5]
///
/// [b_law]
/// kind = "mixture"              # "gaussian" | "mixture"
/// vectors = [[1.0]]
/// probs = [1.0]
/// ```
///
/// Rank-one laws use `[a_law]` (vector law) and `[y_law]`
/// (`kind = "gaussian"` or `kind = "mixture"` with `values`/`probs`).
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LawFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h_law: Option<SymmLawSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b_law: Option<VectorLawSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a_law: Option<VectorLawSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y_law: Option<ScalarLawSpec>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SymmLawSpec {
    Goe {
        #[serde(default)]
        mean: f64,
        #[serde(default = "one")]
        scale: f64,
    },
    Deterministic { matrix: Vec<Vec<f64>> },
    Mixture { matrices: Vec<Vec<Vec<f64>>>, probs: Vec<f64> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum VectorLawSpec {
    Gaussian,
    Mixture { vectors: Vec<Vec<f64>>, probs: Vec<f64> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ScalarLawSpec {
    Gaussian,
    Mixture { values: Vec<f64>, probs: Vec<f64> },
}

fn one() -> f64 {
    1.0
}

impl LawFile {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(format!("law file: {e}")))
    }

    pub fn read(path: &std::path::Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("law file serializes")
    }

    /// `Symm` model kind; `B` defaults to a standard Gaussian vector.
    pub fn symm_kind(&self) -> Result<ModelKind> {
        let h_law = match self.h_law.as_ref() {
            None => return config("law file has no [h_law] section"),
            Some(SymmLawSpec::Goe { mean, scale }) => SymmLaw::Goe { mean: *mean, scale: *scale },
            Some(SymmLawSpec::Deterministic { matrix }) => SymmLaw::Deterministic(Mat::from_rows(matrix)?),
            Some(SymmLawSpec::Mixture { matrices, probs }) => SymmLaw::Mixture(Mixture::new(
                matrices.iter().map(|m| Mat::from_rows(m)).collect::<Result<_>>()?,
                probs.clone(),
            )?),
        };
        let b_law = match self.b_law.as_ref() {
            None | Some(VectorLawSpec::Gaussian) => BLaw::Gaussian,
            Some(VectorLawSpec::Mixture { vectors, probs }) => {
                BLaw::Mixture(Mixture::new(vectors.clone(), probs.clone())?)
            }
        };
        Ok(ModelKind::Symm { h_law, b_law })
    }

    /// `Rank1` model kind; missing laws default to Gaussian.
    pub fn rank1_kind(&self) -> Result<ModelKind> {
        let a_law = match self.a_law.as_ref() {
            None | Some(VectorLawSpec::Gaussian) => VectorLaw::Gaussian,
            Some(VectorLawSpec::Mixture { vectors, probs }) => {
                VectorLaw::Mixture(Mixture::new(vectors.clone(), probs.clone())?)
            }
        };
        let y_law = match self.y_law.as_ref() {
            None | Some(ScalarLawSpec::Gaussian) => ScalarLaw::Gaussian,
            Some(ScalarLawSpec::Mixture { values, probs }) => {
                ScalarLaw::Mixture(Mixture::new(values.clone(), probs.clone())?)
            }
        };
        Ok(ModelKind::Rank1 { a_law, y_law })
    }
}

/// The d=1 finite mixture `H in {lo, hi}` with equal weights and `B = 1`.
pub fn two_point_scalar(lo: f64, hi: f64, eta: f64) -> Result<ModelSpec> {
    let mix = Mixture::new(vec![Mat::scalar(1, lo), Mat::scalar(1, hi)], vec![0.5, 0.5])?;
    ModelSpec::new(
        ModelKind::Symm { h_law: SymmLaw::Mixture(mix), b_law: BLaw::constant(vec![1.0]) },
        1,
        1,
        eta,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::symmetric_eigenvalues;
    use crate::mc::McConfig;

    #[test]
    fn rank1gauss_construction_identity() {
        let spec = ModelSpec::rank1_gauss(2, 3, 0.6).unwrap();
        assert_eq!(spec.xi(), 0.6 / 3.0);
        let mut rng = McConfig::new(17).stream(0);
        for _ in 0..100 {
            let p = spec.sample_pair(&mut rng);
            assert!(p.a.is_symmetric() && p.h.is_symmetric());
            for i in 0..2 {
                for j in 0..2 {
                    let id = if i == j { 1.0 } else { 0.0 };
                    assert!((p.a.get(i, j) + 0.2 * p.h.get(i, j) - id).abs() <= 4.0 * f64::EPSILON * (1.0 + p.h.get(i, j).abs()));
                }
            }
        }
    }

    #[test]
    fn deterministic_identity_gives_half_identity() {
        let spec = ModelSpec::deterministic(Mat::identity(3), vec![0.0; 3], 1, 0.5).unwrap();
        let p = spec.sample_pair(&mut McConfig::new(1).stream(0));
        assert_eq!(p.a, Mat::scalar(3, 0.5));
    }

    #[test]
    fn chi_square_diagonal_moments() {
        let spec = ModelSpec::rank1_gauss(2, 8, 0.1).unwrap();
        let mut rng = McConfig::new(3).stream(0);
        let n = 100_000;
        let xs: Vec<f64> = (0..n).map(|_| spec.sample_h_raw(&mut rng).unwrap().get(0, 0)).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        // chi2(8): mean 8 (sd of mean 4/sqrt(n)), variance 16
        assert!((mean - 8.0).abs() < 4.0 * 4.0 / (n as f64).sqrt(), "mean {mean}");
        assert!((var - 16.0).abs() < 0.5, "var {var}");
    }

    #[test]
    fn outer_products() {
        assert_eq!(outer_product_sum(&[vec![2.0]]), Mat::scalar(1, 4.0));
        let h = outer_product_sum(&[vec![1.0, 1.0]]);
        assert_eq!(h.to_rows(), vec![vec![1.0, 1.0], vec![1.0, 1.0]]);
        assert_eq!(h.determinant(), 0.0);
        let mix = Mixture::single(vec![2.0]);
        let spec = ModelSpec::new(
            ModelKind::Rank1 { a_law: VectorLaw::Mixture(mix), y_law: ScalarLaw::Gaussian },
            1,
            1,
            0.1,
        )
        .unwrap();
        assert_eq!(spec.sample_h_raw(&mut McConfig::new(0).stream(0)).unwrap(), Mat::scalar(1, 4.0));
    }

    #[test]
    fn sample_h_raw_rejects_symm() {
        let spec = two_point_scalar(0.5, 2.5, 1.0).unwrap();
        assert!(matches!(spec.sample_h_raw(&mut McConfig::new(0).stream(0)), Err(Error::Unsupported(_))));
    }

    #[test]
    fn rank_one_h_is_psd() {
        let spec = ModelSpec::rank1_gauss(4, 2, 0.3).unwrap();
        let mut rng = McConfig::new(99).stream(0);
        for _ in 0..500 {
            let h = spec.sample_pair(&mut rng).h;
            assert!(symmetric_eigenvalues(&h).into_iter().all(|l| l >= -1e-12));
        }
    }

    #[test]
    fn same_seed_same_sequence() {
        let spec = ModelSpec::rank1_gauss(3, 4, 0.2).unwrap();
        let draw = |seed| {
            let mut rng = McConfig::new(seed).stream(2);
            (0..20).map(|_| spec.sample_pair(&mut rng)).collect::<Vec<_>>()
        };
        assert_eq!(draw(5), draw(5));
        assert_ne!(draw(5), draw(6));
    }

    #[test]
    fn invalid_specs() {
        assert!(ModelSpec::rank1_gauss(0, 1, 0.1).is_err());
        assert!(ModelSpec::rank1_gauss(2, 0, 0.1).is_err());
        assert!(ModelSpec::rank1_gauss(2, 1, 0.0).is_err());
        assert!(Mixture::new(vec![1.0, 2.0], vec![0.5, 0.6]).is_err());
        assert!(Mixture::new(vec![1.0, 2.0], vec![0.5, 0.5 + 1e-13]).is_ok());
        let asym = Mat::from_rows(&[vec![1.0, 2.0], vec![0.0, 1.0]]).unwrap();
        assert!(ModelSpec::deterministic(asym, vec![0.0; 2], 1, 0.1).is_err());
        assert!(ModelSpec::deterministic(Mat::identity(2), vec![0.0; 3], 1, 0.1).is_err());
    }

    #[test]
    fn finite_support_enumeration() {
        let spec = two_point_scalar(0.5, 2.5, 1.0).unwrap().with_b(2).unwrap();
        let support = spec.h_support(1 << 10).unwrap();
        assert_eq!(support.len(), 4);
        let total: f64 = support.iter().map(|(p, _)| p).sum();
        assert!((total - 1.0).abs() < 1e-15);
        let mean: f64 = support.iter().map(|(p, m)| p * m.get(0, 0)).sum();
        assert!((mean - 3.0).abs() < 1e-12);
        assert!(ModelSpec::rank1_gauss(2, 2, 0.1).unwrap().h_support(100).is_none());
    }

    #[test]
    fn law_file_round_trip() {
        let text = r#"
[h_law]
kind = "mixture"
matrices = [[[0.5]], [[2.5]]]
probs = [0.5, 0.5]

[b_law]
kind = "mixture"
vectors = [[1.0]]
probs = [1.0]
"#;
        let law = LawFile::parse(text).unwrap();
        let kind = law.symm_kind().unwrap();
        let spec = ModelSpec::new(kind, 1, 1, 1.0).unwrap();
        assert_eq!(spec, two_point_scalar(0.5, 2.5, 1.0).unwrap());
        assert_eq!(LawFile::parse(&law.to_toml()).unwrap(), law);
        assert!(LawFile::parse("[h_law]\nkind = \"mixture\"\nmatrices = [[[1.0]]]\nprobs = [0.9]").unwrap().symm_kind().is_err());
        assert!(LawFile::parse("[h_law]\nkind = \"bogus\"").is_err());
    }

    #[test]
    fn rotation_invariance_flags() {
        assert!(ModelSpec::rank1_gauss(3, 2, 0.1).unwrap().is_rotation_invariant());
        assert!(two_point_scalar(0.5, 2.5, 1.0).unwrap().is_rotation_invariant());
        let diag = Mat::from_rows(&[vec![1.0, 0.0], vec![0.0, 2.0]]).unwrap();
        assert!(!ModelSpec::deterministic(diag, vec![0.0; 2], 1, 0.1).unwrap().is_rotation_invariant());
        assert!(ModelSpec::deterministic(Mat::scalar(2, 3.0), vec![0.0; 2], 1, 0.1).unwrap().is_rotation_invariant());
    }
}
