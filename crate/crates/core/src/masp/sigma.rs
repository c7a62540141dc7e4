use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numcore::Matrix;

/// Square, exactly symmetric matrix with entries in `[0, 1]`.
///
/// The only ways to obtain one are [`project_sigma`] and the constructors
/// below, all of which establish both invariants.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Matrix", into = "Matrix")]
pub struct SimilarityMatrix(Matrix);

impl SimilarityMatrix {
    pub fn identity(n: usize) -> Self {
        SimilarityMatrix(Matrix::identity(n))
    }

    /// Identity plus uniform `[0, noise]` off-diagonal entries, projected.
    pub fn near_identity<R: Rng + ?Sized>(n: usize, noise: f64, rng: &mut R) -> Self {
        let mut m = Matrix::identity(n);
        for r in 0..n {
            for c in 0..n {
                if r != c {
                    m.set(r, c, rng.gen_range(0.0..=noise));
                }
            }
        }
        project_sigma(&m).expect("square by construction")
    }

    pub fn size(&self) -> usize {
        self.0.rows()
    }

    pub fn as_matrix(&self) -> &Matrix {
        &self.0
    }

    pub fn into_matrix(self) -> Matrix {
        self.0
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.0.get(r, c)
    }

    pub fn stats(&self) -> SigmaStats {
        let n = self.size();
        let mut off = 0.0;
        let mut max: f64 = 0.0;
        for r in 0..n {
            for c in 0..n {
                let v = self.0.get(r, c);
                max = max.max(v);
                if r != c {
                    off += v;
                }
            }
        }
        let pairs = n * n.saturating_sub(1);
        let mean_offdiag = if pairs > 0 { off / pairs as f64 } else { 0.0 };
        let row_entropy = if n > 0 {
            let (neg_entropy, _) = row_neg_entropy(&self.0, DEFAULT_NORM_OFFSET);
            -neg_entropy / n as f64
        } else {
            0.0
        };
        SigmaStats {
            mean_offdiag,
            max,
            row_entropy,
        }
    }
}

impl TryFrom<Matrix> for SimilarityMatrix {
    type Error = Error;

    fn try_from(m: Matrix) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::shape("SimilarityMatrix", "square matrix", format!("{}x{}", m.rows(), m.cols())));
        }
        if m.asymmetry() > 1e-12 {
            return Err(Error::Validation(format!(
                "similarity matrix is not symmetric (asymmetry {})",
                m.asymmetry()
            )));
        }
        if m.as_slice().iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::Validation("similarity entries must lie in [0, 1]".into()));
        }
        Ok(SimilarityMatrix(m))
    }
}

impl From<SimilarityMatrix> for Matrix {
    fn from(s: SimilarityMatrix) -> Matrix {
        s.0
    }
}

/// Summary statistics logged per episode.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SigmaStats {
    pub mean_offdiag: f64,
    pub max: f64,
    /// Mean Shannon entropy (nats) of the row-normalized matrix.
    pub row_entropy: f64,
}

pub const DEFAULT_NORM_OFFSET: f64 = 1e-6;

/// Symmetrize by averaging with the transpose, then clip to `[0, 1]`.
pub fn project_sigma(m: &Matrix) -> Result<SimilarityMatrix> {
    if !m.is_square() {
        return Err(Error::shape(
            "project_sigma",
            "square matrix",
            format!("{}x{}", m.rows(), m.cols()),
        ));
    }
    let n = m.rows();
    let mut out = Matrix::zeros(n, n);
    for r in 0..n {
        for c in r..n {
            let avg = 0.5 * (m.get(r, c) + m.get(c, r));
            if !avg.is_finite() {
                return Err(Error::Contract(format!("non-finite similarity entry at ({r}, {c})")));
            }
            let v = avg.clamp(0.0, 1.0);
            out.set(r, c, v);
            out.set(c, r, v);
        }
    }
    Ok(SimilarityMatrix(out))
}

/// `Σ_ij P_ij log P_ij` summed over all rows, with
/// `P_ij = (Σ_ij + ε) / Σ_j (Σ_ij + ε)`, and its gradient.
fn row_neg_entropy(sigma: &Matrix, offset: f64) -> (f64, Matrix) {
    let n = sigma.rows();
    let mut total = 0.0;
    let mut grad = Matrix::zeros(n, sigma.cols());
    for r in 0..n {
        let row = sigma.row(r);
        let z: f64 = row.iter().map(|v| v + offset).sum();
        let logs: Vec<f64> = row.iter().map(|v| ((v + offset) / z).ln()).collect();
        let plogp: f64 = row
            .iter()
            .zip(&logs)
            .map(|(v, l)| (v + offset) / z * l)
            .sum();
        total += plogp;
        // d/dΣ_rj of Σ_k P_k log P_k = (log P_j − Σ_k P_k log P_k) / Z.
        for (g, l) in grad.row_mut(r).iter_mut().zip(&logs) {
            *g = (l - plogp) / z;
        }
    }
    (total, grad)
}

/// Entropy regularizer on the row-normalized similarity matrix. Minimizing
/// the returned penalty maximizes row entropy.
pub fn entropy_reg(sigma: &Matrix, coef: f64, norm_offset: f64) -> Result<(f64, Matrix)> {
    if let Some(v) = sigma.as_slice().iter().find(|v| **v < 0.0) {
        return Err(Error::Contract(format!("entropy_reg needs non-negative entries, got {v}")));
    }
    if norm_offset <= 0.0 {
        return Err(Error::config("masp.norm_offset", "must be positive"));
    }
    if coef == 0.0 {
        return Ok((0.0, Matrix::zeros(sigma.rows(), sigma.cols())));
    }
    let (value, grad) = row_neg_entropy(sigma, norm_offset);
    Ok((coef * value, grad.scale(coef)))
}

/// `project_sigma(Σ − β · (meta_grad + entropy_grad))`.
pub fn meta_update(
    sigma: &SimilarityMatrix,
    meta_grad: &Matrix,
    entropy_grad: &Matrix,
    beta: f64,
) -> Result<SimilarityMatrix> {
    let step = meta_grad.add(entropy_grad)?;
    let mut next = sigma.as_matrix().clone();
    next.add_scaled(-beta, &step)?;
    project_sigma(&next)
}

/// Trainable linear map `e_Σ = W_emb · vec(Σ)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingMap {
    pub weight: Matrix,
}

impl EmbeddingMap {
    /// `dim × n²` weights uniform in `±1/n` (fan-in `n²`).
    pub fn init<R: Rng + ?Sized>(dim: usize, actions: usize, rng: &mut R) -> Self {
        let fan_in = actions * actions;
        let mut weight = Matrix::zeros(dim, fan_in);
        if fan_in > 0 {
            let bound = 1.0 / (fan_in as f64).sqrt();
            for w in weight.as_mut_slice() {
                *w = rng.gen_range(-bound..=bound);
            }
        }
        Self { weight }
    }

    pub fn dim(&self) -> usize {
        self.weight.rows()
    }

    pub fn embed(&self, sigma: &Matrix) -> Result<Vec<f64>> {
        embed_sigma(&self.weight, sigma)
    }

    /// SGD step given `∂L/∂e_Σ`: `W −= lr · g · vec(Σ)ᵀ`.
    pub fn sgd_step(&mut self, embedding_grad: &[f64], sigma: &Matrix, lr: f64) -> Result<()> {
        if embedding_grad.len() != self.dim() {
            return Err(Error::shape("EmbeddingMap::sgd_step", self.dim(), embedding_grad.len()));
        }
        let v = sigma.as_slice();
        if v.len() != self.weight.cols() {
            return Err(Error::shape("EmbeddingMap::sgd_step vec(Σ)", self.weight.cols(), v.len()));
        }
        for (r, &g) in embedding_grad.iter().enumerate() {
            if g != 0.0 {
                crate::numcore::axpy(-lr * g, v, self.weight.row_mut(r));
            }
        }
        Ok(())
    }
}

/// `W_emb · vec(Σ)` with row-major `vec`.
pub fn embed_sigma(w_emb: &Matrix, sigma: &Matrix) -> Result<Vec<f64>> {
    if w_emb.cols() != sigma.as_slice().len() {
        return Err(Error::shape(
            "embed_sigma",
            format!("{} columns", sigma.as_slice().len()),
            w_emb.cols(),
        ));
    }
    w_emb.matvec(sigma.as_slice())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: &[Vec<f64>]) -> Matrix {
        Matrix::from_rows(rows).unwrap()
    }

    #[test]
    fn projection_hand_case() {
        let p = project_sigma(&m(&[vec![1.2, -0.1], vec![0.3, 0.5]])).unwrap();
        let want = m(&[vec![1.0, 0.1], vec![0.1, 0.5]]);
        assert!(p.as_matrix().sub(&want).unwrap().max_abs() < 1e-15);
    }

    #[test]
    fn projection_fixed_point_and_floor() {
        let s = m(&[vec![1.0, 0.2], vec![0.2, 0.7]]);
        assert_eq!(project_sigma(&s).unwrap().as_matrix(), &s);
        let neg = Matrix::filled(3, 3, -0.4);
        assert_eq!(project_sigma(&neg).unwrap().as_matrix(), &Matrix::zeros(3, 3));
        assert!(project_sigma(&Matrix::zeros(2, 3)).is_err());
    }

    #[test]
    fn embedding_examples() {
        let sigma = m(&[vec![1.0, 0.3], vec![0.3, 1.0]]);
        assert_eq!(embed_sigma(&Matrix::zeros(3, 4), &sigma).unwrap(), vec![0.0; 3]);
        let select = m(&[vec![0.0, 1.0, 0.0, 0.0]]);
        assert_eq!(embed_sigma(&select, &sigma).unwrap(), vec![0.3]);
        assert!(embed_sigma(&Matrix::zeros(1, 3), &sigma).is_err());
    }

    #[test]
    fn entropy_uniform_rows_have_zero_gradient() {
        let s = Matrix::filled(3, 3, 0.4);
        let (_, g) = entropy_reg(&s, 1e-3, 1e-6).unwrap();
        assert!(g.max_abs() < 1e-15);
        let (p, g) = entropy_reg(&s, 0.0, 1e-6).unwrap();
        assert_eq!(p, 0.0);
        assert_eq!(g.max_abs(), 0.0);
        assert!(entropy_reg(&Matrix::filled(2, 2, -0.1), 1.0, 1e-6).is_err());
    }

    #[test]
    fn meta_update_clips_and_keeps_valid_sigma() {
        let s = project_sigma(&m(&[vec![1.0, 0.9], vec![0.9, 1.0]])).unwrap();
        let zero = Matrix::zeros(2, 2);
        assert_eq!(meta_update(&s, &zero, &zero, 0.0).unwrap(), s);
        let push = Matrix::filled(2, 2, -10.0);
        let up = meta_update(&s, &push, &zero, 0.1).unwrap();
        assert_eq!(up.get(0, 1), 1.0);
    }

    #[test]
    fn meta_update_hand_case() {
        // Σ − β·G = [[1.2, −0.1], [0.3, 0.5]] → projected [[1, 0.1], [0.1, 0.5]].
        let s = SimilarityMatrix::identity(2);
        let g = m(&[vec![-0.2, 0.1], vec![-0.3, 0.5]]);
        let out = meta_update(&s, &g, &Matrix::zeros(2, 2), 1.0).unwrap();
        let want = m(&[vec![1.0, 0.1], vec![0.1, 0.5]]);
        for r in 0..2 {
            for c in 0..2 {
                assert!((out.get(r, c) - want.get(r, c)).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn deserialization_enforces_invariants() {
        let bad = serde_json::to_string(&m(&[vec![1.0, 0.5], vec![0.2, 1.0]])).unwrap();
        assert!(serde_json::from_str::<SimilarityMatrix>(&bad).is_err());
        let good = serde_json::to_string(&SimilarityMatrix::identity(3)).unwrap();
        assert_eq!(
            serde_json::from_str::<SimilarityMatrix>(&good).unwrap(),
            SimilarityMatrix::identity(3)
        );
    }

    #[test]
    fn stats_of_identity() {
        let s = SimilarityMatrix::identity(4).stats();
        assert_eq!(s.mean_offdiag, 0.0);
        assert_eq!(s.max, 1.0);
        assert!(s.row_entropy >= 0.0 && s.row_entropy < 1e-3);
    }
}
