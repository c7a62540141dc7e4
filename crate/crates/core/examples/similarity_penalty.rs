//! The similarity penalty on a batch of Q-vectors, the projection that keeps
//! the similarity matrix symmetric and in [0, 1], and the row-entropy
//! regularizer.
//!
//! ```text
//! cargo run --example similarity_penalty
//! ```

use masp_lab::masp::{entropy_reg, masp_loss, project_sigma, DEFAULT_NORM_OFFSET};
use masp_lab::numcore::Matrix;

fn main() -> masp_lab::Result<()> {
    let q = vec![vec![1.0, 0.9, -0.5], vec![0.2, 0.25, 1.0]];

    let identity = Matrix::identity(3);
    let (loss, _) = masp_loss(&q, &identity, 0.1)?;
    println!("identity similarity: penalty {loss}");

    // Actions 0 and 1 are declared similar; action 2 stands alone.
    let tied = project_sigma(&Matrix::from_rows(&[
        vec![0.5, 0.5, 0.0],
        vec![0.5, 0.5, 0.0],
        vec![0.0, 0.0, 1.0],
    ])?)?;
    let (loss, grad) = masp_loss(&q, tied.as_matrix(), 0.1)?;
    println!("tied similarity: penalty {loss:.5}, dL/dq {grad:.4?}");

    let raw = Matrix::from_rows(&[vec![1.3, 0.2, -0.4], vec![0.6, 0.9, 0.1], vec![0.0, 0.3, 2.0]])?;
    let projected = project_sigma(&raw)?;
    println!("projected: {:?}", projected.as_matrix());

    for m in [Matrix::identity(3), Matrix::filled(3, 3, 0.5)] {
        let (h, _) = entropy_reg(&m, 1e-3, DEFAULT_NORM_OFFSET)?;
        println!("entropy penalty {h:+.6} for stats {:?}", project_sigma(&m)?.stats());
    }
    Ok(())
}
