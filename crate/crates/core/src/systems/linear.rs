//! Matrix-level facts about linear and toral endomorphisms.

use std::fmt;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::systems::SystemSpec;

const MAX_DIM: usize = 64;

/// Ranks of `A^0, A^1, …` up to one step past stabilization.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankProfile {
    pub ranks: Vec<usize>,
    /// Least `n` with `rank(A^n) = rank(A^{n+1})`.
    pub index: usize,
}

impl RankProfile {
    /// Rank of the stable image `A^{n*} ℝ^d`.
    pub fn stable_rank(&self) -> usize {
        self.ranks[self.index]
    }
}

/// Rank profile of a square matrix, with ranks computed by fully pivoted
/// elimination at tolerance `1e-10 · ‖A^n‖_F`.
///
/// A pivot within three orders of magnitude of the tolerance makes the rank
/// ambiguous and yields [`Error::Indeterminate`].
pub fn rank_stabilization_index(a: &[Vec<f64>]) -> Result<RankProfile> {
    let d = a.len();
    if d == 0 {
        return Err(Error::Validation("matrix is empty".into()));
    }
    if d > MAX_DIM {
        return Err(Error::Unsupported(format!(
            "dimension {d} exceeds {MAX_DIM}"
        )));
    }
    for row in a {
        if row.len() != d {
            return Err(Error::Dimension {
                expected: d,
                got: row.len(),
            });
        }
    }
    let a = DMatrix::from_fn(d, d, |i, j| a[i][j]);
    let mut power = DMatrix::<f64>::identity(d, d);
    let mut ranks = vec![d];
    for n in 0..=d {
        power = &power * &a;
        ranks.push(numerical_rank(&power)?);
        if ranks[n] == ranks[n + 1] {
            return Ok(RankProfile { ranks, index: n });
        }
    }
    unreachable!("ranks are nonincreasing and bounded by the dimension")
}

fn numerical_rank(m: &DMatrix<f64>) -> Result<usize> {
    let norm = m.norm();
    if norm == 0.0 {
        return Ok(0);
    }
    let tol = 1e-10 * norm;
    let mut w = m.clone();
    let (rows, cols) = w.shape();
    let mut rank = 0;
    for k in 0..rows.min(cols) {
        let mut best = (0.0f64, k, k);
        for i in k..rows {
            for j in k..cols {
                let v = w[(i, j)].abs();
                if v > best.0 {
                    best = (v, i, j);
                }
            }
        }
        let (p, pi, pj) = best;
        if p > tol / 1e3 && p < tol * 1e3 {
            return Err(Error::Indeterminate(format!(
                "pivot {p:e} is within three orders of the tolerance {tol:e}"
            )));
        }
        if p <= tol {
            break;
        }
        w.swap_rows(k, pi);
        w.swap_columns(k, pj);
        for i in k + 1..rows {
            let f = w[(i, k)] / w[(k, k)];
            if f != 0.0 {
                for j in k..cols {
                    let v = w[(k, j)];
                    w[(i, j)] -= f * v;
                }
            }
        }
        rank += 1;
    }
    Ok(rank)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rationale {
    /// Linear endomorphisms of finite-dimensional vector spaces have zero
    /// entropy under a metric that extends to a compactification.
    VectorSpaceLinear,
    /// Classical toral formula `Σ_{|λ|>1} log |λ|`; cross-checked by the grid
    /// estimator rather than derived here.
    ToralEigenvalues,
}

impl fmt::Display for Rationale {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Rationale::VectorSpaceLinear => "linear endomorphism of a vector space: zero entropy",
            Rationale::ToralEigenvalues => {
                "classical eigenvalue formula for toral endomorphisms, cross-checked by the grid estimator"
            }
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    /// Entropy in nats.
    pub value: f64,
    pub rationale: Rationale,
    pub ranks: RankProfile,
    /// Dimension of the stable image on which the map is surjective.
    pub stable_dim: usize,
}

pub fn entropy_prediction(spec: &SystemSpec) -> Result<Prediction> {
    spec.validate()?;
    let (matrix, rationale): (Vec<Vec<f64>>, _) = match spec {
        SystemSpec::LinearMap { matrix, .. } => (matrix.clone(), Rationale::VectorSpaceLinear),
        SystemSpec::Torus { matrix } => (
            matrix
                .iter()
                .map(|r| r.iter().map(|&v| v as f64).collect())
                .collect(),
            Rationale::ToralEigenvalues,
        ),
        other => {
            return Err(Error::Unsupported(format!(
                "no matrix-level prediction for {}",
                other.label()
            )))
        }
    };
    let ranks = rank_stabilization_index(&matrix)?;
    let value = match rationale {
        Rationale::VectorSpaceLinear => 0.0,
        Rationale::ToralEigenvalues => {
            let d = matrix.len();
            DMatrix::from_fn(d, d, |i, j| matrix[i][j])
                .complex_eigenvalues()
                .iter()
                .map(|l| l.norm())
                .filter(|&r| r > 1.0 + 1e-12)
                .map(f64::ln)
                .sum()
        }
    };
    Ok(Prediction {
        value,
        rationale,
        stable_dim: ranks.stable_rank(),
        ranks,
    })
}
