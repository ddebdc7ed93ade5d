//! The catalog of product-type dynamical systems.
//!
//! States are flat `f64` vectors. Sequence-space variants store a finite
//! prefix of length `truncation`:
//!
//! * [`SystemSpec::FullShift`] stores one period of a periodic sequence, so
//!   the step is a rotation and acts exactly on the invariant set of
//!   period-`L` points.
//! * [`SystemSpec::RealShift`] and [`SystemSpec::FormalDerivative`] store
//!   finitely supported sequences; the freed slot is filled with zero.

mod linear;
mod parse;

pub use linear::{entropy_prediction, rank_stabilization_index, Prediction, RankProfile};
pub use parse::parse_system;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spaces::{truncation_depth, Metric, Mode, ProductMetric, WeightRule};

/// Metric used on `ℝ^d` for [`SystemSpec::LinearMap`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LineMetric {
    /// `|atan x - atan y| / π` per coordinate: extends to the two-point
    /// compactification of each line. Points with `|x_i| ≤ core_radius`
    /// form the designated compact core.
    Arctan {
        #[serde(default = "default_core_radius")]
        core_radius: f64,
    },
    /// `min(|x - y|, 1)` on the box `[-radius, radius]^d`. This metric does
    /// not extend to a compactification on which the map is continuous.
    Window { radius: f64 },
}

fn default_core_radius() -> f64 {
    10.0
}

impl Default for LineMetric {
    fn default() -> Self {
        LineMetric::Arctan {
            core_radius: default_core_radius(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case")]
pub enum SystemSpec {
    /// Shift on `{0, …, m-1}^ℕ`.
    FullShift {
        m: u32,
        #[serde(default)]
        truncation: Option<usize>,
    },
    /// Shift on `ℝ^ℕ`.
    RealShift {
        #[serde(default)]
        truncation: Option<usize>,
    },
    /// Coordinate-wise product; factor `j` gets weight `1/j`.
    Product { factors: Vec<SystemSpec> },
    /// `x ↦ A x` on `ℝ^d`.
    LinearMap {
        matrix: Vec<Vec<f64>>,
        #[serde(default)]
        metric: LineMetric,
    },
    /// `x ↦ A x mod 1` on `[0, 1)^g`, `A` an integer matrix.
    Torus { matrix: Vec<Vec<i64>> },
    /// `Σ a_j x^j ↦ Σ (j+1) a_{j+1} x^j` on real formal series.
    FormalDerivative {
        #[serde(default)]
        truncation: Option<usize>,
    },
    /// `T^k` for a base system `T`.
    Iterate { base: Box<SystemSpec>, k: usize },
    /// A self-map of a finite metric space given by a distance table.
    Finite {
        distances: Vec<Vec<f64>>,
        map: Vec<usize>,
    },
}

impl SystemSpec {
    pub fn full_shift(m: u32) -> Self {
        SystemSpec::FullShift {
            m,
            truncation: None,
        }
    }

    pub fn torus(matrix: Vec<Vec<i64>>) -> Self {
        SystemSpec::Torus { matrix }
    }

    /// Circle endomorphism `x ↦ k x mod 1`.
    pub fn circle_map(k: i64) -> Self {
        SystemSpec::Torus {
            matrix: vec![vec![k]],
        }
    }

    pub fn linear(matrix: Vec<Vec<f64>>, metric: LineMetric) -> Self {
        SystemSpec::LinearMap { matrix, metric }
    }

    pub fn power(self, k: usize) -> Self {
        SystemSpec::Iterate {
            base: Box::new(self),
            k,
        }
    }

    /// Fix the stored prefix length of every unresolved sequence variant.
    pub fn with_truncation(&self, len: usize) -> Self {
        self.map_truncations(&|_: f64| len, 1.0)
    }

    /// Resolve truncations so that every ε-decision at `eps ≥ eps_min` and
    /// horizon `n ≤ n_max` is exact: `L = depth(ε_min) + k·n_max` for an
    /// iterate `T^k`, where a factor nested at weight `w` uses the depth for
    /// `ε_min / w`.
    pub fn resolved_for(&self, eps_min: f64, n_max: usize) -> Result<Self> {
        if !(eps_min > 0.0) {
            return Err(Error::Range(format!("eps must be positive, got {eps_min}")));
        }
        let steps = n_max.saturating_mul(self.base_steps());
        Ok(self.map_truncations(
            &|w: f64| {
                let e = eps_min / w;
                let depth = if e >= 1.0 {
                    0
                } else {
                    truncation_depth(e, Mode::Spanning).unwrap_or(0)
                };
                (depth + steps).max(1)
            },
            1.0,
        ))
    }

    /// Base-map steps taken by one application of `self`.
    fn base_steps(&self) -> usize {
        match self {
            SystemSpec::Iterate { base, k } => k.saturating_mul(base.base_steps()),
            SystemSpec::Product { factors } => {
                factors.iter().map(|f| f.base_steps()).max().unwrap_or(1)
            }
            _ => 1,
        }
    }

    fn map_truncations(&self, len_for: &dyn Fn(f64) -> usize, weight: f64) -> Self {
        let fill = |t: &Option<usize>| Some(t.unwrap_or_else(|| len_for(weight)));
        match self {
            SystemSpec::FullShift { m, truncation } => SystemSpec::FullShift {
                m: *m,
                truncation: fill(truncation),
            },
            SystemSpec::RealShift { truncation } => SystemSpec::RealShift {
                truncation: fill(truncation),
            },
            SystemSpec::FormalDerivative { truncation } => SystemSpec::FormalDerivative {
                truncation: fill(truncation),
            },
            SystemSpec::Product { factors } => SystemSpec::Product {
                factors: factors
                    .iter()
                    .enumerate()
                    .map(|(j, f)| f.map_truncations(len_for, weight / (j + 1) as f64))
                    .collect(),
            },
            SystemSpec::Iterate { base, k } => SystemSpec::Iterate {
                base: Box::new(base.map_truncations(len_for, weight)),
                k: *k,
            },
            other => other.clone(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            SystemSpec::FullShift { m, truncation } => {
                if *m < 1 {
                    return Err(Error::Validation("alphabet must be nonempty".into()));
                }
                if *truncation == Some(0) {
                    return Err(Error::Validation("truncation must be positive".into()));
                }
            }
            SystemSpec::RealShift { truncation } | SystemSpec::FormalDerivative { truncation } => {
                if *truncation == Some(0) {
                    return Err(Error::Validation("truncation must be positive".into()));
                }
            }
            SystemSpec::Product { factors } => {
                if factors.is_empty() {
                    return Err(Error::Validation("product needs a factor".into()));
                }
                factors.iter().try_for_each(|f| f.validate())?;
            }
            SystemSpec::LinearMap { matrix, metric } => {
                square(matrix)?;
                match metric {
                    LineMetric::Arctan { core_radius } if !(*core_radius > 0.0) => {
                        return Err(Error::Validation("core radius must be positive".into()))
                    }
                    LineMetric::Window { radius } if !(*radius > 0.0) => {
                        return Err(Error::Validation("window radius must be positive".into()))
                    }
                    _ => {}
                }
            }
            SystemSpec::Torus { matrix } => {
                square(matrix)?;
            }
            SystemSpec::Iterate { base, k } => {
                if *k == 0 {
                    return Err(Error::Validation(
                        "iterate exponent must be positive".into(),
                    ));
                }
                base.validate()?;
            }
            SystemSpec::Finite { distances, map } => {
                Metric::table(distances)?;
                if map.len() != distances.len() {
                    return Err(Error::Dimension {
                        expected: distances.len(),
                        got: map.len(),
                    });
                }
                if let Some(bad) = map.iter().find(|&&t| t >= distances.len()) {
                    return Err(Error::Validation(format!("map target {bad} out of range")));
                }
            }
        }
        Ok(())
    }

    /// Length of the stored state vector.
    pub fn state_dim(&self) -> Result<usize> {
        let unresolved = || Error::Validation("sequence truncation is unresolved".into());
        Ok(match self {
            SystemSpec::FullShift { truncation, .. }
            | SystemSpec::RealShift { truncation }
            | SystemSpec::FormalDerivative { truncation } => truncation.ok_or_else(unresolved)?,
            SystemSpec::Product { factors } => factors
                .iter()
                .map(|f| f.state_dim())
                .sum::<Result<usize>>()?,
            SystemSpec::LinearMap { matrix, .. } => matrix.len(),
            SystemSpec::Torus { matrix } => matrix.len(),
            SystemSpec::Iterate { base, .. } => base.state_dim()?,
            SystemSpec::Finite { .. } => 1,
        })
    }

    /// The canonical product-type metric (diameter ≤ 1).
    pub fn canonical_metric(&self) -> Result<Metric> {
        Ok(match self {
            SystemSpec::FullShift { .. } => Metric::symbolic(self.state_dim()?),
            SystemSpec::RealShift { .. } | SystemSpec::FormalDerivative { .. } => {
                Metric::Product(ProductMetric::uniform(
                    Metric::Arctan { dim: 1 },
                    self.state_dim()?,
                    WeightRule::Harmonic,
                )?)
            }
            SystemSpec::Product { factors } => Metric::Product(ProductMetric::new(
                factors
                    .iter()
                    .map(|f| f.canonical_metric())
                    .collect::<Result<_>>()?,
                WeightRule::Harmonic,
            )?),
            SystemSpec::LinearMap { matrix, metric } => match metric {
                LineMetric::Arctan { .. } => Metric::Arctan { dim: matrix.len() },
                LineMetric::Window { .. } => Metric::Clamped { dim: matrix.len() },
            },
            SystemSpec::Torus { matrix } => Metric::TorusWrap { dim: matrix.len() },
            SystemSpec::Iterate { base, .. } => base.canonical_metric()?,
            SystemSpec::Finite { distances, .. } => Metric::table(distances)?,
        })
    }

    /// One application of `T`.
    pub fn step(&self, x: &[f64]) -> Result<Vec<f64>> {
        let dim = self.state_dim()?;
        if x.len() != dim {
            return Err(Error::Dimension {
                expected: dim,
                got: x.len(),
            });
        }
        let mut out = vec![0.0; dim];
        self.step_into(x, &mut out);
        Ok(out)
    }

    /// Unchecked step; `x` and `out` must both have `state_dim()` entries.
    pub fn step_into(&self, x: &[f64], out: &mut [f64]) {
        match self {
            SystemSpec::FullShift { .. } => {
                let l = x.len();
                out[..l - 1].copy_from_slice(&x[1..]);
                out[l - 1] = x[0];
            }
            SystemSpec::RealShift { .. } => {
                let l = x.len();
                out[..l - 1].copy_from_slice(&x[1..]);
                out[l - 1] = 0.0;
            }
            SystemSpec::FormalDerivative { .. } => {
                let l = x.len();
                for j in 0..l - 1 {
                    out[j] = (j + 1) as f64 * x[j + 1];
                }
                out[l - 1] = 0.0;
            }
            SystemSpec::Product { factors } => {
                let mut at = 0;
                for f in factors {
                    let d = f.state_dim().expect("validated product");
                    f.step_into(&x[at..at + d], &mut out[at..at + d]);
                    at += d;
                }
            }
            SystemSpec::LinearMap { matrix, .. } => {
                for (o, row) in out.iter_mut().zip(matrix) {
                    *o = row.iter().zip(x).map(|(a, b)| a * b).sum();
                }
            }
            SystemSpec::Torus { matrix } => {
                for (o, row) in out.iter_mut().zip(matrix) {
                    let v: f64 = row.iter().zip(x).map(|(&a, b)| a as f64 * b).sum();
                    *o = v.rem_euclid(1.0);
                    if *o >= 1.0 {
                        *o = 0.0;
                    }
                }
            }
            SystemSpec::Iterate { base, k } => {
                out.copy_from_slice(x);
                let mut tmp = x.to_vec();
                for _ in 0..*k {
                    base.step_into(out, &mut tmp);
                    out.copy_from_slice(&tmp);
                }
            }
            SystemSpec::Finite { map, .. } => {
                out[0] = map[x[0] as usize] as f64;
            }
        }
    }

    /// `m(n)` such that the first `n` coordinates of `T x` depend only on the
    /// first `m(n)` coordinates of `x`. `None` for variants that are not
    /// sequence spaces.
    pub fn measurability_index(&self, n: usize) -> Option<usize> {
        match self {
            SystemSpec::FullShift { .. }
            | SystemSpec::RealShift { .. }
            | SystemSpec::FormalDerivative { .. } => Some(n + 1),
            SystemSpec::Iterate { base, k } => {
                let mut m = n;
                for _ in 0..*k {
                    m = base.measurability_index(m)?;
                }
                Some(m)
            }
            _ => None,
        }
    }

    /// Compact textual form, accepted back by [`parse_system`].
    pub fn label(&self) -> String {
        let trunc = |t: &Option<usize>| t.map(|l| format!(",len={l}")).unwrap_or_default();
        match self {
            SystemSpec::FullShift { m, truncation } => {
                format!("full_shift:m={m}{}", trunc(truncation))
            }
            SystemSpec::RealShift { truncation } => {
                format!("real_shift{}", trunc(truncation).replacen(',', ":", 1))
            }
            SystemSpec::FormalDerivative { truncation } => {
                format!(
                    "formal_derivative{}",
                    trunc(truncation).replacen(',', ":", 1)
                )
            }
            SystemSpec::Product { factors } => factors
                .iter()
                .map(|f| f.label())
                .collect::<Vec<_>>()
                .join("*"),
            SystemSpec::LinearMap { matrix, metric } => {
                let m = match metric {
                    LineMetric::Arctan { core_radius } => format!("arctan,core={core_radius}"),
                    LineMetric::Window { radius } => format!("window,radius={radius}"),
                };
                format!("linear:matrix={},metric={m}", matrix_label(matrix))
            }
            SystemSpec::Torus { matrix } => format!("torus:matrix={}", matrix_label(matrix)),
            SystemSpec::Iterate { base, k } => format!("({})^{k}", base.label()),
            SystemSpec::Finite { map, .. } => format!("finite:size={}", map.len()),
        }
    }
}

fn matrix_label<T: std::fmt::Display>(m: &[Vec<T>]) -> String {
    let rows: Vec<String> = m
        .iter()
        .map(|r| {
            let cells: Vec<String> = r.iter().map(|v| v.to_string()).collect();
            format!("[{}]", cells.join(" "))
        })
        .collect();
    format!("[{}]", rows.join(" "))
}

fn square<T>(m: &[Vec<T>]) -> Result<()> {
    if m.is_empty() {
        return Err(Error::Validation("matrix is empty".into()));
    }
    for r in m {
        if r.len() != m.len() {
            return Err(Error::Dimension {
                expected: m.len(),
                got: r.len(),
            });
        }
    }
    Ok(())
}

/// Product of systems acting coordinate-wise. A single factor is returned
/// unchanged.
pub fn product_system(specs: Vec<SystemSpec>) -> Result<SystemSpec> {
    match specs.len() {
        0 => Err(Error::Validation("product needs a factor".into())),
        1 => Ok(specs.into_iter().next().unwrap()),
        _ => {
            let p = SystemSpec::Product { factors: specs };
            p.validate()?;
            Ok(p)
        }
    }
}

/// Exhaustively checks that `π_n(T x)` depends only on `π_{m(n)}(x)` for a
/// finite-alphabet shift (or an iterate of one) stored at length `len`.
///
/// Returns the first `n` at which the contract fails, or `None`.
pub fn check_measurability(spec: &SystemSpec, len: usize) -> Result<Option<usize>> {
    let spec = spec.with_truncation(len);
    let m = match &spec {
        SystemSpec::FullShift { m, .. } => *m as usize,
        SystemSpec::Iterate { base, .. } => match base.as_ref() {
            SystemSpec::FullShift { m, .. } => *m as usize,
            _ => return Err(Error::Unsupported("finite-alphabet shifts only".into())),
        },
        _ => return Err(Error::Unsupported("finite-alphabet shifts only".into())),
    };
    let total = (m as u128).pow(len as u32);
    if total > 1 << 20 {
        return Err(Error::Resource {
            what: "word enumeration".into(),
            required: total,
            budget: 1 << 20,
        });
    }
    let words: Vec<Vec<f64>> = (0..total as usize).map(|i| word(i, m, len)).collect();
    let images: Vec<Vec<f64>> = words.iter().map(|w| spec.step(w)).collect::<Result<_>>()?;
    for n in 1..len {
        let Some(mn) = spec.measurability_index(n) else {
            return Ok(Some(n));
        };
        // The stored period-L word only represents coordinates below L.
        if mn >= len {
            break;
        }
        let mut seen = std::collections::HashMap::new();
        for (w, img) in words.iter().zip(&images) {
            let key: Vec<u64> = w[..mn].iter().map(|v| v.to_bits()).collect();
            let val: Vec<u64> = img[..n].iter().map(|v| v.to_bits()).collect();
            if let Some(prev) = seen.insert(key, val.clone()) {
                if prev != val {
                    return Ok(Some(n));
                }
            }
        }
    }
    Ok(None)
}

fn word(mut i: usize, m: usize, len: usize) -> Vec<f64> {
    let mut w = vec![0.0; len];
    for slot in w.iter_mut().rev() {
        *slot = (i % m) as f64;
        i /= m;
    }
    w
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_shift_drops_first_symbol() {
        let s = SystemSpec::full_shift(2).with_truncation(4);
        let y = s.step(&[0.0, 1.0, 1.0, 0.0]).unwrap();
        assert_eq!(&y[..3], &[1.0, 1.0, 0.0]);
    }

    #[test]
    fn formal_derivative_scales_coefficients() {
        let s = SystemSpec::FormalDerivative {
            truncation: Some(4),
        };
        let a = [1.0, 1.0, 1.0, 1.0];
        // oracle: term-by-term (j+1)·a_{j+1}, with a_4 = 0 beyond the prefix
        let oracle: Vec<f64> = (0..4)
            .map(|j| {
                if j + 1 < 4 {
                    (j + 1) as f64 * a[j + 1]
                } else {
                    0.0
                }
            })
            .collect();
        assert_eq!(oracle, vec![1.0, 2.0, 3.0, 0.0]);
        assert_eq!(s.step(&a).unwrap(), oracle);
    }

    #[test]
    fn linear_and_torus_steps() {
        let l = SystemSpec::linear(vec![vec![2.0]], LineMetric::default());
        assert_eq!(l.step(&[1.5]).unwrap(), vec![3.0]);
        let cat = SystemSpec::torus(vec![vec![2, 1], vec![1, 1]]);
        assert_eq!(cat.step(&[0.5, 0.25]).unwrap(), vec![0.25, 0.75]);
        assert!(matches!(cat.step(&[0.5]), Err(Error::Dimension { .. })));
    }

    #[test]
    fn product_of_identities_is_identity() {
        let id = SystemSpec::torus(vec![vec![1, 0], vec![0, 1]]);
        let p = product_system(vec![id.clone(), SystemSpec::circle_map(1)]).unwrap();
        let x = [0.125, 0.5, 0.75];
        assert_eq!(p.step(&x).unwrap(), x.to_vec());
        assert_eq!(product_system(vec![id.clone()]).unwrap(), id);
        assert!(product_system(vec![]).is_err());
    }

    #[test]
    fn product_metric_weights_factors() {
        let p = product_system(vec![
            SystemSpec::full_shift(2).with_truncation(3),
            SystemSpec::full_shift(3).with_truncation(2),
        ])
        .unwrap();
        let m = p.canonical_metric().unwrap();
        // second factor differs at its first coordinate: (1/2)·1
        let d = m
            .eval(&[0.0, 0.0, 0.0, 2.0, 0.0], &[0.0, 0.0, 0.0, 1.0, 0.0])
            .unwrap();
        assert_eq!(d, 0.5);
    }

    #[test]
    fn iterate_applies_base_k_times() {
        let t2 = SystemSpec::full_shift(2).with_truncation(5).power(2);
        assert_eq!(
            t2.step(&[1.0, 0.0, 1.0, 1.0, 0.0]).unwrap(),
            vec![1.0, 1.0, 0.0, 1.0, 0.0]
        );
    }

    #[test]
    fn resolution_depends_on_factor_weight() {
        let p = product_system(vec![SystemSpec::full_shift(2), SystemSpec::full_shift(3)])
            .unwrap()
            .resolved_for(0.2, 4)
            .unwrap();
        let SystemSpec::Product { factors } = p else {
            panic!()
        };
        // factor 1: depth(0.2, spanning) = 5; factor 2: depth(0.4, spanning) = 2
        assert_eq!(factors[0].state_dim().unwrap(), 9);
        assert_eq!(factors[1].state_dim().unwrap(), 6);
    }

    #[test]
    fn shift_measurability_holds() {
        for len in 1..=6 {
            assert_eq!(
                check_measurability(&SystemSpec::full_shift(2), len).unwrap(),
                None
            );
        }
        assert_eq!(
            check_measurability(&SystemSpec::full_shift(2).power(2), 6).unwrap(),
            None
        );
    }

    #[test]
    fn finite_validation() {
        let bad = SystemSpec::Finite {
            distances: vec![vec![0.0, 1.0], vec![1.0, 0.0]],
            map: vec![0, 2],
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn json_forms() {
        let s: SystemSpec = serde_json::from_str(r#"{"variant":"full_shift","m":2}"#).unwrap();
        assert_eq!(s, SystemSpec::full_shift(2));
        let t: SystemSpec =
            serde_json::from_str(r#"{"variant":"torus","matrix":[[2,1],[1,1]]}"#).unwrap();
        assert_eq!(t, SystemSpec::torus(vec![vec![2, 1], vec![1, 1]]));
    }
}
