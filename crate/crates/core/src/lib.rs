//! Entropy of product-type dynamical systems on finite samples.
//!
//! Three notions of entropy are computed on the same sampled space:
//!
//! * [`covers`]: topological entropy from iterated open covers;
//! * [`bowen`]: Bowen entropy from `(n, ε)`-separated and spanning sets;
//! * [`measures`]: Kolmogorov-Sinai entropy of invariant measures.
//!
//! [`systems`] describes the maps (shifts, products, toral endomorphisms,
//! linear maps) and [`spaces`] the metrics and δ-dense samples they act on.
//!
//! ```
//! use prodent::bowen::bowen_entropy_estimate;
//! use prodent::spaces::sample_grid;
//! use prodent::systems::SystemSpec;
//!
//! let spec = SystemSpec::full_shift(2).resolved_for(0.4, 8)?;
//! let space = sample_grid(&spec, 0.1)?;
//! let est = bowen_entropy_estimate(&space, &spec, &[0.4], &[1, 2, 3, 4, 5, 6, 7, 8])?;
//! assert!((est.rate - 2f64.ln()).abs() < 1e-12);
//! # Ok::<(), prodent::Error>(())
//! ```

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bowen;
pub mod covers;
pub mod error;
pub mod fit;
pub mod measures;
pub mod spaces;
pub mod systems;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/spaces.md")]
    mod spaces {}
    #[doc = include_str!("../../../book/src/covers.md")]
    mod covers {}
    #[doc = include_str!("../../../book/src/bowen.md")]
    mod bowen {}
    #[doc = include_str!("../../../book/src/measures.md")]
    mod measures {}
    #[doc = include_str!("../../../book/src/systems.md")]
    mod systems {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
