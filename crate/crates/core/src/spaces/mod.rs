//! Metrics, product-type metrics, orbit metrics and δ-dense sampling.

mod iterated;
mod metric;
mod sample;

pub(crate) use iterated::orbit_into;
pub use iterated::{
    iterated_metric_eval, iterated_metric_eval_until, orbit, IteratedMetric, OrbitDistance,
};
pub use metric::{
    eval_product_metric, truncation_depth, CoordinateBound, CoordinateKind, Metric, Mode,
    ProductDistance, ProductMetric, WeightRule,
};
pub use sample::{
    sample_grid, sample_grid_with_budget, Axis, AxisTransform, Lattice, SampledSpace,
    DEFAULT_POINT_BUDGET,
};
