//! Lévy Laplacian on discretized H¹ loop and path spaces over flat tori and
//! round 2-spheres.

pub mod error;
pub mod flows;
pub mod functionals;
pub mod geometry;
pub mod hodge;
pub mod levy;
pub mod pathspace;
pub mod transport;

pub use error::{Error, Result};
pub use functionals::{ComplexPathFunctional, CurveFunctional, OuterMap, PathFunctional, SmoothMap};
pub use geometry::{Manifold, Point, Tangent, Vector};
pub use hodge::{OneForm, ScalarForm};
pub use levy::{CesaroOptions, CesaroReport, LevyKernelSample};
pub use pathspace::{Curve, CurveMeta, TransportedFrame, VectorFieldAlongCurve};
