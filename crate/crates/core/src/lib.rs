//! Numerical laboratory for Kobayashi geometry on convex model domains
//! `{Re z2 > Ψ(Re z1)}` in ℂ².

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod experiments;
pub mod geodesics;
pub mod geometry;
pub mod goldilocks;
pub mod metric;
pub mod numeric;
pub mod profiles;

pub use error::{LabError, Result};
pub use experiments::{ExperimentConfig, ExperimentReport};
pub use geodesics::{CurveNode, CurveOrigin, SampledCurve};
pub use geometry::{CPoint, CVector, ConvexityClass, DomainOracle, FaceKind, FaceSegment, Frame};
pub use metric::{BoundInterval, DistanceGrid, GridSpec, LengthMode, Slice};
pub use num_complex::Complex64;
pub use profiles::{build_piecewise_max, mollify, Mollifier, Profile, ProfileSpec};
