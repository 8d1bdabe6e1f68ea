//! Open-ended 3D object category learning.
//!
//! The crate covers the whole perception-to-learning chain for table-top
//! objects:
//!
//! * [`pointcloud`]: geometric types, ASCII PCD I/O, cube/voxel filters and
//!   the disambiguated PCA reference frame.
//! * [`segmentation`]: dominant-plane RANSAC, polygonal prism extraction and
//!   Euclidean clustering into object candidates.
//! * [`descriptors`]: the GOOD global descriptor and spin-image local features.
//! * [`representations`]: visual-word dictionaries, bag-of-words histograms
//!   and incremental (local) LDA topic models.
//! * [`learning`]: instance-based and naive-Bayes open-ended learners.
//! * [`evaluation`]: metrics, k-fold cross-validation and the simulated
//!   teacher protocols.
//! * [`nbv`]: viewpoint entropy and next-best-view selection.
//! * [`synthgen`]: deterministic synthetic objects, datasets and scenes.
//! * [`pipeline`]: an agent gluing a representation to a learner.

// `!(x > 0.0)` guards deliberately reject NaN as well
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::type_complexity)]

pub mod descriptors;
pub mod error;
pub mod evaluation;
pub mod learning;
pub mod nbv;
pub mod pipeline;
pub mod pointcloud;
pub mod representations;
pub mod segmentation;
pub mod synthgen;

pub use error::{Error, Result};
pub use pointcloud::{BoundingBox, Point3, PointCloud, ReferenceFrame};
