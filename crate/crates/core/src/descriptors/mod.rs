//! Object-view features: the GOOD global descriptor and spin-image sets.

mod good;
mod spin;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

pub use good::{
    compute_good, compute_good_with, compute_good_with_threshold, project_counts, project_counts_with_epsilon, project_distribution, projection_entropy,
    projection_variance, GoodDescriptor, ProjectionPlane, DEFAULT_GOOD_BINS, GOOD_EPSILON,
};
pub use spin::{
    compute_feature_set, compute_spin_image, estimate_normals, estimate_normals_from, extract_keypoints,
    keypoint_indices, spin_coordinates, FeatureSet, SpinImage, SpinParams, NORMAL_NEIGHBORS,
};

/// Serialized form of a descriptor: `{type, params, values}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DescriptorRecord {
    #[serde(rename = "type")]
    pub kind: String,
    pub params: BTreeMap<String, serde_json::Value>,
    pub values: serde_json::Value,
}

impl DescriptorRecord {
    pub fn good(d: &GoodDescriptor) -> Self {
        let mut params = BTreeMap::new();
        params.insert("n".into(), d.n.into());
        params.insert(
            "order".into(),
            serde_json::Value::from(d.order.iter().map(|p| p.name()).collect::<Vec<_>>()),
        );
        DescriptorRecord {
            kind: "good".into(),
            params,
            values: d.bins.clone().into(),
        }
    }

    /// Spin-image set; `values` holds one flattened histogram per keypoint.
    pub fn spinset(fs: &FeatureSet, p: &SpinParams) -> Self {
        let mut params = BTreeMap::new();
        params.insert("voxel".into(), p.voxel.into());
        params.insert("image_width".into(), p.image_width.into());
        params.insert("support_length".into(), p.support_length.into());
        params.insert("support_angle".into(), p.support_angle.into());
        DescriptorRecord {
            kind: "spinset".into(),
            params,
            values: fs.vectors().into(),
        }
    }
}
