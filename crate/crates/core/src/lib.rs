//! Oriented-box detection targets built from tricube kernels.
//!
//! Boxes are rendered into per-class heatmaps ([`encoder`]), weighted and
//! sampled for a training loss ([`loss`]), optionally passed through
//! rotation-aware refinement ([`refine`]), and turned back into boxes by
//! thresholding and fitting rectangles to connected components ([`decoder`]).
//!
//! ```
//! use tricube::{decode, encode, GroundTruthScene, KernelSpec, OrientedBox, SceneBox};
//!
//! let b = OrientedBox::new(40.0, 30.0, 36.0, 16.0, 0.3)?;
//! let scene = GroundTruthScene::new(80, 60, 1, 1).with_boxes([SceneBox { bbox: b, class_id: 0 }]);
//! let heatmap = encode(&scene, &KernelSpec::default())?;
//! let dets = decode(&heatmap, 0.3, 7.0, 3)?;
//! assert_eq!(dets.len(), 1);
//! assert!(dets[0].bbox.iou(&b) > 0.9);
//! # Ok::<(), tricube::Error>(())
//! ```

pub mod decoder;
pub mod encoder;
pub mod error;
pub mod eval;
pub mod geometry;
pub mod io;
pub mod kernel;
pub mod loss;
pub mod raster;
pub mod refine;
pub mod roundtrip;

pub use decoder::{binarize, decode, label_components, BinaryMap, ComponentLabelMap};
pub use encoder::{encode, make_swm, GroundTruthScene, Heatmap, SceneBox, SizeWeightMask};
pub use error::{Error, Result};
pub use eval::{coco_summary, voc_summary, GroundTruth, ImageEval, Interpolation};
pub use geometry::{min_area_rect, polygon_iou, Detection, OrientedBox, Point, QuadBox};
pub use kernel::{scale_factor, KernelFamily, KernelSpec};
pub use loss::{fpem_sample, masked_mse, PixelSample};
pub use raster::Raster;
pub use refine::{cascade_forward, mac_forward, rconv, ConvWeights, FeatureMap, MacConfig};
