//! On-disk formats: sequence manifests, tensor files, snapshots and PLY.

pub mod manifest;
pub mod ply;
pub mod snapshot;
pub mod tensor;

pub use manifest::{load_sequence, DepthFormat, Frame, FrameRecord, Sequence, SequenceManifest};
pub use ply::{export_ply, write_ply};
pub use snapshot::{load_snapshot, save_snapshot, Snapshot};
pub use tensor::{read_tensor, write_tensor, Tensor, TensorData};
