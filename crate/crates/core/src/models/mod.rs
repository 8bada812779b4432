//! The classifier networks and their weight archive.

pub mod arch;
pub mod archive;
pub mod network;

pub use arch::{build, build_base_cnn, build_res_mini, ModelKind};
pub use archive::{load_weights, save_weights, ArchiveEntry, WeightArchive};
pub use network::{classify, Network};
