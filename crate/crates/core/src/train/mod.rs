//! Offline training of reduced port spaces: Sturm-Liouville port modes,
//! pairwise snapshot generation, POD compression, and assembly of the
//! trained library used by the online reduced model.

mod library;
mod pairwise;
mod pod;
mod port1d;

pub use library::{ComponentLibrary, TrainedLibrary, TrainingMeta};
pub use pairwise::{
    mean_correct, pairwise_train, PairContext, PairKind, SampleInputs, SnapshotSet,
    TrainingParams,
};
pub use pod::{pod, PodTruncation, TrainedPortSpace};
pub use port1d::{legendre_modes, vanishing_mode, PortEigenbasis};
