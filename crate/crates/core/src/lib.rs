pub mod error;
pub mod kernel;
pub mod mittag_leffler;
pub mod partition;
mod quad;
pub mod sampler;
pub mod scaling;
pub mod setspace;
pub mod stable;
pub mod validation;
pub mod wetting;

pub use error::{Error, Result};
pub use kernel::{KernelMode, KernelSpec, ReturnKernel, SlowlyVarying};
pub use partition::{Boundary, PartitionTable};
pub use sampler::{ContactSampler, ContactSet, RescaledSet};
