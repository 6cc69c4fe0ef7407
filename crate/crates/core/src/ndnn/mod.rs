//! Minimal dense tensor stack with tape-based reverse-mode gradients.
//!
//! Values are recorded eagerly on a [`Graph`] that borrows a [`ParamSet`];
//! [`Graph::backward`] walks the tape in reverse and returns per-parameter
//! [`Gradients`]. Everything is generic over [`Real`] so the same layers
//! run in `f64` for gradient checks and `f32` for training.

mod checkpoint;
pub mod gradcheck;
pub mod gradsuite;
mod graph;
mod init;
mod optim;
mod params;
mod tensor;

use std::fmt::Debug;
use std::iter::Sum;
use std::ops::{AddAssign, DivAssign, MulAssign, SubAssign};
use std::sync::atomic::{AtomicBool, Ordering};

use num_traits::{Float, FromPrimitive, ToPrimitive};
use serde::{Deserialize, Serialize};

pub use checkpoint::{read_checkpoint, write_checkpoint, Checkpoint};
pub use graph::{Gradients, Graph, Var};
pub use init::{default_init, he_init, normal_init, InitScheme};
pub use optim::{OptimConfig, Optimizer, OptimizerKind};
pub use params::{ParamEntry, ParamId, ParamSet};
pub use tensor::Tensor;

/// Floating-point element type.
pub trait Real:
    Float + FromPrimitive + ToPrimitive + Sum + AddAssign + SubAssign + MulAssign + DivAssign + Default + Debug + Send + Sync + 'static
{
    const BYTES: usize;

    fn c(x: f64) -> Self {
        Self::from_f64(x).expect("representable constant")
    }

    fn f64(self) -> f64 {
        self.to_f64().expect("finite conversion")
    }

    fn write_le(self, out: &mut Vec<u8>);

    fn read_le(bytes: &[u8]) -> Self;
}

impl Real for f32 {
    const BYTES: usize = 4;

    fn write_le(self, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.to_le_bytes());
    }

    fn read_le(bytes: &[u8]) -> Self {
        f32::from_le_bytes(bytes.try_into().expect("4 bytes"))
    }
}

impl Real for f64 {
    const BYTES: usize = 8;

    fn write_le(self, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.to_le_bytes());
    }

    fn read_le(bytes: &[u8]) -> Self {
        f64::from_le_bytes(bytes.try_into().expect("8 bytes"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PoolMode {
    Max,
    Avg,
}

static PARALLEL: AtomicBool = AtomicBool::new(true);

/// Enables batch-level parallelism inside conv and pool kernels. Results
/// are bitwise identical either way: per-sample partial sums are always
/// reduced in sample order.
pub fn set_parallel(enabled: bool) {
    PARALLEL.store(enabled, Ordering::Relaxed);
}

pub(crate) fn parallel() -> bool {
    PARALLEL.load(Ordering::Relaxed)
}
