//! Minimal dense-tensor plumbing shared by the text classifier and ranker:
//! named parameter sets, Adam, Xavier init, and the checkpoint format.

mod adam;
mod checkpoint;
mod params;

pub use adam::{Adam, AdamConfig};
pub use checkpoint::{read_checkpoint, write_checkpoint, Checkpoint, CHECKPOINT_MAGIC, CHECKPOINT_VERSION};
pub use params::{xavier_uniform, ParamSet, Tensor};

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}
