//! Program transformations: speculation-passing style, the observation
//! transformation, assertion elimination, leakage instrumentation and the
//! product construction.

pub mod assert_elim;
pub mod leak_inst;
pub mod phi;
pub mod product;
pub mod sps;
pub mod tobs;

pub use assert_elim::{assert_elim, AssertElimError};
pub use leak_inst::{decode_obs, encode_obs, leak_instrument, LeakInstError};
pub use phi::{PhiError, PhiSpec};
pub use product::{default_offset, product, product_input, rtag, ProductError};
pub use sps::{sps, sps_for, sps_v4};
pub use tobs::{t_obs, t_obs_inv, t_obs_truncated, TObsError};
