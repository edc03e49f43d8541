//! Identity-based trusted authentication for wireless sensor networks.
//!
//! The crate bundles Boneh-Franklin identity-based encryption on a
//! supersingular curve, a measured secure-boot chain, the node to
//! base-station authentication protocol, a one-pass identity-based key
//! exchange, an energy model and a deterministic discrete-event simulator
//! that ties them together.

pub mod ake;
pub mod digest;
pub mod energy;
pub mod ibe;
pub mod ids;
pub mod protocol;
pub mod secure_boot;
pub mod sim;

pub use ids::NodeId;
