//! Wire formats and the node / base-station state machines for
//! provisioning, registration, trusted authentication, termination and
//! peer key exchange.

mod bs;
pub mod frame;
pub mod messages;
mod node;
pub mod payload;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use bs::{BaseStation, NodeSecrets, Status, TaAccepted, TrustRecord};
pub use frame::{fragment, on_air_len, reassemble, Envelope, Frame, FrameError, FrameHeader, FrameKind, Message, Reassembler};
pub use messages::{open, seal, AckRecord, TaRecord};
pub use node::{probe_tag, Role, SensorNode, Session};
pub use payload::{decode_payload, encode_payload, IbeTrustPayload, PayloadError};

use crate::ibe::IbeError;
use crate::ids::NodeId;
use crate::secure_boot::AccessViolation;

/// Node lifecycle phase.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    /// Provisioned with keys and parameters.
    Dp,
    /// Registered with the base station in the controlled environment.
    Pdp,
    /// Booted in the field with a fresh trust value.
    Dy,
    /// Authentication request sent, waiting for the ack.
    Ta,
    Trusted,
    Halted,
    Terminated,
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Phase::Dp => "DP",
            Phase::Pdp => "PDP",
            Phase::Dy => "DY",
            Phase::Ta => "TA",
            Phase::Trusted => "TRUSTED",
            Phase::Halted => "HALTED",
            Phase::Terminated => "TERMINATED",
        })
    }
}

/// Why a received message was refused.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RejectReason {
    DecryptFailure,
    MacMismatch,
    UnknownId,
    TrustValueMismatch,
    NonceReplay,
    Malformed,
    NotInTrustList,
    BadPoint,
    NotTrusted,
    StaleAck,
    KeyConfirmationFailed,
    NoSession,
    ReassemblyTimeout,
}

impl fmt::Display for RejectReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = serde_json::to_value(self).expect("unit variant");
        f.write_str(s.as_str().expect("string"))
    }
}

#[derive(Debug, Error)]
pub enum ProtocolError {
    #[error("node {0} is already provisioned")]
    DuplicateId(NodeId),
    #[error("node {0} is not known to the base station")]
    UnknownId(NodeId),
    #[error("boot halted at level {0}")]
    BootHalted(usize),
    #[error("node is in phase {actual}, operation needs {expected}")]
    WrongPhase { expected: Phase, actual: Phase },
    #[error("peer {0} is not in the trust list")]
    NotInTrustList(NodeId),
    #[error("address {0} is reserved")]
    ReservedId(NodeId),
    #[error(transparent)]
    Ibe(#[from] IbeError),
    #[error(transparent)]
    Frame(#[from] FrameError),
    #[error(transparent)]
    Payload(#[from] PayloadError),
    #[error(transparent)]
    Access(#[from] AccessViolation),
    #[error(transparent)]
    Ake(#[from] crate::ake::AkeError),
}
