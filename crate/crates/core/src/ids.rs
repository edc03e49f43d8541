use std::fmt;

use serde::{Deserialize, Serialize};

/// Two-byte node address used on the wire.
///
/// Address 0 is reserved for the base station. Every address maps to the
/// string identity that is hashed onto the curve, so the wire format stays
/// compact while H1 still sees a human readable identity.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub u16);

impl NodeId {
    pub const BASE_STATION: NodeId = NodeId(0);

    pub fn is_base_station(self) -> bool {
        self.0 == 0
    }

    /// String identity used for key extraction.
    pub fn identity(self) -> String {
        if self.is_base_station() {
            "base-station".to_string()
        } else {
            format!("node-{:03}", self.0)
        }
    }

    pub fn to_be_bytes(self) -> [u8; 2] {
        self.0.to_be_bytes()
    }

    pub fn from_be_bytes(bytes: [u8; 2]) -> Self {
        NodeId(u16::from_be_bytes(bytes))
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_base_station() {
            write!(f, "bs")
        } else {
            write!(f, "{}", self.0)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identities() {
        assert_eq!(NodeId(1).identity(), "node-001");
        assert_eq!(NodeId(200).identity(), "node-200");
        assert_eq!(NodeId::BASE_STATION.identity(), "base-station");
        assert_eq!(NodeId::from_be_bytes(NodeId(0x0102).to_be_bytes()), NodeId(0x0102));
    }
}
