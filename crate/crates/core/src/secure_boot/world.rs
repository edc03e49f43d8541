//! Secure/normal world split standing in for TrustZone. Secure assets are
//! reachable only while the processor is in the secure world.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ibe::PrivateKey;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum World {
    Secure,
    Normal,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SecureService {
    Encrypt,
    Decrypt,
    Sha2,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SecureRequest {
    ReadPrivateKey,
    Execute(SecureService),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SecureAsset {
    PrivateKey(PrivateKey),
    Service(SecureService),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("access violation: {request:?} attempted from the normal world")]
pub struct AccessViolation {
    pub request: SecureRequest,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AccessRecord {
    pub t: u64,
    pub request: SecureRequest,
    pub granted: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SwitchRecord {
    pub t: u64,
    pub from: World,
    pub to: World,
}

/// Execution mode plus the secure region owned by one node.
#[derive(Clone, Debug)]
pub struct WorldState {
    mode: World,
    private_key: Option<PrivateKey>,
    switches: u64,
    access_log: Vec<AccessRecord>,
    switch_log: Vec<SwitchRecord>,
}

impl Default for WorldState {
    fn default() -> Self {
        Self::new()
    }
}

impl WorldState {
    /// Processors come out of reset in the secure world.
    pub fn new() -> Self {
        WorldState {
            mode: World::Secure,
            private_key: None,
            switches: 0,
            access_log: Vec::new(),
            switch_log: Vec::new(),
        }
    }

    pub fn mode(&self) -> World {
        self.mode
    }

    pub fn switch_count(&self) -> u64 {
        self.switches
    }

    pub fn access_log(&self) -> &[AccessRecord] {
        &self.access_log
    }

    pub fn switch_log(&self) -> &[SwitchRecord] {
        &self.switch_log
    }

    /// Power cycle: back to the secure world without a monitor call.
    pub fn reset(&mut self) {
        self.mode = World::Secure;
    }

    /// Stores the key in the secure region; only possible from secure mode.
    pub fn install_key(&mut self, t: u64, key: PrivateKey) -> Result<(), AccessViolation> {
        let granted = self.mode == World::Secure;
        self.access_log.push(AccessRecord {
            t,
            request: SecureRequest::ReadPrivateKey,
            granted,
        });
        if !granted {
            return Err(AccessViolation {
                request: SecureRequest::ReadPrivateKey,
            });
        }
        self.private_key = Some(key);
        Ok(())
    }

    /// Monitor call. Returns the transition when the mode actually changed.
    pub fn switch_world(&mut self, t: u64, target: World) -> Option<SwitchRecord> {
        if self.mode == target {
            return None;
        }
        let record = SwitchRecord {
            t,
            from: self.mode,
            to: target,
        };
        self.mode = target;
        self.switches += 1;
        self.switch_log.push(record.clone());
        Some(record)
    }

    pub fn secure_access(&mut self, t: u64, request: SecureRequest) -> Result<SecureAsset, AccessViolation> {
        let asset = match (self.mode, request) {
            (World::Normal, _) => None,
            (World::Secure, SecureRequest::ReadPrivateKey) => self.private_key.clone().map(SecureAsset::PrivateKey),
            (World::Secure, SecureRequest::Execute(service)) => Some(SecureAsset::Service(service)),
        };
        self.access_log.push(AccessRecord {
            t,
            request,
            granted: asset.is_some(),
        });
        asset.ok_or(AccessViolation { request })
    }
}
