//! SHA-256 helpers shared by the measurement, MAC and hash-to-group code.

use sha2::{Digest, Sha256};

pub const MAC_LEN: usize = 4;

pub fn sha256(parts: &[&[u8]]) -> [u8; 32] {
    let mut hasher = Sha256::new();
    for part in parts {
        hasher.update(part);
    }
    hasher.finalize().into()
}

/// Unkeyed MAC: the first four bytes of SHA-256 over the concatenated parts.
pub fn truncated_mac(parts: &[&[u8]]) -> [u8; MAC_LEN] {
    let full = sha256(parts);
    let mut mac = [0u8; MAC_LEN];
    mac.copy_from_slice(&full[..MAC_LEN]);
    mac
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn concatenation_is_transparent() {
        assert_eq!(sha256(&[b"ab", b"c"]), sha256(&[b"abc"]));
        assert_eq!(truncated_mac(&[b"abc"]), [0xba, 0x78, 0x16, 0xbf]);
    }
}
