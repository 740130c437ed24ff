use sha3::{Digest, Keccak256};

use crate::primitives::{Selector, B256};

pub fn keccak256(bytes: &[u8]) -> B256 {
    B256(Keccak256::digest(bytes).into())
}

/// First four bytes of the keccak digest of a canonical signature such as `transfer(address,uint256)`.
pub fn compute_selector(signature: &str) -> Selector {
    let digest = keccak256(signature.as_bytes());
    Selector([digest.0[0], digest.0[1], digest.0[2], digest.0[3]])
}
