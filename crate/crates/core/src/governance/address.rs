use crate::evm::keccak256;
use crate::primitives::{Address, B256};

/// RLP encoding of the two-item list `[creator, nonce]`.
fn rlp_creator_nonce(creator: &Address, nonce: u64) -> Vec<u8> {
    let mut payload = Vec::with_capacity(30);
    payload.push(0x80 + 20);
    payload.extend_from_slice(&creator.0);
    match nonce {
        0 => payload.push(0x80),
        1..=0x7f => payload.push(nonce as u8),
        _ => {
            let bytes = nonce.to_be_bytes();
            let skip = bytes.iter().take_while(|b| **b == 0).count();
            payload.push(0x80 + (8 - skip) as u8);
            payload.extend_from_slice(&bytes[skip..]);
        }
    }
    // payload is at most 30 bytes, so the short list form always applies
    let mut out = Vec::with_capacity(payload.len() + 1);
    out.push(0xc0 + payload.len() as u8);
    out.extend(payload);
    out
}

/// Address of the contract created by `creator` with `CREATE` at the given nonce.
pub fn compute_create_address(creator: &Address, nonce: u64) -> Address {
    Address::from_word(&keccak256(&rlp_creator_nonce(creator, nonce)).0)
}

/// Address of the contract created by `creator` with `CREATE2`.
pub fn compute_create2_address(creator: &Address, salt: &B256, init_code: &[u8]) -> Address {
    let mut buf = Vec::with_capacity(85);
    buf.push(0xff);
    buf.extend_from_slice(&creator.0);
    buf.extend_from_slice(&salt.0);
    buf.extend_from_slice(&keccak256(init_code).0);
    Address::from_word(&keccak256(&buf).0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rlp_shapes() {
        let a = Address([0x11; 20]);
        assert_eq!(rlp_creator_nonce(&a, 0)[..2], [0xd6, 0x94]);
        assert_eq!(*rlp_creator_nonce(&a, 0).last().unwrap(), 0x80);
        assert_eq!(*rlp_creator_nonce(&a, 0x7f).last().unwrap(), 0x7f);
        assert_eq!(rlp_creator_nonce(&a, 0x80)[22..], [0x81, 0x80]);
        assert_eq!(rlp_creator_nonce(&a, 0x0100)[22..], [0x82, 0x01, 0x00]);
    }

    #[test]
    fn known_create_address() {
        // nonce-0 deployment from 0x6ac7…a2b0, a widely reproduced example
        let creator: Address = "0x6ac7ea33f8831ea9dcc53393aaa88b25a785dbf0".parse().unwrap();
        assert_eq!(
            compute_create_address(&creator, 0).to_string(),
            "0xcd234a471b72ba2f1ccf0a70fcaba648a5eecd8d"
        );
        assert_eq!(
            compute_create_address(&creator, 1).to_string(),
            "0x343c43a37d37dff08ae8c4a11544c718abb4fcf8"
        );
    }
}
