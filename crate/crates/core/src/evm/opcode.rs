use std::fmt;

use serde::{Serialize, Serializer};

/// One EVM opcode byte. Bytes without an assigned instruction are kept verbatim and
/// report as `INVALID`.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Opcode(pub u8);

struct Info {
    name: &'static str,
    pops: u8,
    pushes: u8,
}

const fn op(name: &'static str, pops: u8, pushes: u8) -> Option<Info> {
    Some(Info { name, pops, pushes })
}

const PUSH_NAMES: [&str; 33] = [
    "PUSH0", "PUSH1", "PUSH2", "PUSH3", "PUSH4", "PUSH5", "PUSH6", "PUSH7", "PUSH8", "PUSH9",
    "PUSH10", "PUSH11", "PUSH12", "PUSH13", "PUSH14", "PUSH15", "PUSH16", "PUSH17", "PUSH18",
    "PUSH19", "PUSH20", "PUSH21", "PUSH22", "PUSH23", "PUSH24", "PUSH25", "PUSH26", "PUSH27",
    "PUSH28", "PUSH29", "PUSH30", "PUSH31", "PUSH32",
];
const DUP_NAMES: [&str; 16] = [
    "DUP1", "DUP2", "DUP3", "DUP4", "DUP5", "DUP6", "DUP7", "DUP8", "DUP9", "DUP10", "DUP11",
    "DUP12", "DUP13", "DUP14", "DUP15", "DUP16",
];
const SWAP_NAMES: [&str; 16] = [
    "SWAP1", "SWAP2", "SWAP3", "SWAP4", "SWAP5", "SWAP6", "SWAP7", "SWAP8", "SWAP9", "SWAP10",
    "SWAP11", "SWAP12", "SWAP13", "SWAP14", "SWAP15", "SWAP16",
];
const LOG_NAMES: [&str; 5] = ["LOG0", "LOG1", "LOG2", "LOG3", "LOG4"];

fn info(byte: u8) -> Option<Info> {
    match byte {
        0x00 => op("STOP", 0, 0),
        0x01 => op("ADD", 2, 1),
        0x02 => op("MUL", 2, 1),
        0x03 => op("SUB", 2, 1),
        0x04 => op("DIV", 2, 1),
        0x05 => op("SDIV", 2, 1),
        0x06 => op("MOD", 2, 1),
        0x07 => op("SMOD", 2, 1),
        0x08 => op("ADDMOD", 3, 1),
        0x09 => op("MULMOD", 3, 1),
        0x0a => op("EXP", 2, 1),
        0x0b => op("SIGNEXTEND", 2, 1),
        0x10 => op("LT", 2, 1),
        0x11 => op("GT", 2, 1),
        0x12 => op("SLT", 2, 1),
        0x13 => op("SGT", 2, 1),
        0x14 => op("EQ", 2, 1),
        0x15 => op("ISZERO", 1, 1),
        0x16 => op("AND", 2, 1),
        0x17 => op("OR", 2, 1),
        0x18 => op("XOR", 2, 1),
        0x19 => op("NOT", 1, 1),
        0x1a => op("BYTE", 2, 1),
        0x1b => op("SHL", 2, 1),
        0x1c => op("SHR", 2, 1),
        0x1d => op("SAR", 2, 1),
        0x1e => op("CLZ", 1, 1),
        0x20 => op("KECCAK256", 2, 1),
        0x30 => op("ADDRESS", 0, 1),
        0x31 => op("BALANCE", 1, 1),
        0x32 => op("ORIGIN", 0, 1),
        0x33 => op("CALLER", 0, 1),
        0x34 => op("CALLVALUE", 0, 1),
        0x35 => op("CALLDATALOAD", 1, 1),
        0x36 => op("CALLDATASIZE", 0, 1),
        0x37 => op("CALLDATACOPY", 3, 0),
        0x38 => op("CODESIZE", 0, 1),
        0x39 => op("CODECOPY", 3, 0),
        0x3a => op("GASPRICE", 0, 1),
        0x3b => op("EXTCODESIZE", 1, 1),
        0x3c => op("EXTCODECOPY", 4, 0),
        0x3d => op("RETURNDATASIZE", 0, 1),
        0x3e => op("RETURNDATACOPY", 3, 0),
        0x3f => op("EXTCODEHASH", 1, 1),
        0x40 => op("BLOCKHASH", 1, 1),
        0x41 => op("COINBASE", 0, 1),
        0x42 => op("TIMESTAMP", 0, 1),
        0x43 => op("NUMBER", 0, 1),
        0x44 => op("PREVRANDAO", 0, 1),
        0x45 => op("GASLIMIT", 0, 1),
        0x46 => op("CHAINID", 0, 1),
        0x47 => op("SELFBALANCE", 0, 1),
        0x48 => op("BASEFEE", 0, 1),
        0x49 => op("BLOBHASH", 1, 1),
        0x4a => op("BLOBBASEFEE", 0, 1),
        0x50 => op("POP", 1, 0),
        0x51 => op("MLOAD", 1, 1),
        0x52 => op("MSTORE", 2, 0),
        0x53 => op("MSTORE8", 2, 0),
        0x54 => op("SLOAD", 1, 1),
        0x55 => op("SSTORE", 2, 0),
        0x56 => op("JUMP", 1, 0),
        0x57 => op("JUMPI", 2, 0),
        0x58 => op("PC", 0, 1),
        0x59 => op("MSIZE", 0, 1),
        0x5a => op("GAS", 0, 1),
        0x5b => op("JUMPDEST", 0, 0),
        0x5c => op("TLOAD", 1, 1),
        0x5d => op("TSTORE", 2, 0),
        0x5e => op("MCOPY", 3, 0),
        0x5f..=0x7f => op(PUSH_NAMES[(byte - 0x5f) as usize], 0, 1),
        0x80..=0x8f => {
            let n = byte - 0x7f;
            op(DUP_NAMES[(n - 1) as usize], n, n + 1)
        }
        0x90..=0x9f => {
            let n = byte - 0x8f;
            op(SWAP_NAMES[(n - 1) as usize], n + 1, n + 1)
        }
        0xa0..=0xa4 => {
            let n = byte - 0xa0;
            op(LOG_NAMES[n as usize], n + 2, 0)
        }
        0xf0 => op("CREATE", 3, 1),
        0xf1 => op("CALL", 7, 1),
        0xf2 => op("CALLCODE", 7, 1),
        0xf3 => op("RETURN", 2, 0),
        0xf4 => op("DELEGATECALL", 6, 1),
        0xf5 => op("CREATE2", 4, 1),
        0xfa => op("STATICCALL", 6, 1),
        0xfd => op("REVERT", 2, 0),
        0xfe => op("INVALID", 0, 0),
        0xff => op("SELFDESTRUCT", 1, 0),
        _ => None,
    }
}

impl Opcode {
    pub const STOP: Opcode = Opcode(0x00);
    pub const EQ: Opcode = Opcode(0x14);
    pub const ISZERO: Opcode = Opcode(0x15);
    pub const AND: Opcode = Opcode(0x16);
    pub const GT: Opcode = Opcode(0x11);
    pub const LT: Opcode = Opcode(0x10);
    pub const SHR: Opcode = Opcode(0x1c);
    pub const DIV: Opcode = Opcode(0x04);
    pub const ADDRESS: Opcode = Opcode(0x30);
    pub const CALLER: Opcode = Opcode(0x33);
    pub const CALLDATALOAD: Opcode = Opcode(0x35);
    pub const CALLDATASIZE: Opcode = Opcode(0x36);
    pub const SLOAD: Opcode = Opcode(0x54);
    pub const JUMP: Opcode = Opcode(0x56);
    pub const JUMPI: Opcode = Opcode(0x57);
    pub const JUMPDEST: Opcode = Opcode(0x5b);
    pub const PUSH0: Opcode = Opcode(0x5f);
    pub const PUSH4: Opcode = Opcode(0x63);
    pub const PUSH20: Opcode = Opcode(0x73);
    pub const CREATE: Opcode = Opcode(0xf0);
    pub const RETURN: Opcode = Opcode(0xf3);
    pub const DELEGATECALL: Opcode = Opcode(0xf4);
    pub const CREATE2: Opcode = Opcode(0xf5);
    pub const REVERT: Opcode = Opcode(0xfd);
    pub const INVALID: Opcode = Opcode(0xfe);
    pub const SELFDESTRUCT: Opcode = Opcode(0xff);

    pub fn byte(self) -> u8 {
        self.0
    }

    /// Mnemonic; unassigned bytes report as `INVALID`.
    pub fn name(self) -> &'static str {
        info(self.0).map_or("INVALID", |i| i.name)
    }

    pub fn from_name(name: &str) -> Option<Opcode> {
        let upper = name.trim().to_ascii_uppercase();
        let upper = match upper.as_str() {
            "SHA3" => "KECCAK256".to_string(),
            "DIFFICULTY" => "PREVRANDAO".to_string(),
            "SUICIDE" => "SELFDESTRUCT".to_string(),
            _ => upper,
        };
        (0..=255u8).map(Opcode).find(|op| info(op.0).is_some_and(|i| i.name == upper))
    }

    /// Whether the byte is an assigned instruction in the current instruction set.
    pub fn is_known(self) -> bool {
        info(self.0).is_some()
    }

    /// Number of immediate bytes following the opcode (PUSH1..PUSH32 only).
    pub fn immediate_len(self) -> usize {
        match self.0 {
            0x60..=0x7f => (self.0 - 0x5f) as usize,
            _ => 0,
        }
    }

    pub fn is_push(self) -> bool {
        (0x5f..=0x7f).contains(&self.0)
    }

    pub fn dup_depth(self) -> Option<usize> {
        (0x80..=0x8f).contains(&self.0).then(|| (self.0 - 0x7f) as usize)
    }

    pub fn swap_depth(self) -> Option<usize> {
        (0x90..=0x9f).contains(&self.0).then(|| (self.0 - 0x8f) as usize)
    }

    /// Stack items consumed and produced; unknown bytes halt like `INVALID`.
    pub fn stack_effect(self) -> (usize, usize) {
        info(self.0).map_or((0, 0), |i| (i.pops as usize, i.pushes as usize))
    }

    /// Instructions after which control never falls through to the next byte.
    pub fn ends_block(self) -> bool {
        matches!(self.0, 0x00 | 0x56 | 0x57 | 0xf3 | 0xfd | 0xfe | 0xff) || !self.is_known()
    }
}

impl fmt::Display for Opcode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_known() {
            f.write_str(self.name())
        } else {
            write!(f, "INVALID(0x{:02x})", self.0)
        }
    }
}

impl fmt::Debug for Opcode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl Serialize for Opcode {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn push_widths() {
        assert_eq!(Opcode(0x5f).immediate_len(), 0);
        assert_eq!(Opcode(0x60).immediate_len(), 1);
        assert_eq!(Opcode(0x7f).immediate_len(), 32);
        assert_eq!(Opcode(0x80).immediate_len(), 0);
    }

    #[test]
    fn names_round_trip() {
        for byte in 0..=255u8 {
            let op = Opcode(byte);
            if op.is_known() && byte != 0xfe {
                assert_eq!(Opcode::from_name(op.name()), Some(op), "{op}");
            }
        }
        assert_eq!(Opcode::from_name("sha3"), Some(Opcode(0x20)));
        assert_eq!(Opcode(0x0c).name(), "INVALID");
        assert_eq!(Opcode(0x0c).to_string(), "INVALID(0x0c)");
    }

    #[test]
    fn stack_effects() {
        assert_eq!(Opcode(0x80).stack_effect(), (1, 2));
        assert_eq!(Opcode(0x9f).stack_effect(), (17, 17));
        assert_eq!(Opcode(0xa4).stack_effect(), (6, 0));
        assert_eq!(Opcode::CALLER.stack_effect(), (0, 1));
    }
}
