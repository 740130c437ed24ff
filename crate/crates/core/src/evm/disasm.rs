use std::fmt;

use serde::Serialize;

use super::opcode::Opcode;
use crate::primitives::{decode_hex, HexError};

/// A single decoded instruction. `immediate` is only populated for PUSH1..PUSH32 and always
/// holds exactly the PUSH width; bytes past the end of the code read as zero and are
/// counted in `padding`.
#[derive(Clone, PartialEq, Eq, Hash, Serialize)]
pub struct Instruction {
    pub offset: usize,
    pub opcode: Opcode,
    #[serde(serialize_with = "crate::primitives::hex_bytes::serialize", skip_serializing_if = "Vec::is_empty")]
    pub immediate: Vec<u8>,
    #[serde(skip_serializing_if = "is_zero")]
    pub padding: usize,
}

fn is_zero(n: &usize) -> bool {
    *n == 0
}

impl Instruction {
    pub fn size(&self) -> usize {
        1 + self.immediate.len()
    }

    pub fn next_offset(&self) -> usize {
        self.offset + self.size()
    }

    /// The pushed value as a big-endian byte string (empty for PUSH0 and non-push opcodes).
    pub fn push_value(&self) -> Option<&[u8]> {
        self.opcode.is_push().then_some(self.immediate.as_slice())
    }

    /// The pushed value as a code offset, when it fits in a usize.
    pub fn push_offset(&self) -> Option<usize> {
        let value = self.push_value()?;
        let significant: Vec<u8> = value.iter().copied().skip_while(|b| *b == 0).collect();
        if significant.len() > std::mem::size_of::<usize>() {
            return None;
        }
        Some(significant.iter().fold(0usize, |acc, b| (acc << 8) | *b as usize))
    }
}

impl fmt::Display for Instruction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.immediate.is_empty() {
            write!(f, "{}", self.opcode)
        } else {
            write!(f, "{} 0x{}", self.opcode, hex::encode(&self.immediate))
        }
    }
}

impl fmt::Debug for Instruction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:#06x}: {}", self.offset, self)
    }
}

/// Linear-sweep disassembly. Total: every byte sequence decodes.
pub fn disassemble(code: &[u8]) -> Vec<Instruction> {
    let mut out = Vec::with_capacity(code.len() / 2);
    let mut pc = 0;
    while pc < code.len() {
        let opcode = Opcode(code[pc]);
        let width = opcode.immediate_len();
        let mut immediate = vec![0u8; width];
        let available = code.len().saturating_sub(pc + 1).min(width);
        immediate[..available].copy_from_slice(&code[pc + 1..pc + 1 + available]);
        out.push(Instruction {
            offset: pc,
            opcode,
            immediate,
            padding: width - available,
        });
        pc += 1 + width;
    }
    out
}

/// Re-encodes instructions. Padding added to a truncated PUSH is dropped again, so
/// `serialize(&disassemble(code)) == code`.
pub fn serialize(instructions: &[Instruction]) -> Vec<u8> {
    let mut out = Vec::with_capacity(instructions.iter().map(Instruction::size).sum());
    for ins in instructions {
        out.push(ins.opcode.byte());
        let present = ins.immediate.len().saturating_sub(ins.padding);
        out.extend_from_slice(&ins.immediate[..present]);
    }
    out
}

/// Drops PUSH payloads, keeping one opcode per instruction.
pub fn strip_push_arguments(instructions: &[Instruction]) -> Vec<Opcode> {
    instructions.iter().map(|ins| ins.opcode).collect()
}

/// Accepts bytecode as hex text with an optional `0x` prefix.
pub fn parse_bytecode(text: &str) -> Result<Vec<u8>, HexError> {
    decode_hex(text)
}
