//! EVM bytecode: disassembly, control flow, dispatcher recovery and hashing.

mod cfg;
mod disasm;
mod dispatch;
mod hash;
mod opcode;

pub use cfg::{
    build_cfg, BasicBlock, BlockId, ControlFlowGraph, Edge, EdgeKind, Terminator, UnresolvedJump,
    UnresolvedReason,
};
pub use disasm::{disassemble, parse_bytecode, serialize, strip_push_arguments, Instruction};
pub use dispatch::{extract_functions, FunctionBody, FunctionExtraction, ResidualBody};
pub use hash::{compute_selector, keccak256};
pub use opcode::Opcode;

/// Disassemble, build the CFG and recover function bodies in one go.
pub fn functions_of(code: &[u8]) -> FunctionExtraction {
    extract_functions(&build_cfg(&disassemble(code)))
}
