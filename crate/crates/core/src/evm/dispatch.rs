//! Recovers selector-dispatched function bodies from a runtime CFG.
//!
//! A dispatcher arm is a block ending in `PUSH4 sel … EQ PUSHn target JUMPI`. Each body is
//! the set of blocks reachable from its arm target. Reachability follows CFG edges plus
//! JUMPDEST offsets pushed inside the body, which is how solc passes return addresses to
//! internal routines; without it bodies would stop at the first internal call.

use std::collections::{BTreeSet, VecDeque};

use serde::Serialize;

use super::cfg::{BlockId, ControlFlowGraph, Terminator};
use super::disasm::Instruction;
use super::opcode::Opcode;
use crate::primitives::Selector;

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct FunctionBody {
    pub selector: Selector,
    pub entry_block: BlockId,
    pub blocks: Vec<BlockId>,
    pub instruction_sequence: Vec<Instruction>,
}

impl FunctionBody {
    pub fn opcodes(&self) -> Vec<Opcode> {
        self.instruction_sequence.iter().map(|i| i.opcode).collect()
    }
}

/// Code reachable from the entry point that is neither dispatcher nor a selector arm:
/// fallback, receive, and the shared revert paths.
#[derive(Debug, Clone, Default, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ResidualBody {
    pub blocks: Vec<BlockId>,
    pub instruction_sequence: Vec<Instruction>,
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct FunctionExtraction {
    pub functions: Vec<FunctionBody>,
    pub residual: ResidualBody,
    pub dispatcher_blocks: Vec<BlockId>,
    /// Set when no `PUSH4/EQ/JUMPI` arm was found.
    pub no_dispatcher: bool,
}

impl FunctionExtraction {
    pub fn selectors(&self) -> Vec<Selector> {
        self.functions.iter().map(|f| f.selector).collect()
    }

    pub fn function(&self, selector: Selector) -> Option<&FunctionBody> {
        self.functions.iter().find(|f| f.selector == selector)
    }
}

struct Arm {
    selector: Selector,
    target: BlockId,
}

/// Matches `PUSH4 sel (DUPn)? EQ PUSHn tag JUMPI` at the tail of a block.
fn arm_of(cfg: &ControlFlowGraph, block: BlockId) -> Option<Arm> {
    let b = cfg.block(block);
    let Terminator::ConditionalJump { target: Some(target) } = b.terminator else {
        return None;
    };
    let ins = &b.instructions;
    let n = ins.len();
    if n < 4 || !ins[n - 2].opcode.is_push() || ins[n - 3].opcode != Opcode::EQ {
        return None;
    }
    let window = &ins[n.saturating_sub(6)..n - 3];
    let push4 = window.iter().rev().find(|i| i.opcode == Opcode::PUSH4)?;
    let between_ok = window
        .iter()
        .skip_while(|i| i.offset != push4.offset)
        .skip(1)
        .all(|i| i.opcode.dup_depth().is_some() || i.opcode.swap_depth().is_some());
    if !between_ok {
        return None;
    }
    Some(Arm {
        selector: Selector::from_slice(&push4.immediate).ok()?,
        target,
    })
}

/// Selector-range split of a binary-search dispatcher, or selector extraction from calldata.
fn is_dispatcher_like(cfg: &ControlFlowGraph, block: BlockId) -> bool {
    let ins = &cfg.block(block).instructions;
    let has = |op: Opcode| ins.iter().any(|i| i.opcode == op);
    let push4_compare = ins.windows(2).any(|w| {
        w[0].opcode == Opcode::PUSH4 && matches!(w[1].opcode, Opcode::GT | Opcode::LT | Opcode::EQ)
            || w[1].opcode == Opcode::PUSH4 && w[0].opcode.dup_depth().is_some()
    });
    let selector_shift = has(Opcode::CALLDATALOAD) && (has(Opcode::SHR) || has(Opcode::DIV));
    let short_calldata_check = has(Opcode::CALLDATASIZE) && has(Opcode::LT) && ins.len() <= 8;
    block.0 == 0 || push4_compare || selector_shift || short_calldata_check
}

/// JUMPDESTs pushed as constants inside a block, excluding the target of its own jump.
fn pushed_labels(cfg: &ControlFlowGraph, block: BlockId) -> Vec<BlockId> {
    let ins = &cfg.block(block).instructions;
    ins.iter()
        .filter(|i| i.opcode.is_push() && i.opcode != Opcode::PUSH0)
        .filter_map(|i| i.push_offset())
        .filter_map(|offset| cfg.jumpdest_block(offset))
        .collect()
}

fn collect(cfg: &ControlFlowGraph, blocks: &BTreeSet<BlockId>) -> Vec<Instruction> {
    blocks
        .iter()
        .flat_map(|id| cfg.block(*id).instructions.iter().cloned())
        .collect()
}

pub fn extract_functions(cfg: &ControlFlowGraph) -> FunctionExtraction {
    if cfg.blocks.is_empty() {
        return FunctionExtraction {
            functions: Vec::new(),
            residual: ResidualBody::default(),
            dispatcher_blocks: Vec::new(),
            no_dispatcher: true,
        };
    }

    // Walk the dispatcher from the entry point, stopping at arm targets.
    let mut arms: Vec<Arm> = Vec::new();
    let mut dispatcher: BTreeSet<BlockId> = BTreeSet::new();
    let mut residual_roots: BTreeSet<BlockId> = BTreeSet::new();
    let mut seen: BTreeSet<BlockId> = BTreeSet::new();
    let mut queue = VecDeque::from([BlockId(0)]);
    while let Some(id) = queue.pop_front() {
        if !seen.insert(id) {
            continue;
        }
        let arm = arm_of(cfg, id);
        if arm.is_none() && !is_dispatcher_like(cfg, id) {
            residual_roots.insert(id);
            continue;
        }
        dispatcher.insert(id);
        for edge in cfg.successors(id) {
            if arm.as_ref().is_some_and(|a| a.target == edge.to) {
                continue;
            }
            queue.push_back(edge.to);
        }
        if let Some(arm) = arm {
            if !arms.iter().any(|a| a.selector == arm.selector) {
                arms.push(arm);
            }
        }
    }

    let reach = |roots: &[BlockId]| -> BTreeSet<BlockId> {
        let mut body = BTreeSet::new();
        let mut queue: VecDeque<BlockId> = roots.iter().copied().collect();
        while let Some(id) = queue.pop_front() {
            if dispatcher.contains(&id) || !body.insert(id) {
                continue;
            }
            queue.extend(cfg.successors(id).map(|e| e.to));
            queue.extend(pushed_labels(cfg, id));
        }
        body
    };

    let functions: Vec<FunctionBody> = arms
        .iter()
        .map(|arm| {
            let blocks = reach(&[arm.target]);
            FunctionBody {
                selector: arm.selector,
                entry_block: arm.target,
                instruction_sequence: collect(cfg, &blocks),
                blocks: blocks.into_iter().collect(),
            }
        })
        .collect();

    let roots: Vec<BlockId> = residual_roots.into_iter().collect();
    let residual_blocks = reach(&roots);
    FunctionExtraction {
        no_dispatcher: functions.is_empty(),
        functions,
        residual: ResidualBody {
            instruction_sequence: collect(cfg, &residual_blocks),
            blocks: residual_blocks.into_iter().collect(),
        },
        dispatcher_blocks: dispatcher.into_iter().collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evm::{build_cfg, disassemble};

    /// Two-arm dispatcher whose bodies both jump to a shared tail at 0x2a.
    fn two_arm_fixture() -> Vec<u8> {
        let mut code = vec![
            0x5f, 0x35, 0x60, 0xe0, 0x1c, // PUSH0 CALLDATALOAD PUSH1 0xe0 SHR
            0x80, 0x63, 0xaa, 0xbb, 0xcc, 0xdd, 0x14, 0x60, 0x1e, 0x57, // arm 1 -> 0x1e
            0x80, 0x63, 0x11, 0x22, 0x33, 0x44, 0x14, 0x60, 0x24, 0x57, // arm 2 -> 0x24
            0x5f, 0x5f, 0xfd, // PUSH0 PUSH0 REVERT (0x19..)
        ];
        assert_eq!(code.len(), 0x1c);
        code.extend([0x00, 0x00]); // padding to 0x1e
        code.extend([0x5b, 0x60, 0x01, 0x60, 0x2a, 0x56]); // 0x1e: JUMPDEST PUSH1 1 PUSH1 0x2a JUMP
        code.extend([0x5b, 0x60, 0x02, 0x60, 0x2a, 0x56]); // 0x24: JUMPDEST PUSH1 2 PUSH1 0x2a JUMP
        code.extend([0x5b, 0x55, 0x00]); // 0x2a: JUMPDEST SSTORE STOP
        code
    }

    #[test]
    fn two_arms_with_shared_tail() {
        let cfg = build_cfg(&disassemble(&two_arm_fixture()));
        let ex = extract_functions(&cfg);
        assert!(!ex.no_dispatcher);
        let selectors: Vec<String> = ex.selectors().iter().map(ToString::to_string).collect();
        assert_eq!(selectors, ["0xaabbccdd", "0x11223344"]);
        let tail = cfg.jumpdest_block(0x2a).unwrap();
        for f in &ex.functions {
            assert!(f.blocks.contains(&tail), "shared tail missing from {}", f.selector);
            assert!(f.blocks.iter().all(|b| !ex.dispatcher_blocks.contains(b)));
        }
        assert_eq!(ex.functions[0].entry_block, cfg.jumpdest_block(0x1e).unwrap());
    }

    #[test]
    fn no_dispatcher_pattern() {
        let cfg = build_cfg(&disassemble(&[0x60, 0x01, 0x60, 0x02, 0x01, 0x00]));
        let ex = extract_functions(&cfg);
        assert!(ex.functions.is_empty());
        assert!(ex.no_dispatcher);
        let empty = extract_functions(&build_cfg(&[]));
        assert!(empty.no_dispatcher);
    }
}
