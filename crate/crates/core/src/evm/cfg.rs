use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Serialize;

use super::disasm::Instruction;
use super::opcode::Opcode;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct BlockId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "camelCase")]
pub enum EdgeKind {
    Fallthrough,
    Jump,
    Conditional,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct Edge {
    pub from: BlockId,
    pub to: BlockId,
    pub kind: EdgeKind,
}

/// How control leaves a block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub enum Terminator {
    /// `JUMP`; `target` is `None` when the destination is not a constant pushed right before it.
    Jump { target: Option<BlockId> },
    /// `JUMPI`; always also falls through.
    ConditionalJump { target: Option<BlockId> },
    /// STOP, RETURN, REVERT, SELFDESTRUCT, INVALID or an unassigned byte.
    Halt(Opcode),
    /// The next instruction is a JUMPDEST.
    Fallthrough,
    /// Ran off the end of the code.
    End,
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct BasicBlock {
    pub id: BlockId,
    pub start_offset: usize,
    pub instructions: Vec<Instruction>,
    pub terminator: Terminator,
}

impl BasicBlock {
    pub fn end_offset(&self) -> usize {
        self.instructions.last().map_or(self.start_offset, Instruction::next_offset)
    }
}

/// Why a jump did not get an edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub enum UnresolvedReason {
    /// Destination computed at run time.
    Dynamic,
    /// A constant destination that is not a JUMPDEST.
    InvalidTarget(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct UnresolvedJump {
    pub block: BlockId,
    pub offset: usize,
    pub reason: UnresolvedReason,
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ControlFlowGraph {
    pub blocks: Vec<BasicBlock>,
    pub edges: Vec<Edge>,
    pub unresolved: Vec<UnresolvedJump>,
    #[serde(skip)]
    by_offset: BTreeMap<usize, BlockId>,
}

impl ControlFlowGraph {
    pub fn block(&self, id: BlockId) -> &BasicBlock {
        &self.blocks[id.0]
    }

    /// The block starting at a JUMPDEST offset.
    pub fn jumpdest_block(&self, offset: usize) -> Option<BlockId> {
        let id = *self.by_offset.get(&offset)?;
        let block = self.block(id);
        (block.instructions.first()?.opcode == Opcode::JUMPDEST).then_some(id)
    }

    pub fn successors(&self, id: BlockId) -> impl Iterator<Item = &Edge> {
        self.edges.iter().filter(move |e| e.from == id)
    }

    pub fn instruction_count(&self) -> usize {
        self.blocks.iter().map(|b| b.instructions.len()).sum()
    }

    /// Graphviz rendering for debugging.
    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph cfg {\n  node [shape=box fontname=monospace];\n");
        for block in &self.blocks {
            let mut label = String::new();
            for ins in &block.instructions {
                let _ = write!(label, "{:#06x}: {}\\l", ins.offset, ins);
            }
            let _ = writeln!(out, "  b{} [label=\"{}\"];", block.id.0, label);
        }
        for edge in &self.edges {
            let style = match edge.kind {
                EdgeKind::Fallthrough => "dashed",
                EdgeKind::Jump => "solid",
                EdgeKind::Conditional => "bold",
            };
            let _ = writeln!(out, "  b{} -> b{} [style={}];", edge.from.0, edge.to.0, style);
        }
        out.push_str("}\n");
        out
    }
}

/// Splits instructions into basic blocks at JUMPDESTs and after terminators, then links them.
pub fn build_cfg(instructions: &[Instruction]) -> ControlFlowGraph {
    let mut blocks: Vec<BasicBlock> = Vec::new();
    let mut current: Vec<Instruction> = Vec::new();

    let flush = |current: &mut Vec<Instruction>, blocks: &mut Vec<BasicBlock>| {
        if current.is_empty() {
            return;
        }
        let id = BlockId(blocks.len());
        blocks.push(BasicBlock {
            id,
            start_offset: current[0].offset,
            instructions: std::mem::take(current),
            terminator: Terminator::End,
        });
    };

    for ins in instructions {
        if ins.opcode == Opcode::JUMPDEST {
            flush(&mut current, &mut blocks);
        }
        current.push(ins.clone());
        if ins.opcode.ends_block() {
            flush(&mut current, &mut blocks);
        }
    }
    flush(&mut current, &mut blocks);

    let by_offset: BTreeMap<usize, BlockId> = blocks.iter().map(|b| (b.start_offset, b.id)).collect();
    let jumpdest = |offset: usize| -> Option<BlockId> {
        let id = *by_offset.get(&offset)?;
        (blocks[id.0].instructions[0].opcode == Opcode::JUMPDEST).then_some(id)
    };

    let mut edges = Vec::new();
    let mut unresolved = Vec::new();
    let mut terminators = Vec::with_capacity(blocks.len());
    for (index, block) in blocks.iter().enumerate() {
        let id = block.id;
        let last = block.instructions.last().expect("blocks are never empty");
        let next = blocks.get(index + 1).map(|b| b.id);

        let mut resolve = |edges: &mut Vec<Edge>, kind: EdgeKind| -> Option<BlockId> {
            let n = block.instructions.len();
            let constant = (n >= 2).then(|| block.instructions[n - 2].push_offset()).flatten();
            match constant {
                Some(offset) => match jumpdest(offset) {
                    Some(to) => {
                        edges.push(Edge { from: id, to, kind });
                        Some(to)
                    }
                    None => {
                        unresolved.push(UnresolvedJump {
                            block: id,
                            offset: last.offset,
                            reason: UnresolvedReason::InvalidTarget(offset),
                        });
                        None
                    }
                },
                None => {
                    unresolved.push(UnresolvedJump {
                        block: id,
                        offset: last.offset,
                        reason: UnresolvedReason::Dynamic,
                    });
                    None
                }
            }
        };

        let terminator = match last.opcode {
            Opcode::JUMP => Terminator::Jump {
                target: resolve(&mut edges, EdgeKind::Jump),
            },
            Opcode::JUMPI => {
                let target = resolve(&mut edges, EdgeKind::Conditional);
                if let Some(to) = next {
                    edges.push(Edge {
                        from: id,
                        to,
                        kind: EdgeKind::Fallthrough,
                    });
                }
                Terminator::ConditionalJump { target }
            }
            op if op.ends_block() => Terminator::Halt(op),
            _ => match next {
                Some(to) => {
                    edges.push(Edge {
                        from: id,
                        to,
                        kind: EdgeKind::Fallthrough,
                    });
                    Terminator::Fallthrough
                }
                None => Terminator::End,
            },
        };
        terminators.push(terminator);
    }
    for (block, terminator) in blocks.iter_mut().zip(terminators) {
        block.terminator = terminator;
    }

    ControlFlowGraph {
        blocks,
        edges,
        unresolved,
        by_offset,
    }
}
