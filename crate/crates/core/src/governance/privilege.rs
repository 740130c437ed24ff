//! Finds functions gated on `msg.sender` being a specific address.
//!
//! Each function body is walked from its entry with a small abstract stack that tracks
//! constants, `CALLER`, `ADDRESS`, `SLOAD` results (with the packed-slot shift) and
//! `CALLER == x` comparisons. Jumps to constant targets are followed, so checks inside
//! internal routines such as modifiers are found through the pushed return address.
//! A `JUMPI` whose condition is such a comparison is a privileged check.

use std::collections::{BTreeSet, HashSet, VecDeque};

use primitive_types::U256;
use serde::Serialize;

use crate::chain::ChainData;
use crate::evm::{build_cfg, disassemble, extract_functions, BlockId, ControlFlowGraph, FunctionBody, Instruction, Opcode, Terminator};
use crate::primitives::{Address, Selector, B256};

/// Upper bound on (block, stack) states explored per function.
const STATE_BUDGET: usize = 4096;
/// Stack entries that distinguish two states at the same block.
const KEY_DEPTH: usize = 24;
const MAX_STACK: usize = 1024;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
enum Sym {
    Unknown,
    Const(U256),
    Caller,
    SelfAddress,
    /// Storage word, shifted right by `shift` bytes. `slot` is `None` for computed slots.
    Storage { slot: Option<U256>, shift: u32 },
    CallerEq(Comparand),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
enum Comparand {
    Const(U256),
    SelfAddress,
    Storage { slot: Option<U256>, shift: u32 },
    Unknown,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "camelCase")]
pub enum ComparandSource {
    #[serde(rename_all = "camelCase")]
    Push20Immediate { address: Address },
    #[serde(rename_all = "camelCase")]
    StorageSlot { slot: B256, byte_offset: u32 },
    /// `address(this)`.
    ContractAddress,
    Unresolved,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum Controller {
    SelfGoverned,
    External,
    Unresolved,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct PrivilegedFunctionFinding {
    pub selector: Selector,
    /// Offset of the `JUMPI` that branches on the comparison.
    pub check_offset: usize,
    pub comparand_source: ComparandSource,
    pub resolved_address: Option<Address>,
    pub controller: Controller,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Clone, Default)]
struct Stack(Vec<Sym>);

impl Stack {
    fn pop(&mut self) -> Sym {
        self.0.pop().unwrap_or(Sym::Unknown)
    }

    fn push(&mut self, sym: Sym) {
        if self.0.len() >= MAX_STACK {
            self.0.remove(0);
        }
        self.0.push(sym);
    }

    fn dup(&mut self, depth: usize) {
        let len = self.0.len();
        let sym = if depth <= len { self.0[len - depth].clone() } else { Sym::Unknown };
        self.push(sym);
    }

    fn swap(&mut self, depth: usize) {
        while self.0.len() <= depth {
            self.0.insert(0, Sym::Unknown);
        }
        let len = self.0.len();
        self.0.swap(len - 1, len - 1 - depth);
    }

    fn key(&self) -> Vec<Sym> {
        let len = self.0.len();
        self.0[len.saturating_sub(KEY_DEPTH)..].to_vec()
    }
}

fn comparand_of(sym: &Sym) -> Comparand {
    match sym {
        Sym::Const(v) => Comparand::Const(*v),
        Sym::SelfAddress => Comparand::SelfAddress,
        Sym::Storage { slot, shift } => Comparand::Storage { slot: *slot, shift: *shift },
        _ => Comparand::Unknown,
    }
}

/// `Some(k)` when `v == 256^k`.
fn byte_power(v: U256) -> Option<u32> {
    (0..32u32).find(|k| v == U256::one() << (8 * k))
}

fn fold(op: Opcode, a: U256, b: U256) -> Option<U256> {
    let bool_word = |x: bool| if x { U256::one() } else { U256::zero() };
    Some(match op.byte() {
        0x01 => a.overflowing_add(b).0,
        0x02 => a.overflowing_mul(b).0,
        0x03 => a.overflowing_sub(b).0,
        0x04 => {
            if b.is_zero() {
                U256::zero()
            } else {
                a / b
            }
        }
        0x0a => a.overflowing_pow(b).0,
        0x10 => bool_word(a < b),
        0x11 => bool_word(a > b),
        0x14 => bool_word(a == b),
        0x16 => a & b,
        0x17 => a | b,
        0x18 => a ^ b,
        // shifts: a is the shift amount
        0x1b => {
            if a >= U256::from(256) {
                U256::zero()
            } else {
                b << a.as_usize()
            }
        }
        0x1c => {
            if a >= U256::from(256) {
                U256::zero()
            } else {
                b >> a.as_usize()
            }
        }
        _ => return None,
    })
}

fn step(stack: &mut Stack, ins: &Instruction) {
    let op = ins.opcode;
    if let Some(value) = ins.push_value() {
        stack.push(Sym::Const(U256::from_big_endian(value)));
        return;
    }
    if op == Opcode::PUSH0 {
        stack.push(Sym::Const(U256::zero()));
        return;
    }
    if let Some(d) = op.dup_depth() {
        stack.dup(d);
        return;
    }
    if let Some(d) = op.swap_depth() {
        stack.swap(d);
        return;
    }
    let result = match op {
        Opcode::CALLER => Sym::Caller,
        Opcode::ADDRESS => Sym::SelfAddress,
        Opcode::SLOAD => match stack.pop() {
            Sym::Const(k) => Sym::Storage { slot: Some(k), shift: 0 },
            _ => Sym::Storage { slot: None, shift: 0 },
        },
        Opcode::ISZERO => match stack.pop() {
            Sym::CallerEq(c) => Sym::CallerEq(c),
            Sym::Const(v) => Sym::Const(if v.is_zero() { U256::one() } else { U256::zero() }),
            _ => Sym::Unknown,
        },
        Opcode(0x19) => match stack.pop() {
            Sym::Const(v) => Sym::Const(!v),
            _ => Sym::Unknown,
        },
        Opcode::EQ => {
            let (a, b) = (stack.pop(), stack.pop());
            match (&a, &b) {
                (Sym::Caller, Sym::Caller) => Sym::Unknown,
                (Sym::Caller, other) | (other, Sym::Caller) => Sym::CallerEq(comparand_of(other)),
                (Sym::Const(x), Sym::Const(y)) => Sym::Const(fold(op, *x, *y).expect("EQ folds")),
                _ => Sym::Unknown,
            }
        }
        Opcode::AND => {
            let (a, b) = (stack.pop(), stack.pop());
            match (a, b) {
                (Sym::Caller, _) | (_, Sym::Caller) => Sym::Caller,
                (s @ Sym::Storage { .. }, Sym::Const(_)) | (Sym::Const(_), s @ Sym::Storage { .. }) => s,
                (Sym::SelfAddress, Sym::Const(_)) | (Sym::Const(_), Sym::SelfAddress) => Sym::SelfAddress,
                (Sym::Const(x), Sym::Const(y)) => Sym::Const(x & y),
                _ => Sym::Unknown,
            }
        }
        Opcode::DIV => {
            let (a, b) = (stack.pop(), stack.pop());
            match (a, b) {
                (Sym::Storage { slot, shift }, Sym::Const(d)) => match byte_power(d) {
                    Some(k) => Sym::Storage { slot, shift: shift + k },
                    None => Sym::Unknown,
                },
                (Sym::Const(x), Sym::Const(y)) => Sym::Const(fold(op, x, y).expect("DIV folds")),
                _ => Sym::Unknown,
            }
        }
        Opcode::SHR => {
            let (amount, value) = (stack.pop(), stack.pop());
            match (amount, value) {
                (Sym::Const(k), Sym::Storage { slot, shift }) if k < U256::from(256) && k.low_u32() % 8 == 0 => {
                    Sym::Storage { slot, shift: shift + k.low_u32() / 8 }
                }
                (Sym::Const(x), Sym::Const(y)) => Sym::Const(fold(op, x, y).expect("SHR folds")),
                _ => Sym::Unknown,
            }
        }
        _ => {
            let (pops, pushes) = op.stack_effect();
            let mut args = Vec::with_capacity(pops);
            for _ in 0..pops {
                args.push(stack.pop());
            }
            let folded = match (pushes, args.as_slice()) {
                (1, [Sym::Const(a), Sym::Const(b)]) => fold(op, *a, *b).map(Sym::Const),
                _ => None,
            };
            for _ in 0..pushes {
                stack.push(folded.clone().unwrap_or(Sym::Unknown));
            }
            return;
        }
    };
    stack.push(result);
}

fn jump_target(cfg: &ControlFlowGraph, target: &Sym) -> Option<BlockId> {
    match target {
        Sym::Const(t) if t.bits() <= 32 => cfg.jumpdest_block(t.as_usize()),
        _ => None,
    }
}

/// `(JUMPI offset, comparand)` pairs for every caller comparison reachable from `entry`.
fn caller_checks(cfg: &ControlFlowGraph, entry: BlockId) -> BTreeSet<(usize, Comparand)> {
    let mut found = BTreeSet::new();
    let mut seen: HashSet<(BlockId, Vec<Sym>)> = HashSet::new();
    let mut queue = VecDeque::from([(entry, Stack::default())]);
    while let Some((id, mut stack)) = queue.pop_front() {
        if seen.len() >= STATE_BUDGET || !seen.insert((id, stack.key())) {
            continue;
        }
        let block = cfg.block(id);
        let (body, last) = match block.terminator {
            Terminator::Jump { .. } | Terminator::ConditionalJump { .. } => {
                let (last, body) = block.instructions.split_last().expect("non-empty");
                (body, Some(last))
            }
            _ => (&block.instructions[..], None),
        };
        for ins in body {
            step(&mut stack, ins);
        }
        let next = BlockId(id.0 + 1);
        let has_next = next.0 < cfg.blocks.len();
        match (block.terminator, last) {
            (Terminator::Jump { .. }, Some(_)) => {
                let target = stack.pop();
                if let Some(to) = jump_target(cfg, &target) {
                    queue.push_back((to, stack));
                }
            }
            (Terminator::ConditionalJump { .. }, Some(jumpi)) => {
                let target = stack.pop();
                let cond = stack.pop();
                if let Sym::CallerEq(c) = &cond {
                    found.insert((jumpi.offset, c.clone()));
                }
                let (take, skip) = match cond {
                    Sym::Const(v) => (!v.is_zero(), v.is_zero()),
                    _ => (true, true),
                };
                if take {
                    if let Some(to) = jump_target(cfg, &target) {
                        queue.push_back((to, stack.clone()));
                    }
                }
                if skip && has_next {
                    queue.push_back((next, stack));
                }
            }
            (Terminator::Fallthrough, _) if has_next => queue.push_back((next, stack)),
            _ => {}
        }
    }
    found
}

fn resolve(
    comparand: &Comparand,
    governance: Address,
    state: Option<&dyn ChainData>,
) -> Option<(ComparandSource, Option<Address>, Option<String>)> {
    match comparand {
        // `msg.sender != address(0)` style checks gate nothing
        Comparand::Const(v) if v.is_zero() => None,
        Comparand::Const(v) if v.bits() <= 160 => {
            let address = Address::from_word(&v.to_big_endian());
            Some((ComparandSource::Push20Immediate { address }, Some(address), None))
        }
        Comparand::SelfAddress => Some((ComparandSource::ContractAddress, Some(governance), None)),
        Comparand::Storage { slot: Some(slot), shift } => {
            let source = ComparandSource::StorageSlot {
                slot: B256(slot.to_big_endian()),
                byte_offset: *shift,
            };
            let Some(state) = state else {
                return Some((source, None, Some("no state provider to read the slot".into())));
            };
            match state.get_storage(governance, B256(slot.to_big_endian())) {
                Ok(word) => {
                    let value = U256::from_big_endian(&word.0) >> (8 * (*shift as usize).min(32));
                    let address = Address::from_word(&value.to_big_endian());
                    if address.is_zero() {
                        Some((source, None, Some("slot holds the zero address".into())))
                    } else {
                        Some((source, Some(address), None))
                    }
                }
                Err(e) => Some((source, None, Some(format!("reading slot: {e}")))),
            }
        }
        Comparand::Storage { slot: None, .. } => Some((
            ComparandSource::Unresolved,
            None,
            Some("compared against a computed storage slot".into()),
        )),
        Comparand::Const(_) | Comparand::Unknown => Some((
            ComparandSource::Unresolved,
            None,
            Some("comparand is not a constant or storage value".into()),
        )),
    }
}

/// Findings for one recovered function.
pub fn privileged_checks_in(
    cfg: &ControlFlowGraph,
    function: &FunctionBody,
    governance: Address,
    state: Option<&dyn ChainData>,
) -> Vec<PrivilegedFunctionFinding> {
    caller_checks(cfg, function.entry_block)
        .into_iter()
        .filter_map(|(offset, comparand)| {
            let (source, resolved, note) = resolve(&comparand, governance, state)?;
            let controller = match resolved {
                Some(a) if a == governance => Controller::SelfGoverned,
                Some(_) => Controller::External,
                None => Controller::Unresolved,
            };
            Some(PrivilegedFunctionFinding {
                selector: function.selector,
                check_offset: offset,
                comparand_source: source,
                resolved_address: resolved,
                controller,
                note,
            })
        })
        .collect()
}

/// Privileged checks across every selector-dispatched function of `code`, ordered by
/// selector then offset. Storage comparands are read from `governance` through `state`.
pub fn detect_privileged_functions(
    code: &[u8],
    governance: Address,
    state: Option<&dyn ChainData>,
) -> Vec<PrivilegedFunctionFinding> {
    let cfg = build_cfg(&disassemble(code));
    let extraction = extract_functions(&cfg);
    let mut findings: Vec<_> = extraction
        .functions
        .iter()
        .flat_map(|f| privileged_checks_in(&cfg, f, governance, state))
        .collect();
    findings.sort_by(|a, b| (a.selector, a.check_offset).cmp(&(b.selector, b.check_offset)));
    findings
}
