//! Shared fixture loaders and independent reference implementations for the integration tests.
#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::sync::Arc;

use govaudit::chain::{FixtureWorld, Mode, Provider, ProviderConfig};
use serde::Deserialize;
use tiny_keccak::{Hasher, Keccak};

pub fn fixture(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(rel)
}

#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Compiled {
    pub name: String,
    pub compiler_version: String,
    pub optimizer: bool,
    pub runtime_bytecode_hex: String,
}

impl Compiled {
    pub fn runtime(&self) -> Vec<u8> {
        hex::decode(self.runtime_bytecode_hex.trim_start_matches("0x")).expect("fixture hex")
    }
}

pub fn compiled() -> Vec<Compiled> {
    std::fs::read_to_string(fixture("compiled.jsonl"))
        .expect("compiled.jsonl")
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).expect("compiled record"))
        .collect()
}

pub fn compiled_named(name: &str, version: &str, optimizer: bool) -> Compiled {
    compiled()
        .into_iter()
        .find(|c| c.name == name && c.compiler_version == version && c.optimizer == optimizer)
        .unwrap_or_else(|| panic!("no compiled fixture {name} {version} optimizer={optimizer}"))
}

/// A live-mode provider whose only transport is the fixture world.
pub fn world_provider(rel: &str) -> Provider {
    let world = FixtureWorld::load(&fixture(rel)).expect("world fixture");
    let mut config = ProviderConfig::new(world.chain_id);
    config.mode = Mode::Live;
    Provider::new(&config, Arc::new(world)).expect("provider")
}

pub fn oracle_keccak(data: &[u8]) -> [u8; 32] {
    let mut k = Keccak::v256();
    k.update(data);
    let mut out = [0u8; 32];
    k.finalize(&mut out);
    out
}

/// CREATE address via the `rlp` crate and tiny-keccak.
pub fn oracle_create(creator: &[u8; 20], nonce: u64) -> [u8; 20] {
    let mut s = rlp::RlpStream::new_list(2);
    s.append(&creator.as_slice());
    s.append(&nonce);
    let hash = oracle_keccak(&s.out());
    hash[12..].try_into().unwrap()
}

pub fn oracle_create2(creator: &[u8; 20], salt: &[u8; 32], init_code: &[u8]) -> [u8; 20] {
    let mut buf = vec![0xff];
    buf.extend_from_slice(creator);
    buf.extend_from_slice(salt);
    buf.extend_from_slice(&oracle_keccak(init_code));
    oracle_keccak(&buf)[12..].try_into().unwrap()
}

/// One reference instruction: offset, mnemonic and PUSH payload.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RefOp {
    pub offset: usize,
    pub mnemonic: String,
    pub input: Vec<u8>,
}

/// Reference disassembly from the `evm-disassembler` crate, with mnemonics mapped onto
/// this crate's naming (KECCAK256 for SHA3, PREVRANDAO for DIFFICULTY).
pub fn reference_disassembly(code: &[u8]) -> Vec<RefOp> {
    evm_disassembler::disassemble_bytes(code.to_vec())
        .expect("reference disassembly")
        .into_iter()
        .map(|op| {
            let raw = format!("{:?}", op.opcode);
            let mnemonic = match raw.as_str() {
                "SHA3" => "KECCAK256".to_string(),
                "DIFFICULTY" => "PREVRANDAO".to_string(),
                _ => raw,
            };
            RefOp {
                offset: op.offset as usize,
                mnemonic,
                input: op.input,
            }
        })
        .collect()
}

/// Compares this crate's disassembly of `code` with the reference one. Bytes the reference
/// calls INVALID must be undefined here too (or the designated INVALID, 0xfe). The reference
/// stops before a truncated trailing PUSH, so that one instruction is checked separately.
pub fn compare_with_reference(code: &[u8]) -> Result<(), String> {
    let mut ours = govaudit::evm::disassemble(code);
    let reference = reference_disassembly(code);
    if ours.last().is_some_and(|i| i.padding > 0) {
        let tail = ours.pop().unwrap();
        if tail.next_offset() - tail.padding != code.len() || code[tail.offset] != tail.opcode.byte() {
            return Err(format!("truncated tail {tail:?} does not end the code"));
        }
    }
    if ours.len() != reference.len() {
        return Err(format!("{} instructions vs reference {}", ours.len(), reference.len()));
    }
    for (a, r) in ours.iter().zip(&reference) {
        if a.offset != r.offset || a.immediate != r.input {
            return Err(format!("at {:#x}: {a:?} vs reference {r:?}", a.offset));
        }
        let name_ok = if r.mnemonic == "INVALID" {
            !a.opcode.is_known() || a.opcode.name() == "INVALID"
        } else {
            a.opcode.is_known() && a.opcode.name() == r.mnemonic
        };
        if !name_ok {
            return Err(format!("at {:#x}: {} vs reference {}", a.offset, a.opcode.name(), r.mnemonic));
        }
    }
    Ok(())
}

/// Random bytecode the reference decodes in full: no trailing truncated PUSH and no EOF
/// magic prefix.
pub fn well_formed(mut code: Vec<u8>) -> Vec<u8> {
    if code.len() >= 2 && code[0] == 0xef && code[1] == 0x00 {
        code[0] = 0x00;
    }
    let mut pc = 0;
    while pc < code.len() {
        let width = match code[pc] {
            b @ 0x60..=0x7f => (b - 0x5f) as usize,
            _ => 0,
        };
        if pc + 1 + width > code.len() {
            code.truncate(pc);
            break;
        }
        pc += 1 + width;
    }
    code
}

/// Two-pass assembler for hand-written fixtures. Tokens are mnemonics, `PUSHn 0x..`,
/// `name:` (emits a JUMPDEST) and `@name` (PUSH2 of that label's offset).
pub fn assemble(source: &str) -> Vec<u8> {
    use govaudit::evm::Opcode;
    use std::collections::HashMap;

    let tokens: Vec<&str> = source.split_whitespace().collect();
    let mut labels: HashMap<&str, usize> = HashMap::new();
    for pass in 0..2 {
        let mut out = Vec::new();
        let mut i = 0;
        while i < tokens.len() {
            let t = tokens[i];
            if let Some(name) = t.strip_suffix(':') {
                labels.insert(name, out.len());
                out.push(Opcode::JUMPDEST.byte());
            } else if let Some(name) = t.strip_prefix('@') {
                let at = if pass == 0 { 0 } else { labels[name] };
                out.push(0x61);
                out.extend_from_slice(&(at as u16).to_be_bytes());
            } else {
                let op = Opcode::from_name(t).unwrap_or_else(|| panic!("unknown mnemonic {t}"));
                out.push(op.byte());
                if op.immediate_len() > 0 {
                    i += 1;
                    let arg = hex::decode(tokens[i].trim_start_matches("0x")).expect("push argument");
                    assert!(arg.len() <= op.immediate_len(), "{t} argument too wide");
                    out.extend(std::iter::repeat(0).take(op.immediate_len() - arg.len()));
                    out.extend(arg);
                }
            }
            i += 1;
        }
        if pass == 1 {
            return out;
        }
    }
    unreachable!()
}

/// One-function dispatcher (selector `0x11223344`) whose body runs `guard` then stops.
/// `guard` must leave a boolean on the stack; the function reverts when it is false.
pub fn gated_contract(guard: &str) -> Vec<u8> {
    assemble(&format!(
        "PUSH1 0x00 CALLDATALOAD PUSH1 0xe0 SHR DUP1 PUSH4 0x11223344 EQ @body JUMPI
         PUSH1 0x00 DUP1 REVERT
         body: {guard} @ok JUMPI PUSH1 0x00 DUP1 REVERT
         ok: STOP"
    ))
}
