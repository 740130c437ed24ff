//! Auditing toolkit for on-chain DAO governance.
//!
//! * [`evm`] and [`similarity`] analyse runtime bytecode.
//! * [`governance`] checks governance contracts for soundness, independence and immutability.
//! * [`proposal`] checks that proposal descriptions account for the code they execute.
//! * [`docs`] audits governance documentation with an LLM question chain.
//! * [`chain`] fetches everything from nodes, scanners and signature databases, with
//!   record/replay caching.
//! * [`report`] assembles the results; [`registry`] selects interchangeable strategies by name.

pub mod abi;
pub mod chain;
pub mod docs;
pub mod evm;
pub mod governance;
pub mod primitives;
pub mod proposal;
pub mod registry;
pub mod report;
pub mod service;
pub mod similarity;

pub use primitives::{Address, Selector, B256};
