//! Contract-ABI types, canonical signatures and calldata encoding/decoding.

use std::fmt;

use primitive_types::U256;
use serde::ser::{SerializeSeq, Serializer};
use serde::Serialize;
use serde_json::Value;
use thiserror::Error;

use crate::evm::compute_selector;
use crate::primitives::{encode_hex, Address, Selector};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum AbiType {
    Address,
    Uint(usize),
    Int(usize),
    Bool,
    FixedBytes(usize),
    Bytes,
    String,
    Array(Box<AbiType>),
    FixedArray(Box<AbiType>, usize),
    Tuple(Vec<AbiType>),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AbiError {
    #[error("malformed signature {0:?}")]
    Signature(String),
    #[error("unknown type {0:?}")]
    Type(String),
    #[error("selector mismatch: calldata starts with {found}, signature has {expected}")]
    SelectorMismatch { expected: Selector, found: String },
    #[error("decode error at byte {offset}: {message}")]
    Decode { offset: usize, message: String },
    #[error("value does not match type {0}")]
    Encode(String),
}

impl AbiType {
    pub fn parse(text: &str) -> Result<AbiType, AbiError> {
        let text = text.trim();
        if let Some(stripped) = text.strip_suffix(']') {
            let open = stripped.rfind('[').ok_or_else(|| AbiError::Type(text.into()))?;
            let inner = AbiType::parse(&stripped[..open])?;
            let size = &stripped[open + 1..];
            return if size.is_empty() {
                Ok(AbiType::Array(Box::new(inner)))
            } else {
                let n = size.parse().map_err(|_| AbiError::Type(text.into()))?;
                Ok(AbiType::FixedArray(Box::new(inner), n))
            };
        }
        if let Some(inner) = text.strip_prefix('(').and_then(|t| t.strip_suffix(')')) {
            return Ok(AbiType::Tuple(
                split_top_level(inner)?
                    .iter()
                    .map(|t| AbiType::parse(t))
                    .collect::<Result<_, _>>()?,
            ));
        }
        let bits = |digits: &str, default: usize| -> Result<usize, AbiError> {
            if digits.is_empty() {
                return Ok(default);
            }
            let n: usize = digits.parse().map_err(|_| AbiError::Type(text.into()))?;
            if n == 0 || n > 256 || n % 8 != 0 {
                return Err(AbiError::Type(text.into()));
            }
            Ok(n)
        };
        match text {
            "address" => Ok(AbiType::Address),
            "bool" => Ok(AbiType::Bool),
            "bytes" => Ok(AbiType::Bytes),
            "string" => Ok(AbiType::String),
            "function" => Ok(AbiType::FixedBytes(24)),
            _ => {
                if let Some(d) = text.strip_prefix("uint") {
                    Ok(AbiType::Uint(bits(d, 256)?))
                } else if let Some(d) = text.strip_prefix("int") {
                    Ok(AbiType::Int(bits(d, 256)?))
                } else if let Some(d) = text.strip_prefix("bytes") {
                    let n: usize = d.parse().map_err(|_| AbiError::Type(text.into()))?;
                    if n == 0 || n > 32 {
                        return Err(AbiError::Type(text.into()));
                    }
                    Ok(AbiType::FixedBytes(n))
                } else {
                    Err(AbiError::Type(text.into()))
                }
            }
        }
    }

    pub fn is_dynamic(&self) -> bool {
        match self {
            AbiType::Bytes | AbiType::String | AbiType::Array(_) => true,
            AbiType::FixedArray(inner, _) => inner.is_dynamic(),
            AbiType::Tuple(items) => items.iter().any(AbiType::is_dynamic),
            _ => false,
        }
    }

    /// Bytes occupied in the head of an enclosing tuple.
    fn head_size(&self) -> usize {
        if self.is_dynamic() {
            return 32;
        }
        match self {
            AbiType::FixedArray(inner, n) => inner.head_size() * n,
            AbiType::Tuple(items) => items.iter().map(AbiType::head_size).sum(),
            _ => 32,
        }
    }
}

impl fmt::Display for AbiType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AbiType::Address => f.write_str("address"),
            AbiType::Uint(n) => write!(f, "uint{n}"),
            AbiType::Int(n) => write!(f, "int{n}"),
            AbiType::Bool => f.write_str("bool"),
            AbiType::FixedBytes(n) => write!(f, "bytes{n}"),
            AbiType::Bytes => f.write_str("bytes"),
            AbiType::String => f.write_str("string"),
            AbiType::Array(inner) => write!(f, "{inner}[]"),
            AbiType::FixedArray(inner, n) => write!(f, "{inner}[{n}]"),
            AbiType::Tuple(items) => {
                f.write_str("(")?;
                for (i, item) in items.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{item}")?;
                }
                f.write_str(")")
            }
        }
    }
}

fn split_top_level(text: &str) -> Result<Vec<&str>, AbiError> {
    let mut parts = Vec::new();
    if text.trim().is_empty() {
        return Ok(parts);
    }
    let mut depth = 0i32;
    let mut start = 0;
    for (i, c) in text.char_indices() {
        match c {
            '(' => depth += 1,
            ')' => depth -= 1,
            ',' if depth == 0 => {
                parts.push(&text[start..i]);
                start = i + 1;
            }
            _ => {}
        }
        if depth < 0 {
            return Err(AbiError::Signature(text.into()));
        }
    }
    if depth != 0 {
        return Err(AbiError::Signature(text.into()));
    }
    parts.push(&text[start..]);
    Ok(parts)
}

/// A parsed canonical function signature, e.g. `transfer(address,uint256)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FunctionSignature {
    pub name: String,
    pub inputs: Vec<AbiType>,
}

impl FunctionSignature {
    pub fn parse(text: &str) -> Result<Self, AbiError> {
        let text = text.trim();
        let open = text.find('(').ok_or_else(|| AbiError::Signature(text.into()))?;
        let name = &text[..open];
        let args = text[open..]
            .strip_prefix('(')
            .and_then(|t| t.strip_suffix(')'))
            .ok_or_else(|| AbiError::Signature(text.into()))?;
        if name.is_empty() || !name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '$') {
            return Err(AbiError::Signature(text.into()));
        }
        let inputs = split_top_level(args)?
            .iter()
            .map(|t| AbiType::parse(t))
            .collect::<Result<_, _>>()?;
        Ok(Self {
            name: name.to_string(),
            inputs,
        })
    }

    pub fn canonical(&self) -> String {
        let types: Vec<String> = self.inputs.iter().map(ToString::to_string).collect();
        format!("{}({})", self.name, types.join(","))
    }

    pub fn selector(&self) -> Selector {
        compute_selector(&self.canonical())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AbiValue {
    Address(Address),
    Uint(U256),
    /// Two's complement, as stored on chain.
    Int(U256),
    Bool(bool),
    FixedBytes(Vec<u8>),
    Bytes(Vec<u8>),
    String(String),
    Array(Vec<AbiValue>),
    Tuple(Vec<AbiValue>),
}

impl AbiValue {
    /// Decimal rendering for numeric values, lowercase hex for addresses and bytes.
    pub fn render(&self) -> String {
        match self {
            AbiValue::Address(a) => a.to_string(),
            AbiValue::Uint(v) => v.to_string(),
            AbiValue::Int(v) => signed_to_string(*v),
            AbiValue::Bool(b) => b.to_string(),
            AbiValue::FixedBytes(b) | AbiValue::Bytes(b) => encode_hex(b),
            AbiValue::String(s) => s.clone(),
            AbiValue::Array(items) | AbiValue::Tuple(items) => {
                let parts: Vec<String> = items.iter().map(AbiValue::render).collect();
                format!("[{}]", parts.join(","))
            }
        }
    }
}

fn signed_to_string(raw: U256) -> String {
    if raw.bit(255) {
        let magnitude = (!raw).overflowing_add(U256::one()).0;
        format!("-{magnitude}")
    } else {
        raw.to_string()
    }
}

impl Serialize for AbiValue {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self {
            AbiValue::Bool(b) => serializer.serialize_bool(*b),
            AbiValue::Array(items) | AbiValue::Tuple(items) => {
                let mut seq = serializer.serialize_seq(Some(items.len()))?;
                for item in items {
                    seq.serialize_element(item)?;
                }
                seq.end()
            }
            other => serializer.serialize_str(&other.render()),
        }
    }
}

/// One decoded argument.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct TypedParam {
    pub solidity_type: String,
    pub decoded_value: AbiValue,
    #[serde(skip)]
    pub abi_type: AbiType,
}

struct Decoder<'a> {
    data: &'a [u8],
    /// Base offset of `data` within the full calldata, for error messages.
    origin: usize,
    end: usize,
}

impl<'a> Decoder<'a> {
    fn err(&self, at: usize, message: impl Into<String>) -> AbiError {
        AbiError::Decode {
            offset: self.origin + at,
            message: message.into(),
        }
    }

    fn word(&mut self, at: usize) -> Result<[u8; 32], AbiError> {
        let slice = self
            .data
            .get(at..at + 32)
            .ok_or_else(|| self.err(at, "word runs past end of data"))?;
        self.end = self.end.max(at + 32);
        Ok(slice.try_into().expect("32 bytes"))
    }

    fn usize_word(&mut self, at: usize) -> Result<usize, AbiError> {
        let word = self.word(at)?;
        let value = U256::from_big_endian(&word);
        if value > U256::from(self.data.len()) {
            return Err(self.err(at, format!("offset or length {value} exceeds data length {}", self.data.len())));
        }
        Ok(value.as_usize())
    }

    fn tuple(&mut self, types: &[AbiType], base: usize) -> Result<Vec<AbiValue>, AbiError> {
        let mut head = base;
        let mut out = Vec::with_capacity(types.len());
        for ty in types {
            if ty.is_dynamic() {
                let rel = self.usize_word(head)?;
                out.push(self.value(ty, base + rel)?);
            } else {
                out.push(self.value(ty, head)?);
            }
            head += ty.head_size();
        }
        Ok(out)
    }

    fn value(&mut self, ty: &AbiType, at: usize) -> Result<AbiValue, AbiError> {
        match ty {
            AbiType::Address => {
                let w = self.word(at)?;
                if w[..12].iter().any(|b| *b != 0) {
                    return Err(self.err(at, "address has dirty high bytes"));
                }
                Ok(AbiValue::Address(Address::from_word(&w)))
            }
            AbiType::Uint(bits) => {
                let v = U256::from_big_endian(&self.word(at)?);
                if *bits < 256 && v.bits() > *bits {
                    return Err(self.err(at, format!("value does not fit uint{bits}")));
                }
                Ok(AbiValue::Uint(v))
            }
            AbiType::Int(bits) => {
                let v = U256::from_big_endian(&self.word(at)?);
                if *bits < 256 {
                    let negative = v.bit(bits - 1);
                    let high_ok = (*bits..256).all(|i| v.bit(i) == negative);
                    if !high_ok {
                        return Err(self.err(at, format!("value is not sign-extended int{bits}")));
                    }
                }
                Ok(AbiValue::Int(v))
            }
            AbiType::Bool => {
                let w = self.word(at)?;
                match U256::from_big_endian(&w).as_u64() {
                    0 if w.iter().all(|b| *b == 0) => Ok(AbiValue::Bool(false)),
                    1 if w[..31].iter().all(|b| *b == 0) => Ok(AbiValue::Bool(true)),
                    _ => Err(self.err(at, "bool is neither 0 nor 1")),
                }
            }
            AbiType::FixedBytes(n) => {
                let w = self.word(at)?;
                if w[*n..].iter().any(|b| *b != 0) {
                    return Err(self.err(at, format!("bytes{n} has dirty padding")));
                }
                Ok(AbiValue::FixedBytes(w[..*n].to_vec()))
            }
            AbiType::Bytes | AbiType::String => {
                let len = self.usize_word(at)?;
                let start = at + 32;
                let padded = len.div_ceil(32) * 32;
                let content = self
                    .data
                    .get(start..start + len)
                    .ok_or_else(|| self.err(start, format!("{len}-byte payload runs past end of data")))?;
                if start + padded > self.data.len() {
                    return Err(self.err(start, "payload padding runs past end of data"));
                }
                self.end = self.end.max(start + padded);
                if *ty == AbiType::Bytes {
                    Ok(AbiValue::Bytes(content.to_vec()))
                } else {
                    String::from_utf8(content.to_vec())
                        .map(AbiValue::String)
                        .map_err(|_| self.err(start, "string is not UTF-8"))
                }
            }
            AbiType::Array(inner) => {
                let len = self.usize_word(at)?;
                if len.saturating_mul(32) > self.data.len() {
                    return Err(self.err(at, format!("array length {len} exceeds data")));
                }
                let items = vec![(**inner).clone(); len];
                Ok(AbiValue::Array(self.tuple(&items, at + 32)?))
            }
            AbiType::FixedArray(inner, n) => {
                let items = vec![(**inner).clone(); *n];
                Ok(AbiValue::Array(self.tuple(&items, at)?))
            }
            AbiType::Tuple(items) => Ok(AbiValue::Tuple(self.tuple(items, at)?)),
        }
    }
}

/// Decodes an argument block (no selector). Trailing bytes beyond the encoding are an error.
pub fn decode_args(types: &[AbiType], data: &[u8], origin: usize) -> Result<Vec<AbiValue>, AbiError> {
    let mut decoder = Decoder { data, origin, end: 0 };
    let values = decoder.tuple(types, 0)?;
    if decoder.end != data.len() {
        return Err(decoder.err(decoder.end, format!("{} trailing bytes", data.len() - decoder.end)));
    }
    Ok(values)
}

/// Decodes calldata (selector + arguments) against a canonical signature.
pub fn decode_calldata(signature: &str, calldata: &[u8]) -> Result<Vec<TypedParam>, AbiError> {
    let sig = FunctionSignature::parse(signature)?;
    let expected = sig.selector();
    if calldata.len() < 4 || calldata[..4] != expected.0 {
        return Err(AbiError::SelectorMismatch {
            expected,
            found: encode_hex(&calldata[..calldata.len().min(4)]),
        });
    }
    let values = decode_args(&sig.inputs, &calldata[4..], 4)?;
    Ok(sig
        .inputs
        .into_iter()
        .zip(values)
        .map(|(ty, value)| TypedParam {
            solidity_type: ty.to_string(),
            decoded_value: value,
            abi_type: ty,
        })
        .collect())
}

fn encode_tuple(types: &[AbiType], values: &[AbiValue]) -> Result<Vec<u8>, AbiError> {
    if types.len() != values.len() {
        return Err(AbiError::Encode(format!("expected {} values, got {}", types.len(), values.len())));
    }
    let head_len: usize = types.iter().map(AbiType::head_size).sum();
    let mut head = Vec::with_capacity(head_len);
    let mut tail = Vec::new();
    for (ty, value) in types.iter().zip(values) {
        let encoded = encode_value(ty, value)?;
        if ty.is_dynamic() {
            head.extend_from_slice(&word_of(U256::from(head_len + tail.len())));
            tail.extend(encoded);
        } else {
            head.extend(encoded);
        }
    }
    head.extend(tail);
    Ok(head)
}

fn word_of(v: U256) -> [u8; 32] {
    v.to_big_endian()
}

fn encode_value(ty: &AbiType, value: &AbiValue) -> Result<Vec<u8>, AbiError> {
    let mismatch = || AbiError::Encode(ty.to_string());
    match (ty, value) {
        (AbiType::Address, AbiValue::Address(a)) => {
            let mut w = [0u8; 32];
            w[12..].copy_from_slice(&a.0);
            Ok(w.to_vec())
        }
        (AbiType::Uint(_), AbiValue::Uint(v)) | (AbiType::Int(_), AbiValue::Int(v)) => Ok(word_of(*v).to_vec()),
        (AbiType::Bool, AbiValue::Bool(b)) => Ok(word_of(U256::from(u8::from(*b))).to_vec()),
        (AbiType::FixedBytes(n), AbiValue::FixedBytes(b)) if b.len() == *n => {
            let mut w = [0u8; 32];
            w[..*n].copy_from_slice(b);
            Ok(w.to_vec())
        }
        (AbiType::Bytes, AbiValue::Bytes(b)) => Ok(encode_dynamic_bytes(b)),
        (AbiType::String, AbiValue::String(s)) => Ok(encode_dynamic_bytes(s.as_bytes())),
        (AbiType::Array(inner), AbiValue::Array(items)) => {
            let types = vec![(**inner).clone(); items.len()];
            let mut out = word_of(U256::from(items.len())).to_vec();
            out.extend(encode_tuple(&types, items)?);
            Ok(out)
        }
        (AbiType::FixedArray(inner, n), AbiValue::Array(items)) if items.len() == *n => {
            encode_tuple(&vec![(**inner).clone(); *n], items)
        }
        (AbiType::Tuple(types), AbiValue::Tuple(items)) => encode_tuple(types, items),
        _ => Err(mismatch()),
    }
}

fn encode_dynamic_bytes(bytes: &[u8]) -> Vec<u8> {
    let mut out = word_of(U256::from(bytes.len())).to_vec();
    out.extend_from_slice(bytes);
    out.resize(32 + bytes.len().div_ceil(32) * 32, 0);
    out
}

pub fn encode_args(types: &[AbiType], values: &[AbiValue]) -> Result<Vec<u8>, AbiError> {
    encode_tuple(types, values)
}

/// Selector followed by the encoded arguments.
pub fn encode_calldata(signature: &str, values: &[AbiValue]) -> Result<Vec<u8>, AbiError> {
    let sig = FunctionSignature::parse(signature)?;
    let mut out = sig.selector().0.to_vec();
    out.extend(encode_args(&sig.inputs, values)?);
    Ok(out)
}

/// Canonical signatures of the functions in a JSON ABI array.
pub fn functions_from_json_abi(abi: &Value) -> Vec<String> {
    fn type_of(param: &Value) -> String {
        let ty = param.get("type").and_then(Value::as_str).unwrap_or_default();
        match ty.strip_prefix("tuple") {
            Some(suffix) => {
                let components: Vec<String> = param
                    .get("components")
                    .and_then(Value::as_array)
                    .map(|c| c.iter().map(type_of).collect())
                    .unwrap_or_default();
                format!("({}){}", components.join(","), suffix)
            }
            None => ty.to_string(),
        }
    }
    abi.as_array()
        .map(|items| {
            items
                .iter()
                .filter(|item| item.get("type").and_then(Value::as_str).unwrap_or("function") == "function")
                .filter_map(|item| {
                    let name = item.get("name")?.as_str()?;
                    let inputs: Vec<String> = item
                        .get("inputs")
                        .and_then(Value::as_array)
                        .map(|i| i.iter().map(type_of).collect())
                        .unwrap_or_default();
                    Some(format!("{name}({})", inputs.join(",")))
                })
                .collect()
        })
        .unwrap_or_default()
}

/// Reads a `string` return value, falling back to a NUL-trimmed `bytes32` (older tokens).
pub fn decode_text_return(data: &[u8]) -> Option<String> {
    if let Ok(values) = decode_args(&[AbiType::String], data, 0) {
        if let Some(AbiValue::String(s)) = values.into_iter().next() {
            return Some(s);
        }
    }
    if data.len() == 32 {
        let trimmed: Vec<u8> = data.iter().copied().take_while(|b| *b != 0).collect();
        if !trimmed.is_empty() {
            return String::from_utf8(trimmed).ok();
        }
    }
    None
}

/// Reads a small unsigned integer return value.
pub fn decode_uint_return(data: &[u8]) -> Option<U256> {
    (data.len() == 32).then(|| U256::from_big_endian(data))
}
