use ethabi::{ParamType, Token};
use govaudit::abi::{decode_calldata, encode_calldata, AbiValue};
use govaudit::Address;
use primitive_types::U256;
use proptest::prelude::*;

fn u256(v: ethabi::Uint) -> U256 {
    let mut be = [0u8; 32];
    v.to_big_endian(&mut be);
    U256::from_big_endian(&be)
}

/// Masks a random word to fit `bits` (unsigned) or sign-extends it (signed).
fn fit(word: [u8; 32], bits: usize, signed: bool) -> ethabi::Uint {
    let v = ethabi::Uint::from_big_endian(&word);
    if bits == 256 {
        return v;
    }
    let mask = (ethabi::Uint::one() << bits) - 1;
    let low = v & mask;
    if signed && low.bit(bits - 1) {
        low | !mask
    } else {
        low
    }
}

fn leaf() -> impl Strategy<Value = (ParamType, Token)> {
    let sizes = prop::sample::select(vec![8usize, 16, 32, 64, 128, 256]);
    prop_oneof![
        any::<[u8; 20]>().prop_map(|a| (ParamType::Address, Token::Address(a.into()))),
        (sizes.clone(), any::<[u8; 32]>()).prop_map(|(n, w)| (ParamType::Uint(n), Token::Uint(fit(w, n, false)))),
        (sizes, any::<[u8; 32]>()).prop_map(|(n, w)| (ParamType::Int(n), Token::Int(fit(w, n, true)))),
        any::<bool>().prop_map(|b| (ParamType::Bool, Token::Bool(b))),
        (1usize..=32, any::<[u8; 32]>()).prop_map(|(n, w)| (ParamType::FixedBytes(n), Token::FixedBytes(w[..n].to_vec()))),
        prop::collection::vec(any::<u8>(), 0..70).prop_map(|b| (ParamType::Bytes, Token::Bytes(b))),
        "[ -~]{0,40}".prop_map(|s| (ParamType::String, Token::String(s))),
    ]
}

fn param() -> impl Strategy<Value = (ParamType, Token)> {
    leaf().prop_recursive(2, 16, 4, |inner| {
        prop_oneof![
            (inner.clone(), 0usize..4).prop_flat_map(|((ty, _), len)| {
                prop::collection::vec(typed(ty.clone()), len)
                    .prop_map(move |items| (ParamType::Array(Box::new(ty.clone())), Token::Array(items)))
            }),
            (inner.clone(), 1usize..3).prop_flat_map(|((ty, _), len)| {
                prop::collection::vec(typed(ty.clone()), len).prop_map(move |items| {
                    (ParamType::FixedArray(Box::new(ty.clone()), len), Token::FixedArray(items))
                })
            }),
            prop::collection::vec(inner, 1..4).prop_map(|items| {
                let (types, tokens): (Vec<_>, Vec<_>) = items.into_iter().unzip();
                (ParamType::Tuple(types), Token::Tuple(tokens))
            }),
        ]
    })
}

/// Another random value of an already chosen type.
fn typed(ty: ParamType) -> BoxedStrategy<Token> {
    match ty {
        ParamType::Address => any::<[u8; 20]>().prop_map(|a| Token::Address(a.into())).boxed(),
        ParamType::Uint(n) => any::<[u8; 32]>().prop_map(move |w| Token::Uint(fit(w, n, false))).boxed(),
        ParamType::Int(n) => any::<[u8; 32]>().prop_map(move |w| Token::Int(fit(w, n, true))).boxed(),
        ParamType::Bool => any::<bool>().prop_map(Token::Bool).boxed(),
        ParamType::FixedBytes(n) => any::<[u8; 32]>().prop_map(move |w| Token::FixedBytes(w[..n].to_vec())).boxed(),
        ParamType::Bytes => prop::collection::vec(any::<u8>(), 0..40).prop_map(Token::Bytes).boxed(),
        ParamType::String => "[ -~]{0,20}".prop_map(Token::String).boxed(),
        ParamType::Array(inner) => prop::collection::vec(typed(*inner), 0..3).prop_map(Token::Array).boxed(),
        ParamType::FixedArray(inner, n) => prop::collection::vec(typed(*inner), n).prop_map(Token::FixedArray).boxed(),
        ParamType::Tuple(types) => types
            .into_iter()
            .map(typed)
            .collect::<Vec<_>>()
            .prop_map(Token::Tuple)
            .boxed(),
    }
}

fn to_value(token: &Token) -> AbiValue {
    match token {
        Token::Address(a) => AbiValue::Address(Address(a.0)),
        Token::Uint(v) => AbiValue::Uint(u256(*v)),
        Token::Int(v) => AbiValue::Int(u256(*v)),
        Token::Bool(b) => AbiValue::Bool(*b),
        Token::FixedBytes(b) => AbiValue::FixedBytes(b.clone()),
        Token::Bytes(b) => AbiValue::Bytes(b.clone()),
        Token::String(s) => AbiValue::String(s.clone()),
        Token::Array(items) | Token::FixedArray(items) => AbiValue::Array(items.iter().map(to_value).collect()),
        Token::Tuple(items) => AbiValue::Tuple(items.iter().map(to_value).collect()),
    }
}

fn signature(types: &[ParamType]) -> String {
    let parts: Vec<String> = types.iter().map(ethabi::param_type::Writer::write).collect();
    format!("probe({})", parts.join(","))
}

fn reference_calldata(sig: &str, tokens: &[Token]) -> Vec<u8> {
    let mut out = tiny_keccak_selector(sig).to_vec();
    out.extend(ethabi::encode(tokens));
    out
}

fn tiny_keccak_selector(sig: &str) -> [u8; 4] {
    use tiny_keccak::{Hasher, Keccak};
    let mut k = Keccak::v256();
    k.update(sig.as_bytes());
    let mut h = [0u8; 32];
    k.finalize(&mut h);
    [h[0], h[1], h[2], h[3]]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn encoding_matches_ethabi(args in prop::collection::vec(param(), 0..5)) {
        let (types, tokens): (Vec<ParamType>, Vec<Token>) = args.into_iter().unzip();
        let sig = signature(&types);
        let values: Vec<AbiValue> = tokens.iter().map(to_value).collect();
        let expected = reference_calldata(&sig, &tokens);
        prop_assert_eq!(encode_calldata(&sig, &values).unwrap(), expected.clone());

        let decoded = decode_calldata(&sig, &expected).unwrap();
        let got: Vec<AbiValue> = decoded.into_iter().map(|p| p.decoded_value).collect();
        prop_assert_eq!(got, values);
        prop_assert_eq!(ethabi::decode(&types, &expected[4..]).unwrap(), tokens);
    }
}

#[test]
fn known_transfer_calldata() {
    let data = hex::decode(
        "a9059cbb000000000000000000000000ee1c452d6c53aba5f7f75c7eb7f06d8c33efba12000000000000000000000000000000000000000000000000000000003b9aca00",
    )
    .unwrap();
    let params = decode_calldata("transfer(address,uint256)", &data).unwrap();
    assert_eq!(params[0].decoded_value.render(), "0xee1c452d6c53aba5f7f75c7eb7f06d8c33efba12");
    assert_eq!(params[1].decoded_value.render(), "1000000000");
    assert!(decode_calldata("approve(address,uint256)", &data).is_err());
}
