//! Regenerates the fixture worlds and proposal records under `fixtures/`.
//!
//! Contract code comes from `fixtures/compiled.jsonl`; contract addresses follow the
//! CREATE/CREATE2 rules from their recorded creators.
//!
//! ```text
//! cargo run -p govaudit --example build_fixtures
//! ```

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use primitive_types::U256;
use serde_json::{json, Value};

use govaudit::abi::{encode_args, AbiType, AbiValue};
use govaudit::chain::{CreationKind, FixtureAccount, FixtureCreation, FixtureTrace, FixtureWorld};
use govaudit::evm::keccak256;
use govaudit::governance::{compute_create2_address, compute_create_address};
use govaudit::primitives::{encode_hex, Address, B256};

struct Artifact {
    runtime: Vec<u8>,
    init: Vec<u8>,
    functions: Vec<String>,
}

fn artifacts(root: &Path) -> BTreeMap<(String, String, bool), Artifact> {
    let text = std::fs::read_to_string(root.join("compiled.jsonl")).expect("compiled.jsonl");
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|line| {
            let v: Value = serde_json::from_str(line).expect("artifact line");
            let hex = |k: &str| govaudit::primitives::decode_hex(v[k].as_str().unwrap()).unwrap();
            let functions = v["functionSelectors"].as_object().unwrap().keys().cloned().collect();
            (
                (
                    v["name"].as_str().unwrap().to_string(),
                    v["compilerVersion"].as_str().unwrap().to_string(),
                    v["optimizer"].as_bool().unwrap(),
                ),
                Artifact {
                    runtime: hex("runtimeBytecodeHex"),
                    init: hex("initBytecodeHex"),
                    functions,
                },
            )
        })
        .collect()
}

fn eoa(label: &str) -> Address {
    Address::from_word(&keccak256(format!("eoa:{label}").as_bytes()).0)
}

fn tx(label: &str) -> B256 {
    keccak256(format!("tx:{label}").as_bytes())
}

fn word(address: Address) -> String {
    let mut w = [0u8; 32];
    w[12..].copy_from_slice(&address.0);
    encode_hex(&w)
}

const DEPLOY_TRACE: &[&str] = &["PUSH1", "PUSH1", "MSTORE", "CALLVALUE", "CODECOPY", "RETURN"];

struct Builder<'a> {
    world: FixtureWorld,
    artifacts: &'a BTreeMap<(String, String, bool), Artifact>,
    nonces: BTreeMap<Address, u64>,
}

struct Deployed {
    address: Address,
}

impl<'a> Builder<'a> {
    fn new(artifacts: &'a BTreeMap<(String, String, bool), Artifact>, description: &str) -> Self {
        let mut world = FixtureWorld::new(1);
        world.description = Some(description.to_string());
        Self {
            world,
            artifacts,
            nonces: BTreeMap::new(),
        }
    }

    fn artifact(&self, name: &str) -> &'a Artifact {
        self.artifacts
            .get(&(name.to_string(), "0.8.26".to_string(), false))
            .unwrap_or_else(|| panic!("no artifact {name}"))
    }

    fn next_nonce(&mut self, creator: Address) -> u64 {
        let n = self.nonces.entry(creator).or_insert(0);
        let out = *n;
        *n += 1;
        out
    }

    /// Deploys `artifact` from `creator` with CREATE; `trace` is the creation
    /// transaction's opcodes.
    fn create(&mut self, label: &str, artifact: &str, creator: Address, trace: &[&str]) -> Deployed {
        let nonce = self.next_nonce(creator);
        let address = compute_create_address(&creator, nonce);
        self.install(label, artifact, address, creator, None, trace)
    }

    fn create2(&mut self, label: &str, artifact: &str, factory: Address, salt: &str) -> Deployed {
        let salt = keccak256(salt.as_bytes());
        let init = self.artifact(artifact).init.clone();
        let address = compute_create2_address(&factory, &salt, &init);
        self.install(label, artifact, address, factory, Some(CreationKind::Create2), &["CALL", "CREATE2", "RETURN"])
    }

    fn install(
        &mut self,
        label: &str,
        artifact: &str,
        address: Address,
        creator: Address,
        kind: Option<CreationKind>,
        trace: &[&str],
    ) -> Deployed {
        let art = self.artifact(artifact);
        let tx_hash = tx(label);
        let account = self.world.account_mut(address);
        account.code = art.runtime.clone();
        account.verified = true;
        account.functions = Some(art.functions.clone());
        account.contract_name = Some(artifact.to_string());
        account.creation = Some(FixtureCreation { creator, tx_hash, kind });
        self.world
            .traces
            .insert(tx_hash, FixtureTrace::Opcodes(trace.iter().map(|s| s.to_string()).collect()));
        Deployed { address }
    }

    fn account(&mut self, address: Address) -> &mut FixtureAccount {
        self.world.account_mut(address)
    }

    fn write(self, path: &Path) {
        let text = serde_json::to_string_pretty(&self.world).unwrap() + "\n";
        std::fs::write(path, text).unwrap();
        println!("wrote {}", path.display());
    }
}

fn write_json(path: &Path, value: &Value) {
    std::fs::write(path, serde_json::to_string_pretty(value).unwrap() + "\n").unwrap();
    println!("wrote {}", path.display());
}

fn args(types: &[AbiType], values: &[AbiValue]) -> String {
    encode_hex(&encode_args(types, values).unwrap())
}

fn abbreviate(address: Address) -> String {
    let full = address.to_string();
    format!("{}…{}", &full[..6], &full[full.len() - 4..])
}

fn governance_worlds(arts: &BTreeMap<(String, String, bool), Artifact>, out: &Path) {
    // Admin-controlled governor.
    let mut b = Builder::new(arts, "Governor whose parameter setters are gated on a developer key held in storage");
    let developer = eoa("mini-dao developer");
    let dao = b.create("mini-dao", "MiniDao", developer, DEPLOY_TRACE);
    b.account(dao.address).storage.insert("0x0".into(), word(developer));
    b.write(&out.join("mini-dao.json"));

    // A governor deployed from a platform template by the platform's deployer.
    let mut b = Builder::new(arts, "Governor deployed unchanged from the platform template");
    let platform = eoa("template platform deployer");
    let key = ("GovernorTemplate".to_string(), "0.8.26".to_string(), true);
    let art = &arts[&key];
    let nonce = b.next_nonce(platform);
    let address = compute_create_address(&platform, nonce);
    let account = b.world.account_mut(address);
    account.code = art.runtime.clone();
    account.verified = true;
    account.functions = Some(art.functions.clone());
    account.contract_name = Some("GovernorTemplate".into());
    account.creation = Some(FixtureCreation {
        creator: platform,
        tx_hash: tx("template governor"),
        kind: None,
    });
    b.world.traces.insert(
        tx("template governor"),
        FixtureTrace::Opcodes(DEPLOY_TRACE.iter().map(|s| s.to_string()).collect()),
    );
    b.write(&out.join("template-clean.json"));

    write_json(
        &out.join("../deployers.json"),
        &json!({
            "format": "govaudit-deployers/1",
            "platforms": [{ "platform": "ExamplePlatform", "chainId": 1, "deployers": [platform] }]
        }),
    );
    let mut lines = String::new();
    for ((_, version, optimizer), art) in arts.iter().filter(|((n, _, _), _)| n == "GovernorTemplate") {
        let selectors: BTreeMap<&String, String> = art
            .functions
            .iter()
            .map(|f| (f, govaudit::evm::compute_selector(f).to_string()))
            .collect();
        lines += &serde_json::to_string(&json!({
            "name": format!("GovernorTemplate-{version}{}", if *optimizer { "-opt" } else { "" }),
            "platform": "ExamplePlatform",
            "compilerVersion": version,
            "optimizer": optimizer,
            "runtimeBytecodeHex": encode_hex(&art.runtime),
            "functionSelectors": selectors,
        }))
        .unwrap();
        lines.push('\n');
    }
    std::fs::write(out.join("../templates.jsonl"), lines).unwrap();
}

/// Factory → destructible deployer (CREATE2) → destructible proposal (CREATE).
fn tornado_chain(b: &mut Builder<'_>, tag: &str) -> (Address, Address, Address) {
    let attacker = eoa(&format!("{tag} attacker"));
    let factory = b.create(&format!("{tag} factory"), "Create2Factory", attacker, DEPLOY_TRACE);
    let deployer = b.create2(&format!("{tag} deployer"), "TransientDeployer", factory.address, &format!("{tag} salt"));
    let proposal = b.create(&format!("{tag} proposal"), "MutableProposal", deployer.address, &["CALL", "CREATE", "RETURN"]);
    (factory.address, deployer.address, proposal.address)
}

fn mutability_world(arts: &BTreeMap<(String, String, bool), Artifact>, out: &Path) -> Value {
    let mut b = Builder::new(arts, "Creation chains for the mutability check");
    let (factory, deployer, proposal) = tornado_chain(&mut b, "tornado");

    // Same shape, but the deployer comes from a plain transaction.
    let dev = eoa("create-only developer");
    let plain_deployer = b.create("create-only deployer", "TransientDeployer", dev, DEPLOY_TRACE);
    let plain_proposal = b.create("create-only proposal", "MutableProposal", plain_deployer.address, &["CALL", "CREATE", "RETURN"]);

    // A CREATE2-deployed governor that delegates execution to arbitrary code.
    let delegating_factory = b.create("delegating factory", "Create2Factory", dev, DEPLOY_TRACE);
    let delegating = b.create2("delegating governance", "DelegatingGovernance", delegating_factory.address, "delegating salt");

    // CREATE2-deployed, but nothing on the chain can self-destruct.
    let stable_factory = b.create("stable factory", "OneFunction", dev, DEPLOY_TRACE);
    let stable = b.create2("stable counter", "Counter", stable_factory.address, "stable salt");
    b.write(&out.join("mutability.json"));
    json!({
        "tornado": { "factory": factory, "deployer": deployer, "proposal": proposal, "pivotIndex": 1 },
        "createOnly": { "deployer": plain_deployer.address, "proposal": plain_proposal.address },
        "delegating": { "factory": delegating_factory.address, "target": delegating.address, "pivotIndex": 0 },
        "nonDestructible": { "factory": stable_factory.address, "target": stable.address },
    })
}

struct Incident {
    file: &'static str,
    id: &'static str,
    expected: &'static str,
    description: String,
    calls: Vec<Value>,
}

fn call(target: Address, signature: &str, calldata: String) -> Value {
    json!({ "target": target, "value": "0", "signature": signature, "calldata": calldata })
}

fn incident_world(arts: &BTreeMap<(String, String, bool), Artifact>, out: &Path) {
    let mut b = Builder::new(arts, "Targets of the governance attack incident proposals");
    let attacker = eoa("incident attacker");
    let a = |t: AbiType| t;
    let addr_amount = |to: Address, amount: U256| {
        args(&[a(AbiType::Address), AbiType::Uint(256)], &[AbiValue::Address(to), AbiValue::Uint(amount)])
    };
    let one_addr = |to: Address| args(&[AbiType::Address], &[AbiValue::Address(to)]);
    let e18 = U256::exp10(18);

    let token = |b: &mut Builder<'_>, label: &str, symbol: &str, tag: Option<&str>| -> Address {
        let deployer = eoa(&format!("{label} team"));
        let t = b.create(label, "Token", deployer, DEPLOY_TRACE);
        let acct = b.account(t.address);
        acct.symbol = Some(symbol.to_string());
        acct.decimals = Some(18);
        acct.name_tag = tag.map(str::to_string);
        t.address
    };

    let mut incidents = Vec::new();

    let tsd = token(&mut b, "tsd", "TSD", None);
    incidents.push(Incident {
        file: "true-seigniorage-dollar.json",
        id: "True Seigniorage Dollar",
        expected: "LackOfDescriptionIntention",
        description: String::new(),
        calls: vec![call(tsd, "mint(address,uint256)", addr_amount(attacker, U256::from(11_000_000_000u64) * e18))],
    });

    let yuan = token(&mut b, "yuan", "YUAN", None);
    incidents.push(Incident {
        file: "yuan.json",
        id: "Yuan",
        expected: "LackOfDescriptionIntention",
        description: "Proposal for the community.".into(),
        calls: vec![call(yuan, "transfer(address,uint256)", addr_amount(attacker, U256::from(1_000_000u64) * e18))],
    });

    let venus = token(&mut b, "venus", "XVS", Some("Venus: Comptroller"));
    incidents.push(Incident {
        file: "venus.json",
        id: "Venus",
        expected: "LackOfDescriptionIntention",
        description: "# Community update\n\nThanks to everyone who joined the call this week.".into(),
        calls: vec![call(venus, "_setVenusRate(uint256)", args(&[AbiType::Uint(256)], &[AbiValue::Uint(U256::from(2) * e18)]))],
    });

    let build = token(&mut b, "build finance", "BUILD", None);
    incidents.push(Incident {
        file: "build-finance.json",
        id: "Build Finance",
        expected: "LackOfDescriptionIntention",
        description: String::new(),
        calls: vec![call(build, "mint(address,uint256)", addr_amount(attacker, U256::from(1_100_000u64) * e18))],
    });

    let audius = token(&mut b, "audius", "AUDIO", Some("Audius: Governance Treasury"));
    incidents.push(Incident {
        file: "audius.json",
        id: "Audius",
        expected: "LackOfDescriptionIntention",
        description: "Governance housekeeping.".into(),
        calls: vec![call(audius, "transfer(address,uint256)", addr_amount(attacker, U256::from(18_000_000u64) * e18))],
    });

    let swerve = token(&mut b, "swerve", "SWRV", Some("Swerve: Pool Manager"));
    incidents.push(Incident {
        file: "swerve-finance.json",
        id: "Swerve Finance",
        expected: "LackOfDescriptionIntention",
        description: "Small fix for the pool manager.".into(),
        calls: vec![call(swerve, "transferOwnership(address)", one_addr(attacker))],
    });

    let atlantis = token(&mut b, "atlantis", "ATL", Some("Atlantis Loans: Unitroller"));
    incidents.push(Incident {
        file: "atlantis-loans.json",
        id: "Atlantis Loans",
        expected: "LackOfDescriptionIntention",
        description: "Routine maintenance for the lending markets.".into(),
        calls: vec![call(atlantis, "_setPendingImplementation(address)", one_addr(attacker))],
    });

    let indexed = token(&mut b, "indexed", "NDX", Some("Indexed Finance: Controller"));
    incidents.push(Incident {
        file: "indexed-finance.json",
        id: "Indexed Finance",
        expected: "LackOfDescriptionIntention",
        description: String::new(),
        calls: vec![call(indexed, "setController(address)", one_addr(attacker))],
    });

    let yam = token(&mut b, "yam reserves", "YAM", Some("YAM: Reserves"));
    incidents.push(Incident {
        file: "yam.json",
        id: "YAM",
        expected: "IncompleteFunction",
        description: "Contributors comps for May, backpay for VDM, settling synths tokens and success tokens, \
                      sending settled rewards tokens to reserves, sending and withdrawing test uma and claiming \
                      sushi for reserves."
            .into(),
        calls: vec![call(yam, "_setPendingGov(address)", one_addr(attacker))],
    });

    let beanstalk = token(&mut b, "beanstalk", "BEAN", Some("Beanstalk: Beanstalk Protocol"));
    incidents.push(Incident {
        file: "beanstalk.json",
        id: "Beanstalk",
        expected: "IncompleteFunction",
        description: format!(
            "Donate 250,000 USDC to the Ukraine donation address {}.",
            eoa("ukraine donation address")
        ),
        calls: vec![call(beanstalk, "emergencyCommit(uint32)", args(&[AbiType::Uint(32)], &[AbiValue::Uint(U256::from(18))]))],
    });

    let bigcap = token(&mut b, "bigcap", "BIGCAP", None);
    incidents.push(Incident {
        file: "bigcap.json",
        id: "BIGCAP",
        expected: "IncompleteFunction",
        description: "Distribute 5,000 BIGCAP to active stakers as monthly rewards.".into(),
        calls: vec![call(bigcap, "transferOwnership(address)", one_addr(attacker))],
    });

    let fortress_team = eoa("fortress team");
    let comptroller = b.create("fortress comptroller", "Counter", fortress_team, DEPLOY_TRACE);
    b.account(comptroller.address).name_tag = Some("Fortress: Comptroller".into());
    let fts_market = token(&mut b, "fortress fts market", "fFTS", None);
    incidents.push(Incident {
        file: "fortress.json",
        id: "Fortress Protocol",
        expected: "IncompleteParameter",
        description: format!(
            "Set the collateral factor of the FTS market {} on the Fortress Comptroller.",
            abbreviate(fts_market)
        ),
        calls: vec![call(
            comptroller.address,
            "_setCollateralFactor(address,uint256)",
            args(
                &[AbiType::Address, AbiType::Uint(256)],
                &[AbiValue::Address(fts_market), AbiValue::Uint(U256::from(7) * U256::exp10(17))],
            ),
        )],
    });

    let (_, _, tornado) = tornado_chain(&mut b, "tornado");
    incidents.push(Incident {
        file: "tornado-cash.json",
        id: "Tornado Cash",
        expected: "CodeMutability",
        description: "Penalize the relayers that cheated by executing the penalty proposal contract.".into(),
        calls: vec![call(tornado, "executeProposal()", String::new())],
    });

    // Definitional and CLI examples sharing the same world.
    let usdc = token(&mut b, "usdc", "USDC", None);
    b.account(usdc).decimals = Some(6);
    let grants = eoa("grants multisig");
    let extra = vec![
        (
            "normal.json",
            json!({
                "id": "Grants payout",
                "description": format!("Transfer 1,000 USDC to the grants multisig {}.", abbreviate(grants)),
                "calls": [call(usdc, "transfer(address,uint256)", addr_amount(grants, U256::from(1_000_000_000u64)))],
            }),
        ),
        (
            "description-only.json",
            json!({
                "id": "Unfunded grant",
                "description": format!("Transfer 1,000 USDC to the grants multisig {}.", abbreviate(grants)),
                "calls": [],
            }),
        ),
        (
            "incorrect.json",
            json!({
                "id": "Mislabelled payout",
                "description": format!(
                    "Transfer 1,000 USDC to the grants multisig {}. This proposal does not transfer USDC ownership.",
                    abbreviate(grants)
                ),
                "calls": [call(usdc, "transfer(address,uint256)", addr_amount(grants, U256::from(1_000_000_000u64)))],
            }),
        ),
        (
            "unsupported-platform.json",
            json!({
                "id": "Platform without descriptions",
                "descriptionSupported": false,
                "calls": [call(usdc, "transfer(address,uint256)", addr_amount(grants, U256::from(1_000_000_000u64)))],
            }),
        ),
    ];

    b.write(&out.join("incidents.json"));

    let proposals = out.join("../proposals");
    std::fs::create_dir_all(proposals.join("incidents")).unwrap();
    let mut expected = serde_json::Map::new();
    for incident in incidents {
        write_json(
            &proposals.join("incidents").join(incident.file),
            &json!({ "id": incident.id, "description": incident.description, "calls": incident.calls }),
        );
        expected.insert(incident.file.to_string(), json!(incident.expected));
    }
    write_json(&proposals.join("incidents/expected.json"), &Value::Object(expected));
    for (file, record) in extra {
        write_json(&proposals.join(file), &record);
    }
}

fn main() {
    let root = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    let arts = artifacts(&root);
    let worlds = root.join("worlds");
    std::fs::create_dir_all(&worlds).unwrap();
    governance_worlds(&arts, &worlds);
    let mutability = mutability_world(&arts, &worlds);
    write_json(&worlds.join("mutability.expected.json"), &mutability);
    incident_world(&arts, &worlds);
}
