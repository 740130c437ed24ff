// Regenerates crates/core/fixtures/compiled.jsonl from the Solidity sources.
//
//   npm install solc@0.8.26 solc5@npm:solc@0.5.17 solc6@npm:solc@0.6.12 solc7@npm:solc@0.7.6
//   node tools/compile-fixtures.js
const fs = require("fs");
const path = require("path");

const root = path.join(__dirname, "..", "crates", "core", "fixtures");
const compilers = {
  "0.5.17": require("solc5"),
  "0.6.12": require("solc6"),
  "0.7.6": require("solc7"),
  "0.8.26": require("solc"),
};

const builds = [
  ["GovernorTemplate.sol", ["0.5.17", "0.6.12", "0.7.6", "0.8.26"], [false]],
  ["GovernorTemplate.sol", ["0.8.26"], [true]],
  ["Benign.sol", ["0.8.26"], [false]],
  ["Dispatch.sol", ["0.5.17", "0.8.26"], [false]],
  ["Dispatch.sol", ["0.8.26"], [true]],
  ["MiniDao.sol", ["0.8.26"], [false, true]],
  ["HardcodedAdminDao.sol", ["0.8.26"], [false]],
  ["SelfGovernedDao.sol", ["0.8.26"], [false]],
  ["StoredGovernanceDao.sol", ["0.8.26"], [false]],
  ["Metamorphic.sol", ["0.8.26"], [false]],
];

const lines = [];
for (const [file, versions, optimizerSettings] of builds) {
  const content = fs.readFileSync(path.join(root, "solidity", file), "utf8");
  for (const version of versions) {
    for (const optimizer of optimizerSettings) {
      const input = {
        language: "Solidity",
        sources: { [file]: { content } },
        settings: {
          optimizer: { enabled: optimizer, runs: 200 },
          outputSelection: {
            "*": { "*": ["evm.bytecode.object", "evm.deployedBytecode.object", "evm.methodIdentifiers"] },
          },
        },
      };
      const output = JSON.parse(compilers[version].compile(JSON.stringify(input)));
      const errors = (output.errors || []).filter((e) => e.severity === "error");
      if (errors.length > 0) {
        throw new Error(`${file} @ ${version}: ${errors.map((e) => e.formattedMessage).join("\n")}`);
      }
      for (const [contract, artifact] of Object.entries(output.contracts[file])) {
        const selectors = {};
        for (const [signature, selector] of Object.entries(artifact.evm.methodIdentifiers)) {
          selectors[signature] = "0x" + selector;
        }
        lines.push(
          JSON.stringify({
            name: contract,
            source: file,
            compilerVersion: version,
            optimizer,
            runtimeBytecodeHex: "0x" + artifact.evm.deployedBytecode.object,
            initBytecodeHex: "0x" + artifact.evm.bytecode.object,
            functionSelectors: selectors,
          })
        );
      }
    }
  }
}
fs.writeFileSync(path.join(root, "compiled.jsonl"), lines.join("\n") + "\n");
console.log(`wrote ${lines.length} artifacts`);
