/** CLI: node dist/src/main.js --out DIR [--seed N] */

import { defaultExport } from "./export";

function main(): number {
  const args = process.argv.slice(2);
  let outDir = "";
  let seed = 1;
  for (let i = 0; i < args.length; i++) {
    if (args[i] === "--out") outDir = args[++i];
    else if (args[i] === "--seed") seed = Number(args[++i]);
    else {
      console.error(`unknown argument ${args[i]}`);
      return 1;
    }
  }
  if (!outDir) {
    console.error("usage: main.js --out DIR [--seed N]");
    return 1;
  }
  const result = defaultExport(outDir, seed);
  console.log(JSON.stringify({ manifest: result.manifestPath, sanity: result.sanityPath }));
  return 0;
}

process.exit(main());
