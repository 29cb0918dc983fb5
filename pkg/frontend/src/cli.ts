#!/usr/bin/env node
/** Command-line front end for extraction and snapshot fine-tuning. */

import yargs from "yargs";
import { hideBin } from "yargs/helpers";

import { CATALOG } from "./catalog";
import { extract } from "./extract";
import { snapshotFinetune } from "./finetune";

export async function main(argv: string[]): Promise<number> {
  let exitCode = 0;
  await yargs(argv)
    .scriptName("xferbench-extract")
    .command(
      "extract",
      "dump features, logits, and head weights for catalog models",
      (y) =>
        y
          .option("models", { type: "string", array: true, demandOption: true })
          .option("dataset", { type: "string", default: "synthimg" })
          .option("subsample", { type: "number", default: 2000 })
          .option("out", { type: "string", demandOption: true })
          .option("seed", { type: "number", default: 42 }),
      (args) => {
        const report = extract({
          modelNames: args.models as string[],
          datasetId: args.dataset,
          subsample: args.subsample,
          outDir: args.out,
          seed: args.seed,
        });
        console.log(`extracted ${report.extracted.length} model(s) -> ${report.manifestPath}`);
        if (report.failed.length > 0) exitCode = report.extracted.length > 0 ? 0 : 1;
        if (report.extracted.length === 0) exitCode = 1;
      }
    )
    .command(
      "snapshot-finetune",
      "write before/after fine-tune weight snapshots for one model",
      (y) =>
        y
          .option("model", { type: "string", demandOption: true })
          .option("dataset", { type: "string", default: "synthimg" })
          .option("subsample", { type: "number", default: 2000 })
          .option("out", { type: "string", demandOption: true })
          .option("seed", { type: "number", default: 42 })
          .option("lr", { type: "number", default: 0.01 })
          .option("epochs", { type: "number", default: 2 })
          .option("batch-size", { type: "number", default: 64 }),
      (args) => {
        const report = snapshotFinetune({
          modelName: args.model,
          datasetId: args.dataset,
          subsample: args.subsample,
          outDir: args.out,
          seed: args.seed,
          lr: args.lr,
          epochs: args.epochs,
          batchSize: args.batchSize,
        });
        console.log(
          `snapshots: ${report.beforePath} ${report.afterPath} ` +
            `(epoch losses: ${report.losses.map((l) => l.toFixed(4)).join(", ")})`
        );
      }
    )
    .command("catalog", "list available model names", {}, () => {
      for (const name of Object.keys(CATALOG)) console.log(name);
    })
    .demandCommand(1)
    .strict()
    .fail((msg, err) => {
      console.error(msg ?? err?.message ?? "error");
      exitCode = 1;
    })
    .parseAsync();
  return exitCode;
}

if (require.main === module) {
  main(hideBin(process.argv)).then((code) => {
    process.exitCode = code;
  });
}
