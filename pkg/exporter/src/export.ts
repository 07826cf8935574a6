/**
 * Export pipeline: evaluate the toy model on a synthetic split, then write
 * everything a prunebias audit needs — label table CSV, prediction CSV,
 * TBND weight bundle, run manifest — plus an in-process metric sanity check
 * that a re-audit must reproduce.
 */

import * as fs from "fs";
import * as path from "path";

import { accuracy, auc, ece, uncertaintyFraction } from "./metrics";
import {
  ConfigError,
  SplitData,
  ToyModel,
  makeSplit,
  makeToyModel,
  scoreSplit,
} from "./model";
import { NamedTensor, encodeTensorBundle } from "./tbnd";

export interface ExportConfig {
  model: ToyModel;
  split: SplitData;
  splitName: "train" | "val" | "test";
  attributes: string[];
  outDir: string;
  runId: string;
  method: "dense" | "gmp_ri" | "gmp_pt" | "nm";
  sparsity: number;
  seed: number;
}

export interface ExportResult {
  labelsPath: string;
  predictionsPath: string;
  weightsPath: string;
  manifestPath: string;
  sanityPath: string;
  sanity: Record<string, Record<string, number>>;
}

function checkConfig(config: ExportConfig): void {
  if (config.attributes.length !== config.model.headCount) {
    throw new ConfigError(
      `${config.attributes.length} attribute name(s) for a ` +
        `${config.model.headCount}-head model`,
    );
  }
  if (config.split.labels.some((row) => row.length !== config.model.headCount)) {
    throw new ConfigError("label rows do not match the model head count");
  }
}

function writeCsv(
  filePath: string,
  attributes: string[],
  sampleIds: string[],
  rows: number[][],
  format: (v: number) => string,
): void {
  const lines = [`sample_id,${attributes.join(",")}`];
  for (let i = 0; i < sampleIds.length; i++) {
    lines.push(`${sampleIds[i]},${rows[i].map(format).join(",")}`);
  }
  fs.writeFileSync(filePath, lines.join("\n") + "\n", "utf-8");
}

/** Full-precision score text: shortest round-trip form of the double. */
const fullPrecision = (v: number) => String(v);

export function exportPredictions(config: ExportConfig): ExportResult {
  checkConfig(config);
  fs.mkdirSync(config.outDir, { recursive: true });

  const scores = scoreSplit(config.model, config.split);

  const labelsPath = path.join(config.outDir, `labels_${config.splitName}.csv`);
  writeCsv(labelsPath, config.attributes, config.split.sampleIds,
    config.split.labels, (v) => String(v));

  const predictionsPath = path.join(config.outDir, `${config.runId}.csv`);
  writeCsv(predictionsPath, config.attributes, config.split.sampleIds,
    scores, fullPrecision);

  const weightsPath = exportWeights(config);

  const manifest = {
    labels: { [config.splitName]: path.basename(labelsPath) },
    runs: [
      {
        run_id: config.runId,
        method: config.method,
        sparsity: config.sparsity,
        seed: config.seed,
        split: config.splitName,
        predictions_path: path.basename(predictionsPath),
      },
    ],
    categories: [] as string[],
  };
  const manifestPath = path.join(config.outDir, "manifest.json");
  fs.writeFileSync(manifestPath, JSON.stringify(manifest, null, 2) + "\n", "utf-8");

  const sanity: Record<string, Record<string, number>> = {};
  for (let h = 0; h < config.attributes.length; h++) {
    const column = scores.map((row) => row[h]);
    const labels = config.split.labels.map((row) => row[h]);
    sanity[config.attributes[h]] = {
      accuracy: accuracy(column, labels),
      auc: auc(column, labels),
      ece: ece(column, labels),
      uncertainty: uncertaintyFraction(column),
    };
  }
  const sanityPath = path.join(config.outDir, "sanity.json");
  fs.writeFileSync(sanityPath, JSON.stringify(sanity, null, 2) + "\n", "utf-8");

  return { labelsPath, predictionsPath, weightsPath, manifestPath, sanityPath, sanity };
}

export function exportWeights(config: ExportConfig): string {
  const tensors: NamedTensor[] = [
    {
      name: "linear.weight",
      dims: [config.model.headCount, config.model.featureCount],
      data: config.model.weights.flat(),
    },
    { name: "linear.bias", dims: [config.model.headCount], data: config.model.bias },
  ];
  const weightsPath = path.join(config.outDir, `${config.runId}_weights.tbnd`);
  fs.writeFileSync(weightsPath, encodeTensorBundle(tensors));
  return weightsPath;
}

export function defaultExport(outDir: string, seed = 1): ExportResult {
  const featureCount = 6;
  const attributes = ["attr_a", "attr_b"];
  const model = makeToyModel(seed, featureCount, attributes.length);
  const split = makeSplit(seed + 1, 240, featureCount, attributes.length, "s");
  return exportPredictions({
    model,
    split,
    splitName: "test",
    attributes,
    outDir,
    runId: `toy_dense_seed${seed}`,
    method: "dense",
    sparsity: 0,
    seed,
  });
}
