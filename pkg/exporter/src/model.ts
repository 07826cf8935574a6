/**
 * Toy multi-head sigmoid classifier plus a synthetic dataset generator.
 *
 * The model is a single linear layer with one logistic head per attribute:
 * score_h(x) = sigmoid(w_h . x + b_h). Weights and data derive from a seed
 * through the counter-based generator, so every export is a pure function of
 * (seed, sizes).
 */

import { unitDouble } from "./rng";

export class ConfigError extends Error {}
export class ConversionError extends Error {}

export interface ToyModel {
  /** one row of input weights per head */
  weights: number[][];
  bias: number[];
  featureCount: number;
  headCount: number;
}

export interface SplitData {
  sampleIds: string[];
  features: number[][];
  /** binary labels per sample x head */
  labels: number[][];
}

export function sigmoid(z: number): number {
  return z >= 0 ? 1 / (1 + Math.exp(-z)) : Math.exp(z) / (1 + Math.exp(z));
}

export function makeToyModel(seed: number, featureCount: number, headCount: number): ToyModel {
  const weights: number[][] = [];
  const bias: number[] = [];
  let counter = 0;
  for (let h = 0; h < headCount; h++) {
    const row: number[] = [];
    for (let f = 0; f < featureCount; f++) {
      row.push(2 * unitDouble(seed, counter++) - 1);
    }
    weights.push(row);
    bias.push(0.5 * (2 * unitDouble(seed, counter++) - 1));
  }
  return { weights, bias, featureCount, headCount };
}

/**
 * Synthetic split: features are uniform in [-1, 1]; labels come from a hidden
 * "true" model of the same shape under a different seed, thresholded at 0.5,
 * so the toy model is informative but imperfect.
 */
export function makeSplit(
  seed: number,
  sampleCount: number,
  featureCount: number,
  headCount: number,
  idPrefix: string,
): SplitData {
  const hidden = makeToyModel(seed + 7919, featureCount, headCount);
  const sampleIds: string[] = [];
  const features: number[][] = [];
  const labels: number[][] = [];
  let counter = 1_000_000;
  for (let i = 0; i < sampleCount; i++) {
    sampleIds.push(`${idPrefix}${String(i).padStart(4, "0")}`);
    const x: number[] = [];
    for (let f = 0; f < featureCount; f++) {
      x.push(2 * unitDouble(seed, counter++) - 1);
    }
    features.push(x);
    labels.push(predict(hidden, x).map((s) => (s >= 0.5 ? 1 : 0)));
  }
  return { sampleIds, features, labels };
}

export function predict(model: ToyModel, x: number[]): number[] {
  if (x.length !== model.featureCount) {
    throw new ConfigError(
      `sample has ${x.length} features, model expects ${model.featureCount}`,
    );
  }
  const scores: number[] = [];
  for (let h = 0; h < model.headCount; h++) {
    let z = model.bias[h];
    for (let f = 0; f < model.featureCount; f++) {
      z += model.weights[h][f] * x[f];
    }
    scores.push(sigmoid(z));
  }
  return scores;
}

export function scoreSplit(model: ToyModel, split: SplitData): number[][] {
  return split.features.map((x) => predict(model, x));
}
