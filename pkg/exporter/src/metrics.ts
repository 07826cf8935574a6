/**
 * Sanity-check metrics mirroring the audit package's conventions: rank-based
 * AUC with average-rank ties, ECE over ten equal-width buckets (a score on an
 * interior edge belongs to the higher bucket, 1.0 to the top), and the strict
 * (0.1, 0.9) uncertainty interval.
 */

export function accuracy(scores: number[], labels: number[], threshold = 0.5): number {
  let hits = 0;
  for (let i = 0; i < scores.length; i++) {
    if ((scores[i] >= threshold ? 1 : 0) === labels[i]) hits++;
  }
  return hits / scores.length;
}

function averageRanks(values: number[]): number[] {
  const order = values.map((v, i) => i).sort((a, b) => values[a] - values[b] || a - b);
  const ranks = new Array<number>(values.length);
  let i = 0;
  while (i < order.length) {
    let j = i;
    while (j + 1 < order.length && values[order[j + 1]] === values[order[i]]) j++;
    const avg = (i + 1 + (j + 1)) / 2;
    for (let k = i; k <= j; k++) ranks[order[k]] = avg;
    i = j + 1;
  }
  return ranks;
}

export function auc(scores: number[], labels: number[]): number {
  const nPos = labels.reduce((a, b) => a + b, 0);
  const nNeg = labels.length - nPos;
  if (nPos === 0 || nNeg === 0) {
    throw new Error("AUC needs both classes");
  }
  const ranks = averageRanks(scores);
  let posRankSum = 0;
  for (let i = 0; i < labels.length; i++) {
    if (labels[i] === 1) posRankSum += ranks[i];
  }
  return (posRankSum - (nPos * (nPos + 1)) / 2) / (nPos * nNeg);
}

const EDGES = Array.from({ length: 11 }, (_, i) => i / 10);

function bucketIndex(score: number): number {
  // first edge strictly greater than the score, minus one; capped at 9
  let lo = 0;
  let hi = EDGES.length;
  while (lo < hi) {
    const mid = (lo + hi) >> 1;
    if (EDGES[mid] <= score) lo = mid + 1;
    else hi = mid;
  }
  return Math.min(lo - 1, 9);
}

export function ece(scores: number[], labels: number[]): number {
  const counts = new Array<number>(10).fill(0);
  const scoreSums = new Array<number>(10).fill(0);
  const posSums = new Array<number>(10).fill(0);
  for (let i = 0; i < scores.length; i++) {
    const b = bucketIndex(scores[i]);
    counts[b]++;
    scoreSums[b] += scores[i];
    posSums[b] += labels[i];
  }
  let total = 0;
  for (let b = 0; b < 10; b++) {
    if (counts[b] === 0) continue;
    const conf = scoreSums[b] / counts[b];
    const acc = posSums[b] / counts[b];
    total += (counts[b] / scores.length) * Math.abs(acc - conf);
  }
  return total;
}

export function uncertaintyFraction(scores: number[], low = 0.1, high = 0.9): number {
  let n = 0;
  for (const s of scores) {
    if (s > low && s < high) n++;
  }
  return n / scores.length;
}
