/**
 * Counter-based deterministic generator (SplitMix64 mixing), matching the
 * constants in the prunebias format spec so exports reproduce bit for bit.
 */

const MASK = (1n << 64n) - 1n;
const GOLDEN = 0x9e3779b97f4a7c15n;
const MIX1 = 0xbf58476d1ce4e5b9n;
const MIX2 = 0x94d049bb133111ebn;

export function splitmix64(seed: bigint, index: bigint): bigint {
  let z = (seed + (index + 1n) * GOLDEN) & MASK;
  z = ((z ^ (z >> 30n)) * MIX1) & MASK;
  z = ((z ^ (z >> 27n)) * MIX2) & MASK;
  return z ^ (z >> 31n);
}

/** Deterministic double in [0, 1) from (seed, counter): top 53 bits of the hash. */
export function unitDouble(seed: number, counter: number): number {
  const key = splitmix64(BigInt(seed), BigInt(counter));
  return Number(key >> 11n) / 2 ** 53;
}
