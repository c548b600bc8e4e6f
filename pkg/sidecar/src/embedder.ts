/**
 * Deterministic sentence embedder: token-hash buckets with L2 normalization.
 *
 * The output dimension is fixed per process, every call is a pure function of
 * the input text, and vectors come back unit-norm, which is exactly what the
 * engine's /embed contract requires. Swap in a real sentence-embedding model
 * by implementing the same interface.
 */

export interface Embedder {
  readonly dim: number;
  readonly modelId: string;
  embed(texts: string[]): number[][];
}

function tokenize(text: string): string[] {
  return text.toLowerCase().match(/[a-z0-9]+/g) ?? [];
}

/** FNV-1a over the token bytes, 32-bit, mixed once more for spread. */
function bucketOf(token: string, dim: number): number {
  let hash = 0x811c9dc5;
  for (let i = 0; i < token.length; i++) {
    hash ^= token.charCodeAt(i);
    hash = Math.imul(hash, 0x01000193);
  }
  hash ^= hash >>> 15;
  hash = Math.imul(hash, 0x2c1b3c6d);
  hash ^= hash >>> 12;
  return (hash >>> 0) % dim;
}

export class HashEmbedder implements Embedder {
  readonly dim: number;
  readonly modelId: string;

  constructor(dim = 384) {
    if (!Number.isInteger(dim) || dim < 1) {
      throw new Error(`embedder dim must be a positive integer, got ${dim}`);
    }
    this.dim = dim;
    this.modelId = `token-hash-${dim}`;
  }

  embed(texts: string[]): number[][] {
    return texts.map((text) => {
      const vec = new Array<number>(this.dim).fill(0);
      for (const token of tokenize(text)) {
        vec[bucketOf(token, this.dim)] += 1;
      }
      let norm = Math.sqrt(vec.reduce((acc, v) => acc + v * v, 0));
      if (norm === 0) {
        // embed the empty bag as a fixed basis vector so the contract's
        // unit-norm guarantee holds for degenerate inputs too
        vec[0] = 1;
        norm = 1;
      }
      return vec.map((v) => v / norm);
    });
  }
}
