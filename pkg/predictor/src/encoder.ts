/**
 * Frozen prompt encoder.
 *
 * A deterministic stand-in for a pretrained sentence encoder: each token is
 * hashed into a bucket of a fixed random embedding table, producing one
 * vector per token position.  The table is sampled once from the seed and
 * never trained; the gating head downstream is the only trainable part.
 */

import { fnv1a, gaussian, mulberry32 } from "./rng.js";

export interface EncoderConfig {
    hiddenDim: number;
    numBuckets: number;
    seed: number;
}

export class HashedTokenEncoder {
    readonly hiddenDim: number;
    readonly numBuckets: number;
    readonly seed: number;
    /** bucket embeddings, numBuckets x hiddenDim; frozen after construction */
    readonly table: Float64Array;

    constructor(config: EncoderConfig) {
        this.hiddenDim = config.hiddenDim;
        this.numBuckets = config.numBuckets;
        this.seed = config.seed;
        const next = mulberry32(config.seed);
        this.table = new Float64Array(config.numBuckets * config.hiddenDim);
        for (let i = 0; i < this.table.length; i++) {
            this.table[i] = gaussian(next) / Math.sqrt(config.hiddenDim);
        }
    }

    tokenize(prompt: string): string[] {
        return prompt.toLowerCase().split(/[^a-z0-9]+/).filter((t) => t.length > 0);
    }

    /** One embedding row per token position; empty prompts get a single
     * all-zero position so downstream pooling stays well-defined. */
    encode(prompt: string): Float64Array[] {
        const tokens = this.tokenize(prompt);
        if (tokens.length === 0) {
            return [new Float64Array(this.hiddenDim)];
        }
        return tokens.map((token) => {
            const bucket = fnv1a(token) % this.numBuckets;
            return this.table.slice(bucket * this.hiddenDim, (bucket + 1) * this.hiddenDim);
        });
    }

    /** Checksum of the frozen table, used to assert training never touches it. */
    checksum(): number {
        let sum = 0;
        for (let i = 0; i < this.table.length; i++) {
            sum += this.table[i] * (1 + (i % 97));
        }
        return sum;
    }
}
