/**
 * L1-loss training of the gating head with Adam; the encoder stays frozen.
 */

import { HashedTokenEncoder } from "./encoder.js";
import { GatingHead } from "./head.js";
import { mulberry32 } from "./rng.js";

export interface Example {
    prompt: string;
    outputLength: number;
}

export interface TrainConfig {
    epochs: number;
    learningRate: number;
    batchSize: number;
    seed: number;
    valFraction: number;
}

export const DEFAULT_TRAIN_CONFIG: TrainConfig = {
    epochs: 200,
    learningRate: 0.02,
    batchSize: 32,
    seed: 0,
    valFraction: 0.2,
};

export interface TrainResult {
    head: GatingHead;
    trainL1: number;
    valL1: number;
    constantBaselineL1: number;   // best constant (train-mean) predictor on val
    trainableParameters: number;
    encoderChecksumBefore: number;
    encoderChecksumAfter: number;
}

export function meanAbsoluteError(preds: number[], targets: number[]): number {
    if (preds.length === 0) throw new Error("empty evaluation set");
    let total = 0;
    for (let i = 0; i < preds.length; i++) total += Math.abs(preds[i] - targets[i]);
    return total / preds.length;
}

class Adam {
    private m: Float64Array;
    private v: Float64Array;
    private t = 0;

    constructor(size: number, private lr: number,
                private beta1 = 0.9, private beta2 = 0.999, private eps = 1e-8) {
        this.m = new Float64Array(size);
        this.v = new Float64Array(size);
    }

    step(params: Float64Array, grads: Float64Array): void {
        this.t += 1;
        const bc1 = 1 - Math.pow(this.beta1, this.t);
        const bc2 = 1 - Math.pow(this.beta2, this.t);
        for (let i = 0; i < params.length; i++) {
            this.m[i] = this.beta1 * this.m[i] + (1 - this.beta1) * grads[i];
            this.v[i] = this.beta2 * this.v[i] + (1 - this.beta2) * grads[i] * grads[i];
            params[i] -= this.lr * (this.m[i] / bc1) / (Math.sqrt(this.v[i] / bc2) + this.eps);
        }
    }
}

export function train(corpus: Example[], encoder: HashedTokenEncoder,
                      head: GatingHead,
                      config: TrainConfig = DEFAULT_TRAIN_CONFIG): TrainResult {
    if (corpus.length === 0) throw new Error("empty corpus");
    const checksumBefore = encoder.checksum();
    const features = corpus.map((ex) => encoder.encode(ex.prompt));
    const targets = corpus.map((ex) => ex.outputLength);

    // deterministic split: shuffle indices with the training seed
    const next = mulberry32(config.seed);
    const order = corpus.map((_, i) => i);
    for (let i = order.length - 1; i > 0; i--) {
        const j = Math.floor(next() * (i + 1));
        [order[i], order[j]] = [order[j], order[i]];
    }
    const valCount = Math.min(corpus.length - 1,
                              Math.floor(corpus.length * config.valFraction));
    const valIdx = order.slice(0, valCount);
    const trainIdx = order.slice(valCount);

    const optimizer = new Adam(head.parameterCount(), config.learningRate);
    const params = head.parameters();
    for (let epoch = 0; epoch < config.epochs; epoch++) {
        for (let i = trainIdx.length - 1; i > 0; i--) {
            const j = Math.floor(next() * (i + 1));
            [trainIdx[i], trainIdx[j]] = [trainIdx[j], trainIdx[i]];
        }
        for (let start = 0; start < trainIdx.length; start += config.batchSize) {
            const batch = trainIdx.slice(start, start + config.batchSize);
            const grads = new Float64Array(head.parameterCount());
            for (const idx of batch) {
                const pred = head.predict(features[idx]);
                const upstream = Math.sign(pred - targets[idx]) / batch.length;
                const g = head.flatGradients(features[idx], upstream);
                for (let p = 0; p < grads.length; p++) grads[p] += g[p];
            }
            optimizer.step(params, grads);
            head.setParameters(params);
        }
        if (!Number.isFinite(head.predict(features[trainIdx[0]]))) {
            throw new Error(`non-finite prediction at epoch ${epoch}`);
        }
    }

    const evalSet = (idx: number[]) => meanAbsoluteError(
        idx.map((i) => head.predict(features[i])),
        idx.map((i) => targets[i]));
    const trainMean = trainIdx.reduce((acc, i) => acc + targets[i], 0) / trainIdx.length;
    const evalIdx = valIdx.length > 0 ? valIdx : trainIdx;
    const baseline = meanAbsoluteError(evalIdx.map(() => trainMean),
                                       evalIdx.map((i) => targets[i]));
    return {
        head,
        trainL1: evalSet(trainIdx),
        valL1: evalSet(evalIdx),
        constantBaselineL1: baseline,
        trainableParameters: head.parameterCount(),
        encoderChecksumBefore: checksumBefore,
        encoderChecksumAfter: encoder.checksum(),
    };
}

export function predictLength(head: GatingHead, encoder: HashedTokenEncoder,
                              prompt: string): number {
    return Math.max(0, Math.round(head.predict(encoder.encode(prompt))));
}
