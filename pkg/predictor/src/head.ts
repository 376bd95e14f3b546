/**
 * The trainable gating head.
 *
 * Pipeline over the frozen per-token features z (L x d):
 *
 *   squeeze      s = avgPool(z) + maxPool(z)            (pool over positions)
 *   excite       e = sigmoid(Wexp * relu(Wsq * s))      (bottleneck gating)
 *   recalibrate  z' = z (.) e                           (per-feature gates)
 *   regress      pred = w . sumPool(z') + b
 *
 * The bottleneck has no biases, so the trainable parameter count is exactly
 * 2 * hiddenDim * squeezeDim for the two matrices plus hiddenDim + 1 for the
 * regression head.  Gradients are hand-derived; the encoder features are
 * constants, so backpropagation touches the parameters only.
 */

import { gaussian, mulberry32 } from "./rng.js";

export interface HeadConfig {
    hiddenDim: number;
    squeezeDim: number;
    seed: number;
}

export interface HeadGradients {
    wSq: Float64Array;
    wExp: Float64Array;
    w: Float64Array;
    b: number;
}

export function squeeze(z: Float64Array[]): Float64Array {
    if (z.length === 0) {
        throw new Error("squeeze requires at least one position");
    }
    const d = z[0].length;
    const out = new Float64Array(d);
    for (let i = 0; i < d; i++) {
        let sum = 0;
        let max = -Infinity;
        for (const row of z) {
            sum += row[i];
            if (row[i] > max) max = row[i];
        }
        out[i] = sum / z.length + max;
    }
    return out;
}

export function recalibrate(z: Float64Array[], e: Float64Array): Float64Array[] {
    return z.map((row) => {
        const out = new Float64Array(row.length);
        for (let i = 0; i < row.length; i++) out[i] = row[i] * e[i];
        return out;
    });
}

function sigmoid(x: number): number {
    return 1 / (1 + Math.exp(-x));
}

interface ForwardTrace {
    s: Float64Array;        // squeezed descriptor (constant w.r.t. params)
    zSum: Float64Array;     // sum over positions  (constant w.r.t. params)
    pre: Float64Array;      // Wsq * s, before relu
    h: Float64Array;        // relu(pre)
    e: Float64Array;        // gates
    pred: number;
}

export class GatingHead {
    readonly hiddenDim: number;
    readonly squeezeDim: number;
    /** squeezeDim x hiddenDim, maps the descriptor into the bottleneck */
    wSq: Float64Array;
    /** hiddenDim x squeezeDim, maps the bottleneck back to gate logits */
    wExp: Float64Array;
    w: Float64Array;
    b: number;

    constructor(config: HeadConfig) {
        if (config.squeezeDim >= config.hiddenDim) {
            throw new Error("squeezeDim must be smaller than hiddenDim");
        }
        this.hiddenDim = config.hiddenDim;
        this.squeezeDim = config.squeezeDim;
        const next = mulberry32(config.seed);
        const scale = 1 / Math.sqrt(config.hiddenDim);
        this.wSq = new Float64Array(config.squeezeDim * config.hiddenDim);
        this.wExp = new Float64Array(config.hiddenDim * config.squeezeDim);
        for (let i = 0; i < this.wSq.length; i++) this.wSq[i] = gaussian(next) * scale;
        for (let i = 0; i < this.wExp.length; i++) this.wExp[i] = gaussian(next) * scale;
        this.w = new Float64Array(config.hiddenDim);
        for (let i = 0; i < this.w.length; i++) this.w[i] = gaussian(next) * scale;
        this.b = 0;
    }

    parameterCount(): number {
        return this.wSq.length + this.wExp.length + this.w.length + 1;
    }

    excite(s: Float64Array): Float64Array {
        return this.forwardFromDescriptor(s, new Float64Array(this.hiddenDim)).e;
    }

    private forwardFromDescriptor(s: Float64Array, zSum: Float64Array): ForwardTrace {
        const { hiddenDim, squeezeDim } = this;
        const pre = new Float64Array(squeezeDim);
        for (let k = 0; k < squeezeDim; k++) {
            let acc = 0;
            for (let m = 0; m < hiddenDim; m++) acc += this.wSq[k * hiddenDim + m] * s[m];
            pre[k] = acc;
        }
        const h = pre.map((x) => (x > 0 ? x : 0));
        const e = new Float64Array(hiddenDim);
        for (let i = 0; i < hiddenDim; i++) {
            let acc = 0;
            for (let k = 0; k < squeezeDim; k++) acc += this.wExp[i * squeezeDim + k] * h[k];
            e[i] = sigmoid(acc);
        }
        let pred = this.b;
        for (let i = 0; i < hiddenDim; i++) pred += this.w[i] * zSum[i] * e[i];
        return { s, zSum, pre, h, e, pred };
    }

    private trace(z: Float64Array[]): ForwardTrace {
        const zSum = new Float64Array(this.hiddenDim);
        for (const row of z) {
            for (let i = 0; i < this.hiddenDim; i++) zSum[i] += row[i];
        }
        return this.forwardFromDescriptor(squeeze(z), zSum);
    }

    predict(z: Float64Array[]): number {
        return this.trace(z).pred;
    }

    /** Gates for a given input; exposed for invariant checks. */
    gates(z: Float64Array[]): Float64Array {
        return this.trace(z).e;
    }

    /** d(pred)/d(params), scaled by upstream; used by both the trainer and
     * the finite-difference check. */
    gradients(z: Float64Array[], upstream = 1.0): HeadGradients {
        const { hiddenDim, squeezeDim } = this;
        const t = this.trace(z);
        const gW = new Float64Array(hiddenDim);
        const dE = new Float64Array(hiddenDim);
        for (let i = 0; i < hiddenDim; i++) {
            gW[i] = upstream * t.zSum[i] * t.e[i];
            dE[i] = upstream * this.w[i] * t.zSum[i];
        }
        const dU = new Float64Array(hiddenDim);
        for (let i = 0; i < hiddenDim; i++) dU[i] = dE[i] * t.e[i] * (1 - t.e[i]);
        const gWExp = new Float64Array(this.wExp.length);
        const dH = new Float64Array(squeezeDim);
        for (let i = 0; i < hiddenDim; i++) {
            for (let k = 0; k < squeezeDim; k++) {
                gWExp[i * squeezeDim + k] = dU[i] * t.h[k];
                dH[k] += dU[i] * this.wExp[i * squeezeDim + k];
            }
        }
        const gWSq = new Float64Array(this.wSq.length);
        for (let k = 0; k < squeezeDim; k++) {
            if (t.pre[k] <= 0) continue;
            for (let m = 0; m < hiddenDim; m++) {
                gWSq[k * hiddenDim + m] = dH[k] * t.s[m];
            }
        }
        return { wSq: gWSq, wExp: gWExp, w: gW, b: upstream };
    }

    parameters(): Float64Array {
        const flat = new Float64Array(this.parameterCount());
        flat.set(this.wSq, 0);
        flat.set(this.wExp, this.wSq.length);
        flat.set(this.w, this.wSq.length + this.wExp.length);
        flat[flat.length - 1] = this.b;
        return flat;
    }

    setParameters(flat: Float64Array): void {
        if (flat.length !== this.parameterCount()) {
            throw new Error("parameter vector has the wrong length");
        }
        this.wSq.set(flat.subarray(0, this.wSq.length));
        this.wExp.set(flat.subarray(this.wSq.length, this.wSq.length + this.wExp.length));
        this.w.set(flat.subarray(this.wSq.length + this.wExp.length, flat.length - 1));
        this.b = flat[flat.length - 1];
    }

    flatGradients(z: Float64Array[], upstream = 1.0): Float64Array {
        const g = this.gradients(z, upstream);
        const flat = new Float64Array(this.parameterCount());
        flat.set(g.wSq, 0);
        flat.set(g.wExp, g.wSq.length);
        flat.set(g.w, g.wSq.length + g.wExp.length);
        flat[flat.length - 1] = g.b;
        return flat;
    }

    toJSON(): object {
        return {
            hidden_dim: this.hiddenDim,
            squeeze_dim: this.squeezeDim,
            w_sq: Array.from(this.wSq),
            w_exp: Array.from(this.wExp),
            w: Array.from(this.w),
            b: this.b,
        };
    }

    static fromJSON(doc: any): GatingHead {
        const head = new GatingHead({
            hiddenDim: doc.hidden_dim,
            squeezeDim: doc.squeeze_dim,
            seed: 0,
        });
        head.wSq.set(doc.w_sq);
        head.wExp.set(doc.w_exp);
        head.w.set(doc.w);
        head.b = doc.b;
        return head;
    }
}
