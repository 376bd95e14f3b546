/**
 * Thin CLI: train a head on the synthetic keyword corpus (or a JSONL corpus
 * of {prompt, output_length} rows) and export predictions for a prompts file.
 *
 *   node dist/cli.js train --out model.json [--corpus corpus.jsonl]
 *   node dist/cli.js export --model model.json --prompts prompts.csv --out predictions.csv
 */

import { readFileSync, writeFileSync } from "node:fs";

import { keywordCorpus } from "./corpus.js";
import { HashedTokenEncoder } from "./encoder.js";
import { exportPredictions } from "./export.js";
import { parsePromptsCsv } from "./files.js";
import { GatingHead } from "./head.js";
import { Example, train } from "./train.js";

const ENCODER_DEFAULTS = { hiddenDim: 64, numBuckets: 4096, seed: 13 };
const HEAD_DEFAULTS = { hiddenDim: 64, squeezeDim: 8, seed: 5 };

function argValue(args: string[], flag: string): string | undefined {
    const idx = args.indexOf(flag);
    return idx >= 0 ? args[idx + 1] : undefined;
}

function loadCorpus(path: string): Example[] {
    return readFileSync(path, "utf-8")
        .split(/\r?\n/)
        .filter((l) => l.trim().length > 0)
        .map((line) => {
            const doc = JSON.parse(line);
            return { prompt: String(doc.prompt), outputLength: Number(doc.output_length) };
        });
}

function main(): number {
    const [command, ...args] = process.argv.slice(2);
    if (command === "train") {
        const corpusPath = argValue(args, "--corpus");
        const out = argValue(args, "--out") ?? "model.json";
        const corpus = corpusPath ? loadCorpus(corpusPath) : keywordCorpus();
        const encoder = new HashedTokenEncoder(ENCODER_DEFAULTS);
        const head = new GatingHead(HEAD_DEFAULTS);
        const result = train(corpus, encoder, head);
        writeFileSync(out, JSON.stringify({
            encoder: ENCODER_DEFAULTS,
            head: head.toJSON(),
        }, null, 2));
        console.log(`trained on ${corpus.length} examples: ` +
            `val L1 ${result.valL1.toFixed(3)} vs constant-mean ` +
            `${result.constantBaselineL1.toFixed(3)}; ` +
            `${result.trainableParameters} trainable parameters; wrote ${out}`);
        return 0;
    }
    if (command === "export") {
        const modelPath = argValue(args, "--model");
        const promptsPath = argValue(args, "--prompts");
        const out = argValue(args, "--out") ?? "predictions.csv";
        if (!modelPath || !promptsPath) {
            console.error("export needs --model and --prompts");
            return 1;
        }
        const doc = JSON.parse(readFileSync(modelPath, "utf-8"));
        const encoder = new HashedTokenEncoder(doc.encoder);
        const head = GatingHead.fromJSON(doc.head);
        const rows = parsePromptsCsv(readFileSync(promptsPath, "utf-8"));
        writeFileSync(out, exportPredictions(head, encoder, rows));
        console.log(`wrote predictions for ${rows.length} prompts to ${out}`);
        return 0;
    }
    console.error("usage: cli.js train|export [flags]");
    return 1;
}

process.exit(main());
