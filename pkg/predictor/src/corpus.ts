/**
 * Synthetic training corpora.  The keyword corpus ties the target length to
 * the count of "verbosity" keywords in the prompt, which a feature-gating
 * head can learn but a constant predictor cannot.
 */

import { Example } from "./train.js";
import { mulberry32 } from "./rng.js";

const FILLER = [
    "please", "summarize", "the", "report", "about", "market", "trends",
    "write", "a", "note", "on", "quarterly", "results", "for", "team",
    "compare", "these", "two", "options", "and", "pick", "one", "draft",
    "reply", "to", "customer", "ticket", "regarding", "billing", "issue",
];

const KEYWORDS = ["detail", "thorough", "elaborate"];

export interface KeywordCorpusConfig {
    size: number;
    seed: number;
    baseLength: number;       // length with no keywords
    perKeyword: number;       // extra length per keyword occurrence
    maxKeywords: number;
}

export const DEFAULT_CORPUS: KeywordCorpusConfig = {
    size: 400,
    seed: 7,
    baseLength: 20,
    perKeyword: 15,
    maxKeywords: 8,
};

export function keywordCorpus(config: KeywordCorpusConfig = DEFAULT_CORPUS): Example[] {
    const next = mulberry32(config.seed);
    const examples: Example[] = [];
    for (let i = 0; i < config.size; i++) {
        const words: string[] = [];
        const fillerCount = 5 + Math.floor(next() * 15);
        for (let k = 0; k < fillerCount; k++) {
            words.push(FILLER[Math.floor(next() * FILLER.length)]);
        }
        const keywordCount = Math.floor(next() * (config.maxKeywords + 1));
        for (let k = 0; k < keywordCount; k++) {
            const keyword = KEYWORDS[Math.floor(next() * KEYWORDS.length)];
            words.splice(Math.floor(next() * (words.length + 1)), 0, keyword);
        }
        examples.push({
            prompt: words.join(" "),
            outputLength: config.baseLength + config.perKeyword * keywordCount,
        });
    }
    return examples;
}
