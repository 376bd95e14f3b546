/** Batch inference over a prompts file, producing a predictions file. */

import { HashedTokenEncoder } from "./encoder.js";
import { GatingHead } from "./head.js";
import { PromptRow, formatPredictionsCsv } from "./files.js";
import { predictLength } from "./train.js";

export function exportPredictions(head: GatingHead, encoder: HashedTokenEncoder,
                                  rows: PromptRow[]): string {
    const predictions = new Map<number, number>();
    for (const row of rows) {
        predictions.set(row.taskId, predictLength(head, encoder, row.prompt));
    }
    return formatPredictionsCsv(predictions);
}
