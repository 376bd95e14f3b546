/**
 * File formats bridging to the offloading simulator.
 *
 * Prompts file (input):      CSV with header `task_id,prompt`; prompts may
 *                            be double-quoted with "" escaping.
 * Predictions file (output): CSV with header `task_id,predicted_tokens`,
 *                            non-negative integers, sorted by task id --
 *                            exactly what the simulator's from-file
 *                            predictor consumes.
 */

export const PREDICTIONS_HEADER = "task_id,predicted_tokens";
export const PROMPTS_HEADER = "task_id,prompt";

export interface PromptRow {
    taskId: number;
    prompt: string;
}

function splitCsvLine(line: string): string[] {
    const fields: string[] = [];
    let current = "";
    let quoted = false;
    for (let i = 0; i < line.length; i++) {
        const ch = line[i];
        if (quoted) {
            if (ch === '"' && line[i + 1] === '"') {
                current += '"';
                i++;
            } else if (ch === '"') {
                quoted = false;
            } else {
                current += ch;
            }
        } else if (ch === '"') {
            quoted = true;
        } else if (ch === ",") {
            fields.push(current);
            current = "";
        } else {
            current += ch;
        }
    }
    fields.push(current);
    return fields;
}

function quoteCsv(text: string): string {
    if (/[",\n]/.test(text)) {
        return '"' + text.replace(/"/g, '""') + '"';
    }
    return text;
}

export function parsePromptsCsv(text: string): PromptRow[] {
    const lines = text.split(/\r?\n/).filter((l) => l.length > 0);
    if (lines.length === 0 || lines[0].trim() !== PROMPTS_HEADER) {
        throw new Error(`prompts file must start with header '${PROMPTS_HEADER}'`);
    }
    return lines.slice(1).map((line, i) => {
        const fields = splitCsvLine(line);
        if (fields.length < 2) {
            throw new Error(`line ${i + 2}: expected 'task_id,prompt'`);
        }
        const taskId = Number(fields[0]);
        if (!Number.isInteger(taskId) || taskId < 0) {
            throw new Error(`line ${i + 2}: bad task id '${fields[0]}'`);
        }
        return { taskId, prompt: fields.slice(1).join(",") };
    });
}

export function formatPromptsCsv(rows: PromptRow[]): string {
    const lines = [PROMPTS_HEADER];
    for (const row of rows) {
        lines.push(`${row.taskId},${quoteCsv(row.prompt)}`);
    }
    return lines.join("\n") + "\n";
}

export function formatPredictionsCsv(predictions: Map<number, number>): string {
    const lines = [PREDICTIONS_HEADER];
    const ids = Array.from(predictions.keys()).sort((a, b) => a - b);
    for (const id of ids) {
        const value = predictions.get(id)!;
        if (!Number.isInteger(value) || value < 0) {
            throw new Error(`prediction for task ${id} must be a non-negative integer`);
        }
        lines.push(`${id},${value}`);
    }
    return lines.join("\n") + "\n";
}

export function parsePredictionsCsv(text: string): Map<number, number> {
    const lines = text.split(/\r?\n/).filter((l) => l.length > 0);
    if (lines.length === 0 || lines[0].trim() !== PREDICTIONS_HEADER) {
        throw new Error(`predictions file must start with header '${PREDICTIONS_HEADER}'`);
    }
    const out = new Map<number, number>();
    for (const line of lines.slice(1)) {
        const [idText, valueText] = line.split(",");
        const id = Number(idText);
        const value = Number(valueText);
        if (!Number.isInteger(id) || !Number.isInteger(value) || value < 0) {
            throw new Error(`bad predictions row: '${line}'`);
        }
        out.set(id, value);
    }
    return out;
}
