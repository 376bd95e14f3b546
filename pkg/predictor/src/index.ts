export { HashedTokenEncoder, EncoderConfig } from "./encoder.js";
export { GatingHead, HeadConfig, squeeze, recalibrate } from "./head.js";
export { train, predictLength, meanAbsoluteError, Example, TrainConfig,
         TrainResult, DEFAULT_TRAIN_CONFIG } from "./train.js";
export { keywordCorpus, KeywordCorpusConfig, DEFAULT_CORPUS } from "./corpus.js";
export { parsePromptsCsv, formatPromptsCsv, parsePredictionsCsv,
         formatPredictionsCsv, PromptRow, PREDICTIONS_HEADER,
         PROMPTS_HEADER } from "./files.js";
export { exportPredictions } from "./export.js";
