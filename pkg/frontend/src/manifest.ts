/** Hub manifest schema (JSON) shared with the scoring engine. */

import * as fs from "fs";
import { z } from "zod";

export const SnapshotPair = z.object({ before: z.string(), after: z.string() });

export const ModelEntry = z.object({
  model_id: z.string(),
  source_dataset: z.string(),
  param_count: z.number().int().positive(),
  features: z.record(z.string()),
  logits: z.record(z.string()),
  head_weights: z.string().optional(),
  snapshots: z.record(SnapshotPair).optional(),
});

export const Manifest = z.object({
  version: z.number().int(),
  datasets: z.array(z.string()),
  models: z.array(ModelEntry),
  labels: z.record(z.string()).optional(),
});

export type ManifestDoc = z.infer<typeof Manifest>;
export type ModelEntryDoc = z.infer<typeof ModelEntry>;

export function readManifest(path: string): ManifestDoc {
  return Manifest.parse(JSON.parse(fs.readFileSync(path, "utf-8")));
}

export function writeManifest(path: string, doc: ManifestDoc): void {
  Manifest.parse(doc);
  fs.writeFileSync(path, JSON.stringify(doc, null, 2) + "\n");
}
