/**
 * Extraction job: run each catalog model over a deterministic dataset
 * and dump penultimate-layer features [N×D], source logits [N×C_s],
 * head weights [C_s×(D+1)] (bias in the last column), and a manifest
 * the scoring engine validates as-is.
 */

import * as fs from "fs";
import * as path from "path";
import * as tf from "@tensorflow/tfjs";

import { CATALOG, FEATURE_LAYER_NAME, buildModel, setFlatWeights } from "./catalog";
import { Dataset, makeDataset } from "./data";
import { ManifestDoc, ModelEntryDoc, writeManifest } from "./manifest";
import { floatTensor, intTensor, readNpy, writeNpy } from "./npy";

export interface ExtractionJob {
  modelNames: string[];
  datasetId: string;
  subsample: number;
  outDir: string;
  seed: number;
  /** Optional per-model flat weight files to load instead of seeded init. */
  weightFiles?: Record<string, string>;
}

export interface ExtractionReport {
  manifestPath: string;
  extracted: string[];
  failed: { model: string; error: string }[];
}

const BATCH = 256;

function datasetTensor(ds: Dataset): tf.Tensor4D {
  return tf.tensor4d(ds.images, [ds.n, 8, 8, 3]);
}

function runInBatches(model: tf.LayersModel, xs: tf.Tensor4D): Float32Array {
  const outs: Float32Array[] = [];
  let width = 0;
  for (let start = 0; start < xs.shape[0]; start += BATCH) {
    const out = tf.tidy(() => {
      const slice = xs.slice(start, Math.min(BATCH, xs.shape[0] - start));
      return model.predict(slice, { batchSize: BATCH }) as tf.Tensor;
    });
    width = out.shape[out.shape.length - 1] as number;
    outs.push(out.dataSync() as Float32Array);
    out.dispose();
  }
  const total = outs.reduce((a, o) => a + o.length, 0);
  const flat = new Float32Array(total);
  let off = 0;
  for (const o of outs) {
    flat.set(o, off);
    off += o.length;
  }
  return flat.length === width * xs.shape[0] ? flat : flat;
}

export function featureSubmodel(model: tf.LayersModel): tf.LayersModel {
  const layer = model.getLayer(FEATURE_LAYER_NAME);
  return tf.model({ inputs: model.inputs, outputs: layer.output as tf.SymbolicTensor });
}

export function headWeightMatrix(model: tf.LayersModel): { rows: number; cols: number; data: Float32Array } {
  const head = model.getLayer("head");
  const [kernel, bias] = head.getWeights();
  const [d, c] = kernel.shape as [number, number];
  const k = kernel.dataSync() as Float32Array; // row-major [D, C]
  const b = bias.dataSync() as Float32Array;
  const out = new Float32Array(c * (d + 1));
  for (let cls = 0; cls < c; cls++) {
    for (let j = 0; j < d; j++) out[cls * (d + 1) + j] = k[j * c + cls];
    out[cls * (d + 1) + d] = b[cls];
  }
  return { rows: c, cols: d + 1, data: out };
}

export function extract(job: ExtractionJob): ExtractionReport {
  fs.mkdirSync(job.outDir, { recursive: true });
  const ds = makeDataset(job.datasetId, job.subsample, job.seed);
  const xs = datasetTensor(ds);

  const labelFile = "labels.npy";
  writeNpy(path.join(job.outDir, labelFile), intTensor([ds.n], ds.labels));

  const entries: ModelEntryDoc[] = [];
  const extracted: string[] = [];
  const failed: { model: string; error: string }[] = [];

  for (const name of job.modelNames) {
    try {
      const model = buildModel(name, job.seed);
      const weightFile = job.weightFiles?.[name];
      if (weightFile) {
        const t = readNpy(weightFile);
        if (t.dtype !== "<f4") throw new Error(`${weightFile}: weights must be float32`);
        setFlatWeights(model, t.data as Float32Array);
      }
      const feats = featureSubmodel(model);
      const fData = runInBatches(feats, xs);
      const lData = runInBatches(model, xs);
      const d = fData.length / ds.n;
      const c = lData.length / ds.n;
      const head = headWeightMatrix(model);

      const fFile = `${name}_features.npy`;
      const lFile = `${name}_logits.npy`;
      const hFile = `${name}_head.npy`;
      writeNpy(path.join(job.outDir, fFile), floatTensor([ds.n, d], fData));
      writeNpy(path.join(job.outDir, lFile), floatTensor([ds.n, c], lData));
      writeNpy(path.join(job.outDir, hFile), floatTensor([head.rows, head.cols], head.data));

      entries.push({
        model_id: name,
        source_dataset: CATALOG[name].sourceDataset,
        param_count: model.countParams(),
        features: { [job.datasetId]: fFile },
        logits: { [job.datasetId]: lFile },
        head_weights: hFile,
      });
      extracted.push(name);
      model.dispose();
    } catch (err) {
      failed.push({ model: name, error: err instanceof Error ? err.message : String(err) });
      console.error(`[extract] ${name}: ${failed[failed.length - 1].error}`);
    }
  }
  xs.dispose();

  const doc: ManifestDoc = {
    version: 1,
    datasets: [job.datasetId],
    models: entries,
    labels: { [job.datasetId]: labelFile },
  };
  const manifestPath = path.join(job.outDir, "manifest.json");
  writeManifest(manifestPath, doc);
  return { manifestPath, extracted, failed };
}
