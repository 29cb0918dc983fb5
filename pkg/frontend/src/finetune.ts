/**
 * Snapshot fine-tune: pseudo-label the dataset with the model's own
 * argmax predictions, fine-tune the whole network for a short period
 * with plain minibatch SGD, and write the flattened parameter vectors
 * before and after into the manifest's snapshot slots.
 */

import * as path from "path";
import * as tf from "@tensorflow/tfjs";

import { SOURCE_CLASSES, buildModel, flatWeights, setFlatWeights } from "./catalog";
import { makeDataset } from "./data";
import { readManifest, writeManifest } from "./manifest";
import { floatTensor, readNpy, writeNpy } from "./npy";
import { Rng, deriveSeed } from "./rng";

export interface FinetuneJob {
  modelName: string;
  datasetId: string;
  subsample: number;
  outDir: string;
  seed: number;
  lr: number;
  epochs: number;
  batchSize: number;
  weightFile?: string;
}

export interface FinetuneReport {
  beforePath: string;
  afterPath: string;
  losses: number[];
}

export function snapshotFinetune(job: FinetuneJob): FinetuneReport {
  const manifestPath = path.join(job.outDir, "manifest.json");
  const doc = readManifest(manifestPath);
  const entry = doc.models.find((m) => m.model_id === job.modelName);
  if (!entry) {
    throw new Error(`model ${JSON.stringify(job.modelName)} not in ${manifestPath}; run extract first`);
  }

  const model = buildModel(job.modelName, job.seed);
  if (job.weightFile) {
    const t = readNpy(job.weightFile);
    setFlatWeights(model, t.data as Float32Array);
  }
  const ds = makeDataset(job.datasetId, job.subsample, job.seed);
  const xs = tf.tensor4d(ds.images, [ds.n, 8, 8, 3]);

  const pseudo = tf.tidy(() => (model.predict(xs, { batchSize: 256 }) as tf.Tensor).argMax(-1));
  const pseudoData = pseudo.dataSync() as Int32Array;
  pseudo.dispose();

  const before = flatWeights(model);
  const optimizer = tf.train.sgd(job.lr);
  const shuffleRng = new Rng(deriveSeed(job.seed, "finetune", job.modelName, job.datasetId));
  const losses: number[] = [];

  for (let epoch = 0; epoch < job.epochs; epoch++) {
    const order = shuffleRng.permutation(ds.n);
    let epochLoss = 0;
    let batches = 0;
    for (let start = 0; start < ds.n; start += job.batchSize) {
      const idx = Array.from(order.subarray(start, Math.min(start + job.batchSize, ds.n)));
      const lossVal = tf.tidy(() => {
        const xb = tf.gather(xs, idx);
        const yb = tf.oneHot(
          tf.tensor1d(idx.map((i) => pseudoData[i]), "int32"),
          SOURCE_CLASSES
        );
        const loss = optimizer.minimize(
          () => tf.losses.softmaxCrossEntropy(yb, model.apply(xb, { training: true }) as tf.Tensor) as tf.Scalar,
          true
        ) as tf.Scalar;
        return loss.dataSync()[0];
      });
      if (!Number.isFinite(lossVal)) {
        xs.dispose();
        model.dispose();
        throw new Error(`fine-tune diverged (non-finite loss at epoch ${epoch}); snapshots omitted`);
      }
      epochLoss += lossVal;
      batches += 1;
    }
    losses.push(epochLoss / batches);
  }
  const after = flatWeights(model);
  xs.dispose();
  model.dispose();
  optimizer.dispose();

  const beforeFile = `${job.modelName}_${job.datasetId}_before.npy`;
  const afterFile = `${job.modelName}_${job.datasetId}_after.npy`;
  writeNpy(path.join(job.outDir, beforeFile), floatTensor([before.length], before));
  writeNpy(path.join(job.outDir, afterFile), floatTensor([after.length], after));

  entry.snapshots = { ...(entry.snapshots ?? {}), [job.datasetId]: { before: beforeFile, after: afterFile } };
  writeManifest(manifestPath, doc);
  return {
    beforePath: path.join(job.outDir, beforeFile),
    afterPath: path.join(job.outDir, afterFile),
    losses,
  };
}
