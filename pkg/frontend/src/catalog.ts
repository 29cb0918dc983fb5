/**
 * Catalog of small vision models. Each entry builds a tfjs-layers model
 * whose penultimate dense layer produces the feature vector and whose
 * final dense layer (linear, no activation) produces source logits.
 *
 * This environment has no network route to pretrained-weight hosts, so
 * every architecture initializes deterministically from a seed; a flat
 * weight tensor in the interchange format can be loaded on top to use
 * actual trained parameters.
 */

import * as tf from "@tensorflow/tfjs";
import { deriveSeed } from "./rng";

export const IMAGE_SIZE = 8;
export const IMAGE_CHANNELS = 3;
export const SOURCE_CLASSES = 10;
export const FEATURE_LAYER_NAME = "features";

export interface CatalogEntry {
  name: string;
  sourceDataset: string;
  build(seed: number): tf.LayersModel;
}

function denseHead(x: tf.SymbolicTensor, dim: number, seed: number): tf.SymbolicTensor {
  const feats = tf.layers
    .dense({
      units: dim,
      activation: "relu",
      name: FEATURE_LAYER_NAME,
      kernelInitializer: tf.initializers.glorotUniform({ seed }),
      biasInitializer: "zeros",
    })
    .apply(x) as tf.SymbolicTensor;
  return tf.layers
    .dense({
      units: SOURCE_CLASSES,
      name: "head",
      kernelInitializer: tf.initializers.glorotUniform({ seed: seed + 1 }),
      biasInitializer: "zeros",
    })
    .apply(feats) as tf.SymbolicTensor;
}

function buildConvNet(seed: number, filters: number[], featureDim: number): tf.LayersModel {
  const input = tf.input({ shape: [IMAGE_SIZE, IMAGE_SIZE, IMAGE_CHANNELS] });
  let x: tf.SymbolicTensor = input;
  filters.forEach((f, i) => {
    x = tf.layers
      .conv2d({
        filters: f,
        kernelSize: 3,
        padding: "same",
        activation: "relu",
        kernelInitializer: tf.initializers.heNormal({ seed: seed + 10 + i }),
        biasInitializer: "zeros",
      })
      .apply(x) as tf.SymbolicTensor;
    x = tf.layers.maxPooling2d({ poolSize: 2 }).apply(x) as tf.SymbolicTensor;
  });
  x = tf.layers.globalAveragePooling2d({}).apply(x) as tf.SymbolicTensor;
  const logits = denseHead(x, featureDim, seed);
  return tf.model({ inputs: input, outputs: logits });
}

function buildDepthwiseNet(seed: number, featureDim: number): tf.LayersModel {
  const input = tf.input({ shape: [IMAGE_SIZE, IMAGE_SIZE, IMAGE_CHANNELS] });
  let x = tf.layers
    .conv2d({
      filters: 8,
      kernelSize: 3,
      padding: "same",
      activation: "relu",
      kernelInitializer: tf.initializers.heNormal({ seed: seed + 10 }),
      biasInitializer: "zeros",
    })
    .apply(input) as tf.SymbolicTensor;
  for (let i = 0; i < 2; i++) {
    x = tf.layers
      .depthwiseConv2d({
        kernelSize: 3,
        padding: "same",
        activation: "relu",
        depthwiseInitializer: tf.initializers.heNormal({ seed: seed + 20 + i }),
        biasInitializer: "zeros",
      })
      .apply(x) as tf.SymbolicTensor;
    x = tf.layers
      .conv2d({
        filters: 16 * (i + 1),
        kernelSize: 1,
        activation: "relu",
        kernelInitializer: tf.initializers.heNormal({ seed: seed + 30 + i }),
        biasInitializer: "zeros",
      })
      .apply(x) as tf.SymbolicTensor;
    x = tf.layers.maxPooling2d({ poolSize: 2 }).apply(x) as tf.SymbolicTensor;
  }
  x = tf.layers.globalAveragePooling2d({}).apply(x) as tf.SymbolicTensor;
  const logits = denseHead(x, featureDim, seed);
  return tf.model({ inputs: input, outputs: logits });
}

function buildMlp(seed: number, hidden: number, featureDim: number): tf.LayersModel {
  const input = tf.input({ shape: [IMAGE_SIZE, IMAGE_SIZE, IMAGE_CHANNELS] });
  let x = tf.layers.flatten().apply(input) as tf.SymbolicTensor;
  x = tf.layers
    .dense({
      units: hidden,
      activation: "relu",
      kernelInitializer: tf.initializers.glorotUniform({ seed: seed + 5 }),
      biasInitializer: "zeros",
    })
    .apply(x) as tf.SymbolicTensor;
  const logits = denseHead(x, featureDim, seed);
  return tf.model({ inputs: input, outputs: logits });
}

export const CATALOG: Record<string, CatalogEntry> = {
  "micro-resnet": {
    name: "micro-resnet",
    sourceDataset: "microimagenet",
    build: (seed) => buildConvNet(seed, [8, 16], 32),
  },
  "micro-googlenet": {
    name: "micro-googlenet",
    sourceDataset: "microimagenet",
    build: (seed) => buildConvNet(seed, [12], 24),
  },
  "micro-mobilenet": {
    name: "micro-mobilenet",
    sourceDataset: "microimagenet",
    build: (seed) => buildDepthwiseNet(seed, 32),
  },
  "micro-mlp": {
    name: "micro-mlp",
    sourceDataset: "microdigits",
    build: (seed) => buildMlp(seed, 48, 16),
  },
};

export function buildModel(name: string, jobSeed: number): tf.LayersModel {
  const entry = CATALOG[name];
  if (!entry) {
    throw new Error(`unknown model ${JSON.stringify(name)}; catalog: ${Object.keys(CATALOG).join(", ")}`);
  }
  return entry.build(deriveSeed(jobSeed, "init", name));
}

/** Flatten every trainable weight, in model order, into one Float32Array. */
export function flatWeights(model: tf.LayersModel): Float32Array {
  const arrays = model.getWeights().map((w) => w.dataSync() as Float32Array);
  const total = arrays.reduce((a, w) => a + w.length, 0);
  const out = new Float32Array(total);
  let off = 0;
  for (const w of arrays) {
    out.set(w, off);
    off += w.length;
  }
  return out;
}

/** Load a flat weight vector back into the model (inverse of flatWeights). */
export function setFlatWeights(model: tf.LayersModel, flat: Float32Array): void {
  const current = model.getWeights();
  const total = current.reduce((a, w) => a + w.size, 0);
  if (flat.length !== total) {
    throw new Error(`flat weight length ${flat.length} != model parameter count ${total}`);
  }
  let off = 0;
  const next = current.map((w) => {
    const chunk = flat.subarray(off, off + w.size);
    off += w.size;
    return tf.tensor(chunk, w.shape, "float32");
  });
  model.setWeights(next);
  next.forEach((t) => t.dispose());
}
