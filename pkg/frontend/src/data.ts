/**
 * Deterministic image dataset with class structure: each class has a
 * seeded template image and samples are template + unit Gaussian noise.
 * Subsampling is stratified by label under a fixed per-seed permutation,
 * so the same seed and size always yield the same tensors.
 */

import { IMAGE_CHANNELS, IMAGE_SIZE } from "./catalog";
import { Rng, deriveSeed } from "./rng";

export const TARGET_CLASSES = 6;
export const FULL_DATASET_SIZE = 4096;

export interface Dataset {
  /** [n, IMAGE_SIZE, IMAGE_SIZE, IMAGE_CHANNELS] flattened C-order. */
  images: Float32Array;
  labels: Int32Array;
  n: number;
}

const PIXELS = IMAGE_SIZE * IMAGE_SIZE * IMAGE_CHANNELS;

function classTemplates(seed: number): Float32Array[] {
  const rng = new Rng(deriveSeed(seed, "templates"));
  const templates: Float32Array[] = [];
  for (let c = 0; c < TARGET_CLASSES; c++) {
    const t = new Float32Array(PIXELS);
    for (let i = 0; i < PIXELS; i++) t[i] = 2.0 * rng.gauss();
    templates.push(t);
  }
  return templates;
}

/**
 * Stratified subsample of the conceptual full dataset: `subsample`
 * indices are drawn round-robin across classes from a fixed per-seed
 * permutation of each class's sample slots, then materialized.
 */
export function makeDataset(datasetId: string, subsample: number, seed: number): Dataset {
  if (subsample > FULL_DATASET_SIZE) {
    throw new Error(`subsample ${subsample} exceeds dataset size ${FULL_DATASET_SIZE}`);
  }
  if (subsample < TARGET_CLASSES) {
    throw new Error(`subsample ${subsample} smaller than class count ${TARGET_CLASSES}`);
  }
  const dsSeed = deriveSeed(seed, "dataset", datasetId);
  const templates = classTemplates(dsSeed);
  const perClass = FULL_DATASET_SIZE / TARGET_CLASSES;
  const orderRng = new Rng(deriveSeed(dsSeed, "order"));
  const slotPerms = Array.from({ length: TARGET_CLASSES }, () => orderRng.permutation(perClass));

  const images = new Float32Array(subsample * PIXELS);
  const labels = new Int32Array(subsample);
  for (let i = 0; i < subsample; i++) {
    const cls = i % TARGET_CLASSES;
    const slot = slotPerms[cls][Math.floor(i / TARGET_CLASSES)];
    // each (class, slot) has its own noise stream so the pixel values of a
    // retained sample do not depend on which other samples were retained
    const noise = new Rng(deriveSeed(dsSeed, "sample", `${cls}`, `${slot}`));
    const base = templates[cls];
    for (let p = 0; p < PIXELS; p++) {
      images[i * PIXELS + p] = base[p] + noise.gauss();
    }
    labels[i] = cls;
  }
  return { images, labels, n: subsample };
}
