export { CATALOG, buildModel, flatWeights, setFlatWeights } from "./catalog";
export { makeDataset } from "./data";
export { extract } from "./extract";
export type { ExtractionJob, ExtractionReport } from "./extract";
export { snapshotFinetune } from "./finetune";
export type { FinetuneJob, FinetuneReport } from "./finetune";
export { Manifest, readManifest, writeManifest } from "./manifest";
export { floatTensor, intTensor, parseNpy, readNpy, serializeNpy, writeNpy } from "./npy";
