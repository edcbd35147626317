/* tslint:disable */
/* eslint-disable */

/**
 * Plants a cluster near the target centroid, curates `capacity` sources
 * with `strategy` ("avg_sim" or "knn"), and reports which were recovered.
 */
export function curate_planted(source_count: number, planted_fraction: number, capacity: number, strategy: string, seed: bigint): string;

/**
 * Random `batch × batch` score grid with the negative set of `anchor`
 * under `mode` ("standard" or "n_squared"), plus loss and gradient.
 */
export function nce_grid(batch: number, anchor: number, mode: string, seed: bigint): string;

/**
 * Recall@k for every k from 1 to `candidates` on a synthetic retrieval
 * set whose queries are noisy copies of their candidates.
 */
export function probe_curve(queries: number, candidates: number, dim: number, noise: number, seed: bigint): string;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly curate_planted: (a: number, b: number, c: number, d: number, e: number, f: bigint) => [number, number, number, number];
    readonly nce_grid: (a: number, b: number, c: number, d: number, e: bigint) => [number, number, number, number];
    readonly probe_curve: (a: number, b: number, c: number, d: number, e: bigint) => [number, number, number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
    readonly __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
    readonly __externref_table_dealloc: (a: number) => void;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
    readonly __wbindgen_start: () => void;
}

export type SyncInitInput = BufferSource | WebAssembly.Module;

/**
 * Instantiates the given `module`, which can either be bytes or
 * a precompiled `WebAssembly.Module`.
 *
 * @param {{ module: SyncInitInput }} module - Passing `SyncInitInput` directly is deprecated.
 *
 * @returns {InitOutput}
 */
export function initSync(module: { module: SyncInitInput } | SyncInitInput): InitOutput;

/**
 * If `module_or_path` is {RequestInfo} or {URL}, makes a request and
 * for everything else, calls `WebAssembly.instantiate` directly.
 *
 * @param {{ module_or_path: InitInput | Promise<InitInput> }} module_or_path - Passing `InitInput` directly is deprecated.
 *
 * @returns {Promise<InitOutput>}
 */
export default function __wbg_init (module_or_path?: { module_or_path: InitInput | Promise<InitInput> } | InitInput | Promise<InitInput>): Promise<InitOutput>;
