/* tslint:disable */
/* eslint-disable */

/**
 * Attribute names of a prompt group and the number of test templates.
 */
export function catalog(group: string): string;

/**
 * Cohen's kappa of two binary annotators from their 2x2 counts.
 */
export function kappa_from_counts(yes_yes: number, yes_no: number, no_yes: number, no_no: number): string;

/**
 * Render test template `index` of `group` for `attribute`.
 */
export function render(group: string, attribute: string, index: number): string;

/**
 * Draw p(yes) for `n` images of each gender from Beta distributions whose
 * means differ by `delta` (male higher) with spread `sigma`, then run the
 * Welch test at level `alpha`.
 */
export function simulate_bias_test(delta: number, sigma: number, n: number, alpha: number, seed: bigint): string;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly catalog: (a: number, b: number) => [number, number];
    readonly kappa_from_counts: (a: number, b: number, c: number, d: number) => [number, number];
    readonly render: (a: number, b: number, c: number, d: number, e: number) => [number, number];
    readonly simulate_bias_test: (a: number, b: number, c: number, d: number, e: bigint) => [number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
    readonly __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
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
