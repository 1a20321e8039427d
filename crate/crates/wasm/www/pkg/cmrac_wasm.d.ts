/* tslint:disable */
/* eslint-disable */

/**
 * JSON feasibility report for the benchmark plant under the given bounds,
 * with the region SVG under `region_svg`.
 */
export function benchmark_feasibility(u_bar: number, x_bar: number, d_bar: number): string;

/**
 * SVG of the set `u_bar > alpha x_bar + beta` over a rectangle.
 */
export function feasibility_region(alpha: number, beta: number, u_max: number, x_max: number, resolution: number): string;

/**
 * Runs the benchmark scenario and returns JSON with summary metrics and
 * `x_svg`, `u_svg`, `e_svg` plots. `law` is `"blf"` or `"classical"`.
 */
export function simulate_benchmark(law: string, u_bar: number, x_bar: number, d_bar: number, t_end: number, override_feasibility: boolean): string;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly benchmark_feasibility: (a: number, b: number, c: number) => [number, number, number, number];
    readonly feasibility_region: (a: number, b: number, c: number, d: number, e: number) => [number, number, number, number];
    readonly simulate_benchmark: (a: number, b: number, c: number, d: number, e: number, f: number, g: number) => [number, number, number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __externref_table_dealloc: (a: number) => void;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
    readonly __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
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
