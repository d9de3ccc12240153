/* tslint:disable */
/* eslint-disable */

export class EncodedDigit {
    private constructor();
    free(): void;
    [Symbol.dispose](): void;
    latencies(): Float64Array;
    off(): Float64Array;
    on(): Float64Array;
    readonly spikes: number;
}

export class ThresholdTrace {
    private constructor();
    free(): void;
    [Symbol.dispose](): void;
    means(): Float64Array;
    shares(): Float64Array;
}

/**
 * Grayscale pixels in [0, 1], row-major.
 */
export function encode_digit(pixels: Float64Array, width: number, height: number): EncodedDigit;

/**
 * `param` is beta for the multiplicative rule and tau for the biological ones.
 */
export function stdp_window(rule: string, eta: number, param: number, t_post: number, w: number, points: number): Float64Array;

export function threshold_trace(t_target: number, losers: boolean, epochs: number, seed: bigint): ThresholdTrace;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_encodeddigit_free: (a: number, b: number) => void;
    readonly __wbg_thresholdtrace_free: (a: number, b: number) => void;
    readonly encode_digit: (a: number, b: number, c: number, d: number) => [number, number, number];
    readonly encodeddigit_latencies: (a: number) => [number, number];
    readonly encodeddigit_off: (a: number) => [number, number];
    readonly encodeddigit_on: (a: number) => [number, number];
    readonly encodeddigit_spikes: (a: number) => number;
    readonly stdp_window: (a: number, b: number, c: number, d: number, e: number, f: number, g: number) => [number, number, number, number];
    readonly threshold_trace: (a: number, b: number, c: number, d: bigint) => [number, number, number];
    readonly thresholdtrace_means: (a: number) => [number, number];
    readonly thresholdtrace_shares: (a: number) => [number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
    readonly __externref_table_dealloc: (a: number) => void;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
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
