/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const __wbg_encodeddigit_free: (a: number, b: number) => void;
export const __wbg_thresholdtrace_free: (a: number, b: number) => void;
export const encode_digit: (a: number, b: number, c: number, d: number) => [number, number, number];
export const encodeddigit_latencies: (a: number) => [number, number];
export const encodeddigit_off: (a: number) => [number, number];
export const encodeddigit_on: (a: number) => [number, number];
export const encodeddigit_spikes: (a: number) => number;
export const stdp_window: (a: number, b: number, c: number, d: number, e: number, f: number, g: number) => [number, number, number, number];
export const threshold_trace: (a: number, b: number, c: number, d: bigint) => [number, number, number];
export const thresholdtrace_means: (a: number) => [number, number];
export const thresholdtrace_shares: (a: number) => [number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __wbindgen_malloc: (a: number, b: number) => number;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
export const __wbindgen_start: () => void;
