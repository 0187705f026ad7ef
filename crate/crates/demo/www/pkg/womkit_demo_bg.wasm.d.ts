/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const __wbg_blockdemo_free: (a: number, b: number) => void;
export const blockdemo_capacity: (a: number, b: number) => number;
export const blockdemo_cells: (a: number) => [number, number];
export const blockdemo_new: (a: number) => [number, number, number];
export const blockdemo_read: (a: number) => [number, number, number, number];
export const blockdemo_regions: (a: number) => [number, number];
export const blockdemo_round: (a: number) => number;
export const blockdemo_t: (a: number) => number;
export const blockdemo_write: (a: number, b: number, c: number) => [number, number, number];
export const derive_params: (a: number, b: number) => [number, number, number, number];
export const entropy_curve: (a: number) => [number, number];
export const optimal_point: (a: number) => [number, number, number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_malloc: (a: number, b: number) => number;
export const __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
export const __wbindgen_start: () => void;
