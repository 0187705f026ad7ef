/* tslint:disable */
/* eslint-disable */

/**
 * One basic block small enough to draw cell by cell.
 */
export class BlockDemo {
    free(): void;
    [Symbol.dispose](): void;
    /**
     * Message bits the given round carries.
     */
    capacity(round: number): number;
    /**
     * Cell states, one byte per cell.
     */
    cells(): Uint8Array;
    constructor(t: number);
    /**
     * Hex payload of the latest round.
     */
    read(): string;
    /**
     * Region of each cell: 0 header, 1 data, 2 hash index.
     */
    regions(): Uint8Array;
    /**
     * Rounds written so far.
     */
    round(): number;
    t(): number;
    /**
     * Writes the next round; returns how many cells were newly programmed.
     */
    write(hex: string): number;
}

/**
 * Block parameters derived for gap `epsilon` at the optimal point.
 */
export function derive_params(t: number, epsilon: number): string;

/**
 * `samples + 1` values of the binary entropy on `[0, 1]`.
 */
export function entropy_curve(samples: number): Float64Array;

/**
 * Sum-rate optimal point for `t` writes, one `key=value` line per round.
 */
export function optimal_point(t: number): string;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_blockdemo_free: (a: number, b: number) => void;
    readonly blockdemo_capacity: (a: number, b: number) => number;
    readonly blockdemo_cells: (a: number) => [number, number];
    readonly blockdemo_new: (a: number) => [number, number, number];
    readonly blockdemo_read: (a: number) => [number, number, number, number];
    readonly blockdemo_regions: (a: number) => [number, number];
    readonly blockdemo_round: (a: number) => number;
    readonly blockdemo_t: (a: number) => number;
    readonly blockdemo_write: (a: number, b: number, c: number) => [number, number, number];
    readonly derive_params: (a: number, b: number) => [number, number, number, number];
    readonly entropy_curve: (a: number) => [number, number];
    readonly optimal_point: (a: number) => [number, number, number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
    readonly __externref_table_dealloc: (a: number) => void;
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
