/* tslint:disable */
/* eslint-disable */

/**
 * A Berry sample on a disk, coloured by nodal domain.
 */
export class NodalImage {
    private constructor();
    free(): void;
    [Symbol.dispose](): void;
    pixels(): Uint8Array;
    /**
     * Domains meeting the disk.
     */
    readonly domains: number;
    /**
     * Domains not touching the boundary circle.
     */
    readonly interior: number;
    readonly width: number;
}

export function render_berry_nodal(seed: number, radius: number, cells_per_unit: number): NodalImage;

/**
 * RGBA image of a toral eigenfunction on an `size x size` grid, y up.
 */
export function render_toral(energy: number, random: boolean, seed: number, size: number): Uint8Array;

/**
 * `[x0, y0, x1, y1, ...]` sorted by angle.
 */
export function shell_points(energy: number): Int32Array;

/**
 * Shell size, angular discrepancy and the census of minimally vanishing
 * subsets up to length 4, as JSON.
 */
export function shell_summary(energy: number): string;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_nodalimage_free: (a: number, b: number) => void;
    readonly nodalimage_domains: (a: number) => number;
    readonly nodalimage_interior: (a: number) => number;
    readonly nodalimage_pixels: (a: number) => [number, number];
    readonly nodalimage_width: (a: number) => number;
    readonly render_berry_nodal: (a: number, b: number, c: number) => [number, number, number];
    readonly render_toral: (a: number, b: number, c: number, d: number) => [number, number, number, number];
    readonly shell_points: (a: number) => [number, number];
    readonly shell_summary: (a: number) => [number, number, number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
    readonly __externref_table_dealloc: (a: number) => void;
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
