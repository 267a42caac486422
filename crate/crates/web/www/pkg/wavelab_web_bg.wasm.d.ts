/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const __wbg_nodalimage_free: (a: number, b: number) => void;
export const nodalimage_domains: (a: number) => number;
export const nodalimage_interior: (a: number) => number;
export const nodalimage_pixels: (a: number) => [number, number];
export const nodalimage_width: (a: number) => number;
export const render_berry_nodal: (a: number, b: number, c: number) => [number, number, number];
export const render_toral: (a: number, b: number, c: number, d: number) => [number, number, number, number];
export const shell_points: (a: number) => [number, number];
export const shell_summary: (a: number) => [number, number, number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_start: () => void;
