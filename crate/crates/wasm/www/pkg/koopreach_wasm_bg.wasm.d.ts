/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const fieldGrid: (a: number, b: number, c: number) => [number, number, number, number];
export const reachWindows: (a: number, b: number, c: number, d: number, e: number, f: number, g: number) => [number, number, number, number];
export const regionMask: (a: number, b: number) => [number, number, number, number];
export const runExample1: (a: number, b: number, c: number, d: number, e: number) => [number, number, number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_start: () => void;
