/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const hardcore_sample: (a: number, b: number, c: number, d: bigint) => [number, number, number, number];
export const near_pair_profile: (a: number, b: number, c: number, d: number, e: number) => [number, number, number, number];
export const strain_flow_slice: (a: number, b: number, c: number, d: number, e: number) => [number, number];
export const viscosity_curve: (a: number, b: number, c: number, d: number, e: bigint) => [number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_malloc: (a: number, b: number) => number;
export const __wbindgen_start: () => void;
