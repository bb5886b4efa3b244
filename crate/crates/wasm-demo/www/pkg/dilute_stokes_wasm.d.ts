/* tslint:disable */
/* eslint-disable */

/**
 * Hard-core sample of `n` centres in the unit cube at volume fraction
 * `lambda`, with pairwise distances at least `separation · r`.
 *
 * Returns the flat coordinates `x0, y0, z0, x1, ...`.
 */
export function hardcore_sample(n: number, lambda: number, separation: number, seed: bigint): Float64Array;

/**
 * Near-pair profile of flat coordinates on `count` log-spaced values of
 * `η ∈ [lo, hi]`. Returns `(η, ratio)` pairs.
 */
export function near_pair_profile(coords: Float64Array, lo: number, hi: number, count: number): Float64Array;

/**
 * Flow `E x − V[E](x)` past a rigid unit ball held in the planar strain
 * with entries `xx`, `yy`, `xy`, sampled on a `res × res` grid of the
 * `z = 0` plane over `[-half, half]²`.
 *
 * Returns `res²` triples `(u_x, u_y, |u|)` in row-major order, with zeros
 * inside the ball.
 */
export function strain_flow_slice(res: number, half: number, xx: number, yy: number, xy: number): Float64Array;

/**
 * Effective viscosity ratio `μ_eff/μ` of `n` hard-core balls in simple shear,
 * one entry per volume fraction in `lambdas`. Cells whose sampling or
 * solve fails yield `NaN`.
 */
export function viscosity_curve(n: number, lambdas: Float64Array, separation: number, seed: bigint): Float64Array;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly hardcore_sample: (a: number, b: number, c: number, d: bigint) => [number, number, number, number];
    readonly near_pair_profile: (a: number, b: number, c: number, d: number, e: number) => [number, number, number, number];
    readonly strain_flow_slice: (a: number, b: number, c: number, d: number, e: number) => [number, number];
    readonly viscosity_curve: (a: number, b: number, c: number, d: number, e: bigint) => [number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __externref_table_dealloc: (a: number) => void;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
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
