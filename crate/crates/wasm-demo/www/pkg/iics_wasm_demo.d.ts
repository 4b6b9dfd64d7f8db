/* tslint:disable */
/* eslint-disable */

/**
 * Minimum detection range (ft).
 */
export function detection_range(v0_mph: number, v_cross_mph: number, a_max_dec: number, dt_serve: number): number;

/**
 * Minimum-delay trajectory for a lone automated vehicle detected `d0_ft`
 * from the stop bar at `v0_mph`, with one green+yellow window.
 */
export function plan_lead(d0_ft: number, v0_mph: number, green_start: number, green_end: number): string;

/**
 * Five simulated minutes of the default intersection. Returns MOEs, the
 * cumulative curves of `lane` and the signal history.
 */
export function simulate(mean_headway: number, av_ratio: number, seed: number, actuated: boolean, lane: number): string;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly detection_range: (a: number, b: number, c: number, d: number) => number;
    readonly plan_lead: (a: number, b: number, c: number, d: number) => [number, number];
    readonly simulate: (a: number, b: number, c: number, d: number, e: number) => [number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
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
