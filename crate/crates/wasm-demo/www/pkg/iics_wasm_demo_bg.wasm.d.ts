/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const detection_range: (a: number, b: number, c: number, d: number) => number;
export const plan_lead: (a: number, b: number, c: number, d: number) => [number, number];
export const simulate: (a: number, b: number, c: number, d: number, e: number) => [number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_start: () => void;
