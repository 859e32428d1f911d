// Q47.16 fixed-point conversions, mirroring the userspace toolkit's
// convention: signed 64-bit raw, 16 fractional bits, conversions round
// half away from zero.

export const FX_FRAC_BITS = 16;
export const FX_ONE = 1n << 16n;
export const FX_MIN = -(2n ** 63n);
export const FX_MAX = 2n ** 63n - 1n;

/** Largest |value| that survives a float64 round trip without loss. */
const EXACT_LIMIT = 2 ** 53;

export class FxRangeError extends Error {}

/**
 * Convert a finite number to raw Q47.16, rounding half away from zero.
 *
 * Only exact conversions are allowed: the scaled value must stay within
 * float64's integer-exact range (|x * 2^16| <= 2^53), which covers every
 * feature and parameter magnitude the toolkit produces.  Values outside
 * that range would silently lose bits, so they throw instead.
 */
export function toFixed(x: number): bigint {
  if (!Number.isFinite(x)) throw new FxRangeError("toFixed requires a finite value");
  const scaled = x * 65536;
  if (Math.abs(scaled) > EXACT_LIMIT) {
    throw new FxRangeError(`toFixed: |${x}| too large for an exact float64 conversion`);
  }
  const mag = Math.round(Math.abs(scaled)); // round half up == half away on magnitudes
  return x < 0 ? -BigInt(mag) : BigInt(mag);
}

/** Raw Q47.16 to float64.  Exact for |raw| <= 2^53. */
export function fromFixed(raw: bigint): number {
  return Number(raw) / 65536;
}
