import type { LodLevel, Vec3 } from "./types.js";

/**
 * Detail tier for an object at `distance` metres from the camera. The
 * thresholds come from the session state; the client never invents its own.
 */
export function lodFor(
  distance: number,
  thresholds: [number, number],
): LodLevel {
  const [full, representative] = thresholds;
  if (!(distance >= 0)) throw new RangeError(`invalid distance ${distance}`);
  if (distance < full) return "full_detail";
  if (distance < representative) return "representative";
  return "star";
}

export function distance(a: Vec3, b: Vec3): number {
  return Math.hypot(a[0] - b[0], a[1] - b[1], a[2] - b[2]);
}
