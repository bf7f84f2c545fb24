import { distance, lodFor } from "./lod.js";
import type { LodLevel, SessionState, Vec3 } from "./types.js";

export interface TableObject {
  clusterId: string;
  representative: string;
  position: Vec3;
  lod: LodLevel;
}

/**
 * Renderer-agnostic scene description computed from server state plus camera
 * position. All authoritative data (positions, membership, LOD thresholds)
 * comes from the state payload.
 */
export interface SceneModel {
  version: number;
  starIds: string[];
  /** xyz triplets, ready for an instanced point-cloud attribute */
  starPositions: Float32Array;
  tables: TableObject[];
  seedIds: Set<string>;
  room: [number, number];
}

export function buildSceneModel(
  state: SessionState,
  cameraPosition: Vec3,
): SceneModel {
  const layout = state.layout;
  if (!layout) throw new Error("session state has no layout");
  if (layout.star_ids.length !== state.survivor_count) {
    throw new Error(
      `layout has ${layout.star_ids.length} stars for ${state.survivor_count} survivors`,
    );
  }
  const starPositions = new Float32Array(layout.stars.length * 3);
  layout.stars.forEach((p, i) => starPositions.set(p, i * 3));
  const tables: TableObject[] = layout.tables.map(
    ([clusterId, representative, position]) => ({
      clusterId,
      representative,
      position,
      lod: lodFor(distance(cameraPosition, position), state.lod_thresholds),
    }),
  );
  return {
    version: state.version,
    starIds: [...layout.star_ids],
    starPositions,
    tables,
    seedIds: new Set(state.seeds),
    room: layout.room,
  };
}

/**
 * Interpolated star positions for the morph between two scene versions.
 * Stars present in both states travel from old to new position; stars that
 * only exist in the target state hold their final position. At t=1 the
 * result is exactly the target layout.
 */
export function morphStarPositions(
  from: SceneModel,
  to: SceneModel,
  t: number,
): Float32Array {
  if (!(t >= 0 && t <= 1)) throw new RangeError(`t=${t} outside [0, 1]`);
  const fromIndex = new Map(from.starIds.map((id, i) => [id, i]));
  const result = new Float32Array(to.starPositions);
  to.starIds.forEach((id, i) => {
    const j = fromIndex.get(id);
    if (j === undefined) return;
    for (let k = 0; k < 3; k++) {
      const a = from.starPositions[j * 3 + k];
      const b = to.starPositions[i * 3 + k];
      result[i * 3 + k] = a + (b - a) * t;
    }
  });
  return result;
}

/** Survivor ids reachable in the scene, for hit-testing seed clicks. */
export function survivorIdSet(state: SessionState): Set<string> {
  const ids = new Set<string>();
  const walk = (clusters: SessionState["clusters"]) => {
    for (const c of clusters) {
      c.members.forEach((m) => ids.add(m));
      walk(c.children);
    }
  };
  walk(state.clusters);
  return ids;
}
