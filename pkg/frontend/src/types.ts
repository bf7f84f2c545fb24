/** Wire types mirroring the service's JSON schemas, plus client-side view state. */

export type Vec3 = [number, number, number];

export type LodLevel = "full_detail" | "representative" | "star";

export interface ClusterPayload {
  id: string;
  members: string[];
  representative: string;
  children: ClusterPayload[];
}

export interface LayoutPayload {
  star_ids: string[];
  stars: Vec3[];
  /** [cluster id, representative solution id, position] */
  tables: [string, string, Vec3][];
  room: [number, number];
  sky_height: number;
  table_height: number;
}

export interface SessionState {
  session_id: string;
  space_id: string;
  version: number;
  cycle: number;
  busy: boolean;
  embedding_method: string;
  seeds: string[];
  survivor_count: number;
  metric_channels: string[];
  lod_thresholds: [number, number];
  clusters: ClusterPayload[];
  layout: LayoutPayload | null;
}

export interface TablePayload {
  solution_id: string;
  /** [channel name, normalized value in [0,1], raw value] */
  spider: [string, number, number][];
  /** [channel name, percentile in [0,100]] */
  radial: [string, number][];
  detail_tier: string;
}

export interface EventResponse {
  sequence: number;
  state_version: number;
  async_cycle: boolean;
}

export interface StreamEvent {
  type: "connected" | "progress" | "version" | "error";
  phase?: string;
  percent?: number;
  version?: number;
  message?: string;
}

/** Client-side view state; the server remains the only authority on session state. */
export interface ViewState {
  sessionId: string;
  version: number;
  cameraPosition: Vec3;
  cameraTarget: Vec3;
  hoveredId: string | null;
  selectedIds: string[];
  /** per-table LOD, keyed by cluster id; always derived via lodFor */
  lod: Map<string, LodLevel>;
}
