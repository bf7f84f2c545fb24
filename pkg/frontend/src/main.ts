/**
 * Browser entry point: wires the API client, scene model, and three.js
 * renderer into the exploration loop (navigate, select seeds, re-cluster).
 * Desktop navigation: orbit by mouse drag, WASD fly, scroll to zoom.
 */
import * as THREE from "three";

import { ApiClient } from "./api.js";
import { distance, lodFor } from "./lod.js";
import { buildSceneModel, morphStarPositions, survivorIdSet, type SceneModel } from "./scene.js";
import { radialBars, spiderDiagram } from "./spider.js";
import {
  createStarCloud,
  createTableGroup,
  meshFromStl,
  radialArcs,
  spiderLines,
  updateStarPositions,
} from "./three-adapter.js";
import type { SessionState, Vec3 } from "./types.js";

const MORPH_MS = 900;

interface Dom {
  canvas: HTMLCanvasElement;
  seedTray: HTMLElement;
  reclusterButton: HTMLButtonElement;
  progressBar: HTMLProgressElement;
  status: HTMLElement;
}

export class Explorer {
  private scene = new THREE.Scene();
  private camera = new THREE.PerspectiveCamera(60, 1, 0.05, 200);
  private renderer: THREE.WebGLRenderer;
  private stars: THREE.Points | null = null;
  private tableGroups = new Map<string, THREE.Group>();
  private model: SceneModel | null = null;
  private state: SessionState | null = null;
  private morph: { from: SceneModel; to: SceneModel; start: number } | null = null;
  private keys = new Set<string>();
  private stopStream: (() => void) | null = null;

  constructor(
    private readonly api: ApiClient,
    private readonly sessionId: string,
    private readonly spaceId: string,
    private readonly dom: Dom,
  ) {
    this.renderer = new THREE.WebGLRenderer({ canvas: dom.canvas, antialias: true });
    this.camera.position.set(0, 1.7, 12);
    this.scene.add(new THREE.AmbientLight(0xffffff, 0.6));
    const sun = new THREE.DirectionalLight(0xffffff, 0.8);
    sun.position.set(5, 10, 3);
    this.scene.add(sun);
    this.bindInput();
  }

  async start(): Promise<void> {
    await this.refresh();
    this.stopStream = this.api.streamEvents(this.sessionId, (ev) => {
      if (ev.type === "progress") {
        this.dom.progressBar.value = ev.percent ?? 0;
        this.dom.status.textContent = `${ev.phase}: ${ev.percent}%`;
      } else if (ev.type === "version") {
        this.dom.progressBar.value = 100;
        void this.refresh();
      } else if (ev.type === "error") {
        this.dom.status.textContent = `error: ${ev.message}`;
      }
    });
    this.renderer.setAnimationLoop((t) => this.frame(t));
  }

  stop(): void {
    this.stopStream?.();
    this.renderer.setAnimationLoop(null);
  }

  /** Re-read server state and rebuild the scene; the server owns the truth. */
  private async refresh(): Promise<void> {
    const state = await this.api.getState(this.sessionId);
    if (state.busy) return; // next version event re-triggers refresh
    const next = buildSceneModel(state, this.cameraPos());
    if (this.model && this.stars) {
      this.morph = { from: this.model, to: next, start: performance.now() };
    }
    this.rebuildObjects(next, state);
    this.model = next;
    this.state = state;
    this.renderSeedTray(state);
    this.dom.status.textContent =
      `v${state.version} · cycle ${state.cycle} · ${state.survivor_count} survivors`;
  }

  private rebuildObjects(model: SceneModel, state: SessionState): void {
    if (this.stars) this.scene.remove(this.stars);
    this.stars = createStarCloud(model);
    this.scene.add(this.stars);
    for (const g of this.tableGroups.values()) this.scene.remove(g);
    this.tableGroups.clear();
    for (const table of model.tables) {
      const group = createTableGroup(table);
      this.tableGroups.set(table.clusterId, group);
      this.scene.add(group);
      if (table.lod !== "star") void this.dressTable(group, table.representative, state);
    }
  }

  /** Fetch per-LOD payloads lazily: mesh at Representative, table data at FullDetail. */
  private async dressTable(
    group: THREE.Group,
    representative: string,
    state: SessionState,
  ): Promise<void> {
    const stl = await this.api.getMesh(this.spaceId, representative);
    const mesh = meshFromStl(stl);
    mesh.position.y = 0.05;
    group.add(mesh);
    if (group.userData.lod === "full_detail") {
      const table = await this.api.getTable(this.sessionId, representative);
      group.add(spiderLines(spiderDiagram(table.spider, 0.5)));
      group.add(radialArcs(radialBars(table.radial)));
    }
  }

  private renderSeedTray(state: SessionState): void {
    this.dom.seedTray.textContent = state.seeds.length
      ? state.seeds.join("  ")
      : "(empty)";
    this.dom.reclusterButton.disabled = state.seeds.length === 0 || state.busy;
    this.dom.reclusterButton.title =
      state.seeds.length === 0 ? "select at least one seed" : "";
  }

  async toggleSeed(solutionId: string): Promise<void> {
    const state = this.state;
    if (!state || !survivorIdSet(state).has(solutionId)) return;
    const type = state.seeds.includes(solutionId) ? "remove_seed" : "select_seed";
    await this.api.postEvent(this.sessionId, type, { id: solutionId });
    await this.refresh();
  }

  async recluster(rho = 0.5): Promise<void> {
    this.dom.progressBar.value = 0;
    await this.api.postEvent(this.sessionId, "trigger_recluster", { rho });
  }

  private cameraPos(): Vec3 {
    const p = this.camera.position;
    return [p.x, p.y, p.z];
  }

  private frame(now: number): void {
    this.flyStep();
    if (this.morph && this.stars) {
      const t = Math.min(1, (now - this.morph.start) / MORPH_MS);
      updateStarPositions(
        this.stars,
        morphStarPositions(this.morph.from, this.morph.to, t),
      );
      if (t >= 1) this.morph = null;
    }
    if (this.state) {
      for (const g of this.tableGroups.values()) {
        const pos: Vec3 = [g.position.x, g.position.y, g.position.z];
        g.userData.lod = lodFor(
          distance(this.cameraPos(), pos),
          this.state.lod_thresholds,
        );
      }
    }
    this.renderer.render(this.scene, this.camera);
  }

  private flyStep(): void {
    const speed = 0.08;
    const forward = new THREE.Vector3();
    this.camera.getWorldDirection(forward);
    const right = new THREE.Vector3().crossVectors(forward, this.camera.up);
    if (this.keys.has("w")) this.camera.position.addScaledVector(forward, speed);
    if (this.keys.has("s")) this.camera.position.addScaledVector(forward, -speed);
    if (this.keys.has("a")) this.camera.position.addScaledVector(right, -speed);
    if (this.keys.has("d")) this.camera.position.addScaledVector(right, speed);
  }

  private bindInput(): void {
    window.addEventListener("keydown", (e) => this.keys.add(e.key.toLowerCase()));
    window.addEventListener("keyup", (e) => this.keys.delete(e.key.toLowerCase()));
    let dragging = false;
    let last: [number, number] = [0, 0];
    this.dom.canvas.addEventListener("mousedown", (e) => {
      dragging = true;
      last = [e.clientX, e.clientY];
    });
    window.addEventListener("mouseup", () => (dragging = false));
    window.addEventListener("mousemove", (e) => {
      if (!dragging) return;
      const dx = (e.clientX - last[0]) * 0.005;
      const dy = (e.clientY - last[1]) * 0.005;
      last = [e.clientX, e.clientY];
      this.camera.rotation.order = "YXZ";
      this.camera.rotation.y -= dx;
      this.camera.rotation.x = Math.max(
        -1.5,
        Math.min(1.5, this.camera.rotation.x - dy),
      );
    });
    this.dom.canvas.addEventListener("wheel", (e) => {
      const forward = new THREE.Vector3();
      this.camera.getWorldDirection(forward);
      this.camera.position.addScaledVector(forward, -e.deltaY * 0.01);
    });
    this.dom.canvas.addEventListener("click", (e) => void this.pick(e));
    this.dom.reclusterButton.addEventListener("click", () => void this.recluster());
  }

  /** Raycast the star cloud; a hit toggles that solution in the seed tray. */
  private async pick(e: MouseEvent): Promise<void> {
    if (!this.stars || !this.model) return;
    const rect = this.dom.canvas.getBoundingClientRect();
    const ndc = new THREE.Vector2(
      ((e.clientX - rect.left) / rect.width) * 2 - 1,
      -((e.clientY - rect.top) / rect.height) * 2 + 1,
    );
    const ray = new THREE.Raycaster();
    ray.params.Points.threshold = 0.15;
    ray.setFromCamera(ndc, this.camera);
    const hit = ray.intersectObject(this.stars)[0];
    if (hit?.index !== undefined) {
      await this.toggleSeed(this.model.starIds[hit.index]);
    }
  }
}

export async function boot(baseUrl: string, datasetPath: string): Promise<Explorer> {
  const api = new ApiClient(baseUrl);
  const space = await api.createSpace(datasetPath);
  const sessionId = await api.createSession(space.space_id);
  const dom: Dom = {
    canvas: document.querySelector("canvas")!,
    seedTray: document.getElementById("seed-tray")!,
    reclusterButton: document.getElementById("recluster") as HTMLButtonElement,
    progressBar: document.getElementById("progress") as HTMLProgressElement,
    status: document.getElementById("status")!,
  };
  const explorer = new Explorer(api, sessionId, space.space_id, dom);
  await explorer.start();
  return explorer;
}
