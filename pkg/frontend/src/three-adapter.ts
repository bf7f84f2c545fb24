import * as THREE from "three";

import type { SceneModel, TableObject } from "./scene.js";
import type { SpiderDiagram, RadialBar } from "./spider.js";

const STAR_COLOR = new THREE.Color(0xbdd7ff);
const SEED_COLOR = new THREE.Color(0xffc24d);

/** Single point cloud for every survivor star; scales to tens of thousands. */
export function createStarCloud(model: SceneModel): THREE.Points {
  const geometry = new THREE.BufferGeometry();
  geometry.setAttribute(
    "position",
    new THREE.BufferAttribute(model.starPositions.slice(), 3),
  );
  const colors = new Float32Array(model.starIds.length * 3);
  model.starIds.forEach((id, i) => {
    const c = model.seedIds.has(id) ? SEED_COLOR : STAR_COLOR;
    colors.set([c.r, c.g, c.b], i * 3);
  });
  geometry.setAttribute("color", new THREE.BufferAttribute(colors, 3));
  const material = new THREE.PointsMaterial({
    size: 0.12,
    vertexColors: true,
    sizeAttenuation: true,
  });
  const points = new THREE.Points(geometry, material);
  points.name = "stars";
  points.userData.ids = model.starIds;
  return points;
}

export function updateStarPositions(
  points: THREE.Points,
  positions: Float32Array,
): void {
  const attr = points.geometry.getAttribute("position") as THREE.BufferAttribute;
  (attr.array as Float32Array).set(positions);
  attr.needsUpdate = true;
}

/** One rotatable group per cluster table, positioned from the layout. */
export function createTableGroup(table: TableObject): THREE.Group {
  const group = new THREE.Group();
  group.name = `table:${table.clusterId}`;
  group.position.set(...table.position);
  group.userData.clusterId = table.clusterId;
  group.userData.representative = table.representative;
  group.userData.lod = table.lod;
  const top = new THREE.Mesh(
    new THREE.CylinderGeometry(0.6, 0.6, 0.04, 24),
    new THREE.MeshStandardMaterial({ color: 0x3a3f4a }),
  );
  top.name = "tabletop";
  group.add(top);
  return group;
}

/** Representative mesh from a binary STL payload fetched at Representative tier. */
export function meshFromStl(payload: ArrayBuffer): THREE.Mesh {
  const view = new DataView(payload);
  const count = view.getUint32(80, true);
  const positions = new Float32Array(count * 9);
  const normals = new Float32Array(count * 9);
  let offset = 84;
  for (let i = 0; i < count; i++) {
    const nx = view.getFloat32(offset, true);
    const ny = view.getFloat32(offset + 4, true);
    const nz = view.getFloat32(offset + 8, true);
    for (let v = 0; v < 3; v++) {
      const base = offset + 12 + v * 12;
      const k = i * 9 + v * 3;
      positions[k] = view.getFloat32(base, true);
      positions[k + 1] = view.getFloat32(base + 4, true);
      positions[k + 2] = view.getFloat32(base + 8, true);
      normals[k] = nx;
      normals[k + 1] = ny;
      normals[k + 2] = nz;
    }
    offset += 50;
  }
  const geometry = new THREE.BufferGeometry();
  geometry.setAttribute("position", new THREE.BufferAttribute(positions, 3));
  geometry.setAttribute("normal", new THREE.BufferAttribute(normals, 3));
  return new THREE.Mesh(
    geometry,
    new THREE.MeshStandardMaterial({ color: 0x9aa7b8 }),
  );
}

/** Flat line loop for the tabletop spider diagram. */
export function spiderLines(diagram: SpiderDiagram): THREE.LineLoop {
  const pts = diagram.polygon.map(([x, y]) => new THREE.Vector3(x, 0.03, y));
  const geometry = new THREE.BufferGeometry().setFromPoints(pts);
  const loop = new THREE.LineLoop(
    geometry,
    new THREE.LineBasicMaterial({ color: 0x6fd08c }),
  );
  loop.name = "spider";
  loop.userData.axisCount = diagram.axes.length;
  return loop;
}

/** Perimeter percentile arcs as ring-sector meshes around the tabletop. */
export function radialArcs(bars: RadialBar[], inner = 0.7, span = 0.25): THREE.Group {
  const group = new THREE.Group();
  group.name = "radial";
  for (const bar of bars) {
    const ring = new THREE.RingGeometry(
      inner,
      inner + span * bar.extent,
      12,
      1,
      bar.startAngle,
      bar.endAngle - bar.startAngle,
    );
    const mesh = new THREE.Mesh(
      ring,
      new THREE.MeshBasicMaterial({ color: 0x5a8dd6, side: THREE.DoubleSide }),
    );
    mesh.rotation.x = -Math.PI / 2;
    mesh.position.y = 0.03;
    mesh.userData.label = bar.label;
    group.add(mesh);
  }
  return group;
}
