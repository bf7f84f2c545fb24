import type { TablePayload } from "./types.js";

export interface SpiderAxis {
  label: string;
  angle: number;
  /** axis tip at unit radius */
  tip: [number, number];
}

export interface SpiderDiagram {
  axes: SpiderAxis[];
  /** polygon vertex per axis at normalized value × radius, server axis order */
  polygon: [number, number][];
  raw: number[];
}

/**
 * Tabletop spider diagram geometry. One axis per metric channel, in the
 * order the server reports them; axis 0 points up, subsequent axes proceed
 * clockwise.
 */
export function spiderDiagram(
  spider: TablePayload["spider"],
  radius = 1,
): SpiderDiagram {
  if (spider.length < 3) {
    throw new Error(`spider diagram needs >= 3 axes, got ${spider.length}`);
  }
  const n = spider.length;
  const axes: SpiderAxis[] = [];
  const polygon: [number, number][] = [];
  const raw: number[] = [];
  spider.forEach(([label, norm, rawValue], i) => {
    if (!(norm >= 0 && norm <= 1)) {
      throw new RangeError(`${label}: normalized value ${norm} outside [0, 1]`);
    }
    const angle = Math.PI / 2 - (2 * Math.PI * i) / n;
    axes.push({ label, angle, tip: [Math.cos(angle), Math.sin(angle)] });
    polygon.push([
      norm * radius * Math.cos(angle),
      norm * radius * Math.sin(angle),
    ]);
    raw.push(rawValue);
  });
  return { axes, polygon, raw };
}

export interface RadialBar {
  label: string;
  startAngle: number;
  endAngle: number;
  /** bar extent as a fraction of the graph's radial span */
  extent: number;
}

/**
 * Perimeter radial percentile graph: one arc segment per channel, filled in
 * proportion to the solution's percentile among current survivors.
 */
export function radialBars(radial: TablePayload["radial"]): RadialBar[] {
  const n = radial.length;
  if (n === 0) throw new Error("radial graph needs at least one channel");
  return radial.map(([label, percentile], i) => {
    if (!(percentile >= 0 && percentile <= 100)) {
      throw new RangeError(`${label}: percentile ${percentile} outside [0, 100]`);
    }
    return {
      label,
      startAngle: (2 * Math.PI * i) / n,
      endAngle: (2 * Math.PI * (i + 0.9)) / n,
      extent: percentile / 100,
    };
  });
}
