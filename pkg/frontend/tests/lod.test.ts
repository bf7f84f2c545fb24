import { describe, expect, it } from "vitest";

import { distance, lodFor } from "../src/lod.js";

const THRESHOLDS: [number, number] = [3.0, 10.0];

describe("lodFor", () => {
  it("maps distances to the three tiers with half-open boundaries", () => {
    expect(lodFor(0, THRESHOLDS)).toBe("full_detail");
    expect(lodFor(2.999, THRESHOLDS)).toBe("full_detail");
    expect(lodFor(3.0, THRESHOLDS)).toBe("representative");
    expect(lodFor(9.999, THRESHOLDS)).toBe("representative");
    expect(lodFor(10.0, THRESHOLDS)).toBe("star");
    expect(lodFor(1e9, THRESHOLDS)).toBe("star");
  });

  it("is monotone non-decreasing in coarseness over random distances", () => {
    const rank = { full_detail: 0, representative: 1, star: 2 };
    const ds = Array.from({ length: 500 }, (_, i) => (i / 499) * 30);
    for (let i = 1; i < ds.length; i++) {
      expect(rank[lodFor(ds[i], THRESHOLDS)]).toBeGreaterThanOrEqual(
        rank[lodFor(ds[i - 1], THRESHOLDS)],
      );
    }
  });

  it("rejects negative or NaN distances", () => {
    expect(() => lodFor(-1, THRESHOLDS)).toThrow(RangeError);
    expect(() => lodFor(NaN, THRESHOLDS)).toThrow(RangeError);
  });
});

describe("distance", () => {
  it("is the euclidean norm", () => {
    expect(distance([0, 0, 0], [3, 4, 0])).toBeCloseTo(5, 12);
    expect(distance([1, 2, 3], [1, 2, 3])).toBe(0);
  });
});
