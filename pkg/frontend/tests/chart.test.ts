import { beforeEach, describe, expect, it } from "vitest";

import { renderChart } from "../src/chart";
import type { CurvePoint } from "../src/types";

function point(labeled: number, score: number, pseudo: number): CurvePoint {
  return { labeled_count: labeled, score, pseudo_count: pseudo, query_ids: [] };
}

describe("renderChart", () => {
  let container: HTMLElement;

  beforeEach(() => {
    container = document.createElement("div");
    document.body.replaceChildren(container);
  });

  it("renders a placeholder when there are no points", () => {
    renderChart(container, []);
    expect(container.querySelector('[data-testid="chart-placeholder"]')).not.toBeNull();
    expect(container.querySelector("svg")).toBeNull();
  });

  it("draws one polyline vertex and one circle per curve point", () => {
    renderChart(container, [point(30, 0.5, 0), point(40, 0.75, 12), point(50, 0.9, 30)]);
    const line = container.querySelector('[data-testid="score-line"]');
    expect(line).not.toBeNull();
    expect(line!.getAttribute("points")!.split(" ")).toHaveLength(3);
    expect(container.querySelectorAll('[data-testid="score-point"]')).toHaveLength(3);
  });

  it("renders zero-height bars for rounds without pseudo-labels", () => {
    renderChart(container, [point(30, 0.5, 0), point(40, 0.75, 20)]);
    const bars = [...container.querySelectorAll('[data-testid="pseudo-bar"]')];
    expect(bars.map((b) => b.getAttribute("data-count"))).toEqual(["0", "20"]);
    expect(Number(bars[0].getAttribute("height"))).toBe(0);
    expect(Number(bars[1].getAttribute("height"))).toBeGreaterThan(0);
  });

  it("replaces previous content on re-render", () => {
    renderChart(container, [point(30, 0.5, 0), point(40, 0.6, 1)]);
    renderChart(container, [point(30, 0.5, 0), point(40, 0.6, 1), point(50, 0.7, 2)]);
    expect(container.querySelectorAll("svg")).toHaveLength(1);
    expect(container.querySelectorAll('[data-testid="score-point"]')).toHaveLength(3);
  });

  it("positions higher scores higher on the canvas", () => {
    renderChart(container, [point(30, 0.1, 0), point(40, 0.9, 0)]);
    const [low, high] = [...container.querySelectorAll('[data-testid="score-point"]')];
    expect(Number(high.getAttribute("cy"))).toBeLessThan(Number(low.getAttribute("cy")));
  });
});
