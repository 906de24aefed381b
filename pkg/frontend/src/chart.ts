import type { CurvePoint } from "./types";

const SVG_NS = "http://www.w3.org/2000/svg";
const WIDTH = 640;
const HEIGHT = 360;
const MARGIN = { left: 48, right: 16, top: 16, bottom: 36 };

function svgEl<K extends keyof SVGElementTagNameMap>(
  tag: K,
  attrs: Record<string, string>,
): SVGElementTagNameMap[K] {
  const el = document.createElementNS(SVG_NS, tag);
  for (const [key, value] of Object.entries(attrs)) el.setAttribute(key, value);
  return el;
}

/**
 * Score-vs-labeled-count line chart with pseudo-label bars along the bottom.
 * Every number is server-provided; this only draws.
 */
export function renderChart(container: HTMLElement, curve: CurvePoint[]): void {
  container.replaceChildren();
  if (curve.length === 0) {
    const placeholder = document.createElement("p");
    placeholder.dataset.testid = "chart-placeholder";
    placeholder.textContent = "No evaluations yet — label the first batch to start the curve.";
    container.appendChild(placeholder);
    return;
  }

  const xs = curve.map((p) => p.labeled_count);
  const xMin = xs[0];
  const xMax = xs[xs.length - 1] > xMin ? xs[xs.length - 1] : xMin + 1;
  const plotW = WIDTH - MARGIN.left - MARGIN.right;
  const plotH = HEIGHT - MARGIN.top - MARGIN.bottom;
  const px = (x: number) => MARGIN.left + ((x - xMin) / (xMax - xMin)) * plotW;
  const py = (y: number) => MARGIN.top + (1 - y) * plotH;

  const svg = svgEl("svg", {
    viewBox: `0 0 ${WIDTH} ${HEIGHT}`,
    width: String(WIDTH),
    height: String(HEIGHT),
    "data-testid": "curve-chart",
  });

  for (let tick = 0; tick <= 10; tick += 2) {
    const y = py(tick / 10);
    svg.appendChild(svgEl("line", {
      x1: String(MARGIN.left), y1: y.toFixed(1),
      x2: String(WIDTH - MARGIN.right), y2: y.toFixed(1),
      stroke: "#e3e3e3", "stroke-width": "1",
    }));
    const label = svgEl("text", {
      x: String(MARGIN.left - 6), y: (y + 4).toFixed(1),
      "text-anchor": "end", "font-size": "10",
    });
    label.textContent = (tick / 10).toFixed(1);
    svg.appendChild(label);
  }

  const maxPseudo = Math.max(...curve.map((p) => p.pseudo_count), 1);
  for (const point of curve) {
    const barHeight = (point.pseudo_count / maxPseudo) * plotH * 0.25;
    const bar = svgEl("rect", {
      x: (px(point.labeled_count) - 6).toFixed(1),
      y: (HEIGHT - MARGIN.bottom - barHeight).toFixed(1),
      width: "12",
      height: barHeight.toFixed(1),
      fill: "#c9daf8",
      "data-testid": "pseudo-bar",
      "data-count": String(point.pseudo_count),
    });
    svg.appendChild(bar);
  }

  const line = svgEl("polyline", {
    points: curve.map((p) => `${px(p.labeled_count).toFixed(1)},${py(p.score).toFixed(1)}`).join(" "),
    fill: "none",
    stroke: "#1f77b4",
    "stroke-width": "2",
    "data-testid": "score-line",
  });
  svg.appendChild(line);

  for (const point of curve) {
    svg.appendChild(svgEl("circle", {
      cx: px(point.labeled_count).toFixed(1),
      cy: py(point.score).toFixed(1),
      r: "3",
      fill: "#1f77b4",
      "data-testid": "score-point",
      "data-score": String(point.score),
    }));
    const tick = svgEl("text", {
      x: px(point.labeled_count).toFixed(1),
      y: String(HEIGHT - MARGIN.bottom + 14),
      "text-anchor": "middle",
      "font-size": "10",
    });
    tick.textContent = String(point.labeled_count);
    svg.appendChild(tick);
  }

  container.appendChild(svg);
}
