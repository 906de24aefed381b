/**
 * Scripted end-to-end session against a real backend: the Python service is
 * spawned as a child process and the actual UI modules drive it over HTTP
 * from jsdom. Requires the `labelloop` Python package to be installed.
 */

import { spawn, type ChildProcess } from "node:child_process";
import { mkdtempSync, rmSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { SessionApi } from "../src/api";
import { SessionController } from "../src/app";
import { renderDashboard, renderLabeling } from "../src/view";
import type { SessionMetrics } from "../src/types";

const PORT = 8900 + Math.floor(Math.random() * 90);
const BASE = `http://127.0.0.1:${PORT}`;
const DATASET = "blobs4:per_class=30,dim=8,separation=8.0,seed=6";
const CONFIG = { seed_size: 30, num_queries: 3, batch_size: 10, epochs: 120, k: 3 };

let server: ChildProcess;
let dataDir: string;

async function waitFor(predicate: () => boolean, timeoutMs: number, what: string): Promise<void> {
  const deadline = Date.now() + timeoutMs;
  while (Date.now() < deadline) {
    if (predicate()) return;
    await new Promise((resolve) => setTimeout(resolve, 25));
  }
  throw new Error(`timed out waiting for ${what}`);
}

beforeAll(async () => {
  dataDir = mkdtempSync(join(tmpdir(), "labelloop-e2e-"));
  server = spawn("python3", ["-m", "labelloop", "serve", "--port", String(PORT)], {
    env: { ...process.env, LABELLOOP_DATA_DIR: dataDir },
    stdio: ["ignore", "pipe", "pipe"],
  });
  const deadline = Date.now() + 60_000;
  for (;;) {
    try {
      const response = await fetch(`${BASE}/healthz`);
      if (response.ok) break;
    } catch {
      // not up yet
    }
    if (Date.now() > deadline) throw new Error("service did not come up");
    await new Promise((resolve) => setTimeout(resolve, 200));
  }
}, 90_000);

afterAll(() => {
  server?.kill("SIGTERM");
  rmSync(dataDir, { recursive: true, force: true });
});

describe("live annotation session end to end", () => {
  it("labels the seed batch and three query rounds, then the dashboard matches the server", async () => {
    document.body.innerHTML = '<section id="labeling"></section><section id="dashboard"></section>';
    const labelingRoot = document.querySelector<HTMLElement>("#labeling")!;
    const dashboardRoot = document.querySelector<HTMLElement>("#dashboard")!;

    const controller = new SessionController(new SessionApi(BASE), { pollIntervalMs: 50 });
    controller.onChange(() => {
      renderLabeling(labelingRoot, controller);
      renderDashboard(dashboardRoot, controller);
    });

    const sessionId = await controller.create(DATASET, CONFIG);
    expect(sessionId).toBeTruthy();

    const expectedBatchSizes = [30, 10, 10, 10];
    for (let round = 0; round < expectedBatchSizes.length; round += 1) {
      await waitFor(
        () =>
          controller.phase === "awaiting-labels" &&
          controller.batch !== null &&
          controller.batch.batch_index === round &&
          !controller.submitted,
        60_000,
        `batch ${round}`,
      );
      const cards = [...labelingRoot.querySelectorAll<HTMLElement>(".card")];
      expect(cards).toHaveLength(expectedBatchSizes[round]);
      for (const card of cards) {
        const instanceId = Number(card.dataset.id);
        const pick = instanceId % 4; // any valid label; the oracle here is the script
        (card.querySelector(`.class-btn[data-label="${pick}"]`) as HTMLButtonElement).click();
      }
      const submit = labelingRoot.querySelector('[data-testid="submit"]') as HTMLButtonElement;
      expect(submit.hasAttribute("disabled")).toBe(false);
      submit.click();
      // the next loop iteration waits for the following batch (or `done` below),
      // which also covers the ack; the round may complete within the round-trip
    }

    await waitFor(() => controller.phase === "done", 60_000, "session completion");

    // the dashboard must mirror the server's metrics endpoint exactly
    const metrics = (await (await fetch(`${BASE}/sessions/${sessionId}/metrics`)).json()) as SessionMetrics;
    expect(metrics.phase).toBe("done");
    expect(metrics.curve).toHaveLength(4);
    expect(metrics.labeled_count).toBe(60);

    const points = [...dashboardRoot.querySelectorAll('[data-testid="score-point"]')];
    expect(points).toHaveLength(4);
    expect(points.map((p) => Number(p.getAttribute("data-score")))).toEqual(
      metrics.curve.map((p) => p.score),
    );
    const bars = [...dashboardRoot.querySelectorAll('[data-testid="pseudo-bar"]')];
    expect(bars.map((b) => Number(b.getAttribute("data-count")))).toEqual(metrics.pseudo_counts);

    const stats = dashboardRoot.querySelector('[data-testid="dash-stats"]')!.textContent!;
    expect(stats).toContain(`final ${metrics.final_score!.toFixed(4)}`);
    expect(stats).toContain(`auc ${metrics.auc!.toFixed(4)}`);

    // export is reachable and carries the same curve
    const exported = (await (
      await fetch(dashboardRoot.querySelector('[data-testid="export-link"]')!.getAttribute("href")!)
    ).json()) as { curve: { points: unknown[] } };
    expect(exported.curve.points).toHaveLength(4);

    controller.destroy();
  }, 120_000);
});
