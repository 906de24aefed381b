import { beforeEach, describe, expect, it } from "vitest";

import { ApiError } from "../src/api";
import { SessionController, type SessionApiLike } from "../src/app";
import { bindHotkeys } from "../src/hotkeys";
import { renderDashboard, renderLabeling } from "../src/view";
import type { PendingBatch, Phase, SessionMetrics } from "../src/types";

function makeApi(metrics: SessionMetrics, batch: PendingBatch) {
  const calls: [number, number][][] = [];
  const api: SessionApiLike = {
    createSession: async () => ({ session_id: "s1", phase: metrics.phase }),
    getMetrics: async () => JSON.parse(JSON.stringify(metrics)) as SessionMetrics,
    getQuery: async () => JSON.parse(JSON.stringify(batch)) as PendingBatch,
    submitLabels: async (_sid, labels) => {
      calls.push(labels);
      return { accepted: labels.length, remaining: 0, phase: "training" as Phase };
    },
    exportUrl: (sid) => `/sessions/${sid}/export`,
  };
  return { api, calls };
}

const METRICS: SessionMetrics = {
  session_id: "s1",
  phase: "awaiting-labels",
  dataset: { name: "toy", num_classes: 3, metric: "accuracy", train_size: 30 },
  config: {},
  curve: [
    { labeled_count: 6, score: 0.5, pseudo_count: 0, query_ids: [] },
    { labeled_count: 9, score: 0.8125, pseudo_count: 14, query_ids: [] },
  ],
  pseudo_counts: [0, 14],
  final_score: 0.8125,
  auc: 0.65625,
  labeled_count: 9,
  pending: { batch_index: 1, size: 3, submitted: 0 },
};

const BATCH: PendingBatch = {
  ids: [4, 5, 6],
  texts: ["alpha", null, "gamma"],
  batch_index: 1,
  remaining: 3,
  predictions: null,
};

describe("labeling view", () => {
  let root: HTMLElement;

  beforeEach(() => {
    root = document.createElement("section");
    document.body.replaceChildren(root);
  });

  async function makeController(metrics = METRICS, batch = BATCH) {
    const { api, calls } = makeApi(metrics, batch);
    const controller = new SessionController(api);
    await controller.create("toy", {});
    return { controller, calls };
  }

  it("renders one card per pending instance with class buttons", async () => {
    const { controller } = await makeController();
    renderLabeling(root, controller);
    const cards = root.querySelectorAll(".card");
    expect(cards).toHaveLength(3);
    expect(cards[0].querySelector(".text")!.textContent).toBe("alpha");
    expect(cards[1].querySelector(".text")!.textContent).toBe("instance #5"); // no text for synthetic data
    expect(cards[0].querySelectorAll(".class-btn")).toHaveLength(3);
    expect(root.querySelector('[data-testid="progress"]')!.textContent).toContain("0/3");
    expect(root.querySelector('[data-testid="submit"]')!.hasAttribute("disabled")).toBe(true);
  });

  it("clicking class buttons drafts labels and enables submit when complete", async () => {
    const { controller, calls } = await makeController();
    controller.onChange(() => renderLabeling(root, controller));
    renderLabeling(root, controller);
    for (const id of [4, 5, 6]) {
      const card = root.querySelector(`.card[data-id="${id}"]`)!;
      (card.querySelector('.class-btn[data-label="2"]') as HTMLButtonElement).click();
    }
    expect(root.querySelector('[data-testid="progress"]')!.textContent).toContain("3/3");
    const submit = root.querySelector('[data-testid="submit"]') as HTMLButtonElement;
    expect(submit.hasAttribute("disabled")).toBe(false);
    submit.click();
    await new Promise((resolve) => setTimeout(resolve, 0));
    expect(calls).toEqual([[[4, 2], [5, 2], [6, 2]]]);
  });

  it("marks the chosen class and the current card", async () => {
    const { controller } = await makeController();
    controller.setLabel(4, 1);
    renderLabeling(root, controller);
    const first = root.querySelector('.card[data-id="4"]')!;
    expect(first.querySelector(".class-btn.selected")!.getAttribute("data-label")).toBe("1");
    expect(root.querySelector(".card.current")!.getAttribute("data-id")).toBe("5");
  });

  it("shows a phase indicator instead of cards while the engine works", async () => {
    const busyMetrics = { ...METRICS, phase: "self-training" as Phase, pending: null };
    const { controller } = await makeController(busyMetrics);
    renderLabeling(root, controller);
    expect(root.querySelector('[data-testid="queue-phase"]')!.textContent).toContain("self-training");
    expect(root.querySelectorAll(".card")).toHaveLength(0);
    expect(root.querySelector('[data-testid="engine-busy"]')).not.toBeNull();
  });

  it("keeps drafts visible after a rejected submit and offers retry", async () => {
    const { api } = makeApi(METRICS, BATCH);
    api.submitLabels = async () => {
      throw new ApiError(422, "label 9 outside [0, 3)");
    };
    const controller = new SessionController(api);
    await controller.create("toy", {});
    controller.onChange(() => renderLabeling(root, controller));
    for (const id of [4, 5, 6]) controller.setLabel(id, 0);
    await controller.submit();
    expect(root.querySelector('[data-testid="submit-error"]')!.textContent).toContain("label 9");
    expect(root.querySelectorAll(".class-btn.selected")).toHaveLength(3);
    expect((root.querySelector('[data-testid="submit"]') as HTMLButtonElement).hasAttribute("disabled")).toBe(false);
    controller.destroy();
  });

  it("shows model hints only when the server provides them", async () => {
    const withHints = { ...BATCH, predictions: [
      { label: 0, confidence: 0.91 },
      { label: 2, confidence: 0.55 },
      { label: 1, confidence: 0.77 },
    ] };
    const { controller } = await makeController(METRICS, withHints);
    renderLabeling(root, controller);
    const hints = root.querySelectorAll('[data-testid="prediction-hint"]');
    expect(hints).toHaveLength(3);
    expect(hints[0].textContent).toContain("class 0");
  });

  it("number hotkeys label the current card", async () => {
    const { controller } = await makeController();
    const unbind = bindHotkeys(window, {
      "2": () => controller.labelAtCursor(2),
    });
    window.dispatchEvent(new KeyboardEvent("keydown", { key: "2" }));
    expect(controller.drafts.get(4)).toBe(2);
    unbind();
    controller.destroy();
  });
});

describe("dashboard view", () => {
  let root: HTMLElement;

  beforeEach(() => {
    root = document.createElement("section");
    document.body.replaceChildren(root);
  });

  it("renders a placeholder before any session exists", () => {
    const { api } = makeApi(METRICS, BATCH);
    renderDashboard(root, new SessionController(api));
    expect(root.querySelector('[data-testid="dashboard-empty"]')).not.toBeNull();
  });

  it("shows server-provided stats, the chart, and the export link", async () => {
    const { api } = makeApi(METRICS, BATCH);
    const controller = new SessionController(api);
    await controller.create("toy", {});
    renderDashboard(root, controller);
    const stats = root.querySelector('[data-testid="dash-stats"]')!.textContent!;
    expect(stats).toContain("final 0.8125");
    expect(stats).toContain("auc 0.6563");
    expect(stats).toContain("points 2");
    expect(root.querySelectorAll('[data-testid="score-point"]')).toHaveLength(2);
    const bars = [...root.querySelectorAll('[data-testid="pseudo-bar"]')];
    expect(bars.map((b) => b.getAttribute("data-count"))).toEqual(["0", "14"]);
    expect(root.querySelector('[data-testid="export-link"]')!.getAttribute("href")).toBe(
      "/sessions/s1/export",
    );
    controller.destroy();
  });
});
