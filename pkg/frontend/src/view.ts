import { renderChart } from "./chart";
import type { SessionController } from "./app";

const PHASE_LABELS: Record<string, string> = {
  "awaiting-labels": "awaiting labels",
  training: "training…",
  "self-training": "self-training…",
  evaluating: "evaluating…",
  done: "done",
};

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  attrs: Record<string, string> = {},
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  for (const [key, value] of Object.entries(attrs)) node.setAttribute(key, value);
  if (text !== undefined) node.textContent = text;
  return node;
}

/** Labeling queue: one card per pending instance with one-click class buttons. */
export function renderLabeling(root: HTMLElement, controller: SessionController): void {
  root.replaceChildren();
  const phase = controller.phase;
  if (!phase) return;

  const header = el("div", { class: "queue-header" });
  const badge = el("span", { class: `phase phase-${phase}`, "data-testid": "queue-phase" });
  badge.textContent = PHASE_LABELS[phase] ?? phase;
  header.appendChild(badge);

  if (controller.error) {
    const error = el("p", { class: "error", "data-testid": "submit-error" }, controller.error);
    header.appendChild(error);
  }
  root.appendChild(header);

  if (phase === "done") {
    root.appendChild(el("p", {}, "Session complete — see the dashboard for the final curve."));
    return;
  }
  if (phase !== "awaiting-labels" || !controller.batch) {
    root.appendChild(
      el("p", { "data-testid": "engine-busy" }, "The engine is working; the next batch will appear here."),
    );
    return;
  }

  const batch = controller.batch;
  const progress = el(
    "p",
    { "data-testid": "progress" },
    `${controller.drafts.size}/${batch.ids.length} labeled · batch ${batch.batch_index}`,
  );
  root.appendChild(progress);

  const list = el("div", { class: "cards" });
  batch.ids.forEach((instanceId, index) => {
    const card = el("div", {
      class: `card${index === controller.cursor ? " current" : ""}`,
      "data-id": String(instanceId),
    });
    const text = batch.texts[index];
    card.appendChild(el("p", { class: "text" }, text ?? `instance #${instanceId}`));

    const hint = batch.predictions?.[index];
    if (hint) {
      card.appendChild(
        el("p", { class: "hint", "data-testid": "prediction-hint" },
          `model: class ${hint.label} (${hint.confidence.toFixed(2)})`),
      );
    }

    const buttons = el("div", { class: "classes" });
    for (let cls = 0; cls < controller.numClasses; cls += 1) {
      const selected = controller.drafts.get(instanceId) === cls;
      const button = el("button", {
        type: "button",
        class: `class-btn${selected ? " selected" : ""}`,
        "data-label": String(cls),
      }, `class ${cls}`);
      button.addEventListener("click", () => controller.setLabel(instanceId, cls));
      if (!controller.canEdit()) button.setAttribute("disabled", "");
      buttons.appendChild(button);
    }
    card.appendChild(buttons);
    list.appendChild(card);
  });
  root.appendChild(list);

  const submit = el("button", { type: "button", "data-testid": "submit", class: "submit" });
  submit.textContent = controller.submitted
    ? "submitted"
    : controller.busy
      ? "submitting…"
      : `submit ${batch.ids.length} labels`;
  if (!controller.canSubmit()) submit.setAttribute("disabled", "");
  submit.addEventListener("click", () => void controller.submit());
  root.appendChild(submit);
}

/** Dashboard: phase, server-provided stats, curve chart, export link. */
export function renderDashboard(root: HTMLElement, controller: SessionController): void {
  root.replaceChildren();
  const metrics = controller.metrics;
  if (!metrics) {
    root.appendChild(el("p", { "data-testid": "dashboard-empty" }, "No session yet."));
    return;
  }

  const head = el("div", { class: "dash-header" });
  head.appendChild(el("span", { class: "phase", "data-testid": "dash-phase" }, metrics.phase));
  head.appendChild(
    el("span", { "data-testid": "dash-dataset" },
      `${metrics.dataset.name} · ${metrics.dataset.num_classes} classes · ${metrics.dataset.metric}`),
  );
  root.appendChild(head);

  const finalScore = metrics.final_score !== null ? metrics.final_score.toFixed(4) : "–";
  const aucText = metrics.auc !== null ? metrics.auc.toFixed(4) : "–";
  root.appendChild(
    el("p", { "data-testid": "dash-stats" },
      `labeled ${metrics.labeled_count} · points ${metrics.curve.length} · ` +
      `final ${finalScore} · auc ${aucText}`),
  );

  const chartMount = el("div", { class: "chart", "data-testid": "chart-mount" });
  root.appendChild(chartMount);
  renderChart(chartMount, metrics.curve);

  const exportUrl = controller.exportUrl();
  if (exportUrl) {
    const link = el("a", {
      href: exportUrl,
      download: `${metrics.session_id}.json`,
      "data-testid": "export-link",
    }, "export curve JSON");
    root.appendChild(link);
  }
}
