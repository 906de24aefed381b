import { SessionApi } from "./api";
import { SessionController } from "./app";
import { bindHotkeys } from "./hotkeys";
import { renderDashboard, renderLabeling } from "./view";

function boot(): void {
  const form = document.querySelector<HTMLFormElement>("#setup");
  const labelingRoot = document.querySelector<HTMLElement>("#labeling");
  const dashboardRoot = document.querySelector<HTMLElement>("#dashboard");
  if (!form || !labelingRoot || !dashboardRoot) throw new Error("missing app shell");

  let controller: SessionController | null = null;

  const rerender = () => {
    if (!controller) return;
    renderLabeling(labelingRoot, controller);
    renderDashboard(dashboardRoot, controller);
  };

  form.addEventListener("submit", (event) => {
    event.preventDefault();
    const data = new FormData(form);
    const server = String(data.get("server") || "");
    const dataset = String(data.get("dataset") || "blobs4");
    const config = {
      seed_size: Number(data.get("seed_size") || 30),
      num_queries: Number(data.get("num_queries") || 10),
      batch_size: Number(data.get("batch_size") || 10),
    };
    const reveal = data.get("reveal") === "on";

    controller?.destroy();
    controller = new SessionController(new SessionApi(server));
    controller.onChange(rerender);
    controller
      .create(dataset, config, reveal)
      .catch((err) => {
        labelingRoot.replaceChildren();
        const message = document.createElement("p");
        message.className = "error";
        message.textContent = String(err);
        labelingRoot.appendChild(message);
      });
  });

  bindHotkeys(window, {
    "0": () => controller?.labelAtCursor(0),
    "1": () => controller?.labelAtCursor(1),
    "2": () => controller?.labelAtCursor(2),
    "3": () => controller?.labelAtCursor(3),
    "4": () => controller?.labelAtCursor(4),
    "5": () => controller?.labelAtCursor(5),
    "6": () => controller?.labelAtCursor(6),
    "7": () => controller?.labelAtCursor(7),
    "8": () => controller?.labelAtCursor(8),
    "9": () => controller?.labelAtCursor(9),
    j: () => controller?.moveCursor(1),
    k: () => controller?.moveCursor(-1),
    arrowdown: () => controller?.moveCursor(1),
    arrowup: () => controller?.moveCursor(-1),
    enter: () => void controller?.submit(),
  });
}

window.addEventListener("load", boot);
