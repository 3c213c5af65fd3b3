// Browser wiring: keyboard play, live rule gallery, plan step-through,
// demonstration export. All state is server-derived.

import { ConsoleClient, SessionConfig } from "./client.js";
import { renderGallery } from "./gallery.js";
import { paintGrid } from "./renderer.js";
import {
  applyMessage,
  initialViewState,
  movePlanCursor,
  ViewState,
} from "./state.js";

const SOKOBAN_KEYS: Record<string, number> = {
  ArrowUp: 0, KeyW: 0, ArrowDown: 1, KeyS: 1,
  ArrowLeft: 2, KeyA: 2, ArrowRight: 3, KeyD: 3,
};
// turn with left/right, walk with up/W, E picks up, space toggles
const DOORKEY_KEYS: Record<string, number> = {
  ArrowLeft: 0, KeyA: 0, ArrowRight: 1, KeyD: 1,
  ArrowUp: 2, KeyW: 2, KeyE: 3, Space: 4,
};

function el<T extends HTMLElement>(id: string): T {
  return document.getElementById(id) as T;
}

function download(name: string, text: string): void {
  const link = document.createElement("a");
  link.href = URL.createObjectURL(new Blob([text], { type: "text/plain" }));
  link.download = name;
  link.click();
  URL.revokeObjectURL(link.href);
}

export function boot(): void {
  let view: ViewState = initialViewState();
  const board = el<HTMLCanvasElement>("board").getContext("2d")!;
  const strip = el<HTMLDivElement>("plan-strip");
  const galleryRoot = el<HTMLDivElement>("gallery");
  const status = el<HTMLDivElement>("status");
  const config = (): SessionConfig => ({
    game: (el<HTMLSelectElement>("game")).value,
    size: Number(el<HTMLInputElement>("size").value),
    boxes: Number(el<HTMLInputElement>("boxes").value),
    seed: Number(el<HTMLInputElement>("seed").value),
    mode: (el<HTMLSelectElement>("mode")).value as SessionConfig["mode"],
    learn: true,
  });

  const render = () => {
    paintGrid(board, view);
    renderGallery(galleryRoot, config().game, view.gallery, view.sprites);
    const banner = view.plan?.kind === "exhausted"
      ? " — agent gives up this round"
      : view.done
        ? ` — solved! reward ${view.lastReward}`
        : "";
    status.textContent =
      `rules: ${view.ruleCount}${banner}` +
      (view.lastError ? ` | ${view.lastError}` : "");
    strip.replaceChildren();
    if (view.plan) {
      view.plan.frames.forEach((frame, i) => {
        const cell = document.createElement("canvas");
        cell.className = i === view.plan!.cursor ? "frame current" : "frame";
        if (frame.grid) {
          paintGrid(cell.getContext("2d")!, view, frame.grid);
        } else {
          cell.title = "unknown transition";
          cell.classList.add("unknown");
        }
        strip.appendChild(cell);
      });
    }
    if (view.exportedLog !== null) {
      download("demo.vrrlog", view.exportedLog);
      view = { ...view, exportedLog: null };
    }
  };

  const address = el<HTMLInputElement>("server").value;
  const client = new ConsoleClient(address, (msg) => {
    view = applyMessage(view, msg);
    render();
  });

  client.ready().then(() => {
    client.hello();
    el<HTMLButtonElement>("new-session").onclick = () => client.create(config());
    el<HTMLButtonElement>("agent-step").onclick = () => client.agentStep();
    el<HTMLButtonElement>("export").onclick = () => client.exportDemo();
    el<HTMLButtonElement>("cursor-back").onclick = () => {
      view = movePlanCursor(view, -1);
      render();
    };
    el<HTMLButtonElement>("cursor-fwd").onclick = () => {
      view = movePlanCursor(view, +1);
      render();
    };
    window.addEventListener("keydown", (event) => {
      const keys = config().game === "doorkey" ? DOORKEY_KEYS : SOKOBAN_KEYS;
      const action = keys[event.code];
      if (action !== undefined) {
        event.preventDefault();
        client.act(action);
      }
    });
  }, (err) => {
    status.textContent = String(err);
  });
}

boot();
