import { attachPad, drawInk } from "./pad.js";
import { renderInspection, renderLatex, renderSrtDiagram } from "./render.js";
import { Session } from "./session.js";

function required<T extends Element>(id: string): T {
  const el = document.getElementById(id);
  if (!el) throw new Error(`missing #${id}`);
  return el as unknown as T;
}

export function boot(): Session {
  const canvas = required<HTMLCanvasElement>("pad");
  const urlInput = required<HTMLInputElement>("service-url");
  const latexEl = required<HTMLElement>("latex");
  const diagram = required<SVGSVGElement>("srt-diagram");
  const inspection = required<HTMLElement>("inspection");
  const badge = required<HTMLElement>("dropped-badge");
  const banner = required<HTMLElement>("error-banner");
  const pendingEl = required<HTMLElement>("pending");

  const session = new Session({ serviceUrl: urlInput.value.replace(/\/$/, "") });
  urlInput.addEventListener("change", () => {
    // a fresh session keeps the contract simple: one service per session
    window.location.reload();
  });

  attachPad(canvas, session);
  required<HTMLButtonElement>("recognize").addEventListener("click", () => {
    void session.requestRecognition();
  });
  required<HTMLButtonElement>("undo").addEventListener("click", () => session.undo());
  required<HTMLButtonElement>("clear").addEventListener("click", () => session.clear());

  session.onChange((state) => {
    drawInk(canvas, state.strokes);
    renderLatex(latexEl, state.lastResult);
    renderSrtDiagram(diagram, state.lastResult, canvas.width, canvas.height / 2);
    renderInspection(inspection, badge, state.lastResult);
    banner.hidden = state.error === null;
    banner.textContent = state.error ?? "";
    pendingEl.hidden = !state.pending;
  });
  return session;
}

if (typeof document !== "undefined" && document.getElementById("pad")) {
  boot();
}
