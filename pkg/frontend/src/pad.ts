/** Canvas pointer capture: pointer events in, pad strokes out. */

import { Session } from "./session.js";
import { PadStroke } from "./types.js";

export function attachPad(canvas: HTMLCanvasElement, session: Session): void {
  let drawing = false;

  const point = (ev: PointerEvent): [number, number] => {
    const rect = canvas.getBoundingClientRect();
    return [ev.clientX - rect.left, ev.clientY - rect.top];
  };

  canvas.addEventListener("pointerdown", (ev) => {
    drawing = true;
    canvas.setPointerCapture(ev.pointerId);
    const [x, y] = point(ev);
    session.beginStroke(x, y);
  });
  canvas.addEventListener("pointermove", (ev) => {
    if (!drawing) return;
    const [x, y] = point(ev);
    session.extendStroke(x, y);
  });
  const finish = (ev: PointerEvent) => {
    if (!drawing) return;
    drawing = false;
    canvas.releasePointerCapture(ev.pointerId);
    session.endStroke();
  };
  canvas.addEventListener("pointerup", finish);
  canvas.addEventListener("pointercancel", finish);
}

export function drawInk(canvas: HTMLCanvasElement, strokes: PadStroke[]): void {
  const ctx = canvas.getContext("2d");
  if (!ctx) return;
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  ctx.lineWidth = 2;
  ctx.lineCap = "round";
  ctx.lineJoin = "round";
  ctx.strokeStyle = "#1b2a41";
  ctx.fillStyle = "#1b2a41";
  for (const stroke of strokes) {
    if (stroke.points.length === 1) {
      const [x, y] = stroke.points[0];
      ctx.beginPath();
      ctx.arc(x, y, 1.5, 0, Math.PI * 2);
      ctx.fill();
      continue;
    }
    ctx.beginPath();
    ctx.moveTo(stroke.points[0][0], stroke.points[0][1]);
    for (const [x, y] of stroke.points.slice(1)) ctx.lineTo(x, y);
    ctx.stroke();
  }
}
