/**
 * Pad session state: the stroke list, the single-slot request queue and
 * the latest recognition result.
 *
 * Strokes are sent to the service verbatim (the server normalizes).
 * At most one request is in flight; edits made meanwhile queue exactly
 * one follow-up, and a response is applied only when it is the newest
 * issued request, so a stale response can never overwrite a newer one.
 */

import { isValidStrokesBody, PadStroke, RecognitionResult, StrokesBody } from "./types.js";

export type FetchLike = (url: string, init: RequestInit) => Promise<Response>;

export interface SessionOptions {
  serviceUrl: string;
  fetchImpl?: FetchLike;
  debounceMs?: number;
  setTimeoutImpl?: (fn: () => void, ms: number) => ReturnType<typeof setTimeout>;
  clearTimeoutImpl?: (handle: ReturnType<typeof setTimeout>) => void;
}

export interface SessionState {
  strokes: PadStroke[];
  lastResult: RecognitionResult | null;
  pending: boolean;
  error: string | null;
}

type Listener = (state: SessionState) => void;

export class Session {
  private strokes: PadStroke[] = [];
  private lastResult: RecognitionResult | null = null;
  private pending = false;
  private error: string | null = null;

  private requestSeq = 0;
  private appliedSeq = 0;
  private queued = false;
  private debounceHandle: ReturnType<typeof setTimeout> | null = null;
  private listeners: Listener[] = [];

  private readonly fetchImpl: FetchLike;
  private readonly debounceMs: number;
  private readonly setTimeoutImpl: SessionOptions["setTimeoutImpl"];
  private readonly clearTimeoutImpl: SessionOptions["clearTimeoutImpl"];

  constructor(private readonly options: SessionOptions) {
    this.fetchImpl = options.fetchImpl ?? ((url, init) => fetch(url, init));
    this.debounceMs = options.debounceMs ?? 400;
    this.setTimeoutImpl = options.setTimeoutImpl ?? ((fn, ms) => setTimeout(fn, ms));
    this.clearTimeoutImpl = options.clearTimeoutImpl ?? ((h) => clearTimeout(h));
  }

  get state(): SessionState {
    return {
      strokes: this.strokes.map((s) => ({ ...s, points: [...s.points] })),
      lastResult: this.lastResult,
      pending: this.pending,
      error: this.error,
    };
  }

  onChange(listener: Listener): void {
    this.listeners.push(listener);
  }

  private emit(): void {
    const snapshot = this.state;
    for (const listener of this.listeners) listener(snapshot);
  }

  // -- stroke capture ------------------------------------------------------

  beginStroke(x: number, y: number): void {
    // capture is always allowed; only requests serialize
    this.strokes.push({ points: [[x, y]], completed: false });
    this.emit();
  }

  extendStroke(x: number, y: number): void {
    const current = this.strokes[this.strokes.length - 1];
    if (!current || current.completed) return;
    current.points.push([x, y]);
    this.emit();
  }

  endStroke(): void {
    const current = this.strokes[this.strokes.length - 1];
    if (!current || current.completed) return;
    current.completed = true;  // a tap stays a single-point stroke
    this.emit();
    this.scheduleRecognition();
  }

  undo(): void {
    if (this.strokes.length === 0) return;
    this.strokes.pop();
    this.error = null;
    if (this.strokes.length === 0) {
      this.lastResult = null;
      this.emit();
      return;
    }
    this.emit();
    void this.requestRecognition();
  }

  clear(): void {
    this.strokes = [];
    this.lastResult = null;
    this.error = null;
    this.queued = false;
    this.emit();
  }

  // -- recognition requests --------------------------------------------------

  private scheduleRecognition(): void {
    if (this.debounceHandle !== null) this.clearTimeoutImpl!(this.debounceHandle);
    this.debounceHandle = this.setTimeoutImpl!(() => {
      this.debounceHandle = null;
      void this.requestRecognition();
    }, this.debounceMs);
  }

  requestBody(): StrokesBody {
    return { strokes: this.strokes.filter((s) => s.completed).map((s) => s.points) };
  }

  async requestRecognition(): Promise<void> {
    const body = this.requestBody();
    if (body.strokes.length === 0) return; // nothing drawn: suppress
    if (!isValidStrokesBody(body)) return;
    if (this.pending) {
      this.queued = true; // one-slot queue
      return;
    }
    this.pending = true;
    this.emit();
    const seq = ++this.requestSeq;
    try {
      const response = await this.fetchImpl(`${this.options.serviceUrl}/recognize`, {
        method: "POST",
        headers: { "Content-Type": "application/json" },
        body: JSON.stringify(body),
      });
      if (!response.ok) {
        throw new Error(`service returned ${response.status}`);
      }
      const result = (await response.json()) as RecognitionResult;
      // only the newest issued request may win; strokes intact either way
      if (seq === this.requestSeq && seq > this.appliedSeq && !this.queued) {
        this.appliedSeq = seq;
        this.lastResult = result;
        this.error = null;
      }
    } catch (err) {
      if (seq === this.requestSeq) {
        this.error = err instanceof Error ? err.message : String(err);
      }
    } finally {
      this.pending = false;
      this.emit();
      if (this.queued) {
        this.queued = false;
        void this.requestRecognition();
      }
    }
  }
}
