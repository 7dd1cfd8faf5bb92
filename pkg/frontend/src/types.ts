/** Wire types shared with the recognition service. */

export interface PadStroke {
  points: [number, number][];
  completed: boolean;
}

export interface SrtNodeJson {
  id: string;
  label: string;
  strokes: number[];
  bbox: [number, number, number, number];
}

export interface SrtEdgeJson {
  parent: string;
  child: string;
  relation: string;
}

export interface SrtJson {
  nodes: SrtNodeJson[];
  edges: SrtEdgeJson[];
  root: string | null;
}

export interface OneDJson {
  symbols: { label: string; strokes: [number, number] }[];
  relations: string[];
}

export interface TraceEntry {
  source_node: string;
  target: number;
  relation: string;
  probability: number;
}

export interface RecognitionResult {
  v: number;
  latex: string;
  srt: SrtJson;
  oned: OneDJson;
  dropped_fragments: { labels: string[]; strokes: number[] }[];
  trace?: TraceEntry[];
  timing_ms: Record<string, number>;
}

export interface StrokesBody {
  strokes: [number, number][][];
}

/** Request-body schema check: {"strokes": [[[x, y], ...], ...]}. */
export function isValidStrokesBody(body: unknown): body is StrokesBody {
  if (typeof body !== "object" || body === null) return false;
  const strokes = (body as { strokes?: unknown }).strokes;
  if (!Array.isArray(strokes) || strokes.length === 0) return false;
  return strokes.every(
    (stroke) =>
      Array.isArray(stroke) &&
      stroke.length > 0 &&
      stroke.every(
        (p) =>
          Array.isArray(p) &&
          p.length === 2 &&
          typeof p[0] === "number" &&
          typeof p[1] === "number" &&
          Number.isFinite(p[0]) &&
          Number.isFinite(p[1]),
      ),
  );
}

export function isRecognitionResult(value: unknown): value is RecognitionResult {
  if (typeof value !== "object" || value === null) return false;
  const r = value as Partial<RecognitionResult>;
  return (
    typeof r.latex === "string" &&
    typeof r.srt === "object" &&
    r.srt !== null &&
    Array.isArray(r.srt.nodes) &&
    Array.isArray(r.srt.edges) &&
    Array.isArray(r.dropped_fragments)
  );
}
