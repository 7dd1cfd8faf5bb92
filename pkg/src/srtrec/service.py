"""HTTP recognition service backing the handwriting pad.

POST /recognize {"strokes": [[[x,y],...], ...]} -> RecognitionResult
GET  /health    -> {"status": "ok", "alphabet_hash": ...}
GET  /alphabet  -> label list

Model parameters are immutable shared state; requests carry no session,
so concurrency is plain thread-per-request.
"""

from __future__ import annotations

import json
import math
import time
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

from .ink import InkSample, Stroke, normalize
from .latex import to_latex
from .model.blstm import BlstmModel, load_checkpoint
from .srt import Srt, merge_bboxes
from .treebuild import recognize_detailed

RESULT_VERSION = 1


class BadRequest(ValueError):
    def __init__(self, status: int, message: str):
        super().__init__(message)
        self.status = status


def sample_from_json(body: dict) -> InkSample:
    if not isinstance(body, dict) or "strokes" not in body:
        raise BadRequest(400, "body must be an object with a 'strokes' field")
    raw = body["strokes"]
    if not isinstance(raw, list):
        raise BadRequest(400, "'strokes' must be a list of point lists")
    if len(raw) == 0:
        raise BadRequest(422, "zero strokes")
    strokes = []
    for i, pts in enumerate(raw):
        if not isinstance(pts, list) or len(pts) == 0:
            raise BadRequest(400, f"stroke {i} must be a non-empty point list")
        parsed = []
        for p in pts:
            if not isinstance(p, (list, tuple)) or len(p) < 2:
                raise BadRequest(400, f"stroke {i} has a malformed point")
            try:
                x, y = float(p[0]), float(p[1])
            except (TypeError, ValueError):
                raise BadRequest(400, f"stroke {i} has a non-numeric point") from None
            if not (math.isfinite(x) and math.isfinite(y)):
                raise BadRequest(400, f"stroke {i} has a non-finite point")
            parsed.append((x, y))
        strokes.append(Stroke(tuple(parsed), i))
    return InkSample(tuple(strokes), source_id="request")


def srt_to_json(srt: Srt, raw_sample: InkSample | None = None) -> dict:
    def node_bbox(node):
        if raw_sample is None:
            return list(node.bbox)
        return list(
            merge_bboxes(raw_sample.strokes[sid].bbox for sid in node.stroke_ids)
        )

    return {
        "nodes": [
            {
                "id": n.id,
                "label": n.label,
                "strokes": list(n.stroke_ids),
                "bbox": node_bbox(n),
            }
            for n in srt.nodes
        ],
        "edges": [
            {"parent": e.parent, "child": e.child, "relation": e.relation}
            for e in srt.edges
        ],
        "root": srt.root,
    }


def recognition_result(model, raw_sample: InkSample) -> dict:
    """Run the full pipeline; the classifier's trained spacing drives
    normalization so inference sees the frame density it was fit on."""
    timing: dict[str, float] = {}
    spacing = getattr(getattr(model, "config", None), "spacing", None)
    t0 = time.perf_counter()
    if spacing is not None:
        sample = normalize(raw_sample, spacing=spacing)
    else:
        sample = normalize(raw_sample)
    timing["normalize"] = (time.perf_counter() - t0) * 1000
    t1 = time.perf_counter()
    outcome = recognize_detailed(model, sample)
    timing["recognize"] = (time.perf_counter() - t1) * 1000
    timing["total"] = (time.perf_counter() - t0) * 1000
    oned = {
        "symbols": [
            {"label": s.label, "strokes": [s.span[0], s.span[1]]}
            for s in outcome.oned.symbols
        ],
        "relations": list(outcome.oned.relations),
    }
    dropped = [
        {
            "labels": [n.label for n in d.tree.nodes],
            "strokes": sorted(s for n in d.tree.nodes for s in n.stroke_ids),
        }
        for d in outcome.dropped
    ]
    return {
        "v": RESULT_VERSION,
        "latex": to_latex(outcome.srt),
        "srt": srt_to_json(outcome.srt, raw_sample),
        "oned": oned,
        "dropped_fragments": dropped,
        "trace": outcome.trace,
        "timing_ms": {k: round(v, 3) for k, v in timing.items()},
    }


def make_handler(model: BlstmModel):
    alphabet_hash = model.alphabet.digest()

    class Handler(BaseHTTPRequestHandler):
        def _send(self, status: int, payload: dict):
            body = json.dumps(payload).encode("utf-8")
            self.send_response(status)
            self.send_header("Content-Type", "application/json")
            self.send_header("Content-Length", str(len(body)))
            self._cors()
            self.end_headers()
            self.wfile.write(body)

        def _cors(self):
            self.send_header("Access-Control-Allow-Origin", "*")
            self.send_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS")
            self.send_header("Access-Control-Allow-Headers", "Content-Type")

        def do_OPTIONS(self):
            self.send_response(204)
            self._cors()
            self.end_headers()

        def do_GET(self):
            if self.path == "/health":
                self._send(200, {"status": "ok", "alphabet_hash": alphabet_hash})
            elif self.path == "/alphabet":
                self._send(200, {"v": 1, "labels": list(model.alphabet.labels)})
            else:
                self._send(404, {"error": "not found"})

        def do_POST(self):
            if self.path != "/recognize":
                self._send(404, {"error": "not found"})
                return
            try:
                length = int(self.headers.get("Content-Length", "0"))
                raw = self.rfile.read(length)
                body = json.loads(raw)
            except (ValueError, json.JSONDecodeError):
                self._send(400, {"error": "malformed JSON body"})
                return
            try:
                sample = sample_from_json(body)
            except BadRequest as exc:
                self._send(exc.status, {"error": str(exc)})
                return
            try:
                self._send(200, recognition_result(model, sample))
            except Exception as exc:  # recognition failure is a server error
                self._send(500, {"error": f"recognition failed: {exc}"})

        def log_message(self, fmt, *args):
            pass  # quiet by default; uvicorn-style access logs are overkill here

    return Handler


def make_server(model: BlstmModel, host: str = "127.0.0.1", port: int = 0):
    return ThreadingHTTPServer((host, port), make_handler(model))


def serve(checkpoint_path: str, bind_addr: str = "127.0.0.1:8080"):
    host, _, port = bind_addr.partition(":")
    model = load_checkpoint(checkpoint_path)
    server = make_server(model, host or "127.0.0.1", int(port or "8080"))
    print(f"serving on http://{server.server_address[0]}:{server.server_address[1]}")
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
