"""The request loop: newline-delimited JSON in, canonical JSON out.

Single-threaded and strictly sequential, matching the protocol's
one-in-flight contract. Snapshots are serialized to a directory so an
adapter restart can restore wrapped-model state.
"""

from __future__ import annotations

import json
import os
import socket
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .protocol import DecodedDataset, canonical_dumps, clip_and_renormalize, mean_test_cross_entropy


@dataclass
class AdapterConfig:
    transport: str = "stdio"  # "stdio" | "tcp:HOST:PORT"
    model_spec: str = "echo-freq"
    snapshot_dir: str = "./snapshots"


class ModelError(RuntimeError):
    pass


class AdapterServer:
    def __init__(self, model, snapshot_dir):
        self._model = model
        self._snapshot_dir = Path(snapshot_dir)
        self._snapshot_counter = 0

    def handle_line(self, line: str) -> str:
        try:
            req = json.loads(line)
            if not isinstance(req, dict):
                raise ValueError
        except ValueError:
            return canonical_dumps({"id": None, "kind": "ERROR", "code": "parse", "message": "malformed JSON line"})
        req_id = req.get("id")
        kind = req.get("kind")
        try:
            return canonical_dumps(self._dispatch(req_id, kind, req))
        except ModelError as err:
            return canonical_dumps({"id": req_id, "kind": "ERROR", "code": "model_error", "message": str(err)})
        except KeyError as err:
            return canonical_dumps({"id": req_id, "kind": "ERROR", "code": "parse", "message": f"missing field {err}"})

    def _fit_predict(self, payload: dict) -> np.ndarray:
        data = DecodedDataset(payload)
        try:
            self._model.fit(data.x_train, data.y_train, data.n_classes)
            probs = np.asarray(self._model.predict_proba(data.x_test), dtype=np.float64)
        except Exception as err:
            raise ModelError(str(err)) from err
        if probs.shape != (len(data.test_indices), data.n_classes):
            raise ModelError(f"wrapped model returned shape {probs.shape}")
        return clip_and_renormalize(probs)

    def _dispatch(self, req_id, kind, req) -> dict:
        if kind == "PING":
            return {"id": req_id, "kind": "OK"}
        if kind == "PREDICT":
            probs = self._fit_predict(req["dataset"])
            return {"id": req_id, "kind": "PROBS", "probs": [[float(v) for v in row] for row in probs]}
        if kind == "TRAIN_STEP":
            losses = []
            for payload in req["datasets"]:
                data = DecodedDataset(payload)
                probs = self._fit_predict(payload)
                losses.append(mean_test_cross_entropy(probs, data.y_test))
            return {"id": req_id, "kind": "LOSS", "loss": float(np.mean(losses))}
        if kind == "SNAPSHOT":
            self._snapshot_counter += 1
            snap_id = f"snap-{self._snapshot_counter}"
            self._snapshot_dir.mkdir(parents=True, exist_ok=True)
            state = self._model.get_state() if hasattr(self._model, "get_state") else {}
            (self._snapshot_dir / f"{snap_id}.json").write_text(canonical_dumps(state) + "\n")
            return {"id": req_id, "kind": "SNAPSHOT_ID", "snapshot_id": snap_id}
        if kind == "RESTORE":
            snap_id = req.get("snapshot_id")
            path = self._snapshot_dir / f"{snap_id}.json"
            if not isinstance(snap_id, str) or not path.exists():
                return {"id": req_id, "kind": "ERROR", "code": "not_found", "message": f"unknown snapshot_id {snap_id!r}"}
            if hasattr(self._model, "set_state"):
                self._model.set_state(json.loads(path.read_text()))
            return {"id": req_id, "kind": "OK"}
        return {"id": req_id, "kind": "ERROR", "code": "unsupported", "message": f"unknown kind {kind!r}"}

    def serve_stream(self, rfile, wfile) -> None:
        """Answer requests until EOF on rfile (binary streams)."""
        for raw in rfile:
            line = raw.decode("utf-8")
            if not line.strip():
                continue
            response = self.handle_line(line.rstrip("\n"))
            wfile.write((response + "\n").encode("utf-8"))
            wfile.flush()


def run_adapter(config: AdapterConfig) -> None:
    """Serve until EOF (stdio) or forever, one connection at a time (tcp)."""
    from .models import make_model

    server = AdapterServer(make_model(config.model_spec), config.snapshot_dir)
    if config.transport == "stdio":
        server.serve_stream(sys.stdin.buffer, sys.stdout.buffer)
        return
    if config.transport.startswith("tcp:"):
        _, host, port = config.transport.split(":")
        listener = socket.create_server((host, int(port)))
        bound_port = listener.getsockname()[1]  # resolves port 0 to the real one
        print(f"listening on {host}:{bound_port}", file=sys.stderr, flush=True)
        try:
            while True:
                conn, _ = listener.accept()
                with conn:
                    rfile = conn.makefile("rb")
                    wfile = conn.makefile("wb")
                    server.serve_stream(rfile, wfile)
        finally:
            listener.close()
    else:
        raise ValueError(f"unknown transport {config.transport!r}")
