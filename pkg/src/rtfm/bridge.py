"""Newline-delimited JSON protocol for hosting the predictor out of process.

One JSON object per line, requests carrying a strictly increasing ``id``
echoed by every response. Kinds:

    PREDICT{dataset}        -> PROBS{probs}
    TRAIN_STEP{datasets,lr} -> LOSS{loss}
    SNAPSHOT{}              -> SNAPSHOT_ID{snapshot_id}
    RESTORE{snapshot_id}    -> OK / ERROR{not_found}
    PING{}                  -> OK

Malformed lines get ERROR{parse} (id null) and the server keeps going.
Exactly one request is in flight per connection. See
docs/bridge-protocol.md for byte-level examples.
"""

from __future__ import annotations

import os
import select
import socket
import subprocess
import threading
import json

import numpy as np

from .canonical import canonical_dumps
from .dataset_io import dataset_from_payload, dataset_payload
from .gap import Predictor
from .generator import TabularDataset
from .probs import clip_and_renormalize

DEFAULT_TIMEOUT_SECS = 60.0


def bridge_timeout() -> float:
    env = os.environ.get("RTFM_BRIDGE_TIMEOUT_SECS")
    return float(env) if env else DEFAULT_TIMEOUT_SECS


class BridgeError(RuntimeError):
    pass


class BridgeTimeoutError(BridgeError):
    pass


class BridgeProtocolError(BridgeError):
    pass


class BridgeRemoteError(BridgeError):
    def __init__(self, code: str, message: str):
        super().__init__(f"bridge ERROR[{code}]: {message}")
        self.code = code
        self.remote_message = message


class LineChannel:
    """Line-oriented byte channel over raw file descriptors.

    Reading uses select() on the fd with its own buffer, so timeouts work
    identically for pipes and sockets.
    """

    def __init__(self, read_fd: int, write_fd: int, owner=None):
        self._read_fd = read_fd
        self._write_fd = write_fd
        self._buffer = b""
        self._owner = owner  # keeps a socket/process alive
        self._closed = False

    def send_line(self, line: str) -> None:
        data = line.encode("utf-8") + b"\n"
        try:
            while data:
                sent = os.write(self._write_fd, data)
                data = data[sent:]
        except OSError as err:  # peer gone: surfaces as a bridge failure
            raise BridgeTimeoutError(f"bridge-timeout: connection broken on send ({err})") from err

    def recv_line(self, timeout: float | None) -> str:
        while b"\n" not in self._buffer:
            try:
                ready, _, _ = select.select([self._read_fd], [], [], timeout)
                if not ready:
                    raise BridgeTimeoutError(f"bridge-timeout after {timeout}s")
                chunk = os.read(self._read_fd, 1 << 16)
            except OSError as err:
                raise BridgeTimeoutError(f"bridge-timeout: connection broken on receive ({err})") from err
            if not chunk:
                raise BridgeTimeoutError("bridge-timeout: connection closed mid-request")
            self._buffer += chunk
        line, self._buffer = self._buffer.split(b"\n", 1)
        return line.decode("utf-8")

    def close(self) -> None:
        if self._closed:
            return
        self._closed = True
        for fd in {self._read_fd, self._write_fd}:
            try:
                os.close(fd)
            except OSError:
                pass
        if hasattr(self._owner, "close"):
            try:
                self._owner.close()
            except OSError:
                pass


def connect_tcp(host: str, port: int, timeout: float | None = None) -> LineChannel:
    sock = socket.create_connection((host, port), timeout=timeout or bridge_timeout())
    sock.setblocking(True)
    fd = sock.fileno()
    return LineChannel(os.dup(fd), os.dup(fd), owner=sock)


def spawn_stdio(cmd: list[str]) -> tuple[LineChannel, subprocess.Popen]:
    proc = subprocess.Popen(cmd, stdin=subprocess.PIPE, stdout=subprocess.PIPE)
    return LineChannel(proc.stdout.fileno(), proc.stdin.fileno(), owner=None), proc


class BridgeClient:
    """Single-connection protocol client; one request in flight at a time."""

    def __init__(self, channel: LineChannel, timeout: float | None = None):
        self._channel = channel
        self._timeout = bridge_timeout() if timeout is None else timeout
        self._next_id = 1
        self._lock = threading.RLock()

    @property
    def lock(self) -> threading.RLock:
        return self._lock

    def request(self, kind: str, **fields) -> dict:
        with self._lock:
            req_id = self._next_id
            self._next_id += 1
            msg = {"id": req_id, "kind": kind, **fields}
            self._channel.send_line(canonical_dumps(msg))
            line = self._channel.recv_line(self._timeout)
        try:
            resp = json.loads(line)
        except json.JSONDecodeError as err:
            raise BridgeProtocolError(f"unparseable response: {err}") from err
        if resp.get("id") != req_id:
            raise BridgeProtocolError(f"response id {resp.get('id')} does not echo request id {req_id}")
        if resp.get("kind") == "ERROR":
            raise BridgeRemoteError(resp.get("code", "unknown"), resp.get("message", ""))
        return resp

    def ping(self) -> None:
        resp = self.request("PING")
        if resp.get("kind") != "OK":
            raise BridgeProtocolError(f"unexpected PING response {resp.get('kind')}")

    def predict(self, data: TabularDataset) -> np.ndarray:
        resp = self.request("PREDICT", dataset=dataset_payload(data))
        if resp.get("kind") != "PROBS":
            raise BridgeProtocolError(f"expected PROBS, got {resp.get('kind')}")
        probs = np.asarray(resp["probs"], dtype=np.float64)
        expected = (len(data.test_indices), data.n_classes)
        if probs.shape != expected:
            raise BridgeProtocolError(f"PROBS shape {probs.shape} != expected {expected}")
        return clip_and_renormalize(probs)

    def train_step(self, batch: list[TabularDataset], lr: float) -> float:
        resp = self.request("TRAIN_STEP", datasets=[dataset_payload(d) for d in batch], lr=lr)
        if resp.get("kind") != "LOSS":
            raise BridgeProtocolError(f"expected LOSS, got {resp.get('kind')}")
        return float(resp["loss"])

    def snapshot(self) -> str:
        resp = self.request("SNAPSHOT")
        if resp.get("kind") != "SNAPSHOT_ID":
            raise BridgeProtocolError(f"expected SNAPSHOT_ID, got {resp.get('kind')}")
        return str(resp["snapshot_id"])

    def restore(self, snapshot_id: str) -> None:
        resp = self.request("RESTORE", snapshot_id=snapshot_id)
        if resp.get("kind") != "OK":
            raise BridgeProtocolError(f"unexpected RESTORE response {resp.get('kind')}")

    def close(self) -> None:
        self._channel.close()


def remote_predict(client: BridgeClient, data: TabularDataset) -> np.ndarray:
    """Round-trip a dataset through PREDICT, renormalizing the result."""
    return client.predict(data)


class BridgePredictor(Predictor):
    """Predictor backed by a live bridge connection."""

    def __init__(self, client: BridgeClient, description: str = "bridge"):
        self.client = client
        self.description = description

    def predict(self, data: TabularDataset) -> np.ndarray:
        return self.client.predict(data)

    def train_step(self, batch: list[TabularDataset], lr: float) -> float:
        return self.client.train_step(batch, lr)

    def snapshot(self) -> dict:
        return {"snapshot_id": self.client.snapshot()}

    def restore(self, snap: dict) -> None:
        self.client.restore(snap["snapshot_id"])

    def frozen_copy(self) -> Predictor:
        return SnapshotRestoringPredictor(self.client, self.client.snapshot())

    def frozen_from_snapshot(self, snap: dict) -> Predictor:
        return SnapshotRestoringPredictor(self.client, snap["snapshot_id"])


class SnapshotRestoringPredictor(Predictor):
    """Predicts with an earlier server-side snapshot, restoring the live
    state afterwards. Used when the original remote model joins the
    baseline set while training continues on the same connection."""

    description = "bridge-frozen"

    def __init__(self, client: BridgeClient, snapshot_id: str):
        self._client = client
        self._snapshot_id = snapshot_id

    def predict(self, data: TabularDataset) -> np.ndarray:
        with self._client.lock:
            current = self._client.snapshot()
            self._client.restore(self._snapshot_id)
            try:
                probs = self._client.predict(data)
            finally:
                self._client.restore(current)
        return probs

    def snapshot(self) -> dict:
        return {"snapshot_id": self._snapshot_id}


class BridgeServer:
    """Serves a predictor over the line protocol."""

    def __init__(self, predictor):
        self._predictor = predictor
        self._snapshots: dict[str, dict] = {}
        self._snapshot_counter = 0

    def handle_line(self, line: str) -> str:
        """Process one request line, returning the response line."""
        try:
            req = json.loads(line)
            if not isinstance(req, dict):
                raise ValueError("request must be an object")
        except ValueError:
            # fixed message: parse errors must be byte-identical across
            # server implementations for transcript conformance
            return canonical_dumps({"id": None, "kind": "ERROR", "code": "parse", "message": "malformed JSON line"})
        req_id = req.get("id")
        kind = req.get("kind")
        try:
            return canonical_dumps(self._dispatch(req_id, kind, req))
        except BridgeRemoteError as err:
            return canonical_dumps(
                {"id": req_id, "kind": "ERROR", "code": err.code, "message": err.remote_message}
            )
        except Exception as err:  # predictor bugs must not kill the server
            return canonical_dumps(
                {"id": req_id, "kind": "ERROR", "code": "model_error", "message": str(err)}
            )

    def _dispatch(self, req_id, kind, req) -> dict:
        if kind == "PING":
            return {"id": req_id, "kind": "OK"}
        if kind == "PREDICT":
            data = dataset_from_payload(req["dataset"])
            probs = clip_and_renormalize(np.asarray(self._predictor.predict(data), dtype=np.float64))
            return {"id": req_id, "kind": "PROBS", "probs": [[float(v) for v in row] for row in probs]}
        if kind == "TRAIN_STEP":
            batch = [dataset_from_payload(p) for p in req["datasets"]]
            loss = self._predictor.train_step(batch, float(req["lr"]))
            return {"id": req_id, "kind": "LOSS", "loss": float(loss)}
        if kind == "SNAPSHOT":
            self._snapshot_counter += 1
            snap_id = f"snap-{self._snapshot_counter}"
            self._snapshots[snap_id] = self._predictor.snapshot()
            return {"id": req_id, "kind": "SNAPSHOT_ID", "snapshot_id": snap_id}
        if kind == "RESTORE":
            snap_id = req.get("snapshot_id")
            if snap_id not in self._snapshots:
                raise BridgeRemoteError("not_found", f"unknown snapshot_id {snap_id!r}")
            self._predictor.restore(self._snapshots[snap_id])
            return {"id": req_id, "kind": "OK"}
        return {"id": req_id, "kind": "ERROR", "code": "unsupported", "message": f"unknown kind {kind!r}"}

    def serve_channel(self, channel: LineChannel) -> None:
        """Answer requests until the peer closes the stream."""
        while True:
            try:
                line = channel.recv_line(None)
            except BridgeTimeoutError:
                return
            if not line.strip():
                continue
            channel.send_line(self.handle_line(line))


def serve(predictor, transport: str) -> None:
    """Host a predictor on ``stdio`` or ``tcp:HOST:PORT`` until shutdown.

    The TCP listener handles one connection at a time (the protocol is
    strictly sequential per connection) and keeps accepting until the
    process is stopped.
    """
    server = BridgeServer(predictor)
    if transport == "stdio":
        channel = LineChannel(0, 1)
        server.serve_channel(channel)
        return
    if transport.startswith("tcp:"):
        _, host, port = transport.split(":")
        listener = socket.create_server((host, int(port)))
        try:
            while True:
                conn, _ = listener.accept()
                fd = conn.fileno()
                channel = LineChannel(os.dup(fd), os.dup(fd), owner=conn)
                try:
                    server.serve_channel(channel)
                finally:
                    channel.close()
        finally:
            listener.close()
    else:
        raise ValueError(f"unknown transport {transport!r}")
