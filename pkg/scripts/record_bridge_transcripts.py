#!/usr/bin/env python3
"""Record golden protocol transcripts against the reference server.

Writes docs/bridge-transcripts/<name>.requests.jsonl and the matching
<name>.responses.jsonl. Any conforming server implementation must
reproduce the response files byte-for-byte when fed the request files.

Usage: python scripts/record_bridge_transcripts.py
"""

from __future__ import annotations

import sys
from pathlib import Path

REPO = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(REPO / "src"))

from rtfm.bridge import BridgeServer  # noqa: E402
from rtfm.canonical import canonical_dumps  # noqa: E402
from rtfm.dataset_io import dataset_payload  # noqa: E402
from rtfm.gap import FrequencyPredictor  # noqa: E402
from rtfm.generator import generate_dataset  # noqa: E402
from rtfm.theta import ThetaParams  # noqa: E402

OUT_DIR = REPO / "docs" / "bridge-transcripts"

THETA = ThetaParams(1, 25, 4, 0.5, 0.5, 0.4, "tanh", "normal")


def record(name: str, request_lines: list[str]) -> None:
    server = BridgeServer(FrequencyPredictor())
    responses = [server.handle_line(line) for line in request_lines]
    (OUT_DIR / f"{name}.requests.jsonl").write_text("".join(l + "\n" for l in request_lines))
    (OUT_DIR / f"{name}.responses.jsonl").write_text("".join(l + "\n" for l in responses))
    print(f"recorded {name}: {len(request_lines)} exchanges")


def main() -> None:
    OUT_DIR.mkdir(parents=True, exist_ok=True)

    ds_missing = generate_dataset(THETA, 4242, 48, 24)  # has masked train cells
    ds_plain = generate_dataset(ThetaParams(0, 2, 2, 0.0, 0.0, 0.0, "identity", "uniform"), 7, 24, 12)

    record(
        "liveness",
        [
            canonical_dumps({"id": 1, "kind": "PING"}),
            canonical_dumps({"id": 2, "kind": "PING"}),
        ],
    )

    record(
        "predict",
        [
            canonical_dumps({"id": 1, "kind": "PREDICT", "dataset": dataset_payload(ds_plain)}),
            canonical_dumps({"id": 2, "kind": "PREDICT", "dataset": dataset_payload(ds_missing)}),
        ],
    )

    record(
        "training-and-snapshots",
        [
            canonical_dumps({"id": 1, "kind": "SNAPSHOT"}),
            canonical_dumps(
                {
                    "id": 2,
                    "kind": "TRAIN_STEP",
                    "datasets": [dataset_payload(ds_plain), dataset_payload(ds_missing)],
                    "lr": 0.05,
                }
            ),
            canonical_dumps({"id": 3, "kind": "SNAPSHOT"}),
            canonical_dumps({"id": 4, "kind": "RESTORE", "snapshot_id": "snap-1"}),
            canonical_dumps({"id": 5, "kind": "PREDICT", "dataset": dataset_payload(ds_plain)}),
        ],
    )

    record(
        "errors",
        [
            canonical_dumps({"id": 1, "kind": "RESTORE", "snapshot_id": "snap-99"}),
            canonical_dumps({"id": 2, "kind": "FROBNICATE"}),
            "{this is not json",
            canonical_dumps({"id": 3, "kind": "PING"}),
        ],
    )


if __name__ == "__main__":
    main()
