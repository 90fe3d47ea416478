"""Adapter acceptance: golden-transcript conformance and a live run where
the training engine drives this adapter over TCP, matching its own
in-process frequency model trial for trial."""

import json
import re
import subprocess
import sys
import time
from pathlib import Path

import pytest

ADAPTER_ROOT = Path(__file__).resolve().parent.parent
PRIMARY_ROOT = ADAPTER_ROOT.parent
TRANSCRIPT_DIR = PRIMARY_ROOT / "docs" / "bridge-transcripts"
TRANSCRIPT_NAMES = sorted(p.name.removesuffix(".requests.jsonl") for p in TRANSCRIPT_DIR.glob("*.requests.jsonl"))


@pytest.mark.parametrize("name", TRANSCRIPT_NAMES)
def test_golden_transcript_conformance(name, tmp_path):
    from bridge_adapter.models import EchoFrequencyModel
    from bridge_adapter.server import AdapterServer

    requests = (TRANSCRIPT_DIR / f"{name}.requests.jsonl").read_text().splitlines()
    expected = (TRANSCRIPT_DIR / f"{name}.responses.jsonl").read_text().splitlines()
    server = AdapterServer(EchoFrequencyModel(), tmp_path / "snaps")
    got = [server.handle_line(line) for line in requests]
    assert got == expected, f"byte-level transcript mismatch in {name!r}"


def _spawn_adapter_tcp(tmp_path):
    proc = subprocess.Popen(
        [
            sys.executable,
            "-m",
            "bridge_adapter.cli",
            "--transport",
            "tcp:127.0.0.1:0",
            "--model",
            "echo-freq",
            "--snapshot-dir",
            str(tmp_path / "snaps"),
        ],
        stderr=subprocess.PIPE,
    )
    line = proc.stderr.readline().decode()
    match = re.search(r"listening on 127\.0\.0\.1:(\d+)", line)
    assert match, f"adapter did not report a port: {line!r}"
    return proc, int(match.group(1))


def _run_primary_search(model_spec: str, out_path: Path):
    cmd = [
        sys.executable,
        "-m",
        "rtfm.cli",
        "search",
        "--model",
        model_spec,
        "--baselines",
        "knn",
        "--n-trials",
        "5",
        "--n-ds",
        "2",
        "--n-train",
        "32",
        "--n-test",
        "16",
        "--strategy",
        "random",
        "--seed",
        "11",
        "--workers",
        "1",
        "--out",
        str(out_path),
    ]
    subprocess.run(cmd, check=True, cwd=PRIMARY_ROOT, timeout=300)
    return [json.loads(line) for line in out_path.read_text().splitlines()]


def test_search_through_bridge_matches_native_frequency_model(tmp_path):
    proc, port = _spawn_adapter_tcp(tmp_path)
    try:
        bridged = _run_primary_search(f"bridge:127.0.0.1:{port}", tmp_path / "bridged.jsonl")
    finally:
        proc.terminate()
        proc.wait(timeout=10)
    native = _run_primary_search("freq", tmp_path / "native.jsonl")

    assert len(bridged) == len(native) == 5
    for b, n in zip(bridged, native):
        assert b["theta"] == n["theta"]
        assert b["failed"] == n["failed"]
        assert abs(b["gap"] - n["gap"]) <= 1e-6
        for gb, gn in zip(b["per_dataset_gaps"], n["per_dataset_gaps"]):
            assert abs(gb - gn) <= 1e-6
