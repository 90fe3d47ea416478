"""Run manifests: resolved config, derived seeds, and file inventory."""

from __future__ import annotations

from pathlib import Path

from . import __version__
from .canonical import canonical_dumps, file_hash
from .seeding import derive_seed


def build_manifest(config: dict, root_seed: int, stages: list[tuple[str, int]], out_dir) -> dict:
    """Assemble the manifest for a finished run.

    ``stages`` lists (stage name, index) pairs whose derived seeds are
    recorded; the file inventory covers everything under ``out_dir``
    except the manifest itself.
    """
    out_dir = Path(out_dir)
    files = {}
    for path in sorted(out_dir.rglob("*")):
        if path.is_file() and path.name != "manifest.json":
            files[str(path.relative_to(out_dir))] = file_hash(path)
    return {
        "version": __version__,
        "config": config,
        "root_seed": int(root_seed),
        "derived_seeds": {f"{name}/{index}": derive_seed(root_seed, name, index) for name, index in stages},
        "files": files,
    }


def write_manifest(manifest: dict, out_dir) -> Path:
    path = Path(out_dir) / "manifest.json"
    path.write_text(canonical_dumps(manifest) + "\n")
    return path
