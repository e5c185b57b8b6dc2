"""Checkpoint container: a zip of named little-endian float arrays (.npy)
plus a JSON manifest with config, step, and RNG state."""

from __future__ import annotations

import io
import json
import zipfile
from pathlib import Path

import numpy as np

FORMAT_VERSION = 1


def save_checkpoint(path: str | Path, manifest: dict,
                    arrays: dict[str, np.ndarray]) -> None:
    manifest = dict(manifest, format_version=FORMAT_VERSION)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with zipfile.ZipFile(path, "w", zipfile.ZIP_STORED) as zf:
        zf.writestr("manifest.json", json.dumps(manifest, indent=1))
        for name, arr in arrays.items():
            arr = np.asarray(arr)
            if not arr.flags.c_contiguous:
                # note: ascontiguousarray promotes 0-d to 1-d, keep the shape
                arr = np.ascontiguousarray(arr).reshape(arr.shape)
            buf = io.BytesIO()
            np.save(buf, arr)
            zf.writestr(f"arrays/{name}.npy", buf.getvalue())


def load_checkpoint(path: str | Path) -> tuple[dict, dict[str, np.ndarray]]:
    with zipfile.ZipFile(path) as zf:
        manifest = json.loads(zf.read("manifest.json"))
        if manifest.get("format_version") != FORMAT_VERSION:
            raise IOError(f"{path}: unsupported checkpoint format "
                          f"{manifest.get('format_version')}")
        arrays = {}
        for info in zf.namelist():
            if info.startswith("arrays/") and info.endswith(".npy"):
                name = info[len("arrays/"):-len(".npy")]
                arrays[name] = np.load(io.BytesIO(zf.read(info)))
    return manifest, arrays
