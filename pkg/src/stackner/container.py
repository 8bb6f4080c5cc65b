"""Self-describing binary container for trained models.

A container is a zip archive holding

* ``MANIFEST.json`` — format name/version, a model ``kind`` tag and any
  JSON-serializable metadata (vocabularies, label inventories, dims);
* ``tensors/<name>.npy`` — one block per tensor. The npy header records
  dtype (with explicit endianness, e.g. ``<f8``) and shape, giving
  bit-exact round trips.
"""
from __future__ import annotations

import io
import json
import zipfile

import numpy as np

FORMAT_NAME = "stackner-container"
FORMAT_VERSION = 1


def save_container(path, manifest: dict, tensors: dict[str, np.ndarray]) -> None:
    header = {"format": FORMAT_NAME, "version": FORMAT_VERSION}
    header.update(manifest)
    with zipfile.ZipFile(path, "w", compression=zipfile.ZIP_DEFLATED) as zf:
        zf.writestr("MANIFEST.json", json.dumps(header, ensure_ascii=False, indent=1))
        for name, arr in tensors.items():
            buf = io.BytesIO()
            np.save(buf, np.ascontiguousarray(arr), allow_pickle=False)
            zf.writestr(f"tensors/{name}.npy", buf.getvalue())


def load_container(path) -> tuple[dict, dict[str, np.ndarray]]:
    with zipfile.ZipFile(path, "r") as zf:
        manifest = json.loads(zf.read("MANIFEST.json").decode("utf-8"))
        if manifest.get("format") != FORMAT_NAME:
            raise ValueError(f"{path}: not a {FORMAT_NAME} file")
        if manifest.get("version") != FORMAT_VERSION:
            raise ValueError(f"{path}: unsupported container version {manifest.get('version')}")
        tensors = {}
        for info in zf.infolist():
            if info.filename.startswith("tensors/") and info.filename.endswith(".npy"):
                name = info.filename[len("tensors/"):-len(".npy")]
                tensors[name] = np.load(io.BytesIO(zf.read(info)), allow_pickle=False)
    return manifest, tensors


def expect_kind(manifest: dict, kind: str, path) -> None:
    if manifest.get("kind") != kind:
        raise ValueError(f"{path}: expected a {kind!r} container, found {manifest.get('kind')!r}")
