"""Record files, state/report JSON and content digests.

Formats:

* homodyne CSV, header ``phase,quadrature``
* spin CSV, header ``ax,ay,az,bx,by,bz``
* click JSON ``{"n_total": N, "n_clicks": Nc}``
* density JSON ``{"dim": d, "re": [...], "im": [...]}`` (row-major, flattened)

Floats are written with ``repr`` (shortest round-trip form, ``.`` decimal
point regardless of locale), so re-reading a file restores the exact values.
"""

from __future__ import annotations

import hashlib
import json
import os
import warnings
from pathlib import Path
from typing import Union

import numpy as np

from .povm import ClickSummary, HomodyneData, SpinData
from .states import DensityMatrix

FORMAT_VERSION = 1
HOMODYNE_HEADER = "phase,quadrature"
SPIN_HEADER = "ax,ay,az,bx,by,bz"


class DataFormatError(ValueError):
    pass


def _atomic_write(path, text: str):
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    os.replace(tmp, path)


def dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=True) + "\n"


def write_json(path, obj):
    _atomic_write(path, dumps(obj))


def read_json(path):
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def write_homodyne_csv(path, data: HomodyneData):
    lines = [HOMODYNE_HEADER]
    lines += [f"{p!r},{x!r}" for p, x in zip(data.phase.tolist(), data.x.tolist())]
    _atomic_write(path, "\n".join(lines) + "\n")


def write_spin_csv(path, data: SpinData):
    rows = np.hstack([data.omega_a, data.omega_b]).tolist()
    lines = [SPIN_HEADER] + [",".join(repr(v) for v in row) for row in rows]
    _atomic_write(path, "\n".join(lines) + "\n")


def write_clicks_json(path, s: ClickSummary):
    write_json(path, {"n_total": s.n_total, "n_clicks": s.n_clicks})


def write_density_json(path, rho: DensityMatrix):
    write_json(path, rho.to_dict())


def read_density_json(path) -> DensityMatrix:
    try:
        return DensityMatrix.from_dict(read_json(path))
    except (KeyError, TypeError, ValueError) as exc:
        raise DataFormatError(f"{path}: not a density-matrix file ({exc})") from exc


def _read_csv(path, header, ncols):
    with open(path, encoding="utf-8") as fh:
        first = fh.readline().strip()
        if first != header:
            raise DataFormatError(f"{path}: expected header {header!r}, got {first!r}")
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", UserWarning)  # empty files are fine
                arr = np.loadtxt(fh, delimiter=",", ndmin=2, dtype=float)
        except ValueError as exc:
            raise DataFormatError(f"{path}: {exc}") from exc
    if arr.size == 0:
        arr = arr.reshape(0, ncols)
    if arr.shape[1] != ncols:
        raise DataFormatError(f"{path}: expected {ncols} columns")
    return arr


def read_homodyne_csv(path) -> HomodyneData:
    arr = _read_csv(path, HOMODYNE_HEADER, 2)
    return HomodyneData(arr[:, 0], arr[:, 1])


def read_spin_csv(path) -> SpinData:
    arr = _read_csv(path, SPIN_HEADER, 6)
    try:
        return SpinData(arr[:, :3], arr[:, 3:])
    except ValueError as exc:
        raise DataFormatError(f"{path}: {exc}") from exc


def read_clicks_json(path) -> ClickSummary:
    try:
        d = read_json(path)
        return ClickSummary(int(d["n_total"]), int(d["n_clicks"]))
    except (KeyError, TypeError, ValueError) as exc:
        raise DataFormatError(f"{path}: not a click-summary file ({exc})") from exc


Records = Union[HomodyneData, SpinData, ClickSummary]


def read_records(path) -> Records:
    """Read any record file, recognizing the format from its first line."""
    with open(path, encoding="utf-8") as fh:
        first = fh.readline().strip()
    if first == HOMODYNE_HEADER:
        return read_homodyne_csv(path)
    if first == SPIN_HEADER:
        return read_spin_csv(path)
    if first.startswith("{"):
        return read_clicks_json(path)
    raise DataFormatError(f"{path}: unrecognized data format")


def write_records(path, data: Records):
    if isinstance(data, HomodyneData):
        write_homodyne_csv(path, data)
    elif isinstance(data, SpinData):
        write_spin_csv(path, data)
    elif isinstance(data, ClickSummary):
        write_clicks_json(path, data)
    else:
        raise TypeError(f"cannot write {type(data).__name__}")


def sidecar(path, suffix: str) -> Path:
    path = Path(path)
    return path.with_name(path.name + suffix)


def write_dataset(path, data: Records, sampler_config: dict, state: dict, extra=None) -> Path:
    """Write a record file plus its ``.manifest.json`` sidecar; returns the manifest path."""
    write_records(path, data)
    manifest = {
        "format_version": FORMAT_VERSION,
        "seed": sampler_config.get("seed"),
        "n_samples": sampler_config.get("n_samples"),
        "eta": sampler_config.get("eta"),
        "state": state,
        "sampler": sampler_config,
        "outputs": {Path(path).name: sha256_file(path)},
    }
    if extra:
        manifest.update(extra)
    mpath = sidecar(path, ".manifest.json")
    write_json(mpath, manifest)
    return mpath
