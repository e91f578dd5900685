"""Dataset registry: bundled synthetic problems and fetchable benchmark files.

Benchmark files are not vendored. ``fetch_data`` downloads a source file,
converts it to the canonical CSV layout (header row, target last) under the
data directory and records the SHA-256 of the download in
``checksums.json``; later fetches must reproduce the recorded digest.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import os
import urllib.request
import zipfile
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

from ..data import Dataset, load_csv
from ..errors import ConfigError, ResolutionError
from .synthetic import SyntheticSpec, generate_synthetic

DATA_DIR_ENV = "PENVF_DATA_DIR"
UCI = "https://archive.ics.uci.edu/ml/machine-learning-databases"


def data_dir(override: str | os.PathLike | None = None) -> Path:
    if override is not None:
        return Path(override)
    return Path(os.environ.get(DATA_DIR_ENV, "data"))


@dataclass(frozen=True)
class BundledDataset:
    spec: SyntheticSpec
    learn: int

    @property
    def learn_fraction(self) -> float:
        return self.learn / self.spec.n


BUNDLED = {
    "synth-sine": BundledDataset(SyntheticSpec("sine", 2000, d=2, noise=0.3, seed=101), 1000),
    "synth-linear-hetero": BundledDataset(
        SyntheticSpec("linear_hetero", 2000, d=5, noise=0.5, seed=102), 1000
    ),
    "synth-friedman1": BundledDataset(SyntheticSpec("friedman1", 2000, d=10, noise=1.0, seed=103), 1000),
    "synth-friedman2": BundledDataset(SyntheticSpec("friedman2", 2000, d=4, noise=100.0, seed=104), 1000),
    "synth-friedman3": BundledDataset(SyntheticSpec("friedman3", 2000, d=4, noise=0.1, seed=105), 1000),
    "synth-abalone": BundledDataset(SyntheticSpec("abalone_like", 4177, d=8, noise=1.0, seed=106), 835),
    "synth-step": BundledDataset(SyntheticSpec("step", 2000, d=4, noise=0.5, seed=107), 1000),
}


def _rows_to_csv(header: list[str], rows: list[list[str]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def convert_abalone(raw: bytes) -> str:
    sex = {"M": "0", "F": "1", "I": "2"}
    rows = []
    for line in raw.decode("utf-8").splitlines():
        if not line.strip():
            continue
        cells = line.strip().split(",")
        rows.append([sex[cells[0]]] + cells[1:])
    header = ["sex", "length", "diameter", "height", "whole", "shucked", "viscera", "shell", "rings"]
    return _rows_to_csv(header, rows)


def convert_semicolon(raw: bytes) -> str:
    lines = [ln for ln in raw.decode("utf-8").splitlines() if ln.strip()]
    header = [h.strip().strip('"') for h in lines[0].split(";")]
    return _rows_to_csv(header, [ln.split(";") for ln in lines[1:]])


def _convert_parkinsons(target: str) -> Callable[[bytes], str]:
    def convert(raw: bytes) -> str:
        reader = csv.reader(io.StringIO(raw.decode("utf-8")))
        header = [h.strip() for h in next(reader)]
        t = header.index(target)
        drop = {header.index("motor_UPDRS"), header.index("total_UPDRS")}
        keep = [k for k in range(len(header)) if k not in drop]
        rows = [[r[k] for k in keep] + [r[t]] for r in reader if r]
        return _rows_to_csv([header[k] for k in keep] + [target], rows)

    return convert


def convert_slice(raw: bytes) -> str:
    with zipfile.ZipFile(io.BytesIO(raw)) as zf:
        member = next(n for n in zf.namelist() if n.endswith(".csv"))
        return zf.read(member).decode("utf-8")


def convert_concrete(raw: bytes) -> str:
    import pandas as pd  # optional; also needs xlrd for .xls

    frame = pd.read_excel(io.BytesIO(raw))
    return frame.to_csv(index=False)


@dataclass(frozen=True)
class RemoteDataset:
    learn: int
    test: int
    d: int
    url: str | None
    convert: Callable[[bytes], str] | None
    note: str = ""

    @property
    def learn_fraction(self) -> float:
        return self.learn / (self.learn + self.test)


REMOTE = {
    "abalone": RemoteDataset(835, 3342, 8, f"{UCI}/abalone/abalone.data", convert_abalone),
    "winequality-red": RemoteDataset(
        1066, 533, 11, f"{UCI}/wine-quality/winequality-red.csv", convert_semicolon
    ),
    "winequality-white": RemoteDataset(
        3265, 1633, 11, f"{UCI}/wine-quality/winequality-white.csv", convert_semicolon
    ),
    "parkinsons-motor": RemoteDataset(
        2937, 2938, 20, f"{UCI}/parkinsons/telemonitoring/parkinsons_updrs.data",
        _convert_parkinsons("motor_UPDRS"),
    ),
    "parkinsons-total": RemoteDataset(
        2937, 2938, 20, f"{UCI}/parkinsons/telemonitoring/parkinsons_updrs.data",
        _convert_parkinsons("total_UPDRS"),
    ),
    "slice-loc": RemoteDataset(
        26750, 26750, 385, f"{UCI}/00206/slice_localization_data.zip", convert_slice
    ),
    "concrete": RemoteDataset(
        309, 721, 8, f"{UCI}/concrete/compressive/Concrete_Data.xls", convert_concrete,
        "needs pandas with xlrd to read the .xls source",
    ),
    "add10": RemoteDataset(2937, 6855, 10, None, None, "DELVE add10"),
    "comp-activ": RemoteDataset(2457, 5735, 22, None, None, "DELVE comp-activ (cpu task)"),
    "pumadyn-32nh": RemoteDataset(3276, 4916, 32, None, None, "DELVE pumadyn-32nh"),
}


def fetch_instructions(name: str, root: Path) -> str:
    target = root / f"{name}.csv"
    if name in REMOTE and REMOTE[name].url:
        return f"run `penvf fetch-data {name}` (writes {target}; set ${DATA_DIR_ENV} to relocate)"
    return (
        f"place a numeric CSV with a header row and the target in the last column at {target}"
        f" (set ${DATA_DIR_ENV} to relocate)"
    )


def _download(url: str) -> bytes:
    with urllib.request.urlopen(url, timeout=120) as resp:  # noqa: S310 - fixed registry URLs
        return resp.read()


def fetch_data(name: str, root: str | os.PathLike | None = None, download=_download) -> Path:
    """Download and convert a registered dataset; returns the canonical CSV path."""
    if name not in REMOTE:
        raise ResolutionError(f"unknown dataset {name!r}; registered: {sorted(REMOTE)}")
    src = REMOTE[name]
    root = data_dir(root)
    if src.url is None or src.convert is None:
        raise ResolutionError(f"{name} ({src.note}) has no download source: {fetch_instructions(name, root)}")
    raw = download(src.url)
    digest = hashlib.sha256(raw).hexdigest()
    root.mkdir(parents=True, exist_ok=True)
    manifest = root / "checksums.json"
    known = json.loads(manifest.read_text()) if manifest.exists() else {}
    if src.url in known and known[src.url] != digest:
        raise ResolutionError(
            f"checksum mismatch for {src.url}: expected {known[src.url]}, got {digest}"
        )
    known[src.url] = digest
    manifest.write_text(json.dumps(known, indent=2, sort_keys=True) + "\n")
    out = root / f"{name}.csv"
    out.write_text(src.convert(raw), encoding="utf-8")
    return out


def resolve_dataset(
    name: str, root: str | os.PathLike | None = None, learn_fraction: float | None = None
) -> tuple[Dataset, float]:
    """Dataset and learn fraction for a bundled or on-disk name."""
    if name in BUNDLED:
        b = BUNDLED[name]
        return generate_synthetic(b.spec, name), learn_fraction or b.learn_fraction
    root = data_dir(root)
    path = root / f"{name}.csv"
    if not path.exists():
        raise ResolutionError(f"dataset {name!r} not found: {fetch_instructions(name, root)}")
    ds = load_csv(path, name)
    if learn_fraction is None:
        if name not in REMOTE:
            raise ConfigError(f"dataset {name!r} is not registered; give learn_fraction explicitly")
        learn_fraction = REMOTE[name].learn_fraction
    return ds, learn_fraction


def list_datasets() -> list[str]:
    return list(BUNDLED) + list(REMOTE)
