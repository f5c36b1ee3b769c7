"""Synthetic benchmark construction and CSV/JSON artifact I/O.

Datasets are written as plain CSV (comma separator, ``.`` decimal point,
LF line endings) with a header row ``x0..x{p-1}[,label]``. Ground truth
lives in sidecar files (``*.atrue.csv``, ``*.ztrue.csv``). Numbers are
serialized with 17 significant digits so round-trips are bit-exact.
Models are serialized as versioned JSON.
"""

from __future__ import annotations

import csv
import io
import json
import os
from dataclasses import dataclass, replace

import numpy as np

from . import prob_aa
from .errors import (
    IoError,
    MissingGroundTruth,
    ParameterError,
    ParseError,
    SchemaVersionError,
)
from .numerics import rng_create, simplex_vertices

SCHEMA_VERSION = 1

# spread of the latent archetype polytope before embedding; large enough
# that the exp warp bends the manifold visibly but stays well-conditioned
ARCHETYPE_SCALE = 3.5
ARCHETYPE_JITTER = 0.25


@dataclass(frozen=True)
class SyntheticSpec:
    n: int
    p: int
    k: int
    sigma2: float = 0.05
    embed_seed: int = 0
    sample_seed: int = 1
    warp: str = "none"  # "none" or "exp"
    warp_dim: int = 0
    alpha: np.ndarray | None = None

    def __post_init__(self):
        if self.k < 1:
            raise ParameterError(f"k must be >= 1, got {self.k}")
        if self.k - 1 > self.p:
            raise ParameterError(
                f"intrinsic dimension k-1={self.k - 1} exceeds ambient p={self.p}"
            )
        if self.n < 0:
            raise ParameterError("n must be >= 0")
        if self.warp not in ("none", "exp"):
            raise ParameterError(f"unknown warp '{self.warp}'")
        if self.warp == "exp" and not (0 <= self.warp_dim < self.p):
            raise ParameterError(
                f"warp_dim={self.warp_dim} out of range for p={self.p}"
            )

    def to_dict(self) -> dict:
        d = {
            "n": self.n, "p": self.p, "k": self.k, "sigma2": self.sigma2,
            "embed_seed": self.embed_seed, "sample_seed": self.sample_seed,
            "warp": ({"kind": "exp", "dim": self.warp_dim}
                     if self.warp == "exp" else "none"),
        }
        if self.alpha is not None:
            d["alpha"] = list(np.asarray(self.alpha, float))
        return d

    @staticmethod
    def from_dict(d: dict) -> "SyntheticSpec":
        warp = d.get("warp", "none")
        if warp == "none" or warp is None:
            kind, dim = "none", 0
        elif isinstance(warp, dict):
            kind = warp.get("kind", "")
            if kind != "exp":
                raise ParameterError(f"unknown warp kind '{kind}' in field 'warp'")
            if "dim" not in warp:
                raise ParameterError("warp of kind 'exp' needs field 'warp.dim'")
            dim = int(warp["dim"])
        else:
            raise ParameterError(f"unknown warp '{warp}' in field 'warp'")
        alpha = d.get("alpha")
        return SyntheticSpec(
            n=int(d["n"]), p=int(d["p"]), k=int(d["k"]),
            sigma2=float(d.get("sigma2", 0.05)),
            embed_seed=int(d.get("embed_seed", 0)),
            sample_seed=int(d.get("sample_seed", 1)),
            warp=kind, warp_dim=dim,
            alpha=None if alpha is None else np.asarray(alpha, float),
        )


@dataclass
class Dataset:
    x: np.ndarray  # (n, p)
    a_true: np.ndarray | None = None  # (n, k)
    z_true: np.ndarray | None = None  # (k, p)
    labels: np.ndarray | None = None  # (n,)
    columns: list | None = None

    def __post_init__(self):
        n, p = self.x.shape
        if self.columns is None:
            self.columns = [f"x{j}" for j in range(p)]
        if len(self.columns) != p:
            raise ParameterError("column names do not match data width")
        if self.a_true is not None and self.a_true.shape[0] != n:
            raise ParameterError("A_true row count does not match X")
        if self.z_true is not None and self.a_true is not None \
                and self.z_true.shape[0] != self.a_true.shape[1]:
            raise ParameterError("Z_true row count does not match A_true width")
        if self.labels is not None and self.labels.shape != (n,):
            raise ParameterError("labels must be an n-vector")

    @property
    def n(self) -> int:
        return self.x.shape[0]

    @property
    def p(self) -> int:
        return self.x.shape[1]


def _embedding(p: int, q: int, seed: int) -> np.ndarray:
    """Deterministic random orthonormal rows (q, p) from a seeded QR."""
    rng = rng_create(seed)
    m = rng.standard_normal((p, p))
    qmat, r = np.linalg.qr(m)
    qmat = qmat * np.sign(np.diag(r))  # fix QR sign ambiguity
    return qmat[:, :q].T


def make_archetypes(spec: SyntheticSpec) -> np.ndarray:
    """Ground-truth archetypes: a jittered regular polytope in a (k-1)-dim
    subspace, rotated into p dimensions (all seeded)."""
    rng = rng_create(spec.embed_seed)
    if spec.k == 1:
        lat = np.zeros((1, 1))
        basis = _embedding(spec.p, 1, spec.embed_seed + 1)
        return ARCHETYPE_SCALE * rng.standard_normal((1, 1)) @ basis
    frame = simplex_vertices(spec.k)
    lat = ARCHETYPE_SCALE * (
        frame.vertices + ARCHETYPE_JITTER * rng.standard_normal(frame.vertices.shape)
    )
    basis = _embedding(spec.p, spec.k - 1, spec.embed_seed + 1)
    return lat @ basis


def apply_warp(spec: SyntheticSpec, x: np.ndarray) -> np.ndarray:
    if spec.warp == "none":
        return x
    out = x.copy()
    out[..., spec.warp_dim] = np.exp(out[..., spec.warp_dim])
    return out


def make_synthetic(spec: SyntheticSpec) -> Dataset:
    """Sample the benchmark dataset described by ``spec``.

    Ground-truth archetypes are retained, expressed in the same (possibly
    warped) space as the data.
    """
    z_true = make_archetypes(spec)
    cfg = prob_aa.ProbAaConfig(k=spec.k, z_true=z_true, sigma2=spec.sigma2,
                               alpha=spec.alpha)
    x, a_true = prob_aa.sample(cfg, spec.n, spec.sample_seed)
    return Dataset(
        x=apply_warp(spec, x),
        a_true=a_true,
        z_true=apply_warp(spec, z_true),
    )


def make_side_info(ds: Dataset, kind: str = "mixture_projection",
                   j: int = 0, w=None) -> Dataset:
    """Attach scalar labels derived from the true mixture weights."""
    if ds.a_true is None:
        raise MissingGroundTruth("side information needs A_true")
    k = ds.a_true.shape[1]
    if kind == "mixture_projection":
        if not (0 <= j < k):
            raise ParameterError(f"mixture index j={j} out of range for k={k}")
        labels = ds.a_true[:, j].copy()
    elif kind == "linear_combo":
        w = np.asarray(w, float)
        if w.shape != (k,):
            raise ParameterError(f"weight vector must have length k={k}")
        labels = ds.a_true @ w
    else:
        raise ParameterError(f"unknown side-information kind '{kind}'")
    return replace(ds, labels=labels)


# ---------------------------------------------------------------------------
# CSV serialization

def _fmt(v: float) -> str:
    return format(float(v), ".17g")


def atomic_write_text(path: str, text: str) -> None:
    """Write via a temp file + rename so failures never leave partial output."""
    tmp = f"{path}.tmp"
    try:
        with open(tmp, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc


def matrix_to_csv(m: np.ndarray, header: list) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in np.atleast_2d(m):
        writer.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def write_matrix_csv(m: np.ndarray, header: list, path: str) -> None:
    atomic_write_text(path, matrix_to_csv(m, header))


def read_matrix_csv(path: str):
    """Returns (matrix, header). Raises ParseError with a 1-based row number."""
    try:
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc
    if not rows:
        raise ParseError(f"{path}: empty file, expected a header row")
    header = rows[0]
    width = len(header)
    data = []
    for i, row in enumerate(rows[1:], start=2):
        if len(row) != width:
            raise ParseError(
                f"{path}: row {i} has {len(row)} columns, expected {width}"
            )
        try:
            data.append([float(v) for v in row])
        except ValueError as exc:
            raise ParseError(f"{path}: row {i}: {exc}") from exc
    m = np.array(data, dtype=np.float64) if data else np.zeros((0, width))
    return m, header


def _sidecar(path: str, tag: str) -> str:
    stem, ext = os.path.splitext(path)
    return f"{stem}.{tag}{ext or '.csv'}"


def write_csv(ds: Dataset, path: str) -> None:
    """Write the dataset to ``path`` with ground-truth sidecar files."""
    header = list(ds.columns)
    body = ds.x
    if ds.labels is not None:
        header = header + ["label"]
        body = np.hstack([ds.x, ds.labels[:, None]])
    write_matrix_csv(body, header, path)
    if ds.a_true is not None:
        k = ds.a_true.shape[1]
        write_matrix_csv(ds.a_true, [f"a{j}" for j in range(k)],
                         _sidecar(path, "atrue"))
    if ds.z_true is not None:
        write_matrix_csv(ds.z_true, list(ds.columns), _sidecar(path, "ztrue"))


def read_csv(path: str) -> Dataset:
    """Read a dataset written by :func:`write_csv` (sidecars optional)."""
    m, header = read_matrix_csv(path)
    labels = None
    if header and header[-1] == "label":
        labels = m[:, -1] if m.size else np.zeros((m.shape[0],))
        labels = np.ascontiguousarray(labels)
        m = m[:, :-1]
        header = header[:-1]
    a_true = z_true = None
    apath, zpath = _sidecar(path, "atrue"), _sidecar(path, "ztrue")
    if os.path.exists(apath):
        a_true, _ = read_matrix_csv(apath)
    if os.path.exists(zpath):
        z_true, _ = read_matrix_csv(zpath)
    return Dataset(x=m, a_true=a_true, z_true=z_true, labels=labels,
                   columns=header)


# ---------------------------------------------------------------------------
# Model serialization

def _array_out(a: np.ndarray) -> list:
    return np.asarray(a, float).tolist()


def write_model(model, path: str) -> None:
    """Serialize a fitted model (linear or deep) as versioned JSON."""
    from . import deep_aa, linear_aa  # local import to avoid a cycle

    if isinstance(model, linear_aa.LinearAaModel):
        payload = {
            "schema_version": SCHEMA_VERSION,
            "kind": "linear_aa",
            "a": _array_out(model.a),
            "b": _array_out(model.b),
            "z": _array_out(model.z),
            "rss": model.rss,
            "iterations": model.iterations,
            "converged": model.converged,
            "rss_history": list(map(float, model.rss_history)),
        }
    elif isinstance(model, deep_aa.DeepAaModel):
        payload = {
            "schema_version": SCHEMA_VERSION,
            "kind": "deep_aa",
            **model.to_dict(),
        }
    else:
        raise ParameterError(f"cannot serialize model of type {type(model).__name__}")
    atomic_write_text(path, json.dumps(payload, indent=1, sort_keys=True) + "\n")


def read_model(path: str):
    from . import deep_aa, linear_aa

    try:
        with open(path) as fh:
            payload = json.load(fh)
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: invalid JSON at line {exc.lineno}") from exc
    version = payload.get("schema_version")
    if version != SCHEMA_VERSION:
        raise SchemaVersionError(
            f"{path}: schema version {version!r} unsupported (expected {SCHEMA_VERSION})"
        )
    kind = payload.get("kind")
    if kind == "linear_aa":
        return linear_aa.LinearAaModel(
            a=np.array(payload["a"], float),
            b=np.array(payload["b"], float),
            z=np.array(payload["z"], float),
            rss=float(payload["rss"]),
            iterations=int(payload["iterations"]),
            converged=bool(payload["converged"]),
            rss_history=list(payload.get("rss_history", [])),
        )
    if kind == "deep_aa":
        return deep_aa.DeepAaModel.from_dict(payload)
    raise ParseError(f"{path}: unknown model kind {kind!r}")
