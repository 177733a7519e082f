"""Scenario files and report serialization.

Scenario JSON::

    {
      "Q": {"d": 1, "Q_re": [[0, 0], [0, 1]], "Q_im": [[0, 0], [0, 0]]},
      "t": [0.1, 0.5],
      "initial": {"kind": "delta", "x0": [0.0]},
      "engine": "auto",
      "grid": {"L": 16, "n": 4096},
      "estimator": {"s": 1, "A_min": 0.5, "n_dirs": 360, "radii": [2, 8, 16],
                    "kappa_tol": 1e-3, "angular_tol": 5}
    }

``initial.kind`` is one of ``delta``, ``plane_wave``, ``chirp``,
``gaussian_chirp``, ``sampled`` (with ``path`` to a field JSON) or ``cone``
(an exact cone, accepted by ``predict`` only). Sampled initial data may carry
its exact cone under ``initial.cone``.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .gabor import SampledField
from .states import Chirp, Delta, GaussianChirpState, PlaneWave, library_from_json
from .subspaces import ConeSet
from .symplectic import QuadraticHamiltonian

ENGINES = ("auto", "gaussian", "splitstep", "metaplectic")


class ScenarioError(ValueError):
    """Malformed scenario file."""


@dataclass
class EstimatorParams:
    s: float = 1.0
    A_min: float = 0.5
    n_dirs: int | None = None
    radii: tuple = (2.0, 8.0, 16)
    kappa_tol: float = 1e-3
    angular_tol: float = 5.0

    def radii_array(self) -> np.ndarray:
        r1, r2, k = self.radii
        return np.geomspace(float(r1), float(r2), int(k))

    def validate(self) -> None:
        if not self.s > 0.5:
            raise ScenarioError("s must exceed 1/2")
        r1, r2, k = self.radii
        if not 0 < r1 < r2 or int(k) < 8:
            raise ScenarioError("radii must satisfy 0 < r1 < r2 with at least 8 samples")


@dataclass
class Scenario:
    H: QuadraticHamiltonian
    times: list
    initial: object
    initial_cone: ConeSet | None
    engine: str = "auto"
    L: float = 16.0
    n: int = 4096
    estimator: EstimatorParams = field(default_factory=EstimatorParams)
    base_dir: Path = field(default_factory=Path)
    raw: dict = field(default_factory=dict)

    @property
    def d(self) -> int:
        return self.H.d


def parse_radii(text: str) -> tuple:
    """``"r1:r2:k"`` to ``(r1, r2, k)``."""
    try:
        a, b, k = text.split(":")
        return float(a), float(b), int(k)
    except ValueError as exc:
        raise ScenarioError(f"radii must look like r1:r2:k, got {text!r}") from exc


def _parse_initial(obj: dict, base: Path, d: int):
    kind = obj.get("kind", obj.get("type"))
    if kind in ("delta", "plane_wave", "chirp", "gaussian_chirp"):
        u = library_from_json({**obj, "type": kind})
        cone = u.wave_front()
    elif kind == "sampled":
        u = load_field(base / obj["path"])
        cone = ConeSet.from_json(obj["cone"]) if "cone" in obj else None
    elif kind == "cone":
        u = None
        cone = ConeSet.from_json(obj["cone"])
    else:
        raise ScenarioError(f"unknown initial kind {kind!r}")
    if u is not None and u.d != d:
        raise ScenarioError("initial data dimension does not match Q")
    if cone is not None and cone.n != 2 * d:
        raise ScenarioError("initial cone dimension does not match Q")
    return u, cone


def load_scenario(path) -> Scenario:
    path = Path(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ScenarioError(f"cannot read scenario {path}: {exc}") from exc
    return scenario_from_dict(raw, path.parent)


def scenario_from_dict(raw: dict, base: Path = Path(".")) -> Scenario:
    try:
        H = QuadraticHamiltonian.from_json(raw["Q"])
        times = [float(t) for t in raw.get("t", [0.0])]
        initial, cone = _parse_initial(raw["initial"], base, H.d)
    except KeyError as exc:
        raise ScenarioError(f"scenario is missing key {exc}") from exc
    if any(t < 0 for t in times) or times != sorted(times):
        raise ScenarioError("times must be nonnegative and ascending")
    engine = raw.get("engine", "auto")
    if engine not in ENGINES:
        raise ScenarioError(f"engine must be one of {ENGINES}")
    grid = raw.get("grid", {})
    default_L, default_n = (16.0, 4096) if H.d == 1 else (10.0, 256)
    est = raw.get("estimator", {})
    params = EstimatorParams(
        s=float(est.get("s", 1.0)),
        A_min=float(est.get("A_min", 0.5)),
        n_dirs=est.get("n_dirs"),
        radii=tuple(est.get("radii", (2.0, 8.0, 16))),
        kappa_tol=float(est.get("kappa_tol", 1e-3)),
        angular_tol=float(est.get("angular_tol", 5.0)),
    )
    params.validate()
    return Scenario(H, times, initial, cone, engine, float(grid.get("L", default_L)),
                    int(grid.get("n", default_n)), params, base, raw)


# -- sampled fields -------------------------------------------------------------

def save_field(f: SampledField, path) -> Path:
    """Write ``<stem>.json`` (header) and ``<stem>.csv`` (values)."""
    path = Path(path)
    csv_path = path.with_suffix(".csv")
    header = {"d": f.d, "L": f.L, "n": f.n, "values_csv": csv_path.name}
    path.write_text(dumps(header), encoding="utf-8")
    pts = f.mesh().reshape(-1, f.d)
    vals = f.values.reshape(-1)
    cols = ["x"] if f.d == 1 else ["x1", "x2"]
    rows = (list(p) + [v.real, v.imag] for p, v in zip(pts, vals))
    write_csv(csv_path, cols + ["re", "im"], rows)
    return path


def load_field(path) -> SampledField:
    path = Path(path)
    try:
        hdr = json.loads(path.read_text(encoding="utf-8"))
        d, L, n = int(hdr["d"]), float(hdr["L"]), int(hdr["n"])
        data = np.loadtxt(path.parent / hdr["values_csv"], delimiter=",", skiprows=1, ndmin=2)
    except (OSError, KeyError, ValueError, json.JSONDecodeError) as exc:
        raise ScenarioError(f"cannot read sampled field {path}: {exc}") from exc
    vals = (data[:, d] + 1j * data[:, d + 1]).reshape((n,) * d)
    return SampledField(d, L, n, vals)


# -- writers --------------------------------------------------------------------

def _default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.floating, np.integer, np.bool_)):
        return o.item()
    if isinstance(o, complex):
        return {"re": o.real, "im": o.imag}
    raise TypeError(f"not serializable: {type(o).__name__}")


def _finite(o):
    if isinstance(o, float) and not np.isfinite(o):
        return "inf" if o > 0 else ("-inf" if o < 0 else "nan")
    if isinstance(o, dict):
        return {k: _finite(v) for k, v in o.items()}
    if isinstance(o, (list, tuple)):
        return [_finite(v) for v in o]
    return o


def dumps(obj) -> str:
    """Deterministic UTF-8 JSON (sorted keys, non-finite floats as strings)."""
    obj = json.loads(json.dumps(obj, default=_default))
    return json.dumps(_finite(obj), sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def write_json(path, obj) -> Path:
    path = Path(path)
    path.write_text(dumps(obj), encoding="utf-8")
    return path


def write_csv(path, header, rows) -> Path:
    """CSV with a one-line header; floats written with ``repr`` precision."""
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])
    return path


def write_profiles_csv(path, est) -> Path:
    n = est.n
    header = [f"theta{i}" for i in range(n)] + ["A_hat", "kappa", "intercept", "residual", "reliable", "singular"]
    rows = ([*p.theta, p.A_hat, p.kappa, p.intercept, p.residual, int(p.reliable), int(sing)]
            for p, sing in zip(est.profiles, est.singular))
    return write_csv(path, header, rows)


def write_stft_csv(path, stft_map) -> Path:
    d = stft_map.d
    header = (["x"] if d == 1 else ["x1", "x2"]) + (["xi"] if d == 1 else ["xi1", "xi2"]) + ["absV"]
    return write_csv(path, header, stft_map.rows())


def describe_initial(u) -> dict:
    if isinstance(u, Delta):
        return {"kind": "delta", "x0": u.x0.tolist()}
    if isinstance(u, PlaneWave):
        return {"kind": "plane_wave", "xi0": u.xi0.tolist()}
    if isinstance(u, Chirp):
        return {"kind": "chirp", "B": u.B.tolist()}
    if isinstance(u, GaussianChirpState):
        return u.to_json()
    if isinstance(u, SampledField):
        return {"kind": "sampled", "d": u.d, "L": u.L, "n": u.n}
    return {"kind": "cone"}
