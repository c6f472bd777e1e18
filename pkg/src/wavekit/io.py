"""Branch files (JSON + optional phi_hat CSV sidecar) and field CSV output."""
from __future__ import annotations

import csv
import json
import math
from functools import lru_cache
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np

from .continuation import (ContinuationBranch, DiscreteWaveState, Discretization, discrete_w_star,
                           newton_correct, solve_sheet_point)
from .errors import DomainError, VerificationError
from .trivial import TrivialParameters


class BranchFormatError(DomainError):
    """Malformed or schema-violating branch file."""


@lru_cache(maxsize=1)
def branch_schema() -> dict:
    return json.loads(resources.files("wavekit").joinpath("schemas/branch.json").read_text())


def fmt(x: float) -> str:
    """17 significant digits for text output."""
    return format(float(x), ".17g")


def branch_to_dict(branch: ContinuationBranch, phi_hat_file: str | None = None) -> dict:
    b = branch.base_point
    pts = []
    for p in branch.points:
        d = {}
        if branch.kind == "curve":
            d["t"] = float(p.amplitude[0])
        else:
            d["rv"] = [float(p.polar[0]), float(p.polar[1])]
            d["amplitude"] = [float(a) for a in p.amplitude]
        d.update({"lambda": float(p.parameters["lambda"]), "alpha": float(p.parameters["alpha"]),
                  "eta_coeffs": [float(e) for e in p.state.eta_coeffs],
                  "residual_norm": float(p.residual_norm)})
        pts.append(d)
    return {
        "format": "wavekit-branch", "version": 1, "kind": branch.kind, "kappa": float(b.kappa),
        "base": {"mu": float(b.mu), "alpha": float(b.alpha), "lambda": float(b.lam)},
        "modes": [int(m) for m in branch.mode],
        "discretization": {"n_x": branch.disc.n_x, "n_s": branch.disc.n_s},
        "stopped": branch.stopped, "phi_hat_file": phi_hat_file, "points": pts,
    }


def sidecar_path(path) -> Path:
    path = Path(path)
    return path.with_name(path.name + ".phi_hat.csv")


def write_branch(path, branch: ContinuationBranch, full_state: bool = False) -> list[Path]:
    """Write the branch JSON (and the phi_hat sidecar when ``full_state``); returns written paths."""
    path = Path(path)
    written = []
    side = None
    if full_state:
        side = sidecar_path(path)
        with open(side, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["point", "k", "i", "s", "phi_hat"])
            s = branch.disc.s
            for idx, p in enumerate(branch.points):
                vals = p.state.phi_hat_values
                for k in range(vals.shape[0]):
                    for i in range(vals.shape[1]):
                        w.writerow([idx, k, i, fmt(s[i]), fmt(vals[k, i])])
        written.append(side)
    doc = branch_to_dict(branch, side.name if side else None)
    jsonschema.validate(doc, branch_schema())
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=1)
        fh.write("\n")
    written.insert(0, path)
    return written


def read_branch(path) -> dict:
    """Parse and validate a branch file; raises BranchFormatError with a located diagnostic."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise BranchFormatError(f"{path}: cannot read ({exc.strerror})") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise BranchFormatError(f"{path}:{exc.lineno}:{exc.colno}: invalid JSON: {exc.msg}") from exc
    errors = sorted(jsonschema.Draft202012Validator(branch_schema()).iter_errors(doc),
                    key=lambda e: list(e.absolute_path))
    if errors:
        e = errors[0]
        where = "/".join(str(p) for p in e.absolute_path) or "<root>"
        raise BranchFormatError(f"{path}: field {where}: {e.message}")
    return doc


def read_phi_hat(path, n_x: int, n_s: int) -> dict:
    out = {}
    with open(path, newline="") as fh:
        rd = csv.DictReader(fh)
        for row in rd:
            idx = int(row["point"])
            arr = out.setdefault(idx, np.zeros((n_x, n_s)))
            arr[int(row["k"]), int(row["i"])] = float(row["phi_hat"])
    return out


def state_from_branch(doc: dict, index: int, branch_path=None) -> tuple[DiscreteWaveState, Discretization]:
    """Full state of point ``index``: from the sidecar when present, else re-solved and checked."""
    pts = doc["points"]
    if not -len(pts) <= index < len(pts):
        raise DomainError(f"point index {index} out of range (branch has {len(pts)} points)")
    pt = pts[index]
    b = doc["base"]
    kappa = doc["kappa"]
    base = TrivialParameters(b["mu"], b["alpha"], b["lambda"], kappa).validate()
    disc = Discretization(doc["discretization"]["n_x"], doc["discretization"]["n_s"], kappa)
    modes = tuple(doc["modes"])
    params = base.replace(alpha=pt["alpha"], lam=pt["lambda"])
    E = np.asarray(pt["eta_coeffs"], dtype=float)
    if E.size != disc.n_x:
        raise BranchFormatError(f"point {index}: eta_coeffs has {E.size} entries, expected {disc.n_x}")
    amp = (pt["t"],) if doc["kind"] == "curve" else tuple(pt["amplitude"])
    side = doc.get("phi_hat_file")
    if side and branch_path is not None:
        sp = Path(branch_path).with_name(side)
        if sp.exists():
            phi = read_phi_hat(sp, disc.n_x, disc.n_s)
            idx = index % len(pts)
            if idx in phi:
                st = DiscreteWaveState(E, phi[idx], params, amp, base, modes, pt["residual_norm"])
                return st, disc
    # re-solve from the stored parameters
    if doc["kind"] == "curve":
        t = amp[0]
        if t == 0.0:
            return DiscreteWaveState(E, np.zeros((disc.n_x, disc.n_s)), params, amp, base, modes,
                                     pt["residual_norm"]), disc
        Ew, Pw = discrete_w_star(disc, base, modes[0])
        st = newton_correct(disc, DiscreteWaveState(t * Ew, t * Pw, params, amp, base, modes),
                            ("mu", "alpha"))
    else:
        r, v = pt["rv"]
        st = solve_sheet_point(disc, base, modes, r, v)
    if np.max(np.abs(st.eta_coeffs - E)) > 1e-8 * max(1.0, np.max(np.abs(E))):
        raise VerificationError(f"re-solved point {index} does not reproduce the stored eta coefficients")
    return st, disc


def write_json(path, obj) -> Path:
    path = Path(path)
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=1, allow_nan=False)
        fh.write("\n")
    return path


def write_field_csv(path, fld) -> Path:
    path = Path(path)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x", "y", "psi"])
        for x, y, p in fld.rows():
            w.writerow([fmt(x), fmt(y), fmt(p)])
    return path


def jsonable(obj):
    """Recursively convert numpy scalars/arrays and non-finite floats for JSON output."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        f = float(obj)
        return f if math.isfinite(f) else None
    return obj
