"""Config-driven runner: ``modlab <subcommand> [--config cfg.json] [--out dir]``.

Every subcommand writes ``report.json`` into ``--out`` with the envelope

    toolVersion, schemaVersion, experiment, configEcho, startedAt, duration,
    results, criteria, passed

``results`` depends only on the config (and seed), so reruns reproduce it
byte for byte.  Exit status: 0 if all criteria pass, 1 if any fails, 2 on a
usage or config error.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
import warnings
from datetime import datetime, timezone
from pathlib import Path
from typing import Literal, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from . import __version__
from .config import DEFAULT, Tolerances
from .errors import IdealMembershipWarning, ModlabError

SCHEMA_VERSION = "1.0"

SUBCOMMANDS = ("modular-report", "kms-check", "landau-spectrum", "landau-audit",
               "wigner-verify", "quasi-kms", "quasi-ideal")


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------

class GridConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")
    xMin: float = -3.0
    xMax: float = 3.0
    yMin: float = -3.0
    yMax: float = 3.0
    pointsPerAxis: int = Field(121, ge=3, le=1001)

    @model_validator(mode="after")
    def _ordered(self):
        if not (self.xMin < self.xMax and self.yMin < self.yMax):
            raise ValueError("grid bounds must satisfy min < max")
        return self


class TGrid(BaseModel):
    model_config = ConfigDict(extra="forbid")
    min: float = -5.0
    max: float = 5.0
    count: int = Field(101, ge=1, le=10001)


class ExperimentConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    experiment: Optional[str] = None
    dim: int = Field(12, ge=2, le=64)
    betas: list[float] = Field(default_factory=lambda: [0.5, 1.0, 2.0])
    beta: float = Field(1.0, gt=0)
    pairs: int = Field(20, ge=1, le=500)
    levels: int = Field(12, ge=2, le=64)
    degeneracy: int = Field(12, ge=2, le=64)
    dimPerAxis: int = Field(24, ge=8, le=64)
    weightKind: Literal["gibbs", "zeta", "custom"] = "gibbs"
    weightParams: dict = Field(default_factory=dict)
    grid: GridConfig = Field(default_factory=GridConfig)
    tGrid: TGrid = Field(default_factory=TGrid)
    wignerDims: list[int] = Field(default_factory=lambda: [16, 32, 64])
    intertwiningHalfWidth: float = Field(13.0, gt=0)
    intertwiningPoints: int = Field(209, ge=3, le=1001)
    intertwiningDim: int = Field(160, ge=8, le=512)
    maxLabel: int = Field(2, ge=0, le=6)
    candidate: str = "diag((n+1)^-2)"
    testOps: list[str] = Field(default_factory=lambda: ["I", "N", "N^2", "a", "a^H"])
    sweepDims: list[int] = Field(default_factory=lambda: [16, 32, 64, 128])
    samples: int = Field(100, ge=1, le=100000)
    seed: int = 0
    tolerances: dict[str, float] = Field(default_factory=dict)

    @field_validator("tGrid", mode="before")
    @classmethod
    def _t_grid_list(cls, v):
        # the compact form [min, max, count] is accepted alongside the object form
        if isinstance(v, (list, tuple)):
            if len(v) != 3:
                raise ValueError("tGrid list must be [min, max, count]")
            return {"min": v[0], "max": v[1], "count": v[2]}
        return v

    @model_validator(mode="after")
    def _check(self):
        if any(b <= 0 for b in self.betas):
            raise ValueError("betas must be positive")
        if any(b <= a for a, b in zip(self.sweepDims, self.sweepDims[1:])) or len(self.sweepDims) < 3:
            raise ValueError("sweepDims must be strictly ascending with at least 3 entries")
        known = set(Tolerances.__dataclass_fields__)
        unknown = set(self.tolerances) - known
        if unknown:
            raise ValueError(f"unknown tolerance names {sorted(unknown)}")
        return self


def resolve_tolerances(cfg: ExperimentConfig, scale: float) -> Tolerances:
    tol = Tolerances(**{**DEFAULT.__dict__, **cfg.tolerances})
    return tol.scaled(scale) if scale != 1.0 else tol


# ---------------------------------------------------------------------------
# experiments
# ---------------------------------------------------------------------------

def _criterion(value: float, threshold: float, op: str = "<=") -> dict:
    ok = {"<=": value <= threshold, ">": value > threshold, "==": value == threshold}[op]
    return {"value": value, "threshold": threshold, "op": op, "passed": bool(ok)}


def _flag(ok: bool, detail=None) -> dict:
    out = {"passed": bool(ok)}
    if detail is not None:
        out["value"] = detail
    return out


def run_modular_report(cfg, tol, out_dir):
    from .modular import gibbs_weights, polar_check, sign_audit, structure_checks
    polar = {}
    worst = 0.0
    for beta in cfg.betas:
        rep = polar_check(gibbs_weights(min(cfg.dim, 10), beta), tol.spectral)
        polar[f"{beta:g}"] = rep.to_dict()
        worst = max(worst, *(v for k, v in rep.to_dict().items()
                             if isinstance(v, float) and k != "beta"))
    audit = sign_audit(gibbs_weights(cfg.dim, cfg.beta), seed=cfg.seed)
    struct = structure_checks(gibbs_weights(min(cfg.dim, 6), cfg.beta))
    results = {"polar": polar, "signAudit": audit, "structure": struct.to_dict()}
    criteria = {
        "polarResiduals": _criterion(worst, tol.spectral),
        "deltaOrientation": _criterion(audit["sqrtDeltaFromJS"], tol.spectral),
        "structure": _flag(struct.passed),
    }
    return results, criteria


def run_kms_check(cfg, tol, out_dir):
    from .modular import default_kms_pairs, gibbs_weights, kms_residual, weight_sequence
    rng = np.random.default_rng(cfg.seed)
    t_grid = np.linspace(cfg.tGrid.min, cfg.tGrid.max, cfg.tGrid.count)
    results, worst, inv, flow = {}, 0.0, 0.0, 0.0
    neg = np.inf
    # a lone ``beta`` selects a single temperature; ``betas`` takes precedence
    single = "beta" in cfg.model_fields_set and "betas" not in cfg.model_fields_set
    for beta in ([cfg.beta] if single else cfg.betas):
        w = gibbs_weights(cfg.dim, beta)
        pairs = default_kms_pairs(cfg.dim, rng, cfg.pairs)
        rep = kms_residual(w, pairs, t_grid)
        # negative control: evolve with the weights of a different temperature
        wrong = weight_sequence(gibbs_weights(cfg.dim, 1.5 * beta).weights, beta)
        control = kms_residual(w, pairs[:4], t_grid[::10], flow=wrong, cr_points=1)
        d = rep.to_dict()
        d["negativeControlMaxResidual"] = control.max_residual
        results[f"{beta:g}"] = d
        worst = max(worst, rep.max_residual)
        inv = max(inv, rep.max_invariance)
        flow = max(flow, rep.flow_invariance)
        neg = min(neg, control.max_residual)
    criteria = {
        "kmsResidual": _criterion(worst, tol.kms),
        "stateInvariance": _criterion(inv, tol.invariance),
        "flowInvariance": _criterion(flow, tol.invariance),
        "negativeControl": _criterion(float(neg), 1e-3, ">"),
    }
    return {"betas": results}, criteria


def run_landau_spectrum(cfg, tol, out_dir):
    from .landau import LandauBasis, build_hamiltonians, degeneracy_lift_check
    basis = LandauBasis(cfg.levels, cfg.degeneracy)
    h = build_hamiltonians(basis)
    rep = degeneracy_lift_check(basis)
    up = np.sort(np.diag(h.up).real)
    expected = np.sort(np.repeat(np.arange(cfg.levels) + 0.5, cfg.degeneracy))
    results = {
        "degeneracy": rep.to_dict(),
        "hUpDiagonal": np.diag(h.up).real.tolist(),
        "hDownDiagonal": np.diag(h.down).real.tolist(),
        "intSum": float(np.abs(h.int_up + h.int_down).max()),
        "upMinusFreeMinusInt": float(np.abs(h.up - h.free - h.int_up).max()),
    }
    criteria = {
        "hUpSpectrum": _criterion(float(np.abs(up - expected).max()), 0.0, "=="),
        "jointSimple": _flag(rep.joint_simple, rep.joint_pairs),
        "commute": _criterion(rep.commutator_norm, 0.0, "=="),
        "intCancel": _criterion(results["intSum"], 0.0, "=="),
    }
    return results, criteria


def run_landau_audit(cfg, tol, out_dir):
    from .landau import second_rep_audit
    audit = second_rep_audit(cfg.dimPerAxis)
    d = audit.to_dict()
    ccr = d["cartesianCcr"]
    criteria = {
        "interiorCcr": _criterion(max(ccr["[Q+,P+]-i"], ccr["[Q-,P-]-i"]), tol.interior_ccr),
        "crossCommutators": _criterion(ccr["maxCross"], tol.interior_ccr),
        "fittedLadderCcr": _criterion(audit.ccr_residual, tol.interior_ccr),
        "aPlusAxCoefficient": _criterion(abs(audit.fitted["A+"][0] - 0.75), 1e-6),
    }
    return d, criteria


def run_wigner_verify(cfg, tol, out_dir):
    from .wigner import (GridSpec, ground_state_closed_form, ground_state_error,
                         ground_state_grid, intertwining_check, wigner_transform)
    g = cfg.grid
    grid = GridSpec(g.xMin, g.xMax, g.yMin, g.yMax, g.pointsPerAxis)
    errors = {str(d): ground_state_error(d, grid) for d in cfg.wignerDims}
    dims = sorted(cfg.wignerDims)
    top = dims[-1]
    x00 = np.zeros((top, top), dtype=complex)
    x00[0, 0] = 1.0
    w00 = wigner_transform(x00, grid)
    kernel = ground_state_grid(grid)
    closed = ground_state_closed_form(grid)
    big = GridSpec.square(cfg.intertwiningHalfWidth, cfg.intertwiningPoints)
    inter = intertwining_check(cfg.maxLabel, big, cfg.intertwiningDim)
    if out_dir is not None:
        w00.to_csv(out_dir / "wigner_X00.csv")
        kernel.to_csv(out_dir / "psi00_kernel.csv")
    results = {
        "grid": grid.to_dict(),
        "groundStateError": errors,
        "kernelVsClosedForm": float(np.abs(kernel.values - closed.values).max()),
        "intertwining": inter.to_dict(),
    }
    criteria = {
        "groundState": _criterion(errors[str(top)], tol.grid),
        "convergence": _flag(errors[str(dims[-2])] > errors[str(top)],
                             [errors[str(dims[-2])], errors[str(top)]]),
        "printedIntertwining": _criterion(inter.printed_max, tol.grid),
        "transformIntertwining": _criterion(inter.transform_max, tol.grid),
    }
    return results, criteria


def _weights_from_cfg(cfg):
    from .quasi import weight_family
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", IdealMembershipWarning)
        fam = weight_family(cfg.weightKind, cfg.weightParams, beta=cfg.beta)
    return fam, [str(w.message) for w in caught]


def run_quasi_kms(cfg, tol, out_dir):
    from .hs import matrix_unit
    from .modular import gibbs_weights, interior_unit_pairs, kms_residual
    from .quasi import boundedness_check, quasi_kms_residual, quasi_modular, quasi_states
    fam, notes = _weights_from_cfg(cfg)
    w = fam.weights(cfg.dim)
    t_grid = np.linspace(cfg.tGrid.min, cfg.tGrid.max, cfg.tGrid.count)
    pairs = interior_unit_pairs(cfg.dim, max_label=min(8, cfg.dim - 3))
    kms = quasi_kms_residual(w, pairs, t_grid)
    states = {}
    gap = trace_gap = 0.0
    for i in range(min(cfg.dim, 4)):
        for j in range(min(cfg.dim, 4)):
            s = quasi_states(w, matrix_unit(i, j, cfg.dim), tol.identity)
            gap = max(gap, s["leftRightGap"])
            trace_gap = max(trace_gap, s["traceGap"])
            states[f"X{i}{j}"] = [s["left"].real, s["left"].imag]
    modular = quasi_modular(w)
    gibbs_gap = None
    if cfg.weightKind == "gibbs":
        ref = kms_residual(gibbs_weights(cfg.dim, fam.beta), pairs, t_grid)
        gibbs_gap = float(np.abs(np.array(ref.residuals) - np.array(kms.residuals)).max())
    bound = boundedness_check(cfg.samples, min(cfg.dim, 10), np.random.default_rng(cfg.seed))
    rho_trace = float(np.sum(w.weights))
    results = {
        "family": fam.to_dict(),
        "phiDiagnostic": fam.phi_diagnostic.to_dict() if fam.phi_diagnostic else None,
        "warnings": notes,
        "kms": kms.to_dict(),
        "states": states,
        "modular": modular,
        "boundedness": bound,
        "rhoTrace": rho_trace,
        "gibbsConsistency": gibbs_gap,
    }
    criteria = {
        "kmsResidual": _criterion(kms.max_residual, tol.kms),
        "leftRightStates": _criterion(gap, tol.identity),
        "rhoTrace": _criterion(abs(rho_trace - 1.0), 1e-10),
        "modular": _flag(modular["passed"]),
        "boundedness": _flag(bound["passed"], bound["violations"]),
    }
    if gibbs_gap is not None:
        criteria["gibbsConsistency"] = _criterion(gibbs_gap, tol.identity)
    return results, criteria


def run_quasi_ideal(cfg, tol, out_dir):
    from .quasi import ideal_membership
    diag = ideal_membership(cfg.candidate, cfg.testOps, cfg.sweepDims)
    return diag.to_dict(), {"verdictComputed": _flag(diag.verdict in ("member", "non-member",
                                                                     "inconclusive"), diag.verdict)}


RUNNERS = {
    "modular-report": run_modular_report,
    "kms-check": run_kms_check,
    "landau-spectrum": run_landau_spectrum,
    "landau-audit": run_landau_audit,
    "wigner-verify": run_wigner_verify,
    "quasi-kms": run_quasi_kms,
    "quasi-ideal": run_quasi_ideal,
}


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    if isinstance(obj, np.generic):
        return _jsonable(obj.item())
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    return obj


def results_json(results) -> str:
    """Canonical serialization of a results section."""
    return json.dumps(_jsonable(results), sort_keys=True, separators=(",", ":"))


def run(experiment: str, cfg: ExperimentConfig, out_dir: Path | None = None,
        tol_scale: float = 1.0) -> dict:
    tol = resolve_tolerances(cfg, tol_scale)
    started = datetime.now(timezone.utc)
    t0 = time.perf_counter()
    results, criteria = RUNNERS[experiment](cfg, tol, out_dir)
    return {
        "toolVersion": __version__,
        "schemaVersion": SCHEMA_VERSION,
        "experiment": experiment,
        "configEcho": cfg.model_dump(mode="json"),
        "startedAt": started.isoformat(),
        "duration": time.perf_counter() - t0,
        "results": json.loads(results_json(results)),
        "criteria": _jsonable(criteria),
        "passed": all(c["passed"] for c in criteria.values()),
        "failing": sorted(k for k, c in criteria.items() if not c["passed"]),
    }


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="modlab", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in SUBCOMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", type=Path, help="JSON config file")
        p.add_argument("--out", type=Path, default=Path("."), help="output directory")
        p.add_argument("--seed", type=int, help="overrides the config seed")
        p.add_argument("--tol-scale", type=float, default=1.0,
                       help="multiply every tolerance by this factor")
    return parser


def load_config(path: Path | None, experiment: str, seed: int | None) -> ExperimentConfig:
    data = {}
    if path is not None:
        with open(path) as fh:
            data = json.load(fh)
        if not isinstance(data, dict):
            raise ValueError("config must be a JSON object")
    if seed is not None:
        data["seed"] = seed
    data.setdefault("experiment", experiment)
    return ExperimentConfig.model_validate(data)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.tol_scale <= 0:
        parser.error("--tol-scale must be positive")
    try:
        cfg = load_config(args.config, args.command, args.seed)
    except ValidationError as exc:
        for err in exc.errors():
            loc = ".".join(str(p) for p in err["loc"]) or "<root>"
            print(f"config error at {loc}: {err['msg']}", file=sys.stderr)
        return 2
    except (OSError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    args.out.mkdir(parents=True, exist_ok=True)
    try:
        envelope = run(args.command, cfg, args.out, args.tol_scale)
    except ModlabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    with open(args.out / "report.json", "w") as fh:
        json.dump(envelope, fh, indent=2, sort_keys=True)
        fh.write("\n")
    for name, c in sorted(envelope["criteria"].items()):
        print(f"{'PASS' if c['passed'] else 'FAIL'}  {args.command}:{name}")
    if not envelope["passed"]:
        print("failing criteria: " + ", ".join(envelope["failing"]), file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
