"""Monte-Carlo sweeps over four-parameter co-blockmodels."""

from __future__ import annotations

import json
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .evaluation import misclustered
from .model import build_four_param, four_param_from_degree, population_objects, sample_adjacency
from .pipeline import disim

EXPECTED_DEGREE = "expected_degree"
SPECTRAL_GAP = "spectral_gap"
SWEPT = (EXPECTED_DEGREE, SPECTRAL_GAP)
AUTO = "auto"
CSV_COLUMNS = ("family", "swept_param", "value", "tau_policy", "repetition",
               "m_y_rate", "m_z_rate", "seed")


@dataclass(frozen=True)
class SweepSpec:
    """A grid of four-parameter models, each sampled ``repetitions`` times.

    The swept parameter takes ``grid`` equally spaced values over ``range``;
    the other of (expected degree, spectral gap) is held at ``fixed``. Every
    sample is clustered once per regularization policy in ``tau_policies``
    (numbers, or ``"auto"`` for the sample's average degree).
    """

    K: int
    s: int
    swept: str
    range: tuple
    grid: int
    fixed: float
    degree_corrected: tuple = (False,)
    tau_policies: tuple = (0.0, 1.0, AUTO)
    repetitions: int = 1
    seed: int = 0
    restarts: int = 10
    planted: str = "random"

    def __post_init__(self):
        if self.swept not in SWEPT:
            raise ValueError(f"swept must be one of {SWEPT}, got {self.swept!r}")
        if self.K < 1 or self.s < 1 or self.grid < 1 or self.repetitions < 1:
            raise ValueError("K, s, grid and repetitions must be positive")
        if len(self.range) != 2:
            raise ValueError("range must be [low, high]")
        if not self.tau_policies:
            raise ValueError("tau_policies must not be empty")
        for t in self.tau_policies:
            if t != AUTO and (isinstance(t, str) or float(t) < 0):
                raise ValueError(f"bad tau policy {t!r}")

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        dc = d.pop("degree_corrected", False)
        dc = tuple(bool(x) for x in dc) if isinstance(dc, (list, tuple)) else (bool(dc),)
        taus = tuple(t if t == AUTO else float(t) for t in d.pop("tau_policies", (0.0, 1.0, AUTO)))
        family = d.pop("family", "four_param")
        if family != "four_param":
            raise ValueError(f"unsupported model family {family!r}")
        known = {"K", "s", "swept", "range", "grid", "fixed", "repetitions", "seed",
                 "restarts", "planted"}
        extra = set(d) - known
        if extra:
            raise ValueError(f"unknown sweep keys: {sorted(extra)}")
        missing = {"K", "s", "swept", "range", "grid", "fixed"} - set(d)
        if missing:
            raise ValueError(f"missing sweep keys: {sorted(missing)}")
        d["range"] = tuple(float(x) for x in d["range"])
        return cls(degree_corrected=dc, tau_policies=taus, **d)

    @classmethod
    def from_json(cls, path):
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))

    def to_dict(self):
        return {"family": "four_param", "K": self.K, "s": self.s, "swept": self.swept,
                "range": list(self.range), "grid": self.grid, "fixed": self.fixed,
                "degree_corrected": list(self.degree_corrected),
                "tau_policies": list(self.tau_policies), "repetitions": self.repetitions,
                "seed": self.seed, "restarts": self.restarts, "planted": self.planted}

    def values(self):
        return np.linspace(self.range[0], self.range[1], self.grid)

    def cells(self):
        """``(family_index, value_index)`` pairs in output order."""
        return [(f, v) for f in range(len(self.degree_corrected)) for v in range(self.grid)]


def family_name(degree_corrected):
    return "four_param_dc" if degree_corrected else "four_param"


def cell_params(spec, value):
    """``(p, r)`` for one grid value."""
    if spec.swept == EXPECTED_DEGREE:
        return four_param_from_degree(spec.K, spec.s, value, spec.fixed)
    return four_param_from_degree(spec.K, spec.s, spec.fixed, value)


def repetition_seed(spec, f, v, rep):
    """32-bit seed of one repetition, derived from the sweep seed and cell position."""
    seq = np.random.SeedSequence(spec.seed, spawn_key=(f, v, rep))
    return int(seq.generate_state(1)[0])


def run_cell(spec, f, v):
    """Run all repetitions and tau policies of one cell.

    Returns ``(rows, skipped)``; ``skipped`` carries a reason when the model
    is infeasible at this grid value.
    """
    dc = spec.degree_corrected[f]
    value = float(spec.values()[v])
    p, r = cell_params(spec, value)
    rows = []
    for rep in range(spec.repetitions):
        seed = repetition_seed(spec, f, v, rep)
        try:
            m = build_four_param(spec.K, spec.s, p, r, seed=seed, planted=spec.planted,
                                 degree_corrected=dc)
        except ValueError as exc:
            return [], {"family": family_name(dc), "value": value, "reason": str(exc)}
        g = sample_adjacency(m, seed)
        for policy in spec.tau_policies:
            tau = g.total_weight / g.n_rows if policy == AUTO else float(policy)
            cc = disim(g, spec.K, tau=tau, restarts=spec.restarts, seed=seed)
            mt = m.with_tau(tau)
            rep_ = misclustered(cc, mt, population_objects(mt))
            rows.append({"family": family_name(dc), "swept_param": spec.swept,
                         "value": value, "tau_policy": policy, "repetition": rep,
                         "m_y_rate": rep_.m_y_rate, "m_z_rate": rep_.m_z_rate, "seed": seed})
    return rows, None


def run_sweep(spec, jobs=1):
    """All cells of ``spec`` in deterministic (cell, repetition, policy) order."""
    cells = spec.cells()
    if jobs > 1 and len(cells) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(run_cell, [spec] * len(cells),
                                    [c[0] for c in cells], [c[1] for c in cells]))
    else:
        results = [run_cell(spec, f, v) for f, v in cells]
    rows, skipped = [], []
    for cell_rows, skip in results:
        rows.extend(cell_rows)
        if skip is not None:
            warnings.warn(f"skipping infeasible cell {skip['family']} at "
                          f"{spec.swept}={skip['value']:g}: {skip['reason']}",
                          RuntimeWarning, stacklevel=2)
            skipped.append(skip)
    return rows, skipped


def mean_rates(rows, family, value, policy, key="m_y_rate"):
    """Mean of ``key`` over repetitions of one (family, value, policy)."""
    vals = [r[key] for r in rows if r["family"] == family and r["tau_policy"] == policy
            and np.isclose(r["value"], value)]
    if not vals:
        raise KeyError(f"no rows for {family}, {value}, {policy}")
    return float(np.mean(vals))
