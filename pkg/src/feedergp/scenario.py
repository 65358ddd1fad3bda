"""Quasi-static hourly time-series generation.

Each hour: every load takes its loadshape value times an independent
lognormal multiplier (median 1), every PV unit produces its rating times
a feeder-wide irradiance fraction, and the resulting net-load vector is
pushed through the nonlinear solver to produce a training/testing pair.
Everything is reproducible from a single seed.
"""

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConvergenceError
from .feeder import Feeder
from .feeder_io import emit_feeder
from .pf import solve_nonlinear

LOADSHAPE_CLASSES = ("residential", "commercial", "industrial")

# 24-hour archetype profiles, peak-normalized to at most 1.0
_BUILTIN_SHAPES = {
    # evening peak with a morning shoulder
    "residential": np.array(
        [0.30, 0.26, 0.24, 0.23, 0.24, 0.30, 0.45, 0.60, 0.55, 0.48, 0.45, 0.44,
         0.45, 0.44, 0.45, 0.50, 0.62, 0.80, 0.95, 1.00, 0.92, 0.75, 0.55, 0.38]
    ),
    # midday plateau during business hours
    "commercial": np.array(
        [0.20, 0.18, 0.17, 0.17, 0.18, 0.25, 0.45, 0.70, 0.88, 0.95, 1.00, 1.00,
         0.98, 0.97, 0.95, 0.90, 0.80, 0.65, 0.50, 0.40, 0.33, 0.28, 0.24, 0.21]
    ),
    # flat around-the-clock process load
    "industrial": np.full(24, 0.85),
}

SUNRISE_HOUR = 6
SUNSET_HOUR = 18


@dataclass(frozen=True)
class Loadshape:
    id: str
    klass: str
    multipliers: tuple

    def __post_init__(self):
        if self.klass not in LOADSHAPE_CLASSES:
            raise ValueError(f"unknown loadshape class {self.klass!r}")
        m = np.asarray(self.multipliers, dtype=float)
        if m.size % 24 != 0 or m.size == 0:
            raise ValueError("multiplier length must be a positive multiple of 24")
        if np.any(m <= 0) or np.any(m > 2):
            raise ValueError("multipliers must lie in (0, 2]")
        object.__setattr__(self, "multipliers", tuple(float(v) for v in m))

    def at_hour(self, t: int) -> float:
        return self.multipliers[t % len(self.multipliers)]


def builtin_loadshape(klass: str) -> Loadshape:
    if klass not in _BUILTIN_SHAPES:
        raise ValueError(f"unknown loadshape class {klass!r}")
    return Loadshape(id=klass, klass=klass, multipliers=tuple(_BUILTIN_SHAPES[klass]))


@dataclass(frozen=True)
class IrradianceProfile:
    """Feeder-wide plane-of-array irradiance fraction per hour, with a
    temperature series carried for completeness (unused by default)."""

    fraction: tuple
    temperature_c: tuple

    def __post_init__(self):
        f = np.asarray(self.fraction, dtype=float)
        if np.any(f < 0) or np.any(f > 1):
            raise ValueError("irradiance fraction must lie in [0, 1]")
        for t in range(f.size):
            h = t % 24
            if (h < SUNRISE_HOUR or h >= SUNSET_HOUR) and f[t] != 0.0:
                raise ValueError(f"irradiance must be zero at night (hour {h})")
        object.__setattr__(self, "fraction", tuple(float(v) for v in f))
        object.__setattr__(self, "temperature_c", tuple(float(v) for v in self.temperature_c))


def synth_irradiance(hours: int, rng: np.random.Generator, cloud_std: float = 0.12) -> IrradianceProfile:
    """Clear-sky half-sine day window with multiplicative cloud noise."""
    frac = np.zeros(hours)
    temp = np.zeros(hours)
    for t in range(hours):
        h = t % 24
        if SUNRISE_HOUR <= h <= SUNSET_HOUR:
            # sin(pi) rounds to ~1e-16, so pin the sunset sample to zero
            clear = (
                np.sin(np.pi * (h - SUNRISE_HOUR) / (SUNSET_HOUR - SUNRISE_HOUR))
                if h < SUNSET_HOUR
                else 0.0
            )
            cloud = np.clip(rng.normal(1.0, cloud_std), 0.0, 1.0)
            frac[t] = clear * cloud
        temp[t] = 18.0 + 9.0 * np.sin(np.pi * (h - 7) / 24.0) + rng.normal(0.0, 0.8)
    return IrradianceProfile(fraction=tuple(frac), temperature_c=tuple(temp))


@dataclass
class Dataset:
    inputs: np.ndarray
    targets: np.ndarray
    timestamps: np.ndarray
    seed: int
    settings: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.inputs.shape[0] != self.targets.shape[0]:
            raise ValueError("inputs and targets row counts differ")
        if self.inputs.shape[0] != len(self.timestamps):
            raise ValueError("timestamps length must match row count")


def feeder_hash(feeder: Feeder) -> str:
    return hashlib.sha256(emit_feeder(feeder).encode("utf-8")).hexdigest()


def matrix_hash(a: np.ndarray) -> str:
    return hashlib.sha256(np.ascontiguousarray(a, dtype=float).tobytes()).hexdigest()


def generate_dataset(
    feeder: Feeder,
    hours: int,
    seed: int = 0,
    variability: float = 0.15,
    load_scale: float = 1.0,
    tol: float = 1e-8,
) -> Dataset:
    """Simulate ``hours`` hourly steps and return (net load, voltage) pairs.

    Net load per phase-node is the summed load consumption minus local PV
    output, per-unit; targets are solved voltage magnitudes. An hour whose
    power flow fails to converge gets its multipliers resampled up to 5
    times before the error propagates.
    """
    if hours < 1:
        raise ValueError("hours must be at least 1")
    if variability < 0:
        raise ValueError("variability must be nonnegative")
    rng = np.random.default_rng(seed)
    d = feeder.n_nodes
    idx = feeder.flat_index
    shapes = {k: builtin_loadshape(k) for k in LOADSHAPE_CLASSES}
    for ld in feeder.loads:
        if ld.loadshape not in shapes:
            raise ValueError(f"load at {ld.bus} references unknown loadshape {ld.loadshape!r}")
    irr = synth_irradiance(hours, rng)

    # fixed per-(load/der) flat positions for fast assembly
    load_pos = np.array([idx[(ld.bus, ld.phase)] for ld in feeder.loads], dtype=np.int64)
    load_p = np.array([ld.base_p_kw for ld in feeder.loads]) * load_scale / feeder.sbase_kva
    load_q = np.array([ld.base_q_kvar for ld in feeder.loads]) * load_scale / feeder.sbase_kva
    load_shape_rows = np.array(
        [[shapes[ld.loadshape].at_hour(h) for h in range(24)] for ld in feeder.loads]
    ) if feeder.loads else np.zeros((0, 24))

    der_pos, der_p, der_q = [], [], []
    for der in feeder.ders:
        per_phase = der.rated_kw / len(der.phases) / feeder.sbase_kva
        q_per = der.q_setpoint_kvar / len(der.phases) / feeder.sbase_kva
        for p in der.phases:
            der_pos.append(idx[(der.bus, p)])
            der_p.append(per_phase)
            der_q.append(q_per)
    der_pos = np.array(der_pos, dtype=np.int64)
    der_p = np.array(der_p)
    der_q = np.array(der_q)

    inputs = np.zeros((hours, 2 * d))
    targets = np.zeros((hours, d))
    n_loads = len(feeder.loads)
    for t in range(hours):
        h = t % 24
        last_err = None
        for _ in range(5):
            mult = np.exp(rng.normal(0.0, variability, size=n_loads)) if variability > 0 else np.ones(n_loads)
            s = np.zeros(2 * d)
            if n_loads:
                p_t = load_p * load_shape_rows[:, h] * mult
                q_t = load_q * load_shape_rows[:, h] * mult
                np.add.at(s, load_pos, p_t)
                np.add.at(s, d + load_pos, q_t)
            if der_pos.size:
                f = irr.fraction[t]
                np.subtract.at(s, der_pos, der_p * f)
                np.subtract.at(s, d + der_pos, der_q * f)
            try:
                sol = solve_nonlinear(feeder, s, tol=tol)
            except ConvergenceError as exc:
                last_err = exc
                continue
            inputs[t] = s
            targets[t] = sol.v_mag
            break
        else:
            raise ConvergenceError(
                f"hour {t}: power flow failed after 5 multiplier resamples ({last_err})"
            )

    settings = {
        "hours": hours,
        "variability": variability,
        "load_scale": load_scale,
        "tol": tol,
        "feeder_hash": feeder_hash(feeder),
    }
    return Dataset(
        inputs=inputs,
        targets=targets,
        timestamps=np.arange(hours, dtype=np.int64),
        seed=seed,
        settings=settings,
    )


CASE_TRAIN_HOURS = {1: 24, 2: 168, 3: 720, 4: 2160}


def split_cases(ds: Dataset, case: int, test_hours: int = 144):
    """Chronological split: first ``case`` rows train (24/168/720/2160 for
    cases 1-4, or an explicit row count), next ``test_hours`` rows test."""
    train_n = CASE_TRAIN_HOURS.get(case, case)
    if train_n < 1 or test_hours < 1:
        raise ValueError("train and test sizes must be positive")
    n = ds.inputs.shape[0]
    if train_n + test_hours > n:
        raise ValueError(
            f"insufficient data: need {train_n} train + {test_hours} test rows, have {n}"
        )
    train = Dataset(
        inputs=ds.inputs[:train_n].copy(),
        targets=ds.targets[:train_n].copy(),
        timestamps=ds.timestamps[:train_n].copy(),
        seed=ds.seed,
        settings=dict(ds.settings),
    )
    test = Dataset(
        inputs=ds.inputs[train_n : train_n + test_hours].copy(),
        targets=ds.targets[train_n : train_n + test_hours].copy(),
        timestamps=ds.timestamps[train_n : train_n + test_hours].copy(),
        seed=ds.seed,
        settings=dict(ds.settings),
    )
    return train, test


def save_dataset(ds: Dataset, outdir) -> None:
    """Write inputs.csv, targets.csv and manifest.json for reproduction."""
    out = Path(outdir)
    out.mkdir(parents=True, exist_ok=True)
    np.savetxt(out / "inputs.csv", ds.inputs, delimiter=",", fmt="%.17g")
    np.savetxt(out / "targets.csv", ds.targets, delimiter=",", fmt="%.17g")
    manifest = {
        "seed": ds.seed,
        "settings": ds.settings,
        "timestamps": [int(t) for t in ds.timestamps],
        "inputs_hash": matrix_hash(ds.inputs),
        "targets_hash": matrix_hash(ds.targets),
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True))


def load_dataset(outdir) -> Dataset:
    out = Path(outdir)
    manifest = json.loads((out / "manifest.json").read_text())
    inputs = np.loadtxt(out / "inputs.csv", delimiter=",", ndmin=2)
    targets = np.loadtxt(out / "targets.csv", delimiter=",", ndmin=2)
    return Dataset(
        inputs=inputs,
        targets=targets,
        timestamps=np.asarray(manifest["timestamps"], dtype=np.int64),
        seed=manifest["seed"],
        settings=manifest["settings"],
    )
