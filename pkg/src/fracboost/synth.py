"""Synthetic fracturing-job dataset with a known response function.

Ground truth (tons/day)::

    f(x) = 2
         + 4 * ln(1 + permeability)
         + 0.012 * net_pay * proppant_mass        # geology x job interaction
         + 0.25 * (porosity - 17)
         + 0.08 * (oil_saturation - 55)
         + 1.5 * min(stage_count, 7)
         + CONTRACTOR_OFFSET[contractor]
         + XLINKER_OFFSET[x_linker]
         - 3 * [screen_out == "Yes"]
         - 0.15 * (gel_loading - 4)^2

The target is ``f(x) + N(0, noise_sigma^2)``. ``f`` is evaluated on the
complete feature values; missing cells are punched into the observed table
afterwards, completely at random.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .data import ColumnSpec, Dataset, FeatureSchema

CONTRACTOR_OFFSET = {"A": -2.0, "B": -0.5, "C": 2.5, "D": 0.5, "E": 0.0}
XLINKER_OFFSET = {"BXL-2": 0.0, "ZXL-4.5": 0.0, "DGXL-10.1": -3.0, "WGXL-8.2": -3.0, "TXL-3": 0.0}
MANUFACTURERS = ("M1", "M2", "M3", "M4")

SYNTH_SCHEMA = FeatureSchema(
    (
        ColumnSpec("contractor", "categorical", "general"),
        ColumnSpec("well_status", "categorical", "general"),
        ColumnSpec("stage_count", "numeric", "general"),
        ColumnSpec("proppant_mass", "numeric", "job"),
        ColumnSpec("flow_rate", "numeric", "job"),
        ColumnSpec("proppant_manufacturer", "categorical", "job"),
        ColumnSpec("screen_out", "categorical", "job"),
        ColumnSpec("gel_loading", "numeric", "fluid"),
        ColumnSpec("x_linker", "categorical", "fluid"),
        ColumnSpec("est_fracture_length", "numeric", "calculated_hf"),
        ColumnSpec("est_fracture_height", "numeric", "calculated_hf"),
        ColumnSpec("permeability", "numeric", "geological"),
        ColumnSpec("porosity", "numeric", "geological"),
        ColumnSpec("net_pay", "numeric", "geological"),
        ColumnSpec("oil_saturation", "numeric", "geological"),
        ColumnSpec("q_oil", "numeric", "geological", "target"),
    ),
    "q_oil",
)


@dataclass(frozen=True)
class SynthSpec:
    n_rows: int = 2000
    seed: int = 0
    noise_sigma: float = 5.0
    missing_rate: float = 0.05

    def __post_init__(self):
        if self.n_rows < 1:
            raise ValueError("n_rows must be >= 1")
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be >= 0")
        if not 0.0 <= self.missing_rate < 1.0:
            raise ValueError("missing_rate must lie in [0, 1)")


def ground_truth(cols: dict) -> np.ndarray:
    """Noise-free response for complete feature columns."""
    perm = cols["permeability"]
    q = (2.0
         + 4.0 * np.log1p(perm)
         + 0.012 * cols["net_pay"] * cols["proppant_mass"]
         + 0.25 * (cols["porosity"] - 17.0)
         + 0.08 * (cols["oil_saturation"] - 55.0)
         + 1.5 * np.minimum(cols["stage_count"], 7.0)
         - 0.15 * (cols["gel_loading"] - 4.0) ** 2)
    q = q + np.array([CONTRACTOR_OFFSET[c] for c in cols["contractor"]])
    q = q + np.array([XLINKER_OFFSET[c] for c in cols["x_linker"]])
    q = q - 3.0 * (np.asarray(cols["screen_out"]) == "Yes")
    return q


def _latent(n: int, rng: np.random.Generator) -> dict:
    contractors = np.array(sorted(CONTRACTOR_OFFSET))
    xlinkers = np.array(sorted(XLINKER_OFFSET))
    stage_values = np.arange(1, 11)
    stage_p = np.array([0.55, 0.08, 0.07, 0.06, 0.05, 0.05, 0.05, 0.03, 0.03, 0.03])
    proppant = rng.gamma(4.0, 15.0, n)
    height = rng.normal(25.0, 6.0, n).clip(5.0, None)
    return {
        "contractor": contractors[rng.choice(len(contractors), n, p=[0.3, 0.25, 0.2, 0.15, 0.1])],
        "well_status": np.where(rng.random(n) < 0.3, "new", "old"),
        "stage_count": rng.choice(stage_values, n, p=stage_p / stage_p.sum()).astype(float),
        "proppant_mass": proppant,
        "flow_rate": rng.normal(4.0, 0.6, n).clip(1.5, None),
        "proppant_manufacturer": np.array(MANUFACTURERS)[rng.integers(0, len(MANUFACTURERS), n)],
        "screen_out": np.where(rng.random(n) < 0.1, "Yes", "No"),
        "gel_loading": rng.uniform(2.5, 6.0, n),
        "x_linker": xlinkers[rng.integers(0, len(xlinkers), n)],
        "est_fracture_length": 50.0 + 1.1 * proppant + rng.normal(0.0, 15.0, n),
        "est_fracture_height": height,
        "permeability": rng.lognormal(math.log(3.0), 1.0, n),
        "porosity": rng.normal(17.0, 3.0, n),
        "net_pay": rng.uniform(3.0, 20.0, n),
        "oil_saturation": rng.normal(55.0, 8.0, n).clip(20.0, 90.0),
    }


def generate(spec: SynthSpec = SynthSpec()) -> tuple[Dataset, np.ndarray]:
    """Return ``(dataset, ground_truth)``; an equal SynthSpec gives identical output."""
    rng = np.random.default_rng(spec.seed)
    n = spec.n_rows
    cols = _latent(n, rng)
    truth = ground_truth(cols)
    # always drawn so features and missingness do not depend on noise_sigma
    noise = rng.normal(0.0, 1.0, n) * spec.noise_sigma
    target = truth + noise

    observed: dict[str, object] = {}
    for c in SYNTH_SCHEMA.features:
        missing = rng.random(n) < spec.missing_rate
        values = cols[c.name]
        if c.kind == "numeric":
            observed[c.name] = np.where(missing, np.nan, values.astype(float))
        else:
            observed[c.name] = tuple(None if miss else str(v) for v, miss in zip(values, missing))
    return Dataset(SYNTH_SCHEMA, n, observed, target), truth


def oracle_mae_floor(spec: SynthSpec) -> float:
    """Expected MAE of the perfect predictor: E|N(0, sigma^2)| = sigma * sqrt(2 / pi)."""
    return spec.noise_sigma * math.sqrt(2.0 / math.pi)


def ground_truth_csv(truth: np.ndarray) -> str:
    return "row,ground_truth\n" + "".join(f"{i},{v!r}\n" for i, v in enumerate(truth.tolist()))
