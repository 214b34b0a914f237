"""Sequence datasets: synthetic bending-test-like generation, CSV I/O, normalization.

A dataset holds one fixed-length time series of target channels per design
value. The synthetic generator mimics a punched metal strip: a smooth
deflection bump centered at the punch position with a damped oscillation
after peak deformation, evaluated at a line of nodes with three displacement
components each.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    MissingColumn,
    NonMonotoneTime,
    ParseError,
    RaggedSequence,
    ShapeMismatch,
    UnfittedNormalizer,
)

DEFAULT_DESIGNS = (-60.0, -40.0, -30.0, 0.0, 20.0, 40.0, 60.0)
DEFAULT_STEPS = 41


class Normalizer:
    """Per-channel affine map onto [-1, 1], fitted on training data.

    Values outside the fitted range map beyond the unit interval; that is
    allowed and simply marks extrapolation. Constant channels map to 0 and
    denormalize back exactly.
    """

    def __init__(self, center: np.ndarray | None = None,
                 halfrange: np.ndarray | None = None):
        self.center = center
        self.halfrange = halfrange

    @property
    def fitted(self) -> bool:
        return self.center is not None

    def fit(self, values: np.ndarray) -> "Normalizer":
        """Fit per-channel range; channels are the last axis."""
        flat = np.asarray(values, dtype=np.float64).reshape(-1, values.shape[-1])
        lo = flat.min(axis=0)
        hi = flat.max(axis=0)
        self.center = 0.5 * (hi + lo)
        self.halfrange = 0.5 * (hi - lo)
        self.halfrange[self.halfrange == 0.0] = 1.0
        return self

    def normalize(self, values: np.ndarray) -> np.ndarray:
        if not self.fitted:
            raise UnfittedNormalizer("normalize called before fit")
        return (np.asarray(values, dtype=np.float64) - self.center) / self.halfrange

    def denormalize(self, values: np.ndarray) -> np.ndarray:
        if not self.fitted:
            raise UnfittedNormalizer("denormalize called before fit")
        return np.asarray(values, dtype=np.float64) * self.halfrange + self.center

    def scale(self) -> np.ndarray:
        """Per-channel half range (the dimensionless-to-physical factor)."""
        if not self.fitted:
            raise UnfittedNormalizer("scale requested before fit")
        return self.halfrange


@dataclass
class SequenceDataset:
    """designs x time x channels sequence data with fitted normalizers.

    ``inputs`` (n_b, m, n_f) and ``targets`` (n_b, m, n_out) hold raw
    physical values; the trainers consume the normalized, time-major views.
    """

    designs: np.ndarray
    time: np.ndarray
    inputs: np.ndarray
    targets: np.ndarray
    feature_names: list[str]
    target_names: list[str]
    input_norm: Normalizer = field(default=None)
    target_norm: Normalizer = field(default=None)
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.designs = np.asarray(self.designs, dtype=np.float64)
        self.time = np.asarray(self.time, dtype=np.float64)
        self.inputs = np.asarray(self.inputs, dtype=np.float64)
        self.targets = np.asarray(self.targets, dtype=np.float64)
        n_b, m, n_f = self.inputs.shape
        if self.targets.shape[:2] != (n_b, m) or self.designs.shape[0] != n_b:
            raise ShapeMismatch("designs/inputs/targets disagree on designs or steps")
        if self.time.shape[0] != m:
            raise ShapeMismatch("time axis length mismatch")
        if not (np.all(np.isfinite(self.inputs)) and np.all(np.isfinite(self.targets))):
            raise ShapeMismatch("dataset contains non-finite values")
        if self.input_norm is None:
            self.input_norm = Normalizer().fit(self.inputs)
        if self.target_norm is None:
            self.target_norm = Normalizer().fit(self.targets)

    @property
    def n_designs(self) -> int:
        return self.inputs.shape[0]

    @property
    def n_steps(self) -> int:
        return self.inputs.shape[1]

    @property
    def n_features(self) -> int:
        return self.inputs.shape[2]

    @property
    def n_outputs(self) -> int:
        return self.targets.shape[2]

    def inputs_time_major(self) -> np.ndarray:
        """Normalized inputs as (m, n_b, n_f)."""
        return np.swapaxes(self.input_norm.normalize(self.inputs), 0, 1).copy()

    def targets_time_major(self) -> np.ndarray:
        """Normalized targets as (m, n_b, n_out)."""
        return np.swapaxes(self.target_norm.normalize(self.targets), 0, 1).copy()

    def without_design(self, index: int) -> "SequenceDataset":
        """Leave-one-out copy; normalizers are refitted on the remaining designs."""
        keep = np.ones(self.n_designs, dtype=bool)
        keep[index] = False
        return SequenceDataset(
            designs=self.designs[keep], time=self.time.copy(),
            inputs=self.inputs[keep], targets=self.targets[keep],
            feature_names=list(self.feature_names),
            target_names=list(self.target_names),
            metadata=dict(self.metadata))


@dataclass
class BendingSurrogateConfig:
    """Geometry and phenomenology of the synthetic bending response.

    Punch mass and speed are carried as metadata only; they do not enter
    the displacement formulas.
    """

    length: float = 150.0          # specimen span, mm
    eps_range: tuple[float, float] = (-75.0, 75.0)
    n_nodes: int = 45
    punch_mass: float = 10.0       # kg
    punch_speed: float = 2.0       # m/s
    sim_time: float = 20.0         # ms
    max_deflection: float = 18.0   # mm
    bump_width: float = 20.0       # mm
    peak_fraction: float = 0.35    # fraction of sim time to reach peak
    osc_cycles: float = 2.5        # oscillations after peak
    osc_amplitude: float = 0.06
    osc_damping: float = 3.0
    draw_scale: float = 0.25       # longitudinal draw-in relative to deflection slope
    lateral_scale: float = 0.10
    noise: float = 0.0             # additive Gaussian noise on targets, mm

    def __post_init__(self):
        if self.eps_range[0] >= self.eps_range[1]:
            raise ShapeMismatch("eps_range must be non-degenerate")
        if self.noise < 0:
            raise ShapeMismatch("noise must be nonnegative")


def _deflection_fields(cfg: BendingSurrogateConfig, eps: float,
                       t_norm: np.ndarray) -> np.ndarray:
    """Displacement components (m, n_nodes, 3) for one punch position."""
    xi = np.linspace(-cfg.length / 2.0, cfg.length / 2.0, cfg.n_nodes)
    support = np.cos(np.pi * xi / cfg.length)
    bump = np.exp(-((xi - eps) / cfg.bump_width) ** 2)
    shape = bump * support
    d_bump = bump * (-2.0 * (xi - eps) / cfg.bump_width ** 2)
    d_support = -np.pi / cfg.length * np.sin(np.pi * xi / cfg.length)
    d_shape = d_bump * support + bump * d_support

    ramp = 0.5 * (1.0 - np.cos(np.pi * np.clip(t_norm / cfg.peak_fraction, 0.0, 1.0)))
    post = np.clip(t_norm - cfg.peak_fraction, 0.0, None) / (1.0 - cfg.peak_fraction)
    osc = 1.0 + cfg.osc_amplitude * np.exp(-cfg.osc_damping * post) * np.sin(
        2.0 * np.pi * cfg.osc_cycles * post)
    depth = cfg.max_deflection * ramp * osc

    out = np.empty((t_norm.shape[0], cfg.n_nodes, 3))
    out[:, :, 0] = cfg.draw_scale * cfg.bump_width * np.outer(depth, d_shape)
    out[:, :, 1] = cfg.lateral_scale * np.outer(depth, shape ** 2)
    out[:, :, 2] = -np.outer(depth, shape)
    return out


def generate_bending_like(cfg: BendingSurrogateConfig | None = None,
                          designs=DEFAULT_DESIGNS, m: int = DEFAULT_STEPS,
                          seed: int = 0) -> SequenceDataset:
    """Synthetic nodal-displacement dataset over a list of punch positions.

    Deterministic given (cfg, designs, m, seed); noise is only added when
    cfg.noise > 0. Features are the punch position and normalized time.
    """
    cfg = cfg or BendingSurrogateConfig()
    if m < 2:
        raise ShapeMismatch("need at least two time steps")
    designs = np.asarray(designs, dtype=np.float64)
    t_norm = np.linspace(0.0, 1.0, m)
    time = t_norm * cfg.sim_time

    n_b = designs.shape[0]
    n_out = cfg.n_nodes * 3
    inputs = np.empty((n_b, m, 2))
    targets = np.empty((n_b, m, n_out))
    rng = np.random.default_rng(seed)
    for b, eps in enumerate(designs):
        inputs[b, :, 0] = eps
        inputs[b, :, 1] = t_norm
        fields = _deflection_fields(cfg, eps, t_norm)
        targets[b] = fields.reshape(m, n_out)
    if cfg.noise > 0.0:
        targets += cfg.noise * rng.standard_normal(targets.shape)

    target_names = [f"n{j:03d}_{c}" for j in range(cfg.n_nodes) for c in "xyz"]
    return SequenceDataset(
        designs=designs, time=time, inputs=inputs, targets=targets,
        feature_names=["eps", "tau"], target_names=target_names,
        metadata={"punch_mass_kg": cfg.punch_mass, "punch_speed_mps": cfg.punch_speed,
                  "length_mm": cfg.length, "sim_time_ms": cfg.sim_time})


@dataclass
class CsvSchema:
    """How to split CSV columns into features and targets.

    The first ``n_features`` columns after (design_id, t) are features.
    ``design_param`` names the feature holding the design value; when absent
    the design_id column is used.
    """

    n_features: int = 2
    design_param: str = "eps"


def write_csv(dataset: SequenceDataset, path) -> None:
    """Write the documented delimited layout: design_id,t,features...,targets..."""
    header = ["design_id", "t", *dataset.feature_names, *dataset.target_names]
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for b in range(dataset.n_designs):
            for i in range(dataset.n_steps):
                row = [str(b + 1), repr(float(dataset.time[i]))]
                row += [repr(float(v)) for v in dataset.inputs[b, i]]
                row += [repr(float(v)) for v in dataset.targets[b, i]]
                fh.write(",".join(row) + "\n")


def load_csv(path, schema: CsvSchema | None = None) -> SequenceDataset:
    """Parse the delimited layout back into a dataset.

    Validates strictly increasing time within each design and equal sequence
    lengths across designs; parse failures carry the 1-based row number and
    the column name.
    """
    schema = schema or CsvSchema()
    with open(path, "r", encoding="utf-8") as fh:
        lines = [ln.rstrip("\n").rstrip("\r") for ln in fh]
    lines = [ln for ln in lines if ln]
    if not lines:
        raise MissingColumn("empty file")
    header = lines[0].split(",")
    if header[:2] != ["design_id", "t"]:
        raise MissingColumn(f"header must start with design_id,t, got {header[:2]}")
    names = header[2:]
    if len(names) <= schema.n_features:
        raise MissingColumn(f"need more than {schema.n_features} data columns")
    feature_names = names[:schema.n_features]
    target_names = names[schema.n_features:]

    groups: dict[str, list[list[float]]] = {}
    for row_no, line in enumerate(lines[1:], start=2):
        cells = line.split(",")
        if len(cells) != len(header):
            raise ParseError(row_no, header[min(len(cells), len(header) - 1)],
                             f"expected {len(header)} cells, got {len(cells)}")
        parsed = []
        for col_name, cell in zip(header[1:], cells[1:]):
            try:
                parsed.append(float(cell))
            except ValueError:
                raise ParseError(row_no, col_name) from None
        groups.setdefault(cells[0], []).append(parsed)

    lengths = {k: len(v) for k, v in groups.items()}
    if len(set(lengths.values())) > 1:
        raise RaggedSequence(f"designs have differing lengths: {lengths}")

    design_ids = list(groups)
    n_b = len(design_ids)
    m = lengths[design_ids[0]]
    n_f = schema.n_features
    time = None
    inputs = np.empty((n_b, m, n_f))
    targets = np.empty((n_b, m, len(target_names)))
    for b, did in enumerate(design_ids):
        rows = np.asarray(groups[did])
        t = rows[:, 0]
        if np.any(np.diff(t) <= 0):
            raise NonMonotoneTime(f"design {did}: time not strictly increasing")
        if time is None:
            time = t
        inputs[b] = rows[:, 1:1 + n_f]
        targets[b] = rows[:, 1 + n_f:]

    if schema.design_param in feature_names:
        k = feature_names.index(schema.design_param)
        designs = inputs[:, 0, k]
    else:
        designs = np.array([float(d) for d in design_ids])

    return SequenceDataset(designs=designs, time=time, inputs=inputs,
                           targets=targets, feature_names=feature_names,
                           target_names=target_names)
