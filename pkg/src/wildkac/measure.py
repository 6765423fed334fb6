"""Sorted sample sets standing in for probability measures on the line."""

from __future__ import annotations

import io
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .exceptions import ConfigurationError


@dataclass(frozen=True, eq=False)
class EmpiricalMeasure:
    """Equal-weight atoms at ``samples`` (kept sorted) plus provenance ``meta``."""

    samples: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        x = np.sort(np.asarray(self.samples, dtype=float).ravel())
        if x.size < 1:
            raise ValueError("an empirical measure needs at least one sample")
        if not np.all(np.isfinite(x)):
            raise ValueError("samples must be finite")
        x.setflags(write=False)
        object.__setattr__(self, "samples", x)
        object.__setattr__(self, "meta", dict(self.meta))

    def __len__(self):
        return self.samples.size

    @property
    def n(self):
        return self.samples.size

    @property
    def mean(self):
        return float(self.samples.mean())

    @property
    def variance(self):
        return float(self.samples.var(ddof=1)) if self.n > 1 else 0.0

    @property
    def spread(self):
        return float(self.samples[-1] - self.samples[0])

    def moment(self, order, absolute=True):
        x = np.abs(self.samples) if absolute else self.samples
        return float(np.mean(x**order))

    def mean_se(self):
        return math.sqrt(self.variance / self.n)

    def moment_se(self, order, absolute=True):
        x = np.abs(self.samples) if absolute else self.samples
        v = x**order
        return float(v.std(ddof=1) / math.sqrt(v.size)) if v.size > 1 else 0.0

    def with_meta(self, **extra):
        return EmpiricalMeasure(self.samples, {**self.meta, **extra})

    # -- serialization: one JSON header line, then one sample per line
    def dumps(self):
        buf = io.StringIO()
        header = {**self.meta, "count": int(self.n)}
        buf.write(json.dumps(header, sort_keys=True, default=_json_default))
        buf.write("\n")
        for x in self.samples:
            buf.write(f"{x:.17g}\n")
        return buf.getvalue()

    def save(self, path):
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(self.dumps())

    @classmethod
    def loads(cls, text):
        lines = text.splitlines()
        if not lines:
            raise ConfigurationError("empty measure file")
        try:
            meta = json.loads(lines[0])
        except json.JSONDecodeError as exc:
            raise ConfigurationError(f"bad measure header: {exc}") from None
        values = np.array([float(s) for s in lines[1:] if s.strip()])
        count = meta.pop("count", None)
        if count is not None and count != values.size:
            raise ConfigurationError(f"header says {count} samples, found {values.size}")
        return cls(values, meta)

    @classmethod
    def load(cls, path):
        with open(path, encoding="utf-8") as fh:
            return cls.loads(fh.read())


def _json_default(obj):
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not JSON serializable: {type(obj).__name__}")
