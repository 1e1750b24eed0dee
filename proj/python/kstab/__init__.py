"""Toric K-stability checks: non-Archimedean invariants, geodesic rays and slopes."""

import json

from . import _kstab
from ._kstab import ValidationError, help_text, run, slope_estimate, suite_names, verify

__all__ = ["ValidationError", "help_text", "invariants", "run", "scan", "slope_estimate", "suite_names", "verify"]


def _text(x):
    # JSON text, or a dict/list that is serialized first
    return x if isinstance(x, str) else json.dumps(x)


def invariants(polytope, tc):
    return _kstab.invariants(_text(polytope), _text(tc))


def scan(polytope, slopes, samples=200, seed=1):
    return _kstab.scan(_text(polytope), _text(slopes), samples, seed)
