"""Suspension flows with a roof function constant on 1-cylinders.

A flow is represented only through its spectra: the flow exponents of an
invariant measure are the base exponents divided by the mean return time,
with one zero exponent added for the flow direction.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .cocycle import (
    EQUAL_TOL, LinearCocycle, _as_orbit, _block_spectra, has_simple_spectrum, periodic_lyapunov_exponents,
)
from .domination import _group_moduli, unstable_signature
from .spectrum import LyapunovSpectrum, MeasureSpec, _as_spec

SCALE_TOL = 1e-10


@dataclass(frozen=True)
class RoofFunction:
    """Return time ``h(a) > 0`` for each symbol ``a``."""

    values: np.ndarray

    def __post_init__(self):
        h = np.asarray(self.values, dtype=float).ravel()
        if h.size == 0 or not np.isfinite(h).all():
            raise ValueError("roof values must be finite")
        if (h <= 0).any():
            raise ValueError("roof function must be bounded away from zero")
        h.setflags(write=False)
        object.__setattr__(self, "values", h)

    @classmethod
    def constant(cls, value: float, alphabet_size: int) -> "RoofFunction":
        return cls(np.full(alphabet_size, float(value)))

    @property
    def h_min(self) -> float:
        return float(self.values.min())

    def __call__(self, a: int) -> float:
        return float(self.values[a])


@dataclass(frozen=True)
class FlowSpectrum:
    """Ascending flow exponents (one of them the flow-direction zero)."""

    exponents: np.ndarray
    normalization: float
    zero_index: int = field(default=-1)

    def base_exponents(self) -> np.ndarray:
        """Drop the flow zero and undo the time change."""
        return np.delete(self.exponents, self.zero_index) * self.normalization


def roof_integral(h: RoofFunction, eta) -> float:
    """Mean return time ``int h d eta``."""
    eta = _as_spec(eta)
    if eta.kind == "periodic":
        return float(np.mean(h.values[list(eta.word.symbols)]))
    pi = eta.markov.stationary
    if len(pi) != len(h.values):
        raise ValueError("roof function and measure have different alphabets")
    return float(pi @ h.values)


def suspend_spectrum(base, h: RoofFunction, eta) -> FlowSpectrum:
    """Flow exponents for the suspension of ``base`` (exponents of ``eta``)."""
    ex = np.asarray(base.exponents if isinstance(base, LyapunovSpectrum) else base, dtype=float)
    norm = roof_integral(h, eta)
    scaled = ex / norm
    z = int(np.searchsorted(scaled, 0.0, side="left"))
    flow = np.insert(scaled, z, 0.0)
    return FlowSpectrum(flow, norm, z)


def _sign_pattern(ex: np.ndarray, tol: float = 1e-12) -> tuple[int, ...]:
    return tuple(int(np.sign(v)) if abs(v) > tol else 0 for v in ex)


@dataclass
class CorrespondenceReport:
    rows: list[dict]
    violations: list[str]

    @property
    def ok(self) -> bool:
        return not self.violations


def flow_signature_correspondence(c: LinearCocycle, orbits, h: RoofFunction,
                                  tol: float = SCALE_TOL) -> CorrespondenceReport:
    """Check that suspension preserves the orbit-level spectral data.

    For each orbit the unstable signature, the simple-spectrum flag and the
    sign pattern must agree between the base and the flow (after removing
    the zero exponent), the flow exponents times the mean roof must recover
    the base exponents, and each adjacent gap must shrink by the mean roof.
    """
    orbits = list(orbits)
    if not orbits:
        raise ValueError("orbits must be nonempty")
    rows, violations = [], []
    for o in orbits:
        oc = _as_orbit(c, o)
        eta = MeasureSpec.periodic(oc.word)
        base = periodic_lyapunov_exponents(oc)
        flow = suspend_spectrum(base, h, eta)
        rec = flow.base_exponents()
        nz = np.delete(flow.exponents, flow.zero_index)
        sig = unstable_signature(oc) if oc.split[1] else ()
        simple = has_simple_spectrum(oc)
        fsig, fsimple = _flow_orbit_data(oc, flow)
        scale_err = float(np.abs(rec - base).max())
        gap_err = 0.0
        if len(base) > 1:
            gap_err = float(np.abs(np.diff(nz) * flow.normalization - np.diff(base)).max())
        w = str(oc.word)
        if scale_err > tol * max(1.0, float(np.abs(base).max())):
            violations.append(f"{w}: exponent scaling off by {scale_err:.3g}")
        if gap_err > tol * max(1.0, float(np.abs(base).max())):
            violations.append(f"{w}: gap scaling off by {gap_err:.3g}")
        if _sign_pattern(nz) != _sign_pattern(base):
            violations.append(f"{w}: sign pattern changed")
        if (np.argsort(nz, kind="stable") != np.argsort(base, kind="stable")).any():
            violations.append(f"{w}: ordering changed")
        if int(np.sum(flow.exponents == 0.0)) - int(np.sum(base == 0.0)) != 1:
            violations.append(f"{w}: expected exactly one added zero exponent")
        if fsig != sig:
            violations.append(f"{w}: signature {sig} became {fsig}")
        if fsimple != simple:
            violations.append(f"{w}: simplicity flag changed")
        rows.append({"word": w, "signature": str(sig), "flow_signature": str(fsig),
                     "simple": simple, "flow_simple": fsimple,
                     "normalization": flow.normalization, "scale_error": scale_err,
                     "gap_error": gap_err})
    return CorrespondenceReport(rows, violations)


def _flow_orbit_data(oc, flow: FlowSpectrum, tol: float = EQUAL_TOL):
    """Signature and simplicity of the flow's period map along a closed orbit.

    The flow period is ``n * int h``; exponents times the period give the
    log-moduli of the period map, which are regrouped from scratch.
    """
    period = oc.period * flow.normalization
    nz = np.delete(flow.exponents, flow.zero_index) * period
    spectra = _block_spectra(oc, tol)
    flags, logs = [], []
    for b in spectra:
        flags.append([z.imag != 0 for z in b.eig.eigenvalues])
    # exponents of each block, recovered from the sorted flow spectrum
    sig = ()
    for b, fl in zip(spectra, flags):
        base_logs = np.asarray(b.log_moduli)
        idx = [int(np.argmin(np.abs(nz - v))) for v in base_logs]
        logs.append(nz[idx])
        if b.name == "unstable":
            sig = _group_moduli(list(nz[idx]), fl, tol)
    simple = all(b.eig.real_and_distinct for b in spectra)
    if simple:
        entries = sorted((lv, d.real) for b, lg in zip(spectra, logs) for lv, d in zip(lg, b.signs))
        simple = all(not (s1 == s2 and abs(l1 - l2) <= tol * max(1.0, abs(l1), abs(l2)))
                     for (l1, s1), (l2, s2) in zip(entries, entries[1:]))
    return sig, simple


def roof_from_values(values: Sequence[float]) -> RoofFunction:
    return RoofFunction(np.asarray(values, dtype=float))
