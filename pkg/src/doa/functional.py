"""Vector-valued trace, trace norm, log-determinant series and spectrum scans.

The trace of a canonical-form operator is the tuple

    tau(A) = (Tr A0, <Tr B_1 A_1>_1, ..., <Tr B_N A_N>_N),

component j living on the trailing N - j coordinates.  It is linear, cyclic
(tau(ab) = tau(ba)) and equals the derivative of the vector determinant at
the identity.  The trace norm sums, over levels, the largest per-node
nuclear norm: for level 0 the nuclear norm of A0(k); for level j >= 1 the
sum of square roots of the eigenvalues of C_j = <B_j B_j*>_j <A_j* A_j>_j,
a product of two positive semidefinite matrices whose spectrum is real and
nonnegative.  It dominates the operator norm and is submultiplicative.

For |lam| > trace_norm(op) the component-wise principal logarithm of the
determinant of lam*I - op matches the power-trace series

    ln pi(lam I - op) = (ln lam) tau(I) - sum_n tau(op^n) / (n lam^n),

after the polynomial component 0 is normalized by lam^M to keep the value
in the right half plane (the remaining components stay near 1, so no
branch tracking is needed in this domain).

The spectrum-degree scan classifies sample points lam by the first
elimination step at which pi_j(lam I - op) dips below the zero threshold;
degree N + 1 marks the resolvent set.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .elimination import (
    DEFAULT_ZERO_TOL,
    Invertible,
    NonInvertible,
    NonInvertibleError,
    eliminate,
)
from .grid import MatrixField, ScalarComponents, integrate_first, pointwise_adjoint, pointwise_matmul
from .operator import DefectOperator, add, compose, compress, identity_operator, pencil, scale

__all__ = [
    "VectorTrace",
    "SpectrumScan",
    "LogDetSeries",
    "NumericalConsistencyError",
    "trace",
    "power_trace",
    "power_traces",
    "trace_norm",
    "log_det_series",
    "spectrum_scan",
    "iso_check",
    "exp_operator",
    "DEFAULT_COMPRESS_TOL",
]

DEFAULT_COMPRESS_TOL = 1e-13


class NumericalConsistencyError(ArithmeticError):
    """A quantity that must be real nonnegative came out significantly negative."""


class VectorTrace(ScalarComponents):
    """Trace tuple (tau_0, ..., tau_N) on shrinking grids."""


def trace(op: DefectOperator) -> VectorTrace:
    """tau(op); absent levels contribute zero components."""
    spec = op.spec
    comps = [
        MatrixField(spec, np.trace(op.a0.data, axis1=-2, axis2=-1)[..., None, None])
    ]
    for j in range(1, op.n + 1):
        trailing = spec.trailing(j)
        t = op.terms.get(j)
        if t is None:
            comps.append(MatrixField.zeros(trailing, 1, 1))
            continue
        prod_trace = np.einsum("...ij,...ji->...", t.b.data, t.a.data)
        mean = prod_trace.mean(axis=tuple(range(j)))
        comps.append(MatrixField(trailing, np.asarray(mean)[..., None, None]))
    return VectorTrace(tuple(comps))


def power_traces(
    op: DefectOperator,
    n_max: int,
    compress_tol: float | None = DEFAULT_COMPRESS_TOL,
) -> list[VectorTrace]:
    """[tau(op), tau(op^2), ..., tau(op^n_max)] via repeated composition.

    Powers are compressed between steps (default tol 1e-13, below all test
    tolerances) to stop inner widths from growing geometrically.
    """
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    out = [trace(op)]
    power = op
    for _ in range(2, n_max + 1):
        power = compose(power, op)
        if compress_tol is not None:
            power = compress(power, compress_tol)
        out.append(trace(power))
    return out


def power_trace(
    op: DefectOperator,
    n: int,
    compress_tol: float | None = DEFAULT_COMPRESS_TOL,
) -> VectorTrace:
    """tau(op^n)."""
    return power_traces(op, n, compress_tol)[-1]


def _psd_sqrt(mats: np.ndarray) -> np.ndarray:
    herm = 0.5 * (mats + np.conj(np.swapaxes(mats, -1, -2)))
    w, v = np.linalg.eigh(herm)
    w = np.clip(w, 0.0, None)
    return np.einsum("...ik,...k,...jk->...ij", v, np.sqrt(w), np.conj(v))


def trace_norm(op: DefectOperator) -> float:
    """Sum over levels of the largest per-node nuclear norm.

    Raises NumericalConsistencyError if some C_j eigenvalue has a real part
    below -1e-8 times the matrix scale (C_j is a product of two positive
    semidefinite matrices, so its spectrum must be real nonnegative).
    """
    g0 = np.linalg.svd(op.a0.data, compute_uv=False).sum(axis=-1)
    total = float(np.max(g0))
    for j, t in op.terms.items():
        x = integrate_first(pointwise_matmul(t.b, pointwise_adjoint(t.b)), j).data
        y = integrate_first(pointwise_matmul(pointwise_adjoint(t.a), t.a), j).data
        xs = _psd_sqrt(x)
        sym = np.matmul(np.matmul(xs, y), xs)
        sym = 0.5 * (sym + np.conj(np.swapaxes(sym, -1, -2)))
        eigs = np.linalg.eigvalsh(sym)
        scale_ref = max(1.0, float(np.max(np.abs(eigs))) if eigs.size else 0.0)
        if eigs.size and float(np.min(eigs)) < -1e-8 * scale_ref:
            raise NumericalConsistencyError(
                f"level {j}: singular-value matrix has eigenvalue "
                f"{float(np.min(eigs)):.3e} < 0"
            )
        g = np.sqrt(np.clip(eigs, 0.0, None)).sum(axis=-1)
        total += float(np.max(g))
    return total


@dataclass(frozen=True)
class LogDetSeries:
    """Both sides of the log-determinant series, plus the truncation bound."""

    lhs: VectorTrace
    rhs: VectorTrace
    tail_bound: float


def log_det_series(op: DefectOperator, lam: complex, n_max: int) -> LogDetSeries:
    """Compare ln pi(lam I - op) against the truncated power-trace series.

    Requires |lam| > trace_norm(op).  The reported tail bound is the
    geometric remainder (q^(n_max+1) / (1 - q)) * (M + sum of widths) with
    q = trace_norm / |lam|.
    """
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    tn = trace_norm(op)
    lam = complex(lam)
    if abs(lam) <= tn:
        raise ValueError(
            f"|lambda| = {abs(lam):.6g} must exceed the trace norm {tn:.6g}"
        )
    outcome = eliminate(pencil(lam, op))
    if isinstance(outcome, NonInvertible):  # cannot happen in the valid domain
        raise NonInvertibleError(outcome)

    m = op.m
    log_lam = np.log(lam)
    lhs_fields = []
    for j, f in enumerate(outcome.pi.fields):
        if j == 0:
            data = m * log_lam + np.log(f.data / lam**m)
        else:
            data = np.log(f.data)
        lhs_fields.append(MatrixField(f.spec, data))
    lhs = VectorTrace(tuple(lhs_fields))

    taus = power_traces(op, n_max)
    rhs_fields = []
    spec = op.spec
    for j in range(op.n + 1):
        trailing = spec.trailing(j)
        base = m * log_lam if j == 0 else 0.0
        acc = np.full(trailing.shape + (1, 1), base, dtype=np.complex128)
        for n, tau_n in enumerate(taus, start=1):
            acc = acc - tau_n.fields[j].data / (n * lam**n)
        rhs_fields.append(MatrixField(trailing, acc))
    rhs = VectorTrace(tuple(rhs_fields))

    q = tn / abs(lam)
    m_total = m + sum(t.width for t in op.terms.values())
    tail = q ** (n_max + 1) / (1.0 - q) * m_total
    return LogDetSeries(lhs, rhs, tail)


@dataclass(frozen=True)
class SpectrumScan:
    """Degrees and per-step |pi| minima for a list of sample points.

    ``degrees[i]`` is the first failing elimination step of lam_i*I - op,
    or N + 1 when every step passed.  ``min_abs_pi[i][j]`` is the minimum
    |pi_j| over its grid, NaN for steps after a failure.
    """

    lambdas: tuple[complex, ...]
    degrees: tuple[int, ...]
    min_abs_pi: tuple[tuple[float, ...], ...]


def _default_workers() -> int:
    env = os.environ.get("DOA_THREADS", "").strip()
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return min(8, os.cpu_count() or 1)


def spectrum_scan(
    op: DefectOperator,
    lambdas,
    zero_tol: float = DEFAULT_ZERO_TOL,
    workers: int | None = None,
) -> SpectrumScan:
    """Degree D(lam) of each sample: the first step where pi vanishes.

    Sample points are independent tasks; results keep the input order.
    The worker count defaults to DOA_THREADS (or the CPU count, capped).
    """
    lambdas = tuple(complex(v) for v in lambdas)
    n = op.n

    def one(lam: complex):
        outcome = eliminate(pencil(lam, op), zero_tol)
        if isinstance(outcome, Invertible):
            return n + 1, outcome.min_abs_by_step
        mins = list(outcome.min_abs_by_step)
        mins.extend([math.nan] * (n + 1 - len(mins)))
        return outcome.step, tuple(mins)

    count = _default_workers() if workers is None else max(1, workers)
    if count == 1 or len(lambdas) <= 1:
        results = [one(lam) for lam in lambdas]
    else:
        with ThreadPoolExecutor(max_workers=count) as pool:
            results = list(pool.map(one, lambdas))

    degrees = tuple(r[0] for r in results)
    mins = tuple(r[1] for r in results)
    return SpectrumScan(lambdas, degrees, mins)


def iso_check(
    a: DefectOperator,
    b: DefectOperator,
    n_max: int,
    tol: float,
    compress_tol: float | None = DEFAULT_COMPRESS_TOL,
) -> bool:
    """True iff tau(a^n) = tau(b^n) componentwise/pointwise for n = 1..n_max."""
    ta = power_traces(a, n_max, compress_tol)
    tb = power_traces(b, n_max, compress_tol)
    return all(x.max_abs_diff(y) <= tol for x, y in zip(ta, tb))


def exp_operator(
    op: DefectOperator,
    compress_tol: float = DEFAULT_COMPRESS_TOL,
    max_terms: int = 60,
) -> DefectOperator:
    """exp(op) by scaling and squaring over the operator product.

    The argument is scaled so its trace norm is at most 1/2, the series is
    summed until the next term's trace norm is negligible, and the result
    is squared back up with compression after every product.
    """
    tn = trace_norm(op)
    squarings = 0 if tn <= 0.5 else int(math.ceil(math.log2(tn / 0.5)))
    x = scale(2.0**-squarings, op) if squarings else op

    acc = add(identity_operator(op.spec, op.m), x)
    term = x
    for k in range(2, max_terms + 1):
        term = compress(scale(1.0 / k, compose(term, x)), compress_tol)
        acc = compress(add(acc, term), compress_tol)
        if trace_norm(term) < 1e-17 * max(1.0, trace_norm(acc)):
            break
    for _ in range(squarings):
        acc = compress(compose(acc, acc), compress_tol)
    return acc
