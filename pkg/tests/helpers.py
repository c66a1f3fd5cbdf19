"""Shared builders for randomized tests.

Random operators are generated with a0 = I + small perturbation and small
term coefficients so that every elimination step stays well away from zero
(used by the property suites, which need invertible samples).
"""

from __future__ import annotations

import numpy as np

from doa import DefectOperator, GridSpec, MatrixField, StateVector, Term


def random_field(spec, rows, cols, rng, scale=1.0, complex_=True):
    data = rng.standard_normal(spec.shape + (rows, cols))
    if complex_:
        data = data + 1j * rng.standard_normal(spec.shape + (rows, cols))
        data = data / np.sqrt(2.0)
    return MatrixField(spec, scale * data)


def random_operator(
    spec,
    m,
    rng,
    widths=None,
    a0_perturb=0.25,
    term_scale=0.35,
    complex_=True,
):
    """I + small a0 perturbation plus bounded terms: elimination-safe."""
    if widths is None:
        widths = {j: 1 for j in range(1, spec.dims + 1)}
    a0 = MatrixField(
        spec, np.eye(m) + a0_perturb * random_field(spec, m, m, rng, complex_=complex_).data
    )
    terms = {
        j: Term(
            random_field(spec, m, w, rng, term_scale, complex_),
            random_field(spec, w, m, rng, term_scale, complex_),
        )
        for j, w in widths.items()
        if w > 0
    }
    return DefectOperator(a0, terms)


def random_state(spec, m, rng, complex_=True):
    vals = rng.standard_normal(spec.shape + (m,))
    if complex_:
        vals = vals + 1j * rng.standard_normal(spec.shape + (m,))
    return StateVector(spec, vals)


def grid66():
    return GridSpec((6, 6))
