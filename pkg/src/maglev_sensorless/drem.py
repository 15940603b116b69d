"""Regressor extension and mixing with scalar gradient estimators.

A bank of stable first-order filters turns one regression row into a
square system Z = Omega * unknowns.  Multiplying by the adjugate of
Omega decouples it into scalar regressions

    Y_i = Delta * unknown_i,        Delta = det(Omega),

each estimated with its own gradient law

    est_i' = gain_i * Delta * (Y_i - Delta * est_i),

whose error decays like exp(-gain * integral of Delta^2).  The update
never divides by Delta, so losing excitation merely freezes the
estimates.  Adjugates are computed by explicit cofactor expansion (not
inverse times determinant) because they must stay well defined as Delta
passes through zero.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "det_small",
    "adjugate",
    "mix",
    "mix3",
    "mix5_first",
    "ExtendedRegressor",
    "extend_two_dof_channel",
    "extend_one_dof",
    "GradientEstimator",
    "ExcitationMonitor",
    "flux_estimate",
]


# ---------------------------------------------------------------------------
# Small dense determinants / adjugates (cofactor expansion, n <= 5)
# ---------------------------------------------------------------------------


def _det2(m):
    return m[0][0] * m[1][1] - m[0][1] * m[1][0]


def _det3(m):
    a, b, c = m[0]
    d, e, f = m[1]
    g, h, i = m[2]
    return a * (e * i - f * h) - b * (d * i - f * g) + c * (d * h - e * g)


def _det4(m):
    r0 = m[0]
    total = 0.0
    sign = 1.0
    rest = m[1:]
    for j in range(4):
        if r0[j] != 0.0:
            minor = [[row[jj] for jj in range(4) if jj != j] for row in rest]
            total += sign * r0[j] * _det3(minor)
        sign = -sign
    return total


def _det5(m):
    r0 = m[0]
    total = 0.0
    sign = 1.0
    rest = m[1:]
    for j in range(5):
        if r0[j] != 0.0:
            minor = [[row[jj] for jj in range(5) if jj != j] for row in rest]
            total += sign * r0[j] * _det4(minor)
        sign = -sign
    return total


_DETS = {1: lambda m: m[0][0], 2: _det2, 3: _det3, 4: _det4, 5: _det5}


def _as_rows(M):
    return [[float(v) for v in row] for row in np.asarray(M, dtype=float)]


def det_small(M) -> float:
    """Determinant of a square matrix with n <= 5, by cofactor expansion."""
    rows = _as_rows(M)
    n = len(rows)
    try:
        return _DETS[n](rows)
    except KeyError:
        raise ValueError(f"det_small supports n <= 5, got n = {n}") from None


def adjugate(M):
    """(adjugate, determinant) by cofactor expansion, n <= 5.

    adj[i][j] = (-1)^(i+j) * minor(j, i); the determinant is recovered
    from the same cofactors so both come from one code path.
    """
    rows = _as_rows(M)
    n = len(rows)
    if n == 1:
        return np.array([[1.0]]), rows[0][0]
    if n > 5:
        raise ValueError(f"adjugate supports n <= 5, got n = {n}")
    sub_det = _DETS[n - 1]
    cof = [[0.0] * n for _ in range(n)]
    for i in range(n):
        reduced = [rows[ii] for ii in range(n) if ii != i]
        for j in range(n):
            minor = [[row[jj] for jj in range(n) if jj != j] for row in reduced]
            cof[i][j] = (-1.0) ** (i + j) * sub_det(minor)
    det = sum(rows[0][j] * cof[0][j] for j in range(n))
    adj = np.array(cof).T
    return adj, det


def mix(Omega, Z):
    """(Delta, adj(Omega) @ Z) for a square extended regressor."""
    adj, det = adjugate(Omega)
    return det, adj @ np.asarray(Z, dtype=float)


def mix3(omega_rows, z3):
    """Fast 3x3 mixing on plain float rows; returns (Delta, [Y1, Y2, Y3])."""
    (a, b, c), (d, e, f), (g, h, i) = omega_rows
    # cofactors
    A = e * i - f * h
    B = -(d * i - f * g)
    C = d * h - e * g
    D = -(b * i - c * h)
    E = a * i - c * g
    F = -(a * h - b * g)
    G = b * f - c * e
    H = -(a * f - c * d)
    I = a * e - b * d
    det = a * A + b * B + c * C
    z0, z1, z2 = z3
    # adj = cofactor^T
    return det, (
        A * z0 + D * z1 + G * z2,
        B * z0 + E * z1 + H * z2,
        C * z0 + F * z1 + I * z2,
    )


def _det4_rows(r0, r1, r2, r3):
    # Laplace over the first two rows: 2x2 minors times complements
    a0, a1, a2, a3 = r0
    b0, b1, b2, b3 = r1
    c0, c1, c2, c3 = r2
    d0, d1, d2, d3 = r3
    return ((a0 * b1 - a1 * b0) * (c2 * d3 - c3 * d2)
            - (a0 * b2 - a2 * b0) * (c1 * d3 - c3 * d1)
            + (a0 * b3 - a3 * b0) * (c1 * d2 - c2 * d1)
            + (a1 * b2 - a2 * b1) * (c0 * d3 - c3 * d0)
            - (a1 * b3 - a3 * b1) * (c0 * d2 - c2 * d0)
            + (a2 * b3 - a3 * b2) * (c0 * d1 - c1 * d0))


def mix5_first(omega_rows, z5):
    """(Delta, first mixed component) for a 5x5 extension.

    Shares the five column-0 minors between the determinant (expansion
    along column 0) and the first adjugate row, which is all the 1-dof
    estimator needs.
    """
    r0, r1, r2, r3, r4 = (tuple(row[1:5]) for row in omega_rows)
    minors = (
        _det4_rows(r1, r2, r3, r4),
        _det4_rows(r0, r2, r3, r4),
        _det4_rows(r0, r1, r3, r4),
        _det4_rows(r0, r1, r2, r4),
        _det4_rows(r0, r1, r2, r3),
    )
    det = 0.0
    y1 = 0.0
    sign = 1.0
    for i in range(5):
        det += sign * omega_rows[i][0] * minors[i]
        y1 += sign * z5[i] * minors[i]
        sign = -sign
    return det, y1


# ---------------------------------------------------------------------------
# Extension assembly
# ---------------------------------------------------------------------------


@dataclass
class ExtendedRegressor:
    """Square extension of one regression channel."""

    omega: np.ndarray        # (n, n)
    zvec: np.ndarray         # (n,)
    delta: float             # det(omega)
    mixed: np.ndarray        # adj(omega) @ zvec (first entry only for 1-dof)


def extend_two_dof_channel(z_raw: float, col0_raw: float, col1_raw: float,
                           const_raw: float, fstates) -> ExtendedRegressor:
    """Assemble one 2-dof channel from the raw row and two filter banks.

    ``fstates`` has shape (2, 4): per filter, the filtered copies of
    (z, col0, col1, const).  The constant regressor entry is filtered
    like any other signal, transients included.  Column order matches
    the unknown stack (theta_a, theta_b, theta_a*theta_b), i.e. for
    channel 1 col0 = xi2 and col1 = xi1.
    """
    rows = (
        (col0_raw, col1_raw, const_raw),
        (fstates[0][1], fstates[0][2], fstates[0][3]),
        (fstates[1][1], fstates[1][2], fstates[1][3]),
    )
    z = (z_raw, fstates[0][0], fstates[1][0])
    delta, mixed = mix3(rows, z)
    return ExtendedRegressor(
        omega=np.array(rows), zvec=np.array(z), delta=delta, mixed=np.array(mixed))


def extend_one_dof(z_raw: float, phi_raw, fstates) -> ExtendedRegressor:
    """Assemble the 5x5 1-dof extension.

    ``fstates`` has shape (4, 6): per filter, the filtered copies of
    (z, phi_1..phi_5).  Only the first mixed component is produced since
    only eta itself (not its powers) is estimated.
    """
    rows = [tuple(float(v) for v in phi_raw)]
    z = [float(z_raw)]
    for j in range(4):
        rows.append(tuple(float(v) for v in fstates[j][1:6]))
        z.append(float(fstates[j][0]))
    delta, y1 = mix5_first(rows, z)
    return ExtendedRegressor(
        omega=np.array(rows), zvec=np.array(z), delta=delta, mixed=np.array([y1]))


# ---------------------------------------------------------------------------
# Scalar estimators
# ---------------------------------------------------------------------------


class GradientEstimator:
    """Scalar gradient law est' = gain * Delta * (y - Delta * est)."""

    __slots__ = ("estimate", "gain")

    def __init__(self, gain: float, estimate: float = 0.0):
        if not gain > 0.0:
            raise ValueError(f"estimator gain must be positive, got {gain!r}")
        self.gain = float(gain)
        self.estimate = float(estimate)

    def step(self, delta: float, y: float, dt: float) -> float:
        g = self.gain
        e = self.estimate

        def f(x):
            return g * delta * (y - delta * x)

        k1 = f(e)
        k2 = f(e + 0.5 * dt * k1)
        k3 = f(e + 0.5 * dt * k2)
        k4 = f(e + dt * k3)
        self.estimate = e + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        return self.estimate


@dataclass
class ExcitationMonitor:
    """Accumulates integral of Delta^2; nondecreasing by construction."""

    value: float = 0.0

    def step(self, delta: float, dt: float) -> float:
        self.value += delta * delta * dt
        return self.value


def flux_estimate(psi, parameter_estimate):
    """Reconstructed flux: open-loop copy plus estimated constant offset."""
    return np.asarray(psi, dtype=float) + np.asarray(parameter_estimate, dtype=float)
