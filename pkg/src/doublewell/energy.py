"""Coefficient data and the pointwise algebra of the double-well density.

The nonconvex density is the pointwise minimum of two quadratic phase
energies

    0.5 * a |xi + C|^2   and   0.5 * b |xi + D|^2

with scalar moduli a, b >= delta > 0 and symmetric tilts C, D, all
piecewise constant per element.  Matrices use the packed storage and
Frobenius weights of the owning mesh.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ContractViolation


@dataclass
class CoefficientSet:
    mesh: object
    a: np.ndarray          # (n_elem,)
    b: np.ndarray          # (n_elem,)
    C: np.ndarray          # (n_elem, n_comp)
    D: np.ndarray          # (n_elem, n_comp)
    delta: float = 1e-12

    def __post_init__(self):
        m = self.mesh
        self.a = np.broadcast_to(np.asarray(self.a, float),
                                 (m.n_elem,)).copy()
        self.b = np.broadcast_to(np.asarray(self.b, float),
                                 (m.n_elem,)).copy()
        self.C = np.broadcast_to(np.atleast_2d(np.asarray(self.C, float)),
                                 (m.n_elem, m.n_comp)).copy()
        self.D = np.broadcast_to(np.atleast_2d(np.asarray(self.D, float)),
                                 (m.n_elem, m.n_comp)).copy()
        if np.any(self.a < self.delta) or np.any(self.b < self.delta):
            raise ContractViolation(
                "phase moduli must satisfy a, b >= delta > 0")
        if not (np.all(np.isfinite(self.C)) and np.all(np.isfinite(self.D))):
            raise ContractViolation("tilt matrices must be finite")

    def constant_values(self):
        """(a, b, C, D) when spatially constant, else raises."""
        for arr in (self.a, self.b):
            if np.ptp(arr) != 0.0:
                raise ContractViolation("coefficients are not constant")
        for arr in (self.C, self.D):
            if np.any(np.ptp(arr, axis=0) != 0.0):
                raise ContractViolation("coefficients are not constant")
        return float(self.a[0]), float(self.b[0]), self.C[0].copy(), \
            self.D[0].copy()


@dataclass
class PhaseConstants:
    """Derived per-element combinations used throughout the algebra."""
    A_plus: np.ndarray       # (aC + bD)/2
    A_minus: np.ndarray      # (bD - aC)/2
    m_bar: np.ndarray        # (a + b)/2
    m_under: np.ndarray      # (b - a)/2
    m_bar_rec: np.ndarray    # (1/a + 1/b)/2
    m_under_rec: np.ndarray  # (1/b - 1/a)/2


def phase_constants(coeffs):
    a, b = coeffs.a[:, None], coeffs.b[:, None]
    return PhaseConstants(
        A_plus=(a * coeffs.C + b * coeffs.D) / 2.0,
        A_minus=(b * coeffs.D - a * coeffs.C) / 2.0,
        m_bar=(coeffs.a + coeffs.b) / 2.0,
        m_under=(coeffs.b - coeffs.a) / 2.0,
        m_bar_rec=(1.0 / coeffs.a + 1.0 / coeffs.b) / 2.0,
        m_under_rec=(1.0 / coeffs.b - 1.0 / coeffs.a) / 2.0,
    )


def well_energies(coeffs, strain):
    """Both phase energies per element: (0.5 a |xi+C|^2, 0.5 b |xi+D|^2)."""
    m = coeffs.mesh
    strain = m.check_element_field(strain)
    ea = 0.5 * coeffs.a * m.frob_norm2(strain + coeffs.C)
    eb = 0.5 * coeffs.b * m.frob_norm2(strain + coeffs.D)
    return ea, eb


def h_density(coeffs, strain):
    """Nonconvex density h = min of the two phase energies, per element."""
    ea, eb = well_energies(coeffs, strain)
    return np.minimum(ea, eb)


def m_field(coeffs, chi):
    """Effective modulus chi_a a + chi_b b (= m_bar + psi m_under)."""
    return chi.chi_a * coeffs.a + chi.chi_b * coeffs.b


def reciprocal_identity(coeffs, chi):
    """Per-element residual of  1/m = m_bar_rec + m_under_rec * psi."""
    pc = phase_constants(coeffs)
    m = m_field(coeffs, chi)
    return np.abs(1.0 / m - (pc.m_bar_rec + pc.m_under_rec * chi.psi))


def B_field(coeffs, psi):
    """Constant energy offset  (a|C|^2 + b|D|^2)/2 + psi (b|D|^2 - a|C|^2)/2.

    Accepts the binary per-element psi as well as averaged psi in [-1, 1].
    """
    m = coeffs.mesh
    ac2 = coeffs.a * m.frob_norm2(coeffs.C)
    bd2 = coeffs.b * m.frob_norm2(coeffs.D)
    return (ac2 + bd2) / 2.0 + np.asarray(psi) * (bd2 - ac2) / 2.0


def tilt_field(coeffs, chi):
    """Loading term chi_a aC + chi_b bD  (= A_plus + psi A_minus)."""
    ab = (chi.chi_a * coeffs.a)[:, None] * coeffs.C
    return ab + (chi.chi_b * coeffs.b)[:, None] * coeffs.D


def conjugate_density(mesh, p, m, E):
    """Fenchel conjugate of a single quadratic phase:  |p - E|^2 / (2m)."""
    p = np.atleast_2d(np.asarray(p, float))
    E = np.atleast_2d(np.asarray(E, float))
    m = np.asarray(m, float)
    if np.any(m <= 0):
        raise ContractViolation("conjugate requires a positive modulus")
    return mesh.frob_norm2(p - E) / (2.0 * m)


def omega0_mask(coeffs, tol_eq=None):
    """Elements where a = b (up to tol_eq)."""
    if tol_eq is None:
        tol_eq = 1e-12 * (coeffs.a.max() + coeffs.b.max())
    return np.abs(coeffs.a - coeffs.b) <= tol_eq
