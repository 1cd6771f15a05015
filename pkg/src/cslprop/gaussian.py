"""Exact algebra of complex Gaussian exponentials.

A :class:`ComplexGaussian` represents

    g(z) = exp(-1/2 z^T A z + b^T z + c),

with complex symmetric ``A``, complex ``b`` and a complex log-constant ``c``.
Keeping the constant in log form lets prefactors such as ``det(A)^(-1/2)``
carry their phase without over- or underflow. Every density matrix, kernel
and state in the package is a sum of these.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

LOG_2PI = np.log(2.0 * np.pi)
PD_RTOL = 1e-12


class IntegrabilityError(ArithmeticError):
    """The real part of the quadratic block to be integrated is not positive definite."""

    def __init__(self, message: str, eigenvalue: float):
        super().__init__(message)
        self.eigenvalue = eigenvalue


@dataclass(frozen=True, eq=False)
class ComplexGaussian:
    A: np.ndarray
    b: np.ndarray
    c: complex = 0.0

    def __post_init__(self) -> None:
        A = np.atleast_2d(np.asarray(self.A, dtype=complex))
        b = np.atleast_1d(np.asarray(self.b, dtype=complex))
        if A.shape != (b.size, b.size):
            raise ValueError(f"A has shape {A.shape} but b has length {b.size}")
        # Only the symmetric part of A contributes to z^T A z.
        A = 0.5 * (A + A.T)
        A.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "c", complex(self.c))

    @property
    def dim(self) -> int:
        return self.b.size

    @classmethod
    def unit(cls, dim: int) -> ComplexGaussian:
        return cls(np.zeros((dim, dim)), np.zeros(dim), 0.0)

    @classmethod
    def from_exponent(cls, quad: np.ndarray, lin: np.ndarray | None = None, const: complex = 0.0) -> ComplexGaussian:
        """Build ``exp(z^T quad z + lin^T z + const)``."""
        quad = np.asarray(quad, dtype=complex)
        lin = np.zeros(quad.shape[0]) if lin is None else lin
        return cls(-2.0 * quad, lin, const)

    def scaled(self, factor: complex) -> ComplexGaussian:
        """Multiply by a constant (zero is not representable)."""
        return ComplexGaussian(self.A, self.b, self.c + np.log(complex(factor)))

    def __mul__(self, other: ComplexGaussian) -> ComplexGaussian:
        return multiply(self, other)

    def __call__(self, z) -> np.ndarray:
        return evaluate(self, z)


def multiply(g1: ComplexGaussian, g2: ComplexGaussian) -> ComplexGaussian:
    if g1.dim != g2.dim:
        raise ValueError(f"dimension mismatch: {g1.dim} vs {g2.dim}")
    return ComplexGaussian(g1.A + g2.A, g1.b + g2.b, g1.c + g2.c)


def pullback(g: ComplexGaussian, T: np.ndarray, shift: np.ndarray | None = None) -> ComplexGaussian:
    """Return ``h(w) = g(T w + shift)`` as a Gaussian in ``w``.

    ``T`` has shape ``(g.dim, new_dim)``. Used for embedding a Gaussian into a
    larger variable set and for linear substitutions such as setting x = y.
    """
    T = np.asarray(T, dtype=float)
    if T.shape[0] != g.dim:
        raise ValueError(f"T must have {g.dim} rows, got shape {T.shape}")
    A = T.T @ g.A @ T
    if shift is None:
        return ComplexGaussian(A, T.T @ g.b, g.c)
    s = np.asarray(shift, dtype=complex)
    b = T.T @ (g.b - g.A @ s)
    c = g.c - 0.5 * s @ g.A @ s + g.b @ s
    return ComplexGaussian(A, b, c)


def embed(g: ComplexGaussian, dim: int, indices: Sequence[int]) -> ComplexGaussian:
    """View ``g`` as a function of ``dim`` variables, its own variables sitting at ``indices``."""
    if len(indices) != g.dim:
        raise ValueError(f"need {g.dim} indices, got {len(indices)}")
    T = np.zeros((g.dim, dim))
    T[np.arange(g.dim), list(indices)] = 1.0
    return pullback(g, T)


def _check_integrable(M: np.ndarray, scale: float) -> None:
    # For symmetric M, Re(v^H M v) = v^H Re(M) v, so Re(M) > 0 is the convergence condition.
    eig = np.linalg.eigvalsh(M.real)
    threshold = PD_RTOL * max(scale, np.finfo(float).tiny)
    if eig[0] <= threshold:
        raise IntegrabilityError(
            f"non-integrable direction: Re(A) block has eigenvalue {eig[0]:.3e} "
            f"(threshold {threshold:.3e})",
            float(eig[0]),
        )


def log_inv_sqrt_det(M: np.ndarray) -> complex:
    """``log det(M)^(-1/2)`` on the branch continuous from positive-definite real M.

    With Re(M) positive definite every eigenvalue of M has positive real part,
    so summing principal logs of the eigenvalues accumulates the phase
    without ever crossing a branch cut.
    """
    eig = np.linalg.eigvals(M)
    return -0.5 * np.sum(np.log(eig.astype(complex)))


def integrate_out(g: ComplexGaussian, variables: Iterable[int]) -> ComplexGaussian:
    """Integrate ``g`` over the real line in each of ``variables``.

    The remaining variables keep their relative order. Integrating all
    variables returns a zero-dimensional Gaussian whose ``exp(c)`` is the value
    of the integral.
    """
    S = sorted(set(int(i) for i in variables))
    if not S:
        return g
    if S[0] < 0 or S[-1] >= g.dim:
        raise IndexError(f"variables {S} out of range for dim {g.dim}")
    R = [i for i in range(g.dim) if i not in S]
    M = g.A[np.ix_(S, S)]
    _check_integrable(M, np.linalg.norm(g.A, 2))
    bS = g.b[S]
    n = len(S)
    if R:
        ARS = g.A[np.ix_(R, S)]
        sol = np.linalg.solve(M, np.column_stack([ARS.T, bS]))
        Minv_ASR, Minv_b = sol[:, :-1], sol[:, -1]
        A_new = g.A[np.ix_(R, R)] - ARS @ Minv_ASR
        b_new = g.b[R] - ARS @ Minv_b
    else:
        Minv_b = np.linalg.solve(M, bS)
        A_new = np.zeros((0, 0), dtype=complex)
        b_new = np.zeros(0, dtype=complex)
    c_new = g.c + 0.5 * bS @ Minv_b + 0.5 * n * LOG_2PI + log_inv_sqrt_det(M)
    return ComplexGaussian(A_new, b_new, c_new)


def total_integral(g: ComplexGaussian) -> complex:
    return complex(np.exp(integrate_out(g, range(g.dim)).c))


def _exponent(g: ComplexGaussian, z: np.ndarray) -> np.ndarray:
    quad = np.einsum("...i,ij,...j->...", z, g.A, z)
    return -0.5 * quad + z @ g.b + g.c


@dataclass(frozen=True, eq=False)
class GaussianSum:
    """A finite sum of Gaussians over the same variables; empty means zero."""

    terms: tuple[ComplexGaussian, ...] = field(default_factory=tuple)
    dim: int | None = None

    def __post_init__(self) -> None:
        terms = tuple(self.terms)
        dims = {t.dim for t in terms}
        if len(dims) > 1:
            raise ValueError(f"terms have different dims: {sorted(dims)}")
        dim = dims.pop() if dims else self.dim
        if self.dim is not None and dim != self.dim:
            raise ValueError(f"terms have dim {dim}, expected {self.dim}")
        object.__setattr__(self, "terms", terms)
        object.__setattr__(self, "dim", dim)

    def __len__(self) -> int:
        return len(self.terms)

    def __iter__(self):
        return iter(self.terms)

    def __add__(self, other: GaussianSum) -> GaussianSum:
        return GaussianSum(self.terms + other.terms, dim=self.dim if self.dim is not None else other.dim)

    def map(self, fn) -> GaussianSum:
        return GaussianSum(tuple(fn(t) for t in self.terms))

    def scaled(self, factor: complex) -> GaussianSum:
        return self.map(lambda t: t.scaled(factor))

    def __call__(self, z) -> np.ndarray:
        return evaluate(self, z)


def evaluate(g: ComplexGaussian | GaussianSum, z) -> np.ndarray | complex:
    """Value at ``z``; ``z`` may be a single point or an array of points (last axis = dim)."""
    z = np.asarray(z, dtype=complex)
    terms = g.terms if isinstance(g, GaussianSum) else (g,)
    dim = g.dim
    if dim is not None and z.shape[-1:] != (dim,):
        raise ValueError(f"points must have trailing dimension {dim}, got shape {z.shape}")
    out = np.zeros(z.shape[:-1], dtype=complex)
    for t in terms:
        out = out + np.exp(_exponent(t, z))
    return out[()] if out.ndim == 0 else out
