"""Brute-force simulation of the mixing experiment in a truncated Fock space.

States are carried as weighted ensembles of pure kets over labeled bosonic
modes, which keeps memory linear in the Hilbert-space dimension while still
exposing the full density matrix for small systems.  Beam splitters and loss
channels are realized as matrix exponentials of truncated two-mode
generators; because those generators conserve total photon number, their
action is exact on every ket whose per-pair photon number fits inside the
cutoff.  The only approximation in the whole pipeline is the truncation of
the incoming coherent state, whose discarded tail mass is computed
analytically and enforced against a hard bound.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from functools import lru_cache
from typing import NamedTuple

import numpy as np
from scipy.linalg import expm
from scipy.stats import poisson

from .analytic_model import LocalOscillator, SourceParams, _check_probs
from .errors import (
    InvalidParameterError,
    TruncationError,
    UndefinedCorrelationError,
)

#: Output mode labels produced by :func:`mix_on_beam_splitter`.
OUTPUT_MODES = ("out_2_par", "out_2_perp", "out_3_par", "out_3_perp")

#: Largest Hilbert dimension for which a dense density matrix is materialized.
MAX_DENSE_DIM = 4096

#: Coherent tail mass above which the mixing operation refuses to run.
TAIL_REFUSAL = 1e-6

_EIGENVALUE_FLOOR = 1e-14


@dataclass(frozen=True)
class BeamSplitterSpec:
    """Lossless beam splitter with transmission T and reflection 1 - T."""

    transmission: float

    def __post_init__(self):
        if not 0.0 <= self.transmission <= 1.0:
            raise InvalidParameterError(
                f"transmission must be in [0, 1], got {self.transmission}"
            )

    @property
    def reflection(self) -> float:
        return 1.0 - self.transmission


@dataclass(frozen=True)
class TruncationReport:
    """Cutoff used for a coherent input and the probability mass beyond it."""

    cutoff: int
    tail_mass: float


class CrossMoments(NamedTuple):
    coincidence: float
    mean_2: float
    mean_3: float


def coherent_tail_mass(mu: float, cutoff: int) -> float:
    """Probability that a coherent state of mean photon number mu exceeds the cutoff."""
    if mu < 0.0:
        raise InvalidParameterError(f"mean photon number must be >= 0, got {mu}")
    if mu == 0.0:
        return 0.0
    return float(poisson.sf(cutoff, mu))


def required_cutoff(mu: float, tail_target: float = 1e-10, max_cutoff: int = 500) -> int:
    """Smallest cutoff whose coherent tail mass is below the target (min 2)."""
    for n in range(2, max_cutoff + 1):
        if coherent_tail_mass(mu, n) < tail_target:
            return n
    raise InvalidParameterError(
        f"no cutoff <= {max_cutoff} reaches tail mass {tail_target} for mu = {mu}"
    )


def lowering_operator(cutoff: int) -> np.ndarray:
    """Single-mode annihilation operator truncated at the given cutoff."""
    return np.diag(np.sqrt(np.arange(1.0, cutoff + 1.0)), 1)


def displacement_matrix(alpha: complex, cutoff: int) -> np.ndarray:
    """Displacement operator exp(alpha a+ - alpha* a) in the truncated space.

    Column 0 approximates the coherent-state amplitudes
    exp(-|alpha|^2/2) alpha^n / sqrt(n!); the approximation is unitary up to
    the truncated tail, see :func:`unitarity_defect`.
    """
    a = lowering_operator(cutoff)
    gen = alpha * a.conj().T - np.conjugate(alpha) * a
    return expm(gen)


def unitarity_defect(matrix: np.ndarray) -> float:
    """Max elementwise deviation of M+ M from the identity."""
    d = matrix.conj().T @ matrix - np.eye(matrix.shape[0])
    return float(np.abs(d).max())


@lru_cache(maxsize=64)
def _pair_unitary(transmission: float, cutoff: int) -> np.ndarray:
    """Two-mode mixing unitary on (x, y) with x_out = sqrt(T) x + sqrt(R) y.

    Built as expm(theta (x+ y - x y+)) with cos(theta) = sqrt(T).  The
    generator conserves total photon number, so the action is exact for kets
    with per-pair total <= cutoff.
    """
    d = cutoff + 1
    a = lowering_operator(cutoff)
    eye = np.eye(d)
    big_a = np.kron(a, eye)
    big_b = np.kron(eye, a)
    theta = math.acos(min(1.0, math.sqrt(transmission)))
    gen = theta * (big_a.conj().T @ big_b - big_a @ big_b.conj().T)
    return expm(gen)


@lru_cache(maxsize=32)
def _occupations(cutoff: int, n_modes: int) -> np.ndarray:
    """Per-mode photon numbers of every product basis state, shape (n_modes, dim)."""
    d = cutoff + 1
    dim = d**n_modes
    idx = np.arange(dim)
    occ = np.empty((n_modes, dim), dtype=np.int64)
    for m in range(n_modes - 1, -1, -1):
        occ[m] = idx % d
        idx = idx // d
    return occ


@dataclass(frozen=True)
class MultimodeState:
    """Weighted ensemble of pure kets over labeled modes, all truncated at ``cutoff``.

    The ensemble represents the density matrix sum_k w_k |psi_k><psi_k|
    without materializing it; :meth:`density_matrix` builds the dense matrix
    when the dimension allows.  Kets are unit-normalized and weights sum to 1.
    """

    modes: tuple[str, ...]
    cutoff: int
    weights: np.ndarray
    kets: np.ndarray

    def __post_init__(self):
        if self.kets.ndim != 2 or self.kets.shape[0] != len(self.weights):
            raise InvalidParameterError("kets must have shape (n_branches, dim)")
        if self.kets.shape[1] != self.dim:
            raise InvalidParameterError(
                f"ket dimension {self.kets.shape[1]} does not match "
                f"({self.cutoff + 1})^{len(self.modes)}"
            )
        if np.any(self.weights < -1e-12):
            raise InvalidParameterError("ensemble weights must be non-negative")

    @property
    def dim(self) -> int:
        return (self.cutoff + 1) ** len(self.modes)

    def mode_index(self, label: str) -> int:
        try:
            return self.modes.index(label)
        except ValueError:
            raise InvalidParameterError(
                f"unknown mode label {label!r}; state has {self.modes}"
            ) from None

    def trace(self) -> float:
        norms = np.einsum("ki,ki->k", self.kets.conj(), self.kets).real
        return float(np.dot(self.weights, norms))

    def probabilities(self) -> np.ndarray:
        """Diagonal of the density matrix in the product Fock basis."""
        return np.asarray(self.weights, dtype=float) @ (np.abs(self.kets) ** 2)

    def occupations(self) -> np.ndarray:
        return _occupations(self.cutoff, len(self.modes))

    def density_matrix(self, max_dim: int = MAX_DENSE_DIM) -> np.ndarray:
        if self.dim > max_dim:
            raise InvalidParameterError(
                f"refusing to materialize a {self.dim}x{self.dim} density matrix "
                f"(limit {max_dim}); use ensemble-based observables instead"
            )
        rho = np.zeros((self.dim, self.dim), dtype=complex)
        for w, ket in zip(self.weights, self.kets):
            rho += w * np.outer(ket, ket.conj())
        return rho

    @classmethod
    def from_density_matrix(
        cls,
        modes: tuple[str, ...],
        cutoff: int,
        matrix: np.ndarray,
        psd_tol: float = 1e-10,
    ) -> "MultimodeState":
        """Eigendecompose a density matrix into a pure-state ensemble."""
        rho = 0.5 * (matrix + matrix.conj().T)
        vals, vecs = np.linalg.eigh(rho)
        if vals.min() < -psd_tol:
            raise InvalidParameterError(
                f"matrix is not positive semidefinite (min eigenvalue {vals.min():.3e})"
            )
        keep = vals > _EIGENVALUE_FLOOR
        weights = vals[keep]
        kets = vecs[:, keep].T
        return cls(modes=modes, cutoff=cutoff, weights=weights, kets=np.ascontiguousarray(kets))


def build_qd_state(p1: float, p2: float, cutoff: int) -> MultimodeState:
    """Single-mode source state: mixture of 0, 1 and 2 photons in mode ``in_a``."""
    _check_probs(p1, p2)
    if cutoff < 2:
        raise InvalidParameterError("cutoff must be >= 2 to hold the two-photon term")
    d = cutoff + 1
    weights = []
    kets = []
    for n, p in enumerate((1.0 - p1 - p2, p1, p2)):
        if p > 0.0:
            ket = np.zeros(d, dtype=complex)
            ket[n] = 1.0
            weights.append(p)
            kets.append(ket)
    return MultimodeState(("in_a",), cutoff, np.array(weights), np.array(kets))


def _apply_pair_unitary(psi: np.ndarray, u: np.ndarray, axis_x: int, axis_y: int) -> np.ndarray:
    """Apply a (d^2, d^2) unitary to two axes of a product-space ket."""
    nd = psi.ndim
    d = psi.shape[axis_x]
    rest = [ax for ax in range(nd) if ax not in (axis_x, axis_y)]
    perm = [axis_x, axis_y] + rest
    mat = np.transpose(psi, perm).reshape(d * d, -1)
    mat = u @ mat
    out = mat.reshape([d, d] + [psi.shape[ax] for ax in rest])
    return np.transpose(out, np.argsort(perm))


def apply_loss(state: MultimodeState, mode: str, eta: float) -> MultimodeState:
    """Transmit one mode through a lossy channel of transmission eta.

    Realized as a virtual beam splitter of transmission eta coupling the mode
    to a vacuum environment, followed by a partial trace over the
    environment.  The surviving-mode photon distribution is the binomial
    transform of the input distribution.
    """
    if not 0.0 <= eta <= 1.0:
        raise InvalidParameterError(f"eta must be in [0, 1], got {eta}")
    axis = state.mode_index(mode)
    if eta == 1.0:
        return state
    d = state.cutoff + 1
    if state.dim > MAX_DENSE_DIM:
        raise InvalidParameterError(
            "apply_loss materializes the reduced density matrix; the state "
            f"dimension {state.dim} exceeds the dense limit {MAX_DENSE_DIM}"
        )
    u = _pair_unitary(eta, state.cutoff)
    n_modes = len(state.modes)
    shape = (d,) * n_modes
    rho = np.zeros((state.dim, state.dim), dtype=complex)
    env_ket = np.zeros(d, dtype=complex)
    env_ket[0] = 1.0
    for w, ket in zip(state.weights, state.kets):
        psi = np.multiply.outer(ket.reshape(shape), env_ket)
        psi = _apply_pair_unitary(psi, u, axis, n_modes)
        # trace out the environment: stack the env axis as columns
        mat = np.moveaxis(psi, n_modes, -1).reshape(state.dim, d)
        rho += w * (mat @ mat.conj().T)
    return MultimodeState.from_density_matrix(state.modes, state.cutoff, rho)


def mix_on_beam_splitter(
    source: SourceParams,
    lo: LocalOscillator,
    bs: BeamSplitterSpec,
    cutoff: int,
) -> MultimodeState:
    """Mix the lossy source state with the polarized coherent state.

    The source light occupies the parallel polarization of input a; the
    coherent state enters input b split as alpha cos(theta) parallel and
    alpha sin(theta) perpendicular.  Output mode out_2 carries the
    transmitted coherent field (sqrt(T) b + sqrt(R) a); out_3 the transmitted
    source field.  The returned state is truncated at ``cutoff + 2`` so the
    number-conserving beam splitter acts exactly on every retained ket; the
    coherent inputs are truncated at ``cutoff`` and renormalized.

    Partial source indistinguishability (``source.m_psi < 1``) is realized by
    mixing this run with an orthogonal-polarization run at weight
    ``1 - m_psi``, which reproduces the effective overlap ``m * m_psi`` in
    all photon-number moments.

    Raises :class:`TruncationError` when the coherent tail mass at ``cutoff``
    is not below ``TAIL_REFUSAL``.
    """
    report = TruncationReport(cutoff, coherent_tail_mass(lo.mu_alpha, cutoff))
    if report.tail_mass >= TAIL_REFUSAL:
        raise TruncationError(
            f"cutoff {cutoff} keeps only {1 - report.tail_mass:.9f} of the "
            f"coherent state (tail {report.tail_mass:.3e} >= {TAIL_REFUSAL:.0e})",
            report=report,
        )
    weights, kets = _mix_pure_branches(source, lo, bs, cutoff)
    if source.m_psi < 1.0:
        lo_perp = replace(lo, theta=math.pi / 2.0)
        w_perp, k_perp = _mix_pure_branches(source, lo_perp, bs, cutoff)
        weights = np.concatenate([source.m_psi * weights, (1.0 - source.m_psi) * w_perp])
        kets = np.concatenate([kets, k_perp])
    return MultimodeState(OUTPUT_MODES, cutoff + 2, weights, kets)


def _coherent_input_ket(alpha: float, cutoff: int, n_work: int) -> np.ndarray:
    """Coherent ket truncated at ``cutoff``, renormalized, zero-padded to ``n_work``."""
    ket = np.zeros(n_work + 1, dtype=complex)
    ket[: cutoff + 1] = displacement_matrix(alpha, cutoff)[:, 0]
    return ket / np.linalg.norm(ket)


def _mix_pure_branches(
    source: SourceParams,
    lo: LocalOscillator,
    bs: BeamSplitterSpec,
    cutoff: int,
) -> tuple[np.ndarray, np.ndarray]:
    n_work = cutoff + 2
    d = n_work + 1
    lossy = apply_loss(build_qd_state(source.p1, source.p2, n_work), "in_a", source.eta)
    ket_b_par = _coherent_input_ket(lo.alpha * math.cos(lo.theta), cutoff, n_work)
    ket_b_perp = _coherent_input_ket(lo.alpha * math.sin(lo.theta), cutoff, n_work)
    vac = np.zeros(d, dtype=complex)
    vac[0] = 1.0
    u = _pair_unitary(bs.transmission, n_work)
    out_kets = np.empty((len(lossy.weights), d**4), dtype=complex)
    for i, ket_a in enumerate(lossy.kets):
        # input axes: (a_par, a_perp, b_par, b_perp)
        psi = np.einsum("i,j,k,l->ijkl", ket_a, vac, ket_b_par, ket_b_perp)
        psi = _apply_pair_unitary(psi, u, 0, 2)
        psi = _apply_pair_unitary(psi, u, 1, 3)
        # the pair unitary leaves the a slot carrying sqrt(T) a + sqrt(R) b,
        # i.e. the transmitted-source output (out_3); reorder to OUTPUT_MODES
        psi = np.transpose(psi, (2, 3, 0, 1))
        flat = psi.reshape(-1)
        out_kets[i] = flat / np.linalg.norm(flat)
    return np.asarray(lossy.weights, dtype=float), out_kets


def _summed_occupation(state: MultimodeState, prefix: str) -> np.ndarray:
    occ = state.occupations()
    idx = [i for i, label in enumerate(state.modes) if label.startswith(prefix)]
    if not idx:
        raise InvalidParameterError(f"state has no modes with prefix {prefix!r}")
    return occ[idx].sum(axis=0)


def cross_correlations(state: MultimodeState) -> CrossMoments:
    """Polarization-summed moments (<n2 n3>, <n2>, <n3>) of the output state."""
    probs = state.probabilities()
    n2 = _summed_occupation(state, "out_2")
    n3 = _summed_occupation(state, "out_3")
    return CrossMoments(
        coincidence=float(probs @ (n2 * n3)),
        mean_2=float(probs @ n2),
        mean_3=float(probs @ n3),
    )


def auto_correlation(state: MultimodeState, output: str = "out_2") -> float:
    """Polarization-summed g2(0) = <n(n-1)> / <n>^2 at one output."""
    probs = state.probabilities()
    n = _summed_occupation(state, output)
    mean = float(probs @ n)
    if mean <= 0.0:
        raise UndefinedCorrelationError(f"no photons at output {output!r}")
    second = float(probs @ (n * (n - 1)))
    return second / mean**2


def joint_number_distribution(state: MultimodeState) -> np.ndarray:
    """Joint photon-number distribution P[n2, n3] over the two outputs."""
    probs = state.probabilities()
    n2 = _summed_occupation(state, "out_2")
    n3 = _summed_occupation(state, "out_3")
    dist = np.zeros((n2.max() + 1, n3.max() + 1))
    np.add.at(dist, (n2, n3), probs)
    return dist


def oracle_visibility(
    source: SourceParams,
    lo: LocalOscillator,
    bs: BeamSplitterSpec,
    cutoff: int,
) -> float:
    """Cross-output visibility from two runs: as configured vs orthogonal polarization."""
    g_m = cross_correlations(mix_on_beam_splitter(source, lo, bs, cutoff)).coincidence
    lo_perp = replace(lo, theta=math.pi / 2.0)
    g_0 = cross_correlations(mix_on_beam_splitter(source, lo_perp, bs, cutoff)).coincidence
    if g_0 <= 0.0:
        raise UndefinedCorrelationError("no coincidences in the orthogonal reference run")
    return (g_0 - g_m) / g_0
