"""Bell-diagonal state algebra.

A two-qubit Bell-diagonal state is a probability vector over the four Bell
states ``(a, b, c, d) = (Phi+, Psi-, Psi+, Phi-)``.  ``a`` is the fidelity with
respect to the target pair Phi+.

In Pauli-frame terms (error applied to one half of a perfect Phi+ pair)
``a`` is the identity, ``d`` a Z flip, ``c`` an X flip and ``b`` a Y flip.
Swapping composes these frames as the group Z2 x Z2.
"""

from __future__ import annotations

import math
from typing import NamedTuple

from .errors import DivergenceError, DomainError, UndefinedOutputError

NORM_TOL = 1e-12


class BellState(NamedTuple):
    a: float  # Phi+
    b: float  # Psi-
    c: float  # Psi+
    d: float  # Phi-

    @property
    def fidelity(self) -> float:
        return self.a

    def is_valid(self, tol: float = NORM_TOL) -> bool:
        if any(x < -tol or x > 1 + tol for x in self):
            return False
        return abs(math.fsum(self) - 1.0) <= tol


def bell_state(a: float, b: float, c: float, d: float) -> BellState:
    """Build a BellState, checking the probability-vector invariants."""
    s = BellState(float(a), float(b), float(c), float(d))
    if not s.is_valid():
        raise DomainError(f"not a Bell-diagonal probability vector: {tuple(s)}")
    return s


PERFECT = BellState(1.0, 0.0, 0.0, 0.0)
MAXIMALLY_MIXED = BellState(0.25, 0.25, 0.25, 0.25)


def _check_probability(name: str, x: float) -> float:
    x = float(x)
    if not 0.0 <= x <= 1.0:
        raise DomainError(f"{name} must lie in [0, 1], got {x!r}")
    return x


def _check_state(s) -> BellState:
    if not isinstance(s, BellState):
        s = BellState(*map(float, s))
    if not s.is_valid():
        raise DomainError(f"not a Bell-diagonal probability vector: {tuple(s)}")
    return s


def make_dephased(fidelity: float) -> BellState:
    """Phase-flip-only pair: a Phi+/Phi- mixture."""
    f = _check_probability("fidelity", fidelity)
    return BellState(f, 0.0, 0.0, 1.0 - f)


def make_werner(fidelity: float) -> BellState:
    """Pair with the error weight spread evenly over the three Bell errors."""
    f = _check_probability("fidelity", fidelity)
    e = (1.0 - f) / 3.0
    return BellState(f, e, e, e)


def purify(s1: BellState, s2: BellState) -> tuple[float, BellState]:
    """One round of recurrence purification on two pairs.

    Returns the success probability and the state of the surviving pair
    conditioned on success.  The map is symmetric in its two arguments.
    """
    a1, b1, c1, d1 = _check_state(s1)
    a2, b2, c2, d2 = _check_state(s2)
    return _purify(a1, b1, c1, d1, a2, b2, c2, d2)


def _purify(a1, b1, c1, d1, a2, b2, c2, d2):
    p = (a1 + b1) * (a2 + b2) + (c1 + d1) * (c2 + d2)
    na = a1 * a2 + b1 * b2
    nb = a1 * b2 + b1 * a2
    nc = c1 * d2 + d1 * c2
    nd = c1 * c2 + d1 * d2
    total = na + nb + nc + nd
    if p <= 0.0 or total <= 0.0:
        raise UndefinedOutputError("purification succeeds with probability 0")
    return p, BellState(na / total, nb / total, nc / total, nd / total)


def swap_states(s1: BellState, s2: BellState) -> BellState:
    """State of the spliced pair after entanglement swapping.

    Pauli frames multiply: I*P = P, X*Z = Y, Y*Z = X, X*Y = Z.
    """
    a1, b1, c1, d1 = _check_state(s1)
    a2, b2, c2, d2 = _check_state(s2)
    return _swap(a1, b1, c1, d1, a2, b2, c2, d2)


def _swap(a1, b1, c1, d1, a2, b2, c2, d2):
    a = a1 * a2 + b1 * b2 + c1 * c2 + d1 * d2
    b = a1 * b2 + b1 * a2 + c1 * d2 + d1 * c2
    c = a1 * c2 + c1 * a2 + b1 * d2 + d1 * b2
    d = a1 * d2 + d1 * a2 + b1 * c2 + c1 * b2
    total = a + b + c + d
    return BellState(a / total, b / total, c / total, d / total)


def apply_depolarizing(s: BellState, eps: float) -> BellState:
    """Mix ``s`` with the maximally mixed state with weight ``eps``."""
    eps = _check_probability("eps", eps)
    s = _check_state(s)
    if eps == 0.0:
        return s
    keep = 1.0 - eps
    q = 0.25 * eps
    return BellState(keep * s.a + q, keep * s.b + q, keep * s.c + q, keep * s.d + q)


class ChainStep(NamedTuple):
    fidelity: float
    p_success: float
    expected_base_pairs: float


class SymmetricChain(NamedTuple):
    start: float
    target: float
    steps: list[ChainStep]

    @property
    def rounds(self) -> int:
        return len(self.steps)

    @property
    def expected_base_pairs(self) -> float:
        return self.steps[-1].expected_base_pairs if self.steps else 1.0


def symmetric_chain_oracle(
    start_fidelity: float,
    target: float,
    model: str = "dephased",
    max_rounds: int = 100,
) -> SymmetricChain:
    """Analytic cost of the fully symmetric purification tree.

    Each round purifies two identical pairs from the previous round.  The
    expected number of base pairs behind one round-``k`` pair obeys
    ``E(k) = 2 E(k-1) / p_k`` with ``E(0) = 1``.
    """
    f0 = _check_probability("start_fidelity", start_fidelity)
    target = _check_probability("target", target)
    if f0 <= 0.5:
        raise DomainError(f"start fidelity must exceed 0.5, got {f0}")
    factory = {"dephased": make_dephased, "werner": make_werner}[model]

    state = factory(f0)
    cost = 1.0
    steps: list[ChainStep] = []
    while state.a < target:
        if len(steps) >= max_rounds:
            raise DivergenceError(f"no convergence to {target} in {max_rounds} rounds")
        p, out = purify(state, state)
        if out.a <= state.a:
            raise DivergenceError(
                f"fidelity stopped increasing at round {len(steps) + 1}: {state.a} -> {out.a}"
            )
        cost = 2.0 * cost / p
        steps.append(ChainStep(out.a, p, cost))
        state = out
    return SymmetricChain(f0, target, steps)
