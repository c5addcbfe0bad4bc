"""Haar sampling, word tensors, state evaluation and the Monte-Carlo harness.

Randomness is organized as counter-based streams: (seed, stream index) is a
pure function of the sample, so results are reproducible bit-for-bit no
matter how samples are scheduled across workers.
"""
from __future__ import annotations

import concurrent.futures
import math
import time
from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgumentError, ResourceLimitError
from .operands import StateSpec, TensorOperand
from .traces import apply_state  # re-exported: states live next to traces
from .words import StarWord, is_trivial

__all__ = [
    "RngStream", "MCReport", "sample_haar_unitary", "sample_permutation_matrix",
    "build_w_family", "evaluate_word", "apply_state", "mc_expectation",
    "mc_variance", "mc_run", "symmetrize", "norm_absorption_demo",
    "NormDemoReport",
]


@dataclass(frozen=True)
class RngStream:
    """Counter-based random stream: (seed, index) -> generator, pure."""

    seed: int
    index: int = 0

    def generator(self) -> np.random.Generator:
        return np.random.Generator(np.random.Philox(
            key=np.array([self.seed % 2 ** 64, self.index % 2 ** 64],
                         dtype=np.uint64)))

    def child(self, offset: int) -> "RngStream":
        return RngStream(self.seed, self.index + offset)


@dataclass(frozen=True)
class MCReport:
    estimate: complex
    stderr: float
    samples: int
    n: int
    wallclock: float  # informational; never part of primary outputs

    def within(self, target: complex, k: float = 3.0, floor: float = 1e-12) -> bool:
        return abs(self.estimate - target) <= k * self.stderr + floor


def sample_haar_unitary(n: int, rng) -> np.ndarray:
    """Haar-distributed unitary: complex Ginibre, QR, then the R-diagonal
    phases are absorbed so the factorization is unique (plain QR is not Haar).
    """
    if n < 1:
        raise InvalidArgumentError("need N >= 1")
    if isinstance(rng, RngStream):
        rng = rng.generator()
    z = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) \
        / math.sqrt(2.0)
    q, r = np.linalg.qr(z)
    d = np.diagonal(r)
    return q * (d / np.abs(d))


def sample_permutation_matrix(n: int, rng) -> np.ndarray:
    if isinstance(rng, RngStream):
        rng = rng.generator()
    p = np.zeros((n, n))
    p[rng.permutation(n), np.arange(n)] = 1.0
    return p


def _shift_matrix(n: int, s: int) -> np.ndarray:
    p = np.zeros((n, n))
    p[(np.arange(n) + s) % n, np.arange(n)] = 1.0
    return p


def build_w_family(u_family, v_family, k1: int, k2: int, k3: int):
    """Tensor words U^{x K1} x U^t{x K2} x V, stored factored per letter."""
    if k1 < 1 or k2 < 0 or k3 < 0:
        raise InvalidArgumentError("need K1 >= 1 and K2, K3 >= 0")
    if k3 == 0:
        v_family = [None] * len(u_family)
    if len(u_family) != len(v_family):
        raise InvalidArgumentError("U and V families must have equal size")
    out = []
    for u, v in zip(u_family, v_family):
        legs = [u] * k1 + [u.T] * k2
        if k3:
            if len(v) != k3:
                raise InvalidArgumentError(
                    f"V entry has {len(v)} legs, expected {k3}")
            legs.extend(v)
        out.append(TensorOperand.factored(legs))
    return out


def evaluate_word(family, word: StarWord) -> TensorOperand:
    """Word of factored unitary tensors, multiplied leg by leg."""
    if not family:
        raise InvalidArgumentError("empty family")
    n = family[0].n
    legs = family[0].legs
    if any(idx > len(family) for idx, _ in word.letters):
        raise InvalidArgumentError("word uses letters outside the family")
    chains = [np.eye(n, dtype=np.complex128)] * legs
    first = True
    for idx, star in word.letters:
        terms = family[idx - 1].terms
        if len(terms) != 1:
            raise InvalidArgumentError("family entries must be plain factored")
        _, factors = terms[0]
        mats = [f.conj().T if star else f for f in factors]
        if first:
            chains = list(mats)
            first = False
        else:
            chains = [c @ m for c, m in zip(chains, mats)]
    return TensorOperand.factored(chains)


# --------------------------------------------------------------------------
# Monte-Carlo harness
# --------------------------------------------------------------------------

def _sample_value(state, word, k1, k2, k3, letters, n, stream, v_mode):
    rng = stream.generator()
    us = [sample_haar_unitary(n, rng) for _ in range(letters)]
    vs = None
    if k3:
        vs = []
        for ell in range(letters):
            if v_mode == "haar":
                vs.append([sample_haar_unitary(n, rng) for _ in range(k3)])
            else:  # deterministic tensor products of permutation matrices
                vs.append([_shift_matrix(n, ell + 1 + leg) for leg in range(k3)])
    family = build_w_family(us, vs, k1, k2, k3)
    return apply_state(state, evaluate_word(family, word))


def _collect_samples(state, word, blocks, n, samples, seed, v_mode, threads):
    k1, k2, k3 = blocks
    letters = word.alphabet
    base = RngStream(seed)
    if is_trivial(word):
        k = k1 + k2 + k3
        ident = apply_state(state, TensorOperand.identity(n, k))
        return np.full(samples, ident, dtype=np.complex128)
    values = np.empty(samples, dtype=np.complex128)
    if threads and threads > 1:
        def work(s):
            return s, _sample_value(state, word, k1, k2, k3, letters, n,
                                    base.child(s), v_mode)
        with concurrent.futures.ThreadPoolExecutor(max_workers=threads) as pool:
            for s, val in pool.map(work, range(samples)):
                values[s] = val
    else:
        for s in range(samples):
            values[s] = _sample_value(state, word, k1, k2, k3, letters, n,
                                      base.child(s), v_mode)
    return values


def _report_from_values(values, n, elapsed) -> MCReport:
    samples = len(values)
    mean = complex(values.mean())
    if samples > 1:
        var_re = values.real.var(ddof=1) / samples
        var_im = values.imag.var(ddof=1) / samples
        stderr = math.sqrt(var_re + var_im)
    else:
        stderr = 0.0
    return MCReport(mean, float(stderr), samples, n, elapsed)


def mc_expectation(state, word: StarWord, blocks, n: int, samples: int,
                   seed: int = 0, v_mode: str = "perm",
                   threads: int = 1) -> MCReport:
    """Mean of state(word(W)) over independent resamplings of the families."""
    if samples < 2:
        raise InvalidArgumentError("need samples >= 2")
    t0 = time.perf_counter()
    values = _collect_samples(state, word, blocks, n, samples, seed, v_mode,
                              threads)
    return _report_from_values(values, n, time.perf_counter() - t0)


def mc_variance(state, word: StarWord, blocks, n: int, samples: int,
                seed: int = 0, v_mode: str = "perm",
                threads: int = 1) -> MCReport:
    """Sample variance of state(word(W)), with the spread of the variance
    estimator itself as the reported standard error.
    """
    if samples < 2:
        raise InvalidArgumentError("need samples >= 2")
    t0 = time.perf_counter()
    values = _collect_samples(state, word, blocks, n, samples, seed, v_mode,
                              threads)
    sq = np.abs(values - values.mean()) ** 2
    var = float(sq.sum() / (len(values) - 1))
    stderr = float(sq.std(ddof=1) / math.sqrt(len(values)))
    return MCReport(var, stderr, samples, n, time.perf_counter() - t0)


def mc_run(state, word: StarWord, blocks, n: int, samples: int,
           seed: int = 0, v_mode: str = "perm", threads: int = 1):
    """One sampling sweep reported both ways: (expectation, variance)."""
    if samples < 2:
        raise InvalidArgumentError("need samples >= 2")
    t0 = time.perf_counter()
    values = _collect_samples(state, word, blocks, n, samples, seed, v_mode,
                              threads)
    elapsed = time.perf_counter() - t0
    expect = _report_from_values(values, n, elapsed)
    sq = np.abs(values - values.mean()) ** 2
    var = float(sq.sum() / (len(values) - 1)) if len(values) > 1 else 0.0
    var_err = float(sq.std(ddof=1) / math.sqrt(len(values))) if len(values) > 1 else 0.0
    return expect, MCReport(var, var_err, samples, n, elapsed)


# --------------------------------------------------------------------------
# symmetrization (exact or sampled group averaging)
# --------------------------------------------------------------------------

def _conjugate_operand(operand: TensorOperand, u: np.ndarray) -> TensorOperand:
    uh = u.conj().T
    return TensorOperand(operand.n, operand.legs, terms=[
        (w, [u @ f @ uh for f in fs]) for w, fs in operand.terms])


def symmetrize(target, n: int, group: str = "sn_exact", samples: int = 200,
               seed: int = 0, k: int | None = None):
    """Average a state callable or a factored operand over a group action.

    group: "sn_exact" (all N! permutations, N <= 5), "sn_sampled", or
    "un_sampled" (Haar conjugations). States come back as callables; operands
    come back as weighted sums of conjugated factored terms.
    """
    import itertools as _it
    import math as _math

    if group == "sn_exact":
        if n > 5:
            raise ResourceLimitError("exact symmetric-group averaging capped at N = 5")
        perms = list(_it.permutations(range(n)))
        mats = []
        for perm in perms:
            p = np.zeros((n, n))
            p[list(perm), np.arange(n)] = 1.0
            mats.append(p)
        weights = [1.0 / _math.factorial(n)] * len(mats)
    else:
        rng = RngStream(seed).generator()
        if group == "sn_sampled":
            mats = [sample_permutation_matrix(n, rng) for _ in range(samples)]
        elif group == "un_sampled":
            mats = [sample_haar_unitary(n, rng) for _ in range(samples)]
        else:
            raise InvalidArgumentError(f"unknown group {group!r}")
        weights = [1.0 / samples] * len(mats)

    if isinstance(target, TensorOperand):
        terms = []
        for weight, u in zip(weights, mats):
            conj = _conjugate_operand(target, u)
            terms.extend((weight * w, fs) for w, fs in conj.terms)
        return TensorOperand.sum_of_factored(target.n, target.legs, terms)

    def averaged(operand: TensorOperand) -> complex:
        total = 0j
        for weight, u in zip(weights, mats):
            total += weight * apply_state(target, _conjugate_operand(operand, u))
        return complex(total)

    return averaged


# --------------------------------------------------------------------------
# operator-norm absorption demo
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class NormDemoReport:
    mode: str
    letters: int
    n: int
    value: float
    reference: float
    seed: int

    def to_json(self) -> dict:
        return {"mode": self.mode, "L": self.letters, "N": self.n,
                "norm": self.value, "reference": self.reference,
                "seed": self.seed}


def norm_absorption_demo(letters: int, n: int, mode: str,
                         seed: int = 0) -> NormDemoReport:
    """Largest singular value of sum_l U_l x V_l.

    mode "haar_pair": independent Haar V's; the norm sits near 2 sqrt(L-1).
    mode "conjugate_pair": V_l = conj(U_l); the flip-invariant vector forces
    norm >= L, the strong-freeness counterexample.
    """
    if mode not in ("haar_pair", "conjugate_pair"):
        raise InvalidArgumentError(f"unknown mode {mode!r}")
    if mode == "conjugate_pair" and letters < 3:
        raise InvalidArgumentError("the counterexample needs L >= 3")
    if letters < 1:
        raise InvalidArgumentError("need L >= 1")
    if n * n > 4096:
        raise ResourceLimitError("norm demo capped at N^2 <= 4096")
    rng = RngStream(seed).generator()
    total = np.zeros((n * n, n * n), dtype=np.complex128)
    for _ in range(letters):
        u = sample_haar_unitary(n, rng)
        v = np.conj(u) if mode == "conjugate_pair" else sample_haar_unitary(n, rng)
        total += np.kron(u, v)
    value = float(np.linalg.norm(total, 2))
    reference = float(letters) if mode == "conjugate_pair" \
        else 2.0 * math.sqrt(letters - 1)
    return NormDemoReport(mode, letters, n, value, reference, seed)
