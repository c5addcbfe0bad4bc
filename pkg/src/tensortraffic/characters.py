"""Rational irreducible characters of the unitary group, leg permutations of
tensor powers, the cycle factorization of permuted tensor traces, and the
conditional expectation onto the span of leg permutations.
"""
from __future__ import annotations

import itertools
import math
import time
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import (IllConditionedError, InvalidArgumentError,
                     ResourceLimitError)
from .operands import TensorOperand
from .sampling import MCReport, RngStream, sample_haar_unitary
from .words import StarWord, is_trivial

LEG_GUARD_BITS = 16  # d * log2(N) <= 16 for dense leg-permutation operators


@dataclass(frozen=True)
class Signature:
    """Pair of weakly decreasing nonnegative integer sequences labeling a
    rational irreducible representation; either side may be empty.
    """

    lam: tuple[int, ...] = ()
    mu: tuple[int, ...] = ()

    def __post_init__(self):
        for seq in (self.lam, self.mu):
            if any(x < 1 for x in seq):
                raise InvalidArgumentError("signature parts must be positive")
            if any(seq[i] < seq[i + 1] for i in range(len(seq) - 1)):
                raise InvalidArgumentError("signature parts must be decreasing")

    @property
    def length(self) -> int:
        return len(self.lam) + len(self.mu)

    def composite_weights(self, n: int) -> list[int]:
        """Strictly decreasing exponents l_j = (padded signature)_j + n - j."""
        if self.length > n:
            raise InvalidArgumentError(
                f"signature length {self.length} exceeds N = {n}")
        padded = list(self.lam) + [0] * (n - self.length) \
            + [-m for m in reversed(self.mu)]
        return [padded[j] + n - (j + 1) for j in range(n)]

    def dimension(self, n: int) -> Fraction:
        """Exact dimension: prod_{i<j} (l_i - l_j) / (j - i)."""
        l = self.composite_weights(n)
        out = Fraction(1)
        for i in range(n):
            for j in range(i + 1, n):
                out *= Fraction(l[i] - l[j], j - i)
        return out


def _scalar_multiple_of_identity(u: np.ndarray) -> complex | None:
    n = u.shape[0]
    c = u[0, 0]
    if np.max(np.abs(u - c * np.eye(n))) < 1e-12:
        return complex(c)
    return None


def normalized_character(sig: Signature, u: np.ndarray) -> complex:
    """Character of the rational irreducible representation, normalized so the
    identity evaluates to exactly 1.

    Computed as the Weyl quotient of generalized Vandermonde determinants in
    the eigenvalues (log-scaled determinants to dodge overflow), divided by
    the exact integer dimension. Scalar matrices are handled in closed form;
    eigenvalue collisions get one deterministic jitter retry.
    """
    n = u.shape[0]
    if sig.length > n:
        raise InvalidArgumentError(f"signature too long for N = {n}")
    scalar = _scalar_multiple_of_identity(u)
    if scalar is not None:
        return scalar ** (sum(sig.lam) - sum(sig.mu))
    z = np.linalg.eigvals(u)
    if _min_gap(z) < 1e-8:
        z = z * np.exp(1j * 1e-10 * np.arange(1, n + 1))
        if _min_gap(z) < 1e-13:
            raise IllConditionedError(
                "eigenvalues remain degenerate after jitter")
    weights = sig.composite_weights(n)
    num = np.power.outer(z, np.array(weights, dtype=float))
    den = np.power.outer(z, np.arange(n - 1, -1, -1, dtype=float))
    s_num, ld_num = np.linalg.slogdet(num)
    s_den, ld_den = np.linalg.slogdet(den)
    if s_den == 0:
        raise IllConditionedError("Vandermonde determinant underflow")
    ratio = (s_num / s_den) * np.exp(ld_num - ld_den)
    return complex(ratio / float(sig.dimension(n)))


def _min_gap(z: np.ndarray) -> float:
    zs = np.sort_complex(z)
    return float(min(np.min(np.abs(np.subtract.outer(z, z))
                            + 2.0 * np.eye(len(z))), 2.0))


def character_reference(sig: Signature, u: np.ndarray) -> complex:
    """First-order approximation tr(U)^{l(lam)} tr(conj U)^{l(mu)}; the exact
    normalized character differs from this by O(1/N), uniformly in U.
    """
    tr = np.trace(u) / u.shape[0]
    return complex(tr ** len(sig.lam) * np.conj(tr) ** len(sig.mu))


# --------------------------------------------------------------------------
# leg permutations of tensor powers
# --------------------------------------------------------------------------

def _check_perm(sigma) -> tuple[int, ...]:
    sigma = tuple(int(x) for x in sigma)
    if sorted(sigma) != list(range(len(sigma))):
        raise InvalidArgumentError(f"not a permutation of 0..{len(sigma) - 1}: {sigma}")
    return sigma


def leg_permutation(sigma, n: int) -> np.ndarray:
    """Dense operator permuting the tensor legs: basis vector
    e_{i_1} x ... x e_{i_d} maps to the vector whose k-th leg is leg
    sigma^{-1}(k) of the input.
    """
    sigma = _check_perm(sigma)
    d = len(sigma)
    if d * math.log2(n) > LEG_GUARD_BITS and n > 1:
        raise ResourceLimitError(
            f"dense leg permutation guarded at d*log2(N) <= {LEG_GUARD_BITS}")
    op = np.eye(n ** d).reshape((n,) * (2 * d))
    inv = [0] * d
    for k, img in enumerate(sigma):
        inv[img] = k
    # output axis k reads input leg sigma^{-1}(k)
    perm = [inv[k] for k in range(d)] + list(range(d, 2 * d))
    return op.transpose(perm).reshape(n ** d, n ** d)


def permuted_tensor_trace(mats, sigma) -> complex:
    """tr^{x d}((M_1 x ... x M_d) rho(sigma)), evaluated by direct index
    contraction: sum over i of prod_k M_k(i_k, i_{sigma^{-1}(k)}), divided
    by N^d. This is the oracle side of the cycle factorization.
    """
    sigma = _check_perm(sigma)
    d = len(sigma)
    if len(mats) != d:
        raise InvalidArgumentError("need one matrix per leg")
    n = mats[0].shape[0]
    inv = [0] * d
    for k, img in enumerate(sigma):
        inv[img] = k
    args = []
    for k in range(d):
        args.append(np.asarray(mats[k], dtype=np.complex128))
        args.append([k, inv[k]])
    val = np.einsum(*args, [])
    return complex(val) / n ** d


def cycles_of(sigma) -> list[list[int]]:
    sigma = _check_perm(sigma)
    seen = [False] * len(sigma)
    out = []
    for start in range(len(sigma)):
        if seen[start]:
            continue
        cyc = []
        cur = start
        while not seen[cur]:
            seen[cur] = True
            cyc.append(cur)
            cur = sigma[cur]
        out.append(cyc)
    return out


def cycle_factorization_check(a: np.ndarray, sigma) -> float:
    """Residual of the exact identity
    tr^{x d}(A^{x d} rho(sigma)) = N^{-d} prod_cycles Tr(A^{|c|}).
    """
    sigma = _check_perm(sigma)
    n = a.shape[0]
    d = len(sigma)
    lhs = permuted_tensor_trace([a] * d, sigma)
    rhs = 1.0 + 0.0j
    for cyc in cycles_of(sigma):
        rhs *= np.trace(np.linalg.matrix_power(a, len(cyc)))
    rhs /= n ** d
    return float(abs(lhs - rhs))


# --------------------------------------------------------------------------
# mixed free-group / symmetric-group words
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class PermutationWord:
    """A word in the product of the rank-2K free group (letters K+1..2K act
    as the transposes of letters 1..K) with the leg-permutation group.
    """

    free_part: StarWord
    perm: tuple[int, ...]

    def __post_init__(self):
        _check_perm(self.perm)

    @property
    def trivial(self) -> bool:
        return is_trivial(self.free_part) and \
            self.perm == tuple(range(len(self.perm)))


def _evaluate_mixed_letter_matrix(word: StarWord, us) -> np.ndarray:
    """Product of the K Haar letters and their transposes per the word."""
    k = len(us)
    n = us[0].shape[0]
    out = np.eye(n, dtype=np.complex128)
    for idx, star in word.letters:
        if not 1 <= idx <= 2 * k:
            raise InvalidArgumentError("letter outside the 2K alphabet")
        base = us[idx - 1] if idx <= k else us[idx - k - 1].T
        out = out @ (base.conj().T if star else base)
    return out


def left_regular_check(word: PermutationWord, k: int, n: int, samples: int,
                       seed: int = 0, tol: float = 1e-10) -> MCReport:
    """Monte-Carlo mean of the normalized tensor trace of the represented
    word; each sample is verified against the exact cycle factorization
    N^{#cycles - d} prod_c tr(word^{|c|}) before entering the average.
    """
    if word.trivial:
        raise InvalidArgumentError("the word is trivial")
    d = len(word.perm)
    t0 = time.perf_counter()
    values = np.empty(samples, dtype=np.complex128)
    base = RngStream(seed)
    for s in range(samples):
        rng = base.child(s).generator()
        us = [sample_haar_unitary(n, rng) for _ in range(k)]
        x = _evaluate_mixed_letter_matrix(word.free_part, us)
        lhs = permuted_tensor_trace([x] * d, word.perm)
        rhs = 1.0 + 0.0j
        for cyc in cycles_of(word.perm):
            rhs *= np.trace(np.linalg.matrix_power(x, len(cyc))) / n
        rhs *= float(n) ** (len(cycles_of(word.perm)) - d)
        if abs(lhs - rhs) > tol * max(1.0, abs(lhs)):
            raise IllConditionedError(
                f"cycle factorization violated: |delta| = {abs(lhs - rhs):.2e}")
        values[s] = lhs
    mean = complex(values.mean())
    stderr = float(math.sqrt(values.real.var(ddof=1) / samples
                             + values.imag.var(ddof=1) / samples)) \
        if samples > 1 else 0.0
    return MCReport(mean, stderr, samples, n, time.perf_counter() - t0)


# --------------------------------------------------------------------------
# conditional expectation onto the span of leg permutations
# --------------------------------------------------------------------------

@dataclass
class PermutationSpanOperator:
    """Element of span{rho(sigma)}, kept as coefficients per permutation."""

    coefficients: dict  # tuple permutation -> complex
    n: int
    d: int

    def to_dense(self) -> np.ndarray:
        out = np.zeros((self.n ** self.d, self.n ** self.d),
                       dtype=np.complex128)
        for sigma, c in self.coefficients.items():
            out += c * leg_permutation(sigma, self.n)
        return out

    def coefficient_vector(self, order) -> np.ndarray:
        return np.array([self.coefficients[s] for s in order])


def _operand_legs(a, d, n):
    if isinstance(a, TensorOperand):
        if a.legs != d or a.n != n:
            raise InvalidArgumentError("operand does not match (d, N)")
        return a
    if isinstance(a, np.ndarray) and a.shape == (n ** d, n ** d):
        return TensorOperand.from_dense(a, d, n)
    return TensorOperand.factored(list(a))


def _trace_against_permutations(a: TensorOperand, order, n, d):
    """m_sigma = tr^{x d}(rho(sigma)^* A) for every sigma, via the entry sum
    sum_i prod_k A_k(i_k, i_{sigma(k)}) (adjoint permutation action).
    """
    out = np.zeros(len(order), dtype=np.complex128)
    for si, sigma in enumerate(order):
        if a.dense is not None:
            inv = tuple(_index_of(sigma, k) for k in range(d))
            out[si] = np.trace(leg_permutation(inv, n) @ a.dense) / n ** d
            continue
        total = 0j
        for w, fs in a.terms:
            args = []
            for k in range(d):
                args.append(fs[k])
                args.append([k, sigma[k]])
            total += w * np.einsum(*args, [])
        out[si] = total / n ** d
    return out


def conditional_expectation_sd(a, d: int, n: int) -> PermutationSpanOperator:
    """Orthogonal projection of a d-leg operand onto span{rho(sigma)} with
    respect to the normalized trace inner product.

    The Gram matrix G(sigma, tau) = N^{#cycles(sigma^{-1} tau) - d} is
    invertible for N > d; d is capped at 4 (a 24 x 24 Gram).
    """
    if d > 4:
        raise ResourceLimitError("conditional expectation capped at d = 4")
    if n <= d:
        raise IllConditionedError("need N > d for an invertible Gram matrix")
    a = _operand_legs(a, d, n)
    order = list(itertools.permutations(range(d)))
    gram = np.zeros((len(order), len(order)))
    for i, s in enumerate(order):
        for j, t in enumerate(order):
            comp = tuple(t[_index_of(s, k)] for k in range(d))  # s^{-1} t
            gram[i, j] = float(n) ** (len(cycles_of(comp)) - d)
    m = _trace_against_permutations(a, order, n, d)
    coeffs = np.linalg.solve(gram, m)
    return PermutationSpanOperator({s: complex(c) for s, c in zip(order, coeffs)},
                                   n, d)


def _index_of(sigma, k):
    for i, v in enumerate(sigma):
        if v == k:
            return i
    raise InvalidArgumentError("malformed permutation")
