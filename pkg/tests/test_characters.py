import itertools
import math

import numpy as np
import pytest

from tensortraffic.characters import (PermutationWord, Signature,
                                      character_reference,
                                      conditional_expectation_sd,
                                      cycle_factorization_check, cycles_of,
                                      leg_permutation, left_regular_check,
                                      normalized_character,
                                      permuted_tensor_trace)
from tensortraffic.errors import (IllConditionedError, InvalidArgumentError,
                                  ResourceLimitError)
from tensortraffic.operands import TensorOperand
from tensortraffic.sampling import RngStream, sample_haar_unitary
from tensortraffic.words import StarWord


def haar(n, seed=0, index=0):
    return sample_haar_unitary(n, RngStream(seed, index))


# --- characters ----------------------------------------------------------

def test_trivial_signature_is_one():
    for n in (3, 8):
        u = haar(n, 1)
        assert np.isclose(normalized_character(Signature(), u), 1.0)


def test_character_identity_is_exactly_one():
    sig = Signature((2, 1), (1,))
    assert normalized_character(sig, np.eye(8)) == 1.0 + 0.0j


def test_character_scalar_matrix():
    n = 6
    c = np.exp(0.7j)
    val = normalized_character(Signature((2,), (1,)), c * np.eye(n))
    assert np.isclose(val, c ** (2 - 1))


def test_fundamental_is_normalized_trace():
    u = haar(7, 2)
    assert np.isclose(normalized_character(Signature((1,)), u),
                      np.trace(u) / 7)
    assert np.isclose(normalized_character(Signature((), (1,)), u),
                      np.conj(np.trace(u)) / 7)


def test_small_schur_closed_forms():
    n = 6
    u = haar(n, 3)
    t1, t2 = np.trace(u), np.trace(u @ u)
    assert np.isclose(normalized_character(Signature((2,)), u),
                      ((t1 ** 2 + t2) / 2) / (n * (n + 1) / 2))
    assert np.isclose(normalized_character(Signature((1, 1)), u),
                      ((t1 ** 2 - t2) / 2) / (n * (n - 1) / 2))
    assert np.isclose(normalized_character(Signature((1,), (1,)), u),
                      (abs(t1) ** 2 - 1) / (n ** 2 - 1))


def test_character_conjugation_invariance():
    n = 10
    u, v = haar(n, 4), haar(n, 5)
    sig = Signature((2,), (1,))
    assert np.isclose(normalized_character(sig, u),
                      normalized_character(sig, v @ u @ v.conj().T), atol=1e-9)


def test_character_dimension_exact():
    assert Signature((1,)).dimension(5) == 5
    assert Signature((2,)).dimension(5) == 15
    assert Signature((1, 1)).dimension(5) == 10
    assert Signature((1,), (1,)).dimension(5) == 24


def test_signature_validation():
    with pytest.raises(InvalidArgumentError):
        Signature((1, 2))
    with pytest.raises(InvalidArgumentError):
        Signature((0,))
    with pytest.raises(InvalidArgumentError):
        normalized_character(Signature((1,) * 9), haar(8, 6))


def test_character_error_halves_with_n():
    sig = Signature((1,), (1,))
    errs = {}
    for n in (32, 64):
        base = RngStream(31)
        total = 0.0
        for s in range(60):
            u = sample_haar_unitary(n, base.child(s))
            total += abs(normalized_character(sig, u)
                         - character_reference(sig, u))
        errs[n] = total / 60
    assert errs[64] <= 0.6 * errs[32]


# --- leg permutations -----------------------------------------------------

def test_leg_permutation_identity_and_swap():
    assert np.allclose(leg_permutation((0, 1), 3), np.eye(9))
    swap = leg_permutation((1, 0), 2)
    want = np.array([[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]])
    assert np.allclose(swap, want)


def test_leg_permutation_homomorphism():
    n, d = 3, 3
    rng = np.random.default_rng(0)
    perms = list(itertools.permutations(range(d)))
    for _ in range(10):
        s = perms[rng.integers(len(perms))]
        t = perms[rng.integers(len(perms))]
        comp = tuple(s[t[k]] for k in range(d))
        assert np.allclose(leg_permutation(s, n) @ leg_permutation(t, n),
                           leg_permutation(comp, n))


def test_leg_permutation_guard():
    with pytest.raises(ResourceLimitError):
        leg_permutation(tuple(range(9)), 8)


def test_permuted_trace_matches_dense():
    n = 3
    rng = np.random.default_rng(1)
    mats = [rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
            for _ in range(3)]
    sigma = (1, 2, 0)
    dense = np.kron(np.kron(mats[0], mats[1]), mats[2]) @ leg_permutation(sigma, n)
    assert np.isclose(permuted_tensor_trace(mats, sigma),
                      np.trace(dense) / n ** 3)


# --- cycle factorization -----------------------------------------------------

def test_cycle_factorization_exact_all_sigma():
    rng = np.random.default_rng(2)
    for d in (1, 2, 3, 4):
        a = rng.standard_normal((5, 5)) + 1j * rng.standard_normal((5, 5))
        for sigma in itertools.permutations(range(d)):
            assert cycle_factorization_check(a, sigma) <= 1e-10


def test_cycle_factorization_identity_permutation():
    n, d = 4, 3
    a = haar(n, 7)
    lhs = permuted_tensor_trace([a] * d, tuple(range(d)))
    assert np.isclose(lhs, (np.trace(a) / n) ** d)


def test_cycle_factorization_on_identity_matrix():
    n = 5
    for d in (2, 3):
        for sigma in itertools.permutations(range(d)):
            got = permuted_tensor_trace([np.eye(n)] * d, sigma)
            want = float(n) ** (len(cycles_of(sigma)) - d)
            assert np.isclose(got, want)


# --- mixed words -------------------------------------------------------------

def test_left_regular_pure_transposition_is_exact():
    word = PermutationWord(StarWord((), 2), (1, 0))
    n = 9
    rep = left_regular_check(word, k=1, n=n, samples=5, seed=0)
    assert np.isclose(rep.estimate, 1.0 / n)
    assert rep.stderr <= 1e-14


def test_left_regular_single_letter_vanishes():
    word = PermutationWord(StarWord.parse("1"), (0, 1))
    rep = left_regular_check(word, k=1, n=24, samples=600, seed=1)
    assert rep.within(0.0)


def test_left_regular_rejects_trivial():
    with pytest.raises(InvalidArgumentError):
        left_regular_check(PermutationWord(StarWord((), 1), (0, 1)),
                           k=1, n=8, samples=4)


def test_left_regular_decay_mixed_word():
    word = PermutationWord(StarWord.parse("1,2"), (1, 0))
    means = []
    for n in (8, 16, 32):
        rep = left_regular_check(word, k=2, n=n, samples=300, seed=2)
        means.append(abs(rep.estimate))
    assert means[2] < means[0]


def test_transpose_letters_supported():
    # letters K+1..2K act as transposes: x1 x3 with K=2 means U1 U1^t
    word = PermutationWord(StarWord.parse("1,3", alphabet=4), (0, 1))
    rep = left_regular_check(word, k=2, n=16, samples=200, seed=3)
    assert np.isfinite(rep.estimate.real)


# --- conditional expectation --------------------------------------------------

def test_condexp_fixes_every_leg_permutation():
    n, d = 6, 3
    for sigma in itertools.permutations(range(d)):
        rho = leg_permutation(sigma, n)
        proj = conditional_expectation_sd(rho, d, n)
        assert np.max(np.abs(proj.to_dense() - rho)) <= 1e-9


def test_condexp_idempotent_and_bimodule():
    n, d = 6, 2
    rng = RngStream(8).generator()
    a = TensorOperand.factored([sample_haar_unitary(n, rng) for _ in range(d)])
    ea = conditional_expectation_sd(a, d, n)
    eea = conditional_expectation_sd(ea.to_dense(), d, n)
    order = list(itertools.permutations(range(d)))
    assert np.max(np.abs(ea.coefficient_vector(order)
                         - eea.coefficient_vector(order))) <= 1e-9
    rho_s = leg_permutation((1, 0), n)
    sandwich = conditional_expectation_sd(rho_s @ a.to_dense() @ rho_s, d, n)
    assert np.max(np.abs(sandwich.to_dense()
                         - rho_s @ ea.to_dense() @ rho_s)) <= 1e-9


def test_condexp_self_adjoint():
    n, d = 5, 2
    rng = RngStream(9).generator()
    a = TensorOperand.factored([sample_haar_unitary(n, rng) for _ in range(d)])
    b = TensorOperand.factored([sample_haar_unitary(n, rng) for _ in range(d)])
    ea = conditional_expectation_sd(a, d, n).to_dense()
    eb = conditional_expectation_sd(b, d, n).to_dense()
    ip1 = np.trace(ea.conj().T @ b.to_dense())
    ip2 = np.trace(a.to_dense().conj().T @ eb)
    assert abs(ip1 - ip2) <= 1e-9


def test_condexp_centered_products_decay():
    # alternating centered tensor squares become orthogonal to the span
    d = 2
    norms = []
    for n in (6, 12, 24):
        base = RngStream(10)
        acc = 0.0
        reps = 6
        for s in range(reps):
            rng = base.child(s).generator()
            u1 = sample_haar_unitary(n, rng)
            u2 = sample_haar_unitary(n, rng)
            prod = None
            for u in (u1, u2):
                x = np.kron(u, u)
                ex = conditional_expectation_sd(
                    TensorOperand.factored([u, u]), d, n)
                c = x - ex.to_dense()
                prod = c if prod is None else prod @ c
            proj = conditional_expectation_sd(prod, d, n)
            acc += float(np.linalg.norm(
                np.array(list(proj.coefficients.values()))))
        norms.append(acc / reps)
    assert norms[2] < norms[0]


def test_condexp_guards():
    with pytest.raises(ResourceLimitError):
        conditional_expectation_sd(np.eye(2 ** 5), 5, 2)
    with pytest.raises(IllConditionedError):
        conditional_expectation_sd(np.eye(2 ** 2), 2, 2)
