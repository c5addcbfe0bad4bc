"""Graph trace forms on tensor matrix spaces.

The elementary form of a linear graph T sums, over all labelings of the
vertices by matrix indices, the product over edges of the matrix entry
(target label, source label). The injective form restricts the sum to
injective labelings; it is recovered from elementary forms by Möbius
inversion over the partition lattice of the vertex set.

Evaluation is routed through a small contraction engine that eliminates
one vertex at a time, pairing tensors via batched matrix products (BLAS)
instead of generic einsum calls. All arrays may carry one leading sample
axis, which makes Monte-Carlo sweeps cheap.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache, reduce

import numpy as np

from .errors import (InvalidArgumentError, NotInvariantError,
                     ProbeFailureError, ResourceLimitError)
from .graphs import LinearGraph, component_count, minimal_graph, quotient
from .invariants import forest_of_tec, leaf_count
from .operands import StateSpec, TensorOperand
from .partitions import SetPartition, enumerate_partitions, leq, mobius

INJECTIVE_VERTEX_CAP = 9  # Bell(9) = 21147 quotient evaluations


# --------------------------------------------------------------------------
# contraction engine
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class ContractionPlan:
    order: tuple[int, ...]  # vertex elimination order (touched vertices only)
    width: int              # max rank of any intermediate tensor


@lru_cache(maxsize=None)
def contraction_plan(graph: LinearGraph) -> ContractionPlan:
    """Greedy min-degree vertex elimination order.

    At each step the vertex producing the smallest intermediate tensor is
    eliminated (ties broken by vertex id, so plans are deterministic).
    """
    sets: list[set[int]] = []
    for s, t in graph.edges:
        sets.append({s, t})
    alive = sorted(graph.touched_vertices())
    order = []
    width = 0
    while alive:
        best, best_rank = None, None
        for x in alive:
            union: set[int] = set()
            for s in sets:
                if x in s:
                    union |= s
            rank = len(union - {x}) if union else 0
            if best_rank is None or rank < best_rank:
                best, best_rank = x, rank
        order.append(best)
        merged: set[int] = set()
        keep = []
        for s in sets:
            if best in s:
                merged |= s
            else:
                keep.append(s)
        merged.discard(best)
        width = max(width, len(merged))
        # labels absent from every other tensor get summed out immediately
        other = set().union(*keep) if keep else set()
        merged &= other
        sets = keep + ([merged] if merged else [])
        alive.remove(best)
    return ContractionPlan(tuple(order), width)


def _pair_merge(a_arr, a_idx, b_arr, b_idx, sum_over, batched):
    """Contract two tensors over `sum_over`, batching other shared labels.

    All non-batch axes have the same length; shapes are (B?, N, N, ...).
    """
    bset = set(b_idx)
    shared = [l for l in a_idx if l in bset]
    con = [l for l in shared if l in sum_over]
    batch_sh = [l for l in shared if l not in sum_over]
    free_a = [l for l in a_idx if l not in bset]
    aset = set(a_idx)
    free_b = [l for l in b_idx if l not in aset]
    off = 1 if batched else 0
    apos = {l: off + p for p, l in enumerate(a_idx)}
    bpos = {l: off + p for p, l in enumerate(b_idx)}
    lead = [0] if batched else []
    a_perm = lead + [apos[l] for l in batch_sh] + [apos[l] for l in free_a] \
        + [apos[l] for l in con]
    b_perm = lead + [bpos[l] for l in batch_sh] + [bpos[l] for l in con] \
        + [bpos[l] for l in free_b]
    n = a_arr.shape[-1] if a_idx else (b_arr.shape[-1] if b_idx else 1)
    bdim = a_arr.shape[0] if batched else 1
    g, fa, fb, c = (n ** len(batch_sh), n ** len(free_a),
                    n ** len(free_b), n ** len(con))
    at = a_arr.transpose(a_perm).reshape((bdim, g, fa, c))
    bt = b_arr.transpose(b_perm).reshape((bdim, g, c, fb))
    # matmul degenerates into a python-speed loop of tiny GEMMs when the
    # matrix block is 1x1-ish and the stacked dimension is large; route
    # those cases through broadcasting instead
    if c == 1:
        out = at * bt  # (bdim, g, fa, 1) x (bdim, g, 1, fb) outer product
    elif fa == 1 and fb == 1:
        out = np.einsum("bgoc,bgco->bgo", at, bt)[..., None]
    else:
        out = np.matmul(at, bt)
    new_idx = tuple(batch_sh + free_a + free_b)
    shape = (bdim,) + (n,) * len(new_idx) if batched else (n,) * len(new_idx)
    return out.reshape(shape), new_idx


def _contract_graph(graph: LinearGraph, mats, order, batched):
    """Value of the elementary form over the touched vertices.

    `mats` holds one array per edge, shape (N, N) or (B, N, N). Isolated
    vertices are NOT accounted for here.
    """
    if graph.order == 0:
        return complex(1.0)
    bdim = mats[0].shape[0] if batched else 1
    acc = np.ones(bdim, dtype=np.complex128) if batched else complex(1.0)
    pool: list[tuple[np.ndarray, tuple[int, ...]]] = []
    for eid, (s, t) in enumerate(graph.edges):
        arr = np.asarray(mats[eid])
        if s == t:
            pool.append((np.diagonal(arr, axis1=-2, axis2=-1), (s,)))
        else:
            pool.append((arr, (t, s)))  # row = target label, column = source

    def occurrences():
        occ: dict[int, int] = {}
        for _, idx in pool:
            for l in idx:
                occ[l] = occ.get(l, 0) + 1
        return occ

    def sweep():
        nonlocal acc
        changed = True
        while changed:
            changed = False
            occ = occurrences()
            for i, (arr, idx) in enumerate(pool):
                axes = tuple(p + (1 if batched else 0)
                             for p, l in enumerate(idx) if occ[l] == 1)
                if axes:
                    keep = tuple(l for l in idx if occ[l] > 1)
                    pool[i] = (arr.sum(axis=axes), keep)
                    changed = True
                    break
            for i in range(len(pool) - 1, -1, -1):
                arr, idx = pool[i]
                if not idx:
                    acc = acc * arr
                    pool.pop(i)
                    changed = True

    sweep()
    for x in order:
        while True:
            holders = [i for i, (_, idx) in enumerate(pool) if x in idx]
            if len(holders) < 2:
                break
            # merge the pair producing the smallest intermediate: pairing
            # tensors that share only the kept vertex would inflate the rank
            occ = occurrences()
            best = None
            for ii in range(len(holders)):
                for jj in range(ii + 1, len(holders)):
                    a_idx = pool[holders[ii]][1]
                    b_idx = pool[holders[jj]][1]
                    shared = set(a_idx) & set(b_idx)
                    summed = {l for l in shared
                              if occ[l] == a_idx.count(l) + b_idx.count(l)}
                    rank = len(set(a_idx) | set(b_idx)) - len(summed)
                    key = (rank, -len(shared), ii, jj)
                    if best is None or key < best[0]:
                        best = (key, holders[ii], holders[jj], summed)
            _, ia, ib, sum_over = best
            b_arr, b_idx = pool.pop(ib)
            a_arr, a_idx = pool.pop(ia)
            merged = _pair_merge(a_arr, a_idx, b_arr, b_idx, sum_over, batched)
            pool.append(merged)
            sweep()
        sweep()
    if pool:  # only possible if `order` missed a vertex
        raise InvalidArgumentError("elimination order does not cover the graph")
    return acc


def _trace_factors(graph: LinearGraph, mats, n, batched=False):
    """Elementary form with one matrix per edge (arrays, not operands)."""
    if graph.order and any(m.shape[-1] != n for m in mats):
        raise InvalidArgumentError("matrix dimension does not match N")
    iso = graph.vertex_count - len(graph.touched_vertices())
    plan = contraction_plan(graph)
    val = _contract_graph(graph, mats, plan.order, batched)
    return val * (n ** iso)


# --------------------------------------------------------------------------
# public trace forms
# --------------------------------------------------------------------------

def _resolve_letters(graph: LinearGraph, operand: TensorOperand, letter_of_edge):
    if letter_of_edge is None:
        if operand.legs != graph.order:
            raise InvalidArgumentError(
                f"operand has {operand.legs} legs but the graph has "
                f"{graph.order} edges; pass letter_of_edge")
        return tuple(range(graph.order))
    letters = tuple(int(l) for l in letter_of_edge)
    if len(letters) != graph.order:
        raise InvalidArgumentError("letter_of_edge must assign every edge")
    if any(not 0 <= l < operand.legs for l in letters):
        raise InvalidArgumentError("letter_of_edge points outside the operand")
    return letters


def graph_trace(graph: LinearGraph, operand: TensorOperand,
                letter_of_edge=None) -> complex:
    """Elementary linear form of the graph, evaluated on the operand.

    Convention, fixed globally: an edge v -> w contributes the matrix entry
    A(label(w), label(v)), i.e. row = target. Each isolated vertex
    contributes a factor N.
    """
    letters = _resolve_letters(graph, operand, letter_of_edge)
    if operand.dense is not None:
        return _dense_graph_trace(graph, operand, letters)
    total = 0.0 + 0.0j
    for weight, factors in operand.terms:
        mats = [factors[l] for l in letters]
        total += weight * _trace_factors(graph, mats, operand.n)
    return complex(total)


def _dense_graph_trace(graph, operand, letters) -> complex:
    if tuple(letters) != tuple(range(operand.legs)):
        raise InvalidArgumentError(
            "dense operands support only the identity edge-to-leg assignment")
    n, k = operand.n, operand.legs
    arr = operand.dense.reshape((n,) * (2 * k))
    # row axis of leg l carries the target label of edge l, the column axis
    # its source label; summing over labels is exactly the elementary form.
    labels = [0] * (2 * k)
    for eid, (s, t) in enumerate(graph.edges):
        labels[eid] = t
        labels[k + eid] = s
    remap = {}
    for l in labels:
        if l not in remap:
            remap[l] = len(remap)
    iso = graph.vertex_count - len(graph.touched_vertices())
    val = np.einsum(arr, [remap[l] for l in labels], [])
    return complex(val) * n ** iso


@lru_cache(maxsize=None)
def _injective_expansion(graph: LinearGraph):
    """(mobius coefficient, quotient graph) per partition of the vertex set."""
    if graph.vertex_count > INJECTIVE_VERTEX_CAP:
        raise ResourceLimitError(
            f"injective traces are capped at {INJECTIVE_VERTEX_CAP} vertices "
            f"(requested {graph.vertex_count})")
    discrete = SetPartition.discrete(graph.vertex_count)
    out = []
    for pi in enumerate_partitions(graph.vertex_count):
        out.append((mobius(discrete, pi), quotient(graph, pi)))
    return tuple(out)


def injective_graph_trace(graph: LinearGraph, operand: TensorOperand,
                          letter_of_edge=None) -> complex:
    """Injective linear form: the elementary sum restricted to injective
    vertex labelings, computed by Möbius inversion over quotients.
    """
    if graph.vertex_count > operand.n:
        return 0.0 + 0.0j  # pigeonhole: no injective labeling exists
    letters = _resolve_letters(graph, operand, letter_of_edge)
    total = 0.0 + 0.0j
    for mob, q in _injective_expansion(graph):
        total += mob * graph_trace(q, operand, letters)
    return complex(total)


def graph_trace_stack(graph: LinearGraph, mats, n) -> np.ndarray:
    """Batched elementary form: `mats` has one (B, N, N) array per edge."""
    return _trace_factors(graph, mats, n, batched=True)


def injective_trace_stack(graph: LinearGraph, mats, n) -> np.ndarray:
    """Batched injective form (same Möbius expansion as the scalar path)."""
    bdim = mats[0].shape[0] if graph.order else 1
    if graph.vertex_count > n:
        return np.zeros(bdim, dtype=np.complex128)
    total = np.zeros(bdim, dtype=np.complex128)
    for mob, q in _injective_expansion(graph):
        total += mob * _trace_factors(q, mats, n, batched=True)
    return total


def injective_plan_width(graph: LinearGraph) -> int:
    """Worst contraction width across the Möbius expansion (for batch sizing)."""
    return max(contraction_plan(q).width for _, q in _injective_expansion(graph))


def naive_graph_trace(graph: LinearGraph, operand: TensorOperand,
                      letter_of_edge=None, injective=False) -> complex:
    """Direct summation over all (or all injective) vertex labelings.

    Exponential in the vertex count; this is the reference oracle for the
    contraction engine and the Möbius expansion, usable for N^|V| small.
    """
    letters = _resolve_letters(graph, operand, letter_of_edge)
    n = operand.n
    total = 0.0 + 0.0j
    for labels in itertools.product(range(n), repeat=graph.vertex_count):
        if injective and len(set(labels)) != len(labels):
            continue
        for weight, factors in operand.terms:
            prod = weight
            for eid, (s, t) in enumerate(graph.edges):
                prod *= factors[letters[eid]][labels[t], labels[s]]
            total += prod
    return complex(total)


# --------------------------------------------------------------------------
# Möbius conversion between elementary and injective tables over P(2K)
# --------------------------------------------------------------------------

def plain_from_injective_table(table: dict) -> dict:
    """Given pi -> injective value, return pi -> elementary value."""
    keys = list(table)
    return {pi: sum(table[pi2] for pi2 in keys if leq(pi, pi2)) for pi in keys}


def injective_from_plain_table(table: dict) -> dict:
    """Given pi -> elementary value, return pi -> injective value."""
    keys = list(table)
    return {pi: sum(mobius(pi, pi2) * table[pi2]
                    for pi2 in keys if leq(pi, pi2)) for pi in keys}


# --------------------------------------------------------------------------
# renormalized forms
# --------------------------------------------------------------------------

def zeta_trace(graph: LinearGraph, operand: TensorOperand,
               letter_of_edge=None) -> complex:
    """Elementary form scaled by N^(-L/2), L the two-edge-connected leaf count."""
    value = graph_trace(graph, operand, letter_of_edge)
    return value * operand.n ** (-Fraction(leaf_count(graph), 2))


def tau_trace(graph: LinearGraph, operand: TensorOperand,
              letter_of_edge=None) -> complex:
    """Elementary form scaled by N^(-c), c the number of connected components."""
    value = graph_trace(graph, operand, letter_of_edge)
    return value * operand.n ** (-component_count(graph))


# --------------------------------------------------------------------------
# extremal factored operand for the leaf-count growth rate
# --------------------------------------------------------------------------

def ms_optimality_witness(pi: SetPartition, n: int) -> TensorOperand:
    """Unit-norm factored operand whose injective trace over the quotient of
    the minimal graph grows like N^(L/2).

    Construction: bridges adjacent to exactly one leaf of the forest of
    two-edge-connected components receive scaled column indicators pointing
    at a shared index determined by their non-leaf endpoints; every other
    edge receives a block matrix of rank-one all-ones blocks of size 2K.
    Every entry is nonnegative, so no cancellation occurs in the trace.
    """
    if pi.n % 2 != 0:
        raise InvalidArgumentError("the partition must live on [2K]")
    k = pi.n // 2
    if n < 2 * k:
        raise InvalidArgumentError(f"need N >= 2K = {2 * k}, got {n}")
    graph = quotient(minimal_graph(k), pi)
    forest = forest_of_tec(graph)
    deg = [forest.degree(i) for i in range(len(forest.components))]
    comp_of = {}
    for ci, comp in enumerate(forest.components):
        for v in comp:
            comp_of[v] = ci
    one_leaf = []  # (edge id, non-leaf endpoint, True if the target is in the leaf)
    for ci, cj, eid in forest.forest_edges:
        if (deg[ci] == 1) + (deg[cj] == 1) != 1:
            continue
        leaf_comp = ci if deg[ci] == 1 else cj
        s, t = graph.edges[eid]
        if comp_of[t] == leaf_comp:
            one_leaf.append((eid, s, True))
        else:
            one_leaf.append((eid, t, False))
    column = {}
    if one_leaf:
        anchor = SetPartition.from_values([v for _, v, _ in one_leaf])
        for pos, (eid, _, _) in enumerate(one_leaf, start=1):
            column[eid] = anchor.block_of(pos)
    block = 2 * k
    m = n // block
    jmat = np.zeros((n, n))
    for b in range(m):
        jmat[b * block:(b + 1) * block, b * block:(b + 1) * block] = 1.0 / block
    scale = n ** -0.5
    mats = []
    leaf_side = {eid: tgt_in_leaf for eid, _, tgt_in_leaf in one_leaf}
    for eid in range(k):
        if eid in column:
            arr = np.zeros((n, n))
            if leaf_side[eid]:
                arr[:, column[eid]] = scale  # entry A(row, anchor column)
            else:
                arr[column[eid], :] = scale
            mats.append(arr)
        else:
            mats.append(jmat)
    return TensorOperand.factored(mats)


# --------------------------------------------------------------------------
# state evaluation and decomposition into elementary forms
# --------------------------------------------------------------------------

@lru_cache(maxsize=None)
def _minimal_quotients(k: int):
    return tuple((pi, quotient(minimal_graph(k), pi))
                 for pi in enumerate_partitions(2 * k))


def state_unitality_defect(spec: StateSpec) -> float:
    """|psi(1) - 1| for an elementary-combination state."""
    total = 0.0 + 0.0j
    lookup = {pi: g for pi, g in _minimal_quotients(spec.k)}
    for pi, a in spec.coeffs.items():
        total += a * spec.n ** component_count(lookup[pi])
    return abs(total - 1.0)


def apply_state(spec, operand: TensorOperand) -> complex:
    """Evaluate a state (StateSpec or plain callable) on an operand."""
    if callable(spec) and not isinstance(spec, StateSpec):
        return complex(spec(operand))
    n, k = spec.n, spec.k
    if operand.legs != k or operand.n != n:
        raise InvalidArgumentError(
            f"operand shape (N={operand.n}, K={operand.legs}) does not match "
            f"the state (N={n}, K={k})")
    if spec.kind == "elementary_combination":
        lookup = {pi: g for pi, g in _minimal_quotients(k)}
        return complex(sum(a * graph_trace(lookup[pi], operand)
                           for pi, a in spec.coeffs.items()))
    if operand.dense is not None:
        return _apply_state_dense(spec, operand)
    total = 0.0 + 0.0j
    for weight, factors in operand.terms:
        if spec.kind == "tracial":
            prod = weight
            for f in factors:
                prod *= np.trace(f) / n
            total += prod
        elif spec.kind == "max_entangled_vector":
            prod = weight
            for m in range(0, k, 2):
                prod *= np.sum(factors[m] * factors[m + 1]) / n
            total += prod
        else:  # diagonal_uniform
            diag = np.ones(n, dtype=np.complex128)
            for f in factors:
                diag = diag * np.diagonal(f)
            total += weight * diag.sum() / n
    return complex(total)


def _apply_state_dense(spec, operand) -> complex:
    n, k = spec.n, spec.k
    arr = operand.dense
    if spec.kind == "tracial":
        return complex(np.trace(arr) / n ** k)
    if spec.kind == "max_entangled_vector":
        omega = np.zeros(n * n, dtype=np.complex128)
        omega[::n + 1] = n ** -0.5
        vec = reduce(np.kron, [omega] * (k // 2))
        return complex(vec.conj() @ arr @ vec)
    # diagonal_uniform: average of the entries at (i, i, ..., i)
    total = 0.0 + 0.0j
    for i in range(n):
        pos = sum(i * n ** j for j in range(k))
        total += arr[pos, pos]
    return complex(total / n)


def decompose_invariant_state(psi, k: int, n: int, *, check_invariance=True,
                              seed=0, checks=3, tol=1e-9) -> dict:
    """Coefficients of a permutation-invariant state over the elementary
    forms indexed by partitions of [2K].

    The state is probed on one elementary matrix tensor per kernel class,
    then Möbius inversion turns the table into coefficients. Requires
    N >= 2K so that every kernel class has a representative multi-index.
    """
    if n < 2 * k:
        raise InvalidArgumentError(f"need N >= 2K = {2 * k} (got N = {n})")
    if check_invariance:
        _check_invariance(psi, k, n, seed, checks, tol)
    parts = enumerate_partitions(2 * k)
    probes = {}
    for pi in parts:
        vals = [pi.rgs[pos] for pos in range(2 * k)]  # one index per block
        factors = []
        for leg in range(k):
            arr = np.zeros((n, n))
            arr[vals[leg], vals[k + leg]] = 1.0
            factors.append(arr)
        probes[pi] = apply_state(psi, TensorOperand.factored(factors))
    return {pi: sum(probes[pi2] * mobius(pi2, pi)
                    for pi2 in parts if leq(pi2, pi)) for pi in parts}


def _check_invariance(psi, k, n, seed, checks, tol):
    rng = np.random.default_rng(seed)
    for _ in range(checks):
        factors = [rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
                   for _ in range(k)]
        a = TensorOperand.factored(factors)
        perm = rng.permutation(n)
        p = np.zeros((n, n))
        p[perm, np.arange(n)] = 1.0
        conj = TensorOperand.factored([p @ f @ p.T for f in factors])
        base, moved = apply_state(psi, a), apply_state(psi, conj)
        if abs(base - moved) > tol * max(1.0, abs(base)):
            raise NotInvariantError(
                f"state is not permutation invariant: |delta| = {abs(base - moved):.2e}")


def reconstruction_value(coeffs: dict, operand: TensorOperand) -> complex:
    """Evaluate sum_pi a_pi Tr_{T0^pi} on an operand."""
    k = operand.legs
    lookup = {pi: g for pi, g in _minimal_quotients(k)}
    return complex(sum(a * graph_trace(lookup[pi], operand)
                       for pi, a in coeffs.items()))


# --------------------------------------------------------------------------
# randomized extraction of cumulative coefficients
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class ExtractReport:
    estimate: complex
    stderr: float
    samples: int
    reference: complex  # injective trace of the probe


def _product_diagonals(pi: SetPartition, n, rng):
    """Diagonal vectors D_1..D_2K built from per-block root-of-unity phases
    and the zero-product family that separates distinct blocks.

    For block C: D(i) = ((2 - X_C(i)) * prod_{C' != C} X_{C'}(i))^(1/|C|)
    times a uniform |C|-th root of unity, with X iid uniform on {0, 2}.
    Distinct blocks multiply to zero pointwise; a block's |C|-th power has
    unit expectation, which is what kills all other elementary components.
    """
    blocks = pi.blocks()
    m = len(blocks)
    x = 2.0 * rng.integers(0, 2, size=(m, n))
    bars = []
    phases = []
    for b, blk in enumerate(blocks):
        size = len(blk)
        others = np.ones(n)
        for b2 in range(m):
            if b2 != b:
                others = others * x[b2]
        bars.append(((2.0 - x[b]) * others) ** (1.0 / size))
        phases.append(np.exp(2j * np.pi * rng.integers(0, size, size=n) / size))
    return [bars[pi.block_of(pos)] * phases[pi.block_of(pos)]
            for pos in range(1, pi.n + 1)]


def randomized_coefficient_extract(psi, pi: SetPartition, k: int, n: int,
                                   samples: int, seed=0,
                                   probe: TensorOperand | None = None) -> ExtractReport:
    """Monte-Carlo estimate of the cumulative coefficient b_pi (the sum of the
    elementary coefficients below pi) of a permutation-invariant state.

    Sandwiching a probe operand between random diagonal tensors kills every
    elementary-form component except the one indexed by pi; dividing the
    average by the probe's injective trace isolates b_pi.
    """
    if pi.n != 2 * k:
        raise InvalidArgumentError("partition must live on [2K]")
    if samples < 1:
        raise InvalidArgumentError("need samples >= 1")
    if probe is None:
        probe = ms_optimality_witness(pi, n)
    base = quotient(minimal_graph(k), pi)
    reference = injective_graph_trace(base, probe)
    if abs(reference) < 1e-12:
        raise ProbeFailureError(
            "probe operand has vanishing injective trace; supply another probe")
    rng = np.random.default_rng(seed)
    values = np.empty(samples, dtype=np.complex128)
    for s in range(samples):
        diags = _product_diagonals(pi, n, rng)
        sandwiched = _sandwich(probe, diags, k)
        values[s] = apply_state(psi, sandwiched)
    mean = values.mean()
    spread = values.std(ddof=1) / np.sqrt(samples) if samples > 1 else 0.0
    return ExtractReport(complex(mean / reference), float(spread / abs(reference)),
                         samples, complex(reference))


def _sandwich(probe: TensorOperand, diags, k) -> TensorOperand:
    terms = []
    for weight, factors in probe.terms:
        terms.append((weight, [diags[leg][:, None] * factors[leg]
                               * diags[k + leg][None, :] for leg in range(k)]))
    return TensorOperand.sum_of_factored(probe.n, k, terms)


def extract_expectation_exact(psi, pi: SetPartition, k: int, n: int,
                              probe: TensorOperand) -> complex:
    """Exact expectation of the sandwich estimator by enumerating every
    root-of-unity and product-variable assignment. Exponential; only for
    tiny instances (the enumeration size is checked).
    """
    blocks = pi.blocks()
    m = len(blocks)
    sizes = [len(b) for b in blocks]
    total_assignments = 1
    for size in sizes:
        total_assignments *= size ** n
    total_assignments *= 2 ** (m * n)
    if total_assignments > 2 * 10 ** 6:
        raise ResourceLimitError(
            f"exact enumeration needs {total_assignments} assignments")
    acc = 0.0 + 0.0j
    root_spaces = [list(itertools.product(range(size), repeat=n))
                   for size in sizes]
    x_space = list(itertools.product((0.0, 2.0), repeat=n))
    count = 0
    for root_choice in itertools.product(*root_spaces):
        for x_choice in itertools.product(x_space, repeat=m):
            count += 1
            diags = []
            for pos in range(1, 2 * k + 1):
                b = pi.block_of(pos)
                size = sizes[b]
                phase = np.exp(2j * np.pi * np.array(root_choice[b]) / size)
                others = np.ones(n)
                for b2 in range(m):
                    if b2 != b:
                        others = others * np.array(x_choice[b2])
                bar = ((2.0 - np.array(x_choice[b])) * others) ** (1.0 / size)
                diags.append(bar * phase)
            acc += apply_state(psi, _sandwich(probe, diags, k))
    return complex(acc / count)
