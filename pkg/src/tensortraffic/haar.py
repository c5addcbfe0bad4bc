"""Symbolic pipeline for the large-N limit of words in tensor-power unitaries.

Pieces: linearization of a word against a base graph (each base edge becomes
a path, transpose blocks reversed), splitting a quotient into the two colored
subgraphs, the exact rational limit of injective traces of Haar words on
cactus graphs, and an exhaustive quotient ledger that certifies when every
contribution vanishes.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import InvalidArgumentError, ResourceLimitError
from .graphs import (LinearGraph, adjoint_graph, canonical_form,
                     disjoint_union, quotient)
from .invariants import (VALID, cactus_cycles, classify_labeling,
                         eta_of_split, leaf_count)
from .operands import TensorOperand
from .partitions import SetPartition, enumerate_partitions
from .traces import injective_graph_trace
from .words import StarWord, free_reduce, is_trivial

PREDICT_VERTEX_CAP = 10  # Bell(10) = 115975 quotients


@dataclass(frozen=True)
class EdgeMeta:
    base_edge: int  # 1-based index of the base edge
    position: int   # 1-based position within the word
    block: str      # "u", "t" or "v"
    letter: int
    star: bool


@dataclass(frozen=True)
class Linearization:
    graph: LinearGraph
    meta: tuple[EdgeMeta, ...]
    base: LinearGraph
    word: StarWord
    k1: int
    k2: int
    k3: int

    @property
    def p(self) -> int:
        return len(self.word)


def _block_of(k: int, k1: int, k2: int) -> str:
    if k <= k1:
        return "u"
    if k <= k1 + k2:
        return "t"
    return "v"


def linearize(base: LinearGraph, word: StarWord, k1: int, k2: int,
              k3: int) -> Linearization:
    """Replace each base edge by a path spelling the word.

    Edge k of the base becomes p edges numbered (k,1)..(k,p) in alphabetical
    order. For u- and v-block edges the path runs against the displayed
    arrows (edge (k,1) ends at the base target); for t-block edges the
    orientation of every path edge is reversed. Each path introduces p-1
    fresh interior vertices.
    """
    p = len(word)
    if p < 1:
        raise InvalidArgumentError("cannot linearize the empty word")
    if k1 < 1 or k2 < 0 or k3 < 0:
        raise InvalidArgumentError("need K1 >= 1 and K2, K3 >= 0")
    if base.order != k1 + k2 + k3:
        raise InvalidArgumentError(
            f"base graph has {base.order} edges, blocks sum to {k1 + k2 + k3}")
    nv = base.vertex_count
    edges = []
    meta = []
    for k, (src, tgt) in enumerate(base.edges, start=1):
        interior = [nv + (k - 1) * (p - 1) + i for i in range(p - 1)]
        chain = [tgt] + interior + [src]  # chain[i] between edges (k,i) and (k,i+1)
        block = _block_of(k, k1, k2)
        for i in range(1, p + 1):
            a, b = chain[i], chain[i - 1]  # runs toward the base target
            if block == "t":
                a, b = b, a
            edges.append((a, b))
            letter, star = word.letters[i - 1]
            meta.append(EdgeMeta(k, i, block, letter, star))
    graph = LinearGraph(nv + base.order * (p - 1), tuple(edges))
    return Linearization(graph, tuple(meta), base, word, k1, k2, k3)


def doubled(lin: Linearization) -> Linearization:
    """Linearized graph together with its edge-reversed copy (edges of the
    copy numbered after the originals, labels star-flipped); this is the
    index graph of the squared-modulus trace used for variance control.
    """
    graph = disjoint_union(lin.graph, adjoint_graph(lin.graph))
    kk = lin.base.order
    meta2 = tuple(EdgeMeta(m.base_edge + kk, m.position, m.block, m.letter,
                           not m.star) for m in lin.meta)
    return Linearization(graph, lin.meta + meta2, lin.base, lin.word,
                         lin.k1, lin.k2, lin.k3)


def split_graphs(tprime: LinearGraph, lin: Linearization):
    """Colored subgraphs of a quotient of the linearized graph: T1 keeps the
    u/t-block edges, T2 the v-block edges; both keep the full vertex set.
    Returns (t1, t2, edge ids of t1, edge ids of t2).
    """
    if tprime.order != lin.graph.order:
        raise InvalidArgumentError("quotient must preserve the edge list")
    ids1 = tuple(i for i, m in enumerate(lin.meta) if m.block in ("u", "t"))
    ids2 = tuple(i for i, m in enumerate(lin.meta) if m.block == "v")
    t1 = LinearGraph(tprime.vertex_count, tuple(tprime.edges[i] for i in ids1))
    t2 = LinearGraph(tprime.vertex_count, tuple(tprime.edges[i] for i in ids2))
    return t1, t2, ids1, ids2


def t1_labels(lin: Linearization):
    """(delta, eps) along the u/t-block edges, in their edge order."""
    delta = tuple(m.letter for m in lin.meta if m.block in ("u", "t"))
    eps = tuple(m.star for m in lin.meta if m.block in ("u", "t"))
    return delta, eps


# --------------------------------------------------------------------------
# exact Haar limit of injective traces
# --------------------------------------------------------------------------

def cycle_limit_coefficient(length: int) -> Fraction:
    """Limit weight of one alternating cycle of even length 2k:
    (-1)^(k-1) (2k-2)! / ((k-1)! k!), the signed Catalan number C_{k-1}.
    """
    if length % 2 != 0 or length < 2:
        raise InvalidArgumentError("cycles of a valid labeling have even length")
    k = length // 2
    return Fraction((-1) ** (k - 1) * math.factorial(2 * k - 2),
                    math.factorial(k - 1) * math.factorial(k))


def haar_limit_injective(graph: LinearGraph, delta, eps) -> Fraction:
    """Exact limit of N^{-c} E[injective trace] for a word tensor of
    independent Haar unitaries: zero unless the labeled graph is a valid
    well-oriented forest of cacti, in which case it is the product of the
    per-cycle signed Catalan coefficients.
    """
    if classify_labeling(graph, delta, eps) != VALID:
        return Fraction(0)
    out = Fraction(1)
    for cyc in cactus_cycles(graph):
        out *= cycle_limit_coefficient(len(cyc))
    return out


# --------------------------------------------------------------------------
# quotient ledger and the vanishing certificate
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class QuotientEntry:
    partition: str        # restricted-growth string of a representative
    multiplicity: int
    eta: Fraction
    leaves_total: int     # L(T')
    leaves_t1: int
    leaves_t2: int
    leaf_defect: int      # L(T_M) - L(T'), always >= 0
    validity: str         # classification of (T1, delta, eps)
    limit_coefficient: Fraction

    @property
    def dangerous(self) -> bool:
        """A surviving contribution: eta = 0 together with a valid T1."""
        return self.eta == 0 and self.validity == VALID


@dataclass
class FreenessCertificate:
    word: str
    blocks: tuple[int, int, int]
    doubled: bool
    verdict: str  # "VANISHES" or "INCONCLUSIVE"
    base_leaves: int
    entries: list[QuotientEntry] = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "word": self.word,
            "blocks": list(self.blocks),
            "doubled": self.doubled,
            "verdict": self.verdict,
            "base_leaves": self.base_leaves,
            "quotients": [{
                "partition": e.partition,
                "multiplicity": e.multiplicity,
                "eta": str(e.eta),
                "leaves": [e.leaves_total, e.leaves_t1, e.leaves_t2],
                "leaf_defect": e.leaf_defect,
                "validity": e.validity,
                "limit_coefficient": str(e.limit_coefficient),
            } for e in self.entries],
        }


def predict_freeness_limit(word: StarWord, base: LinearGraph, k1: int,
                           k2: int, k3: int, *,
                           include_variance_graph: bool = False) -> FreenessCertificate:
    """Enumerate every quotient of the linearized graph and certify that no
    contribution to the normalized expected trace survives the limit.

    Each quotient is scored by its splitting exponent and the validity of
    its Haar-colored subgraph; the verdict is VANISHES exactly when no
    quotient has simultaneously a zero exponent and a valid subgraph.
    Order-isomorphic quotients are deduplicated (multiplicities kept).
    """
    if is_trivial(word):
        raise InvalidArgumentError("the word reduces to the identity")
    lin = linearize(base, word, k1, k2, k3)
    if include_variance_graph:
        lin = doubled(lin)
    graph = lin.graph
    if graph.vertex_count > PREDICT_VERTEX_CAP:
        raise ResourceLimitError(
            f"quotient enumeration capped at {PREDICT_VERTEX_CAP} vertices "
            f"(linearized graph has {graph.vertex_count})")
    delta, eps = t1_labels(lin)
    base_leaves = leaf_count(graph)
    ledger: dict = {}
    reps: dict = {}
    for pi in enumerate_partitions(graph.vertex_count):
        tprime = quotient(graph, pi)
        key = canonical_form(tprime)
        if key in ledger:
            ledger[key] += 1
            continue
        ledger[key] = 1
        t1, t2, _, _ = split_graphs(tprime, lin)
        validity = classify_labeling(t1, delta, eps)
        coeff = haar_limit_injective(t1, delta, eps) if validity == VALID \
            else Fraction(0)
        lt, l1, l2 = leaf_count(tprime), leaf_count(t1), leaf_count(t2)
        reps[key] = QuotientEntry(
            partition=pi.to_string(),
            multiplicity=1,
            eta=eta_of_split(t1, t2, tprime),
            leaves_total=lt, leaves_t1=l1, leaves_t2=l2,
            leaf_defect=base_leaves - lt,
            validity=validity,
            limit_coefficient=coeff)
    entries = []
    for key, entry in reps.items():
        entries.append(QuotientEntry(
            partition=entry.partition, multiplicity=ledger[key],
            eta=entry.eta, leaves_total=entry.leaves_total,
            leaves_t1=entry.leaves_t1, leaves_t2=entry.leaves_t2,
            leaf_defect=entry.leaf_defect, validity=entry.validity,
            limit_coefficient=entry.limit_coefficient))
    entries.sort(key=lambda e: e.partition)
    verdict = "VANISHES" if not any(e.dangerous for e in entries) \
        else "INCONCLUSIVE"
    return FreenessCertificate(word.to_string(), (k1, k2, k3),
                               include_variance_graph, verdict, base_leaves,
                               entries)


# --------------------------------------------------------------------------
# path and circuit words (structural checks behind the vanishing argument)
# --------------------------------------------------------------------------

def path_word(lin: Linearization, k: int) -> StarWord:
    """Word read along base-edge k's path against the trace convention
    (the matrix product along the path from its source to its target).
    Equals the original word on u/v-block paths and its mirror on t-block
    paths; on a doubled linearization the copies carry the inverses.
    """
    metas = sorted((m for m in lin.meta if m.base_edge == k),
                   key=lambda m: m.position)
    if not metas:
        raise InvalidArgumentError(f"no base edge {k}")
    letters = tuple((m.letter, m.star) for m in metas)
    word = StarWord(letters, lin.word.alphabet)
    # transpose blocks reverse the path, and so does the adjoint copy of a
    # doubled graph (whose labels already carry the flipped exponents)
    mirror = (metas[0].block == "t") != (k > lin.base.order)
    return word.mirrored() if mirror else word


def _plain_vertex_count(lin: Linearization) -> int:
    return lin.base.vertex_count + lin.base.order * (len(lin.word) - 1)


def _interior_vertices(lin: Linearization) -> list[int]:
    nv, plain = lin.base.vertex_count, _plain_vertex_count(lin)
    interiors = list(range(nv, plain))
    if _is_doubled(lin):
        interiors += [plain + v for v in range(nv, plain)]
    return interiors


def paths_intact(lin: Linearization, pi: SetPartition) -> bool:
    """True when no interior path vertex is merged with anything, so each
    path survives the quotient as a chain and circuits of the colored
    subgraph decompose into whole path words.
    """
    if lin.graph.vertex_count != pi.n:
        raise InvalidArgumentError("partition does not fit the linearized graph")
    for v in _interior_vertices(lin):
        if sum(1 for b in pi.rgs if b == pi.rgs[v]) > 1:
            return False
    return True


def circuit_words(lin: Linearization, pi: SetPartition) -> list[StarWord] | None:
    """Words of the directed circuits of the u/t-colored quotient subgraph,
    composed from whole path words. Returns None when interior merging
    breaks a path (the decomposition then does not apply) or when the arcs
    do not balance into circuits.
    """
    if not paths_intact(lin, pi):
        return None
    arcs = []  # (from block, to block, word), u/t edges only
    for k in range(1, lin.base.order * (2 if _is_doubled(lin) else 1) + 1):
        metas = [m for m in lin.meta if m.base_edge == k]
        if not metas or metas[0].block == "v":
            continue
        src, tgt = lin.base.edges[(k - 1) % lin.base.order]
        if k > lin.base.order:  # the copy's endpoints live in the shifted block
            src += _plain_vertex_count(lin)
            tgt += _plain_vertex_count(lin)
        word = path_word(lin, k)
        # orientation-following endpoints of the path in the quotient
        start, end = pi.rgs[src], pi.rgs[tgt]
        if (metas[0].block == "t") != (k > lin.base.order):
            start, end = end, start
        arcs.append((start, end, word))
    # Hierholzer-style decomposition into arc cycles
    out = []
    unused = list(range(len(arcs)))
    by_start: dict[int, list[int]] = {}
    for i, (s, _, _) in enumerate(arcs):
        by_start.setdefault(s, []).append(i)
    used = [False] * len(arcs)
    for i in range(len(arcs)):
        if used[i]:
            continue
        walk = [i]
        used[i] = True
        cur = arcs[i][1]
        start = arcs[i][0]
        while cur != start:
            nxt = next((j for j in by_start.get(cur, []) if not used[j]), None)
            if nxt is None:
                return None  # arcs do not close into circuits
            used[nxt] = True
            walk.append(nxt)
            cur = arcs[nxt][1]
        word = StarWord((), lin.word.alphabet)
        for j in walk:
            word = word * arcs[j][2]
        out.append(free_reduce(word))
    return out


def _is_doubled(lin: Linearization) -> bool:
    return len(lin.meta) > lin.base.order * len(lin.word)


# --------------------------------------------------------------------------
# splitting identity (independent families factor through injective traces)
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class SplittingReport:
    lhs: complex
    rhs: complex
    residual: float
    stderr: float | None  # None on the exact path
    degenerate: bool      # both sides vanish for dimensional reasons


def _permutation_matrix(perm) -> np.ndarray:
    n = len(perm)
    p = np.zeros((n, n))
    p[list(perm), np.arange(n)] = 1.0
    return p


def _conjugate_factored(operand: TensorOperand, p: np.ndarray) -> TensorOperand:
    return TensorOperand(operand.n, operand.legs, terms=[
        (w, [p @ f @ p.T for f in fs]) for w, fs in operand.terms])


def _joint_operand(b1: TensorOperand, b2: TensorOperand, ids1, ids2,
                   order: int) -> TensorOperand:
    """Interleave the factors of b1/b2 into edge positions ids1/ids2."""
    terms = []
    for w1, f1 in b1.terms:
        for w2, f2 in b2.terms:
            factors = [None] * order
            for pos, f in zip(ids1, f1):
                factors[pos] = f
            for pos, f in zip(ids2, f2):
                factors[pos] = f
            terms.append((w1 * w2, factors))
    return TensorOperand.sum_of_factored(b1.n, order, terms)


def splitting_identity_check(tprime: LinearGraph, color, b1: TensorOperand,
                             b2: TensorOperand, *, mode: str = "exact",
                             samples: int = 200, seed: int = 0) -> SplittingReport:
    """Check that the expected injective trace of an independent pair
    factors: E Tr0_{T'}(B1 x B2) = (N-|V'|)!/N! * Tr0_{T1}(B1) * Tr0_{T2}(B2),
    with B2 averaged over permutation conjugations (exactly for mode="exact",
    which needs N <= 5; by sampling otherwise).
    """
    import itertools as _it
    from math import factorial as _fact

    n = b1.n
    color = tuple(color)
    ids1 = tuple(i for i, c in enumerate(color) if c == 1)
    ids2 = tuple(i for i, c in enumerate(color) if c == 2)
    if len(ids1) != b1.legs or len(ids2) != b2.legs:
        raise InvalidArgumentError("coloring does not match operand legs")
    t1 = LinearGraph(tprime.vertex_count, tuple(tprime.edges[i] for i in ids1))
    t2 = LinearGraph(tprime.vertex_count, tuple(tprime.edges[i] for i in ids2))
    nv = tprime.vertex_count
    if nv > n:
        return SplittingReport(0j, 0j, 0.0, None, True)
    weight = _fact(n - nv) / _fact(n)
    rhs = weight * injective_graph_trace(t1, b1, letter_of_edge=range(b1.legs)) \
        * injective_graph_trace(t2, b2, letter_of_edge=range(b2.legs))
    if mode == "exact":
        if n > 5:
            raise ResourceLimitError("exact permutation averaging capped at N = 5")
        total = 0j
        count = 0
        for perm in _it.permutations(range(n)):
            conj = _conjugate_factored(b2, _permutation_matrix(perm))
            joint = _joint_operand(b1, conj, ids1, ids2, tprime.order)
            total += injective_graph_trace(tprime, joint)
            count += 1
        lhs = total / count
        return SplittingReport(complex(lhs), complex(rhs),
                               abs(lhs - rhs), None, False)
    rng = np.random.default_rng(seed)
    vals = np.empty(samples, dtype=np.complex128)
    for i in range(samples):
        conj = _conjugate_factored(b2, _permutation_matrix(rng.permutation(n)))
        joint = _joint_operand(b1, conj, ids1, ids2, tprime.order)
        vals[i] = injective_graph_trace(tprime, joint)
    lhs = vals.mean()
    stderr = float(vals.std(ddof=1) / np.sqrt(samples)) if samples > 1 else 0.0
    return SplittingReport(complex(lhs), complex(rhs), abs(lhs - rhs),
                           stderr, False)
