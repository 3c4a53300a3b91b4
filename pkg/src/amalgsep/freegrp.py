"""Free-group words, folded subgroup graphs, and finite-quotient images.

Finite-index normal subgroups of free factors are never materialized as
element sets; they are carried around as ``GenImages`` (the images of the
free generators in a finite target group, the subgroup being the kernel
of the induced map). Membership in finitely generated subgroups is decided
on a folded core graph.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

from .errors import InputError, RankMismatch, SizeCap
from .fingrp import FiniteGroup

Letter = tuple[int, int]          # (generator index, sign +1/-1)
FreeWord = tuple[Letter, ...]

GEN_IMAGE_CAP = 10_000_000


def reduce_word(raw: Iterable[Letter]) -> FreeWord:
    """Freely reduce a letter sequence (cancel adjacent x x^-1 pairs)."""
    out: list[Letter] = []
    for gen, sign in raw:
        if sign not in (1, -1):
            raise InputError(f"letter sign must be +1 or -1, got {sign}")
        if out and out[-1][0] == gen and out[-1][1] == -sign:
            out.pop()
        else:
            out.append((gen, sign))
    return tuple(out)


def word_mul(u: FreeWord, v: FreeWord) -> FreeWord:
    return reduce_word(u + v)


def word_inv(u: FreeWord) -> FreeWord:
    return tuple((g, -s) for g, s in reversed(u))


def word_pow(u: FreeWord, k: int) -> FreeWord:
    if k < 0:
        u, k = word_inv(u), -k
    out: FreeWord = ()
    for _ in range(k):
        out = word_mul(out, u)
    return out


def parse_word(text: str, gen_names: Sequence[str]) -> FreeWord:
    """Parse "a b^-1 a^2" style words over the given generator names."""
    letters: list[Letter] = []
    for token in text.split():
        if "^" in token:
            name, exp = token.split("^", 1)
            try:
                k = int(exp)
            except ValueError:
                raise InputError(f"bad exponent in token {token!r}") from None
        else:
            name, k = token, 1
        try:
            gen = list(gen_names).index(name)
        except ValueError:
            raise InputError(f"unknown generator {name!r}") from None
        sign = 1 if k > 0 else -1
        letters.extend([(gen, sign)] * abs(k))
    return reduce_word(letters)


def format_word(w: FreeWord, gen_names: Sequence[str]) -> str:
    if not w:
        return "1"
    parts = []
    i = 0
    while i < len(w):
        gen, sign = w[i]
        j = i
        while j < len(w) and w[j] == (gen, sign):
            j += 1
        k = (j - i) * sign
        parts.append(gen_names[gen] if k == 1 else f"{gen_names[gen]}^{k}")
        i = j
    return " ".join(parts)


@dataclass(frozen=True)
class SubgroupGraph:
    """Folded core graph of a finitely generated subgroup of a free group.

    ``edges[(state, gen, sign)]`` is the state reached by reading that
    letter; the map is deterministic and closed under edge inversion.
    """

    rank: int
    n_states: int
    edges: dict
    base: int = 0

    def step(self, state: int, letter: Letter) -> Optional[int]:
        return self.edges.get((state, letter[0], letter[1]))


def fold_subgroup(gens: Iterable[FreeWord], rank: int) -> SubgroupGraph:
    """Stallings construction: wedge of generator loops, folded to a core graph."""
    gens = [reduce_word(g) for g in gens]
    for w in gens:
        for gen, _ in w:
            if not (0 <= gen < rank):
                raise InputError(f"generator index {gen} out of declared rank {rank}")

    # Bouquet of loops at state 0; quads (u, gen, v) read "u --gen--> v".
    quads: set[tuple[int, int, int]] = set()
    n = 1
    for w in gens:
        cur = 0
        for i, (gen, sign) in enumerate(w):
            nxt = 0 if i == len(w) - 1 else n
            if nxt != 0:
                n += 1
            if sign > 0:
                quads.add((cur, gen, nxt))
            else:
                quads.add((nxt, gen, cur))
            cur = nxt

    # Fold: merge states until the labelled graph is deterministic in both
    # directions. Every union drops the state count, so this terminates.
    parent = list(range(n))

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def union(a: int, b: int) -> None:
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[max(ra, rb)] = min(ra, rb)

    while True:
        quads = {(find(u), gen, find(v)) for (u, gen, v) in quads}
        forward: dict[tuple[int, int], int] = {}
        backward: dict[tuple[int, int], int] = {}
        merged = False
        for u, gen, v in sorted(quads):
            if forward.setdefault((u, gen), v) != v:
                union(forward[(u, gen)], v)
                merged = True
            if backward.setdefault((v, gen), u) != u:
                union(backward[(v, gen)], u)
                merged = True
        if not merged:
            break

    edges: dict[tuple[int, int, int], int] = {}
    for u, gen, v in quads:
        edges[(u, gen, 1)] = v
        edges[(v, gen, -1)] = u

    # Canonical relabel: BFS from the base in (gen, sign) order.
    base = find(0)
    label = {base: 0}
    queue = [base]
    while queue:
        u = queue.pop(0)
        for gen in range(rank):
            for sign in (1, -1):
                v = edges.get((u, gen, sign))
                if v is not None and v not in label:
                    label[v] = len(label)
                    queue.append(v)
    relabelled = {(label[u], gen, sign): label[v]
                  for (u, gen, sign), v in edges.items() if u in label}
    return SubgroupGraph(rank=rank, n_states=len(label), edges=relabelled, base=0)


def graph_member(graph: SubgroupGraph, w: FreeWord) -> bool:
    """True iff the word labels a loop at the base state."""
    state = graph.base
    for letter in reduce_word(w):
        state = graph.step(state, letter)
        if state is None:
            return False
    return state == graph.base


def primitive_root(w: FreeWord) -> tuple[FreeWord, int]:
    """Write w = r^m with r not a proper power; returns (r, m).

    Handles non-cyclically-reduced words by conjugating the root back.
    """
    if not w:
        return ((), 1)
    # Cyclic reduction: w = c u c^-1 with u cyclically reduced.
    c: list[Letter] = []
    u = list(w)
    while len(u) >= 2 and u[0] == (u[-1][0], -u[-1][1]):
        c.append(u[0])
        u = u[1:-1]
    u = tuple(u)
    n = len(u)
    for d in range(1, n + 1):
        if n % d:
            continue
        if word_pow(u[:d], n // d) == u:
            root = tuple(c) + u[:d] + word_inv(tuple(c))
            return (reduce_word(root), n // d)
    return (w, 1)


@dataclass(frozen=True)
class GenImages:
    """Images of the free generators in a finite target group.

    Represents the normal subgroup ker(induced map) of the free group;
    its index is the order of the subgroup the images generate.
    """

    rank: int
    target: FiniteGroup
    images: tuple[int, ...]

    def __post_init__(self):
        if len(self.images) != self.rank:
            raise InputError("images length must equal rank")

    def evaluate(self, w: FreeWord) -> int:
        T = self.target
        acc = 0
        for gen, sign in w:
            x = self.images[gen] if sign > 0 else T.inverse[self.images[gen]]
            acc = T.table[acc][x]
        return acc

    def image_members(self) -> frozenset[int]:
        T = self.target
        members = {0}
        frontier = [0]
        gens = [x for x in self.images] + [T.inverse[x] for x in self.images]
        while frontier:
            a = frontier.pop()
            for g in gens:
                b = T.table[a][g]
                if b not in members:
                    members.add(b)
                    frontier.append(b)
        return frozenset(members)

    def index(self) -> int:
        return len(self.image_members())


def enumerate_gen_images(rank: int, target: FiniteGroup,
                         cap: int = GEN_IMAGE_CAP) -> list[GenImages]:
    """All target^rank assignments in lexicographic order."""
    total = target.order ** rank
    if total > cap:
        raise SizeCap(f"{total} assignments exceed cap {cap}")
    return [GenImages(rank, target, imgs)
            for imgs in itertools.product(range(target.order), repeat=rank)]


def kernels_equal(u: GenImages, v: GenImages) -> bool:
    """Whether two induced maps from the same free group have equal kernels.

    Closes the diagonal subgroup of target(u) x target(v) generated by the
    paired generator images and checks it meets both axis factors trivially.
    """
    if u.rank != v.rank:
        raise RankMismatch(f"ranks {u.rank} and {v.rank} differ")
    Tu, Tv = u.target, v.target
    gen_pairs = list(zip(u.images, v.images))
    gen_pairs += [(Tu.inverse[a], Tv.inverse[b]) for a, b in gen_pairs]
    seen = {(0, 0)}
    frontier = [(0, 0)]
    while frontier:
        a, b = frontier.pop()
        for ga, gb in gen_pairs:
            p = (Tu.table[a][ga], Tv.table[b][gb])
            if p not in seen:
                seen.add(p)
                frontier.append(p)
    for a, b in seen:
        if (a == 0) != (b == 0):
            return False
    return True


def restriction(u: GenImages, words: Sequence[FreeWord]) -> GenImages:
    """Induced map on the subgroup with the given generating words.

    The words are taken as a free basis of the subgroup, so the result is
    a GenImages of rank len(words) into the same target.
    """
    return GenImages(len(words), u.target, tuple(u.evaluate(w) for w in words))


def kernel_key(u: GenImages) -> tuple:
    """Canonical fingerprint of ker(u): BFS normal form of the image group
    with its marked generator tuple. Two GenImages of the same rank have
    equal kernels iff their keys coincide."""
    T = u.target
    gens = list(u.images)
    step = gens + [T.inverse[g] for g in gens]
    label = {0: 0}
    order_seen = [0]
    queue = [0]
    while queue:
        a = queue.pop(0)
        for g in step:
            b = T.table[a][g]
            if b not in label:
                label[b] = len(label)
                order_seen.append(b)
                queue.append(b)
    table = []
    for a in order_seen:
        table.append(tuple(label[T.table[a][g]] for g in step))
    return (u.rank, tuple(table))
