"""Built-in catalog of finite homomorphism targets.

Families: cyclic Z_n (n <= 64), dihedral D_n (n <= 12, order 2n),
split metacyclic Z_m x| Z_j with twist k (m <= 31, j a multiple of the
order of k mod m), symmetric S_n (n <= 5), and direct products of two
base members under an order cap. Enumeration order is (group order,
family rank, parameters), which fixes the deterministic scan order used
everywhere downstream.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from math import gcd
from typing import Callable, Optional

from .errors import InputError
from .fingrp import FiniteGroup, is_p_power, trusted_group

CYCLIC_MAX = 64
DIHEDRAL_MAX = 12
METACYCLIC_M_MAX = 31
SYMMETRIC_MAX = 5


def cyclic_group(n: int) -> FiniteGroup:
    table = [[(i + j) % n for j in range(n)] for i in range(n)]
    names = ["e"] + [f"x{i}" if i > 1 else "x" for i in range(1, n)]
    return trusted_group(table, names)


def dihedral_group(n: int) -> FiniteGroup:
    """Symmetries of the n-gon, order 2n; index = i + n*e for r^i s^e."""
    order = 2 * n

    def mul(a: int, b: int) -> int:
        i1, e1 = a % n, a // n
        i2, e2 = b % n, b // n
        i = (i1 + (i2 if e1 == 0 else -i2)) % n
        return i + n * ((e1 + e2) % 2)

    table = [[mul(a, b) for b in range(order)] for a in range(order)]
    names = ["e"] + [f"r{i}" if i > 1 else "r" for i in range(1, n)]
    names += [f"sr{i}" if i else "s" for i in range(n)]
    return trusted_group(table, names)


def metacyclic_group(m: int, k: int, j: int) -> FiniteGroup:
    """Split metacyclic <x, y | x^m, y^j, y^-1 x y = x^k>; index = l*m + i for y^l x^i."""
    if gcd(k, m) != 1:
        raise InputError(f"twist {k} not invertible mod {m}")
    if pow(k, j, m) != 1:
        raise InputError(f"twist order does not divide {j}")
    order = m * j

    def mul(a: int, b: int) -> int:
        l1, i1 = divmod(a, m)
        l2, i2 = divmod(b, m)
        return ((l1 + l2) % j) * m + (i1 * pow(k, l2, m) + i2) % m

    table = [[mul(a, b) for b in range(order)] for a in range(order)]
    return trusted_group(table)


def symmetric_group(n: int) -> FiniteGroup:
    perms = sorted(itertools.permutations(range(n)))
    index = {p: i for i, p in enumerate(perms)}

    def compose(p, q):  # (p*q)(x) = p(q(x))
        return tuple(p[q[x]] for x in range(n))

    table = [[index[compose(p, q)] for q in perms] for p in perms]
    return trusted_group(table)


def direct_product(G1: FiniteGroup, G2: FiniteGroup) -> FiniteGroup:
    n2 = G2.order
    order = G1.order * n2
    table = [[0] * order for _ in range(order)]
    for a1 in G1.elements():
        for b1 in G2.elements():
            row = table[a1 * n2 + b1]
            ra = G1.table[a1]
            rb = G2.table[b1]
            for a2 in G1.elements():
                base = ra[a2] * n2
                for b2 in G2.elements():
                    row[a2 * n2 + b2] = base + rb[b2]
    verified = G1.associativity_verified and G2.associativity_verified
    return trusted_group(table, verified=verified)


@dataclass(frozen=True)
class CatalogEntry:
    name: str
    order: int
    family_rank: int
    params: tuple
    _builder: Callable[[], FiniteGroup] = field(compare=False, repr=False)

    def key(self):
        return (self.order, self.family_rank, self.params)

    def build(self) -> FiniteGroup:
        G = _BUILD_CACHE.get(self.name)
        if G is None:
            G = self._builder()
            _BUILD_CACHE[self.name] = G
        return G


_BUILD_CACHE: dict[str, FiniteGroup] = {}


def _mult_order(k: int, m: int) -> int:
    o, acc = 1, k % m
    while acc != 1:
        acc = acc * k % m
        o += 1
    return o


def _base_entries(max_order: int) -> list[CatalogEntry]:
    entries: list[CatalogEntry] = []
    for n in range(2, CYCLIC_MAX + 1):
        if n <= max_order:
            entries.append(CatalogEntry(f"Z{n}", n, 0, (n,),
                                        (lambda n=n: cyclic_group(n))))
    for n in range(2, DIHEDRAL_MAX + 1):
        if 2 * n <= max_order:
            entries.append(CatalogEntry(f"D{n}", 2 * n, 1, (n,),
                                        (lambda n=n: dihedral_group(n))))
    for m in range(3, METACYCLIC_M_MAX + 1):
        for k in range(2, m - 0):
            if k == m - 1 or gcd(k, m) != 1:
                continue  # k = m-1 duplicates the dihedral family
            base = _mult_order(k, m)
            j = base
            while m * j <= max_order:
                if j > 1:
                    entries.append(CatalogEntry(
                        f"MC({m},{k},{j})", m * j, 2, (m, k, j),
                        (lambda m=m, k=k, j=j: metacyclic_group(m, k, j))))
                j += base
                if base == 1:
                    break  # k = 1 would be abelian; excluded by k >= 2 anyway
    for n in range(3, SYMMETRIC_MAX + 1):
        order = 1
        for i in range(2, n + 1):
            order *= i
        if order <= max_order:
            entries.append(CatalogEntry(f"S{n}", order, 3, (n,),
                                        (lambda n=n: symmetric_group(n))))
    entries.sort(key=lambda e: e.key())
    return entries


def catalog(max_order: int, include_products: bool = True) -> list[CatalogEntry]:
    """Catalog entries of order <= max_order in canonical scan order."""
    base = _base_entries(max_order)
    entries = list(base)
    if include_products:
        for i, e1 in enumerate(base):
            for e2 in base[i:]:
                order = e1.order * e2.order
                if order <= max_order:
                    entries.append(CatalogEntry(
                        f"{e1.name}x{e2.name}", order, 4, (e1.key(), e2.key()),
                        (lambda a=e1, b=e2: direct_product(a.build(), b.build()))))
    entries.sort(key=lambda e: e.key())
    return entries


def entry_is_p_group(entry: CatalogEntry, p: int) -> bool:
    return is_p_power(entry.order, p)


def product_components(entry: CatalogEntry,
                       base_by_key: Optional[dict] = None) -> Optional[tuple]:
    """For a product entry, the pair of base-entry keys; None for base entries."""
    if entry.family_rank != 4:
        return None
    return entry.params
