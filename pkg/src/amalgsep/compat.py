"""Compatibility of normal subgroup pairs, quotient amalgams, and family verdicts.

A pair (R, S) of normal subgroups of the factors is compatible when the
identifying isomorphism carries R n H onto S n K; it is p-compatible when
additionally both subgroups connect to their factors by chains of normal
subgroups with index-p steps whose H/K-intersection sets correspond.
Compatible pairs induce an amalgam of the quotient factors together with
a projection; the p-compatibility of the trivial pair is exactly the
residual p-finiteness certificate for an amalgam of finite groups.

Free factors are handled through GenImages kernels: a pair of assignments
is compatible when the induced maps on the amalgamated subgroup's free
basis have equal kernels.
"""

from __future__ import annotations


from dataclasses import dataclass
from typing import Optional, Union

from .amalgam import (
    AmalgamElement,
    AmalgamPresentation,
    Letter,
    build_amalgam,
    normalize,
)
from .errors import (
    InputError,
    NotCompatible,
    NotNormal,
    WrongSide,
)
from .fingrp import (
    FiniteGroup,
    Homomorphism,
    NormalChain,
    Subgroup,
    enumerate_normal_subgroups,
    is_normal,
    is_p_power,
    is_prime,
    product_set,
    subgroup_as_group,
    subgroup_generated,
    trivial_subgroup,
)
from .freegrp import (
    FreeWord,
    GenImages,
    kernels_equal,
    restriction,
)


@dataclass(frozen=True)
class PChainCertificate:
    """Witness for p-compatibility: chains on both sides plus the matched
    correspondence of H/K-intersection sets."""

    chain_a: NormalChain
    chain_b: NormalChain
    matching: tuple[tuple[tuple[int, ...], tuple[int, ...]], ...]


@dataclass(frozen=True)
class CompatiblePair:
    """A compatible pair of normal subgroups (finite factors) or of
    generator-image kernels (free factors)."""

    mode: str                                  # 'plain' | 'p'
    prime: Optional[int]
    r_side: Union[Subgroup, GenImages]
    s_side: Union[Subgroup, GenImages]
    certificate: Optional[PChainCertificate] = None

    def key(self):
        if isinstance(self.r_side, Subgroup):
            return (self.r_side.key(), self.s_side.key())
        return (self.r_side.images, self.s_side.images)


def _check_normal_pair(pres: AmalgamPresentation, R: Subgroup, S: Subgroup) -> None:
    if R.parent is not pres.A or S.parent is not pres.B:
        raise InputError("pair subgroups must live in the presentation factors")
    if not is_normal(pres.A, R):
        raise NotNormal("R is not normal in A")
    if not is_normal(pres.B, S):
        raise NotNormal("S is not normal in B")


def is_compatible(pres: AmalgamPresentation, R: Subgroup, S: Subgroup) -> bool:
    """Whether phi maps R n H onto S n K."""
    _check_normal_pair(pres, R, S)
    image = {pres.phi[x] for x in (R.members & pres.H.members)}
    return image == (S.members & pres.K.members)


def free_pair_compatible(desc: "FreeAmalgamDescription",
                         u: GenImages, v: GenImages) -> bool:
    """Compatibility of kernel pairs for free factors: the maps induced on
    the amalgamated subgroup's free basis must have equal kernels."""
    ru = restriction(u, desc.h_words)
    rv = restriction(v, desc.k_words)
    return kernels_equal(ru, rv)


def _chain_families(G: FiniteGroup, R: Subgroup, H: Subgroup, p: int):
    """All achievable intersection-set families {link n H} over chains
    R = R0 < ... < Rm = G with index-p steps, links normal in G.

    Returns a dict family -> one witness chain (as a tuple of member
    frozensets, ascending), deterministic.
    """
    if not is_p_power(G.order // R.order, p):
        return {}
    normals = [N.members for N in enumerate_normal_subgroups(G)
               if R.members <= N.members]
    top = frozenset(G.elements())
    families: dict[frozenset, tuple] = {}
    seen_states = set()

    def ascend(cur: frozenset, chain: tuple, fam: frozenset) -> None:
        state = (cur, fam)
        if state in seen_states:
            return
        seen_states.add(state)
        if cur == top:
            if fam not in families:
                families[fam] = chain
            return
        want = len(cur) * p
        for N in normals:
            if len(N) == want and cur < N:
                ascend(N, chain + (N,), fam | {frozenset(N & H.members)})

    start_fam = frozenset({frozenset(R.members & H.members)})
    ascend(R.members, (R.members,), start_fam)
    return families


def is_p_compatible(pres: AmalgamPresentation, R: Subgroup, S: Subgroup,
                    p: int) -> Optional[CompatiblePair]:
    """Certificate of p-compatibility, or None.

    Chains are enumerated independently on each side, deduplicated by
    their intersection-set families; the correspondence condition is then
    a matching of subgroup-set families under phi over the cross product.
    """
    if not is_prime(p):
        raise InputError(f"{p} is not prime")
    _check_normal_pair(pres, R, S)
    fams_a = _chain_families(pres.A, R, pres.H, p)
    if not fams_a:
        return None
    fams_b = _chain_families(pres.B, S, pres.K, p)
    if not fams_b:
        return None

    def fam_key(fam):
        return sorted(tuple(sorted(s)) for s in fam)

    for fam_a in sorted(fams_a, key=fam_key):
        phi_fam = frozenset(frozenset(pres.phi[x] for x in s) for s in fam_a)
        if phi_fam in fams_b:
            chain_a = fams_a[fam_a]
            chain_b = fams_b[phi_fam]
            matching = tuple(sorted(
                (tuple(sorted(s)), tuple(sorted(pres.phi[x] for x in s)))
                for s in fam_a))
            cert = PChainCertificate(
                chain_a=NormalChain(pres.A, tuple(Subgroup(pres.A, ms) for ms in chain_a), p),
                chain_b=NormalChain(pres.B, tuple(Subgroup(pres.B, ms) for ms in chain_b), p),
                matching=matching)
            return CompatiblePair("p", p, R, S, cert)
    return None


def enumerate_compatible_pairs(pres: AmalgamPresentation, mode: str = "plain",
                               p: Optional[int] = None) -> list[CompatiblePair]:
    """All compatible pairs over products of normal subgroups, canonical order."""
    if mode not in ("plain", "p"):
        raise InputError(f"unknown mode {mode!r}")
    normals_a = enumerate_normal_subgroups(pres.A)
    normals_b = enumerate_normal_subgroups(pres.B)
    out = []
    for R in normals_a:
        for S in normals_b:
            if mode == "plain":
                if is_compatible(pres, R, S):
                    out.append(CompatiblePair("plain", None, R, S))
            else:
                pair = is_p_compatible(pres, R, S, p)
                if pair is not None:
                    out.append(pair)
    return out


def induced_iso(pres: AmalgamPresentation, R: Subgroup, S: Subgroup,
                proj_a: Homomorphism, proj_b: Homomorphism) -> dict:
    """The map h.R -> (h phi).S on the quotient images of H and K.

    Well-definedness and bijectivity are exactly compatibility of (R, S);
    NotCompatible is raised otherwise.
    """
    mapping: dict[int, int] = {}
    for h in pres.H.members:
        u = proj_a(h)
        v = proj_b(pres.phi[h])
        if u in mapping:
            if mapping[u] != v:
                raise NotCompatible("induced map on H-image is ill defined")
        else:
            mapping[u] = v
    values = set(mapping.values())
    if len(values) != len(mapping):
        raise NotCompatible("induced map on H-image is not injective")
    if values != {proj_b(k) for k in pres.K.members}:
        raise NotCompatible("induced map does not cover the K-image")
    return mapping


@dataclass(frozen=True, eq=False)
class QuotientAmalgam:
    """An amalgam of quotient (or image) factors plus projection data.

    For finite parents the projections are genuine quotient maps; for
    free parents they evaluate generator images. ``pair`` records the
    compatible pair that produced the quotient.
    """

    kind: str                                  # 'finite' | 'free'
    pair: CompatiblePair
    presentation: AmalgamPresentation
    proj_a: Optional[Homomorphism]             # finite kind
    proj_b: Optional[Homomorphism]
    desc: Optional["FreeAmalgamDescription"]   # free kind
    embed_a: Optional[dict]                    # target element -> quotient factor index
    embed_b: Optional[dict]

    def project_letter(self, letter) -> Letter:
        side, payload = letter
        if self.kind == "finite":
            proj = self.proj_a if side == "A" else self.proj_b
            return (side, proj(payload))
        u = self.pair.r_side if side == "A" else self.pair.s_side
        embed = self.embed_a if side == "A" else self.embed_b
        return (side, embed[u.evaluate(payload)])

    def project(self, letters) -> AmalgamElement:
        return normalize(self.presentation, [self.project_letter(l) for l in letters])


def build_quotient_amalgam(pres: AmalgamPresentation,
                           pair: CompatiblePair) -> QuotientAmalgam:
    """Amalgam over A/R and B/S with the induced identification.

    Projecting a letter sequence and normalizing commutes with
    normalizing and then projecting.
    """
    from .fingrp import quotient_with_projection

    R, S = pair.r_side, pair.s_side
    if not is_compatible(pres, R, S):
        raise NotCompatible("pair fails the compatibility equation")
    Qa, proj_a = quotient_with_projection(pres.A, R)
    Qb, proj_b = quotient_with_projection(pres.B, S)
    phi_bar = induced_iso(pres, R, S, proj_a, proj_b)
    Hbar = subgroup_generated(Qa, [proj_a(h) for h in pres.H.members])
    Kbar = subgroup_generated(Qb, [proj_b(k) for k in pres.K.members])
    qpres = build_amalgam(Qa, Qb, Hbar, Kbar, phi_bar)
    return QuotientAmalgam(kind="finite", pair=pair, presentation=qpres,
                           proj_a=proj_a, proj_b=proj_b, desc=None,
                           embed_a=None, embed_b=None)


@dataclass(frozen=True)
class FreeAmalgamDescription:
    """An amalgam of two free groups along finitely generated subgroups.

    ``h_words[i]`` and ``k_words[i]`` are corresponding free bases of the
    amalgamated subgroups (the identification maps one onto the other).
    """

    rank_a: int
    rank_b: int
    gen_names_a: tuple[str, ...]
    gen_names_b: tuple[str, ...]
    h_words: tuple[FreeWord, ...]
    k_words: tuple[FreeWord, ...]

    def __post_init__(self):
        if len(self.h_words) != len(self.k_words):
            raise InputError("amalgamated bases must have equal length")
        if len(self.gen_names_a) != self.rank_a or len(self.gen_names_b) != self.rank_b:
            raise InputError("generator name lists must match ranks")


def _image_group(images: GenImages) -> tuple[FiniteGroup, dict]:
    """The subgroup generated by the images, re-indexed as a table group."""
    T = images.target
    members = sorted(images.image_members())
    sub = Subgroup(T, frozenset(members))
    grp, member_list = subgroup_as_group(T, sub)
    embed = {x: i for i, x in enumerate(member_list)}
    return grp, embed


def build_free_quotient_amalgam(desc: FreeAmalgamDescription, u: GenImages,
                                v: GenImages) -> QuotientAmalgam:
    """Quotient amalgam for free factors: image groups glued along the
    images of the amalgamated subgroups."""
    if u.rank != desc.rank_a or v.rank != desc.rank_b:
        raise InputError("generator images do not match the description ranks")
    if not free_pair_compatible(desc, u, v):
        raise NotCompatible("restriction kernels differ")
    Qa, embed_a = _image_group(u)
    Qb, embed_b = _image_group(v)
    # Closure of the generator correspondence gives the induced iso graph.
    Tu, Tv = u.target, v.target
    gen_pairs = [(u.evaluate(w), v.evaluate(wk))
                 for w, wk in zip(desc.h_words, desc.k_words)]
    gen_pairs += [(Tu.inverse[a], Tv.inverse[b]) for a, b in gen_pairs]
    seen = {(0, 0)}
    frontier = [(0, 0)]
    while frontier:
        a, b = frontier.pop()
        for ga, gb in gen_pairs:
            pr = (Tu.table[a][ga], Tv.table[b][gb])
            if pr not in seen:
                seen.add(pr)
                frontier.append(pr)
    phi_bar: dict[int, int] = {}
    for a, b in seen:
        qa, qb = embed_a[a], embed_b[b]
        if qa in phi_bar and phi_bar[qa] != qb:
            raise NotCompatible("induced identification is ill defined")
        phi_bar[qa] = qb
    Hbar = subgroup_generated(Qa, sorted(phi_bar.keys()))
    Kbar = subgroup_generated(Qb, sorted(phi_bar.values()))
    qpres = build_amalgam(Qa, Qb, Hbar, Kbar, phi_bar)
    pair = CompatiblePair("plain", None, u, v)
    return QuotientAmalgam(kind="free", pair=pair, presentation=qpres,
                           proj_a=None, proj_b=None, desc=desc,
                           embed_a=embed_a, embed_b=embed_b)


def presentation_residually_p(pres: AmalgamPresentation, p: int) -> bool:
    """Residual p-finiteness certificate for an amalgam of finite groups:
    the trivial pair must be p-compatible."""
    return is_p_compatible(pres, trivial_subgroup(pres.A),
                           trivial_subgroup(pres.B), p) is not None


def is_residually_p(qa: QuotientAmalgam, p: int) -> bool:
    return presentation_residually_p(qa.presentation, p)


def enumerate_free_compatible_classes(desc: FreeAmalgamDescription, bound: int,
                                      p: Optional[int] = None) -> list[tuple]:
    """Representatives of compatible generator-image pairs over the catalog,
    one per kernel class of the amalgamated-subgroup restriction.

    Assignments on each side are bucketed by a canonical fingerprint of
    their restriction kernel; classes present on both sides are exactly
    the compatible ones. In p-mode both kernels must have p-power index
    and the induced quotient amalgam must carry a residual-p certificate.
    Returns (key, name_a, u, name_b, v) tuples in canonical order.
    """
    import itertools

    from .catalog import catalog, entry_is_p_group
    from .freegrp import kernel_key

    rec: dict[tuple, list] = {}

    def scan(side_idx: int, rank: int, words) -> None:
        for entry in catalog(bound):
            if p is not None and not entry_is_p_group(entry, p):
                continue
            T = entry.build()
            for images in itertools.product(range(T.order), repeat=rank):
                u = GenImages(rank, T, images)
                if p is not None and not is_p_power(u.index(), p):
                    continue
                key = kernel_key(restriction(u, words))
                slot = rec.setdefault(key, [None, None])
                if slot[side_idx] is None:
                    slot[side_idx] = (entry.name, u)

    scan(0, desc.rank_a, desc.h_words)
    scan(1, desc.rank_b, desc.k_words)
    out = []
    for key in sorted(rec, key=repr):
        slot = rec[key]
        if slot[0] is None or slot[1] is None:
            continue
        (name_a, u), (name_b, v) = slot
        if p is not None:
            qa = build_free_quotient_amalgam(desc, u, v)
            if not presentation_residually_p(qa.presentation, p):
                continue
        out.append((key, name_a, u, name_b, v))
    return out


@dataclass(frozen=True)
class FamilyVerdict:
    """Separability of a cyclic subgroup by one side's compatible family."""

    subject: str
    family: str                     # 'Omega_A' | 'Omega_B' | 'Omega_A^p' | 'Omega_B^p'
    verdict: str                    # 'separable' | 'not_separated' | 'inconclusive'
    witnesses: Optional[dict] = None
    certifying: Optional[object] = None
    bound: Optional[int] = None
    structural_note: Optional[str] = None


def family_separability(pres: AmalgamPresentation, side: str, g: int,
                        mode: str = "plain", p: Optional[int] = None) -> FamilyVerdict:
    """Exact family-separability verdict for finite factors.

    Intersects <g>R over the side's projections of all compatible pairs;
    on success reports one separating family member per excluded element.
    """
    if side not in ("A", "B"):
        raise WrongSide(f"side must be 'A' or 'B', got {side!r}")
    factor = pres.factor(side)
    if not (0 <= g < factor.order):
        raise WrongSide(f"element {g} does not lie in factor {side}")
    pairs = enumerate_compatible_pairs(pres, mode, p)
    fam_name = f"Omega_{side}" + ("^p" if mode == "p" else "")
    members = []
    seen = set()
    for pair in pairs:
        Rside = pair.r_side if side == "A" else pair.s_side
        if Rside.members not in seen:
            seen.add(Rside.members)
            members.append(Rside)
    cyc = subgroup_generated(factor, [g])
    subject = f"<{factor.names[g]}>"
    witnesses = {}
    for x in factor.elements():
        if x in cyc.members:
            continue
        hit = None
        for R in members:
            if x not in product_set(factor, cyc.members, R.members):
                hit = R
                break
        if hit is None:
            return FamilyVerdict(subject, fam_name, "not_separated",
                                 certifying=x, bound=None)
        witnesses[x] = hit
    return FamilyVerdict(subject, fam_name, "separable", witnesses=witnesses)


def free_family_separability(desc: FreeAmalgamDescription, side: str,
                             g_word: FreeWord, mode: str = "plain",
                             p: Optional[int] = None, bound: int = 24,
                             structural_note: Optional[str] = None) -> FamilyVerdict:
    """Catalog-bounded family verdict for a cyclic subgroup of a free factor.

    Candidate excluded elements are the intermediate powers of the
    primitive root of g together with the free generators (each checked
    against the folded graph of <g>). A not_separated verdict certifies
    its element only up to the reported bound unless a structural note
    upgrades it; a separable verdict likewise quantifies only over the
    candidate set and the family members found.
    """
    from .freegrp import (fold_subgroup, format_word, graph_member,
                          primitive_root, word_inv, word_pow)

    if side not in ("A", "B"):
        raise WrongSide(f"side must be 'A' or 'B', got {side!r}")
    rank = desc.rank_a if side == "A" else desc.rank_b
    names = desc.gen_names_a if side == "A" else desc.gen_names_b
    for gen, _ in g_word:
        if gen >= rank:
            raise WrongSide(f"generator index {gen} outside factor {side}")
    fam_name = f"Omega_{side}" + ("^p" if mode == "p" else "")
    subject = f"<{format_word(g_word, names)}>"

    graph = fold_subgroup([g_word], rank)
    root, mult = primitive_root(g_word)
    candidates: list[FreeWord] = []
    for j in range(1, mult):
        candidates.append(word_pow(root, j))
    for i in range(rank):
        candidates.append(((i, 1),))
        candidates.append(((i, -1),))
    candidates = [x for x in candidates if x and not graph_member(graph, x)]

    classes = enumerate_free_compatible_classes(desc, bound,
                                                p if mode == "p" else None)
    members = [(na if side == "A" else nb, u if side == "A" else v)
               for _, na, u, nb, v in classes]
    if not members:
        return FamilyVerdict(subject, fam_name, "inconclusive", bound=bound,
                             structural_note=structural_note)

    witnesses = {}
    for x in candidates:
        hit = None
        for name, u in members:
            gu = u.evaluate(g_word)
            image_cyc = subgroup_generated(u.target, [gu])
            if u.evaluate(x) not in image_cyc.members:
                hit = (name, u.images)
                break
        if hit is None:
            return FamilyVerdict(subject, fam_name, "not_separated",
                                 certifying=format_word(x, names), bound=bound,
                                 structural_note=structural_note)
        witnesses[format_word(x, names)] = hit
    return FamilyVerdict(subject, fam_name, "separable", witnesses=witnesses,
                         bound=bound, structural_note=structural_note)
