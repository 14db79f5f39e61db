import logging
from dataclasses import dataclass
from typing import Dict, Hashable, List, Sequence, Tuple

import numpy as np
from sympy.combinatorics import Permutation, PermutationGroup

from src.common.config import PERM_DOMAIN_BOUND
from src.common.errors import TooLarge
from src.common.ring_matrix import apply_to_vectors, dtype_for

log = logging.getLogger(__name__)

# Faithful permutation representations of matrix groups: the action on the union of
# orbits of e_1..e_m and e_1+...+e_m (as vectors, or as points modulo the central
# scalars of quotient families). A matrix fixing all of these is central.


def _row_keys(P: np.ndarray) -> List[Hashable]:
    flat = P.reshape(P.shape[0], -1)
    if flat.dtype == object:
        return [tuple(int(v) for v in row) for row in flat]
    flat = np.ascontiguousarray(flat)
    return [row.tobytes() for row in flat]


def seed_points(ctx) -> np.ndarray:
    m, r = ctx.size, ctx.ring.r
    seeds = np.zeros((m + 1, m, r), dtype=dtype_for(ctx.ring, m))
    for i in range(m):
        seeds[i, i, 0] = 1
        seeds[m, i, 0] = 1
    return ctx.canon_points(seeds)


def orbit_domain(ctx, gens: Sequence[np.ndarray], bound: int = PERM_DOMAIN_BOUND) -> Tuple[np.ndarray, Dict[Hashable, int]]:
    pts = seed_points(ctx)
    index: Dict[Hashable, int] = {}
    chunks = []
    fresh = []
    for k, row in zip(_row_keys(pts), pts):
        if k not in index:
            index[k] = len(index)
            fresh.append(row)
    frontier = np.array(fresh)
    chunks.append(frontier)
    while len(frontier):
        new_rows = []
        for g in gens:
            imgs = ctx.canon_points(apply_to_vectors(ctx.ring, g, frontier))
            for k, row in zip(_row_keys(imgs), imgs):
                if k not in index:
                    index[k] = len(index)
                    new_rows.append(row)
        if len(index) > bound:
            raise TooLarge(f"permutation domain exceeds {bound} points")
        frontier = np.array(new_rows) if new_rows else np.zeros((0,) + pts.shape[1:], dtype=pts.dtype)
        if len(frontier):
            chunks.append(frontier)
    domain = np.concatenate(chunks, axis=0)
    return domain, index


def to_permutation(ctx, g: np.ndarray, domain: np.ndarray, index: Dict[Hashable, int]) -> Permutation:
    imgs = ctx.canon_points(apply_to_vectors(ctx.ring, g, domain))
    return Permutation([index[k] for k in _row_keys(imgs)])


@dataclass
class PermAction:
    group: PermutationGroup
    perms: List[Permutation]
    extra: List[Permutation]
    degree: int


def permutation_group(ctx, gens: Sequence[np.ndarray], extra: Sequence[np.ndarray] = ()) -> PermAction:
    """Permutation group of gens on a domain closed under gens and extra."""
    domain, index = orbit_domain(ctx, list(gens) + list(extra))
    n = len(domain)
    perms = [to_permutation(ctx, g, domain, index) for g in gens]
    others = [to_permutation(ctx, g, domain, index) for g in extra]
    group = PermutationGroup(perms if perms else [Permutation(list(range(n)))])
    log.debug("permutation action of degree %d for %d generators", n, len(perms))
    return PermAction(group=group, perms=perms, extra=others, degree=n)


def subgroup_of(action: PermAction, perms: Sequence[Permutation]) -> PermutationGroup:
    if not perms:
        return PermutationGroup([Permutation(list(range(action.degree)))])
    return PermutationGroup(list(perms))


def contains_all(group: PermutationGroup, perms: Sequence[Permutation]) -> bool:
    return all(group.contains(g) for g in perms)
