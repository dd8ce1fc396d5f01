"""Projector lattices and the coarse-graining presheaf.

The lattice of a context is the Boolean algebra of atom subsets, stored as
bitmasks. Coarse-graining moves a projector down to a smaller context as the
least dominating element there; the closed form (sum of non-orthogonal
atoms) is used in production with the brute-force infimum kept as an oracle.
"""

from __future__ import annotations

from dataclasses import dataclass

from .contexts import Context, ContextPoset, SpectralFunctional
from .linalg import HermitianOperator, Projector, ValidationError

LATTICE_ATOM_BOUND = 20


@dataclass(frozen=True)
class LatticeElement:
    """A projector in a context's lattice: the bitmask of its atoms."""

    context_id: str
    mask: int

    def leq(self, other: "LatticeElement") -> bool:
        if self.context_id != other.context_id:
            raise ValidationError("lattice elements live in different contexts")
        return self.mask & other.mask == self.mask

    def meet(self, other: "LatticeElement") -> "LatticeElement":
        return LatticeElement(self.context_id, self.mask & other.mask)

    def join(self, other: "LatticeElement") -> "LatticeElement":
        return LatticeElement(self.context_id, self.mask | other.mask)


def element_projector(elem: LatticeElement, v: Context) -> Projector:
    """The concrete projector represented by a lattice element."""
    if v.id != elem.context_id:
        raise ValidationError("element does not belong to this context")
    m = None
    for i, atom in enumerate(v.atoms):
        if elem.mask >> i & 1:
            m = atom.matrix if m is None else m + atom.matrix
    if m is None:
        return Projector.zero(v.dim, v.backend)
    return Projector(m, validate=False)


def lattice(v: Context):
    """All 2^k lattice elements of a context, bottom first, top last."""
    if v.n_atoms > LATTICE_ATOM_BOUND:
        raise ValidationError(
            f"context has {v.n_atoms} atoms; lattice materialization is capped at "
            f"{LATTICE_ATOM_BOUND}"
        )
    return [LatticeElement(v.id, m) for m in range(1 << v.n_atoms)]


def top(v: Context) -> LatticeElement:
    return LatticeElement(v.id, (1 << v.n_atoms) - 1)


def bottom(v: Context) -> LatticeElement:
    return LatticeElement(v.id, 0)


def coarse_grain(poset: ContextPoset, elem: LatticeElement, target_id: str) -> LatticeElement:
    """Least element of the target lattice dominating the given projector.

    Closed form: the target atoms not orthogonal to the projector are exactly
    the images of its atoms under the restriction map.
    """
    src = elem.context_id
    if not poset.is_leq(target_id, src):
        raise ValidationError("target is not a subalgebra of the element's context")
    rmap = poset.restriction[(target_id, src)]
    out = 0
    m = elem.mask
    i = 0
    while m:
        if m & 1:
            out |= 1 << rmap[i]
        m >>= 1
        i += 1
    return LatticeElement(target_id, out)


def coarse_grain_bruteforce(poset: ContextPoset, elem: LatticeElement, target_id: str) -> LatticeElement:
    """Oracle: infimum over the target lattice using only the matrix order."""
    src_ctx = poset.contexts[elem.context_id]
    tgt_ctx = poset.contexts[target_id]
    if not poset.is_leq(target_id, elem.context_id):
        raise ValidationError("target is not a subalgebra of the element's context")
    p = element_projector(elem, src_ctx)
    dominating = []
    for mask in range(1 << tgt_ctx.n_atoms):
        q = element_projector(LatticeElement(target_id, mask), tgt_ctx)
        if p.leq(q):
            dominating.append(mask)
    inf_mask = (1 << tgt_ctx.n_atoms) - 1
    for mask in dominating:
        inf_mask &= mask
    if inf_mask not in dominating:
        raise AssertionError("infimum of dominating elements does not dominate")
    return LatticeElement(target_id, inf_mask)


def coarse_functoriality_check(poset: ContextPoset) -> dict:
    """Two-step coarse-graining equals one-step, on every chain and element."""
    chains = 0
    for v3, v2 in poset.proper_pairs():
        for v2b, v1 in poset.proper_pairs():
            if v2b != v2:
                continue
            chains += 1
            ctx1 = poset.contexts[v1]
            for elem in lattice(ctx1):
                direct = coarse_grain(poset, elem, v3)
                stepped = coarse_grain(poset, coarse_grain(poset, elem, v2), v3)
                if direct != stepped:
                    return {
                        "ok": False,
                        "chains_checked": chains,
                        "counterexample": {
                            "chain": [v3, v2, v1],
                            "mask": elem.mask,
                            "direct": direct.mask,
                            "stepped": stepped.mask,
                        },
                    }
    return {"ok": True, "chains_checked": chains, "counterexample": None}


# ---------------------------------------------------------------------------
# augmented propositions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AugmentedProposition:
    """All (operator, eigenvalue subset) pairs witnessing one lattice element."""

    context_id: str
    element: LatticeElement
    witnesses: tuple  # of (HermitianOperator, tuple of eigenvalues)


def canonical_probe(v: Context) -> HermitianOperator:
    """The operator with a distinct integer eigenvalue on each atom."""
    m = None
    for i, atom in enumerate(v.atoms):
        term = atom.matrix.scale(i + 1)
        m = term if m is None else m + term
    return m


def augment(elem: LatticeElement, v: Context, probe_ops=()) -> AugmentedProposition:
    """Collect (A, Delta) witnesses with the spectral projector of A on Delta
    equal to the element. The canonical probe is always included."""
    ops = list(probe_ops) + [canonical_probe(v)]
    witnesses = []
    for a in ops:
        if not v.contains_operator(a):
            raise ValidationError("probe operator is not in the context's algebra")
        values = v.atom_coefficients(a)
        distinct = sorted(set(float(x) for x in values))
        # an eigenvalue may enter Delta only if all of its atoms are in the mask
        delta = []
        covered = 0
        for lam in distinct:
            idxs = [i for i, x in enumerate(values) if abs(float(x) - lam) <= 1e-9]
            if all(elem.mask >> i & 1 for i in idxs):
                delta.append(lam)
                for i in idxs:
                    covered |= 1 << i
        if covered == elem.mask:
            witnesses.append((a, tuple(delta)))
    return AugmentedProposition(v.id, elem, tuple(witnesses))


# ---------------------------------------------------------------------------
# clopen subsets of the spectrum
# ---------------------------------------------------------------------------


def clopen_of(elem: LatticeElement, v: Context):
    """The functionals valuing the element at 1: exactly its masked atoms."""
    return frozenset(
        SpectralFunctional(v.id, i) for i in range(v.n_atoms) if elem.mask >> i & 1
    )


def _restriction_image_action(poset: ContextPoset, elem: LatticeElement, target_id: str):
    """Action on clopen sets via images of restricted functionals."""
    rmap = poset.restriction[(target_id, elem.context_id)]
    return frozenset(
        SpectralFunctional(target_id, rmap[i])
        for i in range(poset.contexts[elem.context_id].n_atoms)
        if elem.mask >> i & 1
    )


def clopen_iso_check(poset: ContextPoset, action=None) -> dict:
    """Verify the stagewise bijection between lattice elements and clopen
    sets, and that the clopen-set morphism action commutes with
    coarse-graining. A different ``action`` may be injected to demonstrate
    failure detection."""
    if action is None:
        action = _restriction_image_action
    stages = 0
    morphisms = 0
    for cid in poset.ids():
        v = poset.contexts[cid]
        stages += 1
        seen = set()
        for elem in lattice(v):
            s = clopen_of(elem, v)
            if s in seen:
                return {"ok": False, "counterexample": {"stage": cid, "mask": elem.mask,
                                                        "reason": "clopen map not injective"}}
            seen.add(s)
    for sub, sup in poset.proper_pairs():
        morphisms += 1
        for elem in lattice(poset.contexts[sup]):
            via_coarse = clopen_of(coarse_grain(poset, elem, sub), poset.contexts[sub])
            via_action = action(poset, elem, sub)
            if via_coarse != via_action:
                return {
                    "ok": False,
                    "counterexample": {
                        "morphism": [sub, sup],
                        "mask": elem.mask,
                        "coarse_route": sorted(f.index for f in via_coarse),
                        "action_route": sorted(f.index for f in via_action),
                    },
                }
    return {"ok": True, "stages_checked": stages, "morphisms_checked": morphisms,
            "counterexample": None}
