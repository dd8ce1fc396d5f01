"""Interval-valued valuations.

Assignments of spectrum subsets to stages: the true-subobject of the
spectral presheaf arising from a state, interval assignments induced by
sieve-valued valuations, global elements of the coarse-graining presheaf,
probability-threshold projector families with their subobject and semantic
checks, and ideal-induced valuations from a vector.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .coarse import LatticeElement, coarse_grain, lattice
from .contexts import Context, ContextPoset
from .linalg import DensityMatrix, ValidationError, get_eps
from .scalars import QSqrt2
from .valuations import ValuationTable, principal_sieve, stage_weights


@dataclass(frozen=True)
class IntervalAssignment:
    """Per-stage subsets of the spectrum, stored as atom-index sets."""

    sets: dict  # context id -> frozenset[int]

    def to_json(self) -> dict:
        return {cid: sorted(s) for cid, s in sorted(self.sets.items())}


@dataclass(frozen=True)
class ProjectorFamily:
    """Per-stage subsets of the projector lattice, stored as bitmask sets."""

    masks: dict  # context id -> frozenset[int]

    def to_json(self) -> dict:
        return {cid: sorted(s) for cid, s in sorted(self.masks.items())}


@dataclass(frozen=True)
class CoarseGlobalElement:
    """One lattice element per stage, compatible with coarse-graining."""

    choices: dict  # context id -> mask

    def element(self, cid: str) -> LatticeElement:
        return LatticeElement(cid, self.choices[cid])

    def to_json(self) -> dict:
        return dict(sorted(self.choices.items()))


# ---------------------------------------------------------------------------
# true-sets and supports
# ---------------------------------------------------------------------------


def true_set(table: ValuationTable, cid: str):
    """Lattice elements valued at the principal sieve at the given stage."""
    poset = table.poset
    true_v = principal_sieve(poset, cid)
    return {e for e in lattice(poset.contexts[cid]) if table.sieve(e) == true_v}


def support(rho: DensityMatrix, v: Context) -> LatticeElement:
    """The least projector in the context's lattice with full Born weight:
    the sum of atoms carrying positive weight."""
    mask = 0
    for i, atom in enumerate(v.atoms):
        w = (rho.matrix @ atom.matrix).real_trace()
        positive = (w > 0) if isinstance(w, QSqrt2) else float(w) > get_eps()
        if positive:
            mask |= 1 << i
    return LatticeElement(v.id, mask)


def true_subobject(rho: DensityMatrix, poset: ContextPoset) -> IntervalAssignment:
    """Per stage, the functionals dominated by the support; never empty."""
    sets = {}
    for cid in poset.ids():
        v = poset.contexts[cid]
        q = support(rho, v)
        sets[cid] = frozenset(i for i in range(v.n_atoms) if q.mask >> i & 1)
    return IntervalAssignment(sets)


def interval_from_valuation(table: ValuationTable, poset: ContextPoset) -> IntervalAssignment:
    """Functionals dominated by the infimum of the stage's true-set; empty
    where that infimum is the zero projector."""
    sets = {}
    for cid in poset.ids():
        v = poset.contexts[cid]
        ts = true_set(table, cid)
        inf_mask = (1 << v.n_atoms) - 1
        for e in ts:
            inf_mask &= e.mask
        if not ts:
            inf_mask = 0
        sets[cid] = frozenset(i for i in range(v.n_atoms) if inf_mask >> i & 1)
    return IntervalAssignment(sets)


# ---------------------------------------------------------------------------
# subobject checks on the spectral presheaf
# ---------------------------------------------------------------------------


def check_spectral_subobject(assignment: IntervalAssignment, poset: ContextPoset) -> dict:
    """Per morphism, whether the restricted stage-set lands inside (weak) or
    exactly onto (strong) the lower stage-set. The overall subobject verdict
    is the weak condition everywhere."""
    morphisms = []
    weak_ok = True
    for sub, sup in poset.proper_pairs():
        rmap = poset.restriction[(sub, sup)]
        image = frozenset(rmap[i] for i in assignment.sets[sup])
        target = assignment.sets[sub]
        weak = image <= target
        strong = image == target
        weak_ok = weak_ok and weak
        morphisms.append(
            {"morphism": [sub, sup], "weak": weak, "strong": strong,
             "image": sorted(image), "target": sorted(target)}
        )
    return {"ok": weak_ok, "morphisms": morphisms}


def operator_interval(assignment: IntervalAssignment, a, v: Context):
    """The set of spectral values an operator takes on the assigned functionals."""
    values = v.atom_coefficients(a)
    return {float(values[i]) for i in assignment.sets[v.id]}


# ---------------------------------------------------------------------------
# global elements of the coarse-graining presheaf
# ---------------------------------------------------------------------------


def global_element_from_valuation(table: ValuationTable, poset: ContextPoset):
    """Per-stage infima of true-sets, validated against the matching law.

    Returns (CoarseGlobalElement, report) on success and (None, report) with
    the first violating morphism otherwise.
    """
    choices = {}
    for cid in poset.ids():
        v = poset.contexts[cid]
        ts = true_set(table, cid)
        inf_mask = (1 << v.n_atoms) - 1
        for e in ts:
            inf_mask &= e.mask
        if not ts:
            inf_mask = 0
        choices[cid] = inf_mask
    for sub, sup in poset.proper_pairs():
        expected = coarse_grain(poset, LatticeElement(sup, choices[sup]), sub).mask
        if choices[sub] != expected:
            return None, {
                "ok": False,
                "violating_morphism": [sub, sup],
                "infimum_above": choices[sup],
                "infimum_below": choices[sub],
                "coarse_grained_above": expected,
            }
    return CoarseGlobalElement(choices), {"ok": True, "violating_morphism": None}


def interval_from_global_element(gamma: CoarseGlobalElement, poset: ContextPoset) -> IntervalAssignment:
    """The spectrum subsets picked out by a global element's projectors."""
    sets = {}
    for cid, mask in gamma.choices.items():
        v = poset.contexts[cid]
        sets[cid] = frozenset(i for i in range(v.n_atoms) if mask >> i & 1)
    return IntervalAssignment(sets)


# ---------------------------------------------------------------------------
# probability-threshold projector families
# ---------------------------------------------------------------------------


def probability_family(rho: DensityMatrix, r, poset: ContextPoset) -> ProjectorFamily:
    """Per stage, the lattice elements with Born weight at least r."""
    if not 0 < float(r) <= 1:
        raise ValidationError("threshold r must lie in (0, 1]")
    from .valuations import _at_least, _mask_weight

    weights = stage_weights(rho, poset)
    masks = {}
    for cid in poset.ids():
        v = poset.contexts[cid]
        w = weights[cid]
        keep = set()
        for mask in range(1 << v.n_atoms):
            if _at_least(_mask_weight(w, mask), r, poset.backend):
                keep.add(mask)
        masks[cid] = frozenset(keep)
    return ProjectorFamily(masks)


def check_coarse_subobject(family: ProjectorFamily, poset: ContextPoset) -> dict:
    """Image containment (the subobject condition) per morphism, and
    separately whether the image equals the lower stage's set."""
    morphisms = []
    containment_ok = True
    equality_ok = True
    for sub, sup in poset.proper_pairs():
        image = frozenset(
            coarse_grain(poset, LatticeElement(sup, m), sub).mask for m in family.masks[sup]
        )
        target = family.masks[sub]
        containment = image <= target
        equality = image == target
        containment_ok = containment_ok and containment
        equality_ok = equality_ok and equality
        morphisms.append(
            {"morphism": [sub, sup], "containment": containment, "equality": equality}
        )
    return {"ok": containment_ok, "equality": equality_ok, "morphisms": morphisms}


def check_semantic_subobject(family: ProjectorFamily, poset: ContextPoset,
                             require_exclusivity: bool = True) -> dict:
    """The four semantic-subobject properties: image containment, no null
    element, upper-set, and (optionally) no disjoint pair."""
    report = {}
    sub_report = check_coarse_subobject(family, poset)
    report["functional_composition"] = {
        "ok": sub_report["ok"],
        "counterexample": None if sub_report["ok"] else next(
            m["morphism"] for m in sub_report["morphisms"] if not m["containment"]
        ),
    }
    null_ok = all(0 not in family.masks[cid] for cid in poset.ids())
    report["null_proposition"] = {
        "ok": null_ok,
        "counterexample": None if null_ok else next(
            cid for cid in poset.ids() if 0 in family.masks[cid]
        ),
    }
    upper = {"ok": True, "counterexample": None}
    for cid in poset.ids():
        v = poset.contexts[cid]
        full = (1 << v.n_atoms) - 1
        for m in family.masks[cid]:
            for q in range(full + 1):
                if m & q == m and q not in family.masks[cid]:
                    upper = {"ok": False, "counterexample": {"stage": cid, "p": m, "q": q}}
                    break
            if not upper["ok"]:
                break
        if not upper["ok"]:
            break
    report["monotonicity"] = upper
    excl = {"ok": True, "counterexample": None, "checked": require_exclusivity}
    if require_exclusivity:
        for cid in poset.ids():
            ms = sorted(family.masks[cid])
            for i, p in enumerate(ms):
                for q in ms[i + 1 :]:
                    if p and q and p & q == 0:
                        excl = {"ok": False, "checked": True,
                                "counterexample": {"stage": cid, "p": p, "q": q}}
                        break
                if not excl["ok"]:
                    break
            if not excl["ok"]:
                break
    report["exclusivity"] = excl
    report["ok"] = all(
        report[k]["ok"]
        for k in ("functional_composition", "null_proposition", "monotonicity", "exclusivity")
    )
    return report


# ---------------------------------------------------------------------------
# ideal-induced valuations
# ---------------------------------------------------------------------------


def ideal_valuation(psi, poset: ContextPoset) -> IntervalAssignment:
    """Interval assignment from the annihilator ideal of a unit vector.

    Per stage, the largest projector annihilating the vector is the sum of
    the annihilating atoms; the assigned functionals are the rest.
    """
    if poset.backend == "float":
        v = np.array(psi, dtype=complex)
        n = float(np.vdot(v, v).real)
        if n <= get_eps():
            raise ValidationError("zero vector")
        if abs(n - 1.0) > 1e-6:
            raise ValidationError("vector is not normalized")
        sets = {}
        for cid in poset.ids():
            ctx = poset.contexts[cid]
            keep = set()
            for i, atom in enumerate(ctx.atoms):
                if np.linalg.norm(atom.matrix.data @ v) > np.sqrt(get_eps()):
                    keep.add(i)
            sets[cid] = frozenset(keep)
        return IntervalAssignment(sets)
    from .scalars import EC_ZERO, exact_entry

    vec = [exact_entry(x) for x in psi]
    norm = sum((x.conj() * x for x in vec), EC_ZERO)
    if norm.is_zero():
        raise ValidationError("zero vector")
    if not (norm.re == 1 and norm.im.is_zero()):
        raise ValidationError("vector is not normalized")
    sets = {}
    for cid in poset.ids():
        ctx = poset.contexts[cid]
        keep = set()
        for i, atom in enumerate(ctx.atoms):
            image = [
                sum((atom.matrix.data[r][c] * vec[c] for c in range(ctx.dim)), EC_ZERO)
                for r in range(ctx.dim)
            ]
            if any(not x.is_zero() for x in image):
                keep.add(i)
        sets[cid] = frozenset(keep)
    return IntervalAssignment(sets)


def largest_annihilating_mask(psi, v: Context) -> int:
    """Bitmask of atoms annihilating the vector (the ideal's top projector)."""
    if v.backend == "float":
        vec = np.array(psi, dtype=complex)
        mask = 0
        for i, atom in enumerate(v.atoms):
            if np.linalg.norm(atom.matrix.data @ vec) <= np.sqrt(get_eps()):
                mask |= 1 << i
        return mask
    from .scalars import EC_ZERO, exact_entry

    vec = [exact_entry(x) for x in psi]
    mask = 0
    for i, atom in enumerate(v.atoms):
        image = [
            sum((atom.matrix.data[r][c] * vec[c] for c in range(v.dim)), EC_ZERO)
            for r in range(v.dim)
        ]
        if all(x.is_zero() for x in image):
            mask |= 1 << i
    return mask
