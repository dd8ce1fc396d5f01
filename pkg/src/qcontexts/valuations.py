"""Sieves, the subobject classifier on the context poset, and sieve-valued
generalized valuations derived from quantum states.

A sieve at a stage is a lower set of contexts below that stage. A valuation
table assigns a sieve to every lattice element of every stage; the table
built from a state puts a context into the sieve of a projector whenever the
coarse-grained projector carries Born weight 1 (or at least r).
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .coarse import LatticeElement, coarse_grain, lattice, top
from .contexts import ContextPoset
from .linalg import DensityMatrix, ValidationError, born_probability, get_eps
from .scalars import QSqrt2


@dataclass(frozen=True)
class Sieve:
    """A lower set of contexts at and below a stage."""

    stage: str
    members: frozenset

    @classmethod
    def build(cls, stage: str, members, poset: ContextPoset) -> "Sieve":
        members = frozenset(members)
        below = set(poset.below(stage))
        for m in members:
            if m not in below:
                raise ValidationError(f"sieve member {m} is not below stage {stage}")
            for w in poset.below(m):
                if w not in members:
                    raise ValidationError("sieve is not a lower set")
        return cls(stage, members)

    def leq(self, other: "Sieve") -> bool:
        if self.stage != other.stage:
            raise ValidationError("sieves at different stages are incomparable")
        return self.members <= other.members


def principal_sieve(poset: ContextPoset, stage: str) -> Sieve:
    """The maximal truth value at a stage: every context below it."""
    return Sieve(stage, frozenset(poset.below(stage)))


def empty_sieve(stage: str) -> Sieve:
    return Sieve(stage, frozenset())


def pullback(poset: ContextPoset, sieve: Sieve, target: str) -> Sieve:
    """Restrict a sieve to a smaller stage: intersect with its down-set."""
    if not poset.is_leq(target, sieve.stage):
        raise ValidationError("pullback target is not below the sieve's stage")
    return Sieve(target, sieve.members & set(poset.below(target)))


# ---------------------------------------------------------------------------
# state-derived valuations
# ---------------------------------------------------------------------------


def stage_weights(rho: DensityMatrix, poset: ContextPoset) -> dict:
    """Per-stage tuple of atom Born weights; masses of lattice elements are
    sums over masked atoms."""
    out = {}
    for cid in poset.ids():
        v = poset.contexts[cid]
        out[cid] = tuple(born_probability(rho, a) for a in v.atoms)
    return out


def _mask_weight(weights, mask: int):
    total = 0
    i = 0
    while mask:
        if mask & 1:
            total = weights[i] + total
        mask >>= 1
        i += 1
    return total


def _at_least(value, r, backend: str) -> bool:
    if backend == "exact":
        rq = r if isinstance(r, (QSqrt2,)) else QSqrt2(Fraction(r) if not isinstance(r, float)
                                                       else Fraction(r).limit_denominator(10**9))
        v = value if isinstance(value, QSqrt2) else QSqrt2(value)
        return v >= rq
    return float(value) >= float(r) - get_eps()


def state_valuation(rho: DensityMatrix, elem: LatticeElement, poset: ContextPoset,
                    r=1) -> Sieve:
    """Sieve of contexts where the coarse-grained element has weight >= r.

    With r = 1 this is the probability-one valuation; the lower-set property
    follows from monotonicity of Born weight under coarse-graining.
    """
    if not 0 < float(r) <= 1:
        raise ValidationError("threshold r must lie in (0, 1]")
    weights = stage_weights(rho, poset)
    return _valuation_sieve(weights, elem, poset, r)


def _valuation_sieve(weights, elem: LatticeElement, poset: ContextPoset, r) -> Sieve:
    members = set()
    for cid in poset.below(elem.context_id):
        coarse = coarse_grain(poset, elem, cid)
        if _at_least(_mask_weight(weights[cid], coarse.mask), r, poset.backend):
            members.add(cid)
    return Sieve.build(elem.context_id, members, poset)


class ValuationTable:
    """A total assignment of sieves to every lattice element of every stage."""

    __slots__ = ("poset", "maps", "r")

    def __init__(self, poset: ContextPoset, maps: dict, r=None):
        self.poset = poset
        self.maps = maps
        self.r = r
        for cid in poset.ids():
            stage_map = maps.get(cid)
            if stage_map is None:
                raise ValidationError(f"valuation table is missing stage {cid}")
            n = poset.contexts[cid].n_atoms
            for mask in range(1 << n):
                s = stage_map.get(mask)
                if s is None:
                    raise ValidationError(f"table not total at stage {cid}")
                if s.stage != cid:
                    raise ValidationError("sieve stored under the wrong stage")

    def sieve(self, elem: LatticeElement) -> Sieve:
        return self.maps[elem.context_id][elem.mask]

    def to_json(self) -> dict:
        return {
            cid: {str(mask): sorted(s.members) for mask, s in sorted(stage.items())}
            for cid, stage in self.maps.items()
        }


def valuation_table(rho: DensityMatrix, poset: ContextPoset, r=1) -> ValuationTable:
    """Materialize the state-derived valuation over the whole poset."""
    if not 0 < float(r) <= 1:
        raise ValidationError("threshold r must lie in (0, 1]")
    weights = stage_weights(rho, poset)
    maps = {}
    for cid in poset.ids():
        v = poset.contexts[cid]
        stage_map = {}
        for elem in lattice(v):
            stage_map[elem.mask] = _valuation_sieve(weights, elem, poset, r)
        maps[cid] = stage_map
    return ValuationTable(poset, maps, r=r)


# ---------------------------------------------------------------------------
# axiom checking
# ---------------------------------------------------------------------------


def check_valuation(table: ValuationTable, require_exclusivity: bool = True,
                    require_unit: bool = True) -> dict:
    """Per-axiom report: functional composition, null proposition,
    monotonicity, and (optionally) exclusivity and unit."""
    poset = table.poset
    report = {
        "functional_composition": {"ok": True, "counterexample": None},
        "null_proposition": {"ok": True, "counterexample": None},
        "monotonicity": {"ok": True, "counterexample": None},
        "exclusivity": {"ok": True, "counterexample": None, "checked": require_exclusivity},
        "unit_proposition": {"ok": True, "counterexample": None, "checked": require_unit},
    }

    for sub, sup in poset.proper_pairs():
        for elem in lattice(poset.contexts[sup]):
            lhs = table.sieve(coarse_grain(poset, elem, sub))
            rhs = pullback(poset, table.sieve(elem), sub)
            if lhs != rhs:
                report["functional_composition"] = {
                    "ok": False,
                    "counterexample": {
                        "morphism": [sub, sup],
                        "mask": elem.mask,
                        "valuation_of_coarse": sorted(lhs.members),
                        "pullback": sorted(rhs.members),
                    },
                }
                break
        if not report["functional_composition"]["ok"]:
            break

    for cid in poset.ids():
        v = poset.contexts[cid]
        if table.sieve(LatticeElement(cid, 0)).members:
            report["null_proposition"] = {
                "ok": False,
                "counterexample": {"stage": cid},
            }
            break
        if require_unit:
            t = table.sieve(top(v))
            if t != principal_sieve(poset, cid):
                report["unit_proposition"] = {
                    "ok": False,
                    "counterexample": {"stage": cid, "sieve": sorted(t.members)},
                    "checked": True,
                }

    for cid in poset.ids():
        v = poset.contexts[cid]
        elems = lattice(v)
        for p in elems:
            for q in elems:
                if p.leq(q) and not table.sieve(p).leq(table.sieve(q)):
                    report["monotonicity"] = {
                        "ok": False,
                        "counterexample": {"stage": cid, "p": p.mask, "q": q.mask},
                    }
                    break
            else:
                continue
            break
        if not report["monotonicity"]["ok"]:
            break

    if require_exclusivity:
        full = principal_sieve
        for cid in poset.ids():
            v = poset.contexts[cid]
            true_v = full(poset, cid)
            elems = [e for e in lattice(v) if e.mask]
            for i, p in enumerate(elems):
                for q in elems[i + 1 :]:
                    if p.mask & q.mask:
                        continue  # not disjoint
                    if table.sieve(p) == true_v and table.sieve(q) == true_v:
                        report["exclusivity"] = {
                            "ok": False,
                            "counterexample": {"stage": cid, "p": p.mask, "q": q.mask},
                            "checked": True,
                        }
                        break
                if not report["exclusivity"]["ok"]:
                    break
            if not report["exclusivity"]["ok"]:
                break

    report["ok"] = all(
        report[k]["ok"]
        for k in (
            "functional_composition",
            "null_proposition",
            "monotonicity",
            "exclusivity",
            "unit_proposition",
        )
    )
    return report


def natural_transformation_check(table: ValuationTable) -> dict:
    """Independent cross-check: the per-stage maps commute with the morphism
    actions of the coarse-graining presheaf and the classifier (naturality
    square), verified square by square."""
    poset = table.poset
    squares = 0
    for sub, sup in poset.proper_pairs():
        below_sub = set(poset.below(sub))
        for elem in lattice(poset.contexts[sup]):
            squares += 1
            # classifier action: intersect the assigned sieve with the down-set
            pulled = table.sieve(elem).members & below_sub
            # presheaf action then valuation at the lower stage
            assigned = table.sieve(coarse_grain(poset, elem, sub)).members
            if pulled != assigned:
                return {
                    "ok": False,
                    "squares_checked": squares,
                    "counterexample": {
                        "morphism": [sub, sup],
                        "mask": elem.mask,
                        "pulled": sorted(pulled),
                        "assigned": sorted(assigned),
                    },
                }
    return {"ok": True, "squares_checked": squares, "counterexample": None}
