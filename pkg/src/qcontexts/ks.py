"""Global-section search over context posets built from ray sets.

A ray set is a finite family of one-dimensional subspaces; each listed (or
discovered) orthogonal basis generates a maximal context. A global section
of the spectral presheaf picks one functional per context compatibly with
every restriction; uncolourable ray sets are certified by an exhaustive
search returning no section.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass
from importlib import resources
from itertools import combinations, product

from ._kernel import BACKEND as KERNEL_BACKEND
from ._kernel import search_sections
from .contexts import Context, ContextPoset, SpectralFunctional, build_poset, restrict_functional
from .linalg import Projector, ValidationError


class RaySet:
    """Deduplicated rays with the orthogonal bases found among them."""

    __slots__ = ("dim", "backend", "rays", "projectors", "bases")

    def __init__(self, dim: int, rays, backend: str = "exact", bases=None):
        self.dim = dim
        self.backend = backend
        projectors = []
        kept = []
        seen = set()
        for ray in rays:
            if len(ray) != dim:
                raise ValidationError("ray length disagrees with dimension")
            p = Projector.from_ray(ray, backend)
            if p.canonical_key in seen:
                continue
            seen.add(p.canonical_key)
            projectors.append(p)
            kept.append(tuple(ray))
        self.rays = tuple(kept)
        self.projectors = tuple(projectors)
        if bases is None:
            bases = discover_bases(self.projectors, dim)
        else:
            bases = [tuple(b) for b in bases]
            for b in bases:
                self._check_basis(b)
        self.bases = tuple(sorted(set(bases)))

    def _check_basis(self, b):
        if len(b) != self.dim:
            raise ValidationError(f"basis {b} does not have {self.dim} rays")
        for i, j in combinations(b, 2):
            if not self.projectors[i].orthogonal_to(self.projectors[j]):
                raise ValidationError(f"rays {i} and {j} in basis {b} are not orthogonal")

    @property
    def n_rays(self) -> int:
        return len(self.rays)


def discover_bases(projectors, dim: int):
    """All maximal orthogonality cliques of size dim, as sorted index tuples."""
    n = len(projectors)
    orth = [[False] * n for _ in range(n)]
    for i in range(n):
        for j in range(i + 1, n):
            o = projectors[i].orthogonal_to(projectors[j])
            orth[i][j] = orth[j][i] = o
    bases = []

    def extend(clique, start):
        if len(clique) == dim:
            bases.append(tuple(clique))
            return
        for k in range(start, n):
            if all(orth[c][k] for c in clique):
                extend(clique + [k], k + 1)

    extend([], 0)
    return bases


def load_rayset(source) -> RaySet:
    """Load a ray set from a JSON file path, a packaged fixture name, or a dict.

    Schema: ``{"dim": int, "field": "int" | "quadratic_sqrt2", "rays": [...],
    "bases": [[i, ...], ...]?}``. Integer-field entries are ints or 'p/q'
    strings; quadratic entries may also be ``[a, b]`` pairs for a+b*sqrt(2).
    Missing bases are discovered by orthogonality search.
    """
    if isinstance(source, dict):
        obj = source
    else:
        name = str(source)
        if "/" not in name and not name.endswith(".json"):
            name = name + ".json"
        if "/" in name:
            with open(name) as fh:
                obj = json.load(fh)
        else:
            ref = resources.files("qcontexts.data") / name
            if ref.is_file():
                obj = json.loads(ref.read_text())
            else:
                with open(str(source)) as fh:
                    obj = json.load(fh)
    field = obj.get("field", "int")
    if field not in ("int", "quadratic_sqrt2"):
        raise ValidationError(f"unknown field {field!r}")
    return RaySet(int(obj["dim"]), obj["rays"], backend="exact", bases=obj.get("bases"))


def poset_from_rayset(rayset: RaySet, close: bool = True,
                      include_pairs: bool = False) -> ContextPoset:
    """One maximal context per basis, optionally closed under pairwise meets.

    With ``include_pairs`` every orthogonal ray pair also contributes the
    context it generates (the two rank-1 projectors plus their joint
    complement). Pairs whose completing ray is itself in some listed basis
    deduplicate into that basis's context; the others add genuine
    constraints, which some uncolourable sets need. A ray set with no
    complete orthogonal bases yields the poset containing only the trivial
    context.
    """
    gens = []
    for b in rayset.bases:
        gens.append(Context([rayset.projectors[i] for i in b]))
    if include_pairs:
        for i, j in combinations(range(len(rayset.projectors)), 2):
            p, q = rayset.projectors[i], rayset.projectors[j]
            if not p.orthogonal_to(q):
                continue
            rest = p.plus(q).complement()
            atoms = [p, q] + ([] if rest.is_zero() else [rest])
            gens.append(Context(atoms, validate=False))
    if not gens:
        return build_poset([], dim=rayset.dim, backend=rayset.backend)
    return build_poset(gens, close_under_meet=close)


# ---------------------------------------------------------------------------
# problem compilation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CompiledProblem:
    """Flattened integer-array form of the section-search CSP."""

    maximal_ids: tuple
    slot_ids: tuple
    natoms: tuple
    child_offsets: tuple
    child_ids: tuple
    map_offsets: tuple
    map_data: tuple


def compile_problem(poset: ContextPoset) -> CompiledProblem:
    """Order the maximal contexts most-constrained-first and flatten their
    restriction maps into the kernel's array format."""
    maximal = poset.maximal_ids()
    slots = [cid for cid in poset.ids() if cid not in set(maximal)]
    slot_index = {cid: i for i, cid in enumerate(slots)}
    children = {
        m: tuple(c for c in poset.below(m) if c != m and c in slot_index) for m in maximal
    }

    # greedy: repeatedly take the context sharing the most already-touched
    # slots (fail-fast ordering); ids break ties deterministically
    ordered = []
    touched: set = set()
    remaining = sorted(maximal)
    while remaining:
        best = max(remaining, key=lambda m: (len(set(children[m]) & touched),
                                             len(children[m]), m))
        ordered.append(best)
        touched.update(children[best])
        remaining.remove(best)

    natoms = []
    child_offsets = [0]
    child_ids = []
    map_offsets = []
    map_data = []
    for m in ordered:
        n = poset.contexts[m].n_atoms
        natoms.append(n)
        for c in children[m]:
            child_ids.append(slot_index[c])
            map_offsets.append(len(map_data))
            rmap = poset.restriction[(c, m)]
            map_data.extend(rmap[a] for a in range(n))
        child_offsets.append(len(child_ids))
    return CompiledProblem(
        tuple(ordered), tuple(slots), tuple(natoms), tuple(child_offsets),
        tuple(child_ids), tuple(map_offsets), tuple(map_data),
    )


# ---------------------------------------------------------------------------
# search
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SectionAssignment:
    """A full choice of one atom index per context id."""

    choices: dict

    def functional(self, cid: str) -> SpectralFunctional:
        return SpectralFunctional(cid, self.choices[cid])

    def to_json(self) -> dict:
        return dict(sorted(self.choices.items()))


def _expand(problem: CompiledProblem, poset: ContextPoset, raw) -> SectionAssignment:
    choices = {}
    for m, a in zip(problem.maximal_ids, raw):
        choices[m] = a
        for c in poset.below(m):
            if c == m:
                continue
            choices[c] = poset.restriction[(c, m)][a]
    return SectionAssignment(choices)


def find_global_section(poset: ContextPoset, timings: bool = False):
    """First global section if one exists, with a search report.

    Returns ``(assignment_or_None, report)``; the report is deterministic
    (``elapsed_ms`` stays null unless timings are requested).
    """
    problem = compile_problem(poset)
    t0 = time.perf_counter()
    solutions, nodes = search_sections(
        list(problem.natoms), list(problem.child_offsets), list(problem.child_ids),
        list(problem.map_offsets), list(problem.map_data), len(problem.slot_ids),
        False, 1,
    )
    elapsed = (time.perf_counter() - t0) * 1000.0
    report = {
        "exists": bool(solutions),
        "n_contexts": len(poset),
        "n_maximal": len(problem.maximal_ids),
        "nodes": nodes,
        "kernel": KERNEL_BACKEND,
        "elapsed_ms": round(elapsed, 3) if timings else None,
    }
    if not solutions:
        return None, report
    return _expand(problem, poset, solutions[0]), report


def enumerate_global_sections(poset: ContextPoset, limit: int = 0, timings: bool = False):
    """All global sections (up to ``limit`` if positive), with a report."""
    problem = compile_problem(poset)
    t0 = time.perf_counter()
    solutions, nodes = search_sections(
        list(problem.natoms), list(problem.child_offsets), list(problem.child_ids),
        list(problem.map_offsets), list(problem.map_data), len(problem.slot_ids),
        True, limit,
    )
    elapsed = (time.perf_counter() - t0) * 1000.0
    report = {
        "exists": bool(solutions),
        "n_sections": len(solutions),
        "n_contexts": len(poset),
        "n_maximal": len(problem.maximal_ids),
        "nodes": nodes,
        "kernel": KERNEL_BACKEND,
        "elapsed_ms": round(elapsed, 3) if timings else None,
    }
    return [_expand(problem, poset, s) for s in solutions], report


def validate_section(assignment: SectionAssignment, poset: ContextPoset) -> bool:
    """Independent check against the restriction of functionals themselves."""
    for cid in poset.ids():
        if cid not in assignment.choices:
            return False
        if not 0 <= assignment.choices[cid] < poset.contexts[cid].n_atoms:
            return False
    for sub, sup in poset.proper_pairs():
        k = SpectralFunctional(sup, assignment.choices[sup])
        restricted = restrict_functional(k, poset.contexts[sup], poset.contexts[sub])
        if restricted.index != assignment.choices[sub]:
            return False
    return True


def brute_force_sections(poset: ContextPoset, limit: int = 0):
    """Oracle: plain product over all maximal-context atom choices, each tuple
    checked against the poset's restriction tables. Shares no code with the
    backtracking kernel. Exponential; test-scale inputs only."""
    maximal = sorted(poset.maximal_ids())
    lower = {
        m: [(c, poset.restriction[(c, m)]) for c in poset.below(m) if c != m]
        for m in maximal
    }
    out = []
    for combo in product(*(range(poset.contexts[m].n_atoms) for m in maximal)):
        choices = dict(zip(maximal, combo))
        ok = True
        for m, a in zip(maximal, combo):
            for c, rmap in lower[m]:
                if choices.setdefault(c, rmap[a]) != rmap[a]:
                    ok = False
                    break
            if not ok:
                break
        if ok and len(choices) == len(poset):
            out.append(SectionAssignment(choices))
            if limit > 0 and len(out) >= limit:
                break
    return out
