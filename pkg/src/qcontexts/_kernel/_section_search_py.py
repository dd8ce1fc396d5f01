"""Pure-Python backtracking kernel for the global-section search.

The problem is flattened to integer arrays before it reaches this module:
one choice variable per maximal context, plus one forced-value slot per
non-maximal context. Choosing atom ``a`` for maximal context ``i`` forces
``map_data[map_offsets[j] + a]`` into slot ``child_ids[j]`` for every ``j``
in ``child_offsets[i] .. child_offsets[i+1]``. A global section exists iff
some full choice forces no slot two different ways.
"""

from __future__ import annotations

BACKEND = "python"


def search_sections(natoms, child_offsets, child_ids, map_offsets, map_data,
                    n_slots, want_all, limit):
    """Depth-first search over per-context atom choices.

    Returns ``(solutions, nodes)`` where each solution is a tuple of chosen
    atom indices (one per maximal context, in input order) and ``nodes``
    counts attempted assignments. With ``want_all`` false the search stops
    at the first solution; ``limit <= 0`` means unbounded.
    """
    k = len(natoms)
    slot_values = [-1] * n_slots
    choice = [0] * k
    solutions = []
    nodes = 0

    # trail of slots set at each depth, for O(1) undo
    trail = [[] for _ in range(k)]

    depth = 0
    next_atom = [0] * (k + 1)
    while depth >= 0:
        if depth == k:
            solutions.append(tuple(choice))
            if not want_all or (limit > 0 and len(solutions) >= limit):
                break
            depth -= 1
            if depth >= 0:
                for s in trail[depth]:
                    slot_values[s] = -1
                trail[depth].clear()
            continue
        a = next_atom[depth]
        if a >= natoms[depth]:
            next_atom[depth] = 0
            depth -= 1
            if depth >= 0:
                for s in trail[depth]:
                    slot_values[s] = -1
                trail[depth].clear()
            continue
        next_atom[depth] = a + 1
        nodes += 1
        ok = True
        tr = trail[depth]
        for j in range(child_offsets[depth], child_offsets[depth + 1]):
            s = child_ids[j]
            forced = map_data[map_offsets[j] + a]
            cur = slot_values[s]
            if cur == -1:
                slot_values[s] = forced
                tr.append(s)
            elif cur != forced:
                ok = False
                break
        if not ok:
            for s in tr:
                slot_values[s] = -1
            tr.clear()
            continue
        choice[depth] = a
        depth += 1
    return solutions, nodes
