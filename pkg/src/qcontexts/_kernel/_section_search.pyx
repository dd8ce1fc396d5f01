# cython: language_level=3, boundscheck=False, wraparound=False
"""Compiled backtracking kernel for the global-section search.

Mirrors ``_section_search_py`` exactly: same flattened-array inputs, same
``(solutions, nodes)`` outputs, same traversal order.
"""

from libc.stdlib cimport malloc, free

BACKEND = "compiled"


def search_sections(natoms, child_offsets, child_ids, map_offsets, map_data,
                    n_slots, want_all, limit):
    cdef int k = len(natoms)
    cdef int ns = n_slots
    cdef int nchild = len(child_ids)
    cdef int nmap = len(map_data)
    cdef bint all_flag = bool(want_all)
    cdef long lim = limit
    cdef long nodes = 0

    cdef int *c_natoms = <int *> malloc(k * sizeof(int))
    cdef int *c_coff = <int *> malloc((k + 1) * sizeof(int))
    cdef int *c_cids = <int *> malloc((nchild if nchild else 1) * sizeof(int))
    cdef int *c_moff = <int *> malloc((nchild if nchild else 1) * sizeof(int))
    cdef int *c_mdata = <int *> malloc((nmap if nmap else 1) * sizeof(int))
    cdef int *slot_values = <int *> malloc((ns if ns else 1) * sizeof(int))
    cdef int *choice = <int *> malloc((k if k else 1) * sizeof(int))
    cdef int *next_atom = <int *> malloc((k + 1) * sizeof(int))
    # per-depth trail: worst case every child slot set at one depth
    cdef int *trail = <int *> malloc((nchild if nchild else 1) * sizeof(int))
    cdef int *trail_len = <int *> malloc((k if k else 1) * sizeof(int))
    cdef int *trail_base = <int *> malloc((k + 1) * sizeof(int))

    if (c_natoms == NULL or c_coff == NULL or c_cids == NULL or c_moff == NULL
            or c_mdata == NULL or slot_values == NULL or choice == NULL
            or next_atom == NULL or trail == NULL or trail_len == NULL
            or trail_base == NULL):
        raise MemoryError()

    cdef int i, j, a, s, forced, cur, depth, t
    cdef bint ok
    solutions = []
    try:
        for i in range(k):
            c_natoms[i] = natoms[i]
            trail_len[i] = 0
            next_atom[i] = 0
        next_atom[k] = 0
        for i in range(k + 1):
            c_coff[i] = child_offsets[i]
        trail_base[0] = 0
        for i in range(k):
            trail_base[i + 1] = c_coff[i + 1]
        for i in range(nchild):
            c_cids[i] = child_ids[i]
            c_moff[i] = map_offsets[i]
        for i in range(nmap):
            c_mdata[i] = map_data[i]
        for i in range(ns):
            slot_values[i] = -1

        depth = 0
        while depth >= 0:
            if depth == k:
                solutions.append(tuple([choice[i] for i in range(k)]))
                if not all_flag or (lim > 0 and len(solutions) >= lim):
                    break
                depth -= 1
                if depth >= 0:
                    for t in range(trail_len[depth]):
                        slot_values[trail[trail_base[depth] + t]] = -1
                    trail_len[depth] = 0
                continue
            a = next_atom[depth]
            if a >= c_natoms[depth]:
                next_atom[depth] = 0
                depth -= 1
                if depth >= 0:
                    for t in range(trail_len[depth]):
                        slot_values[trail[trail_base[depth] + t]] = -1
                    trail_len[depth] = 0
                continue
            next_atom[depth] = a + 1
            nodes += 1
            ok = True
            for j in range(c_coff[depth], c_coff[depth + 1]):
                s = c_cids[j]
                forced = c_mdata[c_moff[j] + a]
                cur = slot_values[s]
                if cur == -1:
                    slot_values[s] = forced
                    trail[trail_base[depth] + trail_len[depth]] = s
                    trail_len[depth] += 1
                elif cur != forced:
                    ok = False
                    break
            if not ok:
                for t in range(trail_len[depth]):
                    slot_values[trail[trail_base[depth] + t]] = -1
                trail_len[depth] = 0
                continue
            choice[depth] = a
            depth += 1
    finally:
        free(c_natoms); free(c_coff); free(c_cids); free(c_moff); free(c_mdata)
        free(slot_values); free(choice); free(next_atom)
        free(trail); free(trail_len); free(trail_base)
    return solutions, nodes
