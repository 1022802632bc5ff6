# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled array cycle kernel.

Same contract as ``_kernel_fallback``; this version runs whole op
sequences in C so that long microcode programs cost microseconds rather
than milliseconds per thousand cycles.
"""

from libc.stdint cimport uint64_t, uint8_t, int64_t

KIND_COMPARE = 0
KIND_WRITE = 1
KIND_SHIFT = 2

NAME = "compiled"


cdef inline void _compare(uint64_t[:, ::1] stored, uint8_t[::1] tags,
                          const uint64_t[::1] key, const uint64_t[::1] mask,
                          int64_t *counts) noexcept nogil:
    cdef Py_ssize_t rows = stored.shape[0]
    cdef Py_ssize_t words = stored.shape[1]
    cdef Py_ssize_t r, w
    cdef int64_t matched = 0, blocked = 0
    cdef bint hit
    for r in range(rows):
        if tags[r]:
            blocked += 1
            continue
        hit = True
        for w in range(words):
            if (stored[r, w] ^ key[w]) & mask[w]:
                hit = False
                break
        if hit:
            tags[r] = 1
            matched += 1
    counts[0] = matched
    counts[1] = rows - matched - blocked
    counts[2] = blocked


cdef inline int64_t _write(uint64_t[:, ::1] stored, uint8_t[::1] tags,
                           const uint64_t[::1] key, const uint64_t[::1] mask) noexcept nogil:
    cdef Py_ssize_t rows = stored.shape[0]
    cdef Py_ssize_t words = stored.shape[1]
    cdef Py_ssize_t r, w
    cdef int64_t written = 0
    for r in range(rows):
        if tags[r]:
            for w in range(words):
                stored[r, w] = (stored[r, w] & ~mask[w]) | (key[w] & mask[w])
            written += 1
        tags[r] = 0
    return written


cdef inline void _shift(uint8_t[::1] tags) noexcept nogil:
    cdef Py_ssize_t r
    for r in range(tags.shape[0] - 1, 0, -1):
        tags[r] = tags[r - 1]
    tags[0] = 0


def compare(uint64_t[:, ::1] stored, uint8_t[::1] tags,
            const uint64_t[::1] key, const uint64_t[::1] mask):
    cdef int64_t counts[3]
    with nogil:
        _compare(stored, tags, key, mask, counts)
    return counts[0], counts[1], counts[2]


def write(uint64_t[:, ::1] stored, uint8_t[::1] tags,
          const uint64_t[::1] key, const uint64_t[::1] mask):
    cdef int64_t written
    with nogil:
        written = _write(stored, tags, key, mask)
    return written


def shift_tags(uint8_t[::1] tags):
    with nogil:
        _shift(tags)


def execute(uint64_t[:, ::1] stored, uint8_t[::1] tags,
            const uint8_t[::1] kinds,
            uint64_t[:, ::1] keys, uint64_t[:, ::1] masks,
            int64_t[::1] out_matched, int64_t[::1] out_mismatched,
            int64_t[::1] out_blocked, int64_t[::1] out_written):
    cdef Py_ssize_t n = kinds.shape[0]
    cdef Py_ssize_t i
    cdef int64_t counts[3]
    with nogil:
        for i in range(n):
            if kinds[i] == 0:
                _compare(stored, tags, keys[i], masks[i], counts)
                out_matched[i] = counts[0]
                out_mismatched[i] = counts[1]
                out_blocked[i] = counts[2]
            elif kinds[i] == 1:
                out_written[i] = _write(stored, tags, keys[i], masks[i])
            else:
                _shift(tags)
