"""Pure-python (numpy) implementation of the array cycle kernel.

Mirrors the compiled extension in ``_kernel.pyx`` op for op; the two are
interchangeable and are cross-checked by the backend equivalence tests.
State layout: ``stored`` is a (rows, words) uint64 matrix holding the row
bits LSB-first, ``tags`` is a (rows,) uint8 vector of match latches.
"""

import numpy as np

KIND_COMPARE = 0
KIND_WRITE = 1
KIND_SHIFT = 2

NAME = "python"


def compare(stored, tags, key, mask):
    """One compare cycle: OR matches into tags.

    Returns (matched, mismatched, blocked). Rows whose tag was already set
    skip precharge and are counted as blocked; they stay tagged no matter
    what their bits hold.
    """
    blocked = tags != 0
    diff = (stored ^ key[np.newaxis, :]) & mask[np.newaxis, :]
    match = ~diff.any(axis=1)
    fresh = match & ~blocked
    tags[fresh] = 1
    n_blocked = int(blocked.sum())
    n_matched = int(fresh.sum())
    return n_matched, stored.shape[0] - n_matched - n_blocked, n_blocked


def write(stored, tags, key, mask):
    """One write cycle: key bits into unmasked columns of tagged rows,
    then reset every tag. Returns the number of rows written."""
    tagged = tags != 0
    n = int(tagged.sum())
    if n:
        stored[tagged] = (stored[tagged] & ~mask[np.newaxis, :]) | (
            key[np.newaxis, :] & mask[np.newaxis, :])
    tags[:] = 0
    return n


def shift_tags(tags):
    """One shift-down cycle: tag[i+1] <- tag[i], tag[0] <- 0."""
    tags[1:] = tags[:-1]
    tags[0] = 0


def execute(stored, tags, kinds, keys, masks,
            out_matched, out_mismatched, out_blocked, out_written):
    """Run a compiled op sequence, filling the per-op count arrays."""
    for i in range(kinds.shape[0]):
        k = kinds[i]
        if k == KIND_COMPARE:
            m, mm, b = compare(stored, tags, keys[i], masks[i])
            out_matched[i] = m
            out_mismatched[i] = mm
            out_blocked[i] = b
        elif k == KIND_WRITE:
            out_written[i] = write(stored, tags, keys[i], masks[i])
        else:
            shift_tags(tags)
