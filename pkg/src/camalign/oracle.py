"""Reference implementations used as ground truth.

The dynamic-programming fills are deliberately written as plain
row-major textbook loops with none of the bit-serial machinery, so a bug
in the simulated datapath cannot hide in its own oracle. Truth-table
programs are checked by exhaustive execution over every input
combination.
"""

from dataclasses import dataclass

from .errors import ConfigurationError


@dataclass
class DpResult:
    score: int
    H: list = None
    E: list = None
    F: list = None


def sw_local(a, b, scheme, keep_matrices=False):
    """Affine-gap local alignment score (clamped at zero, max anywhere)."""
    n, m = len(a), len(b)
    H = [[0] * (m + 1) for _ in range(n + 1)]
    E = [[0] * (m + 1) for _ in range(n + 1)]
    F = [[0] * (m + 1) for _ in range(n + 1)]
    best = 0
    for i in range(1, n + 1):
        for j in range(1, m + 1):
            E[i][j] = max(E[i][j - 1] - scheme.g_ext,
                          H[i][j - 1] - scheme.g_first)
            F[i][j] = max(F[i - 1][j] - scheme.g_ext,
                          H[i - 1][j] - scheme.g_first)
            h = max(H[i - 1][j - 1] + scheme.sigma(a[i - 1], b[j - 1]),
                    E[i][j], F[i][j], 0)
            H[i][j] = h
            if h > best:
                best = h
    if keep_matrices:
        return DpResult(best, H, E, F)
    return DpResult(best)


def nw_global(a, b, scheme, keep_matrices=False):
    """Linear-gap global alignment: end-to-end score with gap penalty d."""
    n, m = len(a), len(b)
    d = scheme.gap_d
    H = [[0] * (m + 1) for _ in range(n + 1)]
    for i in range(1, n + 1):
        H[i][0] = i * d
    for j in range(1, m + 1):
        H[0][j] = j * d
    for i in range(1, n + 1):
        for j in range(1, m + 1):
            H[i][j] = max(H[i - 1][j - 1] + scheme.sigma(a[i - 1], b[j - 1]),
                          H[i - 1][j] + d,
                          H[i][j - 1] + d)
    if keep_matrices:
        return DpResult(H[n][m], H)
    return DpResult(H[n][m])


def semi_global(a, b, scheme, keep_matrices=False):
    """Global scoring with free end gaps: zero boundary, max over the last
    row and last column."""
    n, m = len(a), len(b)
    d = scheme.gap_d
    H = [[0] * (m + 1) for _ in range(n + 1)]
    for i in range(1, n + 1):
        for j in range(1, m + 1):
            H[i][j] = max(H[i - 1][j - 1] + scheme.sigma(a[i - 1], b[j - 1]),
                          H[i - 1][j] + d,
                          H[i][j - 1] + d)
    best = max(max(H[n]), max(H[i][m] for i in range(n + 1)))
    if keep_matrices:
        return DpResult(best, H)
    return DpResult(best)


@dataclass
class VerifyResult:
    ok: bool
    counterexample: tuple = None  # (input bits, expected, got)

    def __bool__(self):
        return self.ok


def verify_program(tt, prog, cmap, backend=None):
    """Exhaustively execute a truth-table program and check every row.

    Each input combination becomes one independent row (programs compiled
    from tables never shift, so rows cannot interact). Output fields are
    checked against the table; untouched rows must keep their background,
    which is checked under both an all-zeros and an all-ones background.
    """
    from .cam_array import CamArray
    from .microcode import KIND_SHIFT, execute

    n_in = len(tt.inputs)
    if n_in > 20:
        raise ConfigurationError("table too large for exhaustive verification")
    if any(kind == KIND_SHIFT for kind, _, _ in prog.ops):
        raise ConfigurationError("verify_program handles shift-free programs")

    in_cols = [cmap.col(*bit) for bit in tt.inputs]
    out_cols = [cmap.col(*bit) for bit in tt.outputs]
    combos = [format(v, f"0{n_in}b")[::-1] for v in range(1 << n_in)]

    for background in (0, (1 << cmap.row_bits) - 1):
        array = CamArray(len(combos), cmap.row_bits, cmap.subword_bits,
                         backend=backend)
        rows = []
        for bits in combos:
            row = background
            for pos, col in enumerate(in_cols):
                row &= ~(1 << col)
                row |= (1 if bits[pos] == "1" else 0) << col
            rows.append(row)
        array.load_rows(0, rows)
        execute(prog, array)
        for r, bits in enumerate(combos):
            expected = tt.lookup(bits)
            expected_row = rows[r]
            if expected is not None:
                for pos, col in enumerate(out_cols):
                    expected_row &= ~(1 << col)
                    expected_row |= (1 if expected[pos] == "1" else 0) << col
            got_row = array.read_row(r)
            if got_row != expected_row:
                got = "".join(str((got_row >> c) & 1) for c in out_cols)
                return VerifyResult(
                    False, (bits, expected if expected is not None
                            else "unchanged row", got))
    return VerifyResult(True)
