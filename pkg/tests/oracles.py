"""Independent reference implementations used only by tests.

Deliberately naive: weighted normal equations assembled with Python
loops and solved by Gaussian elimination with partial pivoting, no numpy
linear algebra anywhere. Agreement between this path and the package's
pivoted-QR solver cross-validates both.
"""

from __future__ import annotations


def solve(matrix: list[list[float]], rhs: list[float]) -> list[float]:
    """Gaussian elimination with partial pivoting; pure Python floats."""
    n = len(matrix)
    aug = [list(row) + [rhs[i]] for i, row in enumerate(matrix)]
    for col in range(n):
        pivot = max(range(col, n), key=lambda r: abs(aug[r][col]))
        if abs(aug[pivot][col]) == 0.0:
            raise ZeroDivisionError("singular matrix in reference solver")
        aug[col], aug[pivot] = aug[pivot], aug[col]
        for row in range(col + 1, n):
            factor = aug[row][col] / aug[col][col]
            if factor == 0.0:
                continue
            for k in range(col, n + 1):
                aug[row][k] -= factor * aug[col][k]
    x = [0.0] * n
    for row in range(n - 1, -1, -1):
        acc = aug[row][n]
        for k in range(row + 1, n):
            acc -= aug[row][k] * x[k]
        x[row] = acc / aug[row][row]
    return x


def wls_reference(
    x_rows: list[list[float]], y: list[float], w: list[float]
) -> tuple[list[float], list[float]]:
    """Coefficients and classical standard errors via normal equations."""
    n = len(x_rows)
    p = len(x_rows[0])
    xtwx = [
        [sum(w[i] * x_rows[i][a] * x_rows[i][b] for i in range(n)) for b in range(p)]
        for a in range(p)
    ]
    xtwy = [sum(w[i] * x_rows[i][a] * y[i] for i in range(n)) for a in range(p)]
    beta = solve(xtwx, xtwy)

    wrss = 0.0
    for i in range(n):
        fitted = sum(x_rows[i][j] * beta[j] for j in range(p))
        wrss += w[i] * (y[i] - fitted) ** 2
    sigma2 = wrss / (n - p)

    se = []
    for j in range(p):
        unit = [1.0 if k == j else 0.0 for k in range(p)]
        column = solve(xtwx, unit)
        se.append((sigma2 * column[j]) ** 0.5)
    return beta, se
