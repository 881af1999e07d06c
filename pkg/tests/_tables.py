"""Hand-written truth tables, rows = input port i, columns = state s = 1..n."""

EXAMPLE_F = [[1, 2], [1, 1], [2, 2]]
EXAMPLE_G = [[1, 2], [0, 0], [0, 0]]

HW2_F = [
    [1, 2],
    [1, 1],
    [2, 2],
    [1, 2],
]

HW4_F = [
    [1, 2, 3, 4],   # 0: oscillator, keep
    [1, 1, 1, 1],   # 0001
    [2, 2, 2, 2],   # 0010
    [1, 2, 1, 1],   # 0011
    [3, 3, 3, 3],   # 0100
    [1, 1, 3, 1],   # 0101
    [2, 2, 3, 2],   # 0110
    [1, 2, 3, 1],   # 0111
    [4, 4, 4, 4],   # 1000
    [1, 1, 1, 4],   # 1001
    [2, 2, 2, 4],   # 1010
    [1, 2, 1, 4],   # 1011
    [3, 3, 3, 4],   # 1100
    [1, 1, 3, 4],   # 1101
    [2, 2, 3, 4],   # 1110
    [1, 2, 3, 4],   # 1111
]


def hw_g(n):
    return [list(range(1, n + 1))] + [[0] * n for _ in range(2**n - 1)]
