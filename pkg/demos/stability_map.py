"""ASCII stability map of the field-side Langmuir family on both branches.

'#' marks a cell with a linearly stable root, '.' an unstable one, ' ' no root.
The same data come from ``trojan2e scan --side trojan --omega 0.1:3:60
--epsilon 0:2:60 --branch +1``.
"""

from trojan2e import stability as stab

N = 30
for branch in (1, -1):
    m = stab.scan((0.1, 3.0), (0.0, 2.0), N, branch, side="trojan")
    print(f"branch {branch:+d}: rows are epsilon 2 -> 0, columns omega 0.1 -> 3")
    for j in reversed(range(N)):
        row = ""
        for i in range(N):
            c = m.cell(i, j)
            row += "#" if c["any_stable"] else ("." if c["found"] else " ")
        print("  |" + row + "|")
    print(f"  stable cells: {int(m.stable_mask().sum())} of {N * N}\n")
