"""
Expected degree on the torus
============================

The expected degree is a finite ring sum.  Here it is compared with its
closed-form expansion, and the leftover is shown to shrink like N^-4.
"""

from ctlab.graph import C_CRIT, GraphParams, degree_expansion, expected_degree_sum

for N in (25, 51, 100, 101, 201, 400, 401):
    S = expected_degree_sum(GraphParams(N, C_CRIT))
    r = S - degree_expansion(N, C_CRIT)
    print(f"N={N:4d}  sum={S:.15f}  residual*N^4={r * N**4:+.5f}")

# %%
# Odd and even sides approach +c/2 and -c/2.

print("c/2 =", C_CRIT / 2)
