"""The data language: parse, evaluate, differentiate, test circularity."""
import numpy as np

from koranyi.expr import ExprError, is_circular, parse

e = parse("exp(-gauge^2) * (1 + t) / (1 + r2)")
print("pretty:", e.pretty(), " variables:", sorted(e.variables))
P = np.array([[0.2, 0.1, 0.3], [0.5, -0.5, 0.0]])
print("values:", e(P))
J = e.jet(P[0])
print("gradient:", J.grad)
print("Hessian diagonal:", np.diag(J.hess))

for src in ("t + r2^2", "x1", "x1^2 + y1^2", "sin(gauge)"):
    print(f"{src!r:16} circular: {is_circular(parse(src))}")

for src in ("x1*", "sin(t, 1)", "z1", "sqrt(t - 5)"):
    try:
        parse(src)([0.1, 0.2, 0.3])
    except ExprError as exc:
        print(f"{src!r:14} -> {type(exc).__name__}: {exc}")
