"""Pure-Python fallback for the compiled sweep kernels.

Same signatures and the same floating-point operation order as
``_ckernels.pyx``.
"""


def bellman_sweep(state_ptr, row_ptr, col, prob, cost, alpha, J, out, best):
    sp = state_ptr.tolist()
    rp = row_ptr.tolist()
    cl = col.tolist()
    pr = prob.tolist()
    cs = cost.tolist()
    Jl = J.tolist()
    alpha = float(alpha)
    for i in range(len(sp) - 1):
        v = 0.0
        arg = sp[i]
        for a in range(sp[i], sp[i + 1]):
            acc = 0.0
            for e in range(rp[a], rp[a + 1]):
                acc = acc + pr[e] * (cs[e] + alpha * Jl[cl[e]])
            if a == sp[i] or acc < v:
                v = acc
                arg = a
        out[i] = v
        best[i] = arg


def gauss_seidel_sweep(state_ptr, row_ptr, target, prob, cost, alpha, V, r):
    sp = state_ptr.tolist()
    rp = row_ptr.tolist()
    tg = target.tolist()
    pr = prob.tolist()
    cs = cost.tolist()
    Vl = V.tolist()
    rl = r.tolist()
    alpha = float(alpha)
    worst = 0.0
    for i in range(len(sp) - 1):
        v = 0.0
        for a in range(sp[i], sp[i + 1]):
            acc = 0.0
            for e in range(rp[a], rp[a + 1]):
                t = tg[e]
                nxt = Vl[t] if t >= 0 else rl[-t - 1]
                acc = acc + pr[e] * (cs[e] + alpha * nxt)
            if a == sp[i] or acc < v:
                v = acc
        delta = abs(v - Vl[i])
        if delta > worst:
            worst = delta
        Vl[i] = v
    V[:] = Vl
    return worst
