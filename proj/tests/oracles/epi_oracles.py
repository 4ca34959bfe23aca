"""Independent scalar oracles for the epi-core tests (plain Python floats)."""
import math


def i_model_value(alpha, s1, gamma, s2, S0, b1, b2, I, Ie, t, h, P, t0=0):
    """Single-expression evaluation; I, Ie, b1 are dicts keyed by absolute day."""
    k = t - h
    c = (t - t0) / (P + 1)
    quad_i = sum(I[k - j] for j in range(P + 1))
    expo = sum(b1[k - j] * I[k - j] + b2 * Ie[k - j] for j in range(P + 1))
    return s1 * alpha + (1 - s1 - gamma) * I[k] + s2 * Ie[k] - gamma * c * quad_i - S0 * math.exp(-c * expo)


def seir_rk4(state, b1, s1, g, dt, steps):
    def f(x):
        S, E, I, R = x
        inf = b1 * S * I
        return [-inf, inf - s1 * E, s1 * E - g * I, g * I]
    out = [state]
    x = state
    for _ in range(steps):
        k1 = f(x)
        k2 = f([x[i] + dt / 2 * k1[i] for i in range(4)])
        k3 = f([x[i] + dt / 2 * k2[i] for i in range(4)])
        k4 = f([x[i] + dt * k3[i] for i in range(4)])
        x = [x[i] + dt / 6 * (k1[i] + 2 * k2[i] + 2 * k3[i] + k4[i]) for i in range(4)]
        out.append(x)
    return out


def i_recursion(state, b1, s1, g, dt, steps):
    S0, E0, I0, R0 = state
    alpha = 1 - R0
    I = [I0]
    acc = I0
    for n in range(steps):
        tn = n * dt
        Q = tn / (n + 1) * acc
        In = I[-1]
        nxt = In + dt * (s1 * (alpha - In - g * Q - S0 * math.exp(-b1 * Q)) - g * In)
        I.append(nxt)
        acc += nxt
    return I


if __name__ == "__main__":
    # P=1, t-t0=2, h=1
    I = {0: 0.02, 1: 0.01}
    Ie = {0: 0.005, 1: 0.005}
    b1 = {0: 0.4, 1: 0.4}
    v = i_model_value(0.5, 0.1, 0.2, 0.1, 0.9, b1, 0.3, I, Ie, t=2, h=1, P=1)
    print("i_model golden %.17g" % v)
    Ie0 = {0: 0.0, 1: 0.0}
    v0 = i_model_value(0.5, 0.1, 0.2, 0.1, 0.9, b1, 0.3, I, Ie0, t=2, h=1, P=1)
    print("i_equation golden %.17g" % v0)

    init = [0.98, 0.01, 0.01, 0.0]
    days = 60
    ref_dt = 1e-3
    ref = seir_rk4(init, 0.5, 0.2, 0.1, ref_dt, int(days / ref_dt))
    ref_days = [ref[int(round(d / ref_dt))][2] for d in range(days + 1)]
    errs = []
    for dt in [0.2, 0.1, 0.05, 0.025]:
        n = int(round(days / dt))
        rec = i_recursion(init, 0.5, 0.2, 0.1, dt, n)
        per = int(round(1 / dt))
        e = max(abs(rec[d * per] - ref_days[d]) for d in range(days + 1))
        errs.append(e)
        print("dt", dt, "err", e)
    print("ratios", [errs[i] / errs[i + 1] for i in range(len(errs) - 1)])
