#!/usr/bin/env python3
"""Independent toy-curve oracle (p = 227, q = 19) used to freeze test vectors.

Implements y^2 = x^3 + 1 over F_227 with plain Python integers, a naive
linear Miller loop (one addition step per multiple of A), and the FullIdent
hash constructions. Output is pasted into tests/ibe_vectors.rs.
"""
import hashlib

P_MOD = 227
Q = 19
COF = (P_MOD + 1) // Q
N_BITS = 128


def on_curve(pt):
    if pt is None:
        return True
    x, y = pt
    return (y * y - x * x * x - 1) % P_MOD == 0


def add(a, b):
    if a is None:
        return b
    if b is None:
        return a
    (x1, y1), (x2, y2) = a, b
    if x1 == x2 and (y1 + y2) % P_MOD == 0:
        return None
    if a == b:
        lam = (3 * x1 * x1) * pow(2 * y1, -1, P_MOD) % P_MOD
    else:
        lam = (y2 - y1) * pow(x2 - x1, -1, P_MOD) % P_MOD
    x3 = (lam * lam - x1 - x2) % P_MOD
    y3 = (lam * (x1 - x3) - y1) % P_MOD
    return (x3, y3)


def mul(k, pt):
    acc = None
    for _ in range(k):
        acc = add(acc, pt)
    return acc


# F_{p^2} = F_p[w]/(w^2 + w + 1); element (a, b) = a + b w
def f2mul(u, v):
    a, b = u
    c, d = v
    return ((a * c - b * d) % P_MOD, (a * d + b * c - b * d) % P_MOD)


def f2inv(u):
    a, b = u
    norm = (a * a - a * b + b * b) % P_MOD
    ninv = pow(norm, -1, P_MOD)
    return (((a - b) * ninv) % P_MOD, (-b * ninv) % P_MOD)


def f2pow(u, e):
    r = (1, 0)
    for _ in range(e):
        r = f2mul(r, u)
    return r


def tate(a_pt, b_pt):
    if a_pt is None or b_pt is None:
        return (1, 0)
    xq = (0, b_pt[0])  # w * x_B
    yq = (b_pt[1], 0)
    num, den = (1, 0), (1, 0)
    t = a_pt
    for _ in range(Q - 1):
        nxt = add(t, a_pt)
        x1, y1 = t
        if nxt is None:
            line = ((xq[0] - x1) % P_MOD, xq[1])
        else:
            if t == a_pt:
                lam = (3 * x1 * x1) * pow(2 * y1, -1, P_MOD) % P_MOD
            else:
                lam = (a_pt[1] - y1) * pow(a_pt[0] - x1, -1, P_MOD) % P_MOD
            # y_Q - y1 - lam (x_Q - x1)
            line = ((yq[0] - y1 - lam * (xq[0] - x1)) % P_MOD, (-lam * xq[1]) % P_MOD)
            vert = ((xq[0] - nxt[0]) % P_MOD, xq[1])
            den = f2mul(den, vert)
        num = f2mul(num, line)
        t = nxt
    f = f2mul(num, f2inv(den))
    return f2pow(f, (P_MOD * P_MOD - 1) // Q)


def sha(b):
    return hashlib.sha256(b).digest()


def h1(ident):
    data = ident.encode()
    counter = 0
    while True:
        msg = data if counter == 0 else data + counter.to_bytes(4, "big")
        y0 = int.from_bytes(sha(msg), "big") % P_MOD
        x0 = pow((y0 * y0 - 1) % P_MOD, (2 * P_MOD - 1) // 3, P_MOD)
        pt = mul(COF, (x0, y0))
        if pt is not None:
            return pt
        counter += 1


def enc_gt(g):
    return bytes([g[0], g[1]])


def enc_pt(pt):
    return bytes([pt[0], pt[1]])


def h3(sigma, m):
    return int.from_bytes(sha(sigma + m), "big") % (Q - 1) + 1


def xor(a, b):
    return bytes(x ^ y for x, y in zip(a, b))


def main():
    count = 1 + sum(1 for x in range(P_MOD) for y in range(P_MOD) if on_curve((x, y)))
    print("point_count", count)

    n1, n2 = h1("node-001"), h1("node-002")
    print("h1 node-001", n1, "node-002", n2)

    s = 7
    print("extract s=7 node-001", mul(s, n1))

    # generator: smallest y >= 2 whose cofactor multiple is not infinity
    y = 2
    while True:
        x = pow((y * y - 1) % P_MOD, (2 * P_MOD - 1) // 3, P_MOD)
        gen = mul(COF, (x, y))
        if gen is not None:
            break
        y += 1
    print("generator", gen, "from y", y)
    s_p = mul(s, gen)
    print("sP", s_p)
    epp = tate(gen, gen)
    print("e(P,P)", epp)
    print("e(P,P)^q", f2pow(epp, Q))

    sigma = bytes(range(16))
    m = b"hi trust"
    r = h3(sigma, m)
    u = mul(r, gen)
    g = f2pow(tate(n1, s_p), r)
    v = xor(sigma, sha(enc_gt(g))[:16])
    w = xor(m, sha(sigma)[: len(m)])
    print("r", r)
    print("U", u)
    print("V", v.hex())
    print("W", w.hex())
    # decrypt path
    d = mul(s, n1)
    g2 = tate(d, u)
    assert g2 == g
    print("ok")


if __name__ == "__main__":
    main()
