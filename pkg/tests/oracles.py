"""Independent scalar re-implementations used as test oracles.

Everything here is plain Python floats and loops, written straight from the
formulas, with no shared code with the package under test.
"""

import math


def project(x, y, z, tx, ty, tz, focal, cx, cy):
    d = z + tz
    return focal * (x + tx) / d + cx, focal * (y + ty) / d + cy


def project_crop(joint, s, tx, ty, f=5000.0, res=224.0):
    tz = 2.0 * f / (res * s)
    return project(*joint, tx, ty, tz, f, res / 2.0, res / 2.0)


def to_full(s, tx, ty, cx, cy, b, width, height):
    f = math.sqrt(width * width + height * height)
    return tx + 2.0 * cx / (b * s), ty + 2.0 * cy / (b * s), 2.0 * f / (b * s)


def project_full(joint, t, width, height):
    f = math.sqrt(width * width + height * height)
    return project(*joint, t[0], t[1], t[2], f, width / 2.0, height / 2.0)


def cam_loss(cams, boxes, lx=1.0, ly=1.0, ls=1e-4):
    total = 0.0
    for i in range(len(cams)):
        for j in range(i + 1, len(cams)):
            si, txi, tyi = cams[i]
            sj, txj, tyj = cams[j]
            cxi, cyi, bi = boxes[i]
            cxj, cyj, bj = boxes[j]
            rx = (txi + 2 * cxi / (bi * si)) - (txj + 2 * cxj / (bj * sj))
            ry = (tyi + 2 * cyi / (bi * si)) - (tyj + 2 * cyj / (bj * sj))
            rs = bi * si - bj * sj
            total += lx * rx * rx + ly * ry * ry + ls * rs * rs
    return total


def loss_2d(joints, gt, cams, boxes, width, height):
    total = 0.0
    for cam, box in zip(cams, boxes):
        t = to_full(*cam, *box, width, height)
        for joint, target in zip(joints, gt):
            u, v = project_full(joint, t, width, height)
            total += (u - target[0]) ** 2 + (v - target[1]) ** 2
    return total


def loss_3d(a, b):
    return sum((p - q) ** 2 for ra, rb in zip(a, b) for p, q in zip(ra, rb))


def encode(p, L):
    out = [p]
    for k in range(L + 1):
        out.append(math.sin(2.0**k * math.pi * p))
        out.append(math.cos(2.0**k * math.pi * p))
    return out


def encode_bbox(box, L):
    return encode(box[0], L) + encode(box[1], L) + encode(box[2], L)


def contrastive(z, tau):
    """``z`` is a nested list ``[sample][crop][dim]``."""
    n, m = len(z), len(z[0])
    feats = [(i, k, z[i][k]) for i in range(n) for k in range(m)]

    def dot(a, b):
        return sum(p * q for p, q in zip(a, b))

    total = 0.0
    for i in range(n):
        for k in range(m):
            anchor = z[i][k]
            den = sum(math.exp(dot(anchor, v) / tau) for (ii, kk, v) in feats if (ii, kk) != (i, k))
            acc = 0.0
            for j in range(m):
                if j != k:
                    acc += math.log(math.exp(dot(anchor, z[i][j]) / tau) / den)
            total += -acc / (m - 1)
    return total


def _matvec(x, w, b):
    """``x @ w + b`` for a list ``x`` and nested-list matrix ``w`` (rows = inputs)."""
    cols = len(w[0])
    return [sum(x[r] * w[r][c] for r in range(len(x))) + b[c] for c in range(cols)]


def _softmax(v):
    top = max(v)
    e = [math.exp(x - top) for x in v]
    s = sum(e)
    return [x / s for x in e]


def fuse(h, boxes, weights, L, variant="mlp"):
    """Scalar crop-aware fusion. ``weights`` maps names to nested lists."""
    m = len(h)
    enc = [encode_bbox(b, L) for b in boxes]
    u, wmat = [], []
    for a in range(m):
        rows = [list(h[n]) + [p - q for p, q in zip(enc[a], enc[n])] for n in range(m)]
        if variant == "linear":
            w = weights["linear.w"]
            logits = [sum(r[i] * w[i] for i in range(len(r))) + weights["linear.b"] for r in rows]
        else:
            flat = []
            for r in rows:
                flat += _matvec(r, weights["reduce.w"], weights["reduce.b"])
            act = flat
            i = 0
            while f"fc{i}.w" in weights:
                act = [math.tanh(x) for x in _matvec(act, weights[f"fc{i}.w"], weights[f"fc{i}.b"])]
                i += 1
            logits = _matvec(act, weights["out.w"], weights["out.b"])
        w = _softmax(logits)
        wmat.append(w)
        u.append([sum(w[n] * h[n][k] for n in range(m)) for k in range(len(h[0]))])
    return u, wmat


def _l2(v):
    n = math.sqrt(sum(x * x for x in v))
    return [x / n for x in v] if n > 0 else list(v)


def clm_project(h, weights):
    gate = [1.0 / (1.0 + math.exp(-x)) for x in _matvec(h, weights["weight.w"], weights["weight.b"])]
    x = [g * v for g, v in zip(gate, h)]
    x = [max(v, 0.0) for v in _l2(_matvec(x, weights["g1.w"], weights["g1.b"]))]
    return _l2(_l2(_matvec(x, weights["g2.w"], weights["g2.b"])))
