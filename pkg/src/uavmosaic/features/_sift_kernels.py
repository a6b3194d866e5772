"""Per-keypoint loops of the DoG detector, compiled with numba."""
import math

import numpy as np
from numba import njit

DESC_WIDTH = 4
DESC_BINS = 8
ORI_BINS = 36
CLAMP = 0.2


@njit(cache=True)
def find_extrema(dogs, s, border, pre_threshold, contrast_threshold, edge_ratio):
    """Scan DoG layers 1..s for 3x3x3 extrema and refine them.

    Returns an (M, 6) float64 array of rows
    ``(col, row, layer, col_offset, row_offset, layer_offset)`` where the
    first three are the converged integer sample and the offsets the
    quadratic-fit correction, plus an (M,) array of interpolated DoG values.
    """
    nl, h, w = dogs.shape
    cap = 1024
    out = np.empty((cap, 6))
    resp = np.empty(cap)
    n = 0
    edge_limit = (edge_ratio + 1.0) ** 2 / edge_ratio
    for layer in range(1, s + 1):
        cur = dogs[layer]
        for r in range(border, h - border):
            for c in range(border, w - border):
                v = cur[r, c]
                if abs(v) <= pre_threshold:
                    continue
                is_ext = True
                if v > 0:
                    for dl in range(-1, 2):
                        pl = dogs[layer + dl]
                        for dr in range(-1, 2):
                            for dc in range(-1, 2):
                                if pl[r + dr, c + dc] > v:
                                    is_ext = False
                                    break
                            if not is_ext:
                                break
                        if not is_ext:
                            break
                else:
                    for dl in range(-1, 2):
                        pl = dogs[layer + dl]
                        for dr in range(-1, 2):
                            for dc in range(-1, 2):
                                if pl[r + dr, c + dc] < v:
                                    is_ext = False
                                    break
                            if not is_ext:
                                break
                        if not is_ext:
                            break
                if not is_ext:
                    continue
                # quadratic refinement in (col, row, layer)
                li, ri, ci = layer, r, c
                ok = False
                xc = 0.0
                xr = 0.0
                xl = 0.0
                gc = 0.0
                gr = 0.0
                gl = 0.0
                for _ in range(5):
                    p0 = dogs[li - 1]
                    p1 = dogs[li]
                    p2 = dogs[li + 1]
                    centre = p1[ri, ci]
                    gc = 0.5 * (p1[ri, ci + 1] - p1[ri, ci - 1])
                    gr = 0.5 * (p1[ri + 1, ci] - p1[ri - 1, ci])
                    gl = 0.5 * (p2[ri, ci] - p0[ri, ci])
                    hcc = p1[ri, ci + 1] + p1[ri, ci - 1] - 2.0 * centre
                    hrr = p1[ri + 1, ci] + p1[ri - 1, ci] - 2.0 * centre
                    hll = p2[ri, ci] + p0[ri, ci] - 2.0 * centre
                    hcr = 0.25 * (p1[ri + 1, ci + 1] - p1[ri + 1, ci - 1]
                                  - p1[ri - 1, ci + 1] + p1[ri - 1, ci - 1])
                    hcl = 0.25 * (p2[ri, ci + 1] - p2[ri, ci - 1]
                                  - p0[ri, ci + 1] + p0[ri, ci - 1])
                    hrl = 0.25 * (p2[ri + 1, ci] - p2[ri - 1, ci]
                                  - p0[ri + 1, ci] + p0[ri - 1, ci])
                    hm = np.array([[hcc, hcr, hcl], [hcr, hrr, hrl], [hcl, hrl, hll]])
                    g = np.array([gc, gr, gl])
                    det = np.linalg.det(hm)
                    if abs(det) < 1e-20:
                        break
                    x = -np.linalg.solve(hm, g)
                    xc, xr, xl = x[0], x[1], x[2]
                    if abs(xc) < 0.5 and abs(xr) < 0.5 and abs(xl) < 0.5:
                        ok = True
                        break
                    if abs(xc) > 1e4 or abs(xr) > 1e4 or abs(xl) > 1e4:
                        break
                    ci += int(round(xc))
                    ri += int(round(xr))
                    li += int(round(xl))
                    if (li < 1 or li > s or ci < border or ci >= w - border
                            or ri < border or ri >= h - border):
                        break
                if not ok:
                    continue
                p1 = dogs[li]
                contr = p1[ri, ci] + 0.5 * (gc * xc + gr * xr + gl * xl)
                if abs(contr) < contrast_threshold:
                    continue
                dxx = p1[ri, ci + 1] + p1[ri, ci - 1] - 2.0 * p1[ri, ci]
                dyy = p1[ri + 1, ci] + p1[ri - 1, ci] - 2.0 * p1[ri, ci]
                dxy = 0.25 * (p1[ri + 1, ci + 1] - p1[ri + 1, ci - 1]
                              - p1[ri - 1, ci + 1] + p1[ri - 1, ci - 1])
                tr = dxx + dyy
                dt = dxx * dyy - dxy * dxy
                if dt <= 0.0 or tr * tr >= edge_limit * dt:
                    continue
                if n == cap:
                    cap *= 2
                    grown = np.empty((cap, 6))
                    grown[:n] = out[:n]
                    out = grown
                    grown_r = np.empty(cap)
                    grown_r[:n] = resp[:n]
                    resp = grown_r
                out[n, 0] = ci
                out[n, 1] = ri
                out[n, 2] = li
                out[n, 3] = xc
                out[n, 4] = xr
                out[n, 5] = xl
                resp[n] = abs(contr)
                n += 1
    return out[:n], resp[:n]


@njit(cache=True)
def orientation_histograms(gauss, cols, rows, layers, sigmas):
    """36-bin gradient-orientation histograms (smoothed) around each keypoint."""
    m = cols.shape[0]
    _, h, w = gauss.shape
    hists = np.zeros((m, ORI_BINS))
    raw = np.empty(ORI_BINS + 4)
    for k in range(m):
        img = gauss[layers[k]]
        sig_w = 1.5 * sigmas[k]
        radius = int(round(3.0 * sig_w))
        c0 = cols[k]
        r0 = rows[k]
        raw[:] = 0.0
        denom = -1.0 / (2.0 * sig_w * sig_w)
        for i in range(-radius, radius + 1):
            y = r0 + i
            if y <= 0 or y >= h - 1:
                continue
            for j in range(-radius, radius + 1):
                x = c0 + j
                if x <= 0 or x >= w - 1:
                    continue
                dx = img[y, x + 1] - img[y, x - 1]
                dy = img[y + 1, x] - img[y - 1, x]
                mag = math.sqrt(dx * dx + dy * dy)
                ang = math.atan2(dy, dx)
                if ang < 0:
                    ang += 2.0 * math.pi
                b = int(round(ang * ORI_BINS / (2.0 * math.pi))) % ORI_BINS
                raw[b + 2] += math.exp((i * i + j * j) * denom) * mag
        raw[0] = raw[ORI_BINS]
        raw[1] = raw[ORI_BINS + 1]
        raw[ORI_BINS + 2] = raw[2]
        raw[ORI_BINS + 3] = raw[3]
        for b in range(ORI_BINS):
            hists[k, b] = ((raw[b] + raw[b + 4]) * (1.0 / 16.0)
                           + (raw[b + 1] + raw[b + 3]) * (4.0 / 16.0)
                           + raw[b + 2] * (6.0 / 16.0))
    return hists


@njit(cache=True)
def gradient_polar(plane):
    """Central-difference gradient magnitude and angle; zero on the 1-px border."""
    h, w = plane.shape
    mag = np.zeros((h, w), dtype=np.float32)
    ang = np.zeros((h, w), dtype=np.float32)
    for y in range(1, h - 1):
        for x in range(1, w - 1):
            dx = plane[y, x + 1] - plane[y, x - 1]
            dy = plane[y + 1, x] - plane[y - 1, x]
            mag[y, x] = math.sqrt(dx * dx + dy * dy)
            ang[y, x] = math.atan2(dy, dx)
    return mag, ang


@njit(cache=True)
def clamp_entries(vec, ratio):
    """Cap every entry at ``ratio`` times the vector's L2 norm, in place.

    Returns the norm measured before clamping.
    """
    norm = math.sqrt((vec * vec).sum())
    thr = ratio * norm
    for t in range(vec.shape[0]):
        if vec[t] > thr:
            vec[t] = thr
    return norm


@njit(cache=True)
def descriptors(mags, angs, cols, rows, layers, sigmas, angles):
    """4x4x8 histogram descriptors with trilinear binning, unit norm, 0.2 clamp.

    ``mags``/``angs`` are per-layer gradient planes from ``gradient_polar``.
    """
    m = cols.shape[0]
    _, h, w = mags.shape
    d = DESC_WIDTH
    nb = DESC_BINS
    out = np.zeros((m, d * d * nb), dtype=np.float32)
    hist = np.zeros((d + 2, d + 2, nb + 2))
    vec = np.empty(d * d * nb)
    bins_per_rad = nb / (2.0 * math.pi)
    exp_scale = -1.0 / (d * d * 0.5)
    for k in range(m):
        mag = mags[layers[k]]
        gang = angs[layers[k]]
        hist[:, :, :] = 0.0
        hist_width = 3.0 * sigmas[k]
        radius = int(round(hist_width * math.sqrt(2.0) * (d + 1) * 0.5))
        ct = math.cos(angles[k]) / hist_width
        st = math.sin(angles[k]) / hist_width
        theta = angles[k]
        c0 = cols[k]
        r0 = rows[k]
        i_lo = max(-radius, 1 - r0)
        i_hi = min(radius, h - 2 - r0)
        j_lo = max(-radius, 1 - c0)
        j_hi = min(radius, w - 2 - c0)
        for i in range(i_lo, i_hi + 1):
            y = r0 + i
            for j in range(j_lo, j_hi + 1):
                # offset (j, i) expressed in the keypoint's rotated frame
                c_rot = j * ct + i * st
                r_rot = -j * st + i * ct
                rbin = r_rot + 1.5
                cbin = c_rot + 1.5
                if rbin <= -1.0 or rbin >= d or cbin <= -1.0 or cbin >= d:
                    continue
                x = c0 + j
                wgt = mag[y, x] * math.exp((c_rot * c_rot + r_rot * r_rot) * exp_scale)
                obin = (gang[y, x] - theta) * bins_per_rad
                while obin < 0.0:
                    obin += nb
                while obin >= nb:
                    obin -= nb
                ri = int(math.floor(rbin))
                cix = int(math.floor(cbin))
                oi = int(obin)
                dr = rbin - ri
                dc = cbin - cix
                do = obin - oi
                o1 = oi + 1
                if o1 == nb:
                    o1 = 0
                v_r1 = wgt * dr
                v_r0 = wgt - v_r1
                v_rc11 = v_r1 * dc
                v_rc10 = v_r1 - v_rc11
                v_rc01 = v_r0 * dc
                v_rc00 = v_r0 - v_rc01
                v = v_rc11 * do
                hist[ri + 2, cix + 2, o1] += v
                hist[ri + 2, cix + 2, oi] += v_rc11 - v
                v = v_rc10 * do
                hist[ri + 2, cix + 1, o1] += v
                hist[ri + 2, cix + 1, oi] += v_rc10 - v
                v = v_rc01 * do
                hist[ri + 1, cix + 2, o1] += v
                hist[ri + 1, cix + 2, oi] += v_rc01 - v
                v = v_rc00 * do
                hist[ri + 1, cix + 1, o1] += v
                hist[ri + 1, cix + 1, oi] += v_rc00 - v
        idx = 0
        for a in range(d):
            for b in range(d):
                for e in range(nb):
                    vec[idx] = hist[a + 1, b + 1, e]
                    idx += 1
        clamp_entries(vec, CLAMP)
        norm2 = math.sqrt((vec * vec).sum())
        if norm2 > 0:
            for t in range(vec.shape[0]):
                out[k, t] = vec[t] / norm2
    return out
