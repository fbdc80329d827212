"""Deterministic synthetic fixture generation.

Run as a script to (re)create everything under tests/fixtures/. The
images are formula-based stand-ins with natural-image character: smooth
regions, strong edges and mid-frequency texture. The 32x32 golden
reconstruction value is produced by a dense direct solve, independent
of the iterative solver stack.
"""

import json
import os

import numpy as np

FIXDIR = os.path.join(os.path.dirname(__file__), "fixtures")


def _smooth_noise(rng, h, w, sigma):
    from scipy.ndimage import gaussian_filter
    field = rng.standard_normal((h, w))
    field = gaussian_filter(field, sigma, mode="reflect")
    field /= max(np.abs(field).max(), 1e-12)
    return field


def portrait(size=256):
    """Portrait-like stand-in: smooth face-ish blobs, scarf texture,
    sharp frame edges."""
    rng = np.random.default_rng(2024)
    yy, xx = np.mgrid[0:size, 0:size].astype(np.float64) / size
    img = 140 + 70 * (yy - 0.5)
    cy, cx = 0.42, 0.5
    r2 = ((yy - cy) / 0.28) ** 2 + ((xx - cx) / 0.22) ** 2
    img = np.where(r2 < 1.0, 205 - 55 * r2, img)
    r2h = ((yy - 0.40) / 0.34) ** 2 + ((xx - 0.5) / 0.30) ** 2
    ring = (r2h >= 1.0) & (r2h < 1.55)
    img = np.where(ring, 60 + 20 * np.sin(14 * np.pi * xx), img)
    scarf = yy > 0.72
    tex = 110 + 55 * np.sin(2 * np.pi * (6 * xx + 9 * yy)) \
        * np.cos(2 * np.pi * 5 * (xx - yy))
    img = np.where(scarf, tex, img)
    for y0, x0, ht, wd, val in ((0.06, 0.08, 0.05, 0.16, 30),
                                (0.06, 0.70, 0.05, 0.2, 235),
                                (0.88, 0.1, 0.04, 0.12, 20)):
        box = (yy >= y0) & (yy < y0 + ht) & (xx >= x0) & (xx < x0 + wd)
        img = np.where(box, float(val), img)
    img += 8 * _smooth_noise(rng, size, size, 3.0)
    return np.clip(np.rint(img), 0, 255)


def cartoon(size=256):
    """Flat polygonal regions with crisp boundaries."""
    yy, xx = np.mgrid[0:size, 0:size].astype(np.float64) / size
    img = np.full((size, size), 190.0)
    img = np.where(xx + 0.6 * yy < 0.55, 70.0, img)
    img = np.where((yy > 0.6) & (xx > 0.3), 130.0, img)
    tri = (yy + 1.4 * np.abs(xx - 0.7) < 0.5)
    img = np.where(tri, 240.0, img)
    disc = ((yy - 0.75) ** 2 + (xx - 0.18) ** 2) < 0.018
    img = np.where(disc, 25.0, img)
    return np.clip(np.rint(img), 0, 255)


def gradients(size=256):
    """Smooth low-frequency content with one soft edge."""
    yy, xx = np.mgrid[0:size, 0:size].astype(np.float64) / size
    img = 100 + 90 * np.sin(np.pi * xx) * np.cos(0.7 * np.pi * yy)
    r = np.sqrt((yy - 0.35) ** 2 + (xx - 0.6) ** 2)
    img += 60 * np.exp(-(r / 0.25) ** 2)
    img = np.where(yy > 0.85, img * 0.45, img)
    return np.clip(np.rint(img), 0, 255)


def woven(size=256):
    """Mid-frequency texture over blocks of differing brightness."""
    rng = np.random.default_rng(7)
    yy, xx = np.mgrid[0:size, 0:size].astype(np.float64) / size
    img = 128 + 45 * np.sin(2 * np.pi * 8 * xx) * np.sin(2 * np.pi * 8 * yy)
    img += 30 * np.sign(np.sin(2 * np.pi * 2.5 * (xx + 0.2 * yy)))
    img += 20 * _smooth_noise(rng, size, size, 2.0)
    img = np.where((xx > 0.55) & (yy < 0.4), img * 0.6 + 30, img)
    return np.clip(np.rint(img), 0, 255)


def harbor(size=256):
    """Mixed scene: sky gradient, skyline edges, rippled foreground."""
    rng = np.random.default_rng(41)
    yy, xx = np.mgrid[0:size, 0:size].astype(np.float64) / size
    img = 210 - 90 * yy
    skyline = 0.45 + 0.08 * np.sin(2 * np.pi * 3 * xx) \
        + 0.05 * np.sign(np.sin(2 * np.pi * 7 * xx + 1.0))
    town = yy > skyline
    img = np.where(town, 95 + 25 * np.sin(2 * np.pi * 11 * xx), img)
    water = yy > 0.72
    ripple = 70 + 35 * np.sin(2 * np.pi * (18 * yy + 4 * xx)) \
        + 15 * np.sin(2 * np.pi * 31 * yy)
    img = np.where(water, ripple, img)
    img += 6 * _smooth_noise(rng, size, size, 4.0)
    return np.clip(np.rint(img), 0, 255)


CORPUS = {
    "portrait": portrait,
    "cartoon": cartoon,
    "gradients": gradients,
    "woven": woven,
    "harbor": harbor,
}


def scaling_image(size=1024):
    """Large multi-scale image for runtime scaling sweeps.

    Octave noise keeps structure at every frequency band, so the
    reconstruction problem stays comparably hard when the image is
    box-downscaled; fixed-frequency content would turn trivially smooth
    at high resolution and skew runtime scaling measurements.
    """
    rng = np.random.default_rng(99)
    yy, xx = np.mgrid[0:size, 0:size].astype(np.float64) / size
    img = np.zeros((size, size))
    amp = 1.0
    sigma = size / 4.0
    while sigma >= 0.8:
        img += amp * _smooth_noise(rng, size, size, sigma)
        amp *= 0.78
        sigma /= 2.0
    img = 128 + 110 * img / max(np.abs(img).max(), 1e-9)
    img += 30 * np.sign(np.sin(2 * np.pi * (3 * xx + 2 * yy)))
    return np.clip(np.rint(img), 0, 255)


def rgb_fixture(size=96):
    yy, xx = np.mgrid[0:size, 0:size].astype(np.float64) / size
    r = 120 + 100 * xx
    g = 120 + 100 * yy
    b = 128 + 80 * np.sin(2 * np.pi * 3 * (xx + yy))
    sq = (xx > 0.4) & (xx < 0.75) & (yy > 0.3) & (yy < 0.6)
    r = np.where(sq, 220.0, r)
    g = np.where(sq, 40.0, g)
    b = np.where(sq, 60.0, b)
    return np.clip(np.rint(np.stack([r, g, b])), 0, 255)


def golden_inpaint_fixture():
    """32x32 image + mask + stored values, with the reconstruction PSNR
    computed by a dense direct solve."""
    size = 32
    rng = np.random.default_rng(5150)
    yy, xx = np.mgrid[0:size, 0:size].astype(np.float64) / size
    img = 120 + 80 * np.sin(2 * np.pi * 1.5 * xx) * np.cos(2 * np.pi * yy)
    img = np.where((xx > 0.55) & (yy > 0.5), img * 0.5 + 90, img)
    img = np.clip(np.rint(img), 0, 255)
    mask = np.zeros(size * size, dtype=bool)
    mask[rng.choice(size * size, size=102, replace=False)] = True
    mask = mask.reshape(size, size)

    # dense solve of the stored-value interpolation system
    n = size * size
    a = np.zeros((n, n))
    flat_mask = mask.ravel()
    for j in range(n):
        a[j, j] = 1.0
    for idx in range(n):
        if flat_mask[idx]:
            continue
        y, x = divmod(idx, size)
        a[idx, idx] = 0.0
        deg = 0
        for dy, dx in ((-1, 0), (1, 0), (0, -1), (0, 1)):
            ny, nx = y + dy, x + dx
            if 0 <= ny < size and 0 <= nx < size:
                deg += 1
                a[idx, ny * size + nx] -= 1.0
        a[idx, idx] += deg
    b = np.where(flat_mask, img.ravel(), 0.0)
    u = np.linalg.solve(a, b).reshape(size, size)
    mse = float(np.mean((u - img) ** 2))
    psnr = 10 * np.log10(255.0 ** 2 / mse)
    return img, mask, psnr


def main():
    from sparsepaint.grid import Image, Mask
    from sparsepaint import pnm

    os.makedirs(os.path.join(FIXDIR, "corpus"), exist_ok=True)
    for name, make in CORPUS.items():
        pnm.write_image(os.path.join(FIXDIR, "corpus", f"{name}.pgm"),
                        Image(make()[None]))
    pnm.write_image(os.path.join(FIXDIR, "rgb96.ppm"), Image(rgb_fixture()))

    img, mask, psnr = golden_inpaint_fixture()
    pnm.write_image(os.path.join(FIXDIR, "golden32.pgm"), Image(img[None]))
    pnm.write_mask(os.path.join(FIXDIR, "golden32.mask.pbm"), Mask(mask))
    pnm.write_tonal(os.path.join(FIXDIR, "golden32.values.pgm"),
                    Image(img[None]), Mask(mask))
    with open(os.path.join(FIXDIR, "golden32.json"), "w") as fh:
        json.dump({"psnr": psnr}, fh, indent=1)
    print("fixtures written to", FIXDIR, f"(golden psnr {psnr:.4f})")


if __name__ == "__main__":
    main()
