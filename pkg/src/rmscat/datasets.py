"""Dataset listing, reproducible splits, image loading and synthetic textures.

Splits use splitmix64, a fixed 64-bit counter-based generator, so that the
same manifest fingerprint, seed and split index give the same partition on
every platform:

    z = (state += 0x9E3779B97F4A7C15)
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
    z = (z ^ (z >> 27)) * 0x94D049BB133111EB
    return z ^ (z >> 31)

Each (split, class) pair seeds its own stream with
``splitmix64(fingerprint64 ^ seed ^ splitmix64(split) ^ splitmix64(class + 2^32))``
and draws a Fisher-Yates shuffle with rejection sampling (no modulo bias).
"""

import hashlib
import json
import os
from dataclasses import dataclass

import numpy as np

from .se2_group import SE2Volume
from .signals import center_crop

MASK64 = (1 << 64) - 1
IMAGE_EXTS = (".png", ".pgm", ".ppm", ".pnm", ".jpg", ".jpeg", ".tif", ".tiff", ".bmp")
LUMA = (0.299, 0.587, 0.114)
MAX_SHORT_SIDE = 480


def splitmix64(x):
    z = (x + 0x9E3779B97F4A7C15) & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


class SplitMix64:
    """Stream ``splitmix64(seed + k * golden)`` for ``k = 0, 1, 2, ...``."""

    def __init__(self, seed):
        self.state = int(seed) & MASK64

    def next(self):
        r = splitmix64(self.state)
        self.state = (self.state + 0x9E3779B97F4A7C15) & MASK64
        return r

    def below(self, n):
        """Uniform integer in ``[0, n)``."""
        if n <= 0:
            raise ValueError("n must be positive")
        limit = (1 << 64) - ((1 << 64) % n)
        while True:
            r = self.next()
            if r < limit:
                return r % n

    def shuffle(self, items):
        items = list(items)
        for i in range(len(items) - 1, 0, -1):
            k = self.below(i + 1)
            items[i], items[k] = items[k], items[i]
        return items


@dataclass(frozen=True)
class DatasetManifest:
    root: str
    classes: tuple  # ((name, (relative path, ...)), ...)
    fingerprint: str

    @property
    def names(self):
        return [c for c, _ in self.classes]

    def paths(self, class_index):
        return [os.path.join(self.root, p) for p in self.classes[class_index][1]]

    def fingerprint64(self):
        return int(self.fingerprint[:16], 16)


def _fingerprint(classes, root):
    h = hashlib.sha256()
    for name, files in classes:
        h.update(b"C\0" + name.encode("utf-8") + b"\0")
        for rel in files:
            st = os.stat(os.path.join(root, rel))
            h.update(b"F\0" + rel.replace(os.sep, "/").encode("utf-8") + b"\0")
            h.update(str(st.st_size).encode() + b"\0")
    return h.hexdigest()


def scan_dataset(root):
    """List ``root/<class>/<image>`` in lexicographic order with a content fingerprint.

    The fingerprint hashes class names, relative paths and file sizes.
    """
    root = os.fspath(root)
    if not os.path.isdir(root):
        raise FileNotFoundError(f"dataset root not found: {root}")
    classes = []
    for name in sorted(os.listdir(root)):
        d = os.path.join(root, name)
        if not os.path.isdir(d):
            continue
        files = sorted(f for f in os.listdir(d)
                       if f.lower().endswith(IMAGE_EXTS) and os.path.isfile(os.path.join(d, f)))
        if not files:
            raise ValueError(f"class directory has no images: {d}")
        classes.append((name, tuple(f"{name}/{f}" for f in files)))
    if not classes:
        raise ValueError(f"no class directories under {root}")
    classes = tuple(classes)
    return DatasetManifest(root=root, classes=classes, fingerprint=_fingerprint(classes, root))


@dataclass(frozen=True)
class SplitSpec:
    train_per_class: int
    n_splits: int = 1
    seed: int = 0

    def __post_init__(self):
        if self.n_splits < 1:
            raise ValueError("n_splits must be >= 1")
        if self.train_per_class < 1:
            raise ValueError("train_per_class must be >= 1")
        if not 0 <= int(self.seed) <= MASK64:
            raise ValueError("seed must be an unsigned 64-bit integer")


def make_splits(manifest, spec):
    """Per split, a list of ``(class index, relative path)`` for train and for test."""
    for name, files in manifest.classes:
        if spec.train_per_class >= len(files):
            raise ValueError(f"train_per_class={spec.train_per_class} leaves no test image "
                             f"in class {name!r} of size {len(files)}")
    base = manifest.fingerprint64() ^ (int(spec.seed) & MASK64)
    splits = []
    for s in range(spec.n_splits):
        train, test = [], []
        for c, (_, files) in enumerate(manifest.classes):
            rng = SplitMix64(splitmix64(base ^ splitmix64(s) ^ splitmix64(c + (1 << 32))))
            perm = rng.shuffle(range(len(files)))
            chosen = set(perm[:spec.train_per_class])
            for i, f in enumerate(files):
                (train if i in chosen else test).append((c, f))
        splits.append((train, test))
    return splits


def export_splits(splits, path, manifest=None, spec=None):
    doc = {"format": "rmscat-splits", "schema_version": 1,
           "fingerprint": None if manifest is None else manifest.fingerprint,
           "spec": None if spec is None else {"train_per_class": spec.train_per_class,
                                              "n_splits": spec.n_splits, "seed": spec.seed},
           "splits": [{"train": [[c, f] for c, f in tr], "test": [[c, f] for c, f in te]}
                      for tr, te in splits]}
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=1, sort_keys=True)
        fh.write("\n")


def import_splits(path, manifest=None):
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    if doc.get("format") != "rmscat-splits":
        raise ValueError(f"{path} is not a splits file")
    if manifest is not None and doc.get("fingerprint") not in (None, manifest.fingerprint):
        raise ValueError("splits were made for a different dataset listing")
    return [([(int(c), f) for c, f in s["train"]], [(int(c), f) for c, f in s["test"]])
            for s in doc["splits"]]


def _crop_or_pad(x, dims):
    h, w = dims
    ph, pw = max(h - x.shape[0], 0), max(w - x.shape[1], 0)
    if ph or pw:
        x = np.pad(x, ((ph // 2, ph - ph // 2), (pw // 2, pw - pw // 2)), mode="symmetric")
    return center_crop(x, (h, w))


def load_image(path, to_grayscale=True, crop_or_pad_to=None, max_short_side=None):
    """Read an 8- or 16-bit image as a float array in ``[0, 1]``.

    Color images are reduced to luminance with weights (0.299, 0.587, 0.114).
    ``max_short_side`` shrinks the image (bicubic) before cropping.
    """
    from PIL import Image, UnidentifiedImageError

    path = os.fspath(path)
    try:
        with Image.open(path) as im:
            im.load()
            arr, peak = _pil_to_array(im)
    except (OSError, UnidentifiedImageError, ValueError) as e:
        raise OSError(f"cannot read image {path}: {e}") from e
    x = arr.astype(np.float64) / peak
    if x.ndim == 3:
        if not to_grayscale:
            raise ValueError("only grayscale processing is supported")
        x = x[..., :3] @ np.array(LUMA)
    if max_short_side and min(x.shape) > max_short_side:
        s = max_short_side / min(x.shape)
        size = (max(int(round(x.shape[1] * s)), 1), max(int(round(x.shape[0] * s)), 1))
        x = np.asarray(Image.fromarray(x.astype(np.float32), mode="F")
                       .resize(size, Image.BICUBIC), dtype=np.float64)
    if crop_or_pad_to is not None:
        x = _crop_or_pad(x, tuple(crop_or_pad_to))
    return np.clip(x, 0.0, 1.0)


def _pil_to_array(im):
    mode = im.mode
    if mode in ("I;16", "I;16B", "I;16L", "I;16N"):
        return np.asarray(im, dtype=np.uint16), 65535.0
    if mode == "I":
        a = np.asarray(im)
        return a, 65535.0 if a.max(initial=0) > 255 else 255.0
    if mode == "1":
        return np.asarray(im.convert("L")), 255.0
    if mode in ("L", "RGB"):
        return np.asarray(im), 255.0
    if mode == "LA":
        return np.asarray(im)[..., 0], 255.0
    return np.asarray(im.convert("RGB")), 255.0


# synthetic data

def oriented_noise(shape, angle, rng, bandwidth=0.35, radius=1.2):
    """White noise band-passed around frequency ``radius`` along ``angle``.

    The texture oscillates along ``angle`` (counterclockwise from the
    horizontal axis); values are rescaled to ``[0, 1]``.
    """
    from .signals import frequency_grid

    h, w = shape
    w1, w2 = frequency_grid(shape)
    c, s = np.cos(angle), np.sin(angle)
    a = c * w1 + s * w2
    b = -s * w1 + c * w2
    g = (np.exp(-((np.abs(a) - radius) ** 2 + b ** 2) / (2 * bandwidth ** 2)))
    y = np.fft.ifft2(np.fft.fft2(rng.standard_normal(shape)) * g).real
    y -= y.min()
    return y / max(y.max(), 1e-12)


def oriented_noise_dataset(n_per_class, shape=(64, 64), angles=(0.0, np.pi / 4), seed=0):
    """``[(class id, image), ...]`` with ``n_per_class`` images per angle."""
    rng = np.random.default_rng(seed)
    return [(c, oriented_noise(shape, a, rng)) for c, a in enumerate(angles)
            for _ in range(n_per_class)]


def write_oriented_noise_dataset(root, n_per_class, shape=(64, 64), angles=(0.0, np.pi / 4),
                                 seed=0):
    """Save :func:`oriented_noise_dataset` as 16-bit PNGs under ``root/class_<c>/``."""
    from PIL import Image

    os.makedirs(root, exist_ok=True)
    count = {}
    for c, img in oriented_noise_dataset(n_per_class, shape, angles, seed):
        d = os.path.join(root, f"class_{c}")
        os.makedirs(d, exist_ok=True)
        i = count.get(c, 0)
        count[c] = i + 1
        Image.fromarray(np.round(img * 65535).astype(np.uint16)).save(
            os.path.join(d, f"img_{i:03d}.png"))
    return root


def bump_lattice(shape, period, offset=(0, 0), width=1.0):
    """Periodic lattice of Gaussian bumps; ``offset`` is in (row, col) pixels."""
    h, w = shape
    r, c = np.mgrid[0:h, 0:w].astype(np.float64)
    out = np.zeros(shape)
    for a in range(0, h, period):
        for b in range(0, w, period):
            dr = (r - a - offset[0] + h / 2) % h - h / 2
            dc = (c - b - offset[1] + w / 2) % w - w / 2
            out += np.exp(-(dr ** 2 + dc ** 2) / (2 * width ** 2))
    return out


def orientation_offset_pair(shape=(64, 64), period=8, C=8, width=1.0, angular_width=0.3):
    """First-layer volumes of two textures whose orientations are placed differently.

    Both volumes hold a lattice of nodes tuned to the horizontal orientation
    and a lattice of nodes tuned to the vertical one. In the first volume
    the two lattices coincide; in the second the horizontal nodes are
    translated by ``(period/2, period/2)``. Each orientation slice of the
    second volume is a translate of the first volume's slice, which is all
    that separable invariants see.

    Returns ``(x1, x2)`` as period-``pi`` SE2Volumes with ``C`` orientations.
    """
    th = np.arange(C) * np.pi / C

    def tuning(t0):
        d = (th - t0 + np.pi / 2) % np.pi - np.pi / 2
        return np.exp(-d ** 2 / (2 * angular_width ** 2))

    half = (period // 2, period // 2)
    vert = bump_lattice(shape, period, (0, 0), width)[:, :, None] * tuning(np.pi / 2)
    hor0 = bump_lattice(shape, period, (0, 0), width)[:, :, None] * tuning(0.0)
    hor1 = bump_lattice(shape, period, half, width)[:, :, None] * tuning(0.0)
    return SE2Volume(hor0 + vert, np.pi), SE2Volume(hor1 + vert, np.pi)
